"""BlockProx and its graph specialisation RandomEdge.

Both run synchronous rounds: every node takes a local subgradient step, then
independently decides which regularizer component (if any) to evaluate with
its neighbours. Reads of ``z`` come from the frozen gradient phase, so the
per-node loops are safely vectorised.
"""

from __future__ import annotations

import numpy as np

from ..objectives import Problem
from ..rng import NodeStreams
from ..topology import uniform_index
from .schedules import StepSchedule


class Algorithm:
    """Common state of an iterative method.

    ``x`` is the current ``(n, d)`` estimate and ``t`` the iterations done.
    ``cost_per_iteration`` is the fixed ledger charge, or ``None`` if random.
    """

    name = "algorithm"
    cost_per_iteration: int | None = None

    def __init__(self, problem: Problem, seed: int = 0, x0=None):
        self.problem = problem
        self.seed = int(seed)
        self.t = 0
        n, d = problem.n, problem.d
        self.x = np.zeros((n, d)) if x0 is None else np.array(x0, dtype=np.float64).reshape(n, d)

    def step(self, ledger) -> None:
        raise NotImplementedError

    def params(self) -> dict:
        return {}


class BlockProx(Algorithm):
    """Randomised block proximal gradient for any partially separable ``G``.

    Node ``i`` draws ``j_i ~ Unif{0..m-1}``; if ``i`` is in ``S_j`` it is
    charged ``a_j - 1`` unit messages and takes block ``i`` of
    ``prox_{beta G_j}(z)``, otherwise it keeps ``z_i``. Charges are never
    deduplicated across nodes that picked the same component.
    """

    name = "blockprox"

    def __init__(self, problem: Problem, schedule: StepSchedule, seed: int = 0, x0=None):
        super().__init__(problem, seed, x0)
        self.schedule = schedule
        self.streams = NodeStreams(self.seed, problem.n, "blockprox/component")
        reg = problem.reg
        self._members = reg.hypergraph.membership_matrix()
        self._sizes = reg.hypergraph.sizes()
        self.last_messages = 0
        self.last_components = np.full(problem.n, -1)

    def params(self):
        return {"schedule": self.schedule.describe()}

    def gradient_step(self):
        alpha = self.schedule.alpha(self.t)
        return self.x - alpha * self.problem.loss.subgradients(self.x)

    def prox_step(self, z: np.ndarray, beta: float):
        """Randomised proximal phase from a fixed ``z``; returns ``(x_new, messages)``."""
        reg = self.problem.reg
        n = self.problem.n
        j = uniform_index(self.streams.next(), reg.m)
        active = self._members[np.arange(n), j]
        self.last_components = np.where(active, j, -1)
        x_new = z.copy()
        if not active.any():
            return x_new, 0
        nodes = np.flatnonzero(active)
        if reg.pairwise:
            a, b = reg.pairs[j[nodes], 0], reg.pairs[j[nodes], 1]
            partner = np.where(a == nodes, b, a)
            xi, _ = reg.pair_prox(j[nodes], z[nodes], z[partner], beta)
            x_new[nodes] = xi
        else:
            cache: dict[int, np.ndarray] = {}
            for i in nodes:
                ji = int(j[i])
                if ji not in cache:
                    cache[ji] = reg.prox_component(ji, z, beta)
                x_new[i] = cache[ji][reg.components[ji].support.index(i)]
        return x_new, int(np.sum(self._sizes[j[nodes]] - 1))

    def step(self, ledger):
        z = self.gradient_step()
        beta = self.schedule.beta(self.t, self.problem.m)
        self.x, self.last_messages = self.prox_step(z, beta)
        ledger.record(self.last_messages)
        self.t += 1


class RandomEdge(BlockProx):
    """BlockProx on a graph-guided ``G``, sampled node-first.

    Node ``i`` coordinates with probability ``deg(i)/m``; if it does, it picks
    an incident edge uniformly, fetches the neighbour's ``z`` (one unit
    message) and keeps its own block of the joint edge prox. Two streams per
    node, one double each per iteration.
    """

    name = "randomedge"

    def __init__(self, problem: Problem, schedule: StepSchedule, seed: int = 0, x0=None):
        reg = problem.reg
        if not reg.pairwise:
            raise ValueError("RandomEdge needs a regularizer made only of pairwise edge components")
        Algorithm.__init__(self, problem, seed, x0)
        self.schedule = schedule
        n = problem.n
        self._coord = NodeStreams(self.seed, n, "randomedge/coordinate")
        self._pick = NodeStreams(self.seed, n, "randomedge/edge")
        # CSR incidence lists, edges in edge order
        ends = reg.pairs
        owner = np.concatenate([ends[:, 0], ends[:, 1]])
        eidx = np.concatenate([np.arange(reg.m), np.arange(reg.m)])
        order = np.lexsort((eidx, owner))
        self._inc = eidx[order]
        self.degree = np.bincount(owner, minlength=n)
        self._ptr = np.concatenate([[0], np.cumsum(self.degree)[:-1]])
        self.p = self.degree / reg.m
        self.last_messages = 0
        self.last_components = np.full(n, -1)

    def prox_step(self, z, beta):
        reg = self.problem.reg
        theta = self._coord.next() < self.p
        pick = self._pick.next()
        x_new = z.copy()
        self.last_components = np.full(self.problem.n, -1)
        nodes = np.flatnonzero(theta)
        if len(nodes) == 0:
            return x_new, 0
        e = self._inc[self._ptr[nodes] + uniform_index(pick[nodes], self.degree[nodes])]
        a, b = reg.pairs[e, 0], reg.pairs[e, 1]
        partner = np.where(a == nodes, b, a)
        xi, _ = reg.pair_prox(e, z[nodes], z[partner], beta)
        x_new[nodes] = xi
        self.last_components[nodes] = e
        return x_new, len(nodes)
