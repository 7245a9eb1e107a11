"""Baselines: network-lasso ADMM, proximal averaging, DSGD and Walkman.

Only their communication charge, state shape and default parameters are
pinned down by the benchmark; the inner updates follow the usual published
forms for each method. Unit of charge: one R^d block (an R^{nd} vector is n
units).
"""

from __future__ import annotations

import math

import numpy as np

from ..objectives import Problem
from ..rng import stream
from ..topology import metropolis_hastings_weights, uniform_index
from .core import Algorithm
from .schedules import Constant, StepSchedule


def default_admm_rho(lam: float) -> float:
    return 1e-4 + math.sqrt(lam / 2.0)


def _require_graph(problem: Problem, who: str):
    if not problem.reg.pairwise:
        raise ValueError(f"{who} needs a graph-guided regularizer of edge components")
    return problem.reg.graph()


class NetworkLassoADMM(Algorithm):
    """Network-lasso ADMM with one edge-copy ``z`` and scaled dual ``u`` per endpoint.

    Per sweep: every node solves its ridge-regularised least-squares
    subproblem against its incident ``z - u``; every edge applies the l2 pair
    prox with ``t = lam / rho`` to ``(x_i + u_ij, x_j + u_ji)``; duals take
    the residual. Charged ``4 m`` units per sweep.
    """

    name = "admm"

    def __init__(self, problem: Problem, rho: float | None = None, seed: int = 0, x0=None):
        super().__init__(problem, seed, x0)
        reg = problem.reg
        g = _require_graph(problem, "ADMM")
        if reg.variant != "l2":
            raise ValueError("network-lasso ADMM supports only the l2 edge variant")
        if not problem.loss.batched:
            raise TypeError("ADMM x-update needs least-squares local losses")
        if rho is None:
            rho = default_admm_rho(float(reg.lam.max()) if reg.m else 0.0)
        if rho <= 0:
            raise ValueError("rho must be positive")
        self.rho = float(rho)
        self.cost_per_iteration = 4 * reg.m
        n, d, m = problem.n, problem.d, reg.m
        deg = g.degrees()
        lhs = problem.loss.gram + (problem.loss.ridge + self.rho * deg)[:, None, None] * np.eye(d)
        self._solve = np.linalg.pinv(lhs, hermitian=True)
        # column 0 lives at the lower endpoint, column 1 at the upper
        self.z = np.zeros((m, 2, d))
        self.u = np.zeros((m, 2, d))

    def params(self):
        return {"rho": self.rho}

    def step(self, ledger):
        loss, reg = self.problem.loss, self.problem.reg
        pairs = reg.pairs
        pull = np.zeros_like(self.x)
        np.add.at(pull, pairs[:, 0], self.z[:, 0] - self.u[:, 0])
        np.add.at(pull, pairs[:, 1], self.z[:, 1] - self.u[:, 1])
        self.x = np.einsum("nde,ne->nd", self._solve, loss.Atb + self.rho * pull)
        vi = self.x[pairs[:, 0]] + self.u[:, 0]
        vj = self.x[pairs[:, 1]] + self.u[:, 1]
        zi, zj = reg.pair_prox(np.arange(reg.m), vi, vj, 1.0 / self.rho)
        self.z = np.stack([zi, zj], axis=1)
        self.u[:, 0] = vi - zi
        self.u[:, 1] = vj - zj
        ledger.record(self.cost_per_iteration)
        self.t += 1


class ProxAvg(Algorithm):
    """Proximal averaging: ``x <- (1/m) sum_j prox_{beta G_j}(z)``, ``beta = m alpha``.

    Each full-vector prox is the identity off its support, so node ``i`` ends
    with ``((m - d_i) z_i + sum_{j: i in S_j} [prox_{beta G_j}(z)]_i) / m``.
    Charged ``2 m`` units per iteration (each edge exchanged both ways).
    """

    name = "proxavg"

    def __init__(self, problem: Problem, schedule: StepSchedule | None = None, seed: int = 0, x0=None):
        super().__init__(problem, seed, x0)
        self.schedule = schedule if schedule is not None else Constant(1e-2)
        reg = problem.reg
        self._d = reg.hypergraph.membership_counts()
        self.cost_per_iteration = int(np.sum(reg.hypergraph.sizes() * (reg.hypergraph.sizes() - 1)))

    def params(self):
        return {"schedule": self.schedule.describe()}

    def step(self, ledger):
        reg = self.problem.reg
        alpha = self.schedule.alpha(self.t)
        beta = self.schedule.beta(self.t, reg.m)
        z = self.x - alpha * self.problem.loss.subgradients(self.x)
        acc = (reg.m - self._d)[:, None] * z
        if reg.pairwise:
            a, b = reg.pairs[:, 0], reg.pairs[:, 1]
            xa, xb = reg.pair_prox(np.arange(reg.m), z[a], z[b], beta)
            np.add.at(acc, a, xa)
            np.add.at(acc, b, xb)
        else:
            for j, c in enumerate(reg.components):
                acc[list(c.support)] += reg.prox_component(j, z, beta)
        self.x = acc / reg.m
        ledger.record(self.cost_per_iteration)
        self.t += 1


class DSGD(Algorithm):
    """Distributed subgradient descent on the consensus reformulation.

    Node ``i`` keeps a full copy ``y_i`` (``(n, d)``) and minimises
    ``f_i(y_i) + 1/2 sum_{edges at i} g_e(y)``. Each round mixes copies with
    ``W`` and then steps along a subgradient taken at the mixed copy. The
    reported iterate is the average copy. Charged ``2 m n`` units per round.
    """

    name = "dsgd"

    def __init__(self, problem: Problem, stepsize: float = 1e-2, mixing=None, seed: int = 0, x0=None):
        super().__init__(problem, seed, x0)
        g = _require_graph(problem, "DSGD")
        n = problem.n
        w = metropolis_hastings_weights(g) if mixing is None else np.asarray(mixing, dtype=np.float64)
        if w.shape != (n, n):
            raise ValueError(f"mixing matrix must be {n}x{n}")
        allowed = g.adjacency() > 0
        allowed[np.diag_indices(n)] = True
        if np.any((w != 0) & ~allowed):
            raise ValueError("mixing matrix has weight on a pair that is not an edge")
        if stepsize < 0:
            raise ValueError("stepsize must be non-negative")
        self.W = w
        self.stepsize = float(stepsize)
        self.cost_per_iteration = 2 * g.m * n
        self.y = np.broadcast_to(self.x, (n,) + self.x.shape).copy()

    def params(self):
        return {"stepsize": self.stepsize}

    def step(self, ledger):
        reg, loss = self.problem.reg, self.problem.loss
        n = self.problem.n
        mixed = np.einsum("ik,kbd->ibd", self.W, self.y)
        own = mixed[np.arange(n), np.arange(n)]
        s = np.zeros_like(mixed)
        s[np.arange(n), np.arange(n)] = loss.subgradients(own)
        if reg.m:
            a, b = reg.pairs[:, 0], reg.pairs[:, 1]
            for owner in (a, b):
                diff = mixed[owner, a] - mixed[owner, b]
                u = 0.5 * reg.lam[:, None] * _norm_subgradient(diff, reg.variant)
                np.add.at(s, (owner, a), u)
                np.add.at(s, (owner, b), -u)
        self.y = mixed - self.stepsize * s
        self.x = self.y.mean(axis=0)
        ledger.record(self.cost_per_iteration)
        self.t += 1


def _norm_subgradient(v, variant):
    if variant == "l1":
        return np.sign(v)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norm > 0, v / norm, 0.0)


def walkman_transition(g) -> np.ndarray:
    """``P = A / d_max`` with the leftover row mass on the diagonal."""
    deg = g.degrees()
    dmax = max(int(deg.max()) if g.n else 0, 1)
    p = g.adjacency() / dmax
    p[np.diag_indices(g.n)] = 1.0 - deg / dmax
    return p


class Walkman(Algorithm):
    """Random-walk ADMM on ``min (1/n) sum_i f_i(x_i) + (1/n) G(x)``.

    A token holding ``x`` in R^{nd} walks the graph with transition ``P``. At
    the visited node ``i``: ``x <- prox_{G/(n beta)}(mean_k(y_k + z_k/beta))``,
    then ``y_i`` minimises the node's augmented Lagrangian term and
    ``z_i += beta (y_i - x)``. Only that node's variables change. Charged
    ``n`` units per step (the token is an R^{nd} vector).
    """

    name = "walkman"

    def __init__(self, problem: Problem, beta: float = 1e4, transition=None, seed: int = 0, x0=None):
        super().__init__(problem, seed, x0)
        g = _require_graph(problem, "Walkman")
        if not problem.loss.batched:
            raise TypeError("Walkman y-update needs least-squares local losses")
        if beta <= 0:
            raise ValueError("beta must be positive")
        n, d = problem.n, problem.d
        self.beta = float(beta)
        self.P = walkman_transition(g) if transition is None else np.asarray(transition, dtype=np.float64)
        self._cum = np.cumsum(self.P, axis=1)
        self._cum[:, -1] = 1.0
        self._walk = stream(self.seed, "walkman/walk")
        self.position = int(uniform_index(self._walk.random(), n))
        self.cost_per_iteration = n
        self.y = np.zeros((n, n, d))
        self.z = np.zeros((n, n, d))
        self._total = np.zeros((n, d))  # sum_k (y_k + z_k / beta)
        self._dual = None
        loss = problem.loss
        self._local = np.linalg.inv(loss.gram + (loss.ridge + self.beta)[:, None, None] * np.eye(d))
        self.visits = np.zeros(n, dtype=np.int64)

    def params(self):
        return {"beta": self.beta}

    def step(self, ledger):
        n = self.problem.n
        loss, reg = self.problem.loss, self.problem.reg
        i = self.position
        self.visits[i] += 1
        self.x, self._dual = reg.prox_sum(self._total / n, 1.0 / (n * self.beta), dual=self._dual)
        old = self.y[i] + self.z[i] / self.beta
        y = self.x - self.z[i] / self.beta
        y[i] = self._local[i] @ (loss.Atb[i] - self.z[i, i] + self.beta * self.x[i])
        self.z[i] += self.beta * (y - self.x)
        self.y[i] = y
        self._total += self.y[i] + self.z[i] / self.beta - old
        ledger.record(self.cost_per_iteration)
        self.position = int(np.searchsorted(self._cum[i], self._walk.random(), side="right"))
        self.t += 1
