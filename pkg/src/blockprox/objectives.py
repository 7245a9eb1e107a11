"""Local losses, regularizer components and the composite objective.

A point ``x`` in R^{nd} is held as an ``(n, d)`` float64 array whose row ``i``
is block ``x_i``; :func:`to_blocks` and :func:`to_flat` convert between this
and the stacked vector.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from .topology import Graph, Hypergraph


def to_blocks(x, n: int, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size != n * d:
        raise ValueError(f"expected {n * d} values for {n} blocks of size {d}, got {x.size}")
    return x.reshape(n, d)


def to_flat(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1)


# -- local losses -------------------------------------------------------------


class LocalLoss(ABC):
    """Convex loss ``f_i`` of one block.

    ``smoothness`` and ``strong_convexity`` are ``None`` when not declared.
    """

    dim: int
    smoothness: float | None = None
    strong_convexity: float | None = None

    @abstractmethod
    def value(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def subgradient(self, x: np.ndarray) -> np.ndarray: ...

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        """``argmin_x f(x) + |x - v|^2 / (2 step)``; optional capability."""
        raise NotImplementedError(f"{type(self).__name__} has no proximal map")


class LeastSquaresLoss(LocalLoss):
    """``0.5 |A x - b|^2 + 0.5 ridge |x|^2``."""

    def __init__(self, A, b, ridge: float = 0.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        self.b = np.asarray(b, dtype=np.float64).reshape(-1)
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError(f"A has {self.A.shape[0]} rows but b has {self.b.shape[0]} entries")
        if ridge < 0:
            raise ValueError("ridge must be non-negative")
        self.ridge = float(ridge)
        self.dim = self.A.shape[1]
        self.gram = self.A.T @ self.A
        self.Atb = self.A.T @ self.b
        eig = np.linalg.eigvalsh(self.gram)
        self.smoothness = float(eig[-1] + self.ridge)
        self.strong_convexity = float(max(eig[0], 0.0) + self.ridge)

    def value(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r) + 0.5 * self.ridge * float(x @ x)

    def subgradient(self, x):
        return self.gram @ x - self.Atb + self.ridge * x

    def prox(self, v, step):
        m = self.gram + (self.ridge + 1.0 / step) * np.eye(self.dim)
        return np.linalg.solve(m, self.Atb + v / step)

    def minimizer(self) -> np.ndarray:
        """Minimum-norm minimizer."""
        if self.ridge > 0:
            return np.linalg.solve(self.gram + self.ridge * np.eye(self.dim), self.Atb)
        return np.linalg.lstsq(self.A, self.b, rcond=None)[0]


class LossStack:
    """All ``f_i`` evaluated together.

    Least-squares losses of equal dimension are batched: ``A_i`` is zero-padded
    to a common row count (zero rows change neither value nor gradient).
    Anything else falls back to a per-block loop.
    """

    def __init__(self, losses: Sequence[LocalLoss]):
        self.losses = list(losses)
        if not self.losses:
            raise ValueError("at least one local loss is required")
        self.n = len(self.losses)
        self.d = self.losses[0].dim
        if any(f.dim != self.d for f in self.losses):
            raise ValueError("all local losses must share the block dimension")
        self.batched = all(isinstance(f, LeastSquaresLoss) for f in self.losses)
        if self.batched:
            rows = max(f.A.shape[0] for f in self.losses)
            self.A = np.zeros((self.n, rows, self.d))
            self.b = np.zeros((self.n, rows))
            for i, f in enumerate(self.losses):
                self.A[i, : f.A.shape[0]] = f.A
                self.b[i, : f.b.shape[0]] = f.b
            self.gram = np.stack([f.gram for f in self.losses])
            self.Atb = np.stack([f.Atb for f in self.losses])
            self.ridge = np.array([f.ridge for f in self.losses])

    def values(self, x: np.ndarray) -> np.ndarray:
        if self.batched:
            r = np.einsum("nsd,nd->ns", self.A, x) - self.b
            return 0.5 * np.einsum("ns,ns->n", r, r) + 0.5 * self.ridge * np.einsum("nd,nd->n", x, x)
        return np.array([f.value(x[i]) for i, f in enumerate(self.losses)])

    def value(self, x: np.ndarray) -> float:
        return float(self.values(x).sum())

    def subgradients(self, x: np.ndarray) -> np.ndarray:
        if self.batched:
            return np.einsum("nde,ne->nd", self.gram, x) - self.Atb + self.ridge[:, None] * x
        return np.stack([f.subgradient(x[i]) for i, f in enumerate(self.losses)])

    def prox(self, v: np.ndarray, step: float) -> np.ndarray:
        if self.batched:
            m = self.gram + (self.ridge + 1.0 / step)[:, None, None] * np.eye(self.d)
            return np.linalg.solve(m, (self.Atb + v / step)[..., None])[..., 0]
        return np.stack([f.prox(v[i], step) for i, f in enumerate(self.losses)])

    def smoothness(self) -> float:
        """Largest declared ``L_i`` (the constant of ``F``)."""
        vals = [f.smoothness for f in self.losses]
        if any(v is None for v in vals):
            raise ValueError("some local loss declares no smoothness constant")
        return float(max(vals))

    def strong_convexity(self) -> float:
        """Smallest declared ``mu_i`` (the constant of ``F``)."""
        vals = [f.strong_convexity for f in self.losses]
        if any(v is None for v in vals):
            raise ValueError("some local loss declares no strong convexity constant")
        return float(min(vals))


# -- edge proximal kernels ----------------------------------------------------


def prox_edge_l2(zi, zj, t):
    """Proximal map of ``(x_i, x_j) -> |x_i - x_j|_2`` with effective step ``t``.

    Works on the last axis; leading axes (and ``t``) broadcast, so many edges
    can be processed in one call. The pair mean is preserved exactly.
    """
    zi = np.asarray(zi, dtype=np.float64)
    zj = np.asarray(zj, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    s = zi - zj
    norm = np.linalg.norm(s, axis=-1, keepdims=True)
    tt = t[..., None] if t.ndim else t
    mid = 0.5 * (zi + zj)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(norm > 2 * tt, tt * s / norm, 0.5 * s)
    return mid + 0.5 * s - shift, mid - 0.5 * s + shift


def prox_edge_l1(zi, zj, t):
    """Proximal map of ``(x_i, x_j) -> |x_i - x_j|_1``: the scalar rule per coordinate."""
    zi = np.asarray(zi, dtype=np.float64)
    zj = np.asarray(zj, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    tt = t[..., None] if t.ndim else t
    s = zi - zj
    shift = np.where(np.abs(s) > 2 * tt, np.sign(s) * tt, 0.5 * s)
    return zi - shift, zj + shift


EDGE_PROX = {"l2": prox_edge_l2, "l1": prox_edge_l1}


def _norm(v, variant):
    return np.linalg.norm(v, ord=2 if variant == "l2" else 1, axis=-1)


def _project_dual_ball(p, radius, variant):
    """Project onto ``{|p|_* <= radius}``; the dual of l2 is l2, of l1 is l-inf."""
    radius = np.asarray(radius, dtype=np.float64)
    r = radius[..., None] if radius.ndim else radius
    if variant == "l1":
        return np.clip(p, -r, r)
    norm = np.linalg.norm(p, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > r, r / norm, 1.0)
    return p * scale


# -- regularizer components ---------------------------------------------------


class RegularizerComponent(ABC):
    """One summand ``G_j`` depending only on the blocks in ``support``.

    ``value`` and ``prox`` take the ``(a_j, d)`` array of the support's blocks
    in the order of ``support``.
    """

    support: tuple[int, ...]

    @abstractmethod
    def value(self, blocks: np.ndarray) -> float: ...

    @abstractmethod
    def prox(self, blocks: np.ndarray, beta: float) -> np.ndarray: ...

    @abstractmethod
    def lipschitz_bound(self, d: int) -> float: ...

    def conj_prox(self, p: np.ndarray, sigma: float) -> np.ndarray:
        """Proximal map of the convex conjugate, via the Moreau identity."""
        return p - sigma * self.prox(p / sigma, 1.0 / sigma)


class EdgeDiffNorm(RegularizerComponent):
    """``lam * |x_i - x_j|`` in the l2 or l1 norm."""

    def __init__(self, i: int, j: int, lam: float, variant: str = "l2"):
        if variant not in EDGE_PROX:
            raise ValueError(f"variant must be one of {sorted(EDGE_PROX)}, got {variant!r}")
        if lam < 0:
            raise ValueError("lam must be non-negative")
        if i == j:
            raise ValueError("edge endpoints must differ")
        self.i, self.j = int(i), int(j)
        self.support = (self.i, self.j)
        self.lam = float(lam)
        self.variant = variant

    def __repr__(self):
        return f"EdgeDiffNorm({self.i}, {self.j}, lam={self.lam}, variant={self.variant!r})"

    def value(self, blocks):
        return self.lam * float(_norm(blocks[0] - blocks[1], self.variant))

    def prox(self, blocks, beta):
        xi, xj = EDGE_PROX[self.variant](blocks[0], blocks[1], beta * self.lam)
        return np.stack([xi, xj])

    def lipschitz_bound(self, d):
        # norm of the stacked subgradient (lam u, -lam u) over the dual unit ball
        scale = np.sqrt(2.0) if self.variant == "l2" else np.sqrt(2.0 * d)
        return float(scale * self.lam)

    def conj_prox(self, p, sigma):
        q = _project_dual_ball(0.5 * (p[0] - p[1]), self.lam, self.variant)
        return np.stack([q, -q])


def restricted_prox(component: RegularizerComponent, z: np.ndarray, beta: float) -> np.ndarray:
    """Blocks of ``prox_{beta G_j}(z)`` on ``S_j``; every other block equals ``z``."""
    if not isinstance(component, RegularizerComponent):
        raise TypeError(f"unknown component kind: {type(component).__name__}")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    blocks = z[list(component.support)]
    if beta == 0:
        return blocks.copy()
    return component.prox(blocks, beta)


def global_lipschitz_bound(components: Sequence[RegularizerComponent], d: int) -> float:
    """``max_j c_j``, the uniform subgradient bound used by the step-size theory."""
    if len(components) == 0:
        raise ValueError("component list is empty")
    return max(c.lipschitz_bound(d) for c in components)


class Regularizer:
    """``G = sum_j G_j`` over ``n`` blocks.

    When every component is an :class:`EdgeDiffNorm` of one variant, the edge
    endpoints and weights are kept as arrays (``pairs``, ``lam``) and the
    batch methods avoid Python loops.
    """

    def __init__(self, n: int, components: Sequence[RegularizerComponent]):
        self.n = n
        self.components = list(components)
        if not self.components:
            raise ValueError("a regularizer needs at least one component")
        self.hypergraph = Hypergraph(n, tuple(c.support for c in self.components))
        variants = {getattr(c, "variant", None) for c in self.components}
        self.pairwise = all(isinstance(c, EdgeDiffNorm) for c in self.components) and len(variants) == 1
        if self.pairwise:
            self.variant = variants.pop()
            self.pairs = np.array([c.support for c in self.components], dtype=np.int64)
            self.lam = np.array([c.lam for c in self.components])
        else:
            self.variant = None

    @classmethod
    def on_graph(cls, g: Graph, lam: float, variant: str = "l2") -> "Regularizer":
        return cls(g.n, [EdgeDiffNorm(i, j, lam, variant) for i, j in g.edges])

    @property
    def m(self) -> int:
        return len(self.components)

    def graph(self) -> Graph:
        if not self.pairwise:
            raise ValueError("regularizer is not graph-guided")
        return Graph(self.n, self.pairs)

    def values(self, x: np.ndarray) -> np.ndarray:
        if self.pairwise:
            return self.lam * _norm(x[self.pairs[:, 0]] - x[self.pairs[:, 1]], self.variant)
        return np.array([c.value(x[list(c.support)]) for c in self.components])

    def value(self, x: np.ndarray) -> float:
        return float(self.values(x).sum())

    def lipschitz_bound(self, d: int) -> float:
        return global_lipschitz_bound(self.components, d)

    def prox_component(self, j: int, z: np.ndarray, beta: float) -> np.ndarray:
        return restricted_prox(self.components[j], z, beta)

    def pair_prox(self, edge_idx: np.ndarray, zi: np.ndarray, zk: np.ndarray, beta: float):
        """Edge prox for a batch of edges; ``zi``/``zk`` are the endpoint blocks."""
        return EDGE_PROX[self.variant](zi, zk, beta * self.lam[edge_idx])

    def subgradient(self, x: np.ndarray) -> np.ndarray:
        """An element of ``dG(x)`` with the norm subgradient taken as 0 at 0."""
        if not self.pairwise:
            raise NotImplementedError("subgradient is only provided for edge regularizers")
        diff = x[self.pairs[:, 0]] - x[self.pairs[:, 1]]
        if self.variant == "l2":
            norm = np.linalg.norm(diff, axis=1, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                u = np.where(norm > 0, diff / norm, 0.0)
        else:
            u = np.sign(diff)
        u *= self.lam[:, None]
        g = np.zeros_like(x)
        np.add.at(g, self.pairs[:, 0], u)
        np.add.at(g, self.pairs[:, 1], -u)
        return g

    # restriction operator R: x -> (x_{S_1}, ..., x_{S_m}), with R^T R = diag(d_i)

    def restrict(self, x: np.ndarray):
        if self.pairwise:
            return x[self.pairs]
        return [x[list(c.support)] for c in self.components]

    def restrict_adjoint(self, p) -> np.ndarray:
        out = np.zeros((self.n, p[0].shape[-1]))
        if self.pairwise:
            np.add.at(out, self.pairs[:, 0], p[:, 0])
            np.add.at(out, self.pairs[:, 1], p[:, 1])
            return out
        for c, pj in zip(self.components, p):
            out[list(c.support)] += pj
        return out

    def conj_prox_all(self, p, sigma: float):
        if self.pairwise:
            q = _project_dual_ball(0.5 * (p[:, 0] - p[:, 1]), self.lam, self.variant)
            return np.stack([q, -q], axis=1)
        return [c.conj_prox(pj, sigma) for c, pj in zip(self.components, p)]

    def zeros_dual(self, d: int):
        if self.pairwise:
            return np.zeros((self.m, 2, d))
        return [np.zeros((len(c.support), d)) for c in self.components]

    def prox_sum(self, v: np.ndarray, step: float, dual=None, iters: int = 200, tol: float = 1e-12):
        """``prox_{step G}(v)`` for the whole sum, by accelerated dual ascent.

        Returns ``(x, dual)``; pass ``dual`` back in to warm-start the next call.
        """
        if step == 0:
            return v.copy(), dual
        dmax = max(int(self.hypergraph.membership_counts().max()), 1)
        eta = 1.0 / (step * dmax)
        p = self.zeros_dual(v.shape[1]) if dual is None else dual
        y, theta = p, 1.0
        x = v - step * self.restrict_adjoint(p)
        for _ in range(iters):
            xy = v - step * self.restrict_adjoint(y)
            p_new = self._dual_step(y, xy, eta)
            theta_new = 0.5 * (1 + np.sqrt(1 + 4 * theta * theta))
            y = self._extrapolate(p_new, p, (theta - 1) / theta_new)
            p, theta = p_new, theta_new
            x_new = v - step * self.restrict_adjoint(p)
            if np.max(np.abs(x_new - x)) <= tol * (1 + np.max(np.abs(x_new))):
                x = x_new
                break
            x = x_new
        return x, p

    def _dual_step(self, y, xy, eta):
        rx = self.restrict(xy)
        if self.pairwise:
            return self.conj_prox_all(y + eta * rx, eta)
        return self.conj_prox_all([a + eta * b for a, b in zip(y, rx)], eta)

    def _extrapolate(self, p_new, p, w):
        if self.pairwise:
            return p_new + w * (p_new - p)
        return [a + w * (a - b) for a, b in zip(p_new, p)]


class Problem:
    """``H(x) = sum_i f_i(x_i) + sum_j G_j(x_{S_j})``."""

    def __init__(self, losses: Sequence[LocalLoss], regularizer: Regularizer):
        self.loss = LossStack(losses)
        self.reg = regularizer
        if regularizer.n != self.loss.n:
            raise ValueError(f"regularizer has {regularizer.n} blocks but there are {self.loss.n} losses")
        self.n, self.d = self.loss.n, self.loss.d

    @property
    def m(self) -> int:
        return self.reg.m

    def objective(self, x: np.ndarray) -> float:
        x = to_blocks(x, self.n, self.d)
        return self.loss.value(x) + self.reg.value(x)


def objective_value(
    losses: Sequence[LocalLoss],
    components: Sequence[RegularizerComponent],
    x,
) -> float:
    """``H(x) = sum_i f_i(x_i) + sum_j G_j(x_{S_j})``."""
    n, d = len(losses), losses[0].dim
    x = to_blocks(x, n, d)
    total = sum(f.value(x[i]) for i, f in enumerate(losses))
    for c in components:
        if max(c.support) >= n:
            raise ValueError(f"component support {c.support} exceeds {n} blocks")
        total += c.value(x[list(c.support)])
    return float(total)
