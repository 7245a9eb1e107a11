"""Numerical cross-checks for the edge proximal maps.

The oracle solves the two-block prox problem with a conic solver (cvxpy with
Clarabel), which shares no code with the closed forms it checks. cvxpy is an
optional dependency needed only here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .objectives import EDGE_PROX, EdgeDiffNorm


def prox_oracle(zi, zj, t: float, variant: str):
    """``argmin t |x_i - x_j| + 0.5 |x_i - z_i|^2 + 0.5 |x_j - z_j|^2`` by conic solve."""
    import cvxpy as cp

    zi, zj = np.asarray(zi, float), np.asarray(zj, float)
    xi, xj = cp.Variable(zi.shape), cp.Variable(zj.shape)
    p = 2 if variant == "l2" else 1
    obj = t * cp.norm(xi - xj, p) + 0.5 * cp.sum_squares(xi - zi) + 0.5 * cp.sum_squares(xj - zj)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cp.Problem(cp.Minimize(obj)).solve(
            solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11
        )
    return np.asarray(xi.value, float), np.asarray(xj.value, float)


def nonexpansive_slack(comp: EdgeDiffNorm, z: np.ndarray, y: np.ndarray, beta: float) -> float:
    """``|z - y|^2 - 2 beta (G(x) - G(y)) - |x - y|^2`` with ``x = prox(z)``; never negative."""
    x = comp.prox(z, beta)
    return float(np.sum((z - y) ** 2) - 2 * beta * (comp.value(x) - comp.value(y)) - np.sum((x - y) ** 2))


@dataclass
class ProxCheckReport:
    probes: int
    max_oracle_error: dict
    min_nonexpansive_slack: dict

    def passed(self, oracle_tol: float = 1e-6, slack_tol: float = 1e-10) -> bool:
        return all(v <= oracle_tol for v in self.max_oracle_error.values()) and all(
            v >= -slack_tol for v in self.min_nonexpansive_slack.values()
        )


def prox_check(probes: int = 100, seed: int = 0, max_dim: int = 5) -> ProxCheckReport:
    """Random probes of both edge proxes against the oracle and the nonexpansive inequality."""
    rng = np.random.default_rng(seed)
    err = {v: 0.0 for v in EDGE_PROX}
    slack = {v: np.inf for v in EDGE_PROX}
    for _ in range(probes):
        d = int(rng.integers(1, max_dim + 1))
        zi, zj = rng.standard_normal(d), rng.standard_normal(d)
        t = float(rng.exponential(0.5))
        beta = float(rng.exponential(1.0))
        lam = float(rng.exponential(1.0))
        z, y = rng.standard_normal((2, d)), rng.standard_normal((2, d))
        for variant, kernel in EDGE_PROX.items():
            xi, xj = kernel(zi, zj, t)
            oi, oj = prox_oracle(zi, zj, t, variant)
            err[variant] = max(err[variant], float(np.max(np.abs(xi - oi))), float(np.max(np.abs(xj - oj))))
            comp = EdgeDiffNorm(0, 1, lam, variant)
            slack[variant] = min(slack[variant], nonexpansive_slack(comp, z, y, beta))
    return ProxCheckReport(probes, err, slack)
