"""Benchmark instances, dataset ingestion, step-size theory and orchestration."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .algorithms import (
    DSGD,
    BlockProx,
    Constant,
    NetworkLassoADMM,
    ProxAvg,
    RandomEdge,
    ReferenceNotTight,
    SqrtDecay,
    StronglyConvex,
    Walkman,
    reference_solve,
)
from .commsim import RunTrace, StopRule, atomic_write_text, run
from .objectives import LeastSquaresLoss, Problem, Regularizer
from .topology import Graph, graph_text, group_labels, read_graph, sbm_generate

SETTINGS = {
    "sbm1": ((10, 17, 18, 18, 12), 0.5, 0.01),
    "sbm2": ((20,), 0.5, 0.01),
    "sbm3": ((40,), 1.0, 1.0),
}


@dataclass
class Instance:
    """A graph-guided least-squares problem with its data."""

    graph: Graph
    losses: list[LeastSquaresLoss]
    lam: float
    variant: str
    groups: np.ndarray | None = None
    truth: np.ndarray | None = None
    sigma: float | None = None
    _problem: Problem | None = field(default=None, repr=False)

    @property
    def problem(self) -> Problem:
        if self._problem is None:
            self._problem = Problem(self.losses, Regularizer.on_graph(self.graph, self.lam, self.variant))
        return self._problem

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def d(self) -> int:
        return self.losses[0].dim


# Kept as a name for the synthetic case; every Instance built here has truth set.
SyntheticInstance = Instance


def synth_instance(
    group_sizes: Sequence[int],
    p_in: float,
    p_out: float,
    d: int = 21,
    samples: int = 15,
    sigma: float = 0.01,
    lam: float = 1.0,
    variant: str = "l2",
    rng: np.random.Generator | None = None,
    ridge: float = 0.0,
) -> Instance:
    """Multi-task least squares on a stochastic block model graph.

    Draw order: graph, per-group ground truth (``groups x d``), then per node
    the ``samples x (d-1)`` standard-normal features followed by the noise.
    The last feature column is an all-ones bias.
    """
    if len(group_sizes) == 0:
        raise ValueError("group list is empty")
    if d < 2:
        raise ValueError("d must be at least 2 (features plus bias)")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng() if rng is None else rng
    g = sbm_generate(group_sizes, p_in, p_out, rng)
    labels = group_labels(group_sizes)
    truth = rng.standard_normal((len(group_sizes), d))
    losses = []
    for i in range(g.n):
        A = np.column_stack([rng.standard_normal((samples, d - 1)), np.ones(samples)])
        b = A @ truth[labels[i]] + sigma * rng.standard_normal(samples)
        losses.append(LeastSquaresLoss(A, b, ridge=ridge))
    return Instance(g, losses, lam, variant, groups=labels, truth=truth, sigma=sigma)


def setting_instance(setting: str, seed: int, lam=1.0, variant="l2", sigma=0.01, ridge=0.0) -> Instance:
    sizes, p_in, p_out = SETTINGS[setting]
    return synth_instance(
        sizes, p_in, p_out, sigma=sigma, lam=lam, variant=variant, ridge=ridge,
        rng=rngmod.stream(seed, "instance"),
    )


# -- files --------------------------------------------------------------------


def write_features(losses: Sequence[LeastSquaresLoss], path, target: str = "y") -> None:
    """One row per sample: ``node_id, y, x1..xk`` with the trailing bias column dropped."""
    k = losses[0].dim - 1
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node_id", target] + [f"x{c + 1}" for c in range(k)])
    for i, f in enumerate(losses):
        for row, y in zip(f.A[:, :k], f.b):
            w.writerow([i, repr(float(y))] + [repr(float(v)) for v in row])
    atomic_write_text(path, buf.getvalue())


def save_instance(inst: Instance, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data, topo = directory / "data.csv", directory / "graph.txt"
    write_features(inst.losses, data)
    atomic_write_text(topo, graph_text(inst.graph))
    return data, topo


def load_dataset(features_file, graph_file, lam: float, variant: str = "l2", target: str = "y",
                 ridge: float = 0.0) -> Instance:
    """Per-node least squares from a CSV of samples and a graph file.

    The CSV needs a ``node_id`` column and the ``target`` column; every other
    column is a numeric feature. A bias column of ones is appended.
    """
    g = read_graph(graph_file)
    with open(features_file, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{features_file}: empty file") from None
        if "node_id" not in header or target not in header:
            raise ValueError(f"{features_file}: header needs 'node_id' and '{target}'")
        nid_col, y_col = header.index("node_id"), header.index(target)
        feat_cols = [c for c in range(len(header)) if c not in (nid_col, y_col)]
        rows: dict[int, list[tuple[float, list[float]]]] = {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ValueError(f"{features_file}:{lineno}: expected {len(header)} cells, got {len(rec)}")
            try:
                node = int(rec[nid_col])
                y = float(rec[y_col])
                x = [float(rec[c]) for c in feat_cols]
            except ValueError as exc:
                raise ValueError(f"{features_file}:{lineno}: non-numeric cell ({exc})") from None
            rows.setdefault(node, []).append((y, x))
    missing = [i for i in range(g.n) if i not in rows]
    if missing:
        raise ValueError(f"graph node(s) {missing[:10]} have no data rows in {features_file}")
    extra = sorted(k for k in rows if not 0 <= k < g.n)
    if extra:
        raise ValueError(f"{features_file}: node_id(s) {extra[:10]} are not in the graph")
    losses = []
    for i in range(g.n):
        b = np.array([r[0] for r in rows[i]])
        X = np.array([r[1] for r in rows[i]]).reshape(len(b), len(feat_cols))
        losses.append(LeastSquaresLoss(np.column_stack([X, np.ones(len(b))]), b, ridge=ridge))
    return Instance(g, losses, lam, variant)


# -- theory -------------------------------------------------------------------


@dataclass(frozen=True)
class TheoryBounds:
    """Constants of the constant-step and decaying-step distance bounds."""

    gamma: float
    delta: float
    neighborhood: float
    alpha_valid: bool
    sublinear_constant: float | None = None


def theory_bounds(mu: float, L: float, alpha: float, m: int, c: float,
                  dist0_sq: float | None = None, dist1_sq: float | None = None) -> TheoryBounds:
    """``Gamma = 2 alpha mu - 3 alpha^2 L^2``, ``delta = 7 m^2 c^2 alpha^2``.

    ``alpha`` outside ``(0, 2 mu / (3 L^2))`` is flagged through
    ``alpha_valid`` rather than rejected. The decaying-step constant ``A``
    needs the squared initial distances and is ``None`` without them.
    """
    if mu <= 0 or L <= 0:
        raise ValueError("mu and L must be positive")
    gamma = 2 * alpha * mu - 3 * alpha**2 * L**2
    delta = 7 * m**2 * c**2 * alpha**2
    valid = 0 < alpha < 2 * mu / (3 * L**2)
    hood = delta / gamma if gamma > 0 else math.inf
    a_const = None
    if dist0_sq is not None and dist1_sq is not None:
        a_const = max(
            12 * L**2 * dist0_sq,
            (mu**2 + 12 * L**2) * dist1_sq,
            4 * (1 + 12 * L**2 / mu**2) * 7 * m**2 * c**2,
        )
    return TheoryBounds(gamma, delta, hood, valid, a_const)


def spectral_constants(problem: Problem) -> tuple[float, float]:
    """``(mu, L)`` of ``F``: smallest ``mu_i`` and largest ``L_i``."""
    return problem.loss.strong_convexity(), problem.loss.smoothness()


# -- orchestration ------------------------------------------------------------

DEFAULT_ALGORITHMS = ("randomedge", "admm", "proxavg", "dsgd", "walkman")


def repeat_seed(master_seed: int, repeat: int) -> int:
    """Seed of repeat ``repeat``; recorded in the manifest."""
    return int(np.random.SeedSequence([int(master_seed), int(repeat)]).generate_state(1)[0])


def build_algorithm(name: str, problem: Problem, config, seed: int):
    """Instantiate ``name`` with the parameters carried by ``config``."""
    if name in ("randomedge", "blockprox"):
        sched = _schedule(config, problem)
        cls = RandomEdge if name == "randomedge" else BlockProx
        return cls(problem, sched, seed=seed)
    if name == "admm":
        return NetworkLassoADMM(problem, rho=config.rho, seed=seed)
    if name == "proxavg":
        return ProxAvg(problem, Constant(config.proxavg_step), seed=seed)
    if name == "dsgd":
        return DSGD(problem, stepsize=config.dsgd_step, seed=seed)
    if name == "walkman":
        return Walkman(problem, beta=config.beta_walkman, seed=seed)
    raise ValueError(f"unknown algorithm {name!r}")


def _schedule(config, problem):
    kind = getattr(config, "schedule", "sqrt")
    if kind == "sqrt":
        return SqrtDecay(config.alpha0)
    mu, L = spectral_constants(problem)
    if kind == "strongly_convex":
        return StronglyConvex(mu, L)
    if kind == "constant":
        return Constant(config.alpha0, mu if mu > 0 else None, L)
    raise ValueError(f"unknown schedule {kind!r}")


def make_instance(config, seed: int) -> Instance:
    if config.setting == "custom":
        return load_dataset(config.features_file, config.graph_file, config.lam, config.variant,
                            ridge=config.ridge)
    return setting_instance(config.setting, seed, lam=config.lam, variant=config.variant,
                            sigma=config.sigma, ridge=config.ridge)


def run_repeat(config, repeat: int) -> dict:
    """One instance, one reference solve, every configured algorithm."""
    seed = repeat_seed(config.seed, repeat)
    inst = make_instance(config, seed)
    problem = inst.problem
    out = {"repeat": repeat, "seed": seed, "m": problem.m, "n": problem.n, "d": problem.d,
           "traces": {}, "stats": {}, "reference_error": ""}
    try:
        ref = reference_solve(problem, iterations=config.reference_iterations,
                              tolerance=config.reference_tol)
        h_star, h_tol = ref.h_star, ref.tolerance
    except ReferenceNotTight as exc:
        h_star, h_tol = float("nan"), config.reference_tol
        out["reference_error"] = str(exc)
    out["h_star"] = h_star
    for name in config.algorithms:
        alg = build_algorithm(name, problem, config, seed)
        meta = {
            "seed": seed, "algorithm": name, "alpha0": config.alpha0, "lambda": config.lam,
            "m": problem.m, "n": problem.n, "d": problem.d, "h_star": h_star, "h_star_tol": h_tol,
            "repeat": repeat, "params": _params_text(alg.params()),
        }
        if name == "proxavg":
            meta["accounting"] = "2m per iteration (assumed; no decentralized analysis published)"
        trace = run(alg, StopRule(max_units=config.budget), h_star=h_star, stride=config.eval_stride,
                    metadata=meta)
        out["traces"][name] = trace.to_csv()
        out["stats"][name] = {
            "final_gap": trace.rows[-1][3],
            "final_objective": trace.rows[-1][2],
            "iterations": trace.ledger.iterations,
            "units": trace.ledger.cumulative,
            "mean_units_per_iter": trace.ledger.mean_per_iteration(),
        }
    return out


def _params_text(params: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(params.items()))


def run_benchmark(config, jobs: int = 1) -> dict:
    """Run every (algorithm, repeat) pair and write traces plus a summary.

    Layout under ``config.output_dir``: ``traces/<algorithm>_r<repeat>.csv``,
    ``summary.csv`` and ``repeats.csv``. Returns the summary rows and any
    reference failures.
    """
    outdir = Path(config.output_dir)
    (outdir / "traces").mkdir(parents=True, exist_ok=True)
    repeats = range(config.repeats)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_repeat, [config] * config.repeats, repeats))
    else:
        results = [run_repeat(config, r) for r in repeats]
    for res in results:
        for name, text in res["traces"].items():
            atomic_write_text(outdir / "traces" / f"{name}_r{res['repeat']:03d}.csv", text)
    summary = summarize(results, config.algorithms)
    atomic_write_text(outdir / "summary.csv", _csv_text(summary))
    atomic_write_text(outdir / "repeats.csv", _csv_text([
        {"repeat": r["repeat"], "seed": r["seed"], "n": r["n"], "m": r["m"],
         "h_star": repr(float(r["h_star"])), "reference_error": r["reference_error"]}
        for r in results
    ]))
    failures = [r for r in results if r["reference_error"]]
    return {"summary": summary, "results": results, "reference_failures": failures}


def summarize(results, algorithms) -> list[dict]:
    rows = []
    for name in algorithms:
        gaps = np.array([r["stats"][name]["final_gap"] for r in results])
        per_iter = np.array([r["stats"][name]["mean_units_per_iter"] for r in results])
        iters = np.array([r["stats"][name]["iterations"] for r in results])
        rows.append({
            "algorithm": name,
            "repeats": len(results),
            "mean_final_gap": repr(float(np.mean(gaps))),
            "std_final_gap": repr(float(np.std(gaps))),
            "median_final_gap": repr(float(np.median(gaps))),
            "mean_iterations": repr(float(np.mean(iters))),
            "mean_units_per_iteration": repr(float(np.mean(per_iter))),
        })
    return rows


def _csv_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def default_jobs() -> int:
    return int(os.environ.get("BLOCKPROX_JOBS", "1"))
