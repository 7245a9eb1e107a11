"""Synchronous round engine with metered communication and trace recording."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .topology import Hypergraph, uniform_index

TRACE_COLUMNS = ("iter", "comm_units", "objective", "gap")
TRACE_META_KEYS = ("seed", "algorithm", "alpha0", "lambda", "m", "n", "d", "h_star", "h_star_tol")


class CommLedger:
    """Unit-message counts per iteration and their running total."""

    def __init__(self):
        self.per_iteration: list[int] = []
        self.cumulative = 0

    def record(self, units) -> None:
        u = int(units)
        if u != units or u < 0:
            raise ValueError(f"message count must be a non-negative integer, got {units!r}")
        self.per_iteration.append(u)
        self.cumulative += u

    def prefix_sums(self) -> np.ndarray:
        return np.cumsum(self.per_iteration, dtype=np.int64)

    @property
    def iterations(self) -> int:
        return len(self.per_iteration)

    def mean_per_iteration(self) -> float:
        return self.cumulative / self.iterations if self.per_iteration else 0.0


@dataclass
class StopRule:
    """Stop after ``max_iterations`` steps or once ``max_units`` is reached.

    With a unit budget the step that crosses it still completes, so the final
    total lies in ``[max_units, max_units + last step cost)``.
    """

    max_iterations: int | None = None
    max_units: int | None = None

    def __post_init__(self):
        if (self.max_iterations is None) == (self.max_units is None):
            raise ValueError("give exactly one of max_iterations and max_units")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.max_units is not None and self.max_units <= 0:
            raise ValueError("max_units must be positive")

    def done(self, iterations: int, units: int) -> bool:
        if self.max_iterations is not None:
            return iterations >= self.max_iterations
        return units >= self.max_units


@dataclass
class RunTrace:
    rows: list[tuple[int, int, float, float]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    ledger: CommLedger | None = None

    def column(self, name: str) -> np.ndarray:
        k = TRACE_COLUMNS.index(name)
        return np.array([r[k] for r in self.rows])

    def to_csv(self) -> str:
        lines = [f"# {k}={_fmt(v)}" for k, v in self.metadata.items()]
        lines.append(",".join(TRACE_COLUMNS))
        lines += [",".join(_fmt(v) for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        atomic_write_text(path, self.to_csv())

    @classmethod
    def read(cls, path) -> "RunTrace":
        meta, rows = {}, []
        header_seen = False
        for ln in Path(path).read_text().splitlines():
            if ln.startswith("#"):
                k, _, v = ln[1:].strip().partition("=")
                meta[k] = v
            elif not header_seen:
                if tuple(ln.split(",")) != TRACE_COLUMNS:
                    raise ValueError(f"{path}: unexpected trace header {ln!r}")
                header_seen = True
            elif ln:
                it, units, obj, gap = ln.split(",")
                rows.append((int(it), int(units), float(obj), float(gap)))
        return cls(rows=rows, metadata=meta)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary sibling file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(algorithm, stop: StopRule, h_star: float | None = None, stride: int = 1, metadata=None) -> RunTrace:
    """Step ``algorithm`` until ``stop`` fires and record its trace.

    A row is written for the initial point, every ``stride`` iterations and
    the final iteration. Objective evaluation is not charged to the ledger.
    ``gap`` is ``H - h_star`` (NaN when no reference is given).
    """
    if stride < 1:
        raise ValueError("stride must be at least 1")
    ledger = CommLedger()
    problem = algorithm.problem
    ref = float("nan") if h_star is None else float(h_star)

    def record():
        h = problem.objective(algorithm.x)
        trace.rows.append((algorithm.t, ledger.cumulative, h, h - ref))

    trace = RunTrace(metadata=dict(metadata or {}), ledger=ledger)
    record()
    while not stop.done(ledger.iterations, ledger.cumulative):
        algorithm.step(ledger)
        if ledger.iterations % stride == 0:
            record()
    if trace.rows[-1][0] != algorithm.t:
        record()
    return trace


def monte_carlo_comm(h: Hypergraph, iterations: int, rng: np.random.Generator, chunk: int = 4096) -> float:
    """Empirical mean unit messages per iteration under the BlockProx sampling rule.

    Each iteration every node draws one double; node ``i`` picking ``j`` is
    charged ``a_j - 1`` if ``i`` is in ``S_j``.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    delta = h.membership_matrix()
    cost = np.where(delta, h.sizes()[None, :] - 1, 0)
    rows = np.arange(h.n)
    total, done = 0, 0
    while done < iterations:
        k = min(chunk, iterations - done)
        j = uniform_index(rng.random((k, h.n)), h.m)
        total += int(cost[rows[None, :], j].sum())
        done += k
    return total / iterations
