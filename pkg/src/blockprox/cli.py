"""Command-line harness: config parsing, benchmark runs and diagnostic checks.

Config files are flat ``key = value`` lines; ``#`` starts a comment. Command
line overrides are given as ``--set key=value`` or through the dedicated
flags, and always win over the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .commsim import atomic_write_text, monte_carlo_comm
from .experiments import DEFAULT_ALGORITHMS, default_jobs, make_instance, repeat_seed, run_benchmark
from .objectives import EDGE_PROX
from .topology import expected_comm_per_iteration, read_topology

ALGORITHM_NAMES = ("blockprox", "randomedge", "admm", "proxavg", "dsgd", "walkman")
SCHEDULES = ("sqrt", "strongly_convex", "constant")
SETTING_ALIASES = {
    "sbm1": "sbm1", "sbm(i)": "sbm1", "i": "sbm1",
    "sbm2": "sbm2", "sbm(ii)": "sbm2", "ii": "sbm2",
    "sbm3": "sbm3", "sbm(iii)": "sbm3", "iii": "sbm3",
    "custom": "custom",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str = "benchmark"
    setting: str = "sbm1"
    features_file: str = ""
    graph_file: str = ""
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    lam: float = 1.0
    variant: str = "l2"
    budget: int = 10_000
    repeats: int = 100
    seed: int = 0
    output_dir: str = "runs/benchmark"
    eval_stride: int = 1
    reference_iterations: int = 2000
    reference_tol: float = 1e-6
    alpha0: float = 0.01
    schedule: str = "sqrt"
    rho: float | None = None
    beta_walkman: float = 1e4
    dsgd_step: float = 0.01
    proxavg_step: float = 0.01
    sigma: float = 0.01
    ridge: float = 0.0

    def validate(self) -> "RunConfig":
        if self.budget <= 0:
            raise ConfigError(f"budget: must be positive, got {self.budget}")
        if self.repeats < 1:
            raise ConfigError(f"repeats: must be at least 1, got {self.repeats}")
        if self.eval_stride < 1:
            raise ConfigError(f"eval_stride: must be at least 1, got {self.eval_stride}")
        if self.reference_iterations < 1:
            raise ConfigError("reference_iterations: must be at least 1")
        for key in ("alpha0", "beta_walkman", "dsgd_step", "proxavg_step", "reference_tol"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key}: must be positive, got {getattr(self, key)}")
        for key in ("lam", "sigma", "ridge"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{_KEY_OF.get(key, key)}: must be non-negative")
        if self.rho is not None and self.rho <= 0:
            raise ConfigError(f"rho: must be positive or 'auto', got {self.rho}")
        if self.setting == "custom" and not (self.features_file and self.graph_file):
            raise ConfigError("features_file: custom setting requires features_file and graph_file")
        if not self.algorithms:
            raise ConfigError("algorithms: at least one algorithm is required")
        return self

    def manifest(self) -> str:
        """Every resolved key in config syntax, so the manifest parses back to this config."""
        lines = [f"{_KEY_OF.get(f.name, f.name)} = {_render(getattr(self, f.name))}"
                 for f in dataclasses.fields(self)]
        return "\n".join(lines) + "\n"


# config key -> attribute name, where they differ
_ATTR_OF = {"lambda": "lam"}
_KEY_OF = {v: k for k, v in _ATTR_OF.items()}


def _render(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ",".join(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _choice(allowed):
    def conv(s):
        if s not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return s
    return conv


def _setting(s):
    key = s.lower().replace(" ", "")
    if key not in SETTING_ALIASES:
        raise ValueError(f"expected one of {', '.join(sorted(set(SETTING_ALIASES)))}")
    return SETTING_ALIASES[key]


def _algorithms(s):
    names = tuple(a.strip().lower() for a in s.split(",") if a.strip())
    bad = [a for a in names if a not in ALGORITHM_NAMES]
    if bad:
        raise ValueError(f"unknown algorithm(s) {', '.join(bad)}; expected from {', '.join(ALGORITHM_NAMES)}")
    return names


def _rho(s):
    return None if s.lower() == "auto" else float(s)


def _int(s):
    f = float(s)
    if f != int(f):
        raise ValueError("expected an integer")
    return int(f)


_PARSERS = {
    "experiment": str,
    "setting": _setting,
    "features_file": str,
    "graph_file": str,
    "algorithms": _algorithms,
    "lam": float,
    "variant": _choice(tuple(EDGE_PROX)),
    "budget": _int,
    "repeats": _int,
    "seed": _int,
    "output_dir": str,
    "eval_stride": _int,
    "reference_iterations": _int,
    "reference_tol": float,
    "alpha0": float,
    "schedule": _choice(SCHEDULES),
    "rho": _rho,
    "beta_walkman": float,
    "dsgd_step": float,
    "proxavg_step": float,
    "sigma": float,
    "ridge": float,
}


def read_config_file(path) -> dict[str, str]:
    items = {}
    for k, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: line {k}: expected 'key = value'")
        items[key.strip()] = value.strip()
    return items


def parse_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Resolve defaults, then the file at ``path``, then ``overrides``."""
    items = read_config_file(path) if path else {}
    items.update(overrides or {})
    values = {}
    for key, raw in items.items():
        attr = _ATTR_OF.get(key, key)
        if attr not in _PARSERS:
            raise ConfigError(f"{key}: unknown config key")
        try:
            values[attr] = _PARSERS[attr](raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot use value {raw!r}: {exc}") from None
    return RunConfig(**values).validate()


# -- subcommands --------------------------------------------------------------


def _cmd_run(args) -> int:
    cfg = parse_config(args.config, _overrides(args))
    out = Path(cfg.output_dir)
    seeds = [f"# repeat {r} seed {repeat_seed(cfg.seed, r)}" for r in range(cfg.repeats)]
    atomic_write_text(out / "manifest.txt", cfg.manifest() + "\n".join(seeds) + "\n")
    jobs = args.jobs if args.jobs is not None else default_jobs()
    res = run_benchmark(cfg, jobs=max(1, jobs))
    for row in res["summary"]:
        print(f"{row['algorithm']:>10}  mean gap {float(row['mean_final_gap']):.6g}  "
              f"std {float(row['std_final_gap']):.3g}  "
              f"units/iter {float(row['mean_units_per_iteration']):.6g}")
    print(f"wrote {out}")
    if res["reference_failures"]:
        for r in res["reference_failures"]:
            print(f"repeat {r['repeat']}: {r['reference_error']}", file=sys.stderr)
        return 3
    return 0


def _cmd_comm_check(args) -> int:
    h = read_topology(args.topology)
    rng = np.random.default_rng(args.seed)
    formula = expected_comm_per_iteration(h)
    empirical = monte_carlo_comm(h, args.iterations, rng)
    print(f"formula {formula!r}")
    print(f"empirical {empirical!r} over {args.iterations} iterations")
    return 0


def _cmd_prox_check(args) -> int:
    from .checks import prox_check

    rep = prox_check(probes=args.probes, seed=args.seed)
    for v in rep.max_oracle_error:
        print(f"{v}: max oracle error {rep.max_oracle_error[v]:.3e}  "
              f"min nonexpansive slack {rep.min_nonexpansive_slack[v]:.3e}")
    ok = rep.passed()
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def _cmd_reference(args) -> int:
    from .algorithms import reference_solve

    cfg = parse_config(args.config, _overrides(args))
    inst = make_instance(cfg, repeat_seed(cfg.seed, args.repeat))
    ref = reference_solve(inst.problem, iterations=cfg.reference_iterations, tolerance=cfg.reference_tol)
    print(f"h_star {ref.h_star!r}")
    print(f"tolerance {ref.tolerance!r} (self-consistency delta {ref.delta:.3e}, {ref.iterations} iterations)")
    return 0


def _overrides(args) -> dict[str, str]:
    out = dict(kv for kv in (_split_kv(s) for s in args.set or []))
    for key in ("repeats", "seed", "budget", "setting", "output_dir", "algorithms", "variant"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = str(v)
    if getattr(args, "lam", None) is not None:
        out["lambda"] = str(args.lam)
    return out


def _split_kv(s: str) -> tuple[str, str]:
    key, sep, value = s.partition("=")
    if not sep:
        raise ConfigError(f"--set expects key=value, got {s!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockprox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def config_flags(sp):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
        sp.add_argument("--setting")
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--variant")
        sp.add_argument("--seed", type=int)

    run = sub.add_parser("run", help="run the benchmark and write traces")
    config_flags(run)
    run.add_argument("--repeats", type=int)
    run.add_argument("--budget", type=int)
    run.add_argument("--algorithms")
    run.add_argument("--output-dir", dest="output_dir")
    run.add_argument("--jobs", type=int, help="parallel repeat workers (default: $BLOCKPROX_JOBS or 1)")
    run.set_defaults(func=_cmd_run)

    cc = sub.add_parser("comm-check", help="formula vs Monte-Carlo communication for a topology file")
    cc.add_argument("topology")
    cc.add_argument("--iterations", type=int, default=100_000)
    cc.add_argument("--seed", type=int, default=0)
    cc.set_defaults(func=_cmd_comm_check)

    pc = sub.add_parser("prox-check", help="edge proxes vs a conic-solver oracle")
    pc.add_argument("--probes", type=int, default=100)
    pc.add_argument("--seed", type=int, default=0)
    pc.set_defaults(func=_cmd_prox_check)

    ref = sub.add_parser("reference", help="solve one instance centrally and print H*")
    config_flags(ref)
    ref.add_argument("--repeat", type=int, default=0, help="which repeat's instance to solve")
    ref.set_defaults(func=_cmd_reference)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"blockprox {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
