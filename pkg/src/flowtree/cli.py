"""Command-line front end.

Subcommands
-----------
verify                 run the check suite, write a JSON report, exit 0/1
kernels                kernel tables as CSV
norms                  empirical band-compression norms against depth
diverge                divergence experiments with fitted slopes
explore-rstar-weak11   weak-(1,1) ratios for R^*, reported without a verdict

Exit codes: 0 success, 1 failed check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import experiments as ex

MAX_VERTICES = 20_000_000


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    q: int = 2
    depth: int = 10
    tol: float | None = None
    t: list[float] = field(default_factory=lambda: [1.0])
    n_max: int | None = None
    probes: int = 64
    seed: int = 0
    format: str = "csv"
    output: str | None = None

    def validate(self) -> "RunConfig":
        if self.q < 2:
            raise ConfigError(f"q must be >= 2, got {self.q}")
        if self.depth < 0:
            raise ConfigError(f"depth must be >= 0, got {self.depth}")
        size = (self.q ** (self.depth + 1) - 1) // (self.q - 1)
        if size > MAX_VERTICES:
            raise ConfigError(f"depth {self.depth} needs {size} vertices, above the budget {MAX_VERTICES}")
        if self.tol is not None and not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError(f"tolerance must be positive and finite, got {self.tol}")
        if any(not (s >= 0 and math.isfinite(s)) for s in self.t):
            raise ConfigError(f"times must be nonnegative, got {self.t}")
        if self.n_max is not None and self.n_max < 0:
            raise ConfigError(f"n-max must be >= 0, got {self.n_max}")
        if self.probes < 1:
            raise ConfigError(f"probes must be >= 1, got {self.probes}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        return self


# -- output ---------------------------------------------------------------------

def _clean(x):
    """JSON-safe scalars: numpy types unwrapped, non-finite floats as strings."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x) + 0.0)
    return str(x)


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def _table(rows, columns, cfg: RunConfig, meta: dict) -> str:
    if cfg.format == "json":
        return render_json({**meta, "rows": [{c: r[c] for c in columns} for r in rows]})
    return render_csv(rows, columns)


# -- commands --------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    tol = 1e-13 if cfg.tol is None else cfg.tol
    times = tuple(cfg.t) if cfg.t != [1.0] else (0.5, 1.0, 2.0)
    checks = ex.verify_suite(cfg.q, cfg.depth, tol=tol, seed=cfg.seed, times=times)
    failed = [c.check for c in checks if c.status == "fail"]
    report = {
        "version": __version__,
        "q": cfg.q,
        "depth": cfg.depth,
        "tol": tol,
        "seed": cfg.seed,
        "status": "fail" if failed else "pass",
        "failed": failed,
        "checks": [c.as_dict() for c in checks],
    }
    if cfg.format == "csv":
        text = render_csv([c.as_dict() for c in checks], ["check", "status", "max_error", "budget"])
    else:
        text = render_json(report)
    _emit(text, cfg.output)
    return 1 if failed else 0


KERNEL_COLUMNS = ["n", "k", "ktilde", "G", "J_t", "certified_error"]
KERNEL_Z_COLUMNS = ["n", "k", "ktilde", "h_t"]


def cmd_kernels(cfg: RunConfig) -> int:
    n_max = 30 if cfg.n_max is None else cfg.n_max
    t = cfg.t[0]
    rows = ex.kernel_table_rows(cfg.q, t, n_max)
    meta = {"q": cfg.q, "t": t, "n_max": n_max}
    _emit(_table(rows, KERNEL_COLUMNS, cfg, meta), cfg.output)
    if cfg.output is not None:
        zrows = ex.kernel_z_rows(t, n_max)
        stem, dot, ext = cfg.output.rpartition(".")
        zpath = f"{stem}_z.{ext}" if dot else f"{cfg.output}_z"
        _emit(_table(zrows, KERNEL_Z_COLUMNS, cfg, {"t": t, "n_max": n_max}), zpath)
    return 0


NORM_COLUMNS = ["operator", "p", "depth", "estimate", "probes", "seed"]


def cmd_norms(cfg: RunConfig) -> int:
    depths = list(range(2, cfg.depth + 1, 2)) or [cfg.depth]
    tol = 1e-2 if cfg.tol is None else cfg.tol
    rows = ex.norm_rows(cfg.q, depths, (1.0, 2.0, 4.0), cfg.probes, cfg.seed, tol=tol)
    _emit(_table(rows, NORM_COLUMNS, cfg, {"q": cfg.q, "seed": cfg.seed}), cfg.output)
    return 0


DIVERGE_COLUMNS = ["experiment", "N", "value", "slope_fit", "r_squared"]


def cmd_diverge(cfg: RunConfig) -> int:
    rows = ex.divergence_rows(cfg.q, max(cfg.depth, 3), cfg.seed)
    _emit(_table(rows, DIVERGE_COLUMNS, cfg, {"q": cfg.q, "seed": cfg.seed}), cfg.output)
    return 0


EXPLORE_COLUMNS = ["family", "depth", "ratio"]


def cmd_explore(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    depths = list(range(2, cfg.depth + 1, 2)) or [cfg.depth]
    rows = ex.explore_rstar_weak11(cfg.q, depths, rng, probes=min(cfg.probes, 8))
    meta = {"q": cfg.q, "seed": cfg.seed, "note": "measurements only, no pass/fail"}
    _emit(_table(rows, EXPLORE_COLUMNS, cfg, meta), cfg.output)
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "kernels": cmd_kernels,
    "norms": cmd_norms,
    "diverge": cmd_diverge,
    "explore-rstar-weak11": cmd_explore,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, default=2, help="branching number, q >= 2")
    common.add_argument("--depth", type=int, default=10, help="band height")
    common.add_argument("--tol", type=float, default=None,
                        help="identity tolerance (verify) or estimator tolerance (norms)")
    common.add_argument("--t", type=float, nargs="+", default=[1.0], help="heat times")
    common.add_argument("--n-max", type=int, default=None, help="largest kernel index")
    common.add_argument("--probes", type=int, default=64, help="random probes per estimate")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default=None, help="output file (default: stdout)")

    parser = argparse.ArgumentParser(prog="flowtree", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--format", choices=("csv", "json"),
                       default="json" if name == "verify" else "csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    cfg = RunConfig(q=args.q, depth=args.depth, tol=args.tol, t=list(args.t), n_max=args.n_max,
                    probes=args.probes, seed=args.seed, format=args.format, output=args.output)
    try:
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"flowtree: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"flowtree: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
