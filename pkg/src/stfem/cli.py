"""Command line entry point: ``stfem run --example 1 --levels 2..8 --out results``."""
import argparse
import logging
import sys
from pathlib import Path

from .exceptions import STFemError
from .experiments import FORMATS, RunConfig, run, table_markdown
from .linsolve import SolverConfig

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


def parse_levels(text):
    """``"2..8"``, ``"2-8"`` or ``"5"`` to ``(l_min, l_max)``."""
    text = str(text).strip()
    for sep in ("..", "-", ":"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            return int(lo), int(hi)
    lvl = int(text)
    return lvl, lvl


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _truthy(v):
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def build_parser():
    p = argparse.ArgumentParser(prog="stfem", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a refinement sweep for one example")
    r.add_argument("-v", "--verbose", action="store_true", help="log per-level progress")
    r.add_argument("--config", type=Path, help="key=value file; flags override it")
    r.add_argument("--example", type=int, choices=[1, 2, 3, 4])
    r.add_argument("--levels", help="level range lo..hi, N = 2^lo ... 2^hi")
    r.add_argument("--hnorm", action="store_true", default=None,
                   help="also report the mesh-dependent h-norm error")
    r.add_argument("--solver", choices=["lu", "gmres"])
    r.add_argument("--rtol", type=float)
    r.add_argument("--format", help=f"comma list from {','.join(FORMATS)}")
    r.add_argument("--out", type=Path)
    return p


def config_from_args(args):
    merged = read_config_file(args.config) if args.config else {}
    for key in ("example", "levels", "hnorm", "solver", "rtol", "format", "out"):
        val = getattr(args, key)
        if val is not None:
            merged[key] = val
    if "example" not in merged:
        raise ValueError("--example is required")
    lo, hi = parse_levels(merged.get("levels", "2..5"))
    solver_kw = {"method": str(merged.get("solver", "lu"))}
    if "rtol" in merged:
        solver_kw["rtol"] = float(merged["rtol"])
    formats = tuple(s.strip() for s in str(merged.get("format", "csv")).split(",") if s.strip())
    out = merged.get("out")
    return RunConfig(
        example=int(merged["example"]),
        l_min=lo,
        l_max=hi,
        solver=SolverConfig(**solver_kw),
        include_hnorm=_truthy(merged.get("hnorm", False)),
        out_dir=Path(out) if out is not None else None,
        formats=formats,
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"stfem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        table = run(config)
    except (STFemError, MemoryError) as exc:
        print(f"stfem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    sys.stdout.write(table_markdown(table))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
