"""Command-line front end.

Subcommands: tomogram, sweep, threshold, optimize, sample, reconstruct.
Every output echoes the full configuration; CSV output carries it on a
leading ``# config:`` comment line.

Exit codes: 0 success, 2 usage error, 3 numerical or invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, IllPosedError, InvariantError, MissingDataError, ShapeError
from .inequalities import InequalityReport, Kind, optimal_chsh_directions
from .providers import StateProvider
from .reconstruction import default_grid, exact_tomograms, frobenius_error, reconstruct
from .sampling import chsh_settings, estimate_chsh, sample
from .search import SearchConfig, maximize_margin, sweep, threshold_phi
from .states import DensityMatrix, basis_projector, maximally_mixed, werner
from .tomography import (
    AXES,
    Direction,
    Tomogram,
    fibonacci_directions,
    random_directions,
    tomogram_multi,
    tomograms_from_csv,
)

OUTPUT_DIR_ENV = "SPINTOMO_OUTPUT_DIR"


def schema_path():
    """Location of the JSON schema every ``--format json`` output satisfies."""
    from importlib.resources import files

    return files("spintomo") / "schemas" / "cli_output.schema.json"


class UsageError(Exception):
    pass


# --- argument grammars -----------------------------------------------------


def parse_state(spec: str) -> DensityMatrix:
    """``werner:d:phi``, ``basis:dim:index``, ``mixed:dim`` or a JSON file path."""
    parts = spec.split(":")
    try:
        if parts[0] == "werner" and len(parts) == 3:
            return werner(int(parts[1]), float(parts[2]))
        if parts[0] == "basis" and len(parts) == 3:
            return basis_projector(int(parts[1]), int(parts[2]))
        if parts[0] == "mixed" and len(parts) == 2:
            return maximally_mixed(int(parts[1]))
    except ValueError as exc:
        raise UsageError(f"bad state spec {spec!r}: {exc}") from exc
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        try:
            return DensityMatrix.from_json(path.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read state file {spec!r}: {exc}") from exc
    raise UsageError(f"unrecognised state spec {spec!r}")


_AXIS_RE = re.compile(r"^([+-]?)([xyz])$")


def parse_directions(text: str) -> list[Direction]:
    """Comma/semicolon separated list of ``x``, ``-y``, ``z`` or ``theta,phi`` pairs."""
    tokens = [t for t in re.split(r"[,;\s]+", text.strip()) if t]
    out: list[Direction] = []
    i = 0
    while i < len(tokens):
        m = _AXIS_RE.match(tokens[i].lower())
        if m:
            v = AXES[m.group(2)].cartesian * (-1 if m.group(1) == "-" else 1)
            out.append(Direction.from_vector(v))
            i += 1
            continue
        if i + 1 >= len(tokens):
            raise UsageError(f"direction literal {tokens[i]!r} is missing its azimuth")
        try:
            out.append(Direction.from_angles(float(tokens[i]), float(tokens[i + 1])))
        except ValueError as exc:
            raise UsageError(f"bad direction literal {tokens[i]},{tokens[i + 1]}") from exc
        i += 2
    if not out:
        raise UsageError("empty direction list")
    return out


def split_dim(dim: int) -> tuple[int, int]:
    """(local dimension, number of parties) for a power of 2 or 3."""
    for k in (2, 3):
        n = round(math.log(dim, k))
        if n >= 1 and k**n == dim:
            return k, n
    raise UsageError(f"state dimension {dim} is not a power of 2 or 3")


def parties_for(dim: int) -> int:
    return split_dim(dim)[1]


def direction_settings(args, parties: int) -> list[tuple[Direction, ...]]:
    chosen = [x is not None for x in (args.dirs, args.grid, args.random)]
    if sum(chosen) != 1:
        raise UsageError("give exactly one of --dirs, --grid, --random")
    if args.dirs is not None:
        dirs = parse_directions(args.dirs)
        if len(dirs) != parties:
            raise UsageError(f"state has {parties} parties but {len(dirs)} directions were given")
        return [tuple(dirs)]
    if args.grid is not None:
        pts = fibonacci_directions(args.grid)
        return list(itertools.product(pts, repeat=parties))
    rng = np.random.default_rng(args.seed)
    return [tuple(random_directions(rng, parties)) for _ in range(args.random)]


def search_config(args) -> SearchConfig:
    return SearchConfig(
        restarts=args.restarts,
        max_iterations=args.max_iter,
        tolerance=args.search_tol,
        seed=args.seed,
        workers=args.workers,
    )


# --- output ----------------------------------------------------------------


def config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "handler"}


def output_path(args) -> Path | None:
    if args.output is None or args.output == "-":
        return None
    p = Path(args.output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def emit(args, payload: dict, header: list[str], rows: list[list[str]]) -> None:
    if args.format == "json":
        doc = {"command": args.command, "version": __version__, "config": config_echo(args), **payload}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(config_echo(args), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    path = output_path(args)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


# --- commands --------------------------------------------------------------


def cmd_tomogram(args) -> int:
    if args.state is None:
        raise UsageError("--state is required")
    rho = parse_state(args.state)
    settings = direction_settings(args, parties_for(rho.dim))
    tomos = [tomogram_multi(rho, s) for s in settings]
    rows = [r for t in tomos for r in t.csv_rows(args.half_labels)]
    emit(args, {"tomograms": [t.to_dict() for t in tomos]}, tomos[0].csv_header(), rows)
    return 0


def _phi_grid(args) -> list[float]:
    if args.phis:
        return [float(p) for p in args.phis.split(",")]
    n = int(round((args.phi_stop - args.phi_start) / args.phi_step)) + 1
    return [round(float(p), 12) for p in np.linspace(args.phi_start, args.phi_stop, n)]


def cmd_sweep(args) -> int:
    cfg = search_config(args)
    results = sweep(args.d, args.ineq, _phi_grid(args), cfg, exact=args.exact)
    rows = [
        [repr(phi), repr(r.best_margin), repr(r.best_report.lhs), str(r.best_report.violated).lower()]
        for phi, r in results
    ]
    payload = {
        "kind": args.ineq,
        "d": args.d,
        "rows": [
            {"phi": phi, "max_margin": r.best_margin, "violated": r.best_report.violated, "report": r.best_report.to_dict()}
            for phi, r in results
        ],
    }
    emit(args, payload, ["phi", "max_margin", "lhs", "violated"], rows)
    return 0


def cmd_threshold(args) -> int:
    value = threshold_phi(args.d, args.ineq, search_config(args), args.tol, exact=args.exact)
    summary = (
        f"{args.ineq} threshold for d={args.d}: "
        + ("no threshold (never changes sign on [-1, 1])" if value is None else f"phi = {value:.4f}")
    )
    print(summary, file=sys.stderr if args.output in (None, "-") else sys.stdout)
    emit(
        args,
        {"kind": args.ineq, "d": args.d, "threshold": value, "summary": summary},
        ["kind", "d", "threshold"],
        [[args.ineq, str(args.d), "none" if value is None else repr(value)]],
    )
    return 0


def cmd_optimize(args) -> int:
    if args.state is None:
        raise UsageError("--state is required")
    rho = parse_state(args.state)
    res = maximize_margin(StateProvider(rho), args.ineq, search_config(args))
    emit(
        args,
        {"result": res.to_dict()},
        list(InequalityReport.CSV_HEADER) + ["evaluations", "converged"],
        [res.best_report.csv_row() + [str(res.evaluations), str(res.converged).lower()]],
    )
    return 0


def cmd_sample(args) -> int:
    if args.state is None:
        raise UsageError("--state is required")
    rho = parse_state(args.state)
    if args.chsh:
        quad = optimal_chsh_directions() if args.dirs is None else parse_directions(args.dirs)
        if len(quad) != 4 or rho.dim != 4:
            raise UsageError("--chsh needs a two-qubit state and four directions")
        est = estimate_chsh(rho, quad, args.shots, args.seed)
        records = [
            sample(rho, pair, args.shots, args.seed ^ i) for i, pair in enumerate(chsh_settings(quad))
        ]
    else:
        settings = direction_settings(args, parties_for(rho.dim))
        records = [sample(rho, s, args.shots, args.seed ^ i) for i, s in enumerate(settings)]
        est = None
    rows = [r for rec in records for r in rec.csv_rows()]
    payload = {"records": [r.to_dict() for r in records], "estimate": est.to_dict() if est else None}
    emit(args, payload, records[0].csv_header(), rows)
    return 0


def _load_tomograms(path: str) -> list[Tomogram]:
    text = Path(path).read_text()
    if path.endswith(".csv"):
        return tomograms_from_csv(text)
    data = json.loads(text)
    items = data.get("tomograms", data) if isinstance(data, dict) else data
    return [Tomogram.from_dict(t) for t in items]


def cmd_reconstruct(args) -> int:
    reference = None
    if args.input:
        tomos = _load_tomograms(args.input)
        if args.dim is None:
            raise UsageError("--dim is required with --input")
        dim = args.dim
    elif args.state:
        reference = parse_state(args.state)
        dim = reference.dim
        tomos = exact_tomograms(reference, default_grid(*split_dim(dim)))
    else:
        raise UsageError("give --input FILE or --state SPEC")
    res = reconstruct(tomos, dim, full_output=True)
    err = frobenius_error(res.state, reference) if reference is not None else None
    payload = {
        "state": res.state.to_dict(),
        "residual": res.residual,
        "rank": res.rank,
        "clipped": res.clipped,
        "frobenius_error": err,
    }
    m = res.state.matrix
    rows = [[str(i), str(j), repr(float(m[i, j].real)), repr(float(m[i, j].imag))] for i, j in np.ndindex(*m.shape)]
    if err is not None:
        print(f"frobenius error {err:.3e}", file=sys.stderr)
    emit(args, payload, ["row", "col", "re", "im"], rows)
    return 0


# --- parser ----------------------------------------------------------------


def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    p.add_argument("--seed", type=int, default=0)


def _add_dirs(p):
    p.add_argument("--dirs", help="direction literals: x, y, z, -z or theta,phi in radians")
    p.add_argument("--grid", type=int, help="Fibonacci-sphere points per party")
    p.add_argument("--random", type=int, help="number of seeded random direction tuples")


def _add_search(p):
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--max-iter", type=int, default=4000)
    p.add_argument("--search-tol", type=float, default=1e-10)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spintomo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in Kind]

    p = sub.add_parser("tomogram", help="tabulate tomograms of a state")
    p.add_argument("--state")
    p.add_argument("--half-labels", action="store_true", help="print qubit labels as +-1/2")
    _add_dirs(p)
    _add_output(p)
    p.set_defaults(handler=cmd_tomogram)

    p = sub.add_parser("sweep", help="maximal margin across Werner parameters")
    p.add_argument("--ineq", choices=kinds, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--phi-start", type=float, default=-1.0)
    p.add_argument("--phi-stop", type=float, default=1.0)
    p.add_argument("--phi-step", type=float, default=0.05)
    p.add_argument("--phis", help="explicit comma-separated phi values")
    p.add_argument("--exact", action="store_true", help="trace evaluation instead of closed forms")
    _add_search(p)
    _add_output(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("threshold", help="bisect the Werner violation threshold")
    p.add_argument("--ineq", choices=kinds, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--exact", action="store_true")
    _add_search(p)
    _add_output(p)
    p.set_defaults(handler=cmd_threshold)

    p = sub.add_parser("optimize", help="maximise an inequality margin for a state")
    p.add_argument("--ineq", choices=kinds, required=True)
    p.add_argument("--state")
    _add_search(p)
    _add_output(p)
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("sample", help="simulate local spin measurements")
    p.add_argument("--state")
    p.add_argument("--shots", type=int, default=10000)
    p.add_argument("--chsh", action="store_true", help="estimate CHSH on four directions (default: optimal)")
    _add_dirs(p)
    _add_output(p)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("reconstruct", help="least-squares state reconstruction")
    p.add_argument("--input", help="tomograms as JSON or CSV")
    p.add_argument("--dim", type=int)
    p.add_argument("--state", help="round-trip: reconstruct from this state's exact tomograms")
    _add_output(p)
    p.set_defaults(handler=cmd_reconstruct)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (UsageError, DomainError, ShapeError) as exc:
        print(f"spintomo {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (InvariantError, IllPosedError, MissingDataError, np.linalg.LinAlgError) as exc:
        print(f"spintomo {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
