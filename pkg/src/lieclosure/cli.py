"""Command-line front end.

Subcommands
-----------
compute
    Close one generator set (a catalogued ansatz or a generator file) and
    print its dimension and runtime.
validate
    Run the desk-scale validation cases and compare with the expected
    dimensions.
bench
    Time a grid of families x sizes x methods; each cell has its own
    wall-clock budget.
check
    Test whether one candidate operator is independent of a basis read from
    a generator file.

Exit codes
----------
0 success, 1 invalid input or configuration, 2 capacity or time budget
exceeded, 3 numerical degeneracy, 4 validation mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .closure import METHODS, ClosureConfig, ClosureResult, project_residual, run_closure
from .dense import DenseOperator, rank_independence_check, to_dense
from .errors import CapacityError, ClosureTimeout, InvalidInputError, LieClosureError, NumericalDegeneracyError
from .generators import FAMILIES, AnsatzSpec, build_generators
from .ops import Operator
from .pauli import PauliSum, format_pauli_sum, parse_pauli_file, parse_pauli_sum
from .validation import run_case, select_cases

log = logging.getLogger("lieclosure")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CAPACITY = 2
EXIT_DEGENERATE = 3
EXIT_MISMATCH = 4

SCHEMA = "lieclosure.result/1"
BACKENDS = ("pauli", "dense")
FORMATS = ("json-lines", "table")


@dataclass
class RunConfig:
    method: str = "orthonorm-dimonly"
    backend: str = "pauli"
    tol: float = 1e-8
    max_dim: int | None = None
    threads: int = 1
    ansatz: AnsatzSpec | None = None
    generators: Path | None = None
    out: Path | None = None
    fmt: str = "json-lines"
    time_limit: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if self.backend not in BACKENDS:
            raise InvalidInputError(f"unknown backend {self.backend!r}")
        if self.fmt not in FORMATS:
            raise InvalidInputError(f"unknown format {self.fmt!r}")
        if not self.tol > 0:
            raise InvalidInputError("tolerance must be positive")
        if self.max_dim is not None and self.max_dim < 1:
            raise InvalidInputError("capacity cap must be at least 1")
        if self.threads < 1:
            raise InvalidInputError("thread count must be at least 1")

    def closure_config(self) -> ClosureConfig:
        return ClosureConfig(tol=self.tol, max_dim=self.max_dim, threads=self.threads, time_limit=self.time_limit)

    @property
    def source(self) -> str:
        if self.ansatz is not None:
            return f"ansatz:{self.ansatz.family}"
        return f"file:{self.generators}"


def _plain(value):
    """JSON-compatible copy (tuples become lists, numpy scalars become Python)."""
    return json.loads(json.dumps(value, default=lambda o: o.item() if isinstance(o, np.generic) else str(o)))


@dataclass
class ResultRecord:
    """One closure run, serialized as a JSON line."""

    command: str
    source: str
    method: str
    backend: str
    tol: float
    status: str = "ok"
    family: str | None = None
    n: int | None = None
    seed: int | None = None
    dimension: int | None = None
    expected: int | None = None
    wall_time: float | None = None
    commutators: int = 0
    null_commutators: int = 0
    checks: int = 0
    accepted: int = 0
    generators_skipped: int = 0
    warnings: list[dict[str, Any]] = field(default_factory=list)
    error: str | None = None
    schema: str = SCHEMA

    def __post_init__(self):
        self.warnings = _plain(self.warnings)

    @classmethod
    def from_result(cls, result: ClosureResult, command: str, source: str, **extra) -> ResultRecord:
        st = result.stats
        return cls(
            command=command,
            source=source,
            method=result.method,
            backend=result.backend,
            tol=result.tol,
            dimension=result.dimension,
            wall_time=round(st.wall_time, 3),
            commutators=st.commutators,
            null_commutators=st.null_commutators,
            checks=st.checks,
            accepted=st.accepted,
            generators_skipped=st.generators_skipped,
            warnings=st.warnings,
            **extra,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> ResultRecord:
        data = json.loads(line)
        if data.get("schema") != SCHEMA:
            raise InvalidInputError(f"unsupported record schema {data.get('schema')!r}")
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


TABLE_COLUMNS = ("source", "n", "method", "backend", "dimension", "expected", "status", "wall_time", "commutators")


def format_table(rows: list[dict[str, Any]], columns=TABLE_COLUMNS) -> str:
    cells = [[("" if r.get(c) is None else str(r.get(c))) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def write_records(path: Path, records: list[ResultRecord], fmt: str = "json-lines") -> None:
    if fmt == "table":
        text = format_table([asdict(r) for r in records])
    else:
        text = "".join(r.to_json() + "\n" for r in records)
    Path(path).write_text(text)


def read_records(path: Path) -> list[ResultRecord]:
    lines = Path(path).read_text().splitlines()
    return [ResultRecord.from_json(line) for line in lines if line.strip()]


def format_basis(basis) -> str:
    """Text listing of a basis, one operator per line, exact to the last bit."""
    out = []
    for op in basis:
        if isinstance(op, PauliSum):
            out.append(format_pauli_sum(op))
        else:
            flat = np.asarray(op.matrix).reshape(-1)
            out.append(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in flat))
    return "".join(line + "\n" for line in out)


def load_generators(cfg: RunConfig) -> list[Operator]:
    if cfg.ansatz is not None:
        gens = build_generators(cfg.ansatz)
    elif cfg.generators is not None:
        try:
            text = Path(cfg.generators).read_text()
        except OSError as exc:
            raise InvalidInputError(f"cannot read generator file: {exc}") from exc
        gens = parse_pauli_file(text)
        if not gens:
            raise InvalidInputError(f"{cfg.generators} holds no operators")
    else:
        raise InvalidInputError("give either --ansatz with --qubits or --generators")
    if cfg.backend == "dense":
        gens = [to_dense(g) for g in gens]
    return gens


def cmd_compute(cfg: RunConfig, basis_out: Path | None = None) -> tuple[int, ResultRecord]:
    gens = load_generators(cfg)
    result = run_closure(gens, cfg.method, cfg.closure_config())
    extra = {}
    if cfg.ansatz is not None:
        extra = {"family": cfg.ansatz.family, "n": cfg.ansatz.n, "seed": cfg.ansatz.seed}
    record = ResultRecord.from_result(result, "compute", cfg.source, **extra)
    print(f"dimension: {result.dimension}")
    print(f"runtime: {result.stats.wall_time:.3f} s")
    for w in record.warnings:
        print(f"warning: {w['kind']} {json.dumps({k: v for k, v in w.items() if k != 'kind'})}")
    if cfg.out is not None:
        write_records(cfg.out, [record], cfg.fmt)
    if basis_out is not None:
        Path(basis_out).write_text(format_basis(result.basis))
    return EXIT_OK, record


def cmd_validate(cfg: RunConfig, only=None, seed: int = 0) -> tuple[int, list[ResultRecord]]:
    records, rows, failures = [], [], []
    for case in select_cases(only):
        outcome = run_case(case, cfg.method, cfg.backend, cfg.closure_config(), seed)
        if outcome.result is not None:
            rec = ResultRecord.from_result(outcome.result, "validate", f"ansatz:{case.family}")
        else:
            rec = ResultRecord("validate", f"ansatz:{case.family}", cfg.method, cfg.backend, cfg.tol, error=outcome.error)
        rec.family, rec.n, rec.seed = case.family, case.n, seed
        rec.expected = case.expected
        rec.status = outcome.status.lower()
        records.append(rec)
        rows.append(
            {
                "case": case.label,
                "expected": case.expected,
                "computed": outcome.dimension if outcome.error is None else "error",
                "warned": "yes" if outcome.warned else "no",
                "status": outcome.status,
                "seconds": f"{outcome.seconds:.3f}",
            }
        )
        if outcome.status in ("FAIL", "ERROR"):
            failures.append(case.label)
    sys.stdout.write(format_table(rows, ("case", "expected", "computed", "warned", "status", "seconds")))
    if cfg.out is not None:
        write_records(cfg.out, records, cfg.fmt)
    if failures:
        print(f"{len(failures)} case(s) failed: {', '.join(failures)}")
        return EXIT_MISMATCH, records
    print("all gating cases passed")
    return EXIT_OK, records


def bench_cell(family: str, n: int, method: str, cfg: RunConfig, seed: int = 0) -> ResultRecord:
    source = f"ansatz:{family}"
    base = {"family": family, "n": n, "seed": seed}
    start = time.perf_counter()
    try:
        gens = build_generators(AnsatzSpec(family, n, seed=seed))
        if cfg.backend == "dense":
            gens = [to_dense(g) for g in gens]
        result = run_closure(gens, method, cfg.closure_config())
    except ClosureTimeout as exc:
        status, err = "timeout", str(exc)
    except CapacityError as exc:
        status, err = "capacity", str(exc)
    except NumericalDegeneracyError as exc:
        status, err = "degenerate", str(exc)
    else:
        return ResultRecord.from_result(result, "bench", source, **base)
    wall = round(time.perf_counter() - start, 3)
    return ResultRecord("bench", source, method, cfg.backend, cfg.tol, status=status, wall_time=wall, error=err, **base)


def bench_table(records: list[ResultRecord], methods) -> str:
    """Runtime grid: one row per (family, n), one column per method."""
    grid: dict[tuple, dict[str, str]] = {}
    for r in records:
        row = grid.setdefault((r.family, r.n), {"family": r.family, "n": r.n})
        cell = f"{r.wall_time:.3f}" if r.status == "ok" else r.status
        row[r.method] = cell
        if r.status == "ok":
            row["dimension"] = r.dimension
    return format_table(list(grid.values()), ("family", "n", "dimension", *methods))


def cmd_bench(cfg: RunConfig, families, sizes, methods, seed: int = 0) -> tuple[int, list[ResultRecord]]:
    records = []
    for family in families:
        for n in sizes:
            for method in methods:
                rec = bench_cell(family, n, method, cfg, seed)
                log.info("%s n=%d %s: %s", family, n, method, rec.status)
                records.append(rec)
    sys.stdout.write(bench_table(records, methods))
    if cfg.out is not None:
        if cfg.fmt == "table":
            Path(cfg.out).write_text(bench_table(records, methods))
        else:
            write_records(cfg.out, records)
    return EXIT_OK, records


def cmd_check(cfg: RunConfig, candidate: Operator) -> tuple[int, bool, float]:
    """Independence of ``candidate`` from the span of the generator file."""
    basis = load_generators(cfg)
    if cfg.backend == "dense" or isinstance(basis[0], DenseOperator):
        candidate = to_dense(candidate)
    nrm = candidate.norm()
    if nrm == 0.0:
        print("independent: false (null candidate)")
        return EXIT_OK, False, 0.0
    h = candidate.scale(1.0 / nrm)
    # orthonormalize the basis once, then measure the residual
    ortho = []
    for b in basis:
        r, _ = project_residual(ortho, b.scale(1.0 / max(b.norm(), np.finfo(float).tiny)))
        rn = r.norm()
        if rn > cfg.tol:
            ortho.append(r.scale(1.0 / rn))
    resid, _ = project_residual(ortho, h)
    rn = resid.norm()
    if cfg.method == "standard-rank":
        dense = [to_dense(b) for b in basis]
        mat = np.column_stack([d.matrix.reshape(-1, order="F") / d.norm() for d in dense if d.norm() > 0])
        independent = rank_independence_check(mat, to_dense(h))
    else:
        independent = rn > cfg.tol
    print(f"independent: {'true' if independent else 'false'}")
    print(f"residual: {rn:.6e}")
    return EXIT_OK, independent, rn


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, source: bool = True) -> None:
    if source:
        p.add_argument("--ansatz", choices=sorted(FAMILIES))
        p.add_argument("--qubits", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--option", action="append", default=[], metavar="KEY=VALUE", help="ansatz option, e.g. subspace=zero_magnetization")
        p.add_argument("--generators", type=Path, help="generator file, one Pauli sum per line")
    p.add_argument("--method", choices=METHODS, default="orthonorm-dimonly")
    p.add_argument("--backend", choices=BACKENDS, default="pauli")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-dim", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=FORMATS, default="json-lines", dest="fmt")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lieclosure", description="Lie closures of operator sets")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", help="close one generator set")
    _common(p)
    p.add_argument("--basis-out", type=Path, help="write the basis listing here")

    p = sub.add_parser("validate", help="check dimensions of the catalogued ansaetze")
    _common(p, source=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", nargs="+", choices=sorted(FAMILIES), metavar="FAMILY")

    p = sub.add_parser("bench", help="time a families x sizes x methods grid")
    _common(p, source=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--families", nargs="+", choices=sorted(FAMILIES), default=["hea"])
    p.add_argument("--sizes", nargs="+", type=int, default=[2, 3])
    p.add_argument("--methods", nargs="+", choices=METHODS, default=["orthonorm", "standard-rank"])
    p.add_argument("--timeout", type=float, default=600.0, help="per-cell wall-clock budget in seconds")

    p = sub.add_parser("check", help="independence of one operator from a basis file")
    _common(p)
    p.add_argument("--candidate", required=True, help="Pauli sum, e.g. '1 XY + -0.5 ZZ'")
    return parser


def _parse_options(items) -> dict[str, Any]:
    opts = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InvalidInputError(f"option {item!r} is not KEY=VALUE")
        try:
            opts[key] = float(value)
        except ValueError:
            opts[key] = value
    return opts


def _run_config(args) -> RunConfig:
    ansatz = None
    if getattr(args, "ansatz", None) is not None:
        if args.generators is not None:
            raise InvalidInputError("--ansatz and --generators are mutually exclusive")
        if args.qubits is None:
            raise InvalidInputError("--ansatz needs --qubits")
        ansatz = AnsatzSpec(args.ansatz, args.qubits, seed=args.seed, options=_parse_options(args.option))
    return RunConfig(
        method=args.method,
        backend=args.backend,
        tol=args.tol,
        max_dim=args.max_dim,
        threads=args.threads,
        ansatz=ansatz,
        generators=getattr(args, "generators", None),
        out=args.out,
        fmt=args.fmt,
        time_limit=getattr(args, "timeout", None),
    )


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _run_config(args)
        if args.command == "compute":
            code, _ = cmd_compute(cfg, args.basis_out)
        elif args.command == "validate":
            code, _ = cmd_validate(cfg, args.only, args.seed)
        elif args.command == "bench":
            code, _ = cmd_bench(cfg, args.families, args.sizes, args.methods, args.seed)
        else:
            code, _, _ = cmd_check(cfg, parse_pauli_sum(args.candidate))
        return code
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NumericalDegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ClosureTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InvalidInputError, LieClosureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
