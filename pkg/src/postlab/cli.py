"""Command-line front end: ``postlab {expected,verify,ledger,scan,p1p1}``.

Exit codes: 0 success, 1 counter-evidence or failed verification, 2 usage,
3 domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from math import comb
from pathlib import Path
from typing import Sequence

from postlab.expected import (
    Bidegree,
    DomainError,
    Kind,
    SystemLabel,
    conditions_fat_line,
    d0,
    hilbert_poly_pn,
    split_r_q,
)
from postlab.interp.engine import RankJob, RankReport, multi_prime_check, verify_maximal_rank
from postlab.interp.field import DEFAULT_PRIME, SECOND_PRIME, PrimeField, is_prime
from postlab.interp.geometry import derive_seed
from postlab.interp.p1p1 import p1p1_h0, p1p1_report
from postlab.ledger import (
    LedgerError,
    build_sequence,
    escalate_to_rank_oracle,
    verify_sequence,
)
from postlab.schemes import OmegaSpec, SchemeSpec, label_to_scheme

EXIT_OK, EXIT_EVIDENCE, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3
DEFAULT_BUDGET = 6000
SCAN_COLUMNS = ["m", "d", "variant", "rows", "cols", "rank", "expected", "defect",
                "verdict", "prime", "seed"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class JobConfig:
    prime: int = DEFAULT_PRIME
    second_prime: int = SECOND_PRIME
    seed: int = 0
    retries: int = 3
    parallelism: int = 1
    output: str | None = None
    format: str | None = None

    def __post_init__(self) -> None:
        for p in (self.prime, self.second_prime):
            if not is_prime(p) or not 2 < p < 2**31:
                raise UsageError(f"{p} is not an odd prime below 2**31")
        if self.prime == self.second_prime:
            raise UsageError("prime and second_prime must differ")
        if self.retries < 1:
            raise UsageError("retries must be >= 1")
        if self.parallelism < 1:
            raise UsageError("parallelism must be >= 1")
        if self.format not in (None, "json", "csv", "text"):
            raise UsageError(f"unknown format {self.format!r}")


def read_config(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(name: str, value: str):
    if name in ("output", "format"):
        return value
    try:
        return int(value)
    except ValueError as exc:
        raise UsageError(f"{name} must be an integer, got {value!r}") from exc


def resolve_config(args: argparse.Namespace, environ=os.environ) -> JobConfig:
    """Defaults, then the config file, then ``POSTLAB_PRIME``, then flags."""
    names = {f.name for f in fields(JobConfig)}
    values: dict[str, object] = {}
    if args.config:
        for key, value in read_config(args.config).items():
            if key not in names:
                raise UsageError(f"unknown config key {key!r}")
            if key == "seed" and value == "random":
                values[key] = value
            else:
                values[key] = _coerce(key, value)
    if environ.get("POSTLAB_PRIME"):
        values["prime"] = _coerce("prime", environ["POSTLAB_PRIME"])
    for key in names:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if values.get("seed") == "random":
        values["seed"] = secrets.randbits(32)
    elif "seed" in values and not isinstance(values["seed"], int):
        values["seed"] = _coerce("seed", str(values["seed"]))
    return JobConfig(**values)


def _seed_arg(text: str) -> int | str:
    if text == "random":
        return text
    try:
        return int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("seed must be an integer or 'random'") from exc


def parse_range(text: str) -> list[int]:
    """``a..b`` (inclusive), ``a,b,c`` or a single integer; ``a..b`` with b < a is empty."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _range_arg(text: str) -> list[int]:
    try:
        return parse_range(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc


def parse_scheme(text: str, m: int | None = None) -> SchemeSpec:
    """``"m=2,r=2"`` style scheme; missing fields are 0, ``m`` defaults to ``--m``."""
    vals = {"m": m or 0, "r": 0, "s": 0, "q": 0, "z": 0}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in vals or not value.strip().lstrip("-").isdigit():
            raise UsageError(f"bad scheme field {part!r}")
        vals[key] = int(value)
    return SchemeSpec(**vals)


# output helpers

def _emit(text: str, cfg: JobConfig) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _text(pairs: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in pairs.items()) + "\n"


def _check_budget(cols: int, args: argparse.Namespace) -> None:
    if cols > args.budget and not args.force:
        raise UsageError(f"{cols} columns exceed the budget of {args.budget}; pass --force")


# commands

def cmd_expected(args: argparse.Namespace, cfg: JobConfig) -> int:
    out: dict[str, object] = {
        "n": args.n, "m": args.m, "d": args.d,
        "c": conditions_fat_line(args.n, args.m, args.d),
        "chi": hilbert_poly_pn(args.n, args.d),
        "d0": d0(args.m),
    }
    if args.n == 3:
        out["r"], out["q"] = split_r_q(args.d, args.m)
    fmt = cfg.format or "text"
    _emit(_json(out) if fmt == "json" else _text(out), cfg)
    return EXIT_OK


def _verify_jobs(args: argparse.Namespace) -> list[tuple[str, SchemeSpec]]:
    if args.custom is not None:
        return [("custom", parse_scheme(args.custom, args.m))]
    if args.m is None:
        raise UsageError("--m is required unless --custom gives m")
    if args.n != 3:
        raise UsageError("bijective/injective variants are defined in P^3; use --custom for other n")
    variants = ["bijective", "injective"] if args.variant == "both" else [args.variant]
    out = []
    for v in variants:
        kind = Kind.B if v == "bijective" else Kind.I
        out.append((v, label_to_scheme(SystemLabel.from_degree(kind, args.d, args.m))))
    return out


def _report_row(variant: str, Z: SchemeSpec, d: int, n: int, rep: RankReport) -> dict:
    return {"variant": variant, "scheme": Z.to_dict(), "d": d, "n": n,
            "defect": rep.defect, **rep.to_dict()}


def cmd_verify(args: argparse.Namespace, cfg: JobConfig) -> int:
    jobs = _verify_jobs(args)
    _check_budget(comb(args.d + args.n, args.n), args)
    rows = []
    all_ok = True
    for variant, Z in jobs:
        if args.multi_prime:
            job = RankJob(Z, args.d, args.n, cfg.seed, cfg.retries)
            cons = multi_prime_check(job, [cfg.prime, cfg.second_prime], cfg.seed)
            for rep in cons.reports.values():
                rows.append(_report_row(variant, Z, args.d, args.n, rep) | {"flags": cons.flags})
            all_ok &= cons.certified and cons.agree
        else:
            rep = verify_maximal_rank(Z, args.d, args.n, PrimeField(cfg.prime), cfg.seed, cfg.retries)
            rows.append(_report_row(variant, Z, args.d, args.n, rep))
            all_ok &= rep.certified
    fmt = cfg.format or "json"
    if fmt == "text":
        text = "".join(_text({k: v for k, v in r.items() if k != "scheme"}
                             | {"scheme": str(SchemeSpec(**r["scheme"]))}) for r in rows)
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=[c for c in rows[0] if c != "scheme"],
                           extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = "".join(json.dumps(r) + "\n" for r in rows)
    _emit(text, cfg)
    return EXIT_OK if all_ok else EXIT_EVIDENCE


def _label_from_args(args: argparse.Namespace) -> SystemLabel:
    if args.d is not None:
        if args.k is not None or args.eps is not None:
            raise UsageError("give either --d or --k/--eps")
        return SystemLabel.from_degree(args.kind, args.d, args.m)
    if args.k is None or args.eps is None:
        raise UsageError("give --d or both --k and --eps")
    return SystemLabel(Kind(args.kind), args.k, args.eps, args.m)


def cmd_ledger(args: argparse.Namespace, cfg: JobConfig) -> int:
    lab = _label_from_args(args)
    try:
        rep = build_sequence(lab)
    except LedgerError as exc:
        print(f"ledger: {exc}", file=sys.stderr)
        return EXIT_EVIDENCE
    if args.oracle:
        field_ = PrimeField(cfg.prime)
        escalate_to_rank_oracle(
            rep, lambda tr: p1p1_h0(tr.bidegree, tr.omega.folded(), field_, cfg.seed, cfg.retries)[0] == 0)
    ok = verify_sequence(rep)
    fmt = cfg.format or "json"
    if fmt == "text":
        lines = [f"{lab}: length {rep.length}, final {rep.final_label}, ok={ok}"]
        for s in rep.steps:
            if s.move is None:
                lines.append(f"  d={s.degree} {s.scheme}")
            else:
                lines.append(f"  d={s.degree} {s.scheme} {s.move} vdim={s.trace_vdim} "
                             f"{s.trace_certificate.value}")
        lines += [f"  violation: {v}" for v in rep.violations]
        lines += [f"  note: {n}" for n in rep.notes]
        text = "\n".join(lines) + "\n"
    else:
        text = _json(rep.to_dict())
    _emit(text, cfg)
    for v in rep.violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_EVIDENCE


def scan_cells(ms: Sequence[int], ds: Sequence[int]) -> list[tuple[int, int, str]]:
    """Cells ``(m, d, variant)`` with ``max(1, m) <= d < d0(m)``, in output order."""
    cells = []
    for m in sorted(set(ms)):
        if m < 1:
            continue
        for d in sorted(set(ds)):
            if max(1, m) <= d < d0(m):
                cells += [(m, d, "B"), (m, d, "I")]
    return cells


def run_scan_cell(cell: tuple[int, int, str], cfg: JobConfig) -> dict:
    m, d, variant = cell
    seed = derive_seed("scan", m, d, variant, cfg.seed)
    row = {"m": m, "d": d, "variant": variant}
    try:
        Z = label_to_scheme(SystemLabel.from_degree(variant, d, m))
    except DomainError:
        return row | {"rows": "", "cols": comb(d + 3, 3), "rank": "", "expected": "",
                      "defect": "", "verdict": "DOMAIN", "prime": cfg.prime, "seed": seed,
                      "persistent": False}
    rep = verify_maximal_rank(Z, d, 3, PrimeField(cfg.prime), seed, cfg.retries)
    persistent = False
    if not rep.certified:
        # a second characteristic separates unlucky primes from real defects
        alt = verify_maximal_rank(Z, d, 3, PrimeField(cfg.second_prime), seed, cfg.retries)
        persistent = not alt.certified
        if alt.certified:
            rep = alt
    return row | {"rows": rep.rows, "cols": rep.cols, "rank": rep.rank,
                  "expected": rep.expected_rank, "defect": rep.defect,
                  "verdict": rep.verdict.value, "prime": rep.prime, "seed": seed,
                  "persistent": persistent}


def cmd_scan(args: argparse.Namespace, cfg: JobConfig) -> int:
    cells = scan_cells(args.m, args.d)
    for m, d, _ in cells:
        _check_budget(comb(d + 3, 3), args)
    if cfg.parallelism > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            rows = list(pool.map(run_scan_cell, cells, [cfg] * len(cells)))
    else:
        rows = [run_scan_cell(c, cfg) for c in cells]
    rows.sort(key=lambda r: (r["m"], r["d"], r["variant"]))
    fmt = cfg.format or "csv"
    if fmt == "json":
        text = _json(rows)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SCAN_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    _emit(text, cfg)
    persistent = [r for r in rows if r["persistent"]]
    for r in persistent:
        print(f"PERSISTENT DEFECT m={r['m']} d={r['d']} variant={r['variant']} "
              f"defect={r['defect']}", file=sys.stderr)
    return EXIT_EVIDENCE if persistent else EXIT_OK


def cmd_p1p1(args: argparse.Namespace, cfg: JobConfig) -> int:
    om = OmegaSpec(args.p or 0, args.pd, args.pm, args.mpt)
    bd = Bidegree(args.a, args.b)
    if args.fill:
        cols = (args.a + 1) * (args.b + 1)
        filled = cols - 3 * om.p_d - om.p_m * comb(om.m_pt + 1, 2)
        om = replace(om, p=max(0, filled))
    rep = p1p1_report(bd, om, PrimeField(cfg.prime), cfg.seed, cfg.retries)
    out = rep.to_dict()
    fmt = cfg.format or "json"
    _emit(_json(out) if fmt == "json" else _text(out), cfg)
    return EXIT_OK if rep.agree else EXIT_EVIDENCE


# parser

def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("job configuration")
    g.add_argument("--prime", type=int, default=None)
    g.add_argument("--second-prime", dest="second_prime", type=int, default=None)
    g.add_argument("--seed", type=_seed_arg, default=None, help="integer or 'random'")
    g.add_argument("--retries", type=int, default=None)
    g.add_argument("--parallelism", type=int, default=None)
    g.add_argument("--output", default=None)
    g.add_argument("--format", choices=["json", "csv", "text"], default=None)
    g.add_argument("--config", default=None, help="key=value file of job settings")
    g.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="column budget")
    g.add_argument("--force", action="store_true", help="ignore the column budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="postlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expected", help="condition counts and the degree threshold")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_expected)

    p = sub.add_parser("verify", help="rank verification of B/I or custom schemes")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--variant", choices=["bijective", "injective", "both"], default="both")
    p.add_argument("--custom", default=None, help='scheme like "m=2,r=2,q=1"')
    p.add_argument("--multi-prime", dest="multi_prime", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ledger", help="replay and audit a specialization sequence")
    p.add_argument("--kind", choices=["B", "I"], required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--eps", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--oracle", action="store_true", help="rank-check uncertified traces")
    _common(p)
    p.set_defaults(func=cmd_ledger)

    p = sub.add_parser("scan", help="maximal-rank scan below the degree threshold")
    p.add_argument("--m", type=_range_arg, required=True)
    p.add_argument("--d", type=_range_arg, required=True)
    _common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("p1p1", help="speciality on P^1 x P^1")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--p", "--q", dest="p", type=int, default=0, help="simple points")
    p.add_argument("--pd", type=int, default=0, help="double points")
    p.add_argument("--pm", type=int, default=0, help="points of multiplicity --mpt (0 or 2)")
    p.add_argument("--mpt", type=int, default=1)
    p.add_argument("--fill", action="store_true", help="add simple points up to vdim 0")
    _common(p)
    p.set_defaults(func=cmd_p1p1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"postlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ValueError) as exc:
        print(f"postlab: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
