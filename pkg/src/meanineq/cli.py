"""Command-line front end: ``meanineq {eval,check,certify,scan,limits}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from . import __version__
from .cascade import CertificateFailure, LadderViolation, certify, sign_ladder_check
from .exactmath import as_rational
from .means import EvalContext, ExtendedParam, eval_C, eval_gini, eval_L, eval_stolarsky, parse_positive
from .suite import (
    ALL_IDS,
    ClaimViolation,
    DomainError,
    PrecisionExhausted,
    SampleConfig,
    b_grid,
    check_inequality,
    proof_fn_claims,
    run_suite,
    verify_limit,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
PREC_ENV = "MEANINEQ_PREC"
MANIFEST_SCHEMA = "meanineq.manifest/1"
DEFAULT_PREC = 256
LIMIT_TOLERANCE = 1e-6


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: list[str]
    seed: int | None
    precision: int
    tool: str = "meanineq"
    version: str = __version__
    schema: str = MANIFEST_SCHEMA
    started: str = field(default_factory=lambda: _now())
    finished: str | None = None

    def finish(self):
        self.finished = _now()

    def to_json(self, include_timestamps: bool = True) -> dict:
        out = {
            "tool": self.tool,
            "version": self.version,
            "schema": self.schema,
            "command": self.command,
            "seed": self.seed,
            "precision": self.precision,
        }
        if include_timestamps:
            out["started"] = self.started
            out["finished"] = self.finished
        return out


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# ----------------------------------------------------------------------
# argument helpers
# ----------------------------------------------------------------------

def _default_precision() -> int:
    raw = os.environ.get(PREC_ENV)
    if raw is None:
        return DEFAULT_PREC
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"{PREC_ENV} must be an integer, got {raw!r}") from None
    if val < 53:
        raise UsageError(f"{PREC_ENV} must be at least 53")
    return val


def _exact(text: str) -> Fraction:
    """Rational for exact paths; decimals are refused."""
    try:
        return as_rational(text)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None


def _param(text: str) -> ExtendedParam:
    try:
        return ExtendedParam.of(text)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise UsageError(f"bad parameter {text!r}: {exc}") from None


def _positive(text: str) -> Fraction:
    try:
        return parse_positive(text)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise UsageError(f"bad argument {text!r}: {exc}") from None


def _digits(prec: int) -> int:
    return max(1, int(prec * math.log10(2)) - 3)


def format_value(val, prec: int) -> str:
    with mpmath.workprec(prec):
        text = mpmath.nstr(val, _digits(prec))
    return text[:-2] if text.endswith(".0") else text


def _write_json(path: str, payload: dict):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meanineq", description="Evaluate and verify inequalities between generalized means.")
    p.add_argument("--version", action="version", version=f"meanineq {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="evaluate a mean")
    e.add_argument("--mean", choices=["L", "C", "E", "G"], required=True)
    e.add_argument("--r", help="order for L and C ('inf', '-inf', 'p/q' or decimal)")
    e.add_argument("--p", help="first order for E and G")
    e.add_argument("--q", help="second order for E and G")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True)
    e.add_argument("--prec", type=int)

    c = sub.add_parser("check", help="run the randomized inequality suite or one instance")
    c.add_argument("--suite", help="'all' or a comma-separated list of inequality ids")
    c.add_argument("--id", help="check one instance of this inequality id")
    c.add_argument("--samples", type=int)
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--prec", type=int)
    c.add_argument("--escalation-prec", type=int)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--report")
    c.add_argument("--csv")
    for name in ("r", "s", "alpha", "beta", "a", "b"):
        c.add_argument(f"--{name}")
    c.add_argument("--region", nargs=2, metavar=("G_FRAC", "M_FRAC"))

    k = sub.add_parser("certify", help="reconstruct and certify a proof cascade")
    k.add_argument("--target", choices=["G", "W", "all"], required=True)
    k.add_argument("--out")
    k.add_argument("--ladder", nargs="+", metavar="R", help="also run the numeric sign ladder at these r")
    k.add_argument("--prec", type=int)

    s = sub.add_parser("scan", help="numeric sign ladder of cascade stages or auxiliary functions")
    s.add_argument("--family", choices=["G", "W", "F1", "H1"], required=True)
    s.add_argument("--r", nargs="+", required=True)
    s.add_argument("--grid", type=int, default=None, help="grid points")
    s.add_argument("--prec", type=int)
    s.add_argument("--report")

    m = sub.add_parser("limits", help="extrapolate the limit formulas")
    m.add_argument("--which", choices=["quartic", "quadratic", "product", "all"], required=True)
    m.add_argument("--r")
    m.add_argument("--s")
    m.add_argument("--a", default="1")
    m.add_argument("--prec", type=int)
    m.add_argument("--report")
    return p


# ----------------------------------------------------------------------
# verbs
# ----------------------------------------------------------------------

def cmd_eval(args, prec: int, out) -> int:
    ctx = EvalContext(prec)
    a, b = _positive(args.a), _positive(args.b)
    if args.mean in ("L", "C"):
        if args.r is None:
            raise UsageError("--r is required for L and C")
        r = _param(args.r)
        val = (eval_L if args.mean == "L" else eval_C)(r, (a, b), ctx)
    else:
        if args.p is None or args.q is None:
            raise UsageError("--p and --q are required for E and G")
        p, q = _param(args.p), _param(args.q)
        val = (eval_stolarsky if args.mean == "E" else eval_gini)(p, q, (a, b), ctx)
    print(format_value(val, prec), file=out)
    return EXIT_OK


def _check_one(args, prec: int, out) -> int:
    if args.a is None or args.b is None:
        raise UsageError("--a and --b are required with --id")
    kw = {}
    for name in ("r", "s"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = _param(v)
    for name in ("alpha", "beta"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = _exact(v)
    if args.region:
        kw["region"] = tuple(_exact(x) for x in args.region)
    try:
        res = check_inequality(args.id, (_positive(args.a), _positive(args.b)), EvalContext(prec), **kw)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    with mpmath.workprec(res.precision):
        print(f"{args.id}: margin {mpmath.nstr(res.margin, 20)} "
              f"(relative {res.relative:.6e}, {res.precision} bits) -> {res.verdict}", file=out)
    return EXIT_OK if res.verdict == "holds" else EXIT_FAIL


def cmd_check(args, prec: int, out, argv) -> int:
    if args.id:
        return _check_one(args, prec, out)
    if not args.suite:
        raise UsageError("check needs --suite or --id")
    ids = list(ALL_IDS) if args.suite == "all" else [x.strip() for x in args.suite.split(",") if x.strip()]
    unknown = [i for i in ids if i not in ALL_IDS]
    if unknown:
        raise UsageError(f"unknown inequality ids: {', '.join(unknown)}")
    samples = args.samples if args.samples is not None else (100_000 if args.suite == "all" else 10_000)
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    try:
        config = SampleConfig(seed=args.seed, samples=samples, base_precision=prec,
                              escalation_precision=args.escalation_prec or 4 * prec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest = RunManifest(list(argv), args.seed, prec)
    report = run_suite(config, ids, jobs=args.jobs, csv_path=args.csv)
    manifest.finish()
    for res in report.results.values():
        status = "ok" if res.fails == 0 and res.undecided == 0 else "FAIL"
        mm = "n/a" if res.min_margin is None else f"{res.min_margin:.3e}"
        print(f"{res.id:<11} {status:<4} passes={res.passes} fails={res.fails} "
              f"undecided={res.undecided} minMargin={mm} escalations={res.escalations}", file=out)
    print(f"{len(ids)} inequalities, {samples} samples + {report.config['adversarialSamples']} adversarial, "
          f"{report.wall_time:.1f}s", file=out)
    if args.report:
        payload = report.to_json()
        payload["manifest"] = manifest.to_json()
        _write_json(args.report, payload)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_certify(args, prec: int, out, argv) -> int:
    targets = ["G", "W"] if args.target == "all" else [args.target]
    ladder_r = [_exact(x) for x in args.ladder] if args.ladder else None
    if ladder_r and any(r <= 1 for r in ladder_r):
        raise UsageError("--ladder values must exceed 1")
    manifest = RunManifest(list(argv), None, prec)
    certs = {}
    ok = True
    for name in targets:
        try:
            cert = certify(name, strict=False)
        except CertificateFailure as exc:  # pragma: no cover - strict=False never raises
            print(f"{name}: {exc}", file=out)
            return EXIT_FAIL
        if ladder_r:
            try:
                cert.sign_ladder = sign_ladder_check(name, ladder_r, EvalContext(prec)).to_json()
            except LadderViolation as exc:
                cert.problems.append(str(exc))
                cert.ok = False
        for line in cert.summary_lines():
            print(line, file=out)
        for d in cert.discrepancies:
            print(f"  discrepancy at {d['site']}: printed {d['printed']!r}, derived {d['derived']} "
                  f"[{'flagged' if d['flagged'] else 'UNEXPECTED'}]", file=out)
        for problem in cert.problems:
            print(f"  problem: {problem}", file=out)
        print(f"{name}: {'certified' if cert.ok else 'NOT certified'}", file=out)
        ok = ok and cert.ok
        certs[name] = cert.to_json()
    manifest.finish()
    if args.out:
        payload = certs[targets[0]] if len(targets) == 1 else {"certificates": certs}
        payload = dict(payload)
        payload["manifest"] = manifest.to_json()
        _write_json(args.out, payload)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scan(args, prec: int, out, argv) -> int:
    rs = [_exact(x) for x in args.r]
    ctx = EvalContext(prec)
    manifest = RunManifest(list(argv), None, prec)
    status = EXIT_OK
    if args.family in ("G", "W"):
        if any(r <= 1 for r in rs):
            raise UsageError("cascade scans need r > 1")
        from .cascade import geometric_grid

        grid = geometric_grid(points=args.grid) if args.grid else None
        try:
            rep = sign_ladder_check(args.family, rs, ctx, grid=grid)
        except LadderViolation as exc:
            print(f"ladder violation: {exc}", file=out)
            return EXIT_FAIL
        for r, scans in rep.results.items():
            for sc in scans:
                br = "; ".join(f"[{lo}, {hi}]" for lo, hi in sc.crossings) or "-"
                note = "" if sc.printed_holds in (None, True) else f" (printed claim '{sc.printed}' fails)"
                print(f"r={r} {args.family}{sc.k}: {sc.shape} crossings {br}{note}", file=out)
        payload = rep.to_json()
    else:
        grid = b_grid(args.grid) if args.grid else None
        try:
            rep = proof_fn_claims([args.family], rs, ctx, grid=grid)
        except ClaimViolation as exc:
            print(f"claim violation: {exc}", file=out)
            return EXIT_FAIL
        for sc in rep.sign_changes:
            print(f"r={sc.r} {sc.function}: sign change in b in [{sc.bracket[0]}, {sc.bracket[1]}], "
                  f"parent monotone segments {'hold' if sc.monotone_segments else 'FAIL'}", file=out)
            if not sc.monotone_segments:
                status = EXIT_FAIL
        payload = rep.to_json()
    manifest.finish()
    if args.report:
        payload = dict(payload)
        payload["manifest"] = manifest.to_json()
        _write_json(args.report, payload)
    return status


def cmd_limits(args, prec: int, out, argv) -> int:
    which = ["quartic", "quadratic", "product"] if args.which == "all" else [args.which]
    a = _exact(args.a)
    defaults = {"quartic": 2, "quadratic": 2, "product": 1}
    manifest = RunManifest(list(argv), None, prec)
    results = []
    status = EXIT_OK
    for w in which:
        r = _exact(args.r) if args.r is not None else Fraction(defaults[w])
        s = None
        if w == "product":
            s = _exact(args.s) if args.s is not None else 2 * r
        try:
            res = verify_limit(w, EvalContext(max(prec, 256)), r=r, a=a, s=s)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        except PrecisionExhausted as exc:
            print(f"{w}: {exc}", file=out)
            return EXIT_FAIL
        exact = {"quartic": r * r / (960 * a ** 3), "quadratic": Fraction(-1) / (6 * a)}.get(w)
        if w == "product":
            exact = (s * s - r * r) / (1440 * a * a)
        verdict = "ok" if res.rel_error <= LIMIT_TOLERANCE else "FAIL"
        if verdict != "ok":
            status = EXIT_FAIL
        print(f"{w}: limit {exact} ~ {mpmath.nstr(res.value, 15)}, relative deviation "
              f"{res.rel_error:.3e}, observed order {res.observed_order:.2f} [{verdict}]", file=out)
        entry = res.to_json()
        entry.update({"r": str(r), "a": str(a), "s": None if s is None else str(s), "exact": str(exact)})
        results.append(entry)
    manifest.finish()
    if args.report:
        _write_json(args.report, {"schema": "meanineq.limits/1", "results": results,
                                  "manifest": manifest.to_json()})
    return status


def main(argv: list[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        prec = args.prec if getattr(args, "prec", None) is not None else _default_precision()
        if prec < 53:
            raise UsageError("--prec must be at least 53")
        if args.verb == "eval":
            return cmd_eval(args, prec, out)
        if args.verb == "check":
            return cmd_check(args, prec, out, argv)
        if args.verb == "certify":
            return cmd_certify(args, prec, out, argv)
        if args.verb == "scan":
            return cmd_scan(args, prec, out, argv)
        return cmd_limits(args, prec, out, argv)
    except UsageError as exc:
        print(f"meanineq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"meanineq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"meanineq: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
