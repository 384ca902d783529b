"""Command-line front end.

Subcommands read systems as text (``x1=1; x1+x1=x2``) or JSON, inline,
from a file or from stdin, and write JSON by default so they can be piped
into one another:

    ensys gadget fchain 3 | ensys solve --domain Z --box 20 --stdin

Exit codes: 0 success, 2 usage or input error, 3 budget exhausted or
verdict undetermined (partial results are still printed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import census as census_mod
from . import gadgets, lowering
from .polynomial import PolynomialError, lemma1_gadget, parse_polynomial, serialize_polynomial
from .solver import (
    Box,
    Budget,
    BudgetExceeded,
    Domain,
    Finite,
    Infinite,
    Undetermined,
    classify_finiteness,
    enumerate_solutions,
    verify_witness,
)
from .system import EnSystem, EnSystemError, parse_system, serialize_system, system_to_json

EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 2, 3

ENV_NODES = "ENSYS_NODES"
ENV_WORKERS = "ENSYS_WORKERS"


class InputError(Exception):
    pass


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"environment variable {name} must be a plain integer, got {raw!r}") from None
    if value < 0:
        raise InputError(f"environment variable {name} must be non-negative")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _domain(text: str) -> Domain:
    try:
        return Domain.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_input(p: argparse.ArgumentParser, what: str = "system") -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument(f"--{what}", dest="inline", help=f"inline {what}")
    group.add_argument("--file", help=f"read the {what} from a file")
    group.add_argument("--stdin", action="store_true", help=f"read the {what} from standard input")


def _add_budget(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", type=_nonneg, default=None, help=f"search node limit (env {ENV_NODES})")
    p.add_argument("--seconds", type=float, default=None, help="wall-time limit per search")
    p.add_argument("--workers", type=_nonneg, default=None, help=f"worker processes (env {ENV_WORKERS})")


def _add_domain(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", type=_domain, default=Domain.INTEGERS, help="Z, N or N+ (default Z)")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "text"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ensys", description="E_n constraint systems toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lower", help="lower a polynomial equation to an E_n system")
    p.add_argument("expression", nargs="?", help="polynomial expression, e.g. 'x1^2 - x2'")
    _add_input(p, "expr")
    _add_domain(p)
    p.add_argument("--box", type=_nonneg, default=None, help="also report aux bounds for this input radius")
    p.add_argument("--share-cells", action="store_true", help="reuse identical cells")
    _add_format(p)

    p = sub.add_parser("encode-nonneg", help="append four-square encodings for chosen variables")
    _add_input(p)
    p.add_argument("--vars", required=True, help="comma-separated variable indices")
    _add_format(p)

    for name, text in (("solve", "list solutions inside a box"),
                       ("classify", "decide finiteness with checkable evidence"),
                       ("count", "count solutions when finite")):
        p = sub.add_parser(name, help=text)
        _add_input(p)
        _add_domain(p)
        if name == "solve":
            p.add_argument("--box", type=_nonneg, required=True, help="box radius")
        _add_budget(p)
        _add_format(p)

    p = sub.add_parser("census", help="compute f, g (Z) or f_1, g_1 (N) by exhaustive census")
    p.add_argument("--n", type=int, required=True)
    _add_domain(p)
    p.add_argument("--mode", choices=("full", "pruned", "witness"), default=None)
    p.add_argument("--checkpoint", default=None, help="resumable JSON checkpoint (full mode)")
    p.add_argument("--max-orbits", type=_nonneg, default=None)
    _add_budget(p)

    p = sub.add_parser("gadget", help="print one of the explicit systems")
    p.add_argument("kind", choices=("hypercube", "fchain", "thm2", "thm3", "lemma1", "foursquare"))
    p.add_argument("arg", nargs="?", help="n, u, m or a polynomial expression depending on kind")
    _add_input(p, "phi")
    _add_format(p)

    p = sub.add_parser("check", help="run a constructive check")
    p.add_argument("what", choices=("lemma3", "witnesses", "audit"))
    p.add_argument("--levels", type=_nonneg, default=3)
    p.add_argument("--n", type=int, default=2)
    _add_domain(p)
    _add_budget(p)
    return parser


def _read(args, required: bool = True) -> str | None:
    if getattr(args, "inline", None) is not None:
        return args.inline
    if getattr(args, "file", None):
        try:
            with open(args.file) as fh:
                return fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {args.file}: {exc.strerror}") from None
    if getattr(args, "stdin", False):
        return sys.stdin.read()
    if required:
        raise InputError("no input: use --system/--file/--stdin")
    return None


def _read_system(args) -> EnSystem:
    text = _read(args)
    try:
        return parse_system(text)
    except EnSystemError as exc:
        where = f" in {args.file}" if getattr(args, "file", None) else ""
        raise InputError(f"malformed system{where}: {exc}") from None


def _budget(args) -> Budget:
    nodes = args.nodes if args.nodes is not None else _env_int(ENV_NODES, Budget.nodes)
    return Budget(nodes=nodes, seconds=args.seconds)


def _workers(args) -> int:
    w = args.workers if args.workers is not None else _env_int(ENV_WORKERS, 1)
    return max(1, w)


def _emit(out, obj, fmt: str = "json", text: str | None = None) -> None:
    if fmt == "text" and text is not None:
        out.write(text.rstrip("\n") + "\n")
    else:
        out.write(json.dumps(obj, separators=(",", ":")) + "\n")


def _emit_system(out, sys: EnSystem, fmt: str) -> None:
    out.write(serialize_system(sys, fmt) + "\n")


# -- subcommands ------------------------------------------------------------------

def _cmd_lower(args, out) -> int:
    text = args.expression if args.expression is not None else _read(args)
    try:
        poly = parse_polynomial(text)
    except PolynomialError as exc:
        raise InputError(f"malformed polynomial: {exc}") from None
    try:
        lr = lowering.lower_polynomial(poly, args.domain, share_cells=args.share_cells)
    except lowering.LoweringError as exc:
        raise InputError(str(exc)) from None
    obj = {"polynomial": serialize_polynomial(poly), "domain": args.domain.value,
           "system": system_to_json(lr.system), "input_positions": list(lr.input_positions)}
    if args.box is not None:
        obj["box"] = args.box
        obj["aux_bounds"] = {str(v): b for v, b in lowering.aux_box(lr, args.box).items()}
    _emit(out, obj, args.format, serialize_system(lr.system, "text"))
    return EXIT_OK


def _cmd_encode(args, out) -> int:
    sys_ = _read_system(args)
    try:
        chosen = [int(v) for v in args.vars.split(",") if v.strip()]
        encoded = lowering.encode_nonneg(sys_, chosen)
    except (ValueError, lowering.LoweringError) as exc:
        raise InputError(str(exc)) from None
    _emit_system(out, encoded, args.format)
    return EXIT_OK


def _cmd_solve(args, out) -> int:
    sys_ = _read_system(args)
    budget = _budget(args)
    try:
        sols = enumerate_solutions(sys_, args.domain, Box.cube(sys_.n, args.box, args.domain),
                                   budget, workers=_workers(args))
    except BudgetExceeded as exc:
        sys.stderr.write(f"budget exhausted: {exc} (nodes reached {exc.reached})\n")
        return EXIT_BUDGET
    rows = [list(t) for t in sols]
    _emit(out, rows, args.format, "\n".join(" ".join(map(str, t)) for t in rows) or "")
    return EXIT_OK


def _cmd_classify(args, out) -> int:
    sys_ = _read_system(args)
    verdict = classify_finiteness(sys_, args.domain, _budget(args))
    _emit(out, verdict.to_json(), args.format, _verdict_text(verdict))
    return EXIT_BUDGET if isinstance(verdict, Undetermined) else EXIT_OK


def _verdict_text(v) -> str:
    if isinstance(v, Finite):
        return f"finite ({v.proof}): {len(v.solutions)} solutions, height {v.solutions.height}"
    if isinstance(v, Infinite):
        return "infinite: " + ", ".join(v.to_json()["witness"])
    return f"undetermined: searched up to box {v.box}"


def _cmd_count(args, out) -> int:
    sys_ = _read_system(args)
    verdict = classify_finiteness(sys_, args.domain, _budget(args))
    if isinstance(verdict, Finite):
        _emit(out, {"count": len(verdict.solutions)}, args.format, str(len(verdict.solutions)))
        return EXIT_OK
    _emit(out, {"count": None, **verdict.to_json()}, args.format, _verdict_text(verdict))
    return EXIT_BUDGET if isinstance(verdict, Undetermined) else EXIT_OK


def _cmd_census(args, out) -> int:
    try:
        record = census_mod.census(args.n, args.domain, _budget(args), mode=args.mode,
                                   workers=_workers(args), checkpoint=args.checkpoint,
                                   max_orbits=args.max_orbits)
    except census_mod.CensusError as exc:
        raise InputError(str(exc)) from None
    out.write(record.dumps() + "\n")
    if record.mode != "witness" and not (record.f_exact and record.g_exact):
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_gadget(args, out) -> int:
    kind = args.kind

    def need_int() -> int:
        try:
            return int(args.arg)
        except (TypeError, ValueError):
            raise InputError(f"gadget {kind} needs an integer argument") from None

    try:
        if kind == "hypercube":
            _emit_system(out, gadgets.hypercube_system(need_int()), args.format)
        elif kind == "fchain":
            _emit_system(out, gadgets.f_witness_chain(need_int()), args.format)
        elif kind == "thm2":
            _emit_system(out, gadgets.theorem2_system(_read_system(args)), args.format)
        elif kind == "thm3":
            _emit_system(out, gadgets.theorem3_system(need_int(), _read_system(args)), args.format)
        elif kind == "lemma1":
            text = args.arg if args.arg is not None else _read(args)
            poly = parse_polynomial(text)
            _emit(out, {"gadget": serialize_polynomial(lemma1_gadget(poly))}, args.format,
                  serialize_polynomial(lemma1_gadget(poly)))
        else:
            m = need_int()
            dec = gadgets.four_square_decompose(m)
            _emit(out, list(dec), args.format, " ".join(map(str, dec)))
    except (gadgets.GadgetError, PolynomialError) as exc:
        raise InputError(str(exc)) from None
    return EXIT_OK


def _cmd_check(args, out) -> int:
    budget = _budget(args)
    if args.what == "lemma3":
        steps = census_mod.lemma3_check(gadgets.f_witness_chain(2), args.levels, args.domain, budget)
        _emit(out, [s.to_json() for s in steps])
        return EXIT_OK if all(s.ok for s in steps) else 1
    if args.what == "witnesses":
        rows = []
        for n in range(2, 2 + args.levels + 1):
            v = classify_finiteness(gadgets.f_witness_chain(n), args.domain, budget)
            ok = isinstance(v, Finite) and len(v.solutions) == 2 and v.solutions.height == 2 ** (2 ** (n - 1))
            rows.append({"n": n, "height": v.solutions.height if isinstance(v, Finite) else None, "ok": ok})
        _emit(out, rows)
        return EXIT_OK if all(r["ok"] for r in rows) else 1
    report = census_mod.soundness_audit(args.n, args.domain, budget)
    _emit(out, {"finite": report.finite_checked, "infinite": report.infinite_checked,
                "undetermined": report.undetermined, "discrepancies": list(report.discrepancies)})
    if report.discrepancies:
        return 1
    return EXIT_BUDGET if report.undetermined else EXIT_OK


_COMMANDS = {
    "lower": _cmd_lower, "encode-nonneg": _cmd_encode, "solve": _cmd_solve,
    "classify": _cmd_classify, "count": _cmd_count, "census": _cmd_census,
    "gadget": _cmd_gadget, "check": _cmd_check,
}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args, out)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


run = main


if __name__ == "__main__":
    sys.exit(main())
