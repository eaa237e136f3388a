"""Command-line interface.

Exit codes: 0 ok, 1 input diagnostics, 2 inconsistent KB, 3 unsupported
fragment.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import syntax
from .analysis import Boundedness, TBoxKind, check_k_bounded
from .context import KBContext
from .dimensions import drill_down, roll_up
from .errors import (EngineError, InconsistentKBError, NoApplicableChainError,
                     NotADimensionVariableError, RecursiveTBoxError,
                     UnboundedOrUnknownError, UnsupportedFragmentError)
from .queries import Variable
from .reformulate import apply_move, relax_moves, restrain_moves
from .rewriting import k_rewrite, rewrite

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_INCONSISTENT = 2
EXIT_UNSUPPORTED = 3


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_kb(path: str) -> KBContext:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliError(EXIT_DIAGNOSTICS, f"cannot read {path}: {exc}")
    doc = syntax.parse_kb(text)
    if not doc.ok:
        lines = "\n".join(f"{path}:{d}" for d in doc.diagnostics)
        raise _CliError(EXIT_DIAGNOSTICS, lines)
    try:
        return KBContext(doc.tbox, doc.abox, doc.constraints)
    except ValueError as exc:
        raise _CliError(EXIT_DIAGNOSTICS, f"{path}: {exc}")


def _load_query(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliError(EXIT_DIAGNOSTICS, f"cannot read {path}: {exc}")
    doc = syntax.parse_query(text)
    if not doc.ok:
        lines = "\n".join(f"{path}:{d}" for d in doc.diagnostics)
        raise _CliError(EXIT_DIAGNOSTICS, lines)
    return doc.query


def _translate(exc: EngineError) -> _CliError:
    if isinstance(exc, InconsistentKBError):
        detail = f" (violates {exc.axiom}" if exc.axiom is not None else "("
        if exc.witness:
            detail += f", witness {', '.join(exc.witness)}"
        detail += ")" if exc.axiom is not None or exc.witness else ""
        return _CliError(EXIT_INCONSISTENT, f"inconsistent knowledge base{detail}")
    if isinstance(exc, (UnsupportedFragmentError, RecursiveTBoxError,
                        UnboundedOrUnknownError)):
        return _CliError(EXIT_UNSUPPORTED, str(exc))
    return _CliError(EXIT_DIAGNOSTICS, str(exc))


def _cmd_check(args) -> int:
    ctx = _load_kb(args.kb)
    cls = ctx.classification
    print(f"class: {cls.kind.value}")
    if cls.recursive_roles:
        print("recursive roles: " + ", ".join(sorted(cls.recursive_roles)))
    try:
        verdict = ctx.consistency
    except UnsupportedFragmentError as exc:
        print(f"consistent: unknown ({exc})")
        return EXIT_UNSUPPORTED
    if verdict.consistent:
        print("consistent: yes")
    else:
        witness = f", witness {', '.join(verdict.witness)}" if verdict.witness else ""
        print(f"consistent: no (violates {verdict.violated_axiom}{witness})")
        return EXIT_INCONSISTENT
    if ctx.constraints:
        cov = ctx.covers_report
        print(f"covers: {'yes' if cov.covers else 'no'}")
        for role, guard in cov.uncovered:
            print(f"  uncovered guard: {guard} (for {role})")
        if cls.kind is TBoxKind.RECURSION_SAFE:
            adm = ctx.admissibility
            print(f"admissible: {'yes' if adm.admissible else 'no'}")
            for check in adm.checks:
                for pair in check.unordered_pairs:
                    print(f"  unordered {check.constraint.role} pair: "
                          f"{pair[0]}, {pair[1]}")
                for pair in check.forbidden_pairs:
                    print(f"  forbidden {check.constraint.role} pair: "
                          f"{pair[0]}, {pair[1]}")
        if ctx.ell_value is not None:
            print(f"ell: {ctx.ell_value}")
    if cls.kind is TBoxKind.RECURSION_SAFE:
        k = ctx.resolved_k
        report = check_k_bounded(ctx.tbox, ctx.abox, k, ctx.bound_budget)
        print(f"k: {k} ({report.status.value})")
        if report.status is Boundedness.NOT_BOUNDED and report.witness:
            print("  witness chain: " + " -> ".join(report.witness))
    return EXIT_OK


def _cmd_rewrite(args) -> int:
    ctx = _load_kb(args.kb)
    q = _load_query(args.query)
    if ctx.classification.kind is TBoxKind.NON_RECURSIVE:
        result = rewrite(q, ctx.tbox, max_steps=ctx.max_steps)
    else:
        k = args.k if args.k is not None else ctx.resolved_k
        result = k_rewrite(q, ctx.tbox, k, max_steps=ctx.max_steps)
    sys.stdout.write(syntax.ucq_text(result.queries))
    return EXIT_OK


def _cmd_answer(args) -> int:
    ctx = _load_kb(args.kb)
    q = _load_query(args.query)
    answers = ctx.certain(q, k=args.k, method=args.method)
    if args.json:
        print(syntax.answers_json(answers))
    elif q.arity == 0:
        print("true" if answers.tuples else "false")
    else:
        sys.stdout.write(syntax.answers_text(answers))
    return EXIT_OK


def _cmd_moves(args) -> int:
    ctx = _load_kb(args.kb)
    q = _load_query(args.query)
    enumerate_moves = relax_moves if args.direction == "relax" else restrain_moves
    for move in enumerate_moves(q, ctx, data_driven=args.data):
        print(f"{move.move_id}  {move.rule_id:4} {move.justification.describe()}")
        print(f"    -> {syntax.query_text(move.result)}")
    return EXIT_OK


def _cmd_apply(args) -> int:
    ctx = _load_kb(args.kb)
    q = _load_query(args.query)
    for direction in (restrain_moves, relax_moves):
        for move in direction(q, ctx, data_driven=True):
            if move.move_id == args.move:
                print(syntax.query_text(apply_move(q, move)))
                return EXIT_OK
    raise _CliError(EXIT_DIAGNOSTICS, f"no applicable move with id {args.move}")


def _cmd_navigate(args) -> int:
    ctx = _load_kb(args.kb)
    q = _load_query(args.query)
    var = Variable(args.var.lstrip("?"))
    navigate = roll_up if args.direction == "up" else drill_down
    try:
        chains = navigate(q, var, ctx)
    except (NotADimensionVariableError, NoApplicableChainError) as exc:
        raise _CliError(EXIT_DIAGNOSTICS, str(exc))
    for chain in chains:
        rules = " then ".join(m.rule_id for m in chain.moves)
        src = ",".join(chain.source_categories) or "?"
        dst = ",".join(chain.target_categories) or "?"
        print(f"[{rules}] {src} -> {dst} via {chain.guard_role}")
        print(f"    -> {syntax.query_text(chain.result)}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app()
    if args.kb:
        text = Path(args.kb).read_text(encoding="utf-8")
        kb_id, problems = app.state.registry.load(text)
        if problems:
            raise _CliError(EXIT_DIAGNOSTICS,
                            "\n".join(str(d) for d in problems))
        print(f"loaded {args.kb} as {kb_id}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obdax",
        description="Query answering and reformulation over DL-Lite knowledge "
                    "bases with complex role inclusions")
    sub = parser.add_subparsers(dest="command", required=True)

    def kb_query(p, query: bool = True):
        p.add_argument("--kb", required=True, help="knowledge base file (.dlhr)")
        if query:
            p.add_argument("--query", required=True, help="query file (.cq)")

    p = sub.add_parser("check", help="validate, classify, and check consistency "
                                     "and admissibility")
    kb_query(p, query=False)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("rewrite", help="print the query rewriting, one disjunct per line")
    kb_query(p)
    p.add_argument("-k", type=int, default=None, help="chain bound for recursive roles")
    p.set_defaults(func=_cmd_rewrite)

    p = sub.add_parser("answer", help="certain answers of a query")
    kb_query(p)
    p.add_argument("--method", choices=["auto", "rewrite", "k-rewrite", "small-model"],
                   default="auto")
    p.add_argument("-k", type=int, default=None)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_answer)

    p = sub.add_parser("moves", help="enumerate reformulation moves")
    kb_query(p)
    p.add_argument("--direction", choices=["relax", "restrain"], required=True)
    p.add_argument("--data", action="store_true", help="include data-driven moves")
    p.set_defaults(func=_cmd_moves)

    p = sub.add_parser("apply", help="apply a move by id")
    kb_query(p)
    p.add_argument("--move", required=True, help="move id from 'moves'")
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("navigate", help="roll up or drill down a dimension variable")
    kb_query(p)
    p.add_argument("--var", required=True, help="variable, e.g. ?y")
    p.add_argument("--direction", choices=["up", "down"], required=True)
    p.set_defaults(func=_cmd_navigate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--kb", default=None, help="preload a knowledge base file")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except EngineError as exc:
        translated = _translate(exc)
        print(str(translated), file=sys.stderr)
        return translated.code


if __name__ == "__main__":
    sys.exit(main())
