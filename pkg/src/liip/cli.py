"""Command-line front end.

Exit codes: 0 for success / Valid / true, 1 for violation / Invalid /
false, 2 for Unknown, 3 for usage errors (bad flags, unreadable or
unparseable input).  Output is deterministic for fixed inputs and flags;
--json switches every subcommand to a stable machine-readable form.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import decide as decide_mod
from . import histories, kernel, semantics
from .syntax import (CM, LiipSyntaxError, parse_formula, parse_term, render,
                     render_term, subformula_closure)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liip", description=__doc__.splitlines()[0])
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("parse", help="echo the core and sugared forms of a formula")
    q.add_argument("formula")

    q = sub.add_parser("check", help="check a proof script against the law corpus")
    q.add_argument("script", type=Path)
    q.add_argument("--corpus-dir", type=Path, default=None)

    q = sub.add_parser("corpus", help="verify the bundled law corpus")
    q.add_argument("--corpus-dir", type=Path, default=None)

    q = sub.add_parser("decide", help="search for a countermodel / certify validity")
    q.add_argument("formula")
    q.add_argument("--max-states", type=int, default=4)
    q.add_argument("--jobs", type=int, default=1,
                   help="accepted for compatibility; results never depend on it")

    q = sub.add_parser("eval", help="evaluate a formula at a state of a model file")
    q.add_argument("model", type=Path)
    q.add_argument("state")
    q.add_argument("formula")

    q = sub.add_parser("trace", help="query an input-history trace file")
    q.add_argument("trace", type=Path)
    q.add_argument("query", nargs="+",
                   help="knows <agent> <term> | access <term> <i> <j> | sat <formula>")
    q.add_argument("--depth", type=int, default=None,
                   help="history depth of the generated model (sat queries)")

    q = sub.add_parser("filter", help="print the filtration of a model through a formula's closure")
    q.add_argument("model", type=Path)
    q.add_argument("formula")

    q = sub.add_parser("validate", help="validate a model file against the semantic interface")
    q.add_argument("model", type=Path)
    return p


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _load_model_file(path: Path) -> semantics.KripkeModel:
    try:
        text = path.read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None
    return semantics.load_model(text, validate=False)


def _cmd_parse(args) -> int:
    f = parse_formula(args.formula)
    core, sugar = render(f), render(f, sugar=True)
    _emit(args, {"core": core, "sugar": sugar}, f"core:  {core}\nsugar: {sugar}")
    return EXIT_OK


def _cmd_check(args) -> int:
    _, db = kernel.run_corpus(args.corpus_dir)
    try:
        text = args.script.read_text()
    except OSError as e:
        raise UsageError(f"cannot read {args.script}: {e}") from None
    script = kernel.parse_script(text)
    report = kernel.check_proof(script, db)
    payload = {"proof": script.name, "ok": report.ok,
               "violations": [str(v) for v in report.violations]}
    _emit(args, payload, str(report))
    return EXIT_OK if report.ok else EXIT_FAIL


def _cmd_corpus(args) -> int:
    report, _ = kernel.run_corpus(args.corpus_dir)
    payload = {
        "ok": report.ok,
        "verified": report.verified_count,
        "total": len(report.entries),
        "laws": [{"group": e.group, "label": e.label, "title": e.title,
                  "lines": list(e.line_counts), "ok": e.ok}
                 for e in report.entries],
    }
    if report.failure is not None:
        payload["failure"] = str(report.failure)
    _emit(args, payload, str(report))
    return EXIT_OK if report.ok else EXIT_FAIL


def _cmd_decide(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    f = parse_formula(args.formula)
    verdict = decide_mod.decide(f, max_states=args.max_states)
    if isinstance(verdict, decide_mod.Invalid):
        serialized = semantics.serialize_model(verdict.model)
        state = str(verdict.state)
        payload = {"verdict": "invalid", "state": state, "model": serialized}
        _emit(args, payload,
              f"invalid: fails at state {state} of the model\n{serialized}")
        return EXIT_FAIL
    if isinstance(verdict, decide_mod.Valid):
        payload = {"verdict": "valid", "bound": verdict.bound}
        _emit(args, payload,
              f"valid: exhausted the finite-model bound of {verdict.bound} states")
        return EXIT_OK
    payload = {"verdict": "unknown", "searched": verdict.bound}
    _emit(args, payload,
          f"unknown: no countermodel with up to {verdict.bound} states; "
          f"the exhaustive bound is {2 ** len(subformula_closure(parse_formula('~(' + args.formula + ')')))} states")
    return EXIT_UNKNOWN


def _cmd_eval(args) -> int:
    model = _load_model_file(args.model)
    report = semantics.validate_model(model)
    if not report.passed:
        raise UsageError(f"model fails validation:\n{report}")
    if args.state not in model.states:
        raise UsageError(f"unknown state {args.state!r}")
    f = parse_formula(args.formula)
    value = semantics.satisfies(model, args.state, f)
    _emit(args, {"state": args.state, "formula": render(f), "true": value},
          f"{render(f, sugar=True)} at {args.state}: {'true' if value else 'false'}")
    return EXIT_OK if value else EXIT_FAIL


def _cmd_trace(args) -> int:
    try:
        text = args.trace.read_text()
    except OSError as e:
        raise UsageError(f"cannot read {args.trace}: {e}") from None
    history = histories.parse_trace(text)
    query = args.query
    kind = query[0]

    if kind == "knows":
        if len(query) != 3:
            raise UsageError("usage: trace <file> knows <agent> <term>")
        agent = query[1]
        term = parse_term(query[2])
        value = histories.knows_at(agent, history, term)
        _emit(args, {"query": "knows", "true": value},
              f"knows {agent} {render_term(term)}: {'true' if value else 'false'}")
        return EXIT_OK if value else EXIT_FAIL

    if kind == "access":
        if len(query) != 4:
            raise UsageError("usage: trace <file> access <term> <i> <j> "
                             "(states are prefix lengths)")
        term = parse_term(query[1])
        try:
            i, j = int(query[2]), int(query[3])
        except ValueError:
            raise UsageError("access states are prefix lengths (integers)") from None
        if not (0 <= i <= len(history) and 0 <= j <= len(history)):
            raise UsageError(f"prefix lengths must be within 0..{len(history)}")
        s = histories.History(history.events[:i])
        t = histories.History(history.events[:j])
        value = histories.concrete_access(term, s, t)
        _emit(args, {"query": "access", "true": value},
              f"access {render_term(term)} {i} {j}: {'true' if value else 'false'}")
        return EXIT_OK if value else EXIT_FAIL

    if kind == "sat":
        if len(query) != 2:
            raise UsageError("usage: trace <file> sat <formula>")
        f = parse_formula(query[1])
        depth = args.depth if args.depth is not None else len(history)
        if depth < len(history):
            raise UsageError("--depth must cover the trace length")
        agents = {CM} | {a for a, _ in history.events}
        pool = histories.msgs(history)
        if not pool and depth > 0:
            raise UsageError("empty trace needs --depth 0")
        model = histories.generate_model(agents, pool, depth)
        value = semantics.satisfies(model, history, f)
        note = (f"relative to the generated finite model "
                f"(depth {depth}, {len(model.states)} states), an "
                f"approximation of the unbounded history space")
        _emit(args, {"query": "sat", "true": value, "note": note,
                     "states": len(model.states)},
              f"sat {render(f, sugar=True)}: {'true' if value else 'false'}\n# {note}")
        return EXIT_OK if value else EXIT_FAIL

    raise UsageError(f"unknown trace query {kind!r}")


def _cmd_filter(args) -> int:
    model = _load_model_file(args.model)
    report = semantics.validate_model(model)
    if not report.passed:
        raise UsageError(f"model fails validation:\n{report}")
    f = parse_formula(args.formula)
    gamma = subformula_closure(f)
    flt = semantics.minimal_filtration(model, gamma)
    serialized = semantics.serialize_model(flt)
    _emit(args, {"states": len(flt.states), "model": serialized},
          f"# filtration through {len(gamma)} formulas, {len(flt.states)} classes\n"
          f"{serialized}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    model = _load_model_file(args.model)
    report = semantics.validate_model(model)
    payload = {"ok": report.passed,
               "violations": [str(v) for v in report.violations]}
    _emit(args, payload, str(report))
    return EXIT_OK if report.passed else EXIT_FAIL


_COMMANDS = {
    "parse": _cmd_parse,
    "check": _cmd_check,
    "corpus": _cmd_corpus,
    "decide": _cmd_decide,
    "eval": _cmd_eval,
    "trace": _cmd_trace,
    "filter": _cmd_filter,
    "validate": _cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, LiipSyntaxError, semantics.ModelError, ValueError) as e:
        print(f"liip: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
