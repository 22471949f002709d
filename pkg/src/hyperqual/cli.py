"""Command-line front end.

Subcommands: `check` (threshold model checking, with automatic fragment
dispatch), `eval` (reference evaluation over a lasso file), `values`
(print the finite value over-approximation), `translate` (Boolean
HyperLTL translation) and `dump-nba` (debug automaton dump).

Exit codes: 0 holds, 1 fails, 2 usage or input error, 3 unknown within
epsilon, 4 resource cap exceeded.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import checker
from .automata import state_cap
from .checker import Answer, Verdict
from .compiler import PredicateSpec, quantifier_elim_prop, quantifier_elim_temp
from .errors import (
    FragmentError, HyperqualError, StateCapExceededError, ThresholdError,
)
from .formula import Formula, Fragment, analyze, parse_formula, split_prefix
from .kripke import Lasso, parse_kripke
from .oracle import eval_quantified
from .rationals import format_rational, parse_rational
from .values import ValueSet, value_overapprox

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3
EXIT_CAP = 4

CHECK_MODES = ("auto", "prop", "prop-value", "temp-approx", "temp-pos", "temp-neg",
               "temp-af")


@dataclass
class CliConfig:
    mode: str
    formula_path: str | None = None
    kripke_path: str | None = None
    op: str | None = None                  # "ge" | "le"
    threshold: Fraction | None = None
    epsilon: Fraction | None = None
    bounds: tuple[int, int] | None = None
    output: str = "text"
    state_cap: int | None = None
    weights: ValueSet | None = None        # for `values` without a structure
    lassos_path: str | None = None
    pred: str | None = None                # for translate / dump-nba


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _parse_pred(text: str) -> PredicateSpec:
    kind, _, rest = text.partition(":")
    if kind in ("lt", "le", "gt", "ge"):
        return getattr(PredicateSpec, kind)(parse_rational(rest))
    if kind == "eq":
        return PredicateSpec.singleton(parse_rational(rest))
    if kind == "in":
        return PredicateSpec.in_set(parse_rational(v) for v in rest.split(","))
    raise ThresholdError(f"unknown predicate {text!r} (use lt:/le:/gt:/ge:/eq:/in:)")


def parse_lasso_file(text: str) -> tuple[tuple[str, ...], list[Lasso]]:
    """`ap:` header then one `lasso:` line per lasso, letters bracketed,
    `|` between stem and loop: lasso: [p=1 q=0] | [p=0 q=1] [p=1 q=1]"""
    ap: tuple[str, ...] | None = None
    lassos: list[Lasso] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        if key == "ap":
            ap = tuple(rest.split())
            continue
        if key != "lasso":
            raise HyperqualError(f"line {lineno}: expected `ap:` or `lasso:`")
        if ap is None:
            raise HyperqualError("lasso file must declare `ap:` first")
        if "|" not in rest:
            raise HyperqualError(f"line {lineno}: missing `|` between stem and loop")
        stem_text, loop_text = rest.split("|", 1)

        def letters(chunk):
            out = []
            for part in chunk.split("]"):
                part = part.strip()
                if not part:
                    continue
                if not part.startswith("["):
                    raise HyperqualError(f"line {lineno}: letters must be bracketed")
                fields = part[1:].split()
                values = {p: Fraction(0) for p in ap}
                for f in fields:
                    prop, _, w = f.partition("=")
                    if prop not in values:
                        raise HyperqualError(f"line {lineno}: unknown proposition {prop!r}")
                    values[prop] = parse_rational(w)
                out.append(tuple(values[p] for p in ap))
            return tuple(out)

        lassos.append(Lasso(ap, letters(stem_text), letters(loop_text)))
    return ap or (), lassos


def _dispatch_auto(phi: Formula, config: CliConfig):
    stats = analyze(phi)
    frag = stats.fragment
    if frag in (Fragment.BOOLEAN, Fragment.PROP):
        return "prop"
    if frag in (Fragment.TEMP_POS, Fragment.TEMP_NEG):
        v = config.threshold
        blocked = (frag is Fragment.TEMP_POS and config.op == "le" and v == 0) or \
                  (frag is Fragment.TEMP_NEG and config.op == "ge" and v == 1)
        if not blocked:
            return "temp-pos" if frag is Fragment.TEMP_POS else "temp-neg"
    prefix, _ = split_prefix(phi)
    quants = {q for q, _ in prefix}
    if config.op == "le" and quants <= {"exists"}:
        return "temp-af"
    if config.op == "ge" and quants <= {"forall"}:
        return "temp-af"
    return "temp-approx"


def run(config: CliConfig) -> tuple[int, str]:
    """Execute one CLI invocation; returns (exit code, report text)."""
    if config.state_cap is not None:
        os.environ["HYPERQUAL_STATE_CAP"] = str(config.state_cap)
    try:
        return _run(config)
    except StateCapExceededError as exc:
        return EXIT_CAP, f"error: {exc}"
    except HyperqualError as exc:
        return EXIT_USAGE, f"error: {exc}"
    finally:
        if config.state_cap is not None:
            os.environ.pop("HYPERQUAL_STATE_CAP", None)


def _verdict_report(verdict: Verdict, config: CliConfig) -> tuple[int, str]:
    code = {
        Answer.HOLDS: EXIT_HOLDS,
        Answer.FAILS: EXIT_FAILS,
        Answer.UNKNOWN_WITHIN_EPSILON: EXIT_UNKNOWN,
    }[verdict.answer]
    if config.output == "json":
        return code, json.dumps(verdict.to_json(), indent=2)
    parts = [f"{verdict.answer.value.upper()} (method: {verdict.method})"]
    if verdict.value is not None:
        parts.append(f"value = {format_rational(verdict.value)}")
    return code, "; ".join(parts)


def _run(config: CliConfig) -> tuple[int, str]:
    mode = config.mode
    if mode in CHECK_MODES and mode != "prop-value":
        phi = parse_formula(_read(config.formula_path))
        k = parse_kripke(_read(config.kripke_path))
        if config.op is None or config.threshold is None:
            return EXIT_USAGE, "error: check needs --op and --threshold"
        query = (PredicateSpec.ge if config.op == "ge" else PredicateSpec.le)(
            config.threshold)
        if mode == "auto":
            mode = _dispatch_auto(phi, config)
        if mode == "prop":
            stats = analyze(phi)
            if stats.fragment not in (Fragment.BOOLEAN, Fragment.PROP):
                return EXIT_USAGE, "error: formula is not propositional"
            verdict = checker.mc_prop(phi, k, query)
        elif mode in ("temp-pos", "temp-neg"):
            verdict = checker.mc_temp_fragment(phi, k, query)
        elif mode == "temp-af":
            verdict = checker.mc_temp_af(phi, k, query)
        else:  # temp-approx
            if config.epsilon is None:
                return EXIT_USAGE, \
                    "error: full HyperLTL_temp requires --epsilon (exact MC open)"
            verdict = checker.mc_temp_approx(
                phi, k, config.threshold, config.epsilon, config.op)
        return _verdict_report(verdict, config)

    if mode == "prop-value":
        phi = parse_formula(_read(config.formula_path))
        k = parse_kripke(_read(config.kripke_path))
        value = checker.mc_prop_value(phi, k)
        if config.output == "json":
            return EXIT_HOLDS, json.dumps(
                {"schema": "hyperqual-value-v1", "value": format_rational(value)})
        return EXIT_HOLDS, format_rational(value)

    if mode == "eval":
        phi = parse_formula(_read(config.formula_path))
        _, lassos = parse_lasso_file(_read(config.lassos_path))
        if not lassos:
            return EXIT_USAGE, "error: lasso file is empty"
        value = eval_quantified(phi, lassos)
        if config.output == "json":
            return EXIT_HOLDS, json.dumps(
                {"schema": "hyperqual-value-v1", "value": format_rational(value)})
        return EXIT_HOLDS, format_rational(value)

    if mode == "values":
        phi = parse_formula(_read(config.formula_path))
        if config.kripke_path:
            weights = ValueSet.of(parse_kripke(_read(config.kripke_path)).weights)
        elif config.weights is not None:
            weights = config.weights
        else:
            return EXIT_USAGE, "error: values needs --kripke or --weights"
        vset = value_overapprox(phi, weights)
        lines = [format_rational(v) for v in vset]
        if config.output == "json":
            return EXIT_HOLDS, json.dumps({"schema": "hyperqual-values-v1",
                                           "values": lines})
        return EXIT_HOLDS, "\n".join(lines)

    if mode == "translate":
        phi = parse_formula(_read(config.formula_path))
        pred = _parse_pred(config.pred or "ge:1")
        from .formula import print_formula
        return EXIT_HOLDS, print_formula(checker.booleanize(phi, pred))

    if mode == "dump-nba":
        phi = parse_formula(_read(config.formula_path))
        k = parse_kripke(_read(config.kripke_path))
        pred = _parse_pred(config.pred or "gt:0")
        stats = analyze(phi)
        if stats.fragment in (Fragment.BOOLEAN, Fragment.PROP):
            aut = quantifier_elim_prop(phi, k, pred)
        else:
            aut = quantifier_elim_temp(phi, k, pred)
        return EXIT_HOLDS, aut.dump()

    return EXIT_USAGE, f"error: unknown mode {mode!r}"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperqual",
        description="Threshold model checking for quantitative HyperLTL "
                    "over weighted Kripke structures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kripke=True):
        p.add_argument("--formula", required=True, help=".hq formula file")
        if kripke:
            p.add_argument("--kripke", required=True, help=".wks structure file")
        p.add_argument("--output", choices=("text", "json"), default="text")
        p.add_argument("--state-cap", type=int, default=None,
                       help="complementation state cap (default from "
                            "HYPERQUAL_STATE_CAP or %d)" % state_cap())

    check = sub.add_parser("check", help="decide a threshold query")
    common(check)
    check.add_argument("--mode", choices=CHECK_MODES, default="auto")
    check.add_argument("--op", choices=("ge", "le"), required=False)
    check.add_argument("--threshold", type=parse_rational, required=False)
    check.add_argument("--epsilon", type=parse_rational, default=None)

    value = sub.add_parser("value", help="exact propositional value")
    common(value)

    evalp = sub.add_parser("eval", help="reference evaluation over lassos")
    evalp.add_argument("--formula", required=True)
    evalp.add_argument("--lassos", required=True, help="lasso universe file")
    evalp.add_argument("--output", choices=("text", "json"), default="text")

    valuesp = sub.add_parser("values", help="print the value over-approximation")
    valuesp.add_argument("--formula", required=True)
    valuesp.add_argument("--kripke", default=None)
    valuesp.add_argument("--weights", default=None,
                         help="comma-separated weight set, e.g. 0,1/2,1")
    valuesp.add_argument("--output", choices=("text", "json"), default="text")

    trans = sub.add_parser("translate", help="Boolean HyperLTL translation")
    trans.add_argument("--formula", required=True)
    trans.add_argument("--pred", default="eq:1",
                       help="predicate, e.g. ge:1/2 or in:0,1/2")

    dump = sub.add_parser("dump-nba", help="dump the compiled automaton")
    common(dump)
    dump.add_argument("--pred", default="gt:0")

    return parser


def config_from_args(args: argparse.Namespace) -> CliConfig:
    command = args.command
    if command == "check":
        return CliConfig(
            mode=args.mode, formula_path=args.formula, kripke_path=args.kripke,
            op=args.op, threshold=args.threshold, epsilon=args.epsilon,
            output=args.output, state_cap=args.state_cap)
    if command == "value":
        return CliConfig(mode="prop-value", formula_path=args.formula,
                         kripke_path=args.kripke, output=args.output,
                         state_cap=args.state_cap)
    if command == "eval":
        return CliConfig(mode="eval", formula_path=args.formula,
                         lassos_path=args.lassos, output=args.output)
    if command == "values":
        weights = None
        if args.weights:
            weights = ValueSet.of(parse_rational(w) for w in args.weights.split(","))
        return CliConfig(mode="values", formula_path=args.formula,
                         kripke_path=args.kripke, weights=weights,
                         output=args.output)
    if command == "translate":
        return CliConfig(mode="translate", formula_path=args.formula, pred=args.pred)
    if command == "dump-nba":
        return CliConfig(mode="dump-nba", formula_path=args.formula,
                         kripke_path=args.kripke, pred=args.pred,
                         output=args.output, state_cap=args.state_cap)
    raise HyperqualError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        config = config_from_args(args)
    except HyperqualError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code, report = run(config)
    stream = sys.stderr if code in (EXIT_USAGE, EXIT_CAP) else sys.stdout
    print(report, file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())
