"""Top-level decision procedures.

Exact threshold checking and value synthesis for the propositional
logic; epsilon-approximate checking for the full temporal logic; exact
checking for the positive/negative and alternation-free temporal
fragments; plus the Boolean translation and prenexing used as an
independent cross-check path on Boolean structures.
"""

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .automata import AcceptedLasso, is_empty
from .compiler import PredicateSpec, compile_temp_qf, product_ap, \
    quantifier_elim_prop, quantifier_elim_temp
from .errors import FragmentError, InternalSoundnessError, ThresholdError
from .formula import (
    Atom, DiscountedRelease, DiscountedUntil, Exists, FalseF, Forall, Formula,
    Fragment, Func, FuncKind, Next, Release, TrueF, Until, analyze, attach_prefix,
    free_vars, negate_dual, not_, split_prefix, validate,
)
from .kripke import WeightedKripke
from .rationals import ONE, ZERO, format_rational
from .values import DiscountedLattice, ValueSet, nearest_above, nearest_below, \
    value_overapprox


class Answer(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN_WITHIN_EPSILON = "unknown-within-epsilon"


@dataclass(frozen=True)
class Verdict:
    answer: Answer
    method: str
    value: Fraction | None = None
    witness: AcceptedLasso | None = None

    def to_json(self) -> dict:
        out = {
            "schema": "hyperqual-verdict-v1",
            "answer": self.answer.value,
            "method": self.method,
            "value": format_rational(self.value) if self.value is not None else None,
        }
        if self.witness is not None:
            def letters(seq):
                return [
                    {p: format_rational(w) for p, w in zip(self.witness.lasso.ap, letter)}
                    for letter in seq
                ]
            out["witness"] = {
                "stem": letters(self.witness.lasso.stem),
                "loop": letters(self.witness.lasso.loop),
            }
        else:
            out["witness"] = None
        return out


def _require_closed(psi: Formula):
    validate(psi)
    if free_vars(psi):
        raise FragmentError("model checking expects a closed formula")


def _query_bound(query: PredicateSpec) -> Fraction:
    if query.kind not in ("ge", "le"):
        raise ThresholdError("queries must be ge or le thresholds")
    v = query.bound
    if not (ZERO <= v <= ONE):
        raise ThresholdError("threshold must lie in [0,1]")
    return v


# ---------------------------------------------------------------------------
# Propositional logic: exact
# ---------------------------------------------------------------------------

def mc_prop(psi: Formula, k: WeightedKripke, query: PredicateSpec,
            cap: int | None = None) -> Verdict:
    """Exact threshold verdict: the value-set automaton for the strict
    violation region is empty exactly when the query holds."""
    _require_closed(psi)
    v = _query_bound(query)
    if query.kind == "ge":
        region = PredicateSpec.interval(ZERO, v, hi_open=True)
    else:
        region = PredicateSpec.interval(v, ONE, lo_open=True)
    aut = quantifier_elim_prop(psi, k, region, cap=cap)
    answer = Answer.HOLDS if is_empty(aut) else Answer.FAILS
    return Verdict(answer, method="prop-exact")


def mc_prop_value(psi: Formula, k: WeightedKripke, check_all: bool = False,
                  cap: int | None = None) -> Fraction:
    """The exact satisfaction value over K's traces.

    Iterates candidate values downward and returns the first whose
    singleton automaton is nonempty; with check_all the remaining
    candidates are verified empty (value uniqueness)."""
    _require_closed(psi)
    candidates = sorted(value_overapprox(psi, ValueSet.of(k.weights)), reverse=True)
    found = None
    for c in candidates:
        aut = quantifier_elim_prop(psi, k, PredicateSpec.singleton(c), cap=cap)
        if not is_empty(aut):
            if found is None:
                found = c
                if not check_all:
                    return found
            else:
                raise InternalSoundnessError(
                    f"two candidate values nonempty: {found} and {c}")
    if found is None:
        raise InternalSoundnessError("no candidate value is attained")
    return found


# ---------------------------------------------------------------------------
# Temporal logic: approximate
# ---------------------------------------------------------------------------

def mc_temp_approx(psi: Formula, k: WeightedKripke, v: Fraction, epsilon: Fraction,
                   direction: str = "ge", cap: int | None = None) -> Verdict:
    """Approximate verdict, guaranteed outside the epsilon band.

    For a >= query: emptiness of the strict-below automaton certifies the
    value is at least v; nonemptiness of the strict-above automaton at
    the midpoint v - eps/2 is then disproved or confirmed to pin the
    answer. Certified answers are never wrong; inside the band the
    verdict may be UNKNOWN_WITHIN_EPSILON.
    """
    _require_closed(psi)
    v, epsilon = Fraction(v), Fraction(epsilon)
    if epsilon <= 0:
        raise ThresholdError("epsilon must be positive")
    if direction not in ("ge", "le"):
        raise ThresholdError("direction must be ge or le")
    method = "temp-approx"

    def empty_at(pred):
        return is_empty(quantifier_elim_temp(psi, k, pred, cap=cap))

    if direction == "ge":
        if empty_at(PredicateSpec.lt(v)):
            return Verdict(Answer.HOLDS, method)          # certified value >= v
        if not empty_at(PredicateSpec.gt(v)):
            return Verdict(Answer.HOLDS, method, value=v)  # value <= v and >= v
        mid = v - epsilon / 2
        if mid > 0 and empty_at(PredicateSpec.gt(mid)):
            return Verdict(Answer.FAILS, method)           # certified value <= mid < v
        # mid <= 0 means FAILS is never required (the value cannot be <= v-eps)
        return Verdict(Answer.UNKNOWN_WITHIN_EPSILON, method)
    else:
        if empty_at(PredicateSpec.gt(v)):
            return Verdict(Answer.HOLDS, method)           # certified value <= v
        if not empty_at(PredicateSpec.lt(v)):
            return Verdict(Answer.HOLDS, method, value=v)
        mid = v + epsilon / 2
        if mid < 1 and empty_at(PredicateSpec.lt(mid)):
            return Verdict(Answer.FAILS, method)
        return Verdict(Answer.UNKNOWN_WITHIN_EPSILON, method)


# ---------------------------------------------------------------------------
# Temporal logic: exact fragments
# ---------------------------------------------------------------------------

def _lattice_for(psi: Formula, k: WeightedKripke) -> DiscountedLattice:
    stats = analyze(psi)
    return DiscountedLattice(stats.discount_depth, stats.discount_seqs,
                             ValueSet.of(k.weights))


def mc_temp_fragment(psi: Formula, k: WeightedKripke, query: PredicateSpec,
                     cap: int | None = None) -> Verdict:
    """Exact verdict for the positive and negative temporal fragments.

    The possible values lie in the discounted lattice, so testing the
    strict threshold at a midpoint between the query bound and its
    nearest lattice neighbour decides the non-strict query exactly.
    """
    _require_closed(psi)
    v = _query_bound(query)
    stats = analyze(psi)
    method = "temp-pos" if stats.fragment is Fragment.TEMP_POS else "temp-neg"
    if stats.fragment is Fragment.TEMP_NEG:
        dual_query = (PredicateSpec.le(ONE - v) if query.kind == "ge"
                      else PredicateSpec.ge(ONE - v))
        inner = mc_temp_fragment(negate_dual(psi), k, dual_query, cap=cap)
        value = ONE - inner.value if inner.value is not None else None
        return Verdict(inner.answer, method, value=value)
    if stats.fragment is not Fragment.TEMP_POS:
        raise FragmentError(
            "exact fragment checking needs a positive or negative formula")

    lattice = _lattice_for(psi, k)
    if query.kind == "ge":
        if v == 0:
            return Verdict(Answer.HOLDS, method, value=None)  # trivially true
        below = nearest_below(lattice, v)
        mid = (below + v) / 2
        empty = is_empty(quantifier_elim_temp(psi, k, PredicateSpec.lt(mid), cap=cap))
        return Verdict(Answer.HOLDS if empty else Answer.FAILS, method)
    else:
        if v == 1:
            return Verdict(Answer.HOLDS, method, value=None)
        if v == 0:
            raise ThresholdError(
                "threshold 0 is not allowed for <= queries on the positive fragment")
        above = nearest_above(lattice, v)
        mid = (v + above) / 2
        empty = is_empty(quantifier_elim_temp(psi, k, PredicateSpec.gt(mid), cap=cap))
        return Verdict(Answer.HOLDS if empty else Answer.FAILS, method)


def mc_temp_af(psi: Formula, k: WeightedKripke, query: PredicateSpec,
               cap: int | None = None) -> Verdict:
    """Exact verdict for alternation-free prefixes, in the direction the
    quantifier supports: <= for purely existential, >= for purely
    universal prefixes."""
    _require_closed(psi)
    v = _query_bound(query)
    prefix, body = split_prefix(psi)
    quants = {q for q, _ in prefix}
    method = "temp-af"
    if query.kind == "le":
        if quants - {"exists"}:
            raise FragmentError(
                "alternation-free <= queries need a purely existential prefix "
                "(use the approximate checker otherwise)")
        aut = quantifier_elim_temp(psi, k, PredicateSpec.gt(v), cap=cap)
        return Verdict(Answer.HOLDS if is_empty(aut) else Answer.FAILS, method)
    else:
        if quants - {"forall"}:
            raise FragmentError(
                "alternation-free >= queries need a purely universal prefix "
                "(use the approximate checker otherwise)")
        dual = negate_dual(psi)
        aut = quantifier_elim_temp(dual, k, PredicateSpec.gt(ONE - v), cap=cap)
        return Verdict(Answer.HOLDS if is_empty(aut) else Answer.FAILS, method)


# ---------------------------------------------------------------------------
# Boolean translation
# ---------------------------------------------------------------------------

_BOOL_W = ValueSet.of((0, 1))


def _reflect(values: frozenset) -> frozenset:
    return frozenset(ONE - x for x in values)


def booleanize(psi: Formula, pred: PredicateSpec) -> Formula:
    """Classical HyperLTL formula equivalent, over Boolean trace sets, to
    `value of psi lies in the predicate`.

    Follows the value-set recursion: each connective enumerates the
    finitely many argument values compatible with the predicate. The
    positive-Boolean-closure intermediate is prenexed before returning.
    """
    validate(psi)

    def vset(phi: Formula) -> ValueSet:
        return value_overapprox(phi, _BOOL_W)

    def within(phi, lo, hi, lo_open=False, hi_open=False) -> frozenset:
        spec = PredicateSpec.interval(lo, hi, lo_open, hi_open)
        return spec.restrict(vset(phi))

    def bool_of(phi: Formula, p: frozenset) -> Formula:
        if isinstance(phi, TrueF):
            return TrueF() if ONE in p else FalseF()
        if isinstance(phi, FalseF):
            return TrueF() if ZERO in p else FalseF()
        if isinstance(phi, Atom):
            zero, one = ZERO in p, ONE in p
            if zero and one:
                return TrueF()
            if one:
                return phi
            if zero:
                return not_(phi)
            return FalseF()
        if isinstance(phi, Func):
            arg_sets = [list(vset(a)) for a in phi.args]
            disjuncts = []
            for combo in itertools.product(*arg_sets):
                if phi.sym.apply(combo) in p:
                    parts = [bool_of(a, frozenset({d}))
                             for a, d in zip(phi.args, combo)]
                    disjuncts.append(_fold("and", parts))
            return _fold("or", disjuncts)
        if isinstance(phi, Next):
            return Next(bool_of(phi.sub, p))
        if isinstance(phi, Until):
            cands = sorted(p & frozenset(vset(phi)))
            disjuncts = [_until_singleton(phi, c) for c in cands]
            return _fold("or", disjuncts)
        if isinstance(phi, Release):
            rewritten = not_(Until(not_(phi.lhs), not_(phi.rhs)))
            return bool_of(rewritten, p)
        if isinstance(phi, Forall):
            cands = sorted(p & frozenset(vset(phi)))
            disjuncts = []
            for c in cands:
                attained = Exists(phi.var, bool_of(phi.sub, frozenset({c})))
                floor = Forall(phi.var, bool_of(phi.sub, within(phi.sub, c, ONE)))
                disjuncts.append(attained & floor)
            return _fold("or", disjuncts)
        if isinstance(phi, Exists):
            cands = sorted(p & frozenset(vset(phi)))
            disjuncts = []
            for c in cands:
                attained = Exists(phi.var, bool_of(phi.sub, frozenset({c})))
                ceiling = Forall(phi.var, bool_of(phi.sub, within(phi.sub, ZERO, c)))
                disjuncts.append(attained & ceiling)
            return _fold("or", disjuncts)
        raise FragmentError(f"booleanize: unsupported node {phi!r}")

    def _until_singleton(phi: Until, c: Fraction) -> Formula:
        at_least = Until(bool_of(phi.lhs, within(phi.lhs, c, ONE)),
                         bool_of(phi.rhs, within(phi.rhs, c, ONE)))
        beyond = Until(bool_of(phi.lhs, within(phi.lhs, c, ONE, lo_open=True)),
                       bool_of(phi.rhs, within(phi.rhs, c, ONE, lo_open=True)))
        return at_least & not_(beyond)

    p0 = pred.restrict(vset(psi))
    return prenex_normalize(bool_of(psi, frozenset(p0)))


def _fold(op: str, parts: list[Formula]) -> Formula:
    if not parts:
        return FalseF() if op == "or" else TrueF()
    out = parts[0]
    for part in parts[1:]:
        out = (out | part) if op == "or" else (out & part)
    return out


# ---------------------------------------------------------------------------
# Prenex normalization
# ---------------------------------------------------------------------------

def alternation_depth(psi: Formula) -> int:
    """Maximal number of quantifier switches along a branch."""

    def go(phi, last):
        if isinstance(phi, (Exists, Forall)):
            q = "exists" if isinstance(phi, Exists) else "forall"
            bump = 1 if (last is not None and last != q) else 0
            return bump + go(phi.sub, q)
        return max((go(c, last) for c in phi.children()), default=0)

    return go(psi, None)


def prenex_normalize(psi: Formula) -> Formula:
    """Pull quantifiers from a positive Boolean combination to the front.

    Bound variables are renamed apart, then the children's prefixes are
    merged blockwise (existential blocks zipped with existential blocks,
    and so on), which keeps the quantifier multiset and adds at most one
    alternation.
    """
    counter = itertools.count(1)

    def rename(phi, env):
        if isinstance(phi, (Exists, Forall)):
            fresh = f"x{next(counter)}"
            sub = rename(phi.sub, {**env, phi.var: fresh})
            return type(phi)(fresh, sub)
        if isinstance(phi, Atom):
            return Atom(phi.prop, env.get(phi.var, phi.var))
        if isinstance(phi, Func):
            return Func(phi.sym, tuple(rename(a, env) for a in phi.args))
        if isinstance(phi, Next):
            return Next(rename(phi.sub, env))
        if isinstance(phi, Until):
            return Until(rename(phi.lhs, env), rename(phi.rhs, env))
        if isinstance(phi, Release):
            return Release(rename(phi.lhs, env), rename(phi.rhs, env))
        if isinstance(phi, (TrueF, FalseF)):
            return phi
        if isinstance(phi, DiscountedUntil):
            return DiscountedUntil(phi.seq, rename(phi.lhs, env), rename(phi.rhs, env))
        if isinstance(phi, DiscountedRelease):
            return DiscountedRelease(phi.seq, rename(phi.lhs, env), rename(phi.rhs, env))
        raise AssertionError(phi)

    def to_blocks(prefix):
        blocks = []
        for q, v in prefix:
            if blocks and blocks[-1][0] == q:
                blocks[-1][1].append(v)
            else:
                blocks.append((q, [v]))
        return blocks

    def merge(b1, b2):
        # align both block lists to start existentially (first block may
        # be empty) and zip position-wise
        def pad(blocks):
            if blocks and blocks[0][0] == "forall":
                return [("exists", [])] + blocks
            return list(blocks)
        p1, p2 = pad(b1), pad(b2)
        out = []
        for i in range(max(len(p1), len(p2))):
            q = "exists" if i % 2 == 0 else "forall"
            vars_ = []
            if i < len(p1):
                vars_.extend(p1[i][1])
            if i < len(p2):
                vars_.extend(p2[i][1])
            if vars_:
                out.append((q, vars_))
        return out

    def quantifier_free_below(phi) -> bool:
        return not any(isinstance(n, (Exists, Forall)) for n in _walk(phi))

    def _walk(phi):
        yield phi
        for c in phi.children():
            yield from _walk(c)

    def pull(phi):
        if isinstance(phi, (Exists, Forall)):
            q = "exists" if isinstance(phi, Exists) else "forall"
            blocks, matrix = pull(phi.sub)
            if blocks and blocks[0][0] == q:
                blocks = [(q, [phi.var] + blocks[0][1])] + blocks[1:]
            else:
                blocks = [(q, [phi.var])] + blocks
            return blocks, matrix
        if isinstance(phi, Func) and phi.sym.kind in (FuncKind.AND, FuncKind.OR):
            parts = [pull(a) for a in phi.args]
            blocks = []
            for b, _ in parts:
                blocks = merge(blocks, b)
            matrix = _fold("and" if phi.sym.kind is FuncKind.AND else "or",
                           [m for _, m in parts])
            return blocks, matrix
        if quantifier_free_below(phi):
            return [], phi
        raise FragmentError(
            "prenexing is defined on the positive Boolean closure only "
            "(no quantifier below negation or temporal operators)")

    renamed = rename(psi, {})
    blocks, matrix = pull(renamed)
    prefix = [(q, v) for q, vs in blocks for v in vs]
    return attach_prefix(prefix, matrix)
