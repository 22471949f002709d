"""Formula-to-automaton compilation.

Two quantifier-free front ends feed a shared quantifier-elimination
engine:

* propositional formulas compile into value-annotation automata whose
  states assign each temporal subformula a candidate satisfaction value,
  with recurrence sets enforcing that until/release annotations are
  realized;

* discounted temporal formulas compile, for a strict threshold, into a
  Boolean LTL formula over letter predicates by unfolding each
  discounted operator to the finite horizon where the discount factor
  crosses the threshold, then through a tableau translation.

Quantifier elimination then alternates projection (existential blocks)
with complementation sandwiches (universal blocks), intersecting with
the structure's self-product language at every level.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .automata import (
    Nba, complement, intersect, kripke_to_nba, project, reduce_nba, union_all,
)
from .errors import FragmentError, StructureError, ThresholdError
from .formula import (
    Atom, DiscountedRelease, DiscountedUntil, FalseF, Formula, Func, FuncKind,
    FuncSymbol, Next, Release, TrueF, Until, free_vars, has_discount, negate_dual,
    not_, split_prefix,
)
from .kripke import WeightedKripke, prop_for
from .rationals import ONE, ZERO
from .values import ValueSet, value_overapprox


# ---------------------------------------------------------------------------
# Predicates over [0,1]
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredicateSpec:
    kind: str                       # in-set | lt | gt | ge | le | singleton | interval
    values: frozenset = frozenset()
    lo: Fraction | None = None
    hi: Fraction | None = None
    lo_open: bool = False
    hi_open: bool = False

    @classmethod
    def in_set(cls, values):
        return cls("in-set", values=frozenset(Fraction(v) for v in values))

    @classmethod
    def singleton(cls, v):
        return cls("singleton", values=frozenset({Fraction(v)}))

    @classmethod
    def lt(cls, v):
        return cls("lt", hi=Fraction(v), hi_open=True)

    @classmethod
    def le(cls, v):
        return cls("le", hi=Fraction(v))

    @classmethod
    def gt(cls, v):
        return cls("gt", lo=Fraction(v), lo_open=True)

    @classmethod
    def ge(cls, v):
        return cls("ge", lo=Fraction(v))

    @classmethod
    def interval(cls, lo, hi, lo_open=False, hi_open=False):
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise ThresholdError("interval bounds out of order")
        return cls("interval", lo=lo, hi=hi, lo_open=lo_open, hi_open=hi_open)

    def contains(self, x) -> bool:
        x = Fraction(x)
        if self.kind in ("in-set", "singleton"):
            return x in self.values
        ok = True
        if self.lo is not None:
            ok = ok and (x > self.lo if self.lo_open else x >= self.lo)
        if self.hi is not None:
            ok = ok and (x < self.hi if self.hi_open else x <= self.hi)
        return ok

    def restrict(self, values) -> frozenset:
        return frozenset(v for v in values if self.contains(v))

    @property
    def bound(self) -> Fraction:
        if self.kind in ("lt", "le"):
            return self.hi
        if self.kind in ("gt", "ge"):
            return self.lo
        raise ThresholdError(f"predicate {self.kind} has no single bound")


def product_ap(base_ap, var_names) -> tuple[str, ...]:
    return tuple(prop_for(p, v) for v in var_names for p in base_ap)


def default_vars(n: int) -> tuple[str, ...]:
    return tuple(f"π{i}" for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# Generalized Buchi -> Buchi
# ---------------------------------------------------------------------------

def _generalized_to_nba(ap, weights, states, initial, transitions, acceptance_sets) -> Nba:
    """Counter construction; with no acceptance sets every state accepts."""
    sets = [frozenset(f) for f in acceptance_sets]
    m = len(sets)
    if m == 0:
        return Nba(tuple(ap), frozenset(weights), frozenset(states), frozenset(initial),
                   transitions, frozenset(states))

    def advance(i, q):
        while i < m and q in sets[i]:
            i += 1
        return i

    def step(i, q):
        j = advance(i, q)
        return (0 if j == m else j), j == m

    trans: dict = {}
    states2 = set()
    initial2 = frozenset((q, 0, False) for q in initial)
    frontier = list(initial2)
    states2.update(initial2)
    accepting = set()
    while frontier:
        node = frontier.pop()
        q, i, _ = node
        j, wrapped = step(i, q)
        out: dict = {}
        for letter, targets in transitions.get(q, {}).items():
            nxt = frozenset((t, j, wrapped) for t in targets)
            out[letter] = nxt
            for t in nxt:
                if t not in states2:
                    states2.add(t)
                    frontier.append(t)
        trans[node] = out
    accepting = frozenset(s for s in states2 if s[2])
    return Nba(tuple(ap), frozenset(weights), frozenset(states2), initial2, trans,
               frozenset(accepting))


# ---------------------------------------------------------------------------
# Propositional quantifier-free compilation (value annotations)
# ---------------------------------------------------------------------------

def _subformulas(phi: Formula) -> list[Formula]:
    """Unique subformulas, children before parents."""
    seen: dict[Formula, None] = {}

    def go(f):
        for c in f.children():
            go(c)
        if f not in seen:
            seen[f] = None

    go(phi)
    return list(seen)


def compile_prop_qf(
    phi: Formula,
    k: WeightedKripke,
    n: int,
    pred: PredicateSpec,
    var_names: tuple[str, ...] | None = None,
    reduce: bool = True,
) -> Nba:
    """Automaton accepting exactly the product traces of K^n on which the
    propositional formula's value satisfies the predicate.

    States annotate every subformula with a candidate value; atom slots
    are checked against letters, next slots against the successor state,
    and until/release slots unfold one step with a recurrence set forcing
    each annotation to be realized infinitely often.
    """
    if has_discount(phi):
        raise FragmentError("compile_prop_qf expects a discount-free formula")
    if var_names is None:
        var_names = default_vars(n)
    if len(var_names) != n:
        raise StructureError("need one variable name per trace copy")
    fv = free_vars(phi)
    if not fv <= set(var_names):
        raise StructureError(f"free variables {sorted(fv - set(var_names))} not covered")

    ap = product_ap(k.ap, var_names)
    ap_index = {p: i for i, p in enumerate(ap)}
    weights = ValueSet.of(k.weights)
    subs = _subformulas(phi)
    for sub in subs:
        if isinstance(sub, Atom) and prop_for(sub.prop, sub.var) not in ap_index:
            raise StructureError(f"unknown proposition {sub.prop!r} in formula")

    vset = {sub: value_overapprox(sub, weights) for sub in subs}
    atoms = [s for s in subs if isinstance(s, Atom)]
    nexts = [s for s in subs if isinstance(s, Next)]
    untils = [s for s in subs if isinstance(s, Until)]
    releases = [s for s in subs if isinstance(s, Release)]
    slots = atoms + nexts + untils + releases
    slot_pos = {s: i for i, s in enumerate(slots)}
    w_sorted = sorted(k.weights)

    def domain(slot):
        if isinstance(slot, Atom):
            return w_sorted
        if isinstance(slot, Next):
            return list(vset[slot.sub])
        return list(vset[slot])

    def valuation(assign: tuple) -> dict:
        val: dict = {}
        for sub in subs:
            if sub in slot_pos:
                val[sub] = assign[slot_pos[sub]]
            elif isinstance(sub, TrueF):
                val[sub] = ONE
            elif isinstance(sub, FalseF):
                val[sub] = ZERO
            elif isinstance(sub, Func):
                val[sub] = sub.sym.apply(tuple(val[a] for a in sub.args))
            else:
                raise AssertionError(sub)
        return val

    def consistent(val: dict) -> bool:
        for theta in untils:
            u, a, b = val[theta], val[theta.lhs], val[theta.rhs]
            if u < b or (u != b and u > a):
                return False
        for theta in releases:
            u, a, b = val[theta], val[theta.lhs], val[theta.rhs]
            if u > b or (u != b and u < a):
                return False
        return True

    states = []
    valuations = {}
    for assign in itertools.product(*[domain(s) for s in slots]):
        val = valuation(assign)
        if consistent(val):
            states.append(assign)
            valuations[assign] = val

    # successor lookup: key = (values of next-children, until/release slots)
    link_nodes = nexts + untils + releases

    def link_key(assign):
        val = valuations[assign]
        return tuple(
            val[x.sub] if isinstance(x, Next) else assign[slot_pos[x]]
            for x in link_nodes
        )

    by_key: dict = {}
    for st in states:
        by_key.setdefault(link_key(st), []).append(st)

    def allowed_until(u, a, b, dom):
        if u == b:
            return dom if a <= b else [x for x in dom if x <= b]
        return [x for x in dom if x >= u] if a == u else ([u] if u in dom else [])

    def allowed_release(u, a, b, dom):
        if u == b:
            return dom if a >= b else [x for x in dom if x >= b]
        return [x for x in dom if x <= u] if a == u else ([u] if u in dom else [])

    def successors(assign) -> frozenset:
        val = valuations[assign]
        options = []
        for x in link_nodes:
            if isinstance(x, Next):
                options.append([assign[slot_pos[x]]])
            elif isinstance(x, Until):
                options.append(allowed_until(
                    val[x], val[x.lhs], val[x.rhs], domain(x)))
            else:
                options.append(allowed_release(
                    val[x], val[x.lhs], val[x.rhs], domain(x)))
        out = set()
        for combo in itertools.product(*options):
            out.update(by_key.get(tuple(combo), ()))
        return frozenset(out)

    all_letters = list(itertools.product(w_sorted, repeat=len(ap)))
    atom_idx = [(slot_pos[a], ap_index[prop_for(a.prop, a.var)]) for a in atoms]

    transitions: dict = {}
    for st in states:
        succ = successors(st)
        if not succ:
            continue
        out = {}
        for letter in all_letters:
            if all(st[sp] == letter[li] for sp, li in atom_idx):
                out[letter] = succ
        transitions[st] = out

    initial = [st for st in states if pred.contains(valuations[st][phi])]
    acceptance = [
        frozenset(st for st in states if valuations[st][theta] == valuations[st][theta.rhs])
        for theta in untils + releases
    ]
    aut = _generalized_to_nba(ap, k.weights, states, initial, transitions, acceptance)
    aut = intersect(aut, kripke_to_nba(k, n, var_names))
    return reduce_nba(aut) if reduce else aut


# ---------------------------------------------------------------------------
# Temporal quantifier-free compilation (threshold transform + tableau)
# ---------------------------------------------------------------------------

# internal Boolean LTL over letter predicates, as tuples:
#   ("t",) ("f",) ("p", ap_index, op, c) ("not", x) ("and", l, r)
#   ("or", l, r) ("X", x) ("U", l, r) ("R", l, r)

_T = ("t",)
_F = ("f",)


def _mk_not(x):
    if x == _T:
        return _F
    if x == _F:
        return _T
    return ("not", x)


def _mk_and(a, b):
    if a == _F or b == _F:
        return _F
    if a == _T:
        return b
    if b == _T:
        return a
    return ("and", a, b)


def _mk_or(a, b):
    if a == _T or b == _T:
        return _T
    if a == _F:
        return b
    if b == _F:
        return a
    return ("or", a, b)


def _mk_xn(x, j):
    for _ in range(j):
        if x in (_T, _F):
            break
        x = ("X", x)
    return x


def _patom(index: int, op: str, c: Fraction):
    # constant-fold against the value range [0,1]
    if op == ">":
        if c < 0:
            return _T
        if c >= 1:
            return _F
    else:  # ">="
        if c <= 0:
            return _T
        if c > 1:
            return _F
    return ("p", index, op, c)


class _ThresholdTransform:
    """Rewrites `value(phi) bowtie v` into Boolean LTL over letter
    predicates. Strict comparisons distribute exactly through sup/inf;
    non-strict ones appear only under negations and are one-sided on
    non-lasso traces, which matches the automaton contract."""

    def __init__(self, ap_index: dict, horizon_slack: int = 0):
        self.ap_index = ap_index
        self.horizon_slack = horizon_slack
        self.horizons: dict = {}

    def tt(self, phi: Formula, op: str, v: Fraction):
        if op == "<":
            return _mk_not(self.tt(phi, ">=", v))
        if op == "<=":
            return _mk_not(self.tt(phi, ">", v))
        if isinstance(phi, TrueF):
            return _T if (ONE > v if op == ">" else ONE >= v) else _F
        if isinstance(phi, FalseF):
            return _T if (ZERO > v if op == ">" else ZERO >= v) else _F
        if isinstance(phi, Atom):
            return _patom(self.ap_index[prop_for(phi.prop, phi.var)], op, v)
        if isinstance(phi, Func):
            return self._tt_func(phi, op, v)
        if isinstance(phi, Next):
            return _mk_xn(self.tt(phi.sub, op, v), 1)
        if isinstance(phi, Until):
            return self._tt_until(phi.lhs, phi.rhs, op, v)
        if isinstance(phi, Release):
            flipped = ">=" if op == ">" else ">"
            return _mk_not(self.tt(Until(not_(phi.lhs), not_(phi.rhs)), flipped, ONE - v))
        if isinstance(phi, DiscountedUntil):
            return self._tt_udisc(phi, op, v)
        if isinstance(phi, DiscountedRelease):
            flipped = ">=" if op == ">" else ">"
            return _mk_not(self.tt(
                DiscountedUntil(phi.seq, not_(phi.lhs), not_(phi.rhs)), flipped, ONE - v))
        raise FragmentError(f"threshold transform: unexpected node {phi!r}")

    def _tt_func(self, phi: Func, op: str, v: Fraction):
        k = phi.sym.kind
        if k is FuncKind.NOT:
            return self.tt(phi.args[0], "<" if op == ">" else "<=", ONE - v)
        if k is FuncKind.OR:
            out = _F
            for a in phi.args:
                out = _mk_or(out, self.tt(a, op, v))
            return out
        if k is FuncKind.AND:
            out = _T
            for a in phi.args:
                out = _mk_and(out, self.tt(a, op, v))
            return out
        if k is FuncKind.IMPLIES:
            a, b = phi.args
            return _mk_or(self.tt(a, "<" if op == ">" else "<=", ONE - v),
                          self.tt(b, op, v))
        if k is FuncKind.IFF:
            a, b = phi.args
            both = Func(FuncSymbol(FuncKind.AND), (
                Func(FuncSymbol(FuncKind.IMPLIES), (a, b)),
                Func(FuncSymbol(FuncKind.IMPLIES), (b, a)),
            ))
            return self.tt(both, op, v)
        raise FragmentError(
            "temporal compilation supports Boolean connectives only"
        )

    def _tt_until(self, lhs, rhs, op, v):
        if op == ">=" and v <= 0:
            return _T
        return ("U", self.tt(lhs, op, v), self.tt(rhs, op, v))

    def _tt_udisc(self, phi: DiscountedUntil, op: str, v: Fraction):
        seq = phi.seq
        if op == ">":
            if v < 0:
                return _T
            if v >= 1:
                return _F
            if v == 0:
                return ("U", self.tt(phi.lhs, ">", ZERO), self.tt(phi.rhs, ">", ZERO))
            horizon = seq.first_index_at_most(v)
        else:
            if v <= 0:
                return _T
            if v > 1:
                return _F
            horizon = seq.first_index_below(v)
        self.horizons[id(phi)] = horizon
        horizon += self.horizon_slack
        out = _F
        prefix = _T
        for i in range(horizon):
            eta = seq.at(i)
            term = _mk_and(prefix, _mk_xn(self.tt(phi.rhs, op, v / eta), i))
            out = _mk_or(out, term)
            prefix = _mk_and(prefix, _mk_xn(self.tt(phi.lhs, op, v / eta), i))
        return out


def _nnf_ltl(f):
    kind = f[0]
    if kind in ("t", "f", "p"):
        return f
    if kind == "not":
        return _neg_ltl(f[1])
    if kind in ("and", "or"):
        return (kind, _nnf_ltl(f[1]), _nnf_ltl(f[2]))
    if kind == "X":
        return ("X", _nnf_ltl(f[1]))
    if kind in ("U", "R"):
        return (kind, _nnf_ltl(f[1]), _nnf_ltl(f[2]))
    raise AssertionError(f)


_FLIP = {">": "<=", ">=": "<", "<": ">=", "<=": ">"}


def _neg_ltl(f):
    kind = f[0]
    if kind == "t":
        return _F
    if kind == "f":
        return _T
    if kind == "p":
        return ("p", f[1], _FLIP[f[2]], f[3])
    if kind == "not":
        return _nnf_ltl(f[1])
    if kind == "and":
        return ("or", _neg_ltl(f[1]), _neg_ltl(f[2]))
    if kind == "or":
        return ("and", _neg_ltl(f[1]), _neg_ltl(f[2]))
    if kind == "X":
        return ("X", _neg_ltl(f[1]))
    if kind == "U":
        return ("R", _neg_ltl(f[1]), _neg_ltl(f[2]))
    if kind == "R":
        return ("U", _neg_ltl(f[1]), _neg_ltl(f[2]))
    raise AssertionError(f)


def _patom_holds(atom, letter) -> bool:
    _, idx, op, c = atom
    w = letter[idx]
    return {"<": w < c, "<=": w <= c, ">": w > c, ">=": w >= c}[op]


def _tableau_nba(f, ap, weights) -> Nba:
    """Classic on-the-fly tableau translation of NNF Boolean LTL (with
    letter-predicate literals) into a generalized Buchi automaton."""
    f = _nnf_ltl(f)
    nodes: list[dict] = []
    counter = itertools.count()
    INIT = "init"

    def split(node, g):
        out = {"name": next(counter), "incoming": set(node["incoming"]),
               "new": set(node["new"]), "old": set(node["old"]) | {g},
               "next": set(node["next"])}
        return out

    pending: list[dict] = []

    def expand(node):
        if not node["new"]:
            for other in nodes:
                if other["old"] == node["old"] and other["next"] == node["next"]:
                    other["incoming"] |= node["incoming"]
                    return
            nodes.append(node)
            pending.append({"name": next(counter), "incoming": {node["name"]},
                            "new": set(node["next"]), "old": set(), "next": set()})
            return
        g = node["new"].pop()
        kind = g[0]
        if kind == "f":
            return
        if kind in ("t", "p"):
            node["old"].add(g)
            expand(node)
        elif kind == "and":
            for part in (g[1], g[2]):
                if part not in node["old"]:
                    node["new"].add(part)
            node["old"].add(g)
            expand(node)
        elif kind == "X":
            node["next"].add(g[1])
            node["old"].add(g)
            expand(node)
        elif kind in ("or", "U", "R"):
            left = split(node, g)
            right = split(node, g)
            if kind == "or":
                left["new"].add(g[1])
                right["new"].add(g[2])
            elif kind == "U":
                left["new"].add(g[1])
                left["next"].add(g)
                right["new"].add(g[2])
            else:  # R unfolds to (r and l) or (r and X R)
                left["new"].update({g[1], g[2]})
                right["new"].add(g[2])
                right["next"].add(g)
            expand(left)
            expand(right)
        else:
            raise AssertionError(g)

    pending.append({"name": next(counter), "incoming": {INIT}, "new": {f},
                    "old": set(), "next": set()})
    while pending:
        expand(pending.pop())

    for node in nodes:
        node["old"] = frozenset(node["old"])
        node["next"] = frozenset(node["next"])

    all_letters = list(itertools.product(sorted(frozenset(weights)), repeat=len(ap)))

    def node_letters(node):
        lits = [g for g in node["old"] if g[0] == "p"]
        return [letter for letter in all_letters
                if all(_patom_holds(g, letter) for g in lits)]

    name_to_node = {node["name"]: node for node in nodes}
    states = {INIT} | set(name_to_node)
    transitions: dict = {s: {} for s in states}
    for node in nodes:
        letters = node_letters(node)
        for src in node["incoming"]:
            if src not in states:
                continue
            out = transitions[src]
            for letter in letters:
                out.setdefault(letter, set()).add(node["name"])
    transitions = {
        s: {letter: frozenset(ts) for letter, ts in out.items()}
        for s, out in transitions.items()
    }

    def until_subs(g, acc):
        if g[0] == "U":
            acc.add(g)
        if g[0] in ("and", "or", "U", "R"):
            until_subs(g[1], acc)
            until_subs(g[2], acc)
        elif g[0] in ("not", "X"):
            until_subs(g[1], acc)

    untils: set = set()
    until_subs(f, untils)
    acceptance = []
    for theta in sorted(untils, key=repr):
        acceptance.append(frozenset(
            node["name"] for node in nodes
            if theta not in node["old"] or theta[2] in node["old"]
        ) | {INIT})
    return _generalized_to_nba(ap, weights, states, {INIT}, transitions, acceptance)


def compile_temp_qf(
    phi: Formula,
    k: WeightedKripke,
    n: int,
    pred: PredicateSpec,
    var_names: tuple[str, ...] | None = None,
    horizon_slack: int = 0,
    reduce: bool = True,
) -> Nba:
    """Threshold automaton for a quantifier-free temporal formula.

    The contract is one-sided: every product trace whose value satisfies
    the strict predicate is accepted, and every accepted lasso satisfies
    it; non-lasso accepted traces may sit exactly on the threshold.
    """
    if pred.kind not in ("lt", "gt"):
        raise ThresholdError("temporal compilation handles strict thresholds only")
    if var_names is None:
        var_names = default_vars(n)
    if len(var_names) != n:
        raise StructureError("need one variable name per trace copy")
    fv = free_vars(phi)
    if not fv <= set(var_names):
        raise StructureError(f"free variables {sorted(fv - set(var_names))} not covered")
    ap = product_ap(k.ap, var_names)
    ap_index = {p: i for i, p in enumerate(ap)}
    for sub in _subformulas(phi):
        if isinstance(sub, Atom) and prop_for(sub.prop, sub.var) not in ap_index:
            raise StructureError(f"unknown proposition {sub.prop!r} in formula")
    transform = _ThresholdTransform(ap_index, horizon_slack)
    op = ">" if pred.kind == "gt" else "<"
    ltl = transform.tt(phi, op, pred.bound)
    aut = _tableau_nba(ltl, ap, k.weights)
    aut = intersect(aut, kripke_to_nba(k, n, var_names))
    return reduce_nba(aut) if reduce else aut


def temp_qf_horizons(phi: Formula, pred: PredicateSpec, k: WeightedKripke,
                     n: int, var_names=None) -> dict:
    """The unfolding horizon chosen for each discounted operator."""
    if var_names is None:
        var_names = default_vars(n)
    ap = product_ap(k.ap, var_names)
    transform = _ThresholdTransform({p: i for i, p in enumerate(ap)})
    transform.tt(phi, ">" if pred.kind == "gt" else "<", pred.bound)
    return transform.horizons


# ---------------------------------------------------------------------------
# Quantifier elimination
# ---------------------------------------------------------------------------

def _blocks_innermost_first(prefix):
    blocks = []
    for q, var in prefix:
        if blocks and blocks[-1][0] == q:
            blocks[-1][1].append(var)
        else:
            blocks.append((q, [var]))
    return list(reversed(blocks))


def quantifier_elim_prop(
    psi: Formula,
    k: WeightedKripke,
    pred: PredicateSpec,
    free: tuple[str, ...] = (),
    cap: int | None = None,
) -> Nba:
    """Automaton over the free-variable product alphabet accepting the
    encoded assignments whose satisfaction value lies in the predicate
    (with every assigned trace generated by K).

    Existential and universal quantifier blocks are eliminated innermost
    first; for each candidate value the block's automaton asserts the
    value is attained and, through a complement, that no better (for
    existentials) or worse (for universals) value is attainable.
    """
    prefix, body = split_prefix(psi)
    if has_discount(body):
        raise FragmentError("quantifier_elim_prop expects a discount-free formula")
    all_vars = tuple(free) + tuple(v for _, v in prefix)
    values = value_overapprox(body, ValueSet.of(k.weights))
    vals = list(values)

    kripke_cache: dict[int, Nba] = {}

    def kripke_level(level):
        if level not in kripke_cache:
            kripke_cache[level] = kripke_to_nba(k, level, all_vars[:level])
        return kripke_cache[level]

    # family at the deepest level: predicate-set -> automaton
    base_cache: dict[frozenset, Nba] = {}

    def base_family(subset: frozenset) -> Nba:
        if subset not in base_cache:
            base_cache[subset] = compile_prop_qf(
                body, k, len(all_vars), PredicateSpec.in_set(subset), all_vars)
        return base_cache[subset]

    family = base_family
    level = len(all_vars)
    for quant, block_vars in _blocks_innermost_first(prefix):
        m = len(block_vars)
        new_level = level - m
        keep = set(product_ap(k.ap, all_vars[:new_level]))
        inner = family
        single_cache: dict[Fraction, Nba] = {}

        def singleton(c, inner=inner, keep=keep, new_level=new_level,
                      quant=quant, cache=single_cache) -> Nba:
            if c in cache:
                return cache[c]
            if quant == "exists":
                rival = frozenset(x for x in vals if x > c)
            else:
                rival = frozenset(x for x in vals if x < c)
            attain = reduce_nba(intersect(
                project(inner(frozenset({c})), keep), kripke_level(new_level)))
            if rival:
                blocker = reduce_nba(intersect(
                    project(inner(rival), keep), kripke_level(new_level)))
                out = reduce_nba(intersect(attain, complement(blocker, cap)))
            else:
                out = attain
            cache[c] = out
            return out

        def new_family(subset: frozenset, singleton=singleton, new_level=new_level) -> Nba:
            parts = [singleton(c) for c in sorted(subset)]
            ap = product_ap(k.ap, all_vars[:new_level])
            return reduce_nba(union_all(parts, ap, k.weights))

        family = new_family
        level = new_level

    return family(pred.restrict(vals))


def quantifier_elim_temp(
    psi: Formula,
    k: WeightedKripke,
    pred: PredicateSpec,
    free: tuple[str, ...] = (),
    cap: int | None = None,
    horizon_slack: int = 0,
) -> Nba:
    """Threshold automaton for a temporal formula with quantifiers.

    Guarantees, for strict predicates: (1) if the value over K's traces
    satisfies the predicate and the free assignment is made of K-traces,
    the encoding is accepted; (2) every accepted lasso encoding consists
    of K-lassos whose value over K's lassos satisfies the reflexive
    closure of the predicate. Existential blocks project; universal
    blocks use a complement sandwich; `lt` routes through the dual
    formula at the mirrored threshold.
    """
    if pred.kind == "lt":
        return quantifier_elim_temp(
            negate_dual(psi), k, PredicateSpec.gt(ONE - pred.bound), free, cap,
            horizon_slack)
    if pred.kind != "gt":
        raise ThresholdError("temporal elimination handles strict thresholds only")

    prefix, body = split_prefix(psi)
    all_vars = tuple(free) + tuple(v for _, v in prefix)
    aut = compile_temp_qf(body, k, len(all_vars), pred, all_vars,
                          horizon_slack=horizon_slack)
    level = len(all_vars)
    for quant, block_vars in _blocks_innermost_first(prefix):
        new_level = level - len(block_vars)
        keep = set(product_ap(k.ap, all_vars[:new_level]))
        if quant == "exists":
            aut = reduce_nba(project(aut, keep))
        else:
            inner = intersect(complement(aut, cap), kripke_to_nba(k, level, all_vars[:level]))
            outer = complement(reduce_nba(project(inner, keep)), cap)
            aut = reduce_nba(intersect(
                outer, kripke_to_nba(k, new_level, all_vars[:new_level])))
        level = new_level
    return aut
