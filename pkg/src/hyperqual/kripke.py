"""Weighted Kripke structures, lassos and trace-assignment encoding.

States carry a total weight map over the atomic propositions; the
transition relation is total so every path is infinite. Traces of
interest are lassos (ultimately periodic traces), represented by a stem
and a nonempty loop of letters, each letter a tuple of weights aligned
with the structure's proposition order.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError, StructureError
from .rationals import ZERO, format_rational, parse_rational

Letter = tuple[Fraction, ...]


def prop_for(prop: str, var: str) -> str:
    """Proposition name used in self-products and encoded assignments."""
    return f"{prop}@{var}"


@dataclass(frozen=True)
class Lasso:
    """The trace stem . loop^omega over propositions `ap`."""

    ap: tuple[str, ...]
    stem: tuple[Letter, ...]
    loop: tuple[Letter, ...]

    def __post_init__(self):
        if not self.loop:
            raise StructureError("lasso loop must be nonempty")
        for letter in self.stem + self.loop:
            if len(letter) != len(self.ap):
                raise StructureError("letter width does not match proposition count")

    def letter_at(self, i: int) -> Letter:
        if i < len(self.stem):
            return self.stem[i]
        return self.loop[(i - len(self.stem)) % len(self.loop)]

    def value(self, i: int, prop: str) -> Fraction:
        return self.letter_at(i)[self.ap.index(prop)]

    def unfold(self, n: int) -> tuple[Letter, ...]:
        return tuple(self.letter_at(i) for i in range(n))

    def normalized(self) -> "Lasso":
        """Minimal stem, primitive loop: the canonical representation."""
        stem, loop = list(self.stem), list(self.loop)
        while stem and stem[-1] == loop[-1]:
            stem.pop()
            loop = [loop[-1]] + loop[:-1]
        for d in range(1, len(loop) + 1):
            if len(loop) % d == 0 and loop[:d] * (len(loop) // d) == loop:
                loop = loop[:d]
                break
        return Lasso(self.ap, tuple(stem), tuple(loop))

    def trace_equal(self, other: "Lasso") -> bool:
        if self.ap != other.ap:
            return False
        n = max(len(self.stem), len(other.stem)) + 2 * math.lcm(len(self.loop), len(other.loop))
        return self.unfold(n) == other.unfold(n)

    def __str__(self):
        def fmt(letter):
            return "[" + " ".join(
                f"{p}={format_rational(w)}" for p, w in zip(self.ap, letter)
            ) + "]"
        return " ".join(map(fmt, self.stem)) + " | " + " ".join(map(fmt, self.loop))


@dataclass(frozen=True)
class LassoAssignment:
    """Ordered binding of trace variables to lassos over a common alphabet."""

    bindings: tuple[tuple[str, Lasso], ...]

    def __post_init__(self):
        aps = {l.ap for _, l in self.bindings}
        if len(aps) > 1:
            raise StructureError("all bound lassos must share the same propositions")
        names = [v for v, _ in self.bindings]
        if len(set(names)) != len(names):
            raise StructureError("duplicate trace variable in assignment")

    @classmethod
    def of(cls, **bindings: Lasso) -> "LassoAssignment":
        return cls(tuple(bindings.items()))

    def lookup(self, var: str) -> Lasso:
        for v, l in self.bindings:
            if v == var:
                return l
        raise StructureError(f"trace variable {var!r} not bound")


def encode_assignment(assignment: LassoAssignment) -> Lasso:
    """Zip the bound lassos into a single product trace.

    The result ranges over propositions p@var; its stem is as long as the
    longest stem and its loop length is the lcm of the loop lengths, so
    it is itself a lasso.
    """
    bindings = assignment.bindings
    if not bindings:
        return Lasso(ap=(), stem=(), loop=((),))
    ap = tuple(prop_for(p, v) for v, l in bindings for p in l.ap)
    stem_len = max(len(l.stem) for _, l in bindings)
    loop_len = math.lcm(*[len(l.loop) for _, l in bindings])

    def joint(i: int) -> Letter:
        out = []
        for _, l in bindings:
            out.extend(l.letter_at(i))
        return tuple(out)

    stem = tuple(joint(i) for i in range(stem_len))
    loop = tuple(joint(i) for i in range(stem_len, stem_len + loop_len))
    return Lasso(ap, stem, loop)


@dataclass(frozen=True)
class WeightedKripke:
    states: tuple
    weights: frozenset
    initial: frozenset
    transitions: dict
    labels: dict
    ap: tuple[str, ...]

    def __post_init__(self):
        if not self.initial:
            raise StructureError("initial state set must be nonempty")
        for s in self.states:
            succs = self.transitions.get(s, ())
            if not succs:
                raise StructureError(f"state {s} has no successor")
            for t in succs:
                if t not in self.labels:
                    raise StructureError(f"transition target {t} is not a declared state")
        for s in self.initial:
            if s not in self.labels:
                raise StructureError(f"initial state {s} is not a declared state")
        for s, lab in self.labels.items():
            for p, w in lab.items():
                if w not in self.weights:
                    raise StructureError(
                        f"label {p}={format_rational(w)} on state {s} is outside the weight set"
                    )

    def letter(self, state) -> Letter:
        lab = self.labels[state]
        return tuple(lab[p] for p in self.ap)

    @classmethod
    def make(cls, states, weights, initial, transitions, labels, ap=None):
        """Build and validate; labels may omit propositions (default 0)."""
        states = tuple(states)
        weights = frozenset(Fraction(w) for w in weights)
        if ap is None:
            ap = sorted({p for lab in labels.values() for p in lab})
        ap = tuple(ap)
        full_labels = {}
        omitted = False
        for s in states:
            lab = {}
            for p in ap:
                if p in labels.get(s, {}):
                    lab[p] = Fraction(labels[s][p])
                else:
                    lab[p] = ZERO
                    omitted = True
            full_labels[s] = lab
        if omitted and ZERO not in weights:
            raise StructureError("omitted labels default to 0, but 0 is not in the weight set")
        trans = {s: tuple(transitions.get(s, ())) for s in states}
        return cls(states, weights, frozenset(initial), trans, full_labels, ap)


def parse_kripke(text: str) -> WeightedKripke:
    """Parse the `.wks` format: weights/states/init sections, then
    `trans:` lines `a -> b` and `labels:` lines `state p=w ...`."""
    weights: list[Fraction] = []
    states: list[str] = []
    init: list[str] = []
    trans: list[tuple[str, str, int]] = []
    labels: dict[str, dict[str, Fraction]] = {}
    section = None
    seen = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip() if ":" in line else None
        if head in ("weights", "states", "init", "trans", "labels"):
            if head in seen:
                raise ParseError(f"duplicate section {head!r}", lineno)
            seen.add(head)
            section = head
            line = line.split(":", 1)[1].strip()
            if not line:
                continue
        if section == "weights":
            weights.extend(parse_rational(t, lineno) for t in line.replace(",", " ").split())
        elif section == "states":
            states.extend(line.replace(",", " ").split())
        elif section == "init":
            init.extend(line.replace(",", " ").split())
        elif section == "trans":
            if "->" not in line:
                raise ParseError(f"expected `a -> b`, found {line!r}", lineno)
            a, b = (part.strip() for part in line.split("->", 1))
            trans.append((a, b, lineno))
        elif section == "labels":
            parts = line.split()
            state, assigns = parts[0], parts[1:]
            lab = labels.setdefault(state, {})
            for a in assigns:
                if "=" not in a:
                    raise ParseError(f"expected `prop=weight`, found {a!r}", lineno)
                p, w = a.split("=", 1)
                lab[p] = parse_rational(w, lineno)
        else:
            raise ParseError(f"content outside any section: {line!r}", lineno)

    state_set = set(states)
    for a, b, lineno in trans:
        for s in (a, b):
            if s not in state_set:
                raise ParseError(f"unknown state {s!r} in transition", lineno)
    for s in labels:
        if s not in state_set:
            raise ParseError(f"label for unknown state {s!r}")
    for s in init:
        if s not in state_set:
            raise ParseError(f"unknown initial state {s!r}")

    transitions: dict[str, list[str]] = {s: [] for s in states}
    for a, b, _ in trans:
        if b not in transitions[a]:
            transitions[a].append(b)
    try:
        return WeightedKripke.make(states, weights, init, transitions, labels)
    except StructureError as exc:
        raise ParseError(str(exc)) from None


def self_product(k: WeightedKripke, n: int, var_names: tuple[str, ...] | None = None) -> WeightedKripke:
    """Synchronous product of n copies, over propositions p@var_i.

    For n = 0 the product is a single dummy state with a self loop and an
    empty proposition set.
    """
    if var_names is None:
        var_names = tuple(f"π{i}" for i in range(1, n + 1))
    if len(var_names) != n:
        raise StructureError("need one variable name per copy")
    if n == 0:
        return WeightedKripke(
            states=((),), weights=k.weights, initial=frozenset({()}),
            transitions={(): ((),)}, labels={(): {}}, ap=(),
        )
    ap = tuple(prop_for(p, v) for v in var_names for p in k.ap)

    def product_states(depth):
        if depth == 0:
            yield ()
            return
        for rest in product_states(depth - 1):
            for s in k.states:
                yield rest + (s,)

    states = tuple(product_states(n))
    labels = {}
    transitions = {}
    for st in states:
        lab = {}
        for i, comp in enumerate(st):
            for p in k.ap:
                lab[prop_for(p, var_names[i])] = k.labels[comp][p]
        labels[st] = lab
        succs = [()]
        for comp in st:
            succs = [prev + (t,) for prev in succs for t in k.transitions[comp]]
        transitions[st] = tuple(succs)
    initial = frozenset(
        st for st in states if all(c in k.initial for c in st)
    )
    return WeightedKripke(states, k.weights, initial, transitions, labels, ap)


def lasso_enumerate(k: WeightedKripke, max_stem: int, max_loop: int):
    """Yield the distinct trace lassos generated by state paths of K with
    stem length <= max_stem and loop length <= max_loop, each once in
    normal form (minimal stem, primitive loop)."""
    if max_stem < 0:
        raise StructureError("max_stem must be >= 0")
    if max_loop < 1:
        raise StructureError("max_loop must be >= 1")

    order = {s: i for i, s in enumerate(k.states)}
    seen: set[tuple] = set()

    def loops_from(start, path):
        # path is a nonempty state sequence beginning at `start`
        if path[-1] in k.transitions and start in k.transitions[path[-1]]:
            yield tuple(path)
        if len(path) < max_loop:
            for t in sorted(k.transitions[path[-1]], key=order.get):
                yield from loops_from(start, path + [t])

    def stems():
        yield ()
        frontier = [(s,) for s in sorted(k.initial, key=order.get)]
        for _ in range(max_stem):
            new = []
            for stem in frontier:
                yield stem
                for t in sorted(k.transitions[stem[-1]], key=order.get):
                    new.append(stem + (t,))
            frontier = new

    for stem in stems():
        if stem:
            loop_starts = sorted(k.transitions[stem[-1]], key=order.get)
        else:
            loop_starts = sorted(k.initial, key=order.get)
        for ls in loop_starts:
            for loop in loops_from(ls, [ls]):
                lasso = Lasso(
                    k.ap,
                    tuple(k.letter(s) for s in stem),
                    tuple(k.letter(s) for s in loop),
                ).normalized()
                key = (lasso.stem, lasso.loop)
                if key not in seen:
                    seen.add(key)
                    yield lasso
