"""Finite satisfaction-value machinery.

For the propositional logic, every formula admits a computable finite
over-approximation of its possible satisfaction values, built by
structural induction over the weight set. For the discounted fragments,
values live in an infinite lattice {0,1}.union(W).union(products of
discount elements scaled by a weight); that lattice is finite above any
positive cut, which is what the threshold procedures exploit.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import FragmentError, ThresholdError
from .formula import (
    Atom, DiscountedRelease, DiscountedUntil, DiscountSeq, Exists, FalseF, Forall,
    Formula, Func, Next, Release, TrueF, Until,
)
from .rationals import ONE, ZERO


@dataclass(frozen=True)
class ValueSet:
    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = self.values
        if list(vals) != sorted(set(vals)):
            raise ValueError("value set must be sorted and duplicate-free")
        if vals and not (ZERO <= vals[0] and vals[-1] <= ONE):
            raise ValueError("values must lie in [0,1]")

    @classmethod
    def of(cls, values) -> "ValueSet":
        return cls(tuple(sorted({Fraction(v) for v in values})))

    def __contains__(self, x) -> bool:
        return Fraction(x) in set(self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def _cartesian(sets):
    if not sets:
        yield ()
        return
    for rest in _cartesian(sets[:-1]):
        for v in sets[-1]:
            yield rest + (v,)


def value_overapprox(phi: Formula, weights: ValueSet) -> ValueSet:
    """The inductive value over-approximation for a propositional formula.

    Atoms contribute the weight set plus {0,1}; function symbols map
    pointwise over their arguments' sets; until/release take unions;
    next and quantifiers are transparent. Every satisfaction value of the
    formula over traces weighted in W lies in the result.
    """
    w_atoms = frozenset(weights) | {ZERO, ONE}

    def go(f: Formula) -> frozenset:
        if isinstance(f, TrueF):
            return frozenset({ONE})
        if isinstance(f, FalseF):
            return frozenset({ZERO})
        if isinstance(f, Atom):
            return w_atoms
        if isinstance(f, Func):
            arg_sets = [sorted(go(a)) for a in f.args]
            return frozenset(f.sym.apply(tup) for tup in _cartesian(arg_sets))
        if isinstance(f, Next):
            return go(f.sub)
        if isinstance(f, (Until, Release)):
            return go(f.lhs) | go(f.rhs)
        if isinstance(f, (Exists, Forall)):
            return go(f.sub)
        if isinstance(f, (DiscountedUntil, DiscountedRelease)):
            raise FragmentError("value over-approximation is defined only without discounts")
        raise AssertionError(f)

    return ValueSet.of(go(phi))


@dataclass(frozen=True)
class DiscountedLattice:
    """Symbolic descriptor (k, H, W) of the discounted value lattice."""

    k: int
    seqs: frozenset[DiscountSeq]
    weights: ValueSet

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("depth must be nonnegative")


def lattice_truncate(lattice: DiscountedLattice, a: Fraction) -> ValueSet:
    """All lattice values in [a, 1], for a cut a > 0.

    Factors below a can never appear in a product that stays >= a, so per
    sequence only indices before the first element < a contribute; the
    enumeration is therefore finite.
    """
    a = Fraction(a)
    if a <= 0:
        raise ThresholdError("truncation cut must be positive (the lattice accumulates at 0)")
    if a > 1:
        return ValueSet.of(())
    out = {x for x in {ZERO, ONE} | set(lattice.weights) if x >= a}
    factor_pool = []
    for seq in lattice.seqs:
        stop = seq.first_index_below(a)
        factor_pool.extend(seq.at(i) for i in range(stop))
    factor_pool = sorted(set(factor_pool))

    frontier = {w for w in lattice.weights if w >= a}
    for _ in range(lattice.k):
        nxt = set()
        for v in frontier:
            for f in factor_pool:
                x = v * f
                if x >= a:
                    nxt.add(x)
        out |= nxt
        frontier = nxt
        if not frontier:
            break
    return ValueSet.of(out)


def nearest_below(lattice: DiscountedLattice, v: Fraction) -> Fraction:
    """Greatest lattice value strictly below v, for 0 < v <= 1."""
    v = Fraction(v)
    if not (ZERO < v <= ONE):
        raise ThresholdError("nearest_below requires 0 < v <= 1")
    candidates = {ZERO} | {w for w in lattice.weights if w < v}
    if lattice.k >= 1 and lattice.seqs:
        positive = [w for w in lattice.weights if w > 0]
        if positive:
            w = max(positive)
            seq = next(iter(lattice.seqs))
            x0 = w * seq.at(seq.first_index_below(v / w))
            # x0 is a lattice point in (0, v); everything between x0 and v
            # lives in the finite truncation at x0.
            for x in lattice_truncate(lattice, x0):
                if x < v:
                    candidates.add(x)
    return max(candidates)


def nearest_above(lattice: DiscountedLattice, v: Fraction) -> Fraction:
    """Least lattice value strictly above v, for 0 < v < 1.

    v = 0 is rejected: the lattice accumulates at 0, so no least element
    above 0 exists in general.
    """
    v = Fraction(v)
    if v <= 0:
        raise ThresholdError("no least lattice value above 0 (accumulation point)")
    if v >= 1:
        raise ThresholdError("nearest_above requires v < 1")
    above = [x for x in lattice_truncate(lattice, v) if x > v]
    return min(above)  # 1 is always in the lattice, so this is nonempty
