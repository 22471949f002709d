"""Reference semantics over lasso assignments.

This is the ground truth the automata pipeline is tested against: exact
rational evaluation of any formula on a lasso assignment, plus min/max
quantifier evaluation over a finite lasso universe. A lasso assignment
has only finitely many distinct suffixes (stem positions plus one loop
period), so plain until fixpoints are finite scans and discounted
suprema/infima terminate through the decay of the discount sequence.

Values are memoized per (subformula, canonical position, bindings of the
subformula's own free variables); quantified evaluation therefore costs
the product of universe sizes only over variables a branch really uses.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import StructureError, UnboundVariableError
from .formula import (
    Atom, DiscountedRelease, DiscountedUntil, Exists, FalseF, Forall, Formula, Func,
    FuncKind, Next, Release, TrueF, Until, free_vars, split_prefix,
)
from .kripke import Lasso, LassoAssignment, WeightedKripke, lasso_enumerate
from .rationals import ONE, ZERO


@dataclass
class EvalContext:
    assignment: LassoAssignment
    candidate_lassos: tuple[Lasso, ...] = ()
    offset: int = 0


class _Evaluator:
    def __init__(self, universe=(), min_horizon: int = 0):
        self.universe = tuple(universe)
        self.min_horizon = min_horizon
        self.fv_cache: dict[int, tuple[str, ...]] = {}
        self.memo: dict = {}

    def fv(self, node: Formula) -> tuple[str, ...]:
        key = id(node)
        got = self.fv_cache.get(key)
        if got is not None:
            return got
        if isinstance(node, Atom):
            out = (node.var,)
        elif isinstance(node, (Exists, Forall)):
            out = tuple(v for v in self.fv(node.sub) if v != node.var)
        else:
            vs: set[str] = set()
            for c in node.children():
                vs.update(self.fv(c))
            out = tuple(sorted(vs))
        self.fv_cache[key] = out
        return out

    def shape(self, node: Formula, env: dict) -> tuple[int, int]:
        """Joint (stem length, loop period) of the node's bound lassos."""
        stems, loops = [0], [1]
        for v in self.fv(node):
            lasso = env.get(v)
            if lasso is None:
                raise UnboundVariableError(f"unbound trace variable {v!r}")
            stems.append(len(lasso.stem))
            loops.append(len(lasso.loop))
        return max(stems), math.lcm(*loops)

    def canon(self, node: Formula, env: dict, i: int) -> int:
        stem, period = self.shape(node, env)
        return i if i < stem else stem + (i - stem) % period

    def cycle_bound(self, node: Formula, env: dict, i: int) -> int:
        stem, period = self.shape(node, env)
        return (stem + period - min(i, stem + period)) + period

    def eval(self, node: Formula, env: dict, i: int) -> Fraction:
        i = self.canon(node, env, i)
        key = (id(node), i, tuple(id(env[v]) for v in self.fv(node)))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        val = self._eval(node, env, i)
        self.memo[key] = val
        return val

    def _eval(self, node: Formula, env: dict, i: int) -> Fraction:
        if isinstance(node, TrueF):
            return ONE
        if isinstance(node, FalseF):
            return ZERO
        if isinstance(node, Atom):
            lasso = env.get(node.var)
            if lasso is None:
                raise UnboundVariableError(f"unbound trace variable {node.var!r}")
            return lasso.value(i, node.prop)
        if isinstance(node, Func):
            return node.sym.apply(tuple(self.eval(a, env, i) for a in node.args))
        if isinstance(node, Next):
            return self.eval(node.sub, env, i + 1)
        if isinstance(node, Until):
            return self._until(
                node, env, i,
                lambda j: self.eval(node.lhs, env, j),
                lambda j: self.eval(node.rhs, env, j))
        if isinstance(node, Release):
            return ONE - self._until(
                node, env, i,
                lambda j: ONE - self.eval(node.lhs, env, j),
                lambda j: ONE - self.eval(node.rhs, env, j))
        if isinstance(node, DiscountedUntil):
            return self._until_disc(
                node, env, i, node.seq,
                lambda j: self.eval(node.lhs, env, j),
                lambda j: self.eval(node.rhs, env, j))
        if isinstance(node, DiscountedRelease):
            return ONE - self._until_disc(
                node, env, i, node.seq,
                lambda j: ONE - self.eval(node.lhs, env, j),
                lambda j: ONE - self.eval(node.rhs, env, j))
        if isinstance(node, (Exists, Forall)):
            # closure formulas keep quantifiers above temporal operators
            if i != 0:
                raise StructureError("quantifier evaluated at a shifted position")
            if not self.universe:
                raise StructureError("quantifier universe must be nonempty")
            exists = isinstance(node, Exists)
            best = None
            saved = env.get(node.var)
            for lasso in self.universe:
                env[node.var] = lasso
                val = self.eval(node.sub, env, 0)
                if best is None:
                    best = val
                else:
                    best = max(best, val) if exists else min(best, val)
                if (exists and best == ONE) or (not exists and best == ZERO):
                    break  # extremal, later candidates cannot move the bound
            if saved is None:
                env.pop(node.var, None)
            else:
                env[node.var] = saved
            return best
        raise StructureError(f"cannot evaluate {node!r}")

    def _until(self, node, env, i, aval, bval) -> Fraction:
        # sup over k of min(b(i+k), min_{j<k} a(i+j)); the prefix minimum
        # stabilizes once every suffix has been seen and b cycles after,
        # so one extra period suffices
        best = ZERO
        prefix_min = ONE
        for pos in range(i, i + self.cycle_bound(node, env, i) + 1):
            best = max(best, min(bval(pos), prefix_min))
            prefix_min = min(prefix_min, aval(pos))
            if prefix_min <= best:
                break
        return best

    def _until_disc(self, node, env, i, seq, aval, bval) -> Fraction:
        best = ZERO
        prefix_min = ONE
        k = 0
        horizon = max(self.cycle_bound(node, env, i), self.min_horizon)
        while True:
            eta = seq.at(k)
            if eta <= best:
                return best  # every later term is at most eta
            term = min(eta * bval(i + k), prefix_min)
            best = max(best, term)
            prefix_min = min(prefix_min, eta * aval(i + k))
            if prefix_min <= best:
                return best
            if best == ZERO and k >= horizon:
                # a full suffix cycle produced only zero terms with a
                # positive prefix: every b on the cycle is zero, so the
                # supremum is zero
                return ZERO
            k += 1


def eval_qf(phi: Formula, ctx: EvalContext, min_horizon: int = 0) -> Fraction:
    """Exact satisfaction value of a quantifier-free formula at ctx.offset."""
    ev = _Evaluator(ctx.candidate_lassos, min_horizon=min_horizon)
    return ev.eval(phi, dict(ctx.assignment.bindings), ctx.offset)


def eval_quantified(
    phi: Formula,
    universe,
    assignment: LassoAssignment | None = None,
    min_horizon: int = 0,
) -> Fraction:
    """Evaluate with quantifiers ranging over the given finite lasso set.

    Universal quantifiers become minima and existentials maxima over the
    universe; free variables may be pre-bound through `assignment`.
    Quantifiers may also occur under conjunction and disjunction (the
    positive Boolean closure), which the translation checks rely on.
    """
    ev = _Evaluator(universe, min_horizon=min_horizon)
    env = dict(assignment.bindings) if assignment else {}
    return ev.eval(phi, env, 0)


@dataclass(frozen=True)
class BoundedValue:
    value: Fraction
    kind: str  # "exact" | "lower" | "upper" | "estimate"
    bounds: tuple[int, int] = field(default=(0, 1), compare=False)


def eval_bounded(phi: Formula, k: WeightedKripke, max_stem: int, max_loop: int) -> BoundedValue:
    """Evaluate a closed formula over the lassos of K within the bounds.

    The result is labeled by what it guarantees about the true value over
    all traces of K: a lower bound for purely existential prefixes, an
    upper bound for purely universal ones, exact when quantifier-free,
    and an unlabeled estimate otherwise (bounded evaluation of
    alternating formulas can be wrong in both directions).
    """
    prefix, _ = split_prefix(phi)
    universe = tuple(lasso_enumerate(k, max_stem, max_loop))
    value = eval_quantified(phi, universe)
    if not prefix:
        kind = "exact"
    elif all(q == "exists" for q, _ in prefix):
        kind = "lower"
    elif all(q == "forall" for q, _ in prefix):
        kind = "upper"
    else:
        kind = "estimate"
    return BoundedValue(value, kind, (max_stem, max_loop))
