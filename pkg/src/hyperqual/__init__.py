"""hyperqual: threshold model checking for quantitative HyperLTL.

Evaluates formulas of two quantitative HyperLTL extensions over weighted
Kripke structures: one with functions over [0,1] in place of Boolean
connectives (exact threshold checking and value synthesis), one with
discounted temporal operators (epsilon-approximate checking in general,
exact checking for the positive/negative and alternation-free
fragments). Everything computes in exact rational arithmetic.
"""

from .checker import (
    Answer, Verdict, booleanize, mc_prop, mc_prop_value, mc_temp_af,
    mc_temp_approx, mc_temp_fragment, prenex_normalize,
)
from .compiler import (
    PredicateSpec, compile_prop_qf, compile_temp_qf, quantifier_elim_prop,
    quantifier_elim_temp,
)
from .formula import (
    Atom, DiscountSeq, FalseF, Formula, Fragment, FormulaStats, Func, FuncKind,
    FuncSymbol, Next, Release, DiscountedRelease, DiscountedUntil, Exists, Forall,
    TrueF, Until, analyze, negate_dual, parse_formula, print_formula,
)
from .kripke import (
    Lasso, LassoAssignment, WeightedKripke, encode_assignment, lasso_enumerate,
    parse_kripke, self_product,
)
from .oracle import BoundedValue, EvalContext, eval_bounded, eval_qf, eval_quantified
from .values import (
    DiscountedLattice, ValueSet, lattice_truncate, nearest_above, nearest_below,
    value_overapprox,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
