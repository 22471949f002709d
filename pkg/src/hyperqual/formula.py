"""Formula ASTs for both quantitative HyperLTL logics.

The propositional logic extends HyperLTL with a fixed catalog of
functions over [0,1] (weighted average, scaling, threshold, agreement);
the temporal logic instead adds discounted until/release operators. Both
share a prenex quantifier prefix over trace variables. This module owns
the abstract syntax, the `.hq` concrete syntax, structural analysis
(fragment classification, quantifier statistics) and dualization.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import FragmentError, ParseError, UnboundVariableError
from .rationals import ONE, ZERO, format_rational, parse_rational, require_unit


# ---------------------------------------------------------------------------
# Function symbols
# ---------------------------------------------------------------------------

class FuncKind(Enum):
    NOT = "not"
    OR = "or"
    AND = "and"
    IMPLIES = "implies"
    IFF = "iff"
    OPLUS = "oplus"          # weighted average, coefficients sum to 1
    SCALE = "scale"          # multiply by a constant in [0,1]
    THRESHOLD_GT = "gt"      # 1 if value > k else 0
    AGREE = "agree"          # xy + (1-x)(1-y)


BOOLEAN_KINDS = {FuncKind.NOT, FuncKind.OR, FuncKind.AND, FuncKind.IMPLIES, FuncKind.IFF}


@dataclass(frozen=True)
class FuncSymbol:
    kind: FuncKind
    params: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.kind is FuncKind.OPLUS:
            if not self.params:
                raise ParseError("oplus needs at least one coefficient")
            for c in self.params:
                if c < 0:
                    raise ParseError("oplus coefficients must be nonnegative")
            if sum(self.params) != ONE:
                raise ParseError("oplus coefficients must sum to 1")
        elif self.kind in (FuncKind.SCALE, FuncKind.THRESHOLD_GT):
            if len(self.params) != 1:
                raise ParseError(f"{self.kind.value} takes exactly one parameter")
            require_unit(self.params[0], f"{self.kind.value} parameter")
        elif self.params:
            raise ParseError(f"{self.kind.value} takes no parameters")

    def arity_ok(self, n: int) -> bool:
        fixed = {
            FuncKind.NOT: 1, FuncKind.IMPLIES: 2, FuncKind.IFF: 2,
            FuncKind.SCALE: 1, FuncKind.THRESHOLD_GT: 1, FuncKind.AGREE: 2,
        }
        if self.kind in fixed:
            return n == fixed[self.kind]
        if self.kind is FuncKind.OPLUS:
            return n == len(self.params)
        return n >= 1  # OR / AND are n-ary

    def apply(self, values: tuple[Fraction, ...]) -> Fraction:
        k = self.kind
        if k is FuncKind.NOT:
            return ONE - values[0]
        if k is FuncKind.OR:
            return max(values)
        if k is FuncKind.AND:
            return min(values)
        if k is FuncKind.IMPLIES:
            return max(ONE - values[0], values[1])
        if k is FuncKind.IFF:
            return min(max(ONE - values[0], values[1]), max(ONE - values[1], values[0]))
        if k is FuncKind.OPLUS:
            return sum((c * v for c, v in zip(self.params, values)), ZERO)
        if k is FuncKind.SCALE:
            return self.params[0] * values[0]
        if k is FuncKind.THRESHOLD_GT:
            return ONE if values[0] > self.params[0] else ZERO
        if k is FuncKind.AGREE:
            x, y = values
            return x * y + (ONE - x) * (ONE - y)
        raise AssertionError(k)


# ---------------------------------------------------------------------------
# Discount sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscountSeq:
    """A strictly decreasing positive rational sequence with limit 0.

    Two shapes are supported: exponential (lambda**i for 0 < lambda < 1)
    and harmonic (1/(i+1)). Restricting to these keeps every element an
    exact rational and makes index searches terminate.
    """

    kind: str                      # "exp" | "harm"
    param: Fraction | None = None  # lambda for "exp"

    def __post_init__(self):
        if self.kind == "exp":
            if self.param is None or not (ZERO < self.param < ONE):
                raise ParseError("exponential discount needs a factor strictly between 0 and 1")
        elif self.kind == "harm":
            if self.param is not None:
                raise ParseError("harmonic discount takes no parameter")
        else:
            raise ParseError(f"unknown discount kind {self.kind!r}")

    def at(self, i: int) -> Fraction:
        if self.kind == "exp":
            return self.param ** i
        return Fraction(1, i + 1)

    def first_index_below(self, x: Fraction) -> int:
        """Smallest i with at(i) < x; requires x > 0."""
        if x <= 0:
            raise ValueError("threshold must be positive")
        if self.kind == "harm":
            i = max(0, (ONE / x).__ceil__() - 1)
        else:
            i = 0
        while self.at(i) >= x:
            i += 1
        return i

    def first_index_at_most(self, x: Fraction) -> int:
        """Smallest i with at(i) <= x; requires x > 0."""
        if x <= 0:
            raise ValueError("threshold must be positive")
        i = self.first_index_below(x)
        if i > 0 and self.at(i - 1) == x:
            return i - 1
        return i

    def __str__(self):
        if self.kind == "exp":
            return f"exp {format_rational(self.param)}"
        return "harm"


EXP = lambda lam: DiscountSeq("exp", Fraction(lam))  # noqa: E731 - terse test helper
HARMONIC = DiscountSeq("harm")


# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------

class Formula:
    """Base class; all nodes are frozen dataclasses and safe to share."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    # convenience operator sugar used heavily in tests
    def __and__(self, other):
        return Func(FuncSymbol(FuncKind.AND), (self, other))

    def __or__(self, other):
        return Func(FuncSymbol(FuncKind.OR), (self, other))

    def __invert__(self):
        return Func(FuncSymbol(FuncKind.NOT), (self,))


@dataclass(frozen=True, slots=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True, slots=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    prop: str
    var: str


@dataclass(frozen=True, slots=True)
class Func(Formula):
    sym: FuncSymbol
    args: tuple[Formula, ...]

    def __post_init__(self):
        if not self.sym.arity_ok(len(self.args)):
            raise ParseError(f"{self.sym.kind.value} applied to {len(self.args)} arguments")

    def children(self):
        return self.args


@dataclass(frozen=True, slots=True)
class Next(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)


@dataclass(frozen=True, slots=True)
class Until(Formula):
    lhs: Formula
    rhs: Formula

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True, slots=True)
class Release(Formula):
    lhs: Formula
    rhs: Formula

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True, slots=True)
class DiscountedUntil(Formula):
    seq: DiscountSeq
    lhs: Formula
    rhs: Formula

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True, slots=True)
class DiscountedRelease(Formula):
    seq: DiscountSeq
    lhs: Formula
    rhs: Formula

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    var: str
    sub: Formula

    def children(self):
        return (self.sub,)


@dataclass(frozen=True, slots=True)
class Forall(Formula):
    var: str
    sub: Formula

    def children(self):
        return (self.sub,)


TRUE = TrueF()
FALSE = FalseF()


def not_(f: Formula) -> Formula:
    return Func(FuncSymbol(FuncKind.NOT), (f,))


def and_(*fs: Formula) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = out & f
    return out


def or_(*fs: Formula) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = out | f
    return out


def implies(a: Formula, b: Formula) -> Formula:
    return Func(FuncSymbol(FuncKind.IMPLIES), (a, b))


def iff(a: Formula, b: Formula) -> Formula:
    return Func(FuncSymbol(FuncKind.IFF), (a, b))


def oplus(coeffs, args) -> Formula:
    return Func(FuncSymbol(FuncKind.OPLUS, tuple(Fraction(c) for c in coeffs)), tuple(args))


def scale(alpha, f: Formula) -> Formula:
    return Func(FuncSymbol(FuncKind.SCALE, (Fraction(alpha),)), (f,))


def threshold_gt(k, f: Formula) -> Formula:
    return Func(FuncSymbol(FuncKind.THRESHOLD_GT, (Fraction(k),)), (f,))


def agree(a: Formula, b: Formula) -> Formula:
    return Func(FuncSymbol(FuncKind.AGREE), (a, b))


def finally_(f: Formula) -> Formula:
    return Until(TRUE, f)


def globally(f: Formula) -> Formula:
    return Release(FALSE, f)


def finally_disc(seq: DiscountSeq, f: Formula) -> Formula:
    return DiscountedUntil(seq, TRUE, f)


def globally_disc(seq: DiscountSeq, f: Formula) -> Formula:
    return DiscountedRelease(seq, FALSE, f)


# Library-level macros; the text syntax reaches them through header
# declarations (`low:`, `ap:`, `dummy:`) in a .hq file.

def loweq(low_props, v1: str, v2: str) -> Formula:
    """All low propositions agree between the two traces at the current step."""
    return and_(*[iff(Atom(p, v1), Atom(p, v2)) for p in low_props])


def ratio(low_props, v1: str, v2: str) -> Formula:
    """Average agreement of the low propositions between two traces."""
    props = list(low_props)
    c = Fraction(1, len(props))
    return oplus([c] * len(props), [iff(Atom(p, v1), Atom(p, v2)) for p in props])


def dummy(dummy_prop: str, high_props, v: str) -> Formula:
    """The dummy proposition holds and every other high proposition is off."""
    parts = [Atom(dummy_prop, v)] + [not_(Atom(p, v)) for p in high_props]
    return and_(*parts)


def trace_eq(props, v1: str, v2: str) -> Formula:
    """Both traces agree on every proposition, globally."""
    return globally(and_(*[iff(Atom(p, v1), Atom(p, v2)) for p in props]))


# ---------------------------------------------------------------------------
# Structural helpers
# ---------------------------------------------------------------------------

def split_prefix(phi: Formula) -> tuple[tuple[tuple[str, str], ...], Formula]:
    """Return ((quantifier, var), ...) and the quantifier-free body."""
    prefix = []
    while isinstance(phi, (Exists, Forall)):
        prefix.append(("exists" if isinstance(phi, Exists) else "forall", phi.var))
        phi = phi.sub
    return tuple(prefix), phi


def attach_prefix(prefix, body: Formula) -> Formula:
    for q, v in reversed(prefix):
        body = Exists(v, body) if q == "exists" else Forall(v, body)
    return body


def walk(phi: Formula):
    yield phi
    for c in phi.children():
        yield from walk(c)


def free_vars(phi: Formula) -> set[str]:
    bound: set[str] = set()
    free: set[str] = set()

    def go(f, bound_here):
        if isinstance(f, Atom):
            if f.var not in bound_here:
                free.add(f.var)
        elif isinstance(f, (Exists, Forall)):
            go(f.sub, bound_here | {f.var})
        else:
            for c in f.children():
                go(c, bound_here)

    go(phi, bound)
    return free


def node_count(phi: Formula) -> int:
    return sum(1 for _ in walk(phi))


def has_discount(phi: Formula) -> bool:
    return any(isinstance(n, (DiscountedUntil, DiscountedRelease)) for n in walk(phi))


def has_quantitative_func(phi: Formula) -> bool:
    return any(
        isinstance(n, Func) and n.sym.kind not in BOOLEAN_KINDS for n in walk(phi)
    )


def is_boolean(phi: Formula) -> bool:
    """Classical {0,1}-valued: Boolean connectives and plain temporal operators only."""
    for n in walk(phi):
        if isinstance(n, (DiscountedUntil, DiscountedRelease, Exists, Forall)):
            return False
        if isinstance(n, Func) and n.sym.kind not in BOOLEAN_KINDS:
            return False
    return True


def validate(phi: Formula, free: tuple[str, ...] = ()) -> None:
    """Check the global invariants: prenex prefix, distinct bound names,
    no unbound variables, and no mixing of discounted operators with
    quantitative function symbols (the two logics are disjoint)."""
    prefix, body = split_prefix(phi)
    names = [v for _, v in prefix]
    if len(set(names)) != len(names):
        raise ParseError("bound trace variables must be pairwise distinct")
    for n in walk(body):
        if isinstance(n, (Exists, Forall)):
            raise ParseError("quantifier not in prefix position")
    scope = set(names) | set(free)
    for n in walk(body):
        if isinstance(n, Atom) and n.var not in scope:
            raise UnboundVariableError(f"unbound trace variable {n.var!r}")
    if has_discount(body) and has_quantitative_func(body):
        raise FragmentError(
            "discounted operators cannot be combined with quantitative function symbols"
        )


# ---------------------------------------------------------------------------
# Fragment analysis
# ---------------------------------------------------------------------------

class Fragment(Enum):
    BOOLEAN = "boolean"
    PROP = "prop"
    TEMP_POS = "temp-pos"
    TEMP_NEG = "temp-neg"
    TEMP_EXISTS_ONLY = "temp-exists-only"
    TEMP_FORALL_ONLY = "temp-forall-only"
    TEMP_FULL = "temp-full"


@dataclass(frozen=True)
class FormulaStats:
    atom_count: int
    quantifier_depth: int
    alternation_count: int
    discount_depth: int
    discount_seqs: frozenset[DiscountSeq]
    fragment: Fragment
    prefix: tuple[tuple[str, str], ...] = field(default=(), compare=False)


def _is_temp_pos_body(n: Formula) -> bool:
    # No negation above a discounted operator; implications are admitted
    # when their left side is Boolean (equivalent to a disjunction).
    if is_boolean(n):
        return True
    if isinstance(n, Func):
        k = n.sym.kind
        if k in (FuncKind.OR, FuncKind.AND):
            return all(_is_temp_pos_body(a) for a in n.args)
        if k is FuncKind.IMPLIES:
            return is_boolean(n.args[0]) and _is_temp_pos_body(n.args[1])
        return False
    if isinstance(n, Next):
        return _is_temp_pos_body(n.sub)
    if isinstance(n, (Until, DiscountedUntil)):
        return _is_temp_pos_body(n.lhs) and _is_temp_pos_body(n.rhs)
    return False


def _is_temp_neg_body(n: Formula) -> bool:
    if is_boolean(n):
        return True
    if isinstance(n, Func):
        k = n.sym.kind
        if k in (FuncKind.OR, FuncKind.AND):
            return all(_is_temp_neg_body(a) for a in n.args)
        if k is FuncKind.IMPLIES:
            return is_boolean(n.args[0]) and _is_temp_neg_body(n.args[1])
        return False
    if isinstance(n, Next):
        return _is_temp_neg_body(n.sub)
    if isinstance(n, (Release, DiscountedRelease)):
        return _is_temp_neg_body(n.lhs) and _is_temp_neg_body(n.rhs)
    return False


def discount_depth(phi: Formula) -> int:
    if isinstance(phi, (DiscountedUntil, DiscountedRelease)):
        return 1 + max(discount_depth(phi.lhs), discount_depth(phi.rhs))
    kids = phi.children()
    return max((discount_depth(c) for c in kids), default=0)


def analyze(phi: Formula) -> FormulaStats:
    prefix, body = split_prefix(phi)
    alternations = sum(1 for a, b in zip(prefix, prefix[1:]) if a[0] != b[0])
    atoms = sum(1 for n in walk(body) if isinstance(n, Atom))
    seqs = frozenset(
        n.seq for n in walk(body) if isinstance(n, (DiscountedUntil, DiscountedRelease))
    )
    depth = discount_depth(body)

    if not seqs and not has_quantitative_func(body):
        frag = Fragment.BOOLEAN
    elif not seqs:
        frag = Fragment.PROP
    elif _is_temp_pos_body(body):
        frag = Fragment.TEMP_POS
    elif _is_temp_neg_body(body):
        frag = Fragment.TEMP_NEG
    elif all(q == "exists" for q, _ in prefix):
        frag = Fragment.TEMP_EXISTS_ONLY
    elif all(q == "forall" for q, _ in prefix):
        frag = Fragment.TEMP_FORALL_ONLY
    else:
        frag = Fragment.TEMP_FULL

    return FormulaStats(
        atom_count=atoms,
        quantifier_depth=len(prefix),
        alternation_count=alternations,
        discount_depth=depth,
        discount_seqs=seqs,
        fragment=frag,
        prefix=prefix,
    )


# ---------------------------------------------------------------------------
# Dualization
# ---------------------------------------------------------------------------

def _smart_not(phi: Formula) -> Formula:
    if isinstance(phi, TrueF):
        return FALSE
    if isinstance(phi, FalseF):
        return TRUE
    if isinstance(phi, Func) and phi.sym.kind is FuncKind.NOT:
        return phi.args[0]
    return not_(phi)


def _nnf(phi: Formula) -> Formula:
    """Rewrite so every remaining negation sits on a Boolean subformula."""
    if is_boolean(phi):
        return phi
    if isinstance(phi, (Exists, Forall)):
        cls = type(phi)
        return cls(phi.var, _nnf(phi.sub))
    if isinstance(phi, Func):
        if phi.sym.kind is FuncKind.NOT:
            return negate_dual(phi.args[0])
        if phi.sym.kind in BOOLEAN_KINDS:
            return Func(phi.sym, tuple(_nnf(a) for a in phi.args))
        return phi  # quantitative function: leave untouched
    if isinstance(phi, Next):
        return Next(_nnf(phi.sub))
    if isinstance(phi, Until):
        return Until(_nnf(phi.lhs), _nnf(phi.rhs))
    if isinstance(phi, Release):
        return Release(_nnf(phi.lhs), _nnf(phi.rhs))
    if isinstance(phi, DiscountedUntil):
        return DiscountedUntil(phi.seq, _nnf(phi.lhs), _nnf(phi.rhs))
    if isinstance(phi, DiscountedRelease):
        return DiscountedRelease(phi.seq, _nnf(phi.lhs), _nnf(phi.rhs))
    return phi


def negate_dual(phi: Formula) -> Formula:
    """The dual formula, whose satisfaction value is 1 minus phi's.

    Quantifiers, until/release pairs and Boolean connectives are flipped;
    negations end up on Boolean leaves. Quantitative function symbols
    other than the Boolean ones are negated in place.
    """
    if isinstance(phi, Exists):
        return Forall(phi.var, negate_dual(phi.sub))
    if isinstance(phi, Forall):
        return Exists(phi.var, negate_dual(phi.sub))
    if is_boolean(phi):
        return _smart_not(phi)
    if isinstance(phi, Func):
        k = phi.sym.kind
        if k is FuncKind.NOT:
            return _nnf(phi.args[0])
        if k is FuncKind.OR:
            return Func(FuncSymbol(FuncKind.AND), tuple(negate_dual(a) for a in phi.args))
        if k is FuncKind.AND:
            return Func(FuncSymbol(FuncKind.OR), tuple(negate_dual(a) for a in phi.args))
        if k is FuncKind.IMPLIES:
            return and_(_nnf(phi.args[0]), negate_dual(phi.args[1]))
        if k is FuncKind.IFF:
            a, b = phi.args
            return or_(and_(_nnf(a), negate_dual(b)), and_(_nnf(b), negate_dual(a)))
        return not_(phi)  # quantitative function: no pushed form
    if isinstance(phi, Next):
        return Next(negate_dual(phi.sub))
    if isinstance(phi, Until):
        return Release(negate_dual(phi.lhs), negate_dual(phi.rhs))
    if isinstance(phi, Release):
        return Until(negate_dual(phi.lhs), negate_dual(phi.rhs))
    if isinstance(phi, DiscountedUntil):
        return DiscountedRelease(phi.seq, negate_dual(phi.lhs), negate_dual(phi.rhs))
    if isinstance(phi, DiscountedRelease):
        return DiscountedUntil(phi.seq, negate_dual(phi.lhs), negate_dual(phi.rhs))
    raise AssertionError(f"unhandled node {phi!r}")


# ---------------------------------------------------------------------------
# Concrete syntax: lexer
# ---------------------------------------------------------------------------

_KEYWORDS = {
    "forall", "exists", "true", "false",
    "X", "F", "G", "U", "R",
    "oplus", "scale", "gt", "agree",
    "loweq", "ratio", "dummy",
    "exp", "harm",
}

_SYMBOLS = ["<->", "->", "(", ")", "[", "]", ";", ",", ".", "@", "|", "&", "!"]


@dataclass
class _Token:
    kind: str  # "ident" | "number" | "kw" | symbol text | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = False
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(_Token(sym, sym, line, col))
                i += len(sym)
                col += len(sym)
                matched = True
                break
        if matched:
            continue
        if ch.isdigit():
            j = i
            while j < n and (text[j].isdigit() or text[j] in "./"):
                j += 1
            tokens.append(_Token("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "kw" if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Concrete syntax: parser
# ---------------------------------------------------------------------------

@dataclass
class _Headers:
    low: tuple[str, ...] | None = None
    ap: tuple[str, ...] | None = None
    dummy: str | None = None


def _extract_headers(text: str) -> tuple[str, _Headers]:
    """Pull `low:` / `ap:` / `dummy:` lines out, blanking them in place so
    token positions still match the original file."""
    headers = _Headers()
    out_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        key = stripped.split(":", 1)[0].strip() if ":" in stripped else None
        if key in ("low", "ap", "dummy"):
            names = stripped.split(":", 1)[1].replace(",", " ").split()
            if not names:
                raise ParseError(f"empty {key}: declaration", lineno)
            if key == "dummy":
                if len(names) != 1:
                    raise ParseError("dummy: declares exactly one proposition", lineno)
                headers.dummy = names[0]
            elif key == "low":
                headers.low = tuple(names)
            else:
                headers.ap = tuple(names)
            out_lines.append("")
        else:
            out_lines.append(raw)
    return "\n".join(out_lines), headers


class _Parser:
    def __init__(self, tokens: list[_Token], headers: _Headers):
        self.toks = tokens
        self.pos = 0
        self.headers = headers

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Token:
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text!r}", t.line, t.col)
        return t

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    # grammar ---------------------------------------------------------------

    def parse(self) -> Formula:
        prefix = []
        while self.peek().kind == "kw" and self.peek().text in ("forall", "exists"):
            q = self.next().text
            var = self.expect("ident").text
            self.expect(".")
            prefix.append((q, var))
        body = self.parse_iff()
        t = self.peek()
        if t.kind != "eof":
            if t.kind == "kw" and t.text in ("forall", "exists"):
                raise ParseError("quantifier not in prefix position", t.line, t.col)
            raise ParseError(f"unexpected trailing input {t.text!r}", t.line, t.col)
        return attach_prefix(prefix, body)

    def parse_iff(self) -> Formula:
        left = self.parse_implies()
        while self.peek().kind == "<->":
            self.next()
            left = iff(left, self.parse_implies())
        return left

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek().kind == "->":
            self.next()
            return implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.peek().kind == "|":
            self.next()
            left = left | self.parse_and()
        return left

    def parse_and(self) -> Formula:
        left = self.parse_until()
        while self.peek().kind == "&":
            self.next()
            left = left & self.parse_until()
        return left

    def parse_until(self) -> Formula:
        left = self.parse_unary()
        t = self.peek()
        if t.kind == "kw" and t.text in ("U", "R"):
            op = self.next().text
            seq = self.parse_discount_opt()
            right = self.parse_until()  # right-associative
            if op == "U":
                return DiscountedUntil(seq, left, right) if seq else Until(left, right)
            return DiscountedRelease(seq, left, right) if seq else Release(left, right)
        return left

    def parse_discount_opt(self) -> DiscountSeq | None:
        if self.peek().kind != "[":
            return None
        self.next()
        t = self.next()
        if t.kind == "kw" and t.text == "exp":
            num = self.expect("number")
            lam = parse_rational(num.text, num.line, num.col)
            if not (ZERO < lam < ONE):
                raise ParseError("discount factor must lie strictly between 0 and 1",
                                 num.line, num.col)
            seq = DiscountSeq("exp", lam)
        elif t.kind == "kw" and t.text == "harm":
            seq = DiscountSeq("harm")
        else:
            raise ParseError(f"expected discount spec, found {t.text!r}", t.line, t.col)
        self.expect("]")
        return seq

    def parse_unary(self) -> Formula:
        t = self.peek()
        if t.kind == "!":
            self.next()
            return not_(self.parse_unary())
        if t.kind == "kw" and t.text == "X":
            self.next()
            return Next(self.parse_unary())
        if t.kind == "kw" and t.text in ("F", "G"):
            op = self.next().text
            seq = self.parse_discount_opt()
            sub = self.parse_unary()
            if op == "F":
                return finally_disc(seq, sub) if seq else finally_(sub)
            return globally_disc(seq, sub) if seq else globally(sub)
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        t = self.peek()
        if t.kind == "(":
            self.next()
            inner = self.parse_iff()
            self.expect(")")
            return inner
        if t.kind == "kw":
            if t.text == "true":
                self.next()
                return TRUE
            if t.text == "false":
                self.next()
                return FALSE
            if t.text in ("oplus", "scale", "gt"):
                return self.parse_param_func()
            if t.text == "agree":
                self.next()
                self.expect("(")
                a = self.parse_iff()
                self.expect(",")
                b = self.parse_iff()
                self.expect(")")
                return agree(a, b)
            if t.text in ("loweq", "ratio", "dummy"):
                return self.parse_macro()
            if t.text in ("forall", "exists"):
                raise ParseError("quantifier not in prefix position", t.line, t.col)
            raise ParseError(f"unexpected keyword {t.text!r}", t.line, t.col)
        if t.kind == "ident":
            prop = self.next().text
            self.expect("@")
            var = self.expect("ident").text
            return Atom(prop, var)
        raise self.error(f"unexpected token {t.text!r}")

    def parse_param_func(self) -> Formula:
        name = self.next().text
        self.expect("(")
        params = [self.parse_number()]
        while self.peek().kind == ",":
            self.next()
            params.append(self.parse_number())
        self.expect(";")
        args = [self.parse_iff()]
        while self.peek().kind == ",":
            self.next()
            args.append(self.parse_iff())
        self.expect(")")
        if name == "scale":
            if len(params) != 1 or len(args) != 1:
                raise self.error("scale takes one parameter and one argument")
            return scale(params[0], args[0])
        if name == "gt":
            if len(params) != 1 or len(args) != 1:
                raise self.error("gt takes one parameter and one argument")
            return threshold_gt(params[0], args[0])
        # oplus: one coefficient per argument, or a single alpha for the
        # binary weighted average alpha*x + (1-alpha)*y
        if len(params) == 1 and len(args) == 2:
            params = [params[0], ONE - params[0]]
        if len(params) != len(args):
            raise self.error("oplus needs one coefficient per argument")
        return oplus(params, args)

    def parse_number(self) -> Fraction:
        t = self.expect("number")
        value = parse_rational(t.text, t.line, t.col)
        require_unit(value, "function parameter")
        return value

    def parse_macro(self) -> Formula:
        t = self.next()
        name = t.text
        self.expect("(")
        vars_ = [self.expect("ident").text]
        while self.peek().kind == ",":
            self.next()
            vars_.append(self.expect("ident").text)
        self.expect(")")
        if name in ("loweq", "ratio"):
            if len(vars_) != 2:
                raise ParseError(f"{name} takes two trace variables", t.line, t.col)
            if not self.headers.low:
                raise ParseError(f"{name} requires a `low:` declaration", t.line, t.col)
            fn = loweq if name == "loweq" else ratio
            return fn(self.headers.low, vars_[0], vars_[1])
        if len(vars_) != 1:
            raise ParseError("dummy takes one trace variable", t.line, t.col)
        if not self.headers.dummy or self.headers.ap is None:
            raise ParseError("dummy requires `dummy:` and `ap:` declarations", t.line, t.col)
        low = set(self.headers.low or ())
        high = [p for p in self.headers.ap if p not in low and p != self.headers.dummy]
        return dummy(self.headers.dummy, high, vars_[0])


def parse_formula(text: str, free: tuple[str, ...] = ()) -> Formula:
    """Parse one formula from `.hq` text (headers and comments allowed)."""
    body_text, headers = _extract_headers(text)
    phi = _Parser(_tokenize(body_text), headers).parse()
    validate(phi, free)
    return phi


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------

# precedence levels: higher binds tighter
_PREC_IFF, _PREC_IMPL, _PREC_OR, _PREC_AND, _PREC_UNTIL, _PREC_UNARY, _PREC_ATOM = range(7)


def _disc_suffix(seq: DiscountSeq | None) -> str:
    return f"[{seq}]" if seq else ""


def _fmt(phi: Formula, ctx_prec: int) -> str:
    text, prec = _fmt_inner(phi)
    if prec < ctx_prec:
        return f"({text})"
    return text


def _fmt_inner(phi: Formula) -> tuple[str, int]:
    if isinstance(phi, TrueF):
        return "true", _PREC_ATOM
    if isinstance(phi, FalseF):
        return "false", _PREC_ATOM
    if isinstance(phi, Atom):
        return f"{phi.prop}@{phi.var}", _PREC_ATOM
    if isinstance(phi, Next):
        return f"X {_fmt(phi.sub, _PREC_UNARY)}", _PREC_UNARY
    if isinstance(phi, (Until, DiscountedUntil)):
        seq = phi.seq if isinstance(phi, DiscountedUntil) else None
        if isinstance(phi.lhs, TrueF):
            return f"F{_disc_suffix(seq)} {_fmt(phi.rhs, _PREC_UNARY)}", _PREC_UNARY
        lhs = _fmt(phi.lhs, _PREC_UNTIL + 1)
        rhs = _fmt(phi.rhs, _PREC_UNTIL)
        return f"{lhs} U{_disc_suffix(seq)} {rhs}", _PREC_UNTIL
    if isinstance(phi, (Release, DiscountedRelease)):
        seq = phi.seq if isinstance(phi, DiscountedRelease) else None
        if isinstance(phi.lhs, FalseF):
            return f"G{_disc_suffix(seq)} {_fmt(phi.rhs, _PREC_UNARY)}", _PREC_UNARY
        lhs = _fmt(phi.lhs, _PREC_UNTIL + 1)
        rhs = _fmt(phi.rhs, _PREC_UNTIL)
        return f"{lhs} R{_disc_suffix(seq)} {rhs}", _PREC_UNTIL
    if isinstance(phi, Func):
        k = phi.sym.kind
        if k is FuncKind.NOT:
            return f"!{_fmt(phi.args[0], _PREC_UNARY)}", _PREC_UNARY
        if k is FuncKind.OR:
            return " | ".join(_fmt(a, _PREC_OR + 1) for a in phi.args), _PREC_OR
        if k is FuncKind.AND:
            return " & ".join(_fmt(a, _PREC_AND + 1) for a in phi.args), _PREC_AND
        if k is FuncKind.IMPLIES:
            a = _fmt(phi.args[0], _PREC_IMPL + 1)
            b = _fmt(phi.args[1], _PREC_IMPL)
            return f"{a} -> {b}", _PREC_IMPL
        if k is FuncKind.IFF:
            a = _fmt(phi.args[0], _PREC_IFF + 1)
            b = _fmt(phi.args[1], _PREC_IFF + 1)
            return f"{a} <-> {b}", _PREC_IFF
        args = ", ".join(_fmt(a, 0) for a in phi.args)
        if k is FuncKind.AGREE:
            return f"agree({args})", _PREC_ATOM
        params = ", ".join(format_rational(p) for p in phi.sym.params)
        name = {FuncKind.OPLUS: "oplus", FuncKind.SCALE: "scale",
                FuncKind.THRESHOLD_GT: "gt"}[k]
        return f"{name}({params}; {args})", _PREC_ATOM
    raise AssertionError(f"cannot print {phi!r}")


def print_formula(phi: Formula) -> str:
    prefix, body = split_prefix(phi)
    head = "".join(f"{q} {v}. " for q, v in prefix)
    return head + _fmt(body, 0)
