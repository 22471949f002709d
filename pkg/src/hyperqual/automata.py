"""Nondeterministic Buchi automata over weighted-letter alphabets.

Letters are tuples of weights aligned with a proposition list, so the
alphabet of an automaton over propositions AP' and weight set W is
W^{AP'}. The module provides the Boolean operations the model checking
pipeline needs (product, union, complementation, projection), emptiness
with witness extraction, and the language-preserving reductions (trim,
bisimulation quotient, acceptance saturation) that keep complementation
inputs small.
"""

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import StructureError, StateCapExceededError
from .kripke import Lasso, Letter, WeightedKripke, self_product
from .rationals import format_rational

DEFAULT_STATE_CAP = 200_000


def state_cap() -> int:
    return int(os.environ.get("HYPERQUAL_STATE_CAP", DEFAULT_STATE_CAP))


@dataclass(eq=False)
class Nba:
    ap: tuple[str, ...]
    weights: frozenset
    states: frozenset
    initial: frozenset
    transitions: dict          # state -> dict[letter -> frozenset[state]]
    accepting: frozenset

    def letters(self):
        return itertools.product(sorted(self.weights), repeat=len(self.ap))

    def successors(self, state, letter: Letter) -> frozenset:
        return self.transitions.get(state, {}).get(letter, frozenset())

    def same_alphabet(self, other: "Nba") -> bool:
        return self.ap == other.ap and (not self.ap or self.weights == other.weights)

    def num_states(self) -> int:
        return len(self.states)

    def accepts_lasso(self, lasso: Lasso) -> bool:
        if lasso.ap != self.ap:
            raise StructureError("lasso alphabet does not match automaton")
        return not is_empty(intersect(self, lasso_nba(lasso, self.weights)))

    def dump(self) -> str:
        """Debug text format: states, initial, accepting, transitions."""
        index = {s: i for i, s in enumerate(sorted(self.states, key=repr))}
        lines = [
            "ap: " + " ".join(self.ap),
            "weights: " + " ".join(format_rational(w) for w in sorted(self.weights)),
            "states: " + " ".join(str(index[s]) for s in index),
            "init: " + " ".join(str(index[s]) for s in sorted(self.initial, key=repr)),
            "accept: " + " ".join(str(index[s]) for s in sorted(self.accepting, key=repr)),
            "trans:",
        ]
        for s in sorted(self.states, key=repr):
            for letter, targets in sorted(self.transitions.get(s, {}).items()):
                text = ",".join(
                    f"{p}={format_rational(w)}" for p, w in zip(self.ap, letter)
                )
                for t in sorted(targets, key=repr):
                    lines.append(f"  {index[s]} [{text}] {index[t]}")
        return "\n".join(lines) + "\n"


def make_nba(ap, weights, states, initial, transitions, accepting) -> Nba:
    ap = tuple(ap)
    weights = frozenset(Fraction(w) for w in weights)
    trans: dict = {}
    for (s, letter), targets in transitions.items():
        trans.setdefault(s, {})[tuple(letter)] = frozenset(targets)
    return Nba(ap, weights, frozenset(states), frozenset(initial), trans, frozenset(accepting))


def universal_nba(ap, weights) -> Nba:
    q = "u"
    trans = {q: {letter: frozenset({q}) for letter in
                 itertools.product(sorted(frozenset(weights)), repeat=len(ap))}}
    return Nba(tuple(ap), frozenset(weights), frozenset({q}), frozenset({q}), trans,
               frozenset({q}))


def empty_nba(ap, weights) -> Nba:
    return Nba(tuple(ap), frozenset(weights), frozenset(), frozenset(), {}, frozenset())


def lasso_nba(lasso: Lasso, weights) -> Nba:
    """Automaton accepting exactly the given lasso trace."""
    states = [("s", i) for i in range(len(lasso.stem))] + \
             [("l", i) for i in range(len(lasso.loop))]
    trans: dict = {}
    for i, letter in enumerate(lasso.stem):
        src = ("s", i)
        dst = ("s", i + 1) if i + 1 < len(lasso.stem) else ("l", 0)
        trans[src] = {letter: frozenset({dst})}
    for i, letter in enumerate(lasso.loop):
        src = ("l", i)
        dst = ("l", (i + 1) % len(lasso.loop))
        trans[src] = {letter: frozenset({dst})}
    # states are entered *before* reading their letter; initial reads the
    # first letter of the stem (or loop when the stem is empty)
    initial = ("s", 0) if lasso.stem else ("l", 0)
    return Nba(lasso.ap, frozenset(weights), frozenset(states), frozenset({initial}),
               trans, frozenset(states))


def kripke_to_nba(k: WeightedKripke, n: int, var_names: tuple[str, ...] | None = None) -> Nba:
    """NBA accepting exactly the traces of the n-fold self product of K."""
    prod = self_product(k, n, var_names)
    init = ("init",)
    states = set(prod.states) | {init}
    trans: dict = {}
    by_letter: dict[Letter, list] = {}
    for s in prod.states:
        by_letter.setdefault(prod.letter(s), []).append(s)
    trans[init] = {
        letter: frozenset(s for s in group if s in prod.initial)
        for letter, group in by_letter.items()
        if any(s in prod.initial for s in group)
    }
    for s in prod.states:
        out: dict = {}
        for t in prod.transitions[s]:
            out.setdefault(prod.letter(t), set()).add(t)
        trans[s] = {letter: frozenset(ts) for letter, ts in out.items()}
    return Nba(prod.ap, prod.weights, frozenset(states), frozenset({init}), trans,
               frozenset(states))


# ---------------------------------------------------------------------------
# Boolean operations
# ---------------------------------------------------------------------------

def _check_alphabet(a: Nba, b: Nba):
    if not a.same_alphabet(b):
        raise StructureError("automata alphabets differ")


def intersect(a: Nba, b: Nba) -> Nba:
    """Buchi product; degenerates to the plain product when one side is
    all-accepting, otherwise uses the two-phase construction."""
    _check_alphabet(a, b)
    a_all = a.accepting >= a.states
    b_all = b.accepting >= b.states
    if a_all or b_all:
        return _plain_product(a, b, accept_from="b" if a_all else "a")
    return _phase_product(a, b)


def _plain_product(a: Nba, b: Nba, accept_from: str) -> Nba:
    trans: dict = {}
    states = set()
    frontier = [(p, q) for p in a.initial for q in b.initial]
    states.update(frontier)
    initial = frozenset(frontier)
    while frontier:
        nxt = []
        for (p, q) in frontier:
            out: dict = {}
            pa = a.transitions.get(p, {})
            qb = b.transitions.get(q, {})
            for letter, pts in pa.items():
                qts = qb.get(letter)
                if not qts:
                    continue
                targets = {(pt, qt) for pt in pts for qt in qts}
                out[letter] = frozenset(targets)
                for t in targets:
                    if t not in states:
                        states.add(t)
                        nxt.append(t)
            trans[(p, q)] = out
        frontier = nxt
    if accept_from == "a":
        accepting = frozenset(s for s in states if s[0] in a.accepting)
    else:
        accepting = frozenset(s for s in states if s[1] in b.accepting)
    return Nba(a.ap, a.weights, frozenset(states), initial, trans, accepting)


def _phase_product(a: Nba, b: Nba) -> Nba:
    # phase 1 waits for an accepting a-state, phase 2 for an accepting
    # b-state; each 2->1 switch pinpoints a position where both have
    # recurred, so those switch states form the acceptance set
    def advance(phase, p, q):
        if phase == 1:
            return 2 if p in a.accepting else 1
        return 1 if q in b.accepting else 2

    initial = frozenset((p, q, 1) for p in a.initial for q in b.initial)
    states = set(initial)
    frontier = list(initial)
    trans: dict = {}
    while frontier:
        nxt = []
        for (p, q, phase) in frontier:
            out: dict = {}
            pa = a.transitions.get(p, {})
            qb = b.transitions.get(q, {})
            for letter, pts in pa.items():
                qts = qb.get(letter)
                if not qts:
                    continue
                new_phase = advance(phase, p, q)
                targets = {(pt, qt, new_phase) for pt in pts for qt in qts}
                out[letter] = frozenset(targets)
                for t in targets:
                    if t not in states:
                        states.add(t)
                        nxt.append(t)
            trans[(p, q, phase)] = out
        frontier = nxt
    accepting = frozenset(s for s in states if s[2] == 2 and s[1] in b.accepting)
    return Nba(a.ap, a.weights, frozenset(states), initial, trans, accepting)


def union(a: Nba, b: Nba) -> Nba:
    _check_alphabet(a, b)
    def tag(x, t):
        return (t, x)
    states = {tag(s, 0) for s in a.states} | {tag(s, 1) for s in b.states}
    trans: dict = {}
    for src, aut, t in [(a, a, 0), (b, b, 1)]:
        for s, out in aut.transitions.items():
            trans[tag(s, t)] = {
                letter: frozenset(tag(x, t) for x in targets)
                for letter, targets in out.items()
            }
    initial = {tag(s, 0) for s in a.initial} | {tag(s, 1) for s in b.initial}
    accepting = {tag(s, 0) for s in a.accepting} | {tag(s, 1) for s in b.accepting}
    return Nba(a.ap, a.weights, frozenset(states), frozenset(initial), trans,
               frozenset(accepting))


def union_all(automata, ap, weights) -> Nba:
    out = empty_nba(ap, weights)
    for a in automata:
        out = union(out, a)
    return out


def project(a: Nba, keep) -> Nba:
    """Apply the alphabet morphism that forgets all propositions not in
    `keep`; the language becomes the image of L(a)."""
    keep = set(keep)
    unknown = keep - set(a.ap)
    if unknown:
        raise StructureError(f"unknown propositions {sorted(unknown)}")
    idx = [i for i, p in enumerate(a.ap) if p in keep]
    new_ap = tuple(a.ap[i] for i in idx)

    def shrink(letter):
        return tuple(letter[i] for i in idx)

    trans: dict = {}
    for s, out in a.transitions.items():
        merged: dict = {}
        for letter, targets in out.items():
            small = shrink(letter)
            merged.setdefault(small, set()).update(targets)
        trans[s] = {l: frozenset(ts) for l, ts in merged.items()}
    return Nba(new_ap, a.weights, a.states, a.initial, trans, a.accepting)


# ---------------------------------------------------------------------------
# Reachability, trimming, minimization
# ---------------------------------------------------------------------------

def _reachable(a: Nba) -> set:
    seen = set(a.initial)
    stack = list(a.initial)
    while stack:
        s = stack.pop()
        for targets in a.transitions.get(s, {}).values():
            for t in targets:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
    return seen


def _sccs(states, succ) -> list[set]:
    """Iterative Tarjan; returns strongly connected components."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    out = []
    counter = itertools.count()
    for root in states:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for t in it:
                if t not in index:
                    index[t] = low[t] = next(counter)
                    stack.append(t)
                    on_stack.add(t)
                    work.append((t, iter(succ(t))))
                    advanced = True
                    break
                if t in on_stack:
                    low[node] = min(low[node], index[t])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    s = stack.pop()
                    on_stack.discard(s)
                    comp.add(s)
                    if s == node:
                        break
                out.append(comp)
    return out


def _all_succ(a: Nba):
    def succ(s):
        seen = set()
        for targets in a.transitions.get(s, {}).values():
            for t in targets:
                if t not in seen:
                    seen.add(t)
                    yield t
    return succ


def _live_states(a: Nba, reachable: set) -> set:
    """States on some accepting lasso run: can reach a cycle through an
    accepting state."""
    succ = _all_succ(a)
    comps = _sccs(reachable, lambda s: (t for t in succ(s) if t in reachable))
    comp_of = {}
    for i, comp in enumerate(comps):
        for s in comp:
            comp_of[s] = i
    cyclic = set()
    for i, comp in enumerate(comps):
        has_cycle = len(comp) > 1 or any(
            s in targets for s in comp
            for targets in a.transitions.get(s, {}).values()
        )
        if has_cycle and comp & a.accepting:
            cyclic.add(i)
    # backward closure: states that can reach a live component
    live = {s for s in reachable if comp_of[s] in cyclic}
    changed = True
    while changed:
        changed = False
        for s in reachable:
            if s in live:
                continue
            for targets in a.transitions.get(s, {}).values():
                if targets & live:
                    live.add(s)
                    changed = True
                    break
    return live


def trim(a: Nba) -> Nba:
    """Restrict to states that lie on some accepting run (language-preserving)."""
    live = _live_states(a, _reachable(a))
    if not live:
        return empty_nba(a.ap, a.weights)
    trans = {
        s: {letter: targets & live for letter, targets in out.items() if targets & live}
        for s, out in a.transitions.items() if s in live
    }
    trans = {s: {l: ts for l, ts in out.items() if ts} for s, out in trans.items()}
    return Nba(a.ap, a.weights, frozenset(live), a.initial & live, trans,
               a.accepting & live)


def bisim_quotient(a: Nba) -> Nba:
    """Quotient by forward bisimulation (same acceptance flag, matching
    successor classes per letter); preserves the language."""
    if not a.states:
        return a
    block = {s: int(s in a.accepting) for s in a.states}
    n_classes = len(set(block.values()))
    while True:
        sig = {}
        for s in a.states:
            outsig = tuple(sorted(
                (letter, tuple(sorted({block[t] for t in targets})))
                for letter, targets in a.transitions.get(s, {}).items()
                if targets
            ))
            sig[s] = (block[s], outsig)
        numbering: dict = {}
        new_block = {}
        for s in sorted(a.states, key=repr):
            key = sig[s]
            if key not in numbering:
                numbering[key] = len(numbering)
            new_block[s] = numbering[key]
        block = new_block
        if len(numbering) == n_classes:
            break
        n_classes = len(numbering)
    reps: dict = {}
    for s in a.states:
        reps.setdefault(block[s], s)
    trans: dict = {}
    for cls, rep in reps.items():
        trans[cls] = {
            letter: frozenset(block[t] for t in targets)
            for letter, targets in a.transitions.get(rep, {}).items()
        }
    states = frozenset(reps)
    initial = frozenset(block[s] for s in a.initial)
    accepting = frozenset(block[s] for s in a.accepting)
    return Nba(a.ap, a.weights, states, initial, trans, accepting)


def reduce_nba(a: Nba) -> Nba:
    return bisim_quotient(trim(a))


# ---------------------------------------------------------------------------
# Complementation
# ---------------------------------------------------------------------------

def saturate_accepting(a: Nba) -> Nba:
    """Add to the acceptance set every state through which no
    acceptance-free cycle passes; the language is unchanged because any
    run recurring through such a state already recurs through an
    accepting one."""
    accepting = set(a.accepting)
    while True:
        rest = a.states - accepting
        succ = _all_succ(a)
        comps = _sccs(rest, lambda s: (t for t in succ(s) if t in rest))
        safe = set()
        for comp in comps:
            if len(comp) == 1:
                s = next(iter(comp))
                if not any(
                    s in targets for targets in a.transitions.get(s, {}).values()
                ):
                    safe.add(s)
        if not safe:
            break
        accepting |= safe
    if accepting == a.accepting:
        return a
    return Nba(a.ap, a.weights, a.states, a.initial, a.transitions, frozenset(accepting))


def _subset_complement(a: Nba) -> Nba:
    """Complement of an all-accepting automaton: such an automaton accepts
    exactly the words with an infinite run, so the complement is reaching
    the empty subset in the determinization."""
    letters = list(a.letters())
    start = frozenset(a.initial)
    states = {start}
    trans: dict = {}
    frontier = [start]
    while frontier:
        subset = frontier.pop()
        out = {}
        for letter in letters:
            nxt = frozenset(
                t for s in subset for t in a.successors(s, letter)
            )
            out[letter] = frozenset({nxt})
            if nxt not in states:
                states.add(nxt)
                frontier.append(nxt)
        trans[subset] = out
    empty: frozenset = frozenset()
    accepting = frozenset({empty}) if empty in states else frozenset()
    return Nba(a.ap, a.weights, frozenset(states), frozenset({start}), trans, accepting)


def complement(a: Nba, cap: int | None = None) -> Nba:
    """Rank-based complementation.

    The input is first trimmed, quotiented and acceptance-saturated; if
    every remaining state is accepting the cheap subset construction
    applies, otherwise the level-ranking construction runs with maximum
    rank 2(n - |F|) and an explicit state cap.
    """
    cap = cap if cap is not None else state_cap()
    a = reduce_nba(a)
    if not a.states:
        return universal_nba(a.ap, a.weights)
    if not a.ap or len(a.weights) == 1:
        # one-letter alphabet: a single infinite word exists, and surviving
        # the trim means the automaton accepts it, so the complement is empty
        return empty_nba(a.ap, a.weights)
    a = saturate_accepting(a)
    if a.accepting >= a.states:
        return reduce_nba(_subset_complement(a))
    return reduce_nba(_rank_complement(a, cap))


def _rank_complement(a: Nba, cap: int) -> Nba:
    states = sorted(a.states, key=repr)
    n = len(states)
    max_rank = 2 * (n - len(a.accepting & a.states))
    letters = list(a.letters())

    def rank_choices(bound: int, q) -> list[int]:
        # Offering only bound and bound-1 keeps the construction complete:
        # merges force arbitrary drops through the bound itself, and unit
        # decreases let every path descend to its final odd rank, while the
        # enumeration stays linear instead of exponential in the rank range.
        choices = [r for r in (bound, bound - 1) if r >= 0]
        if q in a.accepting:
            choices = [r for r in choices if r % 2 == 0]
        return choices

    def successors(ranking: tuple, owing: frozenset, letter) -> list:
        # ranking: tuple of (state, rank); compute per-successor bounds
        bounds: dict = {}
        for q, r in ranking:
            for t in a.successors(q, letter):
                bounds[t] = min(bounds.get(t, max_rank), r)
        targets = sorted(bounds, key=repr)
        moved = frozenset(
            t for q, r in ranking if q in owing for t in a.successors(q, letter)
        )
        options_per_target = [rank_choices(bounds[t], t) for t in targets]
        out = []
        for combo in itertools.product(*options_per_target):
            new_ranking = tuple(zip(targets, combo))
            evens = frozenset(t for t, r in new_ranking if r % 2 == 0)
            if owing:
                new_owing = frozenset(moved) & evens
            else:
                new_owing = evens
            out.append((new_ranking, new_owing))
        return out

    start_ranking = tuple((q, max_rank) for q in sorted(a.initial, key=repr))
    start = (start_ranking, frozenset())
    seen = {start}
    frontier = [start]
    trans: dict = {}
    while frontier:
        node = frontier.pop()
        ranking, owing = node
        out: dict = {}
        for letter in letters:
            succ = successors(ranking, owing, letter)
            out[letter] = frozenset(succ)
            for t in succ:
                if t not in seen:
                    seen.add(t)
                    if len(seen) > cap:
                        raise StateCapExceededError("complementation", cap)
                    frontier.append(t)
        trans[node] = out
    accepting = frozenset(s for s in seen if not s[1])
    return Nba(a.ap, a.weights, frozenset(seen), frozenset({start}), trans, accepting)


# ---------------------------------------------------------------------------
# Emptiness and witnesses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AcceptedLasso:
    lasso: Lasso
    run_stem: tuple
    run_loop: tuple

    def validate(self, a: Nba) -> bool:
        """Re-simulate the run and check the acceptance condition."""
        if not self.run_loop:
            return False
        run = list(self.run_stem) + list(self.run_loop) + [self.run_loop[0]]
        word = list(self.lasso.stem) + list(self.lasso.loop)
        if len(run) != len(word) + 1 or run[0] not in a.initial:
            return False
        for i, letter in enumerate(word):
            if run[i + 1] not in a.successors(run[i], letter):
                return False
        return any(q in a.accepting for q in self.run_loop)


def _bfs_path(a: Nba, sources, goal_test, within=None):
    """Shortest (state, letter) path from any source to a goal state.
    Returns (goal, [(state, letter), ...]) or None."""
    prev: dict = {}
    seen = set(sources)
    queue = list(sources)
    for s in queue:
        if goal_test(s):
            return s, []
    i = 0
    while i < len(queue):
        s = queue[i]
        i += 1
        for letter, targets in sorted(a.transitions.get(s, {}).items()):
            for t in sorted(targets, key=repr):
                if t in seen or (within is not None and t not in within):
                    continue
                seen.add(t)
                prev[t] = (s, letter)
                if goal_test(t):
                    path = []
                    node = t
                    while node in prev:
                        p, letter2 = prev[node]
                        path.append((p, letter2))
                        node = p
                    path.reverse()
                    return t, path
                queue.append(t)
    return None


def witness(a: Nba) -> AcceptedLasso | None:
    """An accepting lasso run, or None when the language is empty."""
    reachable = _reachable(a)
    succ = _all_succ(a)
    comps = _sccs(reachable, lambda s: (t for t in succ(s) if t in reachable))
    target = None
    for comp in comps:
        for q in sorted(comp & a.accepting, key=repr):
            has_cycle = len(comp) > 1 or any(
                q in targets for targets in a.transitions.get(q, {}).values()
            )
            if has_cycle:
                target = (q, frozenset(comp))
                break
        if target:
            break
    if target is None:
        return None
    q, comp = target
    stem_hit = _bfs_path(a, sorted(a.initial, key=repr), lambda s: s == q)
    assert stem_hit is not None
    _, stem_steps = stem_hit

    # a cycle through q inside its component
    first = []
    for letter, targets in sorted(a.transitions.get(q, {}).items()):
        for t in sorted(targets & comp, key=repr):
            first.append((letter, t))
    cycle_steps = None
    for letter, t in first:
        if t == q:
            cycle_steps = [(q, letter)]
            break
        back = _bfs_path(a, [t], lambda s: s == q, within=comp)
        if back is not None:
            _, steps = back
            cycle_steps = [(q, letter)] + steps
            break
    assert cycle_steps is not None

    stem_letters = tuple(letter for _, letter in stem_steps)
    loop_letters = tuple(letter for _, letter in cycle_steps)
    run_stem = tuple(s for s, _ in stem_steps)
    run_loop = (q,) + tuple(
        s for s, _ in cycle_steps[1:]
    )
    lasso = Lasso(a.ap, stem_letters, loop_letters)
    return AcceptedLasso(lasso, run_stem, run_loop)


def is_empty(a: Nba) -> bool:
    return witness(a) is None
