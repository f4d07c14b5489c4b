"""Hardness-instance generators (EXP and TOWER reductions) and the
alternating-Turing-machine acceptance oracle used as ground truth.

The generators mirror the reduction constructions verbatim (predicate names
follow the source identifiers for auditability); every emitted rule is
asserted guarded.  Positions of the EXP tape are constants p1..pP; the TOWER
construction uses a, c1_0.., and bit constants ck_i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import CircfragError, KappaZero, NonTermination, SpaceExceeded
from .knowledge import (CircPattern, ConjunctiveQuery, Database,
                        ExistentialRule, UnionQuery, atomic_query)
from .syntax import Atom, Const, Term, Var

BLANK = "_"


@dataclass(frozen=True)
class AtmSpec:
    """Alternating Turing machine: (Q, Sigma_in, Gamma, delta, q0, g) plus an
    explicit space polynomial (coefficient list, lowest degree first)."""
    states: tuple
    input_alphabet: tuple
    tape_alphabet: tuple
    delta: tuple      # ((q, s), ((q1, s1, d1), (q2, s2, d2))) entries
    start: str
    kinds: tuple      # (state, kind) with kind in univ|exist|accept|reject
    space_coeffs: tuple = (0, 1)   # p(n) = sum coeffs[i] * n^i

    def __post_init__(self):
        if BLANK not in self.tape_alphabet or BLANK in self.input_alphabet:
            raise CircfragError("blank must be in the tape alphabet only")
        if not set(self.input_alphabet) <= set(self.tape_alphabet):
            raise CircfragError("input alphabet must be contained in the tape alphabet")
        kinds = dict(self.kinds)
        if set(kinds) != set(self.states):
            raise CircfragError("every state needs a kind")
        if self.start not in self.states:
            raise CircfragError("unknown start state")
        table = dict(self.delta)
        for q in self.states:
            if kinds[q] in ("accept", "reject"):
                continue
            for s in self.tape_alphabet:
                if (q, s) not in table or len(table[(q, s)]) != 2:
                    raise CircfragError(
                        f"non-halting state {q!r} needs exactly two transitions on {s!r}")

    def kind(self, q: str) -> str:
        return dict(self.kinds)[q]

    def transitions(self, q: str, s: str) -> tuple:
        return dict(self.delta)[(q, s)]

    def space(self, n: int) -> int:
        return sum(c * n ** i for i, c in enumerate(self.space_coeffs))


def atm_accepts(m: AtmSpec, word: str, space_cap: Optional[int] = None) -> bool:
    """Acceptance of the alternating computation tree: universal states are
    conjunctions, existential states disjunctions.  Cycles on the current
    path raise NonTermination; the head leaving [1, space_cap] from a
    non-halting configuration raises SpaceExceeded."""
    if any(s not in m.input_alphabet for s in word):
        raise CircfragError("word outside the input alphabet")
    cap = m.space(len(word)) if space_cap is None else space_cap
    tape0 = tuple(word[i] if i < len(word) else BLANK for i in range(max(cap, len(word))))
    memo: Dict[tuple, bool] = {}
    onpath: set = set()

    def run(q: str, head: int, tape: tuple) -> bool:
        kind = m.kind(q)
        if kind == "accept":
            return True
        if kind == "reject":
            return False
        if head < 1 or head > cap:
            raise SpaceExceeded(f"head at {head} outside 1..{cap}")
        key = (q, head, tape)
        if key in memo:
            return memo[key]
        if key in onpath:
            raise NonTermination(f"configuration revisited: {key}")
        onpath.add(key)
        results = []
        for q2, s2, move in m.transitions(q, tape[head - 1]):
            tape2 = tape[:head - 1] + (s2,) + tape[head:]
            head2 = head + (1 if move == ">" else -1)
            results.append(run(q2, head2, tape2))
        onpath.discard(key)
        out = all(results) if kind == "univ" else any(results)
        memo[key] = out
        return out

    return run(m.start, 1, tape0)


# ---------------------------------------------------------------------------
# Rule-building helpers
# ---------------------------------------------------------------------------

def _rule(body, head, exist=()):
    r = ExistentialRule(tuple(body), None if head is None else tuple(head),
                        tuple(exist))
    if not r.is_guarded:
        raise CircfragError(f"generated rule is not guarded: {r}")
    return r


def _v(*names):
    return [Var(n) for n in names]


# ---------------------------------------------------------------------------
# The EXP reduction
# ---------------------------------------------------------------------------

def gen_exp_instance(m: AtmSpec, word: str):
    """Existential rules + database + pattern (minimize pos only) + the goal
    AQ, following the polynomial-space reduction."""
    n = len(word)
    p = m.space(n)
    if p < max(1, n):
        raise CircfragError("space polynomial too small for the word")
    pos = [f"p{i}" for i in range(1, p + 1)]
    x, y, xh, yh, xp, yp = _v("x", "y", "xh", "yh", "xp", "yp")

    facts: List[tuple] = []
    facts += [("pos", (c,)) for c in pos]
    facts.append((f"conf_{m.start}", ("a", pos[0])))
    for i in range(1, n + 1):
        facts.append((f"tape_{_sym(word[i - 1])}", ("a", pos[i - 1])))
    for i in range(n + 1, p + 1):
        facts.append((f"tape_{_sym(BLANK)}", ("a", pos[i - 1])))
    for i, j in itertools.product(range(1, p + 1), repeat=2):
        if j != i + 1:
            facts.append(("nextbar", (pos[i - 1], pos[j - 1])))
    facts += [("startbar", (c,)) for c in pos[1:]]
    facts += [("endbar", (c,)) for c in pos[:-1]]
    facts += [("getError", ("a", c)) for c in pos]

    rules: List[ExistentialRule] = []
    rules.append(_rule([Atom("next", x, y), Atom("nextbar", x, y)],
                       [Atom("error", x)]))
    rules.append(_rule([Atom("getError", x, y), Atom("error", y)],
                       [Atom("goal", x)]))
    rules.append(_rule([Atom("next", x, y)], [Atom("pos", x), Atom("pos", y)]))
    for q in m.states:
        rules.append(_rule([Atom(f"conf_{q}", x, xh)], [Atom("pos", xh)]))
    for s in m.tape_alphabet:
        rules.append(_rule([Atom(f"tape_{_sym(s)}", x, xp)], [Atom("pos", xp)]))
    for s, s2 in itertools.permutations(m.tape_alphabet, 2):
        if s < s2:
            rules.append(_rule([Atom(f"tape_{_sym(s)}", x, xp),
                                Atom(f"tape_{_sym(s2)}", x, xp)],
                               [Atom("error", xp)]))
    # uniqueness of state and head position: the confbar scan
    for q in m.states:
        rules.append(_rule([Atom(f"conf_{q}", x, xh)],
                           [Atom("confbar_left", x, xh), Atom("confbar_right", x, xh)]))
    for q2 in m.states:
        rules.append(_rule([Atom("confbar_left", x, xp), Atom("startbar", xp)],
                           [Atom("next", yp, xp), Atom(f"confbar_{q2}", x, yp),
                            Atom("confbar_left", x, yp)], exist=("yp",)))
        rules.append(_rule([Atom("confbar_right", x, xp), Atom("endbar", xp)],
                           [Atom("next", xp, yp), Atom(f"confbar_{q2}", x, yp),
                            Atom("confbar_right", x, yp)], exist=("yp",)))
    for q, q2 in itertools.permutations(m.states, 2):
        if q < q2:
            rules.append(_rule([Atom(f"conf_{q}", x, xh), Atom(f"conf_{q2}", x, xh)],
                               [Atom("error", xh)]))
    for q in m.states:
        rules.append(_rule([Atom(f"conf_{q}", x, xp), Atom(f"confbar_{q}", x, xp)],
                           [Atom("error", xp)]))
    # transitions
    for q in m.states:
        if m.kind(q) in ("accept", "reject"):
            continue
        for s in m.tape_alphabet:
            for i, (q2, s2, move) in enumerate(m.transitions(q, s), start=1):
                mov = Atom("next", xh, yh) if move == ">" else Atom("next", yh, xh)
                rules.append(_rule(
                    [Atom(f"conf_{q}", x, xh), Atom(f"tape_{_sym(s)}", x, xh)],
                    [Atom(f"nextConf{i}", x, y, xh), Atom(f"conf_{q2}", y, yh),
                     Atom(f"tape_{_sym(s2)}", y, xh), mov],
                    exist=("y", "yh")))
    # copy the untouched tape cells
    for i in (1, 2):
        rules.append(_rule([Atom(f"nextConf{i}", x, y, xh)],
                           [Atom("copy_left", x, y, xh), Atom("copy_right", x, y, xh)]))
    rules.append(_rule([Atom("copy_left", x, y, xp), Atom("startbar", xp)],
                       [Atom("next", yp, xp), Atom("copy_left", x, y, yp),
                        Atom("copy", x, y, yp)], exist=("yp",)))
    rules.append(_rule([Atom("copy_right", x, y, xp), Atom("endbar", xp)],
                       [Atom("next", xp, yp), Atom("copy_right", x, y, yp),
                        Atom("copy", x, y, yp)], exist=("yp",)))
    for s in m.tape_alphabet:
        rules.append(_rule([Atom("copy", x, y, xp), Atom(f"tape_{_sym(s)}", x, xp)],
                           [Atom(f"tape_{_sym(s)}", y, xp)]))
    # acceptance propagation
    for q in m.states:
        if m.kind(q) == "accept":
            rules.append(_rule([Atom(f"conf_{q}", x, xh)], [Atom("acc", x)]))
    for i in (1, 2):
        rules.append(_rule([Atom(f"nextConf{i}", x, y, xh), Atom("acc", y)],
                           [Atom(f"acc{i}", x)]))
    for q in m.states:
        if m.kind(q) == "univ":
            rules.append(_rule([Atom(f"conf_{q}", x, xh), Atom("acc1", x), Atom("acc2", x)],
                               [Atom("acc", x)]))
        if m.kind(q) == "exist":
            for i in (1, 2):
                rules.append(_rule([Atom(f"conf_{q}", x, xh), Atom(f"acc{i}", x)],
                                   [Atom("acc", x)]))
    rules.append(_rule([Atom("acc", x)], [Atom("goal", x)]))

    cp = CircPattern(minimized=("pos",))
    return tuple(rules), Database.make(facts), cp, atomic_query("goal", "a")


def _sym(s: str) -> str:
    return "blank" if s == BLANK else s


def gen_exp_instance_binary(m: AtmSpec, word: str):
    """The arity-two variant: nextConf_i loses its head-position component,
    the copy machinery is dropped, and per-symbol-pair query disjuncts catch
    tape cells that change away from the head."""
    rules, db, cp, goal = gen_exp_instance(m, word)
    x, y, xh, yh, p = _v("x", "y", "xh", "yh", "p")
    out: List[ExistentialRule] = []
    for r in rules:
        preds = {a.pred for a in r.body + (r.head or ())}
        if preds & {"copy", "copy_left", "copy_right"}:
            continue
        def fix(atom):
            if atom.pred.startswith("nextConf"):
                return Atom(atom.pred, *atom.args[:2])
            return atom
        out.append(ExistentialRule(tuple(fix(a) for a in r.body),
                                   None if r.head is None else tuple(fix(a) for a in r.head),
                                   r.exist_vars))
    for r in out:
        if not r.is_guarded:
            raise CircfragError(f"binary variant rule lost its guard: {r}")
    disjuncts = [goal.disjuncts[0]]
    for s, s2 in itertools.permutations(m.tape_alphabet, 2):
        for i in (1, 2):
            atoms = [Atom(f"nextConf{i}", x, y), Atom(f"tape_{_sym(s)}", x, p),
                     Atom(f"tape_{_sym(s2)}", y, p)]
            atoms += [Atom(f"confbar_{q}", x, p) for q in m.states]
            disjuncts.append(ConjunctiveQuery(tuple(atoms)))
    return tuple(out), db, cp, UnionQuery(tuple(disjuncts))


# ---------------------------------------------------------------------------
# The TOWER reduction
# ---------------------------------------------------------------------------

def gen_tower_instance(kappa: int, m: AtmSpec, word: str):
    """kappa stacked orders (the k-th of length tower(k-1, p(n))), the error
    reporting chain root < error1 < ord1 < ... < error_{kappa+1}, and the ATM
    running on the kappa-th order as its tape."""
    if kappa < 1:
        raise KappaZero("kappa must be >= 1")
    n = len(word)
    p = m.space(n)
    if p < max(1, n):
        raise CircfragError("space polynomial too small for the word")
    x, x2, y, y2, z, w_, xh, yh, xp = _v("x", "x2", "y", "y2", "z", "w", "xh", "yh", "xp")

    facts: List[tuple] = []
    rules: List[ExistentialRule] = []
    facts.append(("root", ("a",)))
    c1 = [f"c1_{i}" for i in range(p)]
    facts += [("ord1", (c,)) for c in c1]
    for i, j in itertools.product(range(p), repeat=2):
        if j != i + 1:
            facts.append(("succbar1", (c1[i], c1[j])))
        if i != j:
            facts.append(("diff", (c1[i], c1[j])))
    facts += [("startbar", (c,)) for c in c1[1:]]
    facts += [("endbar", (c,)) for c in c1[:-1]]

    for k in range(1, kappa + 2):
        rules.append(_rule([Atom(f"error{k}", x)], [Atom("root", x), Atom("goal", x)]))
    for i, j in itertools.combinations(range(1, kappa + 1), 2):
        rules.append(_rule([Atom(f"ord{i}", x), Atom(f"ord{j}", x)],
                           [Atom(f"error{j}", y)], exist=("y",)))
    for k in range(1, kappa + 1):
        rules.append(_rule([Atom(f"ord{k}", x), Atom("root", x)],
                           [Atom(f"error{k}", y)], exist=("y",)))
        rules.append(_rule([Atom(f"succ{k}", x, x2)],
                           [Atom(f"ord{k}", x), Atom(f"ord{k}", x2)]))
        rules.append(_rule([Atom(f"ord{k}", x), Atom("endbar", x)],
                           [Atom(f"succ{k}", x, x2)], exist=("x2",)))
    rules.append(_rule([Atom("succ1", x, y), Atom("succbar1", x, y)],
                       [Atom("error1", z)], exist=("z",)))
    rules.append(_rule([Atom("diff", x, x)], [Atom("error1", y)], exist=("y",)))

    # bit encodings for orders 2..kappa
    for k in range(2, kappa + 1):
        for b in (0, 1):
            rules.append(_rule([Atom(f"bit{k}_{b}", x, y)],
                               [Atom(f"ord{k}", x), Atom(f"ord{k-1}", y)]))
        rules.append(_rule([Atom(f"bit{k}_0", x, y)], [Atom("endbar", x)]))
        rules.append(_rule([Atom(f"bit{k}_1", x, y)], [Atom("startbar", x)]))
        rules.append(_rule([Atom(f"bit{k}_0", x, y), Atom(f"bit{k}_1", x, y)],
                           [Atom(f"error{k}", z)], exist=("z",)))
        rules.append(_rule([Atom(f"ord{k}", x), Atom("endbar", x)],
                           [Atom(f"fz{k}", x, y)], exist=("y",)))
        rules.append(_rule([Atom(f"fz{k}", x, y)],
                           [Atom(f"bit{k}_0", x, y), Atom("ones_left", x, y)]))
        rules.append(_rule([Atom(f"succ{k}", x, x2)],
                           [Atom(f"nextfz{k}", x, x2, y), Atom(f"fz{k}", x, y)],
                           exist=("y",)))
        rules.append(_rule([Atom(f"nextfz{k}", x, x2, y)],
                           [Atom(f"bit{k}_1", x2, y), Atom("zeros_left", x2, y),
                            Atom("copy_right", x, x2, y)]))
        # directional propagation over succ_{k-1}
        rules.append(_rule([Atom("ones_left", x, y), Atom("startbar", y), Atom(f"ord{k-1}", y)],
                           [Atom("ones_left", x, y2), Atom(f"succ{k-1}", y2, y),
                            Atom(f"bit{k}_1", x, y2)], exist=("y2",)))
        rules.append(_rule([Atom("zeros_left", x, y), Atom("startbar", y), Atom(f"ord{k-1}", y)],
                           [Atom("zeros_left", x, y2), Atom(f"succ{k-1}", y2, y),
                            Atom(f"bit{k}_0", x, y2)], exist=("y2",)))
        rules.append(_rule([Atom("zeros_right", x, y), Atom("endbar", y), Atom(f"ord{k-1}", y)],
                           [Atom("zeros_right", x, y2), Atom(f"succ{k-1}", y, y2),
                            Atom(f"bit{k}_0", x, y2)], exist=("y2",)))
    # copy propagation levels: k-1 for the bit copies, kappa for the tape copies
    copy_levels = sorted(set(range(1, kappa)) | {kappa})
    for lv in copy_levels:
        rules.append(_rule([Atom("copy_right", x, x2, y), Atom("endbar", y), Atom(f"ord{lv}", y)],
                           [Atom("copy_right", x, x2, y2), Atom(f"succ{lv}", y, y2),
                            Atom("copy", x, x2, y2)], exist=("y2",)))
        rules.append(_rule([Atom("copy_left", x, x2, y), Atom("startbar", y), Atom(f"ord{lv}", y)],
                           [Atom("copy_left", x, x2, y2), Atom(f"succ{lv}", y2, y),
                            Atom("copy", x, x2, y2)], exist=("y2",)))

    # the ATM on the kappa-th order
    for s in m.tape_alphabet:
        rules.append(_rule([Atom(f"tape_{_sym(s)}", x, xp)], [Atom(f"ord{kappa}", xp)]))
    rules.append(_rule([Atom("head", x, xh)], [Atom(f"ord{kappa}", xh)]))
    for q, q2 in itertools.permutations(m.states, 2):
        if q < q2:
            rules.append(_rule([Atom(f"state_{q}", x), Atom(f"state_{q2}", x)],
                               [Atom(f"error{kappa + 1}", y)], exist=("y",)))
    for s, s2 in itertools.permutations(m.tape_alphabet, 2):
        if s < s2:
            rules.append(_rule([Atom(f"tape_{_sym(s)}", x, xp), Atom(f"tape_{_sym(s2)}", x, xp)],
                               [Atom(f"error{kappa + 1}", y)], exist=("y",)))
    rules.append(_rule([Atom("head", x, xh)],
                       [Atom("headbar_left", x, xh), Atom("headbar_right", x, xh)]))
    rules.append(_rule([Atom("headbar_left", x, y), Atom("startbar", y)],
                       [Atom("headbar_left", x, y2), Atom(f"succ{kappa}", y2, y),
                        Atom("headbar", x, y2)], exist=("y2",)))
    rules.append(_rule([Atom("headbar_right", x, y), Atom("endbar", y)],
                       [Atom("headbar_right", x, y2), Atom(f"succ{kappa}", y, y2),
                        Atom("headbar", x, y2)], exist=("y2",)))
    rules.append(_rule([Atom("head", x, xp), Atom("headbar", x, xp)],
                       [Atom(f"error{kappa + 1}", y)], exist=("y",)))
    rules.append(_rule([Atom("blanks_right", x, y), Atom("endbar", y)],
                       [Atom("blanks_right", x, y2), Atom(f"succ{kappa}", y, y2),
                        Atom(f"tape_{_sym(BLANK)}", x, y2)], exist=("y2",)))

    # initial configuration
    ctop = [f"c{kappa}_{i}" for i in range(n + 1)] if kappa > 1 else c1
    facts.append((f"state_{m.start}", ("a",)))
    facts.append(("head", ("a", ctop[0])))
    for i in range(1, n + 1):
        facts.append((f"tape_{_sym(word[i - 1])}", ("a", ctop[i - 1])))
    if n < p:
        facts.append((f"tape_{_sym(BLANK)}", ("a", ctop[n])))
        facts.append(("blanks_right", ("a", ctop[n])))
    if kappa > 1:
        for k in range(2, kappa + 1):
            for i in range(n + 1):
                for j in range(n + 1):
                    b = (i >> j) & 1
                    facts.append((f"bit{k}_{b}", (f"c{k}_{i}", f"c{k-1}_{j}" if k > 2 else c1[j])))
                facts.append(("zeros_right", (f"c{k}_{i}", f"c{k-1}_{n}" if k > 2 else c1[n])))

    # transitions
    for q in m.states:
        if m.kind(q) in ("accept", "reject"):
            continue
        for s in m.tape_alphabet:
            for i, (q2, s2, move) in enumerate(m.transitions(q, s), start=1):
                mov = (Atom(f"succ{kappa}", xh, yh) if move == ">"
                       else Atom(f"succ{kappa}", yh, xh))
                rules.append(_rule(
                    [Atom(f"state_{q}", x), Atom("head", x, xh),
                     Atom(f"tape_{_sym(s)}", x, xh)],
                    [Atom(f"nextConf{i}", x, y, xh), Atom(f"state_{q2}", y),
                     Atom("head", y, yh), Atom(f"tape_{_sym(s2)}", y, xh), mov],
                    exist=("y", "yh")))
    for i in (1, 2):
        rules.append(_rule([Atom(f"nextConf{i}", x, y, xh)],
                           [Atom("copy_left", x, y, xh), Atom("copy_right", x, y, xh)]))
    for s in m.tape_alphabet:
        rules.append(_rule([Atom("copy", x, y, xp), Atom(f"tape_{_sym(s)}", x, xp)],
                           [Atom(f"tape_{_sym(s)}", y, xp)]))
    for q in m.states:
        if m.kind(q) == "accept":
            rules.append(_rule([Atom(f"state_{q}", x)], [Atom("acc", x)]))
    for i in (1, 2):
        rules.append(_rule([Atom(f"nextConf{i}", x, y, xh), Atom("acc", y)],
                           [Atom(f"acc{i}", x)]))
    for q in m.states:
        if m.kind(q) == "univ":
            rules.append(_rule([Atom(f"state_{q}", x), Atom("acc1", x), Atom("acc2", x)],
                               [Atom("acc", x)]))
        if m.kind(q) == "exist":
            for i in (1, 2):
                rules.append(_rule([Atom(f"state_{q}", x), Atom(f"acc{i}", x)],
                                   [Atom("acc", x)]))
    rules.append(_rule([Atom("acc", x)], [Atom("goal", x)]))

    chain = ["root"]
    for k in range(1, kappa + 1):
        chain += [f"error{k}", f"ord{k}"]
    chain.append(f"error{kappa + 1}")
    cp = CircPattern.chain(chain)
    return tuple(rules), Database.make(facts), cp, atomic_query("goal", "a")
