"""Circumscription patterns, databases, knowledge bases, queries, rules."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import ArityError, CircfragError, NotGuarded
from .syntax import (And, Atom, Const, Eq, Exists, Forall, Formula, Implies,
                     Not, Signature, Term, TRUE, Var, free_vars, rule_shape_of,
                     signature_of)


# ---------------------------------------------------------------------------
# Circumscription patterns
# ---------------------------------------------------------------------------

def _transitive_closure(pairs: frozenset) -> frozenset:
    closure = set(pairs)
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(closure), repeat=2):
            if b == c and (a, d) not in closure:
                closure.add((a, d))
                changed = True
    return frozenset(closure)


@dataclass(frozen=True)
class CircPattern:
    """(prec, M, F, V): partition of the unary predicates plus a strict
    partial order prec on the minimized ones."""

    minimized: tuple = ()
    fixed: frozenset = frozenset()
    varying: frozenset = frozenset()
    prefer: frozenset = frozenset()  # set of (smaller, larger) pairs

    def __post_init__(self):
        m = set(self.minimized)
        if len(m) != len(self.minimized):
            raise CircfragError("duplicate minimized predicate")
        for a, b in ((m, self.fixed), (m, self.varying), (self.fixed, self.varying)):
            if a & b:
                raise CircfragError(f"pattern classes overlap: {sorted(a & b)}")
        for a, b in self.prefer:
            if a not in m or b not in m:
                raise CircfragError(f"prefer pair ({a},{b}) outside minimized set")
        closure = _transitive_closure(self.prefer)
        for a, b in closure:
            if a == b:
                raise CircfragError(f"prefer relation not irreflexive at {a!r}")
        object.__setattr__(self, "prefer", closure)

    def prec(self, a: str, b: str) -> bool:
        return (a, b) in self.prefer

    def below(self, p: str) -> tuple:
        return tuple(q for q in self.minimized if (q, p) in self.prefer)

    def validate_against(self, sig: Signature) -> None:
        unary = set(sig.unary_predicates())
        claimed = set(self.minimized) | self.fixed | self.varying
        missing = unary - claimed
        if missing:
            raise CircfragError(f"pattern does not cover unary predicates {sorted(missing)}")
        for p in set(self.minimized) | self.fixed:
            if dict(sig.predicates).get(p, 1) != 1:
                raise ArityError(f"only unary predicates may be minimized or fixed ({p!r})")

    def completed_for(self, sig: Signature) -> "CircPattern":
        """Send every not-yet-classified unary predicate to varying."""
        unary = set(sig.unary_predicates())
        rest = unary - set(self.minimized) - self.fixed
        return CircPattern(self.minimized, self.fixed, frozenset(self.varying | rest), self.prefer)

    def with_varying(self, names: Iterable[str]) -> "CircPattern":
        return CircPattern(self.minimized, self.fixed,
                           frozenset(self.varying | set(names)), self.prefer)

    @staticmethod
    def chain(names: Iterable[str]) -> "CircPattern":
        """Minimize the given predicates under a total preference chain."""
        names = tuple(names)
        prefer = frozenset((names[i], names[j])
                           for i in range(len(names)) for j in range(i + 1, len(names)))
        return CircPattern(minimized=names, prefer=prefer)


# ---------------------------------------------------------------------------
# Databases and knowledge bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Database:
    facts: frozenset = frozenset()  # of (pred, tuple of constant names)

    def __post_init__(self):
        for pred, args in self.facts:
            if not args:
                raise ArityError(f"nullary fact {pred!r}")

    @staticmethod
    def make(facts: Iterable) -> "Database":
        return Database(frozenset((p, tuple(a)) for p, a in facts))

    def adom(self) -> frozenset:
        return frozenset(c for _, args in self.facts for c in args)

    def as_formulas(self) -> tuple:
        return tuple(Atom(p, *[Const(c) for c in args])
                     for p, args in sorted(self.facts))


@dataclass(frozen=True)
class KnowledgeBase:
    ontology: tuple = ()
    database: Database = Database()

    def __post_init__(self):
        for s in self.ontology:
            if free_vars(s):
                raise CircfragError("ontology sentences must be closed")

    def signature(self) -> Signature:
        sig = signature_of(And(*self.ontology)) if self.ontology else Signature()
        arities = dict(sig.predicates)
        consts = set(sig.constants)
        for pred, args in self.database.facts:
            if pred in arities and arities[pred] != len(args):
                raise ArityError(f"fact arity clash for {pred!r}")
            arities[pred] = len(args)
            consts.update(args)
        return Signature.make(arities, consts)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjunctiveQuery:
    """Boolean CQ: a set of relational atoms, existentially closed."""

    atoms: tuple = ()

    def __post_init__(self):
        for a in self.atoms:
            if a.op != "atom":
                raise CircfragError("CQ atoms must be relational atoms")

    def variables(self) -> frozenset:
        return frozenset(t.name for a in self.atoms for t in a.args if t.is_var)

    def constants(self) -> frozenset:
        return frozenset(t.name for a in self.atoms for t in a.args if not t.is_var)

    def as_formula(self) -> Formula:
        body = And(*self.atoms)
        vs = sorted(self.variables())
        return Exists(vs, body) if vs else body

    @property
    def is_atomic(self) -> bool:
        return len(self.atoms) == 1 and not self.variables()


@dataclass(frozen=True)
class UnionQuery:
    disjuncts: tuple = ()

    def __post_init__(self):
        if not self.disjuncts:
            raise CircfragError("UCQ needs at least one CQ")

    def as_formula(self) -> Formula:
        from .syntax import Or
        return Or(*[cq.as_formula() for cq in self.disjuncts])


def atomic_query(pred: str, *consts: str) -> UnionQuery:
    return UnionQuery((ConjunctiveQuery((Atom(pred, *[Const(c) for c in consts]),)),))


# ---------------------------------------------------------------------------
# Existential rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExistentialRule:
    """body -> exists zs head.  head is None for a falsum head."""

    body: tuple = ()
    head: Optional[tuple] = ()
    exist_vars: tuple = ()

    def __post_init__(self):
        if not self.body:
            raise CircfragError("rule body must be non-empty")
        for a in self.body:
            if a.op != "atom":
                raise CircfragError("rule bodies are atom conjunctions")
        if self.head is not None:
            for a in self.head:
                if a.op != "atom":
                    raise CircfragError("rule heads are atom conjunctions")
        object.__setattr__(self, "exist_vars", tuple(sorted(set(self.exist_vars))))

    def body_vars(self) -> frozenset:
        return frozenset(t.name for a in self.body for t in a.args if t.is_var)

    def head_vars(self) -> frozenset:
        if self.head is None:
            return frozenset()
        return frozenset(t.name for a in self.head for t in a.args if t.is_var)

    def frontier(self) -> frozenset:
        return self.body_vars() & (self.head_vars() - set(self.exist_vars))

    @property
    def is_guarded(self) -> bool:
        bv = self.body_vars()
        return any(bv <= frozenset(t.name for t in a.args if t.is_var) for a in self.body)

    def guard(self) -> Formula:
        bv = self.body_vars()
        for a in self.body:
            if bv <= frozenset(t.name for t in a.args if t.is_var):
                return a
        raise NotGuarded(f"rule {self} has no guard atom")

    def as_formula(self) -> Formula:
        uvars = sorted(self.body_vars())
        if self.head is None:
            head: Formula = Formula("false")
        else:
            head = And(*self.head) if self.head else TRUE
            ev = [v for v in sorted(self.head_vars()) if v in self.exist_vars]
            if ev:
                head = Exists(ev, head)
        inner = Implies(And(*self.body), head)
        return Forall(uvars, inner) if uvars else inner


def sentence_to_rule(f: Formula) -> Optional[ExistentialRule]:
    shape = rule_shape_of(f)
    if shape is None:
        return None
    batoms, evars, hatoms = shape
    return ExistentialRule(batoms, hatoms, evars)


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------

class FreshNames:
    """Deterministic fresh-name scheme; counters reset per call site."""

    def __init__(self, taken: Iterable[str] = ()):
        self.taken = set(taken)
        self.counters: dict = {}

    def fresh(self, prefix: str) -> str:
        k = self.counters.get(prefix, 0)
        while True:
            k += 1
            name = f"{prefix}{k}"
            if name not in self.taken:
                self.counters[prefix] = k
                self.taken.add(name)
                return name


# ---------------------------------------------------------------------------
# Translations
# ---------------------------------------------------------------------------

def rules_to_gf(rules: Iterable[ExistentialRule]):
    """Translate guarded existential rules into one GF sentence.

    A fresh guard predicate over all head variables is added to each head
    that has existential variables, so the exists-part of the sentence is
    guarded.  Returns (sentence, fresh predicate names); callers declare the
    fresh predicates varying.
    """
    rules = tuple(rules)
    taken = set()
    for r in rules:
        for a in r.body + (r.head or ()):
            taken.add(a.pred)
    names = FreshNames(taken)
    fresh = []
    conjuncts = []
    for r in rules:
        if not r.is_guarded:
            raise NotGuarded(f"rule {r} has no guard atom")
        guard = r.guard()
        rest = tuple(a for a in r.body if a is not guard)
        uvars = sorted(r.body_vars())
        if r.head is None:
            head: Formula = Formula("false")
        else:
            hatoms = r.head
            ev = tuple(v for v in sorted(r.head_vars()) if v in r.exist_vars)
            if ev:
                hvars = sorted(r.head_vars())
                gname = names.fresh("_g")
                fresh.append(gname)
                gatom = Atom(gname, *[Var(v) for v in hvars])
                head = Exists(ev, And(gatom, *hatoms))
            else:
                head = And(*hatoms) if hatoms else TRUE
        matrix = Implies(And(*rest), head) if rest else head
        conjuncts.append(Forall(uvars, Implies(guard, matrix)) if uvars else Implies(guard, matrix))
    sentence = And(*conjuncts) if conjuncts else TRUE
    return sentence, frozenset(fresh)


def kb_to_sentence(kb: KnowledgeBase, mode: str = "inequalities"):
    """Collapse a KB into one sentence whose CP-minimal models correspond to
    the KB's CP-minimal models under standard names.

    mode "inequalities": conjoin pairwise c != c' over adom(D).
    mode "name-predicates": conjoin P_c(c) and not P_{c'}(c) with fresh
    varying unary predicates P_c (returned as the pattern delta).
    """
    parts = list(kb.ontology) + list(kb.database.as_formulas())
    adom = sorted(kb.database.adom())
    fresh: list = []
    if mode == "inequalities":
        for c1, c2 in itertools.combinations(adom, 2):
            parts.append(Not(Eq(Const(c1), Const(c2))))
    elif mode == "name-predicates":
        sig = kb.signature()
        names = FreshNames(set(dict(sig.predicates)) | set(sig.constants))
        pname = {}
        for c in adom:
            base = f"_P_{c}"
            if base in names.taken:
                pname[c] = names.fresh(base + "_")
            else:
                names.taken.add(base)
                pname[c] = base
        for c in adom:
            parts.append(Atom(pname[c], Const(c)))
            for c2 in adom:
                if c2 != c:
                    parts.append(Not(Atom(pname[c2], Const(c))))
        fresh = [pname[c] for c in adom]
    else:
        raise CircfragError(f"unknown kb_to_sentence mode {mode!r}")
    return And(*parts), frozenset(fresh)


def consequence_to_aq(phi: Formula, psi: Formula):
    """Reduce phi |=_CP psi to AQ-querying: a KB with ontology
    {phi, psi -> P(c)}, a marker database pinning the fresh constant, a fresh
    varying unary P, and the atomic query P(c)."""
    if free_vars(phi) or free_vars(psi):
        raise CircfragError("consequence_to_aq expects closed sentences")
    sig = signature_of(And(phi, psi))
    names = FreshNames(set(dict(sig.predicates)) | set(sig.constants))
    p = names.fresh("_P")
    marker = names.fresh("_mk")
    c = names.fresh("_c")
    kb = KnowledgeBase(ontology=(phi, Implies(psi, Atom(p, Const(c)))),
                       database=Database.make([(marker, (c,))]))
    return kb, atomic_query(p, c), frozenset([p, marker])
