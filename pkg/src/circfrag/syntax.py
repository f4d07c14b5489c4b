"""First-order syntax: terms, formulas, signatures, fragment classification.

Formulas are immutable trees over one node class.  Node kinds:

  atom     relational atom          pred, args
  eq       equality                 args (exactly two terms)
  true     truth constant
  false    falsity constant
  not      negation                 subs (one child)
  and      n-ary conjunction        subs
  or       n-ary disjunction        subs
  implies  implication              subs (two children)
  iff      biconditional            subs (two children)
  forall   universal quantifier     vars (non-empty), subs (one child)
  exists   existential quantifier   vars (non-empty), subs (one child)
  count    counting quantifier      vars (one), cmp in {<=, >=, ==}, n, subs

Variables and constants share the Term class and are distinguished by kind;
their name spaces are disjoint by construction at parse/build time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .errors import ArityError, CircfragError, NotGuarded, UnknownSymbol


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    kind: str  # "var" | "const"
    name: str

    def __post_init__(self):
        if self.kind not in ("var", "const"):
            raise CircfragError(f"bad term kind {self.kind!r}")
        if not self.name:
            raise CircfragError("empty term name")

    @property
    def is_var(self) -> bool:
        return self.kind == "var"

    def __repr__(self) -> str:
        return f"?{self.name}" if self.kind == "var" else self.name


def Var(name: str) -> Term:
    return Term("var", name)


def Const(name: str) -> Term:
    return Term("const", name)


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Formula:
    op: str
    pred: Optional[str] = None
    args: tuple = ()
    subs: tuple = ()
    vars: tuple = ()
    cmp: Optional[str] = None
    n: Optional[int] = None

    def __post_init__(self):
        if self.op == "count":
            if len(self.vars) != 1:
                raise CircfragError("counting quantifiers bind exactly one variable")
            if self.n is None or self.n < 0:
                raise CircfragError("counting quantifier needs n >= 0")
            if self.cmp not in ("<=", ">=", "=="):
                raise CircfragError(f"bad counting comparison {self.cmp!r}")
        if self.op in ("forall", "exists") and not self.vars:
            raise CircfragError("quantifier needs a non-empty variable list")

    def __repr__(self) -> str:
        return serialize_formula(self)


TRUE = Formula("true")
FALSE = Formula("false")


def Atom(pred: str, *args: Term) -> Formula:
    return Formula("atom", pred=pred, args=tuple(args))


def Eq(a: Term, b: Term) -> Formula:
    return Formula("eq", args=(a, b))


def Not(f: Formula) -> Formula:
    return Formula("not", subs=(f,))


def And(*fs: Formula) -> Formula:
    flat = []
    for f in fs:
        if f.op == "and":
            flat.extend(f.subs)
        else:
            flat.append(f)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return Formula("and", subs=tuple(flat))


def Or(*fs: Formula) -> Formula:
    flat = []
    for f in fs:
        if f.op == "or":
            flat.extend(f.subs)
        else:
            flat.append(f)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Formula("or", subs=tuple(flat))


def Implies(a: Formula, b: Formula) -> Formula:
    return Formula("implies", subs=(a, b))


def Iff(a: Formula, b: Formula) -> Formula:
    return Formula("iff", subs=(a, b))


def Forall(vs: Iterable[str], f: Formula) -> Formula:
    return Formula("forall", vars=tuple(vs), subs=(f,))


def Exists(vs: Iterable[str], f: Formula) -> Formula:
    return Formula("exists", vars=tuple(vs), subs=(f,))


def CountQ(cmp: str, n: int, v: str, f: Formula) -> Formula:
    return Formula("count", vars=(v,), cmp=cmp, n=n, subs=(f,))


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    """Predicate arities plus constant names.

    Nullary predicates are rejected (the paper simulates them by unary
    varying predicates; users must do so explicitly).
    """

    predicates: tuple = ()  # sorted tuple of (name, arity)
    constants: frozenset = frozenset()

    def __post_init__(self):
        seen = {}
        for name, ar in self.predicates:
            if ar < 1:
                raise ArityError(f"nullary predicate {name!r} rejected")
            if name in seen and seen[name] != ar:
                raise ArityError(f"predicate {name!r} declared with arities {seen[name]} and {ar}")
            seen[name] = ar
        clash = set(seen) & set(self.constants)
        if clash:
            raise CircfragError(f"names used as both predicate and constant: {sorted(clash)}")

    @staticmethod
    def make(predicates: dict, constants: Iterable[str] = ()) -> "Signature":
        return Signature(tuple(sorted(predicates.items())), frozenset(constants))

    @property
    def arity(self) -> dict:
        return dict(self.predicates)

    def unary_predicates(self) -> tuple:
        return tuple(sorted(n for n, a in self.predicates if a == 1))

    def union(self, other: "Signature") -> "Signature":
        arities = dict(self.predicates)
        for name, ar in other.predicates:
            if name in arities and arities[name] != ar:
                raise ArityError(f"arity clash for {name!r}")
            arities[name] = ar
        return Signature.make(arities, self.constants | other.constants)

    def max_arity(self) -> int:
        return max((a for _, a in self.predicates), default=1)


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------

def walk(f: Formula) -> Iterator[Formula]:
    yield f
    for s in f.subs:
        yield from walk(s)


def free_vars(f: Formula) -> frozenset:
    if f.op in ("atom", "eq"):
        return frozenset(t.name for t in f.args if t.is_var)
    if f.op in ("true", "false"):
        return frozenset()
    if f.op in ("forall", "exists", "count"):
        return free_vars(f.subs[0]) - frozenset(f.vars)
    out = frozenset()
    for s in f.subs:
        out |= free_vars(s)
    return out


def constants_of(f: Formula) -> frozenset:
    out = set()
    for g in walk(f):
        for t in g.args:
            if not t.is_var:
                out.add(t.name)
    return frozenset(out)


def eq_constants_of(f: Formula) -> frozenset:
    """Constants occurring in an equality atom (const_= of the paper)."""
    out = set()
    for g in walk(f):
        if g.op == "eq":
            for t in g.args:
                if not t.is_var:
                    out.add(t.name)
    return frozenset(out)


def signature_of(f: Formula, *extra: Formula) -> Signature:
    arities: dict = {}
    consts: set = set()
    for g0 in (f,) + extra:
        for g in walk(g0):
            if g.op == "atom":
                ar = len(g.args)
                if g.pred in arities and arities[g.pred] != ar:
                    raise ArityError(f"predicate {g.pred!r} used with arities {arities[g.pred]} and {ar}")
                arities[g.pred] = ar
            for t in g.args:
                if not t.is_var:
                    consts.add(t.name)
    return Signature.make(arities, consts)


def substitute(f: Formula, mapping: dict) -> Formula:
    """Capture-avoiding is not needed here: callers only rename with fresh names
    or replace free variables by terms not bound anywhere in f."""
    if f.op in ("atom", "eq"):
        args = tuple(mapping.get(t.name, t) if t.is_var else t for t in f.args)
        return Formula(f.op, pred=f.pred, args=args)
    if f.op in ("true", "false"):
        return f
    if f.op in ("forall", "exists", "count"):
        inner_map = {k: v for k, v in mapping.items() if k not in f.vars}
        return Formula(f.op, vars=f.vars, cmp=f.cmp, n=f.n,
                       subs=(substitute(f.subs[0], inner_map),))
    return Formula(f.op, subs=tuple(substitute(s, mapping) for s in f.subs))


def rename_bound(f: Formula, counter: Iterator[int]) -> Formula:
    """Rectify: give every quantifier a fresh bound variable."""
    if f.op in ("atom", "eq", "true", "false"):
        return f
    if f.op in ("forall", "exists", "count"):
        fresh = tuple(f"v{next(counter)}" for _ in f.vars)
        body = substitute(f.subs[0], {old: Var(new) for old, new in zip(f.vars, fresh)})
        return Formula(f.op, vars=fresh, cmp=f.cmp, n=f.n,
                       subs=(rename_bound(body, counter),))
    return Formula(f.op, subs=tuple(rename_bound(s, counter) for s in f.subs))


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form; eliminates -> and <->, pushes not to literals."""
    if f.op == "true":
        return FALSE if negate else TRUE
    if f.op == "false":
        return TRUE if negate else FALSE
    if f.op in ("atom", "eq"):
        return Not(f) if negate else f
    if f.op == "not":
        return nnf(f.subs[0], not negate)
    if f.op == "and":
        parts = tuple(nnf(s, negate) for s in f.subs)
        return Or(*parts) if negate else And(*parts)
    if f.op == "or":
        parts = tuple(nnf(s, negate) for s in f.subs)
        return And(*parts) if negate else Or(*parts)
    if f.op == "implies":
        a, b = f.subs
        if negate:
            return And(nnf(a), nnf(b, True))
        return Or(nnf(a, True), nnf(b))
    if f.op == "iff":
        a, b = f.subs
        pos = And(Or(nnf(a, True), nnf(b)), Or(nnf(b, True), nnf(a)))
        neg = And(Or(nnf(a), nnf(b)), Or(nnf(a, True), nnf(b, True)))
        return neg if negate else pos
    if f.op == "forall":
        if negate:
            return Exists(f.vars, nnf(f.subs[0], True))
        return Forall(f.vars, nnf(f.subs[0]))
    if f.op == "exists":
        if negate:
            return Forall(f.vars, nnf(f.subs[0], True))
        return Exists(f.vars, nnf(f.subs[0]))
    if f.op == "count":
        # not (exists>=n) == exists<=n-1, etc.; keep counting atoms intact.
        if not negate:
            return Formula("count", vars=f.vars, cmp=f.cmp, n=f.n, subs=(nnf(f.subs[0]),))
        if f.cmp == ">=":
            if f.n == 0:
                return FALSE
            return Formula("count", vars=f.vars, cmp="<=", n=f.n - 1, subs=(nnf(f.subs[0]),))
        if f.cmp == "<=":
            return Formula("count", vars=f.vars, cmp=">=", n=f.n + 1, subs=(nnf(f.subs[0]),))
        return Not(Formula("count", vars=f.vars, cmp="==", n=f.n, subs=(nnf(f.subs[0]),)))
    raise CircfragError(f"unknown op {f.op!r}")


# ---------------------------------------------------------------------------
# Fragment classification
# ---------------------------------------------------------------------------

def _is_guard_atom(g: Formula, needed: frozenset) -> bool:
    if g.op == "atom" or g.op == "eq":
        have = frozenset(t.name for t in g.args if t.is_var)
        return needed <= have
    return False


def _gf_check(f: Formula) -> bool:
    """Guarded fragment membership (with equality, equality guards allowed)."""
    if f.op in ("atom", "eq", "true", "false"):
        return True
    if f.op == "not":
        return _gf_check(f.subs[0])
    if f.op in ("and", "or"):
        return all(_gf_check(s) for s in f.subs)
    if f.op in ("implies", "iff"):
        return all(_gf_check(s) for s in f.subs)
    if f.op == "count":
        return False
    body = f.subs[0]
    if f.op == "forall":
        # shape: forall ys (guard -> phi)
        if body.op != "implies":
            return False
        guard, matrix = body.subs
    else:
        # shape: exists ys (guard and phi); allow a bare guard atom too
        if body.op == "and" and len(body.subs) >= 2:
            guard, matrix = body.subs[0], And(*body.subs[1:])
        elif body.op in ("atom", "eq"):
            guard, matrix = body, TRUE
        else:
            return False
    needed = free_vars(matrix) | frozenset(f.vars)
    if not _is_guard_atom(guard, needed):
        return False
    return _gf_check(matrix)


def _two_var_check(f: Formula, allow_count: bool) -> bool:
    names = set()
    for g in walk(f):
        if g.op == "count" and not allow_count:
            return False
        if g.op == "atom" and len(g.args) > 2:
            return False
        for t in g.args:
            if t.is_var:
                names.add(t.name)
        names.update(g.vars)
    return len(names) <= 2


def rule_shape_of(f: Formula):
    """If f is (the universal closure of) body -> exists zs head with atom
    conjunctions on both sides, return (body_atoms, exist_vars, head_atoms);
    head_atoms is None for a falsum head.  Otherwise return None."""
    g = f
    outer = []
    while g.op == "forall":
        outer.extend(g.vars)
        g = g.subs[0]
    if g.op != "implies":
        return None
    body, head = g.subs

    def conj_atoms(h: Formula):
        parts = h.subs if h.op == "and" else (h,)
        atoms = []
        for p in parts:
            if p.op != "atom":
                return None
            atoms.append(p)
        return tuple(atoms)

    batoms = conj_atoms(body)
    if not batoms:
        return None
    evars: tuple = ()
    if head.op == "exists":
        evars = head.vars
        head = head.subs[0]
    if head.op == "false":
        hatoms = None
    else:
        hatoms = conj_atoms(head)
        if hatoms is None:
            return None
    if free_vars(body) - set(outer):
        return None
    return batoms, evars, hatoms


def _rule_guarded(batoms) -> bool:
    allvars = set()
    for a in batoms:
        allvars.update(t.name for t in a.args if t.is_var)
    return any(allvars <= {t.name for t in a.args if t.is_var} for a in batoms)


def classify_fragment(sentence: Formula) -> frozenset:
    """Every syntactic fragment the closed sentence belongs to.

    FO always belongs.  FO2 needs <= 2 variable names, arity <= 2, and no
    counting quantifiers; C2 is FO2 with counting allowed.  GF requires every
    quantifier to carry a guard atom covering all variables of its scope.
    """
    if free_vars(sentence):
        raise CircfragError("classify_fragment expects a closed sentence")
    out = {"FO"}
    if _two_var_check(sentence, allow_count=False):
        out.add("FO2")
    if _two_var_check(sentence, allow_count=True):
        out.add("C2")
    if _gf_check(sentence):
        out.add("GF")
    shape = rule_shape_of(sentence)
    if shape is not None and _rule_guarded(shape[0]):
        out.add("guarded-rule-translatable")
    return frozenset(out)


# ---------------------------------------------------------------------------
# Serialization (the .fol surface syntax; the parser lives in textio)
# ---------------------------------------------------------------------------

def serialize_term(t: Term) -> str:
    return f"?{t.name}" if t.is_var else t.name


def serialize_formula(f: Formula) -> str:
    if f.op == "true":
        return "true"
    if f.op == "false":
        return "false"
    if f.op == "atom":
        return f"{f.pred}({','.join(serialize_term(t) for t in f.args)})"
    if f.op == "eq":
        a, b = f.args
        return f"{serialize_term(a)} = {serialize_term(b)}"
    if f.op == "not":
        return f"not ({serialize_formula(f.subs[0])})"
    if f.op == "and":
        return "(" + " and ".join(serialize_formula(s) for s in f.subs) + ")"
    if f.op == "or":
        return "(" + " or ".join(serialize_formula(s) for s in f.subs) + ")"
    if f.op == "implies":
        return f"({serialize_formula(f.subs[0])} -> {serialize_formula(f.subs[1])})"
    if f.op == "iff":
        return f"({serialize_formula(f.subs[0])} <-> {serialize_formula(f.subs[1])})"
    if f.op == "forall":
        vs = " ".join(f"?{v}" for v in f.vars)
        return f"forall {vs} ({serialize_formula(f.subs[0])})"
    if f.op == "exists":
        vs = " ".join(f"?{v}" for v in f.vars)
        return f"exists {vs} ({serialize_formula(f.subs[0])})"
    if f.op == "count":
        sym = {"<=": "<=", ">=": ">=", "==": "="}[f.cmp]
        return f"exists{sym}{f.n} ?{f.vars[0]} ({serialize_formula(f.subs[0])})"
    raise CircfragError(f"unknown op {f.op!r}")
