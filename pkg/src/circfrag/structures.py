"""Finite structures, Tarskian evaluation, types, guarded tuples, UCQ matching.

Domains are finite sets of ints.  Enumerators and the text format always
produce dense 0..n-1 domains; shrink constructions keep original element ids
for the preserved part, so library-level domains may be non-contiguous.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .errors import ArityError, CircfragError, NotAModel, UnknownSymbol
from .knowledge import ConjunctiveQuery, UnionQuery
from .syntax import Formula, Signature, Term


class Structure:
    """Immutable finite interpretation: domain, extensions, constant map."""

    __slots__ = ("domain", "constmap", "_ext", "sig", "_hash")

    def __init__(self, domain: Iterable[int], constmap: dict,
                 atoms: Iterable = (), sig: Optional[Signature] = None):
        self.domain = frozenset(domain)
        if not self.domain:
            raise CircfragError("empty domains are not allowed")
        self.constmap = dict(constmap)
        ext: dict = {}
        for pred, tup in atoms:
            tup = tuple(tup)
            ext.setdefault(pred, set()).add(tup)
        self._ext = {p: frozenset(ts) for p, ts in ext.items()}
        self.sig = sig
        for c, e in self.constmap.items():
            if e not in self.domain:
                raise CircfragError(f"constant {c!r} mapped outside the domain")
        for p, ts in self._ext.items():
            arities = {len(t) for t in ts}
            if len(arities) > 1:
                raise ArityError(f"mixed arities in extension of {p!r}")
            if sig is not None:
                declared = dict(sig.predicates).get(p)
                if declared is not None and arities and declared != arities.pop():
                    raise ArityError(f"extension of {p!r} does not match declared arity")
            for t in ts:
                if any(e not in self.domain for e in t):
                    raise CircfragError(f"tuple {t} of {p!r} outside the domain")
        self._hash = None

    def ext(self, pred: str) -> frozenset:
        return self._ext.get(pred, frozenset())

    def predicates(self) -> tuple:
        return tuple(sorted(self._ext))

    def atoms(self) -> frozenset:
        return frozenset((p, t) for p, ts in self._ext.items() for t in ts)

    def has(self, pred: str, tup: tuple) -> bool:
        return tup in self._ext.get(pred, frozenset())

    def canonical(self):
        return (self.domain, tuple(sorted(self.constmap.items())), self.atoms())

    def __eq__(self, other):
        return isinstance(other, Structure) and self.canonical() == other.canonical()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.canonical())
        return self._hash

    def __repr__(self):
        preds = {p: sorted(ts) for p, ts in sorted(self._ext.items())}
        return f"Structure(domain={sorted(self.domain)}, const={self.constmap}, pred={preds})"

    def restrict(self, elems: Iterable[int]) -> "Structure":
        keep = frozenset(elems)
        atoms = [(p, t) for p, ts in self._ext.items() for t in ts
                 if all(e in keep for e in t)]
        constmap = {c: e for c, e in self.constmap.items() if e in keep}
        return Structure(keep, constmap, atoms, self.sig)

    def with_atoms(self, extra: Iterable, drop: Iterable = ()) -> "Structure":
        atoms = set(self.atoms())
        atoms -= {(p, tuple(t)) for p, t in drop}
        atoms |= {(p, tuple(t)) for p, t in extra}
        return Structure(self.domain, self.constmap, atoms, self.sig)

    def relabel(self, mapping: dict) -> "Structure":
        atoms = [(p, tuple(mapping[e] for e in t)) for p, t in self.atoms()]
        constmap = {c: mapping[e] for c, e in self.constmap.items()}
        return Structure({mapping[e] for e in self.domain}, constmap, atoms, self.sig)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _term_value(s: Structure, t: Term, env: dict) -> int:
    if t.is_var:
        try:
            return env[t.name]
        except KeyError:
            raise CircfragError(f"free variable {t.name!r} not bound") from None
    try:
        return s.constmap[t.name]
    except KeyError:
        raise UnknownSymbol(f"constant {t.name!r} not interpreted") from None


def eval_formula(s: Structure, f: Formula, env: Optional[dict] = None) -> bool:
    """Standard semantics; exists>=n holds iff at least n distinct witnesses."""
    env = env or {}
    if f.op == "true":
        return True
    if f.op == "false":
        return False
    if f.op == "atom":
        if s.sig is not None and f.pred not in dict(s.sig.predicates):
            raise UnknownSymbol(f"predicate {f.pred!r} not declared")
        tup = tuple(_term_value(s, t, env) for t in f.args)
        return s.has(f.pred, tup)
    if f.op == "eq":
        a, b = f.args
        return _term_value(s, a, env) == _term_value(s, b, env)
    if f.op == "not":
        return not eval_formula(s, f.subs[0], env)
    if f.op == "and":
        return all(eval_formula(s, g, env) for g in f.subs)
    if f.op == "or":
        return any(eval_formula(s, g, env) for g in f.subs)
    if f.op == "implies":
        return (not eval_formula(s, f.subs[0], env)) or eval_formula(s, f.subs[1], env)
    if f.op == "iff":
        return eval_formula(s, f.subs[0], env) == eval_formula(s, f.subs[1], env)
    if f.op in ("forall", "exists"):
        body = f.subs[0]
        want_all = f.op == "forall"
        for combo in itertools.product(sorted(s.domain), repeat=len(f.vars)):
            env2 = dict(env)
            env2.update(zip(f.vars, combo))
            val = eval_formula(s, body, env2)
            if want_all and not val:
                return False
            if not want_all and val:
                return True
        return want_all
    if f.op == "count":
        v = f.vars[0]
        count = 0
        for e in sorted(s.domain):
            env2 = dict(env)
            env2[v] = e
            if eval_formula(s, f.subs[0], env2):
                count += 1
                if f.cmp == ">=" and count >= f.n:
                    return True
        if f.cmp == ">=":
            return count >= f.n
        if f.cmp == "<=":
            return count <= f.n
        return count == f.n
    raise CircfragError(f"unknown op {f.op!r}")


def is_model(s: Structure, sentences: Iterable[Formula]) -> bool:
    return all(eval_formula(s, f) for f in sentences)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------
#
# An n-type on Sigma is the maximal consistent literal set over the atoms
# built from x_1..x_n, the Sigma constants, and optionally a set of named
# elements treated as self-denoting constants (used by the Rosati cover).
# Canonical representation: sorted tuple of (sign, atomkey) where atomkey is
#   ("rel", pred, argkeys) or ("eq", argkey, argkey)
# and an argkey is ("v", i) for x_{i+1}, ("c", name) for a constant, or
# ("d", element) for a named element.

@dataclass(frozen=True)
class TypeN:
    arity: int
    literals: tuple

    def positives(self) -> tuple:
        return tuple(key for sign, key in self.literals if sign)

    def has(self, key) -> bool:
        return (True, key) in self.literals

    def __repr__(self):
        pos = [k for s, k in self.literals if s]
        return f"TypeN(arity={self.arity}, pos={pos})"


def _atom_universe(sig: Signature, n: int, named: tuple = ()) -> tuple:
    argkeys = [("v", i) for i in range(n)]
    argkeys += [("c", c) for c in sorted(sig.constants)]
    argkeys += [("d", e) for e in named]
    keys = []
    for pred, ar in sig.predicates:
        for combo in itertools.product(argkeys, repeat=ar):
            keys.append(("rel", pred, combo))
    for i, a in enumerate(argkeys):
        for b in argkeys[i + 1:]:
            keys.append(("eq", a, b))
    return tuple(sorted(keys))


def _argkey_value(key, s: Structure, tup: tuple) -> int:
    tag, payload = key
    if tag == "v":
        return tup[payload]
    if tag == "c":
        if payload not in s.constmap:
            raise UnknownSymbol(f"constant {payload!r} not interpreted")
        return s.constmap[payload]
    return payload  # named element


def tp(s: Structure, sig: Signature, tup: Iterable[int], named: tuple = ()) -> TypeN:
    """The n-type on sig realized at the tuple (unique and total)."""
    tup = tuple(tup)
    for e in tup:
        if e not in s.domain:
            raise CircfragError(f"element {e} outside the domain")
    lits = []
    for key in _atom_universe(sig, len(tup), named):
        if key[0] == "rel":
            _, pred, argkeys = key
            vals = tuple(_argkey_value(a, s, tup) for a in argkeys)
            lits.append((s.has(pred, vals), key))
        else:
            _, a, b = key
            lits.append((_argkey_value(a, s, tup) == _argkey_value(b, s, tup), key))
    return TypeN(len(tup), tuple(sorted(lits)))


def tp1_set(s: Structure, sig: Signature, elems: Optional[Iterable[int]] = None) -> frozenset:
    elems = s.domain if elems is None else frozenset(elems)
    return frozenset(tp(s, sig, (e,)) for e in elems)


def type_count(s: Structure, sig: Signature, t: TypeN) -> int:
    """Exact multiplicity of the 1-type t; counts over realized 1-types
    partition the domain."""
    if t.arity != 1:
        raise CircfragError("type_count expects a 1-type")
    return sum(1 for e in s.domain if tp(s, sig, (e,)) == t)


def type_multiplicities(s: Structure, sig: Signature) -> dict:
    out: dict = {}
    for e in s.domain:
        t = tp(s, sig, (e,))
        out[t] = out.get(t, 0) + 1
    return out


# ---------------------------------------------------------------------------
# Maximal guarded tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GuardedTuple:
    elements: tuple
    guard: tuple  # ("singleton", e) or (pred, tuple)

    def __post_init__(self):
        if len(set(self.elements)) != len(self.elements):
            raise CircfragError("guarded tuples are repetition-free")


def guarded_sets(s: Structure) -> set:
    """All inclusion-maximal guarded element sets (singletons included)."""
    candidates = {frozenset((e,)) for e in s.domain}
    guards = {}
    for p, ts in sorted((p, sorted(s.ext(p))) for p in s.predicates()):
        for t in ts:
            fs = frozenset(t)
            candidates.add(fs)
            guards.setdefault(fs, (p, t))
    maximal = {c for c in candidates
               if not any(c < d for d in candidates if d != c)}
    return {(c, guards.get(c, ("singleton", min(c)))) for c in maximal}


def mgt(s: Structure, excluded: Iterable[int] = ()) -> frozenset:
    """All maximal guarded repetition-free tuples (every ordering) that
    contain at least one non-excluded element."""
    excluded = frozenset(excluded)
    if not excluded <= s.domain:
        raise CircfragError("excluded set must lie inside the domain")
    out = set()
    for fs, guard in guarded_sets(s):
        if fs <= excluded:
            continue
        for perm in itertools.permutations(sorted(fs)):
            out.add(GuardedTuple(perm, guard))
    return frozenset(out)


# ---------------------------------------------------------------------------
# UCQ matching
# ---------------------------------------------------------------------------

def cq_match(s: Structure, cq: ConjunctiveQuery, partial: Optional[dict] = None) -> Optional[dict]:
    """Some homomorphism from the CQ into s extending `partial`, else None.
    Exhaustive backtracking, atoms ordered most-constrained-first."""
    env: dict = dict(partial or {})

    def resolve(term: Term):
        if term.is_var:
            return env.get(term.name)
        if term.name not in s.constmap:
            raise UnknownSymbol(f"constant {term.name!r} not interpreted")
        return s.constmap[term.name]

    atoms = sorted(cq.atoms, key=lambda a: (len([t for t in a.args if t.is_var]), a.pred))

    def attempt(i: int) -> bool:
        if i == len(atoms):
            return True
        a = atoms[i]
        want = [resolve(t) for t in a.args]
        for tup in sorted(s.ext(a.pred)):
            binding = {}
            ok = True
            for t, w, e in zip(a.args, want, tup):
                if w is not None:
                    if w != e:
                        ok = False
                        break
                elif t.name in binding and binding[t.name] != e:
                    ok = False
                    break
                else:
                    binding[t.name] = e
            if not ok:
                continue
            env.update(binding)
            if attempt(i + 1):
                return True
            for k in binding:
                del env[k]
        return False

    if attempt(0):
        return dict(env)
    return None


def ucq_match(s: Structure, q: UnionQuery):
    """Some disjunct homomorphism (index, mapping) if one exists, else None."""
    for i, cq in enumerate(q.disjuncts):
        h = cq_match(s, cq)
        if h is not None:
            return i, h
    return None
