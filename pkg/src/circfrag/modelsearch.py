"""Bounded-universe model enumeration with pruned backtracking.

Sentences are grounded once per (domain, constant map) into constraint trees
over ground-atom ids; candidates are built atom by atom with three-valued
re-evaluation of the constraints an atom occurs in, so violated universals
prune whole subtrees of the search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .errors import CircfragError, SearchBudget, UnknownSymbol
from .structures import Structure
from .syntax import Formula, Signature


# ground constraint nodes:
#   ("lit", atom_id, sign)
#   ("const", bool)
#   ("and", children) / ("or", children)
#   ("count", cmp, n, children)


def _ground(f: Formula, env: dict, domain: tuple, constmap: dict, atom_id: dict):
    if f.op == "true":
        return ("const", True)
    if f.op == "false":
        return ("const", False)
    if f.op == "atom":
        tup = []
        for t in f.args:
            if t.is_var:
                tup.append(env[t.name])
            else:
                if t.name not in constmap:
                    raise UnknownSymbol(f"constant {t.name!r} not interpreted")
                tup.append(constmap[t.name])
        key = (f.pred, tuple(tup))
        if key not in atom_id:
            raise UnknownSymbol(f"atom {key} outside the ground signature")
        return ("lit", atom_id[key], True)
    if f.op == "eq":
        vals = []
        for t in f.args:
            if t.is_var:
                vals.append(env[t.name])
            else:
                if t.name not in constmap:
                    raise UnknownSymbol(f"constant {t.name!r} not interpreted")
                vals.append(constmap[t.name])
        return ("const", vals[0] == vals[1])
    if f.op == "not":
        sub = _ground(f.subs[0], env, domain, constmap, atom_id)
        return _negate(sub)
    if f.op in ("and", "or"):
        children = [_ground(s, env, domain, constmap, atom_id) for s in f.subs]
        return _simplify(f.op, children)
    if f.op == "implies":
        a = _negate(_ground(f.subs[0], env, domain, constmap, atom_id))
        b = _ground(f.subs[1], env, domain, constmap, atom_id)
        return _simplify("or", [a, b])
    if f.op == "iff":
        a = _ground(f.subs[0], env, domain, constmap, atom_id)
        b = _ground(f.subs[1], env, domain, constmap, atom_id)
        return _simplify("or", [_simplify("and", [a, b]),
                                _simplify("and", [_negate(a), _negate(b)])])
    if f.op in ("forall", "exists"):
        children = []
        for combo in itertools.product(domain, repeat=len(f.vars)):
            env2 = dict(env)
            env2.update(zip(f.vars, combo))
            children.append(_ground(f.subs[0], env2, domain, constmap, atom_id))
        return _simplify("and" if f.op == "forall" else "or", children)
    if f.op == "count":
        children = []
        for e in domain:
            env2 = dict(env)
            env2[f.vars[0]] = e
            children.append(_ground(f.subs[0], env2, domain, constmap, atom_id))
        return ("count", f.cmp, f.n, tuple(children))
    raise CircfragError(f"unknown op {f.op!r}")


def _negate(node):
    kind = node[0]
    if kind == "const":
        return ("const", not node[1])
    if kind == "lit":
        return ("lit", node[1], not node[2])
    if kind == "and":
        return _simplify("or", [_negate(c) for c in node[1]])
    if kind == "or":
        return _simplify("and", [_negate(c) for c in node[1]])
    if kind == "count":
        _, cmp, n, children = node
        if cmp == ">=":
            if n == 0:
                return ("const", False)
            return ("count", "<=", n - 1, children)
        if cmp == "<=":
            return ("count", ">=", n + 1, children)
        return _negate(_simplify("and", [("count", ">=", n, children),
                                         ("count", "<=", n, children)]))


def _simplify(kind: str, children: list):
    flat = []
    for c in children:
        if c[0] == "const":
            if (c[1] and kind == "or") or (not c[1] and kind == "and"):
                return ("const", c[1])
            continue
        if c[0] == kind:
            flat.extend(c[1])
        else:
            flat.append(c)
    if not flat:
        return ("const", kind == "and")
    if len(flat) == 1:
        return flat[0]
    return (kind, tuple(flat))


def _atoms_in(node, acc: set):
    kind = node[0]
    if kind == "lit":
        acc.add(node[1])
    elif kind in ("and", "or"):
        for c in node[1]:
            _atoms_in(c, acc)
    elif kind == "count":
        for c in node[3]:
            _atoms_in(c, acc)


def _val3(node, assign):
    kind = node[0]
    if kind == "const":
        return node[1]
    if kind == "lit":
        v = assign[node[1]]
        if v is None:
            return None
        return v if node[2] else not v
    if kind in ("and", "or"):
        want = kind == "or"
        unknown = False
        for c in node[1]:
            v = _val3(c, assign)
            if v is want:
                return want
            if v is None:
                unknown = True
        return None if unknown else (not want)
    # count
    _, cmp, n, children = node
    t = u = 0
    for c in children:
        v = _val3(c, assign)
        if v is True:
            t += 1
        elif v is None:
            u += 1
    if cmp == ">=":
        if t >= n:
            return True
        if t + u < n:
            return False
        return None
    if cmp == "<=":
        if t + u <= n:
            return True
        if t > n:
            return False
        return None
    if t == n and u == 0:
        return True
    if t > n or t + u < n:
        return False
    return None


@dataclass
class SearchSpec:
    sig: Signature
    domain: tuple
    constmap: dict
    sentences: tuple
    forced: frozenset = frozenset()      # ground atoms (pred, tuple) required
    forbidden: frozenset = frozenset()   # ground atoms required absent
    node_budget: Optional[int] = None


def ground_atoms(sig: Signature, domain: tuple) -> list:
    out = []
    for pred, ar in sig.predicates:
        for tup in itertools.product(domain, repeat=ar):
            out.append((pred, tup))
    # element-major order: atoms become decidable as the universe "grows",
    # which lets universal conjuncts prune early.
    out.sort(key=lambda a: (max(a[1]), a[0], a[1]))
    return out


def enumerate_models(spec: SearchSpec) -> Iterator[Structure]:
    atoms = ground_atoms(spec.sig, spec.domain)
    atom_id = {a: i for i, a in enumerate(atoms)}
    roots = []
    for f in spec.sentences:
        node = _ground(f, {}, spec.domain, spec.constmap, atom_id)
        if node[0] == "const":
            if not node[1]:
                return
            continue
        if node[0] == "and":
            roots.extend(node[1])
        else:
            roots.append(node)
    watch: dict = {i: [] for i in range(len(atoms))}
    for ri, r in enumerate(roots):
        acc: set = set()
        _atoms_in(r, acc)
        for i in acc:
            watch[i].append(ri)

    assign: list = [None] * len(atoms)
    pinned = set()
    for a in spec.forced:
        if a in spec.forbidden:
            return
        if a not in atom_id:
            raise UnknownSymbol(f"forced atom {a} outside the ground signature")
        assign[atom_id[a]] = True
        pinned.add(atom_id[a])
    for a in spec.forbidden:
        if a in atom_id:
            assign[atom_id[a]] = False
            pinned.add(atom_id[a])

    root_state = [None] * len(roots)

    def recheck(i: int) -> bool:
        for ri in watch[i]:
            if root_state[ri] is None:
                v = _val3(roots[ri], assign)
                if v is False:
                    return False
                if v is True:
                    root_state[ri] = True
        return True

    for i in pinned:
        for ri in watch[i]:
            v = _val3(roots[ri], assign)
            if v is False:
                return
            if v is True:
                root_state[ri] = True

    order = [i for i in range(len(atoms)) if i not in pinned]
    budget = [spec.node_budget]

    def emit() -> Structure:
        chosen = [atoms[i] for i in range(len(atoms)) if assign[i]]
        return Structure(spec.domain, spec.constmap, chosen, spec.sig)

    def rec(k: int) -> Iterator[Structure]:
        if budget[0] is not None:
            budget[0] -= 1
            if budget[0] < 0:
                raise SearchBudget("model search budget exceeded")
        if k == len(order):
            if all(_val3(r, assign) is True for r in roots):
                yield emit()
            return
        i = order[k]
        for value in (False, True):
            assign[i] = value
            saved = list(root_state)
            if recheck(i):
                yield from rec(k + 1)
            root_state[:] = saved
        assign[i] = None

    yield from rec(0)


def find_model(spec: SearchSpec) -> Optional[Structure]:
    for m in enumerate_models(spec):
        return m
    return None
