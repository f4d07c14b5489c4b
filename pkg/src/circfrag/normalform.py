"""Scott normal form for FO2 and GF with conservative-extension bookkeeping.

Both conversions first push negations through the connectives (staying inside
the fragment), then rename quantified subformulas bottom-up by fresh
predicates with single-direction definitional axioms; since every renamed
subformula occurs positively after NNF, one direction suffices for the
conservative-extension contract:

  * every model of the output is a model of the input;
  * every model of the input extends to a model of the output by
    interpreting the fresh predicates.

The FO2 target shape is one universal conjunct forall x forall y phi plus
n_exists conjuncts forall x exists y psi_i; the GF target shape is guarded
universal conjuncts forall xs (alpha -> phi) plus guarded existential
conjuncts forall xs (beta -> exists ys (gamma & psi)) with atomic guards
covering all variables in scope.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

from .errors import NotFO2, NotGF, CircfragError
from .knowledge import FreshNames
from .syntax import (And, Atom, Const, Eq, Exists, Forall, Formula, Implies,
                     Not, Or, TRUE, Term, Var, classify_fragment, free_vars,
                     nnf, signature_of, substitute)


@dataclass(frozen=True)
class ForallPart:
    vars: tuple
    guard: Optional[Formula]  # None for the unguarded FO2 conjunct
    matrix: Formula

    def as_sentence(self) -> Formula:
        body = self.matrix if self.guard is None else Implies(self.guard, self.matrix)
        return Forall(self.vars, body) if self.vars else body


@dataclass(frozen=True)
class ExistsPart:
    vars: tuple
    beta: Optional[Formula]
    evars: tuple
    gamma: Optional[Formula]
    psi: Formula

    def as_sentence(self) -> Formula:
        inner: Formula = self.psi if self.gamma is None else And(self.gamma, self.psi)
        inner = Exists(self.evars, inner)
        if self.beta is not None:
            inner = Implies(self.beta, inner)
        return Forall(self.vars, inner) if self.vars else inner


@dataclass(frozen=True)
class ScottNF:
    kind: str  # "fo2" | "gf"
    sentence: Formula
    fresh: frozenset
    forall_parts: tuple
    exists_parts: tuple
    definitions: tuple = ()  # (pred, arity, formula over x1..xk) in creation order

    @property
    def n_forall(self) -> int:
        return len(self.forall_parts)

    @property
    def n_exists(self) -> int:
        return len(self.exists_parts)

    def fo2_matrix(self) -> Formula:
        mats = [p.matrix for p in self.forall_parts]
        return And(*mats) if mats else TRUE

    def fo2_psis(self) -> tuple:
        return tuple(p.psi for p in self.exists_parts)


def _guard_bindings(s, guard: Formula, base: Optional[dict] = None):
    """Bindings of the guard atom's variables over its extension (relational)
    or the diagonal (equality), consistent with the base environment."""
    from .structures import Structure  # noqa
    base = base or {}
    if guard.op == "eq":
        a, b = guard.args
        for e in sorted(s.domain):
            env = dict(base)
            ok = True
            for t in (a, b):
                if t.is_var:
                    if env.get(t.name, e) != e:
                        ok = False
                        break
                    env[t.name] = e
                elif s.constmap.get(t.name) != e:
                    ok = False
                    break
            if ok:
                yield env
        return
    for tup in sorted(s.ext(guard.pred)):
        env = dict(base)
        ok = True
        for t, e in zip(guard.args, tup):
            if t.is_var:
                if env.get(t.name, e) != e:
                    ok = False
                    break
                env[t.name] = e
            elif s.constmap.get(t.name) != e:
                ok = False
                break
        if ok:
            yield env


def check_nf_model(s, nf: ScottNF) -> bool:
    """Extension-driven model check for NF sentences: iterates guard
    extensions instead of all variable tuples, so large sparse structures
    (Rosati covers) stay checkable."""
    from .structures import eval_formula
    import itertools as _it
    for part in nf.forall_parts:
        if part.guard is None:
            for combo in _it.product(sorted(s.domain), repeat=len(part.vars)):
                if not eval_formula(s, part.matrix, dict(zip(part.vars, combo))):
                    return False
        else:
            for env in _guard_bindings(s, part.guard):
                if not eval_formula(s, part.matrix, env):
                    return False
    for part in nf.exists_parts:
        if part.beta is None:
            outer = (dict(zip(part.vars, combo))
                     for combo in _it.product(sorted(s.domain), repeat=len(part.vars)))
        else:
            outer = _guard_bindings(s, part.beta)
        for env in outer:
            found = False
            if part.gamma is None:
                for combo in _it.product(sorted(s.domain), repeat=len(part.evars)):
                    env2 = dict(env)
                    env2.update(zip(part.evars, combo))
                    if eval_formula(s, part.psi, env2):
                        found = True
                        break
            else:
                for env2 in _guard_bindings(s, part.gamma, env):
                    if eval_formula(s, part.psi, env2):
                        found = True
                        break
            if not found:
                return False
    return True


def extend_to_nf_model(s, nf: ScottNF):
    """Extend a model of the input sentence to the intended model of the NF
    sentence by evaluating the recorded definitions of the fresh predicates
    in creation order (the conservative-extension witness)."""
    import itertools as _it
    from .structures import Structure, eval_formula
    from .syntax import signature_of as _sig_of

    atoms = set(s.atoms())
    sig = _sig_of(nf.sentence)
    arity = dict(sig.predicates)
    constmap = dict(s.constmap)
    for c in sig.constants:
        constmap.setdefault(c, min(s.domain))
    cur = Structure(s.domain, constmap, atoms, None)
    for pred, k, formula in nf.definitions:
        new = set()
        for tup in _it.product(sorted(s.domain), repeat=k):
            env = {f"x{i+1}": e for i, e in enumerate(tup)}
            if eval_formula(cur, formula, env):
                new.add((pred, tup))
        atoms |= new
        cur = Structure(s.domain, constmap, atoms, None)
    return cur


def _assemble(kind: str, fresh, fas, exs, defs=()) -> ScottNF:
    sent = And(*[p.as_sentence() for p in fas], *[p.as_sentence() for p in exs])
    return ScottNF(kind, sent, frozenset(fresh), tuple(fas), tuple(exs), tuple(defs))


def _canon_def(inner: Formula, xs: tuple) -> Formula:
    """Alpha-rename bound variables away, then map the free xs to x1..xk
    (the parameter convention of ScottNF.definitions)."""
    cnt = itertools.count(1)

    def ren(f: Formula) -> Formula:
        if f.op in ("forall", "exists", "count"):
            fresh = tuple(f"_d{next(cnt)}" for _ in f.vars)
            body = substitute(f.subs[0], {o: Var(n) for o, n in zip(f.vars, fresh)})
            return Formula(f.op, vars=fresh, cmp=f.cmp, n=f.n, subs=(ren(body),))
        if f.op in ("atom", "eq", "true", "false"):
            return f
        return Formula(f.op, subs=tuple(ren(s) for s in f.subs))

    return substitute(ren(inner), {v: Var(f"x{i+1}") for i, v in enumerate(xs)})


# ---------------------------------------------------------------------------
# FO2
# ---------------------------------------------------------------------------

def _fo2_shape(f: Formula) -> Optional[ScottNF]:
    parts = f.subs if f.op == "and" else (f,)
    fas: List[ForallPart] = []
    exs: List[ExistsPart] = []
    for p in parts:
        if p.op == "forall" and len(p.vars) == 2 and _quantifier_free(p.subs[0]):
            if fas:
                return None  # (*) has a single universal conjunct
            fas.append(ForallPart(p.vars, None, p.subs[0]))
        elif (p.op == "forall" and len(p.vars) == 1 and p.subs[0].op == "exists"
              and len(p.subs[0].vars) == 1 and _quantifier_free(p.subs[0].subs[0])):
            exs.append(ExistsPart(p.vars, None, p.subs[0].vars, None, p.subs[0].subs[0]))
        else:
            return None
    return ScottNF("fo2", f, frozenset(), tuple(fas), tuple(exs))


def _quantifier_free(f: Formula) -> bool:
    return all(g.op not in ("forall", "exists", "count") for g in _walk(f))


def _walk(f: Formula):
    yield f
    for s in f.subs:
        yield from _walk(s)


def scott_fo2(phi: Formula) -> ScottNF:
    """Convert an FO2 sentence into Scott normal form (*)."""
    if "FO2" not in classify_fragment(phi):
        raise NotFO2(f"not an FO2 sentence: {phi}")
    shaped = _fo2_shape(phi)
    if shaped is not None:
        return shaped

    sig = signature_of(phi)
    names = FreshNames(set(dict(sig.predicates)) | set(sig.constants))
    fresh: List[str] = []
    defs: List[tuple] = []
    matrix_parts: List[Formula] = []
    exists_parts: List[ExistsPart] = []

    def emit_exists(pred: str, site_var: str, body: Formula, bound: Optional[str]):
        # forall x exists y (not P(x) or body[site->x, bound->y])
        ren = {site_var: Var("x")}
        if bound is not None:
            ren[bound] = Var("y")
        psi = Or(Not(Atom(pred, Var("x"))), substitute(body, ren))
        exists_parts.append(ExistsPart(("x",), None, ("y",), None, psi))

    def emit_forall(pred: str, site_var: str, body: Formula, bound: Optional[str]):
        ren = {site_var: Var("x")}
        if bound is not None:
            ren[bound] = Var("y")
        matrix_parts.append(Implies(Atom(pred, Var("x")), substitute(body, ren)))

    def repl(f: Formula, ctx: str) -> Formula:
        if f.op in ("atom", "eq", "true", "false"):
            return f
        if f.op == "not":  # NNF: negations sit on literals only
            return Not(repl(f.subs[0], ctx))
        if f.op in ("and", "or"):
            return Formula(f.op, subs=tuple(repl(s, ctx) for s in f.subs))
        if f.op in ("forall", "exists"):
            v = f.vars[0]
            body = repl(f.subs[0], v)
            quantified = Formula(f.op, vars=f.vars, subs=(body,))
            fv = sorted(free_vars(quantified))
            name = names.fresh("_nf")
            fresh.append(name)
            defs.append((name, 1, _canon_def(quantified, tuple(fv))))
            if fv:
                u = fv[0]
                if f.op == "exists":
                    emit_exists(name, u, body, v)
                else:
                    emit_forall(name, u, body, v)
                return Atom(name, Var(u))
            # quantified subsentence: marker over the context variable
            if f.op == "exists":
                emit_exists(name, "_dummy", body, v)
            else:
                emit_forall(name, "_dummy", body, v)
            return Atom(name, Var(ctx))
        raise NotFO2(f"unexpected node {f.op!r} in FO2 conversion")

    sk = repl(nnf(phi), "x")
    matrix_parts.insert(0, sk)
    matrix = And(*matrix_parts)
    fas = [ForallPart(("x", "y"), None, matrix)]
    return _assemble("fo2", fresh, fas, exists_parts, defs)


# ---------------------------------------------------------------------------
# GF
# ---------------------------------------------------------------------------

def gf_quantifier_parts(f: Formula):
    """Destructure a GF quantified node into (kind, ys, guard, matrix); None
    when f is not a guarded quantifier node."""
    if f.op == "forall":
        body = f.subs[0]
        if body.op != "implies":
            return None
        guard, matrix = body.subs
    elif f.op == "exists":
        body = f.subs[0]
        if body.op == "and" and len(body.subs) >= 2:
            guard, matrix = body.subs[0], And(*body.subs[1:])
        elif body.op in ("atom", "eq"):
            guard, matrix = body, TRUE
        else:
            return None
    else:
        return None
    if guard.op not in ("atom", "eq"):
        return None
    have = frozenset(t.name for t in guard.args if t.is_var)
    if not (free_vars(matrix) | frozenset(f.vars)) <= have:
        return None
    return f.op, f.vars, guard, matrix


def _gf_nnf(f: Formula, neg: bool = False) -> Formula:
    parts = gf_quantifier_parts(f)
    if parts is not None:
        kind, ys, guard, matrix = parts
        if kind == "forall":
            if neg:
                return Exists(ys, And(guard, _gf_nnf(matrix, True)))
            return Forall(ys, Implies(guard, _gf_nnf(matrix)))
        if neg:
            return Forall(ys, Implies(guard, _gf_nnf(matrix, True)))
        return Exists(ys, And(guard, _gf_nnf(matrix)))
    if f.op in ("atom", "eq"):
        return Not(f) if neg else f
    if f.op == "true":
        return Formula("false") if neg else f
    if f.op == "false":
        return TRUE if neg else f
    if f.op == "not":
        return _gf_nnf(f.subs[0], not neg)
    if f.op == "and":
        sub = tuple(_gf_nnf(s, neg) for s in f.subs)
        return Or(*sub) if neg else And(*sub)
    if f.op == "or":
        sub = tuple(_gf_nnf(s, neg) for s in f.subs)
        return And(*sub) if neg else Or(*sub)
    if f.op == "implies":
        a, b = f.subs
        if neg:
            return And(_gf_nnf(a), _gf_nnf(b, True))
        return Or(_gf_nnf(a, True), _gf_nnf(b))
    if f.op == "iff":
        a, b = f.subs
        pos = And(Or(_gf_nnf(a, True), _gf_nnf(b)), Or(_gf_nnf(b, True), _gf_nnf(a)))
        if neg:
            return Or(And(_gf_nnf(a), _gf_nnf(b, True)), And(_gf_nnf(b), _gf_nnf(a, True)))
        return pos
    raise NotGF(f"unexpected node {f.op!r} in GF conversion")


def _gf_shape(f: Formula) -> Optional[ScottNF]:
    parts = f.subs if f.op == "and" else (f,)
    fas: List[ForallPart] = []
    exs: List[ExistsPart] = []
    for p in parts:
        d = gf_quantifier_parts(p)
        if d is None or free_vars(p):
            return None
        kind, ys, guard, matrix = d
        if kind == "forall":
            if _quantifier_free(matrix):
                fas.append(ForallPart(ys, guard, matrix))
                continue
            inner = gf_quantifier_parts(matrix)
            if (inner is not None and inner[0] == "exists"
                    and _quantifier_free(inner[3])):
                exs.append(ExistsPart(ys, guard, inner[1], inner[2], inner[3]))
                continue
            return None
        return None
    return ScottNF("gf", f, frozenset(), tuple(fas), tuple(exs))


def scott_gf(phi: Formula) -> ScottNF:
    """Convert a GF sentence into the guarded Scott normal form."""
    if "GF" not in classify_fragment(phi):
        raise NotGF(f"not a GF sentence: {phi}")
    shaped = _gf_shape(phi)
    if shaped is not None:
        return shaped

    sig = signature_of(phi)
    names = FreshNames(set(dict(sig.predicates)) | set(sig.constants))
    fresh: List[str] = []
    defs: List[tuple] = []
    fas: List[ForallPart] = []
    exs: List[ExistsPart] = []
    consts = sorted(sig.constants)
    flag_const = consts[0] if consts else names.fresh("_c")

    def handle_exists(ys, guard, matrix_qf, xs) -> Tuple[str, tuple]:
        """Emit the definitional existential conjunct for exists ys (guard &
        matrix) with free variables xs; return (pred, site_args)."""
        name = names.fresh("_nf")
        fresh.append(name)
        sigma = Exists(tuple(ys), And(guard, matrix_qf))
        if xs:
            beta = Atom(name, *[Var(v) for v in xs])
            exs.append(ExistsPart(tuple(xs), beta, tuple(ys), guard, matrix_qf))
            defs.append((name, len(xs), _canon_def(sigma, tuple(xs))))
            return name, tuple(xs)
        # sentence-level: a fresh covering guard makes gamma span all variables
        gname = names.fresh("_nf")
        fresh.append(gname)
        defs.append((gname, 1 + len(ys), TRUE))
        defs.append((name, 1, _canon_def(sigma, ())))
        z = "z0"
        gatom = Atom(gname, Var(z), *[Var(v) for v in ys])
        beta = Atom(name, Var(z))
        exs.append(ExistsPart((z,), beta, tuple(ys), gatom, And(guard, matrix_qf)))
        return name, ()

    def handle_forall(ys, guard, matrix_qf, xs) -> Formula:
        """Emit the definitional universal conjunct(s); return the site formula."""
        sigma = Forall(tuple(ys), Implies(guard, matrix_qf))
        if xs:
            name = names.fresh("_nf")
            fresh.append(name)
            defs.append((name, len(xs), _canon_def(sigma, tuple(xs))))
            site = Atom(name, *[Var(v) for v in xs])
            fas.append(ForallPart(tuple(xs) + tuple(ys), guard, Implies(site, matrix_qf)))
            return site
        # sentence-level universal: route the violation through a flag on a
        # designated constant (see module docstring)
        wname = names.fresh("_nf")
        vname = names.fresh("_nf")
        fresh.extend([wname, vname])
        y1 = ys[0]
        violation = Exists(tuple(ys), And(guard, Not(matrix_qf), Eq(Var(y1), Var("_param"))))
        defs.append((wname, 1, _canon_def(violation, ("_param",))))
        defs.append((vname, 1, And(Exists(("_w",), Atom(wname, Var("_w"))),
                                   Eq(Var("x1"), Const(flag_const)))))
        fas.append(ForallPart(tuple(ys), guard,
                              Implies(Not(matrix_qf), Atom(wname, Var(y1)))))
        fas.append(ForallPart(("w0",), Atom(wname, Var("w0")),
                              Atom(vname, Const(flag_const))))
        return Not(Atom(vname, Const(flag_const)))

    def repl(f: Formula, ctx: str) -> Formula:
        parts = gf_quantifier_parts(f)
        if parts is not None:
            kind, ys, guard, matrix = parts
            xs = sorted(free_vars(f))
            inner_ctx = ys[0]
            matrix_qf = repl(matrix, inner_ctx)
            if kind == "exists":
                name, args = handle_exists(ys, guard, matrix_qf, xs)
                if args:
                    return Atom(name, *[Var(v) for v in args])
                return Atom(name, Var(ctx))
            return handle_forall(ys, guard, matrix_qf, xs)
        if f.op in ("atom", "eq", "true", "false"):
            return f
        if f.op == "not":
            return Not(repl(f.subs[0], ctx))
        if f.op in ("and", "or"):
            return Formula(f.op, subs=tuple(repl(s, ctx) for s in f.subs))
        raise NotGF(f"unexpected node {f.op!r} in GF conversion")

    work = _gf_nnf(phi)
    top = work.subs if work.op == "and" else (work,)
    skeleton: List[Formula] = []
    for p in top:
        parts = gf_quantifier_parts(p)
        if parts is not None and not free_vars(p):
            kind, ys, guard, matrix = parts
            matrix_qf = repl(matrix, ys[0])
            if kind == "forall":
                fas.append(ForallPart(tuple(ys), guard, matrix_qf))
            else:
                # the emitted part's beta must be triggered, so assert it
                # everywhere via the skeleton conjunct
                bname, _ = handle_exists(ys, guard, matrix_qf, ())
                skeleton.append(Atom(bname, Var("t0")))
            continue
        skeleton.append(repl(p, "t0"))
    if skeleton:
        fas.insert(0, ForallPart(("t0",), Eq(Var("t0"), Var("t0")), And(*skeleton)))
    return _assemble("gf", fresh, fas, exs, defs)
