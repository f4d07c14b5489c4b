"""The preference order <_CP, minimality checking, bounded minimal-model
enumeration, and the brute-force circumscribed consequence / query oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

from .errors import CircfragError, NotAModel
from .knowledge import (CircPattern, KnowledgeBase, UnionQuery, kb_to_sentence,
                        sentence_to_rule)
from .modelsearch import SearchSpec, enumerate_models, find_model
from .structures import Structure, eval_formula
from .syntax import And, Formula, Signature, signature_of


# ---------------------------------------------------------------------------
# The preference order
# ---------------------------------------------------------------------------

def minimized_vector(s: Structure, cp: CircPattern) -> tuple:
    return tuple(frozenset(t[0] for t in s.ext(p)) for p in cp.minimized)


def fixed_vector(s: Structure, cp: CircPattern) -> tuple:
    return tuple(frozenset(t[0] for t in s.ext(p)) for p in sorted(cp.fixed))


def vec_less(vb: tuple, va: tuple, cp: CircPattern) -> bool:
    """Conditions 3 and 4 of <_CP on minimized-extension vectors."""
    names = cp.minimized
    idx = {p: i for i, p in enumerate(names)}
    # condition 3
    for i, p in enumerate(names):
        if not vb[i] <= va[i]:
            if not any(vb[idx[q]] < va[idx[q]] for q in cp.below(p)):
                return False
    # condition 4
    for i, p in enumerate(names):
        if vb[i] < va[i] and all(vb[idx[q]] == va[idx[q]] for q in cp.below(p)):
            return True
    return False


def cp_less(b: Structure, a: Structure, cp: CircPattern) -> bool:
    """b <_CP a.  Universe or constant mismatch makes the structures
    incomparable (condition 1), so we return False rather than raising."""
    if b.domain != a.domain or b.constmap != a.constmap:
        return False
    for p in cp.fixed:
        if b.ext(p) != a.ext(p):
            return False
    return vec_less(minimized_vector(b, cp), minimized_vector(a, cp), cp)


# ---------------------------------------------------------------------------
# Labelings: enumerate constraint sets whose models are exactly the
# structures strictly below a given minimized vector.
# ---------------------------------------------------------------------------

def smaller_vector_constraints(va: tuple, cp: CircPattern, domain: frozenset) -> Iterator:
    """Yield (forced, forbidden) ground-atom constraint pairs such that a
    model b of the fixed theory with the constraints satisfies
    vec(b) <_CP va, and every such b satisfies some yielded pair.

    Labels per minimized predicate: E (extension equal), S (strict subset,
    realized by excluding one chosen element), F (free; sound only when some
    strictly preferred predicate is labeled S).
    """
    names = cp.minimized
    if not names:
        return
    m = {p: va[i] for i, p in enumerate(names)}
    shrinkable = [p for p in names if m[p]]

    for labels in itertools.product("ESF", repeat=len(names)):
        lab = dict(zip(names, labels))
        if not any(v == "S" for v in lab.values()):
            continue
        # condition 4 witness: some S-predicate with everything below it equal
        if not any(lab[p] == "S" and all(lab[q] == "E" for q in cp.below(p))
                   for p in names):
            continue
        ok = True
        for p in names:
            if lab[p] == "S" and not m[p]:
                ok = False
                break
            if lab[p] == "F" and not any(lab[q] == "S" for q in cp.below(p)):
                ok = False
                break
        if not ok:
            continue
        s_preds = [p for p in names if lab[p] == "S"]
        for removal in itertools.product(*[sorted(m[p]) for p in s_preds]):
            removed = dict(zip(s_preds, removal))
            forced = set()
            forbidden = set()
            for p in names:
                if lab[p] == "E":
                    for e in m[p]:
                        forced.add((p, (e,)))
                    for e in domain - m[p]:
                        forbidden.add((p, (e,)))
                elif lab[p] == "S":
                    allowed = m[p] - {removed[p]}
                    for e in domain - allowed:
                        forbidden.add((p, (e,)))
            yield frozenset(forced), frozenset(forbidden)


def exists_smaller_model(a: Structure, cp: CircPattern,
                         sat: Callable[[frozenset, frozenset], bool]) -> bool:
    """Is there a model b (of whatever theory `sat` encodes, over a's
    universe with constants and fixed predicates pinned) with b <_CP a?
    `sat(forced, forbidden)` must answer satisfiability under the extra
    ground-atom constraints; fixed-predicate pinning is the caller's job."""
    va = minimized_vector(a, cp)
    for forced, forbidden in smaller_vector_constraints(va, cp, a.domain):
        if sat(forced, forbidden):
            return True
    return False


# ---------------------------------------------------------------------------
# Minimality and enumeration
# ---------------------------------------------------------------------------

def _pin_fixed(a: Structure, cp: CircPattern, sig: Signature):
    forced = set()
    forbidden = set()
    for p in cp.fixed:
        have = a.ext(p)
        for e in a.domain:
            if (e,) in have:
                forced.add((p, (e,)))
            else:
                forbidden.add((p, (e,)))
    return frozenset(forced), frozenset(forbidden)


def sat_model(sig: Signature, domain: tuple, constmap: dict, sentences: tuple,
              forced: frozenset = frozenset(),
              forbidden: frozenset = frozenset()) -> Optional[Structure]:
    """First model under the constraints, via the vectorized engine when the
    free-atom space fits, else the backtracking engine."""
    try:
        from .groundeval import GroundEngine
        eng = GroundEngine(sig, domain, constmap, sentences, forced, forbidden)
        for idx, mask in eng.batches():
            hits = mask.nonzero()[0]
            if len(hits):
                return eng.model_at(int(idx[hits[0]]))
        return None
    except CircfragError:
        spec = SearchSpec(sig=sig, domain=domain, constmap=constmap,
                          sentences=sentences, forced=forced, forbidden=forbidden)
        return find_model(spec)


def is_cp_minimal(a: Structure, phi: Formula, cp: CircPattern,
                  sig: Optional[Signature] = None) -> bool:
    """No same-universe model of phi lies strictly below a.  Candidates keep
    a's constants and fixed predicates (conditions 1-2) and re-choose only
    the minimized and varying ones."""
    sig = sig or signature_of(phi)
    cp = cp.completed_for(sig)
    if not eval_formula(a, phi):
        raise NotAModel("is_cp_minimal expects a model of phi")
    base_forced, base_forbidden = _pin_fixed(a, cp, sig)
    domain = tuple(sorted(a.domain))

    def sat(forced, forbidden) -> bool:
        return sat_model(sig, domain, a.constmap, (phi,),
                         base_forced | forced, base_forbidden | forbidden) is not None

    return not exists_smaller_model(a, cp, sat)


def _vector_pred_order(cp: CircPattern) -> tuple:
    return tuple(cp.minimized) + tuple(sorted(cp.fixed))


def enumerate_cp_minimal_models(phi: Formula, cp: CircPattern, max_domain: int,
                                sig: Optional[Signature] = None,
                                psi_filter: Optional[Formula] = None) -> Iterator[Structure]:
    """Every CP-minimal model of phi over universes {0..n-1}, n <= max_domain,
    with constants pinned pairwise distinct to the lowest indices in
    declaration order (models where constants coincide are not enumerated;
    KB routes pin constants apart anyway).  Complete only relative to
    max_domain.  psi_filter, when given, keeps only minimal models violating
    it (the entailed ones are then never materialized)."""
    if max_domain < 1:
        raise CircfragError("max_domain must be >= 1")
    sig = sig or signature_of(phi)
    cp = cp.completed_for(sig)
    consts = sorted(sig.constants)
    for n in range(max(1, len(consts)), max_domain + 1):
        domain = tuple(range(n))
        constmap = {c: i for i, c in enumerate(consts)}
        yield from _minimal_models_at(phi, cp, sig, domain, constmap, psi_filter)


def _minimal_models_at(phi, cp, sig, domain, constmap, psi_filter) -> Iterator[Structure]:
    vec_preds = _vector_pred_order(cp)
    try:
        from .groundeval import GroundEngine
        import numpy as np
        eng = GroundEngine(sig, domain, constmap, (phi,))
        if len(vec_preds) * len(domain) > 63:
            raise CircfragError("vector key too wide")
    except CircfragError:
        yield from _minimal_models_at_slow(phi, cp, sig, domain, constmap, psi_filter)
        return
    # pass 1: the distinct (minimized, fixed) vector keys of all models
    keys: set = set()
    for idx, mask in eng.batches():
        if mask.any():
            k = eng.pack_unary(vec_preds, idx[mask])
            keys.update(np.unique(k).tolist())
    if not keys:
        return
    nmin = len(cp.minimized)
    unpacked = {k: eng.unpack_unary_key(vec_preds, k) for k in keys}
    groups: dict = {}
    for k, vec in unpacked.items():
        groups.setdefault(vec[nmin:], []).append((k, vec[:nmin]))
    minimal_keys = set()
    for fv, items in groups.items():
        for k, mv in items:
            if not any(vec_less(mw, mv, cp) for _, mw in items if mw != mv):
                minimal_keys.add(k)
    sel_keys = np.fromiter(minimal_keys, dtype=np.uint64)
    psi_tree = eng.compile(psi_filter) if psi_filter is not None else None
    # pass 2: materialize the models sitting on minimal vectors
    for idx, mask in eng.batches():
        if not mask.any():
            continue
        k = eng.pack_unary(vec_preds, idx)
        sel = mask & np.isin(k, sel_keys)
        if psi_tree is not None and sel.any():
            sel &= ~eng.eval_tree(psi_tree, idx)
        for i in sel.nonzero()[0]:
            yield eng.model_at(int(idx[i]))


def _minimal_models_at_slow(phi, cp, sig, domain, constmap, psi_filter) -> Iterator[Structure]:
    spec = SearchSpec(sig=sig, domain=domain, constmap=constmap, sentences=(phi,))
    groups: dict = {}
    for m in enumerate_models(spec):
        groups.setdefault(fixed_vector(m, cp), set()).add(minimized_vector(m, cp))
    minimal = {fv: {v for v in vecs if not any(vec_less(w, v, cp) for w in vecs if w != v)}
               for fv, vecs in groups.items()}
    for m in enumerate_models(spec):
        if minimized_vector(m, cp) in minimal[fixed_vector(m, cp)]:
            if psi_filter is None or not eval_formula(m, psi_filter):
                yield m


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

FO2_BOUND = "|phi|^(n_exists+1) * 2^(n_exists*4*(k+6))   [restated: |phi|^(n_exists+1) * 4^(n_exists*(k+6))]"
GF_BOUND = "tower(4^(|Sigma|+4), |phi|)   with Sigma = const_=(phi) + minimized + fixed"


@dataclass
class Verdict:
    entailed: bool
    bound_relative: bool = True
    counter: Optional[Structure] = None
    metadata: dict = field(default_factory=dict)

    def __bool__(self):
        return self.entailed

    def as_json(self) -> dict:
        out = {"verdict": "entailed" if self.entailed else "not-entailed",
               "bound_relative": self.bound_relative,
               "metadata": dict(self.metadata)}
        if self.counter is not None:
            from .textio import structure_to_json
            out["witness"] = structure_to_json(self.counter)
        return out


def circ_consequence(phi: Formula, psi: Formula, cp: CircPattern,
                     max_domain: int) -> Verdict:
    """NotEntailed with an explicit CP-minimal countermodel if one exists
    within max_domain, else Entailed tagged bound-relative.  NotEntailed is
    unconditionally correct; Entailed is correct whenever max_domain meets
    the relevant finite-model bound (reported, never enforced)."""
    sig = signature_of(phi, psi)
    cp = cp.completed_for(sig)
    meta = {"max_domain": max_domain,
            "theoretical_bound_formula": {"FO2": FO2_BOUND, "GF": GF_BOUND}}
    for m in enumerate_cp_minimal_models(phi, cp, max_domain, sig=sig, psi_filter=psi):
        return Verdict(False, bound_relative=False, counter=m, metadata=meta)
    return Verdict(True, bound_relative=True, metadata=meta)


def circ_query(kb: KnowledgeBase, cp: CircPattern, q: UnionQuery,
               max_domain: int, engine: str = "auto") -> Verdict:
    """Brute-force circumscribed UCQ-querying under standard names.

    Routes through kb_to_sentence (inequalities mode) and circ_consequence.
    When the whole ontology is a set of existential rules (and engine is not
    "enumerate"), a bounded chase engine decides the same question; the two
    engines agree and are cross-checked in the test suite.
    """
    rules = [sentence_to_rule(s) for s in kb.ontology]
    if engine == "rules" or (engine == "auto" and kb.ontology and all(r is not None for r in rules)):
        if any(r is None for r in rules):
            raise CircfragError("rules engine requires an existential-rule ontology")
        from .rulesolver import solve_rule_query
        return solve_rule_query(tuple(rules), kb.database, cp, q, max_domain)
    phi, _ = kb_to_sentence(kb, mode="inequalities")
    sig = signature_of(phi, q.as_formula())
    return circ_consequence(phi, q.as_formula(), cp.completed_for(sig), max_domain)
