"""The modified Rosati cover and the stabilizing-Delta search for GF.

The cover rebuilds a model of a GF sentence from the types of its maximal
guarded tuples: a truncated term algebra supplies fresh elements (constants
c^j_{t,i} and height-two function terms f^j_{t1,rho,t2,i}), saturation closes
the tuple sets under guarded overlaps, and a designated part Delta of the
original model is kept verbatim (its elements act as named constants inside
the tuple types, which is what pins their 1-types exactly).

The stabilizing-Delta loop then grows a type-multiplicity threshold until the
cover stops inflating any 1-type, giving the multiplicity-preserving finite
model; the symbolic threshold update of the proof is replaced by the measured
cover size, which the stabilization argument only needs as an upper bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .errors import CircfragError, DeltaMissingConstant, NotAModel, RoundLimit
from .structures import Structure, eval_formula, tp, tp1_set, type_multiplicities
from .syntax import Formula, Signature, signature_of


# ---------------------------------------------------------------------------
# Injective partial substitutions between repetition-free tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rho:
    """x_l -> x_i pairs (1-based positions), induced by component equality."""
    pairs: frozenset

    def dom(self) -> frozenset:
        return frozenset(l for l, _ in self.pairs)

    def ran(self) -> frozenset:
        return frozenset(i for _, i in self.pairs)

    def apply(self, l: int) -> Optional[int]:
        for a, b in self.pairs:
            if a == l:
                return b
        return None


def rho(a: tuple, b: tuple) -> Rho:
    """The injective substitution mapping x_l to x_i iff a_l = b_i."""
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise CircfragError("rho expects repetition-free tuples")
    pairs = {(l + 1, i + 1) for l, x in enumerate(a) for i, y in enumerate(b) if x == y}
    return Rho(frozenset(pairs))


# ---------------------------------------------------------------------------
# Guarded-tuple types over the Delta-extended signature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GType:
    """Positive-atom set of a guarded tuple; args are ("v", position) for the
    tuple components (0-based) or ("d", element) for Delta elements."""
    arity: int
    atoms: frozenset

    def sort_key(self):
        return (self.arity, tuple(sorted(self.atoms)))


def _gtype_of(a: Structure, delta: frozenset, tup: tuple, preds: tuple) -> GType:
    pos = {e: i for i, e in enumerate(tup)}
    named = sorted(delta)
    atoms = set()
    for pred, ar in preds:
        for combo in itertools.product(list(tup) + named, repeat=ar):
            if a.has(pred, tuple(combo)):
                key = tuple(("v", pos[e]) if e in pos else ("d", e) for e in combo)
                atoms.add((pred, key))
    return GType(len(tup), frozenset(atoms))


def _cover_mgt(a: Structure, delta: frozenset) -> list:
    """Maximal guarded repetition-free tuples over A minus Delta (the
    appendix notion: guarded sets are drawn from outside Delta)."""
    outside = a.domain - delta
    cands = {frozenset((e,)) for e in outside}
    for p in a.predicates():
        for t in a.ext(p):
            s = frozenset(t) - delta
            if s:
                cands.add(s)
    maximal = [c for c in cands if not any(c < d for d in cands)]
    tuples = []
    for s in sorted(maximal, key=sorted):
        for perm in itertools.permutations(sorted(s)):
            tuples.append(perm)
    return tuples


# ---------------------------------------------------------------------------
# Cover terms
# ---------------------------------------------------------------------------
# ("c", j, gtype, i)                        constant term
# ("f", j, s, rho_pairs, t, i, args)        function term, args height <= 1

def term_j_set(term) -> frozenset:
    if term[0] == "c":
        return frozenset((term[1],))
    out = {term[1]}
    for sub in term[6]:
        out |= term_j_set(sub)
    return frozenset(out)


def tuple_j_set(terms: Iterable) -> frozenset:
    out: set = set()
    for t in terms:
        out |= term_j_set(t)
    return frozenset(out)


def truncate(term, k: int):
    """Term truncation: constants are fixed points; f(args)/0 collapses to the
    indexed constant, f(args)/1 truncates the arguments."""
    if term[0] == "c":
        return term
    if k == 0:
        return ("c", term[1], term[4], term[5])
    return ("f", term[1], term[2], term[3], term[4], term[5],
            tuple(truncate(x, 0) for x in term[6]))


def _term_key(term):
    if term[0] == "c":
        return ("c", term[1], term[2].sort_key(), term[3])
    return ("f", term[1], term[2].sort_key(), tuple(sorted(term[3])),
            term[4].sort_key(), term[5], tuple(_term_key(x) for x in term[6]))


@dataclass
class TupleLayer:
    """Per-round tuple sets of the saturation, with their types."""
    rounds: list  # list of dicts: GType -> frozenset of term tuples
    delta: frozenset

    def final(self) -> dict:
        return self.rounds[-1] if self.rounds else {}


# ---------------------------------------------------------------------------
# The cover
# ---------------------------------------------------------------------------

@dataclass
class CoverResult:
    structure: Structure
    layers: TupleLayer
    element_of_term: dict
    rounds: int


def _check_repetition_free(tup) -> None:
    t0 = [truncate(x, 0) for x in tup]
    if len(set(t0)) != len(t0):
        raise CircfragError("internal error: saturated tuple repeats under /0 truncation")


def rosati_cover_detailed(a: Structure, phi: Formula, sigma: Signature,
                          delta: Iterable[int], max_rounds: int = 64,
                          initial_copies: int = 1) -> CoverResult:
    """The saturation is demand-driven: every stored tuple is closed under
    every guarded-overlap move, but with the smallest legal index j instead
    of all of them, and the initial layer holds `initial_copies` constant
    tuples per type instead of K.  The index space stays K = w^4, so the
    legality condition j not in J(...) and all collision arguments are
    unchanged; taking all K indices is what the worst-case size bound prices
    in, and it is never needed for the produced structure to be a model."""
    delta = frozenset(delta)
    if not eval_formula(a, phi):
        raise NotAModel("rosati_cover expects a model of phi")
    for c, e in a.constmap.items():
        if e not in delta:
            raise DeltaMissingConstant(f"constant {c!r} interpreted outside delta")
    if delta == a.domain:
        return CoverResult(a, TupleLayer([], delta), {}, 0)

    sig_phi = signature_of(phi)
    sigfull = sig_phi.union(sigma)
    preds = tuple(sigfull.predicates)
    w = max(2, sigfull.max_arity())
    K = w ** 4

    mgt_tuples = _cover_mgt(a, delta)
    gtype: Dict[tuple, GType] = {t: _gtype_of(a, delta, t, preds) for t in mgt_tuples}
    types = sorted({g for g in gtype.values()}, key=GType.sort_key)

    # moves: (source type, rho pairs 0-based, target type)
    moves: Set[tuple] = set()
    for u in mgt_tuples:
        for v in mgt_tuples:
            pairs = frozenset((l, i) for l, x in enumerate(u)
                              for i, y in enumerate(v) if x == y)
            moves.add((gtype[u], pairs, gtype[v]))
    moves_by_source: Dict[GType, list] = {}
    for s, pairs, t in sorted(moves, key=lambda m: (m[0].sort_key(), sorted(m[1]), m[2].sort_key())):
        moves_by_source.setdefault(s, []).append((pairs, t))

    layer: Dict[GType, Set[tuple]] = {t: set() for t in types}
    for t in types:
        for j in range(min(initial_copies, K)):
            layer[t].add(tuple(("c", j, t, i) for i in range(t.arity)))
    rounds = [dict((t, frozenset(v)) for t, v in layer.items())]

    def successors(s: GType, btup: tuple):
        out = []
        for pairs, t in moves_by_source.get(s, ()):
            dom = sorted(l for l, _ in pairs)
            to = dict(pairs)
            bdom = tuple(btup[l] for l in dom)
            used = tuple_j_set(bdom)
            j = next((jj for jj in range(K) if jj not in used), None)
            if j is None:
                raise CircfragError("internal error: no legal index j")
            bdom1 = tuple(truncate(x, 1) for x in bdom)
            atup = []
            for i in range(t.arity):
                src = [l for l in dom if to[l] == i]
                if src:
                    atup.append(btup[src[0]])
                else:
                    atup.append(("f", j, s, pairs, t, i, bdom1))
            atup = tuple(atup)
            _check_repetition_free(atup)
            out.append((t, atup))
        return out

    frontier = [(t, tup) for t in types for tup in sorted(layer[t])]
    r = 0
    while frontier:
        if r >= max_rounds:
            raise RoundLimit(f"saturation did not stabilize within {max_rounds} rounds",
                             rounds=r)
        new: List[tuple] = []
        for s, btup in frontier:
            for t, atup in successors(s, btup):
                if atup not in layer[t]:
                    layer[t].add(atup)
                    new.append((t, atup))
        r += 1
        rounds.append(dict((t, frozenset(v)) for t, v in layer.items()))
        frontier = new
    layer = {t: frozenset(v) for t, v in layer.items()}

    # assemble the structure: Delta keeps its ids, terms get fresh ids
    all_terms: Set[tuple] = set()
    for t in types:
        for tup in layer[t]:
            all_terms.update(tup)
    term_ids: Dict[tuple, int] = {}
    next_id = (max(a.domain) + 1) if a.domain else 0
    for term in sorted(all_terms, key=_term_key):
        term_ids[term] = next_id
        next_id += 1

    atoms: Set[tuple] = set(a.restrict(delta).atoms()) if delta else set()
    for t in types:
        for tup in layer[t]:
            ids = tuple(term_ids[x] for x in tup)
            for pred, argkeys in t.atoms:
                ground = tuple(ids[k[1]] if k[0] == "v" else k[1] for k in argkeys)
                atoms.add((pred, ground))
    domain = set(delta) | set(term_ids.values())
    b = Structure(domain, dict(a.constmap), atoms, a.sig)
    layers = TupleLayer(rounds, delta)
    return CoverResult(b, layers, {v: k for k, v in term_ids.items()}, r)


def rosati_cover(a: Structure, phi: Formula, sigma: Signature,
                 delta: Iterable[int], max_rounds: int = 64) -> Structure:
    return rosati_cover_detailed(a, phi, sigma, delta, max_rounds).structure


def check_cover_points(a: Structure, b: Structure, delta: Iterable[int],
                       sigma: Signature) -> dict:
    """Points 2-4 of the cover lemma on the unary signature sigma."""
    delta = frozenset(delta)
    point2 = all(tp(a, sigma, (d,)) == tp(b, sigma, (d,)) for d in delta)
    point3 = (tp1_set(a, sigma, a.domain - delta)
              == tp1_set(b, sigma, b.domain - delta))
    point4 = delta <= b.domain and a.constmap == b.constmap
    return {"point2": point2, "point3": point3, "point4": point4,
            "size_in": len(a.domain), "size_out": len(b.domain)}


def compatibility_check(layers: TupleLayer, sample_cap: int = 20000) -> dict:
    """The central compatibility property: overlapping saturated tuples agree
    on the atoms over their shared positions.  Returns a report whose
    violation list must be empty."""
    violations = []
    checked = 0
    final = layers.final()
    items = [(t, tup) for t, tups in sorted(final.items(), key=lambda kv: kv[0].sort_key())
             for tup in sorted(tups, key=lambda tt: tuple(_term_key(x) for x in tt))]
    for (t, atup), (t2, atup2) in itertools.product(items, repeat=2):
        if checked >= sample_cap:
            break
        checked += 1
        sigma_pairs = {(l, i) for l, x in enumerate(atup)
                       for i, y in enumerate(atup2) if x == y}
        if not sigma_pairs:
            continue
        to = dict(sigma_pairs)
        dom = set(to)
        for pred, argkeys in t.atoms:
            vs = [k[1] for k in argkeys if k[0] == "v"]
            if not all(v in dom for v in vs):
                continue
            mapped = tuple(("v", to[k[1]]) if k[0] == "v" else k for k in argkeys)
            if (pred, mapped) not in t2.atoms:
                violations.append((pred, argkeys, t.sort_key()[:1], t2.sort_key()[:1]))
    return {"checked": checked, "violations": violations}


# ---------------------------------------------------------------------------
# Stabilizing Delta and the composed shrink
# ---------------------------------------------------------------------------

def stabilizing_delta(a: Structure, phi: Formula, sigma: Signature,
                      max_rounds: int = 64):
    """Grow the multiplicity threshold m (starting at 2) until the cover of
    Delta_m = constants + {x : #tp(x) <= m} never inflates a 1-type; the
    symbolic threshold update is replaced by the measured cover size."""
    if not eval_formula(a, phi):
        raise NotAModel("stabilizing_delta expects a model of phi")
    counts = type_multiplicities(a, sigma)
    const_elems = frozenset(a.constmap[c] for c in a.constmap)
    m = 2
    max_iters = 2 ** (len(sigma.predicates) + len(sigma.constants)) + 2
    for _ in range(max_iters):
        delta = const_elems | frozenset(
            e for e in a.domain if counts[tp(a, sigma, (e,))] <= m)
        cover = rosati_cover(a, phi, sigma, delta, max_rounds)
        cc = type_multiplicities(cover, sigma)
        unstable = [t for t in cc if cc[t] > counts.get(t, 0)]
        if not unstable:
            return delta, m
        m = max(len(cover.domain), m + 1)
    raise RoundLimit("stabilizing delta search did not converge", rounds=max_iters)


def shrink_gf(a: Structure, phi: Formula, sigma: Signature,
              max_rounds: int = 64) -> Structure:
    """Compose the stabilizing-Delta search with the cover."""
    delta, _ = stabilizing_delta(a, phi, sigma, max_rounds)
    return rosati_cover(a, phi, sigma, delta, max_rounds)
