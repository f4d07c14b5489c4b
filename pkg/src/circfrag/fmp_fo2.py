"""The FO2 small-model construction: kings, extended 1-types, 2-type stitching.

Shrinks a given model of a Scott-NF FO2 sentence to one that still models it,
realizes exactly the same 1-types, never realizes a 1-type more often than the
input, and keeps the constants (the multiplicity-preserving variant of the
classical exponential-model construction).

Internally all types are taken over the full signature of the NF sentence
joined with the caller's signature, so reflexive and constant-linking atoms
ride along with the 1-types; the pair patterns stitched between elements are
always copied from actual pairs of the input model, which is what makes the
universal conjunct survive.

One engineering deviation (see the kings threshold): when a single 1-type is
realized by many distinct extended types, the literal copy block of three
witnesses per existential index and variant can overshoot the original
multiplicity.  Such types are "promoted": all their realizers are kept
verbatim as honorary kings.  Promotion recomputes the extended types (more
witnesses become king-recorded) and terminates because promotion only grows;
in the worst case the construction degrades to the identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .errors import CircfragError, NotAModel, WitnessGap
from .normalform import ScottNF
from .structures import Structure, eval_formula, tp, type_multiplicities
from .syntax import Signature, signature_of


PairPattern = FrozenSet[Tuple[str, int]]  # (pred, 0) = forward atom, (pred, 1) = backward


@dataclass(frozen=True)
class ExtendedType:
    """(t, S): a 1-type plus at most n_exists (pair pattern, king) records."""
    t: object
    S: frozenset  # of (PairPattern, king element)


class WitnessTable:
    """Map (element, i) -> chosen witness for the i-th existential conjunct."""

    def __init__(self, mapping: Dict[Tuple[int, int], int]):
        self.mapping = dict(mapping)

    def get(self, element: int, i: int) -> int:
        try:
            return self.mapping[(element, i)]
        except KeyError:
            raise WitnessGap(f"no witness recorded for element {element}, conjunct {i}") from None


def exists_part_env(part, e: int, w: int) -> dict:
    env = {part.vars[0]: e}
    env[part.evars[0]] = w
    return env


def build_witness_table(a: Structure, nf: ScottNF) -> WitnessTable:
    """Lowest-id witness per (element, existential conjunct)."""
    mapping = {}
    for i, part in enumerate(nf.exists_parts, start=1):
        for e in sorted(a.domain):
            for w in sorted(a.domain):
                if eval_formula(a, part.psi, exists_part_env(part, e, w)):
                    mapping[(e, i)] = w
                    break
    return WitnessTable(mapping)


def kings(a: Structure, nf: ScottNF, sigma: Signature) -> frozenset:
    """Elements whose 1-type on sigma is realized at most 3*n_exists times."""
    counts = type_multiplicities(a, sigma)
    thr = 3 * nf.n_exists
    return frozenset(e for e in a.domain if counts[tp(a, sigma, (e,))] <= thr)


def fo2_size_bound(nf: ScottNF, k: int) -> dict:
    """The two (disagreeing) size bounds stated for the construction; both
    are reported, never allocated."""
    length = len(repr(nf.sentence))
    n = nf.n_exists
    return {
        "formula_length": length,
        "n_exists": n,
        "k": k,
        "bound_primary": f"{length}^{n + 1} * 2^({n}*4*({k}+6))",
        "bound_restated": f"{length}^{n + 1} * 4^({n}*({k}+6))",
    }


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def _binary_preds(sig: Signature) -> tuple:
    return tuple(sorted(p for p, ar in sig.predicates if ar == 2))


def _pair_pattern(s: Structure, preds: tuple, x: int, y: int) -> PairPattern:
    out = set()
    for p in preds:
        if s.has(p, (x, y)):
            out.add((p, 0))
        if s.has(p, (y, x)):
            out.add((p, 1))
    return frozenset(out)


def _reverse(pp: PairPattern) -> PairPattern:
    return frozenset((p, 1 - d) for p, d in pp)


def default_sigma(nf: ScottNF) -> Signature:
    sig = signature_of(nf.sentence)
    return Signature.make({p: 1 for p, ar in sig.predicates if ar == 1}, sig.constants)


def shrink_fo2(a: Structure, nf: ScottNF, sigma: Optional[Signature] = None,
               witnesses: Optional[WitnessTable] = None) -> Structure:
    if nf.kind != "fo2":
        raise CircfragError("shrink_fo2 expects an FO2 Scott normal form")
    if not eval_formula(a, nf.sentence):
        raise NotAModel("shrink_fo2 expects a model of the NF sentence")
    sigma = sigma or default_sigma(nf)
    sigfull = signature_of(nf.sentence).union(sigma)
    bpreds = _binary_preds(sigfull)
    n_ex = nf.n_exists
    if witnesses is None:
        witnesses = build_witness_table(a, nf)
    for i, part in enumerate(nf.exists_parts, start=1):
        for e in a.domain:
            w = witnesses.get(e, i)
            if not eval_formula(a, part.psi, exists_part_env(part, e, w)):
                raise CircfragError(f"witness table entry ({e},{i}) is not a witness")

    t1 = {e: tp(a, sigfull, (e,)) for e in a.domain}
    counts: Dict[object, int] = {}
    for e in a.domain:
        counts[t1[e]] = counts.get(t1[e], 0) + 1
    thr = 3 * n_ex
    copies_per_variant = max(3 * n_ex, 1)
    j_range = range(3) if n_ex else range(1)
    i_range = range(1, n_ex + 1) if n_ex else (1,)

    promoted: Set[object] = set()
    while True:
        king_set = {e for e in a.domain
                    if counts[t1[e]] <= thr or t1[e] in promoted}
        etp: Dict[int, ExtendedType] = {}
        for e in a.domain:
            records = set()
            for i in range(1, n_ex + 1):
                w = witnesses.get(e, i)
                if w in king_set and w != e:
                    records.add((_pair_pattern(a, bpreds, e, w), w))
            etp[e] = ExtendedType(t1[e], frozenset(records))
        variants: Dict[object, List[frozenset]] = {}
        for e in a.domain:
            if e in king_set:
                continue
            variants.setdefault(t1[e], [])
            if etp[e].S not in variants[t1[e]]:
                variants[t1[e]].append(etp[e].S)
        over = {t for t, vs in variants.items()
                if copies_per_variant * len(vs) > counts[t]}
        if not over:
            break
        promoted |= over

    # copy universe: (type, variant, i, j) blocks with fresh element ids
    next_id = max(a.domain) + 1
    type_order = sorted(variants, key=lambda t: min(e for e in a.domain
                                                    if t1[e] == t and e not in king_set))
    copy_id: Dict[tuple, int] = {}
    copy_info: Dict[int, tuple] = {}
    for t in type_order:
        for S in variants[t]:
            for i in i_range:
                for j in j_range:
                    copy_id[(t, S, i, j)] = next_id
                    copy_info[next_id] = (t, S, i, j)
                    next_id += 1
    # constants never share a 1-type with a copy block (their types are
    # realized once, hence rare); assert anyway per the construction
    const_types = {t1[a.constmap[c]] for c in a.constmap}
    if const_types & set(type_order):
        raise CircfragError("internal error: constant 1-type scheduled for copying")

    archetype = {}
    for t in type_order:
        for S in variants[t]:
            archetype[(t, S)] = min(e for e in a.domain
                                    if e not in king_set and t1[e] == t and etp[e].S == S)
    by_type: Dict[object, List[int]] = {}
    for e in sorted(a.domain):
        by_type.setdefault(t1[e], []).append(e)

    pair_assign: Dict[Tuple[int, int], PairPattern] = {}

    def assign(u: int, v: int, pp: PairPattern):
        key = (u, v) if u < v else (v, u)
        oriented = pp if u < v else _reverse(pp)
        if key in pair_assign:
            if pair_assign[key] != oriented:
                raise CircfragError("internal error: conflicting 2-type assignment")
            return
        pair_assign[key] = oriented

    # step 1: copies link to the kings recorded in their variant
    for u, (t, S, i, j) in copy_info.items():
        for pp, k in sorted(S, key=lambda r: r[1]):
            assign(u, k, pp)

    # step 2: copies get their own existential witnesses along the j+1 chain
    for u, (t, S, i, j) in copy_info.items():
        x = archetype[(t, S)]
        for i_d in range(1, n_ex + 1):
            w = witnesses.get(x, i_d)
            if w == x or w in king_set:
                continue  # self-witness or step-1 link
            target = copy_id[(t1[w], etp[w].S, i_d, (j + 1) % 3 if n_ex else 0)]
            assign(u, target, _pair_pattern(a, bpreds, x, w))

    # fill-up: king-copy pairs prefer the king's own witness as the source
    copy_ids_sorted = sorted(copy_info)
    for k in sorted(king_set):
        for u in copy_ids_sorted:
            key = (k, u) if k < u else (u, k)
            if key in pair_assign:
                continue
            t, S, i, j = copy_info[u]
            b = None
            if 1 <= i <= n_ex:
                w = witnesses.mapping.get((k, i))
                if w is not None and w != k and w not in king_set and t1[w] == t:
                    b = w
            if b is not None:
                assign(k, u, _pair_pattern(a, bpreds, k, b))
            else:
                e_t = next(e for e in by_type[t] if e != k)
                assign(u, k, _pair_pattern(a, bpreds, e_t, k))

    # fill-up: remaining copy-copy pairs from any same-typed source pair
    for u, v in itertools.combinations(copy_ids_sorted, 2):
        if (u, v) in pair_assign:
            continue
        t, t2 = copy_info[u][0], copy_info[v][0]
        e = by_type[t][0]
        e2 = next(x for x in by_type[t2] if x != e)
        assign(u, v, _pair_pattern(a, bpreds, e, e2))

    # assemble
    atoms = set(a.restrict(king_set).atoms()) if king_set else set()
    for u, (t, S, i, j) in copy_info.items():
        for key in t.positives():
            if key[0] == "rel":
                _, pred, argkeys = key
                if all(k[0] == "v" for k in argkeys):
                    atoms.add((pred, tuple(u for _ in argkeys)))
    for (u, v), pp in pair_assign.items():
        for pred, d in pp:
            atoms.add((pred, (u, v) if d == 0 else (v, u)))
    domain = frozenset(king_set) | set(copy_info)
    if not domain:
        # every element rare: the model is its own shrink
        return a
    out = Structure(domain, dict(a.constmap), atoms, a.sig)
    if not eval_formula(out, nf.sentence):
        raise CircfragError("internal error: shrunken structure is not a model")
    return out


# ---------------------------------------------------------------------------
# Point checks (used by the tests and the acceptance suite)
# ---------------------------------------------------------------------------

def check_shrink_points(a: Structure, b: Structure, sigma: Signature) -> dict:
    """Points 2-4 of the small-model statement: equal 1-type sets on sigma,
    per-type multiplicities never increase, constants preserved."""
    ca = type_multiplicities(a, sigma)
    cb = type_multiplicities(b, sigma)
    point2 = set(ca) == set(cb)
    point3 = all(cb[t] <= ca.get(t, 0) for t in cb)
    point4 = a.constmap == b.constmap
    return {"point2": point2, "point3": point3, "point4": point4,
            "size_in": len(a.domain), "size_out": len(b.domain)}
