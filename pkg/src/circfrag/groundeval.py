"""Vectorized evaluation of ground constraint trees over all candidate
structures at once.

Candidates over a fixed universe are bit vectors indexed by ground atoms;
numpy evaluates the grounded sentence bottom-up over batches of candidate
indices, so enumeration over 2^20-2^26 structures stays in C-speed loops.
Used by the brute-force oracles; the per-atom backtracking engine in
modelsearch remains the fallback for small constrained searches and for
cross-checking.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Optional, Tuple

import numpy as np

from .errors import CircfragError, UnknownSymbol
from .modelsearch import _ground, _simplify, ground_atoms
from .structures import Structure
from .syntax import Formula, Signature

MAX_FREE_BITS = 34
DEFAULT_BATCH_BITS = 20


class GroundEngine:
    def __init__(self, sig: Signature, domain: tuple, constmap: dict,
                 sentences: tuple, forced: frozenset = frozenset(),
                 forbidden: frozenset = frozenset(),
                 batch_bits: int = DEFAULT_BATCH_BITS):
        self.sig = sig
        self.domain = tuple(domain)
        self.constmap = dict(constmap)
        self.atoms = ground_atoms(sig, self.domain)
        self.atom_id = {a: i for i, a in enumerate(self.atoms)}
        self.value: list = [None] * len(self.atoms)  # None = free, else bool
        for a in forced:
            if a not in self.atom_id:
                raise UnknownSymbol(f"forced atom {a} outside the ground signature")
            self.value[self.atom_id[a]] = True
        self.unsat = False
        for a in forbidden:
            if a in self.atom_id:
                if self.value[self.atom_id[a]] is True:
                    self.unsat = True
                self.value[self.atom_id[a]] = False
        self.free = [i for i, v in enumerate(self.value) if v is None]
        self.bitpos = {aid: j for j, aid in enumerate(self.free)}
        if len(self.free) > MAX_FREE_BITS:
            raise CircfragError(
                f"{len(self.free)} free ground atoms exceeds the vector engine limit")
        self.batch = 1 << min(batch_bits, len(self.free))
        self.total = 1 << len(self.free)
        self.roots = []
        for f in sentences:
            node = _ground(f, {}, self.domain, self.constmap, self.atom_id)
            if node[0] == "and":
                self.roots.extend(node[1])
            else:
                self.roots.append(node)

    # -- tree compilation against the free-bit layout -------------------------

    def compile(self, f: Formula):
        return _ground(f, {}, self.domain, self.constmap, self.atom_id)

    def _eval(self, node, idx: np.ndarray):
        kind = node[0]
        if kind == "const":
            return node[1]
        if kind == "lit":
            aid, sign = node[1], node[2]
            v = self.value[aid]
            if v is not None:
                return v if sign else not v
            arr = ((idx >> np.uint64(self.bitpos[aid])) & np.uint64(1)).astype(bool)
            return arr if sign else ~arr
        if kind in ("and", "or"):
            want_and = kind == "and"
            out = None
            for c in node[1]:
                v = self._eval(c, idx)
                if isinstance(v, bool):
                    if v != want_and:
                        return v
                    continue
                if out is None:
                    out = v.copy()
                elif want_and:
                    np.logical_and(out, v, out=out)
                else:
                    np.logical_or(out, v, out=out)
            if out is None:
                return want_and
            return out
        if kind == "count":
            _, cmp, n, children = node
            acc = np.zeros(len(idx), dtype=np.int16)
            const_hits = 0
            for c in children:
                v = self._eval(c, idx)
                if isinstance(v, bool):
                    const_hits += int(v)
                else:
                    acc += v
            acc += const_hits
            if cmp == ">=":
                return acc >= n
            if cmp == "<=":
                return acc <= n
            return acc == n
        raise CircfragError(f"bad node {kind}")

    def batches(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """(candidate indices, model mask) per batch."""
        if self.unsat:
            return
        for start in range(0, self.total, self.batch):
            stop = min(start + self.batch, self.total)
            idx = np.arange(start, stop, dtype=np.uint64)
            mask = np.ones(len(idx), dtype=bool)
            for r in self.roots:
                v = self._eval(r, idx)
                if isinstance(v, bool):
                    if not v:
                        mask[:] = False
                        break
                    continue
                np.logical_and(mask, v, out=mask)
                if not mask.any():
                    break
            yield idx, mask

    def eval_tree(self, tree, idx: np.ndarray):
        v = self._eval(tree, idx)
        if isinstance(v, bool):
            return np.full(len(idx), v, dtype=bool)
        return v

    def pack_unary(self, preds: Iterable[str], idx: np.ndarray) -> np.ndarray:
        """Pack the unary extension bits of the given predicates into one
        uint64 key per candidate (for vector grouping)."""
        key = np.zeros(len(idx), dtype=np.uint64)
        shift = 0
        for p in preds:
            for e in self.domain:
                aid = self.atom_id.get((p, (e,)))
                if aid is None:
                    raise UnknownSymbol(f"predicate {p!r} not in the ground signature")
                v = self.value[aid]
                if v is None:
                    bit = (idx >> np.uint64(self.bitpos[aid])) & np.uint64(1)
                elif v:
                    bit = np.ones(len(idx), dtype=np.uint64)
                else:
                    bit = np.zeros(len(idx), dtype=np.uint64)
                key |= bit << np.uint64(shift)
                shift += 1
                if shift > 63:
                    raise CircfragError("vector key exceeds 64 bits")
        return key

    def unpack_unary_key(self, preds: Iterable[str], key: int) -> tuple:
        """The tuple of frozensets encoded by a pack_unary key."""
        out = []
        shift = 0
        for p in preds:
            cur = set()
            for e in self.domain:
                if (int(key) >> shift) & 1:
                    cur.add(e)
                shift += 1
            out.append(frozenset(cur))
        return tuple(out)

    def model_at(self, index: int) -> Structure:
        chosen = []
        for i, a in enumerate(self.atoms):
            v = self.value[i]
            if v is None:
                v = bool((int(index) >> self.bitpos[i]) & 1)
            if v:
                chosen.append(a)
        return Structure(self.domain, self.constmap, chosen, self.sig)
