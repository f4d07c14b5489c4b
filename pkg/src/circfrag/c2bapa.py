"""The C2-to-BAPA encoder and a tiny-domain cardinality-vector oracle.

The encoder emits the circumscription sentence chi over set variables B1..Bn
(one per 1-type) and B_A per minimized/fixed predicate, with the Presburger
characterizations chi_phi / chi_psi left as named placeholder atoms: computing
them is prior work we treat as external, and the oracle below realizes their
solution sets extensionally at desk scale instead.

Textual BAPA grammar (deterministic emitter, mini-parser for round trips):

  sentence  := 'exists-set' names '(' body ')' | 'forall-set' names '(' body ')' | body
  body      := implication over 'and' / 'or' / 'not' / '->' with parentheses
  atom      := NAME '=' setexpr | NAME 'subseteq' NAME | NAME 'subsetneq' NAME
             | NAME '(' cards ')' | 'true' | 'false'
  setexpr   := NAME ('union' NAME)*
  cards     := '|' NAME '|' (',' '|' NAME '|')*

Primed set variables carry the suffix "_p".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from .errors import NotC2, ParseError, SignatureMismatch
from .knowledge import CircPattern
from .syntax import And, Formula, Signature, classify_fragment, signature_of


# ---------------------------------------------------------------------------
# 1-types for C2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class C2Type:
    """A 1-type over the unary signature and constants: which unary
    predicates hold of x1, and which constant (if any) x1 equals.  Distinct
    constants denote distinct elements here."""
    unary: frozenset
    eqconst: Optional[str] = None

    def sort_key(self):
        return (self.eqconst or "", tuple(sorted(self.unary)))


def enumerate_types_c2(phi: Formula) -> tuple:
    """Canonical enumeration of the consistent 1-types of a C2 sentence."""
    if "C2" not in classify_fragment(phi):
        raise NotC2(f"not a C2 sentence: {phi}")
    sig = signature_of(phi)
    unary = sig.unary_predicates()
    consts = sorted(sig.constants)
    out = []
    for eq in [None] + consts:
        for r in range(len(unary) + 1):
            for subset in itertools.combinations(unary, r):
                out.append(C2Type(frozenset(subset), eq))
    return tuple(sorted(out, key=C2Type.sort_key))


def type_of_element(s, sig: Signature, e: int) -> C2Type:
    unary = frozenset(p for p in sig.unary_predicates() if s.has(p, (e,)))
    eq = None
    for c in sorted(sig.constants):
        if s.constmap.get(c) == e:
            eq = c
            break
    return C2Type(unary, eq)


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _cards(names: Iterable[str]) -> str:
    return ", ".join(f"|{n}|" for n in names)


def emit_bapa(phi: Formula, psi: Formula, cp: CircPattern) -> str:
    """The BAPA sentence deciding phi |=_CP psi via unsatisfiability, with
    chi_phi / chi_psi as named placeholders."""
    for f, name in ((phi, "phi"), (psi, "psi")):
        if "C2" not in classify_fragment(f):
            raise NotC2(f"{name} is not a C2 sentence")
    sig_phi = signature_of(phi)
    sig_psi = signature_of(psi)
    if dict(sig_phi.predicates) != dict(sig_psi.predicates):
        raise SignatureMismatch("phi and psi must contain the same predicates")
    sig = sig_phi.union(sig_psi)
    cp = cp.completed_for(sig)
    types = enumerate_types_c2(And(phi, psi))
    n = len(types)
    bvars = [f"B{i+1}" for i in range(n)]
    mf = sorted(set(cp.minimized) | cp.fixed)
    avars = {p: f"B_{p}" for p in mf}

    def theta(prime: str) -> str:
        parts = [f"chi_phi({_cards(b + prime for b in bvars)})"]
        for p in mf:
            members = [bvars[i] for i, t in enumerate(types) if p in t.unary]
            rhs = " union ".join(b + prime for b in members) if members else "empty"
            parts.append(f"{avars[p]}{prime} = {rhs}")
        return " and ".join(parts)

    def ltcp() -> str:
        # primed tuple strictly below the unprimed one
        bullets: List[str] = []
        for p in sorted(cp.fixed):
            bullets.append(f"{avars[p]} = {avars[p]}_p")
        for p in cp.minimized:
            below = [q for q in cp.minimized if cp.prec(q, p)]
            lhs = f"not ({avars[p]}_p subseteq {avars[p]})"
            rhs = " or ".join(f"{avars[q]}_p subsetneq {avars[q]}" for q in below)
            bullets.append(f"({lhs} -> ({rhs or 'false'}))")
        final = []
        for p in cp.minimized:
            below = [q for q in cp.minimized if cp.prec(q, p)]
            eqs = " and ".join(f"{avars[q]}_p = {avars[q]}" for q in below)
            term = f"{avars[p]}_p subsetneq {avars[p]}"
            final.append(f"({term} and {eqs})" if eqs else f"({term})")
        bullets.append("(" + (" or ".join(final) if final else "false") + ")")
        return " and ".join(bullets)

    allvars = bvars + [avars[p] for p in mf]
    primed = [v + "_p" for v in allvars]
    lines = [
        "exists-set " + " ".join(allvars) + " (",
        f"  {theta('')}",
        f"  and chi_psi({_cards(bvars)})",
        "  and forall-set " + " ".join(primed) + " (",
        f"    ({ltcp()}) -> not ({theta('_p')})",
        "  )",
        ")",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Mini-parser (round-trip support)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BapaNode:
    op: str                 # quant | and | or | not | implies | atom
    kind: Optional[str] = None   # for atoms: eq | subseteq | subsetneq | call | const
    name: Optional[str] = None
    names: tuple = ()
    children: tuple = ()


class _BapaParser:
    def __init__(self, text: str):
        self.tokens = self._lex(text)
        self.pos = 0

    @staticmethod
    def _lex(text: str):
        tokens = []
        line, col = 1, 1
        i = 0
        while i < len(text):
            ch = text[i]
            if ch == "\n":
                line += 1
                col = 1
                i += 1
                continue
            if ch.isspace():
                col += 1
                i += 1
                continue
            if text.startswith("->", i):
                tokens.append(("->", line, col))
                i += 2
                col += 2
                continue
            if ch in "()|,=":
                tokens.append((ch, line, col))
                i += 1
                col += 1
                continue
            if ch.isalnum() or ch == "_" or ch == "-":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] in "_-"):
                    j += 1
                tokens.append((text[i:j], line, col))
                col += j - i
                i = j
                continue
            raise ParseError(f"unexpected character {ch!r}", line, col)
        tokens.append(("<eof>", line, col))
        return tokens

    def peek(self):
        return self.tokens[self.pos][0]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, what: str):
        tok, line, col = self.next()
        if tok != what:
            raise ParseError(f"expected {what!r}, found {tok!r}", line, col)

    def sentence(self) -> BapaNode:
        if self.peek() in ("exists-set", "forall-set"):
            q, _, _ = self.next()
            names = []
            while self.peek() != "(":
                names.append(self.next()[0])
            self.expect("(")
            body = self.sentence()
            self.expect(")")
            return BapaNode("quant", kind=q, names=tuple(names), children=(body,))
        return self.implication()

    def implication(self) -> BapaNode:
        left = self.disjunction()
        if self.peek() == "->":
            self.next()
            right = self.implication()
            return BapaNode("implies", children=(left, right))
        return left

    def disjunction(self) -> BapaNode:
        out = [self.conjunction()]
        while self.peek() == "or":
            self.next()
            out.append(self.conjunction())
        return out[0] if len(out) == 1 else BapaNode("or", children=tuple(out))

    def conjunction(self) -> BapaNode:
        out = [self.unary()]
        while self.peek() == "and":
            self.next()
            out.append(self.unary())
        return out[0] if len(out) == 1 else BapaNode("and", children=tuple(out))

    def unary(self) -> BapaNode:
        tok, line, col = self.tokens[self.pos]
        if tok == "not":
            self.next()
            if self.peek() == "(":
                self.expect("(")
                inner = self.sentence()
                self.expect(")")
            else:
                inner = self.unary()
            return BapaNode("not", children=(inner,))
        if tok == "(":
            self.next()
            inner = self.sentence()
            self.expect(")")
            return inner
        if tok in ("true", "false"):
            self.next()
            return BapaNode("atom", kind="const", name=tok)
        if tok in ("exists-set", "forall-set"):
            return self.sentence()
        name = self.next()[0]
        nxt = self.peek()
        if nxt == "(":
            self.next()
            cards = []
            while self.peek() != ")":
                self.expect("|")
                cards.append(self.next()[0])
                self.expect("|")
                if self.peek() == ",":
                    self.next()
            self.expect(")")
            return BapaNode("atom", kind="call", name=name, names=tuple(cards))
        if nxt == "=":
            self.next()
            rhs = [self.next()[0]]
            while self.peek() == "union":
                self.next()
                rhs.append(self.next()[0])
            return BapaNode("atom", kind="eq", name=name, names=tuple(rhs))
        if nxt in ("subseteq", "subsetneq"):
            self.next()
            other = self.next()[0]
            return BapaNode("atom", kind=nxt, name=name, names=(other,))
        raise ParseError(f"cannot parse atom at {name!r}", line, col)


def parse_bapa(text: str) -> BapaNode:
    p = _BapaParser(text)
    node = p.sentence()
    if p.peek() != "<eof>":
        tok, line, col = p.tokens[p.pos]
        raise ParseError(f"trailing input {tok!r}", line, col)
    return node


# ---------------------------------------------------------------------------
# The extensional oracle
# ---------------------------------------------------------------------------

def cardinality_oracle(phi: Formula, max_domain: int) -> frozenset:
    """All type-count vectors (|t1|,...,|tn|) realized by models of phi with
    at most max_domain elements (constants pinned pairwise distinct); the
    desk-scale stand-in for the external Presburger characterization."""
    if "C2" not in classify_fragment(phi):
        raise NotC2(f"not a C2 sentence: {phi}")
    sig = signature_of(phi)
    types = enumerate_types_c2(phi)
    tindex = {t: i for i, t in enumerate(types)}
    consts = sorted(sig.constants)
    out = set()
    for n in range(max(1, len(consts)), max_domain + 1):
        domain = tuple(range(n))
        constmap = {c: i for i, c in enumerate(consts)}
        from .circumscription import sat_model
        from .groundeval import GroundEngine
        try:
            import numpy as np
            eng = GroundEngine(sig, domain, constmap, (phi,))
            upreds = sig.unary_predicates()
            seen_keys = set()
            for idx, mask in eng.batches():
                if not mask.any():
                    continue
                hits = idx[mask]
                keys = (eng.pack_unary(upreds, hits) if upreds
                        else np.zeros(len(hits), dtype=np.uint64))
                for k, fi in zip(*_unique_first(keys)):
                    if k in seen_keys:
                        continue
                    seen_keys.add(k)
                    m = eng.model_at(int(hits[fi]))
                    vec = [0] * len(types)
                    for e in domain:
                        vec[tindex[type_of_element(m, sig, e)]] += 1
                    out.add(tuple(vec))
        except Exception as exc:  # fall back to the slow engine
            from .errors import CircfragError
            if not isinstance(exc, CircfragError):
                raise
            from .modelsearch import SearchSpec, enumerate_models
            for m in enumerate_models(SearchSpec(sig, domain, constmap, (phi,))):
                vec = [0] * len(types)
                for e in domain:
                    vec[tindex[type_of_element(m, sig, e)]] += 1
                out.add(tuple(vec))
    return frozenset(out)


def _unique_first(keys):
    import numpy as np
    uniq, first = np.unique(keys, return_index=True)
    return uniq.tolist(), first.tolist()
