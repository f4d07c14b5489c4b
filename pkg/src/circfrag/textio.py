"""Text formats: sentences, databases, patterns, structures, rules, queries,
machine specs.  Serializers are deterministic (sorted output) and inverse to
the parsers; every parse error carries a source location.

Grammars (bit-exact):
  sentences   forall ?x ?y ( P(?x) -> exists ?y (R(?x,?y) and Q(?y)) ).
              counting: exists>=2 ?y ( ... ), exists<=1 ?y ( ... ), exists=0 ?y ( ... )
  databases   Pred(c1,c2).
  patterns    minimize p1 p2; prefer p1 < p2, q1 < q2; fix f1; vary *;
              ('-' means none; '*' sends the remaining unary predicates to
              varying when the pattern is completed against a signature;
              predicates named only in prefer pairs join the minimized list)
  structures  {domain: 3, const: {a: 0}, pred: {R: [[0,1]], P: [[2]]}}
  rules       offers(?x,?y) => exists ?z supplies(?x,?y,?z), W(?z).
              bodies are comma-separated atoms; 'false' heads allowed
  queries     Q := exists ?x ?y (R(?x,?y) and A(?x)) | goal(a).
  machines    states:/input:/tape:/start:/kind:/trans:/space: lines
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, List, Optional, Tuple

from .errors import ArityError, CircfragError, ParseError, UnknownSymbol
from .hardness import AtmSpec, BLANK
from .knowledge import (CircPattern, ConjunctiveQuery, Database,
                        ExistentialRule, UnionQuery)
from .structures import Structure
from .syntax import (And, Atom, Const, CountQ, Eq, Exists, Forall, Formula,
                     Iff, Implies, Not, Or, Term, TRUE, FALSE, Var,
                     serialize_formula)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<count>exists(>=|<=|=)\d+)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<num>\d+)
  | (?P<arrow><->|->|=>|:=)
  | (?P<punct>[(){}\[\],.;:=<|*-])
""", re.VERBOSE)


class Tokens:
    def __init__(self, text: str):
        self.items: List[Tuple[str, str, int, int]] = []
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup
            val = m.group()
            if kind != "ws":
                self.items.append((kind, val, line, col))
            newlines = val.count("\n")
            if newlines:
                line += newlines
                col = len(val) - val.rfind("\n")
            else:
                col += len(val)
            pos = m.end()
        self.items.append(("eof", "<eof>", line, col))
        self.pos = 0

    def peek(self, offset: int = 0):
        return self.items[min(self.pos + offset, len(self.items) - 1)]

    def next(self):
        tok = self.items[self.pos]
        if tok[0] != "eof":
            self.pos += 1
        return tok

    def expect(self, value: str):
        kind, val, line, col = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val!r}", line, col)
        return val

    def at_value(self, value: str) -> bool:
        return self.peek()[1] == value

    def error(self, message: str):
        _, val, line, col = self.peek()
        raise ParseError(f"{message} (at {val!r})", line, col)


# ---------------------------------------------------------------------------
# Sentences
# ---------------------------------------------------------------------------

def _parse_term(tk: Tokens) -> Term:
    kind, val, line, col = tk.next()
    if kind == "var":
        return Var(val[1:])
    if kind == "name":
        return Const(val)
    raise ParseError(f"expected a term, found {val!r}", line, col)


def _parse_atom_or_eq(tk: Tokens) -> Formula:
    kind, val, line, col = tk.peek()
    if kind == "var":
        left = _parse_term(tk)
        tk.expect("=")
        return Eq(left, _parse_term(tk))
    if kind != "name":
        raise ParseError(f"expected an atom, found {val!r}", line, col)
    name = tk.next()[1]
    if tk.at_value("("):
        tk.next()
        args = [_parse_term(tk)]
        while tk.at_value(","):
            tk.next()
            args.append(_parse_term(tk))
        tk.expect(")")
        return Atom(name, *args)
    if tk.at_value("="):
        tk.next()
        return Eq(Const(name), _parse_term(tk))
    raise ParseError(f"predicate {name!r} needs arguments", line, col)


def _parse_formula(tk: Tokens) -> Formula:
    return _parse_iff(tk)


def _parse_iff(tk: Tokens) -> Formula:
    left = _parse_implies(tk)
    if tk.at_value("<->"):
        tk.next()
        return Iff(left, _parse_iff(tk))
    return left


def _parse_implies(tk: Tokens) -> Formula:
    left = _parse_or(tk)
    if tk.at_value("->"):
        tk.next()
        return Implies(left, _parse_implies(tk))
    return left


def _parse_or(tk: Tokens) -> Formula:
    parts = [_parse_and(tk)]
    while tk.at_value("or"):
        tk.next()
        parts.append(_parse_and(tk))
    return Or(*parts) if len(parts) > 1 else parts[0]


def _parse_and(tk: Tokens) -> Formula:
    parts = [_parse_unary(tk)]
    while tk.at_value("and"):
        tk.next()
        parts.append(_parse_unary(tk))
    return And(*parts) if len(parts) > 1 else parts[0]


def _parse_unary(tk: Tokens) -> Formula:
    kind, val, line, col = tk.peek()
    if val == "not":
        tk.next()
        return Not(_parse_unary(tk))
    if val == "(":
        tk.next()
        f = _parse_formula(tk)
        tk.expect(")")
        return f
    if val == "true":
        tk.next()
        return TRUE
    if val == "false":
        tk.next()
        return FALSE
    if kind == "count":
        tk.next()
        m = re.fullmatch(r"exists(>=|<=|=)(\d+)", val)
        cmp = {"<=": "<=", ">=": ">=", "=": "=="}[m.group(1)]
        n = int(m.group(2))
        vkind, vval, vline, vcol = tk.next()
        if vkind != "var":
            raise ParseError(f"counting quantifier needs a variable, found {vval!r}",
                             vline, vcol)
        tk.expect("(")
        body = _parse_formula(tk)
        tk.expect(")")
        return CountQ(cmp, n, vval[1:], body)
    if val in ("forall", "exists"):
        tk.next()
        vs = []
        while tk.peek()[0] == "var":
            vs.append(tk.next()[1][1:])
        if not vs:
            tk.error("quantifier needs at least one variable")
        tk.expect("(")
        body = _parse_formula(tk)
        tk.expect(")")
        return Forall(vs, body) if val == "forall" else Exists(vs, body)
    return _parse_atom_or_eq(tk)


def parse_sentence(text: str) -> Formula:
    """One sentence, optionally terminated by '.'."""
    tk = Tokens(text)
    f = _parse_formula(tk)
    if tk.at_value("."):
        tk.next()
    if tk.peek()[0] != "eof":
        tk.error("trailing input after sentence")
    return f


def parse_sentences(text: str) -> tuple:
    """A .fol file: one sentence per '.'-terminated statement."""
    tk = Tokens(text)
    out = []
    while tk.peek()[0] != "eof":
        out.append(_parse_formula(tk))
        tk.expect(".")
    return tuple(out)


def serialize_sentence(f: Formula) -> str:
    return serialize_formula(f) + "."


def serialize_sentences(fs: Iterable[Formula]) -> str:
    return "\n".join(serialize_sentence(f) for f in fs) + "\n"


# ---------------------------------------------------------------------------
# Databases
# ---------------------------------------------------------------------------

def parse_db(text: str) -> Database:
    tk = Tokens(text)
    facts = []
    while tk.peek()[0] != "eof":
        kind, name, line, col = tk.next()
        if kind != "name":
            raise ParseError(f"expected a fact, found {name!r}", line, col)
        tk.expect("(")
        args = []
        while True:
            akind, aval, aline, acol = tk.next()
            if akind != "name":
                raise ParseError(f"facts take constants, found {aval!r}", aline, acol)
            args.append(aval)
            if tk.at_value(","):
                tk.next()
                continue
            break
        tk.expect(")")
        tk.expect(".")
        facts.append((name, tuple(args)))
    return Database.make(facts)


def serialize_db(db: Database) -> str:
    lines = [f"{p}({','.join(args)})." for p, args in sorted(db.facts)]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

def parse_pattern(text: str) -> CircPattern:
    """`minimize ...; prefer a < b, ...; fix ...; vary *;`.  Predicates named
    only in prefer pairs are appended to the minimized list; '*' under vary
    resolves to the remaining unary predicates when the pattern is completed
    against a signature (CircPattern.completed_for)."""
    tk = Tokens(text)
    minimized: List[str] = []
    fixed: List[str] = []
    varying: List[str] = []
    prefer: List[Tuple[str, str]] = []
    while tk.peek()[0] != "eof":
        kind, section, line, col = tk.next()
        if section not in ("minimize", "prefer", "fix", "vary"):
            raise ParseError(f"unknown pattern section {section!r}", line, col)
        if section == "prefer":
            while not tk.at_value(";"):
                a = tk.next()[1]
                tk.expect("<")
                b = tk.next()[1]
                prefer.append((a, b))
                if tk.at_value(","):
                    tk.next()
        else:
            names = []
            while not tk.at_value(";"):
                names.append(tk.next()[1])
            if names == ["-"]:
                names = []
            target = {"minimize": minimized, "fix": fixed, "vary": varying}[section]
            target.extend(names)
        tk.expect(";")
    for a, b in prefer:
        for name in (a, b):
            if name not in minimized:
                minimized.append(name)
    varying = [v for v in varying if v != "*"]
    return CircPattern(tuple(minimized), frozenset(fixed), frozenset(varying),
                       frozenset(prefer))


def serialize_pattern(cp: CircPattern) -> str:
    parts = [f"minimize {' '.join(cp.minimized) if cp.minimized else '-'};"]
    if cp.prefer:
        # emit a transitive reduction to keep the file close to what was written
        red = [(a, b) for a, b in sorted(cp.prefer)
               if not any(cp.prec(a, c) and cp.prec(c, b) for c in cp.minimized)]
        parts.append("prefer " + ", ".join(f"{a} < {b}" for a, b in red) + ";")
    parts.append(f"fix {' '.join(sorted(cp.fixed)) if cp.fixed else '-'};")
    parts.append("vary " + (" ".join(sorted(cp.varying)) if cp.varying else "*") + ";")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Structures
# ---------------------------------------------------------------------------

def parse_structure(text: str) -> Structure:
    tk = Tokens(text)
    tk.expect("{")
    domain_n: Optional[int] = None
    constmap = {}
    atoms = []
    while not tk.at_value("}"):
        key = tk.next()[1]
        tk.expect(":")
        if key == "domain":
            kind, val, line, col = tk.next()
            if kind != "num":
                raise ParseError("domain expects a size", line, col)
            domain_n = int(val)
        elif key == "const":
            tk.expect("{")
            while not tk.at_value("}"):
                cname = tk.next()[1]
                tk.expect(":")
                kind, val, line, col = tk.next()
                if kind != "num":
                    raise ParseError("constant maps to an element", line, col)
                constmap[cname] = int(val)
                if tk.at_value(","):
                    tk.next()
            tk.expect("}")
        elif key == "pred":
            tk.expect("{")
            while not tk.at_value("}"):
                pname = tk.next()[1]
                tk.expect(":")
                tk.expect("[")
                while not tk.at_value("]"):
                    tk.expect("[")
                    tup = []
                    while not tk.at_value("]"):
                        kind, val, line, col = tk.next()
                        if kind != "num":
                            raise ParseError("elements are integers", line, col)
                        tup.append(int(val))
                        if tk.at_value(","):
                            tk.next()
                    tk.expect("]")
                    atoms.append((pname, tuple(tup)))
                    if tk.at_value(","):
                        tk.next()
                tk.expect("]")
                if tk.at_value(","):
                    tk.next()
            tk.expect("}")
        else:
            tk.error(f"unknown structure key {key!r}")
        if tk.at_value(","):
            tk.next()
    tk.expect("}")
    if domain_n is None:
        raise ParseError("structure needs a domain", 1, 1)
    return Structure(range(domain_n), constmap, atoms)


def structure_to_json(s: Structure) -> dict:
    order = sorted(s.domain)
    dense = {e: i for i, e in enumerate(order)}
    preds = {}
    for p in s.predicates():
        preds[p] = sorted([dense[e] for e in t] for t in s.ext(p))
    return {"domain": len(order),
            "const": {c: dense[e] for c, e in sorted(s.constmap.items())},
            "pred": preds}


def serialize_structure(s: Structure) -> str:
    data = structure_to_json(s)
    consts = ", ".join(f"{c}: {e}" for c, e in sorted(data["const"].items()))
    preds = ", ".join(
        f"{p}: [{', '.join('[' + ','.join(map(str, t)) + ']' for t in ts)}]"
        for p, ts in sorted(data["pred"].items()))
    return "{domain: %d, const: {%s}, pred: {%s}}" % (data["domain"], consts, preds)


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

def _parse_rule_atoms(tk: Tokens, stop_values) -> list:
    atoms = [_parse_atom_or_eq(tk)]
    while tk.at_value(","):
        tk.next()
        atoms.append(_parse_atom_or_eq(tk))
    for a in atoms:
        if a.op != "atom":
            tk.error("rules are built from relational atoms")
    return atoms


def parse_rules(text: str) -> tuple:
    tk = Tokens(text)
    out = []
    while tk.peek()[0] != "eof":
        body = _parse_rule_atoms(tk, ("=>",))
        tk.expect("=>")
        exist: List[str] = []
        head: Optional[list]
        if tk.at_value("false"):
            tk.next()
            head = None
        else:
            if tk.at_value("exists"):
                tk.next()
                while tk.peek()[0] == "var":
                    exist.append(tk.next()[1][1:])
            head = _parse_rule_atoms(tk, (".",))
        tk.expect(".")
        out.append(ExistentialRule(tuple(body),
                                   None if head is None else tuple(head),
                                   tuple(exist)))
    return tuple(out)


def _atom_str(a: Formula) -> str:
    return f"{a.pred}({','.join(('?' + t.name) if t.is_var else t.name for t in a.args)})"


def serialize_rules(rules: Iterable[ExistentialRule]) -> str:
    lines = []
    for r in rules:
        body = ", ".join(_atom_str(a) for a in r.body)
        if r.head is None:
            head = "false"
        else:
            pre = ""
            ev = [v for v in r.exist_vars if v in r.head_vars()]
            if ev:
                pre = "exists " + " ".join(f"?{v}" for v in sorted(ev)) + " "
            head = pre + ", ".join(_atom_str(a) for a in r.head)
        lines.append(f"{body} => {head}.")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def parse_query(text: str) -> UnionQuery:
    tk = Tokens(text)
    tk.next()  # query name
    tk.expect(":=")
    disjuncts = [_parse_cq(tk)]
    while tk.at_value("|"):
        tk.next()
        disjuncts.append(_parse_cq(tk))
    if tk.at_value("."):
        tk.next()
    if tk.peek()[0] != "eof":
        tk.error("trailing input after query")
    return UnionQuery(tuple(disjuncts))


def _parse_cq(tk: Tokens) -> ConjunctiveQuery:
    if tk.at_value("exists"):
        tk.next()
        while tk.peek()[0] == "var":
            tk.next()  # CQ variables are implicitly existential
    if tk.at_value("("):
        tk.next()
        atoms = [_parse_atom_or_eq(tk)]
        while tk.at_value("and"):
            tk.next()
            atoms.append(_parse_atom_or_eq(tk))
        tk.expect(")")
    else:
        atoms = [_parse_atom_or_eq(tk)]
    for a in atoms:
        if a.op != "atom":
            tk.error("CQs are built from relational atoms")
    return ConjunctiveQuery(tuple(atoms))


def serialize_query(q: UnionQuery, name: str = "Q") -> str:
    parts = []
    for cq in q.disjuncts:
        vs = sorted(cq.variables())
        body = " and ".join(_atom_str(a) for a in cq.atoms)
        if vs:
            parts.append("exists " + " ".join(f"?{v}" for v in vs) + f" ({body})")
        else:
            parts.append(f"({body})" if len(cq.atoms) > 1 else body)
    return f"{name} := " + " | ".join(parts) + ".\n"


# ---------------------------------------------------------------------------
# Machines
# ---------------------------------------------------------------------------

def parse_atm(text: str) -> AtmSpec:
    states: List[str] = []
    inp: List[str] = []
    tape: List[str] = []
    start = None
    kinds = {}
    delta = {}
    coeffs = (0, 1)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError("machine lines look like 'key: ...'", lineno, 1)
        key, rest = line.split(":", 1)
        key = key.strip()
        toks = rest.split()
        if key == "states":
            states = toks
        elif key == "input":
            inp = toks
        elif key == "tape":
            tape = toks
        elif key == "start":
            start = toks[0]
        elif key == "kind":
            kinds[toks[0]] = toks[1]
        elif key == "trans":
            try:
                arrow = toks.index("->")
            except ValueError:
                raise ParseError("transition lines need '->'", lineno, 1) from None
            q, s = toks[0], toks[1]
            rhs = " ".join(toks[arrow + 1:])
            branches = [b.split() for b in rhs.split("|")]
            if len(branches) != 2 or any(len(b) != 3 for b in branches):
                raise ParseError("transitions list exactly two 'state symbol move' branches",
                                 lineno, 1)
            delta[(q, s)] = tuple((b[0], b[1], b[2]) for b in branches)
        elif key == "space":
            coeffs = tuple(int(t) for t in toks)
        else:
            raise ParseError(f"unknown machine key {key!r}", lineno, 1)
    if start is None:
        raise ParseError("machine needs a start state", 1, 1)
    return AtmSpec(tuple(states), tuple(inp), tuple(tape),
                   tuple(sorted(delta.items())), start,
                   tuple(sorted(kinds.items())), coeffs)


def serialize_atm(m: AtmSpec) -> str:
    lines = [
        "states: " + " ".join(m.states),
        "input: " + " ".join(m.input_alphabet),
        "tape: " + " ".join(m.tape_alphabet),
        "start: " + m.start,
    ]
    for q, k in m.kinds:
        lines.append(f"kind: {q} {k}")
    for (q, s), branches in m.delta:
        rhs = " | ".join(f"{b[0]} {b[1]} {b[2]}" for b in branches)
        lines.append(f"trans: {q} {s} -> {rhs}")
    lines.append("space: " + " ".join(str(c) for c in m.space_coeffs))
    return "\n".join(lines) + "\n"
