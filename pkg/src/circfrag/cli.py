"""Command-line surface.

Exit codes: 0 = entailed (or plain success), 1 = not entailed (or machine
rejects), 2 = error.  --json switches the verdict commands to the JSON
schema {verdict, bound_relative, witness?, metadata}.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import textio
from .circumscription import (Verdict, circ_consequence, circ_query,
                              enumerate_cp_minimal_models)
from .errors import CircfragError
from .fmp_fo2 import default_sigma, shrink_fo2
from .fmp_gf import shrink_gf
from .gfquery import GFQueryParams, gf_circ_query
from .hardness import atm_accepts, gen_exp_instance, gen_exp_instance_binary, gen_tower_instance
from .knowledge import CircPattern, KnowledgeBase, kb_to_sentence
from .normalform import scott_fo2, scott_gf
from .c2bapa import emit_bapa
from .syntax import And, classify_fragment, signature_of


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_kb(args) -> KnowledgeBase:
    ontology = ()
    if args.ontology:
        text = _read(args.ontology)
        if args.ontology.endswith(".rules"):
            ontology = tuple(r.as_formula() for r in textio.parse_rules(text))
        else:
            ontology = textio.parse_sentences(text)
    db = textio.parse_db(_read(args.database)) if args.database else None
    from .knowledge import Database
    return KnowledgeBase(ontology, db if db is not None else Database())


def _load_pattern(args, sig) -> CircPattern:
    cp = textio.parse_pattern(_read(args.pattern)) if args.pattern else CircPattern()
    return cp.completed_for(sig)


def _emit_verdict(v: Verdict, as_json: bool) -> int:
    if as_json:
        print(json.dumps(v.as_json(), sort_keys=True))
    else:
        word = "entailed" if v.entailed else "not-entailed"
        rel = " (bound-relative)" if v.entailed and v.bound_relative else ""
        print(f"{word}{rel}")
        if v.counter is not None:
            print("countermodel: " + textio.serialize_structure(v.counter))
    return 0 if v.entailed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="circfrag",
        description="Circumscribed reasoning over decidable first-order fragments.")
    parser.add_argument("--json", action="store_true", help="JSON output")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized paths")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="fragment membership of a sentence")
    p.add_argument("sentence", help=".fol file with one sentence")

    p = sub.add_parser("normalize", help="Scott normal form")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fo2", action="store_true")
    g.add_argument("--gf", action="store_true")
    p.add_argument("sentence")

    p = sub.add_parser("minimal-models", help="enumerate CP-minimal models")
    p.add_argument("sentence")
    p.add_argument("--pattern")
    p.add_argument("--max-domain", type=int, required=True)
    p.add_argument("--limit", type=int, default=0, help="stop after N models")

    p = sub.add_parser("consequence", help="circumscribed consequence phi |= psi")
    p.add_argument("phi")
    p.add_argument("psi")
    p.add_argument("--pattern")
    p.add_argument("--max-domain", type=int, required=True)

    p = sub.add_parser("query", help="circumscribed UCQ-querying of a KB")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--brute", action="store_true")
    g.add_argument("--mosaic", action="store_true")
    p.add_argument("--ontology")
    p.add_argument("--database")
    p.add_argument("--pattern")
    p.add_argument("--query", required=True)
    p.add_argument("--max-domain", type=int, default=4)
    p.add_argument("--core-threshold", type=int, default=3)
    p.add_argument("--u-size", type=int, default=4)
    p.add_argument("--ref-bound", type=int, default=4)
    p.add_argument("--depth", type=int, default=2)

    p = sub.add_parser("shrink", help="finite-model shrinking constructions")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fo2", action="store_true")
    g.add_argument("--gf", action="store_true")
    p.add_argument("sentence")
    p.add_argument("--structure", required=True)

    p = sub.add_parser("emit-bapa", help="the C2 circumscription-to-BAPA sentence")
    p.add_argument("phi")
    p.add_argument("psi")
    p.add_argument("--pattern")
    p.add_argument("-o", "--output")

    p = sub.add_parser("gen-hardness", help="hardness-instance generators")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--exp", action="store_true")
    g.add_argument("--exp-binary", action="store_true")
    g.add_argument("--tower", type=int, metavar="K")
    p.add_argument("--atm", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--out-prefix", default="instance")

    p = sub.add_parser("atm-run", help="run the alternating machine oracle")
    p.add_argument("--atm", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--space-cap", type=int)

    args = parser.parse_args(argv)
    random.seed(args.seed)
    try:
        return _dispatch(args)
    except CircfragError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "classify":
        f = textio.parse_sentence(_read(args.sentence))
        frags = sorted(classify_fragment(f))
        print(json.dumps({"fragments": frags}) if args.json else " ".join(frags))
        return 0

    if args.command == "normalize":
        f = textio.parse_sentence(_read(args.sentence))
        nf = scott_fo2(f) if args.fo2 else scott_gf(f)
        if args.json:
            print(json.dumps({"sentence": textio.serialize_sentence(nf.sentence),
                              "fresh": sorted(nf.fresh),
                              "n_forall": nf.n_forall, "n_exists": nf.n_exists}))
        else:
            print(textio.serialize_sentence(nf.sentence))
            print(f"fresh: {' '.join(sorted(nf.fresh)) or '-'}")
            print(f"n_forall: {nf.n_forall}  n_exists: {nf.n_exists}")
        return 0

    if args.command == "minimal-models":
        f = textio.parse_sentence(_read(args.sentence))
        sig = signature_of(f)
        cp = _load_pattern(args, sig)
        count = 0
        for m in enumerate_cp_minimal_models(f, cp, args.max_domain, sig=sig):
            print(textio.serialize_structure(m))
            count += 1
            if args.limit and count >= args.limit:
                break
        return 0

    if args.command == "consequence":
        phi = textio.parse_sentence(_read(args.phi))
        psi = textio.parse_sentence(_read(args.psi))
        cp = _load_pattern(args, signature_of(And(phi, psi)))
        v = circ_consequence(phi, psi, cp, args.max_domain)
        return _emit_verdict(v, args.json)

    if args.command == "query":
        kb = _load_kb(args)
        q = textio.parse_query(_read(args.query))
        sig = kb.signature().union(signature_of(q.as_formula()))
        cp = _load_pattern(args, sig)
        if args.brute:
            v = circ_query(kb, cp, q, args.max_domain)
        else:
            params = GFQueryParams(core_threshold=args.core_threshold,
                                   u_size=args.u_size, ref_bound=args.ref_bound,
                                   depth=args.depth)
            v = gf_circ_query(kb, cp, q, params)
        return _emit_verdict(v, args.json)

    if args.command == "shrink":
        f = textio.parse_sentence(_read(args.sentence))
        s = textio.parse_structure(_read(args.structure))
        from .normalform import extend_to_nf_model
        if args.fo2:
            nf = scott_fo2(f)
            out = shrink_fo2(extend_to_nf_model(s, nf), nf, default_sigma(nf))
        else:
            nf = scott_gf(f)
            out = shrink_gf(extend_to_nf_model(s, nf), nf.sentence, default_sigma(nf))
        print(textio.serialize_structure(out))
        return 0

    if args.command == "emit-bapa":
        phi = textio.parse_sentence(_read(args.phi))
        psi = textio.parse_sentence(_read(args.psi))
        cp = _load_pattern(args, signature_of(And(phi, psi)))
        text = emit_bapa(phi, psi, cp)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            print(text, end="")
        return 0

    if args.command == "gen-hardness":
        m = textio.parse_atm(_read(args.atm))
        if args.exp:
            rules, db, cp, q = gen_exp_instance(m, args.word)
        elif args.exp_binary:
            rules, db, cp, q = gen_exp_instance_binary(m, args.word)
        else:
            rules, db, cp, q = gen_tower_instance(args.tower, m, args.word)
        base = args.out_prefix
        with open(base + ".rules", "w", encoding="utf-8") as fh:
            fh.write(textio.serialize_rules(rules))
        with open(base + ".db", "w", encoding="utf-8") as fh:
            fh.write(textio.serialize_db(db))
        with open(base + ".pat", "w", encoding="utf-8") as fh:
            fh.write(textio.serialize_pattern(cp))
        with open(base + ".q", "w", encoding="utf-8") as fh:
            fh.write(textio.serialize_query(q))
        print(f"wrote {base}.rules/.db/.pat/.q "
              f"({len(rules)} rules, {len(db.facts)} facts)")
        return 0

    if args.command == "atm-run":
        m = textio.parse_atm(_read(args.atm))
        verdict = atm_accepts(m, args.word, args.space_cap)
        print(json.dumps({"accepts": verdict}) if args.json
              else ("accept" if verdict else "reject"))
        return 0 if verdict else 1

    raise CircfragError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
