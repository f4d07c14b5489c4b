"""circfrag: circumscribed reasoning over decidable first-order fragments.

Fragment classification and Scott normal forms, CP-minimal-model checking and
enumeration, circumscribed consequence and UCQ-querying (brute force and the
mosaic procedure for GF), the two finite-model shrinking constructions, the
C2-to-BAPA encoder, and the EXP/TOWER hardness-instance generators with an
alternating-Turing-machine oracle.
"""

from .circumscription import (Verdict, circ_consequence, circ_query, cp_less,
                              enumerate_cp_minimal_models, is_cp_minimal)
from .c2bapa import cardinality_oracle, emit_bapa, enumerate_types_c2, parse_bapa
from .fmp_fo2 import (WitnessTable, build_witness_table, check_shrink_points,
                      kings, shrink_fo2)
from .fmp_gf import (compatibility_check, check_cover_points, rho,
                     rosati_cover, rosati_cover_detailed, shrink_gf,
                     stabilizing_delta, truncate)
from .gfquery import (GFQueryParams, Mosaic, OuterPair, assemble_countermodel,
                      condition_two, eliminate, enumerate_mosaics, gf_circ_query,
                      is_good, saturate)
from .hardness import (AtmSpec, atm_accepts, gen_exp_instance,
                       gen_exp_instance_binary, gen_tower_instance)
from .knowledge import (CircPattern, ConjunctiveQuery, Database,
                        ExistentialRule, KnowledgeBase, UnionQuery,
                        atomic_query, consequence_to_aq, kb_to_sentence,
                        rules_to_gf)
from .normalform import ScottNF, check_nf_model, extend_to_nf_model, scott_fo2, scott_gf
from .structures import (GuardedTuple, Structure, TypeN, eval_formula, mgt,
                         tp, tp1_set, type_count, ucq_match)
from .syntax import (And, Atom, Const, CountQ, Eq, Exists, Forall, Formula,
                     Iff, Implies, Not, Or, Signature, Term, Var,
                     classify_fragment, free_vars, signature_of)

__version__ = "0.1.0"
