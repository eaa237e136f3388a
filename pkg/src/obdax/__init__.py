"""Knowledge-base engine for DL-Lite with complex role inclusions.

Answers conjunctive queries by first-order rewriting, checks consistency and
admissibility over a polynomial small model, and enumerates ontology- and
data-driven moves for relaxing or restraining queries, including dimensional
roll-up and drill-down.
"""

from .analysis import (BoundReport, Boundedness, RecursionGraph, TBoxClass,
                       TBoxKind, check_k_bounded, classify, find_chain_bound,
                       recursion_graph, simple_superroles)
from .chase import ChaseResult, chase, oracle_certain_answers, oracle_consistent
from .context import KBContext
from .dimensions import (CoversReport, DimensionReport, NavigationChain,
                         OrderConstraint, check_admissibility, covers,
                         drill_down, ell, roll_up)
from .errors import (CapExceededError, EmptyConstraintSetError, EngineError,
                     InconsistentKBError, NoApplicableChainError,
                     NotADimensionVariableError, RecursiveTBoxError,
                     StaleMoveError, UnboundedOrUnknownError,
                     UnsupportedFragmentError, UnsupportedShapeError)
from .kb import (ABox, Axiom, BasicConcept, BOT, Bot, ConceptInc, Cri,
                 DisjConcepts, DisjRoles, Exists, Named, Role, RoleInc,
                 Signature, TBox, TOP, Top, normalize, signature_of,
                 validate_tbox)
from .model import (AnswerMethod, AnswerSet, ConsistencyResult, Element,
                    Interpretation, abox_interpretation, build_small_model,
                    certain_answers, check_consistency, evaluate,
                    instance_answers, is_instance_query, satisfies,
                    satisfies_abox)
from .queries import (Atom, ConceptAtom, ConjunctiveQuery, EqAtom, Individual,
                      RoleAtom, Term, Variable, canonicalize, make_query,
                      queries_equivalent, substitute)
from .reformulate import (Justification, RuleInstance, apply_move,
                          query_containment_k, relax_moves, restrain_moves)
from .rewriting import (DEFAULT_MAX_STEPS, RewritingSet, RewritingStats,
                        k_rewrite, k_unfold, rewrite)
from .syntax import (Diagnostic, KBDocument, QueryDocument, SourceSpan,
                     answers_json, answers_text, parse_kb, parse_query,
                     query_text, serialize, serialize_kb, ucq_text)

__version__ = "0.1.0"
