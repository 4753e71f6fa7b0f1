"""Toolkit for an intuitionistic modal logic of interactive proofs.

The pieces, bottom up: message-term derivation by pairing/unpairing
(:mod:`liip.derivation`); formulas, parsing and schema matching
(:mod:`liip.syntax`); input histories and the finite concrete models they
generate (:mod:`liip.histories`); abstract Kripke models, validation,
satisfaction and filtration (:mod:`liip.semantics`); an intuitionistic
propositional decision procedure (:mod:`liip.ipl`); the Hilbert-style proof
kernel with the bundled law corpus (:mod:`liip.kernel`); and bounded
validity decision by countermodel search (:mod:`liip.decide`).
"""
from .syntax import (CM, CM_TERM, Agent, And, Data, Formula, Implies, Knows,
                     Not, Or, Pair, Proves, Term, Var, parse_formula,
                     parse_term, render, render_term, subformula_closure,
                     proof_terms_of, match_schema, substitute)
from .derivation import KnowledgeBase, analyze, derives, term_leq
from .histories import (History, concrete_access, generate_model,
                        history_equiv, history_leq, knows_at, parse_trace,
                        project)
from .semantics import (KripkeModel, ValidationReport, globally_true,
                        load_model, minimal_filtration, satisfies,
                        serialize_model, validate_model)
from .ipl import ipl_entails, ipl_valid, skeletonize
from .kernel import (LemmaDatabase, ProofScript, check_line, check_proof,
                     parse_script, run_corpus)
from .decide import Invalid, Unknown, Valid, decide, find_countermodel

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
