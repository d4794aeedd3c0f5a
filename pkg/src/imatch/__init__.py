"""Chunk-level monolingual alignment with an exact ILP aligner, lexical
similarity features and random-forest relation/score classifiers."""

from .aligncore import (AlignConfig, AlignmentSolution, CandidatePair, ChunkedSentence,
                        align, alpha_weight, build_candidates, solve_ilp)
from .classify import LabeledPair, label_solution, train_score_model, train_type_model
from .features import Phrase, classifier_vector, sim_score
from .io_eval import EvalReport, WaDocument, WaEntry, evaluate, parse_wa, write_wa
from .lexres import Resources

__version__ = "0.1.0"

__all__ = [
    "AlignConfig", "AlignmentSolution", "CandidatePair", "ChunkedSentence", "align",
    "alpha_weight", "build_candidates", "solve_ilp", "LabeledPair", "label_solution",
    "train_score_model", "train_type_model", "Phrase", "classifier_vector", "sim_score",
    "EvalReport", "WaDocument", "WaEntry", "evaluate", "parse_wa", "write_wa", "Resources",
]
