"""Relation-type and similarity-score classifiers for aligned chunk pairs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .aligncore import AlignmentSolution, ChunkedSentence
from .features import CLASSIFIER_SLOTS, DEFAULT_HASH_DIM, FeatureVector, classifier_vector
from .forest import ForestError, ForestModel, ForestParams, TrainingSet, train_forest
from .lexres import Resources

log = logging.getLogger(__name__)

TYPE_LABELS = ("EQUI", "OPPO", "SPE1", "SPE2", "SIMI", "REL", "NOALI", "ALIC")
PREDICTED_TYPES = TYPE_LABELS[:6]
UNALIGNED_TYPES = frozenset({"NOALI", "ALIC"})
SCORE_CLASSES = ("1", "2", "3", "4", "5")
DEFAULT_TYPE, DEFAULT_SCORE = "SIMI", 3


@dataclass(frozen=True)
class LabeledPair:
    """One alignment record. A NOALI/ALIC record has one side empty."""

    s1: tuple[int, ...]
    s2: tuple[int, ...]
    type: str
    score: int

    def __post_init__(self):
        if self.type not in TYPE_LABELS:
            raise ValueError(f"unknown relation type {self.type!r}")
        if not 0 <= self.score <= 5:
            raise ValueError(f"score {self.score} outside 0..5")

    @property
    def aligned(self) -> bool:
        return bool(self.s1) and bool(self.s2) and self.type not in UNALIGNED_TYPES


def select_classifier_features(v: FeatureVector) -> np.ndarray:
    """f1, f2, f3, f5, f7, f8, f9, f12 followed by the n-gram block."""
    return np.concatenate([[getattr(v, name) for name in CLASSIFIER_SLOTS], v.ngram_block])


def pair_vector(src: ChunkedSentence, tgt: ChunkedSentence, s1, s2, res: Resources,
                hash_dim: int) -> np.ndarray:
    return select_classifier_features(classifier_vector(src.phrase(s1), tgt.phrase(s2), res, hash_dim))


def _rows(gold: Iterable, res: Resources, hash_dim: int, label_of) -> tuple[np.ndarray, list[str]]:
    X, y = [], []
    for entry in gold:
        for p in entry.pairs:
            if not p.aligned:
                continue
            label = label_of(p)
            if label is None:
                continue
            X.append(pair_vector(entry.source, entry.target, p.s1, p.s2, res, hash_dim))
            y.append(label)
    if not X:
        raise ForestError("no aligned pairs to train on")
    return np.vstack(X), y


def train_type_model(gold: Iterable, res: Resources, params: ForestParams | None = None,
                     hash_dim: int = DEFAULT_HASH_DIM, jobs: int = 1) -> ForestModel:
    X, y = _rows(gold, res, hash_dim, lambda p: p.type)
    classes = [c for c in PREDICTED_TYPES if c in set(y)]
    return train_forest(TrainingSet(X, y, classes), params, jobs)


def train_score_model(gold: Iterable, res: Resources, params: ForestParams | None = None,
                      hash_dim: int = DEFAULT_HASH_DIM, jobs: int = 1) -> ForestModel:
    X, y = _rows(gold, res, hash_dim, lambda p: str(p.score) if p.score > 0 else None)
    classes = [c for c in SCORE_CLASSES if c in set(y)]
    return train_forest(TrainingSet(X, y, classes), params, jobs)


def model_hash_dim(*models: ForestModel | None) -> int:
    dims = {m.n_features - len(CLASSIFIER_SLOTS) for m in models if m is not None}
    if len(dims) > 1:
        raise ForestError(f"type and score models disagree on n-gram width: {sorted(dims)}")
    dim = dims.pop() if dims else DEFAULT_HASH_DIM
    if dim < 2:
        raise ForestError("model feature width too small for an n-gram block")
    return dim


def label_solution(sol: AlignmentSolution, src: ChunkedSentence, tgt: ChunkedSentence,
                   type_model: ForestModel | None, score_model: ForestModel | None,
                   res: Resources) -> list[LabeledPair]:
    """Type and score every chosen pair; emit NOALI/0 for unaligned chunks.

    A missing model falls back to SIMI (type) or 3 (score). EQUI pairs
    always get score 5.
    """
    out: list[LabeledPair] = []
    chosen = list(sol.chosen)
    if chosen:
        types = [DEFAULT_TYPE] * len(chosen)
        scores = [DEFAULT_SCORE] * len(chosen)
        if type_model is not None or score_model is not None:
            hash_dim = model_hash_dim(type_model, score_model)
            X = np.vstack([pair_vector(src, tgt, c.s1, c.s2, res, hash_dim) for c in chosen])
            if type_model is not None:
                types = type_model.predict_many(X)
            if score_model is not None:
                scores = [int(s) for s in score_model.predict_many(X)]
        for c, t, s in zip(chosen, types, scores):
            out.append(LabeledPair(c.s1, c.s2, t, 5 if t == "EQUI" else s))
    out.extend(LabeledPair((i,), (), "NOALI", 0) for i in sol.unaligned_source)
    out.extend(LabeledPair((), (j,), "NOALI", 0) for j in sol.unaligned_target)
    return out


def class_distribution(gold: Sequence) -> tuple[dict, dict]:
    types: dict[str, int] = {}
    scores: dict[int, int] = {}
    for entry in gold:
        for p in entry.pairs:
            types[p.type] = types.get(p.type, 0) + 1
            scores[p.score] = scores.get(p.score, 0) + 1
    return types, scores
