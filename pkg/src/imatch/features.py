"""Pairwise phrase features F1-F12 and the aligner's similarity score.

Two routes compute the same numbers: the scalar functions below work on
one phrase pair and are the reference; :func:`sim_matrix` computes the
alignment similarity for every (source group, target group) pair at once
with dense matrix products and is what the aligner calls.
"""

from __future__ import annotations

import math
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lexres import Resources
from .textcore import Token, edit_distance, ngrams

NEGATIONS = frozenset({"not", "n't", "n’t", "never"})
DEFAULT_HASH_DIM = 512
F_NAMES = tuple(f"f{i}" for i in range(1, 13))
CLASSIFIER_SLOTS = ("f1", "f2", "f3", "f5", "f7", "f8", "f9", "f12")


@dataclass(frozen=True)
class Phrase:
    tokens: tuple[Token, ...]
    words: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "words", tuple(t.canonical for t in self.tokens if not t.is_punct))

    @property
    def length(self) -> int:
        return len(self.words)

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _expand(words, res: Resources) -> set:
    base = set(words)
    return (base | res.synonym.expand(base) | res.similar_to.expand(base)
            | res.hypernym.expand(base) | res.hyponym.expand(base))


def overlap_features(p1: Phrase, p2: Phrase, res: Resources) -> tuple[float, float, float, float, float]:
    w1, w2 = set(p1.words), set(p2.words)
    half = 0.5 * (p1.length + p2.length)
    f1 = _safe_div(len(w1 & w2), half)
    # Lexicon expansion can push the raw ratio past 2; clamp to the F1-F3 range.
    f2 = min(2.0, _safe_div(len(_expand(w1, res) & _expand(w2, res)), half))
    ant1, ant2 = res.antonym.expand(w1), res.antonym.expand(w2)
    f3 = _safe_div(len(w1 & ant2) + len(w2 & ant1), half)
    syn1 = w1 | res.synonym.expand(w1)
    syn2 = w2 | res.synonym.expand(w2)
    hyp2 = res.hypernym.expand(syn2) | res.hyponym.expand(syn2)
    f4 = 1.0 if syn1 & hyp2 else 0.0
    total = 0.0
    for a in p1.words:
        for b in p2.words:
            s = res.taxonomy.path_similarity(a, b)
            if s is not None:
                total += s
    f5 = _safe_div(total, p1.length + p2.length)
    return f1, f2, f3, f4, f5


def is_negation(word: str) -> bool:
    return word in NEGATIONS or word.endswith("n't") or word.endswith("n’t")


def surface_features(p1: Phrase, p2: Phrase) -> tuple[float, float, float]:
    f6 = 1.0 if any(t.is_number for t in p1.tokens + p2.tokens) else 0.0
    neg1 = any(is_negation(w) for w in p1.words)
    neg2 = any(is_negation(w) for w in p2.words)
    f7 = 1.0 if neg1 != neg2 else 0.0
    f12 = float(p1.length - p2.length)
    return f6, f7, f12


def word_edit_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if not longest:
        return 1.0
    return max(0.0, 1.0 - edit_distance(a, b) / longest)


def edit_score(p1: Phrase, p2: Phrase) -> float:
    """Average over source words of the best edit similarity to any target word."""
    if not p1.words or not p2.words:
        return 0.0
    targets = tuple(dict.fromkeys(p2.words))
    best_for: dict[str, float] = {}
    total = 0.0
    for a in p1.words:
        best = best_for.get(a)
        if best is None:
            if a in targets:
                best = 1.0
            else:
                best = max(word_edit_similarity(a, b) for b in targets)
            best_for[a] = best
        total += best
    return total / p1.length


def _embedding_sum(p: Phrase, res: Resources) -> np.ndarray | None:
    emb = res.embeddings
    if emb is None:
        return None
    acc = np.zeros(emb.dimension)
    for w in p.words:
        v = emb.embed(w)
        if v is not None:
            acc += v
    return acc


def _cosine(a: np.ndarray | None, b: np.ndarray | None) -> float:
    if a is None or b is None:
        return 0.0
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _counter_cosine(c1: Counter, c2: Counter) -> float:
    if not c1 or not c2:
        return 0.0
    dot = sum(v * c2[k] for k, v in c1.items() if k in c2)
    n1 = math.sqrt(sum(v * v for v in c1.values()))
    n2 = math.sqrt(sum(v * v for v in c2.values()))
    return min(1.0, dot / (n1 * n2))


def resource_sim(p1: Phrase, p2: Phrase, res: Resources) -> tuple[float, float, float]:
    f9 = 0.0
    for a in p1.words:
        for b in p2.words:
            f9 += res.ppdb.score(a, b)
    f10 = _cosine(_embedding_sum(p1, res), _embedding_sum(p2, res))
    f11 = _counter_cosine(ngrams(p1.words, 2), ngrams(p2.words, 2))
    return f9, f10, f11


def sim_score(p1: Phrase, p2: Phrase, res: Resources) -> float:
    """max(F1, F2, F3, F8, F10, F11)."""
    f1, f2, f3, _, _ = overlap_features(p1, p2, res)
    f8 = edit_score(p1, p2)
    _, f10, f11 = resource_sim(p1, p2, res)
    return max(f1, f2, f3, f8, f10, f11)


def _hash_slot(key: str, width: int) -> int:
    return zlib.crc32(key.encode("utf-8")) % width


def ngram_block(p1: Phrase, p2: Phrase, hash_dim: int) -> np.ndarray:
    """Hashed unigram+bigram counts; source in the lower half, target upper."""
    half = hash_dim // 2
    block = np.zeros(hash_dim)
    for offset, p in ((0, p1), (half, p2)):
        for w in p.words:
            block[offset + _hash_slot("u\x1f" + w, half)] += 1
        for a, b in ngrams(p.words, 2):
            block[offset + _hash_slot("b\x1f" + a + " " + b, half)] += 1
    return block


@dataclass(frozen=True)
class FeatureVector:
    f1: float
    f2: float
    f3: float
    f4: float
    f5: float
    f6: float
    f7: float
    f8: float
    f9: float
    f10: float
    f11: float
    f12: float
    ngram_block: np.ndarray

    def scalars(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in F_NAMES])


def classifier_vector(p1: Phrase, p2: Phrase, res: Resources,
                      hash_dim: int = DEFAULT_HASH_DIM) -> FeatureVector:
    if hash_dim < 2:
        raise ValueError("hash_dim must be >= 2")
    f1, f2, f3, f4, f5 = overlap_features(p1, p2, res)
    f6, f7, f12 = surface_features(p1, p2)
    f8 = edit_score(p1, p2)
    f9, f10, f11 = resource_sim(p1, p2, res)
    return FeatureVector(f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12,
                         ngram_block(p1, p2, hash_dim))


# -- batched route --------------------------------------------------------

def _indicator(sets: Sequence, vocab: dict) -> np.ndarray:
    mat = np.zeros((len(sets), len(vocab)))
    for i, s in enumerate(sets):
        for w in s:
            mat[i, vocab[w]] = 1.0
    return mat


def _counts(seqs: Sequence[Counter], vocab: dict) -> np.ndarray:
    mat = np.zeros((len(seqs), len(vocab)))
    for i, c in enumerate(seqs):
        for k, v in c.items():
            mat[i, vocab[k]] = v
    return mat


def _vocab(*collections) -> dict:
    vocab: dict = {}
    for coll in collections:
        for item in coll:
            for k in item:
                vocab.setdefault(k, len(vocab))
    return vocab


def _row_cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    den = np.outer(na, nb)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(den > 0, (a @ b.T) / np.where(den > 0, den, 1.0), 0.0)
    return np.clip(cos, -1.0, 1.0)


def sim_matrix(src: Sequence[Phrase], tgt: Sequence[Phrase], res: Resources) -> np.ndarray:
    """``out[i, j] == sim_score(src[i], tgt[j], res)`` for all pairs."""
    n1, n2 = len(src), len(tgt)
    if not n1 or not n2:
        return np.zeros((n1, n2))
    len1 = np.array([p.length for p in src], dtype=float)
    len2 = np.array([p.length for p in tgt], dtype=float)
    half = 0.5 * (len1[:, None] + len2[None, :])
    safe_half = np.where(half > 0, half, 1.0)

    w1 = [set(p.words) for p in src]
    w2 = [set(p.words) for p in tgt]
    e1 = [_expand(s, res) for s in w1]
    e2 = [_expand(s, res) for s in w2]
    a1 = [res.antonym.expand(s) for s in w1]
    a2 = [res.antonym.expand(s) for s in w2]
    vocab = _vocab(w1, w2, e1, e2, a1, a2)
    W1, W2 = _indicator(w1, vocab), _indicator(w2, vocab)
    f1 = np.where(half > 0, (W1 @ W2.T) / safe_half, 0.0)
    E1, E2 = _indicator(e1, vocab), _indicator(e2, vocab)
    f2 = np.minimum(2.0, np.where(half > 0, (E1 @ E2.T) / safe_half, 0.0))
    A1, A2 = _indicator(a1, vocab), _indicator(a2, vocab)
    f3 = np.where(half > 0, (W1 @ A2.T + A1 @ W2.T) / safe_half, 0.0)

    # F8: word-level best matches per target group, then per-source averages.
    sw = list(dict.fromkeys(w for p in src for w in p.words))
    tw = list(dict.fromkeys(w for p in tgt for w in p.words))
    f8 = np.zeros((n1, n2))
    if sw and tw:
        sidx = {w: i for i, w in enumerate(sw)}
        tidx = {w: i for i, w in enumerate(tw)}
        ws = np.array([[1.0 if a == b else word_edit_similarity(a, b) for b in tw] for a in sw])
        member = np.zeros((n2, len(tw)), dtype=bool)
        for j, s in enumerate(w2):
            for w in s:
                member[j, tidx[w]] = True
        best = np.where(member[None, :, :], ws[:, None, :], -np.inf).max(axis=2)
        best = np.where(np.isfinite(best), best, 0.0)
        counts = np.zeros((n1, len(sw)))
        for i, p in enumerate(src):
            for w in p.words:
                counts[i, sidx[w]] += 1.0
        safe_len1 = np.where(len1 > 0, len1, 1.0)
        f8 = np.where(len1[:, None] > 0, (counts @ best) / safe_len1[:, None], 0.0)
        f8 = np.where(len2[None, :] > 0, f8, 0.0)

    if res.embeddings is not None:
        S1 = np.stack([_embedding_sum(p, res) for p in src])
        S2 = np.stack([_embedding_sum(p, res) for p in tgt])
        f10 = _row_cosine(S1, S2)
    else:
        f10 = np.zeros((n1, n2))

    b1 = [ngrams(p.words, 2) for p in src]
    b2 = [ngrams(p.words, 2) for p in tgt]
    bvocab = _vocab(b1, b2)
    if bvocab:
        f11 = np.minimum(1.0, _row_cosine(_counts(b1, bvocab), _counts(b2, bvocab)))
    else:
        f11 = np.zeros((n1, n2))

    return np.maximum.reduce([f1, f2, f3, f8, f10, f11])
