"""Synthetic chunked sentence pairs and toy resources for benchmarks and tests."""

from __future__ import annotations

import random
import string

import numpy as np

from .aligncore import ChunkedSentence
from .lexres import EmbeddingTable, Lexicon, ParaphraseTable, Resources


def make_vocab(rng: random.Random, size: int) -> list[str]:
    seen = set()
    out = []
    while len(out) < size:
        w = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(3, 8)))
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def _typo(rng: random.Random, word: str) -> str:
    i = rng.randrange(len(word))
    return word[:i] + rng.choice(string.ascii_lowercase) + word[i + 1:]


def make_resources(seed: int = 0, vocab_size: int = 400, dim: int = 25) -> tuple[Resources, list[str]]:
    rng = random.Random(seed)
    vocab = make_vocab(rng, vocab_size)
    nrng = np.random.default_rng(seed)
    vectors = {w: nrng.normal(size=dim) for w in vocab}
    syn = {}
    for a, b in zip(vocab[0::7], vocab[1::7]):
        syn.setdefault(a, set()).add(b)
        syn.setdefault(b, set()).add(a)
    ant = {}
    for a, b in zip(vocab[2::11], vocab[3::11]):
        ant.setdefault(a, set()).add(b)
        ant.setdefault(b, set()).add(a)
    ppdb = ParaphraseTable({(a, b): 0.8 for a, b in zip(vocab[0::7], vocab[1::7])})
    res = Resources(
        synonym=Lexicon("synonym", {k: frozenset(v) for k, v in syn.items()}),
        antonym=Lexicon("antonym", {k: frozenset(v) for k, v in ant.items()}),
        ppdb=ppdb,
        embeddings=EmbeddingTable(dim, vectors),
    )
    return res, vocab


def make_pair(rng: random.Random, vocab: list[str], n_chunks: int = 12,
              max_len: int = 3) -> tuple[ChunkedSentence, ChunkedSentence]:
    """A source sentence and a noisy, chunk-shuffled paraphrase of it.

    Target chunks keep most source words, with typos, substitutions and
    a few replaced by unrelated chunks.
    """
    src = [[rng.choice(vocab) for _ in range(rng.randint(1, max_len))] for _ in range(n_chunks)]
    tgt = []
    for chunk in src:
        r = rng.random()
        if r < 0.15:
            tgt.append([rng.choice(vocab) for _ in range(rng.randint(1, max_len))])
            continue
        new = []
        for w in chunk:
            q = rng.random()
            if q < 0.15:
                new.append(_typo(rng, w))
            elif q < 0.25:
                new.append(rng.choice(vocab))
            else:
                new.append(w)
        tgt.append(new)
    rng.shuffle(tgt)
    return ChunkedSentence.from_chunks(src), ChunkedSentence.from_chunks(tgt)
