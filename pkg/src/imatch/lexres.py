"""Flat-file lexical resources: lexicons, taxonomy, paraphrase scores, embeddings."""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .textcore import NormalizationMap, EMPTY_MAP

log = logging.getLogger(__name__)

RELATIONS = ("synonym", "similar_to", "antonym", "hypernym", "hyponym")
SYMMETRIC = {"synonym", "similar_to", "antonym"}
INVERSE = {"hypernym": "hyponym", "hyponym": "hypernym"}


class ResourceError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    relation: str
    entries: Mapping[str, frozenset] = field(default_factory=dict)

    def related(self, word: str) -> frozenset:
        return self.entries.get(word, frozenset())

    def expand(self, words) -> set:
        out = set()
        for w in words:
            out |= self.related(w)
        return out

    def inverse(self) -> "Lexicon":
        inv = defaultdict(set)
        for w, rel in self.entries.items():
            for r in rel:
                inv[r].add(w)
        return Lexicon(INVERSE.get(self.relation, self.relation),
                       {k: frozenset(v) for k, v in inv.items()})

    def __len__(self):
        return len(self.entries)


def _freeze(table) -> dict:
    return {k: frozenset(v) for k, v in sorted(table.items())}


def load_lexicon(path: str | Path, relation: str) -> Lexicon:
    """Read ``word<TAB>rel1,rel2,...`` lines.

    Synonym, similar_to and antonym relations are closed under symmetry on
    load. Hypernym/hyponym files are read as given; :func:`link_taxonomic`
    makes a pair of them mutual inverses.
    """
    if relation not in RELATIONS:
        raise ResourceError(f"unknown relation {relation!r}")
    table = defaultdict(set)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip():
                raise ResourceError(f"{path}:{lineno}: expected 'word<TAB>related,...'")
            word = parts[0].strip().lower()
            rel = [r.strip().lower() for r in parts[1].split(",") if r.strip()]
            if not rel:
                raise ResourceError(f"{path}:{lineno}: no related words")
            table[word].update(rel)
    if relation in SYMMETRIC:
        for w, rel in list(table.items()):
            for r in list(rel):
                table[r].add(w)
    return Lexicon(relation, _freeze(table))


def link_taxonomic(hyper: Lexicon, hypo: Lexicon) -> tuple[Lexicon, Lexicon]:
    """Union each lexicon with the inverse of the other."""
    up = defaultdict(set, {k: set(v) for k, v in hyper.entries.items()})
    down = defaultdict(set, {k: set(v) for k, v in hypo.entries.items()})
    for w, rel in hypo.entries.items():
        for r in rel:
            up[r].add(w)
    for w, rel in hyper.entries.items():
        for r in rel:
            down[r].add(w)
    return Lexicon("hypernym", _freeze(up)), Lexicon("hyponym", _freeze(down))


class TaxonomyGraph:
    """Word senses linked by hypernym edges.

    ``path_similarity`` is ``1 / (1 + d)`` with ``d`` the fewest edges
    between any sense of one word and any sense of the other, routed through
    a shared ancestor.
    """

    def __init__(self, senses: Mapping[str, tuple], parents: Mapping[str, tuple]):
        self.senses = {s: tuple(ws) for s, ws in senses.items()}
        self.parents = {s: tuple(ps) for s, ps in parents.items()}
        self.word_senses = defaultdict(list)
        for s, ws in sorted(self.senses.items()):
            for w in ws:
                self.word_senses[w].append(s)
        self.word_senses = dict(self.word_senses)
        self.depth = self._check_and_index()
        self._anc_cache: dict[str, dict] = {}

    def _check_and_index(self) -> dict:
        for s, ps in self.parents.items():
            for p in ps:
                if p not in self.senses:
                    raise ResourceError(f"sense {s!r} has unknown parent {p!r}")
        children = defaultdict(list)
        roots = []
        for s in self.senses:
            if self.parents.get(s):
                for p in self.parents[s]:
                    children[p].append(s)
            else:
                roots.append(s)
        # Min depth by BFS from roots; senses never reached lie on a cycle.
        depth = {r: 0 for r in roots}
        queue = deque(roots)
        while queue:
            s = queue.popleft()
            for c in children[s]:
                if c not in depth:
                    depth[c] = depth[s] + 1
                    queue.append(c)
        missing = set(self.senses) - set(depth)
        if missing:
            raise ResourceError(f"senses not reaching a root (cycle): {sorted(missing)[:5]}")
        # Kahn's algorithm over the full parent relation catches cycles that
        # hang off an otherwise rooted sense.
        indeg = {s: len(self.parents.get(s, ())) for s in self.senses}
        queue = deque(s for s, d in indeg.items() if d == 0)
        seen = 0
        while queue:
            s = queue.popleft()
            seen += 1
            for c in children[s]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if seen != len(self.senses):
            raise ResourceError("taxonomy contains a cycle")
        return depth

    def _ancestors(self, sense: str) -> dict:
        hit = self._anc_cache.get(sense)
        if hit is not None:
            return hit
        dist = {sense: 0}
        queue = deque([sense])
        while queue:
            s = queue.popleft()
            for p in self.parents.get(s, ()):
                if p not in dist:
                    dist[p] = dist[s] + 1
                    queue.append(p)
        self._anc_cache[sense] = dist
        return dist

    def path_similarity(self, w1: str, w2: str) -> float | None:
        s1 = self.word_senses.get(w1.lower())
        s2 = self.word_senses.get(w2.lower())
        if not s1 or not s2:
            return None
        best = None
        for a in s1:
            da = self._ancestors(a)
            for b in s2:
                db = self._ancestors(b)
                if len(db) < len(da):
                    common = (da[k] + d for k, d in db.items() if k in da)
                else:
                    common = (d + db[k] for k, d in da.items() if k in db)
                d = min(common, default=None)
                if d is not None and (best is None or d < best):
                    best = d
        return None if best is None else 1.0 / (1.0 + best)

    @classmethod
    def load(cls, path: str | Path) -> "TaxonomyGraph":
        """``sense_id<TAB>word1,word2,...<TAB>parent_sense_id`` (or ``ROOT``)."""
        senses = defaultdict(list)
        parents = defaultdict(list)
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3 or not parts[0].strip():
                    raise ResourceError(f"{path}:{lineno}: expected 'sense<TAB>words<TAB>parent'")
                sid = parts[0].strip()
                for w in parts[1].split(","):
                    w = w.strip().lower()
                    if w and w not in senses[sid]:
                        senses[sid].append(w)
                parent = parts[2].strip()
                if parent and parent != "ROOT" and parent not in parents[sid]:
                    parents[sid].append(parent)
        return cls(senses, parents)

    @classmethod
    def empty(cls) -> "TaxonomyGraph":
        return cls({}, {})


class ParaphraseTable:
    def __init__(self, entries: Mapping[tuple, float] | None = None):
        self.entries: dict[tuple, float] = {}
        for (a, b), score in (entries or {}).items():
            if not 0.0 <= score <= 1.0:
                raise ResourceError(f"paraphrase score out of [0,1]: {a!r} {b!r} {score}")
            self.entries[self._key(a, b)] = float(score)

    @staticmethod
    def _key(a: str, b: str) -> tuple:
        a, b = a.lower(), b.lower()
        return (a, b) if a <= b else (b, a)

    def score(self, w1: str, w2: str) -> float:
        hit = self.entries.get(self._key(w1, w2))
        if hit is not None:
            return hit
        return 1.0 if w1.lower() == w2.lower() else 0.0

    def __len__(self):
        return len(self.entries)

    @classmethod
    def load(cls, path: str | Path) -> "ParaphraseTable":
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                try:
                    a, b, s = parts
                    score = float(s)
                except ValueError:
                    raise ResourceError(f"{path}:{lineno}: expected 'word1<TAB>word2<TAB>score'") from None
                key = cls._key(a.strip(), b.strip())
                # Duplicate pairs keep the highest score.
                entries[key] = max(score, entries.get(key, score))
        return cls(entries)


class EmbeddingTable:
    def __init__(self, dimension: int, vectors: Mapping[str, np.ndarray] | None = None):
        if dimension < 1:
            raise ResourceError("embedding dimension must be positive")
        self.dimension = dimension
        self.vectors: dict[str, np.ndarray] = {}
        for w, v in (vectors or {}).items():
            v = np.asarray(v, dtype=np.float64)
            if v.shape != (dimension,):
                raise ResourceError(f"vector for {w!r} has shape {v.shape}, expected ({dimension},)")
            # First spelling wins when case-folding collides.
            self.vectors.setdefault(w.lower(), v)

    def embed(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word.lower())

    def __len__(self):
        return len(self.vectors)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            try:
                size, dim = int(header[0]), int(header[1])
            except (IndexError, ValueError):
                raise ResourceError(f"{path}:1: expected 'vocab_size dimension'") from None
            vectors = {}
            for lineno, raw in enumerate(fh, 2):
                parts = raw.rstrip("\n").split(" ")
                if not parts or not parts[0]:
                    continue
                if len(parts) != dim + 1:
                    raise ResourceError(f"{path}:{lineno}: expected word and {dim} values")
                try:
                    vec = np.array([float(x) for x in parts[1:]])
                except ValueError:
                    raise ResourceError(f"{path}:{lineno}: non-numeric vector component") from None
                vectors.setdefault(parts[0], vec)
        if len(vectors) != size:
            log.warning("%s: header says %d words, read %d", path, size, len(vectors))
        return cls(dim, vectors)


@dataclass
class Resources:
    """Everything the feature extractors read. All parts default to empty."""

    norm_map: NormalizationMap = EMPTY_MAP
    synonym: Lexicon = field(default_factory=lambda: Lexicon("synonym"))
    similar_to: Lexicon = field(default_factory=lambda: Lexicon("similar_to"))
    antonym: Lexicon = field(default_factory=lambda: Lexicon("antonym"))
    hypernym: Lexicon = field(default_factory=lambda: Lexicon("hypernym"))
    hyponym: Lexicon = field(default_factory=lambda: Lexicon("hyponym"))
    taxonomy: TaxonomyGraph = field(default_factory=TaxonomyGraph.empty)
    ppdb: ParaphraseTable = field(default_factory=ParaphraseTable)
    embeddings: EmbeddingTable | None = None

    def __post_init__(self):
        self.hypernym, self.hyponym = link_taxonomic(self.hypernym, self.hyponym)

    @classmethod
    def load(cls, *, normalization=None, synonym=None, similar_to=None, antonym=None,
             hypernym=None, hyponym=None, taxonomy=None, ppdb=None, embeddings=None) -> "Resources":
        kw = {}
        if normalization:
            kw["norm_map"] = NormalizationMap.load(normalization)
        for rel, path in (("synonym", synonym), ("similar_to", similar_to), ("antonym", antonym),
                          ("hypernym", hypernym), ("hyponym", hyponym)):
            if path:
                kw[rel] = load_lexicon(path, rel)
        if taxonomy:
            kw["taxonomy"] = TaxonomyGraph.load(taxonomy)
        if ppdb:
            kw["ppdb"] = ParaphraseTable.load(ppdb)
        if embeddings:
            kw["embeddings"] = EmbeddingTable.load(embeddings)
        return cls(**kw)
