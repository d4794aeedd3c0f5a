"""Deterministic one-vs-rest random forest with z-score feature normalization.

Trees are CART with Gini splits on bootstrap samples. The bootstrap and
the per-split feature draws come from a generator seeded with
``(seed, class_index, tree_index)``, and rows are put in a canonical order
before sampling, so a model depends only on the multiset of training rows,
the hyperparameters and the seed, not on row order or on how many worker
processes trained it.
"""

from __future__ import annotations

import io
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"IMFOREST"
FORMAT_VERSION = 1
NODE_DTYPE = np.dtype([
    ("feature", "<i4"),     # -1 marks a leaf
    ("threshold", "<f8"),   # go left when x[feature] <= threshold
    ("left", "<i4"),
    ("right", "<i4"),
    ("value", "<f8"),       # leaf vote: positive-class fraction
    ("count", "<u4"),       # bootstrap rows reaching the node
])


class ForestError(ValueError):
    pass


@dataclass
class ForestParams:
    num_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    feature_fraction: float | None = None  # None -> sqrt(d) / d
    seed: int = 42

    def n_split_features(self, d: int) -> int:
        frac = self.feature_fraction if self.feature_fraction is not None else math.sqrt(d) / d
        return max(1, min(d, int(round(frac * d))))


@dataclass
class TrainingSet:
    X: np.ndarray
    labels: list[str]
    classes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ForestError("feature matrix must be 2-D")
        self.labels = [str(l) for l in self.labels]
        if len(self.labels) != len(self.X):
            raise ForestError(f"{len(self.X)} rows but {len(self.labels)} labels")
        if not self.classes:
            self.classes = sorted(set(self.labels))
        self.classes = [str(c) for c in self.classes]
        unknown = set(self.labels) - set(self.classes)
        if unknown:
            raise ForestError(f"labels not in class list: {sorted(unknown)}")


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std


def fit_norm(X: np.ndarray) -> NormStats:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ForestError("cannot fit normalization on an empty set")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return NormStats(mean, std)


@dataclass
class Tree:
    nodes: np.ndarray  # structured array of NODE_DTYPE

    def apply(self, X: np.ndarray) -> np.ndarray:
        nodes = self.nodes
        idx = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            feat = nodes["feature"][idx]
            inner = feat >= 0
            if not inner.any():
                return idx
            r = rows[inner]
            f = feat[inner]
            go_left = X[r, f] <= nodes["threshold"][idx[inner]]
            idx[inner] = np.where(go_left, nodes["left"][idx[inner]], nodes["right"][idx[inner]])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.nodes["value"][self.apply(X)]

    def depth(self) -> int:
        depth = {0: 0}
        for i, node in enumerate(self.nodes):
            if node["feature"] >= 0:
                depth[int(node["left"])] = depth[i] + 1
                depth[int(node["right"])] = depth[i] + 1
        return max(depth.values())

    def leaf_counts(self) -> np.ndarray:
        leaves = self.nodes["feature"] < 0
        return self.nodes["count"][leaves]


def _best_split(X: np.ndarray, y: np.ndarray, feats: np.ndarray, min_leaf: int):
    n = len(y)
    sub = X[:, feats]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = y[order]
    left_pos = np.cumsum(ys, axis=0)[:-1]            # split after row i -> left has i+1 rows
    left_n = np.arange(1, n)[:, None].astype(np.float64)
    right_n = n - left_n
    right_pos = ys.sum(axis=0)[None, :] - left_pos
    pl = left_pos / left_n
    pr = right_pos / right_n
    gini = left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)
    valid = (xs[:-1] < xs[1:]) & (left_n >= min_leaf) & (right_n >= min_leaf)
    if not valid.any():
        return None
    gini = np.where(valid, gini, np.inf)
    flat = int(np.argmin(gini.T))   # first sampled feature, then earliest cut
    fi, i = divmod(flat, n - 1)
    lo, hi = xs[i, fi], xs[i + 1, fi]
    thr = lo + (hi - lo) / 2
    if not lo <= thr < hi:
        thr = lo
    return float(gini[i, fi]), int(feats[fi]), float(thr)


def grow_tree(X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator) -> Tree:
    n, d = X.shape
    k = params.n_split_features(d)
    boot = rng.integers(0, n, size=n)
    records = []
    stack = [(0, boot, 0)]
    records.append(None)
    while stack:
        slot, idx, depth = stack.pop()
        yi = y[idx]
        cnt = len(idx)
        pos = float(yi.sum())
        value = pos / cnt if cnt else 0.0
        leaf = (-1, 0.0, -1, -1, value, cnt)
        if depth >= params.max_depth or pos == 0 or pos == cnt or cnt < 2 * params.min_leaf:
            records[slot] = leaf
            continue
        feats = rng.choice(d, size=k, replace=False)
        found = _best_split(X[idx], yi, feats, params.min_leaf)
        parent_gini = cnt * 2 * (pos / cnt) * (1 - pos / cnt)
        if found is None or found[0] >= parent_gini - 1e-12:
            records[slot] = leaf
            continue
        _, f, thr = found
        go_left = X[idx, f] <= thr
        left_slot, right_slot = len(records), len(records) + 1
        records.extend([None, None])
        records[slot] = (f, thr, left_slot, right_slot, value, cnt)
        stack.append((right_slot, idx[~go_left], depth + 1))
        stack.append((left_slot, idx[go_left], depth + 1))
    return Tree(np.array(records, dtype=NODE_DTYPE))


def _tree_rng(seed: int, class_index: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, class_index, tree_index]))


def _grow_batch(X, y, params, class_index, tree_indices) -> list[Tree]:
    return [grow_tree(X, y, params, _tree_rng(params.seed, class_index, t)) for t in tree_indices]


@dataclass
class ForestModel:
    classes: list[str]
    ensembles: list[list[Tree]]
    norm: NormStats
    params: ForestParams

    @property
    def n_features(self) -> int:
        return len(self.norm.mean)

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ForestError(f"expected {self.n_features} features, got {X.shape[1]}")
        Z = self.norm.transform(X)
        out = np.zeros((len(Z), len(self.classes)))
        for c, trees in enumerate(self.ensembles):
            if trees:
                out[:, c] = np.mean([t.predict(Z) for t in trees], axis=0)
        return out

    def predict(self, x) -> tuple[str, np.ndarray]:
        scores = self.class_scores(np.asarray(x, dtype=np.float64)[None, :])[0]
        return self.classes[int(np.argmax(scores))], scores

    def predict_many(self, X) -> list[str]:
        scores = self.class_scores(X)
        return [self.classes[i] for i in np.argmax(scores, axis=1)]

    # -- serialization --------------------------------------------------

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        p = self.params
        buf.write(MAGIC)
        buf.write(struct.pack("<HII", FORMAT_VERSION, self.n_features, len(self.classes)))
        for c in self.classes:
            raw = c.encode("utf-8")
            buf.write(struct.pack("<H", len(raw)))
            buf.write(raw)
        frac = math.nan if p.feature_fraction is None else p.feature_fraction
        buf.write(struct.pack("<IIIdQ", p.num_trees, p.max_depth, p.min_leaf, frac, p.seed))
        buf.write(self.norm.mean.astype("<f8").tobytes())
        buf.write(self.norm.std.astype("<f8").tobytes())
        for trees in self.ensembles:
            buf.write(struct.pack("<I", len(trees)))
            for t in trees:
                buf.write(struct.pack("<I", len(t.nodes)))
                buf.write(t.nodes.astype(NODE_DTYPE).tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ForestModel":
        view = memoryview(data)
        pos = 0

        def take(fmt):
            nonlocal pos
            vals = struct.unpack_from(fmt, view, pos)
            pos += struct.calcsize(fmt)
            return vals

        if bytes(view[:len(MAGIC)]) != MAGIC:
            raise ForestError("not a forest model file")
        pos = len(MAGIC)
        version, d, n_classes = take("<HII")
        if version != FORMAT_VERSION:
            raise ForestError(f"unsupported model version {version}")
        classes = []
        for _ in range(n_classes):
            (ln,) = take("<H")
            classes.append(bytes(view[pos:pos + ln]).decode("utf-8"))
            pos += ln
        num_trees, max_depth, min_leaf, frac, seed = take("<IIIdQ")
        params = ForestParams(num_trees, max_depth, min_leaf, None if math.isnan(frac) else frac, seed)
        mean = np.frombuffer(view, "<f8", d, pos).copy()
        pos += 8 * d
        std = np.frombuffer(view, "<f8", d, pos).copy()
        pos += 8 * d
        ensembles = []
        for _ in range(n_classes):
            (nt,) = take("<I")
            trees = []
            for _ in range(nt):
                (nn,) = take("<I")
                nodes = np.frombuffer(view, NODE_DTYPE, nn, pos).copy()
                pos += nn * NODE_DTYPE.itemsize
                trees.append(Tree(nodes))
            ensembles.append(trees)
        if pos != len(data):
            raise ForestError("trailing bytes in model file")
        return cls(classes, ensembles, NormStats(mean, std), params)

    def save(self, path: str | Path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "ForestModel":
        return cls.from_bytes(Path(path).read_bytes())


def canonical_order(X: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    """Row order sorted by (features..., label)."""
    _, label_codes = np.unique(np.asarray(labels, dtype=object).astype(str), return_inverse=True)
    keys = [label_codes] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def train_forest(data: TrainingSet, params: ForestParams | None = None, jobs: int = 1) -> ForestModel:
    params = params or ForestParams()
    if len(data.X) < 2:
        raise ForestError("need at least 2 training rows")
    present = [c for c in data.classes if c in set(data.labels)]
    if len(present) < 2:
        raise ForestError("training data has a single class; use a constant predictor instead")
    order = canonical_order(data.X, data.labels)
    ordered = data.X[order]
    norm = fit_norm(ordered)
    X = norm.transform(ordered)
    labels = np.asarray(data.labels, dtype=object)[order]

    tasks = []
    for ci, c in enumerate(data.classes):
        y = (labels == c).astype(np.float64)
        tasks.append((ci, y))
    ensembles: list[list[Tree]] = [[] for _ in data.classes]
    if jobs <= 1:
        for ci, y in tasks:
            ensembles[ci] = _grow_batch(X, y, params, ci, range(params.num_trees))
    else:
        per = max(1, math.ceil(params.num_trees / jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = []
            for ci, y in tasks:
                for start in range(0, params.num_trees, per):
                    rng_ = range(start, min(params.num_trees, start + per))
                    futures.append((ci, pool.submit(_grow_batch, X, y, params, ci, rng_)))
            for ci, fut in futures:
                ensembles[ci].extend(fut.result())
    return ForestModel(list(data.classes), ensembles, norm, params)
