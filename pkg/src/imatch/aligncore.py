"""Many-to-many chunk alignment as a weighted packing ILP, solved exactly.

Decision variables are (source group, target group) candidates. A source
or target chunk may appear in at most one chosen candidate; the objective
is the sum of ``alpha * sim`` over chosen candidates.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .features import Phrase, sim_matrix
from .lexres import Resources
from .textcore import NormalizationMap, EMPTY_MAP, Token

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChunkedSentence:
    """Tokens plus half-open chunk spans; chunk ``k`` (1-based) is ``spans[k-1]``."""

    tokens: tuple[Token, ...]
    spans: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "spans", tuple((int(a), int(b)) for a, b in self.spans))
        pos = 0
        for a, b in self.spans:
            if a != pos or b <= a:
                raise ValueError(f"chunk spans must be contiguous, non-empty and sorted: {self.spans}")
            pos = b
        if pos != len(self.tokens):
            raise ValueError(f"chunk spans cover {pos} of {len(self.tokens)} tokens")

    @classmethod
    def from_chunks(cls, chunks: Iterable[Sequence[str]],
                    norm_map: NormalizationMap = EMPTY_MAP) -> "ChunkedSentence":
        tokens, spans = [], []
        for chunk in chunks:
            start = len(tokens)
            tokens.extend(Token.make(w, norm_map) for w in chunk)
            spans.append((start, len(tokens)))
        return cls(tuple(tokens), tuple(spans))

    @property
    def n_chunks(self) -> int:
        return len(self.spans)

    def chunk_words(self, cid: int) -> list[str]:
        a, b = self.spans[cid - 1]
        return [t.surface for t in self.tokens[a:b]]

    def token_indices(self, ids: Iterable[int]) -> list[int]:
        """1-based token positions covered by the given chunk ids."""
        out = []
        for cid in sorted(ids):
            a, b = self.spans[cid - 1]
            out.extend(range(a + 1, b + 1))
        return out

    def phrase(self, ids: Iterable[int]) -> Phrase:
        toks = []
        for cid in sorted(ids):
            a, b = self.spans[cid - 1]
            toks.extend(self.tokens[a:b])
        return Phrase(tuple(toks))

    def chunk_of_token(self) -> list[int]:
        """chunk id for each 0-based token position."""
        out = []
        for cid, (a, b) in enumerate(self.spans, 1):
            out.extend([cid] * (b - a))
        return out

    def bracketed(self) -> str:
        return " ".join("[ " + " ".join(self.chunk_words(c)) + " ]" for c in range(1, self.n_chunks + 1))


@dataclass(frozen=True)
class CandidatePair:
    s1: tuple[int, ...]
    s2: tuple[int, ...]
    sim: float
    alpha: float
    weight: float

    @property
    def key(self) -> tuple:
        return (self.s1, self.s2)

    @property
    def merged(self) -> int:
        return len(self.s1) + len(self.s2) - 2


@dataclass(frozen=True)
class AlignmentSolution:
    chosen: tuple[CandidatePair, ...]
    objective: float
    unaligned_source: tuple[int, ...]
    unaligned_target: tuple[int, ...]

    @classmethod
    def from_chosen(cls, chosen: Iterable[CandidatePair], m: int, n: int) -> "AlignmentSolution":
        chosen = tuple(sorted(chosen, key=lambda c: c.key))
        used_s = {i for c in chosen for i in c.s1}
        used_t = {j for c in chosen for j in c.s2}
        return cls(chosen, math.fsum(c.weight for c in chosen),
                   tuple(i for i in range(1, m + 1) if i not in used_s),
                   tuple(j for j in range(1, n + 1) if j not in used_t))

    @property
    def merged(self) -> int:
        return sum(c.merged for c in self.chosen)


@dataclass
class AlignConfig:
    gamma: float = 1.1
    prune_threshold: float | None = 0.0
    max_group_size: int = 2

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.max_group_size not in (1, 2, 3):
            raise ValueError("max_group_size must be 1, 2 or 3")


def alpha_weight(s1_size: int, s2_size: int, gamma: float) -> float:
    """gamma ** (|S1| + |S2| - 2): 1 for one-to-one, growing with merges if gamma > 1."""
    if s1_size < 1 or s2_size < 1:
        raise ValueError("group sizes must be >= 1")
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    return gamma ** (s1_size + s2_size - 2)


def chunk_groups(n: int, max_size: int) -> list[tuple[int, ...]]:
    out = []
    for k in range(1, min(max_size, n) + 1):
        out.extend(itertools.combinations(range(1, n + 1), k))
    return out


@dataclass(frozen=True)
class GroupSims:
    """Similarity of every (source group, target group); independent of gamma."""

    src_groups: list[tuple[int, ...]]
    tgt_groups: list[tuple[int, ...]]
    sims: np.ndarray


def group_sims(src: ChunkedSentence, tgt: ChunkedSentence, res: Resources,
               max_group_size: int = 2) -> GroupSims:
    g1 = chunk_groups(src.n_chunks, max_group_size)
    g2 = chunk_groups(tgt.n_chunks, max_group_size)
    if not g1 or not g2:
        return GroupSims(g1, g2, np.zeros((len(g1), len(g2))))
    sims = sim_matrix([src.phrase(g) for g in g1], [tgt.phrase(g) for g in g2], res)
    return GroupSims(g1, g2, sims)


def candidates_from_sims(gs: GroupSims, config: AlignConfig) -> list[CandidatePair]:
    out = []
    for i, a in enumerate(gs.src_groups):
        for j, b in enumerate(gs.tgt_groups):
            sim = float(gs.sims[i, j])
            alpha = alpha_weight(len(a), len(b), config.gamma)
            weight = alpha * sim
            if config.prune_threshold is not None and weight <= config.prune_threshold:
                continue
            out.append(CandidatePair(a, b, sim, alpha, weight))
    return out


def build_candidates(src: ChunkedSentence, tgt: ChunkedSentence, res: Resources,
                     config: AlignConfig | None = None) -> list[CandidatePair]:
    """All (S1, S2) pairs over groups of up to ``max_group_size`` chunks.

    With the default size 2 there are ``(M + C(M,2)) * (N + C(N,2))`` pairs
    before pruning; pairs whose weight is at or below ``prune_threshold``
    are dropped (set it to None to keep everything).
    """
    config = config or AlignConfig()
    return candidates_from_sims(group_sims(src, tgt, res, config.max_group_size), config)


def max_weight_matching(weights) -> tuple[float, list[tuple[int, int]]]:
    """Maximum-weight bipartite matching; negative weights count as 0 (leave unmatched).

    Shortest-augmenting-path Hungarian method with row/column potentials on
    the square zero-padded cost ``-w``. Zero-weight pairs are dropped from
    the returned matching (they are equivalent to leaving both unmatched).
    """
    w = [[max(0.0, float(x)) for x in row] for row in weights]
    rows = len(w)
    cols = len(w[0]) if rows else 0
    n = max(rows, cols)
    if n == 0:
        return 0.0, []
    cost = [[-(w[i][j]) if i < rows and j < cols else 0.0 for j in range(n)] for i in range(n)]
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[j] = row (1-based) assigned to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            row = cost[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    pairs = []
    for j in range(1, n + 1):
        i = match[j] - 1
        if i < rows and j - 1 < cols and w[i][j - 1] > 0:
            pairs.append((i, j - 1))
    pairs.sort()
    return math.fsum(w[i][j] for i, j in pairs), pairs


class _Search:
    """Depth-first branch and bound over source chunks in id order.

    At each node the lowest undecided source chunk is either covered by a
    compatible candidate whose smallest source id it is, or declared
    unaligned; every feasible packing is reached exactly once. The bound is
    the minimum of a matching relaxation and per-chunk weight splits.
    """

    def __init__(self, cands: list[CandidatePair], m: int, n: int):
        self.m, self.n = m, n
        self.cands = cands
        self.smask = [sum(1 << (i - 1) for i in c.s1) for c in cands]
        self.tmask = [sum(1 << (j - 1) for j in c.s2) for c in cands]
        self.by_min: list[list[int]] = [[] for _ in range(m + 2)]
        for k in sorted(range(len(cands)), key=lambda k: (-cands[k].weight, cands[k].key)):
            self.by_min[cands[k].s1[0]].append(k)

        C = len(cands)
        self.w = np.array([c.weight for c in cands])
        self.np_smask = np.array(self.smask, dtype=np.int64)
        self.np_tmask = np.array(self.tmask, dtype=np.int64)
        s_in = np.zeros((C, m), dtype=bool)
        t_in = np.zeros((C, n), dtype=bool)
        es, et, ec, ev = [], [], [], []
        for k, c in enumerate(cands):
            s_in[k, [i - 1 for i in c.s1]] = True
            t_in[k, [j - 1 for j in c.s2]] = True
            share = c.weight / min(len(c.s1), len(c.s2))
            for i in c.s1:
                for j in c.s2:
                    es.append(i - 1)
                    et.append(j - 1)
                    ec.append(k)
                    ev.append(share)
        self.s_in, self.t_in = s_in, t_in
        self.s_share = self.w / s_in.sum(axis=1).clip(min=1)
        self.t_share = self.w / t_in.sum(axis=1).clip(min=1)
        self.edge_flat = np.array(es, dtype=np.int64) * n + np.array(et, dtype=np.int64)
        self.edge_cand = np.array(ec, dtype=np.int64)
        self.edge_val = np.array(ev)
        self.memo: dict[tuple[int, int], float] = {}
        self.best: AlignmentSolution | None = None
        self.nodes = 0

    def bound(self, used_s: int, used_t: int) -> float:
        key = (used_s, used_t)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        ok = ((self.np_smask & used_s) == 0) & ((self.np_tmask & used_t) == 0)
        if not ok.any():
            self.memo[key] = 0.0
            return 0.0
        src_split = np.where(self.s_in[ok], self.s_share[ok][:, None], 0.0).max(axis=0).sum()
        tgt_split = np.where(self.t_in[ok], self.t_share[ok][:, None], 0.0).max(axis=0).sum()
        best = min(src_split, tgt_split)
        e_ok = ok[self.edge_cand]
        e = np.zeros(self.m * self.n)
        np.maximum.at(e, self.edge_flat[e_ok], self.edge_val[e_ok])
        e = e.reshape(self.m, self.n)
        rows = [i for i in range(self.m) if not used_s >> i & 1]
        cols = [j for j in range(self.n) if not used_t >> j & 1]
        sub = e[np.ix_(rows, cols)]
        if sub.size:
            best = min(best, max_weight_matching(sub)[0])
        self.memo[key] = float(best)
        return float(best)

    def better(self, cand: AlignmentSolution) -> bool:
        b = self.best
        if b is None or cand.objective > b.objective:
            return True
        if cand.objective < b.objective:
            return False
        if cand.merged != b.merged:
            return cand.merged < b.merged
        return [c.key for c in cand.chosen] < [c.key for c in b.chosen]

    def offer(self, chosen: list[int]):
        sol = AlignmentSolution.from_chosen((self.cands[k] for k in chosen), self.m, self.n)
        if self.better(sol):
            self.best = sol

    def run(self) -> AlignmentSolution:
        self._greedy()
        self._dfs(1, 0, 0, [], 0.0)
        return self.best

    def _greedy(self):
        used_s = used_t = 0
        chosen = []
        for k in sorted(range(len(self.cands)), key=lambda k: (-self.cands[k].weight, self.cands[k].key)):
            if not (self.smask[k] & used_s or self.tmask[k] & used_t):
                chosen.append(k)
                used_s |= self.smask[k]
                used_t |= self.tmask[k]
        self.offer(chosen)

    def _prunable(self, upper: float) -> bool:
        best = self.best.objective
        # Keep exact ties alive for the tie-break; slack covers rounding in the bound.
        return upper + 1e-9 * (1.0 + abs(best)) < best

    def _dfs(self, s: int, used_s: int, used_t: int, chosen: list[int], value: float):
        self.nodes += 1
        while s <= self.m and used_s >> (s - 1) & 1:
            s += 1
        if s > self.m:
            self.offer(chosen)
            return
        if self._prunable(value + self.bound(used_s, used_t)):
            return
        for k in self.by_min[s]:
            sm, tm = self.smask[k], self.tmask[k]
            if sm & used_s or tm & used_t:
                continue
            nv = value + self.cands[k].weight
            ns, nt = used_s | sm, used_t | tm
            if self._prunable(nv + self.bound(ns, nt)):
                continue
            chosen.append(k)
            self._dfs(s + 1, ns, nt, chosen, nv)
            chosen.pop()
        self._dfs(s + 1, used_s | (1 << (s - 1)), used_t, chosen, value)


def _incidence(cands: Sequence[CandidatePair], m: int, n: int) -> csr_matrix:
    rows, cols = [], []
    for k, c in enumerate(cands):
        for i in c.s1:
            rows.append(i - 1)
            cols.append(k)
        for j in c.s2:
            rows.append(m + j - 1)
            cols.append(k)
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m + n, len(cands)))


def _reduced_cost_filter(cands: list[CandidatePair], m: int, n: int) -> tuple[list[CandidatePair], list[CandidatePair]]:
    """Drop candidates that provably cannot appear in any optimal packing.

    Solves the dual of the LP relaxation, ``min sum(y)`` subject to
    ``y(chunks of c) >= w_c`` and ``y >= 0``. Any packing containing ``c``
    is worth at most ``sum(y) + rc_c`` where ``rc_c = w_c - y(chunks of c)``,
    so candidates with ``rc_c`` below ``-(sum(y) - incumbent)`` are
    dominated by the incumbent and can be removed. The dual solution is
    repaired to exact feasibility first so the test does not depend on
    solver tolerances. Returns ``(kept, incumbent)``.
    """
    A = _incidence(cands, m, n)
    w = np.array([c.weight for c in cands])
    lp = linprog(np.ones(m + n), A_ub=-A.T, b_ub=-w, bounds=(0, None), method="highs")
    if lp.status != 0:
        log.warning("LP relaxation failed (%s); searching all candidates", lp.message)
        return cands, []
    y = np.maximum(lp.x, 0.0)
    AT = A.T.tocsr()
    viol = w - AT @ y
    for k in np.flatnonzero(viol > 0):
        # Raising y only adds slack elsewhere, so one pass restores feasibility.
        short = w[k] - float((AT[k] @ y)[0])
        if short > 0:
            y[cands[k].s1[0] - 1] += short
    upper = math.fsum(y)
    rc = w - AT @ y

    # Primal LP values come back as the dual's constraint marginals. Round
    # them greedily (largest first, then by weight), checking conflicts
    # explicitly: degenerate LPs can report overlapping values above 1/2.
    x = -np.asarray(lp.ineqlin.marginals)
    incumbent: list[CandidatePair] = []
    used_s, used_t = set(), set()
    for k in np.lexsort((-w, -np.where(x > 0.5, x, 0.0))):
        c = cands[k]
        if used_s.isdisjoint(c.s1) and used_t.isdisjoint(c.s2):
            incumbent.append(c)
            used_s.update(c.s1)
            used_t.update(c.s2)
    lower = math.fsum(c.weight for c in incumbent)
    slack = (upper - lower) + 1e-9 * (1.0 + abs(upper))
    kept = [c for c, r in zip(cands, rc) if r >= -slack]
    return kept, incumbent


def solve_ilp(candidates: Sequence[CandidatePair], m: int, n: int,
              reduce: bool = True) -> AlignmentSolution:
    """Exact optimum of the packing ILP over ``candidates``.

    Ties on the objective go to the fewest merged chunks, then to the
    lexicographically smallest sorted list of ``(s1, s2)`` id tuples.
    Non-positive candidates never improve the objective and are skipped.
    With ``reduce`` the LP relaxation first discards candidates that cannot
    be part of an optimum; the branch and bound then runs on the rest.
    """
    for c in candidates:
        if not c.s1 or not c.s2:
            raise ValueError(f"candidate with empty group: {c}")
        if min(c.s1) < 1 or max(c.s1) > m or min(c.s2) < 1 or max(c.s2) > n:
            raise ValueError(f"candidate {c.key} outside 1..{m} x 1..{n}")
    useful = [c for c in candidates if c.weight > 0]
    if not useful:
        return AlignmentSolution.from_chosen((), m, n)
    incumbent: list[CandidatePair] = []
    if reduce and len(useful) > 1:
        useful, incumbent = _reduced_cost_filter(useful, m, n)
    search = _Search(useful, m, n)
    if incumbent:
        search.best = AlignmentSolution.from_chosen(incumbent, m, n)
    sol = search.run()
    log.debug("solve_ilp: %d candidates kept, %d nodes, objective %.6f",
              len(useful), search.nodes, sol.objective)
    return sol


def align(src: ChunkedSentence, tgt: ChunkedSentence, res: Resources,
          config: AlignConfig | None = None, sims: GroupSims | None = None) -> AlignmentSolution:
    """Best alignment of two chunked sentences; unaligned chunks are reported."""
    config = config or AlignConfig()
    if src.n_chunks == 0 or tgt.n_chunks == 0:
        return AlignmentSolution.from_chosen((), src.n_chunks, tgt.n_chunks)
    if sims is None:
        sims = group_sims(src, tgt, res, config.max_group_size)
    return solve_ilp(candidates_from_sims(sims, config), src.n_chunks, tgt.n_chunks)
