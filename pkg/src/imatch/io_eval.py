"""Bracketed chunk lines, the wa alignment format, and token-pair F1 scoring.

A wa entry looks like::

    <sentence id="1" status="">
    // [ Former Nazi death camp guard ] [ Demjanjuk ] [ dead ] [ at 91 ]
    // [ Demjanjuk ] [ dies ] [ at 91 ]
    <source>
    1 Former
    ...
    </source>
    <translation>
    1 Demjanjuk
    ...
    </translation>
    <alignment>
    6 <==> 1 // EQUI // 5 // Demjanjuk <==> Demjanjuk
    1 2 3 4 5 <==> 0 // NOALI // NIL // Former Nazi death camp guard <==> -not aligned-
    </alignment>
    </sentence>

Token indices are 1-based and ``0`` stands for an empty side. The comment
lines are written in bracket notation so chunk boundaries survive a round
trip; when they are plain text, chunks are recovered from the alignment
lines instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .aligncore import ChunkedSentence
from .classify import LabeledPair, UNALIGNED_TYPES
from .textcore import EMPTY_MAP, NormalizationMap

METRIC_TAG = "tokenpair-v1"
NOT_ALIGNED = "-not aligned-"
_SENTENCE_RE = re.compile(r'^<sentence\s+id="([^"]*)"(?:\s+status="([^"]*)")?\s*>$')


class WaFormatError(ValueError):
    pass


def parse_chunks(line: str) -> list[list[str]]:
    """``"[ a b ] [ c ]"`` -> ``[["a", "b"], ["c"]]``; column-numbered errors."""
    chunks: list[list[str]] = []
    current: list[str] | None = None
    open_col = 0
    for m in re.finditer(r"\S+", line):
        unit, col = m.group(), m.start() + 1
        opens = unit.startswith("[")
        closes = unit.endswith("]") and not (unit == "[")
        body = unit[1 if opens else 0: len(unit) - (1 if closes else 0)]
        if opens:
            if current is not None:
                raise WaFormatError(f"column {col}: '[' inside an open chunk (opened at column {open_col})")
            current, open_col = [], col
        if body:
            if current is None:
                raise WaFormatError(f"column {col}: token {body!r} outside brackets")
            current.append(body)
        if closes:
            if current is None:
                raise WaFormatError(f"column {col}: ']' without matching '['")
            if not current:
                raise WaFormatError(f"column {col}: empty chunk")
            chunks.append(current)
            current = None
    if current is not None:
        raise WaFormatError(f"column {open_col}: unclosed '['")
    return chunks


def parse_chunked_sentence(line: str, norm_map: NormalizationMap = EMPTY_MAP) -> ChunkedSentence:
    return ChunkedSentence.from_chunks(parse_chunks(line), norm_map)


def read_chunk_file(path: str | Path, norm_map: NormalizationMap = EMPTY_MAP) -> list[ChunkedSentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                out.append(parse_chunked_sentence(line, norm_map))
            except WaFormatError as exc:
                raise WaFormatError(f"{path}:{lineno}: {exc}") from None
    return out


@dataclass(frozen=True)
class WaEntry:
    id: str
    source: ChunkedSentence
    target: ChunkedSentence
    pairs: tuple[LabeledPair, ...]
    status: str = ""

    def check_totality(self):
        for side, sent, attr in (("source", self.source, "s1"), ("target", self.target, "s2")):
            seen: dict[int, int] = {}
            for p in self.pairs:
                for cid in getattr(p, attr):
                    if not 1 <= cid <= sent.n_chunks:
                        raise WaFormatError(f"sentence {self.id}: {side} chunk {cid} out of range")
                    seen[cid] = seen.get(cid, 0) + 1
            missing = [c for c in range(1, sent.n_chunks + 1) if c not in seen]
            repeated = sorted(c for c, k in seen.items() if k > 1)
            if missing or repeated:
                raise WaFormatError(
                    f"sentence {self.id}: {side} chunks not covered exactly once "
                    f"(missing {missing}, repeated {repeated})")


@dataclass(frozen=True)
class WaDocument:
    entries: tuple[WaEntry, ...]

    def by_id(self) -> dict[str, WaEntry]:
        return {e.id: e for e in self.entries}


def _runs(indices: Sequence[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    for i in sorted(indices):
        if runs and runs[-1][-1] + 1 == i:
            runs[-1].append(i)
        else:
            runs.append([i])
    return runs


def _infer_spans(n_tokens: int, groups: Iterable[Sequence[int]]) -> list[tuple[int, int]]:
    starts = {1}
    for g in groups:
        for run in _runs(g):
            starts.add(run[0])
            starts.add(run[-1] + 1)
    cuts = sorted(s for s in starts if 1 <= s <= n_tokens) + [n_tokens + 1]
    return [(a - 1, b - 1) for a, b in zip(cuts, cuts[1:])]


def _chunks_for(tokens: list[str], comment: str, groups, norm_map) -> ChunkedSentence:
    if not tokens:
        return ChunkedSentence((), ())
    try:
        chunks = parse_chunks(comment)
        if [w for c in chunks for w in c] == tokens:
            return ChunkedSentence.from_chunks(chunks, norm_map)
    except WaFormatError:
        pass
    spans = _infer_spans(len(tokens), groups)
    return ChunkedSentence.from_chunks([tokens[a:b] for a, b in spans], norm_map)


def _token_groups_to_chunks(sent: ChunkedSentence, toks: Sequence[int], where: str) -> tuple[int, ...]:
    if not toks:
        return ()
    owner = sent.chunk_of_token()
    for t in toks:
        if not 1 <= t <= len(owner):
            raise WaFormatError(f"{where}: token index {t} out of range 1..{len(owner)}")
    ids = tuple(sorted({owner[t - 1] for t in toks}))
    if sorted(toks) != sent.token_indices(ids):
        raise WaFormatError(f"{where}: tokens {sorted(toks)} do not form whole chunks")
    return ids


def _parse_alignment_line(line: str, where: str):
    parts = [p.strip() for p in line.split("//")]
    if len(parts) < 3 or "<==>" not in parts[0]:
        raise WaFormatError(f"{where}: expected 'i.. <==> j.. // TYPE // SCORE // text'")
    left, right = parts[0].split("<==>", 1)
    try:
        src = [int(x) for x in left.split() if x != "0"]
        tgt = [int(x) for x in right.split() if x != "0"]
    except ValueError:
        raise WaFormatError(f"{where}: non-integer token index") from None
    label = parts[1]
    raw_score = parts[2]
    if raw_score.upper() == "NIL":
        score = 0
    else:
        try:
            score = int(raw_score)
        except ValueError:
            raise WaFormatError(f"{where}: bad score {raw_score!r}") from None
    return src, tgt, label, score


def _expect(lines, i, text, sid, path):
    if i >= len(lines) or lines[i][1].strip() != text:
        got = lines[i][1].strip() if i < len(lines) else "end of file"
        lineno = lines[i][0] if i < len(lines) else "EOF"
        raise WaFormatError(f"{path}:{lineno}: sentence {sid}: expected {text!r}, got {got!r}")
    return i + 1


def _token_block(lines, i, close, sid, path) -> tuple[list[str], int]:
    toks = []
    while i < len(lines) and lines[i][1].strip() != close:
        lineno, raw = lines[i]
        parts = raw.split()
        try:
            idx = int(parts[0])
            term = parts[1]
        except (IndexError, ValueError):
            raise WaFormatError(f"{path}:{lineno}: sentence {sid}: expected 'index term'") from None
        if idx != len(toks) + 1:
            raise WaFormatError(f"{path}:{lineno}: sentence {sid}: token index {idx}, expected {len(toks) + 1}")
        toks.append(term)
        i += 1
    return toks, _expect(lines, i, close, sid, path)


def parse_wa_text(text: str, norm_map: NormalizationMap = EMPTY_MAP, path: str = "<wa>") -> WaDocument:
    lines = [(n, l.rstrip("\n")) for n, l in enumerate(text.splitlines(), 1) if l.strip()]
    entries = []
    i = 0
    while i < len(lines):
        lineno, head = lines[i]
        m = _SENTENCE_RE.match(head.strip())
        if not m:
            raise WaFormatError(f"{path}:{lineno}: expected '<sentence id=...>'")
        sid, status = m.group(1), m.group(2) or ""
        i += 1
        comments = []
        while i < len(lines) and lines[i][1].lstrip().startswith("//"):
            comments.append(lines[i][1].lstrip()[2:].strip())
            i += 1
        comments += [""] * (2 - len(comments))
        i = _expect(lines, i, "<source>", sid, path)
        src_toks, i = _token_block(lines, i, "</source>", sid, path)
        i = _expect(lines, i, "<translation>", sid, path)
        tgt_toks, i = _token_block(lines, i, "</translation>", sid, path)
        i = _expect(lines, i, "<alignment>", sid, path)
        raw_pairs = []
        while i < len(lines) and lines[i][1].strip() != "</alignment>":
            lineno, raw = lines[i]
            raw_pairs.append((lineno, *_parse_alignment_line(raw, f"{path}:{lineno}: sentence {sid}")))
            i += 1
        i = _expect(lines, i, "</alignment>", sid, path)
        i = _expect(lines, i, "</sentence>", sid, path)

        source = _chunks_for(src_toks, comments[0], [p[1] for p in raw_pairs], norm_map)
        target = _chunks_for(tgt_toks, comments[1], [p[2] for p in raw_pairs], norm_map)
        pairs = []
        for lineno, s, t, label, score in raw_pairs:
            where = f"{path}:{lineno}: sentence {sid}"
            try:
                pairs.append(LabeledPair(_token_groups_to_chunks(source, s, where),
                                         _token_groups_to_chunks(target, t, where), label, score))
            except WaFormatError:
                raise
            except ValueError as exc:
                raise WaFormatError(f"{where}: {exc}") from None
        entry = WaEntry(sid, source, target, tuple(pairs), status)
        try:
            entry.check_totality()
        except WaFormatError as exc:
            raise WaFormatError(f"{path}: {exc}") from None
        entries.append(entry)
    return WaDocument(tuple(entries))


def parse_wa(path: str | Path, norm_map: NormalizationMap = EMPTY_MAP) -> WaDocument:
    return parse_wa_text(Path(path).read_text(encoding="utf-8"), norm_map, str(path))


def _side_text(sent: ChunkedSentence, ids) -> tuple[str, str]:
    toks = sent.token_indices(ids)
    if not toks:
        return "0", NOT_ALIGNED
    return " ".join(map(str, toks)), " ".join(sent.tokens[t - 1].surface for t in toks)


def format_entry(e: WaEntry) -> str:
    out = [f'<sentence id="{e.id}" status="{e.status}">',
           "// " + e.source.bracketed(),
           "// " + e.target.bracketed(),
           "<source>"]
    out += [f"{k} {t.surface}" for k, t in enumerate(e.source.tokens, 1)]
    out += ["</source>", "<translation>"]
    out += [f"{k} {t.surface}" for k, t in enumerate(e.target.tokens, 1)]
    out += ["</translation>", "<alignment>"]
    for p in e.pairs:
        si, st = _side_text(e.source, p.s1)
        ti, tt = _side_text(e.target, p.s2)
        score = "NIL" if p.type in UNALIGNED_TYPES else str(p.score)
        out.append(f"{si} <==> {ti} // {p.type} // {score} // {st} <==> {tt}")
    out += ["</alignment>", "</sentence>", ""]
    return "\n".join(out)


def format_wa(doc: WaDocument) -> str:
    return "\n".join(format_entry(e) for e in doc.entries)


def write_wa(doc: WaDocument, path: str | Path):
    Path(path).write_text(format_wa(doc), encoding="utf-8")


@dataclass(frozen=True)
class EvalReport:
    align_f1: float
    type_f1: float
    score_f1: float
    type_score_f1: float
    metric: str = METRIC_TAG

    def line(self) -> str:
        return (f"{self.align_f1:.4f} {self.type_f1:.4f} "
                f"{self.score_f1:.4f} {self.type_score_f1:.4f}")


def _token_pairs(e: WaEntry, exclude_punct: bool) -> dict:
    out = {}
    for p in e.pairs:
        if not p.aligned:
            continue
        for i in e.source.token_indices(p.s1):
            if exclude_punct and e.source.tokens[i - 1].is_punct:
                continue
            for j in e.target.token_indices(p.s2):
                if exclude_punct and e.target.tokens[j - 1].is_punct:
                    continue
                out[(i, j)] = (p.type, p.score)
    return out


def _f1(hit: int, n_sys: int, n_gold: int, unit: int = 1) -> float:
    # 2PR/(P+R) with P = hit/n_sys, R = hit/n_gold; credits are integer
    # multiples of 1/unit, so this is one correctly rounded division.
    if not n_sys or not n_gold:
        return 0.0
    return 2 * hit / (unit * (n_sys + n_gold))


def evaluate(gold: WaDocument, system: WaDocument, exclude_punct: bool = False) -> EvalReport:
    """Micro-averaged token-pair F1 with type, score and type+score credit.

    Each aligned record contributes the cross product of its source and
    target token positions. A pair found by both sides earns 1 for
    alignment, 1 if the relation types agree, and
    ``max(0, 1 - |score_gold - score_sys| / 5)`` for score.
    """
    g_ids, s_ids = gold.by_id(), system.by_id()
    if g_ids.keys() != s_ids.keys():
        missing = sorted(g_ids.keys() - s_ids.keys())
        extra = sorted(s_ids.keys() - g_ids.keys())
        raise ValueError(f"sentence ids differ: missing from system {missing}, not in gold {extra}")
    n_gold = n_sys = 0
    # score credit max(0, 1 - |d|/5) is kept in integer fifths
    hit_a = hit_t = hit_s = hit_ts = 0
    for sid, g in g_ids.items():
        gp = _token_pairs(g, exclude_punct)
        sp = _token_pairs(s_ids[sid], exclude_punct)
        n_gold += len(gp)
        n_sys += len(sp)
        for key in sorted(gp.keys() & sp.keys()):
            (gt, gs), (st, ss) = gp[key], sp[key]
            t = 1 if gt == st else 0
            s = max(0, 5 - abs(gs - ss))
            hit_a += 1
            hit_t += t
            hit_s += s
            hit_ts += t * s
    return EvalReport(_f1(hit_a, n_sys, n_gold), _f1(hit_t, n_sys, n_gold),
                      _f1(hit_s, n_sys, n_gold, 5), _f1(hit_ts, n_sys, n_gold, 5))
