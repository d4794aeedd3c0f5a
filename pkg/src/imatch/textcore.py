"""Tokens, word-form canonicalization, n-grams and edit distance."""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

_NUMBER_RE = re.compile(r"^[+-]?(?:(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|\.\d+)$")


def _is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def is_number(text: str) -> bool:
    return bool(_NUMBER_RE.match(text))


def is_punct(text: str) -> bool:
    return bool(text) and all(_is_punct_char(ch) for ch in text)


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class NormalizationMap:
    """Case-insensitive variant -> canonical lookup, stored lowercase.

    Canonical forms must be fixed points (map to themselves or be absent),
    which makes :func:`canonicalize` idempotent.
    """

    entries: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        lowered = {k.lower(): v.lower() for k, v in self.entries.items()}
        for variant, canon in lowered.items():
            if not variant or not canon:
                raise NormalizationError(f"empty entry {variant!r} -> {canon!r}")
            target = lowered.get(canon, canon)
            if target != canon:
                raise NormalizationError(
                    f"canonical form {canon!r} (for {variant!r}) maps onward to {target!r}")
        object.__setattr__(self, "entries", lowered)

    def get(self, key: str, default: str) -> str:
        return self.entries.get(key, default)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def load(cls, path: str | Path) -> "NormalizationMap":
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise NormalizationError(f"{path}:{lineno}: expected 'variant<TAB>canonical'")
                entries[parts[0].strip()] = parts[1].strip()
        return cls(entries)


EMPTY_MAP = NormalizationMap()


def canonicalize(token: str, norm_map: NormalizationMap = EMPTY_MAP) -> str:
    low = token.lower()
    return norm_map.get(low, low)


@dataclass(frozen=True)
class Token:
    surface: str
    canonical: str
    is_number: bool
    is_punct: bool

    @classmethod
    def make(cls, surface: str, norm_map: NormalizationMap = EMPTY_MAP) -> "Token":
        canon = canonicalize(surface, norm_map)
        return cls(surface, canon, is_number(canon), is_punct(surface))


def _split_unit(unit: str) -> list[str]:
    # Edge punctuation becomes separate tokens; interior punctuation stays
    # ("u.s.a", "1,000", "don't").
    start, end = 0, len(unit)
    lead, trail = [], []
    while start < end and _is_punct_char(unit[start]):
        lead.append(unit[start])
        start += 1
    while end > start and _is_punct_char(unit[end - 1]):
        trail.append(unit[end - 1])
        end -= 1
    core = [unit[start:end]] if end > start else []
    return lead + core + trail[::-1]


def split_words(line: str) -> list[str]:
    out: list[str] = []
    for unit in line.split():
        out.extend(_split_unit(unit))
    return out


def tokenize(line: str, norm_map: NormalizationMap = EMPTY_MAP) -> list[Token]:
    """Whitespace tokenization with edge punctuation split off.

    >>> [t.surface for t in tokenize("U.S.A.")]
    ['U.S.A', '.']
    """
    return [Token.make(w, norm_map) for w in split_words(line)]


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit costs (two-row DP)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def words(tokens: Iterable[Token]) -> list[str]:
    """Canonical forms of the non-punctuation tokens, in order."""
    return [t.canonical for t in tokens if not t.is_punct]
