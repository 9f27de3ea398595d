"""Token sequences, edit distance, edit scripts, and n-gram counting.

Everything downstream (scoring, rewards, alignment, combination) works on
whitespace-tokenized sentences represented as tuples of token strings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

TokenSeq = tuple[str, ...]


def tokenize(line: str) -> TokenSeq:
    """Split a line on runs of whitespace. Empty / blank input gives ()."""
    return tuple(line.split())


def detokenize(tokens: TokenSeq) -> str:
    """Join tokens with single spaces (inverse of tokenize for clean tokens)."""
    return " ".join(tokens)


@dataclass(frozen=True, order=True)
class Edit:
    """Replace source tokens in [start, end) with ``replacement``.

    start == end is an insertion, empty replacement a deletion, anything
    else a (possibly multi-token) substitution.
    """

    start: int
    end: int
    replacement: TokenSeq

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad edit span [{self.start},{self.end})")
        if self.start == self.end and not self.replacement:
            raise ValueError("empty edit (no span, no replacement)")

    @property
    def kind(self) -> str:
        if self.start == self.end:
            return "insert"
        if not self.replacement:
            return "delete"
        return "substitute"

    @property
    def ops(self) -> int:
        """Single-token operation count: a k-token replacement of an
        l-token span counts max(k, l)."""
        return max(self.end - self.start, len(self.replacement))


EditScript = tuple[Edit, ...]


def edit_distance(a: TokenSeq, b: TokenSeq) -> int:
    """Token-level Levenshtein distance with unit insert/delete/substitute cost."""
    if a == b:
        return 0
    # keep the shorter sequence in the inner loop
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            sub = prev[j - 1] + (ai != b[j - 1])
            cur[j] = min(sub, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[len(b)]


def _dp_matrix(a: TokenSeq, b: TokenSeq) -> list[list[int]]:
    n, m = len(a), len(b)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (a[i - 1] != b[j - 1])
            dist[i][j] = min(sub, dist[i - 1][j] + 1, dist[i][j - 1] + 1)
    return dist


def edit_script(a: TokenSeq, b: TokenSeq) -> EditScript:
    """Minimal-cost script turning ``a`` into ``b``.

    Ties in the DP backtrace are broken canonically (match, then substitute,
    then delete, then insert, scanning cells from the end), so the script is
    deterministic.  Adjacent single-token operations are merged into one
    span edit; total single-token operation count equals edit_distance(a, b).
    """
    dist = _dp_matrix(a, b)
    # raw single-token ops collected back-to-front: (start, end, replacement)
    raw: list[tuple[int, int, TokenSeq]] = []
    i, j = len(a), len(b)
    while i > 0 or j > 0:
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            raw.append((i - 1, i, (b[j - 1],)))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            raw.append((i - 1, i, ()))
            i -= 1
        else:
            raw.append((i, i, (b[j - 1],)))
            j -= 1
    raw.reverse()

    merged: list[Edit] = []
    for start, end, repl in raw:
        if merged and merged[-1].end == start:
            prev = merged[-1]
            # a minimal script never has an adjacent delete+insert pair, so
            # merging preserves the single-op count
            assert not (
                (prev.kind == "delete" and start == end)
                or (prev.kind == "insert" and not repl)
            )
            merged[-1] = Edit(prev.start, end, prev.replacement + repl)
        else:
            merged.append(Edit(start, end, repl))
    return tuple(merged)


def apply_edits(source: TokenSeq, edits: EditScript) -> TokenSeq:
    """Apply a sorted, non-overlapping edit script to ``source``."""
    out: list[str] = []
    pos = 0
    for e in edits:
        if e.start < pos:
            raise ValueError(f"overlapping or unsorted edit at [{e.start},{e.end})")
        if e.end > len(source):
            raise ValueError(f"edit [{e.start},{e.end}) outside source of length {len(source)}")
        out.extend(source[pos:e.start])
        out.extend(e.replacement)
        pos = e.end
    out.extend(source[pos:])
    return tuple(out)


def script_ops(edits: EditScript) -> int:
    """Total single-token operation count of a script."""
    return sum(e.ops for e in edits)


def ngram_counts(s: TokenSeq, n: int) -> Counter:
    """Multiset of contiguous n-grams of ``s``; empty when len(s) < n."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    return Counter(tuple(s[i : i + n]) for i in range(len(s) - n + 1))
