"""Sentence-level diversity rewards between a trainable system's output and
the fixed outputs of its peer systems.

Only (peer, own-output) terms enter a reward; peer-vs-peer differences are
structurally inaccessible because the peers are not trainable.
"""

from __future__ import annotations

import enum
from collections import Counter
from typing import Sequence

from .evaluation import bleu
from .textcore import TokenSeq, edit_distance


class RewardKind(enum.Enum):
    MIN_EDIT_DISTANCE = "edit"
    BLEU_BASED = "bleu"
    TOKEN_DIFF = "tokendiff"


def _token_diff(a: TokenSeq, b: TokenSeq) -> int:
    """Size of the symmetric difference of the unigram multisets."""
    ca, cb = Counter(a), Counter(b)
    return sum(((ca - cb) + (cb - ca)).values())


def reward(
    kind: RewardKind,
    peer_outputs: Sequence[TokenSeq],
    y3: TokenSeq,
    normalize: bool = False,
) -> float:
    """Summed per-peer difference between ``y3`` and each fixed peer output.

    Larger means more different.  ``normalize`` divides each per-peer term
    by the longer of the two sentence lengths (off by default; the raw
    scale is handled by baseline subtraction during training).
    """
    if not peer_outputs:
        raise ValueError("at least one peer output required")
    total = 0.0
    for peer in peer_outputs:
        if kind is RewardKind.MIN_EDIT_DISTANCE:
            term = float(edit_distance(peer, y3))
        elif kind is RewardKind.TOKEN_DIFF:
            term = float(_token_diff(peer, y3))
        elif kind is RewardKind.BLEU_BASED:
            term = 1.0 - bleu(y3, peer)
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown reward kind {kind}")
        if normalize:
            term /= max(len(peer), len(y3), 1)
        total += term
    return total
