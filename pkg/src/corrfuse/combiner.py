"""Lattice-style hypothesis combination.

Hypotheses are pairwise aligned; emitting a word consumes it together with
its directly aligned counterparts in the other systems.  Partial outputs are
scored by a linear model over per-system match counts, output length, and an
n-gram language model, and searched breadth-synchronously with beam pruning
and recombination.  A trivial pick-best-by-LM ensemble is included as the
alternative combiner for swap experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .alignment import Alignment
from .textcore import TokenSeq

LM_BOS, LM_EOS, LM_UNK = "<s>", "</s>", "<unk>"
BACKOFF = 0.4
UNIGRAM_SMOOTHING = 0.1


class NGramLM:
    """Count-based LM: stupid backoff renormalized to a proper distribution,
    with add-0.1 smoothing at the unigram level."""

    def __init__(self, corpus: Sequence[TokenSeq], order: int = 3) -> None:
        if order < 1:
            raise ValueError("LM order must be >= 1")
        if not corpus:
            raise ValueError("empty LM training corpus")
        self.order = order
        # continuations[ctx] lists (token, count); ctx_total[ctx] is the
        # prefix count, so seen continuation mass always sums to exactly 1
        self._continuations: dict[tuple[str, ...], dict[str, int]] = {}
        self._ctx_total: dict[tuple[str, ...], int] = {}
        self._unigram: dict[str, int] = {}
        self._total = 0
        for sent in corpus:
            padded = (LM_BOS,) * (order - 1) + tuple(sent) + (LM_EOS,)
            for pos in range(order - 1, len(padded)):
                w = padded[pos]
                self._unigram[w] = self._unigram.get(w, 0) + 1
                self._total += 1
                for n in range(2, order + 1):
                    ctx = padded[pos - n + 1 : pos]
                    slot = self._continuations.setdefault(ctx, {})
                    slot[w] = slot.get(w, 0) + 1
                    self._ctx_total[ctx] = self._ctx_total.get(ctx, 0) + 1
        self._types = set(self._unigram) | {LM_UNK}
        self._vocab_size = len(self._types)
        self._z_cache: dict[tuple[str, ...], float] = {}

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self._types)

    def start_context(self) -> tuple[str, ...]:
        return (LM_BOS,) * (self.order - 1)

    def _p_unigram(self, w: str) -> float:
        count = self._unigram.get(w, 0)
        return (count + UNIGRAM_SMOOTHING) / (self._total + UNIGRAM_SMOOTHING * self._vocab_size)

    def _p(self, w: str, ctx: tuple[str, ...]) -> float:
        if not ctx:
            return self._p_unigram(w)
        total = self._ctx_total.get(ctx)
        if total is None:
            return self._p(w, ctx[1:])
        count = self._continuations[ctx].get(w, 0)
        score = count / total if count else BACKOFF * self._p(w, ctx[1:])
        return score / self._z(ctx)

    def _z(self, ctx: tuple[str, ...]) -> float:
        z = self._z_cache.get(ctx)
        if z is None:
            seen_backoff_mass = sum(self._p(w, ctx[1:]) for w in self._continuations[ctx])
            z = 1.0 + BACKOFF * (1.0 - seen_backoff_mass)
            self._z_cache[ctx] = z
        return z

    def prob(self, token: str, context: tuple[str, ...]) -> float:
        """P(token | context); unknown tokens share the <unk> bucket."""
        w = token if token in self._types else LM_UNK
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        return self._p(w, ctx)

    def logprob(self, token: str, context: tuple[str, ...]) -> float:
        return math.log(self.prob(token, context))

    def sequence_logprob(self, tokens: TokenSeq) -> float:
        ctx = self.start_context()
        lp = 0.0
        for w in tuple(tokens) + (LM_EOS,):
            lp += self.logprob(w, ctx)
            ctx = (ctx + (w,))[1:] if self.order > 1 else ()
        return lp


def train_lm(corpus: Sequence[TokenSeq], order: int = 3) -> NGramLM:
    return NGramLM(corpus, order)


@dataclass(frozen=True)
class FeatureSchema:
    """Named dimensions of the linear combination model."""

    n_systems: int

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f"match_{s}" for s in range(self.n_systems)) + ("length", "lm")

    @property
    def dim(self) -> int:
        return self.n_systems + 2

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim)

    def default_weights(self) -> np.ndarray:
        w = np.full(self.dim, 1.0)
        w[-2] = 0.5  # length
        w[-1] = 0.5  # lm
        return w


def save_weights(schema: FeatureSchema, weights: np.ndarray, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, value in zip(schema.names, weights):
            fh.write(f"{name}\t{repr(float(value))}\n")


def load_weights(path: str, schema: FeatureSchema) -> np.ndarray:
    values: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            name, _, raw = line.rstrip("\n").partition("\t")
            values[name] = float(raw)
    if set(values) != set(schema.names):
        raise ValueError(
            f"{path}: weight names {sorted(values)} do not match schema {list(schema.names)}"
        )
    return np.array([values[name] for name in schema.names])


Word = tuple[int, int]  # (system, token index)


@dataclass(frozen=True)
class SearchSpace:
    hyps: tuple[TokenSeq, ...]
    groups: tuple[tuple[frozenset, ...], ...]  # groups[s][i]: aligned group of word (s, i)

    @property
    def n_systems(self) -> int:
        return len(self.hyps)

    def schema(self) -> FeatureSchema:
        return FeatureSchema(len(self.hyps))


def build_space(
    hyps: Sequence[TokenSeq], alignments: dict[tuple[int, int], Alignment]
) -> SearchSpace:
    """Precompute each word's aligned group: itself plus its direct
    alignment partners in every other system."""
    hyps = tuple(tuple(h) for h in hyps)
    n = len(hyps)
    if n < 2:
        raise ValueError("need at least 2 hypotheses to combine")
    maps: dict[tuple[int, int], dict[int, int]] = {}
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in alignments:
                raise ValueError(f"missing alignment for system pair ({i}, {j})")
            ab = alignments[(i, j)].a_to_b()
            maps[(i, j)] = ab
            maps[(j, i)] = {b: a for a, b in ab.items()}
    groups = []
    for s in range(n):
        row = []
        for i in range(len(hyps[s])):
            group = {(s, i)}
            for t in range(n):
                if t == s:
                    continue
                j = maps[(s, t)].get(i)
                if j is not None:
                    group.add((t, j))
            row.append(frozenset(group))
        groups.append(tuple(row))
    return SearchSpace(hyps, tuple(groups))


@dataclass(frozen=True)
class SearchState:
    used: tuple[int, ...]  # per-system bitmask of consumed token indices
    out: TokenSeq
    lm_ctx: tuple[str, ...]
    feats: tuple[float, ...]
    score: float
    done: bool = False


def initial_state(space: SearchSpace, lm: NGramLM) -> SearchState:
    schema = space.schema()
    return SearchState(
        used=(0,) * space.n_systems,
        out=(),
        lm_ctx=lm.start_context(),
        feats=(0.0,) * schema.dim,
        score=0.0,
    )


def _frontier(space: SearchSpace, used: tuple[int, ...], s: int) -> int | None:
    mask = used[s]
    for i in range(len(space.hyps[s])):
        if not mask >> i & 1:
            return i
    return None


def _dot(weights: Sequence[float], feats: Sequence[float]) -> float:
    return sum(w * f for w, f in zip(weights, feats))


def extensions(
    space: SearchSpace,
    state: SearchState,
    lm: NGramLM,
    weights: Sequence[float],
) -> list[SearchState]:
    """Successor states: one word emission per system with an unused
    frontier word, plus an end action once any system is exhausted."""
    if state.done:
        return []
    n = space.n_systems
    succs: dict[tuple, SearchState] = {}
    exhausted = False
    for s in range(n):
        i = _frontier(space, state.used, s)
        if i is None:
            exhausted = True
            continue
        token = space.hyps[s][i]
        group = space.groups[s][i]
        used = list(state.used)
        matched = set()
        for sys_idx, tok_idx in group:
            used[sys_idx] |= 1 << tok_idx
            matched.add(sys_idx)
        feats = list(state.feats)
        for sys_idx in matched:
            feats[sys_idx] += 1.0
        feats[n] += 1.0  # length
        feats[n + 1] += lm.logprob(token, state.lm_ctx)
        new_ctx = (state.lm_ctx + (token,))[1:] if lm.order > 1 else ()
        succ = SearchState(
            used=tuple(used),
            out=state.out + (token,),
            lm_ctx=new_ctx,
            feats=tuple(feats),
            score=_dot(weights, feats),
        )
        succs.setdefault((succ.used, succ.out, succ.lm_ctx), succ)
    result = list(succs.values())
    if exhausted:
        feats = list(state.feats)
        feats[n + 1] += lm.logprob(LM_EOS, state.lm_ctx)
        result.append(
            SearchState(
                used=state.used,
                out=state.out,
                lm_ctx=state.lm_ctx,
                feats=tuple(feats),
                score=_dot(weights, feats),
                done=True,
            )
        )
    return result


def beam_search(
    space: SearchSpace,
    weights: Sequence[float],
    lm: NGramLM,
    beam: int | None = 64,
    k: int = 50,
) -> list[tuple[TokenSeq, np.ndarray, float]]:
    """Breadth-synchronous beam search over emitted length.

    States with the same (used words, LM context) recombine, keeping the
    higher score (ties: lexicographically smaller output).  Returns up to k
    completed hypotheses sorted by score, deduplicated by token sequence.
    beam=None disables pruning entirely.
    """
    if beam is not None and beam < 1:
        raise ValueError("beam must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    weights = tuple(float(w) for w in weights)
    completed: dict[TokenSeq, SearchState] = {}

    def better(s1: SearchState, s2: SearchState) -> SearchState:
        if s1.score != s2.score:
            return s1 if s1.score > s2.score else s2
        return s1 if s1.out <= s2.out else s2

    current: dict[tuple, SearchState] = {}
    start = initial_state(space, lm)
    current[(start.used, start.lm_ctx)] = start
    while current:
        nxt: dict[tuple, SearchState] = {}
        for state in current.values():
            for succ in extensions(space, state, lm, weights):
                if succ.done:
                    prev = completed.get(succ.out)
                    completed[succ.out] = succ if prev is None else better(succ, prev)
                else:
                    key = (succ.used, succ.lm_ctx)
                    prev = nxt.get(key)
                    nxt[key] = succ if prev is None else better(succ, prev)
        states = sorted(nxt.values(), key=lambda s: (-s.score, s.out))
        if beam is not None:
            states = states[:beam]
        current = {(s.used, s.lm_ctx): s for s in states}
    assert completed, "the end action is always reachable"
    ranked = sorted(completed.values(), key=lambda s: (-s.score, s.out))
    return [(s.out, np.array(s.feats), s.score) for s in ranked[:k]]


def ensemble_pick_best(hyps: Sequence[TokenSeq], lm: NGramLM) -> TokenSeq:
    """Swap-in reference combiner: keep the hypothesis the LM likes best
    (uniform system weighting, ties to the lowest system index)."""
    if not hyps:
        raise ValueError("no hypotheses")
    best_idx = 0
    best_lp = lm.sequence_logprob(hyps[0])
    for i, h in enumerate(hyps[1:], start=1):
        lp = lm.sequence_logprob(h)
        if lp > best_lp:
            best_idx, best_lp = i, lp
    return tuple(hyps[best_idx])


def format_kbest(entries: Iterable[tuple[int, TokenSeq, np.ndarray, float]],
                 schema: FeatureSchema) -> str:
    """K-best file lines: "index ||| tokens ||| name:value ... ||| score"."""
    lines = []
    for idx, tokens, feats, score in entries:
        feat_str = " ".join(
            f"{name}:{value:.6f}" for name, value in zip(schema.names, feats)
        )
        lines.append(f"{idx} ||| {' '.join(tokens)} ||| {feat_str} ||| {score:.6f}")
    return "\n".join(lines) + "\n"
