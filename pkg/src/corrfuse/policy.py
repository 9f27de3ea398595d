"""A small trainable correction policy: recurrent encoder-decoder with exact
log-likelihoods, multinomial sampling, and hand-derived analytic gradients.

The model is deliberately tiny (single-layer tanh RNNs, a bag-of-source-
embeddings context vector added to each decoder input, flat float64
parameter vector) so that every gradient can be validated against central
finite differences and every sampling distribution enumerated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .textcore import TokenSeq

BOS, EOS, UNK = "<bos>", "<eos>", "<unk>"
RESERVED = (BOS, EOS, UNK)
BOS_ID, EOS_ID, UNK_ID = 0, 1, 2

PROB_FLOOR = 1e-12  # guards log() against underflow; gradients ignore it


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token list; reserved symbols occupy the first three slots."""

    tokens: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        for sym, pos in zip(RESERVED, (BOS_ID, EOS_ID, UNK_ID)):
            if self.tokens.count(sym) != 1 or self.tokens[pos] != sym:
                raise ValueError(f"reserved symbol {sym} must appear exactly once at slot {pos}")
        if any(not t or t.split() != [t] for t in self.tokens):
            raise ValueError("tokens must be non-empty and whitespace-free")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def build(cls, content_tokens: Sequence[str]) -> "Vocabulary":
        seen: list[str] = []
        for t in content_tokens:
            if t in RESERVED:
                raise ValueError(f"{t} is reserved")
            if t not in seen:
                seen.append(t)
        return cls(RESERVED + tuple(seen))

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def encode(self, seq: TokenSeq) -> list[int]:
        return [self.id_of(t) for t in seq]


def save_vocab(vocab: Vocabulary, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(vocab.tokens) + "\n")


def load_vocab(path: str) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        tokens = tuple(line.rstrip("\n") for line in fh if line.strip())
    return Vocabulary(tokens)


class PolicyModel:
    """Parameters plus architecture metadata; reads are thread-safe, updates
    require exclusive access."""

    def __init__(
        self,
        vocab: Vocabulary,
        embed_width: int = 16,
        hidden_width: int = 24,
        max_len: int = 20,
        init_seed: int = 0,
        params: np.ndarray | None = None,
    ) -> None:
        if embed_width < 1 or hidden_width < 1 or max_len < 0:
            raise ValueError("bad architecture sizes")
        self.vocab = vocab
        self.embed_width = embed_width
        self.hidden_width = hidden_width
        self.max_len = max_len
        self.init_seed = init_seed
        count = self.param_count(len(vocab), embed_width, hidden_width)
        if params is None:
            params = np.random.default_rng(init_seed).uniform(-0.1, 0.1, count)
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (count,):
            raise ValueError(f"expected {count} parameters, got {params.shape}")
        self.params = params
        self._views = _make_views(params, len(vocab), embed_width, hidden_width)

    @staticmethod
    def param_count(v: int, e: int, h: int) -> int:
        return v * e + 2 * (h * e + h * h + h) + v * h + v

    def copy(self) -> "PolicyModel":
        return PolicyModel(
            self.vocab, self.embed_width, self.hidden_width,
            self.max_len, self.init_seed, self.params.copy(),
        )

    def zero_grad_like(self) -> np.ndarray:
        return np.zeros_like(self.params)


def _make_views(params: np.ndarray, v: int, e: int, h: int) -> dict:
    views = {}
    off = 0

    def take(name: str, shape: tuple[int, ...]) -> None:
        nonlocal off
        size = int(np.prod(shape))
        views[name] = params[off : off + size].reshape(shape)
        off += size

    take("emb", (v, e))
    take("enc_in", (h, e))
    take("enc_rec", (h, h))
    take("enc_b", (h,))
    take("dec_in", (h, e))
    take("dec_rec", (h, h))
    take("dec_b", (h,))
    take("out_w", (v, h))
    take("out_b", (v,))
    assert off == params.size
    return views


def _encode(model: PolicyModel, x_ids: Sequence[int]):
    w = model._views
    h = np.zeros(model.hidden_width)
    states = [h]
    for t in x_ids:
        h = np.tanh(w["enc_in"] @ w["emb"][t] + w["enc_rec"] @ h + w["enc_b"])
        states.append(h)
    if x_ids:
        context = w["emb"][list(x_ids)].mean(axis=0)
    else:
        context = np.zeros(model.embed_width)
    return states, context


def _step(model: PolicyModel, s_prev: np.ndarray, prev_id: int, context: np.ndarray):
    w = model._views
    inp = w["emb"][prev_id] + context
    s = np.tanh(w["dec_in"] @ inp + w["dec_rec"] @ s_prev + w["dec_b"])
    logits = w["out_w"] @ s + w["out_b"]
    logits[BOS_ID] = -np.inf  # BOS is never emitted
    m = logits.max()
    exp = np.exp(logits - m)
    probs = exp / exp.sum()
    return inp, s, probs


def next_distribution(model: PolicyModel, x: TokenSeq, prefix: TokenSeq) -> np.ndarray:
    """Next-token distribution after consuming ``prefix`` (for inspection)."""
    states, context = _encode(model, model.vocab.encode(x))
    s = states[-1]
    prev = BOS_ID
    for t in model.vocab.encode(prefix):
        _, s, _ = _step(model, s, prev, context)
        prev = t
    _, _, probs = _step(model, s, prev, context)
    return probs


def logprob(model: PolicyModel, x: TokenSeq, y: TokenSeq, include_eos: bool = True) -> float:
    """Sum of log P(y_t | y_<t, x), plus the end-of-sentence term by default.

    ``include_eos=False`` scores a sequence that was cut off at the decode
    length limit, where no stop symbol was drawn.
    """
    lp, _ = _forward(model, x, y, include_eos)
    return lp


def _forward(model: PolicyModel, x: TokenSeq, y: TokenSeq, include_eos: bool):
    if len(y) > model.max_len:
        raise ValueError(f"target of length {len(y)} exceeds decode limit {model.max_len}")
    x_ids = model.vocab.encode(x)
    y_ids = model.vocab.encode(y)
    targets = y_ids + [EOS_ID] if include_eos else list(y_ids)
    enc_states, context = _encode(model, x_ids)
    s = enc_states[-1]
    prev = BOS_ID
    lp = 0.0
    steps = []  # (prev_id, inp, s_prev, s, probs, target)
    for t in targets:
        inp, s_new, probs = _step(model, s, prev, context)
        lp += float(np.log(max(probs[t], PROB_FLOOR)))
        steps.append((prev, inp, s, s_new, probs, t))
        s, prev = s_new, t
    return lp, (x_ids, enc_states, context, steps)


def grad_logprob(
    model: PolicyModel, x: TokenSeq, y: TokenSeq, include_eos: bool = True
) -> tuple[float, np.ndarray]:
    """Log-likelihood and its exact gradient as a flat vector over params."""
    lp, (x_ids, enc_states, context, steps) = _forward(model, x, y, include_eos)
    w = model._views
    grad = model.zero_grad_like()
    g = _make_views(grad, len(model.vocab), model.embed_width, model.hidden_width)

    d_context = np.zeros(model.embed_width)
    d_s = np.zeros(model.hidden_width)
    for prev_id, inp, s_prev, s, probs, target in reversed(steps):
        d_logits = -probs.copy()
        d_logits[target] += 1.0
        g["out_w"] += np.outer(d_logits, s)
        g["out_b"] += d_logits
        d_s = d_s + w["out_w"].T @ d_logits
        d_z = d_s * (1.0 - s * s)
        g["dec_b"] += d_z
        g["dec_in"] += np.outer(d_z, inp)
        g["dec_rec"] += np.outer(d_z, s_prev)
        d_inp = w["dec_in"].T @ d_z
        g["emb"][prev_id] += d_inp
        d_context += d_inp
        d_s = w["dec_rec"].T @ d_z

    # decoder start state is the final encoder state
    d_h = d_s
    for t in range(len(x_ids) - 1, -1, -1):
        h, h_prev = enc_states[t + 1], enc_states[t]
        d_z = d_h * (1.0 - h * h)
        g["enc_b"] += d_z
        g["enc_in"] += np.outer(d_z, w["emb"][x_ids[t]])
        g["enc_rec"] += np.outer(d_z, h_prev)
        g["emb"][x_ids[t]] += w["enc_in"].T @ d_z
        d_h = w["enc_rec"].T @ d_z

    if x_ids:
        share = d_context / len(x_ids)
        for t in x_ids:
            g["emb"][t] += share
    return lp, grad


def sample(
    model: PolicyModel,
    x: TokenSeq,
    rng: np.random.Generator,
    max_len: int | None = None,
) -> TokenSeq:
    """Draw tokens sequentially from the policy until EOS or the length cap.

    Deterministic given the generator state; one uniform draw per step via
    inverse CDF over the vocabulary in index order.
    """
    limit = model.max_len if max_len is None else min(max_len, model.max_len)
    states, context = _encode(model, model.vocab.encode(x))
    s = states[-1]
    prev = BOS_ID
    out: list[str] = []
    for _ in range(limit):
        _, s, probs = _step(model, s, prev, context)
        u = rng.random()
        idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        idx = min(idx, len(probs) - 1)
        if idx == EOS_ID:
            return tuple(out)
        out.append(model.vocab.tokens[idx])
        prev = idx
    return tuple(out)


def greedy_decode(model: PolicyModel, x: TokenSeq, max_len: int | None = None) -> TokenSeq:
    """Argmax decode; ties go to the lowest vocabulary index."""
    limit = model.max_len if max_len is None else min(max_len, model.max_len)
    states, context = _encode(model, model.vocab.encode(x))
    s = states[-1]
    prev = BOS_ID
    out: list[str] = []
    for _ in range(limit):
        _, s, probs = _step(model, s, prev, context)
        idx = int(np.argmax(probs))
        if idx == EOS_ID:
            return tuple(out)
        out.append(model.vocab.tokens[idx])
        prev = idx
    return tuple(out)


def mle_step(
    model: PolicyModel,
    batch: Sequence[tuple[TokenSeq, TokenSeq]],
    learning_rate: float,
) -> float:
    """One gradient-ascent step on the summed reference log-likelihood.

    Returns the pre-step mean negative log-likelihood of the batch.
    """
    if not batch:
        raise ValueError("empty batch")
    total = model.zero_grad_like()
    nll = 0.0
    for x, y in batch:
        lp, grad = grad_logprob(model, x, y)
        nll -= lp
        total += grad
    model.params += learning_rate * total
    return nll / len(batch)


CHECKPOINT_MAGIC = "corrfuse-policy"
CHECKPOINT_VERSION = 1


def save_model(model: PolicyModel, path: str) -> None:
    header = (
        f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION} "
        f"vocab={len(model.vocab)} embed={model.embed_width} "
        f"hidden={model.hidden_width} max_len={model.max_len} seed={model.init_seed}"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in model.params:
            fh.write(repr(float(v)) + "\n")


def load_model(path: str, vocab: Vocabulary) -> PolicyModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        values = [float(line) for line in fh if line.strip()]
    if len(header) < 2 or header[0] != CHECKPOINT_MAGIC or header[1] != f"v{CHECKPOINT_VERSION}":
        raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} policy checkpoint")
    meta = dict(kv.split("=") for kv in header[2:])
    if int(meta["vocab"]) != len(vocab):
        raise ValueError(
            f"{path}: checkpoint vocab size {meta['vocab']} != vocabulary size {len(vocab)}"
        )
    return PolicyModel(
        vocab,
        embed_width=int(meta["embed"]),
        hidden_width=int(meta["hidden"]),
        max_len=int(meta["max_len"]),
        init_seed=int(meta["seed"]),
        params=np.array(values),
    )
