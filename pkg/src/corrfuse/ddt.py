"""Diversity-driven training: a mixed objective that interpolates reference
log-likelihood with an expected diversity reward, optimized by score-function
gradients over multinomial samples with a baseline, plus round-robin
scheduling when several systems are trainable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import policy
from .evaluation import diversity
from .policy import PolicyModel
from .rewards import RewardKind, reward
from .textcore import TokenSeq


@dataclass
class DdtConfig:
    alpha: float = 0.5
    k_samples: int = 4
    reward_kind: RewardKind = RewardKind.MIN_EDIT_DISTANCE
    learning_rate: float = 0.05
    epochs: int = 1
    seed: int = 0
    reward_clip: float | None = None
    normalize_reward: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")
        if self.k_samples < 2:
            raise ValueError("k_samples must be >= 2 (the baseline needs multiple samples)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def rl_gradient(
    model: PolicyModel,
    x: TokenSeq,
    peer_outputs: Sequence[TokenSeq],
    cfg: DdtConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Score-function gradient estimate of the expected diversity reward.

    Draws k samples, subtracts the mean reward as a baseline, and scales by
    1/(k-1) rather than 1/k: that makes the centered estimator equivalent to
    a leave-one-out baseline and therefore exactly unbiased for the gradient
    of E[R], not (1-1/k) of it.  Returns the gradient and the mean reward.
    """
    k = cfg.k_samples
    samples = [policy.sample(model, x, rng) for _ in range(k)]
    rewards = []
    for y in samples:
        r = reward(cfg.reward_kind, peer_outputs, y, cfg.normalize_reward)
        if cfg.reward_clip is not None:
            r = min(r, cfg.reward_clip)
        rewards.append(r)
    r_bar = sum(rewards) / k
    grad = model.zero_grad_like()
    if max(rewards) == min(rewards):
        return grad, r_bar  # zero-centered advantages: exactly no update
    for y, r in zip(samples, rewards):
        if r == r_bar:
            continue
        # a sample shorter than the cap ended by drawing the stop symbol,
        # so its sampling probability includes the end-of-sentence factor
        ended = len(y) < model.max_len
        _, g = policy.grad_logprob(model, x, y, include_eos=ended)
        grad += ((r - r_bar) / (k - 1)) * g
    return grad, r_bar


def ddt_step(
    model: PolicyModel,
    batch: Sequence[tuple[TokenSeq, TokenSeq, Sequence[TokenSeq]]],
    cfg: DdtConfig,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """One ascent step on (1-alpha) * MLE + alpha * expected reward.

    Batch items are (source, reference, peer outputs).  Returns the pre-step
    mean reference NLL and the mean sample reward (0.0 when alpha == 0, in
    which case no sampling happens and the update equals mle_step exactly).
    """
    if not batch:
        raise ValueError("empty batch")
    grad = model.zero_grad_like()
    nll = 0.0
    if cfg.alpha < 1.0:
        mle_grad = model.zero_grad_like()
        for x, y_ref, _ in batch:
            lp, g = policy.grad_logprob(model, x, y_ref)
            nll -= lp
            mle_grad += g
        grad += (1.0 - cfg.alpha) * mle_grad
    else:
        for x, y_ref, _ in batch:
            nll -= policy.logprob(model, x, y_ref)
    mean_reward = 0.0
    if cfg.alpha > 0.0:
        rl_grad = model.zero_grad_like()
        r_sum = 0.0
        for x, _, peers in batch:
            g, r_bar = rl_gradient(model, x, peers, cfg, rng)
            rl_grad += g
            r_sum += r_bar
        grad += cfg.alpha * rl_grad
        mean_reward = r_sum / len(batch)
    model.params += cfg.learning_rate * grad
    return nll / len(batch), mean_reward


@dataclass(frozen=True)
class StageReport:
    stage: int
    backbone: int | None  # model index trained at this stage, None for stage 0
    diversity: float  # mean pairwise 1-BLEU between model outputs
    mle_loss: float
    mean_reward: float
    outputs: tuple[tuple[TokenSeq, ...], ...] = field(repr=False, default=())


def mean_pairwise_diversity(outputs_per_model: Sequence[Sequence[TokenSeq]]) -> float:
    values = []
    for i in range(len(outputs_per_model)):
        for j in range(i + 1, len(outputs_per_model)):
            values.append(diversity(outputs_per_model[i], outputs_per_model[j]))
    return sum(values) / len(values) if values else 0.0


def round_robin(
    models: Sequence[PolicyModel],
    data: Sequence[tuple[TokenSeq, TokenSeq]],
    cfg: DdtConfig,
    stages: int,
    fixed_peer_outputs: Sequence[Sequence[TokenSeq]] = (),
) -> tuple[list[PolicyModel], list[StageReport]]:
    """Models take turns receiving diversity-driven training.

    At stage s (1-based), model (s-1) mod n is the backbone; the other
    models are frozen and their greedy outputs, recomputed at the stage
    boundary, serve as peers, together with any fixed peer output lists.
    Input models are not mutated; stage 0 in the report is the untrained
    baseline.  Returns the updated models and per-stage reports.
    """
    if len(models) < 2:
        raise ValueError("round-robin training needs at least 2 models")
    if stages < 0:
        raise ValueError("stage count must be >= 0")
    if not data:
        raise ValueError("empty training data")
    for peer_list in fixed_peer_outputs:
        if len(peer_list) != len(data):
            raise ValueError("fixed peer outputs must be line-aligned with the data")
    models = [m.copy() for m in models]
    sources = [x for x, _ in data]

    def decode_all() -> list[list[TokenSeq]]:
        return [[policy.greedy_decode(m, x) for x in sources] for m in models]

    outputs = decode_all()
    reports = [
        StageReport(0, None, mean_pairwise_diversity(outputs), float("nan"), float("nan"),
                    tuple(tuple(o) for o in outputs))
    ]
    for stage in range(1, stages + 1):
        backbone = (stage - 1) % len(models)
        rng = np.random.default_rng((cfg.seed, stage))
        peer_sets = [
            [outputs[m][i] for m in range(len(models)) if m != backbone]
            + [peer_list[i] for peer_list in fixed_peer_outputs]
            for i in range(len(data))
        ]
        loss_sum = reward_sum = 0.0
        steps = 0
        for _ in range(cfg.epochs):
            for i, (x, y_ref) in enumerate(data):
                loss, r = ddt_step(models[backbone], [(x, y_ref, peer_sets[i])], cfg, rng)
                loss_sum += loss
                reward_sum += r
                steps += 1
        outputs = decode_all()
        reports.append(
            StageReport(
                stage, backbone, mean_pairwise_diversity(outputs),
                loss_sum / steps, reward_sum / steps,
                tuple(tuple(o) for o in outputs),
            )
        )
    return models, reports
