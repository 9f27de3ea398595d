"""Command-line orchestration: gen, train, ddt, stages, combine, tune, eval,
diversity.  Every command is deterministic given its config, writes its
artifacts as plain text, prints a key=value summary, and appends the same
summary (with the config hash) to <data.dir>/report.txt.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from . import policy
from .alignment import align_all
from .combiner import (
    FeatureSchema,
    NGramLM,
    beam_search,
    build_space,
    ensemble_pick_best,
    load_weights,
    save_weights,
    train_lm,
)
from .config import ExperimentConfig
from .ddt import DdtConfig, StageReport, ddt_step, mean_pairwise_diversity, round_robin
from .errors import DataError, NumericError, UsageError
from .evaluation import (
    GoldAnnotation,
    ScoreStats,
    compare_outputs,
    diversity,
    format_m2,
    parse_m2,
    score_corpus,
    sign_test_bootstrap,
)
from .policy import PolicyModel, Vocabulary, greedy_decode, load_model, load_vocab, mle_step, save_model, save_vocab
from .rewards import RewardKind
from .textcore import TokenSeq, detokenize, tokenize
from .toydata import DEFAULT_GRAMMAR, CorruptionRule, RULE_KINDS, generate_corpus, parse_grammar
from .tuner import decode_corpus, tune_loop


# ---------------------------------------------------------------------------
# small I/O helpers
# ---------------------------------------------------------------------------

def _read_token_lines(path: str) -> list[TokenSeq]:
    if not os.path.exists(path):
        raise DataError(f"missing input file: {path}")
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line) for line in fh.read().splitlines()]


def _read_golds(path: str) -> list[GoldAnnotation]:
    if not os.path.exists(path):
        raise DataError(f"missing gold file: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return parse_m2(fh.read())
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc


def _write_lines(path: str, lines: Sequence[str]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def _require_aligned(**named: Sequence) -> None:
    lengths = {name: len(seq) for name, seq in named.items()}
    if len(set(lengths.values())) > 1:
        detail = ", ".join(f"{name}: {n} lines" for name, n in lengths.items())
        raise DataError(f"line-count mismatch across aligned files ({detail})")


def _check_finite(model: PolicyModel, what: str) -> None:
    if not np.isfinite(model.params).all():
        raise NumericError(f"non-finite parameters after {what}")


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _emit_summary(cfg: ExperimentConfig, command: str, summary: dict[str, object]) -> None:
    lines = [f"command={command}", f"config_sha256={cfg.sha256()}"]
    lines += [f"{key}={_fmt(value)}" for key, value in summary.items()]
    for line in lines:
        print(line)
    report = os.path.join(cfg.get_str("data.dir"), "report.txt")
    os.makedirs(os.path.dirname(report) or ".", exist_ok=True)
    with open(report, "a", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n--\n")


def _split_paths(raw: str) -> list[str]:
    return [p.strip() for p in raw.split(",") if p.strip()]


# ---------------------------------------------------------------------------
# shared loading
# ---------------------------------------------------------------------------

def _model_paths(cfg: ExperimentConfig) -> tuple[str, list[str]]:
    model_dir = cfg.get_str("model.dir")
    vocab_path = os.path.join(model_dir, "vocab.txt")
    n = cfg.get_int("train.models")
    return vocab_path, [os.path.join(model_dir, f"model_{i}.txt") for i in range(n)]


def _load_models(cfg: ExperimentConfig) -> tuple[Vocabulary, list[PolicyModel]]:
    vocab_path, model_paths = _model_paths(cfg)
    if not os.path.exists(vocab_path):
        raise DataError(f"missing vocabulary file: {vocab_path} (run the train command first)")
    vocab = load_vocab(vocab_path)
    models = []
    for path in model_paths:
        if not os.path.exists(path):
            raise DataError(f"missing checkpoint: {path} (run the train command first)")
        models.append(load_model(path, vocab))
    return vocab, models


def _load_dev(cfg: ExperimentConfig) -> tuple[list[TokenSeq], list[TokenSeq], list[GoldAnnotation]]:
    src = _read_token_lines(cfg.get_str("data.dev_src"))
    ref = _read_token_lines(cfg.get_str("data.dev_ref"))
    golds = _read_golds(cfg.get_str("data.dev_m2"))
    _require_aligned(dev_src=src, dev_ref=ref, dev_m2=golds)
    return src, ref, golds


def _load_lm(cfg: ExperimentConfig) -> NGramLM:
    corpus_path = cfg.get_str("lm.corpus") or cfg.get_str("data.train_ref")
    corpus = _read_token_lines(corpus_path)
    if not corpus:
        raise DataError(f"empty language model corpus: {corpus_path}")
    return train_lm(corpus, cfg.get_int("lm.order"))


def _ddt_config(cfg: ExperimentConfig) -> DdtConfig:
    try:
        kind = RewardKind(cfg.get_str("ddt.reward"))
    except ValueError as exc:
        raise UsageError(f"ddt.reward must be one of edit|bleu|tokendiff: {exc}") from exc
    clip = cfg.get_float("ddt.clip")
    return DdtConfig(
        alpha=cfg.get_float("ddt.alpha"),
        k_samples=cfg.get_int("ddt.k_samples"),
        reward_kind=kind,
        learning_rate=cfg.get_float("ddt.lr"),
        epochs=cfg.get_int("ddt.epochs"),
        seed=cfg.derived_seed("ddt.seed", 2),
        reward_clip=clip if clip > 0 else None,
        normalize_reward=cfg.get_bool("ddt.normalize"),
    )


def _score_against_dev(
    sources: Sequence[TokenSeq], golds: Sequence[GoldAnnotation], hyps: Sequence[TokenSeq]
) -> tuple[ScoreStats, list[ScoreStats]]:
    _require_aligned(sources=sources, hypotheses=hyps, golds=golds)
    return score_corpus(sources, hyps, golds)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen(cfg: ExperimentConfig) -> int:
    grammar = DEFAULT_GRAMMAR
    grammar_path = cfg.get_str("gen.grammar")
    if grammar_path:
        if not os.path.exists(grammar_path):
            raise DataError(f"missing grammar file: {grammar_path}")
        with open(grammar_path, encoding="utf-8") as fh:
            try:
                grammar = parse_grammar(fh.read())
            except ValueError as exc:
                raise DataError(f"{grammar_path}: {exc}") from exc
    rules = tuple(CorruptionRule(kind, cfg.get_float("gen.rule_prob")) for kind in RULE_KINDS)
    seed = cfg.get_int("seed")
    oversample = cfg.get_int("gen.oversample")
    if oversample < 1:
        raise UsageError(f"gen.oversample must be >= 1, got {oversample}")
    # all splits draw reference sentences from one grammar stream, so dev and
    # test are freshly corrupted versions of sentences the models trained on;
    # the train split is oversampled with independent corruption passes
    grammar_seed = seed * 8
    summary: dict[str, object] = {}
    for split_idx, split in enumerate(("train", "dev", "test")):
        n = cfg.get_int(f"gen.{split}")
        if n < 1:
            raise UsageError(f"gen.{split} must be >= 1, got {n}")
        passes = oversample if split == "train" else 1
        examples = []
        for corruption_pass in range(passes):
            examples += generate_corpus(
                grammar_seed=grammar_seed,
                n_sentences=n,
                rules=rules,
                rng_seed=seed * 100 + split_idx * 50 + corruption_pass,
                grammar=grammar,
            )
        src_path = cfg.get_str(f"data.{split}_src")
        ref_path = cfg.get_str(f"data.{split}_ref")
        m2_path = cfg.get_str(f"data.{split}_m2")
        _write_lines(src_path, [detokenize(e.source) for e in examples])
        _write_lines(ref_path, [detokenize(e.reference) for e in examples])
        annotations = [GoldAnnotation(e.source, (e.gold_edits,)) for e in examples]
        os.makedirs(os.path.dirname(m2_path) or ".", exist_ok=True)
        with open(m2_path, "w", encoding="utf-8") as fh:
            fh.write(format_m2(annotations))
        summary[f"n_{split}"] = len(examples)
        summary[f"{split}_src"] = src_path
    summary["vocab_size"] = len(grammar.vocabulary())
    _emit_summary(cfg, "gen", summary)
    return 0


def _train_one(
    cfg: ExperimentConfig,
    vocab: Vocabulary,
    pairs: list[tuple[TokenSeq, TokenSeq]],
    index: int,
) -> tuple[PolicyModel, float]:
    seed = cfg.get_int("seed")
    model = PolicyModel(
        vocab,
        embed_width=cfg.get_int("policy.embed"),
        hidden_width=cfg.get_int("policy.hidden"),
        max_len=cfg.get_int("policy.max_len"),
        init_seed=seed * 1000 + 100 + index,
    )
    rng = np.random.default_rng((seed, 200 + index))
    batch_size = max(1, cfg.get_int("train.batch"))
    lr = cfg.get_float("train.lr")
    last_nll = float("nan")
    for _ in range(cfg.get_int("train.epochs")):
        order = rng.permutation(len(pairs))
        nll_sum = 0.0
        n_batches = 0
        for start in range(0, len(order), batch_size):
            batch = [pairs[i] for i in order[start : start + batch_size]]
            nll_sum += mle_step(model, batch, lr)
            n_batches += 1
        last_nll = nll_sum / n_batches
        _check_finite(model, f"individual training of model {index}")
    return model, last_nll


def cmd_train(cfg: ExperimentConfig) -> int:
    train_src = _read_token_lines(cfg.get_str("data.train_src"))
    train_ref = _read_token_lines(cfg.get_str("data.train_ref"))
    _require_aligned(train_src=train_src, train_ref=train_ref)
    if not train_src:
        raise DataError(f"empty training data: {cfg.get_str('data.train_src')}")
    max_len = cfg.get_int("policy.max_len")
    pairs = [(x, y) for x, y in zip(train_src, train_ref) if len(y) <= max_len]
    if not pairs:
        raise DataError("no training pair fits within policy.max_len")
    content: list[str] = []
    for x, y in pairs:
        for tok in x + y:
            if tok not in content:
                content.append(tok)
    vocab = Vocabulary.build(content)
    vocab_path, model_paths = _model_paths(cfg)
    os.makedirs(os.path.dirname(vocab_path) or ".", exist_ok=True)
    save_vocab(vocab, vocab_path)

    dev_src, _, dev_golds = _load_dev(cfg)
    summary: dict[str, object] = {"vocab_size": len(vocab), "n_pairs": len(pairs)}
    for i, path in enumerate(model_paths):
        model, nll = _train_one(cfg, vocab, pairs, i)
        save_model(model, path)
        outputs = [greedy_decode(model, x) for x in dev_src]
        stats, _ = _score_against_dev(dev_src, dev_golds, outputs)
        summary[f"model_{i}_nll"] = nll
        summary[f"model_{i}_dev_f05"] = stats.f_beta(0.5)
    _emit_summary(cfg, "train", summary)
    return 0


def cmd_ddt(cfg: ExperimentConfig) -> int:
    vocab, models = _load_models(cfg)
    dev_src, dev_ref, dev_golds = _load_dev(cfg)
    backbone_idx = cfg.get_int("ddt.backbone")
    if not 0 <= backbone_idx < len(models):
        raise UsageError(f"ddt.backbone must be in [0,{len(models) - 1}], got {backbone_idx}")
    ddt_cfg = _ddt_config(cfg)
    peer_files = _split_paths(cfg.get_str("ddt.peers"))
    if peer_files:
        peer_outputs = [_read_token_lines(p) for p in peer_files]
        for path, lines in zip(peer_files, peer_outputs):
            if len(lines) != len(dev_src):
                raise DataError(
                    f"peer file {path} has {len(lines)} lines, expected {len(dev_src)}"
                )
    else:
        peer_outputs = [
            [greedy_decode(m, x) for x in dev_src]
            for i, m in enumerate(models)
            if i != backbone_idx
        ]
    if not peer_outputs:
        raise DataError("no peer systems: provide ddt.peers or train more than one model")

    backbone = models[backbone_idx].copy()
    rng = np.random.default_rng((ddt_cfg.seed, 0))
    max_len = backbone.max_len
    loss_sum = reward_sum = 0.0
    steps = 0
    for _ in range(ddt_cfg.epochs):
        for i, (x, y_ref) in enumerate(zip(dev_src, dev_ref)):
            if len(y_ref) > max_len:
                continue
            peers = [p[i] for p in peer_outputs]
            loss, r = ddt_step(backbone, [(x, y_ref, peers)], ddt_cfg, rng)
            loss_sum += loss
            reward_sum += r
            steps += 1
    if steps == 0:
        raise DataError("no DDT sentence fits within the decode length limit")
    _check_finite(backbone, "diversity-driven training")

    out_path = cfg.get_str("ddt.out") or os.path.join(
        cfg.get_str("model.dir"), f"model_{backbone_idx}_ddt.txt"
    )
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    save_model(backbone, out_path)
    outputs = [greedy_decode(backbone, x) for x in dev_src]
    stats, _ = _score_against_dev(dev_src, dev_golds, outputs)
    div = mean_pairwise_diversity([outputs] + [list(p) for p in peer_outputs])
    _emit_summary(
        cfg,
        "ddt",
        {
            "backbone": backbone_idx,
            "reward": cfg.get_str("ddt.reward"),
            "alpha": ddt_cfg.alpha,
            "steps": steps,
            "mle_loss": loss_sum / steps,
            "mean_reward": reward_sum / steps,
            "dev_f05": stats.f_beta(0.5),
            "diversity": div,
            "checkpoint": out_path,
        },
    )
    return 0


def _combine_stage(
    cfg: ExperimentConfig,
    outputs_per_model: Sequence[Sequence[TokenSeq]],
    dev_src: Sequence[TokenSeq],
    dev_golds: Sequence[GoldAnnotation],
    lm: NGramLM,
    tune_seed: int,
) -> tuple[list[TokenSeq], np.ndarray, ScoreStats, list[ScoreStats]]:
    spaces = []
    for i in range(len(dev_src)):
        hyps = [outputs[i] for outputs in outputs_per_model]
        spaces.append(build_space(hyps, align_all(hyps)))
    schema = FeatureSchema(len(outputs_per_model))
    weights, _ = tune_loop(
        dev_src,
        dev_golds,
        spaces,
        lm,
        schema.default_weights(),
        beam=cfg.get_int("combine.beam"),
        k=cfg.get_int("combine.k"),
        rounds=cfg.get_int("tune.rounds"),
        mert_iters=cfg.get_int("tune.iters"),
        n_random=cfg.get_int("tune.random_dirs"),
        rng_seed=tune_seed,
    )
    combined = decode_corpus(spaces, weights, lm, cfg.get_int("combine.beam"))
    stats, per_sentence = _score_against_dev(dev_src, dev_golds, combined)
    return combined, weights, stats, per_sentence


def cmd_stages(cfg: ExperimentConfig) -> int:
    vocab, models = _load_models(cfg)
    dev_src, dev_ref, dev_golds = _load_dev(cfg)
    lm = _load_lm(cfg)
    stages = cfg.get_int("ddt.stages")
    ddt_cfg = _ddt_config(cfg)
    max_len = models[0].max_len
    data = [(x, y) for x, y in zip(dev_src, dev_ref) if len(y) <= max_len]
    kept = [i for i, (_, y) in enumerate(zip(dev_src, dev_ref)) if len(y) <= max_len]
    if len(kept) != len(dev_src):
        raise DataError("dev references longer than policy.max_len; regenerate or raise the limit")
    _, reports = round_robin(models, data, ddt_cfg, stages)

    out_dir = os.path.join(cfg.get_str("data.dir"), "out")
    tune_base = cfg.derived_seed("tune.seed", 3)
    schema = FeatureSchema(len(models))
    summary: dict[str, object] = {"stages": stages, "models": len(models)}
    stage_f05: list[float] = []
    per_sentence_by_stage: list[list[ScoreStats]] = []
    for report in reports:
        outputs_per_model = [list(o) for o in report.outputs]
        for m, outputs in enumerate(outputs_per_model):
            _write_lines(
                os.path.join(out_dir, f"stage{report.stage}.sys{m}.hyp"),
                [detokenize(o) for o in outputs],
            )
        combined, weights, stats, per_sentence = _combine_stage(
            cfg, outputs_per_model, dev_src, dev_golds, lm, tune_base + report.stage
        )
        _write_lines(
            os.path.join(out_dir, f"stage{report.stage}.combined.hyp"),
            [detokenize(o) for o in combined],
        )
        save_weights(schema, weights, os.path.join(out_dir, f"stage{report.stage}.weights"))
        comp_f = []
        for m, outputs in enumerate(outputs_per_model):
            comp_stats, _ = _score_against_dev(dev_src, dev_golds, outputs)
            comp_f.append(comp_stats.f_beta(0.5))
        stage_f05.append(stats.f_beta(0.5))
        per_sentence_by_stage.append(per_sentence)
        summary[f"stage{report.stage}_diversity"] = report.diversity
        summary[f"stage{report.stage}_combined_f05"] = stats.f_beta(0.5)
        for m, f in enumerate(comp_f):
            summary[f"stage{report.stage}_component{m}_f05"] = f
    best_stage = max(range(len(stage_f05)), key=lambda i: (stage_f05[i], -i))
    summary["best_stage"] = best_stage
    summary["best_combined_f05"] = stage_f05[best_stage]
    if best_stage != 0:
        outcomes = compare_outputs(per_sentence_by_stage[best_stage], per_sentence_by_stage[0])
        summary["p_best_vs_stage0"] = sign_test_bootstrap(
            outcomes, cfg.get_int("eval.resamples"), cfg.derived_seed("eval.seed", 4)
        )
    _emit_summary(cfg, "stages", summary)
    return 0


def _decode_one(args: tuple) -> TokenSeq:
    hyps, weights, lm, beam = args
    space = build_space(hyps, align_all(hyps))
    return beam_search(space, weights, lm, beam, k=1)[0][0]


def cmd_combine(cfg: ExperimentConfig) -> int:
    hyp_paths = _split_paths(cfg.get_str("combine.hyps"))
    if len(hyp_paths) < 2:
        raise UsageError("combine.hyps must list at least two comma-separated hypothesis files")
    hyp_lines = [_read_token_lines(p) for p in hyp_paths]
    _require_aligned(**{f"hyp_{i}": lines for i, lines in enumerate(hyp_lines)})
    n = len(hyp_lines[0])
    if n == 0:
        raise DataError(f"empty hypothesis file: {hyp_paths[0]}")
    lm = _load_lm(cfg)
    kind = cfg.get_str("combine.kind")
    if kind == "ensemble":
        combined = [
            ensemble_pick_best([lines[i] for lines in hyp_lines], lm) for i in range(n)
        ]
    elif kind == "lattice":
        schema = FeatureSchema(len(hyp_lines))
        weights_path = cfg.get_str("combine.weights")
        if os.path.exists(weights_path):
            weights = load_weights(weights_path, schema)
        else:
            weights = schema.default_weights()
        beam = cfg.get_int("combine.beam")
        tasks = [
            ([lines[i] for lines in hyp_lines], weights, lm, beam) for i in range(n)
        ]
        jobs = max(1, cfg.get_int("jobs"))
        if jobs == 1:
            combined = [_decode_one(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                combined = list(pool.map(_decode_one, tasks, chunksize=16))
    else:
        raise UsageError(f"combine.kind must be lattice or ensemble, got {kind!r}")
    out_path = cfg.get_str("combine.out")
    _write_lines(out_path, [detokenize(o) for o in combined])
    _emit_summary(
        cfg, "combine",
        {"kind": kind, "systems": len(hyp_lines), "sentences": n, "out": out_path},
    )
    return 0


def cmd_tune(cfg: ExperimentConfig) -> int:
    hyp_paths = _split_paths(cfg.get_str("tune.hyps") or cfg.get_str("combine.hyps"))
    if len(hyp_paths) < 2:
        raise UsageError("tune.hyps must list at least two comma-separated hypothesis files")
    hyp_lines = [_read_token_lines(p) for p in hyp_paths]
    dev_src, _, dev_golds = _load_dev(cfg)
    _require_aligned(
        dev_src=dev_src, **{f"hyp_{i}": lines for i, lines in enumerate(hyp_lines)}
    )
    lm = _load_lm(cfg)
    spaces = []
    for i in range(len(dev_src)):
        hyps = [lines[i] for lines in hyp_lines]
        spaces.append(build_space(hyps, align_all(hyps)))
    schema = FeatureSchema(len(hyp_lines))
    weights, pool = tune_loop(
        dev_src,
        dev_golds,
        spaces,
        lm,
        schema.default_weights(),
        beam=cfg.get_int("combine.beam"),
        k=cfg.get_int("combine.k"),
        rounds=cfg.get_int("tune.rounds"),
        mert_iters=cfg.get_int("tune.iters"),
        n_random=cfg.get_int("tune.random_dirs"),
        rng_seed=cfg.derived_seed("tune.seed", 3),
    )
    out_path = cfg.get_str("tune.out")
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    save_weights(schema, weights, out_path)
    _emit_summary(
        cfg, "tune",
        {
            "systems": len(hyp_lines),
            "pool_size": pool.size(),
            "pool_f05": pool.corpus_f(weights),
            "weights": out_path,
        },
    )
    return 0


def _eval_inputs(cfg: ExperimentConfig) -> tuple[list[TokenSeq], list[GoldAnnotation]]:
    split = cfg.get_str("eval.split")
    if split not in ("dev", "test"):
        raise UsageError(f"eval.split must be dev or test, got {split!r}")
    src = _read_token_lines(cfg.get_str(f"data.{split}_src"))
    golds = _read_golds(cfg.get_str(f"data.{split}_m2"))
    _require_aligned(src=src, golds=golds)
    return src, golds


def cmd_eval(cfg: ExperimentConfig) -> int:
    hyp_path = cfg.get_str("eval.hyp")
    if not hyp_path:
        raise UsageError("eval.hyp must name the hypothesis file to score")
    hyps = _read_token_lines(hyp_path)
    src, golds = _eval_inputs(cfg)
    _require_aligned(src=src, hyps=hyps)
    stats, per_sentence = score_corpus(src, hyps, golds)
    summary: dict[str, object] = {
        "hyp": hyp_path,
        "split": cfg.get_str("eval.split"),
        "tp": stats.tp,
        "fp": stats.fp,
        "fn": stats.fn,
        "precision": stats.precision,
        "recall": stats.recall,
        "f05": stats.f_beta(0.5),
    }
    baseline_path = cfg.get_str("eval.baseline")
    if baseline_path:
        baseline = _read_token_lines(baseline_path)
        _require_aligned(src=src, baseline=baseline)
        _, base_per_sentence = score_corpus(src, baseline, golds)
        outcomes = compare_outputs(per_sentence, base_per_sentence)
        summary["baseline"] = baseline_path
        summary["p_value"] = sign_test_bootstrap(
            outcomes, cfg.get_int("eval.resamples"), cfg.derived_seed("eval.seed", 4)
        )
    _emit_summary(cfg, "eval", summary)
    return 0


def cmd_diversity(cfg: ExperimentConfig) -> int:
    path_a, path_b = cfg.get_str("div.a"), cfg.get_str("div.b")
    if not path_a or not path_b:
        raise UsageError("div.a and div.b must name the two hypothesis files to compare")
    lines_a = _read_token_lines(path_a)
    lines_b = _read_token_lines(path_b)
    _require_aligned(a=lines_a, b=lines_b)
    if not lines_a:
        raise DataError(f"empty hypothesis file: {path_a}")
    _emit_summary(
        cfg, "diversity",
        {"a": path_a, "b": path_b, "diversity": diversity(lines_a, lines_b)},
    )
    return 0


COMMANDS: dict[str, Callable[[ExperimentConfig], int]] = {
    "gen": cmd_gen,
    "train": cmd_train,
    "ddt": cmd_ddt,
    "stages": cmd_stages,
    "combine": cmd_combine,
    "tune": cmd_tune,
    "eval": cmd_eval,
    "diversity": cmd_diversity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrfuse",
        description="Train diverse text-correction systems and fuse their outputs.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="path to a key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="override the base seed")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes for combination")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a single config key (repeatable)",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides: dict[str, object] = {"seed": args.seed, "jobs": args.jobs}
        for item in args.set:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            key, _, value = item.partition("=")
            overrides[key.strip()] = value
        cfg = ExperimentConfig.load(args.config, overrides=overrides)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
