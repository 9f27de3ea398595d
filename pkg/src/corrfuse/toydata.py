"""Deterministic synthetic corruption corpus: sample grammatical sentences
from a small template grammar, then inject common grammatical errors with
per-rule probabilities.  Gold edits are the exact inverse corrections,
recorded as the canonical minimal edit script from erroneous to correct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .textcore import EditScript, TokenSeq, edit_script

RULE_KINDS = (
    "drop_determiner",
    "verb_agreement_swap",
    "preposition_swap",
    "noun_number_swap",
    "token_duplicate",
)


@dataclass(frozen=True)
class CorruptionRule:
    kind: str
    prob: float

    def __post_init__(self) -> None:
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown corruption rule {self.kind!r}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"rule probability must be in [0,1], got {self.prob}")


DEFAULT_RULES = tuple(CorruptionRule(kind, 0.35) for kind in RULE_KINDS)


@dataclass(frozen=True)
class Grammar:
    """Lexicon for the template grammar; all corruption rules operate on
    words listed here."""

    determiners: tuple[str, ...]
    nouns: tuple[tuple[str, str], ...]  # (singular, plural)
    verbs_intrans: tuple[tuple[str, str], ...]  # (3rd-singular, plural form)
    verbs_trans: tuple[tuple[str, str], ...]
    adjectives: tuple[str, ...]
    prepositions: tuple[str, ...]
    adverbs: tuple[str, ...]

    def vocabulary(self) -> tuple[str, ...]:
        words: list[str] = ["."]
        words += self.determiners
        for s, p in self.nouns + self.verbs_intrans + self.verbs_trans:
            words += [s, p]
        words += self.adjectives + self.prepositions + self.adverbs
        out: list[str] = []
        for w in words:
            if w not in out:
                out.append(w)
        return tuple(out)


DEFAULT_GRAMMAR = Grammar(
    determiners=("the", "a"),
    nouns=(
        ("cat", "cats"), ("dog", "dogs"), ("boy", "boys"), ("girl", "girls"),
        ("teacher", "teachers"), ("student", "students"), ("bird", "birds"),
        ("farmer", "farmers"),
    ),
    verbs_intrans=(
        ("walks", "walk"), ("runs", "run"), ("sleeps", "sleep"),
        ("smiles", "smile"), ("waits", "wait"),
    ),
    verbs_trans=(
        ("sees", "see"), ("likes", "like"), ("helps", "help"),
        ("finds", "find"), ("chases", "chase"),
    ),
    adjectives=("big", "small", "happy", "young", "old"),
    prepositions=("in", "on", "near", "with"),
    adverbs=("today", "quietly", "quickly"),
)


def parse_grammar(text: str) -> Grammar:
    """Plain-text grammar override: one entry per line.

    det <word> | noun <sg> <pl> | verbi <3sg> <pl> | verbt <3sg> <pl> |
    adj <word> | prep <word> | adv <word>.  Blank lines and # comments ok.
    """
    slots: dict[str, list] = {k: [] for k in ("det", "noun", "verbi", "verbt", "adj", "prep", "adv")}
    arity = {"det": 1, "noun": 2, "verbi": 2, "verbt": 2, "adj": 1, "prep": 1, "adv": 1}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]
        if kind not in slots:
            raise ValueError(f"line {lineno}: unknown word class {kind!r}")
        if len(args) != arity[kind]:
            raise ValueError(f"line {lineno}: {kind} takes {arity[kind]} word(s)")
        slots[kind].append(args[0] if arity[kind] == 1 else tuple(args))
    for kind in ("det", "noun", "verbi", "verbt", "prep"):
        if not slots[kind]:
            raise ValueError(f"grammar needs at least one {kind} entry")
    return Grammar(
        determiners=tuple(slots["det"]),
        nouns=tuple(slots["noun"]),
        verbs_intrans=tuple(slots["verbi"]),
        verbs_trans=tuple(slots["verbt"]),
        adjectives=tuple(slots["adj"]),
        prepositions=tuple(slots["prep"]),
        adverbs=tuple(slots["adv"]),
    )


def _sample_np(rng: np.random.Generator, grammar: Grammar, plural: bool) -> list[str]:
    noun = grammar.nouns[rng.integers(len(grammar.nouns))][1 if plural else 0]
    words = []
    if not plural:
        words.append(grammar.determiners[rng.integers(len(grammar.determiners))])
    elif rng.random() < 0.5:
        words.append("the")  # plural subjects take "the" or no determiner
    if grammar.adjectives and rng.random() < 0.4:
        words.append(grammar.adjectives[rng.integers(len(grammar.adjectives))])
    words.append(noun)
    return words


def sample_sentence(rng: np.random.Generator, grammar: Grammar) -> TokenSeq:
    """One grammatical sentence from the template set."""
    plural = bool(rng.random() < 0.4)
    form = 1 if plural else 0
    words = _sample_np(rng, grammar, plural)
    template = rng.integers(4)
    if template == 0:  # NP Vi .
        words.append(grammar.verbs_intrans[rng.integers(len(grammar.verbs_intrans))][form])
    elif template == 1:  # NP Vi Adv .
        words.append(grammar.verbs_intrans[rng.integers(len(grammar.verbs_intrans))][form])
        if grammar.adverbs:
            words.append(grammar.adverbs[rng.integers(len(grammar.adverbs))])
    elif template == 2:  # NP Vt NP .
        words.append(grammar.verbs_trans[rng.integers(len(grammar.verbs_trans))][form])
        words += _sample_np(rng, grammar, plural=bool(rng.random() < 0.4))
    else:  # NP Vi Prep NP .
        words.append(grammar.verbs_intrans[rng.integers(len(grammar.verbs_intrans))][form])
        words.append(grammar.prepositions[rng.integers(len(grammar.prepositions))])
        words += _sample_np(rng, grammar, plural=bool(rng.random() < 0.4))
    words.append(".")
    return tuple(words)


@dataclass(frozen=True)
class CorpusExample:
    source: TokenSeq  # erroneous
    reference: TokenSeq  # correct
    gold_edits: EditScript
    applied: tuple[str, ...]
    eligible: tuple[str, ...]


def _corrupt(
    tokens: list[str],
    rule: CorruptionRule,
    rng: np.random.Generator,
    grammar: Grammar,
) -> tuple[list[str], bool, bool]:
    """Apply one rule; returns (tokens, eligible, applied).

    The probability draw is consumed before checking eligibility so that
    the random stream does not depend on the sentence content.
    """
    fire = bool(rng.random() < rule.prob)
    kind = rule.kind
    swap: dict[str, str] = {}
    if kind == "verb_agreement_swap":
        for a, b in grammar.verbs_intrans + grammar.verbs_trans:
            swap[a], swap[b] = b, a
    elif kind == "noun_number_swap":
        for a, b in grammar.nouns:
            swap[a], swap[b] = b, a

    if kind == "drop_determiner":
        sites = [i for i, t in enumerate(tokens) if t in grammar.determiners]
    elif kind == "preposition_swap":
        sites = [i for i, t in enumerate(tokens) if t in grammar.prepositions] if len(
            grammar.prepositions
        ) > 1 else []
    elif kind == "token_duplicate":
        sites = list(range(len(tokens)))
    else:
        sites = [i for i, t in enumerate(tokens) if t in swap]

    if not sites:
        return tokens, False, False
    if not fire:
        return tokens, True, False
    site = int(sites[rng.integers(len(sites))])
    if kind == "drop_determiner":
        tokens = tokens[:site] + tokens[site + 1 :]
    elif kind == "preposition_swap":
        others = [p for p in grammar.prepositions if p != tokens[site]]
        tokens[site] = others[int(rng.integers(len(others)))]
    elif kind == "token_duplicate":
        tokens = tokens[: site + 1] + [tokens[site]] + tokens[site + 1 :]
    else:
        tokens[site] = swap[tokens[site]]
    return tokens, True, True


def generate_corpus(
    grammar_seed: int,
    n_sentences: int,
    rules: Sequence[CorruptionRule] = DEFAULT_RULES,
    rng_seed: int = 1,
    grammar: Grammar = DEFAULT_GRAMMAR,
) -> list[CorpusExample]:
    """Deterministic corpus of (erroneous, correct, gold edits) examples.

    Sentence i derives its generators from (seed, i) so generation order
    (or parallel generation) cannot change the output.
    """
    if n_sentences < 1:
        raise ValueError("need at least one sentence")
    examples = []
    for i in range(n_sentences):
        g_rng = np.random.default_rng(np.random.SeedSequence(entropy=grammar_seed, spawn_key=(i,)))
        c_rng = np.random.default_rng(np.random.SeedSequence(entropy=rng_seed, spawn_key=(i,)))
        reference = sample_sentence(g_rng, grammar)
        tokens = list(reference)
        applied: list[str] = []
        eligible: list[str] = []
        for rule in rules:
            tokens, was_eligible, was_applied = _corrupt(tokens, rule, c_rng, grammar)
            if was_eligible:
                eligible.append(rule.kind)
            if was_applied:
                applied.append(rule.kind)
        source = tuple(tokens)
        examples.append(
            CorpusExample(
                source=source,
                reference=reference,
                gold_edits=edit_script(source, reference),
                applied=tuple(applied),
                eligible=tuple(eligible),
            )
        )
    return examples
