"""Synthetic NLI-like corpora with controllable give-away bias.

Background tokens are drawn independently of the label, so the injected
give-away tokens are the only signal and the optimal hypothesis-only
accuracy has a closed, exactly enumerable form. That makes generated
corpora ground-truth oracles for the diagnostics and the trainers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset, NLIInstance, THREE_WAY, TWO_WAY
from .text import tokenize


@dataclass(frozen=True)
class SynthSpec:
    n_labels: int
    label_prior: tuple[float, ...]
    vocab_size: int
    sentence_length: tuple[int, int]
    giveaway: tuple[tuple[str, int, float], ...]  # (token, target label index, rate)
    seed: int

    def __post_init__(self):
        if self.n_labels not in (2, 3):
            raise ValueError("n_labels must be 2 or 3")
        if len(self.label_prior) != self.n_labels:
            raise ValueError("label_prior length must equal n_labels")
        if abs(sum(self.label_prior) - 1.0) > 1e-9:
            raise ValueError("label_prior must sum to 1")
        if any(p < 0 for p in self.label_prior):
            raise ValueError("label_prior entries must be nonnegative")
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        lo, hi = self.sentence_length
        if not 1 <= lo <= hi:
            raise ValueError("sentence_length must satisfy 1 <= min <= max")
        tokens = [g[0] for g in self.giveaway]
        if len(set(tokens)) != len(tokens):
            raise ValueError("giveaway tokens must be pairwise distinct")
        background = set(_background_vocab(self.vocab_size))
        for token, target, rate in self.giveaway:
            if token in background:
                raise ValueError(f"giveaway token {token!r} collides with background vocabulary")
            if tokenize(token) != [token]:
                raise ValueError(f"giveaway token {token!r} does not survive tokenization")
            if not 0 <= target < self.n_labels:
                raise ValueError(f"giveaway target {target} outside label range")
            if not 0.0 <= rate <= 1.0:
                raise ValueError("giveaway rates must lie in [0, 1]")

    @property
    def scheme(self):
        return TWO_WAY if self.n_labels == 2 else THREE_WAY


def _background_vocab(size: int) -> list[str]:
    return [f"w{i:03d}" for i in range(size)]


def generate(spec: SynthSpec, n: int) -> Dataset:
    """Draw n instances; deterministic given spec.seed.

    Each instance draws its label from the prior and a hypothesis of
    uniform background tokens; each giveaway targeting that label is
    inserted at a random position with its own rate. Premises are filler
    text. All instances land in the "train" split; re-split with
    corpus.random_split as needed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(spec.seed)
    background = _background_vocab(spec.vocab_size)
    prior = np.array(spec.label_prior)
    lo, hi = spec.sentence_length
    scheme = spec.scheme
    instances = []
    for k in range(n):
        label_idx = int(rng.choice(spec.n_labels, p=prior))
        length = int(rng.integers(lo, hi + 1))
        tokens = [background[int(i)] for i in rng.integers(0, spec.vocab_size, length)]
        for token, target, rate in spec.giveaway:
            if target == label_idx and rng.random() < rate:
                pos = int(rng.integers(0, len(tokens) + 1))
                tokens.insert(pos, token)
        instances.append(NLIInstance(
            premise=f"filler premise {k}",
            hypothesis=" ".join(tokens),
            label=scheme.by_index(label_idx),
            instance_id=f"synth-{k:06d}",
        ))
    return Dataset(name="synth", scheme=scheme, splits={"train": instances})


def bayes_accuracy(spec: SynthSpec) -> float:
    """Exact accuracy (0-100) of the optimal hypothesis-only classifier.

    Enumerates every giveaway presence pattern, applies the posterior
    argmax for the pattern, and sums the probability mass of correct
    decisions. Only giveaway presence is informative: background tokens
    are label-independent by construction.
    """
    if len(spec.giveaway) > 20:
        raise ValueError("pattern enumeration capped at 20 giveaway tokens")
    prior = spec.label_prior
    total = 0.0
    for pattern in itertools.product((False, True), repeat=len(spec.giveaway)):
        best = 0.0
        for label_idx in range(spec.n_labels):
            p = prior[label_idx]
            for present, (token, target, rate) in zip(pattern, spec.giveaway):
                if target == label_idx:
                    p *= rate if present else (1.0 - rate)
                elif present:
                    p = 0.0
                    break
            if p > best:
                best = p
        total += best
    return 100.0 * total


def spec_from_dict(data: dict) -> SynthSpec:
    """Build a spec from parsed JSON; label names in giveaways may be given
    instead of indices."""
    n_labels = int(data["n_labels"])
    scheme = TWO_WAY if n_labels == 2 else THREE_WAY
    giveaway = []
    for entry in data.get("giveaway", []):
        token, target, rate = entry
        if isinstance(target, str):
            target = scheme.by_name(target).index
        giveaway.append((str(token), int(target), float(rate)))
    return SynthSpec(
        n_labels=n_labels,
        label_prior=tuple(float(p) for p in data["label_prior"]),
        vocab_size=int(data["vocab_size"]),
        sentence_length=tuple(int(v) for v in data["sentence_length"]),
        giveaway=tuple(giveaway),
        seed=int(data["seed"]),
    )


def spec_to_dict(spec: SynthSpec) -> dict:
    return {
        "n_labels": spec.n_labels,
        "label_prior": list(spec.label_prior),
        "vocab_size": spec.vocab_size,
        "sentence_length": list(spec.sentence_length),
        "giveaway": [[t, target, rate] for t, target, rate in spec.giveaway],
        "seed": spec.seed,
    }
