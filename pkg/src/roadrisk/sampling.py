"""Artificial class balancing, applied to the training split only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import TrainingSplit

KINDS = ("none", "undersample", "oversample", "fifty_fifty")

CLI_ALIASES = {"none": "none", "under": "undersample", "over": "oversample", "5050": "fifty_fifty"}


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SamplingStrategy:
    kind: str = "none"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SamplingError(f"kind must be one of {KINDS}, got {self.kind!r}")


def resample(train: TrainingSplit, strategy: SamplingStrategy) -> TrainingSplit:
    """Rebalance the training split.

    undersample cuts the majority down to the minority count, oversample
    duplicates the minority up to the majority count, fifty_fifty sizes
    both classes to floor((n_min + n_maj) / 2). Minority growth draws with
    replacement, majority reduction without. The result is reshuffled from
    the strategy seed; kind "none" returns the input untouched.
    """
    if not isinstance(train, TrainingSplit):
        raise TypeError("resample() only accepts the training split handle")
    if strategy.kind == "none":
        return train
    records = train.records
    pos = [r for r in records if r.label]
    neg = [r for r in records if not r.label]
    if not pos or not neg:
        raise SamplingError("resampling needs both classes in the training split")
    minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    rng = np.random.Generator(np.random.PCG64(strategy.seed))

    if strategy.kind == "undersample":
        kept = rng.choice(len(majority), size=len(minority), replace=False)
        combined = minority + [majority[i] for i in kept]
    elif strategy.kind == "oversample":
        drawn = rng.integers(0, len(minority), size=len(majority))
        combined = [minority[i] for i in drawn] + majority
    else:  # fifty_fifty
        target = (len(minority) + len(majority)) // 2
        drawn = rng.integers(0, len(minority), size=target)
        kept = rng.choice(len(majority), size=target, replace=False)
        combined = [minority[i] for i in drawn] + [majority[i] for i in kept]

    order = rng.permutation(len(combined))
    return TrainingSplit(tuple(combined[i] for i in order))
