"""Randomized hyperparameter search scored by k-fold cross-validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .domain import DEFAULT_SCHEMA, FeatureSchema
from .evaluation import accuracy, confusion, precision, recall, roc_auc
from .models import canonical_family, fit, hyperparams_class


class TuningError(ValueError):
    pass


def kfold(y, k: int, seed: int = 0, stratified: bool = True):
    """Disjoint, exhaustive (train_idx, heldout_idx) pairs over row indices.

    Stratified folds deal each class round-robin after a seeded shuffle, so
    per-fold class counts differ by at most one record per class.
    """
    y = np.asarray(y)
    n = y.size
    if not isinstance(k, int) or k < 2:
        raise TuningError(f"k must be an integer >= 2, got {k!r}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    fold_of = np.empty(n, dtype=np.int64)
    if stratified:
        for cls in np.unique(y):
            members = np.nonzero(y == cls)[0]
            if members.size < k:
                raise TuningError(
                    f"class {cls!r} has {members.size} records, fewer than k={k}"
                )
            shuffled = rng.permutation(members)
            fold_of[shuffled] = np.arange(shuffled.size) % k
    else:
        if n < k:
            raise TuningError(f"need at least k={k} records, got {n}")
        fold_of = rng.permutation(n) % k
    pairs = []
    for f in range(k):
        held = np.nonzero(fold_of == f)[0]
        train = np.nonzero(fold_of != f)[0]
        pairs.append((train, held))
    return pairs


@dataclass(frozen=True)
class IntRange:
    low: int
    high: int  # inclusive
    log: bool = False

    def __post_init__(self):
        if self.low > self.high or self.low < 1:
            raise TuningError(f"bad integer range [{self.low}, {self.high}]")

    def sample(self, rng: np.random.Generator) -> int:
        if self.log:
            v = np.exp(rng.uniform(np.log(self.low), np.log(self.high + 1)))
            return int(min(self.high, max(self.low, int(v))))
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class FloatRange:
    low: float
    high: float
    log: bool = False

    def __post_init__(self):
        if not self.low < self.high:
            raise TuningError(f"bad range [{self.low}, {self.high}]")
        if self.log and self.low <= 0:
            raise TuningError("log-uniform range requires a positive lower bound")

    def sample(self, rng: np.random.Generator) -> float:
        if self.log:
            return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise TuningError("empty choice list")
        object.__setattr__(self, "values", tuple(self.values))

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.integers(0, len(self.values)))]


@dataclass(frozen=True)
class SearchSpace:
    family: str
    dimensions: dict

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        hp_fields = {f.name for f in dataclasses.fields(hyperparams_class(self.family))}
        unknown = set(self.dimensions) - hp_fields
        if unknown:
            raise TuningError(f"space names unknown hyperparameters {sorted(unknown)}")

    def sample(self, rng: np.random.Generator):
        base = dataclasses.asdict(hyperparams_class(self.family)())
        # dimension order fixed by sorted name so the rng stream is reproducible
        for name in sorted(self.dimensions):
            base[name] = self.dimensions[name].sample(rng)
        return hyperparams_class(self.family)(**base)


def default_space(family: str) -> SearchSpace:
    family = canonical_family(family)
    dims = {
        "max_depth": IntRange(2, 341),
        "min_samples_split": IntRange(2, 20),
        "min_samples_leaf": IntRange(1, 10),
    }
    if family == "forest":
        dims["n_trees"] = IntRange(10, 200)
    elif family != "tree":
        raise TuningError(f"no default search space for family {family!r}")
    return SearchSpace(family=family, dimensions=dims)


@dataclass(frozen=True)
class CandidateResult:
    index: int
    hyperparams: object
    mean_auc: float | None
    mean_accuracy: float | None
    mean_precision: float | None
    mean_recall: float | None
    error: str | None = None


@dataclass(frozen=True)
class SearchReport:
    family: str
    k: int
    seed: int
    candidates: tuple[CandidateResult, ...]
    best_index: int

    @property
    def best(self) -> CandidateResult:
        return self.candidates[self.best_index]


def _tiebreak_key(hp) -> tuple:
    return (getattr(hp, "n_trees", 0), getattr(hp, "max_depth", 0))


def select_winner(candidates) -> int:
    """Argmax of mean held-out AUC; ties go to fewer trees, then shallower depth."""
    best = None
    for c in candidates:
        if c.mean_auc is None:
            continue
        if best is None or c.mean_auc > best.mean_auc or (
            c.mean_auc == best.mean_auc
            and _tiebreak_key(c.hyperparams) < _tiebreak_key(best.hyperparams)
        ):
            best = c
    if best is None:
        raise TuningError("every candidate failed to train")
    return best.index


def _mean_or_none(values) -> float | None:
    if any(v is None for v in values):
        return None
    return float(np.mean(values))


def random_search(family: str, space: SearchSpace, X, y, *, n_candidates: int = 50,
                  k: int = 3, seed: int = 0, threshold: float = 0.5,
                  schema: FeatureSchema = DEFAULT_SCHEMA) -> SearchReport:
    """Cross-validated random search; candidate 0 is always the family default."""
    family = canonical_family(family)
    if space.family != family:
        raise TuningError(f"space is for {space.family!r}, search is for {family!r}")
    if n_candidates < 1:
        raise TuningError(f"n_candidates must be >= 1, got {n_candidates}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.uint8)
    folds = kfold(y, k, seed=seed, stratified=True)
    sample_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))
    hps = [hyperparams_class(family)()]
    hps += [space.sample(sample_rng) for _ in range(n_candidates - 1)]
    results = []
    for idx, hp in enumerate(hps):
        aucs, accs, precs, recs = [], [], [], []
        error = None
        try:
            for fold_no, (train_idx, held_idx) in enumerate(folds):
                fit_seed = int(np.random.SeedSequence(seed, spawn_key=(1, idx, fold_no)).generate_state(1)[0])
                model = fit(family, X[train_idx], y[train_idx], hp, seed=fit_seed, schema=schema)
                scores = model.predict_proba(X[held_idx])
                aucs.append(roc_auc(y[held_idx], scores).auc)
                c = confusion(y[held_idx], scores >= threshold)
                accs.append(accuracy(c))
                precs.append(precision(c))
                recs.append(recall(c))
        except Exception as exc:  # noqa: BLE001 - candidate failures are data, not crashes
            error = f"{type(exc).__name__}: {exc}"
        if error is not None:
            results.append(CandidateResult(idx, hp, None, None, None, None, error=error))
        else:
            results.append(CandidateResult(
                idx, hp,
                mean_auc=float(np.mean(aucs)),
                mean_accuracy=float(np.mean(accs)),
                mean_precision=_mean_or_none(precs),
                mean_recall=_mean_or_none(recs),
            ))
    best_index = select_winner(results)
    return SearchReport(family=family, k=k, seed=seed,
                        candidates=tuple(results), best_index=best_index)
