"""Object-level splits, ROC-AUC, and report aggregation."""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .engine import derive_seed
from .errors import (
    InfeasibleSplitError,
    InvalidInputError,
    LeakageError,
    UndefinedAUCError,
)

# The 24 binary adjectives, in their fixed table order.
ADJECTIVES = (
    "absorbent", "bumpy", "compressible", "cool", "crinkly", "fuzzy",
    "hairy", "hard", "metallic", "nice", "porous", "rough",
    "scratchy", "slippery", "smooth", "soft", "solid", "springy",
    "squishy", "sticky", "textured", "thick", "thin", "unpleasant",
)


@dataclass
class AdjectiveLabelSet:
    """One object's 24 binary adjective labels."""

    object_id: str
    labels: dict

    def __post_init__(self):
        if set(self.labels) != set(ADJECTIVES):
            missing = sorted(set(ADJECTIVES) - set(self.labels))
            extra = sorted(set(self.labels) - set(ADJECTIVES))
            raise InvalidInputError(
                f"label set for {self.object_id}: missing={missing} extra={extra}"
            )

    def as_row(self):
        return [bool(self.labels[a]) for a in ADJECTIVES]


@dataclass(frozen=True)
class SplitPlan:
    """Train/test partition at object granularity for one adjective."""

    adjective: str
    seed: int
    train_ids: tuple
    test_ids: tuple

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise LeakageError(f"objects on both sides: {sorted(overlap)}")

    def to_dict(self):
        return {"adjective": self.adjective, "seed": self.seed,
                "train_ids": list(self.train_ids), "test_ids": list(self.test_ids)}

    @classmethod
    def from_dict(cls, d):
        return cls(adjective=d["adjective"], seed=int(d["seed"]),
                   train_ids=tuple(d["train_ids"]), test_ids=tuple(d["test_ids"]))


def make_split(objects, labels, adjective, ratio=0.9, seed=0) -> SplitPlan:
    """Seeded stratified 90/10 object split with both classes on both sides.

    ``labels`` maps object id -> AdjectiveLabelSet (or a plain dict of
    adjective -> bool).  Retries derived shuffles (up to 100) and a +/-1
    test-count adjustment before declaring the constraint unsatisfiable.
    """
    objects = list(objects)
    if adjective not in ADJECTIVES:
        raise InvalidInputError(f"unknown adjective {adjective!r}")

    def truth(obj):
        entry = labels[obj]
        value = entry.labels[adjective] if isinstance(entry, AdjectiveLabelSet) else entry[adjective]
        return bool(value)

    pos = [o for o in objects if truth(o)]
    neg = [o for o in objects if not truth(o)]
    if len(pos) < 2 or len(neg) < 2:
        raise InfeasibleSplitError(
            f"{adjective}: needs >=2 positive and >=2 negative objects, "
            f"has {len(pos)} and {len(neg)}"
        )
    n = len(objects)
    base_test = max(1, round((1.0 - ratio) * n))
    for attempt in range(100):
        rng = np.random.Generator(np.random.PCG64(
            derive_seed(seed, f"split/{adjective}/{attempt}")))
        for n_test in (base_test, base_test + 1, max(2, base_test - 1)):
            n_test_pos = int(np.clip(round(n_test * len(pos) / n), 1, len(pos) - 1))
            n_test_neg = n_test - n_test_pos
            if not 1 <= n_test_neg <= len(neg) - 1:
                continue
            pos_order = [pos[i] for i in rng.permutation(len(pos))]
            neg_order = [neg[i] for i in rng.permutation(len(neg))]
            test = sorted(pos_order[:n_test_pos] + neg_order[:n_test_neg])
            train = sorted(set(objects) - set(test))
            return SplitPlan(adjective=adjective, seed=seed,
                             train_ids=tuple(train), test_ids=tuple(test))
    raise InfeasibleSplitError(f"{adjective}: no satisfying split found in 100 attempts")


def roc_auc(scores, labels) -> float:
    """Tie-adjusted Mann-Whitney AUC via midranks.

    Equals the fraction of (positive, negative) pairs with score_pos >
    score_neg, counting ties as one half; identical to brute-force pair
    counting (both produce exact multiples of 0.5 before the division).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise InvalidInputError(f"scores {s.shape} and labels {y.shape} must be 1-D and equal")
    pos_mask = y > 0
    n_pos = int(pos_mask.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError(f"need both classes, got {n_pos} positive / {n_neg} negative")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size, dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * ((i + 1) + (j + 1))  # midrank, 1-based
        i = j + 1
    u = ranks[pos_mask].sum() - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def evaluate(score_fn, features, labels, split: SplitPlan) -> float:
    """AUC of ``score_fn`` over the split's test objects.

    ``features`` is a list of (object_id, x) pairs (one or many per object);
    ``labels`` maps object id -> bool for the split's adjective.  Training
    objects are never scored, and any id on both sides is a hard failure.
    """
    overlap = set(split.train_ids) & set(split.test_ids)
    if overlap:
        raise LeakageError(f"objects on both sides of the split: {sorted(overlap)}")
    test_ids = set(split.test_ids)
    covered = {obj for obj, _ in features}
    missing = test_ids - covered
    if missing:
        raise InvalidInputError(f"no features for test objects: {sorted(missing)}")
    scores, truth = [], []
    for obj, x in features:
        if obj in test_ids:
            scores.append(float(score_fn(x)))
            truth.append(1.0 if labels[obj] else -1.0)
    return roc_auc(np.asarray(scores), np.asarray(truth))


@dataclass
class EvalReport:
    """Per-adjective AUCs (averaged over seeds) plus the overall mean."""

    per_adjective: dict        # adjective -> mean AUC
    per_adjective_seeds: dict  # adjective -> {seed: AUC}
    mean_auc: float
    fingerprint: str
    n_seeds: int

    def to_kv_text(self) -> str:
        lines = [f"fingerprint={self.fingerprint}", f"n_seeds={self.n_seeds}"]
        for adj in sorted(self.per_adjective):
            lines.append(f"auc.{adj}={self.per_adjective[adj]:.6f}")
            for seed in sorted(self.per_adjective_seeds[adj]):
                lines.append(f"auc.{adj}.seed{seed}={self.per_adjective_seeds[adj][seed]:.6f}")
        lines.append(f"mean_auc={self.mean_auc:.6f}")
        return "\n".join(lines) + "\n"

    def to_table_csv(self) -> str:
        lines = ["adjective,mean_auc,n_seeds"]
        for adj in sorted(self.per_adjective):
            lines.append(f"{adj},{self.per_adjective[adj]:.6f},{len(self.per_adjective_seeds[adj])}")
        lines.append(f"__mean__,{self.mean_auc:.6f},{self.n_seeds}")
        return "\n".join(lines) + "\n"


def config_fingerprint(payload: dict) -> str:
    """Stable short hash of a configuration (schedule, seeds, adjectives...)."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def aggregate(per_seed_aucs: dict, config: dict = None) -> EvalReport:
    """Combine {seed: {adjective: auc}} into an EvalReport.

    Every seed must cover the same adjective set; per-adjective means are
    taken over seeds, the overall mean is unweighted over adjectives.
    """
    if not per_seed_aucs:
        raise InvalidInputError("no evaluation results to aggregate")
    seeds = sorted(per_seed_aucs)
    adjective_sets = [set(per_seed_aucs[s]) for s in seeds]
    expected = adjective_sets[0]
    if not expected:
        raise InvalidInputError("no adjectives in evaluation results")
    for s, present in zip(seeds, adjective_sets):
        if present != expected:
            raise InvalidInputError(
                f"seed {s} covers {sorted(present)}, expected {sorted(expected)}"
            )
    per_adjective = {}
    per_adjective_seeds = {}
    for adj in sorted(expected):
        vals = {s: float(per_seed_aucs[s][adj]) for s in seeds}
        per_adjective_seeds[adj] = vals
        per_adjective[adj] = float(np.mean(list(vals.values())))
    mean_auc = float(np.mean(list(per_adjective.values())))
    payload = dict(config or {})
    payload["seeds"] = seeds
    payload["adjectives"] = sorted(expected)
    return EvalReport(
        per_adjective=per_adjective,
        per_adjective_seeds=per_adjective_seeds,
        mean_auc=mean_auc,
        fingerprint=config_fingerprint(payload),
        n_seeds=len(seeds),
    )
