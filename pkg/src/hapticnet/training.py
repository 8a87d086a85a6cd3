"""Two-phase training: logistic-loss pretraining, hinge-loss fine-tuning."""

from dataclasses import dataclass, field, asdict

import numpy as np

from .engine import LOSSES, derive_seed, sgd_momentum_step
from .errors import InvalidInputError, InvalidSpecError, NonFiniteGradientError

PHASES = ("logistic-pretrain", "hinge-finetune", "two-phase")


@dataclass
class TrainSchedule:
    """Optimization hyperparameters; defaults follow the training recipe."""

    epochs: int = 200
    batch_size: int = 1000
    lr: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    phase: str = "two-phase"
    finetune_epochs: int = None  # defaults to ``epochs``
    reinit_classifier: bool = True
    freeze_features: bool = False

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise InvalidSpecError(f"bad schedule: {self}")
        if self.phase not in PHASES:
            raise InvalidSpecError(f"unknown phase {self.phase!r}; expected one of {PHASES}")
        if self.finetune_epochs is None:
            self.finetune_epochs = self.epochs

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    model: object
    loss_curve: list            # per-epoch mean training loss, both phases
    phase_boundaries: dict      # phase name -> (start epoch, end epoch)
    diverged: bool = False
    final_loss: float = None

    def __post_init__(self):
        if self.final_loss is None and self.loss_curve:
            self.final_loss = self.loss_curve[-1]


def _check_training_inputs(instances, labels):
    x = np.asarray(instances, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.shape[0] == 0:
        raise InvalidInputError("no training instances")
    if y.shape != (x.shape[0],):
        raise InvalidInputError(f"labels shape {y.shape} != ({x.shape[0]},)")
    if not np.all(np.abs(y) == 1.0):
        raise InvalidInputError("labels must be -1 or +1")
    return x, y


def _snapshot(model):
    return [(v.copy(), vel.copy()) for _, v, vel in model.named_params()]


def _restore(model, snap):
    for (_, v, vel), (sv, svel) in zip(model.named_params(), snap):
        v[:] = sv
        vel[:] = svel


def _run_phase(model, x, y, loss_name, epochs, schedule, rng, curve, trainable):
    """One loss phase of minibatch SGD; returns False on divergence."""
    loss_fn = LOSSES[loss_name]
    n = x.shape[0]
    batch = min(schedule.batch_size, n)
    snap = _snapshot(model)
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        try:
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                xb, yb = x[idx], y[idx]
                score, caches = model.forward_cached(xb)
                losses, grad_s = loss_fn(score, yb)
                grads = model.backward(caches, grad_s / idx.size)
                for name, value, vel in model.named_params():
                    if name not in trainable:
                        continue
                    sgd_momentum_step(value, vel, grads[name],
                                      lr=schedule.lr, momentum=schedule.momentum, name=name)
                epoch_loss += float(np.sum(losses))
        except NonFiniteGradientError:
            _restore(model, snap)
            return False
        mean_loss = epoch_loss / n
        if not np.isfinite(mean_loss):
            _restore(model, snap)
            return False
        curve.append(mean_loss)
        snap = _snapshot(model)
    return True


def train(model, instances, labels, schedule: TrainSchedule) -> TrainResult:
    """Train ``model`` in place following the schedule.

    two-phase runs logistic pretraining for ``epochs``, reinitializes the
    final classifier layer (unless reinit_classifier=False), then fine-tunes
    with hinge loss for ``finetune_epochs``; freeze_features restricts the
    second phase to the classifier.  Batches are drawn from a seeded
    shuffle each epoch.  On divergence the last finite epoch's parameters
    are restored and the result is flagged.
    """
    x, y = _check_training_inputs(instances, labels)
    rng = np.random.Generator(np.random.PCG64(derive_seed(schedule.seed, "batch-shuffle")))
    all_params = {name for name, _, _ in model.named_params()}
    curve = []
    boundaries = {}
    diverged = False

    def phase(loss_name, epochs, trainable):
        nonlocal diverged
        start = len(curve)
        ok = _run_phase(model, x, y, loss_name, epochs, schedule, rng, curve, trainable)
        boundaries[loss_name] = (start, len(curve))
        diverged = diverged or not ok
        return ok

    if schedule.phase == "logistic-pretrain":
        phase("logistic", schedule.epochs, all_params)
    elif schedule.phase == "hinge-finetune":
        phase("hinge", schedule.epochs, all_params)
    else:
        if phase("logistic", schedule.epochs, all_params):
            classifier = model.classifier_layer()
            if schedule.reinit_classifier:
                classifier.reinit(derive_seed(schedule.seed, f"{classifier.name}.reinit"))
            for _, _, vel in model.named_params():
                vel[:] = 0.0  # momentum restarts with the new objective
            trainable = all_params if not schedule.freeze_features else {
                f"{classifier.name}.{p}" for p, _, _ in classifier.param_items()
            }
            phase("hinge", schedule.finetune_epochs, trainable)

    return TrainResult(model=model, loss_curve=curve,
                       phase_boundaries=boundaries, diverged=diverged)
