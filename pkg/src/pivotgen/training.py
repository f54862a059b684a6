"""Shared optimization machinery for both stages.

Adam with bias correction, global-norm gradient clipping, an
early-stopping schedule (halve the learning rate after 3 epochs without
validation improvement, stop after 4), and homogeneous-batch mixing of
parallel and pseudo data. Every source of randomness derives from the
plan seed, so a full run is reproducible checkpoint-for-checkpoint.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import bleu4
from .nn import ParamSet, global_grad_norm
from .noise import NoiseConfig, augment_batch
from .tagger import TaggerModel, evaluate_prf

logger = logging.getLogger(__name__)


@dataclass
class OptimizerConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    batch_size: int = 64

    def __post_init__(self):
        if min(self.learning_rate, self.beta1, self.beta2, self.epsilon) <= 0:
            raise ValueError("optimizer hyperparameters must be positive")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def clip_gradients(params: ParamSet, max_norm: float = 5.0) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    norm = global_grad_norm(params)
    if norm > max_norm:
        scale = max_norm / norm
        for tensor in params.tensors():
            if tensor.grad is not None:
                tensor.grad *= scale
    return norm


class Adam:
    """Standard Adam over a ParamSet; callers clip before stepping."""

    def __init__(self, params: ParamSet, config: OptimizerConfig):
        self.params = params
        self.config = config
        self.t = 0
        self.m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self, lr: float | None = None, batch_id: str = "?") -> bool:
        """One update; aborts (no change, not counted) on non-finite grads."""
        cfg = self.config
        lr = cfg.learning_rate if lr is None else lr
        for name, tensor in self.params.items():
            if tensor.grad is not None and not np.isfinite(tensor.grad).all():
                logger.warning("non-finite gradient in %s at batch %s; step aborted", name, batch_id)
                return False
        self.t += 1
        bias1 = 1.0 - cfg.beta1**self.t
        bias2 = 1.0 - cfg.beta2**self.t
        for name, tensor in self.params.items():
            grad = tensor.grad
            if grad is None:
                grad = np.zeros_like(tensor.data)
            m = self.m[name]
            v = self.v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * grad
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * grad * grad
            update = (m / bias1) / (np.sqrt(v / bias2) + cfg.epsilon)
            tensor.data = tensor.data - lr * update.astype(tensor.data.dtype)
        return True


@dataclass
class ScheduleState:
    lr: float
    best_score: float = -math.inf
    epochs_since_improvement: int = 0
    epoch: int = 0


def epoch_end(score: float, state: ScheduleState) -> str:
    """Patience rules: halve lr at 3 non-improving epochs, stop at 4."""
    if not math.isfinite(score):
        raise ValueError(f"validation score must be finite, got {score}")
    state.epoch += 1
    if score > state.best_score:
        state.best_score = score
        state.epochs_since_improvement = 0
        return "continue"
    state.epochs_since_improvement += 1
    if state.epochs_since_improvement >= 4:
        return "stop"
    if state.epochs_since_improvement == 3:
        state.lr /= 2.0
        return "halve_lr"
    return "continue"


def _cycling_batches(items, batch_size: int, rng: np.random.Generator):
    while True:
        order = rng.permutation(len(items))
        for start in range(0, len(items), batch_size):
            yield [items[i] for i in order[start : start + batch_size]]


def mix_batches(parallel, pseudo, ratio: float, rng: np.random.Generator,
                batch_size: int = 64, n_batches: int | None = None):
    """Stream of homogeneous ('parallel'|'pseudo', batch) draws.

    Each batch comes from the parallel set with probability ``ratio``;
    within a source, batches cycle through reshuffled epochs.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    if ratio < 1.0 and not pseudo:
        raise ValueError("pseudo set is empty but ratio < 1 requests pseudo batches")
    if ratio > 0.0 and not parallel:
        raise ValueError("parallel set is empty but ratio > 0 requests parallel batches")
    par_stream = _cycling_batches(parallel, batch_size, rng) if parallel else None
    pse_stream = _cycling_batches(pseudo, batch_size, rng) if pseudo else None
    produced = 0
    while n_batches is None or produced < n_batches:
        if rng.random() < ratio:
            yield "parallel", next(par_stream)
        else:
            yield "pseudo", next(pse_stream)
        produced += 1


@dataclass
class TrainPlan:
    stage: str  # "tagger" or "realizer"
    seed: int = 0
    max_epochs: int = 30
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    noise: NoiseConfig | None = None
    mixing: str = "pretrain_finetune"  # or "joint"
    mix_ratio: float = 0.5
    valid_cap: int = 200
    pseudo_valid_fraction: float = 0.05
    early_stopping: bool = True  # False: fixed-length run, lr never halved
    min_epochs: int = 0  # patience bookkeeping starts after this many epochs
    stop_at_score: float | None = None  # end a phase once validation reaches this

    def __post_init__(self):
        if self.stage not in ("tagger", "realizer"):
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.mixing not in ("pretrain_finetune", "joint"):
            raise ValueError(f"unknown mixing mode {self.mixing!r}")
        if not 0.0 <= self.mix_ratio <= 1.0:
            raise ValueError("mix_ratio must be in [0, 1]")


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    valid_score: float
    lr: float
    decision: str

    def tsv_line(self) -> str:
        return (
            f"{self.epoch}\t{self.train_loss:.6f}\t{self.valid_score:.6f}"
            f"\t{self.lr:.6g}\t{self.decision}"
        )


@dataclass
class TrainResult:
    best_score: float
    best_epoch: int
    log: list[EpochLog]


def write_log(log: list[EpochLog], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch\ttrain_loss\tvalid_score\tlr\tdecision\n")
        for row in log:
            fh.write(row.tsv_line() + "\n")


def _run_phase(params: ParamSet, plan: TrainPlan, phase_seed: int, epoch_batches,
               batch_loss, validate, epoch_offset: int = 0,
               max_epochs: int | None = None) -> tuple[TrainResult, dict]:
    """Generic epoch loop; returns the result and the best parameter state."""
    optimizer = Adam(params, plan.optimizer)
    sched = ScheduleState(lr=plan.optimizer.learning_rate)
    best_state = params.state_arrays()
    best_score = -math.inf
    best_epoch = 0
    rows: list[EpochLog] = []
    max_epochs = plan.max_epochs if max_epochs is None else max_epochs
    for epoch in range(1, max_epochs + 1):
        rng = np.random.default_rng([plan.seed, phase_seed, epoch])
        losses = []
        for i, batch in enumerate(epoch_batches(rng)):
            params.zero_grad()
            loss = batch_loss(batch, rng)
            loss.backward()
            clip_gradients(params, plan.optimizer.clip_norm)
            optimizer.step(sched.lr, batch_id=f"epoch{epoch}-batch{i}")
            losses.append(float(loss.data))
        score = validate()
        if score > best_score:
            best_score = score
            best_epoch = epoch
            best_state = params.state_arrays()
        if plan.early_stopping and epoch > plan.min_epochs:
            decision = epoch_end(score, sched)
        else:
            decision = "continue"
            sched.epoch += 1
            sched.best_score = max(sched.best_score, score)
        rows.append(EpochLog(epoch_offset + epoch, float(np.mean(losses)), score,
                             sched.lr, decision))
        if plan.stop_at_score is not None and score >= plan.stop_at_score:
            break
        if decision == "stop":
            break
    params.load_state(best_state)
    return TrainResult(best_score, best_epoch, rows), best_state


def train_tagger(model: TaggerModel, train_data, valid_data, plan: TrainPlan,
                 log_path=None) -> TrainResult:
    """Fit the tagger on (LinearizedTable, labels) pairs; F1 early stopping."""
    if plan.stage != "tagger":
        raise ValueError("plan.stage must be 'tagger'")
    batch_size = plan.optimizer.batch_size

    def epoch_batches(rng):
        order = rng.permutation(len(train_data))
        for start in range(0, len(train_data), batch_size):
            yield [train_data[i] for i in order[start : start + batch_size]]

    def batch_loss(batch, rng):
        tables = [t for t, _ in batch]
        labels = [l for _, l in batch]
        return model.loss(tables, labels, training=True, rng=rng)

    def validate():
        predicted = []
        gold = []
        for start in range(0, len(valid_data), batch_size):
            chunk = valid_data[start : start + batch_size]
            for pred, (_, labels) in zip(model.predict_batch([t for t, _ in chunk]), chunk):
                predicted.append(pred.labels)
                gold.append(labels)
        _, _, f1 = evaluate_prf(predicted, gold)
        return f1

    result, _ = _run_phase(model.params, plan, phase_seed=1,
                           epoch_batches=epoch_batches, batch_loss=batch_loss,
                           validate=validate)
    if log_path:
        write_log(result.log, log_path)
    return result


def _realizer_validate(model, valid_pairs, cap: int):
    pairs = valid_pairs[:cap]
    if not pairs:
        return lambda: 0.0

    def validate():
        hyps = []
        refs = []
        for start in range(0, len(pairs), 64):
            chunk = pairs[start : start + 64]
            for result, (_, target) in zip(model.greedy_decode([s for s, _ in chunk]), chunk):
                hyps.append(result.tokens)
                refs.append(target)
        # smoothed so tiny validation sets still rank checkpoints
        return bleu4(hyps, refs, smooth=True)

    return validate


def _noise_for(plan: TrainPlan, kind: str, donors) -> NoiseConfig | None:
    if plan.noise is None or not plan.noise.applies(kind):
        return None
    if plan.noise.p_drop == 0.0 and plan.noise.p_insert == 0.0:
        return None
    return NoiseConfig(
        p_drop=plan.noise.p_drop,
        p_insert=plan.noise.p_insert,
        seed=plan.noise.seed,
        apply_to=plan.noise.apply_to,
        donors=donors,
    )


def train_realizer(model, parallel_pairs, valid_pairs, plan: TrainPlan,
                   pseudo_pairs=None, log_path=None) -> TrainResult:
    """Fit a realizer on (source tokens, target tokens) pairs.

    Default schedule pretrains on pseudo pairs to convergence, then
    fine-tunes on the parallel pairs; ``plan.mixing='joint'`` instead
    interleaves homogeneous batches at ``plan.mix_ratio``. Validation is
    smoothed corpus BLEU of greedy decodes.
    """
    if plan.stage != "realizer":
        raise ValueError("plan.stage must be 'realizer'")
    pseudo_pairs = pseudo_pairs or []
    batch_size = plan.optimizer.batch_size
    rows: list[EpochLog] = []

    def batch_loss_with(noise_cfg):
        def batch_loss(batch, rng):
            if noise_cfg is not None:
                batch = augment_batch(batch, noise_cfg, rng)
            return model.sequence_loss([s for s, _ in batch], [t for _, t in batch],
                                       training=True, rng=rng)
        return batch_loss

    def plain_epoch_batches(data):
        def epoch_batches(rng):
            order = rng.permutation(len(data))
            for start in range(0, len(data), batch_size):
                yield [data[i] for i in order[start : start + batch_size]]
        return epoch_batches

    best_score = 0.0
    epoch_offset = 0

    if plan.mixing == "joint" and pseudo_pairs:
        par_noise = _noise_for(plan, "parallel", [s for s, _ in parallel_pairs])
        pse_noise = _noise_for(plan, "pseudo", [s for s, _ in pseudo_pairs])
        per_epoch = max(1, math.ceil((len(parallel_pairs) + len(pseudo_pairs)) / batch_size))

        def epoch_batches(rng):
            stream = mix_batches(parallel_pairs, pseudo_pairs, plan.mix_ratio, rng,
                                 batch_size, n_batches=per_epoch)
            for kind, batch in stream:
                yield kind, batch

        def batch_loss(kind_batch, rng):
            kind, batch = kind_batch
            cfg = par_noise if kind == "parallel" else pse_noise
            return batch_loss_with(cfg)(batch, rng)

        result, _ = _run_phase(model.params, plan, phase_seed=3,
                               epoch_batches=epoch_batches, batch_loss=batch_loss,
                               validate=_realizer_validate(model, valid_pairs, plan.valid_cap))
        rows.extend(result.log)
        best_score = result.best_score
        if log_path:
            write_log(rows, log_path)
        return TrainResult(best_score, result.best_epoch, rows)

    if pseudo_pairs:
        # deterministic pretraining split: small held-out slice ranks epochs
        split_rng = np.random.default_rng([plan.seed, 17])
        order = split_rng.permutation(len(pseudo_pairs))
        n_valid = min(max(1, int(len(pseudo_pairs) * plan.pseudo_valid_fraction)),
                      plan.valid_cap)
        pre_valid = [pseudo_pairs[i] for i in order[:n_valid]]
        pre_train = [pseudo_pairs[i] for i in order[n_valid:]] or pre_valid
        noise_cfg = _noise_for(plan, "pseudo", [s for s, _ in pre_train])
        result, _ = _run_phase(model.params, plan, phase_seed=2,
                               epoch_batches=plain_epoch_batches(pre_train),
                               batch_loss=batch_loss_with(noise_cfg),
                               validate=_realizer_validate(model, pre_valid, plan.valid_cap))
        rows.extend(result.log)
        epoch_offset = result.log[-1].epoch if result.log else 0

    if parallel_pairs:
        noise_cfg = _noise_for(plan, "parallel", [s for s, _ in parallel_pairs])
        result, _ = _run_phase(model.params, plan, phase_seed=4,
                               epoch_batches=plain_epoch_batches(parallel_pairs),
                               batch_loss=batch_loss_with(noise_cfg),
                               validate=_realizer_validate(model, valid_pairs, plan.valid_cap),
                               epoch_offset=epoch_offset)
        rows.extend(result.log)
        best_score = result.best_score
        best_epoch = result.best_epoch
    else:
        best_epoch = rows[-1].epoch if rows else 0
        best_score = rows[-1].valid_score if rows else 0.0

    if log_path:
        write_log(rows, log_path)
    return TrainResult(best_score, best_epoch, rows)
