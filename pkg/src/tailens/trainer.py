"""SGD training loop for particle ensembles, evaluation, and repeated runs.

Everything is deterministic given the config: particle inits come from
per-particle seed streams, epoch shuffles from a stream keyed by
(seed, epoch), and the loop touches no other randomness.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import LongTailDataset, TailSplit, region_partition
from .decision import decide_batch
from .ensemble import (
    ParticleEnsemble,
    diversity_diagnostics,
    save_checkpoint,
)
from .errors import InputError, NumericError
from .metrics import (
    MetricsReport,
    auc_misclassification,
    expected_calibration_error,
    false_head_rate,
    predictive_entropy,
    region_accuracy,
)
from .numcore import NetShape, init_params
from .objective import LossBreakdown, batch_loss
from .rebalance import DiscrepancySpec, class_weights
from .utility import UtilityMatrix

# domain separation tags so init and shuffle streams differ at equal seeds
_INIT_STREAM = 11
_SHUFFLE_STREAM = 7

DEFAULT_TAIL_RATIOS = (0.25, 0.5, 0.75)
DIAGNOSTIC_SAMPLES = 256


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 600
    batch_size: int = 128
    learning_rate: float = 0.02
    momentum: float = 0.9
    weight_decay: float = 1e-2
    anneal_stride: float = 40.0
    utility_scale: float = 1.0
    n_particles: int = 3
    var_floor: float = 1e-8
    seed: int = 0
    ratio: DiscrepancySpec = field(default_factory=DiscrepancySpec)
    repulsion: bool = True
    hidden_dims: tuple[int, ...] = (32,)
    particle_seeds: tuple[int, ...] | None = None
    checkpoint_every: int = 0
    lr_decay_epochs: tuple[int, ...] = ()
    lr_decay_factor: float = 0.1

    def __post_init__(self):
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise InputError(f"batch size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise InputError(f"learning rate must be >= 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise InputError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise InputError(f"weight decay must be >= 0, got {self.weight_decay}")
        if self.anneal_stride <= 0:
            raise InputError(f"anneal stride must be > 0, got {self.anneal_stride}")
        if self.utility_scale <= 0:
            raise InputError(f"utility scale must be > 0, got {self.utility_scale}")
        if self.n_particles < 1:
            raise InputError(f"need at least one particle, got {self.n_particles}")
        if self.var_floor <= 0:
            raise InputError(f"variance floor must be > 0, got {self.var_floor}")
        if self.seed < 0:
            raise InputError(f"seed must be >= 0, got {self.seed}")
        if self.particle_seeds is not None and len(self.particle_seeds) != self.n_particles:
            raise InputError(
                f"got {len(self.particle_seeds)} particle seeds for"
                f" {self.n_particles} particles"
            )
        if self.checkpoint_every < 0:
            raise InputError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if any(e < 1 for e in self.lr_decay_epochs):
            raise InputError("lr decay epochs must all be >= 1")
        if not 0.0 < self.lr_decay_factor <= 1.0:
            raise InputError(
                f"lr decay factor must be in (0, 1], got {self.lr_decay_factor}"
            )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: LossBreakdown  # means over the epoch's batches
    anneal: float
    param_distance: float
    disagreement: float


def anneal_weight(epoch: int, stride: float) -> float:
    """exp(-epoch/stride): 1 at epoch 0, decaying by the stride."""
    if epoch < 0:
        raise InputError(f"epoch must be >= 0, got {epoch}")
    if stride <= 0:
        raise InputError(f"stride must be > 0, got {stride}")
    return float(np.exp(-epoch / stride))


def default_particle_seeds(seed: int, n_particles: int) -> tuple[int, ...]:
    state = np.random.SeedSequence((seed, _INIT_STREAM)).generate_state(n_particles)
    return tuple(int(s) for s in state)


def _init_particles(config: TrainConfig, shape: NetShape) -> np.ndarray:
    seeds = config.particle_seeds or default_particle_seeds(config.seed, config.n_particles)
    particles = [
        init_params(shape, np.random.default_rng(np.random.SeedSequence((s, _INIT_STREAM))))
        for s in seeds
    ]
    return np.stack(particles)


def train(
    config: TrainConfig,
    train_data: LongTailDataset,
    utility: UtilityMatrix,
    out_dir=None,
) -> tuple[ParticleEnsemble, list[EpochRecord]]:
    """Train an ensemble; returns it with one record per epoch."""
    k = train_data.num_classes
    if utility.num_classes != k:
        raise InputError(
            f"utility matrix is over {utility.num_classes} classes, data has {k}"
        )
    missing = np.flatnonzero(train_data.class_counts < 1)
    if missing.size:
        raise InputError(f"classes without training samples: {missing.tolist()}")
    if k < 2:
        raise InputError("training needs at least 2 classes")

    weights = class_weights(config.ratio, train_data.class_counts)
    shape = NetShape(train_data.dim, config.hidden_dims, k)
    ens = ParticleEnsemble(shape=shape, particles=_init_particles(config, shape))
    velocity = np.zeros_like(ens.particles)

    features = train_data.features
    labels = train_data.labels
    n = len(train_data)
    diag_x = features[: min(n, DIAGNOSTIC_SAMPLES)]

    records = []
    lr = config.learning_rate
    for epoch in range(config.epochs):
        if epoch in config.lr_decay_epochs:
            lr *= config.lr_decay_factor
        anneal = anneal_weight(epoch, config.anneal_stride) if config.repulsion else 0.0
        shuffle_rng = np.random.default_rng(
            np.random.SeedSequence((config.seed, _SHUFFLE_STREAM, epoch))
        )
        perm = shuffle_rng.permutation(n)

        sums = np.zeros(5)
        n_batches = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            try:
                breakdown, grads = batch_loss(
                    ens,
                    features[idx],
                    labels[idx],
                    weights,
                    utility,
                    utility_scale=config.utility_scale,
                    weight_decay=config.weight_decay,
                    anneal=anneal,
                    var_floor=config.var_floor,
                )
            except NumericError as err:
                raise NumericError(f"epoch {epoch}, batch {n_batches}: {err}") from err
            velocity *= config.momentum
            # batch_loss averages over particles; stepping on M*grad gives each
            # particle the full-strength gradient of its own loss, so particles
            # never interact unless the spread bonus couples them
            velocity += ens.n_particles * grads
            ens.particles -= lr * velocity
            sums += (
                breakdown.nll_term,
                breakdown.utility_term,
                breakdown.reg_l2,
                breakdown.reg_entropy,
                breakdown.total,
            )
            n_batches += 1

        means = sums / n_batches
        diag = diversity_diagnostics(ens, diag_x)
        records.append(
            EpochRecord(
                epoch=epoch,
                loss=LossBreakdown(*means),
                anneal=anneal,
                param_distance=diag.param_distance,
                disagreement=diag.disagreement,
            )
        )
        if (
            out_dir is not None
            and config.checkpoint_every
            and (epoch + 1) % config.checkpoint_every == 0
        ):
            save_checkpoint(ens, f"{out_dir}/checkpoint_epoch{epoch:04d}.ckpt")

    return ens, records


def write_train_log(records: list[EpochRecord], path) -> None:
    """One JSON object per line, one line per epoch."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "epoch": rec.epoch,
                        "nll": rec.loss.nll_term,
                        "utility": rec.loss.utility_term,
                        "reg_l2": rec.loss.reg_l2,
                        "reg_entropy": rec.loss.reg_entropy,
                        "total": rec.loss.total,
                        "anneal": rec.anneal,
                        "param_distance": rec.param_distance,
                        "disagreement": rec.disagreement,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def evaluate(
    ens: ParticleEnsemble,
    test_data: LongTailDataset,
    utility: UtilityMatrix,
    tail_ratios: tuple[float, ...] = DEFAULT_TAIL_RATIOS,
    ece_bins: int = 15,
) -> MetricsReport:
    """Decide the test set and compute the full metrics report."""
    if not tail_ratios:
        raise InputError("need at least one tail ratio")
    k = test_data.num_classes
    batch = decide_batch(ens, utility, test_data.features)
    labels = test_data.labels
    correct = batch.decisions == labels

    acc = region_accuracy(labels, batch.decisions, region_partition(k))
    fhr = {
        float(r): false_head_rate(labels, batch.decisions, TailSplit(k, float(r)))
        for r in tail_ratios
    }
    entropy = predictive_entropy(batch.mixture)
    confidence = batch.mixture[np.arange(len(batch)), batch.decisions]
    diag = diversity_diagnostics(ens, test_data.features)
    return MetricsReport(
        acc_overall=acc.overall,
        acc_head=acc.head,
        acc_med=acc.med,
        acc_tail=acc.tail,
        fhr=fhr,
        fhr_avg=float(np.mean(list(fhr.values()))),
        auc=auc_misclassification(entropy, correct),
        ece=expected_calibration_error(confidence, correct, ece_bins),
        n_test=len(test_data),
        param_distance=diag.param_distance,
        disagreement=diag.disagreement,
    )


@dataclass(frozen=True)
class RunSummary:
    reports: list[MetricsReport]
    mean: dict[str, float]
    std: dict[str, float]


def repeat_runs(
    config: TrainConfig,
    n_runs: int,
    data_fn,
    utility_fn,
    tail_ratios: tuple[float, ...] = DEFAULT_TAIL_RATIOS,
    ece_bins: int = 15,
) -> RunSummary:
    """Train and evaluate with seeds seed..seed+n_runs-1; aggregate mean and std.

    data_fn(seed) supplies the (train, test) pair for a run; utility_fn(K)
    builds the utility matrix once the class count is known.
    """
    if n_runs < 1:
        raise InputError(f"need at least one run, got {n_runs}")
    reports = []
    for r in range(n_runs):
        seed = config.seed + r
        run_config = replace(config, seed=seed, particle_seeds=None)
        train_data, test_data = data_fn(seed)
        utility = utility_fn(train_data.num_classes)
        ens, _ = train(run_config, train_data, utility)
        reports.append(evaluate(ens, test_data, utility, tail_ratios, ece_bins))

    mean, std = {}, {}
    for name in MetricsReport.SCALAR_FIELDS:
        values = [getattr(rep, name) for rep in reports]
        values = [v for v in values if v is not None]
        if values:
            mean[name] = float(np.mean(values))
            std[name] = float(np.std(values))
    for ratio in sorted(reports[0].fhr):
        values = [rep.fhr[ratio] for rep in reports]
        mean[f"fhr@{ratio}"] = float(np.mean(values))
        std[f"fhr@{ratio}"] = float(np.std(values))
    return RunSummary(reports=reports, mean=mean, std=std)
