"""Evaluation metrics for long-tailed decisions.

Covers region-wise accuracy, the false head rate (share of tail-labeled
samples decided as head), predictive entropy, ranking AUC of uncertainty
against misclassification, and binned expected calibration error.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import RegionPartition, TailSplit
from .errors import InputError


@dataclass(frozen=True)
class RegionAccuracy:
    overall: float
    head: float | None
    med: float | None
    tail: float | None


def _acc(mask, correct):
    if not mask.any():
        return None
    return float(correct[mask].mean())


def region_accuracy(
    labels: np.ndarray, decisions: np.ndarray, partition: RegionPartition
) -> RegionAccuracy:
    labels = np.asarray(labels)
    decisions = np.asarray(decisions)
    if labels.shape != decisions.shape or labels.ndim != 1 or labels.size == 0:
        raise InputError("labels and decisions must be aligned non-empty vectors")
    correct = labels == decisions
    return RegionAccuracy(
        overall=float(correct.mean()),
        head=_acc(np.isin(labels, partition.head), correct),
        med=_acc(np.isin(labels, partition.med), correct),
        tail=_acc(np.isin(labels, partition.tail), correct),
    )


def false_head_rate(labels: np.ndarray, decisions: np.ndarray, tail: TailSplit) -> float:
    """Share of tail-labeled samples whose decision landed in the head."""
    labels = np.asarray(labels)
    decisions = np.asarray(decisions)
    if labels.shape != decisions.shape or labels.ndim != 1:
        raise InputError("labels and decisions must be aligned vectors")
    tail_mask = tail.tail_mask()
    is_tail_label = tail_mask[labels]
    if not is_tail_label.any():
        warnings.warn("no tail-labeled samples; false head rate is 0", stacklevel=2)
        return 0.0
    decided_head = ~tail_mask[decisions]
    return float(np.mean(decided_head[is_tail_label]))


def predictive_entropy(probs: np.ndarray) -> np.ndarray | float:
    """-sum p log p over the last axis, with 0 log 0 = 0."""
    probs = np.asarray(probs, dtype=np.float64)
    terms = np.where(probs > 0, probs * np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    out = -terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    sorter = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    sorted_vals = values[sorter]
    i = 0
    while i < sorted_vals.shape[0]:
        j = i
        while j + 1 < sorted_vals.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[sorter[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc_misclassification(uncertainty: np.ndarray, correct: np.ndarray) -> float | None:
    """Rank AUC of uncertainty as a detector of incorrect predictions.

    Ties count half. Returns None when the split is degenerate (all correct
    or all incorrect), where the ranking problem does not exist.
    """
    uncertainty = np.asarray(uncertainty, dtype=np.float64)
    correct = np.asarray(correct, dtype=bool)
    if uncertainty.shape != correct.shape or uncertainty.ndim != 1:
        raise InputError("uncertainty and correctness must be aligned vectors")
    n_pos = int((~correct).sum())  # positives = misclassified
    n_neg = int(correct.sum())
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(uncertainty)
    pos_rank_sum = ranks[~correct].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def expected_calibration_error(
    confidence: np.ndarray, correct: np.ndarray, bins: int = 15
) -> float:
    """Equal-width bins on (0, 1], right-closed; weighted |accuracy - confidence|."""
    confidence = np.asarray(confidence, dtype=np.float64)
    correct = np.asarray(correct, dtype=bool)
    if confidence.shape != correct.shape or confidence.ndim != 1 or confidence.size == 0:
        raise InputError("confidence and correctness must be aligned non-empty vectors")
    if bins < 1:
        raise InputError(f"need at least one bin, got {bins}")
    if confidence.min() < 0.0 or confidence.max() > 1.0:
        raise InputError("confidences must lie in [0, 1]")
    idx = np.clip(np.ceil(confidence * bins).astype(np.int64) - 1, 0, bins - 1)
    total = confidence.shape[0]
    ece = 0.0
    for b in range(bins):
        mask = idx == b
        if not mask.any():
            continue
        gap = abs(float(correct[mask].mean()) - float(confidence[mask].mean()))
        ece += (mask.sum() / total) * gap
    return float(ece)


@dataclass
class MetricsReport:
    acc_overall: float
    acc_head: float | None
    acc_med: float | None
    acc_tail: float | None
    fhr: dict[float, float]  # tail ratio -> false head rate
    fhr_avg: float
    auc: float | None
    ece: float
    n_test: int
    param_distance: float | None = None
    disagreement: float | None = None

    SCALAR_FIELDS = (
        "acc_overall",
        "acc_head",
        "acc_med",
        "acc_tail",
        "fhr_avg",
        "auc",
        "ece",
        "param_distance",
        "disagreement",
    )


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "acc_overall": report.acc_overall,
        "acc_head": report.acc_head,
        "acc_med": report.acc_med,
        "acc_tail": report.acc_tail,
        "fhr": {str(r): v for r, v in sorted(report.fhr.items())},
        "fhr_avg": report.fhr_avg,
        "auc": report.auc,
        "ece": report.ece,
        "n_test": report.n_test,
        "param_distance": report.param_distance,
        "disagreement": report.disagreement,
    }


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"


def report_from_json(text: str) -> MetricsReport:
    raw = json.loads(text)
    return MetricsReport(
        acc_overall=raw["acc_overall"],
        acc_head=raw["acc_head"],
        acc_med=raw["acc_med"],
        acc_tail=raw["acc_tail"],
        fhr={float(r): v for r, v in raw["fhr"].items()},
        fhr_avg=raw["fhr_avg"],
        auc=raw["auc"],
        ece=raw["ece"],
        n_test=raw["n_test"],
        param_distance=raw.get("param_distance"),
        disagreement=raw.get("disagreement"),
    )


def write_summary_csv(rows: list[dict], path) -> None:
    """Multi-run summary table; column order follows the first row's keys."""
    if not rows:
        raise InputError("nothing to summarize")
    header = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            if list(row.keys()) != header:
                raise InputError("summary rows must share one column layout")
            writer.writerow(["" if row[k] is None else row[k] for k in header])
