"""Binary classification metrics and per-version pair evaluation.

Every ratio with a zero denominator is defined as 0 so that degenerate
confusion matrices never raise; MCC is 0 whenever any factor under its
root is 0. AUC is the rank-based Mann-Whitney statistic with midranks
for tied scores; when the actual labels contain only one class it is
undefined and reported as 0.5 together with a degenerate flag.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .tree import DecisionTree, predict_proba
from .treatments import TreatedPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class CoreScores(NamedTuple):
    precision: float
    recall: float
    fscore: float
    gmeasure: float
    mcc: float


@dataclass(frozen=True)
class ScoreSet:
    """The six per-version performance numbers."""

    precision: float
    recall: float
    fscore: float
    gmeasure: float
    mcc: float
    auc: float


@dataclass(frozen=True)
class VersionScore:
    project_id: str
    version_id: str
    cm: ConfusionMatrix
    scores: ScoreSet
    auc_degenerate: bool


def confusion(predicted: Sequence[bool], actual: Sequence[bool]) -> ConfusionMatrix:
    if len(predicted) != len(actual):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions, {len(actual)} labels")
    if len(predicted) == 0:
        raise ValueError("cannot build a confusion matrix from zero instances")
    tp = fp = tn = fn = 0
    for p, a in zip(predicted, actual):
        if p and a:
            tp += 1
        elif p and not a:
            fp += 1
        elif not p and not a:
            tn += 1
        else:
            fn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: float, den: float) -> float:
    return num / den if den != 0 else 0.0


def scores(cm: ConfusionMatrix) -> CoreScores:
    """Precision, recall, F-score, G-measure and MCC of a confusion matrix."""
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    fscore = _ratio(2.0 * precision * recall, precision + recall)
    pf = _ratio(cm.fp, cm.tn + cm.fp)
    gmeasure = _ratio(2.0 * recall * (1.0 - pf), recall + (1.0 - pf))
    denom = ((cm.tp + cm.fp) * (cm.tp + cm.fn)
             * (cm.tn + cm.fp) * (cm.tn + cm.fn))
    if denom == 0:
        mcc = 0.0
    else:
        mcc = (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(denom)
    return CoreScores(precision=precision, recall=recall, fscore=fscore,
                      gmeasure=gmeasure, mcc=mcc)


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their rank range."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v), dtype=np.float64)
    sv = v[order]
    i = 0
    n = len(v)
    while i < n:
        j = i
        while j + 1 < n and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(score_values: Sequence[float], actual: Sequence[bool]) -> float:
    """Probability a defective instance outranks a clean one; ties count half.

    Single-class inputs make the statistic undefined; the sentinel 0.5
    is returned and the caller records the degenerate flag.
    """
    labels = np.asarray(actual, dtype=bool)
    if len(score_values) != len(labels):
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = midranks(score_values)
    pos_rank_sum = float(ranks[labels].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate_pair(tree: DecisionTree, treated: TreatedPair,
                  threshold: float = 0.5) -> list[VersionScore]:
    """Score the model separately on every test project version.

    Rows are grouped by their (project, version) tag; each group yields
    one VersionScore. Groups that lost all instances are skipped with a
    warning rather than scored.
    """
    by_version: dict[tuple[str, str], list[int]] = {}
    for i, key in enumerate(treated.test_version_keys):
        by_version.setdefault(key, []).append(i)

    out = []
    for (project, version), idx in by_version.items():
        if not idx:
            logger.warning("no test instances left for %s/%s; skipped",
                           project, version)
            continue
        rows = treated.test_features[idx]
        actual = treated.test_labels[idx]
        probas = [predict_proba(tree, row) for row in rows]
        predicted = [p >= threshold for p in probas]
        cm = confusion(predicted, actual)
        core = scores(cm)
        area = auc(probas, actual)
        degenerate = not (actual.any() and not actual.all())
        out.append(VersionScore(
            project_id=project, version_id=version, cm=cm,
            scores=ScoreSet(precision=core.precision, recall=core.recall,
                            fscore=core.fscore, gmeasure=core.gmeasure,
                            mcc=core.mcc, auc=area),
            auc_degenerate=degenerate))
    return out
