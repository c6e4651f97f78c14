"""Conclusion-stability statistics, significance tests, and ranking.

Aggregation reports per-group mean and sample standard deviation
(n - 1 divisor) of F-score, AUC, MCC and G-measure; a group counts as
stable when its standard deviation stays below a threshold (default
0.05). Rows whose AUC was degenerate are excluded from AUC aggregation
only, and the exclusion is counted.

The rank-sum test enumerates the exact null distribution for small
samples and falls back to the tie-corrected normal approximation with
continuity correction otherwise. Effect sizes use Cliff's delta with
the conventional magnitude thresholds (negligible up to 0.147, small up
to 0.33, medium up to 0.474, large beyond).
"""

from __future__ import annotations

import bisect
import dataclasses
import math
import random
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Mapping, Sequence

import numpy as np

from .errors import BalancingError, ConfigError
from .metrics import ConfusionMatrix, ScoreSet, midranks
from .treatments import TreatedPair

RANK_METRICS = ("fscore", "auc", "mcc", "gmeasure")
STABILITY_THRESHOLD = 0.05

MAGNITUDE_LEVELS = (0.147, 0.33, 0.474)
MAGNITUDE_NAMES = ("negligible", "small", "medium", "large")


@dataclass(frozen=True)
class ResultRecord:
    """One row of experiment output: a technique scored on one version."""

    technique: str
    kind: str
    window_k: int | None
    split_index: int
    gap: int
    test_project: str
    test_version: str
    cm: ConfusionMatrix
    scores: ScoreSet
    auc_degenerate: bool


@dataclass(frozen=True)
class StabilityRow:
    technique: str
    kind: str
    window_k: int | None
    metric: str
    n: int
    excluded: int
    mean: float | None
    sd: float | None
    stable: bool | None
    single: bool


@dataclass(frozen=True)
class RankRow:
    technique: str
    rankscores: tuple[float, ...]
    mean_rank_score: float
    rank: int


def _metric_values(records: Sequence[ResultRecord], metric: str) -> tuple[list[float], int]:
    """Values of one metric, AUC filtered of degenerate rows; returns (values, excluded)."""
    if metric == "auc":
        vals = [r.scores.auc for r in records if not r.auc_degenerate]
        return vals, len(records) - len(vals)
    return [getattr(r.scores, metric) for r in records], 0


def _mean_sd(values: Sequence[float]) -> tuple[float, float, bool]:
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0, True
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var), False


def aggregate(records: Sequence[ResultRecord],
              by_window: bool = False,
              threshold: float = STABILITY_THRESHOLD) -> list[StabilityRow]:
    """Mean/SD stability rows grouped by (technique, kind[, window]).

    Groups follow first appearance order in the input. Single-value
    groups report SD 0 and are flagged. Groups whose AUC values were all
    degenerate report no AUC mean at all.
    """
    groups: dict[tuple, list[ResultRecord]] = {}
    for r in records:
        key = (r.technique, r.kind, r.window_k) if by_window else (r.technique, r.kind)
        groups.setdefault(key, []).append(r)

    rows = []
    for key, group in groups.items():
        window = key[2] if by_window else None
        for metric in RANK_METRICS:
            values, excluded = _metric_values(group, metric)
            if not values:
                rows.append(StabilityRow(
                    technique=key[0], kind=key[1], window_k=window,
                    metric=metric, n=0, excluded=excluded,
                    mean=None, sd=None, stable=None, single=False))
                continue
            mean, sd, single = _mean_sd(values)
            rows.append(StabilityRow(
                technique=key[0], kind=key[1], window_k=window,
                metric=metric, n=len(values), excluded=excluded,
                mean=mean, sd=sd, stable=sd < threshold, single=single))
    return rows


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float],
                      exact_limit: int = 10) -> float:
    """Two-sided rank-sum test p-value.

    Both samples at most exact_limit long: the rank-sum null
    distribution is enumerated exactly over all assignments of the
    pooled values (midranks fixed, so ties are handled). Larger samples
    use the normal approximation with tie correction and a 0.5
    continuity correction. Two identical samples give p = 1.0.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    pooled = a + b
    if max(pooled) == min(pooled):
        return 1.0
    n_a, n_b = len(a), len(b)
    n = n_a + n_b
    ranks = midranks(pooled)
    w_obs = float(ranks[:n_a].sum())

    if n_a <= exact_limit and n_b <= exact_limit:
        rank_list = ranks.tolist()
        total = comb(n, n_a)
        count_le = 0
        count_ge = 0
        for idx in combinations(range(n), n_a):
            s = sum(rank_list[i] for i in idx)
            if s <= w_obs + 1e-9:
                count_le += 1
            if s >= w_obs - 1e-9:
                count_ge += 1
        return min(1.0, 2.0 * min(count_le, count_ge) / total)

    mu = n_a * (n + 1) / 2.0
    _, tie_counts = np.unique(np.asarray(pooled), return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum())
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0
    diff = w_obs - mu
    if abs(diff) <= 0.5:
        z = 0.0
    else:
        z = (diff - math.copysign(0.5, diff)) / math.sqrt(var)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def magnitude_label(delta: float) -> str:
    """Conventional magnitude word for a Cliff's delta value."""
    return MAGNITUDE_NAMES[bisect.bisect_left(MAGNITUDE_LEVELS, abs(delta))]


def cliffs_delta(a: Sequence[float], b: Sequence[float]) -> tuple[float, str]:
    """Cliff's delta of a over b and its magnitude label.

    delta = (#(a > b) - #(a < b)) / (|a| * |b|), in [-1, 1].
    """
    if not len(a) or not len(b):
        raise ValueError("both samples must be non-empty")
    sb = sorted(float(v) for v in b)
    m = len(sb)
    greater = 0
    less = 0
    for v in a:
        v = float(v)
        greater += bisect.bisect_left(sb, v)
        less += m - bisect.bisect_right(sb, v)
    delta = (greater - less) / (len(a) * m)
    return delta, magnitude_label(delta)


def rankscores(values_by_technique: Mapping[str, float]) -> dict[str, float]:
    """Rank score of each technique on one metric, higher value is better.

    rankscore = 1 - (#techniques scoring strictly higher) / (#techniques - 1),
    so the best technique gets 1 and the worst 0; tied techniques share
    the same count of higher-ranked ones.
    """
    if len(values_by_technique) < 2:
        raise ConfigError("ranking needs at least 2 techniques")
    items = list(values_by_technique.items())
    n = len(items)
    out = {}
    for tech, value in items:
        higher = sum(1 for _, other in items if other > value)
        out[tech] = 1.0 - higher / (n - 1)
    return out


def rank_techniques(values: Mapping[str, Mapping[str, float]],
                    metrics: Sequence[str] = RANK_METRICS) -> list[RankRow]:
    """Combined ranking over several metrics.

    values maps technique -> metric -> score (higher is better for every
    metric used here). The mean of the per-metric rank scores orders the
    techniques; integer ranks are competition style (ties share the
    better rank). Rows come back sorted by rank, then input order.
    A missing metric value is a configuration error.
    """
    techniques = list(values)
    if len(techniques) < 2:
        raise ConfigError("ranking needs at least 2 techniques")
    for tech in techniques:
        for metric in metrics:
            if metric not in values[tech]:
                raise ConfigError(f"technique {tech!r} has no {metric!r} value")

    per_metric = {m: rankscores({t: values[t][m] for t in techniques})
                  for m in metrics}
    mean_rs = {t: sum(per_metric[m][t] for m in metrics) / len(metrics)
               for t in techniques}
    rows = []
    for i, tech in enumerate(techniques):
        rank = 1 + sum(1 for u in techniques if mean_rs[u] > mean_rs[tech])
        rows.append((rank, i, RankRow(
            technique=tech,
            rankscores=tuple(per_metric[m][tech] for m in metrics),
            mean_rank_score=mean_rs[tech],
            rank=rank)))
    rows.sort(key=lambda item: (item[0], item[1]))
    return [row for _, _, row in rows]


def rank_stability(records: Sequence[ResultRecord], kind: str,
                   metrics: Sequence[str] = RANK_METRICS) -> dict[str, float]:
    """SD of each technique's per-cell rank within one configuration.

    A cell is one (window, split) combination. Within each cell the
    techniques are ranked on their mean metric values (degenerate AUC
    rows excluded; the AUC metric is dropped for a cell where nothing
    remains). Cells that do not cover every technique are skipped. With
    fewer than two usable cells the SD is 0.
    """
    kind_records = [r for r in records if r.kind == kind]
    techniques = list(dict.fromkeys(r.technique for r in kind_records))
    if len(techniques) < 2:
        raise ConfigError("rank stability needs at least 2 techniques")

    cells: dict[tuple, dict[str, list[ResultRecord]]] = {}
    for r in kind_records:
        cell = cells.setdefault((r.window_k, r.split_index), {})
        cell.setdefault(r.technique, []).append(r)

    per_tech_ranks: dict[str, list[int]] = {t: [] for t in techniques}
    for cell_key in sorted(cells, key=lambda c: (c[0] is None, c[0], c[1])):
        cell = cells[cell_key]
        if set(cell) != set(techniques):
            continue
        usable_metrics = []
        cell_values: dict[str, dict[str, float]] = {t: {} for t in techniques}
        for metric in metrics:
            ok = True
            for tech in techniques:
                vals, _ = _metric_values(cell[tech], metric)
                if not vals:
                    ok = False
                    break
                cell_values[tech][metric] = sum(vals) / len(vals)
            if ok:
                usable_metrics.append(metric)
        if not usable_metrics:
            continue
        for row in rank_techniques(cell_values, metrics=usable_metrics):
            per_tech_ranks[row.technique].append(row.rank)

    out = {}
    for tech in techniques:
        ranks = per_tech_ranks[tech]
        if len(ranks) < 2:
            out[tech] = 0.0
        else:
            _, sd, _ = _mean_sd([float(r) for r in ranks])
            out[tech] = sd
    return out


def undersample(tp: TreatedPair, seed: int) -> TreatedPair:
    """Balance the training classes by shrinking the majority class.

    Majority-class instances are removed by seeded uniform sampling
    without replacement until both classes have equal counts. Weights of
    the survivors are preserved and row order is kept. A single-class
    training set cannot be balanced and raises BalancingError.
    """
    labels = tp.train_labels
    pos = np.flatnonzero(labels)
    neg = np.flatnonzero(~labels)
    if len(pos) == 0 or len(neg) == 0:
        raise BalancingError("single-class training set cannot be balanced")
    if len(pos) == len(neg):
        return tp

    minority, majority = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    rng = random.Random(seed)
    kept_majority = rng.sample(list(majority), len(minority))
    keep = np.zeros(len(labels), dtype=bool)
    keep[minority] = True
    keep[kept_majority] = True

    return dataclasses.replace(
        tp,
        train_features=tp.train_features[keep],
        train_labels=labels[keep],
        train_weights=tp.train_weights[keep])
