"""Correlation between probe accuracies and downstream task scores."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from scipy import stats as _scipy_stats

from .errors import UndefinedStatisticError, ValidationError


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson r with a two-sided p-value from the exact t distribution.

    Needs at least three pairs; a zero-variance side has no defined
    correlation and raises.
    """
    if len(x) != len(y):
        raise ValidationError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise ValidationError(f"need at least 3 pairs, got {n}")
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    dx = [v - mean_x for v in x]
    dy = [v - mean_y for v in y]
    ss_x = sum(v * v for v in dx)
    ss_y = sum(v * v for v in dy)
    if ss_x == 0.0 or ss_y == 0.0:
        raise UndefinedStatisticError("zero variance in one of the inputs")
    r = sum(a * b for a, b in zip(dx, dy)) / math.sqrt(ss_x * ss_y)
    r = max(-1.0, min(1.0, r))
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 2))
    return r, p


def correlate_grid(
    probe_scores: Mapping[str, float],
    task_scores: Mapping[str, Sequence[float]],
) -> tuple[float, float]:
    """Correlate one probe's per-config scores with per-seed task scores.

    Every config key shared by both maps contributes one pair per seed:
    the probe score is repeated against each downstream run. Configs
    present on only one side are ignored; fewer than three shared
    configs is an error.
    """
    shared = sorted(set(probe_scores) & set(task_scores))
    if len(shared) < 3:
        raise ValidationError(
            f"need at least 3 shared configs, got {len(shared)}: {shared}"
        )
    xs: list[float] = []
    ys: list[float] = []
    for config in shared:
        runs = task_scores[config]
        if not runs:
            raise ValidationError(f"config {config!r} has no downstream scores")
        for score in runs:
            xs.append(float(probe_scores[config]))
            ys.append(float(score))
    return pearson(xs, ys)
