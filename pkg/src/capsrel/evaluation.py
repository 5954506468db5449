"""Held-out evaluation: precision-recall curves, precision@recall, AUC.

Decisions are (bag, relation) scores with gold flags; the NA relation
(id 0) is excluded from the ranking, following the standard held-out
protocol. Curves are raw staircases with ties grouped per distinct
score; no interpolation is applied.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

NA_RELATION = 0


@dataclass(frozen=True)
class ScoredDecision:
    bag_key: tuple
    relation: int
    score: float
    gold: bool


class EvaluationError(ValueError):
    """The decision set cannot support the requested metric."""


def decisions_from_scores(bags_with_scores) -> list[ScoredDecision]:
    """Flatten (bag, score-vector) pairs into non-NA scored decisions."""
    out = []
    for bag, scores in bags_with_scores:
        for rel in range(len(scores)):
            if rel == NA_RELATION:
                continue
            out.append(ScoredDecision(bag_key=bag.key, relation=rel,
                                      score=float(scores[rel]),
                                      gold=rel in bag.labels))
    return out


def pr_curve(decisions: list[ScoredDecision]) -> list[tuple[float, float]]:
    """(recall, precision) staircase over score-descending decisions.

    Decisions with equal scores advance the curve as one group.
    """
    positives = sum(d.gold for d in decisions)
    if positives == 0:
        raise EvaluationError("zero gold positives: cannot build a PR curve")
    ordered = sorted(decisions, key=lambda d: -d.score)
    curve: list[tuple[float, float]] = []
    tp = 0
    k = 0
    i = 0
    n = len(ordered)
    while i < n:
        j = i
        while j < n and ordered[j].score == ordered[i].score:
            tp += ordered[j].gold
            k += 1
            j += 1
        curve.append((tp / positives, tp / k))
        i = j
    return curve


def precision_at(curve: list[tuple[float, float]],
                 recalls: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
                 ) -> dict[float, float | None]:
    """Precision at the first curve point reaching each recall target.

    A target beyond the achieved recall maps to None.
    """
    if not curve:
        raise EvaluationError("empty PR curve")
    out: dict[float, float | None] = {}
    for target in recalls:
        value = None
        for recall, precision in curve:
            if recall >= target:
                value = precision
                break
        out[target] = value
    return out


def auc(curve: list[tuple[float, float]]) -> float:
    """Trapezoidal area under the PR staircase up to the max achieved recall.

    The segment from recall 0 to the first point uses the first point's
    precision.
    """
    if not curve:
        raise EvaluationError("empty PR curve")
    points = [(0.0, curve[0][1])] + list(curve)
    area = 0.0
    for (r0, p0), (r1, p1) in zip(points, points[1:]):
        area += (r1 - r0) * (p0 + p1) / 2.0
    return area


def write_curve_csv(curve: list[tuple[float, float]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("recall,precision\n")
        for recall, precision in curve:
            fh.write(f"{recall:.6f},{precision:.6f}\n")


@dataclass
class SweepRow:
    label: str
    auc: float | None
    precisions: dict[float, float | None]
    wall_time_s: float
    error: str | None = None


def experiment_sweep(base_config, grid: list[dict], run_point) -> list[SweepRow]:
    """Train/evaluate one point per grid entry; failures are recorded
    and the sweep continues.

    `run_point(config) -> (auc, precisions)`; each grid entry is a dict
    of TrainConfig field overrides.
    """
    rows: list[SweepRow] = []
    for overrides in grid:
        label = ", ".join(f"{k}={v}" for k, v in sorted(overrides.items()))
        config = replace(base_config, **overrides)
        start = time.monotonic()
        try:
            point_auc, precisions = run_point(config)
            rows.append(SweepRow(label=label, auc=point_auc,
                                 precisions=precisions,
                                 wall_time_s=time.monotonic() - start))
        except Exception as exc:  # noqa: BLE001 - sweep must survive points
            rows.append(SweepRow(label=label, auc=None, precisions={},
                                 wall_time_s=time.monotonic() - start,
                                 error=f"{type(exc).__name__}: {exc}"))
    return rows


def sweep_markdown(rows: list[SweepRow],
                   recalls: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)) -> str:
    """Render sweep results as a Markdown table (AUC over the full curve)."""
    header = ("| config | " + " | ".join(f"P@{r}" for r in recalls)
              + " | AUC | time (s) |")
    sep = "|" + "---|" * (len(recalls) + 3)
    lines = ["<!-- AUC computed over the full PR curve -->", header, sep]
    for row in rows:
        if row.error is not None:
            cells = ["-"] * len(recalls) + ["-", f"{row.wall_time_s:.1f}"]
            lines.append(f"| {row.label} (error: {row.error}) | "
                         + " | ".join(cells) + " |")
            continue
        prec_cells = []
        for r in recalls:
            v = row.precisions.get(r)
            prec_cells.append("-" if v is None else f"{v:.3f}")
        lines.append(f"| {row.label} | " + " | ".join(prec_cells)
                     + f" | {row.auc:.3f} | {row.wall_time_s:.1f} |")
    return "\n".join(lines) + "\n"
