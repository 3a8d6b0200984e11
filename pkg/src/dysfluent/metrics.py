"""Evaluation metrics: event detection, frame alignment, agreement, speed.

Empty-set conventions are fixed here so the harness is total:
- no gold and no predicted events: precision, recall, F1, balanced
  accuracy are all 1.0 (nothing to find, nothing found);
- gold empty, predictions present: precision 0.0, recall 1.0;
- predictions empty, gold present: precision 1.0, recall 0.0.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .alignment import AlignmentPath
from .errors import FrameCountMismatch, LengthMismatch, ZeroDuration

IOU_THRESHOLD = 0.5


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    balanced_accuracy: float
    aer_percent: float | None = None
    kappa: float | None = None
    rtf: float | None = None
    # Interpretability ratings are human judgments; the value travels
    # with the report as data, never computed here.
    interpretability_score: float | None = None


def _as_triple(event) -> tuple[str, float, float]:
    if isinstance(event, (tuple, list)):
        cat, start, end = event
        return str(cat), float(start), float(end)
    return event.category, event.start_s, event.end_s


def temporal_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    inter = min(a[1], b[1]) - max(a[0], b[0])
    if inter <= 0:
        return 0.0
    union = max(a[1], b[1]) - min(a[0], b[0])
    return inter / union


def match_events(pred, gold) -> list[tuple[int, int]]:
    """Greedy one-to-one matching by descending IoU.

    A (pred, gold) pair is eligible iff categories agree and IoU ≥ 0.5.
    Ties resolve toward the earlier gold start, then earlier pred start,
    so the matching is order-independent.
    """
    preds = [_as_triple(e) for e in pred]
    golds = [_as_triple(e) for e in gold]
    pairs = []
    for gi, (gcat, gs, ge) in enumerate(golds):
        for pi, (pcat, ps, pe) in enumerate(preds):
            if pcat != gcat:
                continue
            iou = temporal_iou((ps, pe), (gs, ge))
            if iou >= IOU_THRESHOLD:
                pairs.append((-iou, gs, ps, gi, pi))
    pairs.sort()
    matched_g: set[int] = set()
    matched_p: set[int] = set()
    matches = []
    for _, _, _, gi, pi in pairs:
        if gi in matched_g or pi in matched_p:
            continue
        matched_g.add(gi)
        matched_p.add(pi)
        matches.append((pi, gi))
    return matches


def evaluate_detection(pred, gold) -> MetricsReport:
    preds = [_as_triple(e) for e in pred]
    golds = [_as_triple(e) for e in gold]
    matches = match_events(pred, gold)
    tp = len(matches)
    fp = len(preds) - tp
    fn = len(golds) - tp
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    gold_cats = sorted({cat for cat, _, _ in golds})
    if gold_cats:
        matched_gold = Counter(golds[gi][0] for _, gi in matches)
        total_gold = Counter(cat for cat, _, _ in golds)
        balanced = sum(matched_gold[c] / total_gold[c] for c in gold_cats) / len(gold_cats)
    else:
        balanced = 1.0
    return MetricsReport(precision, recall, f1, balanced)


def alignment_error_rate(pred: AlignmentPath, gold_labels: list[str]) -> float:
    """Percent of frames whose predicted phone differs from gold.

    Blank frames inherit the preceding segment's phone; frames before the
    first segment inherit the first segment's phone.  An all-blank path
    against a labeled gold counts every frame as an error.
    """
    if len(pred.frame_labels) != len(gold_labels):
        raise FrameCountMismatch(
            f"{len(pred.frame_labels)} predicted frames vs {len(gold_labels)} gold"
        )
    if not gold_labels:
        return 0.0
    starts = {seg.start_frame: seg.symbol for seg in pred.segments}
    filled: list[str | None] = []
    current: str | None = pred.segments[0].symbol if pred.segments else None
    for f, label in enumerate(pred.frame_labels):
        current = starts.get(f, current)
        filled.append(label if label is not None else current)
    errors = sum(1 for p, g in zip(filled, gold_labels) if p != g)
    return 100.0 * errors / len(gold_labels)


def cohens_kappa(a: list, b: list) -> float:
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} labels")
    if not a:
        raise LengthMismatch("empty label sequences")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    counts_a = Counter(a)
    counts_b = Counter(b)
    p_e = sum(counts_a[label] * counts_b.get(label, 0) for label in counts_a) / (n * n)
    if p_e >= 1.0:
        # Both raters constant and identical: perfect agreement by convention.
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def real_time_factor(processing_s: float, audio_s: float) -> float:
    if audio_s <= 0:
        raise ZeroDuration(f"audio duration {audio_s}")
    return processing_s / audio_s
