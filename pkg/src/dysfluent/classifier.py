"""Dysfluency event classification over edit ops.

The canonical path scores rule-based candidates from edit ops plus the
energy contour; the open-set path grades how atypical the utterance looks
overall.  Both meet in a fixed weighted combination, followed by
temperature calibration and sensitivity filtering.  Every stage after
candidate generation is a pure transformation, which is what makes
re-analysis under new thresholds possible without touching audio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .alignment import ExpectedTranscript, PhonemeEditOp
from .errors import BadThresholds
from .frontend import FeatureMatrix
from .inventory import PhonemeInventory
from .neural import HiddenSeq, WeightBundle, pooled_atypicality

CATEGORIES = (
    "sound_repetition",
    "syllable_repetition",
    "word_repetition",
    "prolongation",
    "block_silent",
    "block_audible",
)

# Clinical severity tags attached to serialized events as static metadata.
CATEGORY_SEVERITY = {
    "sound_repetition": "high",
    "syllable_repetition": "high",
    "word_repetition": "medium",
    "prolongation": "high",
    "block_silent": "very_high",
    "block_audible": "very_high",
    "atypical": "unrated",
}

SILENCE_DB = -60.0

# Channel groups the occlusion attribution sweeps over.
CHANNEL_GROUPS = ("mel", "pitch", "energy", "mfcc")

_GROUP_PREFIXES = {
    "mel": ("mel_",),
    "pitch": ("pitch_hz", "voiced_flag"),
    "energy": ("energy_db",),
    "mfcc": ("mfcc_",),
}


@dataclass(frozen=True)
class Thresholds:
    sensitivity: dict[str, float] = field(
        default_factory=lambda: {cat: 0.5 for cat in CATEGORIES}
    )
    open_set_threshold: float = 0.6
    z_prolong: float = 2.5
    silence_block_ms: float = 250.0
    w_canonical: float = 0.85
    w_open: float = 0.15

    def __post_init__(self) -> None:
        if set(self.sensitivity) != set(CATEGORIES):
            raise BadThresholds(
                f"sensitivity must cover exactly {sorted(CATEGORIES)}, got {sorted(self.sensitivity)}"
            )
        for cat, v in self.sensitivity.items():
            if not 0.0 <= v <= 1.0:
                raise BadThresholds(f"sensitivity[{cat}] = {v} outside [0,1]")
        if not 0.0 <= self.open_set_threshold <= 1.0:
            raise BadThresholds(f"open_set_threshold {self.open_set_threshold} outside [0,1]")
        if self.silence_block_ms <= 0:
            raise BadThresholds("silence_block_ms must be positive")
        if self.w_canonical < 0 or self.w_open < 0 or abs(self.w_canonical + self.w_open - 1.0) > 1e-9:
            raise BadThresholds("combination weights must be nonnegative and sum to 1")


def thresholds_from_dict(raw: dict) -> Thresholds:
    try:
        kwargs = {}
        if "sensitivity" in raw:
            kwargs["sensitivity"] = {k: float(v) for k, v in raw["sensitivity"].items()}
        for name in ("open_set_threshold", "z_prolong", "silence_block_ms", "w_canonical", "w_open"):
            if name in raw:
                kwargs[name] = float(raw[name])
    except (TypeError, ValueError, AttributeError) as exc:
        raise BadThresholds(f"bad thresholds structure: {exc}") from None
    unknown = set(raw) - {"sensitivity", "open_set_threshold", "z_prolong",
                          "silence_block_ms", "w_canonical", "w_open"}
    if unknown:
        raise BadThresholds(f"unknown threshold fields: {sorted(unknown)}")
    return Thresholds(**kwargs)


def thresholds_to_dict(th: Thresholds) -> dict:
    return {
        "sensitivity": dict(th.sensitivity),
        "open_set_threshold": th.open_set_threshold,
        "z_prolong": th.z_prolong,
        "silence_block_ms": th.silence_block_ms,
        "w_canonical": th.w_canonical,
        "w_open": th.w_open,
    }


@dataclass
class Candidate:
    """A scored span that may become an event once combined and filtered."""

    start_frame: int
    end_frame: int
    frame_rate: float
    scores: dict[str, float]
    op_indices: list[int]
    attribution: dict[str, float] | None = None

    def __post_init__(self) -> None:
        if set(self.scores) != set(CATEGORIES):
            raise ValueError("scores must cover every canonical category")
        if any(not 0.0 <= v <= 1.0 for v in self.scores.values()):
            raise ValueError("scores must lie in [0,1]")

    @property
    def best_category(self) -> str:
        return max(CATEGORIES, key=lambda c: self.scores[c])

    @property
    def best_score(self) -> float:
        return self.scores[self.best_category]


@dataclass(frozen=True)
class OpenSetScore:
    atypicality: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.atypicality <= 1.0:
            raise ValueError(f"atypicality {self.atypicality} outside [0,1]")


@dataclass(frozen=True)
class CalibrationModel:
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass
class DysfluencyEvent:
    event_id: str
    category: str  # one of CATEGORIES or "atypical"
    start_s: float
    end_s: float
    start_frame: int
    end_frame: int
    raw_score: float
    calibrated_confidence: float
    contributing_edit_ops: list[int]
    attribution: dict[str, float] | None = None


def _zero_scores() -> dict[str, float]:
    return {cat: 0.0 for cat in CATEGORIES}


def _insertion_runs(ops: list[PhonemeEditOp]) -> list[list[int]]:
    """Group insertion ops that are consecutive in the realized sequence."""
    runs: list[list[int]] = []
    for idx, op in enumerate(ops):
        if op.kind != "insertion":
            continue
        prev = ops[runs[-1][-1]] if runs else None
        if (
            prev is not None
            and prev.realized_index + 1 == op.realized_index
            and prev.expected_index == op.expected_index
        ):
            runs[-1].append(idx)
        else:
            runs.append([idx])
    return runs


def _grade_insertion_run(
    run_syms: list[str], j: int, t: ExpectedTranscript
) -> dict[str, float]:
    """word > syllable > sound; an unmatched run scores zero everywhere."""
    scores = _zero_scores()
    n = len(t.phones)
    k = len(run_syms)
    before = t.phones[j - k : j] if j - k >= 0 else None
    after = t.phones[j : j + k] if j + k <= n else None
    word_spans = []
    start = 0
    for end in t.word_boundaries:
        word_spans.append((start, end))
        start = end
    if (before == run_syms and (j - k, j) in word_spans) or (
        after == run_syms and (j, j + k) in word_spans
    ):
        scores["word_repetition"] = 1.0
    elif k >= 2 and (before == run_syms or after == run_syms):
        scores["syllable_repetition"] = 1.0
    elif len(set(run_syms)) == 1:
        adjacent = set()
        if j > 0:
            adjacent.add(t.phones[j - 1])
        if j < n:
            adjacent.add(t.phones[j])
        if run_syms[0] in adjacent:
            scores["sound_repetition"] = 1.0
    return scores


def canonical_scores(
    ops: list[PhonemeEditOp],
    t: ExpectedTranscript,
    energy: FeatureMatrix,
    th: Thresholds,
    inv: PhonemeInventory | None = None,
) -> list[Candidate]:
    """Rule-graded candidates from edit ops plus silence runs in the energy contour."""
    frame_rate = energy.frame_rate
    energy_db = energy.channel("energy_db")
    n_frames = len(energy_db)
    cands: list[Candidate] = []

    for run in _insertion_runs(ops):
        run_ops = [ops[i] for i in run]
        scores = _grade_insertion_run(
            [op.realized_symbol for op in run_ops], run_ops[0].expected_index, t
        )
        start = min(op.frame_span[0] for op in run_ops)
        end = max(op.frame_span[1] for op in run_ops)
        cands.append(Candidate(start, end, frame_rate, scores, list(run)))

    for idx, op in enumerate(ops):
        if op.kind == "prolongation":
            scores = _zero_scores()
            scores["prolongation"] = min(1.0, op.duration_z / 5.0)
            cands.append(Candidate(*op.frame_span, frame_rate, scores, [idx]))
        elif op.kind == "substitution":
            start, end = op.frame_span
            members = [idx]
            # A strained stretch can decode as several low-confidence
            # segments with only one of them aligned as the substitution;
            # frame-adjacent low-confidence insertions on the same expected
            # phone belong to the same candidate, or the span shrinks to a
            # sliver.
            if op.mean_posterior < 0.5:
                pool = [
                    (k, o)
                    for k, o in enumerate(ops)
                    if o.kind == "insertion"
                    and o.mean_posterior < 0.5
                    and o.expected_index in (op.expected_index, op.expected_index + 1)
                ]
                grew = True
                while grew:
                    grew = False
                    for k, o in pool:
                        if k in members:
                            continue
                        s2, e2 = o.frame_span
                        if s2 <= end + 2 and e2 >= start - 2:
                            start, end = min(start, s2), max(end, e2)
                            members.append(k)
                            grew = True
            span_energy = float(energy_db[start:end].mean()) if end > start else SILENCE_DB
            scores = _zero_scores()
            if span_energy >= SILENCE_DB and op.mean_posterior < 0.5:
                member_ops = [ops[k] for k in members]
                weights = [max(1, o.frame_span[1] - o.frame_span[0]) for o in member_ops]
                pooled = sum(o.mean_posterior * w for o, w in zip(member_ops, weights))
                scores["block_audible"] = 1.0 - pooled / sum(weights)
            cands.append(Candidate(start, end, frame_rate, scores, sorted(members)))
        elif op.kind == "deletion":
            # A deletion has no frames of its own; give the candidate the
            # room the missing phone would have taken so open-set labeling
            # has a span to point at.
            anchor = op.frame_span[0]
            width = 1
            if inv is not None and op.expected_symbol in inv.duration:
                width = max(1, round(inv.duration[op.expected_symbol].mean_ms * frame_rate / 1000.0))
            start = min(anchor, n_frames - 1) if n_frames else 0
            end = min(n_frames, start + width)
            if end == start:
                start = max(0, start - 1)
                end = start + 1
            cands.append(Candidate(start, end, frame_rate, _zero_scores(), [idx]))

    min_frames = int(math.ceil(th.silence_block_ms * frame_rate / 1000.0))
    silent = energy_db < SILENCE_DB
    f = 0
    while f < n_frames:
        if not silent[f]:
            f += 1
            continue
        start = f
        while f < n_frames and silent[f]:
            f += 1
        speech_before = np.any(~silent[:start])
        speech_after = np.any(~silent[f:])
        if f - start >= min_frames and speech_before and speech_after:
            run_ms = (f - start) / frame_rate * 1000.0
            scores = _zero_scores()
            scores["block_silent"] = min(1.0, run_ms / (2.0 * th.silence_block_ms))
            cands.append(Candidate(start, f, frame_rate, scores, []))
    return cands


def open_set_score(
    cands: list[Candidate] | None = None,
    fused: HiddenSeq | None = None,
    w: WeightBundle | None = None,
) -> OpenSetScore:
    """Atypicality of the utterance.

    With neural weights the score comes from pooled distance to the stored
    centroid; without them it is the complement of the strongest canonical
    evidence (nothing scored means nothing atypical).
    """
    if fused is not None and w is not None and "openset.centroid" in w.arrays:
        return OpenSetScore(pooled_atypicality(fused, w))
    if not cands:
        return OpenSetScore(0.0)
    return OpenSetScore(1.0 - max(c.best_score for c in cands))


def _merge_candidates(cands: list[Candidate]) -> list[Candidate]:
    """Fuse overlapping candidates that agree on their best category.

    Runs before labeling, so threshold changes relabel a fused span as a
    whole and can never split one detection into two events.
    """
    ordered = sorted(cands, key=lambda c: (c.start_frame, c.end_frame, c.best_category))
    merged: list[Candidate] = []
    for cand in ordered:
        home = next(
            (
                m
                for m in merged
                if m.best_category == cand.best_category and cand.start_frame < m.end_frame
            ),
            None,
        )
        if home is None:
            merged.append(
                Candidate(
                    cand.start_frame,
                    cand.end_frame,
                    cand.frame_rate,
                    dict(cand.scores),
                    list(cand.op_indices),
                    dict(cand.attribution) if cand.attribution else None,
                )
            )
            continue
        if cand.best_score > home.best_score and cand.attribution is not None:
            home.attribution = dict(cand.attribution)
        home.scores = {c: max(home.scores[c], cand.scores[c]) for c in CATEGORIES}
        home.end_frame = max(home.end_frame, cand.end_frame)
        home.op_indices = sorted(set(home.op_indices) | set(cand.op_indices))
    return merged


def combine_predictions(
    cands: list[Candidate], open_score: OpenSetScore, th: Thresholds
) -> list[DysfluencyEvent]:
    """Same-category overlap merging, weighted combination, labeling."""
    events: list[DysfluencyEvent] = []
    for cand in _merge_candidates(cands):
        best_cat = cand.best_category
        best = cand.best_score
        final = th.w_canonical * best + th.w_open * open_score.atypicality
        if best >= th.sensitivity[best_cat]:
            category = best_cat
        elif open_score.atypicality >= th.open_set_threshold:
            category = "atypical"
        else:
            continue
        events.append(
            DysfluencyEvent(
                event_id="",
                category=category,
                start_s=cand.start_frame / cand.frame_rate,
                end_s=cand.end_frame / cand.frame_rate,
                start_frame=cand.start_frame,
                end_frame=cand.end_frame,
                raw_score=final,
                calibrated_confidence=final,
                contributing_edit_ops=list(cand.op_indices),
                attribution=dict(cand.attribution) if cand.attribution else None,
            )
        )
    events.sort(key=lambda e: (e.start_frame, e.end_frame, e.category))
    # Relabeling can leave overlapping atypical events from distinct best
    # categories; coalesce anything that shares a final label and overlaps.
    merged: list[DysfluencyEvent] = []
    for ev in events:
        home = next(
            (
                m
                for m in merged
                if m.category == ev.category and ev.start_frame < m.end_frame
            ),
            None,
        )
        if home is None:
            merged.append(ev)
            continue
        if ev.raw_score > home.raw_score:
            home.raw_score = ev.raw_score
            home.calibrated_confidence = ev.calibrated_confidence
            home.attribution = ev.attribution
        home.end_frame = max(home.end_frame, ev.end_frame)
        home.end_s = home.end_frame / (cands[0].frame_rate if cands else 1.0)
        home.contributing_edit_ops = sorted(
            set(home.contributing_edit_ops) | set(ev.contributing_edit_ops)
        )
    for ev in merged:
        ev.event_id = f"{ev.category}:{ev.start_frame}-{ev.end_frame}"
    return merged


def calibrate_confidence(
    events: list[DysfluencyEvent], cal: CalibrationModel
) -> list[DysfluencyEvent]:
    """Temperature-scaled sigmoid of the raw score's logit."""
    out = []
    for ev in events:
        raw = min(max(ev.raw_score, 1e-6), 1.0 - 1e-6)
        logit = math.log(raw / (1.0 - raw))
        out.append(replace(ev, calibrated_confidence=1.0 / (1.0 + math.exp(-logit / cal.temperature))))
    return out


def fit_temperature(raw_scores: list[float], labels: list[int]) -> CalibrationModel:
    """Pick the temperature minimizing NLL of labels under scaled scores."""
    from scipy.optimize import minimize_scalar

    raws = np.clip(np.asarray(raw_scores, dtype=float), 1e-6, 1.0 - 1e-6)
    ys = np.asarray(labels, dtype=float)
    logits = np.log(raws / (1.0 - raws))

    def nll(log_t: float) -> float:
        p = 1.0 / (1.0 + np.exp(-logits / math.exp(log_t)))
        p = np.clip(p, 1e-12, 1.0 - 1e-12)
        return float(-(ys * np.log(p) + (1.0 - ys) * np.log(1.0 - p)).mean())

    res = minimize_scalar(nll, bounds=(math.log(0.05), math.log(20.0)), method="bounded")
    return CalibrationModel(float(math.exp(res.x)))


def apply_thresholds(events: list[DysfluencyEvent], th: Thresholds) -> list[DysfluencyEvent]:
    """Keep events whose calibrated confidence clears their category's bar.

    Atypical events are measured against open_set_threshold.  Pure filter:
    idempotent, never touches alignment, antitone in every sensitivity.
    """
    kept = []
    for ev in events:
        bar = th.sensitivity.get(ev.category, th.open_set_threshold)
        if ev.calibrated_confidence >= bar:
            kept.append(ev)
    return kept


def neutralize_channels(features: FeatureMatrix, group: str) -> FeatureMatrix:
    """Copy of features with one channel group flattened to its utterance mean."""
    prefixes = _GROUP_PREFIXES[group]
    data = features.data.copy()
    for i, label in enumerate(features.channel_labels):
        if any(label == p or label.startswith(p) for p in prefixes):
            data[:, i] = data[:, i].mean()
    return FeatureMatrix(data, list(features.channel_labels), features.frame_rate)


def attribute_event(ev: DysfluencyEvent, features: FeatureMatrix, rescore) -> dict[str, float]:
    """Occlusion attribution: score drop when each channel group is neutralized.

    rescore(features) must return the raw score the same event would get
    under the altered features, 0.0 if it is no longer detected.
    """
    out = {}
    for group in CHANNEL_GROUPS:
        out[group] = ev.raw_score - rescore(neutralize_channels(features, group), ev)
    return out
