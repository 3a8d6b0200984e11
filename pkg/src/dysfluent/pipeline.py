"""End-to-end analysis orchestration shared by the CLI, service, and tests.

The chain is: features → posteriors → silence gate → forced alignment +
greedy decode → edit ops → candidate scoring → open-set → combination →
calibration → thresholds.  Forced alignment against the expected
transcript yields the report's segment map; the greedy decode yields the
realized sequence the edit ops are diffed from (forcing to the transcript
alone can never surface an inserted phone).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .alignment import (
    AlignmentPath,
    ExpectedTranscript,
    Posteriorgram,
    TemplateEncoder,
    classify_edit_ops,
    ctc_forced_align,
    decode_path,
    phoneme_posteriors,
    refine_alignment,
)
from .classifier import (
    CalibrationModel,
    Candidate,
    CHANNEL_GROUPS,
    DysfluencyEvent,
    OpenSetScore,
    SILENCE_DB,
    Thresholds,
    apply_thresholds,
    calibrate_confidence,
    canonical_scores,
    combine_predictions,
    neutralize_channels,
    open_set_score,
)
from .errors import TranscriptUnmappable
from .frontend import AudioBuffer, FeatureMatrix, FrontendConfig, extract_features
from .inventory import PhonemeInventory
from .neural import WeightBundle, multi_scale_pass

# Posterior mass moved onto the blank column for frames below the silence
# threshold; long pauses must not be absorbed into neighboring phones.
SILENCE_BLANK_MASS = 0.9

REFINE_WINDOW = 3


def parse_transcript(text: str, inv: PhonemeInventory) -> ExpectedTranscript:
    """Whitespace-separated phone symbols, words delimited by '|'."""
    phones: list[str] = []
    boundaries: list[int] = []
    for word in text.split("|"):
        symbols = word.split()
        if not symbols:
            continue
        for s in symbols:
            if s not in inv.symbols:
                raise TranscriptUnmappable(f"symbol {s!r} not in inventory")
            phones.append(s)
        boundaries.append(len(phones))
    if not phones:
        raise TranscriptUnmappable("transcript has no phones")
    return ExpectedTranscript(phones, boundaries, source_text=text)


def silence_gate(
    post: Posteriorgram,
    energy_db: np.ndarray,
    inv: PhonemeInventory,
    silence_db: float = SILENCE_DB,
) -> Posteriorgram:
    """Shift posterior mass toward blank on silent frames.

    The template encoder's blank prior is fixed, so without this a long
    pause drifts toward whichever phone template is nearest and forced
    alignment stretches a neighboring phone across it.
    """
    probs = post.probs.copy()
    silent = energy_db < silence_db
    if np.any(silent):
        probs[silent] *= 1.0 - SILENCE_BLANK_MASS
        probs[silent, inv.blank_index] += SILENCE_BLANK_MASS
    return Posteriorgram(probs, post.frame_rate)


@dataclass
class AnalysisResult:
    features: FeatureMatrix
    posteriors: Posteriorgram
    path: AlignmentPath  # refined forced alignment to the expected transcript
    decoded: AlignmentPath  # greedy realized decode
    edit_ops: list
    candidates: list[Candidate]
    atypicality: float
    all_events: list[DysfluencyEvent]  # calibrated, pre-threshold, with attribution
    events: list[DysfluencyEvent]  # after apply_thresholds
    transcript: ExpectedTranscript
    frame_rate: float


def _score_candidates(
    features: FeatureMatrix,
    inv: PhonemeInventory,
    encoder: TemplateEncoder,
    t: ExpectedTranscript,
    th: Thresholds,
    weights: WeightBundle | None,
) -> tuple[list[Candidate], float, AlignmentPath]:
    """posteriors → gate → decode → ops → candidates (+ open-set score)."""
    post = phoneme_posteriors(features, inv, encoder)
    gated = silence_gate(post, features.channel("energy_db"), inv)
    decoded = decode_path(gated, inv)
    ops = classify_edit_ops(decoded, t, inv, z_prolong=th.z_prolong)
    energy = _energy_matrix(features)
    cands = canonical_scores(ops, t, energy, th, inv)
    if weights is not None and "openset.centroid" in weights.arrays:
        fused = multi_scale_pass(features.data, weights)
        atyp = open_set_score(cands, fused, weights).atypicality
    else:
        atyp = open_set_score(cands).atypicality
    return cands, atyp, decoded


def _energy_matrix(features: FeatureMatrix) -> FeatureMatrix:
    return FeatureMatrix(
        features.channel("energy_db")[:, None], ["energy_db"], features.frame_rate
    )


def run_analysis(
    audio: AudioBuffer,
    transcript: "ExpectedTranscript | str",
    inv: PhonemeInventory,
    encoder: TemplateEncoder,
    thresholds: Thresholds | None = None,
    config: FrontendConfig | None = None,
    calibration: CalibrationModel | None = None,
    weights: WeightBundle | None = None,
    with_attribution: bool = True,
) -> AnalysisResult:
    th = thresholds or Thresholds()
    config = config or FrontendConfig()
    cal = calibration or CalibrationModel()
    t = parse_transcript(transcript, inv) if isinstance(transcript, str) else transcript
    for p in t.phones:
        if p not in inv.symbols:
            raise TranscriptUnmappable(f"symbol {p!r} not in inventory")

    features = extract_features(audio, config)
    post = phoneme_posteriors(features, inv, encoder)
    gated = silence_gate(post, features.channel("energy_db"), inv)
    raw_path = ctc_forced_align(gated, t, inv)
    path = refine_alignment(raw_path, gated, inv, w=REFINE_WINDOW)
    decoded = decode_path(gated, inv)
    ops = classify_edit_ops(decoded, t, inv, z_prolong=th.z_prolong)
    energy = _energy_matrix(features)
    cands = canonical_scores(ops, t, energy, th, inv)
    if weights is not None and "openset.centroid" in weights.arrays:
        fused = multi_scale_pass(features.data, weights)
        atyp = open_set_score(cands, fused, weights).atypicality
    else:
        atyp = open_set_score(cands).atypicality

    if with_attribution and cands:
        _attribute_candidates(cands, atyp, features, inv, encoder, t, th, weights)

    all_events = calibrate_confidence(
        combine_predictions(cands, OpenSetScore(atyp), th), cal
    )
    events = apply_thresholds(all_events, th)
    return AnalysisResult(
        features=features,
        posteriors=gated,
        path=path,
        decoded=decoded,
        edit_ops=ops,
        candidates=cands,
        atypicality=atyp,
        all_events=all_events,
        events=events,
        transcript=t,
        frame_rate=features.frame_rate,
    )


def _attribute_candidates(
    cands: list[Candidate],
    atyp: float,
    features: FeatureMatrix,
    inv: PhonemeInventory,
    encoder: TemplateEncoder,
    t: ExpectedTranscript,
    th: Thresholds,
    weights: WeightBundle | None,
) -> None:
    """Occlusion pass: per channel group, how much each candidate's combined
    score drops when that group is flattened to its utterance mean."""
    for cand in cands:
        cand.attribution = {}
    for group in CHANNEL_GROUPS:
        muted = neutralize_channels(features, group)
        alt_cands, alt_atyp, _ = _score_candidates(muted, inv, encoder, t, th, weights)
        for cand in cands:
            final = th.w_canonical * cand.best_score + th.w_open * atyp
            alt = _matching_candidate(cand, alt_cands)
            alt_final = (
                th.w_canonical * alt.best_score + th.w_open * alt_atyp
                if alt is not None
                else 0.0
            )
            cand.attribution[group] = final - alt_final


def _matching_candidate(cand: Candidate, pool: list[Candidate]) -> Candidate | None:
    best = None
    best_iou = 0.0
    for other in pool:
        if other.best_category != cand.best_category:
            continue
        inter = min(cand.end_frame, other.end_frame) - max(cand.start_frame, other.start_frame)
        if inter <= 0:
            continue
        union = max(cand.end_frame, other.end_frame) - min(cand.start_frame, other.start_frame)
        iou = inter / union
        if iou >= 0.5 and iou > best_iou:
            best, best_iou = other, iou
    return best


def reanalyze_events(
    candidates: list[Candidate],
    atypicality: float,
    thresholds: Thresholds,
    calibration: CalibrationModel | None = None,
) -> tuple[list[DysfluencyEvent], list[DysfluencyEvent]]:
    """Rebuild (all_events, filtered_events) from stored candidate scores.

    No features, posteriors, or alignment are touched; this is the pure
    tail of the pipeline and the engine behind threshold steering.
    """
    cal = calibration or CalibrationModel()
    all_events = calibrate_confidence(
        combine_predictions(candidates, OpenSetScore(atypicality), thresholds), cal
    )
    return all_events, apply_thresholds(all_events, thresholds)
