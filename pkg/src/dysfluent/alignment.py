"""Phoneme posteriors, CTC forced alignment, boundary refinement, edit ops.

The aligner is Viterbi over the blank-interleaved CTC state graph.  Ties
prefer staying in the current state over advancing, which makes the best
path unique and reproducible.  Log scores accumulate frame by frame in
time order, so an exhaustive enumeration that sums the same logs in the
same order reproduces them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BadExternalFile,
    InfeasibleLength,
    TemplateInventoryMismatch,
)
from .frontend import FeatureMatrix
from .inventory import PhonemeInventory

ROW_SUM_TOL = 1e-6
EXTERNAL_ROW_SUM_TOL = 1e-3


@dataclass
class Posteriorgram:
    """Row-stochastic (frames, symbols+blank) matrix on the frontend frame grid."""

    probs: np.ndarray
    frame_rate: float

    def __post_init__(self) -> None:
        sums = self.probs.sum(axis=1)
        if self.probs.size and (
            np.any(np.abs(sums - 1.0) > ROW_SUM_TOL)
            or np.any(self.probs < -ROW_SUM_TOL)
            or np.any(self.probs > 1.0 + ROW_SUM_TOL)
        ):
            raise ValueError("posteriorgram rows must be probability distributions")

    @property
    def n_frames(self) -> int:
        return self.probs.shape[0]


@dataclass
class ExpectedTranscript:
    """Target phone sequence with word structure.

    word_boundaries are end-exclusive cumulative indices into phones; the
    last entry equals len(phones).
    """

    phones: list[str]
    word_boundaries: list[int]
    source_text: str = ""

    def __post_init__(self) -> None:
        if not self.word_boundaries or self.word_boundaries[-1] != len(self.phones):
            raise ValueError("word_boundaries must end at len(phones)")
        if any(b <= a for a, b in zip(self.word_boundaries, self.word_boundaries[1:])):
            raise ValueError("word_boundaries must be strictly increasing")

    def words(self) -> list[list[str]]:
        starts = [0] + self.word_boundaries[:-1]
        return [self.phones[a:b] for a, b in zip(starts, self.word_boundaries)]

    def word_span(self, phone_index: int) -> tuple[int, int]:
        """(start, end) phone indices of the word containing phone_index."""
        start = 0
        for end in self.word_boundaries:
            if phone_index < end:
                return start, end
            start = end
        return start, self.word_boundaries[-1]


@dataclass(frozen=True)
class Segment:
    symbol: str
    start_frame: int
    end_frame: int
    mean_posterior: float

    def duration_ms(self, frame_rate: float) -> float:
        return (self.end_frame - self.start_frame) / frame_rate * 1000.0


@dataclass
class AlignmentPath:
    """Per-frame labeling plus its segment view; frame_labels use None for blank."""

    frame_labels: list[str | None]
    segments: list[Segment]
    log_score: float
    frame_rate: float

    def realized(self) -> list[str]:
        return [seg.symbol for seg in self.segments]


@dataclass(frozen=True)
class PhonemeEditOp:
    """One difference between realized and expected phone sequences.

    realized_index / expected_index locate the op in the two sequences
    (-1 when the side is absent); mean_posterior comes from the realized
    segment and feeds the audible-block rule downstream.
    """

    kind: str  # insertion | deletion | substitution | prolongation
    expected_symbol: str | None
    realized_symbol: str | None
    frame_span: tuple[int, int]
    duration_z: float
    realized_index: int = -1
    expected_index: int = -1
    mean_posterior: float = 1.0


@dataclass
class TemplateEncoder:
    """Toy acoustic model: per-phone MFCC centroid templates.

    Each frame's symbol mass is softmax(-distance / temperature) scaled by
    (1 - blank_prior); the blank column always receives blank_prior.
    """

    templates: np.ndarray  # (n_symbols, n_coef), row order = inventory symbols
    temperature: float = 1.0
    blank_prior: float = 0.2

    def encode(self, features: FeatureMatrix, inv: PhonemeInventory) -> Posteriorgram:
        if self.templates.shape[0] != len(inv.symbols):
            raise TemplateInventoryMismatch(
                f"{self.templates.shape[0]} templates for {len(inv.symbols)} symbols"
            )
        mfccs = features.channels("mfcc_")
        if mfccs.shape[1] != self.templates.shape[1]:
            raise TemplateInventoryMismatch(
                f"template width {self.templates.shape[1]} vs mfcc width {mfccs.shape[1]}"
            )
        d = np.sqrt(((mfccs[:, None, :] - self.templates[None, :, :]) ** 2).sum(axis=2))
        logits = -d / self.temperature
        logits -= logits.max(axis=1, keepdims=True)
        w = np.exp(logits)
        sym_probs = w / w.sum(axis=1, keepdims=True) * (1.0 - self.blank_prior)
        probs = np.insert(sym_probs, inv.blank_index, self.blank_prior, axis=1)
        return Posteriorgram(probs, features.frame_rate)


def phoneme_posteriors(
    features: FeatureMatrix, inv: PhonemeInventory, model: "TemplateEncoder | str"
) -> Posteriorgram:
    """Dispatch to the template encoder or an external posteriorgram file."""
    if isinstance(model, TemplateEncoder):
        return model.encode(features, inv)
    return load_posteriorgram(model, inv)


def load_posteriorgram(path: str, inv: PhonemeInventory | None = None) -> Posteriorgram:
    """Read "frames channels frame_rate" header plus row-major ASCII floats."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise BadExternalFile("header must be: frames channels frame_rate")
        try:
            n_frames, n_channels = int(header[0]), int(header[1])
            frame_rate = float(header[2])
            values = np.array([float(v) for v in fh.read().split()])
        except ValueError as exc:
            raise BadExternalFile(f"non-numeric content: {exc}") from None
    if values.size != n_frames * n_channels:
        raise BadExternalFile(
            f"expected {n_frames * n_channels} values, found {values.size}"
        )
    probs = values.reshape(n_frames, n_channels)
    if inv is not None and n_channels != inv.n_columns:
        raise BadExternalFile(f"{n_channels} channels for inventory of {inv.n_columns}")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > EXTERNAL_ROW_SUM_TOL) or np.any(probs < 0):
        raise BadExternalFile("rows are not probability distributions")
    return Posteriorgram(probs / sums[:, None], frame_rate)


def save_posteriorgram(path: str, post: Posteriorgram) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{post.n_frames} {post.probs.shape[1]} {post.frame_rate}\n")
        for row in post.probs:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def min_feasible_frames(phones: list[str]) -> int:
    """Shortest CTC path: every phone once plus a blank between equal neighbors."""
    repeats = sum(1 for a, b in zip(phones, phones[1:]) if a == b)
    return len(phones) + repeats


def ctc_forced_align(
    post: Posteriorgram, t: ExpectedTranscript, inv: PhonemeInventory
) -> AlignmentPath:
    """Viterbi best path through the blank-interleaved state graph for t."""
    phones = t.phones
    n_frames = post.n_frames
    need = min_feasible_frames(phones)
    if n_frames < need:
        raise InfeasibleLength(f"{n_frames} frames cannot realize {len(phones)} phones (need {need})")
    cols = [inv.column(p) for p in phones]
    n_states = 2 * len(cols) + 1
    state_col = np.array(
        [inv.blank_index if s % 2 == 0 else cols[s // 2] for s in range(n_states)]
    )
    with np.errstate(divide="ignore"):
        lp = np.log(post.probs)

    alpha = np.full((n_frames, n_states), -np.inf)
    back = np.zeros((n_frames, n_states), dtype=np.uint8)
    alpha[0, 0] = lp[0, state_col[0]]
    if n_states > 1:
        alpha[0, 1] = lp[0, state_col[1]]
    # Skip from s-2 is legal only into a label state that differs from the
    # label two states back (the standard CTC topology).
    can_skip = np.zeros(n_states, dtype=bool)
    for s in range(2, n_states):
        can_skip[s] = s % 2 == 1 and state_col[s] != state_col[s - 2]
    for f in range(1, n_frames):
        stay = alpha[f - 1]
        adv1 = np.concatenate(([-np.inf], alpha[f - 1, :-1]))
        adv2 = np.concatenate(([-np.inf, -np.inf], alpha[f - 1, :-2]))
        adv2[~can_skip] = -np.inf
        choices = np.stack([stay, adv1, adv2])
        best = np.argmax(choices, axis=0)  # first max wins: stay > advance > skip
        back[f] = best
        alpha[f] = choices[best, np.arange(n_states)] + lp[f, state_col]

    finals = [n_states - 1]
    if n_states > 1:
        finals.append(n_states - 2)
    end_state = max(finals, key=lambda s: (alpha[n_frames - 1, s], -s))
    if not np.isfinite(alpha[n_frames - 1, end_state]):
        raise InfeasibleLength("no finite-probability path reaches a final state")

    states = np.empty(n_frames, dtype=int)
    states[-1] = end_state
    for f in range(n_frames - 1, 0, -1):
        states[f - 1] = states[f] - back[f, states[f]]
    return _path_from_states(states, state_col, post, inv)


def _path_from_states(
    states: np.ndarray, state_col: np.ndarray, post: Posteriorgram, inv: PhonemeInventory
) -> AlignmentPath:
    frame_cols = state_col[states]
    frame_labels = [inv.symbol_at(int(c)) for c in frame_cols]
    segments = []
    f = 0
    n = len(states)
    while f < n:
        s = states[f]
        if s % 2 == 1:
            start = f
            while f < n and states[f] == s:
                f += 1
            col = int(state_col[s])
            mean_post = float(post.probs[start:f, col].mean())
            segments.append(Segment(inv.symbol_at(col), start, f, mean_post))
        else:
            f += 1
    log_score = 0.0
    for f in range(n):
        log_score += float(np.log(post.probs[f, frame_cols[f]]))
    return AlignmentPath(frame_labels, segments, log_score, post.frame_rate)


def refine_alignment(raw: AlignmentPath, post: Posteriorgram, inv: PhonemeInventory, w: int = 3) -> AlignmentPath:
    """Local search over shared segment boundaries, ±w frames.

    Only boundaries between frame-adjacent segments move; the chosen
    position maximizes the sum of both segments' mean posteriors, ties
    resolved toward the original boundary, then leftward.  Symbol order
    never changes, so the collapsed sequence is preserved.
    """
    if w <= 0 or len(raw.segments) < 2:
        return raw
    bounds = [[s.start_frame, s.end_frame] for s in raw.segments]
    cols = [inv.column(s.symbol) for s in raw.segments]
    for k in range(len(bounds) - 1):
        if bounds[k][1] != bounds[k + 1][0]:
            continue
        b0 = bounds[k][1]
        lo = max(bounds[k][0] + 1, b0 - w)
        hi = min(bounds[k + 1][1] - 1, b0 + w)
        best = (-np.inf, 0.0, 0, b0)
        for b in range(lo, hi + 1):
            left = post.probs[bounds[k][0] : b, cols[k]].mean()
            right = post.probs[b : bounds[k + 1][1], cols[k + 1]].mean()
            cand = (left + right, -abs(b - b0), -b, b)
            if cand[:3] > best[:3]:
                best = cand
        bounds[k][1] = bounds[k + 1][0] = best[3]

    frame_labels = list(raw.frame_labels)
    segments = []
    for (start, end), col, seg in zip(bounds, cols, raw.segments):
        for f in range(start, end):
            frame_labels[f] = seg.symbol
        segments.append(replace(seg, start_frame=start, end_frame=end,
                                 mean_posterior=float(post.probs[start:end, col].mean())))
    log_score = 0.0
    for f, label in enumerate(frame_labels):
        col = inv.blank_index if label is None else inv.column(label)
        log_score += float(np.log(post.probs[f, col]))
    return AlignmentPath(frame_labels, segments, log_score, raw.frame_rate)


def best_path_decode(
    post: Posteriorgram,
    inv: PhonemeInventory,
    energy_db: np.ndarray | None = None,
    silence_db: float = -60.0,
    min_run: int = 2,
    merge_gap: int = 4,
) -> list[Segment]:
    """Greedy argmax decode into realized segments.

    Frames below silence_db are forced to blank before collapsing (silence
    cannot carry a phone).  Runs shorter than min_run frames are treated as
    decoding noise and dropped; same-symbol runs separated by fewer than
    merge_gap frames are rejoined, so a one-frame glitch inside a long
    phone does not split it into a fake repetition.
    """
    labels = post.probs.argmax(axis=1)
    if energy_db is not None:
        labels = labels.copy()
        labels[energy_db < silence_db] = inv.blank_index
    runs = []
    f = 0
    n = len(labels)
    while f < n:
        start = f
        while f < n and labels[f] == labels[start]:
            f += 1
        if labels[start] != inv.blank_index and f - start >= min_run:
            runs.append([int(labels[start]), start, f])
    merged: list[list[int]] = []
    for run in runs:
        if merged and merged[-1][0] == run[0] and run[1] - merged[-1][2] < merge_gap:
            merged[-1][2] = run[2]
        else:
            merged.append(run)
    return [
        Segment(
            inv.symbol_at(col),
            start,
            end,
            float(post.probs[start:end, col].mean()),
        )
        for col, start, end in merged
    ]


def decode_path(
    post: Posteriorgram,
    inv: PhonemeInventory,
    energy_db: np.ndarray | None = None,
    silence_db: float = -60.0,
    min_run: int = 2,
    merge_gap: int = 4,
) -> AlignmentPath:
    """best_path_decode wrapped as an AlignmentPath (blank outside segments)."""
    segments = best_path_decode(post, inv, energy_db, silence_db, min_run, merge_gap)
    frame_labels: list[str | None] = [None] * post.n_frames
    for seg in segments:
        for f in range(seg.start_frame, seg.end_frame):
            frame_labels[f] = seg.symbol
    log_score = 0.0
    for f, label in enumerate(frame_labels):
        col = inv.blank_index if label is None else inv.column(label)
        log_score += float(np.log(post.probs[f, col]))
    return AlignmentPath(frame_labels, segments, log_score, post.frame_rate)


def classify_edit_ops(
    aligned: AlignmentPath,
    t: ExpectedTranscript,
    inv: PhonemeInventory,
    z_prolong: float = 2.5,
) -> list[PhonemeEditOp]:
    """Diff realized against expected phones, then add duration outliers.

    Unit-cost Levenshtein alignment.  The backtrace takes exact matches
    first, which keeps repeated material flagged as a leading insertion
    run.  Where insertion and substitution are both cost-minimal the
    realized segment's confidence decides: a low-posterior segment reads
    as something standing in for an expected phone and becomes the
    substitution, while a confident segment standing where the transcript
    says otherwise reads as an extra copy and becomes the insertion.
    Either fixed order misfiles one of the two when extra copies and a
    replaced phone sit side by side.  Matched phones whose duration
    z-score exceeds z_prolong emit an extra prolongation op.
    """
    realized = aligned.segments
    expected = t.phones
    m, n = len(realized), len(expected)
    dist = np.zeros((m + 1, n + 1), dtype=int)
    dist[:, 0] = np.arange(m + 1)
    dist[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            sub = dist[i - 1, j - 1] + (realized[i - 1].symbol != expected[j - 1])
            dist[i, j] = min(sub, dist[i - 1, j] + 1, dist[i, j - 1] + 1)

    ops: list[PhonemeEditOp] = []
    i, j = m, n
    while i > 0 or j > 0:
        matched = (
            i > 0
            and j > 0
            and realized[i - 1].symbol == expected[j - 1]
            and dist[i, j] == dist[i - 1, j - 1]
        )
        ins_viable = i > 0 and dist[i, j] == dist[i - 1, j] + 1
        sub_viable = i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + 1
        if ins_viable and sub_viable:
            if realized[i - 1].mean_posterior < 0.5:
                ins_viable = False
            else:
                sub_viable = False
        if matched:
            seg = realized[i - 1]
            dur_z = inv.duration_z(seg.symbol, seg.duration_ms(aligned.frame_rate))
            if dur_z > z_prolong:
                ops.append(
                    PhonemeEditOp(
                        "prolongation", seg.symbol, seg.symbol,
                        (seg.start_frame, seg.end_frame), dur_z,
                        realized_index=i - 1, expected_index=j - 1,
                        mean_posterior=seg.mean_posterior,
                    )
                )
            i, j = i - 1, j - 1
        elif ins_viable:
            seg = realized[i - 1]
            dur_z = inv.duration_z(seg.symbol, seg.duration_ms(aligned.frame_rate))
            ops.append(
                PhonemeEditOp(
                    "insertion", None, seg.symbol,
                    (seg.start_frame, seg.end_frame), dur_z,
                    realized_index=i - 1, expected_index=j,
                    mean_posterior=seg.mean_posterior,
                )
            )
            i -= 1
        elif sub_viable:
            seg = realized[i - 1]
            dur_z = inv.duration_z(seg.symbol, seg.duration_ms(aligned.frame_rate))
            ops.append(
                PhonemeEditOp(
                    "substitution", expected[j - 1], seg.symbol,
                    (seg.start_frame, seg.end_frame), dur_z,
                    realized_index=i - 1, expected_index=j - 1,
                    mean_posterior=seg.mean_posterior,
                )
            )
            i, j = i - 1, j - 1
        else:
            anchor = realized[i - 1].end_frame if i > 0 else 0
            ops.append(
                PhonemeEditOp(
                    "deletion", expected[j - 1], None, (anchor, anchor), 0.0,
                    realized_index=i, expected_index=j - 1,
                )
            )
            j -= 1
    ops.reverse()
    return ops
