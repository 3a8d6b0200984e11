"""Synthetic dysfluent speech with exact ground truth.

Each phone renders as a harmonic tone burst (distinct fundamental per
phone); injections rewrite the realized stream: repetitions duplicate a
unit ahead of the original, prolongations stretch a burst, silent blocks
insert a long pause, audible blocks replace the burst with a quiet two-tone
mix screened to sit between the phone templates.  Everything is
deterministic per seed, which is what makes desk-scale end-to-end
evaluation possible.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .alignment import ExpectedTranscript, TemplateEncoder
from .classifier import CATEGORIES
from .errors import InvalidSpec
from .frontend import AudioBuffer, FrontendConfig, frame_count, mel_spectrogram, mfcc
from .inventory import PhonemeInventory

# Canonical category frequencies used as injection sampling priors.
DEFAULT_PRIORS = {
    "sound_repetition": 0.284,
    "syllable_repetition": 0.221,
    "word_repetition": 0.153,
    "prolongation": 0.197,
    "block_silent": 0.082,
    "block_audible": 0.063,
}

HARMONIC_AMPS = (1.0, 0.5, 0.25)
TONE_AMP = 0.3
# Slow raised-cosine edges: a sharp onset splatters sidebands about as wide
# as the fundamental spacing and frames straddling it match the wrong
# template; 40 ms keeps the skirt an order of magnitude narrower.
RAMP_MS = 40.0
# Clamp duration draws so natural variation plus analysis-window smear at
# segment edges never crosses the prolongation z threshold on its own.
DURATION_CLAMP_SIGMA = 1.0
# Blank column weight the analyzer's template encoder reserves by default.
BLANK_PRIOR = 0.2
# Audible blocks render as a quiet two-tone mix.  Frames clear of the
# amplitude ramps must keep their nearest template inside a posterior window:
# below the floor the rows go so flat that the fixed blank share wins frames
# and the decode fragments, above the ceiling the weighted combination can
# land under the default sensitivity once a confident event elsewhere zeroes
# the utterance atypicality term.  The ceiling leaves headroom over that
# bound because the decoded span also pools the sagging ramp frames, which
# pull the realized mean a few points below the steady middle.  Balanced
# mixes sit wherever the template geometry drops them, so the search sweeps
# two knobs that move the posterior continuously: the blend ratio
# interpolates between the balanced value and full confidence in the louder
# component, and the overall gain exploits the energy coefficient, where
# quieter mixes drift from every template at once and flatten toward uniform.
DECOY_TOTAL_AMP = 0.215
DECOY_POSTERIOR_FLOOR = 0.25
DECOY_POSTERIOR_CEIL = 0.42
# Minimum lead of the nearest template over the runner-up on every steady
# frame.  The rendered utterance samples the piece at a different sub-hop
# offset than the screening simulation, which perturbs each posterior by a
# few hundredths; a near-tie would let the decode alternate symbols and
# shred the span into sub-minimum runs.
DECOY_TOP2_MARGIN = 0.06
DECOY_RATIOS = (0.5, 0.56, 0.62, 0.68, 0.74)
DECOY_GAINS = (1.0, 0.45, 0.2)


@dataclass
class Injection:
    category: str
    position: int
    params: dict = field(default_factory=dict)


@dataclass
class SynthesisSpec:
    phones: list[str]
    word_boundaries: list[int]
    tone_hz: dict[str, float]
    injections: list[Injection] = field(default_factory=list)
    priors: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PRIORS))
    seed: int = 0
    sample_rate: int = 16000
    # Wide enough that the energy window fits inside the gap: every
    # transition then passes through gated silence instead of a two-tone
    # blend that can match an unrelated template.
    gap_ms: float = 96.0
    lead_ms: float = 100.0
    repetition_gap_ms: float = 200.0
    prolongation_factor: float = 3.0
    block_silence_ms: float = 600.0

    def __post_init__(self) -> None:
        if abs(sum(self.priors.values()) - 1.0) > 1e-6:
            raise InvalidSpec(f"priors sum to {sum(self.priors.values())}, expected 1")


@dataclass
class GoldAnnotation:
    events: list[tuple[str, float, float]]
    alignment: list[str]


@dataclass
class _Piece:
    """One contiguous stretch of rendered audio."""

    kind: str  # tone | decoy | silence
    phone: str | None  # tone content and gold label; None inherits a neighbor
    duration_ms: float
    tag: int | None = None  # gold event this piece belongs to
    decoy: tuple[float, float, float, float] | None = None  # f0 pair + amplitudes
    copy: bool = False  # duplicated unit; gold labels it like silence


def _validate_spec(spec: SynthesisSpec, inv: PhonemeInventory) -> list[Injection]:
    try:
        t = ExpectedTranscript(list(spec.phones), list(spec.word_boundaries))
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from None
    if not spec.phones:
        raise InvalidSpec("empty phone sequence")
    for p in spec.phones:
        if p not in inv.duration:
            raise InvalidSpec(f"phone {p!r} has no duration stats")
        if p not in spec.tone_hz:
            raise InvalidSpec(f"phone {p!r} has no tone frequency")
    if any(a == b for a, b in zip(spec.phones, spec.phones[1:])):
        raise InvalidSpec("adjacent duplicate phones are not supported")

    seen_words = set()
    for inj in spec.injections:
        if inj.category not in CATEGORIES:
            raise InvalidSpec(f"unknown category {inj.category!r}")
        if not 0 <= inj.position < len(spec.phones):
            raise InvalidSpec(f"position {inj.position} out of range")
        a, b = t.word_span(inj.position)
        # One injection per word: stacked injections create same-phone
        # junctions whose ground truth is no longer well defined.
        if a in seen_words:
            raise InvalidSpec(f"two injections inside the word at phones {a}..{b}")
        seen_words.add(a)
        if inj.category == "sound_repetition" and b - a < 2:
            raise InvalidSpec("sound repetition needs a multi-phone word")
        if inj.category == "syllable_repetition":
            unit_len = int(inj.params.get("unit_len", 2))
            if inj.position != a or b - a <= unit_len or unit_len < 2:
                raise InvalidSpec("syllable repetition needs a word-start position in a longer word")
            # The phone before the copies must not reappear inside the
            # repeated unit, or the minimal edit script can anchor a match
            # mid-copies and flag a shifted or scattered run.
            if a > 0 and spec.phones[a - 1] in spec.phones[a + 1 : a + unit_len]:
                raise InvalidSpec("preceding phone reappears inside the repeated unit")
        if inj.category == "word_repetition":
            if inj.position != a:
                raise InvalidSpec("word repetition must anchor at the word start")
            if a > 0 and spec.phones[a - 1] in spec.phones[a + 1 : b]:
                raise InvalidSpec("preceding phone reappears inside the repeated unit")
        if inj.category == "block_silent" and inj.position == 0:
            raise InvalidSpec("silent block needs preceding speech")
        if inj.category == "block_audible":
            i = inj.position
            neighbors = {spec.phones[j] for j in (i - 1, i + 1) if 0 <= j < len(spec.phones)}
            if len(set(inv.symbols) - {spec.phones[i]} - neighbors) < 2:
                raise InvalidSpec("audible block needs two decoy symbols clear of the neighbors")
    return sorted(spec.injections, key=lambda i: i.position)


def _harmonic_tone(f0: float, n: int, sample_rate: int, amp: float) -> np.ndarray:
    t = np.arange(n) / sample_rate
    x = np.zeros(n)
    for k, a in enumerate(HARMONIC_AMPS, start=1):
        x += a * np.sin(2.0 * np.pi * k * f0 * t)
    return amp * x * _ramp(n, sample_rate)


def _ramp(n: int, sample_rate: int) -> np.ndarray:
    edge = min(int(RAMP_MS / 1000.0 * sample_rate), n // 2)
    env = np.ones(n)
    if edge > 0:
        up = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
        env[:edge] = up
        env[-edge:] = up[::-1]
    return env


def _decoy_chunk(
    f1: float, f2: float, a1: float, a2: float, n: int, sample_rate: int
) -> np.ndarray:
    return a1 * _harmonic_tone(f1, n, sample_rate, 1.0) + a2 * _harmonic_tone(
        f2, n, sample_rate, 1.0
    )


def _decoy_blend(
    phone: str,
    neighbors: set[str],
    duration_ms: float,
    spec: SynthesisSpec,
    inv: PhonemeInventory,
    config: FrontendConfig,
    rng: np.random.Generator,
) -> tuple[float, float, float, float]:
    """Tone pair and amplitudes whose mix reads as no phone in particular.

    A single off-pitch tone will not do: the cepstral space is partitioned
    so decisively that even a tone halfway between two templates matches one
    of them with high confidence.  Candidate mixes are simulated at the
    duration the piece will render at and screened against the template
    geometry the analyzer will build from the same tones.  Frames whose
    analysis window clears the amplitude ramps must all sit nearest the SAME
    template, one outside the expected phone and its transcript neighbors:
    a mix that alternates between two nearest templates decodes into
    one-frame runs at grid offsets this simulation cannot pin down, and the
    minimum-run filter shreds them.  For the same reason that template must
    lead the runner-up by a clear margin on every one of those frames.
    Core frames also carry the posterior window test, minimum above the
    decode floor and mean below the confidence ceiling.  Frames overlapping a ramp traverse the quiet
    region of the space on their way up, so they get latitude: any symbol
    the decode will survive, meaning the core symbol itself, a posterior
    low enough that the blank share takes the frame, or an excluded symbol
    provided it never holds two consecutive frames, since a single-frame
    run falls to the decode's minimum segment length.  The fallback, for
    inventories whose geometry never enters the window, is the clean
    candidate closest to the window's midpoint.
    """
    stack, temperature = _template_stack(inv, spec.tone_hz, spec.sample_rate, config)
    excluded = {phone} | set(neighbors)
    pool = [s for s in inv.symbols if s not in excluded]
    if len(pool) < 2:
        raise InvalidSpec("audible block needs two decoy symbols clear of the neighbors")
    sr = spec.sample_rate
    n = int(round(duration_ms / 1000.0 * sr))
    pad = int(round(spec.gap_ms / 1000.0 * sr))
    ramp = min(int(RAMP_MS / 1000.0 * sr), n // 2)
    half = config.n_fft // 2
    mid = 0.5 * (DECOY_POSTERIOR_FLOOR + DECOY_POSTERIOR_CEIL)
    pairs = list(itertools.permutations(pool, 2))
    fallback: tuple[tuple[int, float], tuple[float, float, float, float]] | None = None
    for idx in rng.permutation(len(pairs)):
        s1, s2 = pairs[idx]
        hz = (float(spec.tone_hz[s1]), float(spec.tone_hz[s2]))
        for ratio, gain in itertools.product(DECOY_RATIOS, DECOY_GAINS):
            amps = (
                gain * ratio * DECOY_TOTAL_AMP,
                gain * (1.0 - ratio) * DECOY_TOTAL_AMP,
            )
            sig = np.concatenate(
                [np.zeros(pad), _decoy_chunk(*hz, *amps, n, sr), np.zeros(pad)]
            )
            coefs = mfcc(mel_spectrogram(AudioBuffer(sig, sr), config), config).data
            centers = np.arange(len(coefs)) * config.hop + half
            touching = (centers + half > pad) & (centers - half < pad + n)
            core = (centers - half >= pad + ramp) & (centers + half <= pad + n - ramp)
            if core.sum() < 3:
                # Short piece: accept windows that graze the ramps rather
                # than lose the floor check entirely.
                core = (centers - half >= pad) & (centers + half <= pad + n)
            rows = coefs[touching]
            if core.sum() < 3:
                raise InvalidSpec("audible block too short to validate")
            d = np.sqrt(((rows[:, None, :] - stack[None, :, :]) ** 2).sum(axis=2))
            logits = -d / temperature
            soft = np.exp(logits - logits.max(axis=1, keepdims=True))
            soft = soft / soft.sum(axis=1, keepdims=True)
            p = (1.0 - BLANK_PRIOR) * soft
            p_max = p.max(axis=1)
            arg_syms = [inv.symbols[int(k)] for k in p.argmax(axis=1)]
            is_core = core[touching]
            core_syms = {s for s, c in zip(arg_syms, is_core) if c}
            if len(core_syms) != 1:
                continue
            sym = next(iter(core_syms))
            if sym in excluded:
                continue
            # 0.01 of margin under the blank share: the real utterance's
            # frame grid lands at an arbitrary sub-hop offset against the
            # piece, unlike this simulation's.
            bad_run = 0
            edge_ok = True
            for s, c, pk in zip(arg_syms, is_core, p_max):
                if c or s == sym or pk <= BLANK_PRIOR - 0.01:
                    bad_run = 0
                elif s in excluded:
                    bad_run += 1
                    if bad_run >= 2:
                        edge_ok = False
                        break
                else:
                    bad_run = 0
            core_p = p_max[is_core]
            core_rows = np.sort(p[is_core], axis=1)
            in_window = (
                core_p.min() >= DECOY_POSTERIOR_FLOOR
                and core_p.mean() <= DECOY_POSTERIOR_CEIL
                and (core_rows[:, -1] - core_rows[:, -2]).min() >= DECOY_TOP2_MARGIN
            )
            if edge_ok and in_window:
                return hz + amps
            rank = (0 if edge_ok else 1, abs(float(core_p.mean()) - mid))
            if fallback is None or rank < fallback[0]:
                fallback = (rank, hz + amps)
    if fallback is None:
        raise InvalidSpec("no decoy mix clear of the neighboring phones")
    return fallback[1]


def _draw_duration(rng: np.random.Generator, inv: PhonemeInventory, phone: str) -> float:
    st = inv.duration[phone]
    z = float(np.clip(rng.standard_normal(), -DURATION_CLAMP_SIGMA, DURATION_CLAMP_SIGMA))
    return st.mean_ms * float(np.exp(st.std_ms / st.mean_ms * z))


def generate_synthetic_case(
    spec: SynthesisSpec, inv: PhonemeInventory, config: FrontendConfig | None = None
) -> tuple[AudioBuffer, ExpectedTranscript, GoldAnnotation]:
    config = config or FrontendConfig()
    injections = _validate_spec(spec, inv)
    by_position = {inj.position: inj for inj in injections}
    rng = np.random.default_rng(spec.seed)
    t = ExpectedTranscript(
        list(spec.phones),
        list(spec.word_boundaries),
        source_text=_transcript_text(spec.phones, spec.word_boundaries),
    )

    pieces: list[_Piece] = [_Piece("silence", None, spec.lead_ms)]
    tags: list[str] = []  # tag index -> category
    durations = [_draw_duration(rng, inv, p) for p in spec.phones]

    for i, phone in enumerate(spec.phones):
        inj = by_position.get(i)
        if inj is not None and inj.category == "block_silent":
            tag = len(tags)
            tags.append("block_silent")
            pieces.append(
                _Piece("silence", None, float(inj.params.get("silence_ms", spec.block_silence_ms)), tag)
            )
        if inj is not None and inj.category in (
            "sound_repetition",
            "syllable_repetition",
            "word_repetition",
        ):
            a, b = t.word_span(i)
            if inj.category == "sound_repetition":
                unit = [phone]
            elif inj.category == "syllable_repetition":
                unit = spec.phones[a : a + int(inj.params.get("unit_len", 2))]
            else:
                unit = spec.phones[a:b]
            extra = int(inj.params.get("extra_units", 1))
            tag = len(tags)
            tags.append(inj.category)
            # Copies render at 0.7x duration, so a forced alignment against the
            # expected sequence realizes each phone on the longer canonical
            # burst; the gold labels follow that and let copies inherit.
            for rep in range(extra):
                for k, u in enumerate(unit):
                    dur = 0.7 * _draw_duration(rng, inv, u)
                    pieces.append(_Piece("tone", u, dur, tag, copy=True))
                    if k < len(unit) - 1:
                        pieces.append(_Piece("silence", None, spec.gap_ms, tag))
                pieces.append(_Piece("silence", None, spec.repetition_gap_ms))

        dur = durations[i]
        if inj is not None and inj.category == "prolongation":
            factor = float(inj.params.get("factor", spec.prolongation_factor))
            tag = len(tags)
            tags.append("prolongation")
            pieces.append(_Piece("tone", phone, dur * factor, tag))
        elif inj is not None and inj.category == "block_audible":
            tag = len(tags)
            tags.append("block_audible")
            neighbors = {spec.phones[j] for j in (i - 1, i + 1) if 0 <= j < len(spec.phones)}
            pieces.append(
                _Piece(
                    "decoy", phone, dur, tag,
                    decoy=_decoy_blend(phone, neighbors, dur, spec, inv, config, rng),
                )
            )
        else:
            pieces.append(_Piece("tone", phone, dur))
        if i < len(spec.phones) - 1:
            pieces.append(_Piece("silence", None, spec.gap_ms))
    pieces.append(_Piece("silence", None, spec.lead_ms))

    sr = spec.sample_rate
    chunks = []
    offsets_s: list[tuple[float, float]] = []
    cursor = 0
    for piece in pieces:
        n = int(round(piece.duration_ms / 1000.0 * sr))
        if piece.kind == "tone":
            chunk = _harmonic_tone(spec.tone_hz[piece.phone], n, sr, TONE_AMP)
        elif piece.kind == "decoy":
            chunk = _decoy_chunk(*piece.decoy, n, sr)
        else:
            chunk = np.zeros(n)
        chunks.append(chunk)
        offsets_s.append((cursor / sr, (cursor + n) / sr))
        cursor += n
    samples = np.concatenate(chunks)
    audio = AudioBuffer(samples, sr)

    events: list[tuple[str, float, float]] = []
    for tag, category in enumerate(tags):
        spans = [offsets_s[j] for j, p in enumerate(pieces) if p.tag == tag]
        events.append((category, spans[0][0], spans[-1][1]))
    events.sort(key=lambda e: (e[1], e[2], e[0]))

    gold_alignment = _gold_alignment(pieces, offsets_s, len(samples), sr, config)
    return audio, t, GoldAnnotation(events, gold_alignment)


def _gold_alignment(
    pieces: list[_Piece],
    offsets_s: list[tuple[float, float]],
    n_samples: int,
    sample_rate: int,
    config: FrontendConfig,
) -> list[str]:
    """Per-frame phone labels at frame centers; silences and copies inherit."""
    n = frame_count(n_samples, config)
    labels: list[str | None] = []
    piece_idx = 0
    for f in range(n):
        center = (f * config.hop + config.n_fft // 2) / sample_rate
        while piece_idx < len(pieces) - 1 and center >= offsets_s[piece_idx][1]:
            piece_idx += 1
        piece = pieces[piece_idx]
        labels.append(None if piece.copy else piece.phone)
    current = next((p for p in labels if p is not None), None)
    filled = []
    for label in labels:
        current = label if label is not None else current
        filled.append(current)
    # Leading silence inherits the first phone.
    first = next((p for p in filled if p is not None), "")
    return [p if p is not None else first for p in filled]


def _transcript_text(phones: list[str], word_boundaries: list[int]) -> str:
    words = []
    start = 0
    for end in word_boundaries:
        words.append(" ".join(phones[start:end]))
        start = end
    return " | ".join(words)


def random_spec(
    seed: int,
    inv: PhonemeInventory,
    tone_hz: dict[str, float],
    priors: dict[str, float] | None = None,
    max_injections: int = 3,
) -> SynthesisSpec:
    """A random base utterance with 0..max_injections prior-weighted injections."""
    rng = np.random.default_rng(seed)
    priors = dict(priors or DEFAULT_PRIORS)
    phones: list[str] = []
    boundaries: list[int] = []
    for _ in range(int(rng.integers(3, 6))):
        for _ in range(int(rng.integers(2, 5))):
            choices = [s for s in inv.symbols if not phones or s != phones[-1]]
            phones.append(str(rng.choice(choices)))
        boundaries.append(len(phones))

    t = ExpectedTranscript(phones, boundaries)
    injections: list[Injection] = []
    used_words: set[int] = set()
    cats = sorted(priors)
    weights = np.array([priors[c] for c in cats])
    weights = weights / weights.sum()
    for _ in range(int(rng.integers(0, max_injections + 1))):
        category = str(rng.choice(cats, p=weights))
        valid = [i for i in range(len(phones)) if _position_ok(category, i, t, used_words)]
        if not valid:
            continue
        position = int(rng.choice(valid))
        used_words.add(t.word_span(position)[0])
        params: dict = {}
        if category == "sound_repetition":
            # Two copies minimum: a single short copy plus the analysis
            # window's edge smear leaves the overlap ratio on a knife edge.
            params["extra_units"] = int(rng.integers(2, 4))
        elif category == "prolongation":
            params["factor"] = float(2.8 + rng.uniform(0.0, 1.2))
        elif category == "block_silent":
            params["silence_ms"] = float(rng.uniform(450.0, 800.0))
        injections.append(Injection(category, position, params))
    injections.sort(key=lambda i: i.position)
    return SynthesisSpec(phones, boundaries, dict(tone_hz), injections, priors, seed=seed)


def _position_ok(category: str, i: int, t: ExpectedTranscript, used_words: set[int]) -> bool:
    a, b = t.word_span(i)
    if a in used_words:
        return False
    if category == "sound_repetition":
        return b - a >= 2
    if category == "syllable_repetition":
        return i == a and b - a >= 3 and (a == 0 or t.phones[a - 1] != t.phones[a + 1])
    if category == "word_repetition":
        return i == a and (a == 0 or t.phones[a - 1] not in t.phones[a + 1 : b])
    if category == "block_silent":
        return i >= 1
    return True


def _burst_mfcc(f0: float, amp: float, sample_rate: int, config: FrontendConfig) -> np.ndarray:
    n = int(0.5 * sample_rate)
    audio = AudioBuffer(_harmonic_tone(f0, n, sample_rate, amp), sample_rate)
    coefs = mfcc(mel_spectrogram(audio, config), config).data
    return coefs[3:-3].mean(axis=0)


def _template_stack(
    inv: PhonemeInventory,
    tone_hz: dict[str, float],
    sample_rate: int,
    config: FrontendConfig,
) -> tuple[np.ndarray, float]:
    """Per-phone prototype centroids plus the matching softmax temperature.

    The temperature is a fixed fraction of the smallest pairwise template
    distance: sharp enough to pin clean frames to their phone, soft enough
    that far-from-everything frames stay near-uniform.
    """
    templates = []
    for symbol in inv.symbols:
        if symbol not in tone_hz:
            raise InvalidSpec(f"no tone frequency for {symbol!r}")
        templates.append(_burst_mfcc(tone_hz[symbol], TONE_AMP, sample_rate, config))
    stack = np.stack(templates)
    if len(stack) < 2:
        return stack, 1.0
    d = np.sqrt(((stack[:, None, :] - stack[None, :, :]) ** 2).sum(axis=2))
    off_diag = d[~np.eye(len(stack), dtype=bool)]
    return stack, float(off_diag.min()) / 6.0


def make_template_encoder(
    inv: PhonemeInventory,
    tone_hz: dict[str, float],
    sample_rate: int = 16000,
    config: FrontendConfig | None = None,
    temperature: float | None = None,
    blank_prior: float = BLANK_PRIOR,
) -> TemplateEncoder:
    """Templates from steady prototype bursts of each phone's tone."""
    stack, default_temperature = _template_stack(
        inv, tone_hz, sample_rate, config or FrontendConfig()
    )
    if temperature is None:
        temperature = default_temperature
    return TemplateEncoder(stack, temperature, blank_prior)


# -- serialization ------------------------------------------------------------


def spec_to_dict(spec: SynthesisSpec) -> dict:
    return {
        "phones": spec.phones,
        "word_boundaries": spec.word_boundaries,
        "tone_hz": spec.tone_hz,
        "injections": [
            {"category": i.category, "position": i.position, "params": i.params}
            for i in spec.injections
        ],
        "priors": spec.priors,
        "seed": spec.seed,
        "sample_rate": spec.sample_rate,
        "gap_ms": spec.gap_ms,
        "lead_ms": spec.lead_ms,
        "repetition_gap_ms": spec.repetition_gap_ms,
        "prolongation_factor": spec.prolongation_factor,
        "block_silence_ms": spec.block_silence_ms,
    }


def spec_from_dict(raw: dict) -> SynthesisSpec:
    try:
        return SynthesisSpec(
            phones=[str(p) for p in raw["phones"]],
            word_boundaries=[int(b) for b in raw["word_boundaries"]],
            tone_hz={str(k): float(v) for k, v in raw["tone_hz"].items()},
            injections=[
                Injection(str(i["category"]), int(i["position"]), dict(i.get("params", {})))
                for i in raw.get("injections", [])
            ],
            priors={str(k): float(v) for k, v in raw.get("priors", DEFAULT_PRIORS).items()},
            seed=int(raw.get("seed", 0)),
            sample_rate=int(raw.get("sample_rate", 16000)),
            gap_ms=float(raw.get("gap_ms", 96.0)),
            lead_ms=float(raw.get("lead_ms", 100.0)),
            repetition_gap_ms=float(raw.get("repetition_gap_ms", 200.0)),
            prolongation_factor=float(raw.get("prolongation_factor", 3.0)),
            block_silence_ms=float(raw.get("block_silence_ms", 600.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad spec structure: {exc}") from None


def gold_to_dict(gold: GoldAnnotation) -> dict:
    return {
        "events": [[c, s, e] for c, s, e in gold.events],
        "alignment": gold.alignment,
    }


def gold_from_dict(raw: dict) -> GoldAnnotation:
    return GoldAnnotation(
        events=[(str(c), float(s), float(e)) for c, s, e in raw["events"]],
        alignment=[str(p) for p in raw["alignment"]],
    )


def load_tone_map(path: str) -> dict[str, float]:
    """tone_hz side table, usually stored inside the inventory JSON."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    tones = raw.get("tone_hz") if isinstance(raw, dict) else None
    if tones is None:
        raise InvalidSpec(f"{path} has no tone_hz table")
    return {str(k): float(v) for k, v in tones.items()}
