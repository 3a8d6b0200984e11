"""Exception types shared across the analysis pipeline.

Every error carries a ``stage`` attribute naming the pipeline stage that
raised it, so the HTTP layer can report where a request failed without
parsing messages.
"""


class DysfluentError(Exception):
    """Base class for all pipeline errors."""

    stage = "pipeline"


# -- acoustic frontend ------------------------------------------------------


class UnsupportedFormat(DysfluentError):
    """Audio container or encoding we do not read (non-RIFF, non-PCM16, multichannel)."""

    stage = "frontend"


class CorruptFile(DysfluentError):
    """File claims to be WAV but its structure is inconsistent."""

    stage = "frontend"


class TooShort(DysfluentError):
    """Signal shorter than one analysis window, no frames can be produced."""

    stage = "frontend"


class ChannelMismatch(DysfluentError):
    """Feature matrix does not have the channel layout the operation expects."""

    stage = "frontend"


class MissingChannels(DysfluentError):
    """Required named channels are absent from the feature matrix."""

    stage = "frontend"


class FrameCountMismatch(DysfluentError):
    """Inputs disagree on frame count or frame rate and cannot be combined."""

    stage = "frontend"


# -- inventory and alignment ------------------------------------------------


class BadInventory(DysfluentError):
    """Phoneme inventory file is malformed or violates its invariants."""

    stage = "inventory"


class TemplateInventoryMismatch(DysfluentError):
    """Encoder templates do not cover the inventory symbol set."""

    stage = "alignment"


class BadExternalFile(DysfluentError):
    """External posteriorgram file is malformed or not row-stochastic."""

    stage = "alignment"


class UnknownPhone(DysfluentError):
    """Transcript contains a symbol outside the inventory."""

    stage = "alignment"


class InfeasibleLength(DysfluentError):
    """Target sequence cannot be emitted in the available number of frames."""

    stage = "alignment"


# -- neural passes -----------------------------------------------------------


class ShapeMismatch(DysfluentError):
    """Weight or input shapes are incompatible with the configuration."""

    stage = "neural"


class BadWeightFile(DysfluentError):
    """Weight container is truncated, has a bad magic, or an unknown version."""

    stage = "neural"


# -- classification -----------------------------------------------------------


class BadThresholds(DysfluentError):
    """Threshold configuration is out of range or structurally wrong."""

    stage = "classifier"


# -- synthesis and metrics ----------------------------------------------------


class InvalidSpec(DysfluentError):
    """A synthesis case spec is inconsistent or references unknown phones."""

    stage = "synthesis"


class LengthMismatch(DysfluentError):
    """Paired sequences passed to a metric differ in length."""

    stage = "metrics"


class ZeroDuration(DysfluentError):
    """Real-time factor is undefined for zero-length audio."""

    stage = "metrics"


# -- report service -----------------------------------------------------------


class TranscriptUnmappable(DysfluentError):
    """Transcript text cannot be mapped onto inventory symbols."""

    stage = "report"


class UnknownReport(DysfluentError):
    """No stored report under the requested id."""

    stage = "report"


class UnknownEvent(DysfluentError):
    """Verdict references an event id absent from the report."""

    stage = "report"


class VersionConflict(DysfluentError):
    """Write was based on a version that is no longer current."""

    stage = "report"
