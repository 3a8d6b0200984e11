"""Forward-only temporal passes: recurrent, attention, fusion.

Inference-only implementations sized by TemporalConfig.  Weights come from
a flat binary container (see load_weights / save_weights; layout documented
in docs/formats.md) or from the seeded demo generator.  No training here.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadWeightFile, FrameCountMismatch, ShapeMismatch

WEIGHT_MAGIC = b"DFLW"
WEIGHT_VERSION = 1

GATES = ("input", "forget", "cell", "output")


@dataclass
class TemporalConfig:
    in_dim: int = 96
    hidden_size: int = 256
    d_model: int = 256
    n_heads: int = 8
    n_layers: int = 6
    ff_mult: int = 4
    fused_size: int = 256

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads:
            raise ShapeMismatch(f"d_model {self.d_model} not divisible by {self.n_heads} heads")


@dataclass
class HiddenSeq:
    data: np.ndarray
    origin: str  # local | global | fused

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


def expected_shapes(cfg: TemporalConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for gate in GATES:
        shapes[f"lstm.{gate}.w_in"] = (cfg.in_dim, cfg.hidden_size)
        shapes[f"lstm.{gate}.w_rec"] = (cfg.hidden_size, cfg.hidden_size)
        shapes[f"lstm.{gate}.bias"] = (cfg.hidden_size,)
    shapes["attn.input.w"] = (cfg.in_dim, cfg.d_model)
    shapes["attn.input.b"] = (cfg.d_model,)
    for layer in range(cfg.n_layers):
        p = f"attn.L{layer}"
        for name in ("w_q", "w_k", "w_v", "w_o"):
            shapes[f"{p}.{name}"] = (cfg.d_model, cfg.d_model)
        for name in ("b_q", "b_k", "b_v", "b_o"):
            shapes[f"{p}.{name}"] = (cfg.d_model,)
        shapes[f"{p}.ff.w1"] = (cfg.d_model, cfg.ff_mult * cfg.d_model)
        shapes[f"{p}.ff.b1"] = (cfg.ff_mult * cfg.d_model,)
        shapes[f"{p}.ff.w2"] = (cfg.ff_mult * cfg.d_model, cfg.d_model)
        shapes[f"{p}.ff.b2"] = (cfg.d_model,)
        shapes[f"{p}.ln1.scale"] = (cfg.d_model,)
        shapes[f"{p}.ln1.shift"] = (cfg.d_model,)
        shapes[f"{p}.ln2.scale"] = (cfg.d_model,)
        shapes[f"{p}.ln2.shift"] = (cfg.d_model,)
    shapes["fusion.w"] = (cfg.hidden_size + cfg.d_model, cfg.fused_size)
    shapes["fusion.b"] = (cfg.fused_size,)
    return shapes


@dataclass
class WeightBundle:
    config: TemporalConfig
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, shape in expected_shapes(self.config).items():
            if name not in self.arrays:
                raise ShapeMismatch(f"missing weight {name}")
            got = self.arrays[name].shape
            if got != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {got}")
        for name, arr in self.arrays.items():
            if not np.all(np.isfinite(arr)):
                raise ShapeMismatch(f"{name} contains non-finite values")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]


def zero_weights(cfg: TemporalConfig) -> WeightBundle:
    return WeightBundle(cfg, {n: np.zeros(s) for n, s in expected_shapes(cfg).items()})


def demo_weights(cfg: TemporalConfig, seed: int = 0) -> WeightBundle:
    """Small random weights for exercising the stack without trained ones."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in expected_shapes(cfg).items():
        if name.endswith((".bias", ".b", ".b_q", ".b_k", ".b_v", ".b_o", ".b1", ".b2", ".shift")):
            arrays[name] = np.zeros(shape)
        elif name.endswith(".scale"):
            arrays[name] = np.ones(shape)
        else:
            arrays[name] = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), shape)
    arrays["openset.centroid"] = rng.normal(0.0, 0.1, (cfg.fused_size,))
    return WeightBundle(cfg, arrays)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def local_recurrent_pass(x: np.ndarray, w: WeightBundle) -> HiddenSeq:
    """Left-to-right gated recurrence from zero state; one hidden row per frame."""
    cfg = w.config
    if x.ndim != 2 or x.shape[1] != cfg.in_dim:
        raise ShapeMismatch(f"input {x.shape} incompatible with in_dim {cfg.in_dim}")
    h = np.zeros(cfg.hidden_size)
    c = np.zeros(cfg.hidden_size)
    out = np.empty((x.shape[0], cfg.hidden_size))
    for f in range(x.shape[0]):
        pre = {
            gate: x[f] @ w[f"lstm.{gate}.w_in"] + h @ w[f"lstm.{gate}.w_rec"] + w[f"lstm.{gate}.bias"]
            for gate in GATES
        }
        i = _sigmoid(pre["input"])
        fg = _sigmoid(pre["forget"])
        g = np.tanh(pre["cell"])
        o = _sigmoid(pre["output"])
        c = fg * c + i * g
        h = o * np.tanh(c)
        out[f] = h
    return HiddenSeq(out, "local")


def sinusoidal_positions(n_frames: int, d_model: int) -> np.ndarray:
    pos = np.arange(n_frames)[:, None]
    dim = np.arange(0, d_model, 2)[None, :]
    angle = pos / np.power(10000.0, dim / d_model)
    pe = np.zeros((n_frames, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return pe


def _layer_norm(x: np.ndarray, scale: np.ndarray, shift: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * scale + shift


def global_attention_pass(
    x: np.ndarray, w: WeightBundle, return_attention: bool = False
) -> "HiddenSeq | tuple[HiddenSeq, list[np.ndarray]]":
    """Pre-norm self-attention stack; positions added once after input projection."""
    cfg = w.config
    if x.ndim != 2 or x.shape[1] != cfg.in_dim:
        raise ShapeMismatch(f"input {x.shape} incompatible with in_dim {cfg.in_dim}")
    n = x.shape[0]
    d_k = cfg.d_model // cfg.n_heads
    h = x @ w["attn.input.w"] + w["attn.input.b"]
    h = h + sinusoidal_positions(n, cfg.d_model)
    attention_maps = []
    for layer in range(cfg.n_layers):
        p = f"attn.L{layer}"
        u = _layer_norm(h, w[f"{p}.ln1.scale"], w[f"{p}.ln1.shift"])
        q = u @ w[f"{p}.w_q"] + w[f"{p}.b_q"]
        k = u @ w[f"{p}.w_k"] + w[f"{p}.b_k"]
        v = u @ w[f"{p}.w_v"] + w[f"{p}.b_v"]
        heads = []
        for head in range(cfg.n_heads):
            sl = slice(head * d_k, (head + 1) * d_k)
            scores = q[:, sl] @ k[:, sl].T / np.sqrt(d_k)
            scores -= scores.max(axis=1, keepdims=True)
            probs = np.exp(scores)
            probs /= probs.sum(axis=1, keepdims=True)
            if return_attention:
                attention_maps.append(probs)
            heads.append(probs @ v[:, sl])
        h = h + np.concatenate(heads, axis=1) @ w[f"{p}.w_o"] + w[f"{p}.b_o"]
        u = _layer_norm(h, w[f"{p}.ln2.scale"], w[f"{p}.ln2.shift"])
        ff = np.maximum(u @ w[f"{p}.ff.w1"] + w[f"{p}.ff.b1"], 0.0) @ w[f"{p}.ff.w2"] + w[f"{p}.ff.b2"]
        h = h + ff
    seq = HiddenSeq(h, "global")
    return (seq, attention_maps) if return_attention else seq


def fuse(local: HiddenSeq, glob: HiddenSeq, w: WeightBundle) -> HiddenSeq:
    """Per-frame concat + affine projection, the multi-scale representation."""
    if local.n_frames != glob.n_frames:
        raise FrameCountMismatch(f"{local.n_frames} vs {glob.n_frames} frames")
    joined = np.concatenate([local.data, glob.data], axis=1)
    if joined.shape[1] != w["fusion.w"].shape[0]:
        raise ShapeMismatch(f"fusion input {joined.shape[1]} vs {w['fusion.w'].shape[0]}")
    return HiddenSeq(joined @ w["fusion.w"] + w["fusion.b"], "fused")


def multi_scale_pass(x: np.ndarray, w: WeightBundle) -> HiddenSeq:
    return fuse(local_recurrent_pass(x, w), global_attention_pass(x, w), w)


def pooled_atypicality(fused: HiddenSeq, w: WeightBundle) -> float:
    """Distance of the mean-pooled fused sequence to the stored centroid, squashed to [0,1)."""
    centroid = w.arrays.get("openset.centroid")
    if centroid is None:
        raise ShapeMismatch("bundle has no openset.centroid")
    d = float(np.linalg.norm(fused.data.mean(axis=0) - centroid))
    return d / (1.0 + d)


def save_weights(path: str, bundle: WeightBundle) -> None:
    """Flat binary container: magic, version, count, then (name, shape, float32) records."""
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(struct.pack("<II", WEIGHT_VERSION, len(bundle.arrays)))
        for name in sorted(bundle.arrays):
            arr = np.ascontiguousarray(bundle.arrays[name], dtype="<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_weights(path: str, cfg: TemporalConfig) -> WeightBundle:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != WEIGHT_MAGIC:
        raise BadWeightFile("bad magic")
    try:
        version, count = struct.unpack_from("<II", data, 4)
        if version != WEIGHT_VERSION:
            raise BadWeightFile(f"unknown version {version}")
        pos = 12
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + name_len].decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<B", data, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", data, pos)
            pos += 4 * ndim
            n_values = int(np.prod(shape)) if ndim else 1
            end = pos + 4 * n_values
            if end > len(data):
                raise BadWeightFile(f"record {name!r} truncated")
            arrays[name] = (
                np.frombuffer(data[pos:end], dtype="<f4").astype(np.float64).reshape(shape)
            )
            pos = end
    except struct.error as exc:
        raise BadWeightFile(f"truncated container: {exc}") from None
    return WeightBundle(cfg, arrays)
