"""FLOPs and carbon accounting for transformer training runs.

FLOPs follow the multiply-accumulate convention (one MAC counts as one FLOP)
and only the transformer body is counted: the classification/LM head is
excluded, and so is the patch embedding unless requested.

Per layer and per sequence of ``n`` tokens at width ``d``::

    QKV + output projections   4 n d^2
    MLP (ratio r)              2 r n d^2
    attention scores + mix     2 n^2 d
"""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class ViTShape:
    width: int
    depth: int
    patch: int
    image: tuple[int, int, int] = (120, 120, 3)
    mlp_ratio: float = 4.0

    def __post_init__(self):
        h, w, c = self.image
        for name, v in (("width", self.width), ("depth", self.depth), ("patch", self.patch), ("height", h), ("image width", w), ("channels", c)):
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not self.mlp_ratio > 0:
            raise ValueError("mlp_ratio must be positive")
        if self.tokens < 1:
            raise ValueError(f"patch {self.patch} is larger than the image {h}x{w}")

    @property
    def tokens(self) -> int:
        h, w, _ = self.image
        return (w // self.patch) * (h // self.patch)


@dataclass(frozen=True)
class LMShape:
    width: int
    depth: int
    context: int
    mlp_ratio: float = 4.0

    def __post_init__(self):
        for name, v in (("width", self.width), ("depth", self.depth), ("context", self.context)):
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not self.mlp_ratio > 0:
            raise ValueError("mlp_ratio must be positive")


@dataclass(frozen=True)
class HardwareRun:
    gpu_hours: float
    avg_watts: float
    pue: float = 1.1
    carbon_intensity: float = 0.385  # kg CO2eq per kWh

    def __post_init__(self):
        if self.gpu_hours < 0:
            raise ValueError("gpu_hours must be nonnegative")
        for name in ("avg_watts", "pue", "carbon_intensity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def transformer_body_flops(tokens: int, width: int, depth: int, mlp_ratio: float = 4.0) -> float:
    n, d = tokens, width
    return float(depth * ((4 + 2 * mlp_ratio) * n * d * d + 2 * n * n * d))


def vit_forward_flops(shape: ViTShape, include_embedding: bool = False) -> float:
    flops = transformer_body_flops(shape.tokens, shape.width, shape.depth, shape.mlp_ratio)
    if include_embedding:
        flops += shape.tokens * shape.patch**2 * shape.image[2] * shape.width
    return flops


def lm_forward_flops(shape: LMShape) -> float:
    # full (non-causal) attention cost; embedding lookup and head excluded
    return transformer_body_flops(shape.context, shape.width, shape.depth, shape.mlp_ratio)


def _check_batch(batch):
    if int(batch) != batch or batch < 1:
        raise ValueError(f"batch must be a positive integer, got {batch!r}")


def train_step_flops(forward_flops: float, batch: int) -> float:
    """Forward plus a backward pass costing twice the forward."""
    _check_batch(batch)
    if not forward_flops > 0:
        raise ValueError("forward_flops must be positive")
    return 3.0 * forward_flops * batch


def distill_step_flops(student_forward: float, teacher_forward: float, batch: int) -> float:
    """Training step with a teacher queried for its forward pass only."""
    _check_batch(batch)
    if not student_forward > 0 or teacher_forward < 0:
        raise ValueError("student_forward must be positive and teacher_forward nonnegative")
    return (3.0 * student_forward + teacher_forward) * batch


def carbon(run: HardwareRun) -> tuple[float, float]:
    """Return ``(MWh, tCO2eq)`` for ``run``."""
    mwh = run.gpu_hours * run.avg_watts * run.pue / 1e6
    # MWh * 1000 kWh/MWh * kg/kWh / 1000 kg/t
    return mwh, mwh * run.carbon_intensity


_IMG = re.compile(r"^(\d+)x(\d+)(?:x(\d+))?$")


def parse_shape(text: str):
    """Parse ``vit:d=768,L=12,p=8,img=120x120x3`` or ``lm:d=768,L=12,n=1024``."""
    kind, sep, body = text.strip().partition(":")
    if not sep or kind not in ("vit", "lm"):
        raise ValueError(f"shape string must start with 'vit:' or 'lm:', got {text!r}")
    fields = {}
    for item in filter(None, body.split(",")):
        key, eq, value = item.partition("=")
        if not eq or key.strip() in fields:
            raise ValueError(f"bad field {item!r} in {text!r}")
        fields[key.strip()] = value.strip()
    try:
        common = {"width": int(fields.pop("d")), "depth": int(fields.pop("L"))}
        if "mlp" in fields:
            common["mlp_ratio"] = float(fields.pop("mlp"))
        if kind == "vit":
            common["patch"] = int(fields.pop("p"))
            if "img" in fields:
                m = _IMG.match(fields.pop("img"))
                if not m:
                    raise ValueError(f"bad image size in {text!r}")
                h, w, c = m.groups()
                common["image"] = (int(h), int(w), int(c or 3))
        else:
            common["context"] = int(fields.pop("n"))
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]!r} in {text!r}") from None
    if fields:
        raise ValueError(f"unknown fields {sorted(fields)} in {text!r}")
    return ViTShape(**common) if kind == "vit" else LMShape(**common)


def forward_flops(shape, include_embedding: bool = False) -> float:
    if isinstance(shape, ViTShape):
        return vit_forward_flops(shape, include_embedding)
    return lm_forward_flops(shape)
