"""Synthetic test scenes: expanding bars, looming and receding disks, translating blocks.

Coordinates are continuous with pixel ``(row i, col j)`` covering
``[j, j+1) x [i, i+1)``; a 200x200 frame therefore has its centre at
``(100.0, 100.0)``, which is also the centre of the middle unit of a 5x5 grid.
Each pixel is the mean of a 2x2 grid of point samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import FrameSequence
from .errors import InvalidInput, InvalidParam

KINDS = ("expanding_bar", "expanding_disk", "contracting_disk", "translating_block")

_SUB = np.array([0.25, 0.75])


@dataclass(frozen=True)
class StimulusSpec:
    """Parameters of one synthetic scene.

    ``initial_size`` is the distance from the centre to the moving edge at
    frame 0 (disk radius, bar half-length, block half-side) and ``rate`` is
    the edge speed in pixels per frame.
    """

    kind: str = "expanding_disk"
    width: int = 200
    height: int = 200
    frames: int = 50
    center: Optional[Tuple[float, float]] = None
    rate: float = 3.0
    initial_size: float = 2.0
    foreground: float = 0.0
    background: float = 1.0
    bar_angle: float = 0.0
    bar_extent_deg: float = 10.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParam(f"unknown stimulus kind {self.kind!r}; expected one of {KINDS}")
        if self.width < 1 or self.height < 1:
            raise InvalidInput(f"zero-area frame {self.width}x{self.height}")
        if self.frames < 2:
            raise InvalidParam(f"need at least 2 frames, got {self.frames}")
        if self.rate < 0:
            raise InvalidParam(f"rate must be >= 0, got {self.rate}")
        if self.initial_size < 0:
            raise InvalidParam(f"initial_size must be >= 0, got {self.initial_size}")
        for name in ("foreground", "background"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParam(f"{name} must lie in [0, 1], got {v}")
        if self.bar_extent_deg <= 0:
            raise InvalidParam("bar_extent_deg must be positive")

    @property
    def centre(self) -> Tuple[float, float]:
        if self.center is None:
            return (self.width / 2.0, self.height / 2.0)
        return (float(self.center[0]), float(self.center[1]))

    @property
    def bar_thickness(self) -> float:
        # angular width mapped onto frame height: 180 deg spans the whole frame
        return self.height * self.bar_extent_deg / 180.0

    def size_at(self, t: int) -> float:
        """Edge distance from the centre at frame ``t``."""
        k = self.frames - 1 - t if self.kind == "contracting_disk" else t
        return self.initial_size + self.rate * k


def _sample_grid(width, height):
    xs = (np.arange(width)[:, None] + _SUB[None, :]).ravel()
    ys = (np.arange(height)[:, None] + _SUB[None, :]).ravel()
    return np.meshgrid(xs, ys, indexing="xy")


def _coverage(inside, width, height):
    # mean over each pixel's 2x2 samples
    return inside.reshape(height, 2, width, 2).mean(axis=(1, 3))


def _render_frame(spec: StimulusSpec, t: int, sx, sy) -> np.ndarray:
    cx, cy = spec.centre
    size = spec.size_at(t)
    if spec.kind in ("expanding_disk", "contracting_disk"):
        inside = (sx - cx) ** 2 + (sy - cy) ** 2 <= size * size
    else:
        c, s = math.cos(spec.bar_angle), math.sin(spec.bar_angle)
        if spec.kind == "translating_block":
            shift = spec.rate * (t - (spec.frames - 1) / 2.0)
            cx, cy = cx + shift * c, cy + shift * s
            along_half = across_half = spec.initial_size
        else:
            along_half = size
            across_half = spec.bar_thickness / 2.0
        dx, dy = sx - cx, sy - cy
        along = dx * c + dy * s
        across = -dx * s + dy * c
        inside = (np.abs(along) <= along_half) & (np.abs(across) <= across_half)
    cov = _coverage(inside.astype(np.float64), spec.width, spec.height)
    return spec.background + (spec.foreground - spec.background) * cov


def render(spec: StimulusSpec) -> FrameSequence:
    sx, sy = _sample_grid(spec.width, spec.height)
    frames = np.empty((spec.frames, spec.height, spec.width))
    for t in range(spec.frames):
        frames[t] = _render_frame(spec, t, sx, sy)
    return FrameSequence(frames)


def tuning_sweep(base: StimulusSpec, angles: Sequence[float]):
    """One rendered sequence per expansion-axis angle, in the given order."""
    if len(angles) == 0:
        raise InvalidParam("angle list is empty")
    return [render(replace(base, bar_angle=float(a))) for a in angles]


def looming_disk(off_center=False, **kw) -> StimulusSpec:
    """Default looming black disk; ``off_center`` puts it on the (1, 1) grid unit."""
    if off_center:
        w = kw.get("width", 200)
        h = kw.get("height", 200)
        kw.setdefault("center", (0.3 * w, 0.3 * h))
    return StimulusSpec(kind="expanding_disk", **kw)
