"""Frame grids, kernels, zero-padded convolution and the delayed-frame ring."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import InsufficientHistory, InvalidInput, InvalidParam

BOUNDARY_POLICIES = ("zero-pad",)


@dataclass
class Frame:
    """A grayscale grid; ``data`` is indexed ``[row, col]`` = ``[y, x]``."""

    data: np.ndarray
    t: int = 0

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise InvalidInput(f"frame data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidInput(f"frame has a zero dimension: {data.shape}")
        if not np.isfinite(data).all():
            raise InvalidInput("frame contains non-finite values")
        self.data = data
        self.t = int(self.t)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    @classmethod
    def zeros(cls, height, width, t=0):
        return cls(np.zeros((height, width)), t)


class FrameSequence:
    """Ordered frames of identical size, stored as one ``(T, H, W)`` array."""

    def __init__(self, frames):
        if isinstance(frames, np.ndarray):
            arr = np.asarray(frames, dtype=np.float64)
        else:
            frames = list(frames)
            if not frames:
                raise InvalidInput("empty frame sequence")
            shapes = {np.shape(f.data if isinstance(f, Frame) else f) for f in frames}
            if len(shapes) != 1:
                raise InvalidInput(f"mixed frame dimensions: {sorted(shapes)}")
            arr = np.stack([f.data if isinstance(f, Frame) else f for f in frames])
            arr = arr.astype(np.float64, copy=False)
        if arr.ndim != 3 or arr.shape[0] == 0:
            raise InvalidInput(f"sequence must be (T, H, W) with T >= 1, got {arr.shape}")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise InvalidInput(f"frames have a zero dimension: {arr.shape}")
        if not np.isfinite(arr).all():
            raise InvalidInput("sequence contains non-finite values")
        self.data = np.ascontiguousarray(arr)

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, t) -> Frame:
        if t < 0:
            t += len(self)
        return Frame(self.data[t], t)

    def __iter__(self):
        for t in range(len(self)):
            yield self[t]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class Kernel:
    radius: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        size = 2 * self.radius + 1
        if self.radius < 0 or w.shape != (size, size):
            raise InvalidParam(f"kernel of radius {self.radius} needs shape {(size, size)}, got {w.shape}")
        if not np.isfinite(w).all():
            raise InvalidParam("kernel weights must be finite")
        object.__setattr__(self, "weights", w)

    def rotate180(self) -> "Kernel":
        return Kernel(self.radius, self.weights[::-1, ::-1].copy())


@dataclass(frozen=True)
class DelayMap:
    """Integer frame delay per kernel tap; ``delays[v+R, u+R]`` for offset (u, v)."""

    delays: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.ascontiguousarray(self.delays, dtype=np.intp)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] % 2 != 1:
            raise InvalidParam(f"delay map must be square with odd side, got {d.shape}")
        if (d < 0).any():
            raise InvalidParam("delays must be non-negative")
        object.__setattr__(self, "delays", d)

    @property
    def radius(self) -> int:
        return self.delays.shape[0] // 2

    @property
    def max_delay(self) -> int:
        return int(self.delays.max())


def _offset_grid(radius):
    r = np.arange(-radius, radius + 1, dtype=np.float64)
    v, u = np.meshgrid(r, r, indexing="ij")
    return u, v


def gaussian_kernel(sigma: float, radius: int) -> Kernel:
    """Isotropic Gaussian on a (2r+1)^2 support, normalised to sum 1."""
    if not sigma > 0:
        raise InvalidParam(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise InvalidParam(f"radius must be >= 1, got {radius}")
    u, v = _offset_grid(radius)
    w = np.exp(-(u * u + v * v) / (2.0 * sigma * sigma))
    return Kernel(radius, w / w.sum())


def delay_map(alpha: float, beta: float, lam: float, radius: int) -> DelayMap:
    """Radial inhibition latency alpha + 1/(beta + exp(-lam^2 r^2)), rounded half-to-even."""
    if not beta > 0:
        raise InvalidParam(f"beta must be positive, got {beta}")
    if radius < 1:
        raise InvalidParam(f"radius must be >= 1, got {radius}")
    u, v = _offset_grid(radius)
    tau = alpha + 1.0 / (beta + np.exp(-(lam * lam) * (u * u + v * v)))
    d = np.rint(tau)  # numpy rounds half to even
    if (d < 0).any():
        raise InvalidParam(f"parameters give negative delays (min tau {tau.min():.3g})")
    return DelayMap(d.astype(np.intp))


def convolve(frame: Frame, kernel: Kernel, boundary: str = "zero-pad") -> Frame:
    if boundary not in BOUNDARY_POLICIES:
        raise InvalidParam(f"unsupported boundary policy {boundary!r}")
    if not isinstance(frame, Frame):
        frame = Frame(frame)
    return Frame(_backend.convolve2d(frame.data, kernel.weights), frame.t)


class FrameRing:
    """Fixed-capacity store of the most recent frames, addressed by frame index."""

    def __init__(self, capacity: int, height: int, width: int):
        if capacity < 1:
            raise InvalidParam(f"ring capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._buf = np.zeros((self.capacity, height, width))
        self._latest = None

    @property
    def latest(self):
        return self._latest

    def push(self, frame: Frame):
        if frame.shape != self._buf.shape[1:]:
            raise InvalidInput(f"frame shape {frame.shape} does not match ring {self._buf.shape[1:]}")
        if self._latest is not None and frame.t != self._latest + 1:
            raise InvalidInput(f"frames must be pushed in order: got t={frame.t} after t={self._latest}")
        self._buf[frame.t % self.capacity] = frame.data
        self._latest = frame.t

    def holds(self, t: int) -> bool:
        return (
            self._latest is not None
            and 0 <= t <= self._latest
            and t > self._latest - self.capacity
        )

    def lookup(self, t: int) -> Frame:
        if not self.holds(t):
            raise InsufficientHistory(f"frame {t} is outside the ring window (latest={self._latest})")
        return Frame(self._buf[t % self.capacity].copy(), t)

    def history(self, t: int, max_delay: int) -> np.ndarray:
        """Stack ``[P(t), P(t-1), ..., P(t-max_delay)]``; indices before 0 are zero frames."""
        if max_delay + 1 > self.capacity:
            raise InsufficientHistory(
                f"ring capacity {self.capacity} < max_delay + 1 = {max_delay + 1}"
            )
        out = np.zeros((max_delay + 1,) + self._buf.shape[1:])
        for d in range(max_delay + 1):
            s = t - d
            if s < 0:
                continue
            if not self.holds(s):
                raise InsufficientHistory(f"frame {s} is outside the ring window (latest={self._latest})")
            out[d] = self._buf[s % self.capacity]
        return out


def delayed_lookup(ring: FrameRing, t: int, delays: DelayMap, kernel: Kernel) -> Frame:
    """sum_{u,v} P(x-u, y-v, t-d(u,v)) w(u,v), frames before t=0 taken as zero."""
    if delays.delays.shape != kernel.weights.shape:
        raise InvalidParam("delay map and kernel supports differ")
    hist = ring.history(t, delays.max_delay)
    out = _backend.delayed_convolve_multi(hist, delays.delays, kernel.weights[None])[0]
    return Frame(out, t)


def support_radius(sigma: float) -> int:
    """Default kernel half-width: three standard deviations, rounded up."""
    return max(1, math.ceil(3.0 * sigma))
