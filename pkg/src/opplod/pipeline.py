"""The looming detector stage chain and the isotropic baseline.

Per frame: photoreceptor |dL| -> excitation/delayed-inhibition summation,
once with the isotropic inhibition kernel (baseline) or once per preferred
direction with sigmoid-weighted inhibition kernels -> per-unit periphery
inhibition and opposing-motion products -> threshold screen -> squaring
enhancement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _backend
from .core import (
    DelayMap,
    Frame,
    FrameRing,
    FrameSequence,
    Kernel,
    delay_map,
    gaussian_kernel,
)
from .errors import InvalidInput, InvalidParam

DIAGONALS = (math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4)


@dataclass(frozen=True)
class DpcParams:
    sigma_e: float = 1.0
    sigma_i: float = 2.0
    kernel_radius: int = 6
    tau_alpha: float = 0.0
    tau_beta: float = 1.0
    tau_lambda: float = 0.25
    inhibition_gain: float = 4.0

    def __post_init__(self):
        if not self.sigma_e > 0 or not self.sigma_i > 0:
            raise InvalidParam("sigma_e and sigma_i must be positive")
        if self.kernel_radius < 1:
            raise InvalidParam("kernel_radius must be >= 1")
        if not self.tau_beta > 0:
            raise InvalidParam("tau_beta must be positive")
        if self.inhibition_gain < 0:
            raise InvalidParam("inhibition_gain must be >= 0")

    def excitation_kernel(self) -> Kernel:
        return gaussian_kernel(self.sigma_e, self.kernel_radius)

    def inhibition_kernel(self) -> Kernel:
        return gaussian_kernel(self.sigma_i, self.kernel_radius)

    def delays(self) -> DelayMap:
        return delay_map(self.tau_alpha, self.tau_beta, self.tau_lambda, self.kernel_radius)


@dataclass(frozen=True)
class MdeParams:
    directions: Tuple[float, ...] = DIAGONALS

    def __post_init__(self):
        dirs = tuple(float(d) for d in self.directions)
        object.__setattr__(self, "directions", dirs)
        if len(dirs) == 0 or len(dirs) % 2:
            raise InvalidParam("directions must come in opposing pairs")
        for i in range(len(dirs) // 2):
            gap = (dirs[i + len(dirs) // 2] - dirs[i]) % (2 * math.pi)
            if abs(gap - math.pi) > 1e-9:
                raise InvalidParam(
                    f"direction {dirs[i]} is not paired with its opposite at index {i + len(dirs) // 2}"
                )

    def pairs(self):
        half = len(self.directions) // 2
        return [(i, i + half) for i in range(half)]


@dataclass(frozen=True)
class OmjParams:
    screen_threshold: float = 0.3
    periphery_strength: float = 4.0

    def __post_init__(self):
        if self.screen_threshold < 0:
            raise InvalidParam("screen_threshold must be >= 0")
        if self.periphery_strength < 0:
            raise InvalidParam("periphery_strength must be >= 0")


@dataclass(frozen=True)
class EnhanceParams:
    c2: float = 10.0

    def __post_init__(self):
        if not self.c2 > 0:
            raise InvalidParam("c2 must be positive")


@dataclass(frozen=True)
class UnitGrid:
    """Tiling of opponency units over the frame.

    Each box is ``(x0, y0, w, h)``; boxes may extend past the frame edge, in
    which case the unit sees zeros there.
    """

    rows: int
    cols: int
    boxes: Tuple[Tuple[int, int, int, int], ...]
    overlap: float = 0.0

    @classmethod
    def for_frame(cls, height, width, rows=5, cols=5, overlap=0.0):
        if rows < 1 or cols < 1:
            raise InvalidParam("grid needs at least one row and column")
        if not 0.0 <= overlap < 1.0:
            raise InvalidParam(f"overlap must lie in [0, 1), got {overlap}")
        sw, sh = width / cols, height / rows
        rf_w = max(1, int(round(sw * (1.0 + overlap))))
        rf_h = max(1, int(round(sh * (1.0 + overlap))))
        boxes = []
        for r in range(rows):
            for c in range(cols):
                cx, cy = (c + 0.5) * sw, (r + 0.5) * sh
                boxes.append((int(round(cx - rf_w / 2.0)), int(round(cy - rf_h / 2.0)), rf_w, rf_h))
        grid = cls(rows, cols, tuple(boxes), overlap)
        grid.check_coverage(height, width)
        return grid

    @property
    def unit_count(self) -> int:
        return len(self.boxes)

    @property
    def centers(self):
        return [(x0 + w / 2.0, y0 + h / 2.0) for x0, y0, w, h in self.boxes]

    @property
    def rf_width(self) -> int:
        return self.boxes[0][2]

    @property
    def rf_height(self) -> int:
        return self.boxes[0][3]

    def check_coverage(self, height, width):
        covered = np.zeros((height, width), dtype=bool)
        for x0, y0, w, h in self.boxes:
            covered[max(0, y0):max(0, y0 + h), max(0, x0):max(0, x0 + w)] = True
        if not covered.all():
            raise InvalidParam("unit grid leaves pixels uncovered")


@dataclass
class ResponseRecord:
    t: int
    response: float
    roi: Optional[Tuple[int, int, int, int]] = None
    warm_up: bool = False
    model: str = "opplod"


# --- stages -----------------------------------------------------------------

def photoreceptor(curr: Frame, prev: Frame) -> Frame:
    if curr.shape != prev.shape:
        raise InvalidInput(f"frame dimensions differ: {curr.shape} vs {prev.shape}")
    return Frame(np.abs(curr.data - prev.data), curr.t)


def mde_weight(x, y, theta):
    """Sigmoid of the summed coordinates after rotating (x, y) by ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    xr = c * x - s * y
    yr = s * x + c * y
    return 1.0 / (1.0 + np.exp(-(xr + yr)))


def retained_direction(theta: float) -> Tuple[float, float]:
    """Unit image-plane direction ``(dx, dy)`` whose motion survives channel ``theta``.

    The channel's inhibition is weighted toward taps on the side where
    ``x' + y'`` grows; motion heading that way is suppressed, motion the
    other way is kept.
    """
    c, s = math.cos(theta), math.sin(theta)
    gx, gy = c + s, c - s
    n = math.hypot(gx, gy)
    return (-gx / n, -gy / n)


def build_direction_kernels(params: DpcParams, mde: MdeParams) -> List[Kernel]:
    g = params.inhibition_kernel()
    r = params.kernel_radius
    off = np.arange(-r, r + 1, dtype=np.float64)
    v, u = np.meshgrid(off, off, indexing="ij")
    return [Kernel(r, g.weights * mde_weight(u, v, th)) for th in mde.directions]


def relu(a):
    return np.maximum(a, 0.0)


class _DpcFront:
    """Photoreceptor plus excitation and delayed multi-kernel inhibition."""

    def __init__(self, height, width, params: DpcParams, inhibition_kernels: Sequence[Kernel]):
        self.params = params
        self.w_e = params.excitation_kernel()
        self.delays = params.delays()
        self.max_delay = self.delays.max_delay
        self.w_i = np.stack([k.weights for k in inhibition_kernels])
        self.ring = FrameRing(self.max_delay + 1, height, width)
        self.shape = (height, width)
        self._prev = None
        self.t = -1

    def advance(self, frame: Frame):
        if frame.shape != self.shape:
            raise InvalidInput(f"frame shape {frame.shape} does not match model {self.shape}")
        self.t += 1
        prev = self._prev if self._prev is not None else frame
        p = photoreceptor(Frame(frame.data, self.t), Frame(prev.data, self.t))
        self._prev = frame
        self.ring.push(p)
        e = _backend.convolve2d(p.data, self.w_e.weights)
        hist = self.ring.history(self.t, self.max_delay)
        i = _backend.delayed_convolve_multi(hist, self.delays.delays, self.w_i)
        return p.data, e, i


def dpc_step(p_ring: FrameRing, t: int, params: DpcParams) -> Frame:
    """Baseline summation layer: ReLU(E - gain * I) with isotropic delayed inhibition."""
    w_e = params.excitation_kernel()
    d = params.delays()
    hist = p_ring.history(t, d.max_delay)
    e = _backend.convolve2d(hist[0], w_e.weights)
    i = _backend.delayed_convolve_multi(hist, d.delays, params.inhibition_kernel().weights[None])[0]
    return Frame(relu(e - params.inhibition_gain * i), t)


def directional_dpc_step(p_ring: FrameRing, t: int, params: DpcParams, mde: MdeParams):
    """One ReLU(E - gain * I_theta) map per preferred direction."""
    w_e = params.excitation_kernel()
    d = params.delays()
    hist = p_ring.history(t, d.max_delay)
    e = _backend.convolve2d(hist[0], w_e.weights)
    kernels = np.stack([k.weights for k in build_direction_kernels(params, mde)])
    i = _backend.delayed_convolve_multi(hist, d.delays, kernels)
    return [Frame(relu(e - params.inhibition_gain * i_k), t) for i_k in i]


def periphery_mask(rf_width: int, rf_height: int, theta: float, strength: float) -> np.ndarray:
    """Inhibitory filter over one receptive field for channel ``theta``.

    Zero on the half the channel's retained motion heads into (outward
    motion) and a linear ramp down to ``-strength`` at the field edge on the
    half that motion would cross on its way to the centre.
    """
    mx, my = retained_direction(theta)
    xs = np.arange(rf_width) + 0.5 - rf_width / 2.0
    ys = np.arange(rf_height) + 0.5 - rf_height / 2.0
    proj = xs[None, :] * mx + ys[:, None] * my
    extent = abs(mx) * rf_width / 2.0 + abs(my) * rf_height / 2.0
    return strength * np.clip(proj / extent, -1.0, 0.0)


def apply_periphery(s: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return relu(s + mask * s)


def _crop(a, box):
    x0, y0, w, h = box
    hh, ww = a.shape
    out = np.zeros((h, w))
    ys, ye = max(0, y0), min(hh, y0 + h)
    xs, xe = max(0, x0), min(ww, x0 + w)
    if ys < ye and xs < xe:
        out[ys - y0:ye - y0, xs - x0:xe - x0] = a[ys:ye, xs:xe]
    return out


def unit_opponency(maps, box, mde: MdeParams, params: OmjParams, masks=None) -> np.ndarray:
    """Screened opponency map of one unit, shape ``(h, w)`` of its box."""
    crops = [_crop(m.data if isinstance(m, Frame) else m, box) for m in maps]
    if masks is not None:
        crops = [apply_periphery(c, mk) for c, mk in zip(crops, masks)]
    acc = np.zeros_like(crops[0])
    for a, b in mde.pairs():
        # opposite channel rotated 180 degrees about the unit centre
        acc += crops[a] * crops[b][::-1, ::-1]
        acc += crops[b] * crops[a][::-1, ::-1]
    acc[acc <= params.screen_threshold] = 0.0
    return acc


def omj_step(maps, grid: UnitGrid, params: OmjParams, mde: MdeParams = MdeParams()) -> Frame:
    """Opposing-motion judgement over every unit, composited by per-pixel max."""
    data = [m.data if isinstance(m, Frame) else np.asarray(m) for m in maps]
    if len(data) != len(mde.directions):
        raise InvalidInput(f"expected {len(mde.directions)} directional maps, got {len(data)}")
    h, w = data[0].shape
    t = maps[0].t if isinstance(maps[0], Frame) else 0
    out = np.zeros((h, w))
    masks = None
    if params.periphery_strength > 0:
        masks = [periphery_mask(grid.rf_width, grid.rf_height, th, params.periphery_strength)
                 for th in mde.directions]
    for box in grid.boxes:
        x0, y0, bw, bh = box
        unit = unit_opponency(data, box, mde, params, masks)
        ys, ye = max(0, y0), min(h, y0 + bh)
        xs, xe = max(0, x0), min(w, x0 + bw)
        if ys < ye and xs < xe:
            region = out[ys:ye, xs:xe]
            np.maximum(region, unit[ys - y0:ye - y0, xs - x0:xe - x0], out=region)
    return Frame(out, t)


def enhance(opponency: Frame, params: EnhanceParams) -> Frame:
    s = opponency.data
    return Frame(s * s * params.c2, opponency.t)


def bounding_box(mask: np.ndarray):
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    x0, y0 = int(xs.min()), int(ys.min())
    return (x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1)


# --- models -----------------------------------------------------------------

class DLGMD:
    """Isotropic baseline; exposes the last frame's ``P``, ``E``, ``I`` and ``S``."""

    model = "dlgmd"

    def __init__(self, height, width, dpc: DpcParams = DpcParams()):
        self.dpc = dpc
        self._front = _DpcFront(height, width, dpc, [dpc.inhibition_kernel()])
        self.P = self.E = self.I = self.S = None

    @property
    def max_delay(self):
        return self._front.max_delay

    def step(self, frame: Frame) -> ResponseRecord:
        self.P, self.E, i = self._front.advance(frame)
        self.I = i[0]
        self.S = relu(self.E - self.dpc.inhibition_gain * self.I)
        t = self._front.t
        h, w = self.S.shape
        return ResponseRecord(t, float(self.S.sum() / (w * h)), None, _warm(t, self.max_delay), self.model)


class OppLoD:
    """Full detector; exposes the last frame's intermediate layers as attributes."""

    model = "opplod"

    def __init__(self, height, width, dpc: DpcParams = DpcParams(), mde: MdeParams = MdeParams(),
                 omj: OmjParams = OmjParams(), enh: EnhanceParams = EnhanceParams(),
                 grid: Optional[UnitGrid] = None):
        self.dpc, self.mde, self.omj, self.enh = dpc, mde, omj, enh
        self.grid = grid if grid is not None else UnitGrid.for_frame(height, width)
        self.grid.check_coverage(height, width)
        self.kernels = build_direction_kernels(dpc, mde)
        self._front = _DpcFront(height, width, dpc, self.kernels)
        self.P = self.E = self.I_dirs = self.S_dirs = self.opponency = self.S_E = None

    @property
    def max_delay(self):
        return self._front.max_delay

    def step(self, frame: Frame) -> ResponseRecord:
        self.P, self.E, self.I_dirs = self._front.advance(frame)
        t = self._front.t
        self.S_dirs = [Frame(relu(self.E - self.dpc.inhibition_gain * i), t) for i in self.I_dirs]
        self.opponency = omj_step(self.S_dirs, self.grid, self.omj, self.mde).data
        self.S_E = enhance(Frame(self.opponency, t), self.enh).data
        h, w = self.S_E.shape
        roi = bounding_box(self.opponency > self.omj.screen_threshold)
        return ResponseRecord(t, float(self.S_E.sum() / (w * h)), roi, _warm(t, self.max_delay), self.model)


def _warm(t, max_delay):
    # frame 0 has no predecessor, so the first full inhibition history exists at max_delay + 1
    return t <= max_delay


def _as_sequence(seq) -> FrameSequence:
    if isinstance(seq, FrameSequence):
        return seq
    return FrameSequence(seq)


def run_opplod(seq, dpc: DpcParams = DpcParams(), mde: MdeParams = MdeParams(),
               omj: OmjParams = OmjParams(), enh: EnhanceParams = EnhanceParams(),
               grid: Optional[UnitGrid] = None) -> List[ResponseRecord]:
    seq = _as_sequence(seq)
    if len(seq) < 2:
        raise InvalidInput("need at least 2 frames")
    model = OppLoD(seq.height, seq.width, dpc, mde, omj, enh, grid)
    return [model.step(f) for f in seq]


def run_dlgmd(seq, dpc: DpcParams = DpcParams()) -> List[ResponseRecord]:
    seq = _as_sequence(seq)
    if len(seq) < 2:
        raise InvalidInput("need at least 2 frames")
    model = DLGMD(seq.height, seq.width, dpc)
    return [model.step(f) for f in seq]
