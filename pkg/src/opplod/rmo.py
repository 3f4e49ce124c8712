"""Radial opponent motion: pair qualification and the opponency ratio.

Two image motions form a radial opponent pair when their directions are
antiparallel within a tolerance.  Their degree of opponency is measured by
projecting both onto the bisector of the angle between their extended lines,
centring the axis on the projected midpoint of the two start points, and
comparing the projected interval of one vector with the mirror image of the
other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidInput, InvalidParam

TWO_PI = 2.0 * math.pi
DEFAULT_TOLERANCE = math.pi / 6
# boundary of the open angular interval, absorbs rounding in degree->radian input
ANGLE_EPS = 1e-12

Point = Tuple[float, float]
Interval = Tuple[float, float]


@dataclass(frozen=True)
class MotionVector:
    origin: Point
    direction: float
    magnitude: float

    def __post_init__(self):
        if not self.magnitude >= 0 or not math.isfinite(self.magnitude):
            raise InvalidInput(f"magnitude must be finite and >= 0, got {self.magnitude}")
        object.__setattr__(self, "direction", self.direction % TWO_PI)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def unit(self) -> Point:
        return (math.cos(self.direction), math.sin(self.direction))

    @property
    def tip(self) -> Point:
        ux, uy = self.unit
        return (self.origin[0] + self.magnitude * ux, self.origin[1] + self.magnitude * uy)


@dataclass(frozen=True)
class VectorPair:
    v1: MotionVector
    v2: MotionVector
    theta_t: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not 0 < self.theta_t < math.pi / 2:
            raise InvalidParam(f"angle tolerance must lie in (0, pi/2), got {self.theta_t}")

    def swapped(self) -> "VectorPair":
        return VectorPair(self.v2, self.v1, self.theta_t)


@dataclass(frozen=True)
class RmoResult:
    qualifies: bool
    rmo: float = 0.0
    bisector_point: Optional[Point] = None
    bisector_direction: Optional[Point] = None
    center: Optional[Point] = None
    proj1: Optional[Interval] = None
    proj2: Optional[Interval] = None
    symmetric_length: Optional[float] = None

    @property
    def bisector_line(self):
        if self.bisector_point is None:
            return None
        return self.bisector_point, self.bisector_direction


def antiparallel_deviation(theta1: float, theta2: float) -> float:
    """Minimal wrapped distance of ``theta1 - theta2`` from pi, in [0, pi]."""
    diff = (theta1 - theta2) % TWO_PI
    return abs(diff - math.pi)


def qualifies_as_rom(pair: VectorPair) -> bool:
    if pair.v1.magnitude == 0 or pair.v2.magnitude == 0:
        raise InvalidInput("zero-magnitude vector has no direction")
    dev = antiparallel_deviation(pair.v1.direction, pair.v2.direction)
    return dev < pair.theta_t - ANGLE_EPS


def _bisector_direction(u1, u2):
    # u1 - u2 bisects the angle between v1 and -v2, so v1 projects positively
    # and v2 negatively with the same projection angle
    bx, by = u1[0] - u2[0], u1[1] - u2[1]
    n = math.hypot(bx, by)
    if n < 1e-15:
        return u1, n
    return (bx / n, by / n), n


def _line_intersection(p1, u1, p2, u2):
    cross = u1[0] * u2[1] - u1[1] * u2[0]
    if abs(cross) < 1e-12:
        return None
    dx, dy = p2[0] - p1[0], p2[1] - p1[1]
    s = (dx * u2[1] - dy * u2[0]) / cross
    return (p1[0] + s * u1[0], p1[1] + s * u1[1])


def _axis(pair):
    v1, v2 = pair.v1, pair.v2
    u1, u2 = v1.unit, v2.unit
    b, n = _bisector_direction(u1, u2)
    mid = ((v1.origin[0] + v2.origin[0]) / 2.0, (v1.origin[1] + v2.origin[1]) / 2.0)
    # start points are mirror images about the axis origin by construction
    half = 0.5 * ((v1.origin[0] - v2.origin[0]) * b[0] + (v1.origin[1] - v2.origin[1]) * b[1])
    # cosine of the common projection angle, |u1 - u2| / 2, shared by both vectors
    c = n / 2.0 if n >= 1e-15 else 1.0
    return b, mid, half, c


def bisector_projection(pair: VectorPair) -> RmoResult:
    """Geometric half of the measure: bisector axis, centre and projected intervals."""
    v1, v2 = pair.v1, pair.v2
    b, mid, half, c = _axis(pair)
    pi_ = _line_intersection(v1.origin, v1.unit, v2.origin, v2.unit)
    if pi_ is None:  # parallel or collinear extended lines
        pi_ = mid
    t_mid = (mid[0] - pi_[0]) * b[0] + (mid[1] - pi_[1]) * b[1]
    center = (pi_[0] + t_mid * b[0], pi_[1] + t_mid * b[1])
    return RmoResult(
        qualifies=True,
        bisector_point=pi_,
        bisector_direction=b,
        center=center,
        proj1=(half, half + v1.magnitude * c),
        proj2=(-half, -half - v2.magnitude * c),
    )


def symmetric_length(proj1: Interval, proj2: Interval) -> float:
    """Twice the overlap of ``proj1`` with the reflection of ``proj2`` about 0.

    ``proj1`` runs in the positive axis direction (end >= start) and ``proj2``
    in the negative one (end <= start).
    """
    s1, e1 = proj1
    s2, e2 = proj2
    if e1 < s1 or e2 > s2:
        raise InvalidInput(f"malformed projection intervals {proj1}, {proj2}")
    r_lo, r_hi = -s2, -e2
    overlap = min(e1, r_hi) - max(s1, r_lo)
    return 2.0 * max(0.0, overlap)


def rmo(pair: VectorPair, reference: Optional[Point] = None) -> RmoResult:
    """Radial motion opponency of a vector pair, in [0, 1].

    With ``reference`` given (e.g. a receptive-field centre) only outward
    pairs qualify: both vectors must move away from the reference's
    projection on the bisector axis.
    """
    if pair.v1.magnitude == 0 or pair.v2.magnitude == 0:
        return RmoResult(qualifies=False)
    if not qualifies_as_rom(pair):
        return RmoResult(qualifies=False)
    geo = bisector_projection(pair)
    b, mid, half, c = _axis(pair)
    if reference is not None:
        s_ref = (reference[0] - mid[0]) * b[0] + (reference[1] - mid[1]) * b[1]
        if not -half <= s_ref <= half:
            return RmoResult(qualifies=False)
    a1 = pair.v1.magnitude * c
    a2 = pair.v2.magnitude * c
    # equal to symmetric_length(proj1, proj2) since the start points mirror exactly
    length = 2.0 * min(a1, a2)
    total = a1 + a2
    value = 0.0 if total <= 0 else min(1.0, max(0.0, length / total))
    return RmoResult(
        qualifies=True,
        rmo=value,
        bisector_point=geo.bisector_point,
        bisector_direction=geo.bisector_direction,
        center=geo.center,
        proj1=geo.proj1,
        proj2=geo.proj2,
        symmetric_length=length,
    )


def rmo_batch(pairs: np.ndarray, theta_t: float = DEFAULT_TOLERANCE):
    """Vectorised ``rmo`` for rows ``x1 y1 theta1 mag1 x2 y2 theta2 mag2`` (radians).

    Returns ``(qualifies, rmo)`` arrays; agrees with the scalar path.
    """
    pairs = np.asarray(pairs, dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[1] != 8:
        raise InvalidInput(f"expected (N, 8) array, got {pairs.shape}")
    t1 = np.mod(pairs[:, 2], TWO_PI)
    t2 = np.mod(pairs[:, 6], TWO_PI)
    m1, m2 = pairs[:, 3], pairs[:, 7]
    if (m1 < 0).any() or (m2 < 0).any():
        raise InvalidInput("negative magnitude")
    dev = np.abs(np.mod(t1 - t2, TWO_PI) - np.pi)
    ok = (dev < theta_t - ANGLE_EPS) & (m1 > 0) & (m2 > 0)
    u1 = np.stack([np.cos(t1), np.sin(t1)], axis=1)
    u2 = np.stack([np.cos(t2), np.sin(t2)], axis=1)
    n = np.hypot(u1[:, 0] - u2[:, 0], u1[:, 1] - u2[:, 1])
    c = np.where(n >= 1e-15, n / 2.0, 1.0)
    a1 = m1 * c
    a2 = m2 * c
    total = a1 + a2
    with np.errstate(invalid="ignore", divide="ignore"):
        value = np.where(total > 0, 2.0 * np.minimum(a1, a2) / total, 0.0)
    value = np.clip(np.where(ok, value, 0.0), 0.0, 1.0)
    return ok, value
