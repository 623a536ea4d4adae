"""Ambient domains (Euclidean space, unit-speed circle) and auxiliary profiles.

The circle has circumference 2*pi and positions are kept on the chart
[0, 2*pi).  Displacements use the minimal image with the seam convention
that a separation of exactly pi maps to +pi.  The auxiliary cutoff and
weight profiles (chi, psi) are the piecewise-linear shapes used by the
corrector functionals.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatchError, UndefinedDirectionError

__all__ = [
    "Domain",
    "euclidean",
    "circle",
    "TWO_PI",
    "displacement",
    "directed_distance_euclidean",
    "directed_distance_circle",
    "chi",
    "psi_euclidean",
    "psi_periodic",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Domain:
    """Either d-dimensional Euclidean space or the circle of circumference 2*pi."""

    kind: str
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("euclidean", "circle"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "circle" and self.dim != 1:
            raise ValueError("the circle domain is one dimensional")
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")

    @property
    def periodic(self) -> bool:
        return self.kind == "circle"

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map positions back onto the chart (identity on Euclidean domains)."""
        if self.periodic:
            return np.mod(x, TWO_PI)
        return x

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        return cls(kind=d["kind"], dim=int(d.get("dim", 1)))


def euclidean(dim: int) -> Domain:
    return Domain("euclidean", dim)


def circle() -> Domain:
    return Domain("circle", 1)


def displacement(domain: Domain, x_i, x_j):
    """Displacement x_i - x_j; on the circle the minimal image in (-pi, pi].

    Accepts scalars/vectors or stacked arrays; broadcasting follows numpy.
    """
    diff = np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float)
    if not domain.periodic:
        return diff
    wrapped = np.mod(diff + math.pi, TWO_PI) - math.pi
    # seam: a separation of exactly pi is represented as +pi, not -pi
    wrapped = np.where(wrapped == -math.pi, math.pi, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def directed_distance_euclidean(x_ij, v_ij) -> float:
    """Signed distance -x_ij . v_ij / |v_ij| along the relative motion."""
    x = np.asarray(x_ij, dtype=float)
    v = np.asarray(v_ij, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        raise UndefinedDirectionError("relative velocity is zero")
    return float(-np.dot(x, v) / speed)


def directed_distance_circle(x_i: float, x_j: float, v_sign: float) -> float:
    """Arc length, in [0, 2*pi), traversed toward the partner at the given sign.

    Positions are read on the common chart [0, 2*pi); the result is
    -(x_i - x_j) * sign mod 2*pi and vanishes for coincident points.
    """
    if v_sign == 0.0:
        raise UndefinedDirectionError("relative velocity sign is zero")
    s = math.copysign(1.0, v_sign)
    return float(np.mod(-(float(x_i) - float(x_j)) * s, TWO_PI))


def chi(r, r0: float):
    """Range cutoff: 1 below r0, linear down to 0 at 2*r0, 0 beyond."""
    if r0 <= 0:
        raise DomainMismatchError("r0 must be positive")
    arr = np.asarray(r, dtype=float)
    out = np.clip(2.0 - arr / r0, 0.0, 1.0)
    return float(out) if np.ndim(r) == 0 else out


def psi_euclidean(x, r0: float):
    """Nondecreasing weight: 0 below -r0, x + r0 on [-r0, r0], 2*r0 above."""
    if r0 <= 0:
        raise DomainMismatchError("r0 must be positive")
    arr = np.asarray(x, dtype=float)
    out = np.clip(arr + r0, 0.0, 2.0 * r0)
    return float(out) if np.ndim(x) == 0 else out


def psi_periodic(x, r0: float):
    """2*pi-periodic weight: slope -1 on [-r0, r0] (zero at r0), rising with
    slope r0/(pi - r0) across the far arc back to 2*r0 at 2*pi - r0."""
    if not 0 < r0 < math.pi:
        raise DomainMismatchError("need 0 < r0 < pi on the circle")
    arr = np.asarray(x, dtype=float)
    # reduce to one period starting at -r0: y in [-r0, 2*pi - r0)
    y = np.mod(arr + r0, TWO_PI) - r0
    near = y <= r0
    out = np.where(near, r0 - y, (y - r0) * (r0 / (math.pi - r0)))
    return float(out) if np.ndim(x) == 0 else out
