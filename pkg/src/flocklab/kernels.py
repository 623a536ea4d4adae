"""Radial communication kernels and their range/integrability queries.

Five closed-form families are supported, covering bounded kernels that only
decay, kernels with a power singularity at zero range, compactly supported
local kernels, annular kernels that vanish near zero range, and bounded
kernels that are constant near zero range.  Each family exposes pointwise
evaluation, a monotone fat-tail minorant (when one exists), exact or
quadrature-based range integrals, and a singularity classification.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .errors import KernelDomainError, UnsupportedQueryError

__all__ = [
    "KernelKind",
    "SingularityClass",
    "KernelSpec",
    "evaluate",
    "tail_minorant",
    "has_fat_tail",
    "primitive_integral",
    "classify",
]


class KernelKind(str, Enum):
    CLASSICAL_CS = "classical_cs"
    SINGULAR_POWER = "singular_power"
    LOCAL_MOLLIFIED = "local_mollified"
    ANNULAR = "annular"
    CONSTANT_NEAR_ZERO = "constant_near_zero"


class SingularityClass(str, Enum):
    SMOOTH = "smooth"
    INTEGRABLE_SINGULAR = "integrable_singular"
    STRONG_SINGULAR = "strong_singular"


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of one radial kernel.

    lam/Lam are the lower/upper strength constants (Lam is only used by the
    power-sandwich consistency checks), beta the decay/singularity exponent,
    r0 the range scale, and moll_width the ramp width of the local family.
    """

    kind: KernelKind
    lam: float = 1.0
    Lam: float | None = None
    beta: float = 0.0
    r0: float = 1.0
    moll_width: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.Lam is None:
            object.__setattr__(self, "Lam", float(self.lam))
        if self.Lam < self.lam:
            raise ValueError(f"Lam={self.Lam} must dominate lam={self.lam}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.r0 <= 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if self.kind is KernelKind.LOCAL_MOLLIFIED:
            if self.moll_width is None:
                object.__setattr__(self, "moll_width", 0.1 * self.r0)
            if not 0 <= self.moll_width <= self.r0:
                raise ValueError(
                    f"moll_width must lie in [0, r0], got {self.moll_width}"
                )
        elif self.moll_width is not None:
            raise ValueError("moll_width only applies to the local mollified family")

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind.value,
            "lambda": self.lam,
            "Lambda": self.Lam,
            "beta": self.beta,
            "r0": self.r0,
        }
        if self.moll_width is not None:
            d["moll_width"] = self.moll_width
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(
            kind=KernelKind(d["kind"]),
            lam=float(d.get("lambda", 1.0)),
            Lam=None if d.get("Lambda") is None else float(d["Lambda"]),
            beta=float(d.get("beta", 0.0)),
            r0=float(d.get("r0", 1.0)),
            moll_width=None if d.get("moll_width") is None else float(d["moll_width"]),
        )


def _smoothstep(u):
    """C1 ramp: 0 below 0, 3u^2-2u^3 on [0,1], 1 above."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _smoothstep_primitive(u):
    """Antiderivative of _smoothstep with value 0 at u = 0."""
    u = np.asarray(u, dtype=float)
    core = np.clip(u, 0.0, 1.0)
    val = core**3 - 0.5 * core**4
    return np.where(u > 1.0, 0.5 + (u - 1.0), val)


def classify(spec: KernelSpec) -> SingularityClass:
    """Behavior at zero range: only the singular power family can blow up."""
    if spec.kind is KernelKind.SINGULAR_POWER and spec.beta > 0:
        if spec.beta >= 1.0:
            return SingularityClass.STRONG_SINGULAR
        return SingularityClass.INTEGRABLE_SINGULAR
    return SingularityClass.SMOOTH


def evaluate(spec: KernelSpec, r):
    """Evaluate the kernel at range r (scalar or array), always >= 0.

    r = 0 is allowed only for kernels bounded at zero range; negative r is
    always rejected.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise KernelDomainError("kernel range must be nonnegative")
    singular = classify(spec) is not SingularityClass.SMOOTH
    if singular and np.any(arr == 0.0):
        raise KernelDomainError("singular kernel evaluated at zero separation")
    out = _evaluate_raw(spec, arr)
    return float(out) if np.isscalar(r) or arr.ndim == 0 else out


def _evaluate_raw(spec: KernelSpec, arr: np.ndarray) -> np.ndarray:
    """Family formulas; assumes arr >= 0 and no singular zeros."""
    k, lam, beta, r0 = spec.kind, spec.lam, spec.beta, spec.r0
    if k is KernelKind.CLASSICAL_CS:
        return lam * (1.0 + arr * arr) ** (-beta / 2.0)
    if k is KernelKind.SINGULAR_POWER:
        if beta == 0.0:
            return np.full_like(arr, lam)
        with np.errstate(divide="ignore"):
            return np.where(arr > 0, lam * arr ** (-beta), np.inf)
    if k is KernelKind.LOCAL_MOLLIFIED:
        eps = spec.moll_width
        if eps == 0.0:
            return np.where(arr < r0, lam, 0.0)
        return lam * _smoothstep((r0 - arr) / eps)
    if k is KernelKind.ANNULAR:
        band = arr >= r0
        return np.where(band, lam * (1.0 + np.maximum(arr - r0, 0.0)) ** (-beta), 0.0)
    if k is KernelKind.CONSTANT_NEAR_ZERO:
        tail = np.maximum(arr - r0, 0.0)
        return lam * (1.0 + tail * tail) ** (-beta / 2.0)
    raise UnsupportedQueryError(f"unknown kernel kind {k}")


def has_fat_tail(spec: KernelSpec) -> bool:
    """True when the kernel admits a non-increasing minorant with divergent tail mass."""
    if spec.kind is KernelKind.LOCAL_MOLLIFIED:
        return False
    return spec.beta <= 1.0


def tail_minorant(spec: KernelSpec, r):
    """Monotone bounded minorant of the kernel tail, extended constantly left of r0.

    Defined only for kernels whose tail mass diverges (beta <= 1 for the
    non-compact families); matches the kernel itself wherever the kernel is
    already non-increasing.
    """
    if not has_fat_tail(spec):
        raise UnsupportedQueryError(
            f"{spec.kind.value} with beta={spec.beta} has no fat tail"
        )
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise KernelDomainError("kernel range must be nonnegative")
    k, lam, beta, r0 = spec.kind, spec.lam, spec.beta, spec.r0
    if k in (KernelKind.CLASSICAL_CS, KernelKind.CONSTANT_NEAR_ZERO):
        out = _evaluate_raw(spec, arr)  # already non-increasing and bounded
    elif k is KernelKind.ANNULAR:
        out = lam * (1.0 + np.maximum(arr - r0, 0.0)) ** (-beta)
    elif k is KernelKind.SINGULAR_POWER:
        out = lam * np.maximum(arr, r0) ** (-beta)
    else:  # pragma: no cover - excluded by has_fat_tail
        raise UnsupportedQueryError(f"unknown kernel kind {k}")
    return float(out) if np.isscalar(r) or arr.ndim == 0 else out


def primitive_integral(spec: KernelSpec, r1: float, r2: float) -> float:
    """Integral of the kernel over [r1, r2].

    Closed forms where the family admits them, adaptive quadrature
    (rel tol 1e-10) otherwise.  r1 = 0 is allowed: strongly singular kernels
    return math.inf (explicit divergence marker), all others the improper
    value.  Negative or reversed bounds are rejected.
    """
    r1, r2 = float(r1), float(r2)
    if r1 < 0 or r2 < r1:
        raise KernelDomainError(f"need 0 <= r1 <= r2, got [{r1}, {r2}]")
    if r1 == r2:
        return 0.0
    if r1 == 0.0 and classify(spec) is SingularityClass.STRONG_SINGULAR:
        return math.inf

    k, lam, beta, r0 = spec.kind, spec.lam, spec.beta, spec.r0
    if k is KernelKind.SINGULAR_POWER:
        if beta == 0.0:
            return lam * (r2 - r1)
        if beta == 1.0:
            return lam * math.log(r2 / r1)
        # improper-at-zero case has beta < 1 here, where r^(1-beta) -> 0
        lo = 0.0 if r1 == 0.0 else r1 ** (1.0 - beta)
        return lam * (r2 ** (1.0 - beta) - lo) / (1.0 - beta)
    if k is KernelKind.LOCAL_MOLLIFIED:
        eps = spec.moll_width
        plateau_hi = r0 - eps
        flat = max(0.0, min(r2, plateau_hi) - min(r1, plateau_hi))
        if eps == 0.0:
            # sharp indicator on [0, r0)
            return lam * flat
        # ramp section via the smoothstep antiderivative in u = (r0 - r)/eps
        u1 = (r0 - max(r1, plateau_hi)) / eps
        u2 = (r0 - min(r2, r0)) / eps
        ramp = 0.0
        if u1 > u2:
            ramp = eps * float(_smoothstep_primitive(u1) - _smoothstep_primitive(u2))
        return lam * (flat + ramp)
    if k is KernelKind.ANNULAR:
        a = max(r1, r0)
        if r2 <= r0:
            return 0.0
        # substitute s = 1 + r - r0
        s1, s2 = 1.0 + a - r0, 1.0 + r2 - r0
        if beta == 1.0:
            return lam * math.log(s2 / s1)
        return lam * (s2 ** (1.0 - beta) - s1 ** (1.0 - beta)) / (1.0 - beta)
    if k is KernelKind.CLASSICAL_CS:
        return _quad_bounded(spec, r1, r2)
    if k is KernelKind.CONSTANT_NEAR_ZERO:
        flat = max(0.0, min(r2, r0) - min(r1, r0))
        tail = 0.0
        if r2 > r0:
            tail = _quad_bounded(spec, max(r1, r0), r2)
        return lam * flat + tail
    raise UnsupportedQueryError(f"unknown kernel kind {k}")


def _quad_bounded(spec: KernelSpec, r1: float, r2: float) -> float:
    val, _ = quad(
        lambda r: float(_evaluate_raw(spec, np.asarray(r, dtype=float))),
        r1,
        r2,
        epsabs=0.0,
        epsrel=1e-10,
        limit=200,
    )
    return val
