"""Scalar diagnostics of flock states and sampled trajectories.

Everything here is a pure function of a state (an object carrying positions
``x`` of shape (N, d), velocities ``v`` of the same shape, weights ``m`` of
shape (N,), and a time ``t``) or of a sampled series of such states: weighted
variation moments, kernel-weighted dissipation, corrector functionals built
from directed distances, assembled monotone (Lyapunov) functionals, collision
potentials for strongly singular kernels, per-agent forward dissipation and
the induced good sets, and the energy-balance residual.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import geometry, kernels
from .errors import (
    CollisionError,
    DomainMismatchError,
    InsufficientDataError,
    KernelDomainError,
    UnsupportedQueryError,
)
from .geometry import TWO_PI, Domain
from .kernels import KernelSpec, SingularityClass

__all__ = [
    "LyapunovVariant",
    "LyapunovConfig",
    "DiagnosticsRecord",
    "GoodSetReport",
    "variation",
    "dissipation",
    "corrector_euclidean",
    "corrector_circle",
    "lyapunov",
    "collision_potential",
    "cluster_energy",
    "energy_residual",
    "good_set",
    "compute_record",
    "lyapunov_constant_search",
    "write_csv",
    "read_csv",
]


# ---------------------------------------------------------------------------
# pairwise helpers

def _pair_displacements(domain: Domain, x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    if domain.periodic:
        diff = np.mod(diff + math.pi, TWO_PI) - math.pi
        diff = np.where(diff == -math.pi, math.pi, diff)
    return diff


def _pair_distances(domain: Domain, x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(_pair_displacements(domain, x), axis=-1)


def _pair_phi(spec: KernelSpec, dist: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Kernel on off-diagonal pair distances; zero on the diagonal."""
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    vals = dist[off]
    if kernels.classify(spec) is not SingularityClass.SMOOTH and np.any(vals == 0.0):
        i, j = np.argwhere(off & (dist == 0.0))[0]
        raise CollisionError((i, j), t, 0.0)
    phi = np.zeros_like(dist)
    phi[off] = kernels._evaluate_raw(spec, vals)
    return phi


def _weight_products(m: np.ndarray) -> np.ndarray:
    return m[:, None] * m[None, :]


# ---------------------------------------------------------------------------
# variation and dissipation moments

def variation(state, p: float) -> float:
    """Weighted p-th variation sum_{i,j} m_i m_j |v_i - v_j|^p."""
    if p <= 0:
        raise ValueError(f"moment order must be positive, got {p}")
    v = np.asarray(state.v, dtype=float)
    speed = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)
    return float(np.sum(_weight_products(state.m) * speed**p))


def dissipation(state, kernel: KernelSpec, domain: Domain, p: float) -> float:
    """Kernel-weighted moment p * sum_{i,j} m_i m_j |v_i - v_j|^p phi(|x_i - x_j|)."""
    if p <= 0:
        raise ValueError(f"moment order must be positive, got {p}")
    v = np.asarray(state.v, dtype=float)
    speed = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)
    dist = _pair_distances(domain, np.asarray(state.x, dtype=float))
    phi = _pair_phi(kernel, dist, getattr(state, "t", 0.0))
    return float(p * np.sum(_weight_products(state.m) * speed**p * phi))


# ---------------------------------------------------------------------------
# correctors

def corrector_euclidean(state, r0: float, power: int = 1) -> float:
    """Directed-distance corrector sum m_i m_j |v_ij|^power psi(d_ij) chi(|x_ij|).

    Pairs with zero relative velocity contribute nothing (their directed
    distance is undefined but the |v_ij| prefactor vanishes).
    """
    if power not in (1, 3):
        raise ValueError("corrector power must be 1 or 3")
    x = np.asarray(state.x, dtype=float)
    v = np.asarray(state.v, dtype=float)
    disp = x[:, None, :] - x[None, :, :]
    dist = np.linalg.norm(disp, axis=-1)
    vdiff = v[:, None, :] - v[None, :, :]
    speed = np.linalg.norm(vdiff, axis=-1)
    moving = speed > 0.0
    directed = np.zeros_like(speed)
    np.divide(
        -np.einsum("ijk,ijk->ij", disp, vdiff),
        speed,
        out=directed,
        where=moving,
    )
    summand = np.where(
        moving,
        speed**power
        * geometry.psi_euclidean(directed, r0)
        * geometry.chi(dist, r0),
        0.0,
    )
    return float(np.sum(_weight_products(state.m) * summand))


def corrector_circle(state, r0: float) -> float:
    """Circle corrector sum m_i m_j |v_ij| psi(d_ij) with the periodic psi.

    The directed arc d_ij = -(x_i - x_j) sign(v_i - v_j) mod 2*pi is the
    contracting arc and is symmetric in (i, j); pairs with equal velocities
    contribute nothing.
    """
    x = np.asarray(state.x, dtype=float).reshape(-1)
    v = np.asarray(state.v, dtype=float).reshape(-1)
    xdiff = x[:, None] - x[None, :]  # chart difference, not minimal image
    vdiff = v[:, None] - v[None, :]
    sgn = np.sign(vdiff)
    arc = np.mod(-xdiff * sgn, TWO_PI)
    summand = np.where(sgn != 0.0, np.abs(vdiff) * geometry.psi_periodic(arc, r0), 0.0)
    return float(np.sum(_weight_products(state.m) * summand))


# ---------------------------------------------------------------------------
# Lyapunov functionals

class LyapunovVariant(str, Enum):
    EUCLIDEAN_V2 = "euclidean_v2"
    EUCLIDEAN_V4 = "euclidean_v4"
    CIRCLE_I = "circle_i"
    CIRCLE_II = "circle_ii"
    CIRCLE_III = "circle_iii"


_CIRCLE_VARIANTS = (
    LyapunovVariant.CIRCLE_I,
    LyapunovVariant.CIRCLE_II,
    LyapunovVariant.CIRCLE_III,
)


@dataclass(frozen=True)
class LyapunovConfig:
    """Variant selector plus the positive combination constants a, b, c."""

    variant: LyapunovVariant
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", LyapunovVariant(self.variant))
        for name in ("a", "b", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"constant {name} must be positive")

    @classmethod
    def defaults(cls, variant, kernel: KernelSpec | None = None) -> "LyapunovConfig":
        """Slope-derived defaults on the circle, unit constants elsewhere."""
        variant = LyapunovVariant(variant)
        if variant in _CIRCLE_VARIANTS:
            if kernel is None:
                raise DomainMismatchError("circle variants derive constants from the kernel")
            r0 = kernel.r0
            if not 0 < r0 < math.pi:
                raise DomainMismatchError("circle variants need 0 < r0 < pi")
            return cls(
                variant,
                a=math.pi / (kernel.lam * (math.pi - r0)),
                b=r0 / (math.pi - r0),
                c=1.0,
            )
        return cls(variant)

    def to_dict(self) -> dict:
        return {"variant": self.variant.value, "a": self.a, "b": self.b, "c": self.c}

    @classmethod
    def from_dict(cls, d: dict) -> "LyapunovConfig":
        return cls(
            variant=LyapunovVariant(d["variant"]),
            a=float(d.get("a", 1.0)),
            b=float(d.get("b", 1.0)),
            c=float(d.get("c", 1.0)),
        )


def _assemble_lyapunov(variant, a, b, c, n_eff, t, g, g3, v1, v2) -> float:
    if variant is LyapunovVariant.EUCLIDEAN_V2:
        return g + a * v2 + b * n_eff * v1
    if variant is LyapunovVariant.EUCLIDEAN_V4:
        return g3 + a * v2
    if variant is LyapunovVariant.CIRCLE_I:
        return g + 0.5 * c * n_eff * v1 + b * t * v2 + a * v2
    # circle II and III share the same combination
    return g + b * t * v2 + a * v2


def lyapunov(state, kernel: KernelSpec, domain: Domain, config: LyapunovConfig) -> float:
    """Assembled monotone functional for the configured variant.

    The effective agent count is 1/max(m_i), which reduces to N for uniform
    weights.
    """
    variant = config.variant
    on_circle = variant in _CIRCLE_VARIANTS
    if on_circle != domain.periodic:
        raise DomainMismatchError(
            f"variant {variant.value} does not apply to domain {domain.kind}"
        )
    n_eff = 1.0 / float(np.max(state.m))
    t = float(getattr(state, "t", 0.0))
    v1 = variation(state, 1)
    v2 = variation(state, 2)
    if on_circle:
        g = corrector_circle(state, kernel.r0)
        g3 = math.nan
    else:
        g = corrector_euclidean(state, kernel.r0, power=1)
        g3 = (
            corrector_euclidean(state, kernel.r0, power=3)
            if variant is LyapunovVariant.EUCLIDEAN_V4
            else math.nan
        )
    return float(
        _assemble_lyapunov(variant, config.a, config.b, config.c, n_eff, t, g, g3, v1, v2)
    )


def lyapunov_constant_search(
    records,
    variant,
    n_eff: float,
    a_grid=None,
    b_grid=None,
    c_grid=None,
    tol: float = 0.0,
):
    """Grid search for constants making the assembled functional descend.

    Minimizes the number of increasing sample-to-sample increments (ties
    broken by total positive increment), reusing the corrector/variation
    series already stored on the records.
    """
    variant = LyapunovVariant(variant)
    if len(records) < 2:
        raise InsufficientDataError("need at least two records")
    t = np.array([r.t for r in records])
    g = np.array([r.G for r in records])
    g3 = np.array([r.G3 for r in records])
    v1 = np.array([r.V1 for r in records])
    v2 = np.array([r.V2 for r in records])
    if a_grid is None:
        a_grid = np.geomspace(1e-2, 1e2, 17)
    if b_grid is None:
        b_grid = np.geomspace(1e-3, 1e2, 21)
    if c_grid is None:
        c_grid = np.geomspace(1e-3, 1e2, 11)
    uses_b = variant is not LyapunovVariant.EUCLIDEAN_V4
    uses_c = variant is LyapunovVariant.CIRCLE_I
    best = None
    for a in np.atleast_1d(a_grid):
        for b in np.atleast_1d(b_grid) if uses_b else (1.0,):
            for c in np.atleast_1d(c_grid) if uses_c else (1.0,):
                series = _assemble_lyapunov(
                    variant, a, b, c, n_eff, t, g, g3, v1, v2
                )
                jumps = np.diff(series)
                allowance = tol * (1.0 + abs(series[0]))
                bad = jumps > allowance
                key = (int(np.count_nonzero(bad)), float(jumps[bad].sum()))
                if best is None or key < best[0]:
                    best = (key, LyapunovConfig(variant, a=a, b=b, c=c))
    return best[1]


# ---------------------------------------------------------------------------
# collision potential and cluster energy

def collision_potential(state, domain: Domain, beta: float, r0: float) -> float:
    """Pairwise proximity potential for strongly singular kernels.

    beta > 2: sum m_i m_j min(|x_ij|, r0)^(2-beta); beta = 2 uses the
    logarithm of the truncated separation instead.  Coincident pairs are a
    collision error and beta < 2 is unsupported.
    """
    if beta < 2:
        raise UnsupportedQueryError("collision potential needs beta >= 2")
    dist = _pair_distances(domain, np.asarray(state.x, dtype=float))
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] == 0.0):
        i, j = np.argwhere(off & (dist == 0.0))[0]
        raise CollisionError((i, j), getattr(state, "t", 0.0), 0.0)
    capped = np.where(off, np.minimum(dist, r0), 1.0)
    vals = np.log(capped) if beta == 2.0 else capped ** (2.0 - beta)
    vals[~off] = 0.0
    return float(np.sum(_weight_products(state.m) * vals))


def cluster_energy(state, kernel: KernelSpec, domain: Domain, subset, c2: float = 1.0) -> float:
    """Connectivity energy sqrt(V*) + c2 * integral of the kernel from D* to 1.

    V* is the raw (unweighted) squared velocity-difference sum over the
    subset and D* its position diameter; the integral is signed, so subsets
    wider than 1 subtract tail mass.  Collapsed subsets are rejected for
    singular kernels.
    """
    idx = np.asarray(subset, dtype=int)
    if idx.size == 0:
        raise ValueError("subset must be nonempty")
    x = np.asarray(state.x, dtype=float)[idx]
    v = np.asarray(state.v, dtype=float)[idx]
    dist = _pair_distances(domain, x)
    d_star = float(np.max(dist))
    if d_star == 0.0 and kernels.classify(kernel) is not SingularityClass.SMOOTH:
        raise KernelDomainError(
            "collapsed subset: singular kernel integral from zero diameter diverges"
        )
    v_star = float(np.sum(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1) ** 2))
    if d_star <= 1.0:
        tail = kernels.primitive_integral(kernel, d_star, 1.0)
    else:
        tail = -kernels.primitive_integral(kernel, 1.0, d_star)
    return math.sqrt(v_star) + c2 * tail


# ---------------------------------------------------------------------------
# energy balance residual

def energy_residual(records) -> float:
    """Max deviation of V2(t) - V2(0) + integral of I2 over the samples.

    Uses the integrator's accumulated dissipation column when present
    (order-matched to the stepper), otherwise a trapezoid of the sampled I2.
    """
    if len(records) < 2:
        raise InsufficientDataError("need at least two records")
    t = np.array([r.t for r in records])
    v2 = np.array([r.V2 for r in records])
    acc = np.array([r.I2_int for r in records])
    if np.all(np.isfinite(acc)):
        integ = acc - acc[0]
    else:
        i2 = np.array([r.I2 for r in records])
        if not np.all(np.isfinite(i2)):
            raise InsufficientDataError("dissipation series contains non-finite values")
        integ = np.concatenate(
            ([0.0], np.cumsum(0.5 * (i2[1:] + i2[:-1]) * np.diff(t)))
        )
    return float(np.max(np.abs(v2 - v2[0] + integ)))


# ---------------------------------------------------------------------------
# good sets

@dataclass
class GoodSetReport:
    """Forward-dissipation screening of the agents after time T."""

    T: float
    delta: float
    F: np.ndarray
    members: np.ndarray
    complement_mass: float
    epsilon: float
    member_velocity_spread: float

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "delta": self.delta,
            "members": self.members.tolist(),
            "complement_mass": self.complement_mass,
            "epsilon": self.epsilon,
            "member_velocity_spread": self.member_velocity_spread,
        }


def good_set(trajectory, kernel: KernelSpec, domain: Domain, T: float, delta: float) -> GoodSetReport:
    """Agents whose forward dissipation F(alpha, T) stays below delta.

    F is the trapezoid, over stored samples in [T, horizon], of
    sum_beta m_beta phi(|x_ab|) |v_a - v_b|^2.  The report's epsilon is the
    mass-weighted total sum_a m_a F(a), which dominates delta times the
    complement mass (Chebyshev).  The velocity spread of the members is
    evaluated at the last stored sample.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    states = [s for s in trajectory.states if s.t >= T]
    if len(states) < 2:
        raise InsufficientDataError("need at least two stored samples past T")
    m = states[0].m
    times = np.array([s.t for s in states])
    g = np.empty((len(states), m.size))
    for k, s in enumerate(states):
        x = np.asarray(s.x, dtype=float)
        v = np.asarray(s.v, dtype=float)
        dist = _pair_distances(domain, x)
        phi = _pair_phi(kernel, dist, s.t)
        speed2 = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1)
        g[k] = (phi * speed2) @ m
    weights = np.zeros_like(times)
    dt = np.diff(times)
    weights[:-1] += 0.5 * dt
    weights[1:] += 0.5 * dt
    F = weights @ g
    members = np.flatnonzero(F <= delta)
    complement_mass = float(np.sum(m[F > delta]))
    epsilon = float(np.dot(m, F))
    last = trajectory.states[-1]
    if members.size >= 2:
        vm = np.asarray(last.v, dtype=float)[members]
        spread = float(
            np.max(np.linalg.norm(vm[:, None, :] - vm[None, :, :], axis=-1))
        )
    else:
        spread = 0.0
    return GoodSetReport(
        T=float(T),
        delta=float(delta),
        F=F,
        members=members,
        complement_mass=complement_mass,
        epsilon=epsilon,
        member_velocity_spread=spread,
    )


# ---------------------------------------------------------------------------
# per-sample records and CSV serialization

@dataclass
class DiagnosticsRecord:
    """One sampled row of scalar diagnostics."""

    t: float
    V1: float
    V2: float
    V4: float
    I1: float
    I2: float
    I4: float
    G: float
    G3: float
    L: float
    C: float
    D: float
    dmin: float
    momentum: tuple
    vdiam: float
    I2_int: float = math.nan
    sqrtI2_int: float = math.nan

    @staticmethod
    def column_names(dim: int) -> list:
        mom = [f"mom_{k}" for k in range(dim)]
        return (
            ["t", "V1", "V2", "V4", "I1", "I2", "I4", "G", "G3", "L", "C", "D", "dmin"]
            + mom
            + ["vdiam", "I2_int", "sqrtI2_int"]
        )

    def to_row(self) -> list:
        return (
            [
                self.t,
                self.V1,
                self.V2,
                self.V4,
                self.I1,
                self.I2,
                self.I4,
                self.G,
                self.G3,
                self.L,
                self.C,
                self.D,
                self.dmin,
            ]
            + list(self.momentum)
            + [self.vdiam, self.I2_int, self.sqrtI2_int]
        )


def compute_record(state, kernel: KernelSpec, domain: Domain, lyapunov_config=None) -> DiagnosticsRecord:
    """Evaluate the full diagnostic row for one state."""
    x = np.asarray(state.x, dtype=float)
    v = np.asarray(state.v, dtype=float)
    m = np.asarray(state.m, dtype=float)
    t = float(getattr(state, "t", 0.0))
    n = x.shape[0]
    mm = _weight_products(m)
    vdiff = v[:, None, :] - v[None, :, :]
    speed = np.linalg.norm(vdiff, axis=-1)
    dist = _pair_distances(domain, x)
    phi = _pair_phi(kernel, dist, t)
    off = ~np.eye(n, dtype=bool)

    v_moments = {p: float(np.sum(mm * speed**p)) for p in (1, 2, 4)}
    i_moments = {p: float(p * np.sum(mm * speed**p * phi)) for p in (1, 2, 4)}

    if domain.periodic:
        g = corrector_circle(state, kernel.r0)
        g3 = math.nan
    else:
        g = corrector_euclidean(state, kernel.r0, power=1)
        g3 = corrector_euclidean(state, kernel.r0, power=3)

    lyap = math.nan
    if lyapunov_config is not None:
        lyap = lyapunov(state, kernel, domain, lyapunov_config)

    coll = math.nan
    if (
        kernel.kind is kernels.KernelKind.SINGULAR_POWER
        and kernel.beta >= 2.0
    ):
        coll = collision_potential(state, domain, kernel.beta, kernel.r0)

    mom = m @ v / float(np.sum(m))
    return DiagnosticsRecord(
        t=t,
        V1=v_moments[1],
        V2=v_moments[2],
        V4=v_moments[4],
        I1=i_moments[1],
        I2=i_moments[2],
        I4=i_moments[4],
        G=g,
        G3=g3,
        L=lyap,
        C=coll,
        D=float(np.max(dist)),
        dmin=float(np.min(dist[off])) if n > 1 else math.nan,
        momentum=tuple(float(c) for c in mom),
        vdiam=float(np.max(speed)),
        I2_int=float(getattr(state, "diss2", math.nan)),
        sqrtI2_int=float(getattr(state, "diss2_root", math.nan)),
    )


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_csv(records, path, header_meta=None, dim=None):
    """Write sampled records with 17-significant-digit floats.

    Metadata (scenario hash, seed, kernel parameters, ...) goes into
    '#'-prefixed header lines so the file stays self-describing; absent
    values appear as nan.
    """
    if not records:
        raise InsufficientDataError("no records to write")
    if dim is None:
        dim = len(records[0].momentum)
    lines = []
    for key, value in (header_meta or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(",".join(DiagnosticsRecord.column_names(dim)))
    for rec in records:
        lines.append(",".join(_fmt(v) for v in rec.to_row()))
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def read_csv(path):
    """Read a trajectory CSV back into (meta dict, column dict of arrays)."""
    meta = {}
    rows = []
    names = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, value = body.split(":", 1)
                    meta[key.strip()] = value.strip()
                continue
            if names is None:
                names = line.split(",")
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if names is None:
        raise InsufficientDataError(f"no data rows in {path}")
    data = np.array(rows, dtype=float)
    return meta, {name: data[:, k] for k, name in enumerate(names)}
