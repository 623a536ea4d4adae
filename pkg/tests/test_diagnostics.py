"""Variation moments, correctors, assembled functionals, good sets, CSV."""

import math

import numpy as np
import pytest

from flocklab import diagnostics
from flocklab.diagnostics import (
    DiagnosticsRecord,
    LyapunovConfig,
    LyapunovVariant,
    cluster_energy,
    collision_potential,
    compute_record,
    corrector_circle,
    corrector_euclidean,
    dissipation,
    energy_residual,
    good_set,
    lyapunov,
    lyapunov_constant_search,
    read_csv,
    variation,
    write_csv,
)
from flocklab.dynamics import FlockState
from flocklab.errors import (
    CollisionError,
    DomainMismatchError,
    InsufficientDataError,
    KernelDomainError,
    UnsupportedQueryError,
)
from flocklab.geometry import circle, euclidean
from flocklab.kernels import KernelKind, KernelSpec
from flocklab.harness import scenario

FLAT = KernelSpec(KernelKind.CLASSICAL_CS, lam=1.0, beta=0.0, r0=1.0)


def approach_pair():
    return FlockState(0.0, [[0.5], [-0.5]], [[-1.0], [1.0]], [0.5, 0.5])


# ---------------------------------------------------------------------------
# variation and dissipation

def test_variation_pair():
    st = approach_pair()
    assert variation(st, 1) == pytest.approx(1.0)
    assert variation(st, 2) == pytest.approx(2.0)
    assert variation(st, 4) == pytest.approx(8.0)


def test_variation_three_agents():
    st = FlockState(0.0, [[0.0], [1.0], [2.0]], [[0.0], [1.0], [2.0]],
                    [1 / 3, 1 / 3, 1 / 3])
    assert variation(st, 2) == pytest.approx(4.0 / 3.0)


def test_variation_weighted():
    st = FlockState(0.0, [[0.5], [-0.5]], [[-1.0], [1.0]], [0.25, 0.75])
    assert variation(st, 2) == pytest.approx(2 * 0.25 * 0.75 * 4.0)
    with pytest.raises(ValueError):
        variation(st, 0)


def test_dissipation_constant_kernel():
    # with phi == lam the kernel moment collapses to p * lam * V_p
    st = approach_pair()
    dom = euclidean(1)
    assert dissipation(st, FLAT, dom, 1) == pytest.approx(1.0)
    assert dissipation(st, FLAT, dom, 2) == pytest.approx(4.0)
    assert dissipation(st, FLAT, dom, 4) == pytest.approx(32.0)
    with pytest.raises(ValueError):
        dissipation(st, FLAT, dom, -1)


def test_dissipation_minimal_image():
    kern = KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=0.5, moll_width=0.0)
    st = FlockState(0.0, [[0.1], [2.0 * math.pi - 0.1]], [[1.0], [-1.0]], [0.5, 0.5])
    assert dissipation(st, kern, circle(), 2) == pytest.approx(4.0)
    # read as Euclidean coordinates the pair is out of range
    assert dissipation(st, kern, euclidean(1), 2) == 0.0


def test_dissipation_collision_detected():
    sing = KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=0.5)
    st = FlockState(0.0, [[1.0], [1.0]], [[0.0], [1.0]], [0.5, 0.5])
    with pytest.raises(CollisionError):
        dissipation(st, sing, euclidean(1), 2)


# ---------------------------------------------------------------------------
# correctors

def test_corrector_euclidean_values():
    st = approach_pair()
    assert corrector_euclidean(st, 2.0, 1) == pytest.approx(3.0)
    assert corrector_euclidean(st, 2.0, 3) == pytest.approx(12.0)
    receding = FlockState(0.0, [[0.5], [-0.5]], [[1.0], [-1.0]], [0.5, 0.5])
    assert corrector_euclidean(receding, 2.0, 1) == pytest.approx(1.0)
    far = FlockState(0.0, [[2.5], [-2.5]], [[-1.0], [1.0]], [0.5, 0.5])
    assert corrector_euclidean(far, 2.0, 1) == 0.0
    static = FlockState(0.0, [[0.5], [-0.5]], [[1.0], [1.0]], [0.5, 0.5])
    assert corrector_euclidean(static, 2.0, 1) == 0.0
    with pytest.raises(ValueError):
        corrector_euclidean(st, 2.0, 2)


def test_corrector_circle_values():
    st = FlockState(0.0, [[0.0], [2.0]], [[1.0], [0.0]], [0.5, 0.5])
    assert corrector_circle(st, 1.0) == pytest.approx(0.5 / (math.pi - 1.0))
    # coincident chart positions weight the pair by psi(0) = r0
    coincident = FlockState(0.0, [[1.0], [1.0]], [[0.0], [1.0]], [0.5, 0.5])
    assert corrector_circle(coincident, 1.0) == pytest.approx(0.5)
    aligned = FlockState(0.0, [[0.0], [2.0]], [[1.0], [1.0]], [0.5, 0.5])
    assert corrector_circle(aligned, 1.0) == 0.0


# ---------------------------------------------------------------------------
# assembled functionals

def test_lyapunov_euclidean_assembly():
    st = approach_pair()
    kern = KernelSpec(KernelKind.CLASSICAL_CS, lam=1.0, beta=0.5, r0=2.0)
    dom = euclidean(1)
    g = corrector_euclidean(st, 2.0, 1)
    g3 = corrector_euclidean(st, 2.0, 3)
    v1, v2 = variation(st, 1), variation(st, 2)
    n_eff = 1.0 / np.max(st.m)
    cfg2 = LyapunovConfig(LyapunovVariant.EUCLIDEAN_V2, a=0.5, b=0.25)
    assert lyapunov(st, kern, dom, cfg2) == pytest.approx(g + 0.5 * v2 + 0.25 * n_eff * v1)
    cfg4 = LyapunovConfig(LyapunovVariant.EUCLIDEAN_V4, a=0.5)
    assert lyapunov(st, kern, dom, cfg4) == pytest.approx(g3 + 0.5 * v2)


def test_lyapunov_circle_assembly():
    kern = KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=1.0)
    st = FlockState(2.0, [[0.0], [2.0]], [[1.0], [0.0]], [0.5, 0.5])
    g = corrector_circle(st, 1.0)
    v1, v2 = variation(st, 1), variation(st, 2)
    got = lyapunov(st, kern, circle(),
                   LyapunovConfig(LyapunovVariant.CIRCLE_I, a=2.0, b=0.5, c=0.25))
    assert got == pytest.approx(g + 0.5 * 0.25 * 2.0 * v1 + 0.5 * 2.0 * v2 + 2.0 * v2)
    got_iii = lyapunov(st, kern, circle(),
                       LyapunovConfig(LyapunovVariant.CIRCLE_III, a=2.0, b=0.5))
    assert got_iii == pytest.approx(g + 0.5 * 2.0 * v2 + 2.0 * v2)


def test_lyapunov_domain_mismatch():
    st = approach_pair()
    with pytest.raises(DomainMismatchError):
        lyapunov(st, FLAT, euclidean(1), LyapunovConfig(LyapunovVariant.CIRCLE_I))
    circ = FlockState(0.0, [[0.0], [2.0]], [[1.0], [0.0]], [0.5, 0.5])
    with pytest.raises(DomainMismatchError):
        lyapunov(circ, FLAT, circle(), LyapunovConfig(LyapunovVariant.EUCLIDEAN_V2))


def test_lyapunov_config_defaults():
    kern = KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=2.0, r0=1.0)
    cfg = LyapunovConfig.defaults(LyapunovVariant.CIRCLE_I, kern)
    assert cfg.a == pytest.approx(math.pi / (2.0 * (math.pi - 1.0)))
    assert cfg.b == pytest.approx(1.0 / (math.pi - 1.0))
    assert cfg.c == 1.0
    flat_cfg = LyapunovConfig.defaults(LyapunovVariant.EUCLIDEAN_V2)
    assert (flat_cfg.a, flat_cfg.b, flat_cfg.c) == (1.0, 1.0, 1.0)
    with pytest.raises(DomainMismatchError):
        LyapunovConfig.defaults(LyapunovVariant.CIRCLE_II)
    wide = KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=3.2)
    with pytest.raises(DomainMismatchError):
        LyapunovConfig.defaults(LyapunovVariant.CIRCLE_I, wide)
    with pytest.raises(ValueError):
        LyapunovConfig(LyapunovVariant.CIRCLE_I, a=0.0)


def test_lyapunov_constant_search():
    t = np.linspace(0.0, 5.0, 11)
    v2 = np.exp(-t)
    recs = [
        DiagnosticsRecord(t=tk, V1=math.sqrt(v) * 2, V2=v, V4=v * v, I1=0, I2=0,
                          I4=0, G=0.5 * v, G3=v, L=math.nan, C=math.nan, D=1.0,
                          dmin=1.0, momentum=(0.0,), vdiam=1.0)
        for tk, v in zip(t, v2)
    ]
    cfg = lyapunov_constant_search(recs, LyapunovVariant.EUCLIDEAN_V2, 4.0,
                                   a_grid=[2.0], b_grid=[3.0])
    assert (cfg.a, cfg.b) == (2.0, 3.0)
    assert cfg.variant is LyapunovVariant.EUCLIDEAN_V2
    found = lyapunov_constant_search(recs, LyapunovVariant.CIRCLE_I, 4.0)
    series = [found.a * r.V2 + found.b * r.t * r.V2 + 0.5 * found.c * 4.0 * r.V1 + r.G
              for r in recs]
    assert all(b <= a + 1e-12 for a, b in zip(series, series[1:]))
    with pytest.raises(InsufficientDataError):
        lyapunov_constant_search(recs[:1], LyapunovVariant.EUCLIDEAN_V2, 4.0)


# ---------------------------------------------------------------------------
# collision potential and cluster energy

def test_collision_potential_values():
    st = FlockState(0.0, [[0.25], [-0.25]], [[0.0], [0.0]], [0.5, 0.5])
    dom = euclidean(1)
    assert collision_potential(st, dom, 3.0, 1.0) == pytest.approx(1.0)
    assert collision_potential(st, dom, 2.0, 1.0) == pytest.approx(0.5 * math.log(0.5))
    # separations beyond r0 are truncated at r0
    wide = FlockState(0.0, [[1.5], [-1.5]], [[0.0], [0.0]], [0.5, 0.5])
    assert collision_potential(wide, dom, 3.0, 1.0) == pytest.approx(0.5)
    with pytest.raises(UnsupportedQueryError):
        collision_potential(st, dom, 1.9, 1.0)
    touching = FlockState(0.0, [[1.0], [1.0]], [[0.0], [0.0]], [0.5, 0.5])
    with pytest.raises(CollisionError):
        collision_potential(touching, dom, 3.0, 1.0)


def test_cluster_energy_values():
    kern = KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=2.0, r0=1.0)
    dom = euclidean(1)
    quiet = FlockState(0.0, [[0.05], [-0.05]], [[0.2], [0.2]], [0.5, 0.5])
    assert cluster_energy(quiet, kern, dom, [0, 1]) == pytest.approx(9.0)
    moving = FlockState(0.0, [[0.05], [-0.05]], [[1.0], [-1.0]], [0.5, 0.5])
    assert cluster_energy(moving, kern, dom, [0, 1]) == pytest.approx(math.sqrt(8.0) + 9.0)
    # diameters past 1 subtract tail mass
    wide = FlockState(0.0, [[1.0], [-1.0]], [[1.0], [-1.0]], [0.5, 0.5])
    assert cluster_energy(wide, kern, dom, [0, 1]) == pytest.approx(math.sqrt(8.0) - 0.5)
    with pytest.raises(ValueError):
        cluster_energy(quiet, kern, dom, [])
    collapsed = FlockState(0.0, [[1.0], [1.0], [5.0]], [[0.0], [0.0], [0.0]],
                           [1 / 3, 1 / 3, 1 / 3])
    with pytest.raises(KernelDomainError):
        cluster_energy(collapsed, kern, dom, [0, 1])
    # smooth kernels tolerate a collapsed subset
    assert cluster_energy(collapsed, FLAT, dom, [0, 1]) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# energy balance

def _balance_record(t, v2, i2, i2_int=math.nan):
    return DiagnosticsRecord(t=t, V1=0, V2=v2, V4=0, I1=0, I2=i2, I4=0, G=0,
                             G3=0, L=math.nan, C=math.nan, D=0, dmin=1.0,
                             momentum=(0.0,), vdiam=0, I2_int=i2_int)


def test_energy_residual_trapezoid_fallback():
    recs = [
        _balance_record(0.0, 2.0, 0.5),
        _balance_record(1.0, 1.5, 0.5),
        _balance_record(2.0, 1.25, 0.25),
    ]
    assert energy_residual(recs) == pytest.approx(0.125)


def test_energy_residual_prefers_accumulated_column():
    recs = [
        _balance_record(0.0, 2.0, 0.5, i2_int=0.0),
        _balance_record(1.0, 1.5, 0.5, i2_int=0.5),
        _balance_record(2.0, 1.25, 0.25, i2_int=0.75),
    ]
    assert energy_residual(recs) == 0.0
    with pytest.raises(InsufficientDataError):
        energy_residual(recs[:1])


# ---------------------------------------------------------------------------
# good sets

@pytest.fixture(scope="module")
def vacuum_run():
    cfg = scenario("vacuum-gap-torus", horizon=50.0)
    return cfg, cfg.run()


def test_good_set_epsilon_identity(vacuum_run):
    cfg, traj = vacuum_run
    rep = good_set(traj, cfg.kernel, cfg.domain, 0.0, 1.0)
    t = traj.t()
    flux = float(np.trapezoid(traj.column("I2"), t)) / 2.0
    assert rep.epsilon == pytest.approx(flux, rel=1e-12)
    assert rep.complement_mass <= rep.epsilon / rep.delta + 1e-15


def test_good_set_discriminates_delta(vacuum_run):
    cfg, traj = vacuum_run
    probe = good_set(traj, cfg.kernel, cfg.domain, 0.0, 1.0)
    lo, hi = np.percentile(probe.F, [30.0, 70.0])
    small = good_set(traj, cfg.kernel, cfg.domain, 0.0, float(lo))
    big = good_set(traj, cfg.kernel, cfg.domain, 0.0, float(hi))
    assert small.members.size < big.members.size
    assert set(small.members).issubset(set(big.members))
    assert small.member_velocity_spread <= big.member_velocity_spread + 1e-15
    assert small.complement_mass > big.complement_mass


def test_good_set_validation(vacuum_run):
    cfg, traj = vacuum_run
    with pytest.raises(ValueError):
        good_set(traj, cfg.kernel, cfg.domain, 0.0, 0.0)
    with pytest.raises(InsufficientDataError):
        good_set(traj, cfg.kernel, cfg.domain, 1e9, 1.0)


# ---------------------------------------------------------------------------
# records and CSV

def test_compute_record_pair():
    rec = compute_record(approach_pair(), FLAT, euclidean(1))
    assert rec.V1 == pytest.approx(1.0)
    assert rec.V2 == pytest.approx(2.0)
    assert rec.V4 == pytest.approx(8.0)
    assert rec.I1 == pytest.approx(1.0)
    assert rec.I2 == pytest.approx(4.0)
    assert rec.I4 == pytest.approx(32.0)
    assert rec.G == pytest.approx(2.0)
    assert rec.G3 == pytest.approx(8.0)
    assert rec.D == 1.0 and rec.dmin == 1.0
    assert rec.vdiam == pytest.approx(2.0)
    assert rec.momentum == (0.0,)
    assert math.isnan(rec.L) and math.isnan(rec.C)
    assert rec.I2_int == 0.0


def test_compute_record_collision_potential_column():
    kern = KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=3.0, r0=1.0)
    rec = compute_record(approach_pair(), kern, euclidean(1))
    assert rec.C == pytest.approx(0.5)


def test_csv_roundtrip(tmp_path):
    recs = [
        compute_record(approach_pair(), FLAT, euclidean(1)),
        _balance_record(1.0, 1.5, 0.5),
    ]
    path = tmp_path / "run.csv"
    write_csv(recs, path, header_meta={"scenario": "demo", "seed": "0"}, dim=1)
    meta, cols = read_csv(path)
    assert meta == {"scenario": "demo", "seed": "0"}
    assert cols["V2"][0] == 2.0
    assert cols["mom_0"][1] == 0.0
    assert math.isnan(cols["L"][0])
    # identical records give identical bytes
    other = tmp_path / "again.csv"
    write_csv(recs, other, header_meta={"scenario": "demo", "seed": "0"}, dim=1)
    assert path.read_bytes() == other.read_bytes()


def test_csv_errors(tmp_path):
    with pytest.raises(InsufficientDataError):
        write_csv([], tmp_path / "empty.csv")
    bare = tmp_path / "bare.csv"
    bare.write_text("# only: meta\n")
    with pytest.raises(InsufficientDataError):
        read_csv(bare)
