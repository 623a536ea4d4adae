"""Force law, adaptive integrator, schedules, and seeded initial data.

The integrator is validated against the one case with a usable closed form:
a mirrored pair under a kernel that is constant over the whole occupied
range, where the relative dynamics is linear and exactly solvable.
"""

import math

import numpy as np
import pytest

from flocklab.dynamics import (
    FlockState,
    ObserverSchedule,
    StepperConfig,
    initial_state,
    integrate,
    min_separation,
    momentum,
    rhs,
    velocity_diameter,
    flock_diameter,
)
from flocklab.errors import CollisionError, StiffnessError
from flocklab.geometry import TWO_PI, circle, euclidean
from flocklab.kernels import KernelKind, KernelSpec
from flocklab.harness import scenario

FLAT = KernelSpec(KernelKind.CLASSICAL_CS, lam=1.0, beta=0.0, r0=1.0)
PLATEAU = KernelSpec(KernelKind.CONSTANT_NEAR_ZERO, lam=2.0, beta=1.0, r0=2.0)


def pair_state(x0=0.5, v0=-2.0):
    return FlockState(0.0, [[x0], [-x0]], [[v0], [-v0]], [0.5, 0.5])


# ---------------------------------------------------------------------------
# force law

def test_rhs_uniform_pair():
    st = FlockState(0.0, [[0.0], [1.0]], [[1.0], [-1.0]], [0.5, 0.5])
    np.testing.assert_allclose(rhs(st, FLAT, euclidean(1)), [[-1.0], [1.0]])


def test_rhs_weighted_pair():
    st = FlockState(0.0, [[0.0], [1.0]], [[1.0], [-1.0]], [0.25, 0.75])
    np.testing.assert_allclose(rhs(st, FLAT, euclidean(1)), [[-1.5], [0.5]])


def test_rhs_three_agents_constant_kernel():
    st = FlockState(0.0, [[0.0], [1.0], [2.0]], [[0.0], [1.0], [2.0]],
                    [1 / 3, 1 / 3, 1 / 3])
    np.testing.assert_allclose(rhs(st, FLAT, euclidean(1)), [[1.0], [0.0], [-1.0]],
                               atol=1e-15)


def test_rhs_uses_minimal_image_on_circle():
    # same chart coordinates, opposite image: distance 0.2 through the seam
    st = FlockState(0.0, [[0.1], [TWO_PI - 0.1]], [[1.0], [0.0]], [0.5, 0.5])
    kern = KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=0.5, moll_width=0.0)
    acc = rhs(st, kern, circle())
    assert acc[0, 0] == pytest.approx(-0.5)
    acc_flat = rhs(st, kern, euclidean(1))
    assert acc_flat[0, 0] == 0.0


def test_single_agent_is_inert():
    st = FlockState(0.0, [[1.0]], [[2.0]], [1.0])
    np.testing.assert_array_equal(rhs(st, FLAT, euclidean(1)), [[0.0]])


# ---------------------------------------------------------------------------
# integrator accuracy

def closed_x(t, x0=0.5, v0=-2.0):
    # mirrored pair under the plateau of height 2: x' = v, v' = -2v
    return x0 + 0.5 * v0 * (1.0 - math.exp(-2.0 * t))


def test_integrates_linear_relative_dynamics_exactly():
    cfg = scenario("two-agent-smooth-collision")
    traj = cfg.run()
    assert traj.error is None
    worst = max(
        abs(s.x[0, 0] - closed_x(s.t)) for s in traj.states
    )
    assert worst < 1e-6
    v_worst = max(abs(s.v[0, 0] + 2.0 * math.exp(-2.0 * s.t)) for s in traj.states)
    assert v_worst < 1e-6


def test_rk4_fourth_order_convergence():
    errs = []
    for dt in (0.1, 0.05, 0.025):
        traj = integrate(
            pair_state(), PLATEAU, euclidean(1),
            StepperConfig(dt_max=dt, safety=1.0), 1.0,
            ObserverSchedule("linear", spacing=1.0),
        )
        errs.append(abs(traj.final_state.x[0, 0] - closed_x(1.0)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) > 3.7


def test_euler_single_step():
    st = FlockState(0.0, [[0.0], [1.0]], [[1.0], [-1.0]], [0.5, 0.5])
    cfg = StepperConfig(dt_max=0.01, method="euler")
    traj = integrate(st, FLAT, euclidean(1), cfg, 0.01,
                     ObserverSchedule("linear", spacing=0.01))
    end = traj.final_state
    np.testing.assert_allclose(end.x[:, 0], [0.01, 1.0 - 0.01])
    np.testing.assert_allclose(end.v[:, 0], [1.0 - 0.01, -1.0 + 0.01])


def test_momentum_conserved():
    st = initial_state(euclidean(2), 16, seed=3, params={"box": 2.0, "sigma": 1.0})
    traj = integrate(st, FLAT, euclidean(2), StepperConfig(dt_max=0.1), 5.0,
                     ObserverSchedule("linear", spacing=1.0))
    p0 = momentum(traj.states[0])
    drift = max(np.max(np.abs(momentum(s) - p0)) for s in traj.states)
    assert drift < 1e-12 * (1.0 + np.max(np.abs(p0)))


def test_galilean_boost_commutes():
    dom = euclidean(2)
    kern = KernelSpec(KernelKind.CLASSICAL_CS, lam=1.0, beta=0.5)
    cfg = StepperConfig(dt_max=0.05)
    sched = ObserverSchedule("linear", spacing=1.0)
    st = initial_state(dom, 12, seed=5, params={"box": 1.0, "sigma": 1.0})
    boost = np.array([0.37, -0.11])
    st_b = FlockState(0.0, st.x, st.v + boost, st.m)
    traj = integrate(st.copy(), kern, dom, cfg, 4.0, sched)
    traj_b = integrate(st_b, kern, dom, cfg, 4.0, sched)
    for s, sb in zip(traj.states, traj_b.states):
        assert s.t == sb.t
        np.testing.assert_allclose(sb.v, s.v + boost, atol=1e-10)
        np.testing.assert_allclose(sb.x, s.x + boost * s.t, atol=1e-10)


def test_integration_is_deterministic():
    def run():
        st = initial_state(euclidean(2), 8, seed=11, params={"sigma": 1.0})
        return integrate(st, FLAT, euclidean(2), StepperConfig(dt_max=0.1), 2.0,
                         ObserverSchedule("linear", spacing=0.5))
    a, b = run(), run()
    for sa, sb in zip(a.states, b.states):
        assert np.array_equal(sa.x, sb.x)
        assert np.array_equal(sa.v, sb.v)
        assert sa.diss2 == sb.diss2


# ---------------------------------------------------------------------------
# collision handling

def test_inbound_pair_under_integrable_singularity_collides():
    traj = scenario("two-agent-weak-singular-collision").run()
    assert isinstance(traj.error, (CollisionError, StiffnessError))
    # the guard stops the run just above contact, well before the horizon
    assert traj.error.distance <= 1e-6
    assert traj.error.t < 1.0
    assert traj.states[-1].t == pytest.approx(traj.error.t)


def test_slow_pair_under_strong_singularity_stalls():
    traj = scenario("two-agent-strong-singular-approach").run()
    assert traj.error is None
    dmin = traj.column("dmin")
    # equilibrium separation for this data is 4/9
    assert np.nanmin(dmin) == pytest.approx(4.0 / 9.0, abs=5e-3)


def test_guard_resolution():
    singular = KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=0.5)
    assert StepperConfig(dt_max=0.1).resolved_guard(singular) == 1e-9
    assert StepperConfig(dt_max=0.1).resolved_guard(FLAT) == 0.0
    assert StepperConfig(dt_max=0.1, d_guard=1e-6).resolved_guard(FLAT) == 1e-6


# ---------------------------------------------------------------------------
# observer schedules

def test_linear_schedule():
    sched = ObserverSchedule("linear", spacing=0.25)
    assert sched.times(0.0, 1.0) == pytest.approx([0.25, 0.5, 0.75, 1.0])
    assert sched.times(0.0, 0.0) == []
    with pytest.raises(ValueError):
        sched.times(1.0, 0.5)


def test_geometric_schedule():
    sched = ObserverSchedule("geometric", t_first=1.0, factor=2.0)
    assert sched.times(0.0, 10.0) == pytest.approx([1.0, 2.0, 4.0, 8.0, 10.0])
    # resuming mid-run skips points at or before the current time
    assert sched.times(3.0, 10.0) == pytest.approx([4.0, 8.0, 10.0])


@pytest.mark.parametrize("kwargs", [
    dict(kind="linear", spacing=0.0),
    dict(kind="geometric", t_first=0.0),
    dict(kind="geometric", factor=1.0),
    dict(kind="chebyshev"),
])
def test_schedule_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        ObserverSchedule(**kwargs)


def test_schedule_roundtrip():
    for sched in (ObserverSchedule("linear", spacing=0.5),
                  ObserverSchedule("geometric", t_first=0.5, factor=1.3)):
        assert ObserverSchedule.from_dict(sched.to_dict()) == sched


def test_record_steps_includes_observer_times():
    cfg = scenario("two-agent-smooth-collision", horizon=1.0)
    plain = cfg.run()
    dense = cfg.run(record_steps=True)
    t_dense = dense.t()
    assert len(t_dense) > len(plain.t())
    for target in plain.t():
        assert np.any(np.isclose(t_dense, target, rtol=0, atol=1e-12))


# ---------------------------------------------------------------------------
# states and initial data

def test_state_validation():
    with pytest.raises(ValueError):
        FlockState(0.0, [[0.0], [1.0]], [[0.0]], [0.5, 0.5])
    with pytest.raises(ValueError):
        FlockState(0.0, [[0.0]], [[0.0]], [0.5, 0.5])
    with pytest.raises(ValueError):
        FlockState(0.0, [[0.0]], [[0.0]], [-1.0])
    with pytest.raises(ValueError):
        FlockState(0.0, [[math.nan]], [[0.0]], [1.0])


def test_state_promotes_1d_and_copies():
    st = FlockState(0.0, [0.0, 1.0], [1.0, -1.0], [0.5, 0.5])
    assert st.x.shape == (2, 1)
    assert st.dim == 1 and st.n == 2
    dup = st.copy()
    dup.x[0, 0] = 99.0
    assert st.x[0, 0] == 0.0


def test_bulk_observables():
    st = FlockState(0.0, [[0.0, 0.0], [3.0, 4.0]], [[1.0, 0.0], [0.0, 2.0]],
                    [0.25, 0.75])
    np.testing.assert_allclose(momentum(st), [0.25, 1.5])
    assert velocity_diameter(st) == pytest.approx(math.sqrt(5.0))
    assert flock_diameter(st, euclidean(2)) == pytest.approx(5.0)
    assert min_separation(st, euclidean(2)) == pytest.approx(5.0)
    solo = FlockState(0.0, [[0.0]], [[0.0]], [1.0])
    assert min_separation(solo, euclidean(1)) == math.inf


def test_initial_state_determinism_and_weights():
    a = initial_state(circle(), 24, seed=9, weight_mode="random", total_mass=2.0)
    b = initial_state(circle(), 24, seed=9, weight_mode="random", total_mass=2.0)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.v, b.v) and np.array_equal(a.m, b.m)
    assert a.m.sum() == pytest.approx(2.0)
    assert np.all(a.m > 0)
    uni = initial_state(euclidean(2), 10, seed=0)
    np.testing.assert_allclose(uni.m, 0.1)


def test_initial_state_kinds():
    two = initial_state(euclidean(1), 2, kind="two_agent_symmetric",
                        params={"x0": 0.5, "v0": -2.0})
    np.testing.assert_allclose(two.x[:, 0], [0.5, -0.5])
    np.testing.assert_allclose(two.v[:, 0], [-2.0, 2.0])
    lines = initial_state(euclidean(2), 2, kind="parallel_lines",
                          params={"sep": 2.0, "v1": 1.0, "v2": 0.5})
    np.testing.assert_allclose(lines.x[1], [0.0, 2.0])
    clusters = initial_state(circle(), 10, kind="two_cluster_circle",
                             params={"dv": 1.0, "width": 0.2})
    assert np.all((clusters.x >= 0.0) & (clusters.x < TWO_PI))
    arc = initial_state(circle(), 10, kind="vacuum_arc", params={"arc": 1.0})
    assert np.all(arc.x <= 1.0)
    lattice = initial_state(circle(), 8, kind="lattice_circle", params={"sigma": 0.5})
    assert np.all(np.diff(lattice.x[:, 0]) > 0)


@pytest.mark.parametrize("kwargs", [
    dict(domain=circle(), n=2, kind="two_agent_symmetric", params={"x0": 1.0, "v0": 1.0}),
    dict(domain=euclidean(1), n=3, kind="two_agent_symmetric", params={"x0": 1.0, "v0": 1.0}),
    dict(domain=euclidean(1), n=2, kind="parallel_lines"),
    dict(domain=euclidean(2), n=10, kind="two_cluster_circle"),
    dict(domain=euclidean(2), n=10, kind="no_such_kind"),
    dict(domain=euclidean(2), n=10, weight_mode="lognormal"),
])
def test_initial_state_rejects_bad_requests(kwargs):
    with pytest.raises(ValueError):
        initial_state(**kwargs)


@pytest.mark.parametrize("kwargs", [
    dict(dt_max=0.0),
    dict(dt_max=0.1, safety=0.0),
    dict(dt_max=0.1, safety=1.5),
    dict(dt_max=0.1, d_guard=-1.0),
    dict(dt_max=0.1, method="rk45"),
])
def test_stepper_config_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        StepperConfig(**kwargs)


def test_integrate_rejects_dimension_mismatch():
    st = FlockState(0.0, [[0.0, 0.0]], [[1.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        integrate(st, FLAT, euclidean(1), StepperConfig(dt_max=0.1), 1.0,
                  ObserverSchedule("linear", spacing=1.0))
