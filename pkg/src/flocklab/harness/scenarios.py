"""Named, fully reproducible simulation setups and their serialization.

A scenario bundles everything a run needs: domain, kernel, initial-data
generator with its seed, stepper settings, horizon, observer schedule and
an optional Lyapunov functional to track.  Identical config plus seed
gives identical output, byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

from ..diagnostics import LyapunovConfig, LyapunovVariant, write_csv
from ..dynamics import (
    FlockState,
    ObserverSchedule,
    StepperConfig,
    Trajectory,
    initial_state,
    integrate,
)
from ..geometry import Domain, circle, euclidean
from ..kernels import KernelKind, KernelSpec, SingularityClass, classify

_MODES = ("discrete", "lagrangian")
_INITIAL_KINDS = (
    "uniform_gaussian",
    "two_agent_symmetric",
    "parallel_lines",
    "two_cluster_circle",
    "vacuum_arc",
    "lattice_circle",
)
_CIRCLE_VARIANTS = (
    LyapunovVariant.CIRCLE_I,
    LyapunovVariant.CIRCLE_II,
    LyapunovVariant.CIRCLE_III,
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Self-consistent description of one simulation run.

    ``mode`` distinguishes the equal-weight agent system ("discrete") from
    mass-weighted Lagrangian particles ("lagrangian"); discrete mode pins
    uniform weights with unit total mass.  ``initial`` carries the
    generator kind, its parameters, and the seed.
    """

    name: str
    domain: Domain
    kernel: KernelSpec
    n: int
    mode: str
    initial: dict
    stepper: StepperConfig
    horizon: float
    observers: ObserverSchedule
    lyapunov: LyapunovConfig | None = None
    output: str | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("scenario name must be nonempty")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise ValueError("horizon must be finite and nonnegative")
        init = dict(self.initial)
        kind = init.get("kind")
        if kind not in _INITIAL_KINDS:
            raise ValueError(f"unknown initial-data kind {kind!r}")
        init.setdefault("seed", 0)
        init.setdefault("params", {})
        init.setdefault("weight_mode", "uniform")
        init.setdefault("total_mass", 1.0)
        if self.mode == "discrete":
            if init["weight_mode"] != "uniform" or init["total_mass"] != 1.0:
                raise ValueError(
                    "discrete mode requires uniform weights with total mass 1"
                )
        object.__setattr__(self, "initial", init)
        if self.lyapunov is not None:
            on_circle = self.lyapunov.variant in _CIRCLE_VARIANTS
            if on_circle != self.domain.periodic:
                raise ValueError(
                    f"lyapunov variant {self.lyapunov.variant.value} does not "
                    f"match domain {self.domain.kind}"
                )
            if (self.lyapunov.variant is LyapunovVariant.EUCLIDEAN_V4
                    and classify(self.kernel) is not SingularityClass.SMOOTH):
                raise ValueError("the V4-based functional requires a smooth kernel")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain.to_dict(),
            "kernel": self.kernel.to_dict(),
            "n": self.n,
            "mode": self.mode,
            "initial": {
                "kind": self.initial["kind"],
                "seed": self.initial["seed"],
                "params": dict(self.initial["params"]),
                "weight_mode": self.initial["weight_mode"],
                "total_mass": self.initial["total_mass"],
            },
            "stepper": self.stepper.to_dict(),
            "horizon": self.horizon,
            "observers": self.observers.to_dict(),
            "lyapunov": None if self.lyapunov is None else self.lyapunov.to_dict(),
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        lyap = d.get("lyapunov")
        return cls(
            name=d["name"],
            domain=Domain.from_dict(d["domain"]),
            kernel=KernelSpec.from_dict(d["kernel"]),
            n=int(d["n"]),
            mode=d["mode"],
            initial=dict(d["initial"]),
            stepper=StepperConfig.from_dict(d["stepper"]),
            horizon=float(d["horizon"]),
            observers=ObserverSchedule.from_dict(d["observers"]),
            lyapunov=None if lyap is None else LyapunovConfig.from_dict(lyap),
            output=d.get("output"),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:12]

    # -- execution ----------------------------------------------------------

    def build(self, seed: int | None = None) -> FlockState:
        """Construct the seeded initial state."""
        use_seed = self.initial["seed"] if seed is None else int(seed)
        return initial_state(
            self.domain,
            self.n,
            kind=self.initial["kind"],
            seed=use_seed,
            weight_mode=self.initial["weight_mode"],
            total_mass=self.initial["total_mass"],
            params=self.initial["params"],
        )

    def run(self, seed: int | None = None, horizon: float | None = None,
            record_steps: bool = False) -> Trajectory:
        use_seed = self.initial["seed"] if seed is None else int(seed)
        use_horizon = self.horizon if horizon is None else float(horizon)
        state = self.build(use_seed)
        traj = integrate(
            state,
            self.kernel,
            self.domain,
            self.stepper,
            use_horizon,
            self.observers,
            lyapunov_config=self.lyapunov,
            record_steps=record_steps,
        )
        traj.meta = {
            "scenario": self.name,
            "seed": str(use_seed),
            "mode": self.mode,
            "horizon": repr(use_horizon),
            "config_sha": self.config_hash(),
            "config": self.canonical_json(),
        }
        return traj

    def run_to_csv(self, path: str | None = None, seed: int | None = None,
                   horizon: float | None = None) -> str:
        use_seed = self.initial["seed"] if seed is None else int(seed)
        traj = self.run(seed=use_seed, horizon=horizon)
        if path is None:
            path = self.output or f"{self.name}-seed{use_seed}.csv"
        write_csv(traj.records, path, traj.meta, self.domain.dim)
        return path


def reseeded(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Copy of the config with the initial-data seed replaced."""
    init = dict(cfg.initial)
    init["seed"] = int(seed)
    return dataclasses.replace(cfg, initial=init)


# ---------------------------------------------------------------------------
# scenario library

def _two_agent(name, kernel, x0, v0, dt_max, horizon, observers, safety=0.4):
    return ScenarioConfig(
        name=name,
        domain=euclidean(1),
        kernel=kernel,
        n=2,
        mode="discrete",
        initial={
            "kind": "two_agent_symmetric",
            "seed": 0,
            "params": {"x0": x0, "v0": v0},
        },
        stepper=StepperConfig(dt_max=dt_max, safety=safety),
        horizon=horizon,
        observers=observers,
    )


def _lib_two_agent_fat_tail_escape():
    # beta = 2 tail: the pair separates forever and the conserved
    # K = v - 1/(4x) stays positive, so velocities never align.
    return _two_agent(
        "two-agent-fat-tail-escape",
        KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=2.0, r0=1.0),
        x0=1.0,
        v0=1.0,
        dt_max=0.1,
        horizon=1000.0,
        observers=ObserverSchedule("geometric", t_first=0.5, factor=1.2),
    )


def _lib_two_agent_smooth_collision():
    # Constant plateau of height 2 around the origin: the mirrored pair
    # obeys x' = v, v' = -2v exactly and crosses the origin harmlessly.
    return _two_agent(
        "two-agent-smooth-collision",
        KernelSpec(KernelKind.CONSTANT_NEAR_ZERO, lam=2.0, beta=1.0, r0=2.0),
        x0=0.5,
        v0=-2.0,
        dt_max=0.004,
        horizon=10.0,
        observers=ObserverSchedule("linear", spacing=0.1),
    )


def _lib_two_agent_weak_singular_collision():
    # Integrable singularity, strongly inbound data: finite-time collision.
    return _two_agent(
        "two-agent-weak-singular-collision",
        KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=0.5, r0=1.0),
        x0=0.5,
        v0=-3.0,
        dt_max=0.01,
        horizon=10.0,
        observers=ObserverSchedule("linear", spacing=0.05),
    )


def _lib_two_agent_strong_singular_approach():
    # beta = 1.5: the pair decelerates and stalls at a positive separation.
    return _two_agent(
        "two-agent-strong-singular-approach",
        KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=1.5, r0=1.0),
        x0=0.5,
        v0=-0.5,
        dt_max=0.01,
        horizon=100.0,
        observers=ObserverSchedule("linear", spacing=1.0),
    )


def _lib_parallel_lines_r2():
    return ScenarioConfig(
        name="parallel-lines-R2",
        domain=euclidean(2),
        kernel=KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=1.0),
        n=2,
        mode="discrete",
        initial={
            "kind": "parallel_lines",
            "seed": 0,
            "params": {"sep": 2.0, "v1": 1.0, "v2": 0.5},
        },
        stepper=StepperConfig(dt_max=0.05),
        horizon=50.0,
        observers=ObserverSchedule("linear", spacing=1.0),
    )


def _lib_euclid_classical_smooth():
    return ScenarioConfig(
        name="euclid-classical-smooth",
        domain=euclidean(2),
        kernel=KernelSpec(KernelKind.CLASSICAL_CS, lam=1.0, beta=0.5, r0=1.0),
        n=32,
        mode="discrete",
        initial={
            "kind": "uniform_gaussian",
            "seed": 0,
            "params": {"box": 2.0, "sigma": 1.0},
        },
        stepper=StepperConfig(dt_max=0.1),
        horizon=25.0,
        observers=ObserverSchedule("linear", spacing=0.25),
        lyapunov=LyapunovConfig.defaults(LyapunovVariant.EUCLIDEAN_V4),
    )


def _lib_euclid_annular_fat_tail():
    return ScenarioConfig(
        name="euclid-annular-fat-tail",
        domain=euclidean(2),
        kernel=KernelSpec(KernelKind.ANNULAR, lam=2.0, beta=0.5, r0=0.5),
        n=32,
        mode="discrete",
        initial={
            "kind": "uniform_gaussian",
            "seed": 0,
            "params": {"box": 2.0, "sigma": 1.0},
        },
        stepper=StepperConfig(dt_max=0.25, safety=1.0),
        horizon=10000.0,
        observers=ObserverSchedule("geometric", t_first=1.0, factor=1.1),
        lyapunov=LyapunovConfig.defaults(LyapunovVariant.EUCLIDEAN_V2),
    )


def _lib_torus_local_ensemble():
    # Slow clock: with tiny velocity dispersion the cluster-coarsening
    # cascade spans the whole observation window instead of finishing in
    # the first hundred time units.
    kernel = KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=0.1)
    return ScenarioConfig(
        name="torus-local-ensemble",
        domain=circle(),
        kernel=kernel,
        n=64,
        mode="discrete",
        initial={
            "kind": "uniform_gaussian",
            "seed": 0,
            "params": {"sigma": 0.001},
        },
        stepper=StepperConfig(dt_max=0.5, safety=0.8),
        horizon=10000.0,
        observers=ObserverSchedule("geometric", t_first=1.0, factor=1.1),
        lyapunov=LyapunovConfig.defaults(LyapunovVariant.CIRCLE_I, kernel),
    )


def _torus_singular(beta, variant):
    kernel = KernelSpec(KernelKind.SINGULAR_POWER, lam=1.0, beta=beta, r0=1.0)
    return ScenarioConfig(
        name=f"torus-singular-beta{beta:g}",
        domain=circle(),
        kernel=kernel,
        n=32,
        mode="discrete",
        initial={
            "kind": "lattice_circle",
            "seed": 0,
            "params": {"jitter": 0.05, "sigma": 0.5},
        },
        stepper=StepperConfig(dt_max=0.1),
        horizon=300.0,
        observers=ObserverSchedule("geometric", t_first=0.5, factor=1.15),
        lyapunov=LyapunovConfig.defaults(variant, kernel),
    )


def _lib_lagrangian_torus_weighted():
    kernel = KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=0.5)
    return ScenarioConfig(
        name="lagrangian-torus-weighted",
        domain=circle(),
        kernel=kernel,
        n=48,
        mode="lagrangian",
        initial={
            "kind": "uniform_gaussian",
            "seed": 0,
            "params": {"sigma": 1.0},
            "weight_mode": "random",
            "total_mass": 1.0,
        },
        stepper=StepperConfig(dt_max=0.2),
        horizon=100.0,
        observers=ObserverSchedule("geometric", t_first=0.5, factor=1.2),
        lyapunov=LyapunovConfig.defaults(LyapunovVariant.CIRCLE_I, kernel),
    )


def _lib_vacuum_gap_torus():
    return ScenarioConfig(
        name="vacuum-gap-torus",
        domain=circle(),
        kernel=KernelSpec(KernelKind.LOCAL_MOLLIFIED, lam=1.0, r0=0.3),
        n=48,
        mode="discrete",
        initial={
            "kind": "vacuum_arc",
            "seed": 0,
            "params": {"arc": 1.5 * math.pi, "sigma": 1.0},
        },
        stepper=StepperConfig(dt_max=0.2),
        horizon=200.0,
        observers=ObserverSchedule("geometric", t_first=0.5, factor=1.2),
    )


_LIBRARY = {
    "two-agent-fat-tail-escape": _lib_two_agent_fat_tail_escape,
    "two-agent-smooth-collision": _lib_two_agent_smooth_collision,
    "two-agent-weak-singular-collision": _lib_two_agent_weak_singular_collision,
    "two-agent-strong-singular-approach": _lib_two_agent_strong_singular_approach,
    "parallel-lines-R2": _lib_parallel_lines_r2,
    "euclid-classical-smooth": _lib_euclid_classical_smooth,
    "euclid-annular-fat-tail": _lib_euclid_annular_fat_tail,
    "torus-local-ensemble": _lib_torus_local_ensemble,
    "torus-singular-beta2": lambda: _torus_singular(2.0, LyapunovVariant.CIRCLE_II),
    "torus-singular-beta2.5": lambda: _torus_singular(2.5, LyapunovVariant.CIRCLE_III),
    "torus-singular-beta3": lambda: _torus_singular(3.0, LyapunovVariant.CIRCLE_III),
    "lagrangian-torus-weighted": _lib_lagrangian_torus_weighted,
    "vacuum-gap-torus": _lib_vacuum_gap_torus,
}


def scenario_names() -> list:
    return sorted(_LIBRARY)


def scenario(name: str, seed: int | None = None,
             horizon: float | None = None) -> ScenarioConfig:
    """Look up a library scenario, optionally replacing seed or horizon."""
    try:
        cfg = _LIBRARY[name]()
    except KeyError:
        known = ", ".join(scenario_names())
        raise KeyError(f"unknown scenario {name!r}; known: {known}") from None
    if seed is not None:
        cfg = reseeded(cfg, seed)
    if horizon is not None:
        cfg = dataclasses.replace(cfg, horizon=float(horizon))
    return cfg
