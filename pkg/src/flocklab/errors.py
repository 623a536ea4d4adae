"""Typed error signals shared across the package."""


class KernelDomainError(ValueError):
    """Kernel queried outside its domain (e.g. singular kernel at zero range)."""


class UnsupportedQueryError(ValueError):
    """Quantity undefined for the given kernel/domain combination."""


class DomainMismatchError(ValueError):
    """Operation applied to a state living on the wrong domain or dimension."""


class UndefinedDirectionError(ValueError):
    """Directed distance requested for a pair with zero relative velocity."""


class InsufficientDataError(ValueError):
    """Series too short (or window empty) for the requested computation."""


class RateFitDataError(ValueError):
    """Rate fit fed nonpositive values or a window below t = 1."""


class CollisionError(RuntimeError):
    """A pair reached (or numerically passed) zero separation under a singular kernel."""

    def __init__(self, pair, t, distance, message=None):
        self.pair = tuple(int(k) for k in pair)
        self.t = float(t)
        self.distance = float(distance)
        super().__init__(
            message
            or f"pair {self.pair} reached separation {self.distance:.3e} at t={self.t:.6g}"
        )


class StiffnessError(RuntimeError):
    """Adaptive time step underflowed while resolving a close pair."""

    def __init__(self, pair, t, distance, dt):
        self.pair = tuple(int(k) for k in pair)
        self.t = float(t)
        self.distance = float(distance)
        self.dt = float(dt)
        super().__init__(
            f"dt underflow ({self.dt:.3e}) at t={self.t:.6g}; "
            f"offending pair {self.pair} at separation {self.distance:.3e}"
        )
