"""Forward simulation of the actual, nonlinear-nominal, and linear plants,
plus synthesis of noisy displacement/force measurements."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kalman
from .integrators import IntegrationError, rk5_step
from .model import (PlantState, SpecimenKind, SpecimenParams,
                    TransferSystemParams, fourth_derivative, specimen_force)
from .signals import RngStream, TimeSeries

__all__ = [
    "DIVERGENCE_LIMIT",
    "NoiseLevel",
    "LinearModel",
    "PlantTrajectory",
    "MeasurementSet",
    "DivergenceError",
    "advance_states",
    "simulate_plant",
    "simulate_actual",
    "simulate_nominal",
    "nominal_transition",
    "simulate_linear",
    "synthesize_measurements",
]

# Any state component beyond this (base SI units) is treated as numerical
# blow-up rather than physics.
DIVERGENCE_LIMIT = 1.0e6

# Anchor noise statistics: displacement variance (m^2) and force variance
# (N^2) of the measured channels at the middle noise level.
SIGMA_D_SQ = 1.07e-6
SIGMA_F_SQ = 3.30e3


class NoiseLevel(enum.Enum):
    """Measurement-noise levels; displacement stds of 0.2 / 1.0 / 2.1 mm.

    The force-noise std is anchored at sqrt(3.30e3) N for L2 and scales
    across levels by the same ratio as the displacement stds.
    """

    L1 = 0.2e-3
    L2 = 1.0e-3
    L3 = 2.1e-3

    @property
    def disp_std(self) -> float:
        return self.value

    @property
    def force_std(self) -> float:
        return float(np.sqrt(SIGMA_F_SQ)) * (self.value / NoiseLevel.L2.value)


class DivergenceError(RuntimeError):
    """Raised when a simulated state exceeds the divergence guard."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


def _resolve_backend(backend: str) -> str:
    if backend == "auto":
        try:
            from . import _kernels  # noqa: F401
            return "numba"
        except ImportError:  # pragma: no cover - numba is a hard dependency
            return "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def _eq16_a():
    return np.array([[-275.92, -2.36e5, -6.43e7, -6.92e8],
                     [1.0, 0.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0, 0.0],
                     [0.0, 0.0, 1.0, 0.0]])


def _eq16_b():
    return np.array([[1.0], [0.0], [0.0], [0.0]])


def _eq16_c():
    return np.array([[0.0, 0.0, 0.0, 6.90e8],
                     [0.0, 0.0, 6.90e8, 0.0],
                     [0.0, 6.90e8, 0.0, 0.0]])


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Identified fourth-order linear plant (continuous time).

    Output rows of C are displacement, velocity, acceleration.  D is zero.
    Defaults are the identified constants and should not normally change.
    """

    A: np.ndarray = field(default_factory=_eq16_a)
    B: np.ndarray = field(default_factory=_eq16_b)
    C: np.ndarray = field(default_factory=_eq16_c)
    D: np.ndarray = field(default_factory=lambda: np.zeros((3, 1)))

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float).reshape(4, 1))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float))
        object.__setattr__(self, "D", np.asarray(self.D, dtype=float).reshape(-1, 1))
        if self.A.shape != (4, 4) or self.C.shape != (3, 4):
            raise ValueError("LinearModel dimensions must be A:4x4, C:3x4")
        if np.any(self.D != 0.0):
            raise ValueError("LinearModel feedthrough must be zero")

    def dc_gain(self) -> np.ndarray:
        return (-self.C @ np.linalg.solve(self.A, self.B)).ravel()


@dataclass(frozen=True, eq=False)
class PlantTrajectory:
    """Simulated plant states (n, 4), specimen forces (n,), and the input."""

    states: np.ndarray
    forces: np.ndarray
    input: TimeSeries

    def __post_init__(self):
        if len(self.states) != len(self.forces) or len(self.states) != len(self.input):
            raise ValueError("trajectory arrays must have equal lengths")

    def _series(self, column: int) -> TimeSeries:
        return self.input.with_values(self.states[:, column])

    @property
    def disp(self) -> TimeSeries:
        return self._series(0)

    @property
    def vel(self) -> TimeSeries:
        return self._series(1)

    @property
    def acc(self) -> TimeSeries:
        return self._series(2)

    @property
    def force(self) -> TimeSeries:
        return self.input.with_values(self.forces)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Clean and noisy displacement / force channels at a noise level."""

    disp_clean: TimeSeries
    disp_noisy: TimeSeries
    force_clean: TimeSeries
    force_noisy: TimeSeries
    level: NoiseLevel


def advance_states(kind: SpecimenKind, sp: SpecimenParams,
                   tp: TransferSystemParams, states: np.ndarray, u: float,
                   dt: float, substeps: int = 1) -> np.ndarray:
    """One sample-interval step of the canonical plant ODE with held input.

    ``states`` has shape (..., 4); the same code path serves scalar
    trajectories (shape (4,)) and particle ensembles (shape (N, 4)).
    """

    def drift(s, _t):
        x4 = fourth_derivative(kind, sp, tp, s[..., 0], s[..., 1],
                               s[..., 2], s[..., 3], u)
        return np.stack(
            [s[..., 1], s[..., 2], s[..., 3], np.asarray(x4, dtype=float)],
            axis=-1)

    h = dt / substeps
    out = np.asarray(states, dtype=float)
    for i in range(substeps):
        out = rk5_step(drift, out, i * h, h)
    return out


def simulate_plant(kind: SpecimenKind, sp: SpecimenParams,
                   tp: TransferSystemParams, input: TimeSeries,
                   substeps: int = 1, backend: str = "auto"
                   ) -> PlantTrajectory:
    """Integrate a canonical-form plant from rest under the given command.

    The command is held constant over each sample interval.  Raises
    :class:`DivergenceError` with the first divergent time stamp if any
    state component exceeds ``DIVERGENCE_LIMIT``.  ``backend`` is "auto"
    (compiled kernel when available), "numba", or "numpy".
    """
    n = len(input)
    u = input.values
    dt = input.dt
    states = np.zeros((n, 4))
    if _resolve_backend(backend) == "numba":
        from . import _kernels

        bad = _kernels.simulate_plant(
            _kernels.kind_code(kind), _kernels.params_array(sp, tp),
            u, dt, substeps, DIVERGENCE_LIMIT, states)
        if bad >= 0:
            t = input.t0 + bad * dt
            raise DivergenceError(
                f"plant state diverged (|component| > {DIVERGENCE_LIMIT:g}) "
                f"at t = {t:.6g} s", time=t)
    else:
        s = np.zeros(4)
        for k in range(n - 1):
            try:
                s = advance_states(kind, sp, tp, s, u[k], dt, substeps)
            except (IntegrationError, FloatingPointError) as e:
                t = input.t0 + (k + 1) * dt
                raise DivergenceError(
                    f"integration failed at t = {t:.6g} s: {e}", time=t) from e
            if np.any(np.abs(s) > DIVERGENCE_LIMIT):
                t = input.t0 + (k + 1) * dt
                raise DivergenceError(
                    f"plant state diverged (|component| > "
                    f"{DIVERGENCE_LIMIT:g}) at t = {t:.6g} s", time=t)
            states[k + 1] = s
    forces = specimen_force(kind, sp, states[:, 0], states[:, 1],
                            states[:, 2])
    return PlantTrajectory(states=states, forces=np.asarray(forces),
                           input=input)


def simulate_actual(sp: SpecimenParams, tp: TransferSystemParams,
                    input: TimeSeries, substeps: int = 1,
                    backend: str = "auto") -> PlantTrajectory:
    """Simulate the actual (arctan) plant; see :func:`simulate_plant`."""
    return simulate_plant(SpecimenKind.ARCTAN, sp, tp, input, substeps,
                          backend)


def simulate_nominal(sp: SpecimenParams, tp: TransferSystemParams,
                     input: TimeSeries, substeps: int = 1,
                     backend: str = "auto") -> PlantTrajectory:
    """Simulate the nonlinear-nominal (saturation) plant without noise."""
    return simulate_plant(SpecimenKind.ALGEBRAIC_SATURATION, sp, tp, input,
                          substeps, backend)


def nominal_transition(sp: SpecimenParams, tp: TransferSystemParams,
                       s, u_k: float, dt: float, w_k,
                       substeps: int = 1):
    """One discrete step of the nonlinear-nominal process model plus
    additive process noise: rk5 integration with held command, then + w_k.

    Accepts a :class:`PlantState` (returns one) or an array of shape
    (..., 4) (returns the advanced array).
    """
    scalar = isinstance(s, PlantState)
    arr = s.as_array() if scalar else np.asarray(s, dtype=float)
    out = advance_states(SpecimenKind.ALGEBRAIC_SATURATION, sp, tp, arr,
                         u_k, dt, substeps)
    out = out + np.asarray(w_k, dtype=float)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after nominal transition")
    return PlantState.from_array(out) if scalar else out


def simulate_linear(lm: LinearModel, input: TimeSeries):
    """Propagate the linear plant under zero-order-held input.

    Returns (disp, vel, acc) time series from the output rows of C.
    """
    ad, bd = kalman.discretize_zoh(lm.A, lm.B, input.dt)
    n = len(input)
    u = input.values
    xs = np.zeros((n, 4))
    x = np.zeros(4)
    bd = bd.ravel()
    for k in range(n - 1):
        x = ad @ x + bd * u[k]
        xs[k + 1] = x
    y = xs @ lm.C.T
    return (input.with_values(y[:, 0]), input.with_values(y[:, 1]),
            input.with_values(y[:, 2]))


def synthesize_measurements(traj: PlantTrajectory, level,
                            streams: tuple[RngStream, RngStream]
                            ) -> MeasurementSet:
    """Add level-scaled Gaussian noise to the displacement and force channels.

    ``level`` is a :class:`NoiseLevel`, or a (disp_std, force_std) pair for
    degenerate/custom configurations.  ``streams`` is the (displacement,
    force) noise stream pair.
    """
    if isinstance(level, NoiseLevel):
        disp_std, force_std = level.disp_std, level.force_std
        tag = level
    else:
        disp_std, force_std = level
        tag = None
    sd, sf = streams
    n = len(traj.input)
    disp_clean = traj.disp
    force_clean = traj.force
    dn = sd.generator().normal(0.0, 1.0, size=n) * disp_std
    fn = sf.generator().normal(0.0, 1.0, size=n) * force_std
    return MeasurementSet(
        disp_clean=disp_clean,
        disp_noisy=disp_clean.with_values(disp_clean.values + dn),
        force_clean=force_clean,
        force_noisy=force_clean.with_values(force_clean.values + fn),
        level=tag,
    )
