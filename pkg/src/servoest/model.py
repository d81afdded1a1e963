"""Plant physics: specimen restoring functions and the canonical-form drift.

The plant is a servo-hydraulic actuator driving a nonlinear specimen,
written as a single fourth-order ODE in the actuator displacement
(controllable canonical form).  Two specimen nonlinearities are supported:
an arctangent law (plays the role of the true device) and an algebraic
saturation law (the deliberately mismatched model used by the estimator).

All functions here are pure and broadcast over numpy arrays, so the same
code path serves scalar trajectory integration and vectorized particle
propagation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpecimenKind",
    "SpecimenParams",
    "TransferSystemParams",
    "PlantState",
    "eval_h",
    "eval_h_partials",
    "specimen_force",
    "fourth_derivative",
    "canonical_derivative",
]


class SpecimenKind(enum.Enum):
    """Shape of the specimen's nonlinear restoring term."""

    ARCTAN = "arctan"
    ALGEBRAIC_SATURATION = "algebraic_saturation"


def _require_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise ValueError(f"non-finite {name}")


@dataclass(frozen=True)
class SpecimenParams:
    """Physical constants of the specimen (mass-damper-spring + nonlinearity).

    m     mass (kg), > 0
    c     viscous damping (N*s/m), >= 0
    k     linear stiffness (N/m), >= 0
    k_n   nonlinear force coefficient (N)
    lam   nonlinearity sharpness (1/m), > 0
    """

    m: float
    c: float
    k: float
    k_n: float
    lam: float

    def __post_init__(self):
        for name in ("m", "c", "k", "k_n", "lam"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"SpecimenParams.{name} must be finite, got {v}")
        if self.m <= 0:
            raise ValueError(f"SpecimenParams.m must be > 0, got {self.m}")
        if self.c < 0:
            raise ValueError(f"SpecimenParams.c must be >= 0, got {self.c}")
        if self.k < 0:
            raise ValueError(f"SpecimenParams.k must be >= 0, got {self.k}")
        if self.lam <= 0:
            raise ValueError(f"SpecimenParams.lam must be > 0, got {self.lam}")


@dataclass(frozen=True)
class TransferSystemParams:
    """Identified constants of the servo-valve / actuator transfer system.

    beta1    valve pole (1/s), > 0
    a1beta1  combined valve gain (enters the displacement coefficient), > 0
    a2       pressure coefficient
    a3       actuator pole (1/s), > 0
    b        command gain; defaults to a1beta1/m elsewhere so the DC gain
             from command to displacement is ~1
    """

    beta1: float
    a1beta1: float
    a2: float
    a3: float
    b: float

    def __post_init__(self):
        for name in ("beta1", "a1beta1", "a2", "a3", "b"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"TransferSystemParams.{name} must be finite, got {v}")
        for name in ("beta1", "a1beta1", "a3", "b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"TransferSystemParams.{name} must be > 0")


@dataclass(frozen=True)
class PlantState:
    """Actuator displacement and its first three time derivatives."""

    x: float
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        for name in ("x", "x1", "x2", "x3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"PlantState.{name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x1, self.x2, self.x3], dtype=float)

    @staticmethod
    def from_array(a) -> "PlantState":
        a = np.asarray(a, dtype=float)
        return PlantState(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


def eval_h(kind: SpecimenKind, p: SpecimenParams, x, v):
    """Specific restoring term h(x, v) of the specimen, in m/s^2.

    Arctan kind:      h = -(c/m) v - (k/m) x - (k_n/m) arctan(lam x)
    Saturation kind:  h = -(c/m) v - (k/m) x - (k_n/m) lam x / sqrt(1+(lam x)^2)
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _require_finite("displacement", x)
    _require_finite("velocity", v)
    m, c, k = p.m, p.c, p.k
    u = p.lam * x
    if kind is SpecimenKind.ARCTAN:
        nonlin = np.arctan(u)
    elif kind is SpecimenKind.ALGEBRAIC_SATURATION:
        nonlin = u / np.sqrt(1.0 + u * u)
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown specimen kind {kind!r}")
    out = -(c / m) * v - (k / m) * x - (p.k_n / m) * nonlin
    return out if out.ndim else float(out)


def eval_h_partials(kind: SpecimenKind, p: SpecimenParams, x, v):
    """Closed-form partials (h_x, h_v, h_xx, h_vv, h_xv) of ``eval_h``.

    h is affine in velocity, so h_vv and h_xv vanish identically.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _require_finite("displacement", x)
    _require_finite("velocity", v)
    m, lam, k_n = p.m, p.lam, p.k_n
    u = lam * x
    if kind is SpecimenKind.ARCTAN:
        denom = 1.0 + u * u
        dg = lam / denom
        d2g = -2.0 * lam * lam * u / (denom * denom)
    elif kind is SpecimenKind.ALGEBRAIC_SATURATION:
        denom = 1.0 + u * u
        dg = lam * denom ** -1.5
        d2g = -3.0 * lam * lam * u * denom ** -2.5
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown specimen kind {kind!r}")
    h_x = -(p.k / m) - (k_n / m) * dg
    h_xx = -(k_n / m) * d2g
    h_v = np.broadcast_to(np.asarray(-p.c / m), x.shape).copy() if x.ndim else -p.c / m
    zeros = np.zeros_like(x) if x.ndim else 0.0
    if not x.ndim:
        h_x = float(h_x)
        h_xx = float(h_xx)
    return h_x, h_v, h_xx, zeros, zeros


def specimen_force(kind: SpecimenKind, p: SpecimenParams, x, v, a):
    """Specimen force F = m*a - m*h(x, v), in Newtons.

    For the arctan kind this expands to m*a + c*v + k*x + k_n*arctan(lam*x),
    i.e. the standard oscillator force plus the nonlinear term.
    """
    a = np.asarray(a, dtype=float)
    _require_finite("acceleration", a)
    out = p.m * a - p.m * eval_h(kind, p, x, v)
    return out if np.ndim(out) else float(out)


def fourth_derivative(kind, sp: SpecimenParams, tp: TransferSystemParams,
                      x, x1, x2, x3, u):
    """Fourth time derivative of displacement in the canonical form.

    Evaluates the state-dependent drift coefficients at the current state
    and returns C1*x + C2*x1 + C3*x2 + C4*x3 + C5*F + Cn + b*u.
    Broadcasts over array-valued states; ``u`` is a scalar command.
    """
    h = eval_h(kind, sp, x, x1)
    h_x, h_v, h_xx, h_vv, h_xv = eval_h_partials(kind, sp, x, x1)
    f_spec = sp.m * np.asarray(x2, dtype=float) - sp.m * h

    m = sp.m
    pole_sum = tp.beta1 + tp.a3
    c1 = -tp.a1beta1 / m
    # The valve-pressure coupling must enter the velocity coefficient with a
    # negative sign: with +beta1*a2/m the linearized plant has a negative
    # Routh coefficient and the origin is unstable.  The negative sign also
    # matches the identified linear model's velocity coefficient within 10%.
    c2 = -tp.beta1 * tp.a2 / m + pole_sum * h_x
    c3 = pole_sum * h_v - tp.a2 / m
    c4 = -pole_sum
    c5 = -tp.beta1 * tp.a3 / m
    cn = (h_xx * np.square(x1) + h_vv * np.square(x2)
          + 2.0 * h_xv * np.asarray(x1) * np.asarray(x2)
          + h_x * np.asarray(x2) + h_v * np.asarray(x3))

    out = (c1 * np.asarray(x) + c2 * np.asarray(x1) + c3 * np.asarray(x2)
           + c4 * np.asarray(x3) + c5 * f_spec + cn + tp.b * u)
    if not np.all(np.isfinite(out)):
        for name, term in (("C1*x", c1 * np.asarray(x)),
                           ("C2*x1", c2 * np.asarray(x1)),
                           ("C3*x2", c3 * np.asarray(x2)),
                           ("C4*x3", c4 * np.asarray(x3)),
                           ("C5*F", c5 * f_spec),
                           ("Cn", cn),
                           ("b*u", tp.b * np.asarray(u, dtype=float))):
            if not np.all(np.isfinite(term)):
                raise FloatingPointError(
                    f"non-finite canonical drift term {name}")
        raise FloatingPointError("non-finite canonical drift")
    return out


def canonical_derivative(kind: SpecimenKind, sp: SpecimenParams,
                         tp: TransferSystemParams, s: PlantState,
                         u: float) -> float:
    """Scalar convenience wrapper around ``fourth_derivative``."""
    if not math.isfinite(u):
        raise ValueError("non-finite command input")
    return float(fourth_derivative(kind, sp, tp, s.x, s.x1, s.x2, s.x3, u))
