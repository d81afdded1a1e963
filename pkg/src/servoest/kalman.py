"""Discrete Kalman filter on the identified linear plant model.

The filter measures the displacement channel only (the linear model has no
force output).  The full time-varying Riccati recursion is the default; a
fixed steady-state gain mode is available to mirror offline gain design.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .signals import TimeSeries

__all__ = ["DiscreteLinearModel", "KalmanState", "discretize_zoh",
           "kf_step", "kf_run", "steady_state_gain"]


def discretize_zoh(a: np.ndarray, b: np.ndarray, dt: float):
    """Zero-order-hold discretization of (A, B) at sample interval dt.

    Uses the augmented matrix exponential
        expm([[A, B], [0, 0]] * dt) = [[Ad, Bd], [0, I]]
    which equals A^-1 (Ad - I) B when A is invertible and the integral form
    otherwise.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    n, m = a.shape[0], b.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = a * dt
    aug[:n, n:] = b * dt
    phi = expm(aug)
    if not np.all(np.isfinite(phi)):
        raise FloatingPointError("matrix exponential did not converge")
    return phi[:n, :n], phi[:n, n:]


@dataclass(frozen=True, eq=False)
class DiscreteLinearModel:
    """Discrete-time model used by the filter.

    Ad: n x n transition, Bd: n x m input, H: 1 x n measurement row,
    Q: n x n process covariance (symmetric PSD), R: scalar measurement
    variance (> 0).
    """

    Ad: np.ndarray
    Bd: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: float

    def __post_init__(self):
        object.__setattr__(self, "Ad", np.asarray(self.Ad, dtype=float))
        object.__setattr__(self, "Bd",
                           np.asarray(self.Bd, dtype=float).reshape(self.Ad.shape[0], -1))
        object.__setattr__(self, "H",
                           np.asarray(self.H, dtype=float).reshape(1, -1))
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        if not self.R > 0:
            raise ValueError(f"R must be > 0, got {self.R}")
        if not np.allclose(self.Q, self.Q.T):
            raise ValueError("Q must be symmetric")
        if np.any(np.linalg.eigvalsh(self.Q) < -1e-12 * max(1.0, np.abs(self.Q).max())):
            raise ValueError("Q must be positive semidefinite")


@dataclass(frozen=True, eq=False)
class KalmanState:
    """Filter state: estimate, error covariance, and the last gain."""

    xhat: np.ndarray
    P: np.ndarray
    K: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "xhat", np.asarray(self.xhat, dtype=float))
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))


def kf_step(m: DiscreteLinearModel, ks: KalmanState, u: float, y: float,
            joseph: bool = False) -> KalmanState:
    """One predict/correct cycle with measurement y and previous input u."""
    xm = m.Ad @ ks.xhat + (m.Bd * u).ravel()
    pm = m.Ad @ ks.P @ m.Ad.T + m.Q
    s = float((m.H @ pm @ m.H.T).item()) + m.R
    if s <= 0:
        raise FloatingPointError(f"innovation covariance {s} is not positive")
    k = (pm @ m.H.T) / s
    xhat = xm + (k * (y - float((m.H @ xm).item()))).ravel()
    ikh = np.eye(len(xm)) - k @ m.H
    if joseph:
        p = ikh @ pm @ ikh.T + (k * m.R) @ k.T
    else:
        p = ikh @ pm
    p = 0.5 * (p + p.T)
    return KalmanState(xhat=xhat, P=p, K=k)


def steady_state_gain(m: DiscreteLinearModel, p0: np.ndarray,
                      tol: float = 1e-12, max_iter: int = 200000):
    """Iterate the Riccati recursion until the gain converges."""
    ks = KalmanState(xhat=np.zeros(m.Ad.shape[0]), P=np.asarray(p0, float))
    prev = None
    for _ in range(max_iter):
        ks = kf_step(m, ks, 0.0, 0.0)
        if prev is not None and np.linalg.norm(ks.K - prev) < tol:
            return ks.K, ks.P
        prev = ks.K
    raise RuntimeError("steady-state gain iteration did not converge")


def kf_run(m: DiscreteLinearModel, input: TimeSeries, yd: TimeSeries,
           x0, p0, c_out: np.ndarray, gain_mode: str = "time-varying",
           joseph: bool = False):
    """Filter a displacement measurement record.

    ``c_out`` (3 x n) maps the internal state to (disp, vel, acc) outputs.
    Returns that triple of time series.  ``gain_mode`` is "time-varying"
    (Riccati recursion each step) or "steady" (fixed precomputed gain).
    """
    if len(input) != len(yd):
        raise ValueError("input and measurement series must be aligned")
    n = len(input)
    u = input.values
    y = yd.values
    xs = np.zeros((n, m.Ad.shape[0]))
    ks = KalmanState(xhat=np.asarray(x0, dtype=float),
                     P=np.asarray(p0, dtype=float))
    xs[0] = ks.xhat
    if gain_mode == "steady":
        kfix, pfix = steady_state_gain(m, p0)
        bd = m.Bd.ravel()
        xhat = ks.xhat.copy()
        for k in range(1, n):
            xm = m.Ad @ xhat + bd * u[k - 1]
            xhat = xm + (kfix * (y[k] - float((m.H @ xm).item()))).ravel()
            xs[k] = xhat
    elif gain_mode == "time-varying":
        for k in range(1, n):
            try:
                ks = kf_step(m, ks, u[k - 1], y[k], joseph=joseph)
            except FloatingPointError as e:
                t = input.t0 + k * input.dt
                raise FloatingPointError(f"{e} at t = {t:.6g} s") from e
            xs[k] = ks.xhat
    else:
        raise ValueError(f"unknown gain_mode {gain_mode!r}")
    outs = xs @ np.asarray(c_out, dtype=float).T
    return (input.with_values(outs[:, 0]), input.with_values(outs[:, 1]),
            input.with_values(outs[:, 2]))
