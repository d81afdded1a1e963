"""Bootstrap particle filter: Gaussian initialization, prediction through
the nonlinear-nominal plant, displacement+force likelihood weighting,
multinomial resampling, and post-resampling mean estimates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (PlantState, SpecimenKind, SpecimenParams,
                    TransferSystemParams, specimen_force)
from .plants import advance_states
from .signals import RngStream, TimeSeries

__all__ = [
    "ParticleEnsemble",
    "LikelihoodSpec",
    "ProcessNoiseSpec",
    "PriorSpec",
    "DegenerateLikelihoodError",
    "normalize_log_weights",
    "pf_init",
    "pf_predict",
    "pf_weight",
    "resample_multinomial",
    "pf_estimate",
    "pf_run",
    "PfResult",
]

WEIGHT_SUM_TOL = 1e-9


class DegenerateLikelihoodError(RuntimeError):
    """All particle log-likelihoods underflowed to -inf."""


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """N particle states (N, d) with nonnegative weights (N,)."""

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.states.ndim != 2 or len(self.states) < 1:
            raise ValueError("states must be a (N, d) array with N >= 1")
        if self.weights.shape != (len(self.states),):
            raise ValueError("weights must be a (N,) array")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("particle states must be finite")

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class LikelihoodSpec:
    """Assumed measurement-noise stds of the displacement (m) and force (N)
    channels, used in the Gaussian likelihood."""

    sigma_d: float
    sigma_f: float

    def __post_init__(self):
        if not self.sigma_d > 0 or not self.sigma_f > 0:
            raise ValueError("likelihood stds must be > 0")


@dataclass(frozen=True)
class ProcessNoiseSpec:
    """Additive process-noise scale.

    The scalar displacement-channel std sigma_p is propagated to the
    derivative states by powers of a reference bandwidth so the four
    channels stay unit-coherent: (s, s*w, s*w^2, s*w^3).
    """

    sigma_p: float
    omega_ref: float = 2.0 * np.pi * 20.0

    def __post_init__(self):
        if self.sigma_p < 0:
            raise ValueError("sigma_p must be >= 0")
        if not self.omega_ref > 0:
            raise ValueError("omega_ref must be > 0")

    @property
    def per_state_stds(self) -> np.ndarray:
        w = self.omega_ref
        return self.sigma_p * np.array([1.0, w, w * w, w ** 3])


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Gaussian initial distribution: a mean state and per-state stds."""

    mean: PlantState
    stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "stds", np.asarray(self.stds, dtype=float))
        if self.stds.shape != (4,) or np.any(self.stds < 0):
            raise ValueError("stds must be a nonnegative 4-vector")


def pf_init(n: int, prior: PriorSpec, stream: RngStream) -> ParticleEnsemble:
    """Draw N i.i.d. Gaussian particles around the prior mean, uniform weights."""
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    gen = _as_generator(stream)
    states = prior.mean.as_array() + gen.normal(size=(n, 4)) * prior.stds
    return ParticleEnsemble(states=states, weights=np.full(n, 1.0 / n))


def _as_generator(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


def pf_predict(e: ParticleEnsemble, u_k: float, dt: float,
               q: ProcessNoiseSpec, stream, sp: SpecimenParams,
               tp: TransferSystemParams, substeps: int = 1
               ) -> ParticleEnsemble:
    """Propagate every particle through the nonlinear-nominal plant with an
    independent additive noise draw; weights are unchanged."""
    gen = _as_generator(stream)
    noise = gen.normal(size=e.states.shape) * q.per_state_stds
    try:
        states = advance_states(SpecimenKind.ALGEBRAIC_SATURATION, sp, tp,
                                e.states, u_k, dt, substeps) + noise
    except FloatingPointError:
        # Re-run particle by particle to name the offender.
        for i in range(len(e)):
            try:
                advance_states(SpecimenKind.ALGEBRAIC_SATURATION, sp, tp,
                               e.states[i], u_k, dt, substeps)
            except FloatingPointError as inner:
                raise FloatingPointError(
                    f"particle {i} diverged during prediction: {inner}"
                ) from inner
        raise
    return ParticleEnsemble(states=states, weights=e.weights)


def normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    """Exponentiate log-weights after subtracting the maximum, then normalize.

    The max-subtraction makes the result invariant to any common additive
    shift of the log-weights (common positive scaling of the likelihoods).
    """
    log_w = np.asarray(log_w, dtype=float)
    m = np.max(log_w)
    if np.isneginf(m) or np.isnan(m):
        raise DegenerateLikelihoodError(
            "all particle log-likelihoods are -inf")
    w = np.exp(log_w - m)
    return w / np.sum(w)


def pf_weight(e: ParticleEnsemble, y_d: float, y_f: float,
              ls: LikelihoodSpec, sp: SpecimenParams) -> ParticleEnsemble:
    """Reweight particles by the Gaussian likelihood of the displacement and
    force measurements under the nonlinear-nominal observation model."""
    x, x1, x2 = e.states[:, 0], e.states[:, 1], e.states[:, 2]
    yhat_d = x
    yhat_f = specimen_force(SpecimenKind.ALGEBRAIC_SATURATION, sp, x, x1, x2)
    log_w = (-np.square(y_d - yhat_d) / (2.0 * ls.sigma_d ** 2)
             - np.square(y_f - yhat_f) / (2.0 * ls.sigma_f ** 2))
    return ParticleEnsemble(states=e.states,
                            weights=normalize_log_weights(log_w))


def resample_multinomial(e: ParticleEnsemble, stream=None,
                         uniforms=None) -> ParticleEnsemble:
    """Multinomial resampling by CDF inversion.

    Each uniform u selects the particle M with
    sum_{j<M} q_j < u <= sum_{j<=M} q_j.  Output weights reset to 1/N.
    ``uniforms`` may be injected for testing; otherwise N draws come from
    ``stream``.
    """
    n = len(e)
    total = float(np.sum(e.weights))
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must be normalized, sum = {total}")
    if uniforms is None:
        if stream is None:
            raise ValueError("either stream or uniforms is required")
        uniforms = _as_generator(stream).random(n)
    uniforms = np.asarray(uniforms, dtype=float)
    cdf = np.cumsum(e.weights)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, uniforms, side="left")
    idx = np.minimum(idx, n - 1)
    return ParticleEnsemble(states=e.states[idx],
                            weights=np.full(n, 1.0 / n))


def pf_estimate(e: ParticleEnsemble) -> PlantState:
    """Unweighted componentwise mean of the (post-resampling) particle set."""
    return PlantState.from_array(np.mean(e.states, axis=0))


@dataclass(frozen=True, eq=False)
class PfResult:
    """Estimated state series plus degeneracy diagnostics."""

    disp: TimeSeries
    vel: TimeSeries
    acc: TimeSeries
    force: TimeSeries
    degenerate_steps: tuple[int, ...]
    degenerate_flag: bool


def pf_run(n_particles: int, prior: PriorSpec, q: ProcessNoiseSpec,
           ls: LikelihoodSpec, input: TimeSeries, meas, stream: RngStream,
           sp: SpecimenParams, tp: TransferSystemParams,
           substeps: int = 1, backend: str = "auto") -> PfResult:
    """Full bootstrap filter loop: per sample predict -> weight -> resample
    -> estimate.

    Per-step noise comes from Philox counter blocks keyed by the step index,
    so draws are independent of particle-evaluation order.  Steps whose
    likelihood underflows entirely keep uniform weights (skip the update)
    and are flagged; the result is marked degenerate if more than 1% of
    steps fall back.

    ``backend`` selects the fused compiled loop ("numba", the default when
    available) or the composed numpy building blocks ("numpy"); the two are
    numerically equivalent and draw identical random numbers.
    """
    if len(input) != len(meas.disp_noisy):
        raise ValueError("input and measurements must be aligned")
    n = len(input)
    u = input.values
    y_d = meas.disp_noisy.values
    y_f = meas.force_noisy.values
    dt = input.dt
    stds = q.per_state_stds

    init_stream = stream.child(0)
    step_stream = stream.child(1)
    ens = pf_init(n_particles, prior, init_stream)
    est = np.zeros((n, 4))
    est[0] = np.mean(ens.states, axis=0)
    degenerate = []
    from .plants import DIVERGENCE_LIMIT, _resolve_backend
    if _resolve_backend(backend) == "numba":
        _pf_loop_numba(ens.states.copy(), u, y_d, y_f, stds, step_stream,
                       ls, sp, tp, dt, substeps, est, degenerate)
    else:
        _pf_loop_numpy(ens, u, y_d, y_f, stds, step_stream, ls, sp, tp, dt,
                       substeps, est, degenerate, DIVERGENCE_LIMIT)

    force = specimen_force(SpecimenKind.ALGEBRAIC_SATURATION, sp,
                           est[:, 0], est[:, 1], est[:, 2])
    return PfResult(
        disp=input.with_values(est[:, 0]),
        vel=input.with_values(est[:, 1]),
        acc=input.with_values(est[:, 2]),
        force=input.with_values(np.asarray(force)),
        degenerate_steps=tuple(degenerate),
        degenerate_flag=len(degenerate) > 0.01 * max(1, n - 1),
    )


def _pf_loop_numpy(ens, u, y_d, y_f, stds, step_stream, ls, sp, tp, dt,
                   substeps, est, degenerate, limit):
    """Reference loop built from the public numpy operations."""
    n = len(u)
    n_particles = len(ens)
    for k in range(1, n):
        gen = step_stream.generator(block=k)
        noise = gen.normal(size=(n_particles, 4)) * stds
        states = advance_states(SpecimenKind.ALGEBRAIC_SATURATION, sp, tp,
                                ens.states, u[k - 1], dt, substeps) + noise
        if np.any(np.abs(states) > limit):
            raise FloatingPointError(
                f"particle ensemble diverged at step {k}")
        ens = ParticleEnsemble(states=states, weights=ens.weights)
        try:
            ens = pf_weight(ens, y_d[k], y_f[k], ls, sp)
        except DegenerateLikelihoodError:
            degenerate.append(k)
            ens = ParticleEnsemble(
                states=ens.states,
                weights=np.full(n_particles, 1.0 / n_particles))
        ens = resample_multinomial(ens, uniforms=gen.random(n_particles))
        est[k] = np.mean(ens.states, axis=0)


def _pf_loop_numba(states, u, y_d, y_f, stds, step_stream, ls, sp, tp, dt,
                   substeps, est, degenerate, chunk: int = 1024):
    """Fused compiled loop; draws the same random numbers as the reference."""
    from . import _kernels
    from .plants import DIVERGENCE_LIMIT

    n = len(u)
    n_particles = len(states)
    p = _kernels.params_array(sp, tp)
    k = 1
    while k < n:
        length = min(chunk, n - k)
        noise = np.empty((length, n_particles, 4))
        uniforms = np.empty((length, n_particles))
        for t in range(length):
            gen = step_stream.generator(block=k + t)
            noise[t] = gen.normal(size=(n_particles, 4)) * stds
            uniforms[t] = gen.random(n_particles)
        degen = np.zeros(length, dtype=np.uint8)
        status = _kernels.pf_chunk(
            _kernels.KIND_SATURATION, p, states, u[k - 1:k - 1 + length],
            y_d[k:k + length], y_f[k:k + length], noise, uniforms,
            est[k:k + length], degen, dt, substeps,
            ls.sigma_d ** 2, ls.sigma_f ** 2, DIVERGENCE_LIMIT)
        if status >= 0:
            raise FloatingPointError(
                f"particle ensemble diverged at step {k + status}")
        degenerate.extend(int(k + i) for i in np.nonzero(degen)[0])
        k += length
