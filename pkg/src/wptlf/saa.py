"""Sample-average waveform optimization by successive convex approximation.

Each iteration linearizes the quartic part of the summed output voltage around
the previous iterate. The linearized problem over the power ball is solved by
the minimum eigenvector of a Hermitian matrix (``A1``), scaled onto the power
sphere.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError
from .model import (SystemDims, RectennaParams, _weights, auxiliary_from_tones,
                    tone_responses, vout_from_auxiliary)

log = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-9
_TIE_TOL = 1e-10


@dataclass(frozen=True)
class SaaConfig:
    epsilon: float = 1e-6
    max_iterations: int = 200

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be at least 1")


@dataclass
class SaaState:
    s_current: np.ndarray
    t_current: np.ndarray
    a1: np.ndarray | None = None
    objective_trace: list = field(default_factory=list)
    gamma_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    violations: list = field(default_factory=list)


def _as_sample(sample) -> np.ndarray:
    arr = np.asarray(sample, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[0] == 0:
        raise ValueError(f"sample must be a non-empty (T0, MN, Q) array, got shape {arr.shape}")
    return arr


def compute_t(sample, s: np.ndarray, dims: SystemDims) -> np.ndarray:
    """``t[t0, q, k] = s^H M_{q,k}^{[t0]} s`` for the whole sample."""
    return auxiliary_from_tones(tone_responses(_as_sample(sample), s, dims))


def _coefficients(t: np.ndarray, params: RectennaParams) -> np.ndarray:
    """Toeplitz coefficient of block (n1, n2) of ``-A1`` for each (t0, q)."""
    N = t.shape[-1]
    idx = np.arange(N)
    lag = idx[None, :] - idx[:, None]
    c_pos = np.concatenate([(params.beta2 + 3 * params.beta4 * t[..., :1].real),
                            3 * params.beta4 * t[..., 1:].conj()], axis=-1)
    c_neg = 3 * params.beta4 * t
    return np.where(lag >= 0, c_pos[..., np.abs(lag)], c_neg[..., np.abs(lag)])


def build_a1(sample, t_prev: np.ndarray, weights, params: RectennaParams,
             dims: SystemDims) -> np.ndarray:
    """Surrogate matrix ``A1 = C1 + C1^H`` of the linearized problem."""
    H = _as_sample(sample)
    w = _weights(weights, H.shape[-1])
    M, N = dims.M, dims.N
    coeff = _coefficients(np.asarray(t_prev), params) * w[None, :, None, None]
    Hr = H.reshape(H.shape[0], N, M, H.shape[-1]).transpose(0, 3, 1, 2)  # (T, Q, N, M)
    B = np.einsum("tqam,tqbn,tqab->ambn", Hr.conj(), Hr, coeff, optimize=True)
    B = B.reshape(M * N, M * N)
    a1 = -(B + B.conj().T) / 2
    return a1


def normalize_phase(u: np.ndarray) -> np.ndarray:
    """Rotate so that the first entry with magnitude above 1e-12 is real positive."""
    u = np.asarray(u, dtype=complex)
    nz = np.flatnonzero(np.abs(u) > 1e-12)
    if nz.size == 0:
        return u.copy()
    lead = u[nz[0]]
    return u * (abs(lead) / lead)


def min_eigpair(a1: np.ndarray) -> tuple[float, np.ndarray]:
    a1 = np.asarray(a1, dtype=complex)
    scale = max(np.linalg.norm(a1), np.finfo(float).tiny)
    if np.linalg.norm(a1 - a1.conj().T) > _TIE_TOL * scale:
        raise ContractError("min_eigpair requires a Hermitian matrix")
    lam, U = np.linalg.eigh(a1)
    lam_min = lam[0]
    ties = np.flatnonzero(lam - lam_min <= _TIE_TOL * max(abs(lam_min), scale * 1e-6))
    if ties.size == 1:
        return float(lam_min), normalize_phase(U[:, 0])
    candidates = [normalize_phase(U[:, j]) for j in ties]
    keys = [tuple(np.column_stack([np.round(c.real, 12), np.round(c.imag, 12)]).ravel())
            for c in candidates]
    best = min(range(len(candidates)), key=lambda i: keys[i])
    return float(lam_min), candidates[best]


def sample_objective(t: np.ndarray, weights, params: RectennaParams) -> float:
    """Sample-summed weighted output voltage from auxiliary values."""
    v = vout_from_auxiliary(t, params)
    w = _weights(weights, t.shape[-2])
    return float(np.sum(v @ w))


def surrogate_value(t_new: np.ndarray, t_prev: np.ndarray, weights, params: RectennaParams) -> float:
    """gamma1: linearized (negated) objective at ``t_new`` around ``t_prev``."""
    w = _weights(weights, t_new.shape[-2])
    N = t_new.shape[-1]
    a0 = np.full(N, -3.0 * params.beta4)
    a0[0] = -1.5 * params.beta4
    lin = 2 * np.real(np.sum(t_prev.conj() * a0 * t_new, axis=-1))
    const = np.sum(a0 * np.abs(t_prev) ** 2, axis=-1)
    per = -params.beta2 * t_new[..., 0].real + lin - const
    return float(np.sum(per @ w))


def rank1_relative_change(s_new: np.ndarray, s_old: np.ndarray) -> float:
    """``||s s^H - s' s'^H||_F / ||s s^H||_F`` without forming the outer products."""
    a = np.vdot(s_new, s_new).real
    b = np.vdot(s_old, s_old).real
    c = abs(np.vdot(s_new, s_old)) ** 2
    diff2 = max(a * a + b * b - 2 * c, 0.0)
    return float(np.sqrt(diff2) / a) if a > 0 else np.inf


def saa_optimize(sample, s_init: np.ndarray, weights, params: RectennaParams, dims: SystemDims,
                 power: float, config: SaaConfig = SaaConfig()) -> tuple[np.ndarray, SaaState]:
    """Maximize the sample-summed weighted output voltage from ``s_init``.

    Returns the optimized precoder (on the power sphere) and the iteration
    state. When ``max_iterations`` is hit the best iterate is returned with
    ``state.converged`` False.
    """
    H = _as_sample(sample)
    s = np.asarray(s_init, dtype=complex).ravel()
    if s.shape != (dims.MN,):
        raise ValueError(f"initial precoder must have length {dims.MN}")
    if np.vdot(s, s).real > power * (1 + 1e-9):
        raise ContractError("initial precoder violates the power budget")
    sqrt_p = np.sqrt(power)

    t = compute_t(H, s, dims)
    state = SaaState(s_current=s, t_current=t)
    obj = sample_objective(t, weights, params)
    state.objective_trace.append(obj)
    state.gamma_trace.append(-obj)
    best_s, best_obj = None, -np.inf

    for it in range(1, config.max_iterations + 1):
        a1 = build_a1(H, t, weights, params, dims)
        _, u = min_eigpair(a1)
        s_new = sqrt_p * u
        t_new = compute_t(H, s_new, dims)
        gamma = surrogate_value(t_new, t, weights, params)
        obj_new = sample_objective(t_new, weights, params)

        prev_gamma, prev_obj = state.gamma_trace[-1], state.objective_trace[-1]
        if gamma > prev_gamma + MONOTONE_SLACK * abs(prev_gamma):
            state.violations.append(("gamma", it, prev_gamma, gamma))
        if obj_new < prev_obj - MONOTONE_SLACK * abs(prev_obj):
            state.violations.append(("objective", it, prev_obj, obj_new))
        state.gamma_trace.append(gamma)
        state.objective_trace.append(obj_new)

        change = rank1_relative_change(s_new, s)
        s, t = s_new, t_new
        state.a1 = a1
        state.iterations = it
        if obj_new > best_obj:
            best_s, best_obj = s_new, obj_new
        if change <= config.epsilon:
            state.converged = True
            break

    if state.violations:
        log.warning("SAA monotonicity breached %d time(s)", len(state.violations))
    if not state.converged:
        log.warning("SAA did not converge in %d iterations", config.max_iterations)
        s = best_s
        t = compute_t(H, s, dims)
    state.s_current = s
    state.t_current = t
    return s, state


def default_initial_precoder(H: np.ndarray, power: float, dims: SystemDims) -> np.ndarray:
    """Equal magnitude per entry, phases matched to the first rectenna's channel."""
    H = np.asarray(H)
    if H.ndim == 3:
        H = H[0]
    h1 = H[:, 0]
    phase = np.ones(dims.MN, dtype=complex)
    nz = np.abs(h1) > 0
    phase[nz] = h1[nz].conj() / np.abs(h1[nz])
    return np.sqrt(power / dims.MN) * phase
