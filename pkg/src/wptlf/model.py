"""Multi-sine signal model and the truncated nonlinear rectenna voltage.

Vectors follow the frequency-major layout used throughout the package: entry
``(n - 1) * M + m`` of a precoder or channel column belongs to tone ``n`` and
antenna ``m``. A channel realization is an ``(M*N, Q)`` complex array whose
column ``q`` is the channel seen by rectenna ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

DEFAULT_THERMAL_VOLTAGE = 0.02585
_REALNESS_TOL = 1e-12


@dataclass(frozen=True)
class SystemDims:
    M: int
    N: int
    Q: int = 1

    def __post_init__(self):
        for name in ("M", "N", "Q"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value!r}")

    @property
    def MN(self) -> int:
        return self.M * self.N


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniformly spaced tones ``omega_n = omega1 + (n - 1) * delta_omega``."""

    omega1: float
    delta_omega: float
    N: int

    def __post_init__(self):
        if self.delta_omega <= 0:
            raise ParameterError("delta_omega must be positive")
        if self.omega1 <= (self.N - 1) * self.delta_omega / 2:
            raise ParameterError("omega1 must exceed (N - 1) * delta_omega / 2")

    @property
    def omegas(self) -> np.ndarray:
        return self.omega1 + self.delta_omega * np.arange(self.N)


def derive_beta(r_ant: float, n_if: float, v_t: float) -> tuple[float, float]:
    """Second- and fourth-order diode coefficients of the truncated model."""
    if not (r_ant > 0 and n_if > 0 and v_t > 0):
        raise ParameterError(
            f"rectenna constants must be positive (r_ant={r_ant}, n_if={n_if}, v_t={v_t})"
        )
    beta2 = r_ant / (2.0 * n_if * v_t)
    beta4 = r_ant**2 / (24.0 * n_if**3 * v_t**3)
    return beta2, beta4


@dataclass(frozen=True)
class RectennaParams:
    r_ant: float = 50.0
    n_if: float = 1.0
    v_t: float = DEFAULT_THERMAL_VOLTAGE
    beta2: float = field(init=False)
    beta4: float = field(init=False)

    def __post_init__(self):
        beta2, beta4 = derive_beta(self.r_ant, self.n_if, self.v_t)
        object.__setattr__(self, "beta2", beta2)
        object.__setattr__(self, "beta4", beta4)

    def linear(self) -> "RectennaParams":
        """Copy with the fourth-order term switched off (the linear model)."""
        p = RectennaParams(self.r_ant, self.n_if, self.v_t)
        object.__setattr__(p, "beta4", 0.0)
        return p

    def to_dict(self) -> dict:
        return {"r_ant": self.r_ant, "n_if": self.n_if, "v_t": self.v_t,
                "beta2": self.beta2, "beta4": self.beta4}


def build_mq(h_q: np.ndarray) -> np.ndarray:
    """Rank-one coupling matrix ``conj(h) h^T``."""
    h_q = np.asarray(h_q, dtype=complex).ravel()
    return np.outer(h_q.conj(), h_q)


def block_diag_extract(mq: np.ndarray, k: int, dims: SystemDims) -> np.ndarray:
    """Keep the ``k``-th block diagonal (blocks ``(n, n + k)``) of an MN x MN matrix."""
    M, N = dims.M, dims.N
    if abs(k) >= N:
        raise IndexError(f"block diagonal index {k} out of range for N={N}")
    mq = np.asarray(mq)
    if mq.shape != (M * N, M * N):
        raise ValueError(f"expected a {(M * N, M * N)} matrix, got {mq.shape}")
    out = np.zeros_like(mq)
    for n in range(N):
        n2 = n + k
        if 0 <= n2 < N:
            out[n * M:(n + 1) * M, n2 * M:(n2 + 1) * M] = mq[n * M:(n + 1) * M, n2 * M:(n2 + 1) * M]
    return out


def tone_responses(H: np.ndarray, s: np.ndarray, dims: SystemDims) -> np.ndarray:
    """Received complex amplitude per rectenna and tone.

    ``H`` has shape ``(..., MN, Q)`` and ``s`` shape ``(..., MN)``; leading axes
    broadcast. Returns shape ``(..., Q, N)`` with entry ``h_{q,n}^T s_n``.
    """
    H = np.asarray(H)
    s = np.asarray(s)
    M, N = dims.M, dims.N
    Hr = H.reshape(H.shape[:-2] + (N, M, H.shape[-1]))
    sr = s.reshape(s.shape[:-1] + (N, M))
    return np.einsum("...nmq,...nm->...qn", Hr, sr)


def auxiliary_from_tones(a: np.ndarray) -> np.ndarray:
    """``t_k = sum_n conj(a_n) a_{n+k}`` for k = 0..N-1, i.e. ``s^H M_{q,k} s``."""
    N = a.shape[-1]
    t = np.empty(a.shape, dtype=complex)
    ac = a.conj()
    for k in range(N):
        t[..., k] = np.sum(ac[..., :N - k] * a[..., k:], axis=-1)
    return t


def vout_from_auxiliary(t: np.ndarray, params: RectennaParams) -> np.ndarray:
    """Output voltage from the block-diagonal quadratic forms (last axis = k)."""
    t0 = t[..., 0]
    acc = (params.beta2 * t0 + 1.5 * params.beta4 * (t0 * t0.conj())
           + 3.0 * params.beta4 * np.sum(t[..., 1:] * t[..., 1:].conj(), axis=-1))
    acc = np.asarray(acc)
    resid = np.abs(acc.imag)
    if np.any(resid > _REALNESS_TOL * np.maximum(np.abs(acc.real), np.finfo(float).tiny)):
        raise ArithmeticError("imaginary residue of v_out exceeds tolerance")
    return acc.real


def vout_terms(h_q: np.ndarray, s: np.ndarray, params: RectennaParams, dims: SystemDims):
    """The (second-order, fourth-order) contributions for a single rectenna."""
    a = tone_responses(np.asarray(h_q).reshape(-1, 1), s, dims)[0]
    t = auxiliary_from_tones(a)
    second = params.beta2 * t[0].real
    fourth = 1.5 * params.beta4 * abs(t[0]) ** 2 + 3.0 * params.beta4 * np.sum(np.abs(t[1:]) ** 2)
    return float(second), float(fourth)


def vout_compact(h_q: np.ndarray, s: np.ndarray, params: RectennaParams, dims: SystemDims) -> float:
    a = tone_responses(np.asarray(h_q).reshape(-1, 1), s, dims)[0]
    return float(vout_from_auxiliary(auxiliary_from_tones(a), params))


def vout_direct(h_q: np.ndarray, s: np.ndarray, params: RectennaParams, dims: SystemDims) -> float:
    """Brute-force evaluation of the expanded quadruple-sum model.

    Slow on purpose: it builds every M x M block ``conj(h_{n3}) h_{n1}^T`` and
    enumerates all ``(n1, n2, n3, n4)`` with ``n1 + n2 = n3 + n4``. Used as an
    oracle only.
    """
    M, N = dims.M, dims.N
    h = np.asarray(h_q, dtype=complex).ravel()
    s = np.asarray(s, dtype=complex).ravel()
    hb = [h[n * M:(n + 1) * M] for n in range(N)]
    sb = [s[n * M:(n + 1) * M] for n in range(N)]
    # pair[n3][n1] = s_{n3}^H conj(h_{n3}) h_{n1}^T s_{n1}
    pair = [[complex(sb[n3].conj() @ np.outer(hb[n3].conj(), hb[n1]) @ sb[n1]) for n1 in range(N)]
            for n3 in range(N)]
    acc = 0j
    for n in range(N):
        acc += params.beta2 * pair[n][n]
    quartic = 0j
    for n1 in range(N):
        for n2 in range(N):
            for n3 in range(N):
                n4 = n1 + n2 - n3
                if 0 <= n4 < N:
                    quartic += pair[n3][n1] * pair[n4][n2]
    acc += 1.5 * params.beta4 * quartic
    if abs(acc.imag) > 1e-9 * max(abs(acc.real), np.finfo(float).tiny):
        raise ArithmeticError("imaginary residue of v_out exceeds tolerance")
    return float(acc.real)


def _weights(weights, Q: int) -> np.ndarray:
    if weights is None:
        return np.ones(Q)
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != (Q,):
        raise ParameterError(f"expected {Q} rectenna weights, got {w.shape}")
    if np.any(w < 0):
        raise ParameterError("rectenna weights must be nonnegative")
    return w


def weighted_sum_vout(H: np.ndarray, s: np.ndarray, weights, params: RectennaParams,
                      dims: SystemDims) -> np.ndarray:
    """``sum_q w_q v_out(h_q, s)``, broadcasting over leading axes of ``H`` and ``s``."""
    H = np.asarray(H)
    w = _weights(weights, H.shape[-1])
    t = auxiliary_from_tones(tone_responses(H, s, dims))
    v = vout_from_auxiliary(t, params)
    return v @ w


def vout_table(sample: np.ndarray, codewords: np.ndarray, weights, params: RectennaParams,
               dims: SystemDims) -> np.ndarray:
    """Weighted-sum voltage of every codeword on every realization, shape (Np, T)."""
    sample = np.asarray(sample)
    codewords = np.atleast_2d(codewords)
    return weighted_sum_vout(sample[None, :, :, :], codewords[:, None, :], weights, params, dims)
