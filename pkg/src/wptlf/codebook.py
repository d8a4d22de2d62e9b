"""Flat waveform codebooks trained with a generalized Lloyd iteration.

The distortion of a codeword on a realization is the weighted-sum voltage lost
relative to that realization's perfect-CSIT precoder. Partitioning assigns
each training realization to its least-distorting codeword; each codeword is
then re-optimized over its cell with the SAA routine, warm-started from its
previous value so the summed distortion can only go down.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDiversityError, ParameterError
from .model import RectennaParams, SystemDims, vout_table, weighted_sum_vout
from .saa import MONOTONE_SLACK, SaaConfig, default_initial_precoder, saa_optimize

log = logging.getLogger(__name__)

DEFAULT_GAP_FRACTION = 0.05
DEFAULT_EPSILON_REL = 1e-4


@dataclass
class Codebook:
    codewords: np.ndarray  # (Np, MN)
    power: float
    dims: SystemDims
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.codewords = np.atleast_2d(np.asarray(self.codewords, dtype=complex))
        if self.codewords.shape[0] < 1:
            raise ParameterError("a codebook needs at least one codeword")
        if self.codewords.shape[1] != self.dims.MN:
            raise ParameterError("codeword length does not match M*N")
        norms = np.sum(np.abs(self.codewords) ** 2, axis=1)
        if np.any(norms > self.power * (1 + 1e-9)):
            raise ParameterError("codeword exceeds the power budget")

    def __len__(self):
        return self.codewords.shape[0]

    @property
    def n_p(self) -> int:
        return len(self)


@dataclass
class Partition:
    cell_of: np.ndarray
    n_cells: int

    @property
    def cells(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.cell_of == j) for j in range(self.n_cells)]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.cell_of, minlength=self.n_cells)


@dataclass
class DistortionReport:
    per_cell: np.ndarray
    total: float
    history: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def optimal_precoder(H: np.ndarray, params: RectennaParams, power: float, dims: SystemDims,
                     weights=None, saa_config: SaaConfig = SaaConfig()) -> np.ndarray:
    """Perfect-CSIT precoder for one realization (SAA on the singleton sample)."""
    H = np.asarray(H)
    s, _ = saa_optimize(H[None], default_initial_precoder(H, power, dims), weights, params,
                        dims, power, saa_config)
    return s


def optimal_precoder_set(sample: np.ndarray, params: RectennaParams, power: float,
                         dims: SystemDims, weights=None,
                         saa_config: SaaConfig = SaaConfig()) -> np.ndarray:
    return np.stack([optimal_precoder(H, params, power, dims, weights, saa_config)
                     for H in np.asarray(sample)])


def distortion(H, s_opt, codeword, weights, params: RectennaParams, dims: SystemDims):
    return (weighted_sum_vout(H, s_opt, weights, params, dims)
            - weighted_sum_vout(H, codeword, weights, params, dims))


def _opt_voltages(sample, s_opt_set, weights, params, dims) -> np.ndarray:
    return weighted_sum_vout(sample, s_opt_set, weights, params, dims)


def distortion_table(sample, s_opt_set, codewords, weights, params, dims) -> np.ndarray:
    """f_d of every codeword (rows) on every realization (columns)."""
    v_opt = _opt_voltages(sample, s_opt_set, weights, params, dims)
    return v_opt[None, :] - vout_table(sample, codewords, weights, params, dims)


def partition(sample, s_opt_set, codewords, weights, params: RectennaParams,
              dims: SystemDims) -> Partition:
    """Nearest-codeword cells under f_d; ties go to the lowest index."""
    fd = distortion_table(sample, s_opt_set, np.atleast_2d(codewords), weights, params, dims)
    return Partition(np.argmin(fd, axis=0), fd.shape[0])


def sum_distortion(sample, s_opt_set, part: Partition, codewords, weights,
                   params: RectennaParams, dims: SystemDims) -> DistortionReport:
    codewords = np.atleast_2d(codewords)
    fd = distortion_table(sample, s_opt_set, codewords, weights, params, dims)
    own = fd[part.cell_of, np.arange(fd.shape[1])]
    per_cell = np.bincount(part.cell_of, weights=own, minlength=codewords.shape[0])
    return DistortionReport(per_cell=per_cell, total=float(per_cell.sum()))


ROUNDOFF_ULPS = 64


def distortion_tolerance(reference: float, voltage_scale: float, slack: float = MONOTONE_SLACK) -> float:
    """Allowed increase over ``reference`` when checking f_d monotonicity.

    f_d is a difference of voltages, so besides the relative ``slack`` it
    carries cancellation error of a few ulps of the summed voltages.
    """
    return slack * abs(reference) + ROUNDOFF_ULPS * np.finfo(float).eps * voltage_scale


def default_epsilon_gap(sample, s_opt_set, weights, params: RectennaParams, dims: SystemDims,
                        fraction: float = DEFAULT_GAP_FRACTION) -> float:
    return fraction * float(np.mean(_opt_voltages(sample, s_opt_set, weights, params, dims)))


def init_codebook(sample, s_opt_set, n_p: int, epsilon_gap: float, weights,
                  params: RectennaParams, dims: SystemDims) -> np.ndarray:
    """Pruning initialization: scan the ideal precoders in sample order and keep
    each one that is at least ``epsilon_gap`` away (in f_d) from all kept ones."""
    sample = np.asarray(sample)
    s_opt_set = np.asarray(s_opt_set)
    T0 = sample.shape[0]
    if n_p < 1:
        raise ParameterError("n_p must be at least 1")
    if T0 < n_p:
        raise InsufficientDiversityError(0, n_p)
    v_opt = _opt_voltages(sample, s_opt_set, weights, params, dims)
    chosen = [0]
    for t0 in range(1, T0):
        if len(chosen) == n_p:
            break
        v_cw = weighted_sum_vout(sample[t0], s_opt_set[chosen], weights, params, dims)
        if np.min(v_opt[t0] - v_cw) >= epsilon_gap:
            chosen.append(t0)
    if len(chosen) < n_p:
        raise InsufficientDiversityError(len(chosen), n_p)
    return s_opt_set[chosen].copy()


def design_codebook(sample, s_opt_set, init, weights, params: RectennaParams, dims: SystemDims,
                    power: float, epsilon_rel: float = DEFAULT_EPSILON_REL,
                    saa_config: SaaConfig = SaaConfig(),
                    max_iterations: int = 200) -> tuple[np.ndarray, DistortionReport]:
    """Alternate partition and codeword updates until f̄_d settles.

    Returns the codewords and a report whose ``history`` starts with the
    distortion of the initial codebook under the first partition.
    """
    sample = np.asarray(sample)
    s_opt_set = np.asarray(s_opt_set)
    S = np.atleast_2d(np.array(init, dtype=complex))
    n_p = S.shape[0]
    scale = max(float(np.sum(np.abs(_opt_voltages(sample, s_opt_set, weights, params, dims)))),
                np.finfo(float).tiny)

    history: list[float] = []
    warnings: list[str] = []
    violations: list = []
    converged = False
    part = None
    for it in range(1, max_iterations + 1):
        part = partition(sample, s_opt_set, S, weights, params, dims)
        if it == 1:
            history.append(sum_distortion(sample, s_opt_set, part, S, weights, params, dims).total)
        S_new = S.copy()
        for j, cell in enumerate(part.cells):
            if cell.size == 0:
                warnings.append(f"iteration {it}: cell {j} empty, codeword carried over")
                continue
            S_new[j], state = saa_optimize(sample[cell], S[j], weights, params, dims, power,
                                           saa_config)
            violations.extend(("saa", it, j) + v for v in state.violations)
        S = S_new
        total = sum_distortion(sample, s_opt_set, part, S, weights, params, dims).total
        prev = history[-1]
        if total > prev + distortion_tolerance(prev, scale):
            violations.append(("distortion", it, prev, total))
            warnings.append(f"iteration {it}: distortion increased {prev!r} -> {total!r}")
        history.append(total)
        if abs(total - prev) <= epsilon_rel * max(abs(total), 1e-12 * scale):
            converged = True
            break

    final_part = partition(sample, s_opt_set, S, weights, params, dims)
    report = sum_distortion(sample, s_opt_set, final_part, S, weights, params, dims)
    report.history = history
    report.warnings = warnings
    report.violations = violations
    report.iterations = len(history) - 1
    report.converged = converged
    for w in warnings:
        log.warning(w)
    return S, report
