"""Over-the-air waveform selection (WS) and refinement (WR), plus baselines.

Time is counted in ET transmission slots; feedback slots are free. A WS frame
probes all ``N_p`` codewords then transmits the best one for the rest of the
frame. A WR frame spends two slots per tree level and transmits the refined
codeword afterwards.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import RectennaParams, SystemDims, vout_table, weighted_sum_vout
from .saa import SaaConfig, default_initial_precoder, saa_optimize
from .tree import TreeCodebook


class BaselineKind(str, enum.Enum):
    SU_WPT = "su_wpt"
    ASS = "ass"
    UP = "up"
    RVQ = "rvq"
    ISOTROPIC = "isotropic"


@dataclass
class WrTrace:
    visited: list = field(default_factory=list)        # (l, n_s) per stage
    bits: list = field(default_factory=list)
    probes: list = field(default_factory=list)         # (v1, v2) per stage
    selected: np.ndarray | None = None
    selected_voltage: float = 0.0
    leaf_index: int = 0                                # 1-based flat index at level L

    @property
    def evaluations(self) -> int:
        return 2 * len(self.probes)


def ws_select(H, codewords, weights, params: RectennaParams, dims: SystemDims) -> tuple[int, float]:
    """Exhaustive search; returns the 1-based winning index and its voltage."""
    v = vout_table(np.asarray(H)[None], np.atleast_2d(codewords), weights, params, dims)[:, 0]
    idx = int(np.argmax(v))
    return idx + 1, float(v[idx])


def feedback_bit(v1: float, v2: float) -> int:
    return 1 if v1 > v2 else 0


def wr_refine(H, tree: TreeCodebook, weights, params: RectennaParams, dims: SystemDims,
              flip_prob: float = 0.0, rng: np.random.Generator | None = None) -> WrTrace:
    """Descend the tree with one feedback bit per level.

    ``flip_prob`` models a noisy feedback link; it defaults to an errorless link.
    """
    trace = WrTrace()
    n_s, bit = 1, 1
    for l in range(1, tree.levels + 1):
        n_s = 2 * n_s - 1 if bit == 1 else 2 * n_s
        pair = tree.subcodebooks[(l, n_s)]
        v1, v2 = (float(x) for x in weighted_sum_vout(H, pair, weights, params, dims))
        bit = feedback_bit(v1, v2)
        if flip_prob > 0 and rng is not None and rng.random() < flip_prob:
            bit = 1 - bit
        trace.visited.append((l, n_s))
        trace.bits.append(bit)
        trace.probes.append((v1, v2))
    pick = 0 if bit == 1 else 1
    trace.selected = tree.subcodebooks[(tree.levels, n_s)][pick]
    trace.selected_voltage = trace.probes[-1][pick]
    trace.leaf_index = 2 * (n_s - 1) + pick + 1
    return trace


def replay_bits(bits) -> list[tuple[int, int]]:
    """Subcodebook path implied by a feedback bit sequence."""
    path, n_s, bit = [], 1, 1
    for l, b in enumerate(bits, start=1):
        n_s = 2 * n_s - 1 if bit == 1 else 2 * n_s
        path.append((l, n_s))
        bit = b
    return path


def frame_average_ws(voltages, n_fl: int) -> float:
    voltages = np.asarray(voltages, dtype=float)
    n_p = voltages.size
    if n_fl < n_p:
        raise ParameterError(f"frame length {n_fl} shorter than the WS phase ({n_p} slots)")
    return float((voltages.sum() + (n_fl - n_p) * voltages.max()) / n_fl)


def frame_average_wr(probes, selected_voltage: float, n_fl: int) -> float:
    probes = np.asarray(probes, dtype=float)
    n_probe = probes.size
    if n_fl < n_probe:
        raise ParameterError(f"frame length {n_fl} shorter than the WR phase ({n_probe} slots)")
    return float((probes.sum() + (n_fl - n_probe) * selected_voltage) / n_fl)


def frame_vout_ws(H, codewords, n_fl: int, weights, params: RectennaParams, dims: SystemDims) -> float:
    v = vout_table(np.asarray(H)[None], np.atleast_2d(codewords), weights, params, dims)[:, 0]
    return frame_average_ws(v, n_fl)


def frame_vout_wr(H, tree: TreeCodebook, n_fl: int, weights, params: RectennaParams,
                  dims: SystemDims) -> float:
    if n_fl < 2 * tree.levels:
        raise ParameterError(f"frame length {n_fl} shorter than the WR phase ({2 * tree.levels} slots)")
    trace = wr_refine(H, tree, weights, params, dims)
    return frame_average_wr(trace.probes, trace.selected_voltage, n_fl)


def _mrt(h: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(h)
    if norm == 0:
        out = np.zeros_like(h)
        out[0] = 1.0
        return out
    return h.conj() / norm


def random_codebook(n_p: int, power: float, dims: SystemDims, rng: np.random.Generator) -> np.ndarray:
    """Codewords uniform on the complex sphere of radius sqrt(P)."""
    g = rng.standard_normal((n_p, dims.MN)) + 1j * rng.standard_normal((n_p, dims.MN))
    return np.sqrt(power) * g / np.linalg.norm(g, axis=1, keepdims=True)


def baseline_precoder(kind, H, power: float, params: RectennaParams, dims: SystemDims,
                      rng: np.random.Generator | None = None, weights=None, n_p: int = 16,
                      saa_config: SaaConfig = SaaConfig()) -> np.ndarray:
    """Precoder used by a baseline scheme on realization ``H``.

    CSIT-based spatial rules use the first rectenna's channel.
    """
    kind = BaselineKind(kind)
    H = np.asarray(H)
    M, N = dims.M, dims.N
    h1 = H[:, 0].reshape(N, M)
    if kind is BaselineKind.SU_WPT:
        s, _ = saa_optimize(H[None], default_initial_precoder(H, power, dims), weights, params,
                            dims, power, saa_config)
        return s
    if kind is BaselineKind.ASS:
        n_star = int(np.argmax(np.linalg.norm(h1, axis=1)))
        s = np.zeros((N, M), dtype=complex)
        s[n_star] = np.sqrt(power) * _mrt(h1[n_star])
        return s.ravel()
    if kind is BaselineKind.UP:
        s = np.stack([np.sqrt(power / N) * _mrt(h1[n]) for n in range(N)])
        return s.ravel()
    if rng is None:
        raise ParameterError(f"{kind.value} baseline needs a random generator")
    if kind is BaselineKind.RVQ:
        codebook = random_codebook(n_p, power, dims, rng)
        idx, _ = ws_select(H, codebook, weights, params, dims)
        return codebook[idx - 1]
    phases = rng.uniform(0.0, 2 * np.pi, dims.MN)
    return np.sqrt(power / dims.MN) * np.exp(1j * phases)
