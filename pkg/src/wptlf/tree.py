"""Binary tree-structured codebooks for one-bit waveform refinement.

Level ``l`` (1-based) holds ``2**(l-1)`` two-codeword subcodebooks. Codeword
``n_p`` of subcodebook ``(l, n_s)`` has flat index ``2*(n_s-1) + n_p`` at its
level and owns the descendant subcodebook ``(l+1, 2*(n_s-1) + n_p)``.

Each subcodebook is trained on the realizations its parent codeword won, and
is seeded with the parent codeword itself, so a node never distorts its cell
more than its parent codeword did.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .codebook import (DEFAULT_EPSILON_REL, DEFAULT_GAP_FRACTION, default_epsilon_gap,
                       design_codebook, distortion_tolerance, partition, sum_distortion)
from .errors import DegenerateCellError, ParameterError
from .model import RectennaParams, SystemDims, weighted_sum_vout
from .saa import SaaConfig, saa_optimize

log = logging.getLogger(__name__)

NODE_SLACK = 1e-9


def child_subcodebook_index(l: int, n_s: int, n_p: int, levels: int | None = None) -> tuple[int, int]:
    if l < 1 or not 1 <= n_s <= 2 ** (l - 1) or n_p not in (1, 2):
        raise IndexError(f"invalid codeword index (l={l}, n_s={n_s}, n_p={n_p})")
    if levels is not None and l >= levels:
        raise IndexError(f"level {l} has no descendants in a {levels}-level tree")
    return l + 1, 2 * (n_s - 1) + n_p


def parent_codeword_index(l: int, n_s: int) -> tuple[int, int, int]:
    """Inverse of :func:`child_subcodebook_index`: the (level, subcodebook, codeword)
    whose descendant is subcodebook ``(l, n_s)``."""
    if l < 2 or not 1 <= n_s <= 2 ** (l - 1):
        raise IndexError(f"subcodebook ({l}, {n_s}) has no parent codeword")
    parent = math.ceil(n_s / 2)
    return l - 1, parent, n_s - 2 * (parent - 1)


@dataclass
class TreeCodebook:
    levels: int
    root: np.ndarray
    subcodebooks: dict  # (l, n_s) -> (2, MN) array
    power: float
    dims: SystemDims
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.levels < 1:
            raise ParameterError("a tree needs at least one level")
        for l in range(1, self.levels + 1):
            for n_s in range(1, 2 ** (l - 1) + 1):
                if (l, n_s) not in self.subcodebooks:
                    raise ParameterError(f"missing subcodebook ({l}, {n_s})")
                self.subcodebooks[(l, n_s)] = np.asarray(self.subcodebooks[(l, n_s)], dtype=complex)
                if self.subcodebooks[(l, n_s)].shape != (2, self.dims.MN):
                    raise ParameterError(f"subcodebook ({l}, {n_s}) must be 2 x MN")

    def level_codewords(self, l: int) -> np.ndarray:
        """All ``2**l`` codewords of level ``l`` in flat-index order."""
        return np.concatenate([self.subcodebooks[(l, n_s)] for n_s in range(1, 2 ** (l - 1) + 1)])

    @property
    def leaves(self) -> np.ndarray:
        return self.level_codewords(self.levels)


@dataclass
class CellTree:
    node_cells: dict = field(default_factory=dict)   # (l, n_s) -> indices into the training sample
    child_cells: dict = field(default_factory=dict)  # (l, n_s, n_p) -> indices


@dataclass
class NodeRecord:
    """Distortions that certify refinement at one node."""
    parent_distortion: float
    child_distortion: float
    cell_size: int
    degenerate: bool


def split_cell(cell_sample, cell_s_opt, subcodebook, weights, params: RectennaParams,
               dims: SystemDims) -> tuple[np.ndarray, np.ndarray]:
    """Positions (within the cell) won by codeword 1 and codeword 2."""
    subcodebook = np.asarray(subcodebook)
    if subcodebook.shape[0] != 2:
        raise ParameterError("split_cell needs a two-codeword subcodebook")
    part = partition(cell_sample, cell_s_opt, subcodebook, weights, params, dims)
    first, second = part.cells
    return first, second


def init_subcodebook(cell_sample, cell_s_opt, parent_codeword, epsilon_gap: float, weights,
                     params: RectennaParams, dims: SystemDims) -> np.ndarray:
    """Seed a subcodebook with the parent codeword plus the first ideal precoder
    of the cell that the parent distorts by at least ``epsilon_gap``."""
    cell_sample = np.asarray(cell_sample)
    if cell_sample.shape[0] == 0:
        raise DegenerateCellError("empty cell")
    parent_codeword = np.asarray(parent_codeword, dtype=complex)
    fd = (weighted_sum_vout(cell_sample, cell_s_opt, weights, params, dims)
          - weighted_sum_vout(cell_sample, parent_codeword, weights, params, dims))
    hits = np.flatnonzero(fd >= epsilon_gap)
    if hits.size == 0:
        raise DegenerateCellError("no ideal precoder in the cell clears the distortion gap")
    return np.stack([parent_codeword, np.asarray(cell_s_opt)[hits[0]]])


def design_tree(sample, s_opt_set, s_init, levels: int, weights, params: RectennaParams,
                dims: SystemDims, power: float, saa_config: SaaConfig = SaaConfig(),
                epsilon_rel: float = DEFAULT_EPSILON_REL,
                gap_fraction: float = DEFAULT_GAP_FRACTION) -> tuple[TreeCodebook, CellTree]:
    if levels < 1:
        raise ParameterError("levels must be at least 1")
    sample = np.asarray(sample)
    s_opt_set = np.asarray(s_opt_set)
    if sample.shape[0] < 2 ** levels:
        log.warning("training sample (%d) smaller than leaf count (%d)", sample.shape[0], 2 ** levels)

    root, _ = saa_optimize(sample, s_init, weights, params, dims, power, saa_config)
    cells = CellTree()
    subcodebooks: dict = {}
    records: dict = {}
    degenerate: list = []
    violations: list = []

    for l in range(1, levels + 1):
        for n_s in range(1, 2 ** (l - 1) + 1):
            if l == 1:
                cell = np.arange(sample.shape[0])
                parent = root
            else:
                pl, pn, pp = parent_codeword_index(l, n_s)
                cell = cells.child_cells[(pl, pn, pp)]
                parent = subcodebooks[(pl, pn)][pp - 1]
            cells.node_cells[(l, n_s)] = cell
            H_c, S_c = sample[cell], s_opt_set[cell]

            sub = None
            if cell.size >= 2:
                gap = default_epsilon_gap(H_c, S_c, weights, params, dims, gap_fraction)
                try:
                    init = init_subcodebook(H_c, S_c, parent, gap, weights, params, dims)
                except DegenerateCellError:
                    init = None
                if init is not None:
                    sub, report = design_codebook(H_c, S_c, init, weights, params, dims, power,
                                                  epsilon_rel, saa_config)
                    violations.extend([l, n_s, *v] for v in report.violations)
            is_degenerate = sub is None
            if is_degenerate:
                sub = np.stack([parent, parent])
                degenerate.append([l, n_s])
            subcodebooks[(l, n_s)] = sub

            if cell.size:
                first, second = split_cell(H_c, S_c, sub, weights, params, dims)
                child_fd = sum_distortion(H_c, S_c, partition(H_c, S_c, sub, weights, params, dims),
                                          sub, weights, params, dims).total
                parent_fd = float(np.sum(weighted_sum_vout(H_c, S_c, weights, params, dims)
                                         - weighted_sum_vout(H_c, parent, weights, params, dims)))
                v_scale = float(np.sum(np.abs(weighted_sum_vout(H_c, S_c, weights, params, dims))))
            else:
                first = second = np.array([], dtype=int)
                child_fd = parent_fd = v_scale = 0.0
            cells.child_cells[(l, n_s, 1)] = cell[first]
            cells.child_cells[(l, n_s, 2)] = cell[second]
            records[(l, n_s)] = NodeRecord(parent_fd, child_fd, int(cell.size), is_degenerate)
            if child_fd > parent_fd + distortion_tolerance(parent_fd, v_scale, NODE_SLACK):
                violations.append([l, n_s, "node", parent_fd, child_fd])

    if degenerate:
        log.warning("%d degenerate tree node(s); parent codewords duplicated", len(degenerate))
    tree = TreeCodebook(levels, root, subcodebooks, power, dims,
                        metadata={"degenerate_nodes": degenerate,
                                  "node_records": records,
                                  "violations": violations})
    return tree, cells
