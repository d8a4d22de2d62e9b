"""Design and evaluation jobs behind the command-line interface.

Training draws come from the training substream and evaluation draws from a
disjoint one; every scheme is scored on the same evaluation draws (common
random numbers). Random baselines take their own per-trial substreams.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (EVALUATION_STREAM, ISOTROPIC_STREAM, RANDOM_CODEBOOK_STREAM,
                      RNG_ALGORITHM, TRAINING_STREAM, draw_sample, rng_for)
from .codebook import (Codebook, default_epsilon_gap, design_codebook, init_codebook,
                       optimal_precoder_set)
from .config import ExperimentConfig
from .errors import InsufficientDiversityError, ParameterError
from .model import vout_table, weighted_sum_vout
from .protocols import (BaselineKind, baseline_precoder, frame_average_wr, frame_average_ws,
                        random_codebook, wr_refine)
from .saa import default_initial_precoder
from .tree import TreeCodebook, design_tree

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
TRIAL_COLUMNS = ("trial", "stream", "realization_index", "scheme", "selected", "path",
                 "wpt_vout", "n_fl", "frame_vout")
RESULT_COLUMNS = ("config_key", "metric", "mean", "stderr", "trials")
HISTORY_COLUMNS = ("iteration", "total_distortion")

_training_cache: dict = {}


def _fmt(x) -> str:
    if isinstance(x, float) or isinstance(x, np.floating):
        return repr(float(x))
    return str(x)


def csv_header(config_hash: str) -> str:
    return f"# wptlf-csv v{CSV_SCHEMA_VERSION} tool={__version__} config_hash={config_hash}\n"


def write_csv(path, columns, rows, config_hash: str) -> None:
    buf = io.StringIO()
    buf.write(csv_header(config_hash))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> tuple[str, list[dict]]:
    """Header comment line and rows as dicts (values left as strings)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# wptlf-csv"):
        raise ParameterError(f"{path} lacks the versioned CSV header")
    return lines[0], list(csv.DictReader(lines[1:]))


@dataclass
class TrialRecord:
    trial: int
    stream: int
    realization_index: int
    scheme: str
    selected: object
    path: str
    wpt_vout: float
    n_fl: object
    frame_vout: object

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in TRIAL_COLUMNS)


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)

    def add(self, config_key: str, metric: str, values) -> None:
        v = np.asarray(values, dtype=float)
        stderr = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        self.rows.append((config_key, metric, float(v.mean()), stderr, int(v.size)))

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)

    def lookup(self, metric: str, config_key: str | None = None) -> tuple:
        for row in self.rows:
            if row[1] == metric and (config_key is None or row[0] == config_key):
                return row
        raise KeyError(metric)

    def write(self, path, config_hash: str) -> None:
        write_csv(path, RESULT_COLUMNS, self.rows, config_hash)


@dataclass
class TrainingData:
    sample: np.ndarray
    s_opt: np.ndarray


def training_data(cfg: ExperimentConfig) -> TrainingData:
    """Training sample and its perfect-CSIT precoders (memoized per process)."""
    key = (str(cfg.channel.to_dict()), cfg["t0"], str(cfg.params.to_dict()), cfg.power,
           str(cfg.weights), str(cfg["saa"]))
    if key not in _training_cache:
        sample = draw_sample(cfg.channel, cfg["t0"], stream=TRAINING_STREAM).realizations
        s_opt = optimal_precoder_set(sample, cfg.params, cfg.power, cfg.dims, cfg.weights,
                                     cfg.saa_config)
        _training_cache[key] = TrainingData(sample, s_opt)
    return _training_cache[key]


def training_data_from(cfg: ExperimentConfig, realizations) -> TrainingData:
    """Wrap an injected training sample, e.g. measured channels loaded from JSON."""
    H = np.asarray(realizations, dtype=complex)
    if H.ndim != 3 or H.shape[1:] != (cfg.dims.MN, cfg.dims.Q):
        raise ParameterError(f"sample shape {H.shape[1:]} does not match dims {cfg.dims}")
    s_opt = optimal_precoder_set(H, cfg.params, cfg.power, cfg.dims, cfg.weights, cfg.saa_config)
    return TrainingData(H, s_opt)


def _design_meta(cfg: ExperimentConfig, **extra) -> dict:
    meta = {"seed": cfg["seed"], "config_hash": cfg.hash(), "t0": cfg["t0"],
            "training_stream": TRAINING_STREAM, "rng": RNG_ALGORITHM,
            "tool_version": __version__}
    meta.update(extra)
    return meta


def design_flat(cfg: ExperimentConfig, n_p: int | None = None,
                data: TrainingData | None = None):
    """Pruning init plus Lloyd refinement; halves the gap on insufficient diversity."""
    n_p = n_p or cfg["n_p"]
    data = data or training_data(cfg)
    kw = dict(weights=cfg.weights, params=cfg.params, dims=cfg.dims)
    gap = default_epsilon_gap(data.sample, data.s_opt, fraction=cfg["gap_fraction"], **kw)
    attempts = []
    for attempt in range(cfg["gap_retries"] + 1):
        try:
            init = init_codebook(data.sample, data.s_opt, n_p, gap, **kw)
            attempts.append(gap)
            break
        except InsufficientDiversityError as exc:
            attempts.append(gap)
            if attempt == cfg["gap_retries"]:
                raise
            log.warning("found %d of %d codewords at gap %r; halving", exc.found, exc.wanted, gap)
            gap /= 2
    codewords, report = design_codebook(data.sample, data.s_opt, init, power=cfg.power,
                                        epsilon_rel=cfg["epsilon_rel"],
                                        saa_config=cfg.saa_config, **kw)
    meta = _design_meta(cfg, t0=len(data.sample), n_p=n_p, epsilon_gap=attempts[-1], gap_attempts=attempts,
                        epsilon_rel=cfg["epsilon_rel"], iterations=report.iterations,
                        converged=report.converged, warnings=report.warnings,
                        history=list(report.history),
                        violations=[list(v) for v in report.violations])
    return Codebook(codewords, cfg.power, cfg.dims, meta), report


def design_ts(cfg: ExperimentConfig, levels: int | None = None,
              data: TrainingData | None = None) -> TreeCodebook:
    levels = levels or cfg["levels"]
    data = data or training_data(cfg)
    s_init = default_initial_precoder(data.sample[0], cfg.power, cfg.dims)
    tree, _ = design_tree(data.sample, data.s_opt, s_init, levels, cfg.weights, cfg.params,
                          cfg.dims, cfg.power, cfg.saa_config, cfg["epsilon_rel"],
                          cfg["gap_fraction"])
    tree.metadata.update(_design_meta(cfg, t0=len(data.sample), levels=levels))
    return tree


def _check_artifact(cfg: ExperimentConfig, artifact, name: str) -> None:
    if artifact.dims != cfg.dims:
        raise ParameterError(f"{name} dims {artifact.dims} do not match the config {cfg.dims}")
    if not math.isclose(artifact.power, cfg.power, rel_tol=1e-9):
        raise ParameterError(f"{name} power {artifact.power} does not match the config {cfg.power}")


def evaluate(cfg: ExperimentConfig, codebook: Codebook | None = None,
             tree: TreeCodebook | None = None, baselines=None,
             config_key: str = "base") -> tuple[ResultTable, list[TrialRecord]]:
    """Score the designed schemes and baselines on ``t_eval`` fresh draws."""
    if codebook is not None:
        _check_artifact(cfg, codebook, "codebook")
    if tree is not None:
        _check_artifact(cfg, tree, "tree")
    baselines = [BaselineKind(b) for b in (cfg["baselines"] if baselines is None else baselines)]
    dims, params, w, P = cfg.dims, cfg.params, cfg.weights, cfg.power
    frames = cfg["frame_lengths"]
    for n_fl in frames:
        if codebook is not None and n_fl < codebook.n_p:
            raise ParameterError(f"frame length {n_fl} shorter than the WS phase ({codebook.n_p})")
        if tree is not None and n_fl < 2 * tree.levels:
            raise ParameterError(f"frame length {n_fl} shorter than the WR phase ({2 * tree.levels})")
        if BaselineKind.RVQ in baselines and n_fl < cfg.rvq_n_p:
            raise ParameterError(f"frame length {n_fl} shorter than the RVQ search ({cfg.rvq_n_p})")

    evaluation = draw_sample(cfg.channel, cfg["t_eval"], stream=EVALUATION_STREAM)
    log.debug("evaluating %d draws from stream %d", cfg["t_eval"], EVALUATION_STREAM)
    records: list[TrialRecord] = []

    def emit(trial, scheme, selected, path, v_wpt, frame_fn):
        for n_fl in frames:
            records.append(TrialRecord(trial, EVALUATION_STREAM, evaluation.start + trial, scheme,
                                       selected, path, v_wpt, n_fl, frame_fn(n_fl)))

    for trial, H in enumerate(evaluation.realizations):
        if codebook is not None:
            v = vout_table(H[None], codebook.codewords, w, params, dims)[:, 0]
            idx = int(np.argmax(v))
            emit(trial, "ws", idx + 1, "", float(v[idx]), lambda n: frame_average_ws(v, n))
        if tree is not None:
            tr = wr_refine(H, tree, w, params, dims)
            emit(trial, "wr", tr.leaf_index, "".join(map(str, tr.bits)), tr.selected_voltage,
                 lambda n: frame_average_wr(tr.probes, tr.selected_voltage, n))
        for kind in baselines:
            if kind is BaselineKind.RVQ:
                rng = rng_for(cfg["seed"], RANDOM_CODEBOOK_STREAM, trial)
                cb = random_codebook(cfg.rvq_n_p, P, dims, rng)
                v = vout_table(H[None], cb, w, params, dims)[:, 0]
                idx = int(np.argmax(v))
                emit(trial, kind.value, idx + 1, "", float(v[idx]),
                     lambda n: frame_average_ws(v, n))
                continue
            rng = rng_for(cfg["seed"], ISOTROPIC_STREAM, trial)
            s = baseline_precoder(kind, H, P, params, dims, rng=rng, weights=w,
                                  saa_config=cfg.saa_config)
            v_b = float(weighted_sum_vout(H, s, w, params, dims))
            emit(trial, kind.value, "", "", v_b, lambda n: v_b)

    table = ResultTable()
    schemes = list(dict.fromkeys(r.scheme for r in records))
    for scheme in schemes:
        mine = [r for r in records if r.scheme == scheme]
        table.add(config_key, f"{scheme}.wpt_vout", [r.wpt_vout for r in mine if r.n_fl == frames[0]])
        for n_fl in frames:
            table.add(config_key, f"{scheme}.frame_vout@{n_fl}",
                      [r.frame_vout for r in mine if r.n_fl == n_fl])
    return table, records


def simulate(cfg: ExperimentConfig, codebook=None, tree=None, config_key: str = "base"):
    """Evaluate the configured schemes, designing any artifact not supplied."""
    if "ws" in cfg["schemes"] and codebook is None:
        codebook, _ = design_flat(cfg)
    if "wr" in cfg["schemes"] and tree is None:
        tree = design_ts(cfg)
    table, records = evaluate(cfg, codebook, tree, config_key=config_key)
    return table, records, codebook, tree


def sweep(cfg: ExperimentConfig):
    """Re-run :func:`simulate` for every value of ``sweep.key``."""
    key, values = cfg["sweep"]["key"], cfg["sweep"]["values"]
    if not values:
        raise ParameterError("sweep.values is empty")
    table, records, violations = ResultTable(), [], []
    for value in values:
        point = cfg.with_value(key, value)
        label = f"{key}={value}"
        t, r, cb, tree = simulate(point, config_key=label)
        table.extend(t)
        records.extend(r)
        violations.extend(contract_violations(cb, tree))
    return table, records, violations


def contract_violations(codebook=None, tree=None) -> list:
    out = []
    if codebook is not None:
        out.extend(codebook.metadata.get("violations", []))
    if tree is not None:
        out.extend(tree.metadata.get("violations", []))
    return out


def write_trials(path, records, config_hash: str) -> None:
    write_csv(path, TRIAL_COLUMNS, [r.row() for r in records], config_hash)


def write_history(path, history, config_hash: str) -> None:
    write_csv(path, HISTORY_COLUMNS, list(enumerate(history)), config_hash)
