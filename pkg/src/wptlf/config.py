"""Experiment configuration: a single JSON document plus dotted-key overrides.

Precedence, lowest first: built-in defaults, the ``--config`` file,
``--override KEY=VALUE`` entries in command-line order, then the dedicated
flags ``--seed``, ``--trials`` and ``--out``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .channel import ChannelConfig, PL_EXPONENT, PL_REF_DB, PL_REF_DISTANCE_M
from .errors import ParameterError
from .model import DEFAULT_THERMAL_VOLTAGE, RectennaParams, SystemDims
from .protocols import BaselineKind
from .saa import SaaConfig

DEFAULTS: dict = {
    "dims": {"M": 1, "N": 8, "Q": 1},
    "rectenna": {"r_ant": 50.0, "n_if": 1.0, "v_t": DEFAULT_THERMAL_VOLTAGE},
    "channel": {
        "bandwidth_hz": 10e6,
        "center_freq_hz": 2.4e9,
        "tap_count": 16,
        "delay_spread_s": 100e-9,
        "tap_spacing_s": 50e-9,
        "distance_m": 10.0,
        "pathloss_exponent": PL_EXPONENT,
        "pathloss_ref_db": PL_REF_DB,
        "pathloss_ref_distance_m": PL_REF_DISTANCE_M,
    },
    "eirp_dbm": 36.0,
    "power_w": None,            # overrides eirp_dbm when set
    "weights": None,            # per-rectenna weights, default all ones
    "seed": 0,
    "t0": 500,
    "t_eval": 200,
    "n_p": 8,
    "levels": 3,
    "frame_lengths": [200],
    "schemes": ["ws", "wr"],    # designed-codebook schemes evaluated by simulate/sweep
    "baselines": ["su_wpt", "ass", "up", "rvq", "isotropic"],
    "rvq_n_p": None,            # defaults to n_p
    "saa": {"epsilon": 1e-6, "max_iterations": 200},
    "epsilon_rel": 1e-4,
    "gap_fraction": 0.05,
    "gap_retries": 5,
    "sweep": {"key": "n_p", "values": [1, 2, 4, 8]},
    "out": "out",
}


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(w: float) -> float:
    if not w > 0:
        raise ParameterError("power must be positive to express in dBm")
    return 10.0 * math.log10(w) + 30.0


def power_from_eirp(eirp_dbm: float, M: int) -> float:
    """Per-antenna-array budget P with EIRP = M * P."""
    return dbm_to_watt(eirp_dbm) / M


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if key not in out:
            raise ParameterError(f"unknown configuration key {path + key!r}")
        if isinstance(out[key], dict) and isinstance(value, dict) and key != "sweep":
            out[key] = _merge(out[key], value, f"{path}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_override(item: str) -> tuple[str, object]:
    """``a.b=VALUE``; VALUE is parsed as JSON, falling back to a bare string."""
    if "=" not in item:
        raise ParameterError(f"override {item!r} is not of the form KEY=VALUE")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ParameterError(f"override {item!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_override(doc: dict, key: str, value) -> dict:
    doc = copy.deepcopy(doc)
    parts = key.split(".")
    node = doc
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node.get(part), dict):
            raise ParameterError(f"unknown configuration key {'.'.join(parts[:i + 1])!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ParameterError(f"unknown configuration key {key!r}")
    node[parts[-1]] = value
    return doc


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    @classmethod
    def from_dict(cls, doc: dict | None = None) -> "ExperimentConfig":
        cfg = cls(_merge(DEFAULTS, doc or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path=None, overrides=(), seed=None, trials=None, out=None) -> "ExperimentConfig":
        doc = {}
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text())
            except json.JSONDecodeError as exc:
                raise ParameterError(f"config file {path} is not valid JSON: {exc}") from exc
            if not isinstance(doc, dict):
                raise ParameterError("config file must hold a JSON object")
        merged = _merge(DEFAULTS, doc)
        for item in overrides:
            merged = apply_override(merged, *parse_override(item))
        if seed is not None:
            merged["seed"] = seed
        if trials is not None:
            merged["t_eval"] = trials
        if out is not None:
            merged["out"] = str(out)
        return cls.from_dict(merged)

    def with_value(self, key: str, value) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(apply_override(self.raw, key, value))

    def validate(self) -> None:
        r = self.raw
        try:
            self.dims
            self.params
            self.channel
            self.saa_config
        except (TypeError, ValueError) as exc:
            raise ParameterError(str(exc)) from exc
        for key in ("t0", "t_eval", "n_p", "levels"):
            if not isinstance(r[key], int) or isinstance(r[key], bool) or r[key] < 1:
                raise ParameterError(f"{key} must be a positive integer")
        if r["rvq_n_p"] is not None and (not isinstance(r["rvq_n_p"], int) or r["rvq_n_p"] < 1):
            raise ParameterError("rvq_n_p must be a positive integer")
        if not isinstance(r["seed"], int) or not 0 <= r["seed"] < 2 ** 64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        if not r["frame_lengths"] or any(not isinstance(n, int) or n < 1 for n in r["frame_lengths"]):
            raise ParameterError("frame_lengths must be a non-empty list of positive integers")
        if not self.power > 0:
            raise ParameterError("power budget must be positive")
        if r["weights"] is not None:
            w = r["weights"]
            if len(w) != self.dims.Q or any(x < 0 for x in w):
                raise ParameterError("weights must be Q non-negative numbers")
        if not 0 < r["gap_fraction"] or r["gap_retries"] < 0:
            raise ParameterError("gap_fraction must be positive and gap_retries non-negative")
        if not r["epsilon_rel"] > 0:
            raise ParameterError("epsilon_rel must be positive")
        if any(x not in ("ws", "wr") for x in r["schemes"]):
            raise ParameterError("schemes may only contain 'ws' and 'wr'")
        for b in r["baselines"]:
            try:
                BaselineKind(b)
            except ValueError as exc:
                raise ParameterError(f"unknown baseline {b!r}") from exc

    @property
    def dims(self) -> SystemDims:
        return SystemDims(**self.raw["dims"])

    @property
    def params(self) -> RectennaParams:
        return RectennaParams(**self.raw["rectenna"])

    @property
    def channel(self) -> ChannelConfig:
        return ChannelConfig(dims=self.dims, seed=self.raw["seed"], **self.raw["channel"])

    @property
    def saa_config(self) -> SaaConfig:
        return SaaConfig(**self.raw["saa"])

    @property
    def power(self) -> float:
        if self.raw["power_w"] is not None:
            return float(self.raw["power_w"])
        return power_from_eirp(self.raw["eirp_dbm"], self.dims.M)

    @property
    def weights(self):
        return self.raw["weights"]

    @property
    def rvq_n_p(self) -> int:
        return self.raw["rvq_n_p"] or self.raw["n_p"]

    def __getitem__(self, key):
        return self.raw[key]

    def hash(self) -> str:
        """Short digest of every setting that affects numeric output."""
        doc = {k: v for k, v in self.raw.items() if k != "out"}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]
