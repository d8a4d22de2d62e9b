"""JSON persistence for codebooks, trees and channel samples.

Complex arrays are stored as nested lists of ``[re, im]`` pairs. Floats are
written with Python's shortest round-trip repr (at most 17 significant
digits), keys are sorted, so equal objects serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channel import ChannelConfig, SampleSet
from .codebook import Codebook
from .errors import ParameterError
from .model import RectennaParams, SystemDims
from .tree import NodeRecord, TreeCodebook

FORMAT_VERSION = 1


def complex_to_json(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != 2:
        raise ParameterError("complex arrays must be stored as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _plain(obj):
    """Recursively convert numpy scalars/arrays and tuples into JSON types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, NodeRecord):
        return {k: _plain(v) for k, v in vars(obj).items()}
    return obj


def canonical_dumps(doc) -> str:
    return json.dumps(_plain(doc), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _dims_doc(dims: SystemDims) -> dict:
    return {"M": dims.M, "N": dims.N, "Q": dims.Q}


def _check_kind(doc: dict, kind: str):
    if doc.get("kind") != kind:
        raise ParameterError(f"expected a {kind!r} document, got {doc.get('kind')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ParameterError(f"unsupported {kind} format version {doc.get('version')!r}")


def codebook_to_doc(cb: Codebook, params: RectennaParams | None = None, history=None) -> dict:
    meta = dict(cb.metadata)
    stored = meta.pop("history", [])
    history = stored if history is None else history
    return {
        "kind": "codebook",
        "version": FORMAT_VERSION,
        "dims": _dims_doc(cb.dims),
        "power": cb.power,
        "params": params.to_dict() if params is not None else None,
        "codewords": complex_to_json(cb.codewords),
        "metadata": meta,
        "history": list(history),
    }


def codebook_from_doc(doc: dict) -> Codebook:
    _check_kind(doc, "codebook")
    meta = dict(doc.get("metadata") or {})
    meta.setdefault("history", doc.get("history", []))
    return Codebook(complex_from_json(doc["codewords"]), float(doc["power"]),
                    SystemDims(**doc["dims"]), meta)


def tree_to_doc(tree: TreeCodebook, params: RectennaParams | None = None) -> dict:
    meta = dict(tree.metadata)
    if "node_records" in meta:
        meta["node_records"] = [{"l": l, "n_s": n_s, **vars(rec)}
                                for (l, n_s), rec in sorted(meta["node_records"].items())]
    subs = [{"l": l, "n_s": n_s, "codewords": complex_to_json(tree.subcodebooks[(l, n_s)])}
            for l in range(1, tree.levels + 1) for n_s in range(1, 2 ** (l - 1) + 1)]
    return {
        "kind": "tree",
        "version": FORMAT_VERSION,
        "dims": _dims_doc(tree.dims),
        "power": tree.power,
        "params": params.to_dict() if params is not None else None,
        "levels": tree.levels,
        "root": complex_to_json(tree.root),
        "subcodebooks": subs,
        "metadata": meta,
    }


def tree_from_doc(doc: dict) -> TreeCodebook:
    _check_kind(doc, "tree")
    subs = {(int(e["l"]), int(e["n_s"])): complex_from_json(e["codewords"])
            for e in doc["subcodebooks"]}
    meta = dict(doc.get("metadata") or {})
    if "node_records" in meta:
        meta["node_records"] = {
            (r["l"], r["n_s"]): NodeRecord(r["parent_distortion"], r["child_distortion"],
                                           r["cell_size"], r["degenerate"])
            for r in meta["node_records"]}
    return TreeCodebook(int(doc["levels"]), complex_from_json(doc["root"]), subs,
                        float(doc["power"]), SystemDims(**doc["dims"]), meta)


def sample_to_doc(sample: SampleSet) -> dict:
    return {
        "kind": "sample",
        "version": FORMAT_VERSION,
        "config": sample.config.to_dict(),
        "seed": sample.seed,
        "stream": sample.stream,
        "start": sample.start,
        "metadata": sample.metadata,
        "realizations": complex_to_json(sample.realizations),
    }


def sample_from_doc(doc: dict) -> SampleSet:
    _check_kind(doc, "sample")
    config = ChannelConfig.from_dict(doc["config"])
    H = complex_from_json(doc["realizations"])
    if H.ndim != 3 or H.shape[1:] != (config.dims.MN, config.dims.Q):
        raise ParameterError("sample realizations do not match the configured dimensions")
    if not np.all(np.isfinite(H)):
        raise ParameterError("sample contains non-finite channel gains")
    return SampleSet(H, config, int(doc["seed"]), int(doc["stream"]), int(doc["start"]),
                     dict(doc.get("metadata") or {}))


def write_json(path, doc) -> None:
    Path(path).write_text(canonical_dumps(doc))


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
