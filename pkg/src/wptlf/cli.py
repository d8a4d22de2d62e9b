"""``wptlf`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numeric-contract violation,
4 I/O error. ``WPT_LOG`` sets the log level (DEBUG, INFO, WARNING, ERROR).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import experiments as ex
from .config import ExperimentConfig
from .errors import NumericContractError, WptError
from .serialize import (canonical_dumps, codebook_from_doc, codebook_to_doc, read_json,
                        sample_from_doc, tree_from_doc, tree_to_doc, write_json)

log = logging.getLogger("wptlf")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment configuration")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--trials", type=_positive, help="evaluation draws, i.e. t_eval")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a dotted config key; VALUE is parsed as JSON (repeatable)")

    parser = argparse.ArgumentParser(prog="wptlf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("design-codebook", "design a flat WS codebook"),
                       ("design-tree", "design a tree codebook for WR")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--sample", type=Path,
                       help="training sample JSON to use instead of synthetic draws")
    sim = sub.add_parser("simulate", parents=[common],
                         help="evaluate WS/WR and baselines on fresh draws")
    sim.add_argument("--codebook", type=Path, help="codebook JSON (designed if omitted)")
    sim.add_argument("--tree", type=Path, help="tree JSON (designed if omitted)")
    sub.add_parser("compare-baselines", parents=[common], help="evaluate the baselines only")
    sub.add_parser("sweep", parents=[common], help="repeat simulate over sweep.values")
    return parser


def _setup_logging() -> None:
    level = os.environ.get("WPT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _finish(violations) -> int:
    if violations:
        raise NumericContractError(f"{len(violations)} monotonicity breach(es) recorded")
    return EXIT_OK


def _write_codebook(out: Path, cfg, codebook, report=None) -> None:
    history = report.history if report is not None else codebook.metadata.get("history", [])
    write_json(out / "codebook.json", codebook_to_doc(codebook, cfg.params, history))
    ex.write_history(out / "codebook_history.csv", history, cfg.hash())


def run(args) -> int:
    cfg = ExperimentConfig.load(args.config, args.override, args.seed, args.trials, args.out)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(canonical_dumps(cfg.raw))
    h = cfg.hash()
    log.info("%s: config_hash=%s seed=%d out=%s", args.command, h, cfg["seed"], out)

    data = None
    if getattr(args, "sample", None) is not None:
        data = ex.training_data_from(cfg, sample_from_doc(read_json(args.sample)).realizations)

    if args.command == "design-codebook":
        codebook, report = ex.design_flat(cfg, data=data)
        _write_codebook(out, cfg, codebook, report)
        return _finish(ex.contract_violations(codebook))

    if args.command == "design-tree":
        tree = ex.design_ts(cfg, data=data)
        write_json(out / "tree.json", tree_to_doc(tree, cfg.params))
        if tree.metadata["degenerate_nodes"]:
            log.warning("degenerate nodes: %s", json.dumps(tree.metadata["degenerate_nodes"]))
        return _finish(ex.contract_violations(tree=tree))

    if args.command == "simulate":
        codebook = codebook_from_doc(read_json(args.codebook)) if args.codebook else None
        tree = tree_from_doc(read_json(args.tree)) if args.tree else None
        designed_cb, designed_tree = codebook is None, tree is None
        table, records, codebook, tree = ex.simulate(cfg, codebook, tree)
        if designed_cb and codebook is not None:
            _write_codebook(out, cfg, codebook)
        if designed_tree and tree is not None:
            write_json(out / "tree.json", tree_to_doc(tree, cfg.params))
        table.write(out / "results.csv", h)
        ex.write_trials(out / "trials.csv", records, h)
        return _finish(ex.contract_violations(codebook if designed_cb else None,
                                              tree if designed_tree else None))

    if args.command == "compare-baselines":
        table, records = ex.evaluate(cfg)
        table.write(out / "baselines.csv", h)
        ex.write_trials(out / "trials.csv", records, h)
        return EXIT_OK

    if args.command == "sweep":
        table, records, violations = ex.sweep(cfg)
        table.write(out / "sweep.csv", h)
        ex.write_trials(out / "trials.csv", records, h)
        return _finish(violations)

    raise AssertionError(args.command)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = run(args)
        log.info("%s finished", args.command)
        return code
    except NumericContractError as exc:
        log.error("numeric contract violation: %s", exc)
        return EXIT_NUMERIC
    except (WptError, ValueError, KeyError, TypeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
