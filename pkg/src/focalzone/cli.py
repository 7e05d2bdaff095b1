"""Command-line entry point: ``focalzone <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import pipeline
from .data import SyntheticSpec
from .exceptions import FocalZoneError, StageError

log = logging.getLogger("focalzone")

_LEVELS = {"error": logging.ERROR, "warning": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging():
    name = os.environ.get("FOCALZONE_LOG", "error").strip().lower()
    level = _LEVELS.get(name)
    logging.basicConfig(level=level or logging.ERROR, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.warning("FOCALZONE_LOG=%r not recognised, using 'error'", name)


def _run_config(args) -> pipeline.RunConfig:
    try:
        cfg = pipeline.RunConfig.load(args.config) if args.config else pipeline.RunConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except (ValueError, OSError) as exc:
        raise StageError("config", exc) from exc
    return cfg


def _synthetic_spec(args) -> tuple[SyntheticSpec, int]:
    """gen-data accepts either a run config or a bare synthetic spec."""
    seed = 0
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    if "dataset" in raw:
        cfg = pipeline.RunConfig.from_dict(raw)
        if "synthetic" not in cfg.dataset:
            raise FocalZoneError("config dataset is a CSV file; gen-data needs a synthetic spec")
        spec_d, seed = cfg.dataset["synthetic"], cfg.seed
    else:
        spec_d = raw
    if args.seed is not None:
        seed = args.seed
    spec = SyntheticSpec.from_dict(spec_d)
    spec.validate()
    return spec, seed


def _gen_data(args):
    spec, seed = _synthetic_spec(args)
    path = pipeline.cmd_gen_data(spec, seed, Path(args.out) / "data.csv")
    print(path)


def _train(args):
    res = pipeline.cmd_train(_run_config(args), args.out)
    s = res.summary
    print(f"zone {s['zone']} reward {s['best_reward']:.6f} evaluations {s['reward_evaluations']} "
          f"test accuracy {s['test_accuracy']:.4f}")


def _eval(args):
    m = pipeline.cmd_eval(args.model, args.data, args.out, plots=args.plots)
    print(f"accuracy {m['accuracy']:.4f} f1_macro {m['f1_macro']:.4f}")


def _predict(args):
    print(pipeline.cmd_predict(args.model, args.data, args.out))


def _reward_study(args):
    res = pipeline.cmd_reward_study(_run_config(args), args.states, args.out)
    c = res.correlation
    r = "undefined" if c is None else f"{c.r:.4f} (p={c.p_two_sided:.4g})"
    print(f"pearson r {r} speedup {res.speedup:.1f}x")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="focalzone", description="Focal-zone selection and WAS-LSTM classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, config=False, model=False):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        p.add_argument("--out", required=True, help="output directory")
        if config:
            p.add_argument("--config", help="JSON run configuration")
            p.add_argument("--seed", type=int, help="overrides the config seed")
        if model:
            p.add_argument("--model", required=True, help="model.json written by train")
            p.add_argument("--data", required=True, help="CSV with K feature columns (plus label)")
        return p

    add("gen-data", _gen_data, "write a synthetic dataset to OUT/data.csv", config=True)
    add("train", _train, "run the full pipeline and save the model", config=True)
    add("eval", _eval, "score a saved model on a labelled CSV", model=True).add_argument(
        "--plots", action="store_true", help="also write SVG plots")
    add("predict", _predict, "write predictions for a CSV", model=True)
    add("reward-study", _reward_study, "correlate the surrogate reward with probe accuracy", config=True).add_argument(
        "--states", type=int, default=8, help="number of sampled focal zones (default 8)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging()
    try:
        args.func(args)
    except StageError as exc:
        print(f"focalzone {args.command}: error {exc}", file=sys.stderr)
        return 2
    except (FocalZoneError, ValueError, OSError) as exc:
        print(f"focalzone {args.command}: error [{args.command}] {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
