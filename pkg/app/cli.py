"""
Command line entry point: binplay codes|train|baseline|ablate|eval|report|gen
"""
import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from app.models.codes import DEFAULT_LAYOUT, CodeLayout
from app.models.config import ExperimentConfig
from app.models.scenario import Scenario
from app.services.checkpoint import load as load_checkpoint
from app.services.classifier import evaluate
from app.services.codes import codebook, format_code, make_layout
from app.services.config import layout_from_config, load_config
from app.services.datasets import load_split
from app.services.experiment import (
    ablation,
    run_baseline,
    run_binplay,
    scenario_test_split,
    with_seed,
)
from app.services.reporting import RunPaths, dump_images, memory_report, read_metrics
from app.utils.error_handler import report_cli_error
from app.utils.exceptions import ConfigError, MissingCheckpointError
from app.utils.logger import logger


def _overrides(args: argparse.Namespace) -> Dict[str, str]:
    flat: Dict[str, str] = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(message=f"Override '{item}' must look like section.key=value")
        flat[key.strip()] = value.strip()
    if getattr(args, "seed", None) is not None:
        flat["run.seed"] = str(args.seed)
    if getattr(args, "out", None) is not None:
        flat["run.out"] = str(args.out)
    return flat


def _config(args: argparse.Namespace) -> ExperimentConfig:
    return load_config(args.config, _overrides(args))


def _layout(args: argparse.Namespace) -> CodeLayout:
    if args.config is not None:
        layout = layout_from_config(load_config(args.config))
    else:
        layout = DEFAULT_LAYOUT
    if args.index_bits is None and args.primes is None and args.prefix_bits is None and args.prefix_prime is None:
        return layout
    prefix = layout.prefix_subvector
    return make_layout(
        args.index_bits if args.index_bits is not None else (layout.index_subvectors or DEFAULT_LAYOUT.index_subvectors)[0].m,
        [int(p) for p in args.primes.split(",")] if args.primes else [s.p for s in layout.index_subvectors],
        args.prefix_bits if args.prefix_bits is not None else prefix.m,
        args.prefix_prime if args.prefix_prime is not None else prefix.p,
    )


def _seeds(args: argparse.Namespace, config: ExperimentConfig) -> List[int]:
    return args.seeds or [config.run.seed]


def cmd_codes(args: argparse.Namespace) -> int:
    layout = _layout(args)
    end = args.to if args.to is not None else args.start
    rows = codebook(args.batch, args.start, end, layout)
    if args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["batch", "index", "bits"])
        for i, row in enumerate(rows, start=args.start):
            writer.writerow([args.batch, i, "".join("1" if v > 0 else "0" for v in row)])
    else:
        for row in rows:
            print(format_code(row))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _config(args)
    metrics = run_binplay(config)
    print(f"final_accuracy={metrics.final_accuracy:.6f} out={config.run.out}")
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    config = _config(args)
    root = Path(config.run.out)
    finals = []
    for seed in _seeds(args, config):
        seeded = with_seed(config, seed)
        out = root if len(_seeds(args, config)) == 1 else root / f"seed_{seed}"
        metrics = run_baseline(seeded, args.mode, out)
        finals.append(metrics.final_accuracy)
        print(f"mode={args.mode} seed={seed} final_accuracy={metrics.final_accuracy:.6f}")
    print(f"mode={args.mode} mean_final_accuracy={sum(finals) / len(finals):.6f}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _config(args)
    for row in ablation(config, _seeds(args, config)):
        print(f"variant={row.variant} mean_final_accuracy={row.mean_accuracy:.6f}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    paths = RunPaths(args.run)
    config = load_config(paths.config)
    batches = paths.checkpoint_batches("clf")
    if not batches:
        raise MissingCheckpointError(str(paths.root / "checkpoints"))
    batch = batches[-1] if args.batch is None else args.batch
    if batch not in batches:
        raise MissingCheckpointError(str(paths.classifier(batch)))
    (params,) = load_checkpoint(paths.classifier(batch))
    scenario = Scenario.model_validate_json(paths.scenario.read_text())
    test = scenario_test_split(load_split(config, "test"), scenario)
    result = evaluate(params, test.images, test.labels)
    print(json.dumps({"batch": batch, **result.model_dump()}, sort_keys=True))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = memory_report(args.run)
    payload = {
        "metrics": read_metrics(RunPaths(args.run).metrics),
        "memory": report.model_dump(),
        "generative_bytes": report.generative_bytes,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    for path in dump_images(args.run, args.indices, args.batch, args.out):
        print(path)
    return 0


def _experiment_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="section.key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    parser.add_argument("--out", type=Path, default=None, help="run directory")
    parser.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binplay", description="BinPlay continual learning experiments")
    sub = parser.add_subparsers(dest="cmd", required=True)

    codes = sub.add_parser("codes", help="print binary codes for a range of indices")
    codes.add_argument("--layout", "--config", dest="config", type=Path, default=None,
                       help="take the code layout from a config file")
    codes.add_argument("--batch", type=int, required=True)
    codes.add_argument("--from", dest="start", type=int, required=True)
    codes.add_argument("--to", type=int, default=None)
    codes.add_argument("--format", choices=["text", "csv"], default="text")
    codes.add_argument("--index-bits", type=int, default=None)
    codes.add_argument("--primes", type=str, default=None, help="comma separated index primes")
    codes.add_argument("--prefix-bits", type=int, default=None)
    codes.add_argument("--prefix-prime", type=int, default=None)
    codes.set_defaults(func=cmd_codes)

    train = sub.add_parser("train", help="run BinPlay over all batches")
    _experiment_options(train)
    train.set_defaults(func=cmd_train)

    baseline = sub.add_parser("baseline", help="finetune or joint reference run")
    _experiment_options(baseline)
    baseline.add_argument("--mode", choices=["finetune", "joint"], required=True)
    baseline.add_argument("--seeds", type=int, nargs="+", default=None)
    baseline.set_defaults(func=cmd_baseline)

    ablate = sub.add_parser("ablate", help="classifier ablation over three variants")
    _experiment_options(ablate)
    ablate.add_argument("--seeds", type=int, nargs="+", default=None)
    ablate.set_defaults(func=cmd_ablate)

    for name, func, text in (
        ("eval", cmd_eval, "evaluate a saved classifier on the test set"),
        ("report", cmd_report, "print metrics and memory footprint of a run"),
        ("gen", cmd_gen, "write reconstructions of stored indices"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--run", type=Path, required=True, help="run directory")
        if name != "report":
            sp.add_argument("--batch", type=int, default=None, help="checkpoint batch (latest by default)")
        if name == "gen":
            sp.add_argument("--indices", type=int, nargs="+", required=True)
            sp.add_argument("--out", type=Path, default=None)
        sp.set_defaults(func=func)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        return report_cli_error(e)
    finally:
        logger.complete()


if __name__ == "__main__":
    sys.exit(main())
