"""Command-line entry points: run, sweep, synth, train-fusion."""

from __future__ import annotations

import argparse
import json
import sys

from .banks import write_bank
from .fusion import save_fusion
from .harness import Pipeline, RunConfig, apply_parameter, run, sweep
from .stats import BaseClassStats
from .synthetic import SyntheticSpec, generate


def _load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(json.load(fh))


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    import dataclasses

    ep = config.episodes
    ep_over = {}
    if args.n_way is not None:
        ep_over["n_way"] = args.n_way
    if args.k_shot is not None:
        ep_over["k_shot"] = args.k_shot
    if args.episodes is not None:
        ep_over["episode_count"] = args.episodes
    if args.seed is not None:
        ep_over["master_seed"] = args.seed
    if ep_over:
        config = dataclasses.replace(config, episodes=dataclasses.replace(ep, **ep_over))
    if args.pipeline is not None:
        config = dataclasses.replace(config, pipeline=Pipeline(args.pipeline))
    if args.workers is not None:
        config = dataclasses.replace(config, workers=args.workers)
    if args.output is not None:
        config = dataclasses.replace(config, output_path=args.output)
    if args.merging is not None:
        from .hallucinate import Merging

        config = dataclasses.replace(
            config, pvdh=dataclasses.replace(config.pvdh, merging=Merging(args.merging))
        )
    for name in ("tau", "alpha", "p", "q", "resample_count"):
        value = getattr(args, name)
        if value is not None:
            config = apply_parameter(config, name, value)
    if getattr(args, "lambda_", None) is not None:
        config = apply_parameter(config, "lambda", args.lambda_)
    return config


def _add_run_flags(sub):
    sub.add_argument("--config", required=True)
    sub.add_argument("--pipeline", choices=[p.value for p in Pipeline])
    sub.add_argument("--n-way", type=int, dest="n_way")
    sub.add_argument("--k-shot", type=int, dest="k_shot")
    sub.add_argument("--episodes", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--tau", type=float)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--p", type=int)
    sub.add_argument("--q", type=int)
    sub.add_argument("--resample-count", type=int, dest="resample_count")
    sub.add_argument("--lambda", type=float, dest="lambda_")
    sub.add_argument("--merging", choices=["after_estimation", "before_estimation", "no_merging"])
    sub.add_argument("--workers", type=int)
    sub.add_argument("--output")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dualhal")
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="evaluate one pipeline configuration")
    _add_run_flags(run_p)

    sweep_p = subs.add_parser("sweep", help="evaluate a configuration across parameter values")
    _add_run_flags(sweep_p)
    sweep_p.add_argument("--param", required=True)
    sweep_p.add_argument("--values", required=True, help="comma-separated values")

    synth_p = subs.add_parser("synth", help="emit synthetic feature/semantic banks")
    synth_p.add_argument("--spec", required=True, help="JSON synthetic spec")
    synth_p.add_argument("--features-out", required=True)
    synth_p.add_argument("--semantics-out", required=True)

    fusion_p = subs.add_parser("train-fusion", help="train and serialize a fusion network")
    fusion_p.add_argument("--config", required=True)
    fusion_p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = _apply_overrides(_load_config(args.config), args)
            result = run(config)
            print(f"mean_accuracy={result.mean_accuracy:.4f} ci95={result.ci95:.4f}")
        elif args.command == "sweep":
            config = _apply_overrides(_load_config(args.config), args)
            values = [v for v in args.values.split(",") if v]
            results = sweep(config, args.param, values)
            out = []
            for v, res in zip(values, results):
                print(f"{args.param}={v}: mean_accuracy={res.mean_accuracy:.4f} ci95={res.ci95:.4f}")
                out.append({"value": v, "result": res.to_dict()})
            if config.output_path:
                with open(config.output_path, "w") as fh:
                    json.dump({"param": args.param, "results": out}, fh, indent=2)
        elif args.command == "synth":
            with open(args.spec) as fh:
                spec = SyntheticSpec(**json.load(fh))
            features, semantics = generate(spec)
            write_bank(features, args.features_out)
            write_bank(semantics, args.semantics_out)
            print(f"wrote {args.features_out} and {args.semantics_out}")
        elif args.command == "train-fusion":
            config = _load_config(args.config)
            from .fusion import train_fusion
            from .harness import load_banks

            bank, semantics = load_banks(config)
            raw_stats = BaseClassStats.from_bank(bank, tau=None)
            net = train_fusion(bank, semantics, raw_stats, config.fusion_train, config.lam)
            save_fusion(net, args.out)
            print(f"wrote {args.out}")
    except Exception as exc:  # surfaced as a single diagnostic line, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
