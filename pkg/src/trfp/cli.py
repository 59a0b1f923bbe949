"""Command-line interface.

Subcommands: ingest, featurize, simulate, train, predict, evaluate, repro.
Exit codes: 0 success, 1 usage error, 2 data error.  Diagnostics go to
stderr; set ``TRFP_LOG=info`` (or ``debug``) for progress output.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .trace_model import ModelLabel, Scenario, TraceError, write_trace_csv, write_sidecar, sidecar_path


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="trfp", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=1, help="worker threads for per-trace stages")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse + clean one capture into canonical CSV")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--pcap", action="store_true", help="input is a classic pcap file")
    p.add_argument("--src", help="keep only packets from this source IP")
    p.add_argument("--port", type=int, help="keep only packets touching this TCP/UDP port")
    p.add_argument("--label", help="label name for the metadata sidecar")
    p.add_argument("--scenario", default="unknown", help="localhost|lan|remote|vpn|unknown")
    p.add_argument("--out", required=True, help="output trace CSV path")

    p = sub.add_parser("featurize", help="extract windowed features from a trace CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, default=0.5)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--burst", type=float, default=0.05)

    p = sub.add_parser("simulate", help="synthesize a labeled trace dataset")
    p.add_argument("--profiles", default="table1", help="profiles CSV path or 'table1'")
    p.add_argument("--channel", default="localhost", help="preset name or channel file")
    p.add_argument("--per-class-seconds", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="dataset directory")

    p = sub.add_parser("train", help="train a classifier from a feature directory")
    p.add_argument("--features-dir", required=True)
    p.add_argument("--config", help="pipeline config file (key = value)")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--out", required=True, help="output model path (.trfp)")

    p = sub.add_parser("predict", help="classify sequences from one feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="verdicts CSV")

    p = sub.add_parser("evaluate", help="score a model against a labeled feature directory")
    p.add_argument("--model", required=True)
    p.add_argument("--features-dir", required=True)
    p.add_argument("--out", required=True, help="report directory")

    p = sub.add_parser("repro", help="end-to-end simulate/train/evaluate experiment")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--channel", default="localhost")
    p.add_argument("--train-seconds", type=float, default=300.0)
    p.add_argument("--test-seconds", type=float, default=1000.0)
    p.add_argument("--config", help="pipeline config file (key = value)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _dispatch(args)
    except (TraceError, OSError, ValueError) as exc:
        print(f"trfp {args.command}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    # imports deferred so --help stays fast
    from . import pipeline
    from .features import WindowParams, extract, write_feature_csv
    from .ingest import ingest_file
    from .trace_model import load_trace

    if args.command == "ingest":
        label = None
        if args.label:
            label = ModelLabel(args.label, "", -1)
        trace, report = ingest_file(
            args.in_path,
            pcap=args.pcap,
            src_filter=args.src,
            port_filter=args.port,
            label=label,
            scenario=Scenario.parse(args.scenario),
        )
        out = Path(args.out)
        write_trace_csv(trace, out, sidecar=False)
        write_sidecar(trace, sidecar_path(out))
        out.with_suffix(".report").write_text(report.as_text(), encoding="utf-8")
        print(f"{len(trace)} packets -> {out}", file=sys.stderr)
        return 0

    if args.command == "featurize":
        params = WindowParams(args.window, args.step, args.burst)
        vectors = extract(load_trace(args.trace), params)
        write_feature_csv(vectors, args.out)
        print(f"{len(vectors)} windows -> {args.out}", file=sys.stderr)
        return 0

    if args.command == "simulate":
        profiles = pipeline.resolve_profiles(args.profiles)
        paths = pipeline.simulate_to_dir(
            profiles, args.channel, args.per_class_seconds, args.seed, Path(args.out)
        )
        print(f"{len(paths)} traces -> {args.out}", file=sys.stderr)
        return 0

    if args.command == "train":
        cfg = pipeline.load_pipeline_config(args.config) if args.config else pipeline.PipelineConfig()
        if args.seed is not None:
            from dataclasses import replace

            cfg = replace(cfg, seed=args.seed)
        result = pipeline.train_from_features(Path(args.features_dir), cfg.train_config())
        from .classifier import save_model

        save_model(result.params, args.out)
        last = result.history[-1]
        print(
            f"trained {len(result.history)} epochs; "
            f"val acc {last.val_acc:.4f} -> {args.out}",
            file=sys.stderr,
        )
        return 0

    if args.command == "predict":
        from .classifier import load_model

        params = load_model(args.model)
        n = pipeline.predict_features_csv(params, Path(args.features), Path(args.out))
        print(f"{n} verdicts -> {args.out}", file=sys.stderr)
        return 0

    if args.command == "evaluate":
        from .classifier import load_model

        params = load_model(args.model)
        report, _ = pipeline.evaluate_model(params, Path(args.features_dir), Path(args.out))
        print(
            f"macro F1 {report.macro_f1:.4f}, weighted F1 {report.weighted_f1:.4f} "
            f"-> {args.out}", file=sys.stderr,
        )
        return 0

    if args.command == "repro":
        cfg = pipeline.load_pipeline_config(args.config) if args.config else None
        report = pipeline.run_repro(
            Path(args.out),
            seed=args.seed,
            channel=args.channel,
            train_seconds=args.train_seconds,
            test_seconds=args.test_seconds,
            config=cfg,
            threads=args.threads,
        )
        print(f"macro F1 {report.macro_f1:.4f} -> {args.out}", file=sys.stderr)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
