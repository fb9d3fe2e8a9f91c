"""Command-line interface.

    speecheval evaluate --manifest <file> --out <dir> [--format json|csv]
        [--group-by speaker|group] [--pcc-reference reconstructed|target]
        [--ipa-match strict|base] [--yin-fmin HZ --yin-fmax HZ
         --yin-threshold X] [--jobs N] [--config FILE]

Exit codes: 0 success, 1 validation errors (bad arguments, manifest
problems), 2 I/O errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import ManifestError, SpeechEvalError
from .harness import ToolkitConfig, emit_report, load_manifest, run_evaluation

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for
    # I/O failures here, so usage problems exit 1 like other
    # validation errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="speecheval",
                     description="Batch evaluation of reconstructed speech.")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="run the evaluation harness on a manifest")
    ev.add_argument("--manifest", required=True,
                    help="manifest file (JSON, or CSV by extension)")
    ev.add_argument("--out", required=True, help="output directory")
    ev.add_argument("--format", choices=("json", "csv"), default="json")
    ev.add_argument("--group-by", choices=("speaker", "group"), default=None,
                    help="extra grouping dimension for aggregates "
                         "(default: per method over the whole corpus)")
    ev.add_argument("--pcc-reference", choices=("reconstructed", "target"),
                    default=None)
    ev.add_argument("--ipa-match", choices=("strict", "base"), default=None)
    ev.add_argument("--f0-aggregate", choices=("mean", "median"), default=None)
    ev.add_argument("--yin-fmin", type=float, default=None, metavar="HZ")
    ev.add_argument("--yin-fmax", type=float, default=None, metavar="HZ")
    ev.add_argument("--yin-threshold", type=float, default=None, metavar="X")
    ev.add_argument("--jobs", type=int, default=1, metavar="N",
                    help="parallel workers (report bytes do not depend on this)")
    ev.add_argument("--config", default=None, metavar="FILE",
                    help="JSON config file (e.g. a report's config echo); "
                         "explicit flags override it")
    return parser


def _config_from_args(args: argparse.Namespace) -> ToolkitConfig:
    if args.config is not None:
        with open(args.config, encoding="utf-8") as handle:
            cfg = ToolkitConfig.from_mapping(json.load(handle))
    else:
        cfg = ToolkitConfig()

    yin_overrides = {}
    if args.yin_fmin is not None:
        yin_overrides["f0_min"] = args.yin_fmin
    if args.yin_fmax is not None:
        yin_overrides["f0_max"] = args.yin_fmax
    if args.yin_threshold is not None:
        yin_overrides["threshold"] = args.yin_threshold
    if yin_overrides:
        cfg = dataclasses.replace(
            cfg, yin=dataclasses.replace(cfg.yin, **yin_overrides)
        )
    overrides = {}
    if args.group_by is not None:
        overrides["group_by"] = args.group_by
    if args.pcc_reference is not None:
        overrides["pcc_reference"] = args.pcc_reference
    if args.ipa_match is not None:
        overrides["ipa_match"] = args.ipa_match
    if args.f0_aggregate is not None:
        overrides["f0_aggregate"] = args.f0_aggregate
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"speecheval: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        cfg = _config_from_args(args)
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"speecheval: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"speecheval: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        records = load_manifest(args.manifest)
    except ManifestError as exc:
        print(f"speecheval: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"speecheval: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        report = run_evaluation(records, cfg, jobs=max(1, args.jobs))
    except SpeechEvalError as exc:
        print(f"speecheval: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        written = emit_report(report, args.format, args.out)
    except OSError as exc:
        print(f"speecheval: {exc}", file=sys.stderr)
        return EXIT_IO

    print(f"evaluated {len(report.per_utterance)} rows; wrote "
          + ", ".join(str(p) for p in written))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
