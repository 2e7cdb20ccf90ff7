"""Command-line front end.

Every subcommand except ``gen-corpus`` builds a pico-ioc container from the
layered configuration (environment, ``--config`` YAML, flags) and runs one
method of :class:`~pico_discourse.runner.ExperimentRunner`.

Exit status: 0 on success, 2 for configuration errors, 3 for transcript or
annotation errors, 4 for schema errors and 1 for any other toolkit error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from pico_ioc import init

from . import __version__
from .config import build_configuration
from .corpus import write_narrative
from .exceptions import AnnotationError, ConfigError, PicoDiscourseError, SchemaError, TranscriptParseError
from .runner import ExperimentRunner
from .synthetic import PLANTED_RULES, TRAINING_NARRATIVE_SIZES, GeneratorSettings, generate_corpus

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_SCHEMA = 4

CONTAINER_MODULES = ["pico_discourse.config", "pico_discourse.factory", "pico_discourse.runner"]


def _add_common(parser: argparse.ArgumentParser) -> None:
    config_group = parser.add_argument_group("Configuration")
    config_group.add_argument("--config", type=Path, help="YAML experiment file")
    config_group.add_argument("--output", help="output directory (experiment.output)")
    config_group.add_argument("--report-format", choices=["table", "json"])
    config_group.add_argument("--averaging", choices=["macro", "micro"])

    corpus_group = parser.add_argument_group("Corpus")
    corpus_group.add_argument("--corpus", help="corpus directory (default: $PICO_DISCOURSE_CORPUS)")
    corpus_group.add_argument("--mode", choices=["strict", "lenient"], help="transcript parse mode")
    corpus_group.add_argument("--train", help="comma-separated training narrative ids")
    corpus_group.add_argument("--test", help="comma-separated test narrative ids")

    coder_group = parser.add_argument_group("Coding")
    coder_group.add_argument("--threshold", type=int, help="subjects needed for a gold boundary (T)")
    coder_group.add_argument("--lexicon", help="cue-word file (default: packaged list)")
    coder_group.add_argument("--global-pro-mode", choices=["static", "dynamic"])

    algo_group = parser.add_argument_group("Algorithm and learner")
    algo_group.add_argument("--algorithm", help="np1, np2, builtin (fig7) or tree:<path>")
    algo_group.add_argument("--folds", type=int, help="cross-validation folds (0: one per narrative)")
    algo_group.add_argument("--min-instances", type=int)
    algo_group.add_argument("--confidence-factor", type=float)
    algo_group.add_argument("--categorical-grouping", choices=["per_value", "subset_search"])
    algo_group.add_argument("--gain-restriction", choices=["gain_ratio_over_average_gain", "pure_gain_ratio"])
    algo_group.add_argument("--no-prune", action="store_true", help="skip pessimistic pruning")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pico-discourse",
        description="Code, segment, learn and evaluate discourse segmentations of spoken narratives.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="only log errors")

    commands = parser.add_subparsers(dest="command", required=True)

    features = commands.add_parser("features", help="write the per-site feature table")
    _add_common(features)

    segment = commands.add_parser("segment", help="segment narratives and score them")
    _add_common(segment)

    train = commands.add_parser("train", help="learn a decision tree from the training narratives")
    _add_common(train)
    train.add_argument("--features", type=Path, help="train from a feature table instead of the corpus")

    evaluate = commands.add_parser("eval", help="score a segmentation file, or run the full experiment report")
    _add_common(evaluate)
    evaluate.add_argument("segmentation", nargs="?", type=Path, help="segmentation file to score")

    xval = commands.add_parser("xval", help="cross-validate the learner over narrative folds")
    _add_common(xval)

    gen = commands.add_parser("gen-corpus", help="write a synthetic corpus with a planted rule")
    gen.add_argument("directory", type=Path, help="where to write the transcripts and sidecars")
    gen.add_argument("--rule", choices=PLANTED_RULES, default="sfc-pause-duration")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument(
        "--sizes",
        default=",".join(str(s) for s in TRAINING_NARRATIVE_SIZES),
        help="comma-separated phrase counts, one per narrative",
    )
    gen.add_argument("--subjects", type=int, default=7)
    gen.add_argument("--threshold", type=int, default=3)
    gen.add_argument("--cue-rate", type=float, default=0.15)
    gen.add_argument("--noise", type=float, default=0.0)
    return parser


def _put(tree: dict, section: str, key: str, value: Any) -> None:
    if value is not None:
        tree.setdefault(section, {})[key] = value


def args_to_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Translate the flags that were given into a configuration tree."""
    overrides: dict[str, Any] = {}
    _put(overrides, "corpus", "root", args.corpus)
    _put(overrides, "corpus", "mode", args.mode)
    _put(overrides, "corpus", "train", args.train.split(",") if args.train else None)
    _put(overrides, "corpus", "test", args.test.split(",") if args.test else None)
    _put(overrides, "coder", "threshold", args.threshold)
    _put(overrides, "coder", "lexicon", args.lexicon)
    _put(overrides, "coder", "global_pro_mode", args.global_pro_mode)
    _put(overrides, "learner", "min_instances", args.min_instances)
    _put(overrides, "learner", "confidence_factor", args.confidence_factor)
    _put(overrides, "learner", "categorical_grouping", args.categorical_grouping)
    _put(overrides, "learner", "gain_restriction", args.gain_restriction)
    _put(overrides, "learner", "prune", False if args.no_prune else None)
    _put(overrides, "experiment", "algorithm", args.algorithm)
    _put(overrides, "experiment", "folds", args.folds)
    _put(overrides, "experiment", "report_format", args.report_format)
    _put(overrides, "experiment", "averaging", args.averaging)
    _put(overrides, "experiment", "output", args.output)
    return overrides


def build_runner(args: argparse.Namespace) -> ExperimentRunner:
    container = init(modules=CONTAINER_MODULES, config=build_configuration(args.config, args_to_overrides(args)))
    return container.get(ExperimentRunner)


def _gen_corpus(args: argparse.Namespace) -> str:
    try:
        sizes = tuple(int(s) for s in args.sizes.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    settings = GeneratorSettings(
        rule=args.rule,
        sizes=sizes,
        seed=args.seed,
        n_subjects=args.subjects,
        threshold=args.threshold,
        cue_rate=args.cue_rate,
        noise=args.noise,
    )
    narratives = generate_corpus(settings)
    for narrative in narratives:
        write_narrative(narrative, args.directory)
    sites = sum(n.site_count for n in narratives)
    return f"wrote {len(narratives)} narratives ({sites} sites) to {args.directory}\n"


def run(args: argparse.Namespace) -> str:
    if args.command == "gen-corpus":
        return _gen_corpus(args)
    runner = build_runner(args)
    if args.command == "features":
        return f"wrote {runner.features()}\n"
    if args.command == "segment":
        return runner.segment()
    if args.command == "train":
        return runner.train(args.features)
    if args.command == "eval":
        return runner.evaluate(args.segmentation)
    return runner.xval()


def _toolkit_error(exc: BaseException) -> Optional[PicoDiscourseError]:
    """Find a toolkit error in an exception chain (the container may wrap it)."""
    seen = set()
    while exc is not None and id(exc) not in seen:
        if isinstance(exc, PicoDiscourseError):
            return exc
        seen.add(id(exc))
        exc = exc.__cause__ or exc.__context__
    return None


def exit_code(exc: PicoDiscourseError) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (TranscriptParseError, AnnotationError)):
        return EXIT_PARSE
    if isinstance(exc, SchemaError):
        return EXIT_SCHEMA
    return EXIT_ERROR


def configure_logging(verbose: int, quiet: bool) -> None:
    level = logging.ERROR if quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        output = run(args)
    except Exception as exc:
        error = _toolkit_error(exc)
        if error is None:
            raise
        logger.error("%s", error)
        return exit_code(error)
    sys.stdout.write(output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
