"""The experiment runner behind every CLI subcommand.

:class:`ExperimentRunner` is a container component: it receives the bound
settings, the shared cue lexicon and learner options, loads the corpus on first use, and
writes each command's outputs into ``experiment.output``.  Outputs never
contain timestamps; reports carry the digest of the effective settings, so
rerunning a configuration reproduces its files byte for byte.
"""

import logging
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

from pico_ioc import component

from .coder import CueLexicon, SiteRecord, code_narrative, write_feature_table
from .config import (
    AlternateLearnerSettings,
    CoderSettings,
    CorpusSettings,
    ExperimentSettings,
    LearnerSettings,
    config_digest,
)
from .corpus import Narrative, load_corpus
from .evaluation import (
    NamedReport,
    cross_validate,
    evaluate_segmenter,
    gold_labels,
    human_performance,
    render_reports,
    score_segmentations,
)
from .exceptions import ConfigError, EvaluationError
from .factory import resolve_segmenter
from .induce import LearnerConfig, TrainingSet, learn_tree
from .segmenter import NpSegmenter, TreeSegmenter, read_segmentations, write_segmentations
from .tree import DecisionTree, tree_to_json, tree_to_text

logger = logging.getLogger(__name__)

FEATURES_FILE = "features.csv"
SEGMENTATION_FILE = "segmentation.tsv"
TREE_FILE = "tree"


@component
class ExperimentRunner:
    def __init__(
        self,
        corpus: CorpusSettings,
        coder: CoderSettings,
        learner: LearnerSettings,
        learner2: AlternateLearnerSettings,
        experiment: ExperimentSettings,
        lexicon: CueLexicon,
        learner_config: LearnerConfig,
    ):
        self.corpus = corpus
        self.coder = coder
        self.learner = learner
        self.learner2 = learner2
        self.experiment = experiment
        self.lexicon = lexicon
        self.learner_config = learner_config

    # --- shared plumbing -------------------------------------------------------

    @cached_property
    def digest(self) -> str:
        return config_digest(self.corpus, self.coder, self.learner, self.learner2, self.experiment)

    @property
    def output_dir(self) -> Path:
        path = Path(self.experiment.output)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def check(self) -> None:
        """Validate the settings against the filesystem before any work.

        Raises:
            ConfigError: If train and test overlap or a referenced path is missing.
        """
        overlap = sorted(set(self.corpus.train) & set(self.corpus.test))
        if overlap:
            raise ConfigError(f"train and test narratives overlap: {', '.join(overlap)}")
        if not self.corpus.root:
            raise ConfigError("no corpus root configured (set corpus.root, --corpus or PICO_DISCOURSE_CORPUS)")
        if not Path(self.corpus.root).is_dir():
            raise ConfigError(f"corpus directory {self.corpus.root} does not exist")
        algorithm = self.experiment.algorithm
        if algorithm.startswith("tree:") and not Path(algorithm[5:]).is_file():
            raise ConfigError(f"tree file {algorithm[5:]} does not exist")

    def _load(self, ids: Optional[Sequence[str]]) -> list[Narrative]:
        narratives = load_corpus(Path(self.corpus.root), ids or None, self.corpus.mode)
        if not narratives:
            raise ConfigError(f"no narratives found in {self.corpus.root}")
        return narratives

    @cached_property
    def train_narratives(self) -> list[Narrative]:
        """The training ids, or every narrative when none are listed."""
        if not self.corpus.train:
            everything = self._load(None)
            return [n for n in everything if n.id not in set(self.corpus.test)]
        return self._load(self.corpus.train)

    @cached_property
    def test_narratives(self) -> list[Narrative]:
        return self._load(self.corpus.test) if self.corpus.test else []

    @property
    def all_narratives(self) -> list[Narrative]:
        return self.train_narratives + self.test_narratives

    def _coded(self, narratives: Sequence[Narrative]) -> list[SiteRecord]:
        return [
            record
            for narrative in narratives
            for record in code_narrative(narrative, self.lexicon, self.coder.threshold, self.coder.global_pro_mode)
        ]

    def _tree_segmenter(self, tree: DecisionTree, name: str) -> TreeSegmenter:
        return TreeSegmenter(
            tree,
            name=name,
            lexicon=self.lexicon,
            global_pro_mode=self.coder.global_pro_mode,
            threshold=self.coder.threshold,
        )

    def _write_report(self, stem: str, reports: Sequence[NamedReport], show_entries: bool = False) -> str:
        fmt = self.experiment.report_format
        text = render_reports(reports, fmt, self.digest, show_entries)
        suffix = ".json" if fmt == "json" else ".txt"
        (self.output_dir / f"{stem}{suffix}").write_text(text, encoding="utf-8")
        return text

    def _write_tree(self, tree: DecisionTree, stem: str) -> None:
        (self.output_dir / f"{stem}.tree").write_text(tree_to_text(tree), encoding="utf-8")
        (self.output_dir / f"{stem}.json").write_text(tree_to_json(tree), encoding="utf-8")

    # --- commands --------------------------------------------------------------

    def features(self) -> Path:
        """Write the feature table of every configured narrative."""
        self.check()
        records = self._coded(self.all_narratives)
        path = self.output_dir / FEATURES_FILE
        metadata = {
            "threshold": self.coder.threshold,
            "global_pro": self.coder.global_pro_mode,
            "lexicon": self.lexicon.source,
            "digest": self.digest,
        }
        with path.open("w", encoding="utf-8", newline="") as stream:
            rows = write_feature_table(records, stream, metadata)
        logger.info("Wrote %d site rows to %s", rows, path)
        return path

    def segment(self) -> str:
        """Segment the test narratives (or all of them) with the selected algorithm."""
        self.check()
        segmenter = resolve_segmenter(self.experiment.algorithm, self.lexicon, self.coder)
        narratives = self.test_narratives or self.train_narratives
        segmentations = [segmenter.segment(n) for n in narratives]
        path = self.output_dir / SEGMENTATION_FILE
        with path.open("w", encoding="utf-8") as stream:
            write_segmentations(
                segmentations, stream, header=f"algorithm={segmenter.name} global_pro={self.coder.global_pro_mode}"
            )
        pairs = [(s, gold_labels(n, self.coder.threshold)) for s, n in zip(segmentations, narratives)]
        report = score_segmentations(pairs, self.experiment.averaging)
        logger.info("Segmented %d narratives with %s", len(narratives), segmenter.name)
        return self._write_report("segment-report", [NamedReport(segmenter.name, report)], show_entries=True)

    def train(self, features_file: Optional[Path] = None) -> str:
        """Learn one tree from the training set and report it on train and test."""
        if features_file is not None:
            if not Path(features_file).is_file():
                raise ConfigError(f"feature table {features_file} does not exist")
            with Path(features_file).open(encoding="utf-8") as stream:
                training = TrainingSet.from_table(stream)
        else:
            self.check()
            training = TrainingSet.of(self._coded(self.train_narratives))
        tree = learn_tree(training, self.learner_config)
        self._write_tree(tree, TREE_FILE)
        logger.info("Learned a %d-node tree from %d sites", tree.node_count, len(training))
        if features_file is not None:
            return tree_to_text(tree)
        reports = self._learning_reports("Learning", tree)
        return self._write_report("train-report", reports)

    def _learning_reports(self, title: str, tree: DecisionTree) -> list[NamedReport]:
        segmenter = self._tree_segmenter(tree, title)
        splits = [("training", self.train_narratives)]
        if self.test_narratives:
            splits.append(("test", self.test_narratives))
        return [
            NamedReport(
                f"{title} ({split})",
                evaluate_segmenter(segmenter, narratives, self.coder.threshold, self.experiment.averaging),
            )
            for split, narratives in splits
        ]

    def xval(self) -> str:
        """Cross-validate the learner over the training narratives."""
        self.check()
        narratives = self.train_narratives
        if len(narratives) < 2:
            raise EvaluationError(f"cross-validation needs at least 2 narratives, got {len(narratives)}")
        result = self._cross_validate(narratives, self.learner_config)
        width = len(str(len(result.folds)))
        for fold in result.folds:
            self._write_tree(fold.tree, f"fold{fold.index:0{width}d}")
        return self._write_report("xval-report", [NamedReport("Learning (cross-validated)", result.report)], True)

    def _cross_validate(self, narratives: Sequence[Narrative], learner: LearnerConfig):
        return cross_validate(
            narratives,
            learner,
            self.experiment.folds or None,
            lexicon=self.lexicon,
            threshold=self.coder.threshold,
            global_pro_mode=self.coder.global_pro_mode,
            averaging=self.experiment.averaging,
        )

    def evaluate(self, segmentation_file: Optional[Path] = None) -> str:
        """Score a segmentation file, or run the full experiment suite without one."""
        self.check()
        if segmentation_file is not None:
            return self._evaluate_file(Path(segmentation_file))
        return self._write_report("experiment-report", self.experiment_reports())

    def _evaluate_file(self, path: Path) -> str:
        if not path.is_file():
            raise ConfigError(f"segmentation file {path} does not exist")
        by_id = {n.id: n for n in self.all_narratives}
        with path.open(encoding="utf-8") as stream:
            segmentations = read_segmentations(stream, {i: n.site_count for i, n in by_id.items()})
        if not segmentations:
            raise EvaluationError(f"segmentation file {path} lists no narratives")
        pairs = [(s, gold_labels(by_id[s.narrative_id], self.coder.threshold)) for s in segmentations]
        report = score_segmentations(pairs, self.experiment.averaging)
        return self._write_report("eval-report", [NamedReport(path.stem, report)], show_entries=True)

    def experiment_reports(self) -> list[NamedReport]:
        """Human, Condition 1/2 and learned-tree rows for training and test sets."""
        threshold, averaging = self.coder.threshold, self.experiment.averaging
        splits = [("training", self.train_narratives)]
        if self.test_narratives:
            splits.append(("test", self.test_narratives))

        reports = []
        for split, narratives in splits:
            if all(n.subjects.subject_marks is not None for n in narratives):
                reports.append(
                    NamedReport(f"Human performance ({split})", human_performance(narratives, threshold, averaging))
                )
            else:
                logger.warning("Skipping human performance on %s: per-subject marks are not annotated", split)
            for condition in (1, 2):
                segmenter = NpSegmenter(condition, self.lexicon)
                report = evaluate_segmenter(segmenter, narratives, threshold, averaging)
                reports.append(NamedReport(f"Condition {condition} ({split})", report))

        records = TrainingSet.of(self._coded(self.train_narratives))
        learners = [("Learning 1", self.learner_config)]
        if self.learner2.enabled:
            learners.append(("Learning 2", self.learner2.learner_config()))
        for title, config in learners:
            tree = learn_tree(records, config)
            reports.extend(self._learning_reports(title, tree))
        if len(self.train_narratives) >= 2:
            result = self._cross_validate(self.train_narratives, learners[0][1])
            reports.append(NamedReport("Learning 1 (cross-validated)", result.report))
        return reports
