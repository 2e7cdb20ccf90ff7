"""Scoring segmentations and running grouped cross-validation.

Scores follow the information-retrieval reading of segmentation: for each
narrative the algorithm's boundary decisions and the gold labels fill a
two-by-two table (``a`` hits, ``b`` false alarms, ``c`` misses, ``d``
correct rejections) from which recall, precision, fallout and error are
derived.  Per-narrative scores are averaged across narratives (macro) by
default; pooled (micro) averaging is available.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Optional, Sequence, Union

import numpy as np
from sklearn.model_selection import GroupKFold

from .coder import DEFAULT_THRESHOLD, CueLexicon, GlobalProMode, Label, code_narrative, label_sites
from .corpus import Narrative
from .exceptions import EvaluationError
from .induce import LearnerConfig, TrainingSet, learn_tree
from .segmenter import Segmentation, Segmenter, TreeSegmenter
from .tree import DecisionTree

logger = logging.getLogger(__name__)

Averaging = Literal["macro", "micro"]
ReportFormat = Literal["table", "json"]

METRIC_NAMES = ("recall", "precision", "fallout", "error", "summed_deviation")


@dataclass(frozen=True)
class ConfusionCounts:
    """Algorithm-by-subjects table over the scored sites.

    ``a``: both boundary. ``b``: algorithm boundary, gold non-boundary.
    ``c``: algorithm non-boundary, gold boundary. ``d``: both non-boundary.
    """

    a: int = 0
    b: int = 0
    c: int = 0
    d: int = 0

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise EvaluationError(f"confusion counts must be >= 0, got {self}")

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)


@dataclass(frozen=True)
class IrScores:
    recall: float
    precision: float
    fallout: float
    error: float

    @property
    def summed_deviation(self) -> float:
        return (1 - self.recall) + (1 - self.precision) + self.fallout + self.error

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _labels_of(labels: Union[Segmentation, Sequence[Label]]) -> Sequence[Label]:
    return labels.decisions if isinstance(labels, Segmentation) else labels


def confusion(predicted: Union[Segmentation, Sequence[Label]], gold: Sequence[Label]) -> ConfusionCounts:
    """Count agreement between predicted and gold labels site by site.

    Raises:
        EvaluationError: If the sequences differ in length.
    """
    predicted = _labels_of(predicted)
    if len(predicted) != len(gold):
        raise EvaluationError(f"{len(predicted)} predicted labels against {len(gold)} gold labels")
    a = b = c = d = 0
    for guess, truth in zip(predicted, gold):
        if guess == Label.BOUNDARY:
            if truth == Label.BOUNDARY:
                a += 1
            else:
                b += 1
        elif truth == Label.BOUNDARY:
            c += 1
        else:
            d += 1
    return ConfusionCounts(a, b, c, d)


def metrics(counts: ConfusionCounts) -> IrScores:
    """Recall, precision, fallout and error of a confusion table.

    Undefined ratios take their ideal value: recall and precision are 1
    when their denominator is 0, fallout is 0 when ``b + d`` is 0.

    Raises:
        EvaluationError: If the table is empty.
    """
    a, b, c, d = counts.a, counts.b, counts.c, counts.d
    if counts.total == 0:
        raise EvaluationError("metrics of an empty confusion table")
    return IrScores(
        recall=a / (a + c) if a + c else 1.0,
        precision=a / (a + b) if a + b else 1.0,
        fallout=b / (b + d) if b + d else 0.0,
        error=(b + c) / counts.total,
    )


@dataclass(frozen=True)
class ScoredEntry:
    label: str
    scores: IrScores
    counts: Optional[ConfusionCounts] = None


@dataclass(frozen=True)
class AggregateReport:
    """Per-entry scores plus their mean and sample standard deviation.

    In ``macro`` mode the mean is the unweighted average of the entries'
    metrics.  In ``micro`` mode it is the metrics of the pooled counts.
    """

    entries: tuple[ScoredEntry, ...]
    mean: dict[str, float]
    std_dev: dict[str, float]
    averaging: Averaging = "macro"

    @property
    def scores(self) -> list[IrScores]:
        return [entry.scores for entry in self.entries]

    @property
    def pooled(self) -> Optional[ConfusionCounts]:
        if any(entry.counts is None for entry in self.entries):
            return None
        return sum((entry.counts for entry in self.entries), ConfusionCounts())

    def as_dict(self) -> dict:
        return {
            "averaging": self.averaging,
            "mean": dict(self.mean),
            "std_dev": dict(self.std_dev),
            "entries": [
                {
                    "label": entry.label,
                    **entry.scores.as_dict(),
                    **({"counts": asdict(entry.counts)} if entry.counts is not None else {}),
                }
                for entry in self.entries
            ],
        }


def aggregate(
    scores: Sequence[IrScores],
    labels: Optional[Sequence[str]] = None,
    counts: Optional[Sequence[ConfusionCounts]] = None,
    averaging: Averaging = "macro",
) -> AggregateReport:
    """Average per-narrative scores.

    Raises:
        EvaluationError: On empty input, mismatched lengths, or ``micro``
            averaging without confusion counts.
    """
    if not scores:
        raise EvaluationError("cannot aggregate zero narratives")
    if averaging not in ("macro", "micro"):
        raise EvaluationError(f"unknown averaging {averaging!r}")
    labels = list(labels) if labels is not None else [f"#{i}" for i in range(1, len(scores) + 1)]
    if len(labels) != len(scores) or (counts is not None and len(counts) != len(scores)):
        raise EvaluationError("labels, scores and counts must have the same length")
    entries = tuple(
        ScoredEntry(label, score, counts[i] if counts is not None else None)
        for i, (label, score) in enumerate(zip(labels, scores))
    )

    table = np.array([[s.as_dict()[name] for name in METRIC_NAMES] for s in scores], dtype=float)
    std = table.std(axis=0, ddof=1) if len(scores) > 1 else np.zeros(len(METRIC_NAMES))
    if averaging == "micro":
        if counts is None:
            raise EvaluationError("micro averaging needs confusion counts")
        mean = metrics(sum(counts, ConfusionCounts())).as_dict()
    else:
        mean = dict(zip(METRIC_NAMES, (float(v) for v in table.mean(axis=0))))
    return AggregateReport(entries, mean, dict(zip(METRIC_NAMES, (float(v) for v in std))), averaging)


def gold_labels(narrative: Narrative, threshold: int = DEFAULT_THRESHOLD) -> list[Label]:
    return label_sites(narrative.subjects, threshold)


def score_segmentations(
    pairs: Iterable[tuple[Segmentation, Sequence[Label]]],
    averaging: Averaging = "macro",
) -> AggregateReport:
    labels, scores, counts = [], [], []
    for predicted, gold in pairs:
        table = confusion(predicted, gold)
        labels.append(predicted.narrative_id)
        scores.append(metrics(table))
        counts.append(table)
    return aggregate(scores, labels, counts, averaging)


def evaluate_segmenter(
    segmenter: Segmenter,
    narratives: Sequence[Narrative],
    threshold: int = DEFAULT_THRESHOLD,
    averaging: Averaging = "macro",
) -> AggregateReport:
    """Segment every narrative and score it against its T-majority labels."""
    pairs = [(segmenter.segment(n), gold_labels(n, threshold)) for n in narratives]
    report = score_segmentations(pairs, averaging)
    logger.info(
        "%s on %d narratives: summed deviation %.3f", segmenter.name, len(pairs), report.mean["summed_deviation"]
    )
    return report


def human_performance(
    narratives: Union[Narrative, Sequence[Narrative]],
    threshold: int = DEFAULT_THRESHOLD,
    averaging: Averaging = "macro",
) -> AggregateReport:
    """Score each subject's own boundaries against the T-majority labels.

    Entries are labeled ``<narrative>:<subject>`` and averaged over all
    subjects of all narratives.

    Raises:
        EvaluationError: If a narrative lacks per-subject boundary sets.
    """
    if isinstance(narratives, Narrative):
        narratives = [narratives]
    labels, scores, counts = [], [], []
    for narrative in narratives:
        marks = narrative.subjects.subject_marks
        if marks is None:
            raise EvaluationError(f"{narrative.id}: per-subject boundary sets are not annotated")
        gold = gold_labels(narrative, threshold)
        for subject, sites in marks:
            predicted = Segmentation.from_boundaries(narrative.id, narrative.site_count, sites)
            table = confusion(predicted, gold)
            labels.append(f"{narrative.id}:{subject}")
            scores.append(metrics(table))
            counts.append(table)
    return aggregate(scores, labels, counts, averaging)


# --- cross-validation -----------------------------------------------------------


@dataclass(frozen=True)
class Fold:
    index: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    tree: DecisionTree


@dataclass(frozen=True)
class CrossValidationResult:
    report: AggregateReport
    folds: tuple[Fold, ...] = field(default=())


def narrative_folds(narratives: Sequence[Narrative], k: Optional[int] = None) -> list[tuple[list[int], list[int]]]:
    """Group sites by narrative and split the narratives into ``k`` folds.

    Returns:
        ``(train, test)`` lists of narrative positions, one pair per fold.

    Raises:
        EvaluationError: If ``k`` is below 2 or above the narrative count,
            or a narrative has no sites.
    """
    n = len(narratives)
    k = n if k is None or k == 0 else k
    if k < 2:
        raise EvaluationError(f"cross-validation needs k >= 2 folds, got {k}")
    if k > n:
        raise EvaluationError(f"cannot build {k} folds from {n} narratives")
    empty = [narrative.id for narrative in narratives if narrative.site_count == 0]
    if empty:
        raise EvaluationError(f"narratives with no sites: {', '.join(empty)}")

    groups = np.concatenate([np.full(narrative.site_count, i) for i, narrative in enumerate(narratives)])
    folds = []
    for train_sites, test_sites in GroupKFold(n_splits=k).split(np.zeros((len(groups), 1)), groups=groups):
        train = sorted({int(g) for g in groups[train_sites]})
        test = sorted({int(g) for g in groups[test_sites]})
        if set(train) & set(test):
            raise EvaluationError(f"fold shares narratives between train and test: {sorted(set(train) & set(test))}")
        folds.append((train, test))
    return folds


def cross_validate(
    narratives: Sequence[Narrative],
    learner: Optional[LearnerConfig] = None,
    k: Optional[int] = None,
    *,
    lexicon: Optional[CueLexicon] = None,
    threshold: int = DEFAULT_THRESHOLD,
    global_pro_mode: GlobalProMode = "static",
    averaging: Averaging = "macro",
) -> CrossValidationResult:
    """Grouped k-fold cross-validation of the tree learner.

    Each fold learns a fresh tree from the sites of its training narratives
    and scores it on each held-out narrative.  ``k`` defaults to the number
    of narratives (leave one narrative out).
    """
    learner = learner or LearnerConfig()
    lexicon = lexicon or CueLexicon.default()
    coded = {n.id: code_narrative(n, lexicon, threshold, global_pro_mode) for n in narratives}

    labels, scores, counts, folds = [], [], [], []
    for index, (train, test) in enumerate(narrative_folds(narratives, k), start=1):
        train_ids = tuple(narratives[i].id for i in train)
        test_ids = tuple(narratives[i].id for i in test)
        records = [record for nid in train_ids for record in coded[nid]]
        tree = learn_tree(TrainingSet.of(records), learner)
        logger.debug("fold %d: trained on %s, testing %s (%d nodes)", index, train_ids, test_ids, tree.node_count)
        segmenter = TreeSegmenter(
            tree, name=f"fold{index}", lexicon=lexicon, global_pro_mode=global_pro_mode, threshold=threshold
        )
        for i in test:
            narrative = narratives[i]
            table = confusion(segmenter.segment(narrative), gold_labels(narrative, threshold))
            labels.append(narrative.id)
            scores.append(metrics(table))
            counts.append(table)
        folds.append(Fold(index, train_ids, test_ids, tree))
    report = aggregate(scores, labels, counts, averaging)
    logger.info("cross-validated %d folds: summed deviation %.3f", len(folds), report.mean["summed_deviation"])
    return CrossValidationResult(report, tuple(folds))


# --- rendering ------------------------------------------------------------------

_COLUMNS = (
    ("Recall", "recall"),
    ("Prec", "precision"),
    ("Fall", "fallout"),
    ("Error", "error"),
    ("SumDev", "summed_deviation"),
)


@dataclass(frozen=True)
class NamedReport:
    title: str
    report: AggregateReport


def _row(name: str, values: dict[str, float], width: int) -> str:
    cells = "".join(f"{values[key]:>8.2f}" for _, key in _COLUMNS)
    return f"{name:<{width}}{cells}"


def format_table(reports: Sequence[NamedReport], digest: Optional[str] = None, show_entries: bool = False) -> str:
    """Text tables with Average and Std. Dev. rows under each title."""
    lines = []
    if digest:
        lines.append(f"# config-digest: {digest}")
    for named in reports:
        labels = [entry.label for entry in named.report.entries] if show_entries else []
        width = max([len("Std. Dev."), *(len(label) for label in labels)]) + 2
        if lines:
            lines.append("")
        lines.append(f"{named.title} ({named.report.averaging})")
        lines.append(" " * width + "".join(f"{header:>8}" for header, _ in _COLUMNS))
        for entry in named.report.entries if show_entries else ():
            lines.append(_row(entry.label, entry.scores.as_dict(), width))
        lines.append(_row("Average", named.report.mean, width))
        lines.append(_row("Std. Dev.", named.report.std_dev, width))
    return "\n".join(lines) + "\n"


def format_json(reports: Sequence[NamedReport], digest: Optional[str] = None) -> str:
    payload = {
        "config_digest": digest,
        "reports": [{"title": named.title, **named.report.as_dict()} for named in reports],
    }
    return json.dumps(payload, indent=2) + "\n"


def render_reports(
    reports: Sequence[NamedReport],
    report_format: ReportFormat = "table",
    digest: Optional[str] = None,
    show_entries: bool = False,
) -> str:
    if report_format == "json":
        return format_json(reports, digest)
    if report_format == "table":
        return format_table(reports, digest, show_entries)
    raise EvaluationError(f"unknown report format {report_format!r}")
