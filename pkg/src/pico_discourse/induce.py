"""Decision-tree induction over coded site records.

The learner follows the familiar divide-and-conquer recipe: at every node
each feature proposes one candidate test, candidates are scored by gain
ratio (optionally restricted to those with at least average gain), the
winner splits the records, and growth stops at pure or unsplittable nodes.
A grown tree is then simplified with pessimistic error-based pruning.

Ties are resolved deterministically: by feature order in the schema, then
by the lower threshold.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Optional, Sequence, TextIO

import numpy as np
from scipy.stats import norm

from .coder import FEATURES, Feature, Label, SiteRecord, read_feature_table
from .exceptions import InductionError
from .tree import Branch, CategoricalSplit, DecisionTree, Leaf, Node, ThresholdSplit

logger = logging.getLogger(__name__)

CategoricalGrouping = Literal["per_value", "subset_search"]
GainRestriction = Literal["gain_ratio_over_average_gain", "pure_gain_ratio"]

EPSILON = 1e-12
_PRUNE_SLACK = 0.1


@dataclass(frozen=True)
class LearnerConfig:
    """Learner options.  The defaults are the standard C4.5 defaults.

    Raises:
        InductionError: If an option is outside its allowed range.
    """

    min_instances: int = 2
    confidence_factor: float = 0.25
    categorical_grouping: CategoricalGrouping = "per_value"
    gain_restriction: GainRestriction = "gain_ratio_over_average_gain"
    prune: bool = True

    def __post_init__(self):
        if self.min_instances < 1:
            raise InductionError(f"min_instances must be >= 1, got {self.min_instances}")
        if not 0 < self.confidence_factor <= 1:
            raise InductionError(f"confidence_factor must be in (0, 1], got {self.confidence_factor}")
        if self.categorical_grouping not in ("per_value", "subset_search"):
            raise InductionError(f"unknown categorical_grouping {self.categorical_grouping!r}")
        if self.gain_restriction not in ("gain_ratio_over_average_gain", "pure_gain_ratio"):
            raise InductionError(f"unknown gain_restriction {self.gain_restriction!r}")


@dataclass(frozen=True)
class TrainingSet:
    records: tuple[SiteRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise InductionError("training set is empty")
        for record in self.records:
            if record.label not in (Label.BOUNDARY, Label.NON_BOUNDARY):
                raise InductionError(f"{record.narrative_id} site {record.site_index} has no label")

    @classmethod
    def of(cls, records: Iterable[SiteRecord]) -> "TrainingSet":
        return cls(tuple(records))

    @classmethod
    def from_table(cls, stream: TextIO) -> "TrainingSet":
        records, _ = read_feature_table(stream)
        return cls.of(records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def narrative_ids(self) -> list[str]:
        return sorted({r.narrative_id for r in self.records})


def entropy(boundary: int, non_boundary: int) -> float:
    """Class entropy in bits of a two-class distribution.

    Raises:
        InductionError: If a count is negative or both are zero.
    """
    if boundary < 0 or non_boundary < 0:
        raise InductionError(f"class counts must be >= 0, got ({boundary}, {non_boundary})")
    counts = np.array([boundary, non_boundary], dtype=float)
    total = counts.sum()
    if total == 0:
        raise InductionError("entropy of an empty class distribution")
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum()) + 0.0


def _class_counts(records: Sequence[SiteRecord]) -> tuple[int, int]:
    boundary = sum(1 for r in records if r.label == Label.BOUNDARY)
    return boundary, len(records) - boundary


def majority(records: Sequence[SiteRecord]) -> Label:
    """Majority label; ties (and empty input) go to ``non_boundary``."""
    boundary, non_boundary = _class_counts(records)
    return Label.BOUNDARY if boundary > non_boundary else Label.NON_BOUNDARY


# --- split evaluation ---------------------------------------------------------


@dataclass(frozen=True)
class CandidateSplit:
    """A proposed test: value groups for a categorical feature, or a threshold."""

    feature: str
    groups: tuple[frozenset[str], ...] = ()
    threshold: Optional[float] = None

    @property
    def is_threshold(self) -> bool:
        return self.threshold is not None


@dataclass(frozen=True)
class SplitEvaluation:
    gain: float
    gain_ratio: float
    accepted: bool
    branch_sizes: tuple[int, ...]


def partition(records: Sequence[SiteRecord], candidate: CandidateSplit) -> list[list[SiteRecord]]:
    """Route records into the candidate's branches (``le``/``gt`` for thresholds).

    Raises:
        InductionError: If a record's value belongs to no group.
    """
    if candidate.is_threshold:
        le = [r for r in records if r.features.value(candidate.feature) <= candidate.threshold]
        gt = [r for r in records if r.features.value(candidate.feature) > candidate.threshold]
        return [le, gt]
    parts: list[list[SiteRecord]] = [[] for _ in candidate.groups]
    for record in records:
        value = record.features.value(candidate.feature)
        for i, group in enumerate(candidate.groups):
            if value in group:
                parts[i].append(record)
                break
        else:
            raise InductionError(f"{candidate.feature}={value!r} is not covered by the candidate's value groups")
    return parts


def evaluate_split(records: Sequence[SiteRecord], candidate: CandidateSplit) -> SplitEvaluation:
    """Information gain and gain ratio of ``candidate`` over ``records``.

    A split whose split information is zero (everything in one branch) is
    returned with ``accepted=False``.
    """
    parts = partition(records, candidate)
    sizes = np.array([len(p) for p in parts], dtype=float)
    total = sizes.sum()
    if total == 0:
        raise InductionError("cannot evaluate a split over no records")
    parent = entropy(*_class_counts(records))
    weighted = sum(len(p) / total * entropy(*_class_counts(p)) for p in parts if p)
    gain = parent - weighted
    shares = sizes[sizes > 0] / total
    split_info = float(-(shares * np.log2(shares)).sum())
    branch_sizes = tuple(int(s) for s in sizes)
    if split_info <= EPSILON:
        return SplitEvaluation(gain, 0.0, False, branch_sizes)
    return SplitEvaluation(gain, gain / split_info, True, branch_sizes)


def _min_instances_ok(evaluation: SplitEvaluation, min_instances: int) -> bool:
    return sum(1 for size in evaluation.branch_sizes if size >= min_instances) >= 2


def threshold_candidates(records: Sequence[SiteRecord], name: str) -> list[float]:
    """Observed values that can serve as ``<=`` thresholds, in ascending order."""
    distinct = sorted({float(r.features.value(name)) for r in records})
    return distinct[:-1]


def _best_threshold(
    records: Sequence[SiteRecord], spec: Feature, config: LearnerConfig
) -> Optional[tuple[CandidateSplit, SplitEvaluation]]:
    best = None
    for threshold in threshold_candidates(records, spec.name):
        candidate = CandidateSplit(spec.name, threshold=threshold)
        evaluation = evaluate_split(records, candidate)
        if not evaluation.accepted or not _min_instances_ok(evaluation, config.min_instances):
            continue
        if best is None or evaluation.gain > best[1].gain + EPSILON:
            best = (candidate, evaluation)
    return best


def _merged(groups: tuple[frozenset, ...], i: int, j: int) -> tuple[frozenset, ...]:
    rest = [g for k, g in enumerate(groups) if k not in (i, j)]
    return tuple(sorted([groups[i] | groups[j], *rest], key=sorted))


def _best_grouping(
    records: Sequence[SiteRecord], spec: Feature, config: LearnerConfig
) -> Optional[tuple[CandidateSplit, SplitEvaluation]]:
    values = sorted({str(r.features.value(spec.name)) for r in records})
    candidate = CandidateSplit(spec.name, tuple(frozenset([v]) for v in values))
    evaluation = evaluate_split(records, candidate)
    if config.categorical_grouping == "subset_search":
        # Greedily merge the pair of groups that most improves the gain ratio.
        while len(candidate.groups) > 2:
            improved = None
            for i in range(len(candidate.groups)):
                for j in range(i + 1, len(candidate.groups)):
                    trial = CandidateSplit(spec.name, _merged(candidate.groups, i, j))
                    trial_eval = evaluate_split(records, trial)
                    if not trial_eval.accepted or not _min_instances_ok(trial_eval, config.min_instances):
                        continue
                    best_ratio = improved[1].gain_ratio if improved else evaluation.gain_ratio
                    if trial_eval.gain_ratio > best_ratio + EPSILON:
                        improved = (trial, trial_eval)
            if improved is None:
                break
            candidate, evaluation = improved
    if not evaluation.accepted or not _min_instances_ok(evaluation, config.min_instances):
        return None
    return candidate, evaluation


def candidate_splits(
    records: Sequence[SiteRecord], config: LearnerConfig
) -> list[tuple[CandidateSplit, SplitEvaluation]]:
    """One admissible candidate per feature, in schema order."""
    found = []
    for spec in FEATURES:
        best = _best_threshold(records, spec, config) if spec.continuous else _best_grouping(records, spec, config)
        if best is not None:
            found.append(best)
    return found


def choose_split(
    records: Sequence[SiteRecord], config: LearnerConfig
) -> Optional[tuple[CandidateSplit, SplitEvaluation]]:
    """Pick the test to install at a node, or ``None`` when the node stays a leaf."""
    positive = [(c, e) for c, e in candidate_splits(records, config) if e.gain > EPSILON]
    if not positive:
        return None
    if config.gain_restriction == "gain_ratio_over_average_gain":
        average = sum(e.gain for _, e in positive) / len(positive)
        positive = [(c, e) for c, e in positive if e.gain >= average - EPSILON]
    best = positive[0]
    for candidate, evaluation in positive[1:]:
        if evaluation.gain_ratio > best[1].gain_ratio + EPSILON:
            best = (candidate, evaluation)
    return best


# --- growing ------------------------------------------------------------------


def _grow(records: list[SiteRecord], config: LearnerConfig, depth: int) -> Node:
    label = majority(records)
    boundary, non_boundary = _class_counts(records)
    if boundary == 0 or non_boundary == 0:
        return Leaf(label)
    chosen = choose_split(records, config)
    if chosen is None:
        return Leaf(label)
    candidate, evaluation = chosen
    logger.debug(
        "depth %d: split %d records on %s (gain %.4f, ratio %.4f, branches %s)",
        depth,
        len(records),
        candidate.feature,
        evaluation.gain,
        evaluation.gain_ratio,
        evaluation.branch_sizes,
    )
    parts = partition(records, candidate)
    if candidate.is_threshold:
        le, gt = (_grow(p, config, depth + 1) for p in parts)
        return ThresholdSplit(candidate.feature, candidate.threshold, le, gt)
    branches = tuple(
        Branch(group, _grow(part, config, depth + 1)) for group, part in zip(candidate.groups, parts)
    )
    return CategoricalSplit(candidate.feature, branches, default=Leaf(label))


def grow_tree(training: TrainingSet, config: Optional[LearnerConfig] = None) -> DecisionTree:
    """Grow an unpruned tree.

    Every categorical node gets a default child (the node's majority class)
    so values never seen during training still classify.
    """
    config = config or LearnerConfig()
    return DecisionTree(_grow(list(training.records), config, 0))


# --- pruning ------------------------------------------------------------------


def add_errors(n: float, e: float, cf: float) -> float:
    """Extra errors to add to ``e`` observed errors among ``n`` for a pessimistic estimate.

    This is the upper confidence limit of the binomial error rate at
    confidence ``cf``, in the piecewise form used by C4.5.  With ``cf >= 1``
    no errors are added.
    """
    if cf >= 1 or n <= 0:
        return 0.0
    if e < 1e-6:
        return n * (1 - math.exp(math.log(cf) / n))
    if e < 0.9999:
        base = n * (1 - math.exp(math.log(cf) / n))
        return base + e * (add_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return 0.67 * (n - e)
    coeff = float(norm.isf(cf)) ** 2
    p = (e + 0.5 + coeff / 2 + math.sqrt(coeff * ((e + 0.5) * (1 - (e + 0.5) / n) + coeff / 4))) / (n + coeff)
    return n * p - e


def _routes(node: Node, records: Sequence[SiteRecord]) -> tuple[list[tuple[Node, list[SiteRecord]]], int]:
    """Split records among a node's children; also returns the count nothing accepts."""
    if isinstance(node, ThresholdSplit):
        le = [r for r in records if r.features.value(node.feature) <= node.threshold]
        gt = [r for r in records if r.features.value(node.feature) > node.threshold]
        return [(node.le, le), (node.gt, gt)], 0
    routed: list[tuple[Node, list[SiteRecord]]] = [(b.child, []) for b in node.branches]
    default: list[SiteRecord] = []
    lost = 0
    for record in records:
        value = record.features.value(node.feature)
        for i, branch in enumerate(node.branches):
            if value in branch.values:
                routed[i][1].append(record)
                break
        else:
            if node.default is not None:
                default.append(record)
            else:
                lost += 1
    if node.default is not None:
        routed.append((node.default, default))
    return routed, lost


def _leaf_errors(label: Label, records: Sequence[SiteRecord]) -> int:
    return sum(1 for r in records if r.label != label)


def _estimate(node: Node, records: Sequence[SiteRecord], cf: float) -> float:
    """Pessimistic error estimate of a fixed subtree over ``records``."""
    if isinstance(node, Leaf):
        errors = _leaf_errors(node.label, records)
        return errors + add_errors(len(records), errors, cf)
    routed, lost = _routes(node, records)
    return lost + sum(_estimate(child, part, cf) for child, part in routed)


def _rebuild(node: Node, children: list[Node]) -> Node:
    if isinstance(node, ThresholdSplit):
        return ThresholdSplit(node.feature, node.threshold, children[0], children[1])
    branches = tuple(Branch(b.values, c) for b, c in zip(node.branches, children))
    default = children[len(node.branches)] if node.default is not None else None
    return CategoricalSplit(node.feature, branches, default)


def _prune(node: Node, records: list[SiteRecord], cf: float) -> tuple[Node, float]:
    if isinstance(node, Leaf):
        return node, _estimate(node, records, cf)

    routed, lost = _routes(node, records)
    pruned = [_prune(child, part, cf) for child, part in routed]
    subtree = _rebuild(node, [child for child, _ in pruned])
    subtree_estimate = lost + sum(estimate for _, estimate in pruned)

    label = majority(records)
    leaf_errors = _leaf_errors(label, records)
    leaf_estimate = leaf_errors + add_errors(len(records), leaf_errors, cf)

    largest = max(range(len(routed)), key=lambda i: (len(routed[i][1]), -i))
    largest_child = pruned[largest][0]
    branch_estimate = _estimate(largest_child, records, cf)

    if leaf_estimate <= branch_estimate + _PRUNE_SLACK and leaf_estimate <= subtree_estimate + _PRUNE_SLACK:
        logger.debug("pruned %s subtree over %d records to a %s leaf", node.feature, len(records), label)
        return Leaf(label), leaf_estimate
    if branch_estimate <= subtree_estimate + _PRUNE_SLACK and not isinstance(largest_child, Leaf):
        logger.debug("replaced %s subtree over %d records by its largest branch", node.feature, len(records))
        return _prune(largest_child, records, cf)
    return subtree, subtree_estimate


def prune_tree(tree: DecisionTree, training: TrainingSet, config: Optional[LearnerConfig] = None) -> DecisionTree:
    """Bottom-up pessimistic pruning against the records the tree was grown from.

    A subtree is replaced by a majority leaf, or by its most-used branch,
    when that does not raise the pessimistic error estimate.
    """
    config = config or LearnerConfig()
    root, _ = _prune(tree.root, list(training.records), config.confidence_factor)
    return DecisionTree(root)


def learn_tree(training: TrainingSet, config: Optional[LearnerConfig] = None) -> DecisionTree:
    """Grow a tree and, unless ``config.prune`` is off, prune it."""
    config = config or LearnerConfig()
    tree = grow_tree(training, config)
    grown_nodes = tree.node_count
    if config.prune:
        tree = prune_tree(tree, training, config)
    logger.debug(
        "learned tree over %d records: %d nodes (%d before pruning)", len(training), tree.node_count, grown_nodes
    )
    return tree


def training_errors(tree: DecisionTree, records: Iterable[SiteRecord]) -> int:
    return sum(1 for r in records if tree.classify(r.features) != r.label)
