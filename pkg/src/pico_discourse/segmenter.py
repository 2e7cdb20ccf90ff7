"""Boundary assignment: the NP rule algorithms and decision-tree segmenters.

Two families of segmenters share the :class:`Segmenter` protocol:

- The NP algorithms walk a narrative left to right.  Condition 1 places a
  boundary where ``-coref``, ``-infer`` and ``-global.pro`` co-occur;
  Condition 2 additionally places one wherever cue-prosody is ``complex``.
  ``global.pro`` is recomputed against the algorithm's own last boundary.
- Tree segmenters classify each site's feature vector, either from the
  flat coded records or (dynamic ``global.pro``) sequentially.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Protocol, Sequence, TextIO, runtime_checkable

from .coder import (
    COMPLEX,
    DEFAULT_THRESHOLD,
    FALSE,
    MINUS_COREF,
    MINUS_GP,
    MINUS_INFER,
    NA,
    NOT_SFC,
    PLUS_COREF,
    PLUS_GP,
    PLUS_INFER,
    SFC,
    TRUE,
    CueLexicon,
    GlobalProMode,
    Label,
    SiteRecord,
    assemble,
    code_local_features,
    code_narrative,
    np_conjunction,
    walk_np_sites,
)
from .corpus import Narrative
from .exceptions import ConfigError, SchemaError
from .tree import Branch, CategoricalSplit, DecisionTree, Leaf, Node, ThresholdSplit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segmentation:
    """A boundary decision for every site of one narrative."""

    narrative_id: str
    decisions: tuple[Label, ...]

    @property
    def boundaries(self) -> list[int]:
        return [site for site, label in enumerate(self.decisions, start=1) if label == Label.BOUNDARY]

    @classmethod
    def from_boundaries(cls, narrative_id: str, site_count: int, boundaries) -> "Segmentation":
        marked = set(boundaries)
        if any(not 1 <= s <= site_count for s in marked):
            raise SchemaError(f"{narrative_id}: boundary sites {sorted(marked)} outside 1..{site_count}")
        return cls(
            narrative_id,
            tuple(Label.BOUNDARY if s in marked else Label.NON_BOUNDARY for s in range(1, site_count + 1)),
        )

    @classmethod
    def from_flags(cls, narrative_id: str, flags: Sequence[bool]) -> "Segmentation":
        return cls(narrative_id, tuple(Label.BOUNDARY if f else Label.NON_BOUNDARY for f in flags))


@runtime_checkable
class Segmenter(Protocol):
    """Protocol for anything that segments a narrative.

    Attributes:
        name: Short identifier used in reports (e.g. ``"np2"``).
    """

    @property
    def name(self) -> str:
        return self.__class__.__name__

    def segment(self, narrative: Narrative) -> Segmentation:
        """Assign boundary or non-boundary to every site of ``narrative``."""
        ...


def np_condition1(narrative: Narrative) -> Segmentation:
    trace = walk_np_sites(narrative, lambda _site, np: np_conjunction(np))
    return Segmentation.from_flags(narrative.id, [boundary for _, boundary in trace])


def np_condition2(narrative: Narrative, lexicon: Optional[CueLexicon] = None) -> Segmentation:
    """Condition 1 plus a boundary wherever cue-prosody is ``complex``.

    The last-boundary state behind ``global.pro`` advances on every assigned
    boundary, whichever rule assigned it.
    """
    local = code_local_features(narrative, lexicon or CueLexicon.default())

    def decide(site: int, np) -> bool:
        return np_conjunction(np) or local[site - 1][2] == COMPLEX

    trace = walk_np_sites(narrative, decide)
    return Segmentation.from_flags(narrative.id, [boundary for _, boundary in trace])


# --- built-in learned tree ------------------------------------------------------

WORD1_NON_BOUNDARY = (
    "also", "basically", "because", "finally", "first", "like", "meanwhile",
    "no", "oh", "okay", "only", "see", "so", "well", "where", NA,
)  # fmt: skip
WORD1_BOUNDARY = ("anyway", "but", "now", "or", "then")

_B = Leaf(Label.BOUNDARY)
_N = Leaf(Label.NON_BOUNDARY)


def _split(name: str, *arms: tuple, default: Optional[Node] = None) -> CategoricalSplit:
    branches = []
    for values, child in arms:
        values = frozenset([values]) if isinstance(values, str) else frozenset(values)
        branches.append(Branch(values, child))
    return CategoricalSplit(name, tuple(branches), default)


def _duration(threshold: float, le: Node, gt: Node) -> ThresholdSplit:
    return ThresholdSplit("duration", threshold, le, gt)


def builtin_tree(expand_word1: bool = False) -> DecisionTree:
    """The published learned segmentation tree.

    The ``word1`` test is encoded as two merged value sets plus a dedicated
    ``and`` branch.  ``expand_word1=True`` gives one branch per cue word
    instead; both forms classify every vector identically.  Cue words the
    tree never saw (from a custom lexicon) take the ``non_boundary`` default.
    """
    after_and = _duration(0.6, _N, _B)
    if expand_word1:
        word1_arms = [(w, _N) for w in WORD1_NON_BOUNDARY] + [(w, _B) for w in WORD1_BOUNDARY] + [("and", after_and)]
    else:
        word1_arms = [(WORD1_NON_BOUNDARY, _N), (WORD1_BOUNDARY, _B), ("and", after_and)]
    coref_plus = _split(
        "after",
        (SFC, _duration(1.3, _N, _B)),
        (NOT_SFC, _split("word1", *word1_arms, default=_N)),
    )
    cue1_true = _split(
        "global.pro",
        (NA, _B),
        (MINUS_GP, _B),
        (PLUS_GP, _duration(0.65, _N, _B)),
    )
    coref_minus = _split(
        "infer",
        (PLUS_INFER, _N),
        (NA, _B),
        (
            MINUS_INFER,
            _split(
                "after",
                (NOT_SFC, _B),
                (SFC, _split("cue1", (TRUE, cue1_true), (FALSE, _duration(0.5, _duration(0.35, _N, _B), _N)))),
            ),
        ),
    )
    root = _split(
        "before",
        (NOT_SFC, _N),
        (SFC, _split("coref", (NA, _N), (PLUS_COREF, coref_plus), (MINUS_COREF, coref_minus))),
    )
    return DecisionTree(root)


# --- applying trees ------------------------------------------------------------


def apply_tree(tree: DecisionTree, records: Sequence[SiteRecord]) -> Segmentation:
    """Classify the coded sites of one narrative.

    Raises:
        SchemaError: If the records are empty, mix narratives, are out of
            site order, or carry a value the tree cannot route.
    """
    if not records:
        raise SchemaError("no site records to classify")
    narrative_id = records[0].narrative_id
    decisions = []
    for expected, record in enumerate(records, start=1):
        if record.narrative_id != narrative_id or record.site_index != expected:
            raise SchemaError(
                f"records must be the sites of one narrative in order; got {record.narrative_id} "
                f"site {record.site_index} at position {expected}"
            )
        decisions.append(tree.classify(record.features, where=f"{narrative_id} site {record.site_index}"))
    return Segmentation(narrative_id, tuple(decisions))


def apply_tree_sequential(
    tree: DecisionTree, narrative: Narrative, lexicon: Optional[CueLexicon] = None
) -> Segmentation:
    """Classify sites left to right, recomputing ``global.pro`` from the tree's own boundaries."""
    local = code_local_features(narrative, lexicon or CueLexicon.default())

    def decide(site: int, np) -> bool:
        vector = assemble(*local[site - 1], np)
        return tree.classify(vector, where=f"{narrative.id} site {site}") == Label.BOUNDARY

    trace = walk_np_sites(narrative, decide)
    return Segmentation.from_flags(narrative.id, [boundary for _, boundary in trace])


# --- segmenter objects ------------------------------------------------------------


class NpSegmenter(Segmenter):
    def __init__(self, condition: int, lexicon: Optional[CueLexicon] = None):
        if condition not in (1, 2):
            raise ConfigError(f"NP algorithm condition must be 1 or 2, got {condition}")
        self.condition = condition
        self.lexicon = lexicon or CueLexicon.default()

    @property
    def name(self) -> str:
        return f"np{self.condition}"

    def segment(self, narrative: Narrative) -> Segmentation:
        if self.condition == 1:
            return np_condition1(narrative)
        return np_condition2(narrative, self.lexicon)


class TreeSegmenter(Segmenter):
    """Segments with a decision tree.

    In ``static`` mode the tree reads the flat coded records; in
    ``dynamic`` mode it is applied sequentially so ``global.pro`` follows
    the tree's own boundaries.
    """

    def __init__(
        self,
        tree: DecisionTree,
        name: str = "tree",
        lexicon: Optional[CueLexicon] = None,
        global_pro_mode: GlobalProMode = "static",
        threshold: int = DEFAULT_THRESHOLD,
    ):
        if global_pro_mode not in ("static", "dynamic"):
            raise ConfigError(f"unknown global_pro_mode {global_pro_mode!r}")
        self.tree = tree
        self._name = name
        self.lexicon = lexicon or CueLexicon.default()
        self.global_pro_mode = global_pro_mode
        self.threshold = threshold

    @property
    def name(self) -> str:
        return self._name

    def segment(self, narrative: Narrative) -> Segmentation:
        if self.global_pro_mode == "dynamic":
            return apply_tree_sequential(self.tree, narrative, self.lexicon)
        records = code_narrative(narrative, self.lexicon, self.threshold, "static")
        return apply_tree(self.tree, records)


# --- segmentation files ---------------------------------------------------------


def write_segmentations(segmentations: Sequence[Segmentation], stream: TextIO, header: Optional[str] = None) -> None:
    """One ``<narrative_id><TAB><site> <site> ...`` line per narrative."""
    if header:
        stream.write(f"# {header}\n")
    for segmentation in segmentations:
        stream.write(f"{segmentation.narrative_id}\t{' '.join(str(s) for s in segmentation.boundaries)}\n")


def read_segmentations(stream: Iterable[str], site_counts: Mapping[str, int]) -> list[Segmentation]:
    """Read a segmentation file, checking ids and sites against ``site_counts``.

    Raises:
        SchemaError: On unknown or repeated narrative ids and malformed or
            out-of-range site indices.
    """
    segmentations = []
    seen = set()
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].rstrip("\n")
        if not line.strip():
            continue
        narrative_id, _, rest = line.partition("\t")
        narrative_id = narrative_id.strip()
        if narrative_id not in site_counts:
            raise SchemaError(f"segmentation line {lineno}: unknown narrative {narrative_id!r}")
        if narrative_id in seen:
            raise SchemaError(f"segmentation line {lineno}: narrative {narrative_id!r} listed twice")
        seen.add(narrative_id)
        try:
            sites = [int(token) for token in rest.split()]
        except ValueError:
            raise SchemaError(f"segmentation line {lineno}: site indices must be integers") from None
        segmentations.append(Segmentation.from_boundaries(narrative_id, site_counts[narrative_id], sites))
    return segmentations
