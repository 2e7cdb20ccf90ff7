"""pico-discourse: discourse segmentation of spoken narratives.

Codes transcripts into per-site linguistic feature vectors, segments them
with the NP rule algorithms or decision trees, learns new trees from coded
corpora, and scores everything with information-retrieval metrics and
narrative-grouped cross-validation.

Public API:
    Corpus: Narrative, ProsodicPhrase, parse_transcript, parse_annotations, load_corpus
    Coding: CueLexicon, FeatureVector, SiteRecord, Label, code_narrative
    Segmenting: DecisionTree, Segmentation, Segmenter, NpSegmenter, TreeSegmenter, builtin_tree
    Learning: LearnerConfig, TrainingSet, learn_tree
    Evaluation: confusion, metrics, aggregate, human_performance, cross_validate
    Exceptions: PicoDiscourseError and its subclasses
"""

from .coder import CueLexicon, FeatureVector, Label, SiteRecord, code_narrative
from .corpus import Narrative, ProsodicPhrase, load_corpus, parse_annotations, parse_transcript
from .evaluation import aggregate, confusion, cross_validate, human_performance, metrics
from .exceptions import (
    AnnotationError,
    ConfigError,
    EvaluationError,
    InductionError,
    PicoDiscourseError,
    SchemaError,
    TranscriptParseError,
)
from .induce import LearnerConfig, TrainingSet, learn_tree
from .segmenter import NpSegmenter, Segmentation, Segmenter, TreeSegmenter, builtin_tree
from .tree import DecisionTree

try:
    from ._version import __version__
except ImportError:
    __version__ = "0.0.0"

__all__ = [
    "Narrative",
    "ProsodicPhrase",
    "parse_transcript",
    "parse_annotations",
    "load_corpus",
    "CueLexicon",
    "FeatureVector",
    "SiteRecord",
    "Label",
    "code_narrative",
    "DecisionTree",
    "Segmentation",
    "Segmenter",
    "NpSegmenter",
    "TreeSegmenter",
    "builtin_tree",
    "LearnerConfig",
    "TrainingSet",
    "learn_tree",
    "confusion",
    "metrics",
    "aggregate",
    "human_performance",
    "cross_validate",
    "PicoDiscourseError",
    "ConfigError",
    "TranscriptParseError",
    "AnnotationError",
    "SchemaError",
    "EvaluationError",
    "InductionError",
]
