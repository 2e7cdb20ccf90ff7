"""Experiment settings and configuration loading.

Each concern has its own ``@configured`` dataclass bound from the
configuration tree under a prefix (``corpus``, ``coder``, ``learner``,
``learner2``, ``experiment``).  A configuration tree is assembled from three
layers, later layers winning:

1. the ``PICO_DISCOURSE_CORPUS`` environment variable (corpus root only),
2. the YAML experiment file,
3. command-line flag overrides.

Example:
    .. code-block:: yaml

        # experiment.yaml
        corpus:
          root: corpus/
          train: [n01, n02, n03]
          test: [n04]
        coder:
          threshold: 3
          global_pro_mode: static
        learner:
          confidence_factor: 0.25
        experiment:
          algorithm: np2
          report_format: table
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from pico_ioc import ConfigurationError, ContextConfig, DictSource, YamlTreeSource, configuration, configured

from .exceptions import ConfigError, InductionError
from .induce import LearnerConfig

ENV_CORPUS = "PICO_DISCOURSE_CORPUS"

_ALGORITHMS = ("np1", "np2", "builtin", "fig7")


def _id_list(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return [str(item) for item in value]


@configured(target="self", prefix="corpus", mapping="tree")
@dataclass
class CorpusSettings:
    """Where the narratives live and how they are split.

    Attributes:
        root: Directory of ``<id>.txt`` transcripts and ``<id>.ann`` sidecars.
        mode: Transcript parse mode, ``strict`` or ``lenient``.
        train: Training narrative ids (empty: every narrative in ``root``).
        test: Test narrative ids.
    """

    root: str = ""
    mode: str = "strict"
    train: list[str] = field(default_factory=list)
    test: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.train = _id_list(self.train)
        self.test = _id_list(self.test)
        if self.mode not in ("strict", "lenient"):
            raise ConfigError(f"corpus.mode must be 'strict' or 'lenient', got {self.mode!r}")
        overlap = sorted(set(self.train) & set(self.test))
        if overlap:
            raise ConfigError(f"train and test narratives overlap: {', '.join(overlap)}")


@configured(target="self", prefix="coder", mapping="tree")
@dataclass
class CoderSettings:
    """Feature-coding options.

    An empty ``lexicon`` selects the packaged cue-word list.
    """

    threshold: int = 3
    lexicon: str = ""
    global_pro_mode: str = "static"

    def __post_init__(self):
        if self.threshold < 1:
            raise ConfigError(f"coder.threshold must be >= 1, got {self.threshold}")
        if self.global_pro_mode not in ("static", "dynamic"):
            raise ConfigError(f"coder.global_pro_mode must be 'static' or 'dynamic', got {self.global_pro_mode!r}")


@dataclass
class _LearnerFields:
    min_instances: int = 2
    confidence_factor: float = 0.25
    categorical_grouping: str = "per_value"
    gain_restriction: str = "gain_ratio_over_average_gain"
    prune: bool = True

    def __post_init__(self):
        self.learner_config()

    def learner_config(self) -> LearnerConfig:
        try:
            return LearnerConfig(
                min_instances=self.min_instances,
                confidence_factor=self.confidence_factor,
                categorical_grouping=self.categorical_grouping,
                gain_restriction=self.gain_restriction,
                prune=self.prune,
            )
        except InductionError as exc:
            raise ConfigError(f"invalid learner settings: {exc}") from exc


@configured(target="self", prefix="learner", mapping="tree")
@dataclass
class LearnerSettings(_LearnerFields):
    """Options of the primary tree learner (defaults: standard C4.5 defaults)."""


@configured(target="self", prefix="learner2", mapping="tree")
@dataclass
class AlternateLearnerSettings(_LearnerFields):
    """A second learner run reported next to the first when ``enabled``."""

    enabled: bool = False


@configured(target="self", prefix="experiment", mapping="tree")
@dataclass
class ExperimentSettings:
    """What to run and how to report it.

    Attributes:
        algorithm: ``np1``, ``np2``, ``builtin`` (alias ``fig7``) or
            ``tree:<path>``.
        folds: Cross-validation folds; ``0`` means one per narrative.
        report_format: ``table`` or ``json``.
        averaging: ``macro`` (across narratives) or ``micro`` (pooled).
        output: Directory receiving every output file.
    """

    algorithm: str = "np2"
    folds: int = 0
    report_format: str = "table"
    averaging: str = "macro"
    output: str = "results"

    def __post_init__(self):
        if self.algorithm not in _ALGORITHMS and not self.algorithm.startswith("tree:"):
            raise ConfigError(
                f"experiment.algorithm must be one of {', '.join(_ALGORITHMS)} or tree:<path>, got {self.algorithm!r}"
            )
        if self.algorithm.startswith("tree:") and not self.algorithm[5:]:
            raise ConfigError("experiment.algorithm 'tree:' needs a file path")
        if self.folds < 0 or self.folds == 1:
            raise ConfigError(f"experiment.folds must be 0 or >= 2, got {self.folds}")
        if self.report_format not in ("table", "json"):
            raise ConfigError(f"experiment.report_format must be 'table' or 'json', got {self.report_format!r}")
        if self.averaging not in ("macro", "micro"):
            raise ConfigError(f"experiment.averaging must be 'macro' or 'micro', got {self.averaging!r}")


def _yaml_source(path: Path) -> YamlTreeSource:
    source = YamlTreeSource(str(path))
    try:
        tree = source.get_tree()
    except ConfigurationError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    if not isinstance(tree, Mapping):
        raise ConfigError(f"config file {path} must hold a mapping at the top level")
    return source


def config_sources(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> list[DictSource | YamlTreeSource]:
    """Tree sources for environment, YAML file and flag overrides, lowest precedence first.

    Raises:
        ConfigError: If ``path`` is given but is not a file, is not valid
            YAML, or does not hold a mapping.
    """
    environ = os.environ if environ is None else environ
    sources: list[DictSource | YamlTreeSource] = []
    if environ.get(ENV_CORPUS):
        sources.append(DictSource({"corpus": {"root": environ[ENV_CORPUS]}}))
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file {path} does not exist")
        sources.append(_yaml_source(Path(path)))
    sources.append(DictSource(dict(overrides or {})))
    return sources


def build_configuration(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ContextConfig:
    """Layer the configuration sources; pico-ioc deep-merges them, later sources winning."""
    return configuration(*config_sources(path, overrides, environ))


def config_digest(*settings) -> str:
    """SHA-256 over the canonical JSON of the given settings objects."""
    payload = {type(s).__name__: asdict(s) for s in settings}
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
