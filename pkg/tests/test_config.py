"""Unit tests for pico_discourse config module."""

from dataclasses import asdict

import pytest
from pico_ioc import DictSource, YamlTreeSource, configuration, init

from pico_discourse.cli import CONTAINER_MODULES
from pico_discourse.coder import CueLexicon
from pico_discourse.config import (
    ENV_CORPUS,
    AlternateLearnerSettings,
    CoderSettings,
    CorpusSettings,
    ExperimentSettings,
    LearnerSettings,
    build_configuration,
    config_digest,
    config_sources,
)
from pico_discourse.exceptions import ConfigError
from pico_discourse.induce import LearnerConfig
from pico_discourse.runner import ExperimentRunner

SETTINGS_CLASSES = [CorpusSettings, CoderSettings, LearnerSettings, AlternateLearnerSettings, ExperimentSettings]


class TestSettingsClasses:
    """Tests for the @configured settings dataclasses."""

    @pytest.mark.parametrize("cls", SETTINGS_CLASSES)
    def test_has_configured_decorator(self, cls):
        """Every settings class is marked with @configured."""
        assert getattr(cls, "_pico_infra", None) == "configured"
        meta = getattr(cls, "_pico_meta", {})
        assert "configured" in meta

    def test_default_values(self):
        """Settings have the documented defaults."""
        assert asdict(CorpusSettings()) == {"root": "", "mode": "strict", "train": [], "test": []}
        assert asdict(CoderSettings()) == {"threshold": 3, "lexicon": "", "global_pro_mode": "static"}
        assert ExperimentSettings().algorithm == "np2"
        assert ExperimentSettings().folds == 0
        assert AlternateLearnerSettings().enabled is False

    def test_learner_defaults_match_learner_config(self):
        """The learner settings default to the standard learner options."""
        assert LearnerSettings().learner_config() == LearnerConfig()

    def test_comma_separated_ids(self):
        """Narrative id lists may be given as one comma-separated string."""
        settings = CorpusSettings(train="n01, n02,n03", test="n04")

        assert settings.train == ["n01", "n02", "n03"]
        assert settings.test == ["n04"]

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: CorpusSettings(mode="loose"),
            lambda: CorpusSettings(train=["n01", "n02"], test=["n02"]),
            lambda: CoderSettings(threshold=0),
            lambda: CoderSettings(global_pro_mode="sometimes"),
            lambda: LearnerSettings(confidence_factor=0.0),
            lambda: LearnerSettings(categorical_grouping="clusters"),
            lambda: AlternateLearnerSettings(min_instances=0),
            lambda: ExperimentSettings(algorithm="c5"),
            lambda: ExperimentSettings(algorithm="tree:"),
            lambda: ExperimentSettings(folds=1),
            lambda: ExperimentSettings(report_format="xml"),
            lambda: ExperimentSettings(averaging="weighted"),
        ],
    )
    def test_invalid_values(self, factory):
        """Out-of-range settings raise ConfigError."""
        with pytest.raises(ConfigError):
            factory()

    @pytest.mark.parametrize("algorithm", ["np1", "np2", "builtin", "fig7", "tree:out/tree.json"])
    def test_algorithm_selectors(self, algorithm):
        """Known selectors and tree paths are accepted."""
        assert ExperimentSettings(algorithm=algorithm).algorithm == algorithm


class TestConfigLayers:
    """Tests for layering environment, file and flags."""

    def test_sources_lowest_precedence_first(self, tmp_path):
        """Environment, then the YAML file, then the flags."""
        path = tmp_path / "experiment.yaml"
        path.write_text("coder:\n  threshold: 4\n", encoding="utf-8")

        sources = config_sources(path, {"coder": {"threshold": 5}}, environ={ENV_CORPUS: "from-env"})

        assert [type(s) for s in sources] == [DictSource, YamlTreeSource, DictSource]

    def test_environment_sets_corpus_root(self):
        """The environment variable only supplies the corpus root."""
        config = build_configuration(environ={ENV_CORPUS: "/data/narratives"})

        container = init(modules=CONTAINER_MODULES, config=config)

        assert container.get(CorpusSettings).root == "/data/narratives"
        assert container.get(CoderSettings).threshold == 3

    def test_layers_in_order(self, tmp_path):
        """The file beats the environment and flags beat the file."""
        path = tmp_path / "experiment.yaml"
        path.write_text("corpus:\n  root: from-file\n  mode: lenient\ncoder:\n  threshold: 4\n", encoding="utf-8")
        config = build_configuration(path, {"coder": {"threshold": 5}}, environ={ENV_CORPUS: "from-env"})

        container = init(modules=CONTAINER_MODULES, config=config)

        corpus = container.get(CorpusSettings)
        assert (corpus.root, corpus.mode) == ("from-file", "lenient")
        assert container.get(CoderSettings).threshold == 5

    def test_no_layers(self):
        """Without environment, file or flags every section takes its defaults."""
        container = init(modules=CONTAINER_MODULES, config=build_configuration(environ={}))

        assert asdict(container.get(CoderSettings)) == asdict(CoderSettings())

    def test_missing_file(self, tmp_path):
        """A missing experiment file is a configuration error."""
        with pytest.raises(ConfigError, match="does not exist"):
            config_sources(tmp_path / "nope.yaml", environ={})

    def test_empty_file(self, tmp_path):
        """An empty YAML file adds nothing."""
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")

        container = init(modules=CONTAINER_MODULES, config=build_configuration(path, environ={}))

        assert container.get(ExperimentSettings).algorithm == "np2"

    @pytest.mark.parametrize(
        "content,message",
        [
            ("coder: [unclosed\n", "not valid YAML"),
            ("- just\n- a list\n", "mapping at the top level"),
        ],
    )
    def test_bad_files(self, tmp_path, content, message):
        """Unreadable experiment files are rejected before the container is built."""
        path = tmp_path / "experiment.yaml"
        path.write_text(content, encoding="utf-8")

        with pytest.raises(ConfigError, match=message):
            config_sources(path, environ={})


class TestConfigDigest:
    """Tests for the settings digest written into reports."""

    def test_stable(self):
        """Equal settings give equal digests."""
        assert config_digest(CoderSettings(), ExperimentSettings()) == config_digest(
            CoderSettings(), ExperimentSettings()
        )

    def test_changes_with_settings(self):
        """Any changed value changes the digest."""
        assert config_digest(CoderSettings()) != config_digest(CoderSettings(threshold=4))

    def test_is_sha256_hex(self):
        """The digest is a 64-character hex string."""
        digest = config_digest(CorpusSettings())

        assert len(digest) == 64
        int(digest, 16)


class TestContainerBinding:
    """Tests for binding settings through the container."""

    def test_settings_bound_from_tree(self):
        """Configured sections reach the settings components."""
        tree = {"coder": {"threshold": 4, "global_pro_mode": "dynamic"}, "experiment": {"algorithm": "np1"}}

        container = init(modules=CONTAINER_MODULES, config=configuration(DictSource(tree)))

        assert container.get(CoderSettings).threshold == 4
        assert container.get(CoderSettings).global_pro_mode == "dynamic"
        assert container.get(ExperimentSettings).algorithm == "np1"

    def test_factory_provides_lexicon_and_learner(self, tmp_path):
        """The factory loads the configured lexicon and learner options once."""
        cues = tmp_path / "cues.txt"
        cues.write_text("and\nbut\n", encoding="utf-8")
        tree = {"coder": {"lexicon": str(cues)}, "learner": {"confidence_factor": 0.5}}

        container = init(modules=CONTAINER_MODULES, config=configuration(DictSource(tree)))

        lexicon = container.get(CueLexicon)
        assert lexicon.words == frozenset({"and", "but"})
        assert lexicon is container.get(CueLexicon)
        assert container.get(LearnerConfig).confidence_factor == 0.5

    def test_runner_uses_provided_learner_config(self, tmp_path):
        """The runner trains with the learner options the factory provides."""
        tree = {"corpus": {"root": str(tmp_path)}, "learner": {"min_instances": 4}}

        container = init(modules=CONTAINER_MODULES, config=configuration(DictSource(tree)))

        runner = container.get(ExperimentRunner)
        assert runner.learner_config is container.get(LearnerConfig)
        assert runner.learner_config.min_instances == 4
