"""Container factories and segmenter resolution.

:class:`DiscourseFactory` turns the bound settings into the shared objects
the experiment runner needs (the cue lexicon and the learner options);
:func:`resolve_segmenter` maps an algorithm selector to a
:class:`~pico_discourse.segmenter.Segmenter`.
"""

import logging
from pathlib import Path

from pico_ioc import factory, provides

from .coder import CueLexicon
from .config import CoderSettings, LearnerSettings
from .exceptions import ConfigError
from .induce import LearnerConfig
from .segmenter import NpSegmenter, Segmenter, TreeSegmenter, builtin_tree
from .tree import load_tree

logger = logging.getLogger(__name__)

BUILTIN_SELECTORS = ("builtin", "fig7")


def load_lexicon(path: str) -> CueLexicon:
    if not path:
        return CueLexicon.default()
    lexicon = CueLexicon.from_file(Path(path))
    logger.info("Loaded %d cue words from %s", len(lexicon.words), path)
    return lexicon


def resolve_segmenter(selector: str, lexicon: CueLexicon, coder: CoderSettings) -> Segmenter:
    """Build the segmenter named by ``selector``.

    Selectors: ``np1``, ``np2``, ``builtin`` (or its alias ``fig7``) and
    ``tree:<path>`` for a tree file in either format.

    Raises:
        ConfigError: On an unknown selector or a missing tree file.
        SchemaError: If the tree file cannot be parsed.
    """
    if selector in ("np1", "np2"):
        return NpSegmenter(int(selector[-1]), lexicon)
    if selector in BUILTIN_SELECTORS:
        tree = builtin_tree()
        name = "builtin"
    elif selector.startswith("tree:"):
        path = Path(selector[len("tree:") :])
        if not path.is_file():
            raise ConfigError(f"tree file {path} does not exist")
        tree = load_tree(path.read_text(encoding="utf-8"))
        name = path.stem
    else:
        raise ConfigError(f"unknown algorithm selector {selector!r}")
    return TreeSegmenter(
        tree,
        name=name,
        lexicon=lexicon,
        global_pro_mode=coder.global_pro_mode,
        threshold=coder.threshold,
    )


@factory
class DiscourseFactory:
    """Provides the cue lexicon and learner options as singletons.

    Example:
        .. code-block:: python

            from pico_ioc import DictSource, configuration, init

            container = init(
                modules=["pico_discourse.config", "pico_discourse.factory"],
                config=configuration(DictSource({"coder": {"lexicon": "cues.txt"}})),
            )
            lexicon = container.get(CueLexicon)
    """

    @provides(CueLexicon, scope="singleton")
    def create_lexicon(self, settings: CoderSettings) -> CueLexicon:
        return load_lexicon(settings.lexicon)

    @provides(LearnerConfig, scope="singleton")
    def create_learner_config(self, settings: LearnerSettings) -> LearnerConfig:
        return settings.learner_config()
