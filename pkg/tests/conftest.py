from pathlib import Path

import pytest

from pico_discourse.coder import (
    FALSE,
    MINUS_COREF,
    MINUS_GP,
    MINUS_INFER,
    NA,
    NOT_SFC,
    SFC,
    TRUE,
    CueLexicon,
    FeatureVector,
    Label,
    SiteRecord,
)
from pico_discourse.corpus import Narrative, parse_annotations, parse_transcript

# An excerpt of a narrated pear-film retelling, coded by hand.
EXCERPT_TRANSCRIPT = """\
..Because he's looking at the girl.
[.75] Falls over,
[1.35] uh there's no conversation in this movie.
[.6] There's sounds,
you know,
like the birds and stuff,
but there.. the humans beings in it don't say anything.
[1.0] He falls over,
"""

EXCERPT_ANNOTATIONS = """\
NARRATIVE excerpt 8
SUBJECTS 7
1 5 0 0 0 0 7
SUBJECT S1 1 2 7
SUBJECT S2 2 7
SUBJECT S3 2 7
SUBJECT S4 2 7
SUBJECT S5 2 7
SUBJECT S6 7
SUBJECT S7 7
CLAUSE 1 1 - -
CLAUSE 2 2 + -
PRONOUN ZERO 1
CLAUSE 3 3 - -
CLAUSE 4 4 - +
CLAUSE 5 7 - -
PRONOUN it 3
CLAUSE 6 8 + -
PRONOUN he 2
"""


def build_narrative(narrative_id: str, transcript: str, annotations: str, mode: str = "strict") -> Narrative:
    phrases = parse_transcript(transcript, mode)
    clauses, subjects = parse_annotations(annotations, len(phrases), narrative_id=narrative_id)
    return Narrative(narrative_id, tuple(phrases), tuple(clauses), subjects)


def make_vector(**overrides) -> FeatureVector:
    """A consistent vector (+sfc before, 0.75 s pause, no cues, -coref -infer -gp) with overrides."""
    values = dict(
        before=SFC,
        after=NOT_SFC,
        pause=True,
        duration=0.75,
        cue1=False,
        word1=NA,
        cue2=False,
        word2=NA,
        coref=MINUS_COREF,
        infer=MINUS_INFER,
        global_pro=MINUS_GP,
        cue_prosody=TRUE,
    )
    values.update(overrides)
    if "pause" in overrides and "cue_prosody" not in overrides:
        values["cue_prosody"] = TRUE if values["pause"] else FALSE
    return FeatureVector(**values)


def make_record(label: Label, narrative_id: str = "toy", site_index: int = 1, **features) -> SiteRecord:
    return SiteRecord(narrative_id, site_index, make_vector(**features), label)


@pytest.fixture
def excerpt() -> Narrative:
    return build_narrative("excerpt", EXCERPT_TRANSCRIPT, EXCERPT_ANNOTATIONS)


@pytest.fixture(scope="session")
def lexicon() -> CueLexicon:
    return CueLexicon.default()


@pytest.fixture
def corpus_dir(tmp_path: Path) -> Path:
    """A corpus directory holding the hand-coded excerpt."""
    root = tmp_path / "corpus"
    root.mkdir()
    (root / "excerpt.txt").write_text(EXCERPT_TRANSCRIPT, encoding="utf-8")
    (root / "excerpt.ann").write_text(EXCERPT_ANNOTATIONS, encoding="utf-8")
    return root
