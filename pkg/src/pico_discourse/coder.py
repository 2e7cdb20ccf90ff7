"""Feature coding of potential boundary sites.

Every site between phrases ``P_i`` and ``P_i+1`` gets a twelve-feature
vector (prosody, cue phrases, noun phrases, and the combined cue-prosody
feature) plus the gold label derived from the subjects' marks.

Feature values use fixed tokens so that vectors, feature tables and tree
files share one vocabulary: ``+sfc``/``-sfc`` for contours, ``true``/``false``
for booleans, ``+coref``/``-coref``, ``+infer``/``-infer``, ``+gp``/``-gp``
for the NP features, and ``NA`` where a feature does not apply.
"""

import csv
import logging
import math
import re
import string
from dataclasses import dataclass, field
from enum import StrEnum
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Literal, NamedTuple, Optional, Sequence, TextIO

from .corpus import ClauseAnnotation, Narrative, ProsodicPhrase, SubjectAnnotation, format_seconds
from .exceptions import ConfigError, SchemaError

logger = logging.getLogger(__name__)

GlobalProMode = Literal["static", "dynamic"]

DEFAULT_THRESHOLD = 3

NA = "NA"
SFC = "+sfc"
NOT_SFC = "-sfc"
TRUE = "true"
FALSE = "false"
PLUS_COREF = "+coref"
MINUS_COREF = "-coref"
PLUS_INFER = "+infer"
MINUS_INFER = "-infer"
PLUS_GP = "+gp"
MINUS_GP = "-gp"
COMPLEX = "complex"


class Label(StrEnum):
    BOUNDARY = "boundary"
    NON_BOUNDARY = "non_boundary"


@dataclass(frozen=True)
class Feature:
    """Schema entry for one coded feature.

    ``domain`` is ``None`` for open-vocabulary features (the cue words) and
    for the continuous ``duration``.
    """

    name: str
    attr: str
    continuous: bool = False
    domain: Optional[frozenset[str]] = None


def _closed(*values: str) -> frozenset[str]:
    return frozenset(values)


FEATURES: tuple[Feature, ...] = (
    Feature("before", "before", domain=_closed(SFC, NOT_SFC)),
    Feature("after", "after", domain=_closed(SFC, NOT_SFC)),
    Feature("pause", "pause", domain=_closed(TRUE, FALSE)),
    Feature("duration", "duration", continuous=True),
    Feature("cue1", "cue1", domain=_closed(TRUE, FALSE)),
    Feature("word1", "word1"),
    Feature("cue2", "cue2", domain=_closed(TRUE, FALSE)),
    Feature("word2", "word2"),
    Feature("coref", "coref", domain=_closed(PLUS_COREF, MINUS_COREF, NA)),
    Feature("infer", "infer", domain=_closed(PLUS_INFER, MINUS_INFER, NA)),
    Feature("global.pro", "global_pro", domain=_closed(PLUS_GP, MINUS_GP, NA)),
    Feature("cue-prosody", "cue_prosody", domain=_closed(COMPLEX, TRUE, FALSE)),
)
FEATURES_BY_NAME = {f.name: f for f in FEATURES}
FEATURE_NAMES = tuple(f.name for f in FEATURES)


def feature(name: str) -> Feature:
    try:
        return FEATURES_BY_NAME[name]
    except KeyError:
        raise SchemaError(f"unknown feature {name!r}; expected one of {', '.join(FEATURE_NAMES)}") from None


def _token(value: bool) -> str:
    return TRUE if value else FALSE


@dataclass(frozen=True)
class FeatureVector:
    before: str
    after: str
    pause: bool
    duration: float
    cue1: bool
    word1: str
    cue2: bool
    word2: str
    coref: str
    infer: str
    global_pro: str
    cue_prosody: str

    def value(self, name: str) -> str | float:
        """Return the value of feature ``name`` as a schema token (or seconds)."""
        raw = getattr(self, feature(name).attr)
        if isinstance(raw, bool):
            return _token(raw)
        return raw

    def values(self) -> dict[str, str | float]:
        return {name: self.value(name) for name in FEATURE_NAMES}

    def violations(self) -> list[str]:
        """List every broken cross-feature invariant (empty when consistent)."""
        problems = []
        if self.duration > 0 and not self.pause:
            problems.append("duration > 0 without a pause")
        if not self.pause and self.duration != 0:
            problems.append("no pause but non-zero duration")
        if (self.word1 == NA) == self.cue1:
            problems.append("word1 must be NA exactly when cue1 is false")
        if (self.word2 == NA) == self.cue2:
            problems.append("word2 must be NA exactly when cue2 is false")
        if self.cue2 and not self.cue1:
            problems.append("cue2 without cue1")
        if len({self.coref == NA, self.infer == NA, self.global_pro == NA}) != 1:
            problems.append("coref, infer and global.pro must be NA together")
        if self.cue_prosody == COMPLEX:
            if self.before != SFC or not self.pause:
                problems.append("complex cue-prosody needs +sfc before and a pause")
        elif self.cue_prosody != _token(self.pause):
            problems.append("non-complex cue-prosody must equal pause")
        return problems


@dataclass(frozen=True)
class SiteRecord:
    narrative_id: str
    site_index: int
    features: FeatureVector
    label: Label


@dataclass(frozen=True)
class CueLexicon:
    """The set of cue words recognized at phrase-initial position."""

    words: frozenset[str]
    source: str = field(default="<builtin>", compare=False)

    def __post_init__(self):
        if not self.words:
            raise ConfigError(f"cue lexicon {self.source} is empty")

    def __contains__(self, token: object) -> bool:
        return token in self.words

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<lines>") -> "CueLexicon":
        words = set()
        for line in lines:
            token = line.split("#", 1)[0].strip().lower()
            if token:
                words.add(token)
        return cls(frozenset(words), source)

    @classmethod
    def from_file(cls, path: Path) -> "CueLexicon":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"cue lexicon file {path} does not exist")
        return cls.from_lines(path.read_text(encoding="utf-8").splitlines(), str(path))

    @classmethod
    def default(cls) -> "CueLexicon":
        text = resources.files("pico_discourse").joinpath("data/cue_words.txt").read_text(encoding="utf-8")
        return cls.from_lines(text.splitlines(), "<builtin>")


class ProsodyFeatures(NamedTuple):
    before: str
    after: str
    pause: bool
    duration: float


class CueFeatures(NamedTuple):
    cue1: bool
    word1: str
    cue2: bool
    word2: str


class NpFeatures(NamedTuple):
    coref: str
    infer: str
    global_pro: str


NP_NA = NpFeatures(NA, NA, NA)


def code_prosody(phrase: ProsodicPhrase, following: ProsodicPhrase) -> ProsodyFeatures:
    pause = following.initial_pause is not None
    return ProsodyFeatures(
        before=SFC if phrase.sentence_final else NOT_SFC,
        after=SFC if following.sentence_final else NOT_SFC,
        pause=pause,
        duration=following.initial_pause if pause else 0.0,
    )


# Bracketed pause marks inside a phrase: "[.45]", "[.55?", "[.45]]" or "[.45],".
_PAUSE_TOKEN_RE = re.compile(r"^\[[\d.?]*\]*[,.;:?!]*$")
_EDGE_PUNCTUATION = string.punctuation + "‘’“”"


def lexical_items(text: str) -> list[str]:
    """Lowercased word tokens of a phrase, ignoring pause and timing marks.

    Intra-word hyphens of lengthened spellings are removed (``A-nd`` is
    ``and``).
    """
    items = []
    for raw in text.replace("..", " ").split():
        if _PAUSE_TOKEN_RE.match(raw):
            continue
        token = raw.strip(_EDGE_PUNCTUATION).replace("-", "").lower()
        if token:
            items.append(token)
    return items


def code_cues(following: ProsodicPhrase, lexicon: CueLexicon) -> CueFeatures:
    items = lexical_items(following.text)
    if not items or items[0] not in lexicon:
        return CueFeatures(False, NA, False, NA)
    if len(items) > 1 and items[1] in lexicon:
        return CueFeatures(True, items[0], True, items[1])
    return CueFeatures(True, items[0], False, NA)


def code_np(
    site_index: int,
    clauses: Sequence[ClauseAnnotation],
    last_boundary: Optional[int],
) -> NpFeatures:
    """Code coref, infer and global.pro for one site.

    The features apply only when a new clause begins in ``P_i+1``; when
    several do, the first one is used.  ``global.pro`` is positive when a
    pronoun of that clause has an antecedent clause starting after
    ``last_boundary`` (anywhere in the narrative when it is ``None``).
    """
    clause = next((c for c in clauses if c.start_phrase == site_index + 1), None)
    if clause is None:
        return NP_NA
    segment_start = 1 if last_boundary is None else last_boundary + 1
    start_of = {c.clause_index: c.start_phrase for c in clauses}
    in_segment = any(
        p.antecedent is not None and start_of.get(p.antecedent, 0) >= segment_start for p in clause.pronouns
    )
    return NpFeatures(
        coref=PLUS_COREF if clause.coref else MINUS_COREF,
        infer=PLUS_INFER if clause.infer else MINUS_INFER,
        global_pro=PLUS_GP if in_segment else MINUS_GP,
    )


def np_conjunction(np: NpFeatures) -> bool:
    return np.coref == MINUS_COREF and np.infer == MINUS_INFER and np.global_pro == MINUS_GP


def walk_np_sites(
    narrative: Narrative,
    decide: Callable[[int, NpFeatures], bool],
) -> list[tuple[NpFeatures, bool]]:
    """Run a left-to-right boundary decision with dynamic ``global.pro``.

    ``decide(site, np)`` is called for each site in order with the NP
    features computed relative to the last site ``decide`` accepted.

    Returns:
        One ``(np_features, is_boundary)`` pair per site.
    """
    trace = []
    last_boundary = None
    for site in narrative.sites():
        np = code_np(site, narrative.clauses, last_boundary)
        boundary = bool(decide(site, np))
        if boundary:
            last_boundary = site
        trace.append((np, boundary))
    return trace


def code_cue_prosody(before: str, pause: bool, cue1: bool, word1: str, cue2: bool, word2: str) -> str:
    if before == SFC and pause:
        if cue1 and word1 != "and":
            return COMPLEX
        if cue1 and word1 == "and" and cue2 and word2 != "and":
            return COMPLEX
    return _token(pause)


def _check_threshold(subjects: SubjectAnnotation, threshold: int) -> None:
    if not 1 <= threshold <= subjects.subject_count:
        raise ConfigError(f"boundary threshold {threshold} outside 1..{subjects.subject_count}")


def label_sites(subjects: SubjectAnnotation, threshold: int = DEFAULT_THRESHOLD) -> list[Label]:
    """Gold labels: a site is a boundary when at least ``threshold`` subjects marked it."""
    _check_threshold(subjects, threshold)
    return [Label.BOUNDARY if marks >= threshold else Label.NON_BOUNDARY for marks in subjects.marks_per_site]


def code_local_features(narrative: Narrative, lexicon: CueLexicon) -> list[tuple[ProsodyFeatures, CueFeatures, str]]:
    """Prosodic, cue and cue-prosody features of every site.

    These do not depend on any boundary decision, so sequential algorithms
    can compute them once up front.
    """
    local = []
    for site in narrative.sites():
        prosody = code_prosody(narrative.phrase(site), narrative.phrase(site + 1))
        cues = code_cues(narrative.phrase(site + 1), lexicon)
        local.append((prosody, cues, code_cue_prosody(prosody.before, prosody.pause, *cues)))
    return local


def assemble(prosody: ProsodyFeatures, cues: CueFeatures, cue_prosody: str, np: NpFeatures) -> FeatureVector:
    return FeatureVector(
        before=prosody.before,
        after=prosody.after,
        pause=prosody.pause,
        duration=prosody.duration,
        cue1=cues.cue1,
        word1=cues.word1,
        cue2=cues.cue2,
        word2=cues.word2,
        coref=np.coref,
        infer=np.infer,
        global_pro=np.global_pro,
        cue_prosody=cue_prosody,
    )


def code_narrative(
    narrative: Narrative,
    lexicon: Optional[CueLexicon] = None,
    threshold: int = DEFAULT_THRESHOLD,
    global_pro_mode: GlobalProMode = "static",
) -> list[SiteRecord]:
    """Code every potential boundary site of a narrative.

    ``global.pro`` in the returned records is always the value computed
    while running the NP conjunction rule (Condition 1) left to right.  In
    ``dynamic`` mode the consuming sequential algorithm recomputes it
    against its own boundaries; a flat record cannot carry that state.
    """
    if global_pro_mode not in ("static", "dynamic"):
        raise ConfigError(f"unknown global_pro_mode {global_pro_mode!r}")
    lexicon = lexicon or CueLexicon.default()
    labels = label_sites(narrative.subjects, threshold)
    local = code_local_features(narrative, lexicon)
    trace = walk_np_sites(narrative, lambda _site, np: np_conjunction(np))

    records = []
    for site, (prosody, cues, cue_prosody), (np, _), label in zip(narrative.sites(), local, trace, labels):
        records.append(
            SiteRecord(
                narrative_id=narrative.id,
                site_index=site,
                features=assemble(prosody, cues, cue_prosody, np),
                label=label,
            )
        )
    logger.debug("Coded %d sites of %s (%s global.pro)", len(records), narrative.id, global_pro_mode)
    return records


# --- feature tables ----------------------------------------------------------

TABLE_COLUMNS = ("narrative_id", "site_index", *FEATURE_NAMES, "label")


def format_duration(value: float) -> str:
    """At least two decimals, more only when needed to keep the exact value."""
    fixed = f"{value:.2f}"
    return fixed if float(fixed) == value else format_seconds(value)


def write_feature_table(records: Iterable[SiteRecord], stream: TextIO, metadata: Optional[dict] = None) -> int:
    """Write site records as CSV; returns the number of rows.

    ``metadata`` is written as a leading ``# key=value ...`` comment line.
    """
    if metadata:
        stream.write("# " + " ".join(f"{k}={v}" for k, v in metadata.items()) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    rows = 0
    for record in records:
        values = record.features.values()
        values["duration"] = format_duration(record.features.duration)
        writer.writerow([record.narrative_id, record.site_index, *(values[n] for n in FEATURE_NAMES), record.label])
        rows += 1
    return rows


def _cell(row: dict, name: str, rowno: int) -> str:
    value = row.get(name)
    if value is None or value == "":
        raise SchemaError(f"feature table row {rowno}: missing {name}")
    return value.strip()


def _categorical(row: dict, name: str, rowno: int) -> str:
    value = _cell(row, name, rowno)
    domain = FEATURES_BY_NAME[name].domain
    if domain is not None and value not in domain:
        raise SchemaError(f"feature table row {rowno}: {name}={value!r} outside {sorted(domain)}")
    return value


def _record_from_row(row: dict, rowno: int) -> SiteRecord:
    try:
        duration = float(_cell(row, "duration", rowno))
        site_index = int(_cell(row, "site_index", rowno))
    except ValueError as exc:
        raise SchemaError(f"feature table row {rowno}: {exc}") from None
    if not math.isfinite(duration) or duration < 0:
        raise SchemaError(f"feature table row {rowno}: duration must be finite and >= 0")
    label = _cell(row, "label", rowno)
    if label not in (Label.BOUNDARY, Label.NON_BOUNDARY):
        raise SchemaError(f"feature table row {rowno}: unknown label {label!r}")
    vector = FeatureVector(
        before=_categorical(row, "before", rowno),
        after=_categorical(row, "after", rowno),
        pause=_categorical(row, "pause", rowno) == TRUE,
        duration=duration,
        cue1=_categorical(row, "cue1", rowno) == TRUE,
        word1=_cell(row, "word1", rowno),
        cue2=_categorical(row, "cue2", rowno) == TRUE,
        word2=_cell(row, "word2", rowno),
        coref=_categorical(row, "coref", rowno),
        infer=_categorical(row, "infer", rowno),
        global_pro=_categorical(row, "global.pro", rowno),
        cue_prosody=_categorical(row, "cue-prosody", rowno),
    )
    return SiteRecord(_cell(row, "narrative_id", rowno), site_index, vector, Label(label))


def read_feature_table(stream: TextIO) -> tuple[list[SiteRecord], dict[str, str]]:
    """Read a feature table written by :func:`write_feature_table`.

    Returns:
        ``(records, metadata)``.

    Raises:
        SchemaError: On missing columns or values outside the schema.
    """
    metadata: dict[str, str] = {}
    lines = []
    for line in stream:
        if line.startswith("#"):
            for item in line[1:].split():
                key, _, value = item.partition("=")
                metadata[key] = value
        elif line.strip():
            lines.append(line)
    reader = csv.DictReader(lines)
    missing = set(TABLE_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise SchemaError(f"feature table lacks columns: {', '.join(sorted(missing))}")
    records = [_record_from_row(row, rowno) for rowno, row in enumerate(reader, start=1)]
    return records, metadata
