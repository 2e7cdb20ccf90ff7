"""Transcripts, annotation sidecars and the in-memory narrative model.

A transcript holds one prosodic phrase per line, written with the Chafe
conventions: ``[X]`` opens a phrase that follows a pause of X seconds, a
leading ``..`` marks a break too short to measure, and the final ``.``/``?``
or ``,`` marks sentence-final or phrase-final intonation.

The hand coding (functionally independent clauses, their NP judgments and
the subjects' boundary marks) lives in a keyed sidecar file next to each
transcript.  See ``docs/reference/formats.md`` for the grammar.
"""

import io
import logging
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import StrEnum
from pathlib import Path
from typing import Iterable, Iterator, Literal, Optional, Sequence

from .exceptions import AnnotationError, TranscriptParseError

logger = logging.getLogger(__name__)

ParseMode = Literal["strict", "lenient"]

TRANSCRIPT_SUFFIX = ".txt"
ANNOTATION_SUFFIX = ".ann"


class Contour(StrEnum):
    SENTENCE_FINAL = "sentence_final"
    NON_SENTENCE_FINAL = "non_sentence_final"


_TERMINATORS = {
    ".": Contour.SENTENCE_FINAL,
    "?": Contour.SENTENCE_FINAL,
    ",": Contour.NON_SENTENCE_FINAL,
}

# "?" marks an uncertain measurement and may stand in for the closing
# bracket, as in "[.55?]" or "[.55? because"; the value is kept.
_PAUSE_RE = re.compile(r"^\[\s*(?P<value>\d+(?:\.\d*)?|\.\d+)\s*(?:\?\s*\]?|\])")


@dataclass(frozen=True)
class ProsodicPhrase:
    """One transcript line.

    Attributes:
        index: 1-based position in the narrative.
        text: The phrase words, without the leading pause/short-break
            markers and without the final terminator.  Internal ``..`` and
            internal bracketed pauses stay in the text.
        initial_pause: Seconds of the leading ``[X]`` pause, or ``None``.
        initial_short_break: ``True`` when the line begins with ``..``.
        final_contour: Intonation implied by the terminator.
        terminator: The literal terminator (``"."``, ``"?"``, ``","`` or
            ``""`` for a lenient-mode line without one).  Not part of
            equality: ``"."`` and ``"?"`` code the same contour.
    """

    index: int
    text: str
    initial_pause: Optional[float] = None
    initial_short_break: bool = False
    final_contour: Contour = Contour.NON_SENTENCE_FINAL
    terminator: str = field(default="", compare=False)

    @property
    def sentence_final(self) -> bool:
        return self.final_contour is Contour.SENTENCE_FINAL


@dataclass(frozen=True)
class Pronoun:
    token: str
    antecedent: Optional[int] = None


@dataclass(frozen=True)
class ClauseAnnotation:
    """A functionally independent clause (FIC) and its NP judgments.

    ``coref`` and ``infer`` are the annotator's judgments of the clause
    against the immediately preceding clause.
    """

    clause_index: int
    start_phrase: int
    coref: bool = False
    infer: bool = False
    pronouns: tuple[Pronoun, ...] = ()


@dataclass(frozen=True)
class SubjectAnnotation:
    """Boundary marks from the segmentation subjects.

    Attributes:
        subject_count: How many subjects segmented the narrative.
        marks_per_site: For each site ``1..n-1``, how many subjects placed
            a boundary there.
        subject_marks: Optional per-subject boundary sets, as
            ``(label, frozenset of site indices)`` pairs.  Required for
            human-performance scoring.
    """

    subject_count: int
    marks_per_site: tuple[int, ...]
    subject_marks: Optional[tuple[tuple[str, frozenset[int]], ...]] = None


@dataclass(frozen=True)
class Narrative:
    """A coded narrative: its phrases, clauses and subject marks.

    Construction validates the cross-references, so a ``Narrative`` in hand
    always has ``n >= 2`` phrases and exactly ``n - 1`` boundary sites.
    """

    id: str
    phrases: tuple[ProsodicPhrase, ...]
    clauses: tuple[ClauseAnnotation, ...]
    subjects: SubjectAnnotation

    def __post_init__(self):
        n = len(self.phrases)
        if n < 2:
            raise TranscriptParseError(self.id, None, f"a narrative needs at least 2 prosodic phrases, got {n}")
        if len(self.subjects.marks_per_site) != n - 1:
            raise AnnotationError(
                self.id,
                None,
                f"{len(self.subjects.marks_per_site)} subject counts for {n - 1} boundary sites",
            )
        for clause in self.clauses:
            if not 1 <= clause.start_phrase <= n:
                raise AnnotationError(
                    self.id, None, f"clause {clause.clause_index} starts at phrase {clause.start_phrase} of {n}"
                )

    @property
    def site_count(self) -> int:
        return len(self.phrases) - 1

    def sites(self) -> range:
        return range(1, len(self.phrases))

    def phrase(self, index: int) -> ProsodicPhrase:
        return self.phrases[index - 1]


@dataclass(frozen=True)
class AnnotationSet:
    narrative_id: str
    n_phrases: int
    clauses: tuple[ClauseAnnotation, ...]
    subjects: SubjectAnnotation


def format_seconds(value: float) -> str:
    """Render a duration in plain positional notation (never exponent form)."""
    return format(Decimal(repr(float(value))), "f")


def _lines_of(source) -> Iterator[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    if isinstance(source, str):
        source = io.StringIO(source)
    for line in source:
        yield line.rstrip("\r\n")


def _consume_pause(rest: str, mode: ParseMode, source_name: str, lineno: int) -> tuple[Optional[float], str]:
    if not rest.startswith("["):
        return None, rest
    match = _PAUSE_RE.match(rest)
    if match:
        seconds = float(match.group("value"))
        if math.isfinite(seconds):
            return seconds, rest[match.end() :].lstrip()
    if mode == "strict":
        raise TranscriptParseError(source_name, lineno, f"malformed pause bracket in {rest!r}")
    logger.warning("%s:%d: malformed pause bracket kept as text: %r", source_name, lineno, rest)
    return None, rest


def _parse_line(line: str, index: int, lineno: int, mode: ParseMode, source_name: str) -> ProsodicPhrase:
    pause, rest = _consume_pause(line, mode, source_name, lineno)
    short_break = rest.startswith("..")
    if short_break:
        rest = rest[2:].lstrip()

    terminator = rest[-1:]
    if terminator in _TERMINATORS:
        contour = _TERMINATORS[terminator]
        body = rest[:-1].rstrip()
    else:
        if mode == "strict":
            raise TranscriptParseError(source_name, lineno, f"line does not end in '.', '?' or ',': {line!r}")
        logger.warning("%s:%d: no terminator, treating as non-sentence-final: %r", source_name, lineno, line)
        terminator = ""
        contour = Contour.NON_SENTENCE_FINAL
        body = rest

    return ProsodicPhrase(
        index=index,
        text=body,
        initial_pause=pause,
        initial_short_break=short_break,
        final_contour=contour,
        terminator=terminator,
    )


def parse_transcript(source, mode: ParseMode = "strict", *, source_name: str = "<transcript>") -> list[ProsodicPhrase]:
    """Parse a Chafe-convention transcript into prosodic phrases.

    Args:
        source: A text stream, a string, bytes (decoded as UTF-8 with
            replacement) or any iterable of lines.
        mode: ``"strict"`` aborts on the first bad line; ``"lenient"``
            logs a warning and recovers.
        source_name: Name used in error messages and warnings.

    Returns:
        The phrases in order, one per non-empty line.

    Raises:
        TranscriptParseError: In strict mode, for a line without a
            recognized terminator or with a malformed leading bracket.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown parse mode {mode!r}")
    phrases: list[ProsodicPhrase] = []
    for lineno, raw in enumerate(_lines_of(source), start=1):
        line = raw.strip()
        if line:
            phrases.append(_parse_line(line, len(phrases) + 1, lineno, mode, source_name))
    return phrases


def emit_phrase(phrase: ProsodicPhrase) -> str:
    parts = []
    if phrase.initial_pause is not None:
        parts.append(f"[{format_seconds(phrase.initial_pause)}] ")
    if phrase.initial_short_break:
        parts.append("..")
    parts.append(phrase.text)
    if phrase.terminator:
        parts.append(phrase.terminator)
    else:
        parts.append("." if phrase.sentence_final else ",")
    return "".join(parts)


def emit_phrases(phrases: Iterable[ProsodicPhrase]) -> str:
    return "".join(emit_phrase(p) + "\n" for p in phrases)


def emit_transcript(narrative: Narrative) -> str:
    """Render a narrative back to transcript text.

    ``parse_transcript(emit_transcript(x))`` reproduces every structured
    field of ``x.phrases``.
    """
    return emit_phrases(narrative.phrases)


# --- annotation sidecar -------------------------------------------------------


class _SidecarReader:
    """Line-by-line state machine over the sidecar records."""

    def __init__(self, source_name: str):
        self.source_name = source_name
        self.narrative_id: Optional[str] = None
        self.n_phrases: Optional[int] = None
        self.subject_count: Optional[int] = None
        self.counts: Optional[list[int]] = None
        self.subject_marks: list[tuple[str, frozenset[int]]] = []
        self.clauses: list[ClauseAnnotation] = []
        self._pronouns: list[Pronoun] = []
        self._in_counts = False

    def fail(self, lineno: Optional[int], message: str) -> AnnotationError:
        return AnnotationError(self.source_name, lineno, message)

    def _int(self, token: str, lineno: int, what: str) -> int:
        try:
            return int(token)
        except ValueError:
            raise self.fail(lineno, f"{what} must be an integer, got {token!r}") from None

    def _polarity(self, token: str, lineno: int, what: str) -> bool:
        if token not in ("+", "-"):
            raise self.fail(lineno, f"{what} must be '+' or '-', got {token!r}")
        return token == "+"

    def _close_clause(self) -> None:
        if self.clauses and self._pronouns:
            last = self.clauses[-1]
            self.clauses[-1] = ClauseAnnotation(
                last.clause_index, last.start_phrase, last.coref, last.infer, tuple(self._pronouns)
            )
        self._pronouns = []

    def feed(self, lineno: int, line: str) -> None:
        fields = line.split()
        keyword = fields[0]

        if self._in_counts and all(f.lstrip("-").isdigit() for f in fields):
            self.counts.extend(self._int(f, lineno, "subject count") for f in fields)
            return
        self._in_counts = False

        if keyword != "NARRATIVE" and self.narrative_id is None:
            raise self.fail(lineno, "the sidecar must begin with a NARRATIVE record")

        handler = getattr(self, f"_on_{keyword.lower()}", None)
        if keyword.upper() != keyword or handler is None:
            raise self.fail(lineno, f"unknown record {keyword!r}")
        handler(lineno, fields[1:])

    def _on_narrative(self, lineno: int, args: list[str]) -> None:
        if self.narrative_id is not None:
            raise self.fail(lineno, "duplicate NARRATIVE record")
        if len(args) != 2:
            raise self.fail(lineno, "NARRATIVE takes <id> <n_phrases>")
        self.narrative_id = args[0]
        self.n_phrases = self._int(args[1], lineno, "n_phrases")

    def _on_subjects(self, lineno: int, args: list[str]) -> None:
        if self.subject_count is not None:
            raise self.fail(lineno, "duplicate SUBJECTS record")
        if len(args) < 1:
            raise self.fail(lineno, "SUBJECTS takes <count> followed by one integer per site")
        self.subject_count = self._int(args[0], lineno, "subject count")
        if self.subject_count < 1:
            raise self.fail(lineno, "subject count must be at least 1")
        self.counts = [self._int(a, lineno, "subject count") for a in args[1:]]
        self._in_counts = True

    def _on_subject(self, lineno: int, args: list[str]) -> None:
        if not args:
            raise self.fail(lineno, "SUBJECT takes <label> [<site> ...]")
        sites = frozenset(self._int(a, lineno, "site index") for a in args[1:])
        self.subject_marks.append((args[0], sites))

    def _on_clause(self, lineno: int, args: list[str]) -> None:
        if len(args) != 4:
            raise self.fail(lineno, "CLAUSE takes <j> <start_phrase> <coref:+|-> <infer:+|->")
        self._close_clause()
        index = self._int(args[0], lineno, "clause index")
        start = self._int(args[1], lineno, "start phrase")
        expected = len(self.clauses) + 1
        if index != expected:
            raise self.fail(lineno, f"clause index {index} out of sequence, expected {expected}")
        if self.clauses and start < self.clauses[-1].start_phrase:
            raise self.fail(lineno, f"clause {index} starts before clause {index - 1}")
        if self.n_phrases is not None and not 1 <= start <= self.n_phrases:
            raise self.fail(lineno, f"clause {index} start phrase {start} outside 1..{self.n_phrases}")
        self.clauses.append(
            ClauseAnnotation(
                clause_index=index,
                start_phrase=start,
                coref=self._polarity(args[2], lineno, "coref"),
                infer=self._polarity(args[3], lineno, "infer"),
            )
        )

    def _on_pronoun(self, lineno: int, args: list[str]) -> None:
        if not self.clauses:
            raise self.fail(lineno, "PRONOUN must follow a CLAUSE record")
        if len(args) != 2:
            raise self.fail(lineno, "PRONOUN takes <token> <antecedent_clause|NONE>")
        clause_index = self.clauses[-1].clause_index
        antecedent = None
        if args[1] != "NONE":
            antecedent = self._int(args[1], lineno, "antecedent clause")
            if not 1 <= antecedent < clause_index:
                raise self.fail(
                    lineno, f"antecedent clause {antecedent} must precede clause {clause_index}"
                )
        self._pronouns.append(Pronoun(args[0], antecedent))

    def finish(self) -> AnnotationSet:
        self._close_clause()
        if self.narrative_id is None:
            raise self.fail(None, "missing NARRATIVE record")
        if self.subject_count is None:
            raise self.fail(None, "missing SUBJECTS record")
        return AnnotationSet(
            narrative_id=self.narrative_id,
            n_phrases=self.n_phrases,
            clauses=tuple(self.clauses),
            subjects=self._subjects(),
        )

    def _subjects(self) -> SubjectAnnotation:
        n_sites = self.n_phrases - 1
        per_subject = None
        derived = None
        if self.subject_marks:
            if len(self.subject_marks) != self.subject_count:
                raise self.fail(
                    None, f"{len(self.subject_marks)} SUBJECT records for {self.subject_count} subjects"
                )
            for label, sites in self.subject_marks:
                bad = sorted(s for s in sites if not 1 <= s <= n_sites)
                if bad:
                    raise self.fail(None, f"subject {label} marks sites {bad} outside 1..{n_sites}")
            per_subject = tuple(self.subject_marks)
            derived = [sum(1 for _, sites in per_subject if s in sites) for s in range(1, n_sites + 1)]

        counts = self.counts or derived
        if counts is None:
            raise self.fail(None, "SUBJECTS record has no per-site counts and no SUBJECT records")
        if len(counts) != n_sites:
            raise self.fail(None, f"{len(counts)} subject counts for {n_sites} boundary sites")
        for site, count in enumerate(counts, start=1):
            if not 0 <= count <= self.subject_count:
                raise self.fail(None, f"site {site}: {count} marks with {self.subject_count} subjects")
        if derived is not None and list(counts) != derived:
            raise self.fail(None, "per-site counts disagree with the SUBJECT records")
        return SubjectAnnotation(self.subject_count, tuple(counts), per_subject)


def read_annotations(source, *, source_name: str = "<annotations>") -> AnnotationSet:
    """Read a sidecar without cross-checking it against a transcript."""
    reader = _SidecarReader(source_name)
    for lineno, raw in enumerate(_lines_of(source), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            reader.feed(lineno, line)
    return reader.finish()


def parse_annotations(
    source,
    n_phrases: int,
    *,
    source_name: str = "<annotations>",
    narrative_id: Optional[str] = None,
) -> tuple[list[ClauseAnnotation], SubjectAnnotation]:
    """Parse and validate a sidecar against the transcript it annotates.

    Args:
        source: Sidecar text, bytes, stream or line iterable.
        n_phrases: Number of phrases in the parsed transcript.
        source_name: Name used in error messages.
        narrative_id: When given, the sidecar must declare this id.

    Returns:
        ``(clauses, subjects)``.

    Raises:
        AnnotationError: On malformed records, length mismatches,
            out-of-range indices or marks exceeding the subject count.
    """
    annotations = read_annotations(source, source_name=source_name)
    if annotations.n_phrases != n_phrases:
        raise AnnotationError(
            source_name, None, f"coded against {annotations.n_phrases} phrases, transcript has {n_phrases}"
        )
    if narrative_id is not None and annotations.narrative_id != narrative_id:
        raise AnnotationError(
            source_name, None, f"declares narrative {annotations.narrative_id!r}, expected {narrative_id!r}"
        )
    return list(annotations.clauses), annotations.subjects


def emit_annotations(narrative: Narrative) -> str:
    """Render a narrative's hand coding in the sidecar grammar."""
    subjects = narrative.subjects
    lines = [
        f"NARRATIVE {narrative.id} {len(narrative.phrases)}",
        f"SUBJECTS {subjects.subject_count}",
        " ".join(str(c) for c in subjects.marks_per_site),
    ]
    for label, sites in subjects.subject_marks or ():
        lines.append(" ".join(["SUBJECT", label, *(str(s) for s in sorted(sites))]))
    for clause in narrative.clauses:
        coref = "+" if clause.coref else "-"
        infer = "+" if clause.infer else "-"
        lines.append(f"CLAUSE {clause.clause_index} {clause.start_phrase} {coref} {infer}")
        for pronoun in clause.pronouns:
            antecedent = "NONE" if pronoun.antecedent is None else str(pronoun.antecedent)
            lines.append(f"PRONOUN {pronoun.token} {antecedent}")
    return "\n".join(lines) + "\n"


# --- corpus directories ------------------------------------------------------


def load_narrative(transcript: Path, annotations: Path, mode: ParseMode = "strict") -> Narrative:
    """Load one transcript and its sidecar into a validated ``Narrative``."""
    transcript, annotations = Path(transcript), Path(annotations)
    phrases = parse_transcript(transcript.read_text(encoding="utf-8"), mode, source_name=str(transcript))
    clauses, subjects = parse_annotations(
        annotations.read_text(encoding="utf-8"),
        len(phrases),
        source_name=str(annotations),
        narrative_id=transcript.stem,
    )
    return Narrative(id=transcript.stem, phrases=tuple(phrases), clauses=tuple(clauses), subjects=subjects)


def load_corpus(root: Path, ids: Optional[Sequence[str]] = None, mode: ParseMode = "strict") -> list[Narrative]:
    """Load every ``<id>.txt``/``<id>.ann`` pair under ``root``.

    Args:
        root: Corpus directory.
        ids: Restrict (and order) the narratives to these ids.  ``None``
            loads every transcript, sorted by id.
        mode: Transcript parse mode.

    Raises:
        AnnotationError: If a transcript has no sidecar, or a requested id
            has no transcript.
    """
    root = Path(root)
    available = {p.stem: p for p in sorted(root.glob(f"*{TRANSCRIPT_SUFFIX}"))}
    wanted = list(ids) if ids is not None else sorted(available)
    narratives = []
    for narrative_id in wanted:
        transcript = available.get(narrative_id)
        if transcript is None:
            raise AnnotationError(str(root), None, f"no transcript for narrative {narrative_id!r}")
        sidecar = transcript.with_suffix(ANNOTATION_SUFFIX)
        if not sidecar.exists():
            raise AnnotationError(str(sidecar), None, "missing annotation sidecar")
        narratives.append(load_narrative(transcript, sidecar, mode))
    logger.info("Loaded %d narratives from %s", len(narratives), root)
    return narratives


def write_narrative(narrative: Narrative, root: Path) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / f"{narrative.id}{TRANSCRIPT_SUFFIX}").write_text(emit_transcript(narrative), encoding="utf-8")
    (root / f"{narrative.id}{ANNOTATION_SUFFIX}").write_text(emit_annotations(narrative), encoding="utf-8")
