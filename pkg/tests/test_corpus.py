"""Tests for transcript and sidecar parsing."""

import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pico_discourse.corpus import (
    ClauseAnnotation,
    Contour,
    Narrative,
    ProsodicPhrase,
    Pronoun,
    SubjectAnnotation,
    emit_annotations,
    emit_phrases,
    emit_transcript,
    format_seconds,
    load_corpus,
    parse_annotations,
    parse_transcript,
    read_annotations,
    write_narrative,
)
from pico_discourse.exceptions import AnnotationError, TranscriptParseError
from pico_discourse.synthetic import GeneratorSettings, generate_corpus
from tests.conftest import EXCERPT_ANNOTATIONS, EXCERPT_TRANSCRIPT

OPENING_WORDS = ["he", "the", "girl", "A-nd", "uh", "there's", "so", "falls"]
INNER_WORDS = OPENING_WORDS + ["[.45]]", "..", "[1.2]", "um...", "café"]
CONTOURS = {".": Contour.SENTENCE_FINAL, "?": Contour.SENTENCE_FINAL, ",": Contour.NON_SENTENCE_FINAL}


@st.composite
def phrase_lists(draw):
    """Random well-formed phrases, with internal pauses and breaks in the text."""
    phrases = []
    for index in range(1, draw(st.integers(min_value=1, max_value=8)) + 1):
        words = [draw(st.sampled_from(OPENING_WORDS))] + draw(st.lists(st.sampled_from(INNER_WORDS), max_size=6))
        pause = draw(st.none() | st.integers(min_value=1, max_value=400).map(lambda n: n / 100))
        terminator = draw(st.sampled_from(sorted(CONTOURS)))
        phrases.append(
            ProsodicPhrase(index, " ".join(words), pause, draw(st.booleans()), CONTOURS[terminator], terminator)
        )
    return phrases



class TestParseTranscript:
    """Tests for the Chafe-convention transcript parser."""

    def test_excerpt_phrases(self):
        """Pauses, short breaks and contours are read from each line."""
        phrases = parse_transcript(EXCERPT_TRANSCRIPT)

        assert len(phrases) == 8
        first = phrases[0]
        assert first.text == "Because he's looking at the girl"
        assert first.initial_short_break is True
        assert first.initial_pause is None
        assert first.final_contour is Contour.SENTENCE_FINAL
        assert phrases[1].initial_pause == 0.75
        assert phrases[1].text == "Falls over"
        assert phrases[1].final_contour is Contour.NON_SENTENCE_FINAL
        assert phrases[2].initial_pause == 1.35
        assert [p.index for p in phrases] == list(range(1, 9))

    def test_internal_short_break_stays_in_text(self):
        """Only a leading '..' is a short break; internal ones are text."""
        phrases = parse_transcript(EXCERPT_TRANSCRIPT)

        assert phrases[6].text == "but there.. the humans beings in it don't say anything"
        assert phrases[6].initial_short_break is False

    def test_question_mark_is_sentence_final(self):
        """'?' codes the same contour as '.'."""
        (phrase,) = parse_transcript("[2.1] where was I?")

        assert phrase.sentence_final
        assert phrase.terminator == "?"
        assert phrase == ProsodicPhrase(1, "where was I", 2.1, False, Contour.SENTENCE_FINAL, ".")

    def test_uncertain_pause_value(self):
        """A '?' inside the pause bracket is accepted."""
        (phrase,) = parse_transcript("[.55?] and then,")

        assert phrase.initial_pause == 0.55

    def test_uncertain_pause_without_closing_bracket(self):
        """'[.55?' with no closing bracket still opens the phrase with a pause."""
        (phrase,) = parse_transcript("[.55? because [.45]] you know,")

        assert phrase.initial_pause == 0.55
        assert phrase.text == "because [.45]] you know"
        assert phrase.final_contour is Contour.NON_SENTENCE_FINAL

    def test_unbounded_pause_rejected(self):
        """A pause too long to be a finite number is malformed."""
        line = "[" + "9" * 400 + "] so."

        with pytest.raises(TranscriptParseError, match="malformed pause"):
            parse_transcript(line)
        (phrase,) = parse_transcript(line, mode="lenient")
        assert phrase.initial_pause is None

    def test_blank_lines_are_skipped(self):
        """Blank lines do not produce phrases or shift indices."""
        phrases = parse_transcript("one.\n\n  \ntwo,\n")

        assert [(p.index, p.text) for p in phrases] == [(1, "one"), (2, "two")]

    def test_strict_mode_rejects_missing_terminator(self):
        """Strict mode fails with the line number of the bad line."""
        with pytest.raises(TranscriptParseError) as info:
            parse_transcript("fine.\nno terminator here\n", source_name="n01.txt")

        assert info.value.line == 2
        assert info.value.source == "n01.txt"

    def test_strict_mode_rejects_malformed_pause(self):
        """An opening bracket that is not a pause is an error in strict mode."""
        with pytest.raises(TranscriptParseError, match="malformed pause"):
            parse_transcript("[laughs] and so.")

    def test_lenient_mode_recovers_with_warning(self, caplog):
        """Lenient mode logs a warning and treats the line as non-final."""
        with caplog.at_level(logging.WARNING, logger="pico_discourse.corpus"):
            phrases = parse_transcript("fine.\nno terminator here\n[laughs] so.", mode="lenient")

        assert phrases[1].final_contour is Contour.NON_SENTENCE_FINAL
        assert phrases[1].text == "no terminator here"
        assert phrases[2].text == "[laughs] so"
        assert phrases[2].initial_pause is None
        assert len([r for r in caplog.records if r.levelno == logging.WARNING]) == 2

    def test_unknown_mode_rejected(self):
        """Only strict and lenient modes exist."""
        with pytest.raises(ValueError):
            parse_transcript("one.", mode="sloppy")

    def test_bytes_input(self):
        """Bytes are decoded as UTF-8."""
        phrases = parse_transcript("café time.\n".encode("utf-8"))

        assert phrases[0].text == "café time"

    def test_emit_then_parse_preserves_fields(self):
        """Re-parsing an emitted transcript reproduces every phrase."""
        phrases = parse_transcript(EXCERPT_TRANSCRIPT)
        narrative = Narrative(
            "excerpt",
            tuple(phrases),
            (),
            SubjectAnnotation(7, (0,) * 7),
        )

        assert parse_transcript(emit_transcript(narrative)) == phrases

    @settings(max_examples=200)
    @given(phrase_lists())
    def test_emit_then_parse_random_phrases(self, phrases):
        """Any well-formed phrase list survives emitting and re-parsing."""
        assert parse_transcript(emit_phrases(phrases)) == phrases

    @given(st.lists(st.text(max_size=40), max_size=20))
    def test_lenient_mode_never_raises(self, lines):
        """Any text parses in lenient mode."""
        phrases = parse_transcript("\n".join(lines), mode="lenient")

        assert all(p.index == i for i, p in enumerate(phrases, start=1))


class TestParseAnnotations:
    """Tests for the annotation sidecar."""

    def test_excerpt_annotations(self):
        """Clauses, pronouns and subject marks are read."""
        clauses, subjects = parse_annotations(EXCERPT_ANNOTATIONS, 8)

        assert len(clauses) == 6
        assert clauses[1] == ClauseAnnotation(2, 2, coref=True, infer=False, pronouns=(Pronoun("ZERO", 1),))
        assert clauses[3].infer is True
        assert subjects.subject_count == 7
        assert subjects.marks_per_site == (1, 5, 0, 0, 0, 0, 7)
        assert dict(subjects.subject_marks)["S1"] == frozenset({1, 2, 7})

    def test_counts_derived_from_subject_records(self):
        """Per-site counts may be omitted when every subject is listed."""
        sidecar = "NARRATIVE x 4\nSUBJECTS 2\nSUBJECT A 1 3\nSUBJECT B 3\n"

        _, subjects = parse_annotations(sidecar, 4)

        assert subjects.marks_per_site == (1, 0, 2)

    def test_counts_disagreeing_with_subjects(self):
        """Explicit counts must match the subject records."""
        sidecar = "NARRATIVE x 4\nSUBJECTS 2 1 0 1\nSUBJECT A 1 3\nSUBJECT B 3\n"

        with pytest.raises(AnnotationError, match="disagree"):
            parse_annotations(sidecar, 4)

    def test_comments_are_ignored(self):
        """'#' starts a comment."""
        sidecar = "# coded by hand\nNARRATIVE x 3  # three phrases\nSUBJECTS 3 0 3\n"

        _, subjects = parse_annotations(sidecar, 3)

        assert subjects.marks_per_site == (0, 3)

    @pytest.mark.parametrize(
        "sidecar,message",
        [
            ("NARRATIVE x 3\nSUBJECTS 3 0 0\nBOUNDARY 1\n", "unknown record"),
            ("SUBJECTS 3 0 0\n", "must begin with a NARRATIVE"),
            ("NARRATIVE x 3\nSUBJECTS 3 0\n", "1 subject counts for 2"),
            ("NARRATIVE x 3\nSUBJECTS 3 0 4\n", "4 marks with 3 subjects"),
            ("NARRATIVE x 3\nSUBJECTS 3 0 0\nCLAUSE 1 1 - -\nPRONOUN he 1\n", "must precede clause 1"),
            ("NARRATIVE x 3\nSUBJECTS 3 0 0\nCLAUSE 2 1 - -\n", "out of sequence"),
            ("NARRATIVE x 3\nSUBJECTS 3 0 0\nCLAUSE 1 4 - -\n", "outside 1..3"),
            ("NARRATIVE x 3\nSUBJECTS 3 0 0\nCLAUSE 1 1 yes -\n", "coref must be"),
            ("NARRATIVE x 3\n", "missing SUBJECTS"),
        ],
    )
    def test_malformed_sidecars(self, sidecar, message):
        """Malformed records raise AnnotationError with a clear message."""
        with pytest.raises(AnnotationError, match=message):
            parse_annotations(sidecar, 3)

    def test_phrase_count_mismatch(self):
        """The sidecar must be coded against the same number of phrases."""
        with pytest.raises(AnnotationError, match="transcript has 9"):
            parse_annotations(EXCERPT_ANNOTATIONS, 9)

    def test_narrative_id_mismatch(self):
        """A sidecar for another narrative is rejected."""
        with pytest.raises(AnnotationError, match="expected 'other'"):
            parse_annotations(EXCERPT_ANNOTATIONS, 8, narrative_id="other")

    def test_emit_then_read(self, excerpt):
        """Emitted sidecars read back to the same annotations."""
        annotations = read_annotations(emit_annotations(excerpt))

        assert annotations.narrative_id == "excerpt"
        assert annotations.clauses == excerpt.clauses
        assert annotations.subjects == excerpt.subjects


class TestNarrative:
    """Tests for narrative validation."""

    def test_site_count(self, excerpt):
        """A narrative of n phrases has n - 1 sites."""
        assert excerpt.site_count == 7
        assert list(excerpt.sites()) == list(range(1, 8))
        assert excerpt.phrase(8).text == "He falls over"

    def test_single_phrase_rejected(self):
        """At least two phrases are needed."""
        (phrase,) = parse_transcript("alone.")

        with pytest.raises(TranscriptParseError):
            Narrative("solo", (phrase,), (), SubjectAnnotation(1, ()))


class TestCorpusDirectory:
    """Tests for loading and writing corpus directories."""

    def test_load_corpus(self, corpus_dir, excerpt):
        """Transcripts and sidecars are paired by id."""
        (narrative,) = load_corpus(corpus_dir)

        assert narrative == excerpt

    def test_empty_directory(self, tmp_path):
        """An empty directory holds no narratives."""
        assert load_corpus(tmp_path) == []

    def test_missing_sidecar(self, corpus_dir):
        """A transcript without a sidecar is an annotation error."""
        (corpus_dir / "excerpt.ann").unlink()

        with pytest.raises(AnnotationError, match="missing annotation sidecar"):
            load_corpus(corpus_dir)

    def test_unknown_id(self, corpus_dir):
        """Requesting an id with no transcript fails."""
        with pytest.raises(AnnotationError, match="no transcript"):
            load_corpus(corpus_dir, ["n99"])

    def test_written_narrative_loads_back(self, tmp_path):
        """A generated narrative survives a write and reload unchanged."""
        (narrative,) = generate_corpus(GeneratorSettings(sizes=(30,), seed=4))

        write_narrative(narrative, tmp_path)

        assert load_corpus(tmp_path) == [narrative]


class TestFormatSeconds:
    """Tests for pause rendering."""

    @pytest.mark.parametrize("value,text", [(0.75, "0.75"), (1.0, "1.0"), (1e-07, "0.0000001"), (12.5, "12.5")])
    def test_positional_notation(self, value, text):
        """Durations never use exponent notation."""
        assert format_seconds(value) == text
