"""Custom exceptions for pico-discourse.

All pico-discourse exceptions inherit from :class:`PicoDiscourseError`,
allowing callers to catch the base class at command boundaries.  The CLI
maps each subclass to its own exit status.
"""

from typing import Optional


class PicoDiscourseError(Exception):
    """Base exception for all pico-discourse errors.

    Catch this at command boundaries to handle any toolkit failure without
    matching individual subclasses.

    Example:
        .. code-block:: python

            try:
                narratives = load_corpus("corpus/")
            except PicoDiscourseError as exc:
                logger.error("corpus could not be loaded: %s", exc)
                raise
    """


class ConfigError(PicoDiscourseError):
    """Raised when experiment settings are invalid.

    Causes:
        - A settings field holds a value outside its allowed set
          (e.g. ``global_pro_mode: sometimes``).
        - Train and test narrative id lists overlap.
        - A referenced corpus directory, lexicon or tree file does not exist.
    """


class _LocatedError(PicoDiscourseError):
    def __init__(self, source: str, line: Optional[int], message: str):
        self.source = source
        self.line = line
        self.message = message
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class TranscriptParseError(_LocatedError):
    """Raised when a transcript line cannot be parsed in strict mode.

    The error carries the transcript name and the 1-based line number.

    Causes:
        - The line does not end in ``.``, ``?`` or ``,``.
        - The line opens a pause bracket that is not a well-formed ``[X]``.

    Example:
        .. code-block:: python

            try:
                phrases = parse_transcript(stream, mode="strict")
            except TranscriptParseError as exc:
                print(exc.source, exc.line, exc.message)
    """


class AnnotationError(_LocatedError):
    """Raised when an annotation sidecar is malformed or inconsistent.

    Causes:
        - Unknown record keyword or wrong field count.
        - Site-count or phrase-count mismatch against the transcript.
        - Out-of-range phrase, clause or antecedent indices.
        - Boundary marks exceeding the declared subject count.
    """


class SchemaError(PicoDiscourseError):
    """Raised when feature values or tree files do not fit the feature schema.

    Causes:
        - A site record carries a value outside a feature's declared domain
          and the tree has no default branch for it.
        - A tree file (text or structured) is malformed.
        - A feature table has missing or unknown columns.
    """


class EvaluationError(PicoDiscourseError):
    """Raised when scoring or cross-validation cannot proceed.

    Causes:
        - Predicted and gold label sequences differ in length.
        - Metrics requested on an all-zero confusion table.
        - Aggregation over zero narratives.
        - Fold construction impossible (``k < 2`` or ``k`` above the
          narrative count) or a narrative with no sites.
        - Human performance requested without per-subject marks.
    """


class InductionError(PicoDiscourseError):
    """Raised when the tree learner receives unusable input.

    Causes:
        - An empty training set.
        - Entropy requested for an all-zero class distribution.
        - A candidate split whose value groups do not cover the records.
        - Learner options outside their allowed range.
    """
