"""Synthetic corpora with a planted segmentation rule.

Generated narratives carry the full hand coding: prosodic phrases with
pauses drawn from a fixed grid, functionally independent clauses with
random NP judgments and pronouns, and per-subject boundary marks whose
majority vote at threshold ``T`` reproduces the planted rule exactly
(before optional label noise).  They exist so the learner, the segmenters
and the experiment pipeline can be exercised at realistic scale without a
hand-annotated corpus.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .coder import DEFAULT_THRESHOLD, SFC, CueLexicon, Label, ProsodyFeatures, code_prosody
from .corpus import ClauseAnnotation, Contour, Narrative, ProsodicPhrase, Pronoun, SubjectAnnotation
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

PlantedRule = Literal["sfc-pause", "sfc-pause-duration"]
PLANTED_RULES: tuple[str, ...] = ("sfc-pause", "sfc-pause-duration")

# Phrase counts of ten narratives; together they have 1004 boundary sites.
TRAINING_NARRATIVE_SIZES: tuple[int, ...] = (51, 162, 87, 95, 110, 74, 120, 98, 105, 112)
PAUSE_GRID: tuple[float, ...] = (0.3, 0.45, 0.6, 0.75, 1.0, 1.35)
DURATION_CUTOFF = 0.6

_FILLER = (
    "there", "is", "a", "man", "picking", "pears", "bicycle", "basket", "kid", "rides",
    "past", "hat", "goat", "falls", "down", "ladder", "tree", "over", "they", "walk",
    "away", "road", "three", "kids", "help", "him", "up", "his", "with", "gets",
)  # fmt: skip
_PRONOUNS = ("he", "she", "it", "they", "him", "ZERO")


@dataclass(frozen=True)
class GeneratorSettings:
    """Knobs of :func:`generate_corpus`.

    Attributes:
        rule: The planted boundary rule.
        sizes: Phrase count of each narrative.
        seed: Seed of the random generator; equal seeds give equal corpora.
        n_subjects: Simulated subjects per narrative.
        threshold: Agreement threshold the subject marks are built for.
        cue_rate: Probability that a phrase opens with a cue word.
        noise: Probability of flipping a planted label before subjects
            are simulated.
        pause_rate: Probability that a phrase opens with a measured pause.
        sentence_final_rate: Probability of sentence-final intonation.
    """

    rule: PlantedRule = "sfc-pause-duration"
    sizes: tuple[int, ...] = TRAINING_NARRATIVE_SIZES
    seed: int = 0
    n_subjects: int = 7
    threshold: int = DEFAULT_THRESHOLD
    cue_rate: float = 0.15
    noise: float = 0.0
    pause_rate: float = 0.5
    sentence_final_rate: float = 0.45

    def __post_init__(self):
        if self.rule not in PLANTED_RULES:
            raise ConfigError(f"unknown planted rule {self.rule!r}; expected one of {', '.join(PLANTED_RULES)}")
        if not self.sizes or any(size < 2 for size in self.sizes):
            raise ConfigError(f"every narrative needs at least 2 phrases, got sizes {list(self.sizes)}")
        if not 1 <= self.threshold <= self.n_subjects:
            raise ConfigError(f"threshold {self.threshold} outside 1..{self.n_subjects}")
        for name in ("cue_rate", "noise", "pause_rate", "sentence_final_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")


def planted_label(rule: PlantedRule, prosody: ProsodyFeatures) -> Label:
    """The class a planted rule assigns to a site."""
    boundary = prosody.before == SFC and prosody.pause
    if rule == "sfc-pause-duration":
        boundary = boundary and prosody.duration > DURATION_CUTOFF
    return Label.BOUNDARY if boundary else Label.NON_BOUNDARY


class _NarrativeGenerator:
    def __init__(self, settings: GeneratorSettings, lexicon: CueLexicon, index: int):
        self.settings = settings
        self.cue_words = sorted(lexicon.words)
        self.rng = np.random.default_rng([settings.seed, index])
        self.id = f"syn{index:02d}"

    def _word(self, pool: Sequence[str]) -> str:
        return str(pool[int(self.rng.integers(len(pool)))])

    def _text(self) -> str:
        words = [self._word(_FILLER) for _ in range(int(self.rng.integers(2, 7)))]
        if self.rng.random() < self.settings.cue_rate:
            opening = [self._word(self.cue_words)]
            if self.rng.random() < 0.3:
                opening.append(self._word(self.cue_words))
            words = opening + words
        return " ".join(words)

    def _phrase(self, index: int) -> ProsodicPhrase:
        pause = None
        if index > 1 and self.rng.random() < self.settings.pause_rate:
            pause = PAUSE_GRID[int(self.rng.integers(len(PAUSE_GRID)))]
        short_break = pause is None and self.rng.random() < 0.1
        sentence_final = self.rng.random() < self.settings.sentence_final_rate
        return ProsodicPhrase(
            index=index,
            text=self._text(),
            initial_pause=pause,
            initial_short_break=short_break,
            final_contour=Contour.SENTENCE_FINAL if sentence_final else Contour.NON_SENTENCE_FINAL,
            terminator="." if sentence_final else ",",
        )

    def _clauses(self, n_phrases: int) -> tuple[ClauseAnnotation, ...]:
        clauses = []
        for phrase in range(1, n_phrases + 1):
            if phrase > 1 and self.rng.random() >= 0.6:
                continue
            j = len(clauses) + 1
            pronouns = []
            for _ in range(int(self.rng.integers(0, 3))):
                antecedent = int(self.rng.integers(1, j)) if j > 1 and self.rng.random() < 0.8 else None
                pronouns.append(Pronoun(self._word(_PRONOUNS), antecedent))
            clauses.append(
                ClauseAnnotation(
                    clause_index=j,
                    start_phrase=phrase,
                    coref=j > 1 and bool(self.rng.random() < 0.5),
                    infer=j > 1 and bool(self.rng.random() < 0.3),
                    pronouns=tuple(pronouns),
                )
            )
        return tuple(clauses)

    def _subjects(self, labels: Sequence[Label]) -> SubjectAnnotation:
        count, threshold = self.settings.n_subjects, self.settings.threshold
        marked: list[set[int]] = [set() for _ in range(count)]
        per_site = []
        for site, label in enumerate(labels, start=1):
            if label == Label.BOUNDARY:
                k = int(self.rng.integers(threshold, count + 1))
            else:
                k = int(self.rng.integers(0, threshold))
            for subject in self.rng.choice(count, size=k, replace=False):
                marked[int(subject)].add(site)
            per_site.append(k)
        subject_marks = tuple((f"S{i + 1}", frozenset(sites)) for i, sites in enumerate(marked))
        return SubjectAnnotation(count, tuple(per_site), subject_marks)

    def generate(self, n_phrases: int) -> Narrative:
        phrases = tuple(self._phrase(i) for i in range(1, n_phrases + 1))
        labels = []
        for site in range(1, n_phrases):
            label = planted_label(self.settings.rule, code_prosody(phrases[site - 1], phrases[site]))
            if self.rng.random() < self.settings.noise:
                label = Label.NON_BOUNDARY if label == Label.BOUNDARY else Label.BOUNDARY
            labels.append(label)
        return Narrative(self.id, phrases, self._clauses(n_phrases), self._subjects(labels))


def generate_corpus(
    settings: Optional[GeneratorSettings] = None, lexicon: Optional[CueLexicon] = None
) -> list[Narrative]:
    """Generate one narrative per entry of ``settings.sizes``, ids ``syn01``, ``syn02``, ..."""
    settings = settings or GeneratorSettings()
    lexicon = lexicon or CueLexicon.default()
    narratives = [
        _NarrativeGenerator(settings, lexicon, index).generate(size)
        for index, size in enumerate(settings.sizes, start=1)
    ]
    logger.info(
        "Generated %d narratives (%d sites) with planted rule %s",
        len(narratives),
        sum(n.site_count for n in narratives),
        settings.rule,
    )
    return narratives
