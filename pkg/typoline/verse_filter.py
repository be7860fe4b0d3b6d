"""
Two-stage under-sampling of the parallel verses used for alignment training.

Stage one keeps verses whose lemmas in two English translations overlap by at
least ``min_shared``; stage two keeps the survivors that contain a VERB lemma
attested in at least ``min_other`` other surviving verses.
"""
import unicodedata
from collections import Counter
from typing import Dict, List, Mapping, Set

from pydantic import BaseModel, ConfigDict, Field, model_validator

from typoline.base_stage import BaseStage
from typoline.corpus import iter_records
from typoline.errors import MissingVerse
from typoline.models import Corpus, PosTag


def normalize_lemma(lemma: str) -> str:
    return unicodedata.normalize("NFC", lemma).casefold()


class LemmaVerse(BaseModel):
    """Lemmas of one verse in one English translation"""
    model_config = ConfigDict(frozen=True)

    id: str
    lemmas: Set[str] = Field(default_factory=set)


class FilterReport(BaseModel):
    """Verse counts after each filtering stage"""
    model_config = ConfigDict(frozen=True)

    input_count: int = Field(..., ge=0, description="verses present in both lemma files")
    after_lemma_overlap: int = Field(..., ge=0)
    after_verb_support: int = Field(..., ge=0)
    selected: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_counts(self) -> "FilterReport":
        if not self.input_count >= self.after_lemma_overlap >= self.after_verb_support == len(self.selected):
            raise ValueError("filter counts must be non-increasing and match the selection")
        return self

    def to_tsv(self) -> str:
        return (
            "# stage\tverses\n"
            f"input\t{self.input_count}\n"
            f"lemma_overlap\t{self.after_lemma_overlap}\n"
            f"verb_support\t{self.after_verb_support}\n"
        )


def parse_lemma_file(text: str) -> Dict[str, LemmaVerse]:
    """
    Parse ``ID<TAB>lemma lemma ...`` lines; a verse may list no lemmas.

    Returns:
        Dict[str, LemmaVerse]: Lemma sets keyed by verse ID (NFC, case-folded)
    """
    verses = {}
    for _, verse_id, units in iter_records(text, allow_empty=True):
        verses[verse_id] = LemmaVerse(id=verse_id, lemmas={normalize_lemma(unit) for unit in units})
    return verses


def parse_lemma_map(text: str) -> Dict[str, str]:
    """Parse ``form<TAB>lemma`` lines into a form-to-lemma map"""
    lemma_of = {}
    for line in unicodedata.normalize("NFC", text).splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        form, _, lemma = line.partition("\t")
        if form and lemma.strip():
            lemma_of[form] = lemma.strip()
    return lemma_of


def lemma_overlap_filter(a: Mapping[str, LemmaVerse],
                         b: Mapping[str, LemmaVerse],
                         min_shared: int) -> List[str]:
    """
    Keep verses whose lemma sets in both translations share at least ``min_shared`` lemmas.

    Args:
        a (Mapping[str, LemmaVerse]): Lemmas of the first translation
        b (Mapping[str, LemmaVerse]): Lemmas of the second translation
        min_shared (int): Minimum size of the lemma intersection

    Returns:
        List[str]: Surviving verse IDs in verse-ID order
    """
    if min_shared < 0:
        raise ValueError(f"min_shared must be >= 0, got {min_shared}")
    kept = []
    for verse_id in sorted(set(a) & set(b)):
        if len(a[verse_id].lemmas & b[verse_id].lemmas) >= min_shared:
            kept.append(verse_id)
    return kept


def _verb_lemmas(pivot: Corpus, verse_id: str, lemma_of: Mapping[str, str]) -> Set[str]:
    verse = pivot.verses.get(verse_id)
    if verse is None:
        raise MissingVerse(verse_id)
    return {
        normalize_lemma(lemma_of.get(token, token))
        for token, tag in verse.entries
        if tag == PosTag.VERB
    }


def verb_support_filter(pivot: Corpus,
                        ids: List[str],
                        lemma_of: Mapping[str, str],
                        min_other: int) -> List[str]:
    """
    Keep verses containing a VERB lemma that also occurs in ``min_other`` other verses of ``ids``.

    Args:
        pivot (Corpus): Tagged pivot corpus
        ids (List[str]): Candidate verse IDs (stage-one survivors)
        lemma_of (Mapping[str, str]): Form-to-lemma map; unmapped forms are their own lemma
        min_other (int): Required number of other verses

    Returns:
        List[str]: Surviving IDs, input order preserved
    """
    if min_other < 0:
        raise ValueError(f"min_other must be >= 0, got {min_other}")
    verbs_by_verse = {verse_id: _verb_lemmas(pivot, verse_id, lemma_of) for verse_id in ids}
    # Verse frequency: each lemma counted once per verse
    frequency = Counter(lemma for lemmas in verbs_by_verse.values() for lemma in lemmas)
    return [
        verse_id for verse_id in ids
        if any(frequency[lemma] >= min_other + 1 for lemma in verbs_by_verse[verse_id])
    ]


def select_training_verses(a: Mapping[str, LemmaVerse],
                           b: Mapping[str, LemmaVerse],
                           pivot: Corpus,
                           lemma_of: Mapping[str, str],
                           min_shared: int = 4,
                           min_other: int = 5) -> FilterReport:
    """
    Apply the lemma-overlap filter then the verb-support filter.

    Returns:
        FilterReport: Counts after each stage and the selected IDs
    """
    overlap = lemma_overlap_filter(a, b, min_shared)
    selected = verb_support_filter(pivot, overlap, lemma_of, min_other)
    return FilterReport(
        input_count=len(set(a) & set(b)),
        after_lemma_overlap=len(overlap),
        after_verb_support=len(selected),
        selected=selected,
    )


class VerseFilterStage(BaseStage):
    """Stage selecting the verses used to train every language's aligner"""

    def __init__(self, min_shared: int = 4, min_other: int = 5):
        """
        Initialize the verse filter stage.

        Args:
            min_shared (int): Minimum shared lemmas between the two translations
            min_other (int): Minimum number of other verses attesting a verb lemma
        """
        super().__init__("VerseFilter")
        self.min_shared = min_shared
        self.min_other = min_other

    def run(self, a, b, pivot, lemma_of=None) -> FilterReport:
        self.log(f"Filtering {len(set(a) & set(b))} verses (min_shared={self.min_shared}, min_other={self.min_other})")
        report = select_training_verses(a, b, pivot, lemma_of or {}, self.min_shared, self.min_other)
        self.log(f"Lemma overlap kept {report.after_lemma_overlap}, verb support kept {report.after_verb_support}")
        return report
