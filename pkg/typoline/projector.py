"""
Tag projection from the tagged pivot verse onto source-language words.

Each source subword takes the tag of the pivot word its Viterbi link points
to (a NULL link gives the unaligned tag); the subword tags of a word are then
gathered back onto the word by majority, ties going to the earliest subword.
"""
import logging
from collections import Counter
from enum import Enum
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from typoline.aligner import AlignmentModel, content_pair, viterbi_align
from typoline.base_stage import BaseStage
from typoline.errors import EmptyVerse
from typoline.models import Corpus, PosTag, RawVerse, TaggedVerse, is_punctuation
from typoline.subword import BpeModel, SubwordToken, decode, encode


class Aggregation(str, Enum):
    MAJORITY_THEN_FIRST = "MajorityThenFirst"


class ProjectionConfig(BaseModel):
    """Options of the tag projection"""
    model_config = ConfigDict(frozen=True)

    unaligned_tag: PosTag = Field(PosTag.X, description="Tag given to subwords linked to NULL")
    aggregation: Aggregation = Aggregation.MAJORITY_THEN_FIRST


class ProjectionResult(BaseModel):
    """A projected corpus plus the verses that could not be projected"""
    model_config = ConfigDict(frozen=True)

    corpus: Corpus
    projected: int = Field(..., ge=0)
    skipped: List[str] = Field(default_factory=list, description="Requested IDs missing on either side")


def aggregate_tags(tags: Sequence[PosTag]) -> PosTag:
    """Majority tag; on a tie the tag of the earliest subword among the tied ones"""
    counts = Counter(tags)
    best = max(counts.values())
    for tag in tags:
        if counts[tag] == best:
            return tag
    raise ValueError("no tags to aggregate")


def project_verse(model: AlignmentModel,
                  source_subwords: Sequence[SubwordToken],
                  pivot: TaggedVerse,
                  cfg: Optional[ProjectionConfig] = None,
                  bpe: Optional[BpeModel] = None) -> TaggedVerse:
    """
    Tag the words of one source verse through its Viterbi alignment.

    Args:
        model (AlignmentModel): Trained aligner
        source_subwords (Sequence[SubwordToken]): Output of encode() for the source verse
        pivot (TaggedVerse): Tagged pivot verse with the same ID
        cfg (ProjectionConfig): Projection options
        bpe (BpeModel): Tokenizer used to produce the subwords (only its marker is needed)

    Returns:
        TaggedVerse: Source words with one tag each, in word order

    Raises:
        EmptyVerse: If there are no subwords
    """
    cfg = cfg or ProjectionConfig()
    if not source_subwords:
        raise EmptyVerse(pivot.id)

    words = decode(bpe, source_subwords)
    word_slot = {}
    slots = [word_slot.setdefault(token.word_index, len(word_slot)) for token in source_subwords]
    # Punctuation-only words on either side stay out of the alignment
    subword_tags = [cfg.unaligned_tag] * len(source_subwords)
    content = content_pair(
        [token.piece for token in source_subwords],
        [is_punctuation(words[slot]) for slot in slots],
        pivot.tokens,
    )
    if content is not None:
        pair, source_positions, target_positions = content
        pivot_tags = pivot.tags
        for j, link in zip(source_positions, viterbi_align(model, pair).links):
            if link > 0:
                subword_tags[j] = pivot_tags[target_positions[link - 1]]

    tags_per_word: List[List[PosTag]] = [[] for _ in words]
    for slot, tag in zip(slots, subword_tags):
        tags_per_word[slot].append(tag)

    entries = []
    for word, tags in zip(words, tags_per_word):
        if is_punctuation(word):
            entries.append((word, PosTag.PUNCT))
        else:
            entries.append((word, aggregate_tags(tags)))
    return TaggedVerse(id=pivot.id, entries=entries)


def project_corpus(model: AlignmentModel,
                   source: Corpus,
                   bpe: BpeModel,
                   pivot: Corpus,
                   ids: Sequence[str],
                   cfg: Optional[ProjectionConfig] = None) -> ProjectionResult:
    """
    Project tags onto every requested verse present in both corpora.

    Args:
        model (AlignmentModel): Trained aligner
        source (Corpus): Raw source-language corpus
        bpe (BpeModel): The source language's tokenizer
        pivot (Corpus): Tagged pivot corpus
        ids (Sequence[str]): Verses to project
        cfg (ProjectionConfig): Projection options

    Returns:
        ProjectionResult: Tagged corpus in verse-ID order plus skipped IDs
    """
    cfg = cfg or ProjectionConfig()
    verses = []
    skipped = []
    for verse_id in ids:
        verse = source.verses.get(verse_id)
        pivot_verse = pivot.verses.get(verse_id)
        if not isinstance(verse, RawVerse) or not isinstance(pivot_verse, TaggedVerse):
            skipped.append(verse_id)
            continue
        verses.append(project_verse(model, encode(bpe, verse), pivot_verse, cfg, bpe))
    return ProjectionResult(
        corpus=Corpus.from_verses(source.language, verses),
        projected=len(verses),
        skipped=skipped,
    )


class ProjectorStage(BaseStage):
    """Stage tagging one language's verses through its aligner"""

    def __init__(self, language: str, cfg: Optional[ProjectionConfig] = None):
        super().__init__(f"Projector[{language}]")
        self.cfg = cfg or ProjectionConfig()

    def run(self, model, source, bpe, pivot, ids) -> ProjectionResult:
        result = project_corpus(model, source, bpe, pivot, ids, self.cfg)
        self.log(f"Projected {result.projected} verses, skipped {len(result.skipped)}")
        if result.skipped:
            self.log(f"Skipped verses: {' '.join(result.skipped[:10])}{' ...' if len(result.skipped) > 10 else ''}",
                     level=logging.DEBUG)
        return result
