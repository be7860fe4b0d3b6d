"""
Models for data structures shared by the pipeline stages.
"""
import re
from enum import Enum
from typing import Dict, FrozenSet, List, Tuple, Union

import regex
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

VERSE_ID_RE = re.compile(r"[0-9]{8}")
ISO_RE = re.compile(r"[a-z]{3}")
PUNCT_RE = regex.compile(r"\p{P}+")


def is_verse_id(value: str) -> bool:
    """Check that a string is an 8-character ASCII-digit verse ID"""
    return bool(VERSE_ID_RE.fullmatch(value))


def is_iso_code(value: str) -> bool:
    """Check that a string looks like an ISO 639-3 code"""
    return bool(ISO_RE.fullmatch(value))


def is_punctuation(token: str) -> bool:
    """True for tokens made only of Unicode punctuation"""
    return bool(PUNCT_RE.fullmatch(token))


def _has_whitespace(token: str) -> bool:
    return any(ch.isspace() for ch in token)


class PosTag(str, Enum):
    """The 17 Universal Dependencies part-of-speech tags"""
    # open classes
    ADJ = "ADJ"
    ADV = "ADV"
    INTJ = "INTJ"
    NOUN = "NOUN"
    PROPN = "PROPN"
    VERB = "VERB"
    # closed classes
    ADP = "ADP"
    AUX = "AUX"
    CCONJ = "CCONJ"
    DET = "DET"
    NUM = "NUM"
    PART = "PART"
    PRON = "PRON"
    SCONJ = "SCONJ"
    # other
    PUNCT = "PUNCT"
    SYM = "SYM"
    X = "X"


def parse_tag_set(text: str) -> FrozenSet[PosTag]:
    """
    Parse a comma-separated tag list such as ``NOUN,PROPN``.

    Raises:
        UnknownTag: If a name is not one of the 17 tags
    """
    from typoline.errors import UnknownTag

    tags = set()
    for name in text.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            tags.add(PosTag(name))
        except ValueError:
            raise UnknownTag(name) from None
    return frozenset(tags)


class WordOrderLabel(str, Enum):
    """Basic word-order classes as recorded in typological databases"""
    SV = "SV"
    VS = "VS"
    FREE = "FREE"
    UNK = "UNK"


class RawVerse(BaseModel):
    """An untagged verse: ID plus whitespace-free tokens"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., description="8-digit BBCCCVVV verse ID")
    tokens: List[str] = Field(..., min_length=1)

    @field_validator("id")
    @classmethod
    def _check_id(cls, value: str) -> str:
        if not is_verse_id(value):
            raise ValueError(f"invalid verse id {value!r}")
        return value

    @field_validator("tokens")
    @classmethod
    def _check_tokens(cls, tokens: List[str]) -> List[str]:
        for token in tokens:
            if not token or _has_whitespace(token):
                raise ValueError(f"token {token!r} is empty or contains whitespace")
        return tokens


class TaggedVerse(BaseModel):
    """A verse whose tokens each carry one POS tag"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., description="8-digit BBCCCVVV verse ID")
    entries: List[Tuple[str, PosTag]] = Field(..., min_length=1)

    @field_validator("id")
    @classmethod
    def _check_id(cls, value: str) -> str:
        if not is_verse_id(value):
            raise ValueError(f"invalid verse id {value!r}")
        return value

    @field_validator("entries")
    @classmethod
    def _check_entries(cls, entries: List[Tuple[str, PosTag]]) -> List[Tuple[str, PosTag]]:
        for token, _ in entries:
            if not token or _has_whitespace(token):
                raise ValueError(f"token {token!r} is empty or contains whitespace")
        return entries

    @property
    def tokens(self) -> List[str]:
        return [token for token, _ in self.entries]

    @property
    def tags(self) -> List[PosTag]:
        return [tag for _, tag in self.entries]


Verse = Union[RawVerse, TaggedVerse]


class Corpus(BaseModel):
    """All verses of one language, keyed and ordered by verse ID"""
    model_config = ConfigDict(frozen=True)

    language: str = Field(..., description="ISO 639-3 code")
    verses: Dict[str, Union[TaggedVerse, RawVerse]] = Field(default_factory=dict)

    @field_validator("language")
    @classmethod
    def _check_language(cls, value: str) -> str:
        if not is_iso_code(value):
            raise ValueError(f"language {value!r} is not a 3-letter lowercase ISO code")
        return value

    @field_validator("verses")
    @classmethod
    def _sort_verses(cls, verses: Dict[str, Verse]) -> Dict[str, Verse]:
        return dict(sorted(verses.items()))

    @model_validator(mode="after")
    def _check_consistency(self) -> "Corpus":
        kinds = set()
        for key, verse in self.verses.items():
            if key != verse.id:
                raise ValueError(f"verse keyed {key} carries id {verse.id}")
            kinds.add(type(verse))
        if len(kinds) > 1:
            raise ValueError("corpus mixes raw and tagged verses")
        return self

    @classmethod
    def from_verses(cls, language: str, verses: List[Verse]) -> "Corpus":
        """Build a corpus from a list of verses (IDs must be unique)"""
        return cls(language=language, verses={verse.id: verse for verse in verses})

    @property
    def is_tagged(self) -> bool:
        return any(isinstance(verse, TaggedVerse) for verse in self.verses.values())

    def ids(self) -> List[str]:
        return list(self.verses)

    def __len__(self) -> int:
        return len(self.verses)


class CorpusStats(BaseModel):
    """Summary statistics of a tagged corpus"""
    model_config = ConfigDict(frozen=True)

    verse_count: int = Field(..., ge=0)
    unique_arguments: int = Field(..., ge=0)
    unique_predicates: int = Field(..., ge=0)
