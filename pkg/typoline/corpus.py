"""
Corpus file parsing, serialization, verse-ID alignment and summary statistics.

Raw verse files carry one verse per line as ``ID<TAB>token token ...``; tagged
files carry ``ID<TAB>token/TAG token/TAG ...`` where the last '/' of each unit
separates the token from its tag. Lines starting with '#' and blank lines are
skipped. All text is normalized to NFC before parsing.
"""
import unicodedata
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple

from typoline.errors import (
    DuplicateVerseId,
    InvalidVerseId,
    MalformedLine,
    MalformedUnit,
    UnknownTag,
)
from typoline.fileio import PathLike, language_from_path, read_text
from typoline.models import (
    Corpus,
    CorpusStats,
    PosTag,
    RawVerse,
    TaggedVerse,
    WordOrderLabel,
    is_iso_code,
    is_verse_id,
)

DEFAULT_ARG_TAGS: FrozenSet[PosTag] = frozenset({PosTag.NOUN, PosTag.PROPN})
DEFAULT_PRED_TAGS: FrozenSet[PosTag] = frozenset({PosTag.VERB})

# Lower bounds of the corpus-size bins, largest first
VERSE_COUNT_BINS: List[Tuple[int, str]] = [
    (1800, "1800+"),
    (1500, "1500-1800"),
    (1000, "1000-1500"),
    (700, "700-1000"),
    (0, "<700"),
]


def iter_records(text: str, allow_empty: bool = False) -> Iterator[Tuple[int, str, List[str]]]:
    """
    Iterate over the ``ID<TAB>payload`` records of a verse-keyed document.

    Args:
        text (str): The document
        allow_empty (bool): Accept records whose payload has no units

    Yields:
        Tuple[int, str, List[str]]: Line number, verse ID and whitespace-split payload
    """
    text = unicodedata.normalize("NFC", text)
    seen = set()
    for line_number, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        verse_id, sep, payload = line.partition("\t")
        if not sep:
            raise MalformedLine(line_number, line)
        if not is_verse_id(verse_id):
            raise InvalidVerseId(verse_id)
        if verse_id in seen:
            raise DuplicateVerseId(verse_id, line_number)
        seen.add(verse_id)
        units = payload.split()
        if not units and not allow_empty:
            raise MalformedLine(line_number, line)
        yield line_number, verse_id, units


def parse_verse_file(text: str, language: str = "und") -> Corpus:
    """
    Parse a raw verse file.

    Args:
        text (str): UTF-8 document content
        language (str): ISO code of the corpus

    Returns:
        Corpus: One RawVerse per record, in verse-ID order
    """
    verses = [RawVerse(id=verse_id, tokens=units) for _, verse_id, units in iter_records(text)]
    return Corpus.from_verses(language, verses)


def parse_unit(unit: str) -> Tuple[str, PosTag]:
    """Split a ``token/TAG`` unit on its last '/'"""
    token, sep, tag = unit.rpartition("/")
    if not sep or not token or not tag:
        raise MalformedUnit(unit)
    try:
        return token, PosTag(tag)
    except ValueError:
        raise UnknownTag(tag) from None


def parse_tagged_file(text: str, language: str = "und") -> Corpus:
    """
    Parse a tagged verse file.

    Args:
        text (str): UTF-8 document content
        language (str): ISO code of the corpus

    Returns:
        Corpus: One TaggedVerse per record, in verse-ID order
    """
    verses = []
    for _, verse_id, units in iter_records(text):
        verses.append(TaggedVerse(id=verse_id, entries=[parse_unit(unit) for unit in units]))
    return Corpus.from_verses(language, verses)


def serialize_verse_file(corpus: Corpus) -> str:
    return "".join(f"{verse.id}\t{' '.join(verse.tokens)}\n" for verse in corpus.verses.values())


def serialize_tagged_file(corpus: Corpus) -> str:
    lines = []
    for verse in corpus.verses.values():
        units = " ".join(f"{token}/{tag.value}" for token, tag in verse.entries)
        lines.append(f"{verse.id}\t{units}\n")
    return "".join(lines)


def serialize_corpus(corpus: Corpus) -> str:
    """Serialize in the tagged or raw format depending on the corpus content"""
    return serialize_tagged_file(corpus) if corpus.is_tagged else serialize_verse_file(corpus)


def is_tagged_path(path: PathLike) -> bool:
    return Path(path).name.endswith(".tagged.txt")


def read_corpus(path: PathLike, tagged: Optional[bool] = None) -> Corpus:
    """
    Load a corpus file, choosing the parser from the file name.

    Args:
        path (PathLike): '<iso>.txt' or '<iso>.tagged.txt'
        tagged (bool): Force the tagged (True) or raw (False) parser

    Returns:
        Corpus: The parsed corpus, language taken from the file name
    """
    if tagged is None:
        tagged = is_tagged_path(path)
    parser = parse_tagged_file if tagged else parse_verse_file
    return parser(read_text(path), language=language_from_path(path))


def intersect_ids(corpora: Iterable[Corpus]) -> List[str]:
    """
    IDs present in every corpus, in verse-ID order.

    Args:
        corpora (Iterable[Corpus]): The corpora to intersect

    Returns:
        List[str]: Shared verse IDs (empty when no corpus is given)
    """
    shared = None
    for corpus in corpora:
        ids = set(corpus.verses)
        shared = ids if shared is None else shared & ids
    return sorted(shared) if shared else []


def summary_stats(corpus: Corpus,
                  arg_tags: FrozenSet[PosTag] = DEFAULT_ARG_TAGS,
                  pred_tags: FrozenSet[PosTag] = DEFAULT_PRED_TAGS) -> CorpusStats:
    """
    Count verses and distinct argument / predicate forms of a tagged corpus.

    Args:
        corpus (Corpus): Tagged corpus
        arg_tags (FrozenSet[PosTag]): Tags counted as arguments
        pred_tags (FrozenSet[PosTag]): Tags counted as predicates

    Returns:
        CorpusStats: Verse count and distinct-form counts (exact string match)
    """
    arguments = set()
    predicates = set()
    for verse in corpus.verses.values():
        for token, tag in verse.entries:
            if tag in arg_tags:
                arguments.add(token)
            if tag in pred_tags:
                predicates.add(token)
    return CorpusStats(
        verse_count=len(corpus),
        unique_arguments=len(arguments),
        unique_predicates=len(predicates),
    )


def verse_count_bin(verse_count: int) -> str:
    """Name of the corpus-size bin a verse count falls into"""
    for lower, name in VERSE_COUNT_BINS:
        if verse_count >= lower:
            return name
    return VERSE_COUNT_BINS[-1][1]


def parse_labels_file(text: str) -> Dict[str, WordOrderLabel]:
    """
    Parse ``iso<TAB>SV|VS|FREE|UNK`` rows.

    Raises:
        MalformedLine: On a row that is not an ISO code and a known label
    """
    labels = {}
    for line_number, line in enumerate(unicodedata.normalize("NFC", text).split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not is_iso_code(parts[0]):
            raise MalformedLine(line_number, line)
        try:
            labels[parts[0]] = WordOrderLabel(parts[1].strip())
        except ValueError:
            raise MalformedLine(line_number, line) from None
    return labels


def serialize_labels(labels: Mapping[str, WordOrderLabel]) -> str:
    rows = ["# iso\tlabel\n"]
    rows.extend(f"{iso}\t{label.value}\n" for iso, label in sorted(labels.items()))
    return "".join(rows)
