import unicodedata

import pytest
from pydantic import ValidationError

from typoline.corpus import (
    intersect_ids,
    parse_labels_file,
    parse_tagged_file,
    parse_unit,
    parse_verse_file,
    read_corpus,
    serialize_labels,
    serialize_tagged_file,
    serialize_verse_file,
    summary_stats,
    verse_count_bin,
)
from typoline.errors import (
    DuplicateVerseId,
    InvalidVerseId,
    MalformedLine,
    MalformedUnit,
    UnknownTag,
)
from typoline.fileio import language_from_path, parse_id_list, serialize_id_list, write_text_atomic
from typoline.models import Corpus, PosTag, RawVerse, TaggedVerse, WordOrderLabel, parse_tag_set


def test_parse_single_raw_verse():
    corpus = parse_verse_file("40001001\tio le ngi\n")
    assert corpus.ids() == ["40001001"]
    assert corpus.verses["40001001"].tokens == ["io", "le", "ngi"]
    assert not corpus.is_tagged


def test_empty_document_gives_empty_corpus():
    assert len(parse_verse_file("")) == 0


def test_comments_and_blank_lines_are_skipped():
    text = "# header\n\n40001002\tb\n40001001\ta\n"
    corpus = parse_verse_file(text)
    assert corpus.ids() == ["40001001", "40001002"]


def test_duplicate_id_rejected():
    with pytest.raises(DuplicateVerseId) as exc:
        parse_verse_file("40001001\ta\n40001001\tb\n")
    assert exc.value.verse_id == "40001001"
    assert exc.value.line_number == 2


def test_line_without_tab_is_malformed():
    with pytest.raises(MalformedLine) as exc:
        parse_verse_file("40001001\ta\n40001002 b c\n")
    assert exc.value.line_number == 2


@pytest.mark.parametrize("bad_id", ["4000100", "4000100a", "400010011"])
def test_invalid_verse_id(bad_id):
    with pytest.raises(InvalidVerseId):
        parse_verse_file(f"{bad_id}\ta\n")


def test_parse_tagged_verse():
    corpus = parse_tagged_file("40001001\tJesus/PROPN wept/VERB\n")
    assert corpus.verses["40001001"].entries == [("Jesus", PosTag.PROPN), ("wept", PosTag.VERB)]
    assert corpus.is_tagged


def test_last_slash_separates_tag():
    assert parse_unit("a/b/NOUN") == ("a/b", PosTag.NOUN)


def test_unknown_tag():
    with pytest.raises(UnknownTag) as exc:
        parse_tagged_file("40001001\twept/VRB\n")
    assert exc.value.tag == "VRB"


@pytest.mark.parametrize("unit", ["wept", "/VERB", "wept/"])
def test_malformed_unit(unit):
    with pytest.raises(MalformedUnit):
        parse_unit(unit)


def test_text_is_nfc_normalized():
    decomposed = unicodedata.normalize("NFD", "café")
    corpus = parse_verse_file(f"40001001\t{decomposed}\n")
    assert corpus.verses["40001001"].tokens == ["café"]


def test_serialize_then_parse_is_identity():
    raw = parse_verse_file("40001002\tc d\n40001001\ta b\n")
    assert parse_verse_file(serialize_verse_file(raw)) == raw
    tagged = parse_tagged_file("40001001\ta/b/NOUN ran/VERB ./PUNCT\n")
    assert serialize_tagged_file(tagged) == "40001001\ta/b/NOUN ran/VERB ./PUNCT\n"
    assert parse_tagged_file(serialize_tagged_file(tagged)) == tagged


def test_corpus_rejects_mixed_verses():
    with pytest.raises(ValidationError):
        Corpus.from_verses("abc", [
            RawVerse(id="40001001", tokens=["a"]),
            TaggedVerse(id="40001002", entries=[("b", PosTag.NOUN)]),
        ])


def test_tokens_with_whitespace_rejected():
    with pytest.raises(ValidationError):
        RawVerse(id="40001001", tokens=["a b"])


def test_intersect_ids():
    a = parse_verse_file("40001001\tx\n40001002\ty\n")
    b = parse_verse_file("40001002\tz\n")
    c = parse_verse_file("40002001\tz\n")
    assert intersect_ids([a, b]) == ["40001002"]
    assert intersect_ids([b, a]) == intersect_ids([a, b])
    assert intersect_ids([a]) == ["40001001", "40001002"]
    assert intersect_ids([a, c]) == []


def test_summary_stats_counts_distinct_forms():
    corpus = parse_tagged_file("40001001\tdog/NOUN runs/VERB\n40001002\tdog/NOUN sleeps/VERB\n")
    stats = summary_stats(corpus)
    assert (stats.verse_count, stats.unique_arguments, stats.unique_predicates) == (2, 1, 2)


def test_summary_stats_empty_corpus():
    stats = summary_stats(Corpus(language="abc"))
    assert (stats.verse_count, stats.unique_arguments, stats.unique_predicates) == (0, 0, 0)


@pytest.mark.parametrize("count, expected", [
    (1885, "1800+"),
    (1800, "1800+"),
    (1799, "1500-1800"),
    (1000, "1000-1500"),
    (700, "700-1000"),
    (699, "<700"),
    (0, "<700"),
])
def test_verse_count_bins(count, expected):
    assert verse_count_bin(count) == expected


def test_read_corpus_picks_parser_and_language(write_file):
    raw = read_corpus(write_file("abc.txt", "40001001\tio\n"))
    tagged = read_corpus(write_file("abc.tagged.txt", "40001001\tio/NOUN\n"))
    assert raw.language == "abc" and not raw.is_tagged
    assert tagged.language == "abc" and tagged.is_tagged
    assert language_from_path("Corpus-1.txt") == "und"


def test_write_text_atomic_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    write_text_atomic(target, "first\n")
    write_text_atomic(target, "second\n")
    assert target.read_text(encoding="utf-8") == "second\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_id_list_parsing():
    assert parse_id_list("# ids\n40001001\n\n40001002\n") == ["40001001", "40001002"]
    assert serialize_id_list(["40001001"]) == "40001001\n"
    with pytest.raises(InvalidVerseId):
        parse_id_list("4000100\n")
    with pytest.raises(DuplicateVerseId):
        parse_id_list("40001001\n40001001\n")


def test_labels_file_round_trip():
    labels = parse_labels_file("# iso\tlabel\nabc\tSV\nxyz\tUNK\n")
    assert labels == {"abc": WordOrderLabel.SV, "xyz": WordOrderLabel.UNK}
    assert parse_labels_file(serialize_labels(labels)) == labels
    with pytest.raises(MalformedLine):
        parse_labels_file("abc\tSOV\n")


def test_parse_tag_set():
    assert parse_tag_set("NOUN, PROPN") == frozenset({PosTag.NOUN, PosTag.PROPN})
    with pytest.raises(UnknownTag):
        parse_tag_set("NOUN,NOUNS")
