import random

import pytest

from typoline.errors import EmptyCorpus, MalformedModelFile, NonMonotonicWordIndex
from typoline.models import Corpus, RawVerse
from typoline.subword import (
    WORD_MARKER,
    BpeModel,
    SubwordToken,
    TokenizerStage,
    decode,
    encode,
    encode_tokens,
    train_bpe,
)


def _raw(*lines):
    verses = [RawVerse(id=f"40001{k:03d}", tokens=line.split()) for k, line in enumerate(lines, start=1)]
    return Corpus.from_verses("abc", verses)


def test_first_merge_is_most_frequent_pair():
    model = train_bpe(_raw("aa aa aa"), vocab_size=10)
    assert model.merges[0] == (WORD_MARKER + "a", "a")


def test_no_merge_below_frequency_two():
    model = train_bpe(_raw("abc"), vocab_size=50)
    assert model.merges == []


def test_ties_go_to_smallest_pair():
    model = train_bpe(_raw("cd ab cd ab"), vocab_size=50)
    assert model.merges[0] == (WORD_MARKER + "a", "b")
    assert model.merges[1] == (WORD_MARKER + "c", "d")


def test_vocab_size_caps_merges():
    corpus = _raw("abcdef abcdef abcdef")
    full = train_bpe(corpus, vocab_size=100)
    capped = train_bpe(corpus, vocab_size=len(full.alphabet) + 2)
    assert len(capped.merges) == 2
    assert capped.merges == full.merges[:2]
    assert capped.vocab_size == len(full.alphabet) + 2


def test_empty_merge_list_splits_into_characters():
    model = BpeModel(alphabet=frozenset({WORD_MARKER + "a", "b"}))
    assert [t.piece for t in encode_tokens(model, ["ab"])] == [WORD_MARKER + "a", "b"]
    bare = BpeModel(alphabet=frozenset({"x"}))
    assert [t.piece for t in encode_tokens(bare, ["ab"])] == [WORD_MARKER, "a", "b"]


def test_encode_keeps_word_indices():
    model = train_bpe(_raw("io le ngi", "le ngi io"), vocab_size=30)
    tokens = encode(model, RawVerse(id="40001001", tokens=["io", "le", "ngi"]))
    assert [t.word_index for t in tokens] == sorted(t.word_index for t in tokens)
    assert {t.word_index for t in tokens} == {0, 1, 2}
    assert decode(model, tokens) == ["io", "le", "ngi"]


def test_decode_empty():
    assert decode(BpeModel(alphabet=frozenset()), []) == []


def test_decode_rejects_decreasing_word_index():
    tokens = [SubwordToken(piece=WORD_MARKER + "a", word_index=0),
              SubwordToken(piece=WORD_MARKER + "b", word_index=2),
              SubwordToken(piece=WORD_MARKER + "c", word_index=1)]
    with pytest.raises(NonMonotonicWordIndex) as exc:
        decode(BpeModel(alphabet=frozenset()), tokens)
    assert exc.value.position == 2


def test_round_trip_on_random_verses():
    rng = random.Random(3)
    alphabet = "abcdefghijklmnopqrstuvwxyzäöüé"
    lines = [
        " ".join("".join(rng.choice(alphabet) for _ in range(rng.randint(1, 8))) for _ in range(rng.randint(1, 10)))
        for _ in range(1000)
    ]
    corpus = _raw(*lines)
    model = train_bpe(corpus, vocab_size=300)
    for verse in corpus.verses.values():
        assert decode(model, encode(model, verse)) == verse.tokens


def test_case_is_preserved():
    model = train_bpe(_raw("Abba abba"), vocab_size=30)
    verse = RawVerse(id="40001001", tokens=["Abba", "abba"])
    assert decode(model, encode(model, verse)) == ["Abba", "abba"]


def test_training_is_deterministic():
    corpus = _raw("the cat sat on the mat", "the dog sat on the log", "a cat and a dog")
    assert train_bpe(corpus, 40).to_text() == train_bpe(corpus, 40).to_text()


def test_model_text_round_trip():
    corpus = _raw("the cat sat on the mat", "the dog sat on the log")
    model = train_bpe(corpus, 40)
    loaded = BpeModel.from_text(model.to_text())
    assert loaded.merges == model.merges
    assert loaded.marker == WORD_MARKER
    assert loaded.to_text() == model.to_text()
    for verse in corpus.verses.values():
        assert decode(loaded, encode(loaded, verse)) == verse.tokens


def test_reloaded_model_keeps_unmerged_initials():
    corpus = _raw("ab ab qz")
    model = train_bpe(corpus, 50)
    assert WORD_MARKER + "q" in model.alphabet
    loaded = BpeModel.from_text(model.to_text())
    assert loaded.alphabet == model.alphabet
    verse = corpus.verses["40001001"]
    assert [t.piece for t in encode(model, verse)] == ["▁ab", "▁ab", "▁q", "z"]
    assert encode(loaded, verse) == encode(model, verse)


def test_model_file_without_alphabet_line():
    loaded = BpeModel.from_text("BPE v1 marker=▁\n▁a\tb\n")
    assert loaded.alphabet == frozenset({"▁a", "b"})
    assert loaded.segment("ab") == ("▁ab",)


@pytest.mark.parametrize("text", [
    "",
    "BPE v2 marker=_\n",
    "BPE v1 marker=▁\na\tb\tc\n",
    "BPE v1 marker=▁\nALPHABET\ta\t\tb\n",
])
def test_malformed_model_file(text):
    with pytest.raises(MalformedModelFile):
        BpeModel.from_text(text)


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        train_bpe(Corpus(language="abc"))


def test_vocab_size_must_exceed_alphabet():
    with pytest.raises(ValueError):
        train_bpe(_raw("abc"), vocab_size=1)


def test_tokenizer_stage(caplog):
    with caplog.at_level("INFO", logger="typoline"):
        model = TokenizerStage("abc", 30).run(_raw("aa aa aa"))
    assert model.merges
    assert "[Tokenizer[abc]]" in caplog.text
