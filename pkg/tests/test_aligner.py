import math
import random
from collections import defaultdict
from itertools import permutations

import pytest
from pydantic import ValidationError

from typoline.aligner import (
    NULL_TOKEN,
    Alignment,
    AlignerStage,
    AlignmentModel,
    SentencePair,
    align_corpus,
    build_pairs,
    ibm1_em,
    log_likelihood,
    train_ibm1,
    train_ibm2,
    viterbi_align,
    verse_pair,
)
from typoline.corpus import parse_tagged_file, parse_verse_file
from typoline.errors import EmptyTrainingSet, MalformedModelFile
from typoline.subword import BpeModel, train_bpe

WORDS = [f"w{k}" for k in range(10)]


def _pair(source, target):
    return SentencePair.build(source.split(), target.split())


@pytest.fixture(scope="module")
def toy_pairs():
    """50 random pairs over a small vocabulary, words translated one-to-one with shuffled order"""
    rng = random.Random(11)
    pairs = []
    for _ in range(50):
        glosses = rng.sample(WORDS, rng.randint(1, 5))
        source = [f"s{g[1:]}" for g in glosses]
        rng.shuffle(source)
        pairs.append(SentencePair.build(source, glosses))
    return pairs


@pytest.fixture(scope="module")
def positional_pairs():
    """Every ordered pair of distinct words, source and target in the same order"""
    return [SentencePair.build([f"s{x}", f"s{y}"], [f"e{x}", f"e{y}"]) for x, y in permutations(range(10), 2)]


def _assert_stochastic(model_t, q=None):
    sums = defaultdict(float)
    for (_, e), prob in model_t.items():
        sums[e] += prob
    assert all(total == pytest.approx(1.0, abs=1e-6) for total in sums.values())
    if q:
        q_sums = defaultdict(float)
        for (_, j, l, m), prob in q.items():
            q_sums[(j, l, m)] += prob
        assert all(total == pytest.approx(1.0, abs=1e-6) for total in q_sums.values())


def test_sentence_pair_requires_null():
    with pytest.raises(ValidationError):
        SentencePair(source=["x"], target=["y", "z"])
    pair = _pair("x y z", "a b")
    assert (pair.m, pair.l) == (3, 2)
    assert pair.target[0] == NULL_TOKEN


def test_single_pair_is_symmetric():
    pair = _pair("x", "y")
    for iterations in (1, 2, 5):
        t = train_ibm1([pair], iterations)
        assert t[("x", "y")] == pytest.approx(t[("x", NULL_TOKEN)])
        assert t[("x", "y")] == pytest.approx(1.0)


def test_one_iteration_gives_normalized_cooccurrence_counts():
    pairs = [_pair("x", "a b"), _pair("x", "a c"), _pair("y", "a c")]
    t = train_ibm1(pairs, 1)
    # Equal target lengths: every co-occurrence contributes the same expected count
    assert t[("x", "a")] == pytest.approx(2 / 3)
    assert t[("y", "a")] == pytest.approx(1 / 3)
    assert t[("x", "b")] == pytest.approx(1.0)
    assert t[("x", "c")] == pytest.approx(0.5)


def test_ibm1_log_likelihood_never_decreases(toy_pairs):
    _, history = ibm1_em(toy_pairs, 15)
    assert len(history) == 16
    assert all(after >= before - 1e-9 for before, after in zip(history, history[1:]))


def test_tables_stay_stochastic(toy_pairs):
    for iterations in (1, 3):
        t, history = ibm1_em(toy_pairs, iterations)
        _assert_stochastic(t)
        model = train_ibm2(toy_pairs, iterations, t, history)
        _assert_stochastic(model.t, model.q)


def test_ibm2_history_continues_ibm1(toy_pairs):
    t, history = ibm1_em(toy_pairs, 5)
    model = train_ibm2(toy_pairs, 5, t, history)
    assert model.ll_history[:6] == history
    assert len(model.ll_history) == 11
    assert (model.ibm1_iterations, model.ibm2_iterations) == (5, 5)
    assert all(after >= before - 1e-9 for before, after in zip(model.ll_history, model.ll_history[1:]))
    assert model.ll_history[-1] == pytest.approx(log_likelihood(model, toy_pairs))


def test_toy_corpus_converges():
    pairs = [_pair("a", "a"), _pair("a b", "a b")] * 25
    assert train_ibm1(pairs, 20)[("b", "b")] >= 0.999
    assert train_ibm1(pairs, 60)[("b", "b")] >= 1 - 1e-6


def test_ibm1_ignores_source_order(toy_pairs):
    reversed_pairs = [SentencePair.build(list(reversed(p.source)), p.target[1:]) for p in toy_pairs]
    t = train_ibm1(toy_pairs, 10)
    t_reversed = train_ibm1(reversed_pairs, 10)
    assert t.keys() == t_reversed.keys()
    assert all(t[key] == pytest.approx(t_reversed[key], abs=1e-12) for key in t)


def test_ibm2_learns_monotone_distortion(positional_pairs):
    t, history = ibm1_em(positional_pairs, 20)
    model = train_ibm2(positional_pairs, 20, t, history)
    assert model.q[(1, 1, 2, 2)] >= 1 - 1e-4
    assert model.q[(2, 2, 2, 2)] >= 1 - 1e-4


def test_identical_sentences_align_to_their_copy(positional_pairs):
    model = AlignerStage("abc", 20, 20).run(positional_pairs)
    for pair, alignment in zip(positional_pairs, align_corpus(model, positional_pairs)):
        assert alignment.links == [1, 2]


@pytest.mark.parametrize("iterations", [0, -1])
def test_iterations_must_be_positive(iterations):
    with pytest.raises(ValueError):
        train_ibm1([_pair("x", "y")], iterations)
    with pytest.raises(ValueError):
        train_ibm2([_pair("x", "y")], iterations, {})


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        train_ibm1([], 5)
    with pytest.raises(EmptyTrainingSet):
        train_ibm2([], 5, {})


def test_viterbi_full_tie_goes_to_null():
    model = AlignmentModel(t={})
    assert viterbi_align(model, _pair("x y z", "a b")).links == [0, 0, 0]


def test_viterbi_follows_dominant_translation():
    model = AlignmentModel(t={
        ("chien", "dog"): 0.9,
        ("chien", "the"): 0.05,
        ("chien", NULL_TOKEN): 0.05,
    })
    alignment = viterbi_align(model, _pair("le chien", "the dog"))
    assert alignment.links == [0, 2]
    assert alignment.to_pharaoh() == "1-1"


def test_viterbi_two_way_argmax():
    model = AlignmentModel(t={("x", "e1"): 0.6, ("x", NULL_TOKEN): 0.4})
    assert viterbi_align(model, _pair("x", "e1")).links == [1]


def test_viterbi_uses_seen_distortion():
    model = AlignmentModel(
        t={("x", "a"): 0.5, ("x", "b"): 0.5},
        q={(0, 1, 2, 1): 0.0, (1, 1, 2, 1): 0.2, (2, 1, 2, 1): 0.8},
    )
    assert viterbi_align(model, _pair("x", "a b")).links == [2]
    assert model.distortion(1, 1, 3, 1) == pytest.approx(0.25)


def test_pharaoh_skips_null_links():
    assert Alignment(links=[1, 0, 3]).to_pharaoh() == "0-0 2-2"
    assert Alignment(links=[]).to_pharaoh() == ""


def test_pharaoh_maps_positions_back():
    assert Alignment(links=[1, 0, 2]).to_pharaoh([0, 2, 3], [1, 4]) == "0-1 3-4"


def test_log_likelihood_hand_value():
    t = {("x", NULL_TOKEN): 0.5, ("x", "y"): 0.5}
    assert log_likelihood(t, [_pair("x", "y")]) == pytest.approx(math.log(0.5))
    assert log_likelihood(AlignmentModel(t=t), [_pair("x", "y")]) == pytest.approx(math.log(0.5))


def test_log_likelihood_of_nothing():
    assert log_likelihood({}, []) == 0.0


def test_model_text_round_trip(toy_pairs):
    model = AlignerStage("abc", 3, 2).run(toy_pairs)
    text = model.to_text()
    assert text.startswith("IBM2 v1 ibm1_iterations=3 ibm2_iterations=2\nT\n")
    loaded = AlignmentModel.from_text(text)
    assert loaded.to_text() == text
    assert loaded.q == model.q
    assert align_corpus(loaded, toy_pairs) == align_corpus(model, toy_pairs)


def test_serialization_prunes_tiny_entries():
    model = AlignmentModel(t={("x", "a"): 1e-7, ("x", "b"): 0.5})
    loaded = AlignmentModel.from_text(model.to_text())
    assert loaded.t == {("x", "b"): 0.5}


@pytest.mark.parametrize("text", [
    "",
    "IBM1 v1\nT\n",
    "IBM2 v1 ibm1_iterations=1 ibm2_iterations=1\nT\nx\ta\n",
    "IBM2 v1 ibm1_iterations=1 ibm2_iterations=1\nQ\n1\t1\t2\tz\t0.5\n",
    "IBM2 v1 ibm1_iterations=1 ibm2_iterations=1\nx\ta\t0.5\n",
])
def test_malformed_model_file(text):
    with pytest.raises(MalformedModelFile):
        AlignmentModel.from_text(text)


def test_build_pairs_skips_missing_verses():
    source = parse_verse_file("40001001\tio le\n40001002\tngi\n", "abc")
    pivot = parse_tagged_file("40001001\tI/PRON go/VERB\n40001003\tyes/INTJ\n", "eng")
    used, pairs = build_pairs(source, pivot, ["40001001", "40001002", "40001003"])
    assert used == ["40001001"]
    assert pairs == [_pair("io le", "I go")]


def test_build_pairs_encodes_subwords():
    source = parse_verse_file("40001001\tio le\n", "abc")
    pivot = parse_tagged_file("40001001\tI/PRON go/VERB\n", "eng")
    bpe = train_bpe(source, vocab_size=20)
    _, pairs = build_pairs(source, pivot, ["40001001"], bpe)
    assert "".join(pairs[0].source).replace("▁", "") == "iole"
    assert pairs[0].target == [NULL_TOKEN, "I", "go"]


def test_build_pairs_leaves_out_punctuation():
    source = parse_verse_file("40001001\tio , le .\n40001002\t!\n", "abc")
    pivot = parse_tagged_file("40001001\tI/PRON go/VERB ./PUNCT\n40001002\t!/PUNCT\n", "eng")
    used, pairs = build_pairs(source, pivot, ["40001001", "40001002"])
    assert used == ["40001001"]
    assert pairs == [_pair("io le", "I go")]


def test_verse_pair_positions_over_subwords():
    pair, source_positions, target_positions = verse_pair(["ab", "."], ["x", "."], BpeModel(alphabet=frozenset()))
    assert pair.source == ["▁", "a", "b"]
    assert pair.target == [NULL_TOKEN, "x"]
    assert (source_positions, target_positions) == ([0, 1, 2], [0])
    assert verse_pair([";"], ["x"]) is None


def test_training_is_deterministic(toy_pairs):
    first = AlignerStage("abc", 4, 4).run(toy_pairs).to_text()
    second = AlignerStage("abc", 4, 4).run(toy_pairs).to_text()
    assert first == second
