"""
Synthetic parallel corpora with known tags and known word order.

Every language shares one 60-concept gloss table and one English pivot. A
pivot verse is always ``ADJ NOUN VERB ADJ NOUN .``; each artificial language
puts adjectives after nouns and orders a verse either subject-first
(``N ADJ V N ADJ .``) or verb-first (``V N ADJ N ADJ .``) with a per-language
probability. Source words are random CV syllable strings, so the generator
is also the oracle for projected tags and N1 ratios.
"""
import random
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from typoline.corpus import serialize_labels, serialize_tagged_file, serialize_verse_file
from typoline.fileio import PathLike, write_text_atomic
from typoline.models import Corpus, PosTag, RawVerse, TaggedVerse, WordOrderLabel

NOUNS = [
    "man", "woman", "king", "city", "house", "river", "water", "bread", "fire", "stone",
    "tree", "mountain", "servant", "child", "father", "mother", "brother", "sister", "field", "sea",
    "boat", "road", "door", "gold", "sword", "lamb", "sheep", "temple", "garden", "star",
]
VERBS = [
    "saw", "took", "gave", "found", "heard", "built", "carried", "called", "brought",
    "followed", "kept", "loved", "blessed", "sent", "opened", "washed", "ate", "wrote",
]
ADJECTIVES = ["great", "small", "good", "old", "new", "holy", "dark", "bright", "strong", "poor", "rich", "young"]

CONSONANTS = "ptkmnslrbdgwy"
VOWELS = "aeiou"
DEFAULT_VERSES = 200
DEFAULT_SEED = 7

# (adjective, noun, verb, adjective, noun) glosses of one pivot verse
VersePlan = Tuple[str, str, str, str, str]


def gloss_table() -> Dict[str, PosTag]:
    """The 60 English glosses and their tags"""
    table = {word: PosTag.NOUN for word in NOUNS}
    table.update({word: PosTag.VERB for word in VERBS})
    table.update({word: PosTag.ADJ for word in ADJECTIVES})
    return table


def verse_id(index: int) -> str:
    """Verse IDs in book 40, 30 verses per chapter"""
    return f"40{index // 30 + 1:03d}{index % 30 + 1:03d}"


def make_plan(n_verses: int = DEFAULT_VERSES, seed: int = DEFAULT_SEED) -> List[VersePlan]:
    rng = random.Random(seed)
    plan = []
    for index in range(n_verses):
        first_noun, second_noun = rng.sample(NOUNS, 2)
        first_adj, second_adj = rng.sample(ADJECTIVES, 2)
        plan.append((first_adj, first_noun, VERBS[index % len(VERBS)], second_adj, second_noun))
    return plan


def make_pivot(plan: Sequence[VersePlan]) -> Corpus:
    tags = (PosTag.ADJ, PosTag.NOUN, PosTag.VERB, PosTag.ADJ, PosTag.NOUN)
    verses = [
        TaggedVerse(id=verse_id(index), entries=list(zip(glosses, tags)) + [(".", PosTag.PUNCT)])
        for index, glosses in enumerate(plan)
    ]
    return Corpus.from_verses("eng", verses)


def make_lemma_files(plan: Sequence[VersePlan]) -> Tuple[str, str]:
    """
    Lemma files of two translations of the pivot.

    Every tenth verse of the second translation shares only two lemmas with
    the first, so the lemma-overlap filter drops it.
    """
    lines_a = []
    lines_b = []
    for index, glosses in enumerate(plan):
        lines_a.append(f"{verse_id(index)}\t{' '.join(glosses)}\n")
        if index % 10 == 9:
            fillers = [f"other{index}x{k}" for k in range(3)]
            lines_b.append(f"{verse_id(index)}\t{' '.join(list(glosses[:2]) + fillers)}\n")
        else:
            lines_b.append(f"{verse_id(index)}\t{' '.join(glosses)}\n")
    return "".join(lines_a), "".join(lines_b)


def make_lexicon(rng: random.Random) -> Dict[str, str]:
    """Map every gloss to a distinct random word of two or three CV syllables"""
    lexicon: Dict[str, str] = {}
    used = set()
    for gloss in list(gloss_table()):
        while True:
            word = "".join(rng.choice(CONSONANTS) + rng.choice(VOWELS) for _ in range(rng.choice((2, 3))))
            if word not in used:
                break
        used.add(word)
        lexicon[gloss] = word
    return lexicon


class SyntheticLanguage(BaseModel):
    """An artificial language with its raw corpus and gold tagging"""
    model_config = ConfigDict(frozen=True)

    iso: str
    noun_first_prob: float
    label: WordOrderLabel
    raw: Corpus
    gold: Corpus
    word_tags: Dict[str, PosTag]


def make_language(iso: str,
                  plan: Sequence[VersePlan],
                  noun_first_prob: float,
                  label: WordOrderLabel = WordOrderLabel.UNK,
                  seed: int = DEFAULT_SEED) -> SyntheticLanguage:
    """
    Render the pivot plan in a new artificial language.

    Args:
        iso (str): ISO-like code of the language
        plan (Sequence[VersePlan]): Glosses of every verse
        noun_first_prob (float): Probability that a verse is subject-first
        label (WordOrderLabel): Word-order label recorded for the language
        seed (int): Base seed; the language code is mixed in

    Returns:
        SyntheticLanguage: Raw corpus, gold-tagged corpus and word-to-tag table
    """
    rng = random.Random(f"{seed}:{iso}")
    lexicon = make_lexicon(rng)
    glosses = gloss_table()
    raw_verses = []
    gold_verses = []
    for index, (adj1, noun1, verb, adj2, noun2) in enumerate(plan):
        if rng.random() < noun_first_prob:
            order = [noun1, adj1, verb, noun2, adj2]
        else:
            order = [verb, noun2, adj2, noun1, adj1]
        entries = [(lexicon[gloss], glosses[gloss]) for gloss in order] + [(".", PosTag.PUNCT)]
        gold_verses.append(TaggedVerse(id=verse_id(index), entries=entries))
        raw_verses.append(RawVerse(id=verse_id(index), tokens=[token for token, _ in entries]))
    return SyntheticLanguage(
        iso=iso,
        noun_first_prob=noun_first_prob,
        label=label,
        raw=Corpus.from_verses(iso, raw_verses),
        gold=Corpus.from_verses(iso, gold_verses),
        word_tags={lexicon[gloss]: tag for gloss, tag in glosses.items()},
    )


def mixture_languages(prefix: str, count: int, low: float, high: float,
                      label: WordOrderLabel, plan: Sequence[VersePlan],
                      seed: int = DEFAULT_SEED) -> List[SyntheticLanguage]:
    """``count`` languages whose subject-first probability is drawn from [low, high]"""
    rng = random.Random(f"{seed}:{prefix}")
    letters = "abcdefghijklmnopqrstuvwxyz"
    return [
        make_language(f"{prefix}{letters[k]}", plan, rng.uniform(low, high), label, seed)
        for k in range(count)
    ]


def write_fixture(directory: PathLike,
                  languages: Sequence[SyntheticLanguage],
                  plan: Sequence[VersePlan],
                  vocab_size: int = 500,
                  ibm1_iters: int = 10,
                  ibm2_iters: int = 5,
                  feature: str = "log-smoothed") -> Path:
    """
    Write a complete run-pipeline input set and return its config file.

    Layout: ``eng.tagged.txt``, ``lemmas_a.txt``, ``lemmas_b.txt``,
    ``corpora/<iso>.txt``, ``gold/<iso>.tagged.txt``, ``labels.tsv``,
    ``manifest.txt`` and ``typoline.cfg`` (output goes to ``out/``).
    """
    directory = Path(directory)
    write_text_atomic(directory / "eng.tagged.txt", serialize_tagged_file(make_pivot(plan)))
    lemmas_a, lemmas_b = make_lemma_files(plan)
    write_text_atomic(directory / "lemmas_a.txt", lemmas_a)
    write_text_atomic(directory / "lemmas_b.txt", lemmas_b)
    for language in languages:
        write_text_atomic(directory / "corpora" / f"{language.iso}.txt", serialize_verse_file(language.raw))
        write_text_atomic(directory / "gold" / f"{language.iso}.tagged.txt", serialize_tagged_file(language.gold))
    write_text_atomic(directory / "labels.tsv", serialize_labels({lang.iso: lang.label for lang in languages}))
    write_text_atomic(directory / "manifest.txt", "".join(f"{lang.iso}\n" for lang in languages))
    config = directory / "typoline.cfg"
    write_text_atomic(config, "\n".join([
        "# synthetic fixture",
        "pivot_tagged_path = eng.tagged.txt",
        "lemma_paths = lemmas_a.txt, lemmas_b.txt",
        "corpus_dir = corpora",
        "output_dir = out",
        "manifest_path = manifest.txt",
        "labels_path = labels.tsv",
        f"vocab_size = {vocab_size}",
        f"ibm1_iters = {ibm1_iters}",
        f"ibm2_iters = {ibm2_iters}",
        f"feature = {feature}",
    ]) + "\n")
    return config
