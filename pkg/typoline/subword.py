"""
Per-language byte-pair-encoding subword tokenizer.

Words are prefixed with the boundary marker U+2581, fused onto the first
character, and split into characters; training greedily merges the most
frequent adjacent symbol pair (ties to the lexicographically smallest pair)
until the vocabulary reaches the requested size or no pair occurs twice.
Nothing is lowercased. Every subword keeps the index of the word it came
from, so tags projected onto subwords can be gathered back onto words.
"""
import heapq
import re
from collections import Counter, defaultdict
from typing import Dict, FrozenSet, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from typoline.base_stage import BaseStage
from typoline.errors import EmptyCorpus, MalformedModelFile, NonMonotonicWordIndex
from typoline.models import Corpus, RawVerse

WORD_MARKER = "▁"
DEFAULT_VOCAB_SIZE = 4000
HEADER_RE = re.compile(r"BPE v1 marker=(.+)")
ALPHABET_TAG = "ALPHABET"


class SubwordToken(BaseModel):
    """One subword piece and the index of its source word within the verse"""
    model_config = ConfigDict(frozen=True)

    piece: str
    word_index: int = Field(..., ge=0)


class BpeModel(BaseModel):
    """Alphabet and ordered merge list of one language's tokenizer"""
    model_config = ConfigDict(frozen=True)

    alphabet: FrozenSet[str]
    merges: List[Tuple[str, str]] = Field(default_factory=list)
    marker: str = WORD_MARKER

    _ranks: Dict[Tuple[str, str], int] = PrivateAttr(default_factory=dict)
    _symbols: FrozenSet[str] = PrivateAttr(default=frozenset())
    _cache: Dict[str, Tuple[str, ...]] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_merges(self) -> "BpeModel":
        if len(set(self.merges)) != len(self.merges):
            raise ValueError("merge list contains duplicates")
        known = set(self.alphabet)
        for left, right in self.merges:
            if left not in known or right not in known:
                raise ValueError(f"merge ({left!r}, {right!r}) uses an unknown symbol")
            known.add(left + right)
        return self

    def model_post_init(self, __context) -> None:
        self._ranks = {pair: rank for rank, pair in enumerate(self.merges)}
        symbols = set()
        for left, right in self.merges:
            symbols.update((left, right, left + right))
        self._symbols = frozenset(symbols)

    @property
    def vocab_size(self) -> int:
        return len(self.alphabet | {left + right for left, right in self.merges})

    def to_text(self) -> str:
        lines = [f"BPE v1 marker={self.marker}", "\t".join([ALPHABET_TAG, *sorted(self.alphabet)])]
        lines.extend(f"{left}\t{right}" for left, right in self.merges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BpeModel":
        """
        Load a model file.

        The alphabet comes from the ALPHABET line after the header; files
        without one fall back to the merge atoms.

        Raises:
            MalformedModelFile: On a bad header, alphabet or merge line
        """
        lines = text.split("\n")
        match = HEADER_RE.fullmatch(lines[0].rstrip("\r")) if lines else None
        if not match:
            raise MalformedModelFile("BPE", 1, "expected header 'BPE v1 marker=<char>'")
        body = list(enumerate(lines[1:], start=2))
        alphabet = set()
        if body and body[0][1].rstrip("\r").split("\t")[0] == ALPHABET_TAG:
            symbols = body[0][1].rstrip("\r").split("\t")[1:]
            if not all(symbols):
                raise MalformedModelFile("BPE", 2, "empty symbol in ALPHABET line")
            alphabet.update(symbols)
            body = body[1:]
        merges = []
        outputs = set()
        for line_number, line in body:
            line = line.rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise MalformedModelFile("BPE", line_number, f"expected 'left<TAB>right', got {line!r}")
            left, right = parts
            alphabet.update(symbol for symbol in (left, right) if symbol not in outputs)
            outputs.add(left + right)
            merges.append((left, right))
        return cls(alphabet=frozenset(alphabet), merges=merges, marker=match.group(1))

    def segment(self, word: str) -> Tuple[str, ...]:
        """Split one word into pieces, the first carrying the boundary marker"""
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        fused = self.marker + word[0]
        if fused in self._symbols or fused in self.alphabet:
            symbols = [fused] + list(word[1:])
        else:
            symbols = [self.marker] + list(word)
        while len(symbols) > 1:
            rank, pair = min(
                (self._ranks.get(pair, len(self._ranks)), pair)
                for pair in zip(symbols, symbols[1:])
            )
            if rank == len(self._ranks):
                break
            symbols = _merge_symbols(symbols, pair)
        result = tuple(symbols)
        self._cache[word] = result
        return result


def _merge_symbols(symbols: Sequence[str], pair: Tuple[str, str]) -> List[str]:
    merged = pair[0] + pair[1]
    out = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def train_bpe(corpus: Corpus, vocab_size: int = DEFAULT_VOCAB_SIZE) -> BpeModel:
    """
    Train a BPE model on every token of a raw corpus.

    Args:
        corpus (Corpus): Raw (or tagged) corpus; only tokens are used
        vocab_size (int): Target size of alphabet plus merge outputs

    Returns:
        BpeModel: The trained model

    Raises:
        EmptyCorpus: If the corpus has no tokens
        ValueError: If vocab_size does not exceed the alphabet size
    """
    word_counts = Counter(token for verse in corpus.verses.values() for token in verse.tokens)
    if not word_counts:
        raise EmptyCorpus(corpus.language)

    vocabulary = sorted(word_counts)
    freqs = [word_counts[word] for word in vocabulary]
    words = [[WORD_MARKER + word[0]] + list(word[1:]) for word in vocabulary]
    alphabet = frozenset(symbol for symbols in words for symbol in symbols)
    if vocab_size <= len(alphabet):
        raise ValueError(f"vocab_size {vocab_size} must exceed the alphabet size {len(alphabet)}")

    pair_counts: Dict[Tuple[str, str], int] = defaultdict(int)
    where: Dict[Tuple[str, str], set] = defaultdict(set)
    for idx, symbols in enumerate(words):
        for pair in zip(symbols, symbols[1:]):
            pair_counts[pair] += freqs[idx]
            where[pair].add(idx)
    heap = [(-count, pair) for pair, count in pair_counts.items()]
    heapq.heapify(heap)

    merges = []
    outputs = set()
    while heap and len(alphabet | outputs) < vocab_size:
        neg_count, pair = heapq.heappop(heap)
        if pair_counts.get(pair, 0) != -neg_count:
            continue  # stale heap entry
        if -neg_count < 2:
            break
        merges.append(pair)
        outputs.add(pair[0] + pair[1])
        touched = set()
        for idx in sorted(where.pop(pair)):
            old = words[idx]
            new = _merge_symbols(old, pair)
            if len(new) == len(old):
                continue
            for old_pair in zip(old, old[1:]):
                pair_counts[old_pair] -= freqs[idx]
                touched.add(old_pair)
            for new_pair in zip(new, new[1:]):
                pair_counts[new_pair] += freqs[idx]
                where[new_pair].add(idx)
                touched.add(new_pair)
            words[idx] = new
        for changed in sorted(touched):
            count = pair_counts[changed]
            if count > 0:
                heapq.heappush(heap, (-count, changed))
            else:
                del pair_counts[changed]

    return BpeModel(alphabet=alphabet, merges=merges)


def encode(model: BpeModel, verse: RawVerse) -> List[SubwordToken]:
    """
    Split every word of a verse into subword pieces.

    Args:
        model (BpeModel): Trained tokenizer
        verse (RawVerse): Verse to encode

    Returns:
        List[SubwordToken]: Pieces in order, each tagged with its word index
    """
    return encode_tokens(model, verse.tokens)


def encode_tokens(model: BpeModel, tokens: Sequence[str]) -> List[SubwordToken]:
    pieces = []
    for word_index, word in enumerate(tokens):
        pieces.extend(SubwordToken(piece=piece, word_index=word_index) for piece in model.segment(word))
    return pieces


def decode(model: BpeModel, tokens: Sequence[SubwordToken]) -> List[str]:
    """
    Reassemble words from subword pieces (inverse of encode).

    Raises:
        NonMonotonicWordIndex: If word indices decrease
    """
    marker = model.marker if model is not None else WORD_MARKER
    words = []
    parts: List[str] = []
    current = None
    for position, token in enumerate(tokens):
        if current is not None and token.word_index < current:
            raise NonMonotonicWordIndex(position)
        if token.word_index != current and parts:
            words.append(_join_word(parts, marker))
            parts = []
        current = token.word_index
        parts.append(token.piece)
    if parts:
        words.append(_join_word(parts, marker))
    return words


def _join_word(parts: List[str], marker: str) -> str:
    word = "".join(parts)
    return word[len(marker):] if word.startswith(marker) else word


class TokenizerStage(BaseStage):
    """Stage training one language's subword tokenizer"""

    def __init__(self, language: str, vocab_size: int = DEFAULT_VOCAB_SIZE):
        """
        Initialize the tokenizer stage.

        Args:
            language (str): ISO code, used in log lines
            vocab_size (int): Target vocabulary size
        """
        super().__init__(f"Tokenizer[{language}]")
        self.vocab_size = vocab_size

    def run(self, corpus: Corpus) -> BpeModel:
        self.log(f"Training BPE on {len(corpus)} verses (vocab_size={self.vocab_size})")
        model = train_bpe(corpus, self.vocab_size)
        self.log(f"Learned {len(model.merges)} merges over an alphabet of {len(model.alphabet)}")
        return model
