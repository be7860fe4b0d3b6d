"""
IBM Model 1 / Model 2 word alignment trained by EM.

The source side holds subword pieces of the low-resource language, the target
side whole pivot words with a synthetic NULL word at position 0. Model 1
initializes the lexical table t(f|e); Model 2 adds the distortion table
q(i|j,l,m) over target position i, source position j (1-based), target
length l and source length m.
"""
import logging
import math
import re
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator

from typoline.base_stage import BaseStage
from typoline.errors import EmptyTrainingSet, MalformedModelFile
from typoline.models import Corpus, is_punctuation
from typoline.subword import BpeModel, encode_tokens

NULL_TOKEN = "<NULL>"
PROB_FLOOR = 1e-12
PRUNE_BELOW = 1e-6
DEFAULT_IBM1_ITERATIONS = 5
DEFAULT_IBM2_ITERATIONS = 5
HEADER_RE = re.compile(r"IBM2 v1 ibm1_iterations=(\d+) ibm2_iterations=(\d+)")

TTable = Dict[Tuple[str, str], float]
QTable = Dict[Tuple[int, int, int, int], float]


class SentencePair(BaseModel):
    """Source symbols and pivot words of one verse, NULL at target position 0"""
    model_config = ConfigDict(frozen=True)

    source: List[str] = Field(..., min_length=1)
    target: List[str] = Field(..., min_length=2)

    @field_validator("target")
    @classmethod
    def _check_null(cls, target: List[str]) -> List[str]:
        if target[0] != NULL_TOKEN:
            raise ValueError("target position 0 must hold the NULL word")
        return target

    @classmethod
    def build(cls, source: Sequence[str], target_words: Sequence[str]) -> "SentencePair":
        return cls(source=list(source), target=[NULL_TOKEN, *target_words])

    @property
    def m(self) -> int:
        return len(self.source)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.target) - 1


class Alignment(BaseModel):
    """Best target position (0 = NULL) for each source position"""
    model_config = ConfigDict(frozen=True)

    links: List[int]

    def to_pharaoh(self,
                   source_positions: Optional[Sequence[int]] = None,
                   target_positions: Optional[Sequence[int]] = None) -> str:
        """
        Render non-NULL links as 0-based 'source-target' pairs.

        The optional position lists map pair positions back onto the full
        source symbol sequence and pivot verse (see content_pair).
        """
        links = []
        for j, i in enumerate(self.links):
            if i > 0:
                source = j if source_positions is None else source_positions[j]
                target = i - 1 if target_positions is None else target_positions[i - 1]
                links.append(f"{source}-{target}")
        return " ".join(links)


class AlignmentModel(BaseModel):
    """Trained lexical and distortion tables"""
    model_config = ConfigDict(frozen=True)

    t: Dict[Tuple[str, str], float]
    q: Dict[Tuple[int, int, int, int], float] = Field(default_factory=dict)
    ibm1_iterations: int = 0
    ibm2_iterations: int = 0
    ll_history: List[float] = Field(default_factory=list)

    _seen: frozenset = PrivateAttr(default=frozenset())

    def model_post_init(self, __context) -> None:
        self._seen = frozenset((j, l, m) for (_, j, l, m) in self.q)

    def distortion(self, i: int, j: int, l: int, m: int) -> float:  # noqa: E741
        """q(i|j,l,m), uniform over 0..l for configurations never seen in training"""
        if (j, l, m) in self._seen:
            return self.q.get((i, j, l, m), 0.0)
        return 1.0 / (l + 1)

    def to_text(self) -> str:
        lines = [f"IBM2 v1 ibm1_iterations={self.ibm1_iterations} ibm2_iterations={self.ibm2_iterations}", "T"]
        for (f, e), prob in sorted(self.t.items()):
            if prob >= PRUNE_BELOW:
                lines.append(f"{f}\t{e}\t{prob!r}")
        lines.append("Q")
        for (i, j, l, m), prob in sorted(self.q.items()):
            lines.append(f"{i}\t{j}\t{l}\t{m}\t{prob!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AlignmentModel":
        """
        Load a model written by to_text.

        Raises:
            MalformedModelFile: On a bad header, section marker or entry
        """
        lines = text.split("\n")
        header = HEADER_RE.fullmatch(lines[0].rstrip("\r")) if lines else None
        if not header:
            raise MalformedModelFile("IBM2", 1, "expected 'IBM2 v1 ibm1_iterations=N ibm2_iterations=N'")
        t: TTable = {}
        q: QTable = {}
        section = None
        for line_number, line in enumerate(lines[1:], start=2):
            line = line.rstrip("\r")
            if not line:
                continue
            if line in ("T", "Q"):
                section = line
                continue
            parts = line.split("\t")
            try:
                if section == "T" and len(parts) == 3:
                    t[(parts[0], parts[1])] = float(parts[2])
                elif section == "Q" and len(parts) == 5:
                    i, j, l, m = (int(value) for value in parts[:4])
                    q[(i, j, l, m)] = float(parts[4])
                else:
                    raise ValueError(f"unexpected line {line!r}")
            except ValueError as e:
                raise MalformedModelFile("IBM2", line_number, str(e)) from None
        return cls(t=t, q=q, ibm1_iterations=int(header.group(1)), ibm2_iterations=int(header.group(2)))


def _check_training_args(pairs: Sequence[SentencePair], iterations: int) -> None:
    if not pairs:
        raise EmptyTrainingSet()
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")


def ibm1_em(pairs: Sequence[SentencePair], iterations: int) -> Tuple[TTable, List[float]]:
    """
    Run IBM Model 1 EM from a uniform lexical table.

    Args:
        pairs (Sequence[SentencePair]): Training pairs
        iterations (int): Number of EM iterations

    Returns:
        Tuple[TTable, List[float]]: The trained table and the corpus
        log-likelihood before each update followed by the final one
    """
    _check_training_args(pairs, iterations)
    source_vocab = {f for pair in pairs for f in pair.source}
    uniform = 1.0 / len(source_vocab)
    t: TTable = {}
    for pair in pairs:
        for f in pair.source:
            for e in pair.target:
                t[(f, e)] = uniform

    history = []
    for _ in range(iterations):
        counts: Dict[Tuple[str, str], float] = defaultdict(float)
        totals: Dict[str, float] = defaultdict(float)
        ll = 0.0
        # E-step
        for pair in pairs:
            target = pair.target
            for f in pair.source:
                probs = [t[(f, e)] for e in target]
                z = sum(probs)
                ll += math.log(z / len(target))
                for e, p in zip(target, probs):
                    delta = p / z
                    counts[(f, e)] += delta
                    totals[e] += delta
        history.append(ll)
        # M-step
        t = {key: count / totals[key[1]] for key, count in counts.items()}
    history.append(log_likelihood(t, pairs))
    return t, history


def train_ibm1(pairs: Sequence[SentencePair], iterations: int) -> TTable:
    """
    Train the IBM Model 1 lexical table t(f|e).

    Raises:
        EmptyTrainingSet: If no pairs are given
    """
    t, _ = ibm1_em(pairs, iterations)
    return t


def train_ibm2(pairs: Sequence[SentencePair],
               iterations: int,
               init_t: TTable,
               ibm1_history: Optional[List[float]] = None) -> AlignmentModel:
    """
    Train IBM Model 2 starting from a Model 1 lexical table.

    Args:
        pairs (Sequence[SentencePair]): Training pairs
        iterations (int): Number of EM iterations
        init_t (TTable): Lexical table from train_ibm1
        ibm1_history (List[float]): Model 1 log-likelihoods to carry on the model

    Returns:
        AlignmentModel: Lexical and distortion tables after the last M-step
    """
    _check_training_args(pairs, iterations)
    t = dict(init_t)
    q: QTable = {}
    for pair in pairs:
        l, m = pair.l, pair.m
        for j in range(1, m + 1):
            for i in range(l + 1):
                q[(i, j, l, m)] = 1.0 / (l + 1)

    history = list(ibm1_history or [])
    # The initial Model 1 likelihood is already the last entry of the carried history
    for _ in range(iterations):
        counts: Dict[Tuple[str, str], float] = defaultdict(float)
        totals: Dict[str, float] = defaultdict(float)
        q_counts: Dict[Tuple[int, int, int, int], float] = defaultdict(float)
        q_totals: Dict[Tuple[int, int, int], float] = defaultdict(float)
        for pair in pairs:
            target = pair.target
            l, m = pair.l, pair.m
            for j, f in enumerate(pair.source, start=1):
                scores = [q[(i, j, l, m)] * t.get((f, e), PROB_FLOOR) for i, e in enumerate(target)]
                z = sum(scores)
                if z <= 0.0:
                    continue
                for i, (e, score) in enumerate(zip(target, scores)):
                    delta = score / z
                    counts[(f, e)] += delta
                    totals[e] += delta
                    q_counts[(i, j, l, m)] += delta
                    q_totals[(j, l, m)] += delta
        t = {key: count / totals[key[1]] for key, count in counts.items()}
        q = {key: count / q_totals[key[1:]] for key, count in q_counts.items()}
        history.append(log_likelihood_ibm2(t, q, pairs))

    return AlignmentModel(
        t=t,
        q=q,
        ibm1_iterations=max(len(ibm1_history or []) - 1, 0),
        ibm2_iterations=iterations,
        ll_history=history,
    )


def log_likelihood_ibm2(t: TTable, q: QTable, pairs: Sequence[SentencePair]) -> float:
    total = 0.0
    for pair in pairs:
        l, m = pair.l, pair.m
        for j, f in enumerate(pair.source, start=1):
            z = sum(
                q.get((i, j, l, m), 1.0 / (l + 1)) * t.get((f, e), PROB_FLOOR)
                for i, e in enumerate(pair.target)
            )
            total += math.log(max(z, PROB_FLOOR))
    return total


def log_likelihood(model: Union[TTable, AlignmentModel], pairs: Sequence[SentencePair]) -> float:
    """
    Corpus log-likelihood: sum over pairs and source positions of log sum_i q*t.

    A bare lexical table is scored as Model 1, i.e. with q = 1/(l+1).
    """
    if isinstance(model, AlignmentModel):
        total = 0.0
        for pair in pairs:
            l, m = pair.l, pair.m
            for j, f in enumerate(pair.source, start=1):
                z = sum(
                    model.distortion(i, j, l, m) * model.t.get((f, e), PROB_FLOOR)
                    for i, e in enumerate(pair.target)
                )
                total += math.log(max(z, PROB_FLOOR))
        return total
    return log_likelihood_ibm2(model, {}, pairs)


def viterbi_align(model: AlignmentModel, pair: SentencePair) -> Alignment:
    """
    Link every source position to its most probable target position.

    Ties go to the smallest target position, so NULL wins a full tie.
    """
    l, m = pair.l, pair.m
    links = []
    for j, f in enumerate(pair.source, start=1):
        best_i = 0
        best_score = -1.0
        for i, e in enumerate(pair.target):
            score = model.distortion(i, j, l, m) * model.t.get((f, e), PROB_FLOOR)
            if score > best_score:
                best_i, best_score = i, score
        links.append(best_i)
    return Alignment(links=links)


def align_corpus(model: AlignmentModel, pairs: Sequence[SentencePair]) -> List[Alignment]:
    return [viterbi_align(model, pair) for pair in pairs]


def content_pair(symbols: Sequence[str],
                 punctuation: Sequence[bool],
                 pivot_words: Sequence[str]) -> Optional[Tuple[SentencePair, List[int], List[int]]]:
    """
    Pair the source symbols outside punctuation-only words with the
    non-punctuation pivot words.

    Args:
        symbols (Sequence[str]): Source symbols (subword pieces or words)
        punctuation (Sequence[bool]): Per symbol, whether its word is punctuation only
        pivot_words (Sequence[str]): Words of the pivot verse

    Returns:
        Optional[Tuple[SentencePair, List[int], List[int]]]: The pair, the
        positions of its source symbols in ``symbols`` and of its target words
        in ``pivot_words``; None when either side has nothing left
    """
    source_positions = [j for j, punct in enumerate(punctuation) if not punct]
    target_positions = [i for i, word in enumerate(pivot_words) if not is_punctuation(word)]
    if not source_positions or not target_positions:
        return None
    pair = SentencePair.build([symbols[j] for j in source_positions], [pivot_words[i] for i in target_positions])
    return pair, source_positions, target_positions


def verse_pair(tokens: Sequence[str],
               pivot_words: Sequence[str],
               bpe: Optional[BpeModel] = None) -> Optional[Tuple[SentencePair, List[int], List[int]]]:
    """content_pair of one source verse, split into subword pieces when a tokenizer is given"""
    if bpe is None:
        return content_pair(tokens, [is_punctuation(token) for token in tokens], pivot_words)
    pieces = encode_tokens(bpe, tokens)
    return content_pair(
        [piece.piece for piece in pieces],
        [is_punctuation(tokens[piece.word_index]) for piece in pieces],
        pivot_words,
    )


def build_pairs(source: Corpus,
                pivot: Corpus,
                ids: Sequence[str],
                bpe: Optional[BpeModel] = None) -> Tuple[List[str], List[SentencePair]]:
    """
    Pair source verses (subword pieces when a tokenizer is given) with pivot words.

    Punctuation-only words stay out of the pairs on both sides.

    Returns:
        Tuple[List[str], List[SentencePair]]: IDs present on both sides with
        something left to align, and their pairs
    """
    used = []
    pairs = []
    for verse_id in ids:
        verse = source.verses.get(verse_id)
        pivot_verse = pivot.verses.get(verse_id)
        if verse is None or pivot_verse is None:
            continue
        content = verse_pair(verse.tokens, pivot_verse.tokens, bpe)
        if content is None:
            continue
        used.append(verse_id)
        pairs.append(content[0])
    return used, pairs


class AlignerStage(BaseStage):
    """Stage training one language's IBM Model 2 aligner"""

    def __init__(self, language: str,
                 ibm1_iterations: int = DEFAULT_IBM1_ITERATIONS,
                 ibm2_iterations: int = DEFAULT_IBM2_ITERATIONS):
        """
        Initialize the aligner stage.

        Args:
            language (str): ISO code, used in log lines
            ibm1_iterations (int): Model 1 EM iterations
            ibm2_iterations (int): Model 2 EM iterations
        """
        super().__init__(f"Aligner[{language}]")
        self.ibm1_iterations = ibm1_iterations
        self.ibm2_iterations = ibm2_iterations

    def run(self, pairs: Sequence[SentencePair]) -> AlignmentModel:
        self.log(f"Training IBM1 ({self.ibm1_iterations} it.) then IBM2 ({self.ibm2_iterations} it.) on {len(pairs)} pairs")
        t, history = ibm1_em(pairs, self.ibm1_iterations)
        for iteration, ll in enumerate(history[1:], start=1):
            self.log(f"IBM1 iteration {iteration}: log-likelihood {ll:.4f}", level=logging.DEBUG)
        model = train_ibm2(pairs, self.ibm2_iterations, t, ibm1_history=history)
        self.log(f"Final log-likelihood {model.ll_history[-1]:.4f}; {len(model.t)} lexical entries")
        return model
