"""
Validation protocols: agreement with a reference tagger, form+tag overlap
with a gold corpus, and a one-way ANOVA of N1 ratios across word-order
classes.
"""
import itertools
import math
import unicodedata
from collections import defaultdict
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Set, Tuple, Union

import conllu
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import betainc

from typoline.corpus import read_corpus
from typoline.errors import MalformedLine, NoComparableVerses, TooFewGroups, UnknownTag
from typoline.fileio import PathLike, read_text
from typoline.models import Corpus, PosTag, WordOrderLabel
from typoline.typology import Feature, N1Profile, feature_value

P_VALUE_CLAMP = 1e-300

Lexicon = Set[Tuple[str, PosTag]]


class Direction(str, Enum):
    """Which side's tags form the agreement denominator"""
    RECALL = "recall"
    PRECISION = "precision"


class GoldFormat(str, Enum):
    TAGGED = "tagged"
    CONLLU = "conllu"
    LEXICON = "lexicon"


class TagAgreement(BaseModel):
    model_config = ConfigDict(frozen=True)

    matched: int = Field(..., ge=0)
    total: int = Field(..., ge=0)

    @property
    def rate(self) -> Optional[float]:
        return self.matched / self.total if self.total else None


class AgreementReport(BaseModel):
    """Per-tag correspondence between a hypothesis and a reference tagging"""
    model_config = ConfigDict(frozen=True)

    direction: Direction = Direction.RECALL
    per_tag: Dict[PosTag, TagAgreement]
    compared_verses: int = Field(..., ge=0)
    skipped_verses: int = Field(..., ge=0)

    @property
    def average(self) -> Optional[float]:
        """Macro average over tags with a defined rate"""
        rates = [agreement.rate for agreement in self.per_tag.values() if agreement.rate is not None]
        return sum(rates) / len(rates) if rates else None

    def to_tsv(self) -> str:
        lines = [
            f"# direction={self.direction.value} compared_verses={self.compared_verses} "
            f"skipped_verses={self.skipped_verses}",
            "# tag\tmatched\ttotal\trate",
        ]
        for tag, agreement in sorted(self.per_tag.items(), key=lambda item: item[0].value):
            lines.append(f"{tag.value}\t{agreement.matched}\t{agreement.total}\t{_fmt(agreement.rate)}")
        lines.append(f"Average\t\t\t{_fmt(self.average)}")
        return "\n".join(lines) + "\n"


class OverlapReport(BaseModel):
    """Forms carrying the same tag in the gold data and the hypothesis"""
    model_config = ConfigDict(frozen=True)

    per_tag: Dict[PosTag, FrozenSet[str]]

    def to_tsv(self) -> str:
        lines = ["# tag\tshared\tforms"]
        for tag, forms in sorted(self.per_tag.items(), key=lambda item: item[0].value):
            lines.append(f"{tag.value}\t{len(forms)}\t{' '.join(sorted(forms))}")
        return "\n".join(lines) + "\n"


class AnovaResult(BaseModel):
    """One-way ANOVA over groups of feature values"""
    model_config = ConfigDict(frozen=True)

    f_stat: float = Field(..., ge=0.0)
    df_between: int = Field(..., ge=1)
    df_within: int = Field(..., ge=1)
    p_value: float = Field(..., ge=0.0, le=1.0)
    group_sizes: Dict[str, int]
    group_means: Dict[str, float]
    pairwise_mean_diffs: Dict[Tuple[str, str], float]
    zero_within_variance: bool = Field(False, description="Every group is constant but the group means differ; F = inf and p = 0")

    def to_tsv(self) -> str:
        lines = [
            "# record\tkey\tvalue",
            f"stat\tF\t{self.f_stat!r}",
            f"stat\tdf_between\t{self.df_between}",
            f"stat\tdf_within\t{self.df_within}",
            f"stat\tp_value\t{format_p_value(self.p_value)}",
            f"stat\tzero_within_variance\t{'yes' if self.zero_within_variance else 'no'}",
        ]
        for label in sorted(self.group_means):
            lines.append(f"group\t{label}\tn={self.group_sizes[label]}\tmean={self.group_means[label]!r}")
        for (a, b), diff in sorted(self.pairwise_mean_diffs.items()):
            lines.append(f"diff\t{a}-{b}\t{diff!r}")
        return "\n".join(lines) + "\n"


def _fmt(rate: Optional[float]) -> str:
    return "NA" if rate is None else f"{rate:.4f}"


def format_p_value(p: float) -> str:
    return f"<{P_VALUE_CLAMP:g}" if p < P_VALUE_CLAMP else repr(p)


def tag_agreement(reference: Corpus,
                  hypothesis: Corpus,
                  tags_of_interest: FrozenSet[PosTag],
                  direction: Direction = Direction.RECALL) -> AgreementReport:
    """
    Compare two taggings of the same text, verse by verse.

    Only shared verses whose token sequences are identical are compared.

    Args:
        reference (Corpus): Reference tagging (e.g. an off-the-shelf tagger)
        hypothesis (Corpus): Projected tagging
        tags_of_interest (FrozenSet[PosTag]): Tags to report
        direction (Direction): recall divides by reference-tagged tokens,
            precision by hypothesis-tagged tokens

    Returns:
        AgreementReport: Matched and total counts per tag

    Raises:
        NoComparableVerses: If no shared verse has identical tokenization
    """
    direction = Direction(direction)
    matched: Dict[PosTag, int] = defaultdict(int)
    totals: Dict[PosTag, int] = defaultdict(int)
    compared = 0
    skipped = 0
    for verse_id in sorted(set(reference.verses) & set(hypothesis.verses)):
        ref_verse = reference.verses[verse_id]
        hyp_verse = hypothesis.verses[verse_id]
        if ref_verse.tokens != hyp_verse.tokens:
            skipped += 1
            continue
        compared += 1
        for ref_tag, hyp_tag in zip(ref_verse.tags, hyp_verse.tags):
            denominator, other = (ref_tag, hyp_tag) if direction == Direction.RECALL else (hyp_tag, ref_tag)
            if denominator in tags_of_interest:
                totals[denominator] += 1
                if other == denominator:
                    matched[denominator] += 1
    if compared == 0:
        raise NoComparableVerses(skipped)
    return AgreementReport(
        direction=direction,
        per_tag={tag: TagAgreement(matched=matched[tag], total=totals[tag]) for tag in tags_of_interest},
        compared_verses=compared,
        skipped_verses=skipped,
    )


def normalize_form(form: str) -> str:
    return unicodedata.normalize("NFC", form).casefold()


def lexicon_of(corpus: Corpus) -> Lexicon:
    """Set of (normalized form, tag) pairs of a tagged corpus"""
    return {
        (normalize_form(token), tag)
        for verse in corpus.verses.values()
        for token, tag in verse.entries
    }


def gold_overlap(gold: Union[Corpus, Lexicon],
                 hypothesis: Union[Corpus, Lexicon],
                 tags_of_interest: FrozenSet[PosTag]) -> OverlapReport:
    """
    Forms that carry the same tag on both sides, after NFC and case-folding.

    Args:
        gold (Union[Corpus, Lexicon]): Gold corpus or (form, tag) lexicon
        hypothesis (Union[Corpus, Lexicon]): Projected corpus or lexicon
        tags_of_interest (FrozenSet[PosTag]): Tags to report

    Returns:
        OverlapReport: Shared forms per tag
    """
    gold_lex = lexicon_of(gold) if isinstance(gold, Corpus) else {(normalize_form(f), t) for f, t in gold}
    hyp_lex = lexicon_of(hypothesis) if isinstance(hypothesis, Corpus) else {
        (normalize_form(f), t) for f, t in hypothesis
    }
    shared = gold_lex & hyp_lex
    return OverlapReport(per_tag={
        tag: frozenset(form for form, shared_tag in shared if shared_tag == tag)
        for tag in tags_of_interest
    })


def parse_lexicon(text: str) -> Lexicon:
    """
    Parse ``form<TAB>TAG`` lines.

    Raises:
        MalformedLine: On a line without exactly two columns
        UnknownTag: On a tag outside the UD inventory
    """
    lexicon = set()
    for line_number, line in enumerate(unicodedata.normalize("NFC", text).split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0]:
            raise MalformedLine(line_number, line)
        try:
            lexicon.add((parts[0], PosTag(parts[1].strip())))
        except ValueError:
            raise UnknownTag(parts[1].strip()) from None
    return lexicon


def read_conllu_lexicon(path: PathLike) -> Lexicon:
    """
    Collect (form, UPOS) pairs from a UD treebank file.

    Multiword-token ranges and empty nodes are skipped; so are tokens whose
    UPOS is missing.
    """
    lexicon = set()
    with open(path, encoding="utf-8") as handle:
        for sentence in conllu.parse_incr(handle):
            for token in sentence:
                if not isinstance(token["id"], int):
                    continue
                upos = token.get("upos")
                if not upos or upos == "_":
                    continue
                try:
                    lexicon.add((unicodedata.normalize("NFC", token["form"]), PosTag(upos)))
                except ValueError:
                    raise UnknownTag(upos) from None
    return lexicon


def read_gold(path: PathLike, gold_format: GoldFormat = GoldFormat.TAGGED) -> Union[Corpus, Lexicon]:
    gold_format = GoldFormat(gold_format)
    if gold_format == GoldFormat.CONLLU:
        return read_conllu_lexicon(path)
    if gold_format == GoldFormat.LEXICON:
        return parse_lexicon(read_text(path))
    return read_corpus(path, tagged=True)


def guess_gold_format(path: PathLike) -> GoldFormat:
    name = Path(path).name
    if name.endswith(".conllu"):
        return GoldFormat.CONLLU
    if name.endswith(".tagged.txt"):
        return GoldFormat.TAGGED
    return GoldFormat.LEXICON


def f_survival(f: float, d1: int, d2: int) -> float:
    """
    P(F > f) for the F(d1, d2) distribution.

    Computed as the regularized incomplete beta I_x(d2/2, d1/2) with
    x = d2 / (d2 + d1*f).
    """
    if d1 < 1 or d2 < 1:
        raise ValueError(f"degrees of freedom must be positive, got {d1} and {d2}")
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = d2 / (d2 + d1 * f)
    return min(max(float(betainc(d2 / 2.0, d1 / 2.0, x)), 0.0), 1.0)


def anova_oneway(groups: Mapping[str, Sequence[float]]) -> AnovaResult:
    """
    One-way ANOVA F test.

    Args:
        groups (Mapping[str, Sequence[float]]): Values per group label

    Returns:
        AnovaResult: F, degrees of freedom, p-value, group means and
        absolute pairwise mean differences

    Raises:
        TooFewGroups: With fewer than two groups, an empty group, or N - k < 1
    """
    if len(groups) < 2:
        raise TooFewGroups(f"need at least 2 groups, got {len(groups)}")
    arrays = {label: np.asarray(values, dtype=float) for label, values in sorted(groups.items())}
    empty = [label for label, values in arrays.items() if values.size == 0]
    if empty:
        raise TooFewGroups(f"empty group {empty[0]}")
    k = len(arrays)
    n = sum(values.size for values in arrays.values())
    if n - k < 1:
        raise TooFewGroups(f"no within-group degrees of freedom (N={n}, k={k})")

    grand_mean = np.concatenate(list(arrays.values())).mean()
    means = {label: float(values.mean()) for label, values in arrays.items()}
    ss_between = float(sum(values.size * (means[label] - grand_mean) ** 2 for label, values in arrays.items()))
    ss_within = float(sum(((values - means[label]) ** 2).sum() for label, values in arrays.items()))
    df_between = k - 1
    df_within = n - k

    zero_within = ss_within == 0.0 and ss_between > 0.0
    if zero_within:
        f_stat, p_value = math.inf, 0.0
    elif ss_within == 0.0:
        f_stat, p_value = 0.0, 1.0
    else:
        f_stat = (ss_between / df_between) / (ss_within / df_within)
        p_value = f_survival(f_stat, df_between, df_within)

    return AnovaResult(
        f_stat=f_stat,
        df_between=df_between,
        df_within=df_within,
        p_value=p_value,
        group_sizes={label: int(values.size) for label, values in arrays.items()},
        group_means=means,
        pairwise_mean_diffs={
            (a, b): abs(means[a] - means[b]) for a, b in itertools.combinations(sorted(means), 2)
        },
        zero_within_variance=zero_within,
    )


def feature_groups(profiles: Mapping[str, N1Profile],
                   labels: Mapping[str, WordOrderLabel],
                   feature: Feature = Feature.SMOOTHED) -> Dict[str, List[float]]:
    """Feature values grouped by known word-order label (UNK and undefined values left out)"""
    groups: Dict[str, List[float]] = defaultdict(list)
    for iso in sorted(profiles):
        label = labels.get(iso, WordOrderLabel.UNK)
        value = feature_value(profiles[iso], feature)
        if label != WordOrderLabel.UNK and value is not None:
            groups[label.value].append(value)
    return dict(groups)
