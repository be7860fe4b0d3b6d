"""
N1 ratio extraction and the Gaussian Naive Bayes word-order classifier.

A verse counts as noun-first when an argument tag occurs before any predicate
tag, verb-first otherwise; verses lacking either are left out. The N1 ratio
of a language is its noun-first count over its verb-first count, and a
one-feature GNB over that ratio predicts SV / VS / FREE for unlabelled
languages.
"""
import logging
import math
import re
from collections import Counter
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import softmax

from typoline.base_stage import BaseStage
from typoline.errors import EmptyTraining, MalformedLine, MalformedModelFile, SingleClass
from typoline.models import Corpus, PosTag, TaggedVerse, WordOrderLabel, is_iso_code

GNB_HEADER_RE = re.compile(r"GNB v1 epsilon=(\S+)")
EPSILON_SCALE = 1e-9
EPSILON_FLOOR = 1e-12
N1_ARG_TAGS: FrozenSet[PosTag] = frozenset({PosTag.NOUN})
N1_PRED_TAGS: FrozenSet[PosTag] = frozenset({PosTag.VERB})


class VerseOrder(str, Enum):
    NOUN_FIRST = "NounFirst"
    VERB_FIRST = "VerbFirst"
    NEITHER = "Neither"


class Feature(str, Enum):
    """Classifier feature derived from an N1 profile"""
    RAW = "raw"
    SMOOTHED = "smoothed"
    LOG_SMOOTHED = "log-smoothed"


class N1Profile(BaseModel):
    """Noun-first / verb-first verse counts of one language"""
    model_config = ConfigDict(frozen=True)

    language: str = Field(..., description="ISO 639-3 code")
    noun_first: int = Field(..., ge=0)
    verb_first: int = Field(..., ge=0)
    considered: int = Field(..., ge=0, description="Verses holding both an argument and a predicate tag")

    @model_validator(mode="after")
    def _check_counts(self) -> "N1Profile":
        if self.considered != self.noun_first + self.verb_first:
            raise ValueError("considered must equal noun_first + verb_first")
        return self

    @property
    def raw_ratio(self) -> Optional[float]:
        if self.verb_first == 0:
            return None
        return self.noun_first / self.verb_first

    @property
    def smoothed_ratio(self) -> float:
        return (self.noun_first + 1) / (self.verb_first + 1)


class GnbClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: WordOrderLabel
    prior: float = Field(..., gt=0.0, le=1.0)
    mean: float
    variance: float = Field(..., gt=0.0)


class GnbModel(BaseModel):
    """One-feature Gaussian Naive Bayes model, classes in label order"""
    model_config = ConfigDict(frozen=True)

    classes: List[GnbClass] = Field(..., min_length=2)
    epsilon: float = Field(..., gt=0.0, description="Variance floor added to every class variance")

    @model_validator(mode="after")
    def _check_classes(self) -> "GnbModel":
        if abs(sum(c.prior for c in self.classes) - 1.0) > 1e-9:
            raise ValueError("class priors must sum to 1")
        if any(c.variance < self.epsilon for c in self.classes):
            raise ValueError("class variance below epsilon")
        labels = [c.label.value for c in self.classes]
        if labels != sorted(set(labels)):
            raise ValueError("classes must be unique and in label order")
        return self

    @property
    def labels(self) -> List[WordOrderLabel]:
        return [c.label for c in self.classes]

    def to_text(self) -> str:
        lines = [f"GNB v1 epsilon={self.epsilon!r}"]
        lines.extend(f"{c.label.value}\t{c.prior!r}\t{c.mean!r}\t{c.variance!r}" for c in self.classes)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GnbModel":
        """
        Load a model written by to_text.

        Raises:
            MalformedModelFile: On a bad header or class row
        """
        lines = text.split("\n")
        header = GNB_HEADER_RE.fullmatch(lines[0].rstrip("\r")) if lines else None
        if not header:
            raise MalformedModelFile("GNB", 1, "expected header 'GNB v1 epsilon=<value>'")
        classes = []
        for line_number, line in enumerate(lines[1:], start=2):
            line = line.rstrip("\r")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                if len(parts) != 4:
                    raise ValueError(f"expected 'label<TAB>prior<TAB>mean<TAB>variance', got {line!r}")
                classes.append(GnbClass(
                    label=WordOrderLabel(parts[0]),
                    prior=float(parts[1]),
                    mean=float(parts[2]),
                    variance=float(parts[3]),
                ))
            except ValueError as e:
                raise MalformedModelFile("GNB", line_number, str(e)) from None
        return cls(classes=classes, epsilon=float(header.group(1)))


class Prediction(BaseModel):
    """Classifier output for one language"""
    model_config = ConfigDict(frozen=True)

    language: str
    value: float
    label: WordOrderLabel
    posteriors: Dict[WordOrderLabel, float]


class PredictionReport(BaseModel):
    """Predictions for every unlabelled language plus those without a defined feature"""
    model_config = ConfigDict(frozen=True)

    labels: List[WordOrderLabel]
    rows: List[Prediction] = Field(default_factory=list)
    undefined: List[str] = Field(default_factory=list, description="Languages whose feature is undefined")

    def counts(self) -> Dict[WordOrderLabel, int]:
        tally = Counter(row.label for row in self.rows)
        return {label: tally.get(label, 0) for label in self.labels}

    def to_tsv(self) -> str:
        header = "\t".join(["# iso", "feature", "predicted"] + [f"p_{label.value}" for label in self.labels])
        lines = [header]
        for row in self.rows:
            posteriors = "\t".join(f"{row.posteriors[label]:.6f}" for label in self.labels)
            lines.append(f"{row.language}\t{row.value!r}\t{row.label.value}\t{posteriors}")
        for iso in self.undefined:
            lines.append(f"{iso}\tNA\tNA" + "\tNA" * len(self.labels))
        counts = self.counts()
        lines.append("# predicted " + " ".join(f"{label.value}={counts[label]}" for label in self.labels))
        return "\n".join(lines) + "\n"


def verse_order(verse: TaggedVerse,
                arg_tags: FrozenSet[PosTag] = N1_ARG_TAGS,
                pred_tags: FrozenSet[PosTag] = N1_PRED_TAGS) -> VerseOrder:
    """
    Classify a verse by whether an argument or a predicate tag comes first.

    Args:
        verse (TaggedVerse): The tagged verse
        arg_tags (FrozenSet[PosTag]): Tags counted as arguments
        pred_tags (FrozenSet[PosTag]): Tags counted as predicates

    Returns:
        VerseOrder: Neither when the verse lacks an argument or a predicate
    """
    tags = verse.tags
    if not any(tag in arg_tags for tag in tags) or not any(tag in pred_tags for tag in tags):
        return VerseOrder.NEITHER
    for tag in tags:
        if tag in arg_tags:
            return VerseOrder.NOUN_FIRST
        if tag in pred_tags:
            return VerseOrder.VERB_FIRST
    return VerseOrder.NEITHER


def n1_profile(corpus: Corpus,
               arg_tags: FrozenSet[PosTag] = N1_ARG_TAGS,
               pred_tags: FrozenSet[PosTag] = N1_PRED_TAGS) -> N1Profile:
    orders = Counter(verse_order(verse, arg_tags, pred_tags) for verse in corpus.verses.values())
    noun_first = orders[VerseOrder.NOUN_FIRST]
    verb_first = orders[VerseOrder.VERB_FIRST]
    return N1Profile(
        language=corpus.language,
        noun_first=noun_first,
        verb_first=verb_first,
        considered=noun_first + verb_first,
    )


def feature_value(profile: N1Profile, feature: Feature = Feature.SMOOTHED) -> Optional[float]:
    """The classifier feature of a profile; None for the raw ratio without verb-first verses"""
    feature = Feature(feature)
    if feature == Feature.RAW:
        return profile.raw_ratio
    if feature == Feature.LOG_SMOOTHED:
        return math.log(profile.smoothed_ratio)
    return profile.smoothed_ratio


def gnb_train(samples: Sequence[Tuple[float, WordOrderLabel]]) -> GnbModel:
    """
    Fit one Gaussian per word-order class.

    Args:
        samples (Sequence[Tuple[float, WordOrderLabel]]): Feature values with SV/VS/FREE labels

    Returns:
        GnbModel: Class priors, means and maximum-likelihood variances plus epsilon

    Raises:
        EmptyTraining: If there are no samples
        SingleClass: If only one class is present
    """
    if not samples:
        raise EmptyTraining()
    values = np.asarray([value for value, _ in samples], dtype=float)
    targets = np.asarray([WordOrderLabel(label).value for _, label in samples])
    if WordOrderLabel.UNK.value in targets:
        raise ValueError("UNK rows cannot be used for training")
    classes = np.unique(targets)
    if len(classes) < 2:
        raise SingleClass(str(classes[0]))

    epsilon = max(EPSILON_SCALE * float(np.var(values)), EPSILON_FLOOR)
    fitted = []
    for label in classes:
        class_values = values[targets == label]
        fitted.append(GnbClass(
            label=WordOrderLabel(label),
            prior=class_values.shape[0] / values.shape[0],
            mean=float(class_values.mean()),
            variance=float(class_values.var()) + epsilon,
        ))
    return GnbModel(classes=fitted, epsilon=epsilon)


def class_log_posteriors(model: GnbModel, value: float) -> np.ndarray:
    """Unnormalized log posterior of every class, in model class order"""
    priors = np.array([c.prior for c in model.classes])
    means = np.array([c.mean for c in model.classes])
    variances = np.array([c.variance for c in model.classes])
    return np.log(priors) - 0.5 * np.log(2 * np.pi * variances) - (value - means) ** 2 / (2 * variances)


def gnb_predict(model: GnbModel, value: float) -> Tuple[WordOrderLabel, Dict[WordOrderLabel, float]]:
    """
    Most probable class for one feature value.

    Returns:
        Tuple[WordOrderLabel, Dict[WordOrderLabel, float]]: The label (ties to the
        earliest label) and normalized posteriors
    """
    scores = class_log_posteriors(model, value)
    best = int(np.argmax(scores))
    posteriors = softmax(scores)
    return model.classes[best].label, {c.label: float(p) for c, p in zip(model.classes, posteriors)}


def training_samples(profiles: Mapping[str, N1Profile],
                     labels: Mapping[str, WordOrderLabel],
                     feature: Feature = Feature.SMOOTHED) -> List[Tuple[float, WordOrderLabel]]:
    """Feature values of labelled languages (UNK and undefined features left out), in ISO order"""
    samples = []
    for iso in sorted(profiles):
        label = labels.get(iso, WordOrderLabel.UNK)
        value = feature_value(profiles[iso], feature)
        if label != WordOrderLabel.UNK and value is not None:
            samples.append((value, label))
    return samples


def predict_unknown(model: GnbModel,
                    profiles: Mapping[str, N1Profile],
                    labels: Mapping[str, WordOrderLabel],
                    feature: Feature = Feature.SMOOTHED) -> PredictionReport:
    """
    Predict word order for languages labelled UNK or absent from the labels.

    Returns:
        PredictionReport: Rows in ISO order
    """
    rows = []
    undefined = []
    for iso in sorted(profiles):
        if labels.get(iso, WordOrderLabel.UNK) != WordOrderLabel.UNK:
            continue
        value = feature_value(profiles[iso], feature)
        if value is None:
            undefined.append(iso)
            continue
        label, posteriors = gnb_predict(model, value)
        rows.append(Prediction(language=iso, value=value, label=label, posteriors=posteriors))
    return PredictionReport(labels=model.labels, rows=rows, undefined=undefined)


def serialize_profiles(profiles: Sequence[N1Profile]) -> str:
    lines = ["# iso\tnoun_first\tverb_first\tconsidered\traw\tsmoothed"]
    for p in sorted(profiles, key=lambda profile: profile.language):
        raw = "NA" if p.raw_ratio is None else repr(p.raw_ratio)
        lines.append(f"{p.language}\t{p.noun_first}\t{p.verb_first}\t{p.considered}\t{raw}\t{p.smoothed_ratio!r}")
    return "\n".join(lines) + "\n"


def parse_profiles(text: str) -> Dict[str, N1Profile]:
    """
    Parse a profile table; the ratio columns are recomputed from the counts.

    Raises:
        MalformedLine: On a row without six columns, a bad ISO code or bad counts
    """
    profiles = {}
    for line_number, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 6 or not is_iso_code(parts[0]):
            raise MalformedLine(line_number, line)
        try:
            profiles[parts[0]] = N1Profile(
                language=parts[0],
                noun_first=int(parts[1]),
                verb_first=int(parts[2]),
                considered=int(parts[3]),
            )
        except ValueError:
            raise MalformedLine(line_number, line) from None
    return profiles


class TypologyStage(BaseStage):
    """Stage training the word-order classifier and labelling unknown languages"""

    def __init__(self, feature: Feature = Feature.SMOOTHED):
        super().__init__("Typology")
        self.feature = Feature(feature)

    def run(self, profiles: Mapping[str, N1Profile],
            labels: Mapping[str, WordOrderLabel]) -> Tuple[GnbModel, PredictionReport]:
        samples = training_samples(profiles, labels, self.feature)
        self.log(f"Training GNB on {len(samples)} labelled languages (feature={self.feature.value})")
        model = gnb_train(samples)
        report = predict_unknown(model, profiles, labels, self.feature)
        counts = ", ".join(f"{label.value}={n}" for label, n in report.counts().items())
        self.log(f"Predicted {len(report.rows)} languages: {counts}")
        if report.undefined:
            self.log(f"Feature undefined for {len(report.undefined)} languages", level=logging.WARNING)
        return model, report
