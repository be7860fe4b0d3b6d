"""
Domain errors raised by the pipeline stages.

Every error derives from TypolineError (itself a ValueError) so callers can
catch the whole family in one place; the CLI maps it to exit code 1.
"""
from typing import Optional


class TypolineError(ValueError):
    """Base class for all domain errors"""


class MalformedLine(TypolineError):
    """A corpus line does not match 'ID<TAB>payload'"""

    def __init__(self, line_number: int, line: str = ""):
        self.line_number = line_number
        self.line = line
        super().__init__(f"line {line_number}: expected 'ID<TAB>tokens', got {line!r}")


class DuplicateVerseId(TypolineError):
    """The same verse ID occurs twice in one document"""

    def __init__(self, verse_id: str, line_number: Optional[int] = None):
        self.verse_id = verse_id
        self.line_number = line_number
        where = f" (line {line_number})" if line_number is not None else ""
        super().__init__(f"duplicate verse id {verse_id}{where}")


class InvalidVerseId(TypolineError):
    """A verse ID is not an 8-digit BBCCCVVV string"""

    def __init__(self, verse_id: str):
        self.verse_id = verse_id
        super().__init__(f"invalid verse id {verse_id!r}: expected 8 ASCII digits")


class UnknownTag(TypolineError):
    """A tag outside the 17-tag UD inventory"""

    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"unknown POS tag {tag!r}")


class MalformedUnit(TypolineError):
    """A tagged unit without a usable token/TAG split"""

    def __init__(self, unit: str):
        self.unit = unit
        super().__init__(f"malformed token/TAG unit {unit!r}")


class MissingVerse(TypolineError):
    """A requested verse is absent from the pivot corpus"""

    def __init__(self, verse_id: str):
        self.verse_id = verse_id
        super().__init__(f"verse {verse_id} missing from pivot corpus")


class EmptyCorpus(TypolineError):
    """Training was requested on a corpus without tokens"""

    def __init__(self, language: str = ""):
        self.language = language
        super().__init__(f"corpus {language!r} has no tokens to train on")


class NonMonotonicWordIndex(TypolineError):
    """Subword tokens whose word_index sequence decreases"""

    def __init__(self, position: int):
        self.position = position
        super().__init__(f"word_index decreases at subword position {position}")


class EmptyTrainingSet(TypolineError):
    """Alignment training without sentence pairs"""

    def __init__(self):
        super().__init__("no sentence pairs to train the alignment model on")


class EmptyVerse(TypolineError):
    """Projection on a verse with no source subwords or no pivot entries"""

    def __init__(self, verse_id: str = ""):
        self.verse_id = verse_id
        super().__init__(f"cannot project empty verse {verse_id}".rstrip())


class EmptyTraining(TypolineError):
    """Classifier training without samples"""

    def __init__(self):
        super().__init__("no labelled samples to train the classifier on")


class SingleClass(TypolineError):
    """Classifier training with fewer than two classes"""

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"classifier needs at least two classes, only saw {label}")


class NoComparableVerses(TypolineError):
    """No shared verse has identical tokenization on both sides"""

    def __init__(self, skipped: int):
        self.skipped = skipped
        super().__init__(f"no comparable verses ({skipped} shared verses skipped on tokenization mismatch)")


class TooFewGroups(TypolineError):
    """ANOVA with fewer than two groups, an empty group, or no within-group degrees of freedom"""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"cannot run one-way ANOVA: {reason}")


class MalformedModelFile(TypolineError):
    """A serialized model does not follow its file format"""

    def __init__(self, kind: str, line_number: int, detail: str):
        self.kind = kind
        self.line_number = line_number
        super().__init__(f"{kind} model file, line {line_number}: {detail}")


class ConfigError(TypolineError):
    """Invalid pipeline configuration"""
