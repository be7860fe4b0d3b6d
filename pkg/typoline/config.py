"""
Pipeline configuration: a ``key = value`` file overridable from TYPOLINE_* environment variables.
"""
from pathlib import Path
from typing import Annotated, Any, Dict, FrozenSet, List, Optional, Tuple, Type

from configobj import ConfigObj, ConfigObjError
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, NoDecode, PydanticBaseSettingsSource, SettingsConfigDict

from typoline.errors import ConfigError, MalformedLine
from typoline.fileio import PathLike, read_text
from typoline.models import PosTag, is_iso_code, parse_tag_set
from typoline.typology import Feature

PATH_KEYS = ("pivot_tagged_path", "lemma_paths", "corpus_dir", "output_dir",
             "manifest_path", "labels_path", "lemma_map_path")


class PipelineConfig(BaseSettings):
    """Settings of an end-to-end run"""
    model_config = SettingsConfigDict(env_prefix="TYPOLINE_", extra="forbid", frozen=True)

    pivot_tagged_path: Path = Field(..., description="Tagged pivot (English) verse file")
    lemma_paths: Annotated[List[Path], NoDecode] = Field(..., min_length=2, max_length=2,
                                                         description="Lemma files of two English translations")
    corpus_dir: Path = Field(..., description="Directory holding <iso>.txt raw verse files")
    output_dir: Path
    manifest_path: Optional[Path] = Field(None, description="One ISO code per line; defaults to every <iso>.txt")
    labels_path: Optional[Path] = Field(None, description="iso<TAB>SV|VS|FREE|UNK rows")
    lemma_map_path: Optional[Path] = Field(None, description="form<TAB>lemma rows for the pivot verbs")

    min_shared: int = Field(4, ge=1)
    min_other: int = Field(5, ge=1)
    vocab_size: int = Field(4000, ge=1)
    ibm1_iters: int = Field(5, ge=1)
    ibm2_iters: int = Field(5, ge=1)
    arg_tags: Annotated[FrozenSet[PosTag], NoDecode] = frozenset({PosTag.NOUN})
    pred_tags: Annotated[FrozenSet[PosTag], NoDecode] = frozenset({PosTag.VERB})
    feature: Feature = Feature.SMOOTHED
    unaligned_tag: PosTag = PosTag.X
    seed: Optional[int] = Field(None, description="Reserved; the pipeline is deterministic")

    @classmethod
    def settings_customise_sources(cls,
                                   settings_cls: Type[BaseSettings],
                                   init_settings: PydanticBaseSettingsSource,
                                   env_settings: PydanticBaseSettingsSource,
                                   dotenv_settings: PydanticBaseSettingsSource,
                                   file_secret_settings: PydanticBaseSettingsSource,
                                   ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # Environment first so TYPOLINE_* overrides the config file
        return env_settings, init_settings

    @field_validator("lemma_paths", mode="before")
    @classmethod
    def _split_paths(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value

    @field_validator("arg_tags", "pred_tags", mode="before")
    @classmethod
    def _parse_tags(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            value = ",".join(str(item) for item in value)
        if isinstance(value, str):
            tags = parse_tag_set(value)
            if not tags:
                raise ValueError("tag set must not be empty")
            return tags
        return value

    @field_validator("pivot_tagged_path", "corpus_dir", "output_dir", mode="before")
    @classmethod
    def _non_empty(cls, value: Any) -> Any:
        if isinstance(value, str) and not value.strip():
            raise ValueError("path must not be empty")
        return value

    @classmethod
    def from_file(cls, path: PathLike, **overrides: Any) -> "PipelineConfig":
        """
        Read a ``key = value`` config file.

        Args:
            path (PathLike): The config file; relative paths inside it resolve against its directory
            **overrides: Values taking precedence over the file

        Returns:
            PipelineConfig: The validated configuration

        Raises:
            ConfigError: On unknown keys, unreadable files or invalid values
        """
        path = Path(path)
        try:
            raw = ConfigObj(str(path), encoding="utf-8", file_error=True)
        except (OSError, ConfigObjError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e

        values: Dict[str, Any] = {key: raw[key] for key in raw.scalars}
        unknown = sorted((set(values) - set(cls.model_fields)) | set(raw.sections))
        if unknown:
            raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
        base = path.parent
        for key in PATH_KEYS:
            if key in values:
                values[key] = _resolve(values[key], base)
        values.update(overrides)
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid config {path}: {e}") from e

    def languages(self) -> List[str]:
        """ISO codes from the manifest, or every '<iso>.txt' in corpus_dir"""
        if self.manifest_path is not None:
            return parse_manifest(read_text(self.manifest_path))
        return sorted(
            p.name[:-len(".txt")] for p in self.corpus_dir.glob("*.txt")
            if is_iso_code(p.name[:-len(".txt")])
        )


def _resolve(value: Any, base: Path) -> Any:
    if isinstance(value, (list, tuple)):
        return [_resolve(item, base) for item in value]
    if isinstance(value, str) and "," in value:
        return [_resolve(item.strip(), base) for item in value.split(",") if item.strip()]
    if not value:
        return value
    candidate = Path(value).expanduser()
    return str(candidate if candidate.is_absolute() else base / candidate)


def parse_manifest(text: str) -> List[str]:
    """
    One ISO code per line; blank and '#' lines skipped, duplicates dropped.

    Raises:
        MalformedLine: On a line that is not a 3-letter code
    """
    languages = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not is_iso_code(line):
            raise MalformedLine(line_number, line)
        if line not in languages:
            languages.append(line)
    return languages
