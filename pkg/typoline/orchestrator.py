"""
End-to-end pipeline that coordinates all stages over a set of languages.
"""
import hashlib
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from typoline.aligner import AlignerStage, build_pairs
from typoline.base_stage import BaseStage
from typoline.config import PipelineConfig
from typoline.corpus import (
    parse_labels_file,
    read_corpus,
    serialize_tagged_file,
    summary_stats,
    verse_count_bin,
)
from typoline.errors import EmptyCorpus, EmptyTraining, SingleClass, TooFewGroups
from typoline.fileio import read_text, serialize_id_list, write_text_atomic
from typoline.log import setup_logging
from typoline.models import Corpus, CorpusStats, PosTag
from typoline.projector import ProjectionConfig, ProjectorStage
from typoline.subword import TokenizerStage
from typoline.typology import GnbModel, N1Profile, PredictionReport, TypologyStage, n1_profile, serialize_profiles
from typoline.validate import AnovaResult, anova_oneway, feature_groups
from typoline.verse_filter import FilterReport, VerseFilterStage, parse_lemma_file, parse_lemma_map

logger = logging.getLogger(__name__)


class LanguageOutcome(BaseModel):
    """What happened to one language during a run"""
    model_config = ConfigDict(frozen=True)

    language: str
    status: str = Field(..., description="ok, resumed or failed")
    projected: int = 0
    skipped: int = 0
    profile: Optional[N1Profile] = None
    stats: Optional[CorpusStats] = None
    error: str = ""


class PipelineSummary(BaseModel):
    """Results of a run, languages in ISO order"""
    model_config = ConfigDict(frozen=True)

    filter_report: Optional[FilterReport] = None
    outcomes: List[LanguageOutcome] = Field(default_factory=list)
    model: Optional[GnbModel] = None
    predictions: Optional[PredictionReport] = None
    anova: Optional[AnovaResult] = None

    @property
    def failed(self) -> List[str]:
        return [outcome.language for outcome in self.outcomes if outcome.status == "failed"]

    def to_tsv(self) -> str:
        lines = ["# iso\tstatus\tprojected\tskipped\terror"]
        for outcome in self.outcomes:
            error = " ".join(outcome.error.split())
            lines.append(f"{outcome.language}\t{outcome.status}\t{outcome.projected}\t{outcome.skipped}\t{error}")
        return "\n".join(lines) + "\n"


class LanguageStamp(BaseModel):
    """Settings a language's tagged output was produced under"""
    model_config = ConfigDict(frozen=True)

    min_shared: int
    min_other: int
    vocab_size: int
    ibm1_iters: int
    ibm2_iters: int
    unaligned_tag: PosTag
    selection: str = Field(..., description="sha256 of the selected verse IDs")

    @classmethod
    def of(cls, cfg: PipelineConfig, selected_ids: Sequence[str]) -> "LanguageStamp":
        return cls(
            min_shared=cfg.min_shared,
            min_other=cfg.min_other,
            vocab_size=cfg.vocab_size,
            ibm1_iters=cfg.ibm1_iters,
            ibm2_iters=cfg.ibm2_iters,
            unaligned_tag=cfg.unaligned_tag,
            selection=hashlib.sha256(serialize_id_list(selected_ids).encode("utf-8")).hexdigest(),
        )


def _stamp_matches(path: Path, stamp: LanguageStamp) -> bool:
    if not path.exists():
        return False
    try:
        return LanguageStamp.model_validate_json(read_text(path)) == stamp
    except ValueError:
        return False


def _is_fresh(output: Path, inputs: Sequence[Path]) -> bool:
    if not output.exists():
        return False
    mtime = output.stat().st_mtime
    return all(mtime > path.stat().st_mtime for path in inputs if path.exists())


def process_language(cfg: PipelineConfig,
                     language: str,
                     selected_ids: List[str],
                     pivot: Corpus,
                     resume: bool = False,
                     log_level: int = logging.INFO) -> LanguageOutcome:
    """
    Tokenize, align, project and profile one language.

    Runs in a worker process; failures become a failed outcome instead of
    propagating.

    Args:
        cfg (PipelineConfig): Run configuration
        language (str): ISO code; the raw corpus is '<corpus_dir>/<language>.txt'
        selected_ids (List[str]): Verses kept by the verse filter
        pivot (Corpus): Tagged pivot corpus
        resume (bool): Reuse an existing tagged file newer than its inputs and
            stamped with the current settings and verse selection
        log_level (int): Logging level to install in the worker

    Returns:
        LanguageOutcome: Status, counts and N1 profile of the language
    """
    if not logging.getLogger("typoline").handlers:
        setup_logging(log_level)
    source_path = cfg.corpus_dir / f"{language}.txt"
    tagged_path = cfg.output_dir / f"{language}.tagged.txt"
    stamp_path = cfg.output_dir / f"{language}.stamp.json"
    inputs = [source_path, cfg.pivot_tagged_path, *cfg.lemma_paths]
    if cfg.lemma_map_path is not None:
        inputs.append(cfg.lemma_map_path)
    stamp = LanguageStamp.of(cfg, selected_ids)
    try:
        if resume and _is_fresh(tagged_path, inputs) and _stamp_matches(stamp_path, stamp):
            logger.info("[Pipeline[%s]] Resuming from %s", language, tagged_path)
            tagged = read_corpus(tagged_path, tagged=True)
            return LanguageOutcome(
                language=language,
                status="resumed",
                projected=len(tagged),
                profile=n1_profile(tagged, cfg.arg_tags, cfg.pred_tags),
                stats=summary_stats(tagged),
            )

        # Step 1: Train the tokenizer on the selected verses
        source = read_corpus(source_path, tagged=False)
        training_ids = [verse_id for verse_id in selected_ids if verse_id in source.verses]
        if not training_ids:
            raise EmptyCorpus(language)
        training = Corpus.from_verses(language, [source.verses[verse_id] for verse_id in training_ids])
        bpe = TokenizerStage(language, cfg.vocab_size).run(training)
        write_text_atomic(cfg.output_dir / f"{language}.bpe", bpe.to_text())

        # Step 2: Train the aligner
        _, pairs = build_pairs(source, pivot, training_ids, bpe)
        model = AlignerStage(language, cfg.ibm1_iters, cfg.ibm2_iters).run(pairs)
        write_text_atomic(cfg.output_dir / f"{language}.ibm2", model.to_text())

        # Step 3: Project tags
        projection = ProjectorStage(language, ProjectionConfig(unaligned_tag=cfg.unaligned_tag)).run(
            model, source, bpe, pivot, selected_ids
        )
        write_text_atomic(tagged_path, serialize_tagged_file(projection.corpus))
        write_text_atomic(stamp_path, stamp.model_dump_json() + "\n")

        # Step 4: Profile
        return LanguageOutcome(
            language=language,
            status="ok",
            projected=projection.projected,
            skipped=len(projection.skipped),
            profile=n1_profile(projection.corpus, cfg.arg_tags, cfg.pred_tags),
            stats=summary_stats(projection.corpus),
        )
    except Exception as e:
        logger.error("[Pipeline[%s]] Failed: %s", language, e)
        return LanguageOutcome(language=language, status="failed", error=f"{type(e).__name__}: {e}")


def serialize_corpus_summary(outcomes: Sequence[LanguageOutcome]) -> str:
    lines = ["# iso\tverses\tunique_arguments\tunique_predicates\tbin"]
    for outcome in outcomes:
        if outcome.stats is not None:
            s = outcome.stats
            lines.append(f"{outcome.language}\t{s.verse_count}\t{s.unique_arguments}\t"
                         f"{s.unique_predicates}\t{verse_count_bin(s.verse_count)}")
    return "\n".join(lines) + "\n"


class Orchestrator(BaseStage):
    """
    Main orchestrator that runs the whole tagging and typology pipeline.

    The verse filter runs once; every language is then tokenized, aligned,
    projected and profiled independently (optionally in parallel); the
    classifier and the ANOVA run after all languages have finished.
    """

    def __init__(self, cfg: PipelineConfig, jobs: int = 1, resume: bool = False):
        """
        Initialize the orchestrator.

        Args:
            cfg (PipelineConfig): Run configuration
            jobs (int): Number of languages processed in parallel
            resume (bool): Skip languages whose tagged output is up to date
        """
        super().__init__("Pipeline")
        self.cfg = cfg
        self.jobs = jobs
        self.resume = resume

    def filter_verses(self, pivot: Corpus) -> FilterReport:
        cfg = self.cfg
        lemmas_a, lemmas_b = (parse_lemma_file(read_text(path)) for path in cfg.lemma_paths)
        lemma_of = parse_lemma_map(read_text(cfg.lemma_map_path)) if cfg.lemma_map_path else {}
        report = VerseFilterStage(cfg.min_shared, cfg.min_other).run(lemmas_a, lemmas_b, pivot, lemma_of)
        write_text_atomic(cfg.output_dir / "selected_ids.txt", serialize_id_list(report.selected))
        write_text_atomic(cfg.output_dir / "filter_report.tsv", report.to_tsv())
        return report

    def run(self, languages: Optional[List[str]] = None) -> PipelineSummary:
        """
        Run the pipeline.

        Args:
            languages (Optional[List[str]]): ISO codes; defaults to the configured languages

        Returns:
            PipelineSummary: Per-language outcomes plus classifier and ANOVA results
        """
        cfg = self.cfg
        languages = sorted(set(cfg.languages() if languages is None else languages))
        cfg.output_dir.mkdir(parents=True, exist_ok=True)

        # Step 1: Select training verses once for all languages
        pivot = read_corpus(cfg.pivot_tagged_path, tagged=True)
        report = self.filter_verses(pivot)

        # Step 2: Process languages independently
        self.log(f"Processing {len(languages)} languages with {self.jobs} job(s)")
        log_level = logging.getLogger("typoline").getEffectiveLevel()
        outcomes = Parallel(n_jobs=self.jobs, backend="loky")(
            delayed(process_language)(cfg, language, report.selected, pivot, self.resume, log_level)
            for language in languages
        ) if languages else []
        outcomes = sorted(outcomes, key=lambda outcome: outcome.language)
        for outcome in outcomes:
            if outcome.status == "failed":
                self.log(f"{outcome.language} failed: {outcome.error}", level=logging.WARNING)

        # Step 3: Aggregate tables
        profiles: Dict[str, N1Profile] = {o.language: o.profile for o in outcomes if o.profile is not None}
        write_text_atomic(cfg.output_dir / "n1_profiles.tsv", serialize_profiles(list(profiles.values())))
        write_text_atomic(cfg.output_dir / "corpus_summary.tsv", serialize_corpus_summary(outcomes))

        # Step 4: Classifier and ANOVA over labelled languages
        model = predictions = anova = None
        if cfg.labels_path is not None:
            labels = parse_labels_file(read_text(cfg.labels_path))
            try:
                model, predictions = TypologyStage(cfg.feature).run(profiles, labels)
                write_text_atomic(cfg.output_dir / "gnb_model.tsv", model.to_text())
                write_text_atomic(cfg.output_dir / "predictions.tsv", predictions.to_tsv())
            except (EmptyTraining, SingleClass) as e:
                self.log(f"Classifier skipped: {e}", level=logging.WARNING)
            try:
                anova = anova_oneway(feature_groups(profiles, labels, cfg.feature))
                write_text_atomic(cfg.output_dir / "anova.tsv", anova.to_tsv())
            except TooFewGroups as e:
                self.log(f"ANOVA skipped: {e}", level=logging.WARNING)

        summary = PipelineSummary(
            filter_report=report,
            outcomes=outcomes,
            model=model,
            predictions=predictions,
            anova=anova,
        )
        write_text_atomic(cfg.output_dir / "pipeline_summary.tsv", summary.to_tsv())
        self.log(f"Done: {len(outcomes) - len(summary.failed)} languages succeeded, {len(summary.failed)} failed")
        return summary
