"""
Command-line interface: one subcommand per pipeline stage plus run-pipeline.
"""
import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from dotenv import load_dotenv

from typoline import __version__
from typoline.aligner import (
    DEFAULT_IBM1_ITERATIONS,
    DEFAULT_IBM2_ITERATIONS,
    AlignerStage,
    AlignmentModel,
    align_corpus,
    build_pairs,
    verse_pair,
)
from typoline.config import PipelineConfig
from typoline.corpus import (
    VERSE_COUNT_BINS,
    parse_labels_file,
    read_corpus,
    serialize_tagged_file,
    summary_stats,
    verse_count_bin,
)
from typoline.fileio import parse_id_list, read_text, serialize_id_list, write_text_atomic
from typoline.log import setup_logging
from typoline.models import PosTag, parse_tag_set
from typoline.orchestrator import Orchestrator
from typoline.projector import ProjectionConfig, ProjectorStage
from typoline.subword import DEFAULT_VOCAB_SIZE, BpeModel, TokenizerStage
from typoline.typology import (
    Feature,
    GnbModel,
    gnb_train,
    n1_profile,
    parse_profiles,
    predict_unknown,
    serialize_profiles,
    training_samples,
)
from typoline.validate import (
    Direction,
    GoldFormat,
    anova_oneway,
    feature_groups,
    gold_overlap,
    guess_gold_format,
    read_gold,
    tag_agreement,
)
from typoline.verse_filter import VerseFilterStage, parse_lemma_file, parse_lemma_map

logger = logging.getLogger(__name__)

FEATURES = [feature.value for feature in Feature]


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        write_text_atomic(output, text)
        logger.info("Wrote %s", output)
    else:
        sys.stdout.write(text)


def cmd_filter_verses(args) -> int:
    pivot = read_corpus(args.pivot, tagged=True)
    lemma_of = parse_lemma_map(read_text(args.lemma_map)) if args.lemma_map else {}
    report = VerseFilterStage(args.min_shared, args.min_other).run(
        parse_lemma_file(read_text(args.lemmas_a)),
        parse_lemma_file(read_text(args.lemmas_b)),
        pivot,
        lemma_of,
    )
    if args.report:
        write_text_atomic(args.report, report.to_tsv())
    _emit(serialize_id_list(report.selected), args.output)
    return 0


def cmd_train_tokenizer(args) -> int:
    corpus = read_corpus(args.corpus, tagged=False)
    model = TokenizerStage(corpus.language, args.vocab_size).run(corpus)
    write_text_atomic(args.model_out, model.to_text())
    return 0


def cmd_align(args) -> int:
    source = read_corpus(args.source, tagged=False)
    pivot = read_corpus(args.pivot, tagged=True)
    ids = parse_id_list(read_text(args.ids))
    bpe = BpeModel.from_text(read_text(args.bpe)) if args.bpe else None
    used, pairs = build_pairs(source, pivot, ids, bpe)
    model = AlignerStage(source.language, args.ibm1_iters, args.ibm2_iters).run(pairs)
    write_text_atomic(args.model_out, model.to_text())
    if args.alignments_out:
        lines = []
        for verse_id, alignment in zip(used, align_corpus(model, pairs)):
            _, source_positions, target_positions = verse_pair(
                source.verses[verse_id].tokens, pivot.verses[verse_id].tokens, bpe
            )
            lines.append(f"{verse_id}\t{alignment.to_pharaoh(source_positions, target_positions)}\n")
        write_text_atomic(args.alignments_out, "".join(lines))
    return 0


def cmd_project(args) -> int:
    model = AlignmentModel.from_text(read_text(args.model))
    bpe = BpeModel.from_text(read_text(args.bpe))
    source = read_corpus(args.source, tagged=False)
    pivot = read_corpus(args.pivot, tagged=True)
    ids = parse_id_list(read_text(args.ids))
    cfg = ProjectionConfig(unaligned_tag=PosTag(args.unaligned_tag))
    result = ProjectorStage(source.language, cfg).run(model, source, bpe, pivot, ids)
    write_text_atomic(args.output, serialize_tagged_file(result.corpus))
    return 0


def cmd_extract_n1(args) -> int:
    arg_tags = parse_tag_set(args.arg_tags)
    pred_tags = parse_tag_set(args.pred_tags)
    profiles = [n1_profile(read_corpus(path, tagged=True), arg_tags, pred_tags) for path in args.tagged]
    _emit(serialize_profiles(profiles), args.output)
    return 0


def cmd_train_classifier(args) -> int:
    profiles = parse_profiles(read_text(args.profiles))
    labels = parse_labels_file(read_text(args.labels))
    model = gnb_train(training_samples(profiles, labels, Feature(args.feature)))
    _emit(model.to_text(), args.output)
    return 0


def cmd_predict(args) -> int:
    model = GnbModel.from_text(read_text(args.model))
    profiles = parse_profiles(read_text(args.profiles))
    labels = parse_labels_file(read_text(args.labels))
    report = predict_unknown(model, profiles, labels, Feature(args.feature))
    _emit(report.to_tsv(), args.output)
    return 0


def cmd_validate_tags(args) -> int:
    report = tag_agreement(
        read_corpus(args.reference, tagged=True),
        read_corpus(args.hypothesis, tagged=True),
        parse_tag_set(args.tags),
        Direction(args.direction),
    )
    _emit(report.to_tsv(), args.output)
    return 0


def cmd_gold_overlap(args) -> int:
    gold_format = guess_gold_format(args.gold) if args.format == "auto" else GoldFormat(args.format)
    report = gold_overlap(
        read_gold(args.gold, gold_format),
        read_corpus(args.hypothesis, tagged=True),
        parse_tag_set(args.tags),
    )
    _emit(report.to_tsv(), args.output)
    return 0


def cmd_anova(args) -> int:
    profiles = parse_profiles(read_text(args.profiles))
    labels = parse_labels_file(read_text(args.labels))
    result = anova_oneway(feature_groups(profiles, labels, Feature(args.feature)))
    _emit(result.to_tsv(), args.output)
    return 0


def cmd_summary(args) -> int:
    arg_tags = parse_tag_set(args.arg_tags)
    pred_tags = parse_tag_set(args.pred_tags)
    lines = ["# iso\tverses\tunique_arguments\tunique_predicates\tbin"]
    bins: Dict[str, int] = {}
    for path in args.tagged:
        corpus = read_corpus(path, tagged=True)
        stats = summary_stats(corpus, arg_tags, pred_tags)
        name = verse_count_bin(stats.verse_count)
        bins[name] = bins.get(name, 0) + 1
        lines.append(f"{corpus.language}\t{stats.verse_count}\t{stats.unique_arguments}\t"
                     f"{stats.unique_predicates}\t{name}")
    for _, name in VERSE_COUNT_BINS:
        lines.append(f"# bin {name}\t{bins.get(name, 0)}")
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_run_pipeline(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    languages = [code.strip() for code in args.languages.split(",") if code.strip()] if args.languages else None
    summary = Orchestrator(cfg, jobs=args.jobs, resume=args.resume).run(languages)
    sys.stdout.write(summary.to_tsv())
    return 0


def _add_output(parser: argparse.ArgumentParser, required: bool = False) -> None:
    parser.add_argument("-o", "--output", required=required,
                        help="Output file (written atomically); standard output when omitted")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with every subcommand"""
    parser = argparse.ArgumentParser(prog="typoline",
                                     description="POS tag projection and word-order typology over a parallel corpus")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    p = subparsers.add_parser("filter-verses", help="Select alignment training verses")
    p.add_argument("lemmas_a", help="Lemma file of the first English translation")
    p.add_argument("lemmas_b", help="Lemma file of the second English translation")
    p.add_argument("pivot", help="Tagged pivot verse file")
    p.add_argument("--lemma-map", help="form<TAB>lemma file for pivot verbs")
    p.add_argument("--min-shared", type=int, default=4)
    p.add_argument("--min-other", type=int, default=5)
    p.add_argument("--report", help="Write per-stage verse counts to this TSV")
    _add_output(p)
    p.set_defaults(func=cmd_filter_verses)

    p = subparsers.add_parser("train-tokenizer", help="Train a BPE subword tokenizer")
    p.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    p.add_argument("corpus", help="Raw verse file '<iso>.txt'")
    p.add_argument("model_out", help="BPE model file to write")
    p.set_defaults(func=cmd_train_tokenizer)

    p = subparsers.add_parser("align", help="Train an IBM Model 2 aligner")
    p.add_argument("--ibm1-iters", type=int, default=DEFAULT_IBM1_ITERATIONS)
    p.add_argument("--ibm2-iters", type=int, default=DEFAULT_IBM2_ITERATIONS)
    p.add_argument("--bpe", help="Tokenizer model; whole words are aligned when omitted")
    p.add_argument("--alignments-out", help="Write Viterbi links as 'ID<TAB>j-i ...' lines")
    p.add_argument("source", help="Raw source verse file")
    p.add_argument("pivot", help="Tagged pivot verse file")
    p.add_argument("ids", help="Verse ID list (e.g. output of filter-verses)")
    p.add_argument("model_out", help="Alignment model file to write")
    p.set_defaults(func=cmd_align)

    p = subparsers.add_parser("project", help="Project pivot tags onto source words")
    p.add_argument("model", help="Alignment model file")
    p.add_argument("bpe", help="Tokenizer model file")
    p.add_argument("source", help="Raw source verse file")
    p.add_argument("pivot", help="Tagged pivot verse file")
    p.add_argument("--ids", required=True, help="Verse ID list")
    p.add_argument("--unaligned-tag", default=PosTag.X.value, choices=[tag.value for tag in PosTag])
    _add_output(p, required=True)
    p.set_defaults(func=cmd_project)

    p = subparsers.add_parser("extract-n1", help="Compute N1 profiles of tagged corpora")
    p.add_argument("tagged", nargs="+", help="Tagged verse files '<iso>.tagged.txt'")
    p.add_argument("--arg-tags", default="NOUN")
    p.add_argument("--pred-tags", default="VERB")
    _add_output(p)
    p.set_defaults(func=cmd_extract_n1)

    p = subparsers.add_parser("train-classifier", help="Train the Gaussian Naive Bayes word-order classifier")
    p.add_argument("--profiles", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--feature", choices=FEATURES, default=Feature.SMOOTHED.value)
    _add_output(p)
    p.set_defaults(func=cmd_train_classifier)

    p = subparsers.add_parser("predict", help="Predict word order of unlabelled languages")
    p.add_argument("--model", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--feature", choices=FEATURES, default=Feature.SMOOTHED.value)
    _add_output(p)
    p.set_defaults(func=cmd_predict)

    p = subparsers.add_parser("validate-tags", help="Per-tag agreement with a reference tagging")
    p.add_argument("reference")
    p.add_argument("hypothesis")
    p.add_argument("--tags", default="NOUN,VERB")
    p.add_argument("--direction", choices=[d.value for d in Direction], default=Direction.RECALL.value)
    _add_output(p)
    p.set_defaults(func=cmd_validate_tags)

    p = subparsers.add_parser("gold-overlap", help="Forms sharing a tag with a gold corpus")
    p.add_argument("gold", help="Tagged file, CoNLL-U treebank or form<TAB>TAG lexicon")
    p.add_argument("hypothesis")
    p.add_argument("--tags", default="NOUN,VERB")
    p.add_argument("--format", choices=["auto"] + [f.value for f in GoldFormat], default="auto")
    _add_output(p)
    p.set_defaults(func=cmd_gold_overlap)

    p = subparsers.add_parser("anova", help="One-way ANOVA of the N1 feature across word-order classes")
    p.add_argument("--profiles", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--feature", choices=FEATURES, default=Feature.SMOOTHED.value)
    _add_output(p)
    p.set_defaults(func=cmd_anova)

    p = subparsers.add_parser("summary", help="Verse and distinct-form counts of tagged corpora")
    p.add_argument("tagged", nargs="+")
    p.add_argument("--arg-tags", default="NOUN,PROPN")
    p.add_argument("--pred-tags", default="VERB")
    _add_output(p)
    p.set_defaults(func=cmd_summary)

    p = subparsers.add_parser("run-pipeline", help="Run every stage over a set of languages")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--languages", help="Comma-separated ISO codes (default: manifest or corpus_dir)")
    p.add_argument("--jobs", type=int, default=1, help="Languages processed in parallel")
    p.add_argument("--resume", action="store_true", help="Skip languages whose tagged output is up to date")
    p.set_defaults(func=cmd_run_pipeline)

    return parser


def setup_environment(args) -> None:
    """Load .env and install logging at the requested verbosity"""
    load_dotenv()
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    setup_logging(level)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the typoline command line.

    Args:
        argv (Optional[List[str]]): Arguments without the program name; sys.argv when None

    Returns:
        int: 0 on success, 1 on a domain or I/O error (usage errors exit 2 via argparse)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_environment(args)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (ValueError, OSError) as e:
        # TypolineError and pydantic.ValidationError are both ValueErrors
        message = " ".join(str(e).split())
        print(f"typoline: error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
