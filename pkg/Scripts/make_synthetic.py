"""
Write the synthetic fixture set: one subject-first and one verb-first
language, 20 labelled mixture languages and 6 unlabelled ones.

Usage:
    python Scripts/make_synthetic.py --out fixtures/
    typoline run-pipeline --config fixtures/typoline.cfg --jobs 4
"""
import argparse
import logging

from typoline.log import setup_logging
from typoline.models import WordOrderLabel
from typoline.synthetic import DEFAULT_SEED, DEFAULT_VERSES, make_language, make_plan, mixture_languages, write_fixture

logger = logging.getLogger("typoline.scripts")


def parse_args():
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(description="Synthetic parallel corpora for typoline")
    parser.add_argument("--out", required=True, help="Directory to write the fixture set into")
    parser.add_argument("--verses", type=int, default=DEFAULT_VERSES, help="Verses per language")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Generator seed")
    parser.add_argument("--minimal", action="store_true", help="Only the two pure-order languages")
    return parser.parse_args()


def main():
    args = parse_args()
    setup_logging()
    plan = make_plan(args.verses, args.seed)
    languages = [
        make_language("svo", plan, 1.0, WordOrderLabel.SV, args.seed),
        make_language("vos", plan, 0.0, WordOrderLabel.VS, args.seed),
    ]
    if not args.minimal:
        languages += mixture_languages("sv", 10, 0.7, 0.95, WordOrderLabel.SV, plan, args.seed)
        languages += mixture_languages("vs", 10, 0.05, 0.3, WordOrderLabel.VS, plan, args.seed)
        languages += mixture_languages("hs", 3, 0.7, 0.95, WordOrderLabel.UNK, plan, args.seed)
        languages += mixture_languages("hv", 3, 0.05, 0.3, WordOrderLabel.UNK, plan, args.seed)
    config = write_fixture(args.out, languages, plan)
    logger.info("Wrote %d languages; config at %s", len(languages), config)


if __name__ == "__main__":
    main()
