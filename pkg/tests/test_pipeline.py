import filecmp

import pytest

from typoline.cli import main
from typoline.config import PipelineConfig
from typoline.corpus import read_corpus
from typoline.fileio import read_text, write_text_atomic
from typoline.models import PosTag, WordOrderLabel
from typoline.orchestrator import Orchestrator
from typoline.synthetic import make_language, mixture_languages, write_fixture
from typoline.typology import Feature, GnbModel, feature_value, gnb_predict, parse_profiles

CONTENT_TAGS = {PosTag.NOUN, PosTag.VERB, PosTag.ADJ}


@pytest.fixture(scope="module")
def fixture_set(tmp_path_factory, plan):
    directory = tmp_path_factory.mktemp("synthetic")
    languages = [
        make_language("svo", plan, 1.0, WordOrderLabel.SV),
        make_language("vos", plan, 0.0, WordOrderLabel.VS),
    ]
    languages += mixture_languages("sv", 2, 0.7, 0.95, WordOrderLabel.SV, plan)
    languages += mixture_languages("vs", 2, 0.05, 0.3, WordOrderLabel.VS, plan)
    languages += mixture_languages("hs", 1, 0.7, 0.95, WordOrderLabel.UNK, plan)
    languages += mixture_languages("hv", 1, 0.05, 0.3, WordOrderLabel.UNK, plan)
    config = write_fixture(directory, languages, plan)
    return {lang.iso: lang for lang in languages}, config


@pytest.fixture(scope="module")
def first_run(fixture_set):
    languages, config = fixture_set
    cfg = PipelineConfig.from_file(config)
    return cfg, Orchestrator(cfg).run()


def _content_accuracy(tagged, word_tags):
    total = correct = 0
    for verse in tagged.verses.values():
        for token, tag in verse.entries:
            expected = word_tags.get(token)
            if expected in CONTENT_TAGS:
                total += 1
                correct += tag == expected
    return correct / total


def test_every_language_succeeds(first_run, fixture_set):
    languages, _ = fixture_set
    cfg, summary = first_run
    assert [outcome.language for outcome in summary.outcomes] == sorted(languages)
    assert summary.failed == []
    assert summary.filter_report.after_verb_support == 180
    assert all(outcome.projected == 180 for outcome in summary.outcomes)


@pytest.mark.parametrize("iso", ["svo", "vos"])
def test_projected_tags_match_glosses(first_run, fixture_set, iso):
    languages, _ = fixture_set
    cfg, _ = first_run
    tagged = read_corpus(cfg.output_dir / f"{iso}.tagged.txt")
    assert _content_accuracy(tagged, languages[iso].word_tags) >= 0.95
    for verse_id, verse in tagged.verses.items():
        assert verse.tokens == languages[iso].raw.verses[verse_id].tokens
        assert verse.entries[-1] == (".", PosTag.PUNCT)


def test_n1_separates_word_orders(first_run):
    cfg, summary = first_run
    profiles = parse_profiles(read_text(cfg.output_dir / "n1_profiles.tsv"))
    assert profiles["svo"].smoothed_ratio > 1.0
    assert profiles["vos"].smoothed_ratio < 1.0
    assert {o.language: o.profile for o in summary.outcomes} == profiles


def test_aggregate_outputs(first_run):
    cfg, summary = first_run
    out = cfg.output_dir
    for name in ("selected_ids.txt", "filter_report.tsv", "corpus_summary.tsv", "pipeline_summary.tsv"):
        assert (out / name).exists()
    model = GnbModel.from_text(read_text(out / "gnb_model.tsv"))
    assert model.labels == [WordOrderLabel.SV, WordOrderLabel.VS]
    assert [row.language for row in summary.predictions.rows] == ["hsa", "hva"]
    assert summary.anova.df_between == 1
    assert summary.anova.df_within == 4
    assert read_text(out / "pipeline_summary.tsv").splitlines()[1] == "hsa\tok\t180\t0\t"
    assert read_text(out / "corpus_summary.tsv").splitlines()[1].startswith("hsa\t180\t")


def test_classifier_on_projected_profiles(first_run, fixture_set):
    languages, _ = fixture_set
    cfg, summary = first_run
    predicted = {row.language: row.label for row in summary.predictions.rows}
    assert predicted == {"hsa": WordOrderLabel.SV, "hva": WordOrderLabel.VS}
    profiles = parse_profiles(read_text(cfg.output_dir / "n1_profiles.tsv"))
    for iso, lang in languages.items():
        expected = WordOrderLabel.SV if lang.noun_first_prob > 0.5 else WordOrderLabel.VS
        value = feature_value(profiles[iso], Feature.LOG_SMOOTHED)
        assert gnb_predict(summary.model, value)[0] == expected, iso


def _tree(directory):
    return sorted(path.relative_to(directory) for path in directory.rglob("*") if path.is_file())


def test_parallel_run_is_byte_identical(first_run, fixture_set, tmp_path):
    _, config = fixture_set
    cfg, _ = first_run
    other = tmp_path / "parallel"
    Orchestrator(PipelineConfig.from_file(config, output_dir=other), jobs=4).run()
    assert _tree(cfg.output_dir) == _tree(other)
    for relative in _tree(other):
        assert filecmp.cmp(cfg.output_dir / relative, other / relative, shallow=False), relative


def test_resume_reuses_tagged_files(first_run, fixture_set):
    _, config = fixture_set
    cfg, summary = first_run
    resumed = Orchestrator(cfg, resume=True).run()
    assert {outcome.status for outcome in resumed.outcomes} == {"resumed"}
    assert [o.profile for o in resumed.outcomes] == [o.profile for o in summary.outcomes]


def test_resume_reruns_after_lemma_map_changes(fixture_set, tmp_path):
    _, config = fixture_set
    cfg = PipelineConfig.from_file(config, output_dir=tmp_path / "out")
    assert Orchestrator(cfg).run(["svo"]).outcomes[0].status == "ok"
    assert (tmp_path / "out" / "svo.stamp.json").exists()
    lemma_map = tmp_path / "verb_lemmas.tsv"
    write_text_atomic(lemma_map, "saw\tsee\n")
    changed = PipelineConfig.from_file(config, output_dir=tmp_path / "out", lemma_map_path=lemma_map)
    assert Orchestrator(changed, resume=True).run(["svo"]).outcomes[0].status == "ok"


def test_resume_reruns_after_settings_change(fixture_set, tmp_path):
    _, config = fixture_set
    cfg = PipelineConfig.from_file(config, output_dir=tmp_path / "out")
    Orchestrator(cfg).run(["svo"])
    assert Orchestrator(cfg, resume=True).run(["svo"]).outcomes[0].status == "resumed"
    changed = PipelineConfig.from_file(config, output_dir=tmp_path / "out", ibm2_iters=cfg.ibm2_iters + 1)
    assert Orchestrator(changed, resume=True).run(["svo"]).outcomes[0].status == "ok"


def test_failing_language_is_isolated(fixture_set, tmp_path):
    _, config = fixture_set
    cfg = PipelineConfig.from_file(config, output_dir=tmp_path / "out")
    summary = Orchestrator(cfg).run(["svo", "zzz"])
    assert summary.failed == ["zzz"]
    assert [o.status for o in summary.outcomes] == ["ok", "failed"]
    assert "FileNotFoundError" in summary.outcomes[1].error
    assert (tmp_path / "out" / "svo.tagged.txt").exists()
    # one labelled language is not enough for the classifier
    assert summary.model is None


def test_no_languages(fixture_set, tmp_path):
    _, config = fixture_set
    manifest = tmp_path / "empty.txt"
    write_text_atomic(manifest, "# nothing\n")
    cfg = PipelineConfig.from_file(config, output_dir=tmp_path / "out", manifest_path=manifest)
    summary = Orchestrator(cfg).run()
    assert summary.outcomes == []
    assert read_text(tmp_path / "out" / "pipeline_summary.tsv") == "# iso\tstatus\tprojected\tskipped\terror\n"


def test_run_pipeline_command(fixture_set, tmp_path, capsys, monkeypatch):
    _, config = fixture_set
    monkeypatch.setenv("TYPOLINE_OUTPUT_DIR", str(tmp_path / "cli"))
    assert main(["-q", "run-pipeline", "--config", str(config), "--languages", "vos,svo"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1:] == ["svo\tok\t180\t0\t", "vos\tok\t180\t0\t"]
    assert (tmp_path / "cli" / "vos.ibm2").exists()
