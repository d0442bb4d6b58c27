import json

import pytest

from facttrace.cli import main, validate_report
from facttrace.config import RunConfig
from facttrace.errors import ConfigError


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", str(cfg), "--output-dir", str(out), *extra])


@pytest.fixture(scope="module")
def pipeline_out(pipeline_fixture, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    cfg = pipeline_fixture / "config.json"
    for cmd in ("facts", "index", "eval", "classify", "similarity", "report"):
        assert run(cmd, cfg, out) == 0
    return out


class TestFactsCommand:
    def test_summary_and_exclusion(self, pipeline_out):
        summary = json.loads((pipeline_out / "facts_summary.json").read_text())
        assert summary["languages"] == ["eng_Latn", "fra_Latn", "zho_Hans"]
        assert summary["count_per_language"]["eng_Latn"] == 12
        assert sum(summary["relations"].values()) == 12
        report = json.loads((pipeline_out / "exclusion_report.json").read_text())
        for lang in summary["languages"]:
            assert len(report["kept"][lang]) == 9
            assert report["removed"][lang] == 3


class TestIndexCommand:
    def test_outputs_per_language(self, pipeline_out):
        for lang in ("eng_Latn", "fra_Latn", "zho_Hans"):
            text = (pipeline_out / f"frequency_{lang}.csv").read_text()
            header, *rows = text.strip().splitlines()
            assert header == "lang,fact_id,frequency"
            assert len(rows) == 12
        meta = json.loads((pipeline_out / "frequency_meta.json").read_text())
        assert meta["query_count"] == 36
        assert len(meta["fingerprint"]) == 64

    def test_csv_matches_brute_force_scan(self, pipeline_fixture, pipeline_out):
        import gzip

        from facttrace.facts import load_facts
        from facttrace.normalize import nfc

        texts = []
        for shard in sorted((pipeline_fixture / "corpus").iterdir()):
            opener = gzip.open if shard.name.endswith(".gz") else open
            with opener(shard, "rt", encoding="utf-8") as fh:
                texts.extend(json.loads(line)["text"] for line in fh if line.strip())
        ms = load_facts(pipeline_fixture / "facts")
        for lang in ms.languages:
            written = {}
            csv_lines = (pipeline_out / f"frequency_{lang}.csv").read_text().strip().splitlines()
            for line in csv_lines[1:]:
                _, fid, count = line.split(",")
                written[int(fid)] = int(count)
            for fact in ms.facts[lang]:
                expected = sum(
                    1
                    for t in texts
                    if nfc(fact.subject) in nfc(t) and nfc(fact.object) in nfc(t)
                )
                assert written[fact.fact_id] == expected

    def test_rerun_is_byte_identical(self, pipeline_fixture, pipeline_out):
        before = {
            p.name: p.read_bytes() for p in pipeline_out.glob("frequency_*")
        }
        assert run("index", pipeline_fixture / "config.json", pipeline_out) == 0
        after = {p.name: p.read_bytes() for p in pipeline_out.glob("frequency_*")}
        assert before == after

    def test_zero_shards_error_names_glob(self, pipeline_fixture, tmp_path, capsys):
        rc = main(
            [
                "index",
                "--facts-dir",
                str(pipeline_fixture / "facts"),
                "--shards",
                str(tmp_path / "nothing-*.jsonl"),
                "--output-dir",
                str(tmp_path / "out"),
            ]
        )
        assert rc == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ConfigError"
        assert "nothing-*.jsonl" in err["message"]


class TestEvalCommand:
    def test_acc_co_rows(self, pipeline_out):
        lines = (pipeline_out / "acc_co.csv").read_text().strip().splitlines()
        assert lines[0] == "lang,step,acc,co_ref"
        assert len(lines) == 1 + 3 * 3
        # english at the final step recalls 9 of 12 fixture facts
        eng_final = [l for l in lines if l.startswith("eng_Latn,10000")]
        assert eng_final[0].split(",")[2] == "0.75"

    def test_consistency_matrices(self, pipeline_out):
        for step in (1000, 5000, 10000):
            matrix = json.loads((pipeline_out / f"consistency_matrix_{step}.json").read_text())
            assert matrix["languages"] == ["eng_Latn", "fra_Latn", "zho_Hans"]
            values = matrix["matrix"]
            for i in range(3):
                for j in range(3):
                    assert values[i][j] == values[j][i]

    def test_group_co_has_script_groups(self, pipeline_out):
        lines = (pipeline_out / "group_co.csv").read_text().strip().splitlines()
        groups = {line.split(",")[0] for line in lines[1:]}
        assert groups == {"Latn", "all"}

    def test_missing_prediction_policy(self, pipeline_fixture, tmp_path, capsys):
        predictions = (pipeline_fixture / "predictions.jsonl").read_text().strip().splitlines()
        clipped = tmp_path / "clipped.jsonl"
        clipped.write_text("\n".join(predictions[:-1]) + "\n", encoding="utf-8")
        args = [
            "eval",
            "--config",
            str(pipeline_fixture / "config.json"),
            "--predictions",
            str(clipped),
            "--output-dir",
            str(tmp_path / "out"),
        ]
        assert main(args) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "MissingPrediction"
        assert main(args + ["--on-missing", "incorrect"]) == 0
        meta = json.loads((tmp_path / "out" / "eval_meta.json").read_text())
        assert meta["missing_as_incorrect"] == 1


class TestClassifyCommand:
    def test_matches_library_fit(self, pipeline_fixture, pipeline_out):
        from facttrace.evaluation import build_correctness, load_predictions
        from facttrace.facts import load_facts
        from facttrace.threshold import LabeledFrequency, optimal_threshold

        clf = json.loads((pipeline_out / "classifier_fra_Latn.json").read_text())
        freq = {}
        for line in (pipeline_out / "frequency_fra_Latn.csv").read_text().strip().splitlines()[1:]:
            _, fid, count = line.split(",")
            freq[int(fid)] = int(count)
        ms = load_facts(pipeline_fixture / "facts")
        cm = build_correctness(
            load_predictions(pipeline_fixture / "predictions.jsonl"), ms, [1000, 5000, 10000]
        )
        correct = cm.correct_ids("fra_Latn", 10000)
        data = [
            LabeledFrequency(fid, freq[fid], fid in correct) for fid in sorted(freq)
        ]
        expected = optimal_threshold(data)
        assert clf["threshold"] == expected.threshold
        assert clf["accuracy"] == expected.accuracy
        assert clf["sclfp_ids"] == list(expected.sclfp_ids) == [7, 10]
        assert clf["uwlfp_ids"] == list(expected.uwlfp_ids) == [4, 8, 11]
        assert clf["tp"] + clf["fp"] + clf["tn"] + clf["fn"] == 12

    def test_exclude_identical_outputs(self, pipeline_fixture, tmp_path_factory):
        out = tmp_path_factory.mktemp("excl")
        cfg = pipeline_fixture / "config.json"
        assert run("index", cfg, out) == 0
        assert run("classify", cfg, out, "--exclude-identical") == 0
        assert (out / "classifier_excluded_fra_Latn.json").is_file()
        overlap = json.loads((out / "sclfp_overlap.json").read_text())
        assert set(overlap) == {"eng_Latn", "fra_Latn", "zho_Hans"}
        for entry in overlap.values():
            assert set(entry) == {"jaccard", "containment_in_full"}

    def test_labeled_dir_mode(self, tmp_path):
        labeled = tmp_path / "labeled"
        labeled.mkdir()
        (labeled / "eng_Latn.csv").write_text(
            "fact_id,freq,correct\n0,1,0\n1,5,1\n2,10,1\n", encoding="utf-8"
        )
        out = tmp_path / "out"
        assert main(
            ["classify", "--labeled-dir", str(labeled), "--output-dir", str(out)]
        ) == 0
        clf = json.loads((out / "classifier_eng_Latn.json").read_text())
        assert clf["threshold"] == 5
        assert clf["accuracy"] == 1.0

    def test_sclfp_series_rows(self, pipeline_out):
        lines = (pipeline_out / "sclfp_series.csv").read_text().strip().splitlines()
        assert lines[0] == "lang,step,acc"
        langs = {line.split(",")[0] for line in lines[1:]}
        assert langs == {"eng_Latn", "fra_Latn", "zho_Hans"}


class TestAuxCommands:
    def test_sweep(self, pipeline_fixture, pipeline_out):
        assert run("sweep", pipeline_fixture / "config.json", pipeline_out) == 0
        lines = (pipeline_out / "sweep_fra_Latn.csv").read_text().strip().splitlines()
        assert lines[0] == "threshold,accuracy"
        assert len(lines) > 1

    def test_bootstrap_deterministic(self, pipeline_fixture, pipeline_out):
        cfg = pipeline_fixture / "config.json"
        assert run("bootstrap", cfg, pipeline_out) == 0
        first = (pipeline_out / "bootstrap_fra_Latn.json").read_bytes()
        assert run("bootstrap", cfg, pipeline_out) == 0
        assert (pipeline_out / "bootstrap_fra_Latn.json").read_bytes() == first

    def test_correlate(self, pipeline_fixture, pipeline_out):
        assert run("correlate", pipeline_fixture / "config.json", pipeline_out) == 0
        payload = json.loads((pipeline_out / "correlation_global.json").read_text())
        assert "r" in payload and "zero_bucket" in payload
        lines = (pipeline_out / "correlation_global.csv").read_text().strip().splitlines()
        assert lines[0] == "bin_lo,bin_hi,count,p_correct"

    def test_coverage(self, pipeline_fixture, tmp_path):
        profiles = tmp_path / "profiles.csv"
        rows = ["lang,token,count"]
        for lang, tokens in {
            "eng_Latn": ["France", "Germany", "Japan", "Italy"],
            "zho_Hans": ["法国", "德国", "日本", "意大利"],
        }.items():
            for i, tok in enumerate(tokens):
                rows.append(f"{lang},{tok},{100 - i}")
        profiles.write_text("\n".join(rows) + "\n", encoding="utf-8")
        out = tmp_path / "out"
        rc = main(
            [
                "coverage",
                "--token-profiles",
                str(profiles),
                "--shards",
                str(pipeline_fixture / "corpus" / "shard-*.jsonl*"),
                "--output-dir",
                str(out),
            ]
        )
        assert rc == 0
        lines = (out / "coverage_pairs.csv").read_text().strip().splitlines()
        assert lines[0] == "lang,token_a,token_b,doc_count"
        assert len(lines) == 1 + 6 * 2
        stats = json.loads((out / "coverage_stats.json").read_text())
        assert set(stats) == {"eng_Latn", "zho_Hans"}


class TestSimilarityCommand:
    def test_csv_matches_library_trajectories(self, pipeline_fixture, pipeline_out):
        from facttrace.facts import identical_object_flags, load_facts
        from facttrace.similarity import load_manifest, similarity_trajectories

        ms = load_facts(pipeline_fixture / "facts")
        steps = (1000, 5000, 10000)
        emb = pipeline_fixture / "embeddings"
        lang_m = {s: load_manifest(emb / f"fra_Latn_{s}.json") for s in steps}
        ref_m = {s: load_manifest(emb / f"eng_Latn_{s}.json") for s in steps}
        clf = json.loads((pipeline_out / "classifier_fra_Latn.json").read_text())
        flags = identical_object_flags(ms, "eng_Latn")["fra_Latn"]
        series = similarity_trajectories(
            lang_m, ref_m, clf["sclfp_ids"], clf["uwlfp_ids"], ms.fact_ids("fra_Latn"), flags
        )
        written = (pipeline_out / "similarity_fra_Latn.csv").read_text().strip().splitlines()
        rows = [line.split(",") for line in written[1:]]
        for group in ("SCLFP", "UWLFP", "all"):
            got = [r for r in rows if r[0] == group]
            for (g, step, mean, pairs, skipped), idx in zip(got, range(len(steps))):
                assert int(step) == series[group].steps[idx]
                assert float(mean) == series[group].mean[idx]
                assert int(pairs) == series[group].pairs[idx]

    def test_language_without_manifests_is_skipped(self, pipeline_out):
        assert not (pipeline_out / "similarity_zho_Hans.csv").exists()
        assert (pipeline_out / "similarity_fra_Latn.csv").exists()


class TestReportCommand:
    def test_report_validates(self, pipeline_out):
        report = json.loads((pipeline_out / "report.json").read_text())
        validate_report(report)
        assert report["tool"]["name"] == "facttrace"
        assert set(report["artifacts"]["classifier"]) == {
            "eng_Latn",
            "fra_Latn",
            "zho_Hans",
        }

    def test_missing_classifier_artifact(self, pipeline_fixture, tmp_path_factory, capsys):
        out = tmp_path_factory.mktemp("partial")
        cfg = pipeline_fixture / "config.json"
        assert run("index", cfg, out) == 0
        assert run("eval", cfg, out) == 0
        rc = run("report", cfg, out)
        assert rc == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "MissingArtifact"
        assert "classifier" in err["message"]


class TestConfig:
    def test_flags_override_file(self, pipeline_fixture):
        cfg = RunConfig.from_file(pipeline_fixture / "config.json")
        assert cfg.seed == 7
        merged = cfg.with_overrides(seed=99, steps=[1, 2, 3])
        assert merged.seed == 99
        assert merged.steps == (1, 2, 3)
        assert merged.facts_dir == cfg.facts_dir

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"no_such_option": 1}', encoding="utf-8")
        with pytest.raises(ConfigError):
            RunConfig.from_file(path)

    def test_steps_must_increase(self):
        cfg = RunConfig(output_dir="x", steps=(5, 3))
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_missing_path_rejected(self):
        cfg = RunConfig(facts_dir="/no/such/dir", output_dir="x")
        with pytest.raises(ConfigError):
            cfg.validate()
