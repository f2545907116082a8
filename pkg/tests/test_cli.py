from __future__ import annotations

import json
import shutil

import pytest

from phrase_forensics.cli import main

from conftest import CASE_STUDY_DIR


@pytest.fixture()
def case_dir(tmp_path):
    target = tmp_path / "case_study"
    shutil.copytree(CASE_STUDY_DIR, target)
    return target


def run(argv):
    return main([str(a) for a in argv])


class TestIndexCommand:
    def test_index_writes_index_and_manifest(self, case_dir, tmp_path, capsys):
        out = tmp_path / "corpus.pfidx"
        assert run(["index", case_dir / "corpus", "--out", out]) == 0
        assert out.is_file()
        manifest = json.loads((tmp_path / "corpus.pfidx.manifest.json").read_text())
        assert len(manifest["documents"]) == 20
        assert "indexed 20 documents" in capsys.readouterr().out

    def test_unreadable_file_is_skipped(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "good.txt").write_text("plain readable text", encoding="utf-8")
        (corpus / "empty.txt").write_text("", encoding="utf-8")
        out = tmp_path / "c.pfidx"
        assert run(["index", corpus, "--out", out]) == 0
        manifest = json.loads((tmp_path / "c.pfidx.manifest.json").read_text())
        assert [s["path"] for s in manifest["skipped"]] == ["empty.txt"]

    def test_empty_directory_exits_tenplus(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        code = run(["index", corpus, "--out", tmp_path / "c.pfidx"])
        assert code >= 10
        assert "error" in capsys.readouterr().err


class TestAnalyzeCommand:
    def build_index(self, case_dir, tmp_path):
        out = tmp_path / "corpus.pfidx"
        assert run(["index", case_dir / "corpus", "--out", out]) == 0
        return out

    def test_case_study_exits_3_with_restored_finding(self, case_dir, tmp_path):
        idx = self.build_index(case_dir, tmp_path)
        report_path = tmp_path / "report.json"
        code = run([
            "analyze", case_dir / "suspect.txt",
            "--index", idx, "--corpus-dir", case_dir / "corpus",
            "--out", report_path,
        ])
        assert code == 3
        report = json.loads(report_path.read_text())
        assert report["summary"]["total"] == 1
        finding = report["findings"][0]
        assert finding["status"] == "RESTORED"
        assert finding["source_doc_id"] == "source_doc_14.txt"
        assert "cancer" in finding["restored_term"]

    def test_clean_fixture_exits_0(self, case_dir, tmp_path):
        idx = self.build_index(case_dir, tmp_path)
        code = run([
            "analyze", case_dir / "clean_suspect.txt",
            "--index", idx, "--corpus-dir", case_dir / "corpus",
            "--out", tmp_path / "r.json",
        ])
        assert code == 0
        assert json.loads((tmp_path / "r.json").read_text())["findings"] == []

    def test_stricter_threshold_unflags_mild_phrase(self, case_dir, tmp_path):
        idx = self.build_index(case_dir, tmp_path)
        args = [
            "analyze", case_dir / "mild_suspect.txt",
            "--index", idx, "--corpus-dir", case_dir / "corpus",
            "--out", tmp_path / "r.json",
        ]
        assert run(args) == 3
        assert run(args + ["--t-anomaly", "-13.0"]) == 0

    def test_no_index_means_retrieval_empty(self, case_dir, tmp_path):
        code = run([
            "analyze", case_dir / "suspect.txt",
            "--corpus-dir", case_dir / "corpus",
            "--out", tmp_path / "r.json",
        ])
        assert code == 3
        report = json.loads((tmp_path / "r.json").read_text())
        assert {f["status"] for f in report["findings"]} == {"RETRIEVAL_EMPTY"}

    def test_flags_round_trip_into_config_snapshot(self, case_dir, tmp_path):
        idx = self.build_index(case_dir, tmp_path)
        report_path = tmp_path / "r.json"
        run([
            "analyze", case_dir / "suspect.txt",
            "--index", idx, "--corpus-dir", case_dir / "corpus",
            "--t-anomaly", "-9.5", "--t-align", "0.5", "--gamma", "0.7", "--max-ngram", "4",
            "--out", report_path,
        ])
        config = json.loads(report_path.read_text())["config"]
        assert config["t_anomaly"] == -9.5
        assert config["t_align"] == 0.5
        assert config["gamma"] == 0.7
        assert config["max_ngram"] == 4

    def test_env_var_override(self, case_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("PHRASE_FORENSICS_T_ANOMALY", "-13.0")
        idx = self.build_index(case_dir, tmp_path)
        code = run([
            "analyze", case_dir / "mild_suspect.txt",
            "--index", idx, "--corpus-dir", case_dir / "corpus",
            "--out", tmp_path / "r.json",
        ])
        assert code == 0

    def test_backend_abort_prints_partial_report_diagnostic(self, case_dir, tmp_path, monkeypatch, capsys):
        import phrase_forensics.cli as cli_mod

        class ExplodingScorer:
            name = "exploding"

            def score_tokens(self, phrase):
                raise RuntimeError("deliberate failure")

            def score_batch(self, phrases):
                raise RuntimeError("deliberate failure")

        idx = self.build_index(case_dir, tmp_path)
        monkeypatch.setattr(cli_mod, "_scorer", lambda args, corpus_dir: ExplodingScorer())
        code = run([
            "analyze", case_dir / "suspect.txt",
            "--index", idx, "--corpus-dir", case_dir / "corpus",
            "--out", tmp_path / "r.json",
        ])
        assert code >= 10
        err = capsys.readouterr().err
        assert "partial report" in err

    def test_reports_byte_identical_across_runs(self, case_dir, tmp_path):
        idx = self.build_index(case_dir, tmp_path)
        outs = []
        for name in ("a.json", "b.json"):
            run([
                "analyze", case_dir / "suspect.txt",
                "--index", idx, "--corpus-dir", case_dir / "corpus",
                "--seed", "0", "--out", tmp_path / name,
            ])
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]


class TestGenEvalSweep:
    def test_gen_planted_then_eval_retrieval(self, tmp_path, capsys):
        pairs_path = tmp_path / "pairs.jsonl"
        assert run(["gen", "planted", "--pairs", "6", "--seed", "3", "--out", pairs_path]) == 0
        assert run([
            "eval", "--pairs", pairs_path, "--mode", "retrieval",
            "--out", tmp_path / "eval.json",
        ]) == 0
        report = json.loads((tmp_path / "eval.json").read_text())
        assert report["em_at_1"] == 1.0
        assert "100.00%" in capsys.readouterr().out

    def test_eval_no_corpus_is_zero(self, tmp_path, capsys):
        pairs_path = tmp_path / "pairs.jsonl"
        run(["gen", "planted", "--pairs", "4", "--seed", "5", "--out", pairs_path])
        assert run([
            "eval", "--pairs", pairs_path, "--mode", "no-corpus",
            "--out", tmp_path / "eval.json",
        ]) == 0
        report = json.loads((tmp_path / "eval.json").read_text())
        assert report["em_at_1"] == 0.0
        assert "0.00%" in capsys.readouterr().out

    def test_gen_deterministic(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run(["gen", "planted", "--pairs", "3", "--seed", "9", "--out", a])
        run(["gen", "planted", "--pairs", "3", "--seed", "9", "--out", b])
        assert a.read_bytes() == b.read_bytes()

    def test_sweep_monotone_counts(self, tmp_path, capsys):
        fixture_dir = tmp_path / "labeled"
        assert run(["gen", "labeled", "--seed", "0", "--out", fixture_dir]) == 0
        assert run([
            "sweep", "--labeled", fixture_dir / "labeled.jsonl",
            "--corpus-dir", fixture_dir / "corpus",
            "--thresholds", "-13", "-8", "-5",
            "--out", tmp_path / "sweep.json",
        ]) == 0
        points = json.loads((tmp_path / "sweep.json").read_text())["points"]
        counts = [p["flagged_count"] for p in points]
        assert counts == sorted(counts)

    def test_eval_alignment_experiment(self, tmp_path):
        spun_dir = tmp_path / "spun"
        assert run(["gen", "spun", "--pairs", "4", "--seed", "2", "--swap-fraction", "0.2", "--out", spun_dir]) == 0
        assert run([
            "eval", "--experiment", "alignment", "--pairs-dir", spun_dir,
            "--out", tmp_path / "align.json",
        ]) == 0
        report = json.loads((tmp_path / "align.json").read_text())
        assert report["n_pairs"] == 4
        assert 0.0 <= report["fraction_above_gate"] <= 1.0

    def test_eval_missing_pairs_is_usage_error(self, capsys):
        with pytest.raises(SystemExit):
            run(["eval", "--mode", "retrieval"])

    def test_missing_fixture_file_exits_tenplus(self, tmp_path):
        assert run(["eval", "--pairs", tmp_path / "nope.jsonl", "--out", tmp_path / "e.json"]) >= 10

    def test_gen_spun_and_labeled_deterministic(self, tmp_path):
        for kind, extra in (("spun", ["--pairs", "2", "--swap-fraction", "0.3"]), ("labeled", [])):
            a_dir, b_dir = tmp_path / f"{kind}_a", tmp_path / f"{kind}_b"
            assert run(["gen", kind, "--seed", "6", "--out", a_dir] + extra) == 0
            assert run(["gen", kind, "--seed", "6", "--out", b_dir] + extra) == 0
            a_files = sorted(p.relative_to(a_dir) for p in a_dir.rglob("*") if p.is_file())
            b_files = sorted(p.relative_to(b_dir) for p in b_dir.rglob("*") if p.is_file())
            assert a_files == b_files
            for rel in a_files:
                assert (a_dir / rel).read_bytes() == (b_dir / rel).read_bytes()


class TestCrossProcessDeterminism:
    def test_two_fresh_interpreters_produce_identical_reports(self, case_dir, tmp_path):
        import subprocess
        import sys

        idx = tmp_path / "c.pfidx"
        assert run(["index", case_dir / "corpus", "--out", idx]) == 0
        outs = []
        for name in ("p1.json", "p2.json"):
            out = tmp_path / name
            proc = subprocess.run(
                [
                    sys.executable, "-m", "phrase_forensics.cli",
                    "analyze", str(case_dir / "suspect.txt"),
                    "--index", str(idx), "--corpus-dir", str(case_dir / "corpus"),
                    "--out", str(out),
                ],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 3, proc.stderr
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
