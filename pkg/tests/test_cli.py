"""End-user command line: every subcommand's happy path and failure exits."""

import json
import subprocess
import sys

import pytest

from conftest import EXAMPLE_DICT, FIXTURES
from mock_llm import MockLLMServer, fixed_response
from main_annotate.cli import CONFIG_ENV, main

MANIFEST = str(FIXTURES / "corpus_manifest.json")
CORPUS = str(FIXTURES / "corpus")
RATERS = str(FIXTURES / "raters")


class TestParse:
    def test_lists_narratives_with_metadata(self, capsys):
        assert main(["parse", CORPUS, "--manifest", MANIFEST]) == 0
        out = capsys.readouterr().out
        assert "appxa\tdog\tyoung\t13 lines" in out
        assert "appxb\tcat\telderly\t16 lines" in out
        assert "t7dog\tdog\tchildren\t15 lines" in out
        assert "3 parsed, 0 failed" in out

    def test_failures_reported_nonzero(self, tmp_path, capsys):
        (tmp_path / "bad.cha").write_text("*CHI: 没有制表符\n", encoding="utf-8")
        assert main(["parse", str(tmp_path)]) == 1
        captured = capsys.readouterr()
        assert "FAILED" in captured.err
        assert "0 parsed, 1 failed" in captured.out


class TestSample:
    def test_plan_json_on_stdout(self, capsys):
        assert main(["sample", MANIFEST, "--rate", "0.15", "--seed", "5"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["rate"] == "0.15" and doc["seed"] == 5
        # one participant per cohort; ceil(0.15 * 1) = 1 from each
        assert doc["total_sampled"] == 3

    def test_manifest_without_cohorts_fails(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        path.write_text('{"x.cha": {"narrative_id": "x"}}', encoding="utf-8")
        assert main(["sample", str(path), "--seed", "1"]) == 1
        assert "no cohort" in capsys.readouterr().err

    def test_bad_rate_is_user_error(self, capsys):
        with pytest.raises(ValueError):
            main(["sample", MANIFEST, "--rate", "2", "--seed", "1"])


class TestScore:
    def test_scores_per_narrative_and_summary(self, capsys):
        assert main(["score", f"{RATERS}/model"]) == 0
        out = capsys.readouterr().out
        assert "t7dog\t12" in out
        assert "n=1 mean=12.00 min=12 max=12" in out

    def test_empty_directory_fails(self, tmp_path, capsys):
        assert main(["score", str(tmp_path)]) == 1
        assert "no annotation files" in capsys.readouterr().err


class TestAgree:
    def test_overall_pairwise(self, capsys):
        code = main(["agree", RATERS, "--raters", "human1,human2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "human1 vs human2\tkappa=1.000\tband=almost perfect\tn=17" in out

    def test_three_raters_three_pairs(self, capsys):
        assert main(["agree", RATERS, "--raters", "model,human1,human2"]) == 0
        out = capsys.readouterr().out
        assert "model vs human1" in out
        assert "model vs human2" in out
        assert "human1 vs human2" in out

    def test_by_category(self, capsys):
        assert main(
            ["agree", RATERS, "--raters", "human1,human2", "--by", "category"]
        ) == 0
        out = capsys.readouterr().out
        assert "Goal" in out and "Outcome" in out

    def test_by_cohort_needs_manifest(self, capsys):
        code = main(["agree", RATERS, "--raters", "human1,human2", "--by", "cohort"])
        assert code == 1
        assert "cohort" in capsys.readouterr().err

    def test_by_cohort_with_manifest(self, capsys):
        assert main(
            [
                "agree",
                RATERS,
                "--raters",
                "human1,human2",
                "--by",
                "cohort",
                "--manifest",
                MANIFEST,
            ]
        ) == 0
        assert "children" in capsys.readouterr().out

    def test_single_rater_refused(self, capsys):
        assert main(["agree", RATERS, "--raters", "model"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_rater_directory(self, capsys):
        assert main(["agree", RATERS, "--raters", "model,nobody"]) == 1
        assert "nobody" in capsys.readouterr().err


class TestReport:
    def run_manifest(self, tmp_path):
        path = tmp_path / "run_manifest.json"
        path.write_text(
            json.dumps(
                {
                    "profile": "local",
                    "wall_seconds": 100.0,
                    "totals": {
                        "requests": 1,
                        "prompt_tokens": 1000,
                        "completion_tokens": 100,
                        "total_tokens": 1100,
                        "cost": "0.0023",
                    },
                }
            ),
            encoding="utf-8",
        )
        return str(path)

    def test_markdown_report(self, tmp_path, capsys):
        code = main(
            [
                "report",
                RATERS,
                "--humans",
                "human1,human2",
                "--models",
                "model",
                "--manifest",
                MANIFEST,
                "--run-manifest",
                self.run_manifest(tmp_path),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("## Overall agreement")
        assert "| Human-Human | 1.000 | almost perfect |" in out
        assert "Human-model" in out
        assert "## Agreement by cohort" in out
        assert "¥0.0023" in out
        assert "## Verification workflow" in out

    def test_review_time_from_sidecars(self, tmp_path, capsys):
        verified = tmp_path / "verified"
        verified.mkdir()
        (verified / "t7dog.review.json").write_text(
            '{"version": 1, "review_seconds": 120.0, "status": "verified"}',
            encoding="utf-8",
        )
        main(
            [
                "report",
                RATERS,
                "--humans",
                "human1,human2",
                "--models",
                "model",
                "--run-manifest",
                self.run_manifest(tmp_path),
                "--verified-dir",
                str(verified),
            ]
        )
        out = capsys.readouterr().out
        # 1 narrative: manual 600 s, assisted 100 s model + 120 s review
        assert "| 1 | 0.17 | 0.06 | 63.33% |" in out

    def test_csv_format(self, capsys):
        assert main(
            ["report", RATERS, "--humans", "human1,human2", "--format", "csv"]
        ) == 0
        out = capsys.readouterr().out
        assert out.startswith("# Overall agreement")
        assert "Human-Human,1.000,almost perfect" in out


class TestAnnotate:
    def write_config(self, tmp_path, base_url):
        path = tmp_path / "config.toml"
        path.write_text(
            f"""
[models.local]
base_url = "{base_url}"
model_name = "mock-model"
price_per_1k_prompt_tokens = 0.002
price_per_1k_completion_tokens = 0.002
""",
            encoding="utf-8",
        )
        return str(path)

    def test_annotate_with_config_from_env(self, tmp_path, monkeypatch, capsys):
        out_dir = tmp_path / "out"
        with MockLLMServer(fixed_response(EXAMPLE_DICT, 120, 30)) as server:
            monkeypatch.setenv(CONFIG_ENV, self.write_config(tmp_path, server.base_url))
            code = main(["annotate", "--model", "local", "--in", CORPUS, "--out", str(out_dir)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "ok=3 parse_failed=0 llm_failed=0" in printed
        assert "cost=¥" in printed
        assert sorted(p.name for p in out_dir.glob("*.json")) == [
            "appxa.json",
            "appxb.json",
            "run_manifest.json",
            "t7dog.json",
        ]

    def test_unknown_profile(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(CONFIG_ENV, self.write_config(tmp_path, "http://x"))
        code = main(["annotate", "--model", "nope", "--in", CORPUS, "--out", str(tmp_path / "o")])
        assert code == 1
        assert "unknown model profile" in capsys.readouterr().err

    def test_missing_config(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv(CONFIG_ENV, raising=False)
        code = main(["annotate", "--model", "m", "--in", CORPUS, "--out", str(tmp_path / "o")])
        assert code == 1
        assert CONFIG_ENV in capsys.readouterr().err


class TestReviewServe:
    def test_bad_bind_address(self, capsys):
        assert main(["review", "serve", "--bind", "nonsense"]) == 2
        assert "host:port" in capsys.readouterr().err

    def test_missing_config(self, monkeypatch, capsys):
        monkeypatch.delenv(CONFIG_ENV, raising=False)
        assert main(["review", "serve", "--bind", "127.0.0.1:0"]) == 1
        assert "error:" in capsys.readouterr().err


class TestEntryPoint:
    def test_console_script_help(self):
        proc = subprocess.run(
            ["main-annotate", "--help"], capture_output=True, text=True, timeout=30
        )
        assert proc.returncode == 0
        assert "usage: main-annotate" in proc.stdout
        for command in ("parse", "sample", "annotate", "score", "agree", "report", "review"):
            assert command in proc.stdout

    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "main_annotate.cli", "parse", CORPUS],
            capture_output=True,
            text=True,
            timeout=30,
        )
        assert proc.returncode == 0
        assert "3 parsed, 0 failed" in proc.stdout
