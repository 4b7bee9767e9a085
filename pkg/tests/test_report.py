"""Report rendering: section content, row ordering, determinism, CSV parity."""

import csv
import io

import pytest

from conftest import presence_sets, triple_rater_sets
from main_annotate.pipeline import workflow_summary
from main_annotate.report import ReportData, UNDEFINED, emit_report, row_model_mean
from main_annotate.rubric import Cohort


def triple_report_data(**extra) -> ReportData:
    model, h1, h2 = triple_rater_sets()
    return ReportData(
        raters={"model": model, "h1": h1, "h2": h2},
        humans=["h1", "h2"],
        models=["model"],
        **extra,
    )


def section_lines(text: str, title: str, md: bool = True) -> list[str]:
    """Table lines of one section (markdown `## title` or CSV `# title`)."""
    marker = f"## {title}" if md else f"# {title}"
    lines = text.splitlines()
    start = lines.index(marker) + 1
    out = []
    for line in lines[start:]:
        if line.startswith("## " if md else "# "):
            break
        if line.strip():
            out.append(line)
    return out


class TestRowModelMean:
    def test_four_model_rows(self):
        assert row_model_mean([0.966, 0.965, 0.929, 0.867]) == "0.932"
        assert row_model_mean([0.857, 0.829, 0.851, 0.718]) == "0.814"

    def test_single_model_row_is_identity(self):
        assert row_model_mean([0.725]) == "0.725"


class TestOverallSection:
    def test_human_human_and_model_rows(self):
        text = emit_report(triple_report_data())
        rows = section_lines(text, "Overall agreement")
        assert "| Human-Human | 0.600 | moderate |" in rows
        assert "| Human-model | 0.700 | substantial |" in rows

    def test_humans_only(self):
        _, h1, h2 = triple_rater_sets()
        data = ReportData(raters={"h1": h1, "h2": h2}, humans=["h1", "h2"], models=[])
        text = emit_report(data)
        rows = section_lines(text, "Overall agreement")
        assert any("Human-Human" in r for r in rows)
        assert not any("Human-model" in r for r in rows)


class TestGroupedSections:
    def test_category_section_has_all_seven_rows(self):
        text = emit_report(triple_report_data())
        rows = section_lines(text, "Agreement by category")[2:]  # skip header+rule
        assert len(rows) == 7
        names = [r.split("|")[1].strip() for r in rows]
        assert set(names) == {
            "Time",
            "Location",
            "IST as initiating event",
            "Goal",
            "Attempt",
            "Outcome",
            "IST as reaction",
        }

    def test_category_rows_sorted_by_model_mean_desc(self):
        text = emit_report(triple_report_data())
        rows = section_lines(text, "Agreement by category")[2:]
        means = [r.split("|")[4].strip() for r in rows]
        values = [float(m) for m in means if m != UNDEFINED]
        assert values == sorted(values, reverse=True)
        # undefined rows, if any, come after every defined row
        tail = means[len(values):]
        assert all(m == UNDEFINED for m in tail)

    def test_cohort_section_with_undefined_cohort_last(self):
        cohorts = {}
        for i in range(40):
            nid = f"n{i:02d}"
            if i < 20:
                cohorts[nid] = Cohort.CHILDREN
            elif i < 30:
                cohorts[nid] = Cohort.ELDERLY
            else:
                cohorts[nid] = Cohort.YOUNG  # nobody marks anything here
        text = emit_report(triple_report_data(cohorts=cohorts))
        rows = section_lines(text, "Agreement by cohort")[2:]
        names = [r.split("|")[1].strip() for r in rows]
        assert len(names) == 3
        assert names[-1] == "young"
        assert UNDEFINED in rows[-1]

    def test_no_cohort_section_without_cohorts(self):
        text = emit_report(triple_report_data())
        assert "Agreement by cohort" not in text


class TestScoreSection:
    def test_per_rater_distribution(self):
        text = emit_report(triple_report_data())
        rows = section_lines(text, "Story structure scores")[2:]
        assert rows[0] == "| h1 | 40 | 8.50 | 0 | 17 |"
        assert [r.split("|")[1].strip() for r in rows] == ["h1", "h2", "model"]


class TestCostAndWorkflow:
    MANIFEST = {
        "profile": "local",
        "totals": {
            "requests": 3,
            "prompt_tokens": 300000,
            "completion_tokens": 20393,
            "total_tokens": 320393,
            "cost": "0.6600",
        },
    }

    def test_cost_section_from_manifest(self):
        text = emit_report(triple_report_data(run_manifests=[self.MANIFEST]))
        rows = section_lines(text, "Cost and usage")
        assert "| local | 3 | 300000 | 20393 | 320393 | ¥0.6600 |" in rows

    def test_currency_label_configurable(self):
        text = emit_report(
            triple_report_data(run_manifests=[self.MANIFEST], currency_label="$")
        )
        assert "$0.6600" in text

    def test_no_cost_section_without_manifests(self):
        assert "Cost and usage" not in emit_report(triple_report_data())

    def test_workflow_section(self):
        text = emit_report(
            triple_report_data(workflow=workflow_summary(414, 10800.0))
        )
        rows = section_lines(text, "Verification workflow")
        assert "| 414 | 69.00 | 23.70 | 65.65% |" in rows


class TestFormats:
    def test_markdown_deterministic(self):
        data = triple_report_data(workflow=workflow_summary(414, 10800.0))
        assert emit_report(data) == emit_report(data)

    def test_csv_contains_same_numbers(self):
        data = triple_report_data(
            run_manifests=[TestCostAndWorkflow.MANIFEST],
            workflow=workflow_summary(414, 10800.0),
        )
        text = emit_report(data, format="csv")
        assert "# Overall agreement" in text
        rows = list(csv.reader(io.StringIO("\n".join(section_lines(text, "Overall agreement", md=False)))))
        assert rows[0] == ["Comparison", "Kappa", "Interpretation"]
        assert ["Human-Human", "0.600", "moderate"] in rows
        assert ["Human-model", "0.700", "substantial"] in rows
        cost_rows = list(csv.reader(io.StringIO("\n".join(section_lines(text, "Cost and usage", md=False)))))
        assert ["local", "3", "300000", "20393", "320393", "¥0.6600"] in cost_rows

    def test_csv_category_rows_parse_back(self):
        text = emit_report(triple_report_data(), format="csv")
        rows = list(csv.reader(io.StringIO("\n".join(section_lines(text, "Agreement by category", md=False)))))
        header, body = rows[0], rows[1:]
        assert header == ["Category", "Human-Human", "Human-model", "Model mean", "Interpretation"]
        assert len(body) == 7
        for row in body:
            assert row[3] == UNDEFINED or -1.0 <= float(row[3]) <= 1.0

    def test_unknown_format_refused(self):
        with pytest.raises(ValueError):
            emit_report(triple_report_data(), format="html")
