"""Deterministic agreement / score / cost reports in markdown or CSV."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .agreement import (
    ItemJudgments,
    KappaResult,
    band_for,
    build_judgments,
    cohen_kappa_counts,
    counts_for,
    format_kappa,
    human_llm_kappa,
    mean_display,
)
from .pipeline import WorkflowSummary
from .rubric import AnnotationSet, Category, Cohort, score_annotation

UNDEFINED = "UNDEFINED"


def row_model_mean(values: Sequence[float]) -> str:
    """Mean of the per-model kappas in one report row, displayed to 3 decimals."""
    return mean_display(values)


@dataclass
class ReportData:
    raters: dict[str, dict[str, AnnotationSet]]
    humans: list[str]
    models: list[str]
    cohorts: Mapping[str, Cohort] = field(default_factory=dict)
    run_manifests: list[dict] = field(default_factory=list)
    workflow: WorkflowSummary | None = None
    currency_label: str = "¥"


def _masked_kappa(j: ItemJudgments, mask: list[bool]) -> KappaResult | None:
    if not any(mask):
        return None
    return cohen_kappa_counts(*counts_for(j, mask))


def _pair_judgments(data: ReportData, a: str, b: str) -> ItemJudgments:
    j, _ = build_judgments(
        data.raters[a], data.raters[b], cohorts=data.cohorts, rater_a=a, rater_b=b
    )
    return j


def _display(k: KappaResult | None) -> str:
    if k is None or k.kappa is None:
        return UNDEFINED
    return k.display()


@dataclass
class _Row:
    name: str
    human: str
    per_model: list[str]
    model_mean: str
    band: str


def _grouped_rows(
    data: ReportData,
    group_names: Sequence[str],
    mask_of,  # (judgments, group name) -> list[bool]
) -> list[_Row]:
    """One row per group (category or cohort) with human and per-model kappas."""
    h_j = None
    if len(data.humans) >= 2:
        h_j = _pair_judgments(data, data.humans[0], data.humans[1])
    model_js: dict[str, list[ItemJudgments]] = {}
    for m in data.models:
        model_js[m] = [_pair_judgments(data, m, h) for h in data.humans[:2]]

    rows: list[_Row] = []
    for name in group_names:
        human_disp = UNDEFINED
        if h_j is not None:
            human_disp = _display(_masked_kappa(h_j, mask_of(h_j, name)))
        per_model: list[str] = []
        mean_inputs: list[float] = []
        for m in data.models:
            ks = [
                _masked_kappa(j, mask_of(j, name)) for j in model_js[m]
            ]
            defined = [k.kappa for k in ks if k is not None and k.kappa is not None]
            if ks and len(defined) == len(ks):
                value = sum(defined) / len(defined)
                per_model.append(format_kappa(value))
                mean_inputs.append(value)
            else:
                per_model.append(UNDEFINED)
        if mean_inputs:
            mm = row_model_mean(mean_inputs)
            band = band_for(float(mm))
        elif data.models:
            mm, band = UNDEFINED, "-"
        else:
            mm = "-"
            band = band_for(float(human_disp)) if human_disp != UNDEFINED else "-"
        rows.append(_Row(name, human_disp, per_model, mm, band))

    def sort_key(row: _Row) -> tuple:
        for candidate in (row.model_mean, row.human):
            if candidate not in (UNDEFINED, "-"):
                return (0, -float(candidate), row.name)
        return (1, 0.0, row.name)

    rows.sort(key=sort_key)
    return rows


def _category_rows(data: ReportData) -> list[_Row]:
    def mask_of(j: ItemJudgments, name: str) -> list[bool]:
        return [item.element.category.value == name for item in j.items]

    return _grouped_rows(data, [c.value for c in Category], mask_of)


def _cohort_rows(data: ReportData) -> list[_Row]:
    present: list[str] = []
    for cohort in Cohort:
        if any(c is cohort for c in data.cohorts.values()):
            present.append(cohort.value)

    def mask_of(j: ItemJudgments, name: str) -> list[bool]:
        return [item.cohort is not None and item.cohort.value == name for item in j.items]

    return _grouped_rows(data, present, mask_of)


def _overall_rows(data: ReportData) -> list[tuple[str, str, str]]:
    rows: list[tuple[str, str, str]] = []
    if len(data.humans) >= 2:
        k = cohen_kappa_counts(
            *counts_for(_pair_judgments(data, data.humans[0], data.humans[1]))
        )
        rows.append(
            ("Human-Human", _display(k), k.band or "-")
        )
    for m in data.models:
        if len(data.humans) >= 2:
            mk = human_llm_kappa(
                data.raters[m],
                data.raters[data.humans[0]],
                data.raters[data.humans[1]],
                cohorts=data.cohorts,
            )
            disp = mk.display()
            band = band_for(mk.mean) if mk.mean is not None else "-"
        elif len(data.humans) == 1:
            k = cohen_kappa_counts(
                *counts_for(_pair_judgments(data, m, data.humans[0]))
            )
            disp, band = _display(k), (k.band or "-")
        else:
            continue
        rows.append((f"Human-{m}", disp, band))
    return rows


def _score_rows(data: ReportData) -> list[tuple[str, int, str, int, int]]:
    rows = []
    for rater in sorted(data.raters):
        sets = data.raters[rater]
        if not sets:
            continue
        scores = [score_annotation(a) for a in sets.values()]
        rows.append(
            (
                rater,
                len(scores),
                f"{sum(scores) / len(scores):.2f}",
                min(scores),
                max(scores),
            )
        )
    return rows


def _cost_rows(data: ReportData) -> list[tuple[str, str, str, str, str, str]]:
    rows = []
    for doc in data.run_manifests:
        totals = doc.get("totals", {})
        rows.append(
            (
                str(doc.get("profile", doc.get("model", "?"))),
                str(totals.get("requests", 0)),
                str(totals.get("prompt_tokens", 0)),
                str(totals.get("completion_tokens", 0)),
                str(totals.get("total_tokens", 0)),
                f"{data.currency_label}{totals.get('cost', '0')}",
            )
        )
    return rows


def _md_table(out: io.StringIO, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    out.write("| " + " | ".join(header) + " |\n")
    out.write("|" + "|".join(" --- " for _ in header) + "|\n")
    for row in rows:
        out.write("| " + " | ".join(str(cell) for cell in row) + " |\n")


def _csv_table(out: io.StringIO, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    import csv

    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(list(row))


def emit_report(data: ReportData, format: str = "markdown") -> str:
    """Render the full report; same data always yields identical bytes."""
    if format not in ("markdown", "csv"):
        raise ValueError(f"unsupported report format: {format!r}")
    md = format == "markdown"
    out = io.StringIO()
    table = _md_table if md else _csv_table

    def section(title: str) -> None:
        if out.tell():
            out.write("\n")
        out.write((f"## {title}\n\n") if md else (f"# {title}\n"))

    per_model_headers = [f"Human-{m}" for m in data.models]

    section("Overall agreement")
    table(out, ["Comparison", "Kappa", "Interpretation"], _overall_rows(data))

    section("Agreement by category")
    table(
        out,
        ["Category", "Human-Human", *per_model_headers, "Model mean", "Interpretation"],
        [[r.name, r.human, *r.per_model, r.model_mean, r.band] for r in _category_rows(data)],
    )

    cohort_rows = _cohort_rows(data)
    if cohort_rows:
        section("Agreement by cohort")
        table(
            out,
            ["Cohort", "Human-Human", *per_model_headers, "Model mean", "Interpretation"],
            [[r.name, r.human, *r.per_model, r.model_mean, r.band] for r in cohort_rows],
        )

    section("Story structure scores")
    table(
        out,
        ["Rater", "Narratives", "Mean score", "Min", "Max"],
        _score_rows(data),
    )

    if data.run_manifests:
        section("Cost and usage")
        table(
            out,
            ["Run", "Requests", "Prompt tokens", "Completion tokens", "Total tokens", "Cost"],
            _cost_rows(data),
        )

    if data.workflow is not None:
        w = data.workflow
        section("Verification workflow")
        table(
            out,
            ["Narratives", "Manual hours", "Assisted hours", "Time reduction"],
            [[
                str(w.n_narratives),
                f"{w.manual_seconds / 3600:.2f}",
                f"{w.assisted_seconds / 3600:.2f}",
                w.reduction_percent_display,
            ]],
        )

    return out.getvalue()
