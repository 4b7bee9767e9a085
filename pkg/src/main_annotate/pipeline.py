"""Corpus-level operations: sampling for verification, batch annotation runs,
and the manual-versus-assisted workflow arithmetic.
"""

from __future__ import annotations

import json
import math
import random
import time
import uuid
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import llm
from .chat import Transcript, load_corpus_manifest, parse_corpus_dir
from .llm import BatchItem, LedgerTotals, ModelConfig
from .prompting import build_prompt, parse_position_dict, validate_annotation
from .rubric import Cohort, load_annotation, save_annotation

_COHORT_ORDER = (Cohort.CHILDREN, Cohort.YOUNG, Cohort.ELDERLY)


@dataclass
class SamplePlan:
    rate: str
    seed: int
    by_cohort: dict[Cohort, list[str]]
    sizes: dict[Cohort, int]
    warnings: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(len(ids) for ids in self.by_cohort.values())

    def to_json(self) -> str:
        doc = {
            "rate": self.rate,
            "seed": self.seed,
            "cohorts": {
                cohort.value: {
                    "population": self.sizes.get(cohort, 0),
                    "sampled": len(ids),
                    "ids": ids,
                }
                for cohort, ids in self.by_cohort.items()
            },
            "total_sampled": self.total,
            "warnings": self.warnings,
        }
        return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def stratified_sample(
    members: Mapping[str, Cohort],
    rate: str | float,
    seed: int,
) -> SamplePlan:
    """Sample ceil(rate * cohort size) ids from each cohort, reproducibly.

    The rate goes through Fraction(str(rate)) so decimal rates behave like
    decimals: 15% of 20 is exactly 3, never ceil(3.0000000000000004) = 4.
    """
    frac = Fraction(str(rate))
    if not 0 < frac <= 1:
        raise ValueError(f"sampling rate must be in (0, 1], got {rate}")
    rng = random.Random(seed)
    by_cohort: dict[Cohort, list[str]] = {}
    sizes: dict[Cohort, int] = {}
    warnings: list[str] = []
    for cohort in _COHORT_ORDER:
        ids = sorted(nid for nid, c in members.items() if c is cohort)
        sizes[cohort] = len(ids)
        if not ids:
            warnings.append(f"cohort {cohort.value} is empty; skipped")
            continue
        k = math.ceil(frac * len(ids))
        by_cohort[cohort] = sorted(rng.sample(ids, k))
    return SamplePlan(str(rate), seed, by_cohort, sizes, warnings)


# ---------------------------------------------------------------------------
# Batch annotation
# ---------------------------------------------------------------------------

@dataclass
class NarrativeOutcome:
    narrative_id: str
    status: str                     # "ok" | "parse_failed" | "llm_failed"
    resumed: bool = False
    attempts: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    cost: str = "0.0000"
    issues: list[str] = field(default_factory=list)
    error: str = ""


@dataclass
class RunResult:
    run_id: str
    profile_name: str
    model_name: str
    language: str
    started_at: str
    finished_at: str
    wall_seconds: float
    outcomes: list[NarrativeOutcome]
    totals: LedgerTotals
    templates: dict[str, str] = field(default_factory=dict)
    corpus: list[str] = field(default_factory=list)
    parse_failures: list[str] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        counts = {"ok": 0, "parse_failed": 0, "llm_failed": 0}
        for outcome in self.outcomes:
            counts[outcome.status] += 1
        return counts

    def manifest_doc(self) -> dict:
        return {
            "run_id": self.run_id,
            "profile": self.profile_name,
            "model": self.model_name,
            "corpus": self.corpus,
            "language": self.language,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "wall_seconds": round(self.wall_seconds, 3),
            "templates": self.templates,
            "counts": self.counts(),
            "narratives": [
                {
                    "narrative_id": o.narrative_id,
                    "status": o.status,
                    "resumed": o.resumed,
                    "attempts": o.attempts,
                    "prompt_tokens": o.prompt_tokens,
                    "completion_tokens": o.completion_tokens,
                    "cost": o.cost,
                    "issues": o.issues,
                    "error": o.error,
                }
                for o in self.outcomes
            ],
            "totals": {
                "requests": self.totals.requests,
                "prompt_tokens": self.totals.prompt_tokens,
                "completion_tokens": self.totals.completion_tokens,
                "total_tokens": self.totals.total_tokens,
                "cost": str(self.totals.cost),
            },
            "corpus_parse_failures": self.parse_failures,
        }


def _iso_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _existing_annotation_ok(path: Path) -> bool:
    try:
        load_annotation(path)
        return True
    except Exception:
        return False


def annotate_corpus(
    corpus_dir: Path,
    cfg: ModelConfig,
    out_dir: Path,
    *,
    manifest_path: Path | None = None,
    language: str | None = None,
    resume: bool = False,
    session=None,
    sleeper: Callable[[float], None] = time.sleep,
) -> RunResult:
    """Parse a corpus, prompt the model for each narrative, write annotation
    files plus a run manifest into out_dir.
    """
    language = language or cfg.prompt_language
    corpus_manifest = load_corpus_manifest(manifest_path) if manifest_path else {}
    transcripts, failures = parse_corpus_dir(corpus_dir, manifest=corpus_manifest)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    outcomes: list[NarrativeOutcome] = []
    to_run: list[Transcript] = []
    for t in transcripts:
        target = out_dir / f"{t.narrative_id}.json"
        if resume and _existing_annotation_ok(target):
            outcomes.append(
                NarrativeOutcome(t.narrative_id, "ok", resumed=True)
            )
        else:
            to_run.append(t)

    started = _iso_now()
    t0 = time.monotonic()
    bundles = [build_prompt(t, language) for t in to_run]
    templates = {b.template_name: b.template_checksum for b in bundles}
    prompts = [(b.narrative_id, b.text) for b in bundles]
    items: list[BatchItem] = llm.run_batch(
        cfg, prompts, session=session, sleeper=sleeper
    )
    totals = LedgerTotals()

    by_id = {t.narrative_id: t for t in to_run}
    for item in items:
        t = by_id[item.narrative_id]
        if not item.ok:
            outcomes.append(
                NarrativeOutcome(item.narrative_id, "llm_failed", error=item.error)
            )
            continue
        usage = item.usage
        totals.add(usage)
        report = parse_position_dict(
            item.text,
            t.line_count,
            narrative_id=t.narrative_id,
            rater_id=cfg.model_name,
            story=t.story,
        )
        issue_lines = [f"{i.severity}:{i.kind}: {i.detail}" for i in report.issues]
        if not report.ok:
            outcomes.append(
                NarrativeOutcome(
                    item.narrative_id,
                    "parse_failed",
                    attempts=usage.attempts,
                    prompt_tokens=usage.prompt_tokens,
                    completion_tokens=usage.completion_tokens,
                    cost=str(usage.cost),
                    issues=issue_lines,
                )
            )
            continue
        annotation = report.annotation
        issue_lines += [
            f"{i.severity}:{i.kind}: {i.detail}"
            for i in validate_annotation(annotation, t)
            if i.severity != "info"
        ]
        save_annotation(annotation, out_dir / f"{t.narrative_id}.json")
        outcomes.append(
            NarrativeOutcome(
                item.narrative_id,
                "ok",
                attempts=usage.attempts,
                prompt_tokens=usage.prompt_tokens,
                completion_tokens=usage.completion_tokens,
                cost=str(usage.cost),
                issues=issue_lines,
            )
        )

    wall = time.monotonic() - t0
    order = {t.narrative_id: i for i, t in enumerate(transcripts)}
    outcomes.sort(key=lambda o: order[o.narrative_id])
    result = RunResult(
        run_id=f"{cfg.profile_name}-{uuid.uuid4().hex[:12]}",
        profile_name=cfg.profile_name,
        model_name=cfg.model_name,
        language=language,
        started_at=started,
        finished_at=_iso_now(),
        wall_seconds=wall,
        outcomes=outcomes,
        totals=totals,
        templates=templates,
        corpus=[t.narrative_id for t in transcripts],
        parse_failures=[f"{path}: {exc}" for path, exc in failures],
    )
    (out_dir / "run_manifest.json").write_text(
        json.dumps(result.manifest_doc(), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    return result


# ---------------------------------------------------------------------------
# Workflow arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorkflowSummary:
    n_narratives: int
    manual_seconds: float
    assisted_seconds: float

    @property
    def reduction(self) -> float:
        return 1.0 - self.assisted_seconds / self.manual_seconds

    @property
    def reduction_percent_display(self) -> str:
        return f"{self.reduction * 100:.2f}%"


def workflow_summary(
    n_narratives: int,
    llm_wall_seconds: float,
    *,
    review_seconds_per_narrative: float = 180.0,
    baseline_minutes_per_narrative: float = 10.0,
) -> WorkflowSummary:
    """Fully-manual annotation time versus model run plus human verification."""
    if n_narratives <= 0:
        raise ValueError("need at least one narrative")
    manual = n_narratives * baseline_minutes_per_narrative * 60.0
    assisted = llm_wall_seconds + n_narratives * review_seconds_per_narrative
    return WorkflowSummary(n_narratives, manual, assisted)
