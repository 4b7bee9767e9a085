"""Command-line interface.

Subcommands: parse, sample, annotate, score, agree, report, review serve.
The config file (model profiles + review service settings) is taken from
--config or the MAIN_ANNOTATE_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import agreement, llm, pipeline, report, review
from .chat import load_corpus_manifest, parse_corpus_dir
from .errors import MainAnnotateError
from .rubric import COHORT_ALIASES, Cohort, load_annotation_dir, score_annotation

CONFIG_ENV = "MAIN_ANNOTATE_CONFIG"


def _config_path(args) -> Path:
    value = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if not value:
        raise MainAnnotateError(
            f"no config file: pass --config or set {CONFIG_ENV}"
        )
    return Path(value)


def _cohorts_from_manifest(path: Path) -> dict[str, Cohort]:
    cohorts: dict[str, Cohort] = {}
    for key, entry in load_corpus_manifest(path).items():
        if not isinstance(entry, dict):
            continue
        nid = str(entry.get("narrative_id") or Path(key).stem)
        raw = str(entry.get("cohort", "")).strip().lower()
        if raw in COHORT_ALIASES:
            cohorts[nid] = COHORT_ALIASES[raw]
    return cohorts


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_parse(args) -> int:
    manifest = load_corpus_manifest(args.manifest) if args.manifest else {}
    transcripts, failures = parse_corpus_dir(Path(args.dir), manifest=manifest)
    for t in transcripts:
        story = t.story.value if t.story else "?"
        cohort = t.participant.cohort.value if t.participant.cohort else "?"
        print(f"{t.narrative_id}\t{story}\t{cohort}\t{t.line_count} lines")
        for w in t.warnings:
            print(f"  warning: {w}", file=sys.stderr)
    for path, exc in failures:
        print(f"FAILED {path}: {exc}", file=sys.stderr)
    print(f"{len(transcripts)} parsed, {len(failures)} failed")
    return 1 if failures else 0


def cmd_sample(args) -> int:
    cohorts = _cohorts_from_manifest(Path(args.manifest))
    if not cohorts:
        print("manifest has no cohort assignments", file=sys.stderr)
        return 1
    plan = pipeline.stratified_sample(cohorts, args.rate, args.seed)
    for w in plan.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(plan.to_json(), end="")
    return 0


def cmd_annotate(args) -> int:
    profiles = llm.load_profiles(_config_path(args))
    if args.model not in profiles:
        known = ", ".join(sorted(profiles))
        print(f"unknown model profile {args.model!r} (have: {known})", file=sys.stderr)
        return 1
    cfg = profiles[args.model]
    result = pipeline.annotate_corpus(
        Path(args.in_dir),
        cfg,
        Path(args.out_dir),
        manifest_path=Path(args.manifest) if args.manifest else None,
        language=args.language,
        resume=args.resume,
    )
    counts = result.counts()
    print(
        f"ok={counts['ok']} parse_failed={counts['parse_failed']} "
        f"llm_failed={counts['llm_failed']}"
    )
    print(
        f"tokens: prompt={result.totals.prompt_tokens} "
        f"completion={result.totals.completion_tokens} "
        f"cost={cfg.currency_label}{result.totals.cost}"
    )
    return 0 if counts["llm_failed"] == 0 and counts["parse_failed"] == 0 else 1


def cmd_score(args) -> int:
    sets = load_annotation_dir(Path(args.annotations))
    if not sets:
        print("no annotation files found", file=sys.stderr)
        return 1
    scores = []
    for nid in sorted(sets):
        s = score_annotation(sets[nid])
        scores.append(s)
        print(f"{nid}\t{s}")
    print(f"n={len(scores)} mean={sum(scores) / len(scores):.2f} "
          f"min={min(scores)} max={max(scores)}")
    return 0


def cmd_agree(args) -> int:
    raters = [r.strip() for r in args.raters.split(",") if r.strip()]
    agreement.require_raters(raters)
    root = Path(args.root)
    sets = {r: load_annotation_dir(root / r) for r in raters}
    for r, s in sets.items():
        if not s:
            print(f"no annotations for rater {r!r} under {root}", file=sys.stderr)
            return 1
    cohorts = _cohorts_from_manifest(Path(args.manifest)) if args.manifest else {}

    def show(label: str, k: agreement.KappaResult) -> None:
        print(f"{label}\tkappa={k.display()}\tband={k.band or '-'}\tn={k.n}")

    for i in range(len(raters)):
        for jdx in range(i + 1, len(raters)):
            ra, rb = raters[i], raters[jdx]
            j, excluded = agreement.build_judgments(
                sets[ra], sets[rb], cohorts=cohorts, rater_a=ra, rater_b=rb
            )
            if excluded:
                print(
                    f"note: {ra}/{rb} skipped unpaired narratives: "
                    f"{', '.join(excluded)}",
                    file=sys.stderr,
                )
            pair = f"{ra} vs {rb}"
            if args.by == "overall":
                show(pair, agreement.kappa_overall(j))
            elif args.by == "category":
                for category, k in agreement.kappa_by_category(j).items():
                    show(f"{pair}\t{category.value}", k)
            else:
                by_cohort = agreement.kappa_by_cohort(j)
                if not by_cohort:
                    print("no cohort information; pass --manifest", file=sys.stderr)
                    return 1
                for cohort, k in by_cohort.items():
                    show(f"{pair}\t{cohort.value}", k)
    return 0


def cmd_report(args) -> int:
    root = Path(args.root)
    humans = [r.strip() for r in args.humans.split(",") if r.strip()]
    models = [r.strip() for r in args.models.split(",") if r.strip()] if args.models else []
    raters = {r: load_annotation_dir(root / r) for r in humans + models}
    cohorts = _cohorts_from_manifest(Path(args.manifest)) if args.manifest else {}
    manifests = []
    llm_wall = 0.0
    for path in args.run_manifest or []:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        manifests.append(doc)
        llm_wall += float(doc.get("wall_seconds", 0.0))
    workflow = None
    if manifests:
        review_seconds = 0.0
        if args.verified_dir:
            for sidecar in Path(args.verified_dir).glob("*.review.json"):
                doc = json.loads(sidecar.read_text(encoding="utf-8"))
                review_seconds += float(doc.get("review_seconds", 0.0))
        nids = {nid for sets in raters.values() for nid in sets}
        if nids:
            workflow = pipeline.workflow_summary(
                len(nids),
                llm_wall_seconds=llm_wall,
                review_seconds_per_narrative=review_seconds / len(nids)
                if review_seconds
                else args.review_minutes * 60.0,
                baseline_minutes_per_narrative=args.baseline_minutes,
            )
    data = report.ReportData(
        raters=raters,
        humans=humans,
        models=models,
        cohorts=cohorts,
        run_manifests=manifests,
        workflow=workflow,
    )
    print(report.emit_report(data, format=args.format), end="")
    return 0


def cmd_review_serve(args) -> int:
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        print(f"--bind must be host:port, got {args.bind!r}", file=sys.stderr)
        return 2
    config = review.load_review_config(_config_path(args))
    review.serve(config, host, int(port))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main-annotate",
        description="LLM-assisted story-structure annotation for spoken narratives",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a directory of CHAT transcripts")
    p.add_argument("dir")
    p.add_argument("--manifest", help="corpus manifest JSON with per-file metadata")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("sample", help="stratified verification sample by cohort")
    p.add_argument("manifest", help="corpus manifest JSON with cohort assignments")
    p.add_argument("--rate", default="0.15", help="sampling rate, e.g. 0.15")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("annotate", help="run a model over a transcript directory")
    p.add_argument("--model", required=True, help="model profile name")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--resume", action="store_true",
                   help="skip narratives that already have a valid annotation")
    p.add_argument("--manifest", help="corpus manifest JSON")
    p.add_argument("--language", choices=["zh", "en"], default=None)
    p.add_argument("--config", help=f"config file (default ${CONFIG_ENV})")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("score", help="story structure scores for one rater")
    p.add_argument("annotations", help="directory of annotation JSON files")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("agree", help="inter-rater agreement (Cohen's kappa)")
    p.add_argument("root", help="directory holding one subdirectory per rater")
    p.add_argument("--raters", required=True, help="comma-separated rater ids")
    p.add_argument("--by", choices=["overall", "category", "cohort"],
                   default="overall")
    p.add_argument("--manifest", help="corpus manifest JSON (for cohorts)")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("report", help="agreement / score / cost report")
    p.add_argument("root", help="directory holding one subdirectory per rater")
    p.add_argument("--humans", required=True, help="comma-separated human rater ids")
    p.add_argument("--models", default="", help="comma-separated model rater ids")
    p.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    p.add_argument("--manifest", help="corpus manifest JSON (for cohorts)")
    p.add_argument("--run-manifest", action="append",
                   help="run_manifest.json from an annotation run (repeatable)")
    p.add_argument("--verified-dir",
                   help="verified annotation dir; review time read from sidecars")
    p.add_argument("--review-minutes", type=float, default=3.0,
                   help="review minutes per narrative when no sidecars exist")
    p.add_argument("--baseline-minutes", type=float, default=10.0,
                   help="manual annotation minutes per narrative")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("review", help="human verification service")
    rsub = p.add_subparsers(dest="review_command", required=True)
    ps = rsub.add_parser("serve", help="start the review HTTP service")
    ps.add_argument("--bind", default="127.0.0.1:8000", help="host:port")
    ps.add_argument("--config", help=f"config file (default ${CONFIG_ENV})")
    ps.set_defaults(func=cmd_review_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MainAnnotateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
