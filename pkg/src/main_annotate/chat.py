"""CHAT transcript parsing, disfluency cleaning, and numbered-line rendering.

The parser works on the tier structure only (header tiers starting with ``@``,
speaker tiers ``*SPK:``, dependent tiers ``%code:``); it does not try to
understand the full CHAT annotation vocabulary.  Speaker-tier content is kept
byte-exact so a transcript can be re-emitted unchanged; cleaning for display
and prompting is a separate, lossy step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import EmptyTranscript, MalformedTier, UnknownStory
from .rubric import COHORT_ALIASES, Cohort, Story

# tier lines: *CHI:\tcontent   %mor:\tcontent
_TIER_RE = re.compile(r"^([*%])([^:\t]+):\t(.*)$", re.DOTALL)
# header lines: @ID:\tvalue  or bare @Begin / @End
_HEADER_RE = re.compile(r"^@([^:\t]+)(?::\t?(.*))?$", re.DOTALL)

# cleaning patterns, applied in order
_RETRACE_RE = re.compile(r"<[^<>]*>\s*\[/{1,3}\]")   # <text> [/], [//], [///]
_PAUSE_RE = re.compile(r"\(\.{1,3}\)")               # (.) (..) (...)
_FILLER_RE = re.compile(r"&-\w+")                    # &-uh  &-um
_LEFTOVER_BRACKET_RE = re.compile(r"\[[^\[\]]*\]")
_WS_RE = re.compile(r"\s+")

# cohort age ranges used for consistency warnings only
_COHORT_AGE_YEARS = {
    Cohort.CHILDREN: (3, 7),
    Cohort.YOUNG: (20, 39),
    Cohort.ELDERLY: (60, 90),
}


def clean_text_issues(raw: str) -> tuple[str, list[str]]:
    """Strip retracings, pauses and filled pauses; report what could not be handled.

    Unbalanced angle brackets abort cleaning (raw text returned unchanged)
    rather than risk deleting real content.  Bracketed material with no
    preceding ``<...>`` scope is left in place: without tokenization there is
    no safe way to decide how much preceding text it covers.
    """
    issues: list[str] = []
    if raw.count("<") != raw.count(">"):
        issues.append("UnbalancedBrackets: unmatched < / >; text left uncleaned")
        return raw, issues
    text = _RETRACE_RE.sub("", raw)
    text = _PAUSE_RE.sub("", text)
    text = _FILLER_RE.sub("", text)
    leftover = _LEFTOVER_BRACKET_RE.findall(text)
    for item in leftover:
        issues.append(f"unhandled bracketed material left in text: {item}")
    text = _WS_RE.sub(" ", text).strip()
    return text, issues


def clean_text(raw: str) -> str:
    return clean_text_issues(raw)[0]


@dataclass
class Utterance:
    """One speaker tier.

    ``source_text`` preserves the original bytes (including ``\\n\\t``
    continuation breaks); ``raw_text`` joins continuations with a space for
    display; ``clean_text`` is the disfluency-stripped form.
    """

    index: int                      # 1-based position among speaker tiers
    speaker: str
    source_text: str
    raw_text: str
    clean_text: str
    dependents: tuple[tuple[str, str], ...] = ()


@dataclass
class ParticipantMeta:
    participant_id: str = ""
    age_years: int | None = None
    age_months: int | None = None
    sex: str = ""
    cohort: Cohort | None = None


@dataclass
class Transcript:
    narrative_id: str
    story: Story | None
    participant: ParticipantMeta
    headers: tuple[tuple[str, str], ...]
    utterances: list[Utterance]
    main_speaker: str
    source_path: str = ""
    warnings: list[str] = field(default_factory=list)

    @property
    def line_count(self) -> int:
        return len(self.utterances)

    def require_story(self) -> Story:
        if self.story is None:
            raise UnknownStory(
                f"{self.narrative_id}: story not declared in headers or manifest"
            )
        return self.story


def _parse_age(value: str) -> tuple[int | None, int | None]:
    """CHAT age format: '4;6.' or '4;06.15' -> (years, months)."""
    m = re.match(r"^(\d+);(\d+)?", value.strip())
    if not m:
        return None, None
    years = int(m.group(1))
    months = int(m.group(2)) if m.group(2) else 0
    return years, months


def _parse_id_header(value: str, meta: ParticipantMeta, warnings: list[str]) -> None:
    # @ID: language|corpus|code|age|sex|group|SES|role|education|custom|
    fields = value.split("|")
    if len(fields) < 6:
        warnings.append(f"@ID header has too few fields: {value!r}")
        return
    code, age, sex, group = fields[2], fields[3], fields[4], fields[5]
    if code:
        meta.participant_id = code
    if age:
        meta.age_years, meta.age_months = _parse_age(age)
    if sex:
        meta.sex = sex
    if group:
        cohort = COHORT_ALIASES.get(group.strip().lower())
        if cohort:
            meta.cohort = cohort
        else:
            warnings.append(f"unrecognized cohort group in @ID: {group!r}")


def _check_age_cohort(meta: ParticipantMeta, warnings: list[str]) -> None:
    if meta.cohort is None or meta.age_years is None:
        return
    low, high = _COHORT_AGE_YEARS[meta.cohort]
    if not (low <= meta.age_years <= high):
        warnings.append(
            f"age {meta.age_years};{meta.age_months or 0} outside expected range "
            f"{low}-{high} for cohort {meta.cohort.value}"
        )


def parse_transcript(
    source: str,
    *,
    narrative_id: str | None = None,
    overrides: Mapping[str, object] | None = None,
    require_story: bool = False,
    source_path: str = "",
) -> Transcript:
    """Parse CHAT text into a Transcript.

    overrides (typically from a corpus manifest or CLI flags) win over header
    values; recognized keys: narrative_id, story, cohort, participant_id, age.
    """
    overrides = dict(overrides or {})
    warnings: list[str] = []
    headers: list[tuple[str, str]] = []
    utterances: list[Utterance] = []
    meta = ParticipantMeta()
    story: Story | None = None
    # current tier being accumulated: (kind, name, [content parts])
    current: list | None = None
    pending_dependents: list[tuple[str, str]] = []

    def flush() -> None:
        nonlocal current
        if current is None:
            return
        kind, name, parts = current
        content = "\n".join(parts)
        if kind == "*":
            raw = " ".join(p.lstrip("\t") for p in parts)
            clean, issues = clean_text_issues(raw)
            for issue in issues:
                warnings.append(f"line {len(utterances) + 1} ({name}): {issue}")
            utterances.append(
                Utterance(
                    index=len(utterances) + 1,
                    speaker=name,
                    source_text=content,
                    raw_text=raw,
                    clean_text=clean,
                )
            )
        else:
            if utterances:
                last = utterances[-1]
                last.dependents = last.dependents + ((name, content),)
            else:
                warnings.append(f"dependent tier %{name} before any speaker tier")
        current = None

    for lineno, line in enumerate(source.split("\n"), start=1):
        if line.startswith("\t"):
            # continuation of the previous tier
            if current is None:
                raise MalformedTier(lineno, line)
            current[2].append(line)
            continue
        if current is not None:
            flush()
        if not line.strip():
            continue
        if line.startswith("@"):
            m = _HEADER_RE.match(line)
            if not m:
                raise MalformedTier(lineno, line)
            key, value = m.group(1), m.group(2) or ""
            headers.append((key, value))
            if key == "ID":
                _parse_id_header(value, meta, warnings)
            elif key == "Story":
                try:
                    story = Story(value.strip().lower())
                except ValueError:
                    warnings.append(f"unrecognized @Story value: {value!r}")
            continue
        m = _TIER_RE.match(line)
        if not m:
            raise MalformedTier(lineno, line)
        current = [m.group(1), m.group(2), [m.group(3)]]
    flush()

    if not utterances:
        raise EmptyTranscript(source_path or "<string>")

    # main speaker: the one with the most utterances (ties -> first seen)
    counts: dict[str, int] = {}
    for u in utterances:
        counts[u.speaker] = counts.get(u.speaker, 0) + 1
    main_speaker = max(counts, key=lambda s: (counts[s], -list(counts).index(s)))

    # apply overrides
    if "story" in overrides and overrides["story"]:
        story = Story(str(overrides["story"]).lower())
    if "cohort" in overrides and overrides["cohort"]:
        raw_cohort = str(overrides["cohort"]).strip().lower()
        cohort = COHORT_ALIASES.get(raw_cohort)
        if cohort is None:
            warnings.append(f"unrecognized cohort override: {overrides['cohort']!r}")
        else:
            meta.cohort = cohort
    if "participant_id" in overrides and overrides["participant_id"]:
        meta.participant_id = str(overrides["participant_id"])
    if "age" in overrides and overrides["age"]:
        meta.age_years, meta.age_months = _parse_age(str(overrides["age"]))
    nid = str(overrides.get("narrative_id") or narrative_id or meta.participant_id or "")
    if not nid and source_path:
        nid = Path(source_path).stem
    _check_age_cohort(meta, warnings)

    t = Transcript(
        narrative_id=nid,
        story=story,
        participant=meta,
        headers=tuple(headers),
        utterances=utterances,
        main_speaker=main_speaker,
        source_path=source_path,
        warnings=warnings,
    )
    if require_story:
        t.require_story()
    return t


def parse_transcript_file(
    path: Path,
    *,
    overrides: Mapping[str, object] | None = None,
    require_story: bool = False,
) -> Transcript:
    text = Path(path).read_text(encoding="utf-8")
    return parse_transcript(
        text,
        narrative_id=Path(path).stem,
        overrides=overrides,
        require_story=require_story,
        source_path=str(path),
    )


def serialize_speaker_tiers(t: Transcript) -> str:
    """Re-emit the speaker tiers byte-exactly as they appeared in the source."""
    return "\n".join(f"*{u.speaker}:\t{u.source_text}" for u in t.utterances)


def render_numbered_block(t: Transcript, mode: str = "raw") -> str:
    """Numbered utterance lines, one per utterance: '1 text'.

    mode "raw" keeps CHAT markers (what the model sees); "clean" uses the
    marker-resolved text (display and reports).
    """
    if mode not in ("raw", "clean"):
        raise ValueError(f"mode must be 'raw' or 'clean', got {mode!r}")
    return "\n".join(
        f"{u.index} {u.raw_text if mode == 'raw' else u.clean_text}"
        for u in t.utterances
    )


def load_corpus_manifest(path: Path) -> dict[str, dict]:
    """A corpus manifest maps transcript paths (or basenames) to overrides."""
    import json

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: corpus manifest must be a JSON object")
    return doc


def manifest_overrides_for(manifest: Mapping[str, dict], path: Path) -> dict:
    for key in (str(path), path.name, path.stem):
        if key in manifest:
            return dict(manifest[key])
    return {}


def parse_corpus_dir(
    directory: Path,
    *,
    manifest: Mapping[str, dict] | None = None,
    require_story: bool = False,
) -> tuple[list[Transcript], list[tuple[Path, Exception]]]:
    """Parse every .cha file in a directory; collect per-file failures."""
    transcripts: list[Transcript] = []
    failures: list[tuple[Path, Exception]] = []
    for path in sorted(Path(directory).glob("*.cha")):
        try:
            overrides = manifest_overrides_for(manifest or {}, path)
            transcripts.append(
                parse_transcript_file(
                    path, overrides=overrides, require_story=require_story
                )
            )
        except Exception as exc:  # collect and keep going
            failures.append((path, exc))
    return transcripts, failures
