"""Prompt assembly and position-dictionary parsing.

A prompt = versioned instruction template (per story and language) + the
numbered utterance block.  The model is expected to answer with a position
dictionary ``{'A0': [1], 'A1': Null, ...}``; parsing is tolerant of the
quote styles, Null spellings and stray prose that real models produce, and
reports exactly what it had to tolerate.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import UnknownStory
from .chat import Transcript, render_numbered_block
from .rubric import ELEMENTS, AnnotationSet, ElementId, Story, make_positions

LANGUAGES = ("zh", "en")

# typography normalization applied before any matching
_QUOTE_MAP = str.maketrans({
    "‘": "'", "’": "'",   # ''
    "“": '"', "”": '"',   # ""
    "：": ":",                   # full-width colon
    "，": ",",                   # full-width comma
    "［": "[", "］": "]",   # full-width brackets
})

_DICT_BLOCK_RE = re.compile(r"\{[^{}]*\}", re.DOTALL)
_KEY_RE = re.compile(r"['\"]?(A\d{1,2})['\"]?\s*:")
_PAIR_RE = re.compile(
    r"['\"]?(A\d{1,2})['\"]?\s*:\s*(\[[^\]]*\]|Null|null|NULL|None|none|-?\d+)"
)
_INT_RE = re.compile(r"-?\d+")
_NULLS = {"null", "none"}

# issue kinds that mean the response needed actual repair (vs mere lexical
# tolerance, which every model output exercises)
_REPAIR_KINDS = frozenset(
    {"OutOfRangeIndex", "DuplicateKey", "BareIndex", "JunkInList"}
)


@dataclass(frozen=True)
class Issue:
    severity: str   # "error" | "warning" | "info"
    kind: str
    detail: str


@dataclass
class ParseReport:
    """Outcome of parsing one model response.

    Invariant: ``annotation`` is present exactly when there are no
    error-severity issues.
    """

    narrative_id: str
    rater_id: str
    annotation: AnnotationSet | None
    issues: list[Issue] = field(default_factory=list)
    repaired: bool = False

    @property
    def ok(self) -> bool:
        return self.annotation is not None

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]


@dataclass(frozen=True)
class PromptBundle:
    narrative_id: str
    story: Story
    language: str
    instruction_text: str
    numbered_block: str
    line_count: int
    template_name: str
    template_checksum: str

    @property
    def text(self) -> str:
        if self.language == "zh":
            return (
                self.instruction_text.rstrip("\n")
                + "\n\n文本=\n““““\n"
                + self.numbered_block
                + "\n””””\n"
            )
        return (
            self.instruction_text.rstrip("\n")
            + '\n\nText:\n""""\n'
            + self.numbered_block
            + '\n""""\n'
        )


def load_template(story: Story, language: str = "zh") -> tuple[str, str, str]:
    """Return (name, text, sha256) for the instruction template."""
    if language not in LANGUAGES:
        raise ValueError(f"unsupported prompt language: {language!r}")
    name = f"{story.value}_{language}"
    path = resources.files("main_annotate") / "templates" / f"{name}.txt"
    data = path.read_bytes()
    return name, data.decode("utf-8"), hashlib.sha256(data).hexdigest()


def build_prompt(t: Transcript, language: str = "zh") -> PromptBundle:
    story = t.require_story()
    name, text, checksum = load_template(story, language)
    block = render_numbered_block(t, mode="raw")
    return PromptBundle(
        narrative_id=t.narrative_id,
        story=story,
        language=language,
        instruction_text=text,
        numbered_block=block,
        line_count=t.line_count,
        template_name=name,
        template_checksum=checksum,
    )


def serialize_position_dict(a: AnnotationSet) -> str:
    """Canonical position-dictionary text: all 17 keys, Null for absence."""
    parts = []
    for e in ELEMENTS:
        lines = sorted(a.positions[e])
        value = f"[{', '.join(str(i) for i in lines)}]" if lines else "Null"
        parts.append(f"'{e.value}': {value}")
    return "{" + ", ".join(parts) + "}"


def _parse_list_value(
    element: str,
    value: str,
    line_count: int,
    issues: list[Issue],
) -> frozenset[int]:
    inner = value[1:-1]
    ints = _INT_RE.findall(inner)
    residue = _INT_RE.sub("", inner).replace(",", "").strip()
    if residue:
        issues.append(
            Issue(
                "warning",
                "JunkInList",
                f"{element}: ignored non-integer content in list: {value}",
            )
        )
    keep: set[int] = set()
    for token in ints:
        i = int(token)
        if 1 <= i <= line_count:
            keep.add(i)
        else:
            issues.append(
                Issue(
                    "warning",
                    "OutOfRangeIndex",
                    f"{element}: line {i} outside 1..{line_count}; dropped",
                )
            )
    return frozenset(keep)


def parse_position_dict(
    response: str,
    line_count: int,
    *,
    narrative_id: str = "",
    rater_id: str = "",
    story: Story | None = None,
) -> ParseReport:
    """Extract an AnnotationSet from a model response.

    Takes the last ``{...}`` block holding position-dictionary keys, so
    chatter before or after the dictionary is harmless.
    """
    issues: list[Issue] = []
    text = response.translate(_QUOTE_MAP)

    block = None
    for candidate in _DICT_BLOCK_RE.findall(text):
        if _KEY_RE.search(candidate):
            block = candidate
    if block is None:
        issues.append(
            Issue("error", "NoDictionaryFound", "no position dictionary in response")
        )
        return ParseReport(narrative_id, rater_id, None, issues)

    valid_keys = {e.value for e in ELEMENTS}
    seen: dict[str, frozenset[int]] = {}
    for m in _PAIR_RE.finditer(block):
        key, value = m.group(1), m.group(2)
        if key not in valid_keys:
            issues.append(
                Issue("warning", "UnknownKey", f"ignored unknown key {key!r}")
            )
            continue
        if key in seen:
            issues.append(
                Issue("warning", "DuplicateKey", f"{key} given more than once; last wins")
            )
        if value.lower() in _NULLS:
            seen[key] = frozenset()
        elif value.startswith("["):
            seen[key] = _parse_list_value(key, value, line_count, issues)
        else:
            issues.append(
                Issue("warning", "BareIndex", f"{key}: bare line number {value} treated as [{value}]")
            )
            i = int(value)
            if 1 <= i <= line_count:
                seen[key] = frozenset({i})
            else:
                issues.append(
                    Issue(
                        "warning",
                        "OutOfRangeIndex",
                        f"{key}: line {i} outside 1..{line_count}; dropped",
                    )
                )
                seen[key] = frozenset()

    # keys present in the block but whose value matched nothing
    keys_in_block = set(_KEY_RE.findall(block)) & valid_keys
    for key in sorted(keys_in_block - set(seen), key=lambda k: int(k[1:])):
        issues.append(
            Issue("error", "UnparseableValue", f"{key}: value could not be parsed")
        )
    missing = sorted(valid_keys - keys_in_block, key=lambda k: int(k[1:]))
    if missing:
        issues.append(
            Issue("error", "MissingKeys", f"missing keys: {', '.join(missing)}")
        )

    repaired = any(i.kind in _REPAIR_KINDS for i in issues)
    if any(i.severity == "error" for i in issues):
        return ParseReport(narrative_id, rater_id, None, issues, repaired)

    annotation = AnnotationSet(
        narrative_id=narrative_id,
        rater_id=rater_id,
        story=story,
        positions=make_positions({ElementId(k): v for k, v in seen.items()}),
    )
    return ParseReport(narrative_id, rater_id, annotation, issues, repaired)


def validate_annotation(a: AnnotationSet, t: Transcript) -> list[Issue]:
    """Check an annotation against its transcript."""
    issues: list[Issue] = []
    by_line: dict[int, list[str]] = {}
    for e in ELEMENTS:
        for i in sorted(a.positions[e]):
            if not 1 <= i <= t.line_count:
                issues.append(
                    Issue(
                        "error",
                        "OutOfRangeIndex",
                        f"{e.value}: line {i} outside 1..{t.line_count}",
                    )
                )
            else:
                by_line.setdefault(i, []).append(e.value)
    for i in sorted(by_line):
        codes = by_line[i]
        if len(codes) > 1:
            issues.append(
                Issue(
                    "info",
                    "MultiElementLine",
                    f"line {i} carries {len(codes)} elements: {', '.join(codes)}",
                )
            )
    return issues
