"""The MAIN story-structure scheme: 17 elements, presence scoring, annotation files.

Element codes A0-A16 map one-to-one onto the rubric labels
T, L, I1, G1, A1, O1, R1, I2, G2, A2, O2, R2, I3, G3, A3, O3, R3.
Note the clash between code and label namespaces: code "A4" is labelled "A1"
(Attempt, episode 1).  Everything downstream keys on the codes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import AnnotationFormatError


class Story(str, Enum):
    DOG = "dog"
    CAT = "cat"


class Cohort(str, Enum):
    CHILDREN = "children"
    YOUNG = "young"
    ELDERLY = "elderly"

    @property
    def short(self) -> str:
        return _COHORT_SHORT[self]


_COHORT_SHORT = {Cohort.CHILDREN: "chi", Cohort.YOUNG: "you", Cohort.ELDERLY: "eld"}

# accepted spellings in headers / manifests
COHORT_ALIASES = {
    "chi": Cohort.CHILDREN,
    "child": Cohort.CHILDREN,
    "children": Cohort.CHILDREN,
    "you": Cohort.YOUNG,
    "young": Cohort.YOUNG,
    "young adults": Cohort.YOUNG,
    "young_adults": Cohort.YOUNG,
    "eld": Cohort.ELDERLY,
    "elderly": Cohort.ELDERLY,
    "older": Cohort.ELDERLY,
    "older adults": Cohort.ELDERLY,
    "older_adults": Cohort.ELDERLY,
}


class Category(str, Enum):
    TIME = "Time"
    LOCATION = "Location"
    INITIATING_EVENT = "IST as initiating event"
    GOAL = "Goal"
    ATTEMPT = "Attempt"
    OUTCOME = "Outcome"
    REACTION = "IST as reaction"


_LABELS = (
    "T", "L",
    "I1", "G1", "A1", "O1", "R1",
    "I2", "G2", "A2", "O2", "R2",
    "I3", "G3", "A3", "O3", "R3",
)

_EPISODE_CYCLE = (
    Category.INITIATING_EVENT,
    Category.GOAL,
    Category.ATTEMPT,
    Category.OUTCOME,
    Category.REACTION,
)


class ElementId(str, Enum):
    A0 = "A0"
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"
    A5 = "A5"
    A6 = "A6"
    A7 = "A7"
    A8 = "A8"
    A9 = "A9"
    A10 = "A10"
    A11 = "A11"
    A12 = "A12"
    A13 = "A13"
    A14 = "A14"
    A15 = "A15"
    A16 = "A16"

    @property
    def number(self) -> int:
        return int(self.value[1:])

    @property
    def label(self) -> str:
        return _LABELS[self.number]

    @property
    def episode(self) -> int | None:
        """Episode 1-3, or None for the setting elements T and L."""
        n = self.number
        if n < 2:
            return None
        return (n - 2) // 5 + 1

    @property
    def category(self) -> Category:
        n = self.number
        if n == 0:
            return Category.TIME
        if n == 1:
            return Category.LOCATION
        return _EPISODE_CYCLE[(n - 2) % 5]


ELEMENTS: tuple[ElementId, ...] = tuple(ElementId)
LABEL_TO_ELEMENT: dict[str, ElementId] = {e.label: e for e in ELEMENTS}

Positions = dict[ElementId, frozenset[int]]


def make_positions(partial: Mapping[ElementId, Iterable[int]] | None = None) -> Positions:
    """Total mapping over all 17 elements; unmentioned elements get the empty set."""
    partial = partial or {}
    return {e: frozenset(partial.get(e, ())) for e in ELEMENTS}


@dataclass
class AnnotationSet:
    """One rater's position dictionary for one narrative."""

    narrative_id: str
    rater_id: str
    story: Story | None
    positions: Positions = field(default_factory=make_positions)

    def __post_init__(self) -> None:
        self.positions = make_positions(self.positions)

    def present(self, element: ElementId) -> bool:
        return bool(self.positions[element])

    def lines_for(self, element: ElementId) -> tuple[int, ...]:
        return tuple(sorted(self.positions[element]))


@dataclass(frozen=True)
class PresenceVector:
    narrative_id: str
    rater_id: str
    present: Mapping[ElementId, bool]

    @property
    def score(self) -> int:
        return sum(1 for e in ELEMENTS if self.present[e])


def to_presence(a: AnnotationSet) -> PresenceVector:
    """Collapse position evidence to per-element presence booleans."""
    return PresenceVector(
        narrative_id=a.narrative_id,
        rater_id=a.rater_id,
        present={e: bool(a.positions[e]) for e in ELEMENTS},
    )


def story_structure_score(p: PresenceVector) -> int:
    """Count of present elements, 0..17."""
    return p.score


def score_annotation(a: AnnotationSet) -> int:
    return to_presence(a).score


# ---------------------------------------------------------------------------
# Annotation file format (the bit-exact JSON contract)
# ---------------------------------------------------------------------------

def positions_to_obj(positions: Positions) -> dict[str, list[int] | None]:
    """JSON shape of a position mapping: all 17 keys, null for absence."""
    return {
        e.value: (sorted(positions[e]) if positions[e] else None) for e in ELEMENTS
    }


def positions_from_obj(raw_positions: object, *, source: str = "<payload>") -> Positions:
    """Validate and convert the JSON shape back into a position mapping."""
    if not isinstance(raw_positions, dict):
        raise AnnotationFormatError(f"{source}: positions must be an object")
    missing = [e.value for e in ELEMENTS if e.value not in raw_positions]
    if missing:
        raise AnnotationFormatError(f"{source}: positions missing {', '.join(missing)}")
    unknown = sorted(set(raw_positions) - {e.value for e in ELEMENTS})
    if unknown:
        raise AnnotationFormatError(f"{source}: unknown position keys {', '.join(unknown)}")
    positions: dict[ElementId, frozenset[int]] = {}
    for e in ELEMENTS:
        value = raw_positions[e.value]
        if value is None:
            positions[e] = frozenset()
        elif isinstance(value, list) and all(
            isinstance(i, int) and not isinstance(i, bool) for i in value
        ):
            positions[e] = frozenset(value)
        else:
            raise AnnotationFormatError(
                f"{source}: positions[{e.value}] must be null or a list of integers"
            )
    return positions


def annotation_to_json(a: AnnotationSet) -> str:
    """Serialize with all 17 keys in A0..A16 order; absence is always null."""
    positions = positions_to_obj(a.positions)
    doc = {
        "narrative_id": a.narrative_id,
        "rater_id": a.rater_id,
        "story": a.story.value if a.story else None,
        "positions": positions,
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def annotation_from_json(text: str, *, source: str = "<string>") -> AnnotationSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationFormatError(f"{source}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise AnnotationFormatError(f"{source}: top level must be an object")
    for key in ("narrative_id", "rater_id", "story", "positions"):
        if key not in doc:
            raise AnnotationFormatError(f"{source}: missing key {key!r}")
    positions = positions_from_obj(doc["positions"], source=source)
    story = Story(doc["story"]) if doc["story"] else None
    return AnnotationSet(
        narrative_id=str(doc["narrative_id"]),
        rater_id=str(doc["rater_id"]),
        story=story,
        positions=positions,
    )


def save_annotation(a: AnnotationSet, path: Path) -> None:
    path.write_text(annotation_to_json(a), encoding="utf-8")


def load_annotation(path: Path) -> AnnotationSet:
    return annotation_from_json(path.read_text(encoding="utf-8"), source=str(path))


def load_annotation_dir(directory: Path) -> dict[str, AnnotationSet]:
    """All annotation files in a rater directory, keyed by narrative_id.

    run_manifest.json and *.review.json sidecars are not annotations.
    """
    out: dict[str, AnnotationSet] = {}
    for path in sorted(Path(directory).glob("*.json")):
        if path.name == "run_manifest.json" or path.name.endswith(".review.json"):
            continue
        a = load_annotation(path)
        out[a.narrative_id] = a
    return out


# ---------------------------------------------------------------------------
# Element tables (story-specific descriptions for prompting/review display)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ElementRow:
    element: ElementId
    label: str
    name: str
    episode: int | None
    category: Category
    description: str
    exemplars: tuple[str, ...]


_ELEMENT_NAMES = (
    "Time",
    "Location",
    "IST as initiating event 1",
    "Goal 1",
    "Attempt 1",
    "Outcome 1",
    "IST as reaction 1",
    "IST as initiating event 2",
    "Goal 2",
    "Attempt 2",
    "Outcome 2",
    "IST as reaction 2",
    "IST as initiating event 3",
    "Goal 3",
    "Attempt 3",
    "Outcome 3",
    "IST as reaction 3",
)

# Examples of correct responses, Dog story.
_DOG_RESPONSES = (
    "Time reference, e.g. once upon a time/ one day/ long ago...",
    "Place reference, e.g. in a forest/ in a park/ in a meadow/ in a field/ "
    "by a tree/ near a tree/ by the road",
    "Dog was playful/ curious; Dog saw a mouse",
    "Dog wanted to catch/ get/ chase the mouse/ play with the mouse",
    "Dog jumped forward/ up; Dog chased/ started to chase",
    "Dog bumped his head/ bumped into the tree/ did not get the mouse/ "
    "was not quick enough; Mouse escaped/ ran behind the tree/ mouse was too quick",
    "Dog was disappointed/ angry/ hurt; Mouse was happy/ glad/ relieved",
    "Boy was sad/ unhappy/ worried about his balloon; Boy saw the balloon in the tree",
    "Boy decided/ wanted to get his balloon back",
    "Boy was/is pulling/ tried to pull the balloon down from the tree; "
    "Boy jumped after the balloon/ reached for (the balloon)/ was/is climbing (the tree)",
    "Boy got his balloon back/ again; Balloon was saved",
    "Boy was glad/ happy/ satisfied/ pleased/ relieved (to get/have his balloon back)",
    "Dog saw/ noticed the sausages (in the bag); Dog was hungry/ curious/ "
    "keen on the sausages",
    "Dog wanted/ decided to get/ grab/ eat/ have/ steal the sausages",
    "Dog was/is grabbing/pulling/ taking/ stealing the sausages; "
    "Dog grabs/pulls/takes the sausages (out of the bag)/ reached for the sausages",
    "Dog ate/ got the sausages",
    "Dog was satisfied/ glad/ pleased/ happy/ not hungry (anymore)",
)

# Examples of correct responses, Cat story.
_CAT_RESPONSES = (
    "once upon a time / one day / long ago",
    "in the forest / by the lake / at the river bank / by the water / "
    "by the shore / in a meadow / in the bushes",
    "cat was playful / curious; cat saw a butterfly",
    "cat wanted to catch / get / chase the butterfly / play with the butterfly; "
    "cat was preparing to catch the butterfly",
    "cat jumped forward / up; cat chased / started to chase; "
    "cat tried to + VERB (catch, get, grab, take)",
    "cat fell into the bush / did not get the butterfly / was not quick enough; "
    "butterfly escaped / flew away / was too quick",
    "cat was disappointed / angry / hurt; butterfly was happy / glad",
    "boy was sad / unhappy / worried about his ball; boy saw the ball in the water",
    "boy decided / wanted to get his ball back",
    "boy was/is pulling / tried to pull the ball out of the water",
    "boy got his ball back / again; the ball was saved",
    "boy was glad / happy / pleased / satisfied / relieved (to get/have his ball back)",
    "cat was hungry / curious / keen on the fish; cat noticed / saw the fish",
    "cat wanted / decided to get / grab / eat / have / steal the fish",
    "cat was/is grabbing / pulling / taking / stealing the fish; "
    "cat grabs/pulls/takes the fish (out of the bucket) / reached for the fish",
    "cat ate / got the fish",
    "cat was satisfied / glad / pleased / happy / not hungry (any more)",
)


def element_table(story: Story) -> list[ElementRow]:
    """The 17 elements with story-specific response examples."""
    responses = _DOG_RESPONSES if story is Story.DOG else _CAT_RESPONSES
    rows = []
    for e, name, desc in zip(ELEMENTS, _ELEMENT_NAMES, responses):
        rows.append(
            ElementRow(
                element=e,
                label=e.label,
                name=name,
                episode=e.episode,
                category=e.category,
                description=desc,
                exemplars=tuple(part.strip() for part in desc.split(";")),
            )
        )
    return rows
