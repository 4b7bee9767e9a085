import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for mock_llm

from main_annotate.rubric import ELEMENTS, AnnotationSet, ElementId, Story, make_positions

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def corpus_dir() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture
def raters_dir() -> Path:
    return FIXTURES / "raters"


def make_annotation(
    narrative_id: str,
    rater_id: str,
    positions: dict[str, list[int]],
    story: Story | None = Story.DOG,
) -> AnnotationSet:
    """Build an AnnotationSet from {code: [lines]} with unmentioned codes empty."""
    table = {ElementId(code): lines for code, lines in positions.items()}
    return AnnotationSet(narrative_id, rater_id, story, make_positions(table))


def presence_sets(rater: str, presence_by_nid: dict[str, set]) -> dict[str, AnnotationSet]:
    """Annotation sets with the given element codes marked present (at line 1)."""
    return {
        nid: make_annotation(nid, rater, {code: [1] for code in codes})
        for nid, codes in presence_by_nid.items()
    }


def triple_rater_sets():
    """40-narrative corpus where kappa(model,h1)=0.9 and kappa(model,h2)=0.5 exactly.

    The model marks every element present on the first 20 narratives and none
    after; each human deviates on a controlled number of whole narratives, so
    all four contingency cells are multiples of 17 and the kappas are exact.
    """
    all_codes = [e.value for e in ELEMENTS]
    nids = [f"n{i:02d}" for i in range(40)]
    model = {nid: set(all_codes) if i < 20 else set() for i, nid in enumerate(nids)}
    h1 = {
        nid: set(all_codes) if (i <= 18 or i == 20) else set()
        for i, nid in enumerate(nids)
    }
    h2 = {
        nid: set(all_codes) if (i < 15 or 20 <= i < 25) else set()
        for i, nid in enumerate(nids)
    }
    return (
        presence_sets("model", model),
        presence_sets("h1", h1),
        presence_sets("h2", h2),
    )


# the Appendix-style worked example: 8 elements present
EXAMPLE_DICT = (
    "{'A0': [1], 'A1': Null, 'A2': Null, 'A3': Null, 'A4': [3], 'A5': [6, 7], "
    "'A6': Null, 'A7': [8, 9], 'A8': Null, 'A9': Null, 'A10': [12], 'A11': Null, "
    "'A12': [11], 'A13': [11], 'A14': Null, 'A15': [13], 'A16': Null}"
)
