"""Inter-rater agreement: Cohen's kappa over presence/absence judgments.

Each judgment item is one (narrative, element) cell; two raters either both
marked it present (a), only the first did (b), only the second did (c), or
neither did (d).  All probability arithmetic is exact (Fraction); floats
appear only at the reporting boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import EmptyItems, InsufficientRaters
from .rubric import ELEMENTS, AnnotationSet, Category, Cohort, ElementId

_BANDS = (
    (Decimal("0.40"), "fair"),
    (Decimal("0.60"), "moderate"),
    (Decimal("0.80"), "substantial"),
)


def _band_from_decimal(rounded: Decimal) -> str:
    for upper, name in _BANDS:
        if rounded <= upper:
            return name
    return "almost perfect"


def band_for(kappa: float) -> str:
    """Interpretation band for a kappa value, rounded to 2 decimals half-up."""
    rounded = Decimal(repr(kappa)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return _band_from_decimal(rounded)


def _band_exact(kappa: Fraction) -> str:
    with localcontext() as ctx:
        ctx.prec = 50
        rounded = (Decimal(kappa.numerator) / Decimal(kappa.denominator)).quantize(
            Decimal("0.01"), rounding=ROUND_HALF_UP
        )
    return _band_from_decimal(rounded)


@dataclass(frozen=True)
class KappaResult:
    """Kappa over one 2x2 contingency table.

    kappa/band are None exactly when chance agreement is 1 (both raters
    degenerate on the same side), where the statistic is undefined.
    """

    n: int
    a: int
    b: int
    c: int
    d: int
    p_o: float
    p_e: float
    kappa: float | None
    band: str | None
    kappa_exact: Fraction | None = None

    def __post_init__(self) -> None:
        assert self.n == self.a + self.b + self.c + self.d
        assert 0.0 <= self.p_o <= 1.0 and 0.0 <= self.p_e <= 1.0
        assert (self.kappa is None) == (self.band is None)

    @property
    def undefined(self) -> bool:
        return self.kappa is None

    def display(self) -> str:
        if self.kappa is None:
            return "UNDEFINED"
        return format_kappa(self.kappa_exact if self.kappa_exact is not None else self.kappa)


def cohen_kappa_counts(a: int, b: int, c: int, d: int) -> KappaResult:
    """Cohen's kappa from the four cells of a 2x2 agreement table."""
    if min(a, b, c, d) < 0:
        raise ValueError("cell counts must be non-negative")
    n = a + b + c + d
    if n == 0:
        raise EmptyItems("no judgment items; kappa needs at least one")
    po = Fraction(a + d, n)
    pe = (
        Fraction((a + b) * (a + c), n * n)
        + Fraction((c + d) * (b + d), n * n)
    )
    if pe == 1:
        return KappaResult(n, a, b, c, d, float(po), 1.0, None, None)
    kappa = (po - pe) / (1 - pe)
    return KappaResult(
        n, a, b, c, d, float(po), float(pe), float(kappa), _band_exact(kappa), kappa
    )


def format_kappa(value: float | Fraction | Decimal, places: int = 3) -> str:
    """Fixed-point display, rounded half-up."""
    if isinstance(value, Fraction):
        with localcontext() as ctx:
            ctx.prec = 50
            dec = Decimal(value.numerator) / Decimal(value.denominator)
    elif isinstance(value, Decimal):
        dec = value
    else:
        dec = Decimal(repr(value))
    q = Decimal(1).scaleb(-places)
    return str(dec.quantize(q, rounding=ROUND_HALF_UP))


def mean_display(values: Sequence[float | Fraction], places: int = 3) -> str:
    """Arithmetic mean displayed at fixed precision, computed in decimal."""
    if not values:
        raise EmptyItems("mean of no values")
    with localcontext() as ctx:
        ctx.prec = 50
        total = Decimal(0)
        for v in values:
            if isinstance(v, Fraction):
                total += Decimal(v.numerator) / Decimal(v.denominator)
            else:
                total += Decimal(repr(v))
        mean = total / len(values)
    return format_kappa(mean, places)


# ---------------------------------------------------------------------------
# From annotation sets to judgment items
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JudgmentItem:
    narrative_id: str
    element: ElementId
    cohort: Cohort | None = None


@dataclass
class ItemJudgments:
    """Aligned presence judgments of two raters over the same items."""

    rater_a: str
    rater_b: str
    items: list[JudgmentItem]
    a_present: list[bool]
    b_present: list[bool]

    def __post_init__(self) -> None:
        if not (len(self.items) == len(self.a_present) == len(self.b_present)):
            raise ValueError("items and judgments must be aligned")
        keys = {(i.narrative_id, i.element) for i in self.items}
        if len(keys) != len(self.items):
            raise ValueError("duplicate (narrative, element) item")

    def __len__(self) -> int:
        return len(self.items)


def build_judgments(
    sets_a: Mapping[str, AnnotationSet],
    sets_b: Mapping[str, AnnotationSet],
    *,
    cohorts: Mapping[str, Cohort] | None = None,
    rater_a: str = "",
    rater_b: str = "",
) -> tuple[ItemJudgments, list[str]]:
    """Pair two raters' annotation sets narrative by narrative.

    Narratives present for only one rater are excluded and reported, not
    silently dropped.
    """
    cohorts = cohorts or {}
    shared = sorted(set(sets_a) & set(sets_b))
    excluded = sorted(set(sets_a) ^ set(sets_b))
    items: list[JudgmentItem] = []
    a_present: list[bool] = []
    b_present: list[bool] = []
    for nid in shared:
        sa, sb = sets_a[nid], sets_b[nid]
        for e in ELEMENTS:
            items.append(JudgmentItem(nid, e, cohorts.get(nid)))
            a_present.append(sa.present(e))
            b_present.append(sb.present(e))
    return (
        ItemJudgments(
            rater_a=rater_a or (next(iter(sets_a.values())).rater_id if sets_a else ""),
            rater_b=rater_b or (next(iter(sets_b.values())).rater_id if sets_b else ""),
            items=items,
            a_present=a_present,
            b_present=b_present,
        ),
        excluded,
    )


def counts_for(
    j: ItemJudgments, keep: Iterable[bool] | None = None
) -> tuple[int, int, int, int]:
    a = b = c = d = 0
    mask = list(keep) if keep is not None else [True] * len(j)
    for use, pa, pb in zip(mask, j.a_present, j.b_present):
        if not use:
            continue
        if pa and pb:
            a += 1
        elif pa:
            b += 1
        elif pb:
            c += 1
        else:
            d += 1
    return a, b, c, d


def kappa_overall(j: ItemJudgments) -> KappaResult:
    return cohen_kappa_counts(*counts_for(j))


def kappa_by_category(j: ItemJudgments) -> dict[Category, KappaResult]:
    out: dict[Category, KappaResult] = {}
    for category in Category:
        mask = [item.element.category is category for item in j.items]
        if any(mask):
            out[category] = cohen_kappa_counts(*counts_for(j, mask))
    return out


def kappa_by_cohort(j: ItemJudgments) -> dict[Cohort, KappaResult]:
    out: dict[Cohort, KappaResult] = {}
    for cohort in Cohort:
        mask = [item.cohort is cohort for item in j.items]
        if any(mask):
            out[cohort] = cohen_kappa_counts(*counts_for(j, mask))
    return out


@dataclass(frozen=True)
class MeanKappa:
    """Model agreement with two human raters: both kappas and their mean."""

    vs_h1: KappaResult
    vs_h2: KappaResult
    mean: float | None

    def display(self) -> str:
        if self.mean is None:
            return "UNDEFINED"
        k1 = self.vs_h1.kappa_exact
        k2 = self.vs_h2.kappa_exact
        if k1 is not None and k2 is not None:
            return mean_display([k1, k2])
        return mean_display([self.vs_h1.kappa, self.vs_h2.kappa])


def human_llm_kappa(
    model_sets: Mapping[str, AnnotationSet],
    h1_sets: Mapping[str, AnnotationSet],
    h2_sets: Mapping[str, AnnotationSet],
    *,
    cohorts: Mapping[str, Cohort] | None = None,
) -> MeanKappa:
    """Model-human agreement: mean of kappa(model, h1) and kappa(model, h2)."""
    j1, _ = build_judgments(model_sets, h1_sets, cohorts=cohorts)
    j2, _ = build_judgments(model_sets, h2_sets, cohorts=cohorts)
    k1 = kappa_overall(j1)
    k2 = kappa_overall(j2)
    if k1.kappa is None or k2.kappa is None:
        return MeanKappa(k1, k2, None)
    return MeanKappa(k1, k2, (k1.kappa + k2.kappa) / 2)


def require_raters(raters: Sequence[str], minimum: int = 2) -> None:
    if len(raters) < minimum:
        raise InsufficientRaters(
            f"need at least {minimum} raters, got {len(raters)}"
        )
