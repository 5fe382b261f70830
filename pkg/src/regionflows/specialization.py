"""Knowledge outflow/inflow specialization indexes over region-by-SC tensors.

The revealed-comparative-advantage ratio compares a region's share of gains
in one subject category against the reference group's share; the index maps
that ratio through 100*tanh(ln R), bounding it in [-100, +100] with 0 at
parity. Computed on the "generated" orientation it measures outflow
specialization, on the "earned" orientation inflow specialization; the
formula itself is identical.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus
from .flows import Gain

GENERATED = "generated"
EARNED = "earned"

EXCLUDE_FOCAL = "exclude_focal"
INCLUDE_FOCAL = "include_focal"

SCOPE_ALL = "all"
SCOPE_EXTRA_ONLY = "extra_only"


@dataclass(frozen=True)
class GainTensor:
    """Region-by-SC gain counts, oriented as generated or earned."""

    values: np.ndarray
    regions: tuple[str, ...]
    subject_categories: tuple[str, ...]
    orientation: str

    def __post_init__(self):
        self.values.setflags(write=False)
        if (self.values < 0).any():
            raise ValueError("gain tensor entries must be nonnegative")

    def region_index(self, region: str) -> int:
        try:
            return self.regions.index(region)
        except ValueError:
            raise KeyError(f"unknown region {region!r}") from None

    def sc_index(self, sc: str) -> int:
        try:
            return self.subject_categories.index(sc)
        except ValueError:
            raise KeyError(f"unknown subject category {sc!r}") from None


def build_tensors(
    gains: Iterable[Gain],
    corpus: Corpus,
    scope: str = SCOPE_ALL,
) -> tuple[GainTensor, GainTensor]:
    """Accumulate gains into (generated, earned) tensors.

    Subject categories come from the cited publication (full counting over
    its codes). The default scope counts every gain; `extra_only` drops
    intra-regional ones on both orientations.
    """
    if scope not in (SCOPE_ALL, SCOPE_EXTRA_ONLY):
        raise ValueError(f"unknown scope {scope!r}")
    regions = corpus.gazetteer.region_set
    scs = corpus.sc_map.sc_codes
    region_index = {r: i for i, r in enumerate(regions)}
    sc_index = {s: j for j, s in enumerate(scs)}
    generated = np.zeros((len(regions), len(scs)), dtype=np.float64)
    earned = np.zeros_like(generated)
    integral = True
    for gain in gains:
        if scope == SCOPE_EXTRA_ONLY and gain.intra:
            continue
        cited = corpus.by_id.get(gain.cited_id)
        if cited is None:
            continue
        integral = integral and gain.weight == 1
        for sc in set(cited.sc_codes):
            generated[region_index[gain.producing_region], sc_index[sc]] += gain.weight
            earned[region_index[gain.citing_region], sc_index[sc]] += gain.weight
    if integral:
        generated = generated.astype(np.int64)
        earned = earned.astype(np.int64)
    return (
        GainTensor(generated, regions, scs, GENERATED),
        GainTensor(earned, regions, scs, EARNED),
    )


def balassa_ratio(
    tensor: GainTensor, region: str, sc: str, mode: str = EXCLUDE_FOCAL
) -> float | None:
    """Revealed-comparative-advantage ratio for one (region, SC) cell.

    The default mode excludes the focal cell from both sums: the region's
    share is its gains in the category over its gains in all *other*
    categories, referenced against the same quotient over all *other*
    regions. `include_focal` uses the classic full sums. Returns math.inf
    when the region's share is positive but the reference share is zero, and
    None (undefined) for 0/0 situations that carry no information.
    """
    if mode not in (EXCLUDE_FOCAL, INCLUDE_FOCAL):
        raise ValueError(f"unknown mode {mode!r}")
    values = tensor.values.astype(np.float64)
    k = tensor.region_index(region)
    j = tensor.sc_index(sc)
    others = np.arange(values.shape[0]) != k
    if mode == EXCLUDE_FOCAL:
        other_scs = np.arange(values.shape[1]) != j
        focal = _ratio(values[k, j], values[k, other_scs].sum())
        reference = _ratio(values[others, j].sum(), values[np.ix_(others, other_scs)].sum())
    else:
        focal = _ratio(values[k, j], values[k, :].sum())
        reference = _ratio(values[others, j].sum() + values[k, j], values.sum())
    if focal is None or reference is None:
        return None
    if reference == 0.0:
        return None if focal == 0.0 else math.inf
    if math.isinf(reference):
        return None if math.isinf(focal) else 0.0
    if math.isinf(focal):
        return math.inf
    return focal / reference


def _ratio(numerator: float, denominator: float) -> float | None:
    if denominator > 0:
        return numerator / denominator
    if numerator > 0:
        return math.inf
    return None


def specialization_index(
    tensor: GainTensor, region: str, sc: str, mode: str = EXCLUDE_FOCAL
) -> float | None:
    """100*tanh(ln R) of the Balassa ratio, via the closed form.

    tanh(ln R) equals (R^2 - 1)/(R^2 + 1), which is exact at the R=0 and
    R=inf limits (-100 and +100) and stable in between. Undefined ratios
    propagate as None.
    """
    ratio = balassa_ratio(tensor, region, sc, mode)
    return None if ratio is None else index_from_ratio(ratio)


def index_from_ratio(ratio: float) -> float:
    if ratio < 0:
        raise ValueError("Balassa ratio cannot be negative")
    if math.isinf(ratio):
        return 100.0
    square = ratio * ratio
    if math.isinf(square):
        return 100.0
    return 100.0 * (square - 1.0) / (square + 1.0)


@dataclass(frozen=True)
class IndexValue:
    region: str
    sc: str
    value: float | None


def index_table(tensor: GainTensor, mode: str = EXCLUDE_FOCAL) -> list[IndexValue]:
    """The full region-by-SC table of index values (None where undefined)."""
    return [
        IndexValue(region, sc, specialization_index(tensor, region, sc, mode))
        for region in tensor.regions
        for sc in tensor.subject_categories
    ]


def top_specializations(
    tensor: GainTensor, region: str, n: int, mode: str = EXCLUDE_FOCAL
) -> list[tuple[str, float]]:
    """The n highest-index subject categories for a region, descending.

    Undefined cells are skipped; ties break alphabetically by category.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    scored = []
    for sc in tensor.subject_categories:
        value = specialization_index(tensor, region, sc, mode)
        if value is not None:
            scored.append((sc, value))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:n]


@dataclass(frozen=True)
class Extreme:
    region: str
    value: float
    tied: bool


def field_extremes(
    tensor: GainTensor, sc: str, mode: str = EXCLUDE_FOCAL
) -> tuple[Extreme | None, Extreme | None]:
    """(most specialized, least specialized) regions in one subject category.

    Ties break lexicographically and are flagged; a category where every
    region is undefined yields (None, None).
    """
    tensor.sc_index(sc)
    defined = []
    for region in tensor.regions:
        value = specialization_index(tensor, region, sc, mode)
        if value is not None:
            defined.append((region, value))
    if not defined:
        return None, None
    top_value = max(v for _, v in defined)
    low_value = min(v for _, v in defined)
    top = [r for r, v in defined if v == top_value]
    low = [r for r, v in defined if v == low_value]
    return (
        Extreme(region=min(top), value=top_value, tied=len(top) > 1),
        Extreme(region=min(low), value=low_value, tied=len(low) > 1),
    )


def write_index_table(
    rows: Iterable[IndexValue], orientation: str, mode: str, path: str | Path
) -> None:
    """Export `region,sc,orientation,mode,value` rows; undefined cells as NA."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["region", "sc", "orientation", "mode", "value"])
        for row in rows:
            value = "NA" if row.value is None else f"{row.value:.4f}"
            writer.writerow([row.region, row.sc, orientation, mode, value])
