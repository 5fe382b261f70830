"""Citation benefits and gains, and their aggregation into flow matrices.

A citation of a made-in publication by a publication with at least one
resolvable domestic address is a *benefit*. The citing publication's address
list spans some set of regions; the benefit is appropriated by every one of
them, so one benefit fans out into that many *gains*, each labelled with the
producing region (a made-in region of the cited side) and the citing region.
A gain is intra-regional when the two coincide. Dual-produced publications
emit a full gain set for each of their two regions.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .attribution import MadeIn
from .corpus import FOREIGN, UNRESOLVED, Corpus, Gazetteer, Publication, resolve_region

DUAL_GAIN_FULL = "full"
DUAL_GAIN_HALF = "half"


@dataclass(frozen=True, order=True)
class Gain:
    """One (cited, citing, producing region, citing region) flow unit.

    `weight` is 1 except under the half-weighting sensitivity mode, where
    gains from dual-produced publications carry 1/2 each.
    """

    cited_id: str
    citing_id: str
    producing_region: str
    citing_region: str
    intra: bool
    weight: int | Fraction = 1


@dataclass(frozen=True)
class FlowMatrix:
    """Square region-by-region gain counts: rows produce, columns cite."""

    values: np.ndarray
    regions: tuple[str, ...]
    sc: str | None = None

    def __post_init__(self):
        self.values.setflags(write=False)

    def index(self, region: str) -> int:
        return self.regions.index(region)

    @property
    def total(self):
        return self.values.sum()


def citing_regions(
    pub: Publication, gazetteer: Gazetteer, domestic_country: str = "IT"
) -> frozenset[str]:
    """Deduplicated set of regions over all of a citing publication's addresses.

    No made-in test applies on the citing side: plain address presence
    counts, and foreign or unresolvable addresses contribute nothing. An
    empty set means the publication can appropriate no domestic gain.
    """
    found = set()
    for address in pub.addresses:
        region = resolve_region(address, gazetteer, domestic_country)
        if region not in (FOREIGN, UNRESOLVED):
            found.add(region)
    return frozenset(found)


def compute_gains(
    corpus: Corpus,
    made_in: Mapping[str, MadeIn],
    dual_gain_weight: str = DUAL_GAIN_FULL,
    workers: int = 1,
) -> list[Gain]:
    """Expand every citation edge into gains.

    An edge contributes iff its cited side is made-in (present in `made_in`
    as single or dual) and its citing side resolves to at least one domestic
    region. Self-citing publications are deliberately not filtered out. The
    result is sorted into canonical order, so it is identical regardless of
    `workers`; gain computation distributes over any partition of the edges.
    """
    if dual_gain_weight not in (DUAL_GAIN_FULL, DUAL_GAIN_HALF):
        raise ValueError(f"unknown dual_gain_weight {dual_gain_weight!r}")
    regions_of: dict[str, frozenset[str]] = {}
    for pub in corpus.publications:
        regions_of[pub.id] = citing_regions(pub, corpus.gazetteer, corpus.domestic_country)

    def expand(edges: Sequence) -> list[Gain]:
        out = []
        for edge in edges:
            entry = made_in.get(edge.cited_id)
            if entry is None or not entry.is_made_in:
                continue
            citing = regions_of.get(edge.citing_id)
            if not citing:
                continue
            weight = 1
            if dual_gain_weight == DUAL_GAIN_HALF and len(entry.regions) == 2:
                weight = Fraction(1, 2)
            for producing in entry.regions:
                for citing_region in sorted(citing):
                    out.append(
                        Gain(
                            cited_id=edge.cited_id,
                            citing_id=edge.citing_id,
                            producing_region=producing,
                            citing_region=citing_region,
                            intra=producing == citing_region,
                            weight=weight,
                        )
                    )
        return out

    if workers <= 1:
        gains = expand(corpus.edges)
    else:
        chunks = [corpus.edges[i::workers] for i in range(workers)]
        gains = []
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(expand, chunks):
                gains.extend(part)
    gains.sort()
    return gains


def benefits(gains: Iterable[Gain]) -> list[tuple[str, str]]:
    """Distinct (cited_id, citing_id) pairs underlying the gains, sorted."""
    return sorted({(g.cited_id, g.citing_id) for g in gains})


def flow_matrix(
    gains: Iterable[Gain],
    region_set: Sequence[str],
    sc: str | None = None,
    corpus: Corpus | None = None,
) -> FlowMatrix:
    """Aggregate gains into a region-by-region matrix.

    With `sc`, only gains whose cited publication carries that subject
    category are counted (full counting: a publication in several categories
    contributes to each of their matrices); this needs `corpus` to look up
    the cited side's codes, and the code must exist in the corpus subject map.
    """
    if sc is not None:
        if corpus is None:
            raise ValueError("sc filtering requires the corpus")
        if sc not in corpus.sc_map:
            raise ValueError(f"unknown subject category {sc!r}")
    index = {region: i for i, region in enumerate(region_set)}
    values = np.zeros((len(index), len(index)), dtype=np.float64)
    integral = True
    for gain in gains:
        if sc is not None:
            cited = corpus.by_id.get(gain.cited_id)
            if cited is None or sc not in cited.sc_codes:
                continue
        values[index[gain.producing_region], index[gain.citing_region]] += gain.weight
        integral = integral and gain.weight == 1
    if integral:
        values = values.astype(np.int64)
    return FlowMatrix(values=values, regions=tuple(region_set), sc=sc)


def matrices_by_sc(
    gains: Iterable[Gain], corpus: Corpus, region_set: Sequence[str] | None = None
) -> dict[str, FlowMatrix]:
    """One flow matrix per subject category in the corpus map (full counting)."""
    regions = tuple(region_set) if region_set is not None else corpus.gazetteer.region_set
    index = {region: i for i, region in enumerate(regions)}
    per_sc = {
        sc: np.zeros((len(regions), len(regions)), dtype=np.float64)
        for sc in corpus.sc_map.sc_codes
    }
    integral = True
    for gain in gains:
        cited = corpus.by_id.get(gain.cited_id)
        if cited is None:
            continue
        integral = integral and gain.weight == 1
        for sc in set(cited.sc_codes):
            per_sc[sc][index[gain.producing_region], index[gain.citing_region]] += gain.weight
    return {
        sc: FlowMatrix(
            values=values.astype(np.int64) if integral else values, regions=regions, sc=sc
        )
        for sc, values in per_sc.items()
    }


def row_percentages(matrix: FlowMatrix) -> np.ndarray:
    """Rescale each row to sum to 100; all-zero rows stay all-zero."""
    values = matrix.values.astype(np.float64)
    totals = values.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(totals > 0, values / totals * 100.0, 0.0)
    return out


@dataclass(frozen=True)
class RegionSummaryRow:
    """Per-region production and flow statistics.

    Ratios are exact rationals (None where the denominator is zero); dual
    publications count fully in both of their regions' rows.
    """

    region: str
    publications: int
    made_in: int
    cited: int
    benefits: int
    benefits_per_cited: Fraction | None
    gains: int | Fraction
    intra_gains: int | Fraction
    intra_share: Fraction | None
    gains_per_benefit: Fraction | None


def region_summary(
    corpus: Corpus, made_in: Mapping[str, MadeIn], gains: Sequence[Gain]
) -> list[RegionSummaryRow]:
    """Tabulate publications, made-in counts, benefits and gains per region.

    The publication universe is the key set of `made_in`; the publications
    column counts any-address presence in the region regardless of
    classification. A made-in publication counts as cited when at least one
    loaded citation edge points at it.
    """
    regions = corpus.gazetteer.region_set
    pubs_with_address = {r: 0 for r in regions}
    made_in_pubs = {r: 0 for r in regions}
    cited_pubs = {r: 0 for r in regions}
    benefit_count = {r: 0 for r in regions}
    gain_count: dict[str, int | Fraction] = {r: 0 for r in regions}
    intra_count: dict[str, int | Fraction] = {r: 0 for r in regions}

    in_degree: dict[str, int] = {}
    for edge in corpus.edges:
        in_degree[edge.cited_id] = in_degree.get(edge.cited_id, 0) + 1

    for pub_id in made_in:
        pub = corpus.by_id[pub_id]
        for region in citing_regions(pub, corpus.gazetteer, corpus.domestic_country):
            pubs_with_address[region] += 1
        entry = made_in[pub_id]
        for region in entry.regions:
            made_in_pubs[region] += 1
            if in_degree.get(pub_id, 0) > 0:
                cited_pubs[region] += 1

    for cited_id, citing_id in benefits(gains):
        for region in made_in[cited_id].regions:
            benefit_count[region] += 1
    for gain in gains:
        gain_count[gain.producing_region] += gain.weight
        if gain.intra:
            intra_count[gain.producing_region] += gain.weight

    rows = []
    for region in regions:
        b, a = benefit_count[region], cited_pubs[region]
        c = gain_count[region]
        rows.append(
            RegionSummaryRow(
                region=region,
                publications=pubs_with_address[region],
                made_in=made_in_pubs[region],
                cited=a,
                benefits=b,
                benefits_per_cited=Fraction(b, a) if a else None,
                gains=c,
                intra_gains=intra_count[region],
                intra_share=Fraction(intra_count[region]) / c if c else None,
                gains_per_benefit=Fraction(c) / b if b else None,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Exports

def write_gains(gains: Iterable[Gain], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cited_id", "citing_id", "producing_region", "citing_region", "intra"])
        for g in gains:
            writer.writerow(
                [g.cited_id, g.citing_id, g.producing_region, g.citing_region, int(g.intra)]
            )


def write_matrix(matrix: FlowMatrix, path: str | Path, percent: bool = False) -> None:
    """Write counts (integers) or the row-percentage variant (one decimal)."""
    values = row_percentages(matrix) if percent else matrix.values
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["region", *matrix.regions])
        for i, region in enumerate(matrix.regions):
            if percent:
                writer.writerow([region, *(f"{v:.1f}" for v in values[i])])
            else:
                writer.writerow([region, *(_cell(v) for v in values[i])])


def _cell(value) -> str:
    if float(value) == int(value):
        return str(int(value))
    return str(float(value))


def write_region_summary(rows: Iterable[RegionSummaryRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "region",
                "publications",
                "made_in",
                "cited",
                "benefits",
                "benefits_per_cited",
                "gains",
                "intra_gains",
                "intra_share_pct",
                "gains_per_benefit",
            ]
        )
        for r in rows:
            writer.writerow(
                [
                    r.region,
                    r.publications,
                    r.made_in,
                    r.cited,
                    r.benefits,
                    "" if r.benefits_per_cited is None else f"{float(r.benefits_per_cited):.2f}",
                    _cell(r.gains),
                    _cell(r.intra_gains),
                    "" if r.intra_share is None else f"{float(r.intra_share) * 100:.1f}",
                    "" if r.gains_per_benefit is None else f"{float(r.gains_per_benefit):.2f}",
                ]
            )
