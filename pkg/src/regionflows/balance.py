"""Regional balance of knowledge flows, maximum-flow edges, rank correlation.

A region's outflow is the gains its made-in publications hand to *other*
regions (its matrix row total minus the diagonal); its inflow is what it
appropriates from other regions' publications (column total minus diagonal).
The balance is outflow minus inflow: positive means net exporter. On a single
gain universe every extra-regional gain is generated once and earned once, so
balances sum to zero over all regions.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import SubjectMap
from .flows import FlowMatrix

log = logging.getLogger(__name__)

SOLID = "solid"
DOTTED = "dotted"

OVERALL = "ALL"


@dataclass(frozen=True)
class BalanceEntry:
    """Outflow/inflow totals and their net balance for one region."""

    region: str
    outflow: int | float
    inflow: int | float
    sc: str | None = None

    @property
    def net(self) -> int | float:
        return self.outflow - self.inflow


def _count(value) -> int | float:
    number = float(value)
    return int(number) if number.is_integer() else number


def overall_balance(matrix: FlowMatrix) -> list[BalanceEntry]:
    """Per-region balances from a single flow matrix.

    Row and column sums come from the same gain universe, so the nets sum to
    zero. Published per-field accountings that re-count publications per
    subject category do not satisfy that identity; see `sc_summed_balance`
    for that convention.
    """
    values = matrix.values
    row = values.sum(axis=1)
    col = values.sum(axis=0)
    diag = values.diagonal()
    return [
        BalanceEntry(
            region=region, outflow=_count(row[i] - diag[i]), inflow=_count(col[i] - diag[i])
        )
        for i, region in enumerate(matrix.regions)
    ]


def balance_by_sc(
    sc_matrices: Mapping[str, FlowMatrix], region: str
) -> list[BalanceEntry]:
    """One region's balance in every subject category, sorted by category."""
    entries = []
    for sc in sorted(sc_matrices):
        matrix = sc_matrices[sc]
        i = matrix.index(region)
        values = matrix.values
        outflow = _count(values[i, :].sum() - values[i, i])
        inflow = _count(values[:, i].sum() - values[i, i])
        entries.append(BalanceEntry(region=region, outflow=outflow, inflow=inflow, sc=sc))
    return entries


def aggregate_by_area(
    entries: Iterable[BalanceEntry], sc_map: SubjectMap
) -> list[BalanceEntry]:
    """Sum subject-category entries into macro-area totals."""
    sums: dict[tuple[str, str], list[int]] = {}
    for entry in entries:
        if entry.sc is None:
            raise ValueError(f"entry for {entry.region!r} has no subject category")
        area = sc_map.areas_by_sc[entry.sc]
        acc = sums.setdefault((entry.region, area), [0, 0])
        acc[0] += entry.outflow
        acc[1] += entry.inflow
    return [
        BalanceEntry(region=region, outflow=o, inflow=i, sc=area)
        for (region, area), (o, i) in sorted(sums.items())
    ]


def sc_summed_balance(sc_matrices: Mapping[str, FlowMatrix]) -> list[BalanceEntry]:
    """Per-region balances summed over per-category matrices.

    Full counting makes multi-category publications contribute once per
    category, so these totals exceed the single-matrix ones and their nets
    need not sum to zero. Provided to replicate per-field accounting
    conventions; `overall_balance` is the self-consistent variant.
    """
    totals: dict[str, list[int]] = {}
    for sc in sorted(sc_matrices):
        for entry in overall_balance(sc_matrices[sc]):
            acc = totals.setdefault(entry.region, [0, 0])
            acc[0] += entry.outflow
            acc[1] += entry.inflow
    return [
        BalanceEntry(region=region, outflow=o, inflow=i, sc=None)
        for region, (o, i) in sorted(totals.items())
    ]


@dataclass(frozen=True)
class PairwiseEntry:
    """Bilateral flows in one subject category, seen from the first region."""

    sc: str
    forward: int | float  # gains produced by region_x and cited by region_y
    backward: int | float  # gains produced by region_y and cited by region_x

    @property
    def net(self) -> int | float:
        return self.forward - self.backward


def pairwise_balance(
    sc_matrices: Mapping[str, FlowMatrix], region_x: str, region_y: str
) -> list[PairwiseEntry]:
    """Per-category bilateral balances between two regions, ascending by net.

    Swapping the two regions negates every balance exactly.
    """
    if region_x == region_y:
        raise ValueError("pairwise balance needs two distinct regions")
    entries = []
    for sc in sorted(sc_matrices):
        matrix = sc_matrices[sc]
        ix, iy = matrix.index(region_x), matrix.index(region_y)
        entries.append(
            PairwiseEntry(
                sc=sc,
                forward=_count(matrix.values[ix, iy]),
                backward=_count(matrix.values[iy, ix]),
            )
        )
    entries.sort(key=lambda e: (e.net, e.sc))
    return entries


@dataclass(frozen=True)
class MaxFlowEdge:
    """A region's strongest trading partner relation.

    `relation` is "both" when the partner is simultaneously the region's top
    export destination and top import source (drawn solid); otherwise one
    edge per relation is emitted (dotted). `tied` marks an argmax tie that
    was broken lexicographically.
    """

    region: str
    partner: str
    style: str
    relation: str  # "both" | "export" | "import"
    tied: bool = False


def max_flow_edges(matrix: FlowMatrix) -> list[MaxFlowEdge]:
    """Top import/export partner edges, off-diagonal flows only.

    Regions with no extra-regional flow at all are omitted with a warning;
    a relation whose largest flow is zero is not emitted (a zero-flow "top
    partner" is meaningless). Invariant under uniform scaling of the matrix.
    """
    values = matrix.values
    regions = matrix.regions
    n = len(regions)
    off = values.astype(np.float64).copy()
    np.fill_diagonal(off, 0.0)
    edges: list[MaxFlowEdge] = []
    for i, region in enumerate(regions):
        row, col = off[i, :], off[:, i]
        if not row.any() and not col.any():
            log.warning("region %s has no extra-regional flows; omitted", region)
            continue
        export_to = _argmax_partner(row, regions, skip=i)
        import_from = _argmax_partner(col, regions, skip=i)
        if export_to and import_from and export_to[0] == import_from[0]:
            edges.append(
                MaxFlowEdge(
                    region=region,
                    partner=export_to[0],
                    style=SOLID,
                    relation="both",
                    tied=export_to[1] or import_from[1],
                )
            )
            continue
        if export_to:
            edges.append(
                MaxFlowEdge(region, export_to[0], DOTTED, relation="export", tied=export_to[1])
            )
        if import_from:
            edges.append(
                MaxFlowEdge(region, import_from[0], DOTTED, relation="import", tied=import_from[1])
            )
    return edges


def _argmax_partner(
    flows: np.ndarray, regions: Sequence[str], skip: int
) -> tuple[str, bool] | None:
    best = None
    tied = False
    for j, value in enumerate(flows):
        if j == skip or value <= 0:
            continue
        if best is None or value > best[1]:
            best = (regions[j], value)
            tied = False
        elif value == best[1]:
            tied = True  # lexicographically earlier name already held
    if best is None:
        return None
    return best[0], tied


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Spearman rank correlation with average-rank tie handling.

    Returns None when either rank vector has zero variance (the coefficient
    is undefined). Invariant under strictly monotone transforms of either
    argument.
    """
    if len(x) != len(y):
        raise ValueError("vectors must have equal length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    rx = _average_ranks(np.asarray(x, dtype=np.float64))
    ry = _average_ranks(np.asarray(y, dtype=np.float64))
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0:
        return None
    return float((rx * ry).sum() / denom)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


# ---------------------------------------------------------------------------
# Exports

def write_balance_report(entries: Iterable[BalanceEntry], path: str | Path) -> None:
    """Export `region,sc,a,b,rbkf` rows (a=outflow, b=inflow, rbkf=net)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["region", "sc", "a", "b", "rbkf"])
        for e in entries:
            writer.writerow([e.region, e.sc or OVERALL, e.outflow, e.inflow, e.net])


def write_pairwise_report(
    entries: Iterable[PairwiseEntry], region_x: str, region_y: str, path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sc", f"{region_x}_to_{region_y}", f"{region_y}_to_{region_x}", "net"])
        for e in entries:
            writer.writerow([e.sc, e.forward, e.backward, e.net])


def write_edges_dot(edges: Iterable[MaxFlowEdge], path: str | Path) -> None:
    """Export edges as a Graphviz digraph; duplicate arrows are merged with
    solid taking precedence over dotted."""
    arrows: dict[tuple[str, str], str] = {}
    for edge in edges:
        if edge.relation == "import":
            pair = (edge.partner, edge.region)
        else:
            pair = (edge.region, edge.partner)
        current = arrows.get(pair)
        if current != SOLID:
            arrows[pair] = edge.style
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("digraph max_flows {\n")
        for (src, dst), style in sorted(arrows.items()):
            extra = ", dir=both" if style == SOLID else ""
            fh.write(f'  "{src}" -> "{dst}" [style={style}{extra}];\n')
        fh.write("}\n")
