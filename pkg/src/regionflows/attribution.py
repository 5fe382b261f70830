"""Fractional regional authorship shares and "made in" classification.

Each author carries total weight 1, split as 1/m over their m linked
addresses. Weight routed to a resolvable domestic region accrues to that
region; foreign and unresolvable addresses accrue to separate buckets so the
per-publication total is conserved exactly. A publication is "made in" a
region when that region holds at least half of the author weight; two regions
holding exactly half each make it dual-produced. All arithmetic is exact
(`fractions.Fraction`): the threshold test must not depend on float ties.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import FOREIGN, UNRESOLVED, Corpus, Gazetteer, Publication, resolve_region

SINGLE = "single"
DUAL = "dual"
EXCLUDED = "excluded"

FOREIGN_MAJORITY = "foreign_majority"
NO_MAJORITY_REGION = "no_majority_region"
UNLINKED_AUTHORS = "unlinked_authors"

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class RegionShares:
    """Exact author-weight shares of one publication.

    Invariant: sum(shares) + foreign_weight + unresolved_weight equals
    total_authors. Unlinked authors of multi-authored publications park their
    whole weight in `unresolved_weight` (the publication is excluded anyway,
    but conservation stays exact).
    """

    pub_id: str
    shares: Mapping[str, Fraction]
    foreign_weight: Fraction
    unresolved_weight: Fraction
    total_authors: int
    unlinked_authors: int = 0


@dataclass(frozen=True)
class MadeIn:
    """A publication's region-of-production classification."""

    pub_id: str
    kind: str  # SINGLE | DUAL | EXCLUDED
    regions: tuple[str, ...] = ()
    reason: str | None = None

    @property
    def is_made_in(self) -> bool:
        return self.kind in (SINGLE, DUAL)


def compute_shares(
    pub: Publication, gazetteer: Gazetteer, domestic_country: str = "IT"
) -> RegionShares:
    """Split each author's unit weight 1/m over their m linked addresses.

    A single-authored publication with no author-affiliation link is treated
    as linked to all of its addresses; multi-authored publications with
    unlinked authors keep those authors' weight in the unresolved bucket and
    are excluded downstream by `classify_made_in`.
    """
    shares: dict[str, Fraction] = {}
    foreign = Fraction(0)
    unresolved = Fraction(0)
    unlinked = 0
    single_author = len(pub.authors) == 1
    for author in pub.authors:
        refs = author.address_refs
        if not refs:
            if single_author:
                refs = tuple(range(len(pub.addresses)))
            else:
                unlinked += 1
                unresolved += 1
                continue
        per_address = Fraction(1, len(refs))
        for ref in refs:
            region = resolve_region(pub.addresses[ref], gazetteer, domestic_country)
            if region == FOREIGN:
                foreign += per_address
            elif region == UNRESOLVED:
                unresolved += per_address
            else:
                shares[region] = shares.get(region, Fraction(0)) + per_address
    return RegionShares(
        pub_id=pub.id,
        shares=shares,
        foreign_weight=foreign,
        unresolved_weight=unresolved,
        total_authors=len(pub.authors),
        unlinked_authors=unlinked,
    )


def classify_made_in(shares: RegionShares, threshold: Fraction = HALF) -> MadeIn:
    """Classify a publication from its exact shares.

    Order of tests: multi-authored publications with unlinked authors are
    excluded outright; then publications with strictly more than half their
    weight abroad; then a region reaching `threshold` wins (two regions at
    exactly the threshold produce a dual classification, ordered
    lexicographically); anything else has no majority region.
    """
    total = shares.total_authors
    if total > 1 and shares.unlinked_authors > 0:
        return MadeIn(shares.pub_id, EXCLUDED, reason=UNLINKED_AUTHORS)
    if shares.foreign_weight * 2 > total:
        return MadeIn(shares.pub_id, EXCLUDED, reason=FOREIGN_MAJORITY)
    qualified = sorted(r for r, w in shares.shares.items() if w >= threshold * total)
    if len(qualified) == 1:
        return MadeIn(shares.pub_id, SINGLE, regions=(qualified[0],))
    if len(qualified) == 2 and all(
        shares.shares[r] == threshold * total for r in qualified
    ):
        return MadeIn(shares.pub_id, DUAL, regions=tuple(qualified))
    return MadeIn(shares.pub_id, EXCLUDED, reason=NO_MAJORITY_REGION)


def attribute_corpus(
    corpus: Corpus,
    threshold: Fraction = HALF,
    pub_ids: Iterable[str] | None = None,
) -> dict[str, MadeIn]:
    """Classify every publication (or the given subset) in the corpus.

    The result maps publication id to its MadeIn record, excluded ones
    included; the key set defines the attribution universe downstream.
    """
    if pub_ids is None:
        pubs = corpus.publications
    else:
        pubs = tuple(corpus.by_id[pid] for pid in pub_ids)
    result: dict[str, MadeIn] = {}
    for pub in pubs:
        shares = compute_shares(pub, corpus.gazetteer, corpus.domestic_country)
        result[pub.id] = classify_made_in(shares, threshold)
    return result


def made_in_counts(made_in: Mapping[str, MadeIn]) -> dict[str, int]:
    """Aggregate classification counts (single, dual, excluded by reason)."""
    counts = {
        SINGLE: 0,
        DUAL: 0,
        EXCLUDED: 0,
        FOREIGN_MAJORITY: 0,
        NO_MAJORITY_REGION: 0,
        UNLINKED_AUTHORS: 0,
    }
    for entry in made_in.values():
        counts[entry.kind] += 1
        if entry.reason:
            counts[entry.reason] += 1
    return counts


def write_attribution(made_in: Mapping[str, MadeIn], path: str | Path) -> None:
    """Export `pub_id,classification,region1,region2,reason` rows, sorted by id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pub_id", "classification", "region1", "region2", "reason"])
        for pub_id in sorted(made_in):
            entry = made_in[pub_id]
            regions = entry.regions + ("", "")
            writer.writerow([pub_id, entry.kind, regions[0], regions[1], entry.reason or ""])
