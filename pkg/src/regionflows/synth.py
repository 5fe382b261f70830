"""Deterministic synthetic corpora with planted structure, plus a brute-force
oracle for every flow quantity.

The generator plants publication classes (single-region, dual-region,
foreign-majority, unlinked-author, no-majority) and controls citation
locality, then records ground truth computed by its own literal classifier.
The oracle re-derives made-in regions, citing regions and gains with the most
direct possible loops, sharing no code with the attribution or flow engines,
so agreement between the two is a real check.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .attribution import (
    DUAL,
    EXCLUDED,
    FOREIGN_MAJORITY,
    NO_MAJORITY_REGION,
    SINGLE,
    UNLINKED_AUTHORS,
    MadeIn,
)
from .corpus import (
    Address,
    Author,
    CitationEdge,
    Corpus,
    Gazetteer,
    Publication,
    SubjectMap,
    normalize_text,
    normalize_zip,
    write_citations,
    write_gazetteer,
    write_publications,
    write_scmap,
)
from .flows import Gain

FOREIGN_COUNTRIES = ("US", "DE", "FR", "GB", "CN")

DEFAULT_AUTHOR_DIST: Mapping[int, float] = {1: 0.15, 2: 0.2, 3: 0.25, 4: 0.2, 5: 0.12, 6: 0.08}


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for corpus generation. The random stream is a seeded Mersenne
    Twister (`random.Random`), so equal configs reproduce equal corpora on any
    platform."""

    n_regions: int = 5
    n_pubs: int = 200
    authors_per_pub: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_AUTHOR_DIST))
    multi_affiliation_prob: float = 0.15
    foreign_author_prob: float = 0.10
    n_scs: int = 8
    citation_density: float = 3.0
    locality: float = 0.5
    seed: int = 0
    dual_prob: float = 0.05
    foreign_majority_prob: float = 0.05
    unlinked_prob: float = 0.04
    no_majority_prob: float = 0.05
    unresolvable_prob: float = 0.03
    domestic_country: str = "IT"

    def __post_init__(self):
        if self.n_regions < 2:
            raise ValueError("need at least two regions")
        if self.n_pubs < 1:
            raise ValueError("need at least one publication")
        if self.n_scs < 1:
            raise ValueError("need at least one subject category")
        if not self.authors_per_pub or any(
            k < 1 or w < 0 for k, w in self.authors_per_pub.items()
        ):
            raise ValueError("invalid authors_per_pub distribution")
        for name in (
            "multi_affiliation_prob",
            "foreign_author_prob",
            "locality",
            "dual_prob",
            "foreign_majority_prob",
            "unlinked_prob",
            "no_majority_prob",
            "unresolvable_prob",
        ):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.citation_density < 0:
            raise ValueError("citation_density must be nonnegative")


@dataclass(frozen=True)
class GroundTruth:
    """What the generator intended: per-publication classification and the
    full list of gain tuples its citation edges must produce."""

    made_in: Mapping[str, MadeIn]
    gains: tuple[Gain, ...]


def generate_corpus(config: GeneratorConfig) -> tuple[Corpus, GroundTruth]:
    """Generate a corpus plus its ground truth, deterministically per seed."""
    rng = random.Random(config.seed)
    regions = tuple(f"R{i + 1:02d}" for i in range(config.n_regions))
    gazetteer, recipes = _build_gazetteer(regions)
    sc_codes = tuple(f"SC{j + 1:02d}" for j in range(config.n_scs))
    n_areas = min(13, config.n_scs)
    sc_map = SubjectMap(
        areas_by_sc={sc: f"AREA{(j % n_areas) + 1:02d}" for j, sc in enumerate(sc_codes)}
    )

    # Skewed region sizes: a few large producers, a long tail.
    region_weights = [(i + 1) ** -1.2 for i in range(config.n_regions)]
    author_counts = sorted(config.authors_per_pub)
    author_weights = [config.authors_per_pub[k] for k in author_counts]

    publications: list[Publication] = []
    domestic_sets: dict[str, frozenset[str]] = {}
    for i in range(config.n_pubs):
        pub_id = f"P{i + 1:05d}"
        pub, region_set = _make_publication(pub_id, config, rng, regions, region_weights,
                                            author_counts, author_weights, sc_codes, recipes)
        publications.append(pub)
        domestic_sets[pub_id] = region_set

    by_id = {p.id: p for p in publications}
    interim = Corpus(
        publications=tuple(publications),
        edges=(),
        gazetteer=gazetteer,
        sc_map=sc_map,
        domestic_country=config.domestic_country,
        by_id=by_id,
    )
    made_in = oracle_made_in(interim)

    edges = _make_edges(config, rng, publications, domestic_sets, made_in)
    corpus = Corpus(
        publications=tuple(publications),
        edges=edges,
        gazetteer=gazetteer,
        sc_map=sc_map,
        domestic_country=config.domestic_country,
        by_id=by_id,
    )
    truth = GroundTruth(made_in=made_in, gains=tuple(brute_force_gains(corpus)))
    return corpus, truth


def _build_gazetteer(regions) -> tuple[Gazetteer, dict[str, list[Address]]]:
    """Three zip codes, three cities and one province per region, plus the
    concrete address templates (zip-only, city+province, province-only) used
    to exercise every resolution path."""
    entries = []
    recipes: dict[str, list[Address]] = {}
    for i, region in enumerate(regions):
        province = f"P{i + 1:02d}"
        entries.append(("province", province, "", region))
        templates = []
        for j in range(3):
            zip_code = f"{10000 + 100 * (i + 1) + j}"
            city = f"{region.lower()} town {j + 1}"
            entries.append(("zip", zip_code, "", region))
            entries.append(("city", city, province, region))
            templates.append(
                Address(institution=f"Institute {j + 1} of {region}", country="IT", zip=zip_code)
            )
            templates.append(
                Address(
                    institution=f"University of {city.title()}",
                    country="IT",
                    city=city,
                    province=province,
                )
            )
        templates.append(
            Address(institution=f"{region} Research Agency", country="IT", province=province)
        )
        recipes[region] = templates
    return Gazetteer.from_entries(entries, source="<synthetic>"), recipes


def _make_publication(pub_id, config, rng, regions, region_weights,
                      author_counts, author_weights, sc_codes, recipes):
    n_authors = _weighted_choice(rng, author_counts, author_weights)
    kind = _pick_class(rng, config, n_authors, len(regions))
    home = _weighted_choice(rng, regions, region_weights)

    # Each planned author is a list of address plans; a plan is a region name,
    # "foreign", or "unresolved". None marks an unlinked author.
    plans: list[list[str] | None]
    if kind == "dual":
        other = _weighted_choice(rng, regions, region_weights)
        while other == home:
            other = _weighted_choice(rng, regions, region_weights)
        plans = [[home]] * (n_authors // 2) + [[other]] * (n_authors // 2)
    elif kind == "foreign_majority":
        k = n_authors // 2 + 1
        plans = [["foreign"]] * k + [[home]] * (n_authors - k)
    elif kind == "unlinked":
        plans = [None] + [[home]] * (n_authors - 1)
    elif kind == "no_majority":
        spread = [regions[j] for j in range(min(3, len(regions)))]
        if n_authors == 2:
            # Two split authors: every bucket ends at half an authorship.
            plans = [[spread[0], spread[1]], ["foreign", "unresolved"]]
        elif len(spread) >= 3:
            plans = [[spread[j % 3]] for j in range(n_authors)]
            if 2 * ((n_authors + 2) // 3) >= n_authors:
                plans[0] = [spread[0], spread[1]]
        else:
            # Two-region universe: dilute half the authors with non-regional
            # weight so neither region can reach the threshold.
            diluted = (n_authors + 1) // 2
            plans = [["foreign", "unresolved"]] * diluted
            plans += [[spread[j % 2]] for j in range(n_authors - diluted)]
    else:  # single
        k = n_authors // 2 + 1
        plans = [[home]] * k
        for _ in range(n_authors - k):
            plan = [_free_address_plan(rng, config, regions, region_weights)]
            if rng.random() < config.multi_affiliation_prob:
                second = _free_address_plan(rng, config, regions, region_weights)
                if second not in plan:
                    plan.append(second)
            plans.append(plan)

    addresses: list[Address] = []
    address_index: dict[tuple, int] = {}
    authors: list[Author] = []
    region_set: set[str] = set()
    for a, plan in enumerate(plans):
        if plan is None:
            authors.append(Author(name=f"{pub_id} author {a + 1}"))
            continue
        refs = []
        for target in plan:
            address = _realize_address(rng, target, recipes)
            key = (address.institution, address.country, address.city, address.province,
                   address.zip)
            if key not in address_index:
                address_index[key] = len(addresses)
                addresses.append(address)
            refs.append(address_index[key])
            if target not in ("foreign", "unresolved"):
                region_set.add(target)
        authors.append(Author(name=f"{pub_id} author {a + 1}", address_refs=tuple(sorted(set(refs)))))

    n_codes = _weighted_choice(rng, (1, 2, 3), (0.6, 0.3, 0.1))
    n_codes = min(n_codes, len(sc_codes))
    codes = sorted(_sample_without_replacement(rng, sc_codes, n_codes))
    pub = Publication(
        id=pub_id,
        year=2010 + rng.randrange(3),
        addresses=tuple(addresses),
        authors=tuple(authors),
        sc_codes=tuple(codes),
    )
    return pub, frozenset(region_set)


def _pick_class(rng, config: GeneratorConfig, n_authors: int, n_regions: int) -> str:
    draw = rng.random()
    chosen = "single"
    acc = 0.0
    for name, prob in (
        ("dual", config.dual_prob),
        ("foreign_majority", config.foreign_majority_prob),
        ("unlinked", config.unlinked_prob),
        ("no_majority", config.no_majority_prob),
    ):
        acc += prob
        if draw < acc:
            chosen = name
            break
    # Classes that cannot be realized with this author count degrade to single.
    if chosen == "dual" and (n_authors < 2 or n_authors % 2 == 1):
        return "single"
    if chosen in ("unlinked", "no_majority") and n_authors < 2:
        return "single"
    return chosen


def _free_address_plan(rng, config, regions, region_weights) -> str:
    if rng.random() < config.foreign_author_prob:
        return "foreign"
    if rng.random() < config.unresolvable_prob:
        return "unresolved"
    return _weighted_choice(rng, regions, region_weights)


def _realize_address(rng, target: str, recipes: dict) -> Address:
    if target == "foreign":
        country = FOREIGN_COUNTRIES[rng.randrange(len(FOREIGN_COUNTRIES))]
        return Address(
            institution=f"Overseas Institute {rng.randrange(50) + 1}",
            country=country,
            city=f"abroad {rng.randrange(20) + 1}",
        )
    if target == "unresolved":
        return Address(
            institution=f"Unlisted Center {rng.randrange(50) + 1}",
            country="IT",
            city=f"unmapped village {rng.randrange(20) + 1}",
            province="ZZ",
        )
    templates = recipes[target]
    return templates[rng.randrange(len(templates))]


def _make_edges(config, rng, publications, domestic_sets, made_in) -> tuple[CitationEdge, ...]:
    """Draw citation targets per publication; `locality` is the probability
    that the cited side was produced in one of the citing side's regions."""
    all_ids = [p.id for p in publications]
    by_truth_region: dict[str, list[str]] = {}
    for pub_id, entry in made_in.items():
        for region in entry.regions:
            by_truth_region.setdefault(region, []).append(pub_id)

    local_cache: dict[frozenset[str], list[str]] = {}

    def local_candidates(region_set: frozenset[str]) -> list[str]:
        if region_set not in local_cache:
            merged = set()
            for region in region_set:
                merged.update(by_truth_region.get(region, ()))
            local_cache[region_set] = sorted(merged)
        return local_cache[region_set]

    edges: list[CitationEdge] = []
    seen: set[tuple[str, str]] = set()
    for pub in publications:
        citing_set = domestic_sets[pub.id]
        n_refs = min(_poisson(rng, config.citation_density), len(all_ids) - 1)
        if n_refs == 0:
            continue
        local = [c for c in local_candidates(citing_set) if c != pub.id]
        local_set = set(local)
        nonlocal_ = [c for c in all_ids if c != pub.id and c not in local_set]
        for _ in range(n_refs):
            bucket = local if rng.random() < config.locality else nonlocal_
            if not bucket:
                bucket = [c for c in all_ids if c != pub.id]
            cited = bucket[rng.randrange(len(bucket))]
            key = (pub.id, cited)
            if key not in seen:
                seen.add(key)
                edges.append(CitationEdge(citing_id=pub.id, cited_id=cited))
    return tuple(edges)


def _weighted_choice(rng, items, weights):
    total = float(sum(weights))
    mark = rng.random() * total
    acc = 0.0
    for item, weight in zip(items, weights):
        acc += weight
        if mark < acc:
            return item
    return items[-1]


def _sample_without_replacement(rng, items, k):
    pool = list(items)
    picked = []
    for _ in range(k):
        picked.append(pool.pop(rng.randrange(len(pool))))
    return picked


def _poisson(rng, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


# ---------------------------------------------------------------------------
# Brute-force oracle. Deliberately duplicated, maximally literal logic:
# resolves addresses, recomputes fractional shares and classification, and
# expands gains edge by edge. Shares nothing with the engine modules.

def oracle_made_in(corpus: Corpus, threshold: Fraction = Fraction(1, 2)) -> dict[str, MadeIn]:
    return {pub.id: _literal_made_in(pub, corpus, threshold) for pub in corpus.publications}


def brute_force_gains(corpus: Corpus, threshold: Fraction = Fraction(1, 2)) -> list[Gain]:
    """Enumerate all gains by direct nested loops over edges and regions.

    Only suitable for small corpora (roughly up to 10^4 publications).
    """
    gains: list[Gain] = []
    for edge in corpus.edges:
        cited = corpus.by_id.get(edge.cited_id)
        citing = corpus.by_id.get(edge.citing_id)
        if cited is None or citing is None:
            continue
        producing = _literal_made_in(cited, corpus, threshold).regions
        citing_set = set()
        for address in citing.addresses:
            region = _literal_resolve(address, corpus)
            if region is not None:
                citing_set.add(region)
        for producing_region in producing:
            for citing_region in sorted(citing_set):
                gains.append(
                    Gain(
                        cited_id=cited.id,
                        citing_id=citing.id,
                        producing_region=producing_region,
                        citing_region=citing_region,
                        intra=producing_region == citing_region,
                    )
                )
    gains.sort()
    return gains


def _literal_resolve(address: Address, corpus: Corpus) -> str | None:
    """Region of one address, or None for foreign/unresolvable."""
    if address.country != corpus.domestic_country:
        return None
    gazetteer = corpus.gazetteer
    if address.zip is not None:
        region = gazetteer.zip_map.get(normalize_zip(address.zip))
        if region is not None:
            return region
    if address.city is not None:
        region = gazetteer.city_map.get(
            (normalize_text(address.city), normalize_text(address.province or ""))
        )
        if region is not None:
            return region
    if address.province is not None:
        region = gazetteer.province_map.get(normalize_text(address.province))
        if region is not None:
            return region
    return None


def _literal_made_in(pub: Publication, corpus: Corpus, threshold: Fraction) -> MadeIn:
    total = len(pub.authors)
    if total > 1 and any(len(a.address_refs) == 0 for a in pub.authors):
        return MadeIn(pub.id, EXCLUDED, reason=UNLINKED_AUTHORS)
    weights: dict[str, Fraction] = {}
    foreign = Fraction(0)
    for author in pub.authors:
        refs = list(author.address_refs)
        if not refs:
            refs = list(range(len(pub.addresses)))
        for ref in refs:
            region = _literal_resolve(pub.addresses[ref], corpus)
            if region is None:
                if pub.addresses[ref].country != corpus.domestic_country:
                    foreign += Fraction(1, len(refs))
                continue
            weights[region] = weights.get(region, Fraction(0)) + Fraction(1, len(refs))
    if foreign > Fraction(total, 2):
        return MadeIn(pub.id, EXCLUDED, reason=FOREIGN_MAJORITY)
    winners = sorted(r for r, w in weights.items() if w / total >= threshold)
    if len(winners) == 1:
        return MadeIn(pub.id, SINGLE, regions=(winners[0],))
    if len(winners) == 2 and all(weights[r] / total == threshold for r in winners):
        return MadeIn(pub.id, DUAL, regions=tuple(winners))
    return MadeIn(pub.id, EXCLUDED, reason=NO_MAJORITY_REGION)


# ---------------------------------------------------------------------------
# File emission (same formats as the corpus loaders)

def write_corpus_files(corpus: Corpus, outdir: str | Path) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "publications": outdir / "publications.jsonl",
        "citations": outdir / "citations.csv",
        "gazetteer": outdir / "gazetteer.csv",
        "scmap": outdir / "scmap.csv",
    }
    write_publications(corpus.publications, paths["publications"])
    write_citations(corpus.edges, paths["citations"])
    write_gazetteer(corpus.gazetteer, paths["gazetteer"])
    write_scmap(corpus.sc_map, paths["scmap"])
    return paths


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    payload = {
        "made_in": {
            pub_id: {
                "kind": entry.kind,
                "regions": list(entry.regions),
                "reason": entry.reason,
            }
            for pub_id, entry in sorted(truth.made_in.items())
        },
        "gains": [
            [g.cited_id, g.citing_id, g.producing_region, g.citing_region, g.intra]
            for g in truth.gains
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
