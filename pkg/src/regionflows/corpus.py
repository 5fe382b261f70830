"""Publication corpus: data model, gazetteer-based region resolution, file I/O.

The corpus is the immutable input to everything downstream: publications with
authors and affiliation addresses, deduplicated citation edges, a gazetteer
mapping address metadata (zip / city+province / province) to administrative
regions, and a total map from subject-category codes to macro areas.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

# Sentinel results of region resolution. Never valid region names.
FOREIGN = "<foreign>"
UNRESOLVED = "<unresolved>"

_ZIP_PREFIX = re.compile(r"^[A-Za-z]+-")
_COUNTRY = re.compile(r"^[A-Za-z]{2}$")


class CorpusFormatError(Exception):
    """Raised when an input file violates the corpus file contracts."""


def normalize_text(value: str) -> str:
    """Normalize a gazetteer key: lowercase, strip diacritics, collapse whitespace.

    Address fields in bibliographic exports are inconsistently cased and
    accented ("Forlì" vs "FORLI"), so both gazetteer keys and lookups go
    through this.
    """
    decomposed = unicodedata.normalize("NFKD", value)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return " ".join(stripped.lower().split())


def normalize_zip(value: str) -> str:
    """Strip a leading country prefix ("I-00044" -> "00044") and whitespace."""
    return _ZIP_PREFIX.sub("", value.strip())


@dataclass(frozen=True)
class Address:
    """One affiliation address. `country` is an ISO 3166-1 alpha-2 code."""

    institution: str
    country: str
    city: str | None = None
    province: str | None = None
    zip: str | None = None


@dataclass(frozen=True)
class Author:
    """An author with links into the publication's address list.

    `address_refs` holds indices into `Publication.addresses`; an empty tuple
    means the author-affiliation link is missing in the source record.
    """

    name: str
    address_refs: tuple[int, ...] = ()


@dataclass(frozen=True)
class Publication:
    id: str
    year: int
    addresses: tuple[Address, ...]
    authors: tuple[Author, ...]
    sc_codes: tuple[str, ...]


@dataclass(frozen=True, order=True)
class CitationEdge:
    citing_id: str
    cited_id: str


@dataclass(frozen=True)
class Gazetteer:
    """Lookup tables mapping address metadata to regions.

    `region_set` is the canonical ordered universe of regions (sorted,
    deduplicated over all mapped values); flow matrices and tensors index
    rows/columns by it.
    """

    zip_map: Mapping[str, str]
    city_map: Mapping[tuple[str, str], str]
    province_map: Mapping[str, str]
    region_set: tuple[str, ...]

    @classmethod
    def from_entries(
        cls,
        entries: Iterable[tuple[str, str, str, str]],
        source: str = "<gazetteer>",
    ) -> "Gazetteer":
        """Build from (kind, key1, key2, region) rows, normalizing all keys."""
        zip_map: dict[str, str] = {}
        city_map: dict[tuple[str, str], str] = {}
        province_map: dict[str, str] = {}
        regions: set[str] = set()
        for lineno, (kind, key1, key2, region) in enumerate(entries, start=1):
            region = region.strip()
            if not region or region in (FOREIGN, UNRESOLVED):
                raise CorpusFormatError(f"{source}:{lineno}: invalid region name {region!r}")
            if kind == "zip":
                key = normalize_zip(key1)
                _put(zip_map, key, region, source, lineno)
            elif kind == "city":
                key = (normalize_text(key1), normalize_text(key2))
                _put(city_map, key, region, source, lineno)
            elif kind == "province":
                _put(province_map, normalize_text(key1), region, source, lineno)
            else:
                raise CorpusFormatError(f"{source}:{lineno}: unknown gazetteer kind {kind!r}")
            regions.add(region)
        return cls(zip_map, city_map, province_map, tuple(sorted(regions)))


def _put(mapping: dict, key, region: str, source: str, lineno: int) -> None:
    existing = mapping.get(key)
    if existing is not None and existing != region:
        raise CorpusFormatError(
            f"{source}:{lineno}: conflicting gazetteer entry {key!r}: {existing!r} vs {region!r}"
        )
    mapping[key] = region


@dataclass(frozen=True)
class SubjectMap:
    """Total mapping from subject-category code to macro area."""

    areas_by_sc: Mapping[str, str]

    def __contains__(self, sc: str) -> bool:
        return sc in self.areas_by_sc

    @property
    def sc_codes(self) -> tuple[str, ...]:
        return tuple(sorted(self.areas_by_sc))

    @property
    def areas(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.areas_by_sc.values())))


@dataclass(frozen=True)
class Corpus:
    """Immutable, loaded dataset. Safe to share across worker threads."""

    publications: tuple[Publication, ...]
    edges: tuple[CitationEdge, ...]
    gazetteer: Gazetteer
    sc_map: SubjectMap
    domestic_country: str = "IT"
    warnings: Mapping[str, int] = field(default_factory=dict)
    by_id: Mapping[str, Publication] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.by_id:
            object.__setattr__(self, "by_id", {p.id: p for p in self.publications})


def resolve_region(address: Address, gazetteer: Gazetteer, domestic_country: str = "IT") -> str:
    """Resolve an address to a region name, FOREIGN, or UNRESOLVED.

    Foreign countries short-circuit without any lookup. Domestic addresses are
    tried against the zip map, then (city, province), then province alone;
    the first map that matches wins.
    """
    if address.country != domestic_country:
        return FOREIGN
    if address.zip:
        region = gazetteer.zip_map.get(normalize_zip(address.zip))
        if region is not None:
            return region
    if address.city:
        key = (normalize_text(address.city), normalize_text(address.province or ""))
        region = gazetteer.city_map.get(key)
        if region is not None:
            return region
    if address.province:
        region = gazetteer.province_map.get(normalize_text(address.province))
        if region is not None:
            return region
    return UNRESOLVED


# ---------------------------------------------------------------------------
# Loading

def load_corpus(
    publications_path: str | Path,
    citations_path: str | Path,
    gazetteer_path: str | Path,
    scmap_path: str | Path,
    domestic_country: str = "IT",
) -> Corpus:
    """Load and cross-validate the four input files into an immutable Corpus.

    Citation edges are deduplicated. Edges whose citing id is not in the
    publications file are dropped (their regions are unknowable) and counted
    in `warnings`; edges whose cited id is unknown are kept as external stubs
    (they can never become flows) and counted as well.
    """
    gazetteer = load_gazetteer(gazetteer_path)
    sc_map = load_scmap(scmap_path)
    publications = load_publications(publications_path, domestic_country)
    by_id = {p.id: p for p in publications}
    for pub in publications:
        for sc in pub.sc_codes:
            if sc not in sc_map:
                raise CorpusFormatError(
                    f"publication {pub.id!r} carries subject category {sc!r} "
                    f"missing from {scmap_path}"
                )
    edges, warnings = load_citations(citations_path, set(by_id))
    return Corpus(
        publications=publications,
        edges=edges,
        gazetteer=gazetteer,
        sc_map=sc_map,
        domestic_country=domestic_country,
        warnings=warnings,
        by_id=by_id,
    )


def load_publications(path: str | Path, domestic_country: str = "IT") -> tuple[Publication, ...]:
    """Parse the JSON-lines publications file, enforcing record invariants."""
    pubs: list[Publication] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{where}: invalid JSON ({exc})") from None
            pub = _publication_from_dict(raw, where, domestic_country)
            if pub.id in seen:
                raise CorpusFormatError(f"{where}: duplicate publication id {pub.id!r}")
            seen.add(pub.id)
            pubs.append(pub)
    return tuple(pubs)


def _publication_from_dict(raw: object, where: str, domestic_country: str) -> Publication:
    if not isinstance(raw, dict):
        raise CorpusFormatError(f"{where}: record is not an object")

    def fail(msg: str) -> CorpusFormatError:
        return CorpusFormatError(f"{where}: {msg}")

    pub_id = raw.get("id")
    if not isinstance(pub_id, str) or not pub_id:
        raise fail("missing or empty 'id'")
    year = raw.get("year")
    if not isinstance(year, int) or isinstance(year, bool):
        raise fail(f"publication {pub_id!r}: 'year' must be an integer")

    addresses = []
    raw_addresses = raw.get("addresses")
    if not isinstance(raw_addresses, list) or not raw_addresses:
        raise fail(f"publication {pub_id!r}: 'addresses' must be a non-empty list")
    for i, entry in enumerate(raw_addresses):
        if not isinstance(entry, dict):
            raise fail(f"publication {pub_id!r}: address {i} is not an object")
        country = entry.get("country")
        if not isinstance(country, str) or not _COUNTRY.match(country):
            raise fail(f"publication {pub_id!r}: address {i} needs a 2-letter country code")
        addr = Address(
            institution=str(entry.get("institution") or ""),
            country=country.upper(),
            city=_opt(entry.get("city")),
            province=_opt(entry.get("province")),
            zip=_opt(entry.get("zip")),
        )
        if addr.country == domestic_country and not (addr.city or addr.province or addr.zip):
            raise fail(
                f"publication {pub_id!r}: domestic address {i} lacks city, province and zip"
            )
        addresses.append(addr)

    authors = []
    raw_authors = raw.get("authors")
    if not isinstance(raw_authors, list) or not raw_authors:
        raise fail(f"publication {pub_id!r}: 'authors' must be a non-empty list")
    for i, entry in enumerate(raw_authors):
        if not isinstance(entry, dict) or not entry.get("name"):
            raise fail(f"publication {pub_id!r}: author {i} needs a name")
        refs = entry.get("address_refs", [])
        if not isinstance(refs, list):
            raise fail(f"publication {pub_id!r}: author {i} 'address_refs' must be a list")
        if len(set(refs)) != len(refs):
            raise fail(f"publication {pub_id!r}: author {i} has duplicate address_refs")
        for ref in refs:
            if not isinstance(ref, int) or not 0 <= ref < len(addresses):
                raise fail(f"publication {pub_id!r}: author {i} address_ref {ref!r} out of range")
        authors.append(Author(name=str(entry["name"]), address_refs=tuple(refs)))

    sc_codes = raw.get("sc_codes")
    if not isinstance(sc_codes, list) or not sc_codes or not all(
        isinstance(s, str) and s for s in sc_codes
    ):
        raise fail(f"publication {pub_id!r}: 'sc_codes' must be a non-empty list of codes")

    return Publication(
        id=pub_id,
        year=year,
        addresses=tuple(addresses),
        authors=tuple(authors),
        sc_codes=tuple(sc_codes),
    )


def _opt(value: object) -> str | None:
    if value is None:
        return None
    text = str(value).strip()
    return text or None


def load_citations(
    path: str | Path, known_ids: set[str]
) -> tuple[tuple[CitationEdge, ...], dict[str, int]]:
    """Parse the citations CSV (header `citing_id,cited_id` required).

    Returns the deduplicated edge tuple plus warning counters for dropped or
    flagged rows.
    """
    warnings = {
        "duplicate_edges_dropped": 0,
        "self_citation_edges_dropped": 0,
        "unknown_citing_edges_dropped": 0,
        "external_cited_edges_kept": 0,
    }
    edges: list[CitationEdge] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["citing_id", "cited_id"]:
            raise CorpusFormatError(f"{path}:1: expected header 'citing_id,cited_id'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0] or not row[1]:
                raise CorpusFormatError(f"{path}:{lineno}: expected two non-empty columns")
            citing, cited = row
            if citing == cited:
                warnings["self_citation_edges_dropped"] += 1
                continue
            if (citing, cited) in seen:
                warnings["duplicate_edges_dropped"] += 1
                continue
            seen.add((citing, cited))
            if citing not in known_ids:
                warnings["unknown_citing_edges_dropped"] += 1
                continue
            if cited not in known_ids:
                warnings["external_cited_edges_kept"] += 1
            edges.append(CitationEdge(citing_id=citing, cited_id=cited))
    return tuple(edges), warnings


def load_gazetteer(path: str | Path) -> Gazetteer:
    """Parse the gazetteer CSV (header `kind,key1,key2,region` required)."""
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["kind", "key1", "key2", "region"]:
            raise CorpusFormatError(f"{path}:1: expected header 'kind,key1,key2,region'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise CorpusFormatError(f"{path}:{lineno}: expected four columns")
            entries.append(tuple(row))
    return Gazetteer.from_entries(entries, source=str(path))


def load_scmap(path: str | Path) -> SubjectMap:
    """Parse the subject-category map CSV (header `sc_code,macro_area`)."""
    areas: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sc_code", "macro_area"]:
            raise CorpusFormatError(f"{path}:1: expected header 'sc_code,macro_area'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0] or not row[1]:
                raise CorpusFormatError(f"{path}:{lineno}: expected 'sc_code,macro_area'")
            sc, area = row
            if sc in areas and areas[sc] != area:
                raise CorpusFormatError(
                    f"{path}:{lineno}: subject category {sc!r} mapped to both "
                    f"{areas[sc]!r} and {area!r}"
                )
            areas[sc] = area
    return SubjectMap(areas_by_sc=areas)


# ---------------------------------------------------------------------------
# Writing (the generator and tests round-trip through these)

def write_publications(publications: Iterable[Publication], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pub in publications:
            record = {
                "id": pub.id,
                "year": pub.year,
                "addresses": [
                    {
                        "institution": a.institution,
                        "city": a.city,
                        "province": a.province,
                        "zip": a.zip,
                        "country": a.country,
                    }
                    for a in pub.addresses
                ],
                "authors": [
                    {"name": a.name, "address_refs": list(a.address_refs)} for a in pub.authors
                ],
                "sc_codes": list(pub.sc_codes),
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=False) + "\n")


def write_citations(edges: Iterable[CitationEdge], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["citing_id", "cited_id"])
        for edge in edges:
            writer.writerow([edge.citing_id, edge.cited_id])


def write_gazetteer(gazetteer: Gazetteer, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "key1", "key2", "region"])
        for key, region in sorted(gazetteer.zip_map.items()):
            writer.writerow(["zip", key, "", region])
        for (city, province), region in sorted(gazetteer.city_map.items()):
            writer.writerow(["city", city, province, region])
        for key, region in sorted(gazetteer.province_map.items()):
            writer.writerow(["province", key, "", region])


def write_scmap(sc_map: SubjectMap, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sc_code", "macro_area"])
        for sc in sc_map.sc_codes:
            writer.writerow([sc, sc_map.areas_by_sc[sc]])


# ---------------------------------------------------------------------------
# Structural validation

@dataclass(frozen=True)
class PublicationCheck:
    """Per-publication validation flags."""

    pub_id: str
    unlinked_authors: int
    unresolved_addresses: int
    auto_linked: bool
    excluded: bool
    reason: str | None
    foreign_weight_at_half: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[PublicationCheck, ...]
    counts: Mapping[str, int]

    def flagged(self) -> tuple[PublicationCheck, ...]:
        return tuple(
            c
            for c in self.checks
            if c.unlinked_authors or c.unresolved_addresses or c.auto_linked or c.excluded
        )


def validate_corpus(corpus: Corpus, threshold: Fraction = Fraction(1, 2)) -> ValidationReport:
    """Check every publication's attributability and report exact counts.

    Flags unlinked authors, unresolved domestic addresses, the single-author
    auto-link fallback, and whether (and why) the publication will be excluded
    from made-in attribution at the given threshold.
    """
    from . import attribution  # deferred: validation reports on attribution outcomes

    checks = []
    counts = {
        "publications": len(corpus.publications),
        "excluded": 0,
        "excluded_unlinked_authors": 0,
        "excluded_foreign_majority": 0,
        "excluded_no_majority_region": 0,
        "auto_linked_single_author": 0,
        "foreign_weight_at_half": 0,
    }
    for pub in corpus.publications:
        unresolved = sum(
            1
            for a in pub.addresses
            if resolve_region(a, corpus.gazetteer, corpus.domestic_country) == UNRESOLVED
        )
        unlinked = sum(1 for a in pub.authors if not a.address_refs)
        auto_linked = len(pub.authors) == 1 and unlinked == 1
        shares = attribution.compute_shares(pub, corpus.gazetteer, corpus.domestic_country)
        made_in = attribution.classify_made_in(shares, threshold)
        at_half = shares.foreign_weight * 2 == shares.total_authors
        excluded = not made_in.is_made_in
        checks.append(
            PublicationCheck(
                pub_id=pub.id,
                unlinked_authors=0 if auto_linked else unlinked,
                unresolved_addresses=unresolved,
                auto_linked=auto_linked,
                excluded=excluded,
                reason=made_in.reason,
                foreign_weight_at_half=at_half,
            )
        )
        if excluded:
            counts["excluded"] += 1
            counts[f"excluded_{made_in.reason}"] += 1
        if auto_linked:
            counts["auto_linked_single_author"] += 1
        if at_half:
            counts["foreign_weight_at_half"] += 1
    return ValidationReport(checks=tuple(checks), counts=counts)


def write_validation_report(report: ValidationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "pub_id",
                "unlinked_authors",
                "unresolved_addresses",
                "auto_linked",
                "excluded",
                "reason",
                "foreign_weight_at_half",
            ]
        )
        for c in report.checks:
            writer.writerow(
                [
                    c.pub_id,
                    c.unlinked_authors,
                    c.unresolved_addresses,
                    int(c.auto_linked),
                    int(c.excluded),
                    c.reason or "",
                    int(c.foreign_weight_at_half),
                ]
            )
