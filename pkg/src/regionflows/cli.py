"""Command-line pipeline: validate, assign, flows, balance, pairwise,
specialize, edges, synth, report.

Every command reads the four corpus files (paths from flags or a key=value
config file; flags win), writes its module's export format into the output
directory, and exits 0 on success, 1 on input errors, 2 on configuration
errors, 3 on internal invariant violations. Outputs carry no timestamps, so
re-running a command on identical inputs reproduces identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import attribution, balance, corpus, flows, specialization, synth

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


class ConfigError(Exception):
    pass


class InternalError(Exception):
    pass


@dataclass
class RunConfig:
    publications: str | None = None
    citations: str | None = None
    gazetteer: str | None = None
    scmap: str | None = None
    outdir: str = "out"
    year_min: int | None = None
    year_max: int | None = None
    threshold: str = "1/2"
    dual_gain_weight: str = flows.DUAL_GAIN_FULL
    balassa_mode: str = specialization.EXCLUDE_FOCAL
    gain_scope: str = specialization.SCOPE_ALL
    domestic_country: str = "IT"
    workers: int = 1

    def threshold_fraction(self) -> Fraction:
        try:
            value = Fraction(self.threshold)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"invalid threshold {self.threshold!r}") from None
        if not 0 < value <= 1:
            raise ConfigError("threshold must be in (0, 1]")
        return value

    def validate(self) -> None:
        if (self.year_min is None) != (self.year_max is None):
            raise ConfigError("year-min and year-max must be given together")
        if self.year_min is not None and self.year_min > self.year_max:
            raise ConfigError("empty year range")
        if self.dual_gain_weight not in (flows.DUAL_GAIN_FULL, flows.DUAL_GAIN_HALF):
            raise ConfigError(f"invalid dual-gain-weight {self.dual_gain_weight!r}")
        if self.balassa_mode not in (
            specialization.EXCLUDE_FOCAL,
            specialization.INCLUDE_FOCAL,
        ):
            raise ConfigError(f"invalid balassa-mode {self.balassa_mode!r}")
        if self.gain_scope not in (specialization.SCOPE_ALL, specialization.SCOPE_EXTRA_ONLY):
            raise ConfigError(f"invalid gain-scope {self.gain_scope!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.threshold_fraction()


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse `key = value` lines; blank lines and # comments are skipped."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_INT_KEYS = {"year_min", "year_max", "workers"}
_KNOWN_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, int(value) if key in _INT_KEYS else value)
    for key in _KNOWN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def load_inputs(cfg: RunConfig) -> corpus.Corpus:
    for name in ("publications", "citations", "gazetteer", "scmap"):
        if getattr(cfg, name) is None:
            raise ConfigError(f"missing required input path: {name}")
    return corpus.load_corpus(
        cfg.publications,
        cfg.citations,
        cfg.gazetteer,
        cfg.scmap,
        domestic_country=cfg.domestic_country,
    )


def attribution_universe(cfg: RunConfig, data: corpus.Corpus) -> list[str] | None:
    """Ids of publications eligible for made-in attribution (None = all).

    The configured year window restricts which publications can be attributed
    and cited; citing publications are taken from the whole corpus regardless
    of year.
    """
    if cfg.year_min is None:
        return None
    return [p.id for p in data.publications if cfg.year_min <= p.year <= cfg.year_max]


def run_pipeline(cfg: RunConfig, data: corpus.Corpus):
    made_in = attribution.attribute_corpus(
        data, cfg.threshold_fraction(), attribution_universe(cfg, data)
    )
    gains = flows.compute_gains(data, made_in, cfg.dual_gain_weight, workers=cfg.workers)
    return made_in, gains


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands

def cmd_validate(cfg: RunConfig) -> int:
    data = load_inputs(cfg)
    report = corpus.validate_corpus(data, cfg.threshold_fraction())
    out = _outdir(cfg)
    corpus.write_validation_report(report, out / "validation_report.csv")
    for key in sorted(report.counts):
        print(f"{key}={report.counts[key]}")
    for key, value in sorted(data.warnings.items()):
        print(f"warning.{key}={value}")
    return EXIT_OK


def cmd_assign(cfg: RunConfig) -> int:
    data = load_inputs(cfg)
    made_in = attribution.attribute_corpus(
        data, cfg.threshold_fraction(), attribution_universe(cfg, data)
    )
    out = _outdir(cfg)
    attribution.write_attribution(made_in, out / "attribution.csv")
    for key, value in sorted(attribution.made_in_counts(made_in).items()):
        print(f"{key}={value}")
    return EXIT_OK


def cmd_flows(cfg: RunConfig, sc: str | None = None) -> int:
    data = load_inputs(cfg)
    made_in, gains = run_pipeline(cfg, data)
    out = _outdir(cfg)
    flows.write_gains(gains, out / "gains.csv")
    matrix = flows.flow_matrix(gains, data.gazetteer.region_set, sc=sc, corpus=data)
    suffix = f"_{sc}" if sc else ""
    flows.write_matrix(matrix, out / f"matrix{suffix}.csv")
    flows.write_matrix(matrix, out / f"matrix_pct{suffix}.csv", percent=True)
    print(f"benefits={len(flows.benefits(gains))}")
    print(f"gains={len(gains)}")
    return EXIT_OK


def cmd_balance(cfg: RunConfig, by_sc: bool = False) -> int:
    data = load_inputs(cfg)
    made_in, gains = run_pipeline(cfg, data)
    out = _outdir(cfg)
    matrix = flows.flow_matrix(gains, data.gazetteer.region_set)
    entries = balance.overall_balance(matrix)
    balance.write_balance_report(entries, out / "balance_overall.csv")
    if by_sc:
        sc_matrices = flows.matrices_by_sc(gains, data)
        rows = []
        for region in data.gazetteer.region_set:
            rows.extend(balance.balance_by_sc(sc_matrices, region))
        balance.write_balance_report(rows, out / "balance_by_sc.csv")
    net_total = sum(e.net for e in entries)
    if net_total != 0:
        raise InternalError(f"balances sum to {net_total}, expected 0")
    print(f"regions={len(entries)}")
    return EXIT_OK


def cmd_pairwise(cfg: RunConfig, region_x: str, region_y: str) -> int:
    data = load_inputs(cfg)
    for region in (region_x, region_y):
        if region not in data.gazetteer.region_set:
            raise ConfigError(f"unknown region {region!r}")
    if region_x == region_y:
        raise ConfigError("pairwise needs two distinct regions")
    made_in, gains = run_pipeline(cfg, data)
    sc_matrices = flows.matrices_by_sc(gains, data)
    entries = balance.pairwise_balance(sc_matrices, region_x, region_y)
    out = _outdir(cfg)
    balance.write_pairwise_report(entries, region_x, region_y, out / "pairwise_balance.csv")
    print(f"subject_categories={len(entries)}")
    return EXIT_OK


def cmd_specialize(cfg: RunConfig) -> int:
    data = load_inputs(cfg)
    made_in, gains = run_pipeline(cfg, data)
    generated, earned = specialization.build_tensors(gains, data, scope=cfg.gain_scope)
    out = _outdir(cfg)
    rows = specialization.index_table(generated, cfg.balassa_mode)
    specialization.write_index_table(
        rows, specialization.GENERATED, cfg.balassa_mode, out / "specialization_outflow.csv"
    )
    rows = specialization.index_table(earned, cfg.balassa_mode)
    specialization.write_index_table(
        rows, specialization.EARNED, cfg.balassa_mode, out / "specialization_inflow.csv"
    )
    print(f"cells={len(rows)}")
    return EXIT_OK


def cmd_edges(cfg: RunConfig) -> int:
    data = load_inputs(cfg)
    made_in, gains = run_pipeline(cfg, data)
    matrix = flows.flow_matrix(gains, data.gazetteer.region_set)
    edges = balance.max_flow_edges(matrix)
    out = _outdir(cfg)
    balance.write_edges_dot(edges, out / "max_flow_edges.dot")
    print(f"edges={len(edges)}")
    return EXIT_OK


def cmd_synth(cfg: RunConfig, args: argparse.Namespace) -> int:
    gen = synth.GeneratorConfig(
        n_regions=args.n_regions,
        n_pubs=args.n_pubs,
        n_scs=args.n_scs,
        citation_density=args.citation_density,
        locality=args.locality,
        multi_affiliation_prob=args.multi_affiliation_prob,
        foreign_author_prob=args.foreign_author_prob,
        seed=args.seed,
        domestic_country=cfg.domestic_country,
    )
    generated, truth = synth.generate_corpus(gen)
    out = _outdir(cfg)
    paths = synth.write_corpus_files(generated, out)
    synth.write_ground_truth(truth, out / "ground_truth.json")
    print(f"publications={len(generated.publications)}")
    print(f"edges={len(generated.edges)}")
    print(f"gains={len(truth.gains)}")
    for name, path in sorted(paths.items()):
        print(f"{name}={path}")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    data = load_inputs(cfg)
    made_in, gains = run_pipeline(cfg, data)
    out = _outdir(cfg)

    summary = flows.region_summary(data, made_in, gains)
    flows.write_region_summary(summary, out / "region_summary.csv")
    matrix = flows.flow_matrix(gains, data.gazetteer.region_set)
    flows.write_matrix(matrix, out / "matrix.csv")
    flows.write_matrix(matrix, out / "matrix_pct.csv", percent=True)
    entries = balance.overall_balance(matrix)
    balance.write_balance_report(entries, out / "balance_overall.csv")

    n_benefits = len(flows.benefits(gains))
    intra = sum(g.weight for g in gains if g.intra)
    counts = attribution.made_in_counts(made_in)
    manifest = {
        "config": {k: getattr(cfg, k) for k in sorted(_KNOWN_KEYS)},
        "config_hash": _config_hash(cfg),
        "corpus": {
            "publications": len(data.publications),
            "edges": len(data.edges),
            "regions": len(data.gazetteer.region_set),
            "subject_categories": len(data.sc_map.sc_codes),
            "warnings": dict(sorted(data.warnings.items())),
        },
        "attribution": {
            "universe": len(made_in),
            "single": counts[attribution.SINGLE],
            "dual": counts[attribution.DUAL],
            "excluded": counts[attribution.EXCLUDED],
        },
        "totals": {
            "benefits": n_benefits,
            "gains": float(sum(g.weight for g in gains))
            if cfg.dual_gain_weight == flows.DUAL_GAIN_HALF
            else len(gains),
            "intra_gains": float(intra) if cfg.dual_gain_weight == flows.DUAL_GAIN_HALF else int(intra),
        },
        "outputs": [
            "balance_overall.csv",
            "matrix.csv",
            "matrix_pct.csv",
            "region_summary.csv",
        ],
        "notes": {
            "publications_column": "any-address regional presence within the attribution universe",
        },
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"publications={len(made_in)}")
    print(f"benefits={manifest['totals']['benefits']}")
    print(f"gains={manifest['totals']['gains']}")
    print(f"intra_gains={manifest['totals']['intra_gains']}")
    return EXIT_OK


def _config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regionflows",
        description="Citation-based accounting of knowledge flows between regions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--publications", help="publications JSONL path")
        p.add_argument("--citations", help="citations CSV path")
        p.add_argument("--gazetteer", help="gazetteer CSV path")
        p.add_argument("--scmap", help="subject-category map CSV path")
        p.add_argument("--outdir", help="output directory (default: out)")
        p.add_argument("--year-min", dest="year_min", type=int,
                       help="first year eligible for attribution")
        p.add_argument("--year-max", dest="year_max", type=int,
                       help="last year eligible for attribution")
        p.add_argument("--threshold", help="made-in share threshold (default 1/2)")
        p.add_argument("--dual-gain-weight", dest="dual_gain_weight",
                       choices=[flows.DUAL_GAIN_FULL, flows.DUAL_GAIN_HALF],
                       help="weight of gains from dual-produced publications (default full)")
        p.add_argument("--balassa-mode", dest="balassa_mode",
                       choices=[specialization.EXCLUDE_FOCAL, specialization.INCLUDE_FOCAL],
                       help="specialization reference sums (default exclude_focal)")
        p.add_argument("--gain-scope", dest="gain_scope",
                       choices=[specialization.SCOPE_ALL, specialization.SCOPE_EXTRA_ONLY],
                       help="gains entering the specialization tensors (default all)")
        p.add_argument("--domestic-country", dest="domestic_country",
                       help="ISO alpha-2 domestic country (default IT)")
        p.add_argument("--workers", type=int, help="flow-stage worker threads (default 1)")

    for name, help_text in [
        ("validate", "check corpus integrity and attributability"),
        ("assign", "classify each publication's region of production"),
        ("flows", "compute gains and the region-by-region flow matrix"),
        ("balance", "derive per-region flow balances"),
        ("pairwise", "bilateral per-category balances for two regions"),
        ("specialize", "outflow/inflow specialization index tables"),
        ("edges", "maximum-flow partner edges (Graphviz)"),
        ("synth", "generate a synthetic corpus with ground truth"),
        ("report", "full pipeline: summary, balances, matrix, manifest"),
    ]:
        p = sub.add_parser(name, help=help_text)
        add_common(p)
        if name == "flows":
            p.add_argument("--sc", help="restrict the matrix to one subject category")
        if name == "balance":
            p.add_argument("--by-sc", action="store_true", help="also write per-category balances")
        if name == "pairwise":
            p.add_argument("--region-x", required=True)
            p.add_argument("--region-y", required=True)
        if name == "synth":
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--n-pubs", type=int, default=200)
            p.add_argument("--n-regions", type=int, default=5)
            p.add_argument("--n-scs", type=int, default=8)
            p.add_argument("--citation-density", type=float, default=3.0)
            p.add_argument("--locality", type=float, default=0.5)
            p.add_argument("--multi-affiliation-prob", type=float, default=0.15)
            p.add_argument("--foreign-author-prob", type=float, default=0.1)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "assign":
            return cmd_assign(cfg)
        if args.command == "flows":
            return cmd_flows(cfg, sc=args.sc)
        if args.command == "balance":
            return cmd_balance(cfg, by_sc=args.by_sc)
        if args.command == "pairwise":
            return cmd_pairwise(cfg, args.region_x, args.region_y)
        if args.command == "specialize":
            return cmd_specialize(cfg)
        if args.command == "edges":
            return cmd_edges(cfg)
        if args.command == "synth":
            return cmd_synth(cfg, args)
        if args.command == "report":
            return cmd_report(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (corpus.CorpusFormatError, FileNotFoundError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
