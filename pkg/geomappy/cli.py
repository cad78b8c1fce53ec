"""Command line front-end: ingest -> resolve -> report/render/factors/compare/regions.

Exit codes: 0 on success, 1 on input errors, 2 on internal errors. Errors are
written to stderr as a single JSON line.

Copyright (c) 2026 geomappy contributors
"""

import argparse
import contextlib
import json
import logging
import sys
from typing import IO, Iterator, List, Optional, Sequence

from . import __version__
from .config import RunConfig, Settings, load_settings
from .errors import ConfigError, GeoMapError, ParseError
from .models import models_v1 as models

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("ingest", "resolve", "report", "factors", "compare", "regions", "render")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage problems as `UsageError` instead of exiting with status 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@contextlib.contextmanager
def _open_in(path: str) -> Iterator[IO[str]]:
    if path == "-":
        yield sys.stdin
    else:
        with open(path, "r", encoding="utf-8") as f:
            yield f


@contextlib.contextmanager
def _open_out(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as f:
            yield f


def _dump(data, path: Optional[str]) -> None:
    with _open_out(path) as f:
        f.write(json.dumps(data, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def _int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{value}'")


# ---------------------------------------------------------------- commands


def cmd_ingest(args, settings: Settings) -> None:
    from .ingest import parse_conll, parse_links_jsonl, parse_qa_json, write_links_jsonl, write_units_jsonl

    RunConfig.validate_args(subcommand="ingest", inputs=[args.input])
    with _open_in(args.input) as f:
        if args.format == "conll":
            result = parse_conll(f, args.lang, args.corpus_id)
        elif args.format == "qa":
            result = parse_qa_json(f, args.text_field, args.lang, args.corpus_id, args.id_field, args.dedupe)
        else:
            result = parse_links_jsonl(f)

    with _open_out(args.out) as f:
        if args.format == "qa":
            write_units_jsonl(result.units, f)
        else:
            write_links_jsonl(result.mentions, f)
    if args.units_out and args.format != "qa":
        with _open_out(args.units_out) as f:
            write_units_jsonl(result.units, f)

    logger.info(
        f"ingested {len(result.units)} units, {len(result.mentions)} mentions "
        f"(warnings={result.warnings}, skipped={result.skipped}, rejected={result.rejected})"
    )


def _knowledge(args, settings: Settings):
    from .handlers.handler_v1 import KnowledgeBase
    from .resolver import load_registry

    if getattr(args, "remote", False):
        settings = settings.model_copy(update={"kb": settings.kb.model_copy(update={"remote": True})})
    kb = KnowledgeBase.from_settings(args.kb, settings)
    registry = load_registry(args.registry or settings.registry)
    return kb, registry


def _read_mentions(path: str, links: Optional[str] = None) -> List[models.LinkedMention]:
    from .ingest import merge_links, parse_links_jsonl

    with _open_in(path) as f:
        mentions = parse_links_jsonl(f, allow_empty=True).mentions
    if links:
        with _open_in(links) as f:
            mentions = merge_links(mentions, parse_links_jsonl(f).mentions)
    return mentions


def cmd_resolve(args, settings: Settings) -> None:
    from .resolver import build_dataset_map, write_dataset_map

    config = RunConfig.validate_args(
        subcommand="resolve",
        inputs=[args.input] + ([args.links] if args.links else []),
        kb=args.kb,
        registry=args.registry,
        top_k=args.top_k,
        workers=args.workers,
    )
    kb, registry = _knowledge(args, settings)
    mentions = _read_mentions(args.input, args.links)
    dataset_map = build_dataset_map(
        mentions,
        kb,
        registry,
        top_k=config.top_k,
        corpus_id=args.corpus_id,
        language=args.lang,
        workers=config.workers,
        progress=args.progress,
    )
    with _open_out(args.out) as f:
        write_dataset_map(dataset_map, f)
    if args.entities_out:
        qids = sorted({c.qid for m in mentions for c in m.candidates[: config.top_k]})
        kb.collection_df(qids).to_csv(args.entities_out, index=False)
        logger.info(f"wrote {len(qids)} candidate records to {args.entities_out}")


def _read_map(path: str) -> models.DatasetMap:
    from .resolver import read_dataset_map

    return read_dataset_map(path)


def cmd_report(args, settings: Settings) -> None:
    from .render import emit_report, write_report
    from .resolver import load_registry
    from .stats import load_profile

    config = RunConfig.validate_args(
        subcommand="report",
        inputs=[args.input],
        profile=args.profile,
        registry=args.registry,
        threshold=args.threshold,
        reproducible=args.reproducible,
    )
    dataset_map = _read_map(args.input)
    profile = load_profile(config.profile) if config.profile else None
    registry = load_registry(config.registry or settings.registry)
    report = emit_report(
        dataset_map,
        profile,
        registry,
        threshold=config.threshold,
        restricted_gini=args.restricted_gini,
        reproducible=config.reproducible,
    )
    with _open_out(args.out) as f:
        write_report(report, f)


def cmd_render(args, settings: Settings) -> None:
    from .render import emit_bars, emit_choropleth, load_geometry
    from .stats import load_profile, speaker_comparison

    config = RunConfig.validate_args(
        subcommand="render",
        inputs=[args.input] + ([args.geometry] if args.geometry else []),
        profile=args.profile,
        top_k=args.top_k,
    )
    dataset_map = _read_map(args.input)
    if args.out:
        geometry = load_geometry(args.geometry, settings.kb.cache_dir)
        with _open_out(args.out) as f:
            f.write(emit_choropleth(dataset_map, geometry, args.color_scale))
    if args.bars_out:
        if not config.profile:
            raise ConfigError("--bars-out needs --profile")
        comparison = speaker_comparison(dataset_map, load_profile(config.profile))
        with _open_out(args.bars_out) as f:
            f.write(emit_bars(comparison, config.top_k))


def cmd_factors(args, settings: Settings) -> None:
    from .factors import build_design, cross_validate, factor_sweep, load_factor_table, parse_features
    from .resolver import load_registry
    from .stats import load_profile

    if len(args.input) != len(args.profile):
        raise ConfigError("give one --profile per --in map")
    config = RunConfig.validate_args(
        subcommand="factors",
        inputs=list(args.input) + list(args.profile),
        factor_table=args.factor_table,
        registry=args.registry,
        folds=args.folds,
        seed=args.seed,
        workers=args.workers,
        features=[expr.strip() for expr in args.features.split(",")],
    )
    feature_sets = [parse_features(expr) for expr in config.features]
    table = load_factor_table(config.factor_table)
    registry = load_registry(config.registry or settings.registry)
    datasets = [(_read_map(m), load_profile(p)) for m, p in zip(args.input, args.profile)]

    if len(datasets) == 1 and len(feature_sets) == 1:
        dataset_map, profile = datasets[0]
        design = build_design(dataset_map, table, profile, feature_sets[0], args.target, registry)
        result = cross_validate(design.X, design.y, config.folds, config.seed, design.features, config.workers)
        output = result.model_dump()
        output["countries"] = design.countries
    else:
        sweep = factor_sweep(datasets, table, feature_sets, config.folds, config.seed, args.target, registry,
                             config.workers)
        output = json.loads(sweep.to_json(orient="records"))
    _dump(output, args.out)


def _ranking(path: str) -> List[str]:
    """A ranking file is either a JSON list of iso3 codes or a dataset map."""
    from .resolver import country_ranking

    with _open_in(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as ex:
            raise ParseError(f"invalid ranking {path}: {ex.msg}", offset=ex.pos)
    if isinstance(data, list):
        return [str(item) for item in data]
    return country_ranking(models.DatasetMap.from_dict(data))


def cmd_compare(args, settings: Settings) -> None:
    from . import consistency
    from .stats import load_profile

    inputs = [p for p in (args.a, args.b, args.pairs) if p]
    config = RunConfig.validate_args(subcommand="compare", inputs=inputs, p=args.p, k=args.k, profile=args.profile)
    ks = config.k

    def need(*names):
        missing = [n for n in names if not getattr(args, n)]
        if missing:
            raise ConfigError(f"--metric {args.metric} needs " + ", ".join(f"--{n}" for n in missing))

    if args.metric == "rbo":
        need("a", "b")
        values = consistency.rbo_profile(_ranking(args.a), _ranking(args.b), ks, config.p, args.variant)
        output = values[ks[0]] if len(ks) == 1 else {str(k): v for k, v in values.items()}
    elif args.metric == "agreement":
        need("a", "b")
        with _open_in(args.a) as fa, _open_in(args.b) as fb:
            run_a, run_b = consistency.read_run_jsonl(fa), consistency.read_run_jsonl(fb)
        results = consistency.agreement_profile(run_a, run_b, ks, args.denominator)
        output = {str(k): r.model_dump() for k, r in results.items()}
    elif args.metric == "el":
        need("pairs")
        with _open_in(args.pairs) as f:
            source, target = consistency.read_pairs_jsonl(f)
        results = consistency.el_consistency_profile(source, target, ks)
        output = {str(k): r.model_dump() for k, r in results.items()}
    elif args.metric == "prf":
        need("a", "b")
        with _open_in(args.a) as fa, _open_in(args.b) as fb:
            gold = consistency.read_label_sentences(fa)
            pred = consistency.read_label_sentences(fb)
        output = consistency.projection_prf(gold, pred).model_dump()
    else:
        need("a", "b")
        profile = load_profile(config.profile) if config.profile else None
        result = consistency.compare_maps(_read_map(args.a), _read_map(args.b), profile, ks, config.p, args.variant)
        output = result.model_dump()
        output["rbo"] = {str(k): v for k, v in result.rbo.items()}
    _dump(output, args.out)


def cmd_regions(args, settings: Settings) -> None:
    from .resolver import Resolver
    from .stats import item_regions, read_item_scores, region_performance, region_shares

    config = RunConfig.validate_args(
        subcommand="regions",
        inputs=[args.scores, args.input] + ([args.map] if args.map else []),
        kb=args.kb,
        registry=args.registry,
        top_k=args.top_k,
    )
    kb, registry = _knowledge(args, settings)
    resolver = Resolver(kb, registry)
    regions = item_regions(_read_mentions(args.input), resolver, config.top_k)
    breakdown = region_performance(read_item_scores(args.scores), regions, args.mode)

    output = breakdown.model_dump()
    if args.map:
        output["region_shares"] = region_shares(_read_map(args.map), registry)
    _dump(output, args.out)


# ------------------------------------------------------------------ parser


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="geomappy", description="Map NLP datasets onto countries.")
    parser.add_argument("--version", action="version", version=f"geomappy {__version__}")
    parser.add_argument("--config", help="settings file (see config.sample.json)")
    parser.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = parser.add_subparsers(dest="command", parser_class=ArgumentParser)

    p = sub.add_parser("ingest", help="parse a corpus into mentions (links-jsonl) or text units")
    p.add_argument("--format", choices=["conll", "qa", "links"], required=True)
    p.add_argument("--lang", default="und", help="language code of the corpus")
    p.add_argument("--corpus-id", default="corpus")
    p.add_argument("--in", dest="input", default="-", help="input file, - for stdin")
    p.add_argument("--out", default="-", help="output file, - for stdout")
    p.add_argument("--units-out", help="also write the text units (conll)")
    p.add_argument("--text-field", default="question", help="QA record field holding the text")
    p.add_argument("--id-field", default="id", help="QA record field holding the id")
    p.add_argument("--dedupe", action="store_true", help="skip repeated QA texts")
    p.set_defaults(func=cmd_ingest)

    def knowledge_flags(p):
        p.add_argument("--kb", help="knowledge snapshot (JSON-lines)")
        p.add_argument("--registry", help="country registry (defaults to the bundled one)")
        p.add_argument("--remote", action="store_true", help="fetch entities missing from the snapshot")
        p.add_argument("--top-k", type=int, default=1, help="candidates considered per mention")

    p = sub.add_parser("resolve", help="resolve mentions to a dataset map")
    knowledge_flags(p)
    p.add_argument("--in", dest="input", default="-", help="mentions (links-jsonl), - for stdin")
    p.add_argument("--links", help="linker output merged into span-only mentions")
    p.add_argument("--out", default="-", help="dataset map JSON, - for stdout")
    p.add_argument("--lang", default="und")
    p.add_argument("--corpus-id", default="corpus")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--progress", action="store_true")
    p.add_argument("--entities-out", help="CSV of the knowledge records behind the considered candidates")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("report", help="representativeness report of a dataset map")
    p.add_argument("--in", dest="input", required=True, help="dataset map JSON")
    p.add_argument("--profile", help="language profile JSON")
    p.add_argument("--registry")
    p.add_argument("--out", default="-")
    p.add_argument("--threshold", type=float, default=0.0, help="weight at or below which a country is unrepresented")
    p.add_argument("--restricted-gini", action="store_true", help="gini over the map's countries only")
    p.add_argument("--reproducible", action="store_true", help="omit generated_at")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("render", help="SVG choropleth and speaker bars")
    p.add_argument("--in", dest="input", required=True, help="dataset map JSON")
    p.add_argument("--geometry", help="GeoJSON outlines (downloads Natural Earth if omitted)")
    p.add_argument("--out", help="choropleth SVG")
    p.add_argument("--bars-out", help="bar chart SVG (needs --profile)")
    p.add_argument("--profile")
    p.add_argument("--color-scale", choices=["log", "linear"], default="log")
    p.add_argument("--top-k", type=int, default=10, help="countries in the bar chart")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("factors", help="cross-validated socioeconomic factor model")
    p.add_argument("--in", dest="input", nargs="+", required=True, help="dataset map JSON(s)")
    p.add_argument("--profile", nargs="+", required=True, help="one language profile per map")
    p.add_argument("--factor-table", required=True, help="factor CSV")
    p.add_argument("--features", default="all", help="e.g. geo+gdp; comma-separate several sets")
    p.add_argument("--target", choices=["log1p", "positive"], default="log1p")
    p.add_argument("--registry")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_factors)

    p = sub.add_parser("compare", help="compare entity-linking runs")
    p.add_argument("--metric", choices=["rbo", "agreement", "el", "prf", "maps"], required=True)
    p.add_argument("--a", help="first input (ranking, map, run or projected labels)")
    p.add_argument("--b", help="second input (ranking, map, run or predicted labels)")
    p.add_argument("--pairs", help="parallel pairs JSON-lines (el)")
    p.add_argument("--profile", help="language profile (maps)")
    p.add_argument("--k", type=_int_list, default=[1], help="depth(s), comma-separated")
    p.add_argument("--p", type=float, default=0.9, help="rbo persistence")
    p.add_argument("--variant", choices=["ext", "min"], default="ext")
    p.add_argument("--denominator", choices=["relaxed", "informed"], default="relaxed")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("regions", help="per-region score breakdown")
    knowledge_flags(p)
    p.add_argument("--scores", required=True, help="item scores JSON-lines")
    p.add_argument("--in", dest="input", required=True, help="mentions (links-jsonl) of the scored items")
    p.add_argument("--mode", choices=["all", "dominant"], default="all")
    p.add_argument("--map", help="training-set dataset map for region shares")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_regions)

    return parser


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Runs the cli and returns its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as ex:
        _error("UsageError", str(ex))
        return 1
    except SystemExit as ex:
        # --help / --version
        return int(ex.code or 0)

    if args.command is None:
        parser.print_usage(sys.stderr)
        _error("UsageError", f"expected one of: {', '.join(SUBCOMMANDS)}")
        return 1

    try:
        level = str(args.log_level).upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ConfigError(f"unknown log level: {args.log_level}")
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        settings = load_settings(args.config)
        args.func(args, settings)
    except (GeoMapError, OSError, ValueError) as ex:
        _error(type(ex).__name__, str(ex))
        return 1
    except Exception as ex:
        logger.exception("internal error")
        _error(type(ex).__name__, str(ex))
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
