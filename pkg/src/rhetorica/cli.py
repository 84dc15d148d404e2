"""Command-line entry point: ``rhetorica <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io as rio
from . import pipeline as pl

log = logging.getLogger("rhetorica")


def _parse_grid(text: str) -> list[int]:
    """``3:70`` (inclusive range), ``3:70:5`` (with step) or ``2,4,8``."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(lo, hi + 1, step))
    return [int(p) for p in text.split(",") if p]


def _floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p]


def cmd_ingest(args) -> int:
    from .ingest import ingest

    rows, report = ingest(args.input, args.include_retweets)
    rio.write_jsonl(args.output, rows)
    if args.report:
        rio.atomic_write(args.report, (json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n").encode())
    log.info("kept %d of %d records", report.kept, report.total_in)
    return 0


def cmd_extract(args) -> int:
    from datetime import date

    from .extract import compile_patterns, extract_text, is_nodeal_cause
    from .lexicon import default_lexicon, load_lexicon

    lex = load_lexicon(args.lexicon) if args.lexicon else default_lexicon()
    pats = compile_patterns(lex)
    if args.dump_patterns:
        for name, rx in pats.dump().items():
            print(f"{name}\t{rx}")
        if not args.input:
            return 0
    if not args.input or not args.output:
        log.error("extract needs --input and --output")
        return 2
    out = []
    for tw in rio.read_jsonl(args.input):
        for rel in extract_text(tw["text"], tw["id"], lex, pats):
            if args.nodeal_only and not is_nodeal_cause(rel.cause, pats):
                continue
            rel.faction = tw.get("faction")
            rel.day = date.fromisoformat(tw["day"]) if tw.get("day") else None
            out.append(rel.to_dict())
    rio.write_jsonl(args.output, out)
    log.info("wrote %d relations", len(out))
    return 0


def cmd_prep(args) -> int:
    from .extract import RelationTriplet
    from .prep import build_design, build_matrix, effect_documents, load_stopwords

    triplets = [RelationTriplet.from_dict(d) for d in rio.read_jsonl(args.relations)]
    if not triplets:
        log.error("empty corpus")
        return 1
    docs = effect_documents(triplets, load_stopwords(args.stopwords), not args.bigrams_before_removal)
    vocab, cm = build_matrix(docs, args.min_count, [t.rel_id for t in triplets])
    keep = set(cm.doc_ids)
    kept = [t for t in triplets if t.rel_id in keep]
    design = build_design(kept, args.spline_df)
    pl.save_corpus(args.out, vocab, cm, design, kept)
    log.info("corpus: %d documents, %d tokens", len(kept), len(vocab))
    return 0


def _stm_config(args, K):
    from .stm import StmConfig

    return StmConfig(K=K, max_em_iters=args.max_iters, em_tol=args.tol, init=args.init,
                     init_seed=pl.stage_seed(args.seed, "fit"), threads=args.threads)


def cmd_fit(args) -> int:
    from .stm import fit

    cb = pl.load_corpus_bundle(args.corpus)
    model = fit(cb.counts, cb.X, cb.Y, _stm_config(args, args.k), cb.y_levels)
    model.save(args.out)
    log.info("bound %.6g after %d iterations", model.bound_trace[-1], len(model.bound_trace))
    return 0


def cmd_select_k(args) -> int:
    from .stm import select_k

    cb = pl.load_corpus_bundle(args.corpus)
    grid = _parse_grid(args.grid)
    res = select_k(cb.counts, cb.X, cb.Y, grid, _stm_config(args, max(grid[0], 2)),
                   replications=args.reps, heldout_fraction=args.heldout,
                   seed=pl.stage_seed(args.seed, "select-k"), y_levels=cb.y_levels)
    rio.write_csv(args.out, ["K", "mean_bound", "mean_heldout", "n_ok"], res.rows())
    log.info("best K by heldout likelihood: %s", res.best_k())
    return 0


def cmd_effects(args) -> int:
    from .effects import effects_rows, estimate_effects, type_topics
    from .stm import StmModel

    cb = pl.load_corpus_bundle(args.corpus)
    model = StmModel.load(args.model)
    N = np.asarray(cb.counts.sum(axis=1)).ravel()
    eff = estimate_effects(model, cb.X, cb.columns, N, args.draws, pl.stage_seed(args.seed, "effects"))
    header, rows = effects_rows(eff, type_topics(eff, args.alpha))
    rio.write_csv(args.out, header, rows)
    return 0


def cmd_corrnet(args) -> int:
    from .stm import StmModel

    thresholds = _floats(args.thresholds)
    if list(thresholds) != sorted(thresholds, reverse=True) or any(not 0 < t <= 1 for t in thresholds):
        log.error("thresholds must be descending and lie in (0, 1]")
        return 2
    cb = pl.load_corpus_bundle(args.corpus)
    model = StmModel.load(args.model)
    pl.write_corrnet(model, cb.X, rio.read_csv(args.effects), args.out_dir, thresholds, args.method,
                     args.draws, args.mb_alpha, pl.stage_seed(args.seed, "corrnet"))
    return 0


def cmd_narrative(args) -> int:
    from .narrative import build_narrative, export_narrative
    from .stm import StmModel

    cb = pl.load_corpus_bundle(args.corpus)
    model = StmModel.load(args.model)
    g = build_narrative(model, cb.vocab, args.topic, args.percentile, literal=args.literal,
                        value_based=args.by_value)
    export_narrative(g, args.out)
    return 0


def _series(args):
    from .dynamics import build_series
    from .stm import StmModel

    cb = pl.load_corpus_bundle(args.corpus)
    model = StmModel.load(args.model)
    return build_series(model.theta, cb.days, cb.factions)


def cmd_leadfollow(args) -> int:
    rows = pl.leadfollow_rows(_series(args), args.window, args.max_lag, args.shift)
    rio.write_csv(args.out, pl.LEADFOLLOW_HEADER, rows)
    return 0


def cmd_movers(args) -> int:
    rio.write_csv(args.out, pl.MOVERS_HEADER, pl.movers_rows(_series(args), args.top_n))
    return 0


def _load_config(args) -> pl.PipelineConfig:
    cfg = pl.PipelineConfig.from_toml(args.config)
    if args.seed_given:
        cfg.seed = args.seed
    if args.threads_given:
        cfg.threads = args.threads
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args)
    try:
        manifest = pl.run_pipeline(cfg, force=args.force)
    except ValueError as exc:
        log.error("%s", exc)
        return 1
    log.info("pipeline complete: %d stages", len(manifest["stages"]))
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = _load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"config unreadable: {exc}")
        return 1
    problems = pl.validate(cfg)
    for p in problems:
        print(p)
    return 1 if problems else 0


def cmd_fixture(args) -> int:
    from .synth import generate_tweets

    rio.write_jsonl(args.out, generate_tweets(args.n, args.seed))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rhetorica", description="Causal-argument topic pipeline.")
    p.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="load, filter and label a tweet JSONL file")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--include-retweets", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("extract", help="extract causal relations")
    s.add_argument("--input")
    s.add_argument("--output")
    s.add_argument("--lexicon")
    s.add_argument("--nodeal-only", action="store_true")
    s.add_argument("--dump-patterns", action="store_true")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("prep", help="build the document-term matrix and covariates")
    s.add_argument("--relations", required=True)
    s.add_argument("--stopwords")
    s.add_argument("--min-count", type=int, default=10)
    s.add_argument("--spline-df", type=int, default=10)
    s.add_argument("--bigrams-before-removal", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_prep)

    def stm_args(s):
        s.add_argument("--corpus", required=True)
        s.add_argument("--max-iters", type=int, default=500)
        s.add_argument("--tol", type=float, default=1e-5)
        s.add_argument("--init", choices=("spectral", "random"), default="spectral")

    s = sub.add_parser("fit", help="fit a structural topic model")
    stm_args(s)
    s.add_argument("--k", type=int, default=38)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("select-k", help="heldout-likelihood grid over K")
    stm_args(s)
    s.add_argument("--grid", default="3:70")
    s.add_argument("--reps", type=int, default=50)
    s.add_argument("--heldout", type=float, default=0.25)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select_k)

    s = sub.add_parser("effects", help="covariate effects and topic labels")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--alpha", type=float, default=0.01)
    s.add_argument("--draws", type=int, default=25)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_effects)

    s = sub.add_parser("corrnet", help="sparse topic correlation networks")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--effects", required=True)
    s.add_argument("--thresholds", default="0.14,0.10,0.05")
    s.add_argument("--method", choices=("montecarlo", "logit"), default="montecarlo")
    s.add_argument("--draws", type=int, default=10_000)
    s.add_argument("--mb-alpha", type=float, default=0.05)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_corrnet)

    s = sub.add_parser("narrative", help="phrase network for one topic")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--topic", type=int, required=True)
    s.add_argument("--percentile", type=float, default=0.80)
    s.add_argument("--literal", action="store_true")
    s.add_argument("--by-value", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_narrative)

    s = sub.add_parser("leadfollow", help="Brexiteer/Remainer lead-follow index")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--window", type=int, default=30)
    s.add_argument("--max-lag", type=int, default=6)
    s.add_argument("--shift", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_leadfollow)

    s = sub.add_parser("movers", help="weekly largest topic changes per faction")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--top-n", type=int, default=3)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_movers)

    s = sub.add_parser("run", help="run the full pipeline from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--force", action="store_true", help="ignore the manifest and rerun everything")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("validate", help="check a config file")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("fixture", help="write a synthetic tweet corpus")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fixture)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    args.threads_given = args.threads is not None
    args.seed = 0 if args.seed is None else args.seed
    args.threads = 1 if args.threads is None else args.threads
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
