"""Command-line entry point driving every workflow without the UI.

Subcommands: ingest, stats, extract, build-features, train, predict,
evaluate, synth, serve, relearn. Every subcommand accepts --config (flat
JSON file) and --seed; flags beat the file, the file beats built-ins. Exit
codes: 0 success, 1 runtime failure (one machine-parseable line on stderr),
2 usage errors (argparse). Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import features, learners, stp
from .config import effective_config, load_config
from .corpus import CorpusStore, write_documents_jsonl, write_registry_jsonl
from .errors import MailTriageError
from .evaluate import render_report, run_grid
from .learners import ClassifierSpec
from .stp import PipelineResources
from .synth import PRESETS, synth_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mailtriage",
        description="E-mail triage: shallow text processing plus ranked classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int, default=None, help="deterministic seed")
        return p

    p = common(sub.add_parser("ingest", help="load documents into the store"))
    p.add_argument("--store", default=None, help="store directory")
    p.add_argument("--input", required=True, help="documents file")
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--categories", help="registry JSONL to import first")

    p = common(sub.add_parser("stats", help="corpus statistics and coverage"))
    p.add_argument("--store", default=None)
    p.add_argument("--min-docs", type=int, default=None)
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = common(sub.add_parser("extract", help="run one preprocessing mode over a text"))
    p.add_argument("--mode", choices=list(stp.MODES), default=None)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", help="inline text")
    group.add_argument("--input", help="read the text from a file")

    p = common(sub.add_parser("build-features", help="build a relevancy vector from the store"))
    p.add_argument("--store", default=None)
    p.add_argument("--mode", choices=list(stp.MODES), default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--min-docs", type=int, default=None)
    p.add_argument("--out", required=True)

    p = common(sub.add_parser("train", help="train a model bundle from the store"))
    p.add_argument("--store", default=None)
    p.add_argument("--mode", choices=list(stp.MODES), default=None)
    p.add_argument("--family", choices=list(learners.FAMILIES), default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--min-docs", type=int, default=None)
    p.add_argument("--hyperparams", default=None, help="JSON object of overrides")
    p.add_argument("--out", default=None, help="bundle path (default: model_path)")

    p = common(sub.add_parser("predict", help="rank answers for a text with a trained bundle"))
    p.add_argument("--model", default=None, help="bundle path (default: model_path)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text")
    group.add_argument("--input")

    p = common(sub.add_parser("evaluate", help="cross-validated mode x family grid"))
    p.add_argument("--store", default=None, help="evaluate the store snapshot")
    p.add_argument("--preset", choices=sorted(PRESETS), help="evaluate a synthetic corpus")
    p.add_argument("--modes", default="morphana,heuristics,combined")
    p.add_argument("--families", default=",".join(learners.FAMILIES))
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--min-docs", type=int, default=None)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--format", choices=["text-table", "json", "csv"], default="text-table")

    p = common(sub.add_parser("synth", help="generate a synthetic corpus"))
    p.add_argument("--preset", choices=sorted(PRESETS), required=True)
    p.add_argument("--out", required=True, help="documents JSONL path")
    p.add_argument("--registry-out", help="registry JSONL path")

    p = common(sub.add_parser("serve", help="run the assist service"))
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--model", default=None)

    p = common(sub.add_parser("relearn", help="rebuild the bundle from the store"))
    p.add_argument("--store", default=None)
    p.add_argument("--model", default=None, help="bundle path (default: model_path)")
    p.add_argument("--mode", choices=list(stp.MODES), default=None)
    p.add_argument("--family", choices=list(learners.FAMILIES), default=None)
    p.add_argument("--min-docs", type=int, default=None)
    p.add_argument("--k", type=int, default=None)

    return parser


def _settings(args: argparse.Namespace) -> dict:
    flags = {
        "store_dir": getattr(args, "store", None),
        "model_path": getattr(args, "model", None),
        "mode": getattr(args, "mode", None),
        "family": getattr(args, "family", None),
        "min_docs": getattr(args, "min_docs", None),
        "k": getattr(args, "k", None),
        "seed": getattr(args, "seed", None),
        "n_folds": getattr(args, "folds", None),
        "host": getattr(args, "host", None),
        "port": getattr(args, "port", None),
    }
    return effective_config(load_config(args.config), flags)


def _read_text(args: argparse.Namespace) -> str:
    if args.text is not None:
        return args.text
    return Path(args.input).read_text(encoding="utf-8")


def _cmd_ingest(args) -> int:
    cfg = _settings(args)
    store = CorpusStore(cfg["store_dir"])
    if args.categories:
        n = store.load_categories(args.categories)
        print(f"categories: {n}", file=sys.stderr)
    report = store.ingest(args.input, format=args.format)
    for error in report.errors:
        print(f"line {error.line}: {error.message}", file=sys.stderr)
    print(f"accepted {report.accepted}")
    return 0


def _cmd_stats(args) -> int:
    cfg = _settings(args)
    store = CorpusStore(cfg["store_dir"])
    stats = store.stats(min_docs=cfg["min_docs"])
    if args.json:
        print(
            json.dumps(
                {
                    "total_docs": stats.total_docs,
                    "unlabeled": stats.unlabeled,
                    "min_docs": stats.min_docs,
                    "categories": len(stats.per_category),
                    "learnable": sorted(stats.learnable),
                    "coverage": stats.coverage,
                    "per_category": dict(sorted(stats.per_category.items())),
                },
                sort_keys=True,
            )
        )
    else:
        print(f"documents: {stats.total_docs} ({stats.unlabeled} unlabeled)")
        print(f"categories: {len(stats.per_category)}")
        print(f"learnable (>= {stats.min_docs} docs): {len(stats.learnable)}")
        print(f"coverage: {100 * stats.coverage:.1f}%")
    return 0


def _cmd_extract(args) -> int:
    cfg = _settings(args)
    result = stp.extract(_read_text(args), cfg["mode"], PipelineResources.default())
    print(f"mode: {result.mode}")
    print(f"fallback_used: {str(result.fallback_used).lower()}")
    for item in result.items:
        print(item)
    return 0


def _cmd_build_features(args) -> int:
    cfg = _settings(args)
    store = CorpusStore(cfg["store_dir"])
    snapshot = store.snapshot(min_docs=cfg["min_docs"])
    resources = PipelineResources.default()
    training = [
        (stp.extract(d.text, cfg["mode"], resources), d.category_id)
        for d in snapshot.documents
    ]
    rv = features.build_relevancy(training, k=cfg["k"])
    Path(args.out).write_bytes(features.rv_to_bytes(rv))
    print(f"features: {len(rv.features)}")
    print(f"fingerprint: {rv.fingerprint}")
    return 0


def _bundle_from_store(cfg: dict, hyperparams: dict, version: int):
    from .service import build_bundle

    store = CorpusStore(cfg["store_dir"])
    spec = ClassifierSpec(family=cfg["family"], hyperparams=hyperparams, seed=cfg["seed"])
    return build_bundle(
        store,
        mode=cfg["mode"],
        spec=spec,
        min_docs=cfg["min_docs"],
        k=cfg["k"],
        version=version,
    )


def _cmd_train(args) -> int:
    cfg = _settings(args)
    hyperparams = json.loads(args.hyperparams) if args.hyperparams else {}
    bundle = _bundle_from_store(cfg, hyperparams, version=1)
    out = args.out or cfg["model_path"]
    bundle.save(out)
    print(f"model: {out}")
    print(f"version: {bundle.version}")
    print(f"family: {bundle.model.spec.family}")
    print(f"features: {len(bundle.rv.features)}")
    return 0


def _cmd_relearn(args) -> int:
    from .service import ModelBundle

    cfg = _settings(args)
    path = Path(args.model or cfg["model_path"])
    old_version = 0
    if path.exists():
        old_version = ModelBundle.load(path).version
    bundle = _bundle_from_store(cfg, {}, version=old_version + 1)
    bundle.save(path)
    print(f"model: {path}")
    print(f"version: {bundle.version} (was {old_version})")
    return 0


def _cmd_predict(args) -> int:
    from .service import ModelBundle

    cfg = _settings(args)
    bundle = ModelBundle.load(args.model or cfg["model_path"])
    extraction = stp.extract(_read_text(args), bundle.mode, PipelineResources.default())
    bits = features.vectorize(extraction, bundle.rv)
    prediction = learners.predict(bundle.model, bits)
    for rank, (category, score) in enumerate(prediction.ranking[:5], start=1):
        print(f"{rank}\t{category}\t{score:.6g}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _settings(args)
    if (args.preset is None) == (args.store is None):
        print("error: usage: provide exactly one of --preset or --store", file=sys.stderr)
        return 2
    if args.preset:
        corpus = synth_corpus(args.preset, seed=cfg["seed"])
        docs = corpus.documents
    else:
        docs = CorpusStore(cfg["store_dir"]).documents()
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    specs = [ClassifierSpec(family=f, seed=cfg["seed"]) for f in families]
    report = run_grid(
        docs,
        modes,
        specs,
        n_folds=cfg["n_folds"],
        seed=cfg["seed"],
        k=cfg["k"],
        min_docs=cfg["min_docs"],
    )
    if args.out:
        Path(args.out).write_bytes(render_report(report, "json"))
        print(f"report: {args.out}", file=sys.stderr)
    sys.stdout.write(render_report(report, args.format).decode("utf-8"))
    return 0


def _cmd_synth(args) -> int:
    cfg = _settings(args)
    corpus = synth_corpus(args.preset, seed=cfg["seed"])
    n = write_documents_jsonl(corpus.documents, args.out)
    print(f"documents: {n}")
    if args.registry_out:
        m = write_registry_jsonl(corpus.categories, args.registry_out)
        print(f"categories: {m}")
    return 0


def _cmd_serve(args) -> int:  # pragma: no cover - blocking server loop
    from .service import ServiceConfig, run_server

    cfg = _settings(args)
    run_server(
        ServiceConfig(
            store_dir=cfg["store_dir"],
            model_path=cfg["model_path"],
            host=cfg["host"],
            port=cfg["port"],
            mode=cfg["mode"],
            family=cfg["family"],
            min_docs=cfg["min_docs"],
            k=cfg["k"],
            seed=cfg["seed"],
            console_dir=cfg.get("console_dir"),
            relearn_interval_seconds=cfg.get("relearn_interval_seconds"),
        )
    )
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "stats": _cmd_stats,
    "extract": _cmd_extract,
    "build-features": _cmd_build_features,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "synth": _cmd_synth,
    "serve": _cmd_serve,
    "relearn": _cmd_relearn,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MailTriageError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
