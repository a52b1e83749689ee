"""Command-line entry points for the pipeline, benchmark, and service."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .config import AppConfig, ConfigError, index_base_path, load_config, with_overrides
from .corpus import load_corpus
from .engine import answer_query, build_index
from .errors import DocforgeError
from .evalkit import (
    evaluate_generation,
    evaluate_retrieval,
    load_grid,
    load_qa_set,
    run_benchmark,
)
from .reporting import write_report_bundle
from .vector_index import VectorIndex, index_file_paths

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); user errors are exit 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="docforge", description="Local RAG over technical documentation")
    parser.add_argument("--config", metavar="FILE", help="JSON config file")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--corpus", metavar="DIR", help="corpus directory override")
        p.add_argument("--index-dir", metavar="DIR", help="index directory override")
        p.add_argument("--strategy", metavar="S", help="fixed-<N> | paragraph | paragraph-context")
        p.add_argument("--translate", action="store_true", default=None,
                       help="translate German chunks before embedding")
        p.add_argument("--base-url", metavar="URL", help="model server base URL")

    p = sub.add_parser("ingest", help="validate the corpus and print stats")
    common(p)

    p = sub.add_parser("index", help="build and persist the vector index")
    common(p)

    p = sub.add_parser("query", help="answer one question against the built index")
    common(p)
    p.add_argument("question")
    p.add_argument("--k", type=int, help="chunks to retrieve")
    p.add_argument("--variant", help="prompt variant: k-N | k-T | k-S")

    p = sub.add_parser("eval-retrieval", help="recall@k / MRR@k over a QA set")
    common(p)
    p.add_argument("--qa", metavar="FILE", help="QA set (.qa.jsonl)")
    p.add_argument("--k", type=int)
    p.add_argument("--json", action="store_true", help="print the report as JSON")

    p = sub.add_parser("eval-generation", help="judged answer accuracy over a QA set")
    common(p)
    p.add_argument("--qa", metavar="FILE")
    p.add_argument("--k", type=int)
    p.add_argument("--variant", help="prompt variant: k-N | k-T | k-S")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="run a benchmark grid and write reports")
    common(p)
    p.add_argument("--qa", metavar="FILE", help="QA set (.qa.jsonl)")
    p.add_argument("--grid", metavar="FILE", required=True, help="grid config JSON")
    p.add_argument("--out", metavar="DIR", default="reports", help="output directory")

    p = sub.add_parser("serve", help="serve the query/context HTTP API")
    common(p)
    p.add_argument("--addr", metavar="HOST:PORT", help="bind address override")

    p = sub.add_parser("mock-serve", help="run the deterministic mock model server")
    p.add_argument("--port", type=int, default=11434)
    p.add_argument("--seed", type=int, default=0)

    return parser


def _resolve_config(args) -> AppConfig:
    cfg = load_config(args.config)
    return with_overrides(
        cfg,
        strategy=getattr(args, "strategy", None),
        translate=getattr(args, "translate", None),
        k=getattr(args, "k", None),
        variant=getattr(args, "variant", None),
        base_url=getattr(args, "base_url", None),
        corpus_dir=getattr(args, "corpus", None),
        index_dir=getattr(args, "index_dir", None),
    )


def _load_index(cfg: AppConfig) -> VectorIndex:
    manifest, _ = index_file_paths(index_base_path(cfg))
    if not manifest.exists():
        raise DocforgeError(f"index not found: {manifest} (run `docforge index` first)")
    return VectorIndex.load(manifest)


def cmd_ingest(args) -> int:
    cfg = _resolve_config(args)
    corpus = load_corpus(cfg.corpus_dir)
    stats = corpus.stats
    print(f"documents: {stats.total_docs} (en {stats.doc_counts['en']}, de {stats.doc_counts['de']})")
    print(f"pages: {stats.total_pages} (en {stats.page_counts['en']}, de {stats.page_counts['de']})")
    inferred = sum(1 for d in corpus.documents if d.language_inferred)
    if inferred:
        print(f"inferred languages: {inferred}")
    return EXIT_OK


def cmd_index(args) -> int:
    cfg = _resolve_config(args)
    corpus = load_corpus(cfg.corpus_dir)
    index = build_index(corpus, cfg.pipeline)
    manifest, vectors = index.save(index_base_path(cfg))
    print(f"indexed {len(index)} chunks ({index.metadata.strategy}, "
          f"translated={index.metadata.translated})")
    print(f"wrote {manifest}")
    print(f"wrote {vectors}")
    return EXIT_OK


def cmd_query(args) -> int:
    cfg = _resolve_config(args)
    corpus = load_corpus(cfg.corpus_dir)
    index = _load_index(cfg)
    bundle = answer_query(args.question, index, corpus, cfg.pipeline)
    print(json.dumps(asdict(bundle), indent=2, ensure_ascii=False))
    return EXIT_OK


def _require_qa(args, cfg: AppConfig) -> str:
    qa = args.qa or cfg.qa_path
    if not qa:
        raise DocforgeError("no QA set given (use --qa or set qa_path in the config)")
    return qa


def cmd_eval_retrieval(args) -> int:
    cfg = _resolve_config(args)
    qaset = load_qa_set(_require_qa(args, cfg))
    index = _load_index(cfg)
    label = f"{cfg.pipeline.strategy.label}|{'tr' if cfg.pipeline.translate_german else 'raw'}|k{cfg.pipeline.k}"
    report = evaluate_retrieval(qaset, index, cfg.pipeline, config_label=label)
    if args.json:
        print(json.dumps(asdict(report), indent=2))
    else:
        print(f"config: {report.config_label}")
        print(f"recall@{report.k}: {report.recall_at_k:.4f}")
        print(f"mrr@{report.k}: {report.mrr_at_k:.4f}")
        for lang, m in sorted(report.per_language.items()):
            print(f"  {lang}: recall {m.recall:.4f}, mrr {m.mrr:.4f}, n={m.n}")
        if report.failures:
            print(f"failures: {len(report.failures)}")
    return EXIT_OK


def cmd_eval_generation(args) -> int:
    cfg = _resolve_config(args)
    qaset = load_qa_set(_require_qa(args, cfg))
    corpus = load_corpus(cfg.corpus_dir)
    index = _load_index(cfg)
    label = f"{cfg.pipeline.strategy.label}|{'tr' if cfg.pipeline.translate_german else 'raw'}|k{cfg.pipeline.k}|{cfg.pipeline.prompt_variant.value}"
    report = evaluate_generation(qaset, index, corpus, cfg.pipeline, config_label=label)
    if args.json:
        print(json.dumps(asdict(report), indent=2))
    else:
        print(f"config: {report.config_label}")
        print(f"accuracy: {report.accuracy:.4f} over n={report.n}")
        conf = "absent" if report.mean_confidence is None else f"{report.mean_confidence:.4f}"
        print(f"mean confidence (yes only): {conf}")
        print(f"truncation escalations: {report.truncations}")
        if report.failures:
            print(f"failures: {len(report.failures)}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    qaset = load_qa_set(_require_qa(args, cfg))
    corpus = load_corpus(cfg.corpus_dir)
    grid = load_grid(args.grid, cfg.pipeline.endpoints, safe_num_ctx=cfg.safe_num_ctx)
    rows = run_benchmark(corpus, qaset, grid)
    written = write_report_bundle(rows, args.out)
    print(f"{len(rows)} grid rows")
    for path in written.values():
        print(f"wrote {path}")
    failed = [r for r in rows if r.error]
    if failed:
        print(f"{len(failed)} rows failed; see {written['table']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve

    cfg = _resolve_config(args)
    if args.addr:
        from dataclasses import replace

        cfg = replace(cfg, serve_addr=args.addr)
    try:
        serve(cfg)
    except OSError as exc:
        raise DocforgeError(f"cannot bind {cfg.serve_addr}: {exc}") from exc
    return EXIT_OK


def cmd_mock_serve(args) -> int:
    import time

    from http.server import ThreadingHTTPServer

    from .mockserver import MockModelServer, _Handler

    mock = MockModelServer(seed=args.seed)
    server = ThreadingHTTPServer(("127.0.0.1", args.port), _Handler)
    server.daemon_threads = True
    server.mock = mock  # type: ignore[attr-defined]
    print(f"mock model server on http://127.0.0.1:{args.port} (seed={args.seed})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


_HANDLERS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "query": cmd_query,
    "eval-retrieval": cmd_eval_retrieval,
    "eval-generation": cmd_eval_generation,
    "bench": cmd_bench,
    "serve": cmd_serve,
    "mock-serve": cmd_mock_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"docforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except (DocforgeError, OSError) as exc:
        print(f"docforge: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
