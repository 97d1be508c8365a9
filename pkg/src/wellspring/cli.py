"""Command line entry point: ingest, serve, eval."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import load_config, make_web_client
from .corpus import build_corpus, load_manifest
from .embedding import EmbeddingProviderConfig, make_provider
from .errors import WellspringError
from .evaluation import (
    load_qa_dataset,
    make_generation_modes,
    make_retrieval_methods,
    run_generation_eval,
    run_retrieval_eval,
)
from .index import load_snapshot, save_snapshot
from .retrieval import FusionConfig, StubWebClient
from .runtime import SystemClock


def _cmd_ingest(args) -> int:
    manifest = load_manifest(args.manifest)
    provider_config = EmbeddingProviderConfig(
        provider_kind=args.embedding_provider,
        dim=args.embedding_dim,
        endpoint=args.embedding_endpoint,
        api_key_env=args.embedding_api_key_env,
        timeout_ms=args.embedding_timeout_ms,
    )
    provider = make_provider(provider_config)
    pairs = build_corpus(manifest.documents, manifest.chunking, provider)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshot_path = out_dir / "index.json"
    embedding_meta = {"provider": provider_config.provider_kind, "dim": provider_config.dim}
    if provider_config.endpoint:
        embedding_meta["endpoint"] = provider_config.endpoint
    digest = save_snapshot(snapshot_path, manifest.documents, pairs, manifest.chunking, embedding_meta)
    print(f"ingested {len(manifest.documents)} documents into {len(pairs)} chunks")
    print(f"snapshot written to {snapshot_path} (sha256 {digest[:16]})")
    return 0


def _cmd_serve(args) -> int:
    config = load_config(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    from .service import create_app

    app = create_app(config)
    import uvicorn

    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _parse_ks(raw: str) -> list[int]:
    return [int(part) for part in raw.split(",") if part.strip()]


def _cmd_eval_retrieval(args) -> int:
    kb = load_snapshot(args.snapshot)
    meta = kb.embedding_meta
    provider = make_provider(
        EmbeddingProviderConfig(
            provider_kind=meta.get("provider", "stub"),
            dim=int(meta.get("dim", 64)),
            endpoint=meta.get("endpoint"),
        )
    )
    web_client = (
        StubWebClient.from_file(args.web_fixture, clock=SystemClock())
        if args.web_fixture
        else StubWebClient([])
    )
    fusion = FusionConfig(pool_per_arm=args.pool_per_arm, tau_dense=args.tau_dense)
    dataset = load_qa_dataset(args.dataset)
    methods = make_retrieval_methods(kb, provider, web_client, fusion)
    wanted = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in wanted if m not in methods]
    if unknown:
        print(f"error: unknown methods {unknown}; available: {sorted(methods)}", file=sys.stderr)
        return 1
    report = run_retrieval_eval(
        dataset,
        {name: methods[name] for name in wanted},
        ks=_parse_ks(args.k),
        known_chunk_ids=set(kb.chunks),
        dataset_id=Path(args.dataset).name,
        config={"ks": _parse_ks(args.k), "methods": wanted, "snapshot_hash": kb.content_hash},
    )
    print(report.to_table())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        print(f"report written to {args.out}")
    return 0


def _cmd_eval_generation(args) -> int:
    config = load_config(args.config)
    from .service import build_engine

    engine, _store, _info = build_engine(config)
    dataset = load_qa_dataset(args.dataset)
    wanted = [m.strip() for m in args.modes.split(",") if m.strip()]
    modes = make_generation_modes(engine, wanted)
    report = run_generation_eval(
        dataset,
        modes,
        engine.embed_provider,
        dataset_id=Path(args.dataset).name,
        config={"modes": wanted, "snapshot_hash": engine.kb.content_hash},
    )
    print(report.to_table())
    if report.failed_examples:
        print(f"note: {report.failed_examples} example evaluations failed and were excluded")
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        print(f"report written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wellspring",
        description="Knowledge-grounded wellbeing chat service: ingest a corpus, serve the API, run evaluations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="chunk and embed a corpus manifest into an index snapshot")
    ingest.add_argument("--manifest", required=True, help="path to the corpus manifest JSON")
    ingest.add_argument("--out", required=True, help="output directory for the snapshot")
    ingest.add_argument("--embedding-provider", default="stub", choices=["stub", "remote"])
    ingest.add_argument("--embedding-dim", type=int, default=64)
    ingest.add_argument("--embedding-endpoint", default=None)
    ingest.add_argument("--embedding-api-key-env", default=None)
    ingest.add_argument("--embedding-timeout-ms", type=int, default=5000)
    ingest.set_defaults(func=_cmd_ingest)

    serve = sub.add_parser("serve", help="serve the chat API from a snapshot")
    serve.add_argument("--config", required=True, help="path to the server config JSON")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(func=_cmd_serve)

    eval_parser = sub.add_parser("eval", help="run the evaluation harness")
    eval_sub = eval_parser.add_subparsers(dest="eval_kind", required=True)

    eval_ret = eval_sub.add_parser("retrieval", help="precision/recall@k per retrieval method")
    eval_ret.add_argument("--snapshot", required=True, help="index snapshot path")
    eval_ret.add_argument("--dataset", required=True, help="JSONL QA dataset")
    eval_ret.add_argument("--k", default="3,5", help="comma-separated cutoffs (default 3,5)")
    eval_ret.add_argument("--methods", default="sparse,dense,hybrid")
    eval_ret.add_argument("--pool-per-arm", type=int, default=10)
    eval_ret.add_argument("--tau-dense", type=float, default=0.35)
    eval_ret.add_argument("--web-fixture", default=None, help="stub web results fixture JSON")
    eval_ret.add_argument("--out", default=None, help="write the JSON report here")
    eval_ret.set_defaults(func=_cmd_eval_retrieval)

    eval_gen = eval_sub.add_parser("generation", help="token F1 / ROUGE-L / semantic-sim per pipeline mode")
    eval_gen.add_argument("--config", required=True, help="server config JSON (stub providers work offline)")
    eval_gen.add_argument("--dataset", required=True, help="JSONL QA dataset")
    eval_gen.add_argument("--modes", default="rag,zero_shot")
    eval_gen.add_argument("--out", default=None, help="write the JSON report here")
    eval_gen.set_defaults(func=_cmd_eval_generation)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except WellspringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
