"""Server configuration: one JSON file, validated eagerly at startup.

Relative paths inside the file resolve against the config file's directory.
Credentials never live in the file itself, only names of environment
variables that hold them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .embedding import EmbeddingProviderConfig
from .errors import ConfigError
from .generation import LlmProviderConfig
from .retrieval import FusionConfig, LiveWebClient, StubWebClient


@dataclass(frozen=True)
class WebClientConfig:
    provider: str = "stub"  # "stub" | "live"
    fixture: Optional[str] = None
    endpoint: Optional[str] = None
    api_key_env: Optional[str] = None
    timeout_ms: int = 4000
    max_results: int = 5

    def __post_init__(self) -> None:
        if self.provider not in ("stub", "live"):
            raise ConfigError(f"web.provider must be 'stub' or 'live', got {self.provider!r}")
        if self.provider == "live" and not self.endpoint:
            raise ConfigError("web.endpoint is required for the live web provider")


def make_web_client(cfg: WebClientConfig, base_dir: Path, clock: Callable[[], str]):
    if cfg.provider == "stub":
        if cfg.fixture:
            path = Path(cfg.fixture)
            if not path.is_absolute():
                path = base_dir / path
            return StubWebClient.from_file(path, clock=clock)
        return StubWebClient([], clock=clock)
    return LiveWebClient(cfg.endpoint, cfg.api_key_env, cfg.timeout_ms, clock=clock)


@dataclass
class ServerConfig:
    snapshot: Path
    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8080
    token_budget: int = 2048
    recall_k: int = 3
    embedding: EmbeddingProviderConfig = field(default_factory=EmbeddingProviderConfig)
    generation_llm: LlmProviderConfig = field(default_factory=LlmProviderConfig)
    safety_llm: LlmProviderConfig = field(default_factory=LlmProviderConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    web: WebClientConfig = field(default_factory=WebClientConfig)
    deterministic: bool = False
    queue_policy: str = "queue"  # "queue" | "reject-busy"
    quarantine: bool = False
    ui_static_dir: Optional[Path] = None
    base_dir: Path = Path(".")


def _require(raw: dict, key: str, path: Path):
    if key not in raw:
        raise ConfigError(f"config {path}: missing required key {key!r}")
    return raw[key]


def _llm_config(raw: dict, role: str, path: Path) -> LlmProviderConfig:
    try:
        return LlmProviderConfig(
            provider_kind=raw.get("provider", "scripted-stub"),
            model=raw.get("model"),
            endpoint=raw.get("endpoint"),
            api_key_env=raw.get("api_key_env"),
            temperature=float(raw.get("temperature", 0.2)),
            max_output_tokens=int(raw.get("max_output_tokens", 512)),
            script_path=raw.get("script"),
        )
    except ConfigError as exc:
        raise ConfigError(f"config {path}: llm.{role}: {exc}") from exc


def load_config(path: str | Path) -> ServerConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    base_dir = path.parent.resolve()

    def resolve(p: str) -> Path:
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base_dir / candidate

    bind = raw.get("bind", {})
    emb_raw = raw.get("embedding", {})
    try:
        embedding = EmbeddingProviderConfig(
            provider_kind=emb_raw.get("provider", "stub"),
            dim=int(emb_raw.get("dim", 64)),
            endpoint=emb_raw.get("endpoint"),
            api_key_env=emb_raw.get("api_key_env"),
            timeout_ms=int(emb_raw.get("timeout_ms", 5000)),
        )
    except ConfigError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc

    llm_raw = raw.get("llm", {})
    fusion_raw = raw.get("fusion", {})
    try:
        fusion = FusionConfig(
            pool_per_arm=int(fusion_raw.get("pool_per_arm", 10)),
            rrf_k=float(fusion_raw.get("rrf_k", 60.0)),
            tau_dense=float(fusion_raw.get("tau_dense", 0.35)),
            final_k=int(fusion_raw.get("final_k", 5)),
        )
    except Exception as exc:
        raise ConfigError(f"config {path}: fusion: {exc}") from exc

    web_raw = raw.get("web", {})
    try:
        web = WebClientConfig(
            provider=web_raw.get("provider", "stub"),
            fixture=web_raw.get("fixture"),
            endpoint=web_raw.get("endpoint"),
            api_key_env=web_raw.get("api_key_env"),
            timeout_ms=int(web_raw.get("timeout_ms", 4000)),
            max_results=int(web_raw.get("max_results", 5)),
        )
    except ConfigError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc

    runtime_raw = raw.get("runtime", {})
    queue_policy = runtime_raw.get("queue_policy", "queue")
    if queue_policy not in ("queue", "reject-busy"):
        raise ConfigError(f"config {path}: runtime.queue_policy must be 'queue' or 'reject-busy'")

    token_budget = int(raw.get("token_budget", 2048))
    if token_budget < 16:
        raise ConfigError(f"config {path}: token_budget must be >= 16, got {token_budget}")

    ui_raw = raw.get("ui", {})
    ui_static = ui_raw.get("static_dir")

    return ServerConfig(
        snapshot=resolve(_require(raw, "snapshot", path)),
        data_dir=resolve(_require(raw, "data_dir", path)),
        host=bind.get("host", "127.0.0.1"),
        port=int(bind.get("port", 8080)),
        token_budget=token_budget,
        recall_k=int(raw.get("recall_k", 3)),
        embedding=embedding,
        generation_llm=_llm_config(llm_raw.get("generation", {}), "generation", path),
        safety_llm=_llm_config(llm_raw.get("safety", {}), "safety", path),
        fusion=fusion,
        web=web,
        deterministic=bool(runtime_raw.get("deterministic", False)),
        queue_policy=queue_policy,
        quarantine=bool(raw.get("quarantine", False)),
        ui_static_dir=resolve(ui_static) if ui_static else None,
        base_dir=base_dir,
    )
