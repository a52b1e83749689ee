"""Application configuration: JSON file plus DOCFORGE_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .chunker import ChunkingStrategy
from .engine import DEFAULT_SAFE_NUM_CTX, PipelineConfig, PromptVariant
from .errors import DocforgeError
from .gateway import ModelEndpointConfig

ENV_PREFIX = "DOCFORGE_"


class ConfigError(DocforgeError):
    pass


@dataclass(frozen=True)
class AppConfig:
    corpus_dir: str = "corpus"
    index_dir: str = "index"
    qa_path: str | None = None
    pipeline: PipelineConfig = field(
        default_factory=lambda: PipelineConfig(strategy=ChunkingStrategy.fixed(800))
    )
    serve_addr: str = "127.0.0.1:8080"
    safe_num_ctx: int = DEFAULT_SAFE_NUM_CTX

    def __post_init__(self):
        parse_serve_addr(self.serve_addr)


def parse_serve_addr(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"serve_addr must be host:port, got {addr!r}")
    try:
        port_num = int(port)
    except ValueError:
        raise ConfigError(f"serve_addr port must be an integer, got {port!r}") from None
    if not 0 < port_num < 65536:
        raise ConfigError(f"serve_addr port out of range: {port_num}")
    return host, port_num


def index_name(strategy: ChunkingStrategy, translated: bool) -> str:
    return strategy.label + ("-translated" if translated else "")


def index_base_path(cfg: AppConfig) -> Path:
    return Path(cfg.index_dir) / index_name(cfg.pipeline.strategy, cfg.pipeline.translate_german)


def _as_bool(raw: str) -> bool:
    if raw.lower() in ("1", "true", "yes", "on"):
        return True
    if raw.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def load_config(path: str | Path | None = None, env: dict | None = None) -> AppConfig:
    """Resolve configuration: defaults <- JSON file <- DOCFORGE_* environment."""
    env = os.environ if env is None else env

    file_data: dict = {}
    if path is not None:
        try:
            file_data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(file_data, dict):
            raise ConfigError(f"{path}: top-level value must be an object")

    pipe_data = dict(file_data.get("pipeline", {}))
    ep_data = dict(pipe_data.get("endpoints", {}))

    def env_get(name: str):
        return env.get(ENV_PREFIX + name)

    def overlay(target: dict, key: str, env_name: str, convert=str):
        raw = env_get(env_name)
        if raw is not None:
            try:
                target[key] = convert(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{ENV_PREFIX}{env_name}: {exc}") from exc

    overlay(file_data, "corpus_dir", "CORPUS_DIR")
    overlay(file_data, "index_dir", "INDEX_DIR")
    overlay(file_data, "qa_path", "QA_PATH")
    overlay(file_data, "serve_addr", "SERVE_ADDR")
    overlay(file_data, "safe_num_ctx", "SAFE_NUM_CTX", int)
    overlay(pipe_data, "strategy", "STRATEGY")
    overlay(pipe_data, "translate_german", "TRANSLATE", _as_bool)
    overlay(pipe_data, "k", "K", int)
    overlay(pipe_data, "prompt_variant", "VARIANT")
    overlay(ep_data, "base_url", "BASE_URL")
    overlay(ep_data, "embed_model", "EMBED_MODEL")
    overlay(ep_data, "generate_model", "GENERATE_MODEL")
    overlay(ep_data, "translate_model", "TRANSLATE_MODEL")
    overlay(ep_data, "judge_model", "JUDGE_MODEL")
    overlay(ep_data, "num_ctx", "NUM_CTX", int)
    overlay(ep_data, "request_timeout", "REQUEST_TIMEOUT", float)
    overlay(ep_data, "max_retries", "MAX_RETRIES", int)

    try:
        endpoints = ModelEndpointConfig(**ep_data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"endpoints: {exc}") from exc

    safe_num_ctx = int(file_data.get("safe_num_ctx", DEFAULT_SAFE_NUM_CTX))
    try:
        pipeline = PipelineConfig(
            strategy=ChunkingStrategy.parse(pipe_data.get("strategy", "fixed-800")),
            translate_german=bool(pipe_data.get("translate_german", False)),
            k=int(pipe_data.get("k", 5)),
            prompt_variant=PromptVariant.parse(pipe_data.get("prompt_variant", "k-N")),
            endpoints=endpoints,
            safe_num_ctx=safe_num_ctx,
        )
    except ValueError as exc:
        raise ConfigError(f"pipeline: {exc}") from exc

    try:
        return AppConfig(
            corpus_dir=str(file_data.get("corpus_dir", "corpus")),
            index_dir=str(file_data.get("index_dir", "index")),
            qa_path=file_data.get("qa_path"),
            pipeline=pipeline,
            serve_addr=str(file_data.get("serve_addr", "127.0.0.1:8080")),
            safe_num_ctx=safe_num_ctx,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def with_overrides(
    cfg: AppConfig,
    strategy: str | None = None,
    translate: bool | None = None,
    k: int | None = None,
    variant: str | None = None,
    base_url: str | None = None,
    corpus_dir: str | None = None,
    index_dir: str | None = None,
) -> AppConfig:
    """Apply CLI flag overrides on top of a resolved config."""
    pipeline = cfg.pipeline
    endpoints = pipeline.endpoints
    if base_url is not None:
        endpoints = replace(endpoints, base_url=base_url)
    changes: dict = {"endpoints": endpoints}
    if strategy is not None:
        changes["strategy"] = ChunkingStrategy.parse(strategy)
    if translate is not None:
        changes["translate_german"] = translate
    if k is not None:
        changes["k"] = k
    if variant is not None:
        changes["prompt_variant"] = PromptVariant.parse(variant)
    try:
        pipeline = replace(pipeline, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return replace(
        cfg,
        pipeline=pipeline,
        corpus_dir=corpus_dir if corpus_dir is not None else cfg.corpus_dir,
        index_dir=index_dir if index_dir is not None else cfg.index_dir,
    )
