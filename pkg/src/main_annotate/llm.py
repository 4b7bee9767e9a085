"""Chat-completion client for OpenAI-compatible endpoints.

Covers what batch annotation actually needs: plain single-message requests,
bounded retries with exponential backoff, bounded concurrency with
order-preserving results, and an exact decimal cost ledger.
"""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable, Sequence

import requests
import tomli

from .errors import (
    AuthError,
    ConfigError,
    MalformedResponse,
    RequestRejected,
    TransientExhausted,
)

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})
_BACKOFF_BASE_SECONDS = 1.0
_BACKOFF_FACTOR = 2.0
_JITTER_FRACTION = 0.1

_CENT = Decimal("0.0001")


@dataclass(frozen=True)
class ModelConfig:
    profile_name: str
    model_name: str
    base_url: str
    api_key_env: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 4096
    request_timeout: float = 120.0
    max_retries: int = 5
    max_in_flight: int = 4
    price_per_1k_prompt_tokens: Decimal = Decimal("0")
    price_per_1k_completion_tokens: Decimal = Decimal("0")
    currency_label: str = "¥"
    prompt_language: str = "zh"

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ConfigError(f"profile {self.profile_name!r}: base_url is required")
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise ConfigError(
                f"profile {self.profile_name!r}: bad retry/concurrency limits"
            )

    def api_key(self) -> str | None:
        """Resolve the key now so a missing variable fails before any request."""
        if not self.api_key_env:
            return None
        value = os.environ.get(self.api_key_env, "")
        if not value:
            raise ConfigError(
                f"profile {self.profile_name!r}: environment variable "
                f"{self.api_key_env} is not set"
            )
        return value


_PROFILE_FIELDS = {
    "model_name": str,
    "base_url": str,
    "api_key_env": str,
    "temperature": float,
    "max_output_tokens": int,
    "request_timeout": float,
    "max_retries": int,
    "max_in_flight": int,
    "currency_label": str,
    "prompt_language": str,
}
_PRICE_FIELDS = ("price_per_1k_prompt_tokens", "price_per_1k_completion_tokens")


def load_profiles(path: Path) -> dict[str, ModelConfig]:
    """Model profiles from the [models.*] tables of a TOML config file,
    with optional top-level [defaults] merged into each."""
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"model config not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    tables = doc.get("models")
    if not isinstance(tables, dict):
        raise ConfigError(f"{path}: missing [models.<profile>] tables")
    defaults = doc.get("defaults", {})
    profiles: dict[str, ModelConfig] = {}
    for name, table in tables.items():
        if not isinstance(table, dict):
            raise ConfigError(f"{path}: [{name}] must be a table")
        merged = {**defaults, **table}
        kwargs: dict = {"profile_name": name}
        for key, value in merged.items():
            if key in _PRICE_FIELDS:
                # via str so TOML floats like 0.00206 stay exact
                kwargs[key] = Decimal(str(value))
            elif key in _PROFILE_FIELDS:
                kwargs[key] = _PROFILE_FIELDS[key](value)
            else:
                raise ConfigError(f"{path}: [{name}] unknown key {key!r}")
        if "model_name" not in kwargs:
            kwargs["model_name"] = name
        profiles[name] = ModelConfig(**kwargs)
    if not profiles:
        raise ConfigError(f"{path}: no model profiles defined")
    return profiles


def compute_cost(cfg: ModelConfig, prompt_tokens: int, completion_tokens: int) -> Decimal:
    cost = (
        Decimal(prompt_tokens) * cfg.price_per_1k_prompt_tokens
        + Decimal(completion_tokens) * cfg.price_per_1k_completion_tokens
    ) / 1000
    return cost.quantize(_CENT, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class UsageRecord:
    narrative_id: str
    model_name: str
    prompt_tokens: int
    completion_tokens: int
    wall_ms: int
    attempts: int
    cost: Decimal

    def __post_init__(self) -> None:
        assert self.prompt_tokens >= 0 and self.completion_tokens >= 0
        assert self.attempts >= 1

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class CompletionResult:
    narrative_id: str
    text: str
    usage: UsageRecord


def _backoff_delay(attempt: int, rng: random.Random) -> float:
    base = _BACKOFF_BASE_SECONDS * (_BACKOFF_FACTOR ** attempt)
    return base + rng.uniform(0.0, _JITTER_FRACTION * base)


def complete(
    cfg: ModelConfig,
    prompt: str,
    *,
    narrative_id: str = "",
    session: requests.Session | None = None,
    sleeper: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> CompletionResult:
    """One annotation request; retries transient failures, surfaces the rest.

    Retryable: HTTP 429 and 5xx, timeouts, connection errors.  Other 4xx are
    permanent for this prompt and raise immediately (401/403 as AuthError).
    """
    rng = rng or random.Random()
    key = cfg.api_key()
    headers = {"Content-Type": "application/json"}
    if key:
        headers["Authorization"] = f"Bearer {key}"
    body = {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
    }
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    post = (session or requests).post

    start = time.monotonic()
    last_reason = ""
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            sleeper(_backoff_delay(attempt - 1, rng))
        try:
            resp = post(url, json=body, headers=headers, timeout=cfg.request_timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_reason = f"{type(exc).__name__}"
            continue
        if resp.status_code in RETRYABLE_STATUSES:
            last_reason = f"HTTP {resp.status_code}"
            continue
        if resp.status_code in (401, 403):
            raise AuthError(
                f"{narrative_id}: HTTP {resp.status_code} from {url}; check "
                f"{cfg.api_key_env or 'credentials'}"
            )
        if resp.status_code >= 400:
            raise RequestRejected(
                f"{narrative_id}: HTTP {resp.status_code}: {resp.text[:500]}"
            )
        try:
            doc = resp.json()
            text = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(
                f"{narrative_id}: response missing choices[0].message.content ({exc})"
            )
        if not isinstance(text, str):
            raise MalformedResponse(f"{narrative_id}: message content is not text")
        usage_doc = doc.get("usage") or {}
        pt = int(usage_doc.get("prompt_tokens", 0))
        ct = int(usage_doc.get("completion_tokens", 0))
        wall_ms = int((time.monotonic() - start) * 1000)
        usage = UsageRecord(
            narrative_id=narrative_id,
            model_name=cfg.model_name,
            prompt_tokens=pt,
            completion_tokens=ct,
            wall_ms=wall_ms,
            attempts=attempt + 1,
            cost=compute_cost(cfg, pt, ct),
        )
        return CompletionResult(narrative_id, text, usage)
    raise TransientExhausted(
        f"{narrative_id}: gave up after {cfg.max_retries + 1} attempts "
        f"(last: {last_reason})"
    )


@dataclass
class BatchItem:
    narrative_id: str
    ok: bool
    text: str = ""
    usage: UsageRecord | None = None
    error: str = ""


def run_batch(
    cfg: ModelConfig,
    prompts: Sequence[tuple[str, str]],
    *,
    session: requests.Session | None = None,
    sleeper: Callable[[float], None] = time.sleep,
) -> list[BatchItem]:
    """Annotate many narratives concurrently; results come back in input order.

    Per-item failures are captured, not raised, so one bad narrative cannot
    sink a batch.
    """

    def one(item: tuple[str, str]) -> BatchItem:
        nid, prompt = item
        try:
            result = complete(
                cfg, prompt, narrative_id=nid, session=session, sleeper=sleeper
            )
            return BatchItem(nid, True, result.text, result.usage)
        except Exception as exc:
            return BatchItem(nid, False, error=f"{type(exc).__name__}: {exc}")

    if not prompts:
        return []
    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        return list(pool.map(one, prompts))


@dataclass
class LedgerTotals:
    requests: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    cost: Decimal = field(default_factory=lambda: Decimal("0.0000"))

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def add(self, usage: UsageRecord) -> None:
        self.requests += 1
        self.prompt_tokens += usage.prompt_tokens
        self.completion_tokens += usage.completion_tokens
        self.cost += usage.cost

    @classmethod
    def from_usage(cls, records: Sequence[UsageRecord]) -> "LedgerTotals":
        totals = cls()
        for record in records:
            totals.add(record)
        return totals
