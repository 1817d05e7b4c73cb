"""Prompt building, answer parsing, and the chat-completion HTTP client.

The classification protocol is single-turn: one prompt per utterance, one
free-text answer, parsed by category mentions.  Answers that name no
category, several categories, or refuse to pick are scored as a forced
incorrect prediction.
"""

from __future__ import annotations

import enum
import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import requests

from .compose import CombinationMethod, CombinedInput
from .corpus import SentimentClass
from .errors import (
    AuthError,
    MalformedServiceReplyError,
    RateLimitExhaustedError,
    TransportError,
    UnknownCategoryNameError,
    WrongCombinationMethodError,
)

DEFAULT_CATEGORIES = ("high", "low")

PROMPT_TEMPLATE = (
    "Given a description: {text}\n"
    "Given sentiment categories of [{categories}].\n"
    "Which sentiment category does the given description belong to?"
)

_CATEGORY_CLASSES = {"low": SentimentClass.LOW, "high": SentimentClass.HIGH}


@dataclass(frozen=True)
class PromptRequest:
    prompt_text: str
    categories: tuple[str, ...]
    key: tuple[str, str]  # (participant_id, exchange_id)


@dataclass(frozen=True)
class ParsedAnswer:
    """Outcome of scanning a raw answer; category None means Unclear."""

    raw_text: str
    category: str | None = None

    @property
    def clear(self) -> bool:
        return self.category is not None


class Provenance(enum.Enum):
    EXTRACTED = "extracted"
    FALLBACK_INCORRECT = "fallback_incorrect"


@dataclass(frozen=True)
class Prediction:
    predicted: SentimentClass
    provenance: Provenance


def _check_categories(categories: tuple[str, ...]) -> None:
    if not categories:
        raise ValueError("categories must be non-empty")
    if len(set(categories)) != len(categories):
        raise ValueError("categories must be pairwise distinct")
    for c in categories:
        if not c or c != c.lower():
            raise ValueError(f"category names must be non-empty lowercase, got {c!r}")


def build_prompt(t: CombinedInput, categories: tuple[str, ...] = DEFAULT_CATEGORIES,
                 key: tuple[str, str] = ("", "")) -> PromptRequest:
    """Wrap a paragraph description in the fixed three-line question."""
    if t.method is not CombinationMethod.PARAGRAPH:
        raise WrongCombinationMethodError(
            f"prompts are built from paragraph inputs, got {t.method.value}"
        )
    categories = tuple(categories)
    _check_categories(categories)
    prompt = PROMPT_TEMPLATE.format(text=t.text, categories=", ".join(categories))
    return PromptRequest(prompt_text=prompt, categories=categories, key=key)


def load_refusal_phrases(path: str | Path | None = None) -> tuple[str, ...]:
    """Read the refusal-phrase list; defaults to the packaged one."""
    if path is None:
        pkg = resources.files("sentext").joinpath("data").joinpath("refusal_phrases.txt")
        text = pkg.read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    phrases = []
    for raw in text.splitlines():
        line = raw.strip().lower()
        if line and not line.startswith("#"):
            phrases.append(line)
    return tuple(phrases)


_DEFAULT_REFUSALS: tuple[str, ...] | None = None


def _default_refusals() -> tuple[str, ...]:
    global _DEFAULT_REFUSALS
    if _DEFAULT_REFUSALS is None:
        _DEFAULT_REFUSALS = load_refusal_phrases()
    return _DEFAULT_REFUSALS


def parse_answer(raw: str, categories: tuple[str, ...] = DEFAULT_CATEGORIES,
                 refusal_phrases: tuple[str, ...] | None = None) -> ParsedAnswer:
    """Scan an answer for category names; exactly one distinct hit is Clear.

    Refusal phrasing wins over any mention count, so hedged answers that
    happen to name one category still come out Unclear.
    """
    categories = tuple(categories)
    _check_categories(categories)
    if refusal_phrases is None:
        refusal_phrases = _default_refusals()
    lowered = raw.lower()
    for phrase in refusal_phrases:
        if phrase in lowered:
            return ParsedAnswer(raw_text=raw)
    mentioned = [
        c for c in categories
        if re.search(rf"\b{re.escape(c)}\b", lowered) is not None
    ]
    if len(mentioned) == 1:
        return ParsedAnswer(raw_text=raw, category=mentioned[0])
    return ParsedAnswer(raw_text=raw)


def class_for_category(category: str) -> SentimentClass:
    try:
        return _CATEGORY_CLASSES[category]
    except KeyError:
        raise UnknownCategoryNameError(
            f"category {category!r} maps to no sentiment class"
        ) from None


def finalize_prediction(parsed: ParsedAnswer, gold: SentimentClass,
                        rng_seed: int = 0) -> Prediction:
    """Turn a parsed answer into a class, forcing Unclear to a wrong label."""
    if parsed.clear:
        return Prediction(class_for_category(parsed.category), Provenance.EXTRACTED)
    wrong = [c for c in SentimentClass if c is not gold]
    pick = random.Random(rng_seed).choice(wrong)
    return Prediction(pick, Provenance.FALLBACK_INCORRECT)


@dataclass
class ServiceConfig:
    endpoint_url: str = "http://127.0.0.1:8931/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    credential_env: str = "SENTEXT_API_KEY"
    max_retries: int = 3
    max_in_flight: int = 4
    timeout_s: float = 30.0
    backoff_base_s: float = 0.5
    temperature: float = 0.0


def _extract_message(data) -> str:
    try:
        content = data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedServiceReplyError(
            "reply lacks choices[0].message.content"
        ) from None
    if not isinstance(content, str):
        raise MalformedServiceReplyError("message content is not text")
    return content


def query_service(req: PromptRequest, cfg: ServiceConfig,
                  session: requests.Session | None = None,
                  sleep=time.sleep) -> str:
    """POST one prompt; retry 429/5xx with deterministic exponential backoff."""
    credential = os.environ.get(cfg.credential_env, "")
    if not credential:
        raise AuthError(f"no credential in ${cfg.credential_env}")
    payload = {
        "model": cfg.model,
        "messages": [{"role": "user", "content": req.prompt_text}],
        "temperature": cfg.temperature,
    }
    headers = {"Authorization": f"Bearer {credential}"}
    post = (session or requests).post

    last_status = None
    for attempt in range(cfg.max_retries + 1):
        if attempt > 0:
            sleep(cfg.backoff_base_s * 2 ** (attempt - 1))
        try:
            resp = post(cfg.endpoint_url, json=payload, headers=headers,
                        timeout=cfg.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if resp.status_code == 200:
            try:
                data = resp.json()
            except ValueError:
                raise MalformedServiceReplyError("reply body is not JSON") from None
            return _extract_message(data)
        if resp.status_code in (401, 403):
            raise AuthError(f"service rejected credential (HTTP {resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            last_status = resp.status_code
            continue
        raise TransportError(f"unexpected HTTP {resp.status_code}")

    if last_status == 429:
        raise RateLimitExhaustedError(
            f"still rate-limited after {cfg.max_retries} retries"
        )
    raise TransportError(
        f"HTTP {last_status} persisted after {cfg.max_retries} retries"
    )


def run_requests(reqs: list[PromptRequest], cfg: ServiceConfig,
                 sleep=time.sleep) -> list[str]:
    """Query every request with bounded concurrency; answers keep input order."""
    if not reqs:
        return []
    workers = max(1, cfg.max_in_flight)
    if workers == 1:
        return [query_service(r, cfg, sleep=sleep) for r in reqs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: query_service(r, cfg, sleep=sleep), reqs))
