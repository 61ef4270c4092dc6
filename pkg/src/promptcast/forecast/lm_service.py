"""HTTP client for an external text-generation service.

Wire contract, one prompt per request::

    POST <endpoint>
    {"prompt": str, "max_new_tokens": int, "temperature": float, "seed": int}
    -> {"text": str}
"""

from __future__ import annotations

import json
import logging
import os
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 429, 500, 502, 503, 504})


class ServiceUnavailableError(RuntimeError):
    """Every request failed to reach the endpoint."""


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff: float = 0.5
    backoff_factor: float = 2.0

    def delay(self, attempt: int) -> float:
        """Sleep before retry number ``attempt`` (1-based)."""
        return self.backoff * self.backoff_factor ** (attempt - 1)


@dataclass
class _Outcome:
    text: str
    ok: bool
    unreachable: bool = False


class LMServiceClient:
    """Thread-pooled client; results always come back in prompt order."""

    def __init__(
        self,
        endpoint: str,
        *,
        max_new_tokens: int = 32,
        temperature: float = 0.0,
        seed: int = 0,
        concurrency_limit: int = 4,
        retry: RetryPolicy = RetryPolicy(),
        timeout: float = 30.0,
        api_key_env: str | None = None,
    ) -> None:
        if concurrency_limit < 1:
            raise ValueError("concurrency_limit must be >= 1")
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        if retry.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.endpoint = endpoint
        self.max_new_tokens = max_new_tokens
        self.temperature = temperature
        self.seed = seed
        self.concurrency_limit = concurrency_limit
        self.retry = retry
        self.timeout = timeout
        self.api_key = os.environ.get(api_key_env) if api_key_env else None

    def _request(self, prompt: str) -> urllib.request.Request:
        body = json.dumps(
            {
                "prompt": prompt,
                "max_new_tokens": self.max_new_tokens,
                "temperature": self.temperature,
                "seed": self.seed,
            }
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")

    def _generate_one(self, index: int, prompt: str) -> _Outcome:
        unreachable = False
        for attempt in range(1, self.retry.max_attempts + 1):
            if attempt > 1:
                time.sleep(self.retry.delay(attempt - 1))
            try:
                with urllib.request.urlopen(self._request(prompt), timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                text = payload["text"]
                if not isinstance(text, str):
                    raise TypeError("'text' is not a string")
                return _Outcome(text, ok=True)
            except urllib.error.HTTPError as exc:
                unreachable = False
                if exc.code not in RETRYABLE_STATUS:
                    logger.warning("prompt %d: HTTP %d, not retrying", index, exc.code)
                    break
                logger.info("prompt %d: HTTP %d on attempt %d", index, exc.code, attempt)
            except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
                unreachable = True
                logger.info("prompt %d: %s on attempt %d", index, exc, attempt)
            except (ValueError, KeyError, TypeError) as exc:
                unreachable = False
                logger.warning("prompt %d: malformed response (%s), not retrying", index, exc)
                break
        logger.warning("prompt %d: generation failed, recording empty output", index)
        return _Outcome("", ok=False, unreachable=unreachable)

    def generate(self, prompts: Sequence[str]) -> list[str]:
        """One generated text per prompt, in input order.

        Failed prompts yield ``""``. Raises :class:`ServiceUnavailableError`
        when the endpoint could not be reached for any prompt.
        """
        if not prompts:
            return []
        with ThreadPoolExecutor(max_workers=self.concurrency_limit) as pool:
            outcomes = list(pool.map(self._generate_one, range(len(prompts)), prompts))
        if all(o.unreachable for o in outcomes):
            raise ServiceUnavailableError(
                f"endpoint {self.endpoint} unreachable for all {len(prompts)} requests"
            )
        failed = sum(not o.ok for o in outcomes)
        if failed:
            logger.warning("%d of %d generations failed", failed, len(prompts))
        return [o.text for o in outcomes]
