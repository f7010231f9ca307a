"""Text-generation clients.

The pipeline only needs `complete(prompt) -> text`. Three implementations:
a live HTTP client, a recorded-transcript replayer for tests and fixtures,
and a deterministic mock that fabricates a plausible answer from the prompt
itself. The test suite never performs network calls.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from pathlib import Path
from typing import Protocol

import requests


class ClientError(RuntimeError):
    """The client could not produce a response."""


class GeneratorClient(Protocol):
    def complete(self, prompt: str) -> str: ...


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class LiveClient:
    """POSTs {model, prompt} as JSON and expects a completion back.

    Configuration falls back to the TABFMT_LLM_ENDPOINT / TABFMT_LLM_TOKEN /
    TABFMT_LLM_MODEL / TABFMT_LLM_TIMEOUT environment variables.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        token: str | None = None,
        model: str | None = None,
        timeout: float | None = None,
    ):
        self.endpoint = endpoint or os.environ.get("TABFMT_LLM_ENDPOINT")
        self.token = token or os.environ.get("TABFMT_LLM_TOKEN")
        self.model = model or os.environ.get("TABFMT_LLM_MODEL", "default")
        if timeout is None:
            timeout = float(os.environ.get("TABFMT_LLM_TIMEOUT", "30"))
        self.timeout = timeout
        if not self.endpoint:
            raise ClientError("no endpoint configured for the live client")

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            resp = requests.post(
                self.endpoint,
                json={"model": self.model, "prompt": prompt},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            doc = resp.json()
        except requests.RequestException as exc:
            raise ClientError(f"completion request failed: {exc}") from exc
        except ValueError as exc:
            raise ClientError(f"non-JSON completion response: {exc}") from exc
        if isinstance(doc, dict):
            if isinstance(doc.get("text"), str):
                return doc["text"]
            choices = doc.get("choices")
            if isinstance(choices, list) and choices:
                first = choices[0]
                if isinstance(first, dict) and isinstance(first.get("text"), str):
                    return first["text"]
        raise ClientError("completion response has no text field")


class TranscriptClient:
    """Replays recorded responses keyed by the SHA-256 of the prompt.

    Transcript files are JSONL with {"prompt_hash": ..., "response": ...}
    records; later records win on hash collisions within a file.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.responses: dict[str, str] = {}
        with self.path.open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                self.responses[doc["prompt_hash"]] = doc["response"]

    def complete(self, prompt: str) -> str:
        key = prompt_hash(prompt)
        if key not in self.responses:
            raise ClientError(f"transcript has no response for prompt hash {key[:12]}")
        return self.responses[key]

    @staticmethod
    def record(path: str | Path, prompt: str, response: str) -> None:
        with Path(path).open("a") as fh:
            fh.write(
                json.dumps(
                    {"prompt_hash": prompt_hash(prompt), "response": response},
                    sort_keys=True,
                )
                + "\n"
            )


_TARGET_RE = re.compile(r"^Target column: (.*)$", re.MULTILINE)
_COMMON_RE = re.compile(r'"MostCommonValues": \[\[("(?:[^"\\]|\\.)*"), \d+\]')


class MockClient:
    """Deterministic offline stand-in: reads the target column (and its top
    value when present) back out of the prompt and answers in the four-step
    format."""

    def complete(self, prompt: str) -> str:
        targets = _TARGET_RE.findall(prompt)
        target = targets[-1].strip() if targets else "Column"
        lines = [
            "Step 1 - relevant columns:",
            f"- {target}",
            "Step 2 - predicates and functions:",
            "- Blanks",
            "- NOT",
        ]
        constants: list[str] = []
        rules = [f"NOT(Blanks([@{target}]))"]
        tail = prompt.rsplit("### Your task", 1)[-1]
        m = _COMMON_RE.search(tail)
        if m:
            constants.append(m.group(1))
            rules.insert(0, f"TextEquals([@{target}], {m.group(1)})")
            lines.append("- TextEquals")
        lines.append("Step 3 - constants:")
        lines += [f"- {c}" for c in constants]
        lines.append("Step 4 - rules:")
        lines += [f"- {r}" for r in rules]
        return "\n".join(lines) + "\n"
