"""Summarizer backends behind one contract.

Three implementations: a scripted mock that replays canned responses, a
deterministic extractive mock for offline end-to-end runs, and a remote
chat-completion client for real models. All of them honor forced prefixes:
the returned full text always starts with the requested prefix.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import requests

PROMPT_LENGTH_BASED = "Summarize the following project meeting in 2-3 bullet points:\n\n{transcript}"
PROMPT_WINDOW_INITIAL = (
    "Summarize this conversation snippet in one sentence.\n"
    "Reply only with the summary.\n\n{transcript}"
)
PROMPT_WINDOW_CONTINUE = (
    "More of the transcript has become available.\n"
    'Either continue your previous summary with exactly one additional sentence, '
    'or reply with "No update necessary" if the new transcript does not warrant '
    "an update to the summary. Do not repeat what you wrote before.\n\n{transcript}"
)
PROMPT_FULL_REWRITING = "Create a summary of the following meeting in {n} bullet points.\n\n{transcript}"

NO_UPDATE_SENTINEL = "noupdatenecessary"

_SENTENCE_END = re.compile(r"[.?!]")
_WORD = re.compile(r"[a-z0-9]+")


class BackendError(Exception):
    """Backend failure (transport, bad script, unusable scoring source)."""


@dataclass
class SummaryRequest:
    input_text: str
    forced_prefix: str | None = None
    bullet_count: int | None = None
    # rendered source already covered by the forced prefix; lets chat-style
    # backends reconstruct the conversation that produced the prefix
    prior_input_text: str | None = None


@dataclass
class SummaryResult:
    full_text: str
    new_text: str
    extends_prefix: bool
    token_logprobs: list[float] | None = None
    coverage: float | None = None


@dataclass
class ScriptEntry:
    text: str
    extends: bool = True
    logprobs: list[float] | None = None


@dataclass
class BackendConfig:
    kind: str  # scripted | extractive | remote
    endpoint_url: str | None = None
    model_name: str | None = None
    api_key_env_var: str = "STREAMSUMM_API_KEY"
    temperature: float = 0.7
    max_output_tokens: int | None = None
    retry_attempts: int = 3
    retry_base_delay: float = 1.0
    script: list[ScriptEntry] | None = None


def _compose(prefix: str | None, addition: str) -> SummaryResult:
    """Build a result whose full text is the prefix extended by ``addition``."""
    prefix = prefix or ""
    addition = addition.strip()
    if prefix and addition:
        full = prefix + " " + addition
    else:
        full = prefix + addition
    new = full[len(prefix):]
    return SummaryResult(full_text=full, new_text=new, extends_prefix=bool(new.strip()))


def _no_update(prefix: str | None) -> SummaryResult:
    return SummaryResult(full_text=prefix or "", new_text="", extends_prefix=False)


def render_prompt(policy_kind: str, request: SummaryRequest) -> list[dict[str, str]]:
    """Build the chat messages for a policy's summarize call.

    ``sliding_window_continue`` (and prefix-bearing fully incremental calls)
    reconstruct the conversation: the earlier source span as a first user
    message, the forced prefix as the assistant's reply, then the
    continuation request with the new span.
    """
    if policy_kind == "length_based":
        return [{"role": "user", "content": PROMPT_LENGTH_BASED.format(transcript=request.input_text)}]
    if policy_kind == "full_rewriting":
        if request.bullet_count is None:
            raise ValueError("full_rewriting prompt needs a bullet count")
        return [{
            "role": "user",
            "content": PROMPT_FULL_REWRITING.format(n=request.bullet_count, transcript=request.input_text),
        }]
    if policy_kind == "fully_incremental":
        variant = "sliding_window_continue" if request.forced_prefix else "sliding_window_initial"
        return render_prompt(variant, request)
    if policy_kind == "sliding_window_initial":
        return [{"role": "user", "content": PROMPT_WINDOW_INITIAL.format(transcript=request.input_text)}]
    if policy_kind == "sliding_window_continue":
        prior = request.prior_input_text or ""
        new_part = request.input_text
        if prior and new_part.startswith(prior):
            new_part = new_part[len(prior):].lstrip("\n")
        messages = []
        if prior:
            messages.append({"role": "user", "content": PROMPT_WINDOW_INITIAL.format(transcript=prior)})
        if request.forced_prefix:
            messages.append({"role": "assistant", "content": request.forced_prefix})
        messages.append({"role": "user", "content": PROMPT_WINDOW_CONTINUE.format(transcript=new_part)})
        return messages
    raise ValueError(f"unknown policy kind: {policy_kind}")


class Backend:
    """Contract shared by all summarizer backends."""

    #: whether rate() can produce a score (checked before model-based runs)
    can_rate = False

    def __init__(self) -> None:
        self.call_count = 0

    def summarize(self, request: SummaryRequest) -> SummaryResult:
        raise NotImplementedError

    def rate(self, result: SummaryResult) -> float:
        """Score a candidate summary; higher is better."""
        if result.token_logprobs:
            return sum(result.token_logprobs) / len(result.token_logprobs)
        raise BackendError("unratable backend")


class ScriptedBackend(Backend):
    """Replays a fixed response list in call order; for unit tests."""

    can_rate = True

    def __init__(self, script: Sequence[ScriptEntry | dict]):
        super().__init__()
        self.script = [e if isinstance(e, ScriptEntry) else ScriptEntry(**e) for e in script]
        self._cursor = 0
        self.seen: list[SummaryRequest] = []

    def summarize(self, request: SummaryRequest) -> SummaryResult:
        if not request.input_text:
            raise ValueError("empty summarize input")
        if self._cursor >= len(self.script):
            raise BackendError("script underrun")
        entry = self.script[self._cursor]
        self._cursor += 1
        self.call_count += 1
        self.seen.append(request)
        if request.forced_prefix and not entry.extends:
            result = _no_update(request.forced_prefix)
        else:
            result = _compose(request.forced_prefix, entry.text)
        result.token_logprobs = entry.logprobs
        return result


def load_script(path: str | Path) -> list[ScriptEntry]:
    """Read a scripted-backend response file: one JSON record per line."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        entries.append(ScriptEntry(
            text=record.get("text", ""),
            extends=record.get("extends", True),
            logprobs=record.get("logprobs"),
        ))
    return entries


def _first_sentence(line: str) -> str:
    m = _SENTENCE_END.search(line)
    return line[: m.end()] if m else line


def _content_words(text: str) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if len(w) >= 4}


class ExtractiveBackend(Backend):
    """Deterministic first-sentence extractor; for offline end-to-end runs.

    Without a prefix: the first sentence of each source turn, capped at
    three. With a forced prefix: the first sentence of the newest turn not
    already reflected in the prefix, or a non-extending result if every
    turn is covered. rate() scores content-word coverage of the source.
    """

    can_rate = True
    max_sentences = 3

    def summarize(self, request: SummaryRequest) -> SummaryResult:
        if not request.input_text:
            raise ValueError("empty summarize input")
        self.call_count += 1
        lines = [line.strip() for line in request.input_text.splitlines() if line.strip()]
        prefix = request.forced_prefix
        if prefix:
            result = _no_update(prefix)
            for line in reversed(lines):
                sentence = _first_sentence(line)
                if sentence and sentence not in prefix:
                    result = _compose(prefix, sentence)
                    break
        else:
            sentences = [_first_sentence(line) for line in lines[: self.max_sentences]]
            result = _compose(None, " ".join(s for s in sentences if s))
        source_words = _content_words(request.input_text)
        if source_words:
            matched = source_words & _content_words(result.full_text)
            result.coverage = len(matched) / len(source_words)
        else:
            result.coverage = 0.0
        return result

    def rate(self, result: SummaryResult) -> float:
        if result.coverage is None:
            raise BackendError("unratable backend")
        return result.coverage


def _normalize_reply(text: str) -> str:
    return re.sub(r"[^a-z]", "", text.lower())


class RemoteBackend(Backend):
    """Chat-completion client over HTTP with retry.

    Prefix forcing is conversational: the previous summary is replayed as an
    assistant message and a "No update necessary" reply (case- and
    punctuation-insensitive) maps to a non-extending result. The API does
    not report token probabilities, so rate() is unavailable.
    """

    can_rate = False

    def __init__(self, config: BackendConfig, policy_kind: str = "length_based",
                 session: requests.Session | None = None):
        super().__init__()
        if not config.endpoint_url:
            raise ValueError("remote backend needs an endpoint URL")
        self.config = config
        self.policy_kind = policy_kind
        self.session = session or requests.Session()

    def _prompt_kind(self, request: SummaryRequest) -> str:
        if self.policy_kind == "sliding_window":
            return "sliding_window_continue" if request.forced_prefix else "sliding_window_initial"
        if self.policy_kind == "model_based":
            return "length_based"
        return self.policy_kind

    def _post(self, body: dict) -> dict:
        cfg = self.config
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_env_var, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(1, cfg.retry_attempts + 1):
            try:
                response = self.session.post(cfg.endpoint_url, json=body, headers=headers, timeout=60)
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code < 400:
                    return response.json()
                if response.status_code < 500:
                    raise BackendError(
                        f"request rejected with HTTP {response.status_code} (attempt {attempt})"
                    )
                last_error = BackendError(f"HTTP {response.status_code}")
            if attempt < cfg.retry_attempts:
                time.sleep(cfg.retry_base_delay * 2 ** (attempt - 1))
        raise BackendError(f"request failed after {cfg.retry_attempts} attempts: {last_error}")

    def summarize(self, request: SummaryRequest) -> SummaryResult:
        if not request.input_text:
            raise ValueError("empty summarize input")
        self.call_count += 1
        body = {
            "model": self.config.model_name or "",
            "messages": render_prompt(self._prompt_kind(request), request),
            "temperature": self.config.temperature,
        }
        if self.config.max_output_tokens is not None:
            body["max_tokens"] = self.config.max_output_tokens
        data = self._post(body)
        try:
            reply = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc
        if request.forced_prefix is not None and _normalize_reply(reply) == NO_UPDATE_SENTINEL:
            return _no_update(request.forced_prefix)
        return _compose(request.forced_prefix, reply)


def make_backend(config: BackendConfig, policy_kind: str = "length_based",
                 session: requests.Session | None = None) -> Backend:
    if config.kind == "scripted":
        return ScriptedBackend(config.script or [])
    if config.kind == "extractive":
        return ExtractiveBackend()
    if config.kind == "remote":
        return RemoteBackend(config, policy_kind=policy_kind, session=session)
    raise ValueError(f"unknown backend kind: {config.kind}")
