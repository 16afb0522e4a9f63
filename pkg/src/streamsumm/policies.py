"""Streaming summarization policies.

A policy consumes the chunk stream, drives a summarizer backend, and emits
a timestamped READ/WRITE/ERASE event log. Event times are dialog-turn
indices: each WRITE or ERASE is stamped with the time of the most recent
READ, and the event clock never moves backward (re-reads of returned
chunks happen at the current clock, not at the chunk's original arrival).

``tokens_sent`` counts the source tokens of every summarize call's input;
forced prefixes and prompt boilerplate are excluded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .backends import Backend, BackendError, SummaryRequest
from .transcript import Chunk, render_chunks

POLICY_KINDS = (
    "length_based",
    "model_based",
    "sliding_window",
    "full_rewriting",
    "fully_incremental",
)

READ, WRITE, ERASE = "READ", "WRITE", "ERASE"


@dataclass
class PolicyConfig:
    kind: str
    chunk_size: int
    maxlen: int | None = None  # model_based: maximum input tokens per call
    initial_bullets: int = 1  # full_rewriting: bullet count of the first summary

    def validate(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind: {self.kind}")
        if self.chunk_size < 1:
            raise ValueError("chunk size must be >= 1")
        if self.kind == "model_based":
            if self.maxlen is None:
                raise ValueError("model_based needs maxlen")
            if self.maxlen < self.chunk_size:
                raise ValueError("maxlen must be >= chunk size")


@dataclass
class Event:
    seq: int
    time: int
    action: str  # READ | WRITE | ERASE
    payload: dict

    @property
    def text(self) -> str:
        return self.payload.get("text", "")


@dataclass
class EventLog:
    meeting_id: str
    events: list[Event]
    total_turns: int
    source_tokens: int
    tokens_sent: int

    def write_times(self) -> list[int]:
        return [e.time for e in self.events if e.action == WRITE]


class PolicyRunError(Exception):
    """Backend failure during a run; carries the events recorded so far."""

    def __init__(self, message: str, partial_log: EventLog):
        super().__init__(message)
        self.partial_log = partial_log


class _LogBuilder:
    def __init__(self, meeting_id: str, total_turns: int, source_tokens: int):
        self.meeting_id = meeting_id
        self.total_turns = total_turns
        self.source_tokens = source_tokens
        self.tokens_sent = 0
        self.events: list[Event] = []
        self.output_tokens: list[str] = []
        self.clock = 0

    def read(self, chunk: Chunk) -> None:
        self.clock = max(self.clock, chunk.end_turn)
        self._append(READ, {"chunk_index": chunk.chunk_index, "token_count": len(chunk.tokens)})

    def write(self, text: str) -> None:
        text = text.strip()
        if not text:
            return
        self._append(WRITE, {"text": text})
        self.output_tokens.extend(text.split())

    def erase_all(self) -> None:
        count = len(self.output_tokens)
        if count == 0:
            return
        self._append(ERASE, {"count": count})
        del self.output_tokens[-count:]

    def sent(self, token_count: int) -> None:
        self.tokens_sent += token_count

    @property
    def output_text(self) -> str:
        return " ".join(self.output_tokens)

    def _append(self, action: str, payload: dict) -> None:
        self.events.append(Event(seq=len(self.events), time=self.clock, action=action, payload=payload))

    def build(self) -> EventLog:
        return EventLog(
            meeting_id=self.meeting_id,
            events=self.events,
            total_turns=self.total_turns,
            source_tokens=self.source_tokens,
            tokens_sent=self.tokens_sent,
        )


def run_policy(
    config: PolicyConfig,
    stream: Iterable[Chunk],
    backend: Backend,
    meeting_id: str = "",
) -> EventLog:
    """Run one policy over a chunk stream and return its event log."""
    config.validate()
    chunks = list(stream)
    if not chunks:
        raise ValueError("empty chunk stream")
    total_turns = chunks[-1].end_turn + 1
    source_tokens = sum(len(c.tokens) for c in chunks)
    builder = _LogBuilder(meeting_id, total_turns, source_tokens)
    runner = _RUNNERS[config.kind]
    try:
        runner(chunks, backend, config, builder)
    except BackendError as exc:
        raise PolicyRunError(str(exc), partial_log=builder.build()) from exc
    return builder.build()


def _token_count(chunks: list[Chunk]) -> int:
    return sum(len(c.tokens) for c in chunks)


def _run_length_based(chunks, backend, config, builder) -> None:
    # each chunk is summarized alone; no state crosses chunk boundaries
    for chunk in chunks:
        builder.read(chunk)
        result = backend.summarize(SummaryRequest(input_text=render_chunks([chunk])))
        builder.sent(len(chunk.tokens))
        builder.write(result.full_text)


def _run_model_based(chunks, backend, config, builder) -> None:
    """Grow the input one chunk at a time and write the best-rated candidate.

    Candidate k summarizes the first k buffered chunks. Growth stops when
    the next chunk would push the input past ``maxlen`` (chunk sizes are
    known, so no oversized chunk is read only to be discarded). Chunks
    beyond the winning candidate are returned to the stream and re-read.
    """
    if not backend.can_rate:
        raise BackendError("unratable backend")
    pending = list(chunks)
    while pending:
        buffer = [pending.pop(0)]
        builder.read(buffer[0])
        candidates: list[str] = []
        ratings: list[float] = []
        while True:
            result = backend.summarize(SummaryRequest(input_text=render_chunks(buffer)))
            builder.sent(_token_count(buffer))
            candidates.append(result.full_text)
            ratings.append(backend.rate(result))
            if not pending:
                break
            if _token_count(buffer) + len(pending[0].tokens) > config.maxlen:
                break
            nxt = pending.pop(0)
            builder.read(nxt)
            buffer.append(nxt)
        best = max(range(len(ratings)), key=lambda i: (ratings[i], -i))
        builder.write(candidates[best])
        # unused chunks go back to the stream to be read again
        pending[0:0] = buffer[best + 1 :]


def _run_sliding_window(chunks, backend, config, builder) -> None:
    """Window over (previous input, current input) with the previous output
    forced as a prefix; rotate the window whenever the backend extends it."""
    prev_in: list[Chunk] = []
    prev_out = ""
    cur_in: list[Chunk] = []

    def attempt() -> None:
        nonlocal prev_in, prev_out, cur_in
        window = prev_in + cur_in
        result = backend.summarize(SummaryRequest(
            input_text=render_chunks(window),
            forced_prefix=prev_out or None,
            prior_input_text=render_chunks(prev_in) if prev_in else None,
        ))
        builder.sent(_token_count(window))
        if result.extends_prefix:
            builder.write(result.new_text)
            prev_in, prev_out, cur_in = cur_in, result.new_text.strip(), []

    for chunk in chunks:
        builder.read(chunk)
        cur_in.append(chunk)
        attempt()
    if cur_in:
        # flush: one more attempt over whatever the window still holds
        attempt()


def _run_full_rewriting(chunks, backend, config, builder) -> None:
    # re-summarize everything read so far, erasing the previous output;
    # the bullet budget grows by one per chunk
    seen: list[Chunk] = []
    for i, chunk in enumerate(chunks):
        builder.read(chunk)
        seen.append(chunk)
        result = backend.summarize(SummaryRequest(
            input_text=render_chunks(seen),
            bullet_count=config.initial_bullets + i,
        ))
        builder.sent(_token_count(seen))
        if result.full_text.strip():
            builder.erase_all()
            builder.write(result.full_text)


def _run_fully_incremental(chunks, backend, config, builder) -> None:
    # re-summarize everything read so far with the entire previous output
    # forced as a prefix; output only ever grows
    seen: list[Chunk] = []
    for chunk in chunks:
        builder.read(chunk)
        seen.append(chunk)
        prefix = builder.output_text
        result = backend.summarize(SummaryRequest(
            input_text=render_chunks(seen),
            forced_prefix=prefix or None,
            prior_input_text=render_chunks(seen[:-1]) if len(seen) > 1 else None,
        ))
        builder.sent(_token_count(seen))
        if result.extends_prefix:
            builder.write(result.new_text)


_RUNNERS = {
    "length_based": _run_length_based,
    "model_based": _run_model_based,
    "sliding_window": _run_sliding_window,
    "full_rewriting": _run_full_rewriting,
    "fully_incremental": _run_fully_incremental,
}


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def dump_event_log(log: EventLog) -> str:
    """Serialize to line-delimited JSON; byte-identical across round trips."""
    lines = [_dumps({
        "meta": {
            "meeting_id": log.meeting_id,
            "total_turns": log.total_turns,
            "source_tokens": log.source_tokens,
            "tokens_sent": log.tokens_sent,
        }
    })]
    for event in log.events:
        lines.append(_dumps({
            "seq": event.seq,
            "time": event.time,
            "action": event.action,
            "payload": event.payload,
        }))
    return "\n".join(lines) + "\n"


def load_event_log(text: str) -> EventLog:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty event log")
    head = json.loads(lines[0])
    if "meta" not in head:
        raise ValueError("event log missing meta record")
    meta = head["meta"]
    events = []
    for line in lines[1:]:
        record = json.loads(line)
        events.append(Event(
            seq=record["seq"],
            time=record["time"],
            action=record["action"],
            payload=record["payload"],
        ))
    return EventLog(
        meeting_id=meta["meeting_id"],
        events=events,
        total_turns=meta["total_turns"],
        source_tokens=meta["source_tokens"],
        tokens_sent=meta["tokens_sent"],
    )


def write_event_log(log: EventLog, path: str | Path) -> None:
    Path(path).write_text(dump_event_log(log), encoding="utf-8", newline="\n")


def read_event_log(path: str | Path) -> EventLog:
    return load_event_log(Path(path).read_text(encoding="utf-8"))
