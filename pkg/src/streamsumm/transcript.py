"""Meeting transcripts: parsing, deidentification surrogates, and chunking.

A transcript is an ordered list of speaker turns; the turn index is the
clock (one time unit per turn). Turns are rendered as ``Speaker: text``
lines, whitespace-tokenized, and cut into fixed-size chunks that carry the
turn index of their last token as a timestamp.
"""

from __future__ import annotations

import json
import random
import re
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

LABEL_RE = re.compile(r"\b(?:PERSON|ORGANIZATION|PROJECT)\d+\b")

# one turn per line: "(LABEL) utterance"
DEFAULT_SPEAKER_LINE = r"^\((?P<speaker>[^()\s]+)\)\s*(?P<text>.*)$"

_ACRONYM_LEN = {"ORGANIZATION": 4, "PROJECT": 3}
_MAX_ACRONYM_TRIES = 10_000


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str
    turn_index: int


@dataclass
class Transcript:
    meeting_id: str
    turns: list[Turn]

    @property
    def total_turns(self) -> int:
        return len(self.turns)


@dataclass(frozen=True)
class SourceToken:
    text: str
    turn_index: int


@dataclass
class Chunk:
    tokens: list[SourceToken]
    chunk_index: int
    start_turn: int
    end_turn: int

    def __len__(self) -> int:
        return len(self.tokens)


def parse_transcript(
    raw: str,
    label_pattern: str = DEFAULT_SPEAKER_LINE,
    meeting_id: str = "meeting",
) -> Transcript:
    """Parse plain-text transcript lines into a Transcript.

    Lines matching ``label_pattern`` (groups ``speaker`` and ``text``, or the
    first two positional groups) start a new turn; other non-blank lines are
    wrapped continuations and merge into the previous turn.
    """
    if not raw.strip():
        raise ValueError("empty transcript")
    pattern = re.compile(label_pattern)
    pending: list[list[str]] = []  # [speaker, text so far]
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        m = pattern.match(line)
        if m:
            groups = m.groupdict()
            if "speaker" in groups and "text" in groups:
                speaker, text = groups["speaker"], groups["text"]
            else:
                speaker, text = m.group(1), m.group(2)
            pending.append([speaker, text.strip()])
        elif pending:
            prev = pending[-1]
            prev[1] = (prev[1] + " " + line).strip()
        else:
            raise ValueError("malformed transcript")
    turns = []
    for i, (speaker, text) in enumerate(pending):
        if not text.strip():
            raise ValueError("malformed transcript")
        turns.append(Turn(speaker=speaker, text=text, turn_index=i))
    return Transcript(meeting_id=meeting_id, turns=turns)


def parse_jsonl_transcript(raw: str, meeting_id: str = "meeting") -> Transcript:
    """Parse the line-delimited structured format: one {speaker, text} per line."""
    if not raw.strip():
        raise ValueError("empty transcript")
    turns = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            speaker, text = record["speaker"], record["text"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError("malformed transcript") from exc
        if not str(text).strip():
            raise ValueError("malformed transcript")
        turns.append(Turn(speaker=str(speaker), text=str(text).strip(), turn_index=len(turns)))
    if not turns:
        raise ValueError("empty transcript")
    return Transcript(meeting_id=meeting_id, turns=turns)


def load_transcript(path: str | Path, label_pattern: str = DEFAULT_SPEAKER_LINE) -> Transcript:
    """Load a transcript file, dispatching on extension (.jsonl/.ndjson vs text)."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    if path.suffix.lower() in {".jsonl", ".ndjson"}:
        return parse_jsonl_transcript(raw, meeting_id=path.stem)
    return parse_transcript(raw, label_pattern=label_pattern, meeting_id=path.stem)


@dataclass
class IdentityMap:
    """Bijection from deidentification labels (PERSON3, ...) to surrogate strings."""

    forward: dict[str, str] = field(default_factory=dict)
    seed: int = 0

    @property
    def reverse(self) -> dict[str, str]:
        return {v: k for k, v in self.forward.items()}

    def save(self, path: str | Path) -> None:
        lines = [f"{label}\t{surrogate}" for label, surrogate in sorted(self.forward.items())]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "IdentityMap":
        forward = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            label, surrogate = line.split("\t", 1)
            forward[label] = surrogate
        return cls(forward=forward)


def _name_pool() -> list[str]:
    data = resources.files(__package__).joinpath("data/first_names.txt").read_text(encoding="utf-8")
    return [line.strip() for line in data.splitlines() if line.strip()]


def _assign_surrogates(labels: list[str], seed: int) -> dict[str, str]:
    rng = random.Random(seed)
    names = _name_pool()
    rng.shuffle(names)
    name_cursor = 0
    used: set[str] = set()
    forward: dict[str, str] = {}
    for label in labels:
        kind = re.match(r"[A-Z]+", label).group(0)
        if kind == "PERSON":
            while name_cursor < len(names) and names[name_cursor] in used:
                name_cursor += 1
            if name_cursor >= len(names):
                raise ValueError("surrogate pool exhausted")
            surrogate = names[name_cursor]
            name_cursor += 1
        else:
            length = _ACRONYM_LEN[kind]
            for _ in range(_MAX_ACRONYM_TRIES):
                surrogate = "".join(rng.choice(string.ascii_uppercase) for _ in range(length))
                if surrogate not in used:
                    break
            else:
                raise ValueError("surrogate pool exhausted")
        used.add(surrogate)
        forward[label] = surrogate
    return forward


def reidentify(transcript: Transcript, seed: int) -> tuple[Transcript, IdentityMap]:
    """Replace PERSON/ORGANIZATION/PROJECT labels with deterministic surrogates.

    The same label always maps to the same surrogate; surrogates are drawn
    from a bundled name pool (PERSON) or seeded 4-/3-letter acronyms
    (ORGANIZATION/PROJECT). Returns the rewritten transcript and the map
    needed to revert the substitution.
    """
    labels: list[str] = []
    seen: set[str] = set()
    for turn in transcript.turns:
        for text in (turn.speaker, turn.text):
            for m in LABEL_RE.finditer(text):
                if m.group(0) not in seen:
                    seen.add(m.group(0))
                    labels.append(m.group(0))
    idmap = IdentityMap(forward=_assign_surrogates(labels, seed), seed=seed)

    def sub(text: str) -> str:
        return LABEL_RE.sub(lambda m: idmap.forward.get(m.group(0), m.group(0)), text)

    turns = [
        Turn(speaker=sub(t.speaker), text=sub(t.text), turn_index=t.turn_index)
        for t in transcript.turns
    ]
    return Transcript(meeting_id=transcript.meeting_id, turns=turns), idmap


def restore_labels(text: str, idmap: IdentityMap) -> str:
    """Replace surrogate occurrences with their original labels.

    Longest surrogate first so that an acronym which is a prefix of another
    surrogate cannot clobber it; matches are word-bounded.
    """
    if not idmap.forward:
        return text
    reverse = idmap.reverse
    alternation = "|".join(
        re.escape(s) for s in sorted(reverse, key=len, reverse=True)
    )
    return re.sub(rf"\b(?:{alternation})\b", lambda m: reverse[m.group(0)], text)


def render_turn(turn: Turn) -> str:
    return f"{turn.speaker}: {turn.text}"


def turn_tokens(turn: Turn) -> list[SourceToken]:
    return [SourceToken(text=w, turn_index=turn.turn_index) for w in render_turn(turn).split()]


def transcript_tokens(transcript: Transcript) -> list[SourceToken]:
    tokens: list[SourceToken] = []
    for turn in transcript.turns:
        tokens.extend(turn_tokens(turn))
    return tokens


def chunk_stream(transcript: Transcript, chunk_size: int) -> Iterator[Chunk]:
    """Cut the rendered token stream into chunks of ``chunk_size`` tokens.

    Every chunk has exactly ``chunk_size`` tokens except a possibly shorter
    final one. Chunks partition the stream in order and are timestamped by
    the turn index of their last token.
    """
    if chunk_size < 1:
        raise ValueError("chunk size must be >= 1")
    tokens = transcript_tokens(transcript)
    for i in range(0, len(tokens), chunk_size):
        block = tokens[i : i + chunk_size]
        yield Chunk(
            tokens=block,
            chunk_index=i // chunk_size,
            start_turn=block[0].turn_index,
            end_turn=block[-1].turn_index,
        )


def render_chunks(chunks: Iterable[Chunk]) -> str:
    """Render chunk tokens back to ``Speaker: text`` lines, one per turn.

    Tokens from the same turn are joined with single spaces; a turn split
    across adjacent chunks is reassembled into one line.
    """
    lines: list[str] = []
    current_turn = None
    for chunk in chunks:
        for token in chunk.tokens:
            if token.turn_index != current_turn:
                lines.append(token.text)
                current_turn = token.turn_index
            else:
                lines[-1] += " " + token.text
    return "\n".join(lines)
