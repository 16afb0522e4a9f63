"""Evaluation metrics over event logs and references.

Everything here is a pure function of (EventLog, reference text):
quality (ROUGE-1/2), latency (expected wait to the next summary update,
length-adjusted average lagging), cost (redundancy factor), rewriting
churn (normalized erasure), and score-over-time step curves with their
area under the curve. Curve scores use a 0-100 scale and percent-of-
meeting time so runs of different lengths can be averaged.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass

from .policies import ERASE, READ, WRITE, Event, EventLog
from .transcript import IdentityMap, restore_labels

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, matches: int, hyp_total: int, ref_total: int) -> "RougeScore":
        p = matches / hyp_total if hyp_total else 0.0
        r = matches / ref_total if ref_total else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(precision=p, recall=r, f1=f1)


def rouge_tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; no stemming."""
    return _TOKEN.findall(text.lower())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(hypothesis: list[str], reference: list[str], n: int) -> RougeScore:
    """Clipped n-gram overlap precision/recall/F1 over token lists."""
    hyp = _ngrams(hypothesis, n)
    ref = _ngrams(reference, n)
    if not hyp or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    matches = sum(min(count, ref[gram]) for gram, count in hyp.items())
    return RougeScore.from_counts(matches, sum(hyp.values()), sum(ref.values()))


def rouge_n_text(hypothesis: str, reference: str, n: int) -> RougeScore:
    return rouge_n(rouge_tokenize(hypothesis), rouge_tokenize(reference), n)


def expected_latency(log: EventLog) -> float:
    """Expected wait, from a uniformly random time, until the next WRITE.

    Computed from the WRITE timestamps (duplicates collapse) augmented with
    a final WRITE at the end of the input, in dialog-turn units.
    """
    total = log.total_turns
    if total < 1:
        raise ValueError("empty meeting")
    points = sorted({0, total} | set(log.write_times()))
    acc = 0.0
    for left, right in zip(points, points[1:]):
        acc += (right - left) ** 2 / 2
    return acc / total


def _stamped_output_tokens(log: EventLog) -> list[tuple[str, int]]:
    """Final output tokens, each with the time of the WRITE that last produced it."""
    stamped: list[tuple[str, int]] = []
    for event in log.events:
        if event.action == WRITE:
            stamped.extend((token, event.time) for token in event.text.split())
        elif event.action == ERASE:
            count = event.payload["count"]
            if count > len(stamped):
                raise ValueError("corrupt log")
            if count:
                del stamped[-count:]
    return stamped


def laal(log: EventLog, final_hyp_tokens: int, ref_tokens: int) -> float:
    """Length-adjusted average lagging of the final output, in turns.

    Erased tokens are excluded: each surviving token is stamped with its
    last producing WRITE. The length adjustment normalizes by
    max(hypothesis, reference) length so verbose outputs are not rewarded.
    """
    stamped = _stamped_output_tokens(log)
    if not stamped:
        raise ValueError("no output")
    total = log.total_turns
    gamma = max(final_hyp_tokens, ref_tokens) / total
    delays = [time for _, time in stamped]
    tau = len(delays)
    for i, delay in enumerate(delays, start=1):
        if delay >= total:
            tau = i
            break
    return sum(delays[i - 1] - (i - 1) / gamma for i in range(1, tau + 1)) / tau


def redundancy_factor(log: EventLog) -> float:
    if log.source_tokens < 1:
        raise ValueError("no source tokens")
    return log.tokens_sent / log.source_tokens


def snapshot_outputs(log: EventLog) -> list[tuple[int, str]]:
    """User-visible output after every change, starting from (0, "").

    An ERASE immediately followed by a WRITE is one replacement and yields
    a single snapshot of the post-WRITE state.
    """
    snapshots: list[tuple[int, str]] = [(0, "")]
    tokens: list[str] = []
    events = log.events
    for i, event in enumerate(events):
        if event.action == READ:
            continue
        if event.action == WRITE:
            tokens.extend(event.text.split())
            snapshots.append((event.time, " ".join(tokens)))
        elif event.action == ERASE:
            count = event.payload["count"]
            if count > len(tokens):
                raise ValueError("corrupt log")
            if count:
                del tokens[-count:]
            next_is_write = i + 1 < len(events) and events[i + 1].action == WRITE
            if not next_is_write:
                snapshots.append((event.time, " ".join(tokens)))
    return snapshots


def normalized_erasure(log: EventLog) -> float:
    """Total erased output, counted from the first differing token position
    of each replacement to the end of the previous output, divided by the
    final output length. Zero when nothing is ever erased."""
    snapshots = snapshot_outputs(log)
    erased_total = 0
    previous: list[str] = []
    for _, text in snapshots[1:]:
        current = text.split()
        common = 0
        for a, b in zip(previous, current):
            if a != b:
                break
            common += 1
        erased_total += len(previous) - common
        previous = current
    if not previous:
        return 0.0
    return erased_total / len(previous)


@dataclass
class Curve:
    """Right-continuous step function of score over percent-of-meeting time."""

    points: list[tuple[float, float]]

    def value_at(self, percent: float) -> float:
        xs = [x for x, _ in self.points]
        idx = bisect_right(xs, percent)
        if idx == 0:
            return 0.0
        return self.points[idx - 1][1]


def rouge_curve(log: EventLog, reference: str, score: str = "f1") -> Curve:
    """ROUGE-1 of the visible summary against the full reference, over time.

    One breakpoint per output change at 100*time/total_turns, scored 0-100;
    the final summary's score is carried to percent 100.
    """
    ref_tokens = rouge_tokenize(reference)
    total = log.total_turns
    by_percent: dict[float, float] = {}
    last_score = 0.0
    for time, text in snapshot_outputs(log):
        value = getattr(rouge_n(rouge_tokenize(text), ref_tokens, 1), score) * 100.0
        by_percent[100.0 * time / total] = value
        last_score = value
    by_percent[100.0] = last_score
    return Curve(points=sorted(by_percent.items()))


def average_curves(curves: list[Curve]) -> Curve:
    """Pointwise mean over the union of all breakpoints."""
    if not curves:
        raise ValueError("no curves")
    xs = sorted({x for curve in curves for x, _ in curve.points})
    return Curve(points=[(x, sum(c.value_at(x) for c in curves) / len(curves)) for x in xs])


def auc(curve: Curve) -> float:
    """Exact integral of the step function over [0, 100]."""
    if not curve.points:
        return 0.0
    acc = 0.0
    for (x0, score), (x1, _) in zip(curve.points, curve.points[1:]):
        acc += score * (x1 - x0)
    last_x, last_score = curve.points[-1]
    acc += last_score * (100.0 - last_x)
    return acc


@dataclass
class MetricReport:
    r1: RougeScore
    r2: RougeScore
    length_ratio: float
    el: float
    laal: float
    rf: float
    ne: float
    r1_auc: float


def restore_event_log(log: EventLog, idmap: IdentityMap) -> EventLog:
    """Rewrite WRITE payloads through the identity map so metrics run in
    label space. Surrogates and labels are single whitespace tokens, so
    token counts (and ERASE counts) are unaffected."""
    events = []
    for event in log.events:
        payload = dict(event.payload)
        if event.action == WRITE:
            payload["text"] = restore_labels(payload["text"], idmap)
        events.append(Event(seq=event.seq, time=event.time, action=event.action, payload=payload))
    return EventLog(
        meeting_id=log.meeting_id,
        events=events,
        total_turns=log.total_turns,
        source_tokens=log.source_tokens,
        tokens_sent=log.tokens_sent,
    )


def metric_report(log: EventLog, reference: str) -> MetricReport:
    """All metrics for one run against one reference summary.

    The log must already be in the same label space as the reference
    (see restore_event_log).
    """
    hypothesis = snapshot_outputs(log)[-1][1]
    hyp_len = len(hypothesis.split())
    ref_len = len(reference.split())
    ratio = hyp_len / ref_len if ref_len else 0.0
    return MetricReport(
        r1=rouge_n_text(hypothesis, reference, 1),
        r2=rouge_n_text(hypothesis, reference, 2),
        length_ratio=ratio,
        el=expected_latency(log),
        laal=laal(log, hyp_len, ref_len),
        rf=redundancy_factor(log),
        ne=normalized_erasure(log),
        r1_auc=auc(rouge_curve(log, reference)),
    )
