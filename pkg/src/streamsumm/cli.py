"""Command-line surface: run policies over a corpus, evaluate logs, plot curves.

Exit codes: 0 success, 1 partial failure (some meetings failed), 2 total
failure. All outputs are written atomically and are byte-deterministic for
a fixed manifest with offline backends.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .backends import BackendConfig, load_script, make_backend
from .metrics import (
    MetricReport,
    auc,
    average_curves,
    metric_report,
    restore_event_log,
    rouge_curve,
)
from .policies import (
    EventLog,
    PolicyConfig,
    PolicyRunError,
    dump_event_log,
    read_event_log,
    run_policy,
)
from .svgplot import render_step_plot
from .transcript import IdentityMap, chunk_stream, load_transcript, reidentify, restore_labels

CSV_COLUMNS = ("R1", "R2", "ratio", "LAAL", "EL", "RF", "NE", "R1-AUC")
LOG_SUFFIX = ".events.jsonl"


@dataclass
class RunManifest:
    system_name: str
    policy: PolicyConfig
    backend: BackendConfig
    corpus_dir: str
    seed: int
    output_dir: str


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _config_echo(manifest: RunManifest) -> dict:
    backend = asdict(manifest.backend)
    backend.pop("script", None)  # scripts can be large; the file path is in the flags
    return {
        "system_name": manifest.system_name,
        "policy": asdict(manifest.policy),
        "backend": backend,
        "seed": manifest.seed,
    }


def discover_transcripts(corpus_dir: str | Path) -> list[Path]:
    corpus = Path(corpus_dir)
    return sorted(
        p for p in corpus.iterdir()
        if p.is_file() and p.suffix.lower() in {".txt", ".jsonl", ".ndjson"}
    )


def cmd_run(manifest: RunManifest) -> int:
    """Run one policy/backend over every meeting in the corpus.

    Per-meeting pipeline: parse, swap labels for surrogates, chunk, run the
    policy, persist the event log plus the restored final summary and the
    identity map. Failures are recorded per meeting and skipped.
    """
    paths = discover_transcripts(manifest.corpus_dir)
    if not paths:
        print(f"no transcripts found in {manifest.corpus_dir}", file=sys.stderr)
        return 2
    out_dir = Path(manifest.output_dir) / manifest.system_name
    out_dir.mkdir(parents=True, exist_ok=True)
    config_echo = _config_echo(manifest)
    records = []
    failures = 0
    for path in paths:
        record: dict = {"meeting_id": path.stem}
        try:
            transcript = load_transcript(path)
            surrogate_transcript, idmap = reidentify(transcript, manifest.seed)
            backend = make_backend(manifest.backend, policy_kind=manifest.policy.kind)
            log = run_policy(
                manifest.policy,
                chunk_stream(surrogate_transcript, manifest.policy.chunk_size),
                backend,
                meeting_id=transcript.meeting_id,
            )
            log_text = dump_event_log(log)
            _atomic_write(out_dir / f"{transcript.meeting_id}{LOG_SUFFIX}", log_text)
            idmap.save(out_dir / f"{transcript.meeting_id}.map.txt")
            final_summary = restore_labels(_final_output(log), idmap)
            _atomic_write(out_dir / f"{transcript.meeting_id}.summary.txt", final_summary + "\n")
            record.update(
                status="ok",
                events=len(log.events),
                total_turns=log.total_turns,
                source_tokens=log.source_tokens,
                tokens_sent=log.tokens_sent,
                backend_calls=backend.call_count,
                log_sha256=hashlib.sha256(log_text.encode("utf-8")).hexdigest(),
            )
        except (PolicyRunError, ValueError, OSError) as exc:
            failures += 1
            record.update(status="error", error=str(exc))
            print(f"{path.stem}: {exc}", file=sys.stderr)
        records.append(record)
    run_meta = {
        "config": config_echo,
        "config_hash": hashlib.sha256(_canonical(config_echo).encode("utf-8")).hexdigest(),
        "meetings": records,
    }
    _atomic_write(out_dir / "run.json", _canonical(run_meta) + "\n")
    if failures == len(paths):
        return 2
    return 1 if failures else 0


def _final_output(log: EventLog) -> str:
    tokens: list[str] = []
    for event in log.events:
        if event.action == "WRITE":
            tokens.extend(event.text.split())
        elif event.action == "ERASE":
            count = event.payload["count"]
            del tokens[len(tokens) - count :]
    return " ".join(tokens)


def _load_restored_log(log_path: Path) -> EventLog:
    log = read_event_log(log_path)
    map_path = log_path.with_name(log_path.name.replace(LOG_SUFFIX, ".map.txt"))
    if map_path.exists():
        log = restore_event_log(log, IdentityMap.load(map_path))
    return log


def _load_reference(reference_dir: Path, meeting_id: str, log_path: Path) -> str:
    ref_path = reference_dir / f"{meeting_id}.txt"
    if not ref_path.exists():
        raise FileNotFoundError(f"missing reference for meeting {meeting_id}")
    reference = ref_path.read_text(encoding="utf-8").strip()
    map_path = log_path.with_name(log_path.name.replace(LOG_SUFFIX, ".map.txt"))
    if map_path.exists():
        reference = restore_labels(reference, IdentityMap.load(map_path))
    return reference


def _log_paths(log_dir: Path) -> list[Path]:
    paths = sorted(log_dir.glob(f"*{LOG_SUFFIX}"))
    if not paths:
        raise FileNotFoundError(f"no event logs in {log_dir}")
    return paths


def _report_row(meeting_id: str, report: MetricReport) -> list[str]:
    values = (
        report.r1.f1, report.r2.f1, report.length_ratio, report.laal,
        report.el, report.rf, report.ne, report.r1_auc,
    )
    return [meeting_id] + [str(float(v)) for v in values]


def cmd_eval(log_dir: str | Path, reference_dir: str | Path, out_csv: str | Path) -> int:
    """Score every event log against its reference; one CSV row per meeting
    plus an arithmetic-mean row."""
    log_dir, reference_dir = Path(log_dir), Path(reference_dir)
    rows = []
    reports = []
    for log_path in _log_paths(log_dir):
        meeting_id = log_path.name[: -len(LOG_SUFFIX)]
        log = _load_restored_log(log_path)
        reference = _load_reference(reference_dir, meeting_id, log_path)
        report = metric_report(log, reference)
        reports.append(report)
        rows.append(_report_row(meeting_id, report))
    mean_values = [
        sum(values) / len(values)
        for values in zip(*(
            (r.r1.f1, r.r2.f1, r.length_ratio, r.laal, r.el, r.rf, r.ne, r.r1_auc)
            for r in reports
        ))
    ]
    rows.append(["mean"] + [str(float(v)) for v in mean_values])
    lines = ["meeting_id," + ",".join(CSV_COLUMNS)]
    lines.extend(",".join(row) for row in rows)
    _atomic_write(Path(out_csv), "\n".join(lines) + "\n")
    return 0


def curve_csv(curve) -> str:
    lines = ["percent_time,score"]
    lines.extend(f"{x},{score}" for x, score in curve.points)
    return "\n".join(lines) + "\n"


def cmd_curve(log_dirs: list[str | Path], reference_dir: str | Path, out_dir: str | Path) -> int:
    """Averaged score-over-time curve per system: CSV breakpoints, one
    multi-series SVG, and the area under each curve on stdout."""
    reference_dir, out_dir = Path(reference_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = []
    for log_dir in [Path(d) for d in log_dirs]:
        system = log_dir.name
        curves = []
        for log_path in _log_paths(log_dir):
            meeting_id = log_path.name[: -len(LOG_SUFFIX)]
            log = _load_restored_log(log_path)
            reference = _load_reference(reference_dir, meeting_id, log_path)
            curves.append(rouge_curve(log, reference))
        averaged = average_curves(curves)
        series.append((system, averaged))
        _atomic_write(out_dir / f"curve_{system}.csv", curve_csv(averaged))
    _atomic_write(out_dir / "curves.svg", render_step_plot(series))
    for system, curve in series:
        print(f"R1-AUC {system} {auc(curve)}")
    return 0


def cmd_sample_corpus(out_dir: str | Path) -> int:
    """Copy the bundled synthetic corpus (transcripts + refs/) to a directory."""
    out = Path(out_dir)
    (out / "refs").mkdir(parents=True, exist_ok=True)
    corpus = resources.files("streamsumm").joinpath("data/corpus")
    for entry in sorted(corpus.iterdir(), key=lambda e: e.name):
        if entry.name == "refs":
            for ref in sorted(entry.iterdir(), key=lambda e: e.name):
                (out / "refs" / ref.name).write_text(ref.read_text(encoding="utf-8"), encoding="utf-8")
        elif entry.name.endswith(".txt"):
            (out / entry.name).write_text(entry.read_text(encoding="utf-8"), encoding="utf-8")
    return 0


def bundled_corpus_dir() -> Path:
    """Filesystem path of the bundled sample corpus."""
    return Path(str(resources.files("streamsumm").joinpath("data/corpus")))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamsumm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a policy over a transcript corpus")
    run.add_argument("--corpus", required=True, help="directory of transcripts (.txt or .jsonl)")
    run.add_argument("--policy", required=True,
                     choices=["length_based", "model_based", "sliding_window",
                              "full_rewriting", "fully_incremental"])
    run.add_argument("--chunk-size", type=int, default=64)
    run.add_argument("--maxlen", type=int, default=None, help="model_based input-token cap")
    run.add_argument("--initial-bullets", type=int, default=1)
    run.add_argument("--backend", default="extractive", choices=["extractive", "scripted", "remote"])
    run.add_argument("--script", default=None, help="scripted backend response file (JSONL)")
    run.add_argument("--endpoint", default=None, help="remote chat-completion URL")
    run.add_argument("--model", default=None, help="remote model name")
    run.add_argument("--api-key-env", default="STREAMSUMM_API_KEY")
    run.add_argument("--temperature", type=float, default=0.7)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--system", default=None, help="system name (default: policy name)")

    ev = sub.add_parser("eval", help="score event logs against references")
    ev.add_argument("--logs", required=True, help="directory of .events.jsonl files")
    ev.add_argument("--refs", required=True, help="directory of reference summaries")
    ev.add_argument("--out", required=True, help="metrics CSV path")

    cv = sub.add_parser("curve", help="averaged score-over-time curves and SVG plot")
    cv.add_argument("--logs", action="append", required=True,
                    help="log directory for one system; repeat per system")
    cv.add_argument("--refs", required=True)
    cv.add_argument("--out-dir", required=True)

    sc = sub.add_parser("sample-corpus", help="export the bundled sample corpus")
    sc.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        backend = BackendConfig(
            kind=args.backend,
            endpoint_url=args.endpoint,
            model_name=args.model,
            api_key_env_var=args.api_key_env,
            temperature=args.temperature,
            script=load_script(args.script) if args.script else None,
        )
        policy = PolicyConfig(
            kind=args.policy,
            chunk_size=args.chunk_size,
            maxlen=args.maxlen,
            initial_bullets=args.initial_bullets,
        )
        manifest = RunManifest(
            system_name=args.system or args.policy,
            policy=policy,
            backend=backend,
            corpus_dir=args.corpus,
            seed=args.seed,
            output_dir=args.out,
        )
        return cmd_run(manifest)
    if args.command == "eval":
        return cmd_eval(args.logs, args.refs, args.out)
    if args.command == "curve":
        return cmd_curve(args.logs, args.refs, args.out_dir)
    if args.command == "sample-corpus":
        return cmd_sample_corpus(args.out)
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
