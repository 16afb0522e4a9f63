"""Online meeting summarization: streaming policies and evaluation metrics."""

from .backends import (
    Backend,
    BackendConfig,
    BackendError,
    ExtractiveBackend,
    RemoteBackend,
    ScriptedBackend,
    ScriptEntry,
    SummaryRequest,
    SummaryResult,
    make_backend,
    render_prompt,
)
from .metrics import (
    Curve,
    MetricReport,
    RougeScore,
    auc,
    average_curves,
    expected_latency,
    laal,
    metric_report,
    normalized_erasure,
    restore_event_log,
    rouge_curve,
    rouge_n,
    rouge_tokenize,
    snapshot_outputs,
)
from .policies import (
    Event,
    EventLog,
    PolicyConfig,
    PolicyRunError,
    dump_event_log,
    load_event_log,
    read_event_log,
    run_policy,
    write_event_log,
)
from .transcript import (
    Chunk,
    IdentityMap,
    SourceToken,
    Transcript,
    Turn,
    chunk_stream,
    load_transcript,
    parse_jsonl_transcript,
    parse_transcript,
    reidentify,
    render_chunks,
    restore_labels,
)

__version__ = "0.1.0"
