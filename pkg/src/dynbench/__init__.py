"""Dynamic evaluation datasets from static benchmarks.

The package turns a fixed benchmark into fresh, difficulty-calibrated,
panel-checked questions: sample the source evenly, extract knowledge
points and main ideas, ground each point in an explanation, design new
questions (optionally across six cognitive levels), steer their
difficulty to a target precision by feedback rewriting, and keep only
questions an odd judge panel approves.  Metrics for contamination
auditing (text-overlap similarity, dataset perplexity, clean-vs-suspect
precision deltas) ship alongside.
"""

from .core import (
    PIPELINE_VERSION,
    BloomLayer,
    DynamicDataset,
    Explanation,
    GeneratedQuestion,
    ItemKind,
    KnowledgeAnnotation,
    Manifest,
    StaticItem,
    canonical_dumps,
    check_unique_ids,
    digest_bytes,
    digest_text,
    is_single_paragraph,
)
from .errors import (
    AuthFailure,
    CassetteMiss,
    ConfigError,
    DuplicateId,
    DuplicateLayer,
    DynbenchError,
    EmptyDataset,
    EmptySample,
    FingerprintCollision,
    IdMismatch,
    InvalidArg,
    InvariantViolation,
    IoFailure,
    MalformedCassette,
    MalformedRecord,
    MissingInput,
    MissingLayer,
    NoChange,
    NotConverged,
    ProviderError,
    RateLimited,
    SampleCollisionWarning,
    TransportError,
    UnparseableResponse,
    UnsupportedCapability,
)
from .sampling import HAVE_JIT, sample_indices
from .metrics import (
    FLAG_THRESHOLD,
    LogProbSample,
    ReportRow,
    contamination_report,
    contamination_rows,
    dataset_perplexity,
    extract_answer_letter,
    lcs_length,
    lcs_similarity,
    normalize_text,
    render_report,
    sample_perplexity,
    similarity_rows,
)
from .dataset_io import (
    dataset_digest,
    file_digest,
    load_logprob_samples,
    load_static,
    read_dynamic,
    read_records,
    write_dynamic,
    write_jsonl,
    write_records,
    write_static,
)
from .provider import (
    EPOCH_TIMESTAMP,
    CachingProvider,
    ChatClient,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    KeyedLocks,
    LiveProvider,
    Provider,
    ProviderExchange,
    RecordingProvider,
    ReplayProvider,
    RoutingProvider,
    ScriptedProvider,
    load_cassette,
    sequence_responder,
    user_request,
)
from .prompts import (
    PromptLibrary,
    content_words,
    default_library,
    load_stopwords,
    render_item,
    render_options,
)
from .annotate import (
    annotate_item,
    extract_knowledge_points,
    extract_main_idea,
    parse_bracketed_list,
    select_knowledge_points,
)
from .explain import collapse_paragraphs, explain_knowledge_point, relevance_overlap
from .qgen import (
    GenerationContext,
    RestructureDirection,
    design_bloom_questions,
    design_question,
    parse_question_records,
    restructure,
    strip_code_fence,
)
from .align import (
    Alignment,
    AlignmentResult,
    AlignmentState,
    EvalResult,
    EvalVerdict,
    FreeAnswerVerdict,
    align,
    classify,
    compute_delta,
    evaluate_dataset,
    evaluate_free_answers,
)
from .votecheck import CheckResult, VoteRecord, check_dataset, judge, majority, vote
from .config import (
    ModelConfig,
    PipelineConfig,
    RolesConfig,
    load_config,
    parse_config,
)
from .pipeline import (
    STAGES,
    ClientSet,
    Pipeline,
    PipelineResult,
    RunPaths,
    RunState,
    build_clients,
    build_provider,
    evaluate_artifact,
    load_eval_results,
    report_from_files,
    run_pipeline,
)

__version__ = PIPELINE_VERSION

__all__ = [name for name in dir() if not name.startswith("_")]
