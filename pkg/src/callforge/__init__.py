"""Dataset forge and evaluation harness for function-calling corpora."""

from .audit_repair import AuditReport, NormalizationMap, PrunePlan, apply_prune, audit, detect_duplicates, normalize_sample
from .call_parser import DEPLOYMENT_AWARE, STRICT, ParsedOutput, parse_output
from .chat_serializer import (
    ControlTokens,
    SerializedExample,
    SerializerConfig,
    ThinkTokens,
    check_context_fit,
    count_tokens,
    serialize,
    serialize_think,
)
from .evaluator import MetricsReport, RecordScore, aggregate, evaluate, render_report, score_record
from .schema_core import ParameterSpec, Sample, ToolCall, ToolSchema, ValidationReport, load_inventory, validate_call
from .splitter import SplitSpec, stratified_split
from .tool_sampler import SamplerConfig, sample_tools

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "NormalizationMap", "PrunePlan", "apply_prune", "audit", "detect_duplicates", "normalize_sample",
    "DEPLOYMENT_AWARE", "STRICT", "ParsedOutput", "parse_output",
    "ControlTokens", "SerializedExample", "SerializerConfig", "ThinkTokens",
    "check_context_fit", "count_tokens", "serialize", "serialize_think",
    "MetricsReport", "RecordScore", "aggregate", "evaluate", "render_report", "score_record",
    "ParameterSpec", "Sample", "ToolCall", "ToolSchema", "ValidationReport", "load_inventory", "validate_call",
    "SplitSpec", "stratified_split", "SamplerConfig", "sample_tools",
]
