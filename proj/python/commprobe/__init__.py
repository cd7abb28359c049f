"""Python access to the commprobe core: metrics, screening and pipeline stages."""

from ._core import (
    Error,
    MissingArtifact,
    ValidationError,
    check_alpaca_export,
    classification_accuracy,
    clean_text,
    criteria,
    fid,
    ingest,
    jsd,
    louvain,
    modularity,
    parse_answer,
    pseudonym,
    questionnaire_checksum,
    render_prompt,
    run_stage,
    select_quality,
    set_log_level,
    stages,
    toxicity_histogram,
    wcs_score,
)

__all__ = [
    "Error",
    "MissingArtifact",
    "ValidationError",
    "check_alpaca_export",
    "classification_accuracy",
    "clean_text",
    "criteria",
    "fid",
    "ingest",
    "jsd",
    "louvain",
    "modularity",
    "parse_answer",
    "pseudonym",
    "questionnaire_checksum",
    "render_prompt",
    "run_stage",
    "select_quality",
    "set_log_level",
    "stages",
    "toxicity_histogram",
    "wcs_score",
]
