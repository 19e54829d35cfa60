"""Topic models over (role, institution) pair corpora."""

from .analysis import (
    DominantTopic,
    classify_dynamics,
    doc_topics,
    dominant_topic,
    export_sankey,
    load_fit,
    nearest_slice,
    save_fit,
    top_terms,
    total_variation,
    write_sankey_csv,
)
from .common import TopicModelConfig
from .dtm import DtmFit, fit_dtm
from .lda import LdaFit, fit_lda

__all__ = [
    "DominantTopic",
    "DtmFit",
    "LdaFit",
    "TopicModelConfig",
    "classify_dynamics",
    "doc_topics",
    "dominant_topic",
    "export_sankey",
    "fit_dtm",
    "fit_lda",
    "load_fit",
    "nearest_slice",
    "save_fit",
    "top_terms",
    "total_variation",
    "write_sankey_csv",
]
