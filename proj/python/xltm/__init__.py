"""Python bindings for the xltm cross-lingual topic model core."""

import json as _json

from ._xltm import (
    XltmError,
    adjusted_rand_index,
    cluster_language_balance,
    kmeans_fit,
    ldd_t_statistics,
    load_corpus,
    load_embeddings,
    npmi,
    refine,
    topic_quality,
    truncated_svd,
    write_embeddings,
)
from . import _xltm


def generate_synthetic(spec=None, **overrides):
    """Planted-topic dataset as a dict; spec keys follow the synthetic spec JSON."""
    merged = dict(spec or {})
    merged.update(overrides)
    return _xltm._generate_synthetic(_json.dumps(merged))


def run_pipeline(config, seed=1):
    """Run one seed of the pipeline and return the report as a dict."""
    return _json.loads(_xltm._run_pipeline(_json.dumps(config), seed))


__all__ = [
    "XltmError",
    "adjusted_rand_index",
    "cluster_language_balance",
    "generate_synthetic",
    "kmeans_fit",
    "ldd_t_statistics",
    "load_corpus",
    "load_embeddings",
    "npmi",
    "refine",
    "run_pipeline",
    "topic_quality",
    "truncated_svd",
    "write_embeddings",
]
