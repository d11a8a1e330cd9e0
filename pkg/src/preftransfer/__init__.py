"""Select K uniformly-weighted target items whose empirical distribution
matches a source preference distribution, under MMD or 1-Wasserstein."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CandidatePool,
    CappedWeights,
    LabeledPoint,
    PreferenceSet,
    RunConfig,
    Selection,
    build_candidate_pool,
    uniform_capped_weights,
)
from .pipeline import PipelineResult, run_pipeline  # noqa: F401
