"""Estimator-style wrappers so the extractors drop into sklearn pipelines.

Both transformers are stateless (fit just returns self); transform takes a
sequence of VideoRecords and returns the stacked feature matrix.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .features import FeatureConfig, extract_matrix
from .optflow import FlowParams


class DMarkerFeaturizer(BaseEstimator, TransformerMixin):
    """Videos -> (n, 50) landmark-dynamics descriptors (eyelid + lip blocks)."""

    def __init__(self, window: int = 5, cache_dir=None, jobs: int = 1):
        self.window = window
        self.cache_dir = cache_dir
        self.jobs = jobs

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        cfg = FeatureConfig(window=self.window)
        matrix, _ = extract_matrix(list(X), "dmarker", cfg, self.cache_dir, self.jobs)
        return matrix


class FlowFeaturizer(BaseEstimator, TransformerMixin):
    """Videos -> (n, 30|60) pooled optical-flow descriptors."""

    def __init__(
        self,
        components: str = "xy",
        beta: float = 0.15,
        pyramid_levels: int = 4,
        scale_factor: float = 0.5,
        warps_per_level: int = 3,
        iterations_per_warp: int = 50,
        margin_factor: float = 0.5,
        cache_dir=None,
        jobs: int = 1,
    ):
        self.components = components
        self.beta = beta
        self.pyramid_levels = pyramid_levels
        self.scale_factor = scale_factor
        self.warps_per_level = warps_per_level
        self.iterations_per_warp = iterations_per_warp
        self.margin_factor = margin_factor
        self.cache_dir = cache_dir
        self.jobs = jobs

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        mode = {"x": "flow_x", "y": "flow_y", "xy": "flow_xy"}[self.components]
        cfg = FeatureConfig(
            flow=FlowParams(
                beta=self.beta,
                pyramid_levels=self.pyramid_levels,
                scale_factor=self.scale_factor,
                warps_per_level=self.warps_per_level,
                iterations_per_warp=self.iterations_per_warp,
            ),
            margin_factor=self.margin_factor,
        )
        matrix, _ = extract_matrix(list(X), mode, cfg, self.cache_dir, self.jobs)
        return matrix
