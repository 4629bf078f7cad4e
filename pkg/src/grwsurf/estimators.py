"""scikit-learn style wrappers over the functional core.

``ExtrinsicTransformer`` maps parameter points ``(N, 2)`` to a feature
matrix of extrinsic quantities; ``CapacityEstimator`` meshes a surface on
``fit`` and predicts annulus capacities for outer radii.
"""
from __future__ import annotations

from typing import Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import gallery
from .parabolic import build_mesh, capacity, geodesic_distance
from .surface import extrinsic_report

__all__ = ["ExtrinsicTransformer", "CapacityEstimator", "FEATURES"]

FEATURES = ("u", "K_intrinsic", "K_gauss", "Kbar", "H_norm", "sigma_norm",
            "tr_A2_time", "grad_u_sq", "lap_u", "lap_log_u", "grad_tau_sq")


def _instance(surface, params):
    if isinstance(surface, str):
        return gallery.instantiate(surface, params)
    if isinstance(surface, gallery.Instance):
        return surface
    raise TypeError("surface must be a gallery name or a gallery Instance")


class ExtrinsicTransformer(TransformerMixin, BaseEstimator):
    """Evaluate extrinsic quantities of a gallery surface at parameter points.

    Parameters
    ----------
    surface : str or gallery.Instance
        Gallery name (``"enneper_l4"``, ...) or an already built instance.
    params : dict, optional
        Gallery parameters passed to :func:`gallery.instantiate`.
    features : sequence of str
        Columns of the output, drawn from :data:`FEATURES`.
    """

    def __init__(self, surface="enneper_l4", params: Optional[Mapping] = None,
                 features: Sequence[str] = ("u", "K_intrinsic", "H_norm")):
        self.surface = surface
        self.params = params
        self.features = features

    def fit(self, X=None, y=None):
        unknown = [f for f in self.features if f not in FEATURES]
        if unknown:
            raise ValueError(f"unknown features {unknown}; known: {', '.join(FEATURES)}")
        self.instance_ = _instance(self.surface, self.params)
        self.immersion_ = self.instance_.immersion
        self.n_features_in_ = 2
        self.feature_names_out_ = np.asarray(list(self.features), dtype=object)
        return self

    def transform(self, X):
        check_is_fitted(self, "immersion_")
        X = check_array(X, dtype=float, ensure_min_features=2)
        if X.shape[1] != 2:
            raise ValueError(f"expected parameter points with 2 columns, got {X.shape[1]}")
        rep = extrinsic_report(self.immersion_, X)
        return np.stack([np.asarray(getattr(rep, f), dtype=float) for f in self.features], 1)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "feature_names_out_")
        return self.feature_names_out_


class CapacityEstimator(RegressorMixin, BaseEstimator):
    """Capacity of ``B_R \\ B_r`` as a function of the outer radius ``R``.

    ``fit`` builds the mesh and geodesic distances; ``predict`` takes a
    column of outer radii and returns capacities.  ``y`` passed to ``fit``
    is ignored, and ``score`` compares predictions with reference values
    through the usual coefficient of determination.
    """

    def __init__(self, surface="slice", params: Optional[Mapping] = None, r: float = 1.0,
                 R_max: float = 3.0, h: float = 0.05, growth: Optional[float] = None,
                 center=(0.0, 0.0), snap: Sequence[float] = ()):
        self.surface = surface
        self.params = params
        self.r = r
        self.R_max = R_max
        self.h = h
        self.growth = growth
        self.center = center
        self.snap = snap

    def fit(self, X=None, y=None):
        if not 0 < self.r < self.R_max:
            raise ValueError("need 0 < r < R_max")
        inst = _instance(self.surface, self.params)
        self.mesh_ = build_mesh(inst.immersion, self.center, None, self.h, growth=self.growth,
                                stop_distance=self.R_max + 2 * self.h,
                                snap=[self.r, *self.snap, self.R_max])
        geodesic_distance(self.mesh_)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "mesh_")
        X = check_array(X, dtype=float, ensure_2d=False)
        R = X.reshape(len(X), -1)
        if R.shape[1] != 1:
            raise ValueError("expected a single column of outer radii")
        out = []
        for v in R[:, 0]:
            if v > self.R_max:
                raise ValueError(f"R = {v:g} exceeds the fitted R_max = {self.R_max:g}")
            out.append(capacity(self.mesh_, self.r, float(v)).capacity)
        return np.asarray(out)
