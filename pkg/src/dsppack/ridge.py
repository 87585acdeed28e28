"""Stage cost prediction: ridge regression with evidence-maximized
hyperparameters.

Each pipeline-stage configuration maps to a fixed feature vector; three
independent regressors estimate its DSP count, LUT count, and worst
negative slack.  Hyperparameters (weight precision, noise precision) are
updated by the standard evidence fixed point until the relative change
drops below 1e-6 or 300 iterations; a fixed-hyperparameter mode reproduces
the closed-form regularized normal-equations solution exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FEATURE_MAP_ID = "stage-features-v1"
FEATURES = ("pf_dsp", "pf_lut", "w_b", "a_b", "wxa", "op_mul",
            "kernel_area", "bias")
TARGETS = ("dsp", "lut", "wns")

MODEL_SCHEMA_VERSION = 1

_EPS_PRIOR = 1e-12  # flat gamma hyperpriors; keep the noiseless limit exact
_TOL = 1e-6
_MAX_ITER = 300


class DegenerateDataError(ValueError):
    """All sample rows identical: nothing to regress on."""


def stage_features(pf_dsp, pf_lut, w_b, a_b, op_mul, kernel_area) -> list[float]:
    """The versioned feature map of a stage configuration."""
    return [float(pf_dsp), float(pf_lut), float(w_b), float(a_b),
            float(w_b * a_b), float(op_mul), float(kernel_area), 1.0]


@dataclass
class RidgeModel:
    """One fitted target: coefficients over normalized features."""

    coefficients: np.ndarray
    noise_precision: float
    weight_precision: float
    mean: np.ndarray
    std: np.ndarray

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        xn = (x - self.mean) / self.std
        return float(xn @ self.coefficients)

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "noise_precision": self.noise_precision,
            "weight_precision": self.weight_precision,
            "normalization": {"mean": self.mean.tolist(),
                              "std": self.std.tolist()},
        }

    @classmethod
    def from_dict(cls, doc) -> "RidgeModel":
        return cls(
            coefficients=np.asarray(doc["coefficients"], dtype=float),
            noise_precision=float(doc["noise_precision"]),
            weight_precision=float(doc["weight_precision"]),
            mean=np.asarray(doc["normalization"]["mean"], dtype=float),
            std=np.asarray(doc["normalization"]["std"], dtype=float),
        )


def _normalize(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    const = std == 0.0
    mean[const] = 0.0
    std[const] = 1.0
    return (X - mean) / std, mean, std


def fit_ridge(X, y, alpha: float | None = None,
              lambda_: float | None = None) -> RidgeModel:
    """Fit one target.

    With ``alpha``/``lambda_`` given, solves the regularized normal
    equations (ridge parameter lambda/alpha) directly.  Otherwise both
    precisions are evidence-maximized from the data.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, p) with matching y")
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("features and targets must be finite")
    if np.all(X == X[0]):
        raise DegenerateDataError("all sample rows identical")

    Xn, mean, std = _normalize(X)
    U, s, Vt = np.linalg.svd(Xn, full_matrices=False)
    uty = U.T @ y

    def coef_for(a, l):
        shrink = s * a / (a * s**2 + l)
        return Vt.T @ (shrink * uty)

    if alpha is not None and lambda_ is not None:
        if alpha <= 0 or lambda_ <= 0:
            raise ValueError("precisions must be positive")
        coef = coef_for(alpha, lambda_)
        return RidgeModel(coef, alpha, lambda_, mean, std)
    if (alpha is None) != (lambda_ is None):
        raise ValueError("fix both precisions or neither")

    var_y = float(np.var(y))
    a = 1.0 / (var_y + _EPS_PRIOR) if var_y > 0 else 1.0
    l = 1.0
    for _ in range(_MAX_ITER):
        coef = coef_for(a, l)
        gamma = float(np.sum(a * s**2 / (l + a * s**2)))
        rss = float(np.sum((y - Xn @ coef) ** 2))
        l_new = (gamma + 2 * _EPS_PRIOR) / (float(coef @ coef) + 2 * _EPS_PRIOR)
        a_new = (n - gamma + 2 * _EPS_PRIOR) / (rss + 2 * _EPS_PRIOR)
        if (abs(a_new - a) <= _TOL * abs(a)
                and abs(l_new - l) <= _TOL * abs(l)):
            a, l = a_new, l_new
            break
        a, l = a_new, l_new
    coef = coef_for(a, l)
    return RidgeModel(coef, a, l, mean, std)


@dataclass(frozen=True)
class StageEstimate:
    """Predicted resources and timing slack of one pipeline stage."""

    r_dsp: int
    r_lut: int
    t_wns: float

    def __post_init__(self):
        if self.r_dsp < 0 or self.r_lut < 0:
            raise ValueError("resource estimates must be non-negative")


class StagePredictor:
    """Bundle of the three per-target regressors."""

    def __init__(self, models: dict):
        missing = set(TARGETS) - set(models)
        if missing:
            raise ValueError(f"missing target models: {sorted(missing)}")
        self.models = models

    @classmethod
    def fit(cls, rows, targets, alpha=None, lambda_=None) -> "StagePredictor":
        """rows: feature vectors; targets: dict target -> list of observations."""
        X = np.asarray(rows, dtype=float)
        models = {}
        for t in TARGETS:
            models[t] = fit_ridge(X, np.asarray(targets[t], dtype=float),
                                  alpha=alpha, lambda_=lambda_)
        return cls(models)

    def predict(self, features) -> StageEstimate:
        """Point estimate: resources clamped at zero and rounded up."""
        dsp = self.models["dsp"].predict(features)
        lut = self.models["lut"].predict(features)
        wns = self.models["wns"].predict(features)
        return StageEstimate(
            r_dsp=int(math.ceil(max(0.0, dsp) - 1e-9)),
            r_lut=int(math.ceil(max(0.0, lut) - 1e-9)),
            t_wns=wns,
        )

    def to_dict(self) -> dict:
        return {
            "version": MODEL_SCHEMA_VERSION,
            "feature_map_id": FEATURE_MAP_ID,
            "targets": {t: m.to_dict() for t, m in self.models.items()},
        }

    @classmethod
    def from_dict(cls, doc) -> "StagePredictor":
        from .schemas import validate_document

        validate_document(doc, "model")
        if doc["version"] != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model version {doc['version']}")
        if doc["feature_map_id"] != FEATURE_MAP_ID:
            raise ValueError(f"unknown feature map {doc['feature_map_id']!r}")
        return cls({t: RidgeModel.from_dict(m)
                    for t, m in doc["targets"].items()})
