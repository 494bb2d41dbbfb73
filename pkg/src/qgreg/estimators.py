"""scikit-learn style wrappers so the diagnostics compose with pipelines.

Inputs are batches of real periodic samples shaped ``(n_samples, n, n)``; a
single ``(n, n)`` field is treated as a batch of one.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .littlewood_paley import build_decomposition, shell_spectrum
from .monitor import InsufficientShellsError, WindowPolicy, criterion, fit_exponent
from .solver import SolverConfig, simulate
from .spectral import PhysParams, get_grid, to_spectral

__all__ = [
    "check_fields",
    "LittlewoodPaleyTransformer",
    "HolderExponentEstimator",
    "QGSimulator",
]


def check_fields(X, n: int | None = None) -> np.ndarray:
    """Validate a batch of square periodic fields and return it as float64 3D."""
    X = np.asarray(X)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ValueError(f"expected (n_samples, n, n) or (n, n), got shape {X.shape}")
    X = check_array(X, allow_nd=True, dtype=np.float64)
    if X.shape[1] != X.shape[2]:
        raise ValueError(f"fields must be square, got {X.shape[1:]}")
    get_grid(X.shape[1])
    if n is not None and X.shape[1] != n:
        raise ValueError(f"fitted on n={n}, got fields with n={X.shape[1]}")
    return X


def _spectral_batch(X, grid):
    return [to_spectral(x, grid) for x in X]


class LittlewoodPaleyTransformer(TransformerMixin, BaseEstimator):
    """Map each field to its weighted shell norms ``2^(js) ||Delta_j f||_p``.

    Parameters
    ----------
    p : float, default=inf
        Integrability exponent of the shell norms.
    s : float, default=0.0
        Regularity weight; ``s=0`` gives the raw shell spectrum.
    """

    def __init__(self, p=np.inf, s=0.0):
        self.p = p
        self.s = s

    def fit(self, X, y=None):
        X = check_fields(X)
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        self.grid_ = get_grid(X.shape[1])
        self.decomposition_ = build_decomposition(self.grid_)
        self.shells_ = np.arange(self.decomposition_.j_min, self.decomposition_.j_max + 1)
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "decomposition_")
        X = check_fields(X, self.grid_.n)
        out = np.empty((len(X), len(self.shells_)))
        for i, f in enumerate(_spectral_batch(X, self.grid_)):
            out[i] = shell_spectrum(self.decomposition_, f, self.p).weighted(self.s)
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "shells_")
        return np.array([f"shell_{j}" for j in self.shells_], dtype=object)


class HolderExponentEstimator(BaseEstimator):
    """Estimate the Hoelder exponent of each field from its shell decay.

    After ``fit`` the per-sample ``delta_est_``, ``intercept_`` and
    ``residual_`` arrays are available; samples without three usable shells
    get NaN. With ``alpha`` set, :meth:`margin` evaluates the regularity
    criterion ``delta > 1 - 2 alpha``.
    """

    def __init__(self, alpha=None, drop_low=1, drop_high=2):
        self.alpha = alpha
        self.drop_low = drop_low
        self.drop_high = drop_high

    def _fit_batch(self, X, n=None):
        X = check_fields(X, n)
        grid = get_grid(X.shape[1])
        decomp = build_decomposition(grid)
        window = WindowPolicy(self.drop_low, self.drop_high)
        fits = []
        for f in _spectral_batch(X, grid):
            try:
                fits.append(fit_exponent(shell_spectrum(decomp, f, np.inf), window))
            except InsufficientShellsError:
                fits.append(None)
        return grid, fits

    def fit(self, X, y=None):
        self.grid_, self.fits_ = self._fit_batch(X)
        nan = float("nan")
        self.delta_est_ = np.array([f.delta_est if f else nan for f in self.fits_])
        self.intercept_ = np.array([f.intercept if f else nan for f in self.fits_])
        self.residual_ = np.array([f.residual if f else nan for f in self.fits_])
        return self

    def predict(self, X):
        check_is_fitted(self, "grid_")
        _, fits = self._fit_batch(X, self.grid_.n)
        return np.array([f.delta_est if f else float("nan") for f in fits])

    def margin(self, X):
        if self.alpha is None:
            raise ValueError("alpha must be set to evaluate the criterion")
        return np.array(
            [criterion(d, self.alpha).margin if np.isfinite(d) else float("nan") for d in self.predict(X)]
        )


class QGSimulator(TransformerMixin, BaseEstimator):
    """Evolve each input field to ``t_end`` under the dissipative SQG dynamics.

    ``fit`` validates the parameters for the input grid; ``transform``
    returns the evolved real samples. ``diagnostics_`` and ``status_`` hold
    the records of the last transformed sample.
    """

    def __init__(self, kappa=0.1, alpha=0.3, dt=1e-3, t_end=1.0, cfl_safety=0.5, diag_interval=1):
        self.kappa = kappa
        self.alpha = alpha
        self.dt = dt
        self.t_end = t_end
        self.cfl_safety = cfl_safety
        self.diag_interval = diag_interval

    def fit(self, X, y=None):
        X = check_fields(X)
        self.config_ = SolverConfig(
            PhysParams(self.kappa, self.alpha),
            X.shape[1],
            self.dt,
            self.t_end,
            self.cfl_safety,
            self.diag_interval,
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_fields(X, self.config_.n)
        out = np.empty_like(X)
        for i, f in enumerate(_spectral_batch(X, self.config_.grid)):
            result = simulate(f, self.config_)
            self.diagnostics_ = result.records
            self.status_ = result.status
            out[i] = result.state.theta.to_real()
        return out
