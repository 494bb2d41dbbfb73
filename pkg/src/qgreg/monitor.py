"""Hoelder-exponent estimation from shell decay and the regularity bootstrap.

The exponent of a snapshot is read off the slope of ``log2 ||Delta_j f||_inf``
against ``j``. The bootstrap iterates the exponent map

    delta_1 = delta (1 - 2/p),   delta_{k+1} = 2 delta_k + 2 alpha - 1 - 2/p

at fixed ``p`` until the exponent exceeds one.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .littlewood_paley import DyadicDecomposition, ShellSpectrum, shell_spectrum
from .spectral import SpectralField

__all__ = [
    "InsufficientShellsError",
    "HypothesisViolatedError",
    "PBelowThresholdError",
    "WindowPolicy",
    "ExponentFit",
    "Criterion",
    "BootstrapParams",
    "BootstrapTrace",
    "MonitorRecord",
    "fit_exponent",
    "criterion",
    "interpolation_exponent",
    "thresholds",
    "bootstrap",
    "choose_p",
    "analyze_snapshot",
    "monitor_run",
    "MONITOR_COLUMNS",
    "fit_to_dict",
    "monitor_csv",
]

# slack for deciding strict inequalities against 1 - 2 alpha in floating point
STRICT_TOL = 1e-12
MIN_SHELL_NORM = 1e-14
MAX_ITERATIONS = 10_000
INCONCLUSIVE_MARGIN = 0.01


class InsufficientShellsError(ValueError):
    pass


class HypothesisViolatedError(ValueError):
    pass


class PBelowThresholdError(ValueError):
    def __init__(self, message: str, p0: float, p1: float):
        super().__init__(message)
        self.p0 = p0
        self.p1 = p1


@dataclass(frozen=True)
class WindowPolicy:
    """Shells dropped from each end of the spectrum before fitting."""

    drop_low: int = 1
    drop_high: int = 2

    def __post_init__(self):
        if self.drop_low < 0 or self.drop_high < 0:
            raise ValueError("window drops must be non-negative")


@dataclass(frozen=True)
class ExponentFit:
    delta_est: float
    intercept: float
    j_window: tuple[int, int]
    residual: float
    n_shells: int


def fit_exponent(spectrum: ShellSpectrum, window: WindowPolicy | None = None) -> ExponentFit:
    """Least-squares line through ``(j, log2 norm_j)``; ``delta_est = -slope``.

    Shells with norm below 1e-14 inside the window are ignored.

    Raises
    ------
    InsufficientShellsError
        If fewer than three usable shells remain.
    """
    window = window or WindowPolicy()
    js, norms = spectrum.js, spectrum.norms
    stop = len(js) - window.drop_high
    js, norms = js[window.drop_low:stop], norms[window.drop_low:stop]
    keep = norms > MIN_SHELL_NORM
    js, norms = js[keep], norms[keep]
    if len(js) < 3:
        raise InsufficientShellsError(
            f"insufficient shells: {len(js)} usable in window, need 3"
        )
    y = np.log2(norms)
    x = js.astype(np.float64)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    return ExponentFit(
        delta_est=float(-slope),
        intercept=float(intercept),
        j_window=(int(js[0]), int(js[-1])),
        residual=rms,
        n_shells=int(len(js)),
    )


@dataclass(frozen=True)
class Criterion:
    holds: bool
    margin: float


def criterion(fit, alpha: float) -> Criterion:
    """``delta > 1 - 2 alpha`` (strict). ``fit`` may also be a bare exponent."""
    delta = fit.delta_est if isinstance(fit, ExponentFit) else float(fit)
    margin = delta - (1.0 - 2.0 * alpha)
    if abs(margin) <= STRICT_TOL:
        margin = 0.0
    return Criterion(holds=margin > 0, margin=margin)


def interpolation_exponent(delta: float, p: float) -> float:
    """``delta (1 - 2/p)``, the Besov index reached by interpolating ``C^delta`` with ``L^2``."""
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if np.isinf(p):
        return float(delta)
    return delta * (1.0 - 2.0 / p)


@dataclass(frozen=True)
class BootstrapParams:
    alpha: float
    delta: float
    p: float

    def __post_init__(self):
        if not (0 < self.alpha < 0.5):
            raise ValueError(
                f"alpha={self.alpha} outside the supercritical range (0, 1/2)"
            )
        if not self.p >= 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.delta - (1.0 - 2.0 * self.alpha) <= STRICT_TOL:
            raise HypothesisViolatedError(
                f"hypothesis violated: delta={self.delta} <= 1 - 2 alpha = "
                f"{1.0 - 2.0 * self.alpha:.12g}"
            )


def thresholds(alpha: float, delta: float, p: float) -> tuple[float, float]:
    """``(p0, p1)`` with ``p1`` evaluated at ``delta_1 = delta (1 - 2/p)``.

    ``p1`` is infinite when ``delta_1 <= 1 - 2 alpha``.
    """
    gap = 1.0 - 2.0 * alpha
    p0 = 2.0 * delta / (delta - gap)
    d1 = interpolation_exponent(delta, p)
    p1 = 2.0 / (d1 - gap) if d1 - gap > STRICT_TOL else math.inf
    return p0, p1


@dataclass
class BootstrapTrace:
    alpha: float
    delta: float
    p: float
    p0: float
    p1: float
    deltas: list[float] = field(default_factory=list)
    terminated: bool = False
    # index of the step that first crossed 1; the 1 - delta > 0 premise
    # is no longer checked for it
    final_step: int | None = None

    @property
    def iterations(self) -> int:
        return len(self.deltas)

    @property
    def gamma(self) -> float:
        return self.deltas[-1] if self.deltas else float("nan")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "delta": self.delta,
            "p": self.p,
            "p0": self.p0,
            "p1": self.p1,
            "deltas": list(self.deltas),
            "terminated": self.terminated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def bootstrap(params: BootstrapParams) -> BootstrapTrace:
    """Iterate the exponent map at fixed ``p`` until the exponent exceeds 1.

    Raises
    ------
    PBelowThresholdError
        If ``p <= max(p0, p1)``; both thresholds are attached.
    """
    a, delta, p = params.alpha, params.delta, params.p
    p0, p1 = thresholds(a, delta, p)
    if not p > max(p0, p1):
        raise PBelowThresholdError(
            f"p below threshold: p={p} <= max(p0={p0:.6g}, p1={p1:.6g})", p0, p1
        )
    shift = 2.0 * a - 1.0 - 2.0 / p
    trace = BootstrapTrace(a, delta, p, p0, p1)
    d = interpolation_exponent(delta, p)
    trace.deltas.append(d)
    while d <= 1.0 and len(trace.deltas) < MAX_ITERATIONS:
        d = 2.0 * d + shift
        trace.deltas.append(d)
    trace.terminated = trace.deltas[-1] > 1.0
    if trace.terminated:
        trace.final_step = len(trace.deltas) - 1
    return trace


def choose_p(alpha: float, delta: float) -> float:
    """Integrability exponent ``2 ceil(max(p0, p1))`` for the bootstrap.

    ``p1`` depends on ``p`` through ``delta_1``; it is first evaluated in the
    ``p -> inf`` limit and ``p`` is doubled until it clears both thresholds.
    """
    gap = 1.0 - 2.0 * alpha
    p0 = 2.0 * delta / (delta - gap)
    p1_limit = 2.0 / (delta - gap)
    p = 2.0 * math.ceil(max(p0, p1_limit))
    while not p > max(thresholds(alpha, delta, p)):
        p *= 2.0
    return p


@dataclass
class MonitorRecord:
    time: float
    fit: ExponentFit | None
    criterion: Criterion | None
    trace: BootstrapTrace | None
    status: str
    p_used: float | None = None

    def row(self) -> dict:
        return {
            "time": self.time,
            "delta_est": self.fit.delta_est if self.fit else float("nan"),
            "residual": self.fit.residual if self.fit else float("nan"),
            "margin": self.criterion.margin if self.criterion else float("nan"),
            "criterion": self.status,
            "p_used": self.p_used if self.p_used is not None else float("nan"),
            "bootstrap_steps": self.trace.iterations if self.trace else 0,
            "gamma_reached": bool(self.trace and self.trace.terminated),
        }


MONITOR_COLUMNS = (
    "time",
    "delta_est",
    "residual",
    "margin",
    "criterion",
    "p_used",
    "bootstrap_steps",
    "gamma_reached",
)


def analyze_snapshot(
    theta: SpectralField,
    decomp: DyadicDecomposition,
    alpha: float,
    time: float = 0.0,
    window: WindowPolicy | None = None,
) -> MonitorRecord:
    """Fit, criterion and (when conclusive) bootstrap for one snapshot.

    ``status`` is one of ``holds``, ``fails``, ``inconclusive`` (margin within
    0.01 of the threshold, or alpha outside the supercritical range) and
    ``insufficient shells``.
    """
    spectrum = shell_spectrum(decomp, theta, np.inf)
    try:
        fit = fit_exponent(spectrum, window)
    except InsufficientShellsError:
        return MonitorRecord(time, None, None, None, "insufficient shells")
    crit = criterion(fit, alpha)
    if not crit.holds:
        return MonitorRecord(time, fit, crit, None, "fails")
    if crit.margin <= INCONCLUSIVE_MARGIN or not (0 < alpha < 0.5):
        return MonitorRecord(time, fit, crit, None, "inconclusive")
    p = choose_p(alpha, fit.delta_est)
    trace = bootstrap(BootstrapParams(alpha, fit.delta_est, p))
    return MonitorRecord(time, fit, crit, trace, "holds", p)


def monitor_run(
    samples: Iterable,
    decomp: DyadicDecomposition,
    alpha: float,
    window: WindowPolicy | None = None,
) -> list[MonitorRecord]:
    """Analyse an ordered stream of ``(time, theta)`` pairs or solver states."""
    out = []
    for item in samples:
        if hasattr(item, "theta"):
            time, theta = item.time, item.theta
        else:
            time, theta = item
        out.append(analyze_snapshot(theta, decomp, alpha, time, window))
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def monitor_csv(records: Iterable[MonitorRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(MONITOR_COLUMNS) + "\n")
    for rec in records:
        row = rec.row()
        buf.write(",".join(_fmt(row[c]) for c in MONITOR_COLUMNS) + "\n")
    return buf.getvalue()


def fit_to_dict(fit: ExponentFit) -> dict:
    d = asdict(fit)
    d["j_window"] = list(fit.j_window)
    return d
