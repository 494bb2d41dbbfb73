"""Integrating-factor RK4 integration of the dissipative SQG equation.

    d/dt theta + u . grad(theta) + kappa (-Delta)^alpha theta = 0,
    u = (-R2 theta, R1 theta).

The diagonal dissipative part is integrated exactly through the factor
``exp(-kappa |k|^(2 alpha) t)``; the dealiased advection term is handled by
classical RK4 in the transformed variable.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .spectral import (
    Grid2D,
    PhysParams,
    SpectralField,
    _derivative_symbols,
    _riesz_symbols,
    fractional_laplacian,
    get_grid,
    hermitian_part,
    lp_norm,
    riesz_velocity,
    to_spectral,
    write_snapshot,
)

logger = logging.getLogger(__name__)

GRADIENT_BLOWUP = 1e8
CFL_EPS = 1e-12
DIAGNOSTIC_COLUMNS = ("time", "l2", "linf", "halpha_seminorm", "cfl_dt")

__all__ = [
    "SolverConfig",
    "SolverState",
    "BlowUpError",
    "SimulationResult",
    "nonlinear_term",
    "step",
    "cfl_dt",
    "energy_balance",
    "diagnostics",
    "simulate",
    "diagnostics_csv",
    "write_checkpoint",
    "INITIAL_CONDITIONS",
    "single_mode",
    "two_mode",
    "random_band_limited",
    "weierstrass",
    "make_initial_condition",
]


@dataclass(frozen=True)
class SolverConfig:
    phys: PhysParams
    n: int
    dt: float
    t_end: float
    cfl_safety: float = 0.5
    diag_interval: int = 1
    checkpoint_interval: int = 0
    # test hook: integrate only the linear dissipative part
    nonlinear: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not (0 < self.cfl_safety <= 1):
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.diag_interval < 1:
            raise ValueError("diag_interval must be >= 1")
        if self.checkpoint_interval < 0:
            raise ValueError("checkpoint_interval must be >= 0")
        get_grid(self.n)

    @property
    def grid(self) -> Grid2D:
        return get_grid(self.n)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class SolverState:
    theta: SpectralField
    time: float = 0.0
    step: int = 0


class BlowUpError(RuntimeError):
    """Raised when the solution leaves the resolvable regime."""

    def __init__(self, message: str, state: SolverState):
        super().__init__(message)
        self.state = state


def _advection(coeffs: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Dealiased ``u . grad(theta)`` coefficients from ``theta`` coefficients."""
    r1, r2 = _riesz_symbols(grid)
    d1, d2 = _derivative_symbols(grid)
    # Hermitian inputs: pack two real fields into one complex transform
    u = np.fft.ifft2(-r2 * coeffs + 1j * (r1 * coeffs), norm="forward")
    g = np.fft.ifft2(d1 * coeffs + 1j * (d2 * coeffs), norm="forward")
    product = u.real * g.real + u.imag * g.imag
    out = hermitian_part(np.fft.fft2(product, norm="forward"))
    out[~grid.dealias_mask] = 0.0
    out[0, 0] = 0.0
    return out


def nonlinear_term(theta: SpectralField) -> SpectralField:
    """``dealias(u . grad theta)`` with ``u = riesz_velocity(theta)``."""
    return theta.with_coeffs(_advection(theta.coeffs, theta.grid))


@lru_cache(maxsize=32)
def _integrating_factors(grid: Grid2D, kappa: float, alpha: float, dt: float):
    rate = kappa * grid.kmag ** (2.0 * alpha)
    half = np.exp(-0.5 * dt * rate)
    full = np.exp(-dt * rate)
    half.setflags(write=False)
    full.setflags(write=False)
    return half, full


def _max_gradient(coeffs: np.ndarray, grid: Grid2D) -> float:
    d1, d2 = _derivative_symbols(grid)
    g = np.fft.ifft2(d1 * coeffs + 1j * (d2 * coeffs), norm="forward")
    return float(max(np.abs(g.real).max(), np.abs(g.imag).max()))


def step(state: SolverState, config: SolverConfig) -> SolverState:
    """Advance one integrating-factor RK4 step.

    Raises
    ------
    BlowUpError
        If the new coefficients are not finite or ``||grad theta||_inf``
        exceeds 1e8. ``err.state`` holds the last good state.
    """
    grid = state.theta.grid
    if grid.n != config.n:
        raise ValueError(f"state grid n={grid.n} does not match config n={config.n}")
    dt = config.dt
    e_half, e_full = _integrating_factors(
        grid, config.phys.kappa, config.phys.alpha, dt
    )
    c = state.theta.coeffs

    if config.nonlinear:
        def rhs(a):
            return -_advection(a, grid)

        k1 = rhs(c)
        k2 = rhs(e_half * (c + 0.5 * dt * k1))
        k3 = rhs(e_half * c + 0.5 * dt * k2)
        k4 = rhs(e_full * c + dt * (e_half * k3))
        new = e_full * c + (dt / 6.0) * (
            e_full * k1 + 2.0 * e_half * (k2 + k3) + k4
        )
    else:
        new = e_full * c

    if not np.all(np.isfinite(new)):
        raise BlowUpError(f"non-finite coefficients at step {state.step + 1}", state)
    grad = _max_gradient(new, grid)
    if grad > GRADIENT_BLOWUP:
        raise BlowUpError(
            f"||grad theta||_inf = {grad:.3e} exceeds {GRADIENT_BLOWUP:.0e}", state
        )
    new = hermitian_part(new)
    return SolverState(
        SpectralField(grid, new), state.time + dt, state.step + 1
    )


def cfl_dt(theta: SpectralField, config: SolverConfig) -> float:
    """Advective time-step bound ``cfl_safety * h / (||u1||_inf + ||u2||_inf)``."""
    u = riesz_velocity(theta)
    speed = lp_norm(u.u1, np.inf) + lp_norm(u.u2, np.inf)
    return config.cfl_safety * theta.grid.h / max(speed, CFL_EPS)


def diagnostics(state: SolverState, config: SolverConfig) -> dict:
    theta = state.theta
    return {
        "time": state.time,
        "l2": lp_norm(theta, 2),
        "linf": lp_norm(theta, np.inf),
        "halpha_seminorm": lp_norm(fractional_laplacian(theta, config.phys.alpha), 2),
        "cfl_dt": cfl_dt(theta, config),
    }


def energy_balance(history: Iterable, kappa: float, alpha: float) -> float:
    """Discrete residual of ``d/dt ||theta||^2 = -2 kappa ||Lambda^alpha theta||^2``.

    ``history`` holds :class:`SolverState` objects or ``(time, theta)`` pairs
    in time order. The centred-difference residual at each interior sample
    is normalised by ``||theta_0||^2`` and the maximum is returned.
    """
    samples = []
    for item in history:
        if isinstance(item, SolverState):
            samples.append((item.time, item.theta))
        else:
            samples.append((float(item[0]), item[1]))
    if len(samples) < 3:
        raise ValueError("energy balance needs at least 3 samples")
    times = np.array([t for t, _ in samples])
    energy = np.array([lp_norm(th, 2) ** 2 for _, th in samples])
    if energy[0] == 0:
        return 0.0
    dissipation = np.array(
        [2.0 * kappa * lp_norm(fractional_laplacian(th, alpha), 2) ** 2 for _, th in samples]
    )
    rate = (energy[2:] - energy[:-2]) / (times[2:] - times[:-2])
    residual = np.abs(rate + dissipation[1:-1]) / energy[0]
    return float(residual.max())


@dataclass
class SimulationResult:
    state: SolverState
    records: list[dict]
    status: str = "ok"
    message: str = ""
    history: list[SolverState] = field(default_factory=list)

    @property
    def blew_up(self) -> bool:
        return self.status == "resolution_exceeded"


def simulate(
    theta0: SpectralField,
    config: SolverConfig,
    *,
    keep_history: bool = False,
    on_diagnostic: Callable[[SolverState, dict], None] | None = None,
    on_checkpoint: Callable[[SolverState], None] | None = None,
) -> SimulationResult:
    """Run from ``theta0`` to ``config.t_end`` with fixed ``dt``.

    A blow-up halts the run and returns ``status="resolution_exceeded"`` with
    a final diagnostic record of the last good state carrying the flag.
    """
    state = SolverState(theta0, 0.0, 0)
    records: list[dict] = []
    history: list[SolverState] = []

    def sample(s: SolverState, flag: str | None = None):
        rec = diagnostics(s, config)
        if flag:
            rec["flag"] = flag
        records.append(rec)
        if keep_history:
            history.append(s)
        if on_diagnostic is not None:
            on_diagnostic(s, rec)
        return rec

    rec = sample(state)
    if config.dt > rec["cfl_dt"]:
        logger.warning("dt=%g exceeds CFL bound %g", config.dt, rec["cfl_dt"])

    for i in range(1, config.n_steps + 1):
        try:
            state = step(state, config)
        except BlowUpError as err:
            logger.warning("halting: %s", err)
            sample(err.state, "resolution_exceeded")
            return SimulationResult(err.state, records, "resolution_exceeded", str(err), history)
        if i % config.diag_interval == 0 or i == config.n_steps:
            rec = sample(state)
            if config.dt > rec["cfl_dt"]:
                logger.warning(
                    "t=%g: dt=%g exceeds CFL bound %g", state.time, config.dt, rec["cfl_dt"]
                )
        if on_checkpoint is not None and config.checkpoint_interval and i % config.checkpoint_interval == 0:
            on_checkpoint(state)
    return SimulationResult(state, records, "ok", "", history)


def diagnostics_csv(records: Iterable[dict]) -> str:
    buf = io.StringIO()
    buf.write(",".join(DIAGNOSTIC_COLUMNS) + "\n")
    for rec in records:
        buf.write(",".join(f"{rec[c]:.17g}" for c in DIAGNOSTIC_COLUMNS) + "\n")
    return buf.getvalue()


def write_checkpoint(directory, state: SolverState, config: SolverConfig) -> Path:
    """Snapshot file plus JSON sidecar ``{kappa, alpha, dt, step, time}``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"checkpoint_{state.step:08d}.qgf"
    write_snapshot(path, state.theta, state.time)
    sidecar = {
        "kappa": config.phys.kappa,
        "alpha": config.phys.alpha,
        "dt": config.dt,
        "step": state.step,
        "time": state.time,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return path


# --- initial data -----------------------------------------------------------


def single_mode(grid: Grid2D, k1: int = 1, k2: int = 0, amplitude: float = 1.0) -> SpectralField:
    """``amplitude * sin(k1 x1 + k2 x2)``."""
    x1, x2 = grid.coords
    return to_spectral(amplitude * np.sin(k1 * x1 + k2 * x2), grid)


def two_mode(grid: Grid2D, amplitude: float = 1.0) -> SpectralField:
    """``cos x1 + cos x2 + sin(x1 + x2)``."""
    x1, x2 = grid.coords
    return to_spectral(amplitude * (np.cos(x1) + np.cos(x2) + np.sin(x1 + x2)), grid)


def random_band_limited(
    grid: Grid2D,
    seed: int = 0,
    kmax: float = 8.0,
    slope: float = -3.0,
    amplitude: float = 1.0,
) -> SpectralField:
    """Random-phase field on ``1 <= |k| <= kmax`` with shell spectrum ``~ K^slope``.

    Per-mode amplitudes scale as ``|k|^((slope - 1)/2)``; the result is
    normalised to ``max |theta| = amplitude``.
    """
    rng = np.random.default_rng(seed)
    n = grid.n
    noise = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    kmag = grid.kmag
    band = (kmag >= 1.0) & (kmag <= kmax) & grid.dealias_mask
    weight = np.zeros((n, n))
    weight[band] = kmag[band] ** ((slope - 1.0) / 2.0)
    theta = SpectralField(grid, hermitian_part(noise * weight))
    peak = lp_norm(theta, np.inf)
    return theta * (amplitude / peak) if peak > 0 else theta


def weierstrass(
    grid: Grid2D,
    delta: float = 0.4,
    j_lo: int = 1,
    j_hi: int = 6,
    seed: int = 0,
    amplitude: float = 1.0,
) -> SpectralField:
    """Lacunary sum ``sum_{j=j_lo}^{j_hi} 2^(-delta j) cos(2^j x1 + phi_j)``."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=j_hi - j_lo + 1)
    x1, _ = grid.coords
    total = np.zeros((grid.n, grid.n))
    for j, phi in zip(range(j_lo, j_hi + 1), phases):
        total += 2.0 ** (-delta * j) * np.cos(2.0**j * x1 + phi)
    return to_spectral(amplitude * total, grid)


INITIAL_CONDITIONS = {
    "single_mode": single_mode,
    "two_mode": two_mode,
    "random": random_band_limited,
    "weierstrass": weierstrass,
}


def make_initial_condition(name: str, grid: Grid2D, **params) -> SpectralField:
    try:
        factory = INITIAL_CONDITIONS[name]
    except KeyError:
        raise ValueError(
            f"unknown initial condition {name!r}; choose from {sorted(INITIAL_CONDITIONS)}"
        ) from None
    return factory(grid, **params)
