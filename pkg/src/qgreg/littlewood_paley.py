"""Dyadic Fourier-annulus filter bank, shell projections and Besov norms."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import Grid2D, SpectralField, lp_norm

__all__ = [
    "bump_chi",
    "bump_psi",
    "DyadicDecomposition",
    "BesovParams",
    "ShellSpectrum",
    "build_decomposition",
    "shell_project",
    "low_pass",
    "reconstruct",
    "reconstruction_residual",
    "besov_norm",
    "holder_proxy_norm",
    "shell_spectrum",
]


def _eta(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def bump_chi(r):
    """Smooth cutoff: 1 on ``r <= 1/2``, 0 on ``r >= 1``, C-infinity between."""
    r = np.asarray(r, dtype=np.float64)
    out = np.where(r <= 0.5, 1.0, 0.0)
    mid = (r > 0.5) & (r < 1.0)
    if np.any(mid):
        a = _eta(2.0 - 2.0 * r[mid])
        b = _eta(2.0 * r[mid] - 1.0)
        out[mid] = a / (a + b)
    return out if out.ndim else float(out)


def bump_psi(r):
    """Annulus profile ``chi(r/2) - chi(r)``, supported in (1/2, 2), ``psi(1) = 1``."""
    r = np.asarray(r, dtype=np.float64)
    return bump_chi(r / 2.0) - bump_chi(r)


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = np.inf
    q: float = np.inf

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"p must be >= 1 or inf, got {self.p}")
        if not (self.q >= 1):
            raise ValueError(f"q must be >= 1 or inf, got {self.q}")


class DyadicDecomposition:
    """Filter tables ``Phi_j(k) = psi(2^-j |k|)`` for shells ``j_min..j_max``.

    ``j_max = floor(log2(n/3))`` ties the analysed band to the dealias cutoff.
    The tables are built once and shared read-only.
    """

    j_min = 0

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self.j_max = int(math.floor(math.log2(grid.n / 3.0)))
        if self.j_max < self.j_min + 2:
            raise ValueError(f"grid n={grid.n} too small to host a full shell")
        kmag = grid.kmag
        tables = np.empty((self.n_shells, grid.n, grid.n))
        for i, j in enumerate(self.shells):
            tables[i] = bump_psi(kmag / 2.0**j)
        tables.setflags(write=False)
        self._filters = tables

    @property
    def shells(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def n_shells(self) -> int:
        return self.j_max - self.j_min + 1

    @property
    def resolved_kmax(self) -> float:
        """Largest |k| on which the truncated partition still sums to one."""
        return 2.0**self.j_max

    def filter(self, j: int) -> np.ndarray:
        self._check_shell(j)
        return self._filters[j - self.j_min]

    @cached_property
    def _lowpass_tables(self) -> np.ndarray:
        n = self.grid.n
        out = np.zeros((self.n_shells + 1, n, n))
        acc = np.zeros((n, n))
        for i in range(self.n_shells):
            acc = acc + self._filters[i]
            out[i + 1] = acc
        out.setflags(write=False)
        return out

    def lowpass_filter(self, j: int) -> np.ndarray:
        """Multiplier of ``S_j = sum_{m<j} Delta_m``; ``S_{j_min}`` is zero."""
        if not (self.j_min <= j <= self.j_max + 1):
            raise ValueError(
                f"low-pass index {j} outside [{self.j_min}, {self.j_max + 1}]"
            )
        return self._lowpass_tables[j - self.j_min]

    def partition_sum(self) -> np.ndarray:
        return self._lowpass_tables[-1]

    def _check_shell(self, j):
        if not (self.j_min <= j <= self.j_max):
            raise ValueError(f"shell {j} outside [{self.j_min}, {self.j_max}]")

    def __repr__(self):
        return f"DyadicDecomposition(n={self.grid.n}, j=[{self.j_min}, {self.j_max}])"


def build_decomposition(grid: Grid2D) -> DyadicDecomposition:
    return DyadicDecomposition(grid)


def shell_project(decomp: DyadicDecomposition, f: SpectralField, j: int) -> SpectralField:
    """``Delta_j f``: pointwise multiplication of the coefficients by ``Phi_j``."""
    return f.with_coeffs(decomp.filter(j) * f.coeffs)


def low_pass(decomp: DyadicDecomposition, f: SpectralField, j: int) -> SpectralField:
    return f.with_coeffs(decomp.lowpass_filter(j) * f.coeffs)


def reconstruct(decomp: DyadicDecomposition, f: SpectralField) -> SpectralField:
    """Sum of all resolved shell projections of ``f``.

    Equals ``f`` when ``f`` is band-limited to ``1 <= |k| <= 2^j_max``; use
    :func:`reconstruction_residual` to measure out-of-band content.
    """
    total = np.zeros_like(f.coeffs)
    for j in decomp.shells:
        total = total + decomp.filter(j) * f.coeffs
    return f.with_coeffs(total)


def reconstruction_residual(decomp: DyadicDecomposition, f: SpectralField) -> float:
    """``|| sum_j Delta_j f - f ||_inf`` on the grid."""
    return lp_norm(reconstruct(decomp, f) - f, np.inf)


@dataclass(frozen=True)
class ShellSpectrum:
    """Per-shell norms ``(j, ||Delta_j f||_p)`` with strictly increasing ``j``."""

    entries: tuple[tuple[int, float], ...]
    p: float

    def __post_init__(self):
        entries = tuple((int(j), float(v)) for j, v in self.entries)
        js = [j for j, _ in entries]
        if any(b <= a for a, b in zip(js, js[1:])):
            raise ValueError("shell indices must be strictly increasing")
        if any(not (v >= 0) for _, v in entries):
            raise ValueError("shell norms must be non-negative")
        object.__setattr__(self, "entries", entries)

    @property
    def js(self) -> np.ndarray:
        return np.array([j for j, _ in self.entries], dtype=int)

    @property
    def norms(self) -> np.ndarray:
        return np.array([v for _, v in self.entries], dtype=np.float64)

    def weighted(self, s: float) -> np.ndarray:
        return 2.0 ** (s * self.js) * self.norms

    def besov(self, s: float, q: float = np.inf) -> float:
        w = self.weighted(s)
        if w.size == 0:
            return 0.0
        if np.isinf(q):
            return float(w.max())
        return float(np.sum(w**q) ** (1.0 / q))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("j,norm\n")
        for j, v in self.entries:
            buf.write(f"{j},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, p: float = np.inf) -> "ShellSpectrum":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["j", "norm"]:
            raise ValueError("shell spectrum CSV must start with header 'j,norm'")
        return cls(tuple((int(j), float(v)) for j, v in rows[1:]), p)


def shell_spectrum(decomp: DyadicDecomposition, f: SpectralField, p: float) -> ShellSpectrum:
    entries = tuple(
        (j, lp_norm(shell_project(decomp, f, j), p)) for j in decomp.shells
    )
    return ShellSpectrum(entries, float(p))


def _as_params(params) -> BesovParams:
    if isinstance(params, BesovParams):
        return params
    return BesovParams(*params)


def besov_norm(decomp: DyadicDecomposition, f: SpectralField, params) -> float:
    """Homogeneous Besov norm over the resolved shells.

    ``params`` is a :class:`BesovParams` or an ``(s, p, q)`` tuple. Returns
    ``sup_j 2^(js) ||Delta_j f||_p`` for ``q = inf`` and the l^q aggregate
    otherwise.
    """
    params = _as_params(params)
    return shell_spectrum(decomp, f, params.p).besov(params.s, params.q)


def holder_proxy_norm(decomp: DyadicDecomposition, f: SpectralField, delta: float) -> float:
    """``||f||_inf + ||f||_{B^delta_{inf,inf}}``, the grid stand-in for ``C^delta``."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return lp_norm(f, np.inf) + besov_norm(decomp, f, BesovParams(delta))
