"""Periodic pseudo-spectral substrate on the torus [0, 2pi)^2.

Fields are stored as full complex Fourier coefficient arrays normalised so
that ``f(x) = sum_k c[k] exp(i k.x)``; ``cos(x1)`` therefore has ``c = 1/2``
at ``k = (+-1, 0)``. Array axis 0 is ``x1`` / ``k1`` and axis 1 is ``x2`` /
``k2`` (row-major, ``x2`` fastest).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "Grid2D",
    "SpectralField",
    "VelocityField",
    "PhysParams",
    "get_grid",
    "to_spectral",
    "to_real",
    "fractional_laplacian",
    "riesz_velocity",
    "gradient",
    "lp_norm",
    "dealias",
    "hermitian_part",
    "plancherel_l2_squared",
    "write_snapshot",
    "read_snapshot",
    "SnapshotError",
]

SNAPSHOT_MAGIC = b"QGF1"
_HEADER = struct.Struct("<4sId")
MEAN_TOL = 1e-12


class SnapshotError(ValueError):
    """Malformed field snapshot file."""


@dataclass(frozen=True)
class Grid2D:
    """Square periodic grid with ``n`` points per axis and period 2pi."""

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError(f"n must be an integer, got {n!r}")
        if n < 16 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {n}")

    @property
    def length(self) -> float:
        return 2.0 * np.pi

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.n

    @cached_property
    def _k1d(self) -> np.ndarray:
        # integer lattice in [-n/2, n/2), fft ordering
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def k1(self) -> np.ndarray:
        return _readonly(np.broadcast_to(self._k1d[:, None], (self.n, self.n)).copy())

    @cached_property
    def k2(self) -> np.ndarray:
        return _readonly(np.broadcast_to(self._k1d[None, :], (self.n, self.n)).copy())

    @cached_property
    def kmag(self) -> np.ndarray:
        return _readonly(np.sqrt(self.k1**2 + self.k2**2))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kmax = np.maximum(np.abs(self.k1), np.abs(self.k2))
        return _readonly(kmax <= self.n / 3.0)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on the k1 = -n/2 or k2 = -n/2 lines (no conjugate partner)."""
        half = -self.n // 2
        return _readonly((self.k1 == half) | (self.k2 == half))

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.h
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        return _readonly(x1), _readonly(x2)


@lru_cache(maxsize=None)
def get_grid(n: int) -> Grid2D:
    """Shared grid instance, so the cached wavevector tables are built once."""
    return Grid2D(int(n))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Project onto Hermitian-symmetric arrays: ``0.5 * (c[k] + conj(c[-k]))``.

    Addition commutes in IEEE arithmetic, so the result is bit-exactly
    symmetric.
    """
    reflected = np.roll(coeffs[::-1, ::-1], 1, axis=(0, 1))
    return 0.5 * (coeffs + np.conj(reflected))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Mean-zero real scalar field held as Fourier coefficients.

    ``mean`` records the spatial mean discarded on construction from
    samples; the stored ``coeffs[0, 0]`` is always zero.
    """

    grid: Grid2D
    coeffs: np.ndarray
    mean: float = field(default=0.0, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid n={self.grid.n}"
            )
        if c[0, 0] != 0 or c.flags.writeable:
            c = c.copy()
            c[0, 0] = 0.0
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid: Grid2D) -> "SpectralField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @property
    def n(self) -> int:
        return self.grid.n

    def to_real(self) -> np.ndarray:
        return to_real(self)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def _check_grid(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        self._check_grid(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        self._check_grid(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return self.with_coeffs(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpectralField(n={self.n})"


@dataclass(frozen=True)
class VelocityField:
    u1: SpectralField
    u2: SpectralField

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ValueError("velocity components live on different grids")

    @property
    def grid(self) -> Grid2D:
        return self.u1.grid

    def divergence(self) -> SpectralField:
        g = self.grid
        return SpectralField(
            g, 1j * (g.k1 * self.u1.coeffs + g.k2 * self.u2.coeffs)
        )


@dataclass(frozen=True)
class PhysParams:
    """Dissipation coefficient ``kappa`` and exponent ``alpha``.

    The supercritical range is ``0 < alpha < 1/2``; values up to 1 are
    accepted for validation runs.
    """

    kappa: float
    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not (0 < self.alpha <= 1):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def supercritical(self) -> bool:
        return self.alpha < 0.5


def to_spectral(samples, grid: Grid2D | None = None) -> SpectralField:
    """Forward transform of real grid samples.

    The spatial mean is discarded (with a warning when it exceeds 1e-12
    relative to ``max(1, max |samples|)``) and
    the coefficients are projected onto the Hermitian-symmetric subspace so
    later multipliers keep the field real.
    """
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] != samples.shape[1]:
        raise ValueError(f"expected a square 2D array, got shape {samples.shape}")
    if np.iscomplexobj(samples):
        raise TypeError("samples must be real")
    if grid is None:
        grid = get_grid(samples.shape[0])
    elif samples.shape != (grid.n, grid.n):
        raise ValueError(
            f"samples shape {samples.shape} does not match grid n={grid.n}"
        )
    coeffs = np.fft.fft2(samples.astype(np.float64, copy=False), norm="forward")
    mean = float(coeffs[0, 0].real)
    if abs(mean) > MEAN_TOL * max(1.0, float(np.abs(samples).max(initial=0.0))):
        warnings.warn(
            f"discarding nonzero field mean {mean:.3e}", RuntimeWarning, stacklevel=2
        )
    coeffs = hermitian_part(coeffs)
    coeffs[0, 0] = 0.0
    return SpectralField(grid, coeffs, mean=mean)


def to_real(f: SpectralField) -> np.ndarray:
    return np.fft.ifft2(f.coeffs, norm="forward").real


def fractional_laplacian(f: SpectralField, two_alpha: float) -> SpectralField:
    """Apply ``(-Delta)^alpha``, i.e. multiply coefficients by ``|k|^(2 alpha)``."""
    if two_alpha < 0:
        raise ValueError(f"exponent must be >= 0, got {two_alpha}")
    mult = _power_symbol(f.grid, float(two_alpha))
    return f.with_coeffs(mult * f.coeffs)


@lru_cache(maxsize=64)
def _power_symbol(grid: Grid2D, exponent: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        mult = grid.kmag**exponent
    mult[0, 0] = 0.0
    return _readonly(mult)


@lru_cache(maxsize=None)
def _riesz_symbols(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    kmag = grid.kmag.copy()
    kmag[0, 0] = 1.0
    r1 = 1j * grid.k1 / kmag
    r2 = 1j * grid.k2 / kmag
    # odd symbols have no conjugate partner on the Nyquist lines
    r1[grid.nyquist_mask] = 0.0
    r2[grid.nyquist_mask] = 0.0
    r1[0, 0] = r2[0, 0] = 0.0
    return _readonly(r1), _readonly(r2)


def riesz_velocity(theta: SpectralField) -> VelocityField:
    """Velocity ``u = (-R2 theta, R1 theta)`` with Riesz symbols ``i k_j / |k|``."""
    r1, r2 = _riesz_symbols(theta.grid)
    return VelocityField(
        theta.with_coeffs(-r2 * theta.coeffs),
        theta.with_coeffs(r1 * theta.coeffs),
    )


@lru_cache(maxsize=None)
def _derivative_symbols(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    d1 = 1j * grid.k1
    d2 = 1j * grid.k2
    d1[grid.nyquist_mask] = 0.0
    d2[grid.nyquist_mask] = 0.0
    return _readonly(d1), _readonly(d2)


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    d1, d2 = _derivative_symbols(f.grid)
    return f.with_coeffs(d1 * f.coeffs), f.with_coeffs(d2 * f.coeffs)


def lp_norm(f, p: float) -> float:
    """L^p norm over the torus by equal-weight quadrature on grid samples.

    Accepts a :class:`SpectralField` or an array of real samples. With this
    normalisation ``||1||_p = (4 pi^2)^(1/p)``.
    """
    if not (p >= 1):
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    samples = to_real(f) if isinstance(f, SpectralField) else np.asarray(f)
    a = np.abs(samples)
    if np.isinf(p):
        return float(a.max())
    cell = (2.0 * np.pi / samples.shape[0]) * (2.0 * np.pi / samples.shape[1])
    if p == 2:
        total = np.sum(a * a)
    elif p == 1:
        total = np.sum(a)
    else:
        total = np.sum(a**p)
    return float((total * cell) ** (1.0 / p))


def plancherel_l2_squared(f: SpectralField) -> float:
    """``4 pi^2 * sum_k |c_k|^2``, summed pairwise in fixed array order."""
    return float(4.0 * np.pi**2 * np.sum(np.abs(f.coeffs) ** 2))


def dealias(f: SpectralField) -> SpectralField:
    """2/3-rule truncation: zero every mode with ``max(|k1|, |k2|) > n/3``."""
    return f.with_coeffs(np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def write_snapshot(path, f: SpectralField, time: float = 0.0) -> None:
    """Binary snapshot: ``b"QGF1"``, u32 n, f64 time, then n*n little-endian f64."""
    samples = np.ascontiguousarray(to_real(f), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, f.n, float(time)))
        fh.write(samples.tobytes(order="C"))


def read_snapshot(path) -> tuple[SpectralField, float]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotError(f"{path}: file too short for header")
    magic, n, time = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise SnapshotError(f"{path}: expected {expected} bytes, found {len(data)}")
    samples = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n)
    return to_spectral(samples.astype(np.float64)), float(time)
