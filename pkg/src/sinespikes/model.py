"""Core domain types: atoms, mixture instances, norms and adjoints.

Conventions used throughout the package:

* sensors are indexed j = 0..N-1, snapshots l = 0..L-1;
* frequencies live on the circle [0, 1) with wrap-around distance;
* complex amplitudes are stored as a K x L matrix A, outliers as an
  N x L matrix Z, and the measurement is Y = S + Z with
  S[j, l] = sum_k A[k, l] * exp(2i*pi*j*f_k).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvalidConfigurationError,
    InvalidDimensionError,
    UndefinedSeparationError,
)

__all__ = [
    "Atom",
    "MixtureInstance",
    "RegularizationConfig",
    "atom",
    "default_lambda",
    "dual_atomic_norm",
    "group_norms",
    "min_separation",
    "signal_matrix",
    "toeplitz_adjoint",
    "wrap_distance",
]


def atom(f: float, phi: float, n_sensors: int) -> np.ndarray:
    """Unit-norm steering vector with entries exp(i*(phi + 2*pi*j*f)) / sqrt(N).

    Parameters
    ----------
    f : frequency in [0, 1)
    phi : global phase in radians
    n_sensors : number of sensors N (>= 1)
    """
    if n_sensors < 1:
        raise InvalidDimensionError(f"atom length must be >= 1, got {n_sensors}")
    j = np.arange(n_sensors)
    return np.exp(1j * (phi + 2.0 * np.pi * j * f)) / math.sqrt(n_sensors)


@dataclass(frozen=True)
class Atom:
    """A single sinusoid atom; ``realize`` returns its unit-norm vector."""

    frequency: float
    phase: float
    length: int

    def realize(self) -> np.ndarray:
        return atom(self.frequency, self.phase, self.length)


def default_lambda(n_sensors: int) -> float:
    """Outlier regularization weight 1/sqrt(N)."""
    return 1.0 / math.sqrt(n_sensors)


@dataclass(frozen=True)
class RegularizationConfig:
    """Weight of the row-sparsity term in the demixing objective."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidConfigurationError(f"lambda must be positive, got {self.lam}")

    @classmethod
    def auto(cls, n_sensors: int) -> "RegularizationConfig":
        return cls(default_lambda(n_sensors))


def wrap_distance(a, b):
    """Distance on the unit circle: min(|a-b|, 1-|a-b|)."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def min_separation(freqs) -> float:
    """Smallest pairwise wrap-around distance among the given frequencies.

    Distances wrap because the frequency axis is a circle; two points near
    0 and 1 are close, not far.
    """
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise UndefinedSeparationError(
            "minimum separation needs at least two frequencies"
        )
    s = np.sort(f % 1.0)
    gaps = np.diff(s, append=s[0] + 1.0)
    return float(np.minimum(gaps, 1.0 - gaps).min())


def toeplitz_adjoint(mat: np.ndarray) -> np.ndarray:
    """Vector of superdiagonal sums: entry k sums the k-th superdiagonal."""
    m = np.asarray(mat)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    return np.array([np.trace(m, offset=k) for k in range(n)])


def group_norms(mat: np.ndarray) -> tuple[float, float]:
    """Return (sum of row 2-norms, max row 2-norm) of a matrix."""
    m = np.asarray(mat)
    if m.ndim != 2 or m.size == 0:
        raise InvalidDimensionError(f"expected a nonempty matrix, got shape {m.shape}")
    r = np.linalg.norm(m, axis=1)
    return float(r.sum()), float(r.max())


def signal_matrix(freqs, amplitudes, n_sensors: int) -> np.ndarray:
    """Assemble S[j, l] = sum_k A[k, l] exp(2i*pi*j*f_k)."""
    f = np.asarray(freqs, dtype=float)
    a = np.asarray(amplitudes, dtype=complex)
    if a.ndim != 2 or a.shape[0] != f.size:
        raise InvalidDimensionError(
            f"amplitudes shape {a.shape} does not match {f.size} frequencies"
        )
    j = np.arange(n_sensors)
    return np.exp(2j * np.pi * np.outer(j, f)) @ a


# ---------------------------------------------------------------------------
# Trigonometric-polynomial evaluation shared by the dual-norm and the
# dual-polynomial machinery: rows of `gamma` are coefficients of
# (1/sqrt(N)) sum_j gamma[j] exp(-2i*pi*j*f), differentiated `order` times.
# ---------------------------------------------------------------------------


def _poly_rows(gamma: np.ndarray, freqs, order: int = 0) -> np.ndarray:
    g = np.asarray(gamma, dtype=complex)
    n = g.shape[0]
    f = np.atleast_1d(np.asarray(freqs, dtype=float))
    j = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(f, j))
    if order:
        basis = basis * (-2j * np.pi * j) ** order
    return (basis @ g) / math.sqrt(n)


def _refine_maxima(gamma: np.ndarray, f0: np.ndarray, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Newton ascent on g(f) = ||Q(f)||^2 from the grid maxima ``f0``.

    Returns refined locations and the refined values ||Q(f)||. Steps that
    leave the concave neighborhood (g'' >= 0) keep the previous point.
    """
    f = np.atleast_1d(np.asarray(f0, dtype=float)).copy()
    for _ in range(steps):
        q0 = _poly_rows(gamma, f, 0)
        q1 = _poly_rows(gamma, f, 1)
        q2 = _poly_rows(gamma, f, 2)
        g1 = 2.0 * np.real(np.einsum("ij,ij->i", q1, q0.conj()))
        g2 = 2.0 * (
            np.einsum("ij,ij->i", q1, q1.conj()).real
            + np.real(np.einsum("ij,ij->i", q2, q0.conj()))
        )
        ok = g2 < 0
        f = np.where(ok, f - np.divide(g1, g2, out=np.zeros_like(g1), where=ok), f)
    vals = np.linalg.norm(_poly_rows(gamma, f, 0), axis=1)
    return f % 1.0, vals


def _default_grid(n_sensors: int) -> int:
    return max(8192, 32 * n_sensors)


def dual_atomic_norm(gamma: np.ndarray, grid_size: int | None = None) -> float:
    """sup over f of ||gamma^H a(f, 0)||_2, by dense grid plus Newton ascent.

    The returned value is a lower bound on the true supremum, tight to the
    refinement tolerance because the objective is a trigonometric polynomial
    of degree N-1 sampled at >= 16x its bandwidth.
    """
    g = np.asarray(gamma, dtype=complex)
    if g.ndim != 2 or g.size == 0:
        raise InvalidDimensionError(f"expected a nonempty matrix, got shape {g.shape}")
    n = g.shape[0]
    if grid_size is None:
        grid_size = _default_grid(n)
    if grid_size < 2 * n:
        raise InvalidConfigurationError(
            f"grid of {grid_size} points is too coarse for degree {n - 1}"
        )
    f = np.arange(grid_size) / grid_size
    q = _poly_rows(g, f, 0)
    vals = np.einsum("ij,ij->i", q, q.conj()).real
    up = vals >= np.roll(vals, 1)
    down = vals > np.roll(vals, -1)
    peaks = np.flatnonzero(up & down)
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(vals))])
    _, refined = _refine_maxima(g, f[peaks], steps=3)
    return float(max(refined.max(), np.sqrt(vals.max())))


# ---------------------------------------------------------------------------
# Mixture instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixtureInstance:
    """Ground truth and measurement for one demixing problem.

    Attributes
    ----------
    frequencies : (K,) spectral support in [0, 1), pairwise distinct
    amplitudes : (K, L) complex amplitudes
    outliers : (N, L) sparse corruption, nonzero rows inside ``outlier_rows``
    measurement : (N, L) observed matrix, equals signal + outliers
    seed : seed the instance was synthesized from, if any
    """

    n_sensors: int
    n_snapshots: int
    frequencies: np.ndarray
    amplitudes: np.ndarray
    outliers: np.ndarray
    outlier_rows: np.ndarray
    measurement: np.ndarray
    seed: int | None = field(default=None)

    def __post_init__(self):
        n, l = self.n_sensors, self.n_snapshots
        k = self.frequencies.size
        if self.amplitudes.shape != (k, l):
            raise InvalidDimensionError("amplitudes must be K x L")
        if self.outliers.shape != (n, l) or self.measurement.shape != (n, l):
            raise InvalidDimensionError("outliers and measurement must be N x L")
        if k >= 2 and min_separation(self.frequencies) == 0.0:
            raise InvalidConfigurationError("frequencies must be pairwise distinct")
        hit = np.flatnonzero(np.linalg.norm(self.outliers, axis=1) > 0)
        if not set(hit).issubset(set(int(i) for i in self.outlier_rows)):
            raise InvalidConfigurationError(
                "outlier support does not cover all nonzero outlier rows"
            )

    @classmethod
    def from_components(cls, frequencies, amplitudes, outliers,
                        outlier_rows=None, seed=None) -> "MixtureInstance":
        """Build an instance from ground truth; the measurement is S + Z."""
        f = np.atleast_1d(np.asarray(frequencies, dtype=float)) % 1.0
        a = np.asarray(amplitudes, dtype=complex)
        z = np.asarray(outliers, dtype=complex)
        n, l = z.shape
        if outlier_rows is None:
            outlier_rows = np.flatnonzero(np.linalg.norm(z, axis=1) > 0)
        s = signal_matrix(f, a, n)
        return cls(
            n_sensors=n,
            n_snapshots=l,
            frequencies=f,
            amplitudes=a,
            outliers=z,
            outlier_rows=np.sort(np.asarray(outlier_rows, dtype=int)),
            measurement=s + z,
            seed=seed,
        )

    @property
    def signal(self) -> np.ndarray:
        return self.measurement - self.outliers

    def to_json(self) -> dict:
        """JSON-ready dict; complex arrays stored as re/im pairs, row-major."""
        a, z = self.amplitudes, self.outliers
        return {
            "n_sensors": self.n_sensors,
            "n_snapshots": self.n_snapshots,
            "frequencies": [float(x) for x in self.frequencies],
            "amplitudes_re": a.real.ravel().tolist(),
            "amplitudes_im": a.imag.ravel().tolist(),
            "outliers_re": z.real.ravel().tolist(),
            "outliers_im": z.imag.ravel().tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "MixtureInstance":
        n = int(payload["n_sensors"])
        l = int(payload["n_snapshots"])
        f = np.asarray(payload["frequencies"], dtype=float)
        k = f.size
        a = (np.asarray(payload["amplitudes_re"], dtype=float)
             + 1j * np.asarray(payload["amplitudes_im"], dtype=float)).reshape(k, l)
        z = (np.asarray(payload["outliers_re"], dtype=float)
             + 1j * np.asarray(payload["outliers_im"], dtype=float)).reshape(n, l)
        return cls.from_components(f, a, z, seed=payload.get("seed"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "MixtureInstance":
        return cls.from_json(json.loads(Path(path).read_text()))
