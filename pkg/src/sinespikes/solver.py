"""First-order solver for the dual semidefinite program.

The program maximizes Re<Y, Gamma> over pairs (Lambda, Gamma) subject to

    [[Lambda, Gamma], [Gamma^H, I_L]] >= 0,
    superdiagonal sums of Lambda equal (1, 0, ..., 0),
    every row of Gamma has 2-norm at most lambda.

The diagonal-sum constraint makes the trigonometric polynomial
sum_j Gamma[j] exp(-2i*pi*j*f) bounded by one in row 2-norm for every f,
which is what turns the infinite-dimensional dual constraint into a linear
matrix inequality.

The solver is an ADMM splitting over the (N+L) x (N+L) Hermitian variable
X = [[Lambda, Gamma], [Gamma^H, W]]:

* one block projects onto the PSD cone (eigenvalue clamping);
* the other applies the linear objective as a proximal shift on the
  off-diagonal blocks and then projects exactly onto the affine-plus-ball
  set {W = I, diagonal sums of Lambda = e1, rows of Gamma inside the ball}.

Both projections are exact, so every reported iterate satisfies the affine
and ball constraints to machine precision while PSD feasibility is driven
to zero by the residuals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidConfigurationError,
    InvalidDimensionError,
    NumericalFailureError,
)

__all__ = [
    "DualSdpProblem",
    "SdpSolution",
    "SolverOptions",
    "project_affine_lambda",
    "project_psd",
    "project_row_ball",
    "solve_dual_sdp",
    "write_diagnostics_csv",
]

_DIAG_EVERY = 25


@dataclass(frozen=True)
class DualSdpProblem:
    """Measurement matrix plus the outlier regularization weight."""

    measurement: np.ndarray
    lam: float

    def __post_init__(self):
        y = np.asarray(self.measurement)
        if y.ndim != 2 or y.size == 0:
            raise InvalidDimensionError(f"measurement must be N x L, got {y.shape}")
        if not np.all(np.isfinite(y)):
            raise InvalidConfigurationError("measurement contains non-finite entries")
        if not self.lam > 0:
            raise InvalidConfigurationError(f"lambda must be positive, got {self.lam}")

    @property
    def n_sensors(self) -> int:
        return self.measurement.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.measurement.shape[1]


@dataclass(frozen=True)
class SolverOptions:
    penalty: float = 1.0
    adaptive_penalty: bool = True
    eps_abs: float = 1e-7
    eps_rel: float = 1e-6
    max_iterations: int = 100_000
    over_relaxation: float = 1.6

    def __post_init__(self):
        if min(self.penalty, self.eps_abs, self.eps_rel) <= 0:
            raise InvalidConfigurationError("penalty and tolerances must be positive")
        if self.max_iterations < 1:
            raise InvalidConfigurationError("max_iterations must be at least 1")
        if not 1.0 <= self.over_relaxation <= 1.8:
            raise InvalidConfigurationError(
                f"over-relaxation must lie in [1, 1.8], got {self.over_relaxation}"
            )


@dataclass(frozen=True)
class SdpSolution:
    """Dual variables and convergence diagnostics of one solve.

    ``diagnostics`` has one row per recorded iteration with columns
    (iteration, objective, primal_residual, dual_residual).
    """

    gamma: np.ndarray
    lambda_mat: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool
    diagnostics: np.ndarray = field(repr=False, default=None)


def project_psd(mat: np.ndarray) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix (eigenvalue clamping)."""
    m = np.asarray(mat, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got {m.shape}")
    h = (m + m.conj().T) / 2.0
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.conj().T
    return (out + out.conj().T) / 2.0


class _DiagonalShifter:
    """Projects a Hermitian matrix onto {superdiagonal sums = e1}.

    Subtracting the mean defect from each superdiagonal (and mirroring) is
    the Frobenius-nearest correction because the constraints decouple per
    diagonal and each one is a hyperplane.
    """

    def __init__(self, n: int):
        self.n = n
        self.rows = [np.arange(n - k) for k in range(n)]
        self.cols = [np.arange(k, n) for k in range(n)]

    def __call__(self, mat: np.ndarray) -> np.ndarray:
        n = self.n
        h = (mat + mat.conj().T) / 2.0
        for k in range(n):
            r, c = self.rows[k], self.cols[k]
            target = 1.0 if k == 0 else 0.0
            h[r, c] -= (h[r, c].sum() - target) / (n - k)
        upper = np.triu(h)
        out = upper + np.triu(h, 1).conj().T
        d = np.arange(n)
        out[d, d] = out[d, d].real
        return out


def project_affine_lambda(mat: np.ndarray) -> np.ndarray:
    """Nearest Hermitian matrix whose k-th superdiagonal sums to [k == 0]."""
    m = np.asarray(mat, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got {m.shape}")
    return _DiagonalShifter(m.shape[0])(m.copy())


def project_row_ball(gamma: np.ndarray, lam: float) -> np.ndarray:
    """Rescale every row with 2-norm above ``lam`` back onto the sphere."""
    if not lam > 0:
        raise InvalidConfigurationError(f"lambda must be positive, got {lam}")
    g = np.asarray(gamma, dtype=complex)
    norms = np.linalg.norm(g, axis=1)
    scale = np.where(norms > lam, lam / np.where(norms > 0, norms, 1.0), 1.0)
    return g * scale[:, None]


def solve_dual_sdp(problem: DualSdpProblem, opts: SolverOptions | None = None) -> SdpSolution:
    """Run the ADMM splitting until both residuals pass the stopping rule.

    The stopping threshold is ``eps_abs * (N + L) + eps_rel * max(|X|_F over
    the last two iterates)`` applied to both the primal residual |X - Z|_F
    and the dual residual rho * |Z - Z_prev|_F. On non-convergence the best
    (final) iterate is returned with ``converged=False``.
    """
    opts = opts or SolverOptions()
    y = np.asarray(problem.measurement, dtype=complex)
    n, l = y.shape
    lam = problem.lam
    dim = n + l
    rho = opts.penalty
    alpha = opts.over_relaxation
    shifter = _DiagonalShifter(n)
    eye_l = np.eye(l)

    def affine_prox(v: np.ndarray, rho_: float) -> np.ndarray:
        h = (v + v.conj().T) / 2.0
        top = shifter(h[:n, :n])
        gam = project_row_ball(h[:n, n:] + y / (2.0 * rho_), lam)
        x = np.empty_like(h)
        x[:n, :n] = top
        x[:n, n:] = gam
        x[n:, :n] = gam.conj().T
        x[n:, n:] = eye_l
        return x

    # start from a point feasible for both blocks
    x = np.zeros((dim, dim), dtype=complex)
    x[:n, :n] = np.eye(n) / n
    x[n:, n:] = eye_l
    z = x.copy()
    u = np.zeros_like(x)
    norm_prev = float(np.linalg.norm(x))

    history = []
    iterations = opts.max_iterations
    converged = False
    r_norm = s_norm = math.inf

    for it in range(1, opts.max_iterations + 1):
        x = affine_prox(z - u, rho)
        x_rel = alpha * x + (1.0 - alpha) * z
        z_new = project_psd(x_rel + u)
        u = u + x_rel - z_new

        r_norm = float(np.linalg.norm(x - z_new))
        s_norm = rho * float(np.linalg.norm(z_new - z))
        z = z_new
        if not (math.isfinite(r_norm) and math.isfinite(s_norm)):
            raise NumericalFailureError(
                f"non-finite residuals at iteration {it} (rho={rho})"
            )

        norm_x = float(np.linalg.norm(x))
        tol = opts.eps_abs * dim + opts.eps_rel * max(norm_x, norm_prev)
        norm_prev = norm_x

        if it % _DIAG_EVERY == 0 or it == 1:
            history.append(
                (it, float(np.real(np.vdot(y, x[:n, n:]))), r_norm, s_norm)
            )
        if r_norm < tol and s_norm < tol:
            iterations = it
            converged = True
            break
        if opts.adaptive_penalty:
            if r_norm > 10.0 * s_norm and rho < 1e4:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm and rho > 1e-4:
                rho /= 2.0
                u *= 2.0

    gamma = x[:n, n:].copy()
    lambda_mat = x[:n, :n].copy()
    objective = float(np.real(np.vdot(y, gamma)))
    history.append((iterations, objective, r_norm, s_norm))
    return SdpSolution(
        gamma=gamma,
        lambda_mat=lambda_mat,
        objective=objective,
        primal_residual=r_norm,
        dual_residual=s_norm,
        iterations=iterations,
        converged=converged,
        diagnostics=np.array(history, dtype=float),
    )


def write_diagnostics_csv(solution: SdpSolution, path) -> None:
    """Dump the per-iteration diagnostics as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "primal_residual", "dual_residual"])
        for row in solution.diagnostics:
            writer.writerow([int(row[0]), repr(row[1]), repr(row[2]), repr(row[3])])
