"""Dense real-matrix helpers and small algebraic Lyapunov equation solvers.

All routines work on plain numpy arrays of modest order (the closed-loop
systems handled by this package are 2n x 2n with n of the order of a few).
Two independent solution paths are provided for the continuous algebraic
Lyapunov equation (ALE)

    A X + X A^T + W = 0        (controllability orientation)
    A^T X + X A + W = 0        (observability orientation)

with A Hurwitz and W symmetric:

* :func:`solve_ale` goes through the Schur-based Bartels-Stewart solver of
  scipy and is the production path,
* :func:`kron_solve` vectorizes the equation with the Kronecker sum,
  col(X) = -(A (+) A)^{-1} col(W), and is kept as a brute-force oracle.

Both symmetrize their output so downstream formulas can rely on X = X^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as _sla

from .errors import DimensionError, NumericError, StabilityError, ValidationError

#: Default margin below which an eigenvalue real part counts as stable.
DEFAULT_HURWITZ_MARGIN = 1e-9

#: Relative tolerance for the ALE residual check, scaled by (1 + ||W||).
ALE_RESIDUAL_RTOL = 1e-10


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Coerce ``value`` to a 2-D float array with finite entries."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def require_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def sym(m) -> np.ndarray:
    """Symmetrizer (M + M^T)/2 of a square matrix."""
    m = require_square(m, "sym argument")
    return (m + m.T) / 2.0


def asym(m) -> np.ndarray:
    """Antisymmetrizer (M - M^T)/2 of a square matrix."""
    m = require_square(m, "asym argument")
    return (m - m.T) / 2.0


def frobenius_inner(m, n) -> float:
    """Frobenius inner product Tr(M^T N) of two equally shaped matrices."""
    m = as_matrix(m, "first factor")
    n = as_matrix(n, "second factor")
    if m.shape != n.shape:
        raise DimensionError(f"shape mismatch {m.shape} vs {n.shape}")
    return float(np.sum(m * n))


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=float)))


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalue summary of a square matrix with a Hurwitz verdict.

    ``is_hurwitz`` is true iff every eigenvalue satisfies Re(lambda) < -margin.
    """

    eigenvalues: np.ndarray
    max_real_part: float
    is_hurwitz: bool
    margin: float


def spectral_report(a, margin: float = DEFAULT_HURWITZ_MARGIN) -> SpectralReport:
    """Eigenvalues of ``a`` and whether it is Hurwitz with the given margin."""
    a = require_square(a, "spectral_report argument")
    if margin < 0:
        raise ValidationError(f"margin must be >= 0, got {margin}")
    try:
        eigs = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eig rarely fails
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    max_real = float(np.max(eigs.real)) if eigs.size else float("-inf")
    return SpectralReport(
        eigenvalues=eigs,
        max_real_part=max_real,
        is_hurwitz=bool(max_real < -margin),
        margin=margin,
    )


def _check_ale_inputs(a, w, margin: float):
    a = require_square(a, "A")
    w = require_square(w, "W")
    if a.shape != w.shape:
        raise DimensionError(f"A and W must have equal shape, got {a.shape} vs {w.shape}")
    scale = frobenius_norm(w)
    if frobenius_norm(w - w.T) > 1e-12 * (1.0 + scale):
        raise ValidationError("W must be symmetric")
    report = spectral_report(a, margin)
    if not report.is_hurwitz:
        raise StabilityError(
            f"A is not Hurwitz (max eigenvalue real part {report.max_real_part:.3e}, "
            f"margin {margin:.1e})"
        )
    return a, sym(w)


def solve_ale(
    a,
    w,
    orientation: str = "controllability",
    *,
    margin: float = DEFAULT_HURWITZ_MARGIN,
    residual_rtol: float = ALE_RESIDUAL_RTOL,
) -> np.ndarray:
    """Solve the continuous ALE for a Hurwitz ``a`` and symmetric ``w``.

    ``orientation="controllability"`` solves A X + X A^T + W = 0 and
    ``orientation="observability"`` solves A^T X + X A + W = 0.  The output is
    symmetrized, and the residual is verified against
    ``residual_rtol * (1 + ||W||)``; failure raises :class:`NumericError`.
    """
    if orientation not in ("controllability", "observability"):
        raise ValidationError(f"unknown orientation {orientation!r}")
    a, w = _check_ale_inputs(a, w, margin)
    lhs = a if orientation == "controllability" else a.T
    try:
        x = _sla.solve_continuous_lyapunov(lhs, -w)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"Lyapunov solve failed: {exc}") from exc
    x = sym(x)
    residual = a @ x + x @ a.T + w if orientation == "controllability" else a.T @ x + x @ a + w
    bound = residual_rtol * (1.0 + frobenius_norm(w))
    if frobenius_norm(residual) > bound:
        raise NumericError(
            f"ALE residual {frobenius_norm(residual):.3e} exceeds bound {bound:.3e}; "
            "A is too close to the stability boundary"
        )
    return x


def kron_sum(a) -> np.ndarray:
    """Kronecker sum A (+) A = I (x) A + A (x) I."""
    a = require_square(a, "A")
    eye = np.eye(a.shape[0])
    return np.kron(eye, a) + np.kron(a, eye)


def kron_solve(a, w, *, margin: float = DEFAULT_HURWITZ_MARGIN) -> np.ndarray:
    """Brute-force ALE oracle: col(X) = -(A (+) A)^{-1} col(W).

    Solves A X + X A^T + W = 0 (controllability orientation).  Factoring the
    Kronecker system costs O(dim^6), so this is only meant for cross-checking
    :func:`solve_ale` on small instances.
    """
    a, w = _check_ale_inputs(a, w, margin)
    try:
        col_x = np.linalg.solve(kron_sum(a), -w.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise StabilityError(f"Kronecker sum is singular: {exc}") from exc
    return sym(col_x.reshape(a.shape, order="F"))


def block(x, row_block: int, col_block: int, n: int | None = None) -> np.ndarray:
    """Return the (row_block, col_block) n x n block of a 2n x 2n matrix.

    Blocks are indexed 1 or 2, matching the usual partition of closed-loop
    Gramians into plant/controller quadrants.
    """
    x = require_square(x, "block argument")
    order = x.shape[0]
    if order % 2 != 0:
        raise DimensionError(f"blocked matrix must have even order, got {order}")
    if n is None:
        n = order // 2
    elif 2 * n != order:
        raise DimensionError(f"matrix of order {order} cannot be split into blocks of order {n}")
    if row_block not in (1, 2) or col_block not in (1, 2):
        raise ValidationError("block indices must be 1 or 2")
    r = slice(0, n) if row_block == 1 else slice(n, 2 * n)
    c = slice(0, n) if col_block == 1 else slice(n, 2 * n)
    return x[r, c].copy()
