"""Quantum plant/controller models, CCR structure, and physical realizability.

A linear quantum plant and a coherent (measurement-free) quantum controller
are described by the real coefficient matrices of their quantum stochastic
differential equations:

    plant:       dx  = A x dt + B dw + E d(eta),   dy   = C x dt + D dw
    controller:  dxi = a xi dt + b d(omega) + e dy, d(eta) = c xi dt + d d(omega)

The canonical commutation relations (CCR) of the dynamic variables and the
driving Wiener processes are encoded by antisymmetric matrices Theta1, Theta2
(states) and J1, J2 (noises).  Preservation of the CCRs in time is equivalent
to the quadratic physical realizability (PR) identities

    CCR11:       A Theta1 + Theta1 A^T + B J1 B^T + E d J2 d^T E^T = 0
    CCR22:       a Theta2 + Theta2 a^T + e D J1 D^T e^T + b J2 b^T = 0
    CCR12:       (Theta1 C^T + B J1 D^T) e^T + E (c Theta2 + d J2 b^T) = 0

together with the sufficient split of CCR12 into a plant part
(Theta1 C^T + B J1 D^T = 0) and a controller part (c Theta2 + d J2 b^T = 0).

Solving CCR22/CCR12 for a and c yields the Hamiltonian parameterization of PR
controllers by the free triple u = (R, b, e) with R symmetric:

    a = 2 Theta2 R - (1/2) (e D J1 D^T e^T + b J2 b^T) Theta2^{-1}
    c = -d J2 b^T Theta2^{-1}

which is what the optimizer in :mod:`cqlqg.descent` moves in.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateEquationError, DimensionError, ValidationError
from .linalg import (
    as_matrix,
    asym,
    frobenius_norm,
    require_square,
    sym,
)

#: Elementary 2x2 symplectic cell used to build all canonical CCR matrices.
J_CELL = np.array([[0.0, 1.0], [-1.0, 0.0]])

#: Relative tolerance for structural validation (antisymmetry, D D^T = I, ...).
VALIDATION_RTOL = 1e-8


def canonical_j(size: int) -> np.ndarray:
    """Canonical antisymmetric CCR matrix I_{size/2} (x) [[0, 1], [-1, 0]]."""
    if size <= 0 or size % 2 != 0:
        raise DimensionError(f"CCR matrix size must be even and positive, got {size}")
    return np.kron(np.eye(size // 2), J_CELL)


def _readonly(value, name: str) -> np.ndarray:
    arr = as_matrix(value, name).copy()
    arr.setflags(write=False)
    return arr


def _check_antisymmetric(m: np.ndarray, name: str) -> None:
    if frobenius_norm(m + m.T) > VALIDATION_RTOL * (1.0 + frobenius_norm(m)):
        raise ValidationError(f"{name} must be antisymmetric")


def _check_nonsingular(m: np.ndarray, name: str) -> None:
    if abs(np.linalg.det(m)) <= 1e-12 * (1.0 + frobenius_norm(m) ** m.shape[0]):
        raise ValidationError(f"{name} must be nonsingular")


def _check_orthonormal_rows(m: np.ndarray, name: str) -> None:
    p = m.shape[0]
    if frobenius_norm(m @ m.T - np.eye(p)) > VALIDATION_RTOL * (1.0 + frobenius_norm(m) ** 2):
        raise ValidationError(f"{name} must satisfy {name} {name}^T = I")


@dataclass(frozen=True)
class CcrStructure:
    """CCR matrices and dimensions shared by a plant/controller pair.

    J1, J2 encode the commutation structure of the plant and controller noises
    (J is their block diagonal), while Theta1, Theta2 encode the state CCRs
    (Theta is their block diagonal).  All six are antisymmetric; Theta1 and
    Theta2 are additionally nonsingular.
    """

    n: int
    m1: int
    m2: int
    p1: int
    p2: int
    J1: np.ndarray
    J2: np.ndarray
    J: np.ndarray
    Theta1: np.ndarray
    Theta2: np.ndarray
    Theta: np.ndarray

    def __post_init__(self):
        for name in ("n", "m1", "m2"):
            value = getattr(self, name)
            if value <= 0 or value % 2 != 0:
                raise DimensionError(f"{name} must be even and positive, got {value}")
        if self.p1 <= 0 or self.p2 <= 0:
            raise DimensionError("output dimensions p1, p2 must be positive")
        if self.p1 > self.m1 or self.p2 > self.m2:
            raise DimensionError("full-row-rank feedthrough needs p1 <= m1 and p2 <= m2")
        for name, size in (("J1", self.m1), ("J2", self.m2), ("Theta1", self.n), ("Theta2", self.n)):
            mat = getattr(self, name)
            object.__setattr__(self, name, _readonly(mat, name))
            mat = getattr(self, name)
            if mat.shape != (size, size):
                raise DimensionError(f"{name} must be {size}x{size}, got {mat.shape}")
            _check_antisymmetric(mat, name)
        _check_nonsingular(self.Theta1, "Theta1")
        _check_nonsingular(self.Theta2, "Theta2")
        m = self.m1 + self.m2
        object.__setattr__(self, "J", _readonly(self.J, "J"))
        object.__setattr__(self, "Theta", _readonly(self.Theta, "Theta"))
        if self.J.shape != (m, m) or frobenius_norm(self.J - _blkdiag(self.J1, self.J2)) > 0:
            raise ValidationError("J must be block-diag(J1, J2)")
        if self.Theta.shape != (2 * self.n, 2 * self.n) or frobenius_norm(
            self.Theta - _blkdiag(self.Theta1, self.Theta2)
        ) > 0:
            raise ValidationError("Theta must be block-diag(Theta1, Theta2)")

    @property
    def m(self) -> int:
        return self.m1 + self.m2


def _blkdiag(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros((x.shape[0] + y.shape[0], x.shape[1] + y.shape[1]))
    out[: x.shape[0], : x.shape[1]] = x
    out[x.shape[0] :, x.shape[1] :] = y
    return out


def build_canonical_ccr(
    n: int,
    m1: int,
    m2: int,
    p1: int,
    p2: int,
    theta1=None,
) -> CcrStructure:
    """Build the canonical CCR structure for the given dimensions.

    J1, J2 and Theta2 are the canonical Kronecker stacks of the elementary
    cell; Theta1 defaults to the canonical stack as well but may be supplied
    explicitly (e.g. when derived from plant data by
    :func:`derive_plant_theta1`).
    """
    j1 = canonical_j(m1)
    j2 = canonical_j(m2)
    theta2 = canonical_j(n)
    if theta1 is None:
        theta1 = canonical_j(n)
    else:
        theta1 = as_matrix(theta1, "theta1")
        if theta1.shape != (n, n):
            raise DimensionError(f"theta1 must be {n}x{n}, got {theta1.shape}")
        _check_antisymmetric(theta1, "theta1")
        _check_nonsingular(theta1, "theta1")
    return CcrStructure(
        n=n,
        m1=m1,
        m2=m2,
        p1=p1,
        p2=p2,
        J1=j1,
        J2=j2,
        J=_blkdiag(j1, j2),
        Theta1=theta1,
        Theta2=theta2,
        Theta=_blkdiag(theta1, theta2),
    )


@dataclass(frozen=True)
class PlantModel:
    """Coefficient matrices of the quantum plant plus the cost weights F, G."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "D", "E", "F", "G"):
            object.__setattr__(self, name, _readonly(getattr(self, name), name))
        n = self.A.shape[0]
        require_square(self.A, "A")
        if self.B.shape[0] != n or self.E.shape[0] != n:
            raise DimensionError("B and E must have as many rows as A")
        if self.C.shape[1] != n or self.F.shape[1] != n:
            raise DimensionError("C and F must have as many columns as A")
        if self.D.shape != (self.p1, self.m1):
            raise DimensionError(f"D must be {self.p1}x{self.m1}, got {self.D.shape}")
        if self.E.shape[1] != self.p2 or self.G.shape[1] != self.p2:
            raise DimensionError("E and G must have p2 columns")
        if self.F.shape[0] != self.G.shape[0]:
            raise DimensionError("F and G must have the same number of rows")
        _check_orthonormal_rows(self.D, "D")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m1(self) -> int:
        return self.B.shape[1]

    @property
    def p1(self) -> int:
        return self.C.shape[0]

    @property
    def p2(self) -> int:
        return self.E.shape[1]

    @property
    def r(self) -> int:
        return self.F.shape[0]


@dataclass(frozen=True)
class ControllerParams:
    """Hamiltonian parameterization u = (R, b, e) of a PR controller.

    R (symmetric n x n) fixes the free Hamiltonian, b (n x m2) the noise gain
    and e (n x p1) the plant-output gain.  R is symmetrized on construction; a
    warning is emitted if the supplied matrix was asymmetric beyond round-off.
    """

    R: np.ndarray
    b: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        r = require_square(self.R, "R")
        skew = frobenius_norm(r - r.T)
        if skew > 1e-12 * (1.0 + frobenius_norm(r)):
            warnings.warn(
                f"R was asymmetric (|R - R^T| = {skew:.3e}); symmetrizing",
                stacklevel=2,
            )
        object.__setattr__(self, "R", _readonly(sym(r), "R"))
        object.__setattr__(self, "b", _readonly(self.b, "b"))
        object.__setattr__(self, "e", _readonly(self.e, "e"))
        n = self.R.shape[0]
        if self.b.shape[0] != n or self.e.shape[0] != n:
            raise DimensionError("b and e must have as many rows as R")

    @property
    def n(self) -> int:
        return self.R.shape[0]

    def norm_sq(self) -> float:
        return float(np.sum(self.R**2) + np.sum(self.b**2) + np.sum(self.e**2))

    def norm(self) -> float:
        """Direct-sum Frobenius norm sqrt(|R|^2 + |b|^2 + |e|^2)."""
        return float(np.sqrt(self.norm_sq()))


@dataclass(frozen=True)
class ControllerRealization:
    """State-space matrices (a, b, c, d, e) of a realized PR controller."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "e"):
            object.__setattr__(self, name, _readonly(getattr(self, name), name))
        n = self.a.shape[0]
        require_square(self.a, "a")
        if self.b.shape[0] != n or self.e.shape[0] != n:
            raise DimensionError("b and e must have as many rows as a")
        if self.c.shape[1] != n:
            raise DimensionError("c must have as many columns as a")
        if self.d.shape != (self.c.shape[0], self.b.shape[1]):
            raise DimensionError("d must be p2 x m2")
        _check_orthonormal_rows(self.d, "d")


@dataclass(frozen=True)
class ClosedLoop:
    """Closed-loop matrices of the plant/controller interconnection.

    A = [[A, E c], [e C, a]],  B = [[B, E d], [e D, b]],  C = [F, G c].
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, _readonly(getattr(self, name), name))
        require_square(self.A, "closed-loop A")
        if self.A.shape[0] % 2 != 0:
            raise DimensionError("closed-loop order must be even (2n)")
        if self.B.shape[0] != self.A.shape[0] or self.C.shape[1] != self.A.shape[0]:
            raise DimensionError("closed-loop B/C shapes inconsistent with A")

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2


def realize_controller(
    u: ControllerParams,
    d,
    plant: PlantModel,
    ccr: CcrStructure,
) -> ControllerRealization:
    """Realize the PR controller (a, b, c, d, e) from its Hamiltonian parameters.

    The drift and output matrices are reconstructed so the controller-side PR
    identities hold by construction:

        a = 2 Theta2 R - (1/2)(e D J1 D^T e^T + b J2 b^T) Theta2^{-1}
        c = -d J2 b^T Theta2^{-1}
    """
    d = as_matrix(d, "d")
    if d.shape != (ccr.p2, ccr.m2):
        raise DimensionError(f"d must be {ccr.p2}x{ccr.m2}, got {d.shape}")
    _check_orthonormal_rows(d, "d")
    if u.b.shape != (ccr.n, ccr.m2) or u.e.shape != (ccr.n, ccr.p1):
        raise DimensionError("controller parameters do not match the CCR dimensions")
    if plant.D.shape != (ccr.p1, ccr.m1):
        raise DimensionError("plant D does not match the CCR dimensions")
    _check_nonsingular(ccr.Theta2, "Theta2")
    th2_inv = np.linalg.inv(ccr.Theta2)
    noise_part = u.e @ plant.D @ ccr.J1 @ plant.D.T @ u.e.T + u.b @ ccr.J2 @ u.b.T
    a = 2.0 * ccr.Theta2 @ u.R - 0.5 * noise_part @ th2_inv
    c = -d @ ccr.J2 @ u.b.T @ th2_inv
    return ControllerRealization(a=a, b=u.b, c=c, d=d, e=u.e)


def recover_params(k: ControllerRealization, plant: PlantModel, ccr: CcrStructure) -> ControllerParams:
    """Invert :func:`realize_controller`: recover u = (R, b, e) from (a, b, c, d, e)."""
    th2_inv = np.linalg.inv(ccr.Theta2)
    noise_part = k.e @ plant.D @ ccr.J1 @ plant.D.T @ k.e.T + k.b @ ccr.J2 @ k.b.T
    r = 0.5 * th2_inv @ (k.a + 0.5 * noise_part @ th2_inv)
    return ControllerParams(R=r, b=k.b, e=k.e)


def assemble_closed_loop(plant: PlantModel, k: ControllerRealization) -> ClosedLoop:
    """Assemble the closed-loop (A, B, C) of the plant/controller interconnection."""
    if k.e.shape[1] != plant.p1:
        raise DimensionError("controller e must accept the plant output dimension p1")
    if k.c.shape[0] != plant.p2:
        raise DimensionError("controller c must produce the plant input dimension p2")
    if k.a.shape[0] != plant.n:
        raise DimensionError("controller order must equal the plant order")
    a_cl = np.block([[plant.A, plant.E @ k.c], [k.e @ plant.C, k.a]])
    b_cl = np.block([[plant.B, plant.E @ k.d], [k.e @ plant.D, k.b]])
    c_cl = np.block([plant.F, plant.G @ k.c])
    return ClosedLoop(A=a_cl, B=b_cl, C=c_cl)


@dataclass(frozen=True)
class PrResiduals:
    """Frobenius norms of the five PR identity left-hand sides."""

    ccr11: float
    ccr22: float
    ccr12: float
    ccr12_plant: float
    ccr12_cont: float

    def max_residual(self) -> float:
        return max(self.ccr11, self.ccr22, self.ccr12, self.ccr12_plant, self.ccr12_cont)

    def as_dict(self) -> dict:
        return {
            "ccr11": self.ccr11,
            "ccr22": self.ccr22,
            "ccr12": self.ccr12,
            "ccr12_plant": self.ccr12_plant,
            "ccr12_cont": self.ccr12_cont,
        }


def pr_residuals(plant: PlantModel, k: ControllerRealization, ccr: CcrStructure) -> PrResiduals:
    """Evaluate all five PR identities for a plant/controller pair."""
    t1, t2 = ccr.Theta1, ccr.Theta2
    j1, j2 = ccr.J1, ccr.J2
    ccr11 = plant.A @ t1 + t1 @ plant.A.T + plant.B @ j1 @ plant.B.T \
        + plant.E @ k.d @ j2 @ k.d.T @ plant.E.T
    ccr22 = k.a @ t2 + t2 @ k.a.T + k.e @ plant.D @ j1 @ plant.D.T @ k.e.T + k.b @ j2 @ k.b.T
    plant_part = t1 @ plant.C.T + plant.B @ j1 @ plant.D.T
    cont_part = k.c @ t2 + k.d @ j2 @ k.b.T
    ccr12 = plant_part @ k.e.T + plant.E @ cont_part
    return PrResiduals(
        ccr11=frobenius_norm(ccr11),
        ccr22=frobenius_norm(ccr22),
        ccr12=frobenius_norm(ccr12),
        ccr12_plant=frobenius_norm(plant_part),
        ccr12_cont=frobenius_norm(cont_part),
    )


def check_ccr_preservation(cl: ClosedLoop, ccr: CcrStructure) -> float:
    """Residual |A Theta + Theta A^T + B J B^T| of closed-loop CCR preservation."""
    if cl.A.shape[0] != 2 * ccr.n or cl.B.shape[1] != ccr.m:
        raise DimensionError("closed loop does not match the CCR dimensions")
    return frobenius_norm(cl.A @ ccr.Theta + ccr.Theta @ cl.A.T + cl.B @ ccr.J @ cl.B.T)


@dataclass(frozen=True)
class Theta1Derivation:
    """Theta1 derived from plant data, with consistency diagnostics."""

    theta1: np.ndarray
    ccr11_residual: float
    ccr12_plant_residual: float


def derive_plant_theta1(plant: PlantModel, d, ccr: CcrStructure) -> Theta1Derivation:
    """Derive the plant CCR matrix Theta1 from the CCR11 identity.

    CCR11 is linear in Theta1: A X + X A^T = -(B J1 B^T + E d J2 d^T E^T).
    The equation has a unique solution when no two eigenvalues of A sum to
    zero, and antisymmetry of the right-hand side forces the solution to be
    antisymmetric.  The CCR12_plant residual with the derived Theta1 is
    reported as a consistency diagnostic; it is not enforced.
    """
    d = as_matrix(d, "d")
    a = plant.A
    eigs = np.linalg.eigvals(a)
    sums = eigs[:, None] + eigs[None, :]
    if np.min(np.abs(sums)) <= 1e-9 * (1.0 + float(np.max(np.abs(eigs)))):
        raise DegenerateEquationError(
            "plant A has eigenvalues summing to ~0; CCR11 does not determine Theta1"
        )
    forcing = plant.B @ ccr.J1 @ plant.B.T + plant.E @ d @ ccr.J2 @ d.T @ plant.E.T
    n = plant.n
    eye = np.eye(n)
    system = np.kron(eye, a) + np.kron(a, eye)
    try:
        col_t = np.linalg.solve(system, -forcing.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise DegenerateEquationError(f"CCR11 system is singular: {exc}") from exc
    theta1 = asym(col_t.reshape((n, n), order="F"))
    _check_nonsingular(theta1, "derived Theta1")
    ccr11_res = frobenius_norm(a @ theta1 + theta1 @ a.T + forcing)
    ccr12_res = frobenius_norm(theta1 @ plant.C.T + plant.B @ ccr.J1 @ plant.D.T)
    return Theta1Derivation(
        theta1=theta1,
        ccr11_residual=ccr11_res,
        ccr12_plant_residual=ccr12_res,
    )


def realize_plant(
    r_plant,
    b,
    e,
    f,
    g,
    d,
    ccr: CcrStructure,
) -> PlantModel:
    """Build a PR plant from its own Hamiltonian-style parameterization.

    Mirrors :func:`realize_controller` on the plant side: given a symmetric
    free-Hamiltonian matrix and the gains B, E, the output matrix C and drift
    A are reconstructed so that CCR11 and CCR12_plant hold by construction
    (with D = [I 0] and the supplied controller feedthrough d).
    """
    r_plant = sym(as_matrix(r_plant, "r_plant"))
    b = as_matrix(b, "B")
    e = as_matrix(e, "E")
    d = as_matrix(d, "d")
    th1_inv = np.linalg.inv(ccr.Theta1)
    d_plant = np.hstack([np.eye(ccr.p1), np.zeros((ccr.p1, ccr.m1 - ccr.p1))])
    c = -(th1_inv @ b @ ccr.J1 @ d_plant.T).T
    noise_part = b @ ccr.J1 @ b.T + e @ d @ ccr.J2 @ d.T @ e.T
    a = 2.0 * ccr.Theta1 @ r_plant - 0.5 * noise_part @ th1_inv
    return PlantModel(A=a, B=b, C=c, D=d_plant, E=e, F=f, G=g)


def random_pr_plant(
    n: int,
    m1: int,
    m2: int,
    p1: int,
    p2: int,
    r: int,
    seed: int,
    scale: float = 1.0,
):
    """Draw a random physically realizable plant with canonical CCR matrices.

    Gaussian draws (in this order: plant Hamiltonian, B, E, F, G) are scaled
    by ``scale``; the feedthroughs are D = [I_{p1} 0] and d = [I_{p2} 0].  The
    construction guarantees CCR11 and CCR12_plant residuals at round-off
    level.  Deterministic for a fixed seed.

    Returns:
        (plant, d, ccr) ready for cost evaluation and synthesis.
    """
    ccr = build_canonical_ccr(n, m1, m2, p1, p2)
    rng = np.random.default_rng(seed)
    r_plant = sym(scale * rng.standard_normal((n, n)))
    b = scale * rng.standard_normal((n, m1))
    e = scale * rng.standard_normal((n, p2))
    f = scale * rng.standard_normal((r, n))
    g = scale * rng.standard_normal((r, p2))
    d = np.hstack([np.eye(p2), np.zeros((p2, m2 - p2))])
    plant = realize_plant(r_plant, b, e, f, g, d, ccr)
    return plant, d, ccr


def random_symplectic(theta2, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random Sigma with Sigma Theta2 Sigma^T = Theta2, via Sigma = exp(Theta2 S)."""
    theta2 = require_square(theta2, "theta2")
    s = sym(scale * rng.standard_normal(theta2.shape))
    return expm(theta2 @ s)


def symplectic_transform(u: ControllerParams, sigma) -> ControllerParams:
    """Transform parameters under the controller coordinate change xi -> Sigma xi.

    The induced parameter map is (R, b, e) -> (Sigma^{-T} R Sigma^{-1},
    Sigma b, Sigma e); it preserves the LQG cost when Sigma preserves Theta2.
    """
    sigma = require_square(sigma, "sigma")
    sigma_inv = np.linalg.inv(sigma)
    return ControllerParams(
        R=sym(sigma_inv.T @ u.R @ sigma_inv),
        b=sigma @ u.b,
        e=sigma @ u.e,
    )
