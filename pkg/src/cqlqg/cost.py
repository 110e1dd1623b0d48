"""LQG cost of the closed loop, its analytic gradient and curvature along it.

For a stabilizing parameter triple u = (R, b, e) the closed-loop matrices
(A, B, C) give the controllability and observability Gramians P, Q as the
solutions of

    A P + P A^T + B B^T = 0,        A^T Q + Q A + C^T C = 0,

and the Hankelian H = Q P.  The cost and its equivalent forms are

    E(u) = (1/2) <C^T C, P> = (1/2) <Q, B B^T> = -<H, A>,

with E(u) := +inf off the stabilizing set.  Partitioning 2n x 2n matrices
into n x n quadrants X_{jk}, the Frechet gradient of E with respect to
(R, b, e) is

    dE/dR = -2 sym(Theta2 H22)
    dE/db = Q21 E d + Q22 b - psi b J2 - chi d J2
    dE/de = H21 C^T + Q21 B D^T + Q22 e - psi e D J1 D^T

with the auxiliary pair

    psi = asym(H22 Theta2^{-1}),
    chi = Theta2^{-1} (H12^T E + P21 F^T G + P22 c^T G^T G).

The second directional (Gateaux) derivative of E along the gradient g, i.e.
the second derivative of s -> E(u + s g) at s = 0, is the Hessian quadratic
form
    D_g^2 E = <D_g dE/dR, dE/dR> + <D_g dE/db, dE/db> + <D_g dE/de, dE/de>,
where the directional derivatives of P and Q solve the differentiated
Gramian equations

    A (D_g P) + (D_g P) A^T + 2 sym(D_g A . P + D_g B . B^T) = 0,
    A^T (D_g Q) + (D_g Q) A + 2 sym(D_g A^T . Q + C^T . D_g C) = 0,

with D_g A, D_g B, D_g C the directional derivatives of the closed-loop
matrices induced by D_g(R, b, e) = g.  Everything analytic here is
cross-checked against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, StabilityError
from .linalg import (
    DEFAULT_HURWITZ_MARGIN,
    SpectralReport,
    asym,
    block,
    frobenius_inner,
    frobenius_norm,
    kron_sum,
    solve_ale,
    spectral_report,
    sym,
)
from .model import (
    CcrStructure,
    ClosedLoop,
    ControllerParams,
    ControllerRealization,
    PlantModel,
    assemble_closed_loop,
    realize_controller,
)

INF_COST = float("inf")


@dataclass(frozen=True)
class GramianSet:
    """Controllability Gramian P, observability Gramian Q and Hankelian H = Q P."""

    P: np.ndarray
    Q: np.ndarray
    H: np.ndarray


@dataclass(frozen=True)
class AuxPair:
    """Auxiliary matrices of the gradient formulas.

    psi (n x n) is antisymmetric by construction; chi is n x p2.
    """

    psi: np.ndarray
    chi: np.ndarray


@dataclass(frozen=True)
class CostGradient:
    """Gradient triple (dR, db, de) in the direct-sum parameter space.

    dR is symmetric; the squared norm is |dR|^2 + |db|^2 + |de|^2.
    """

    dR: np.ndarray
    db: np.ndarray
    de: np.ndarray

    def norm_sq(self) -> float:
        return float(np.sum(self.dR**2) + np.sum(self.db**2) + np.sum(self.de**2))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def scaled(self, factor: float) -> "CostGradient":
        return CostGradient(dR=factor * self.dR, db=factor * self.db, de=factor * self.de)


def zero_gradient(n: int, m2: int, p1: int) -> CostGradient:
    return CostGradient(
        dR=np.zeros((n, n)), db=np.zeros((n, m2)), de=np.zeros((n, p1))
    )


def gramians(cl: ClosedLoop, margin: float = DEFAULT_HURWITZ_MARGIN) -> GramianSet:
    """Solve the two closed-loop Gramian equations; requires a Hurwitz loop."""
    p = solve_ale(cl.A, cl.B @ cl.B.T, "controllability", margin=margin)
    q = solve_ale(cl.A, cl.C.T @ cl.C, "observability", margin=margin)
    return GramianSet(P=p, Q=q, H=q @ p)


def lqg_cost(cl: ClosedLoop, margin: float = DEFAULT_HURWITZ_MARGIN) -> float:
    """Steady-state mean-square cost (1/2)<C^T C, P>, or +inf if not stabilizing.

    A non-Hurwitz closed loop is a defined +inf return, not an error; the same
    sentinel is returned when the loop is so close to the stability boundary
    that the Gramian solve fails its residual check.
    """
    if not spectral_report(cl.A, margin).is_hurwitz:
        return INF_COST
    try:
        p = solve_ale(cl.A, cl.B @ cl.B.T, "controllability", margin=margin)
    except (StabilityError, NumericError):
        return INF_COST
    return 0.5 * frobenius_inner(cl.C.T @ cl.C, p)


@dataclass(frozen=True)
class Evaluation:
    """Everything computed at one parameter point, shared by cost/gradient paths."""

    params: ControllerParams
    realization: ControllerRealization
    loop: ClosedLoop
    spectrum: SpectralReport
    cost: float
    grams: GramianSet | None

    @property
    def stable(self) -> bool:
        return self.grams is not None


def evaluate(
    u: ControllerParams,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> Evaluation:
    """Realize, assemble and (if stabilizing) solve the Gramian equations at u."""
    k = realize_controller(u, d, plant, ccr)
    cl = assemble_closed_loop(plant, k)
    report = spectral_report(cl.A, margin)
    if not report.is_hurwitz:
        return Evaluation(u, k, cl, report, INF_COST, None)
    try:
        grams = gramians(cl, margin)
    except (StabilityError, NumericError):
        return Evaluation(u, k, cl, report, INF_COST, None)
    value = 0.5 * frobenius_inner(cl.C.T @ cl.C, grams.P)
    return Evaluation(u, k, cl, report, value, grams)


def cost_at(
    u: ControllerParams,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> float:
    """LQG cost at a parameter point (+inf off the stabilizing set)."""
    k = realize_controller(u, d, plant, ccr)
    return lqg_cost(assemble_closed_loop(plant, k), margin)


def cost_equivalent_forms(cl: ClosedLoop, grams: GramianSet) -> tuple[float, float, float]:
    """The three equivalent cost expressions ((1/2)<C^T C, P>, (1/2)<Q, B B^T>, -<H, A>)."""
    e1 = 0.5 * frobenius_inner(cl.C.T @ cl.C, grams.P)
    e2 = 0.5 * frobenius_inner(grams.Q, cl.B @ cl.B.T)
    e3 = -frobenius_inner(grams.H, cl.A)
    return e1, e2, e3


def cost_rational_oracle(cl: ClosedLoop, margin: float = DEFAULT_HURWITZ_MARGIN) -> float:
    """Rational-form cost oracle -(1/2) col(C^T C)^T (A (+) A)^{-1} col(B B^T).

    An independent evaluation path for :func:`lqg_cost`; only meant for small
    orders since the Kronecker sum is dense of order (2n)^2.
    """
    if not spectral_report(cl.A, margin).is_hurwitz:
        raise StabilityError("closed loop is not Hurwitz")
    w = (cl.B @ cl.B.T).reshape(-1, order="F")
    v = (cl.C.T @ cl.C).reshape(-1, order="F")
    try:
        x = np.linalg.solve(kron_sum(cl.A), w)
    except np.linalg.LinAlgError as exc:
        raise StabilityError(f"Kronecker sum is singular: {exc}") from exc
    return -0.5 * float(v @ x)


def aux_pair(grams: GramianSet, k: ControllerRealization, plant: PlantModel, ccr: CcrStructure) -> AuxPair:
    """The (psi, chi) pair entering the gradient formulas."""
    n = ccr.n
    th2_inv = np.linalg.inv(ccr.Theta2)
    h12 = block(grams.H, 1, 2, n)
    h22 = block(grams.H, 2, 2, n)
    p21 = block(grams.P, 2, 1, n)
    p22 = block(grams.P, 2, 2, n)
    psi = asym(h22 @ th2_inv)
    chi = th2_inv @ (
        h12.T @ plant.E + p21 @ plant.F.T @ plant.G + p22 @ k.c.T @ plant.G.T @ plant.G
    )
    return AuxPair(psi=psi, chi=chi)


def gradient_from(
    ev: Evaluation,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
) -> CostGradient:
    """Analytic gradient from an existing stabilizing evaluation."""
    if not ev.stable:
        raise StabilityError("cannot differentiate the cost at a non-stabilizing point")
    n = ccr.n
    grams = ev.grams
    k = ev.realization
    aux = aux_pair(grams, k, plant, ccr)
    h21 = block(grams.H, 2, 1, n)
    h22 = block(grams.H, 2, 2, n)
    q21 = block(grams.Q, 2, 1, n)
    q22 = block(grams.Q, 2, 2, n)
    d = np.asarray(d, dtype=float)
    dj1d = plant.D @ ccr.J1 @ plant.D.T
    d_r = -2.0 * sym(ccr.Theta2 @ h22)
    d_b = q21 @ plant.E @ d + q22 @ k.b - aux.psi @ k.b @ ccr.J2 - aux.chi @ d @ ccr.J2
    d_e = h21 @ plant.C.T + q21 @ plant.B @ plant.D.T + q22 @ k.e - aux.psi @ k.e @ dj1d
    return CostGradient(dR=d_r, db=d_b, de=d_e)


def gradient(
    u: ControllerParams,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> CostGradient:
    """Analytic Frechet gradient of the LQG cost at a stabilizing u."""
    ev = evaluate(u, plant, ccr, d, margin)
    if not ev.stable:
        raise StabilityError("parameters are not stabilizing; the cost is +inf there")
    return gradient_from(ev, plant, ccr, d)


def second_gateaux_from(
    ev: Evaluation,
    g: CostGradient,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> float:
    """Second Gateaux derivative of the cost along ``g`` at an evaluated point."""
    if not ev.stable:
        raise StabilityError("cannot differentiate the cost at a non-stabilizing point")
    n = ccr.n
    d = np.asarray(d, dtype=float)
    k = ev.realization
    cl = ev.loop
    grams = ev.grams
    th2_inv = np.linalg.inv(ccr.Theta2)
    dj1d = plant.D @ ccr.J1 @ plant.D.T

    # Directional derivatives of the realization and closed-loop matrices
    # induced by moving the parameters along g.
    dc = -d @ ccr.J2 @ g.db.T @ th2_inv
    da_k = 2.0 * ccr.Theta2 @ g.dR - asym(g.de @ dj1d @ k.e.T + g.db @ ccr.J2 @ k.b.T) @ th2_inv
    zeros_nn = np.zeros((n, n))
    da = np.block([[zeros_nn, plant.E @ dc], [g.de @ plant.C, da_k]])
    db_cl = np.block([[np.zeros_like(plant.B), np.zeros((n, ccr.m2))], [g.de @ plant.D, g.db]])
    dc_cl = np.block([np.zeros_like(plant.F), plant.G @ dc])

    dp = solve_ale(cl.A, 2.0 * sym(da @ grams.P + db_cl @ cl.B.T), "controllability", margin=margin)
    dq = solve_ale(cl.A, 2.0 * sym(da.T @ grams.Q + cl.C.T @ dc_cl), "observability", margin=margin)
    dh = dq @ grams.P + grams.Q @ dp

    p22 = block(grams.P, 2, 2, n)
    q22 = block(grams.Q, 2, 2, n)
    dh12 = block(dh, 1, 2, n)
    dh21 = block(dh, 2, 1, n)
    dh22 = block(dh, 2, 2, n)
    dp21 = block(dp, 2, 1, n)
    dp22 = block(dp, 2, 2, n)
    dq21 = block(dq, 2, 1, n)
    dq22 = block(dq, 2, 2, n)

    aux = aux_pair(grams, k, plant, ccr)
    dpsi = asym(dh22 @ th2_inv)
    gtg = plant.G.T @ plant.G
    dchi = th2_inv @ (
        dh12.T @ plant.E
        + dp21 @ plant.F.T @ plant.G
        + dp22 @ k.c.T @ gtg
        + p22 @ dc.T @ gtg
    )

    dgrad_r = -2.0 * sym(ccr.Theta2 @ dh22)
    dgrad_b = (
        dq21 @ plant.E @ d
        + dq22 @ k.b
        + q22 @ g.db
        - (dpsi @ k.b + aux.psi @ g.db) @ ccr.J2
        - dchi @ d @ ccr.J2
    )
    dgrad_e = (
        dh21 @ plant.C.T
        + dq21 @ plant.B @ plant.D.T
        + dq22 @ k.e
        + q22 @ g.de
        - (dpsi @ k.e + aux.psi @ g.de) @ dj1d
    )
    # <D_g grad, g> is the Hessian quadratic form along g, i.e. the second
    # derivative of s -> E(u + s g) at s = 0 (which the adaptive search
    # horizon needs); differentiating s -> |g(u + s g)|^2 instead would give
    # twice this value.
    return (
        frobenius_inner(dgrad_r, g.dR)
        + frobenius_inner(dgrad_b, g.db)
        + frobenius_inner(dgrad_e, g.de)
    )


def gateaux_second(
    u: ControllerParams,
    g: CostGradient,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> float:
    """Second Gateaux derivative D_g^2 E of the cost along the gradient g."""
    ev = evaluate(u, plant, ccr, d, margin)
    return second_gateaux_from(ev, g, plant, ccr, d, margin)


def _shifted(u: ControllerParams, v: CostGradient, s: float) -> ControllerParams:
    return ControllerParams(R=u.R + s * v.dR, b=u.b + s * v.db, e=u.e + s * v.de)


def _probe_cost(u, plant, ccr, d, margin, what: str) -> float:
    value = cost_at(u, plant, ccr, d, margin)
    if not np.isfinite(value):
        raise StabilityError(f"finite-difference probe ({what}) left the stabilizing set")
    return value


def finite_diff_gradient(
    u: ControllerParams,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    step: float = 1e-5,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> CostGradient:
    """Central-difference gradient oracle, component by component.

    Off-diagonal R entries are perturbed in symmetric pairs (the (i, j) and
    (j, i) entries together), which measures twice the gradient component in
    the symmetric-matrix geometry; the result is halved accordingly.
    """
    n, m2, p1 = u.n, u.b.shape[1], u.e.shape[1]
    d_r = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            direction = np.zeros((n, n))
            direction[i, j] = 1.0
            direction[j, i] = 1.0  # no-op on the diagonal
            up = ControllerParams(R=u.R + step * direction, b=u.b, e=u.e)
            dn = ControllerParams(R=u.R - step * direction, b=u.b, e=u.e)
            slope = (
                _probe_cost(up, plant, ccr, d, margin, f"R[{i},{j}]+")
                - _probe_cost(dn, plant, ccr, d, margin, f"R[{i},{j}]-")
            ) / (2.0 * step)
            if i == j:
                d_r[i, i] = slope
            else:
                d_r[i, j] = d_r[j, i] = slope / 2.0
    d_b = np.zeros((n, m2))
    for i in range(n):
        for j in range(m2):
            bp = u.b.copy()
            bp[i, j] += step
            bm = u.b.copy()
            bm[i, j] -= step
            d_b[i, j] = (
                _probe_cost(ControllerParams(u.R, bp, u.e), plant, ccr, d, margin, f"b[{i},{j}]")
                - _probe_cost(ControllerParams(u.R, bm, u.e), plant, ccr, d, margin, f"b[{i},{j}]")
            ) / (2.0 * step)
    d_e = np.zeros((n, p1))
    for i in range(n):
        for j in range(p1):
            ep = u.e.copy()
            ep[i, j] += step
            em = u.e.copy()
            em[i, j] -= step
            d_e[i, j] = (
                _probe_cost(ControllerParams(u.R, u.b, ep), plant, ccr, d, margin, f"e[{i},{j}]")
                - _probe_cost(ControllerParams(u.R, u.b, em), plant, ccr, d, margin, f"e[{i},{j}]")
            ) / (2.0 * step)
    return CostGradient(dR=d_r, db=d_b, de=d_e)


def finite_diff_directional(
    u: ControllerParams,
    v: CostGradient,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    step: float = 1e-5,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> float:
    """Central-difference first directional derivative of the cost along v."""
    up = _probe_cost(_shifted(u, v, step), plant, ccr, d, margin, "directional+")
    dn = _probe_cost(_shifted(u, v, -step), plant, ccr, d, margin, "directional-")
    return (up - dn) / (2.0 * step)


def finite_diff_second_gateaux(
    u: ControllerParams,
    v: CostGradient,
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    step: float = 1e-4,
    margin: float = DEFAULT_HURWITZ_MARGIN,
) -> float:
    """Second central difference of s -> E(u + s v) at s = 0."""
    center = _probe_cost(u, plant, ccr, d, margin, "second-order center")
    up = _probe_cost(_shifted(u, v, step), plant, ccr, d, margin, "second-order+")
    dn = _probe_cost(_shifted(u, v, -step), plant, ccr, d, margin, "second-order-")
    return (up - 2.0 * center + dn) / (step * step)
