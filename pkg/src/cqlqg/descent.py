"""Gradient descent over Hamiltonian controller parameters.

The iteration is u_{k+1} = u_k - s_k g(u_k) with the stepsize drawn from the
geometric progression s_{k,l} = h_k f^l and accepted by the Armijo rule

    E(u_k) - E(u_k - s_{k,l} g(u_k)) >= sigma s_{k,l} |g(u_k)|^2 .

The search horizon adapts to the local curvature along the gradient,

    h_k = min(h_max, |g|^2 / |D_g^2 E|),

falling back to h_max when the second Gateaux derivative vanishes.  Probes
that leave the stabilizing set evaluate to +inf and simply fail the Armijo
test; no exception crosses the backtracking loop.  Iterations stop when the
relative-gradient condition s_k |g(u_k)| <= epsilon |u_k| holds, or at the
iteration cap.  Initial points come from a seeded random search over
stabilizing parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BacktrackExhaustedError, NoStabilizerError, StabilityError, ValidationError
from .cost import (
    CostGradient,
    cost_at,
    evaluate,
    finite_diff_second_gateaux,
    gradient_from,
    second_gateaux_from,
)
from .linalg import DEFAULT_HURWITZ_MARGIN, spectral_report, sym
from .model import (
    CcrStructure,
    ControllerParams,
    PlantModel,
    assemble_closed_loop,
    realize_controller,
)

TERMINATION_GRADIENT_SMALL = "gradient_small"
TERMINATION_MAX_ITERS = "max_iters"
TERMINATION_BACKTRACK_EXHAUSTED = "backtrack_exhausted"


@dataclass(frozen=True)
class DescentConfig:
    """Tuning knobs of the descent; defaults follow the bundled example setup."""

    h_max: float = 1.0
    f: float = 0.5
    sigma: float = 0.9
    epsilon: float = 1e-6
    max_iters: int = 100_000
    max_backtracks: int = 60
    hurwitz_margin: float = DEFAULT_HURWITZ_MARGIN
    init_scale: float = 1.0
    init_max_attempts: int = 10_000
    seed: int = 0
    fd_second_gateaux: bool = False

    def __post_init__(self):
        if not (0.0 < self.f < 1.0):
            raise ValidationError(f"geometric ratio f must be in (0, 1), got {self.f}")
        if not (0.0 < self.sigma < 1.0):
            raise ValidationError(f"Armijo sigma must be in (0, 1), got {self.sigma}")
        if self.h_max <= 0:
            raise ValidationError(f"h_max must be positive, got {self.h_max}")
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1 or self.max_backtracks < 1 or self.init_max_attempts < 1:
            raise ValidationError("iteration/backtrack/attempt budgets must be >= 1")
        if self.init_scale <= 0:
            raise ValidationError(f"init_scale must be positive, got {self.init_scale}")


@dataclass(frozen=True)
class IterationRecord:
    """One descent step: cost and gradient at u_k plus the accepted step."""

    k: int
    cost: float
    grad_norm: float
    horizon: float
    stepsize: float
    armijo_index: int
    second_gateaux: float


@dataclass(frozen=True)
class DescentResult:
    """Outcome of one descent run."""

    final_params: ControllerParams
    final_cost: float
    trace: list[IterationRecord]
    termination: str
    final_grad_norm: float
    start_index: int | None = None

    @property
    def iterations(self) -> int:
        return len(self.trace)


def random_stabilizing_init(
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    config: DescentConfig,
    rng: np.random.Generator,
) -> ControllerParams:
    """Draw Gaussian parameter triples until the closed loop is Hurwitz.

    Per attempt the draws are (in order) R, b, e, each scaled by
    ``config.init_scale``.  Deterministic for a given generator state.
    Raises :class:`NoStabilizerError` when the attempt budget is exhausted.
    """
    n, m2, p1 = ccr.n, ccr.m2, ccr.p1
    scale = config.init_scale
    for attempt in range(1, config.init_max_attempts + 1):
        u = ControllerParams(
            R=sym(scale * rng.standard_normal((n, n))),
            b=scale * rng.standard_normal((n, m2)),
            e=scale * rng.standard_normal((n, p1)),
        )
        loop = assemble_closed_loop(plant, realize_controller(u, d, plant, ccr))
        if spectral_report(loop.A, config.hurwitz_margin).is_hurwitz:
            return u
    raise NoStabilizerError(
        f"no stabilizing controller found in {config.init_max_attempts} random draws "
        f"(init_scale={config.init_scale})",
        attempts=config.init_max_attempts,
    )


def search_horizon(grad_norm_sq: float, second_gateaux: float, h_max: float) -> float:
    """Adaptive Armijo search horizon min(h_max, |g|^2 / |D_g^2 E|).

    The cap h_max is returned when the curvature along the gradient vanishes.
    """
    if grad_norm_sq < 0 or h_max <= 0:
        raise ValidationError("grad_norm_sq must be >= 0 and h_max > 0")
    if second_gateaux == 0.0:
        return h_max
    return min(h_max, grad_norm_sq / abs(second_gateaux))


def armijo_stepsize(
    u: ControllerParams,
    g: CostGradient,
    horizon: float,
    config: DescentConfig,
    cost_fn,
    cost_at_u: float | None = None,
) -> tuple[float, int]:
    """Pick the first geometric stepsize candidate passing the Armijo test.

    ``cost_fn`` maps parameters to the cost (+inf off the stabilizing set, so
    non-stabilizing probes fail the test and backtracking continues).
    Returns (stepsize, armijo_index) with stepsize = horizon * f**index.
    """
    if horizon <= 0:
        raise ValidationError(f"horizon must be positive, got {horizon}")
    grad_norm_sq = g.norm_sq()
    base = cost_fn(u) if cost_at_u is None else cost_at_u
    for j in range(config.max_backtracks + 1):
        s = horizon * config.f**j
        probe = ControllerParams(R=u.R - s * g.dR, b=u.b - s * g.db, e=u.e - s * g.de)
        if base - cost_fn(probe) >= config.sigma * s * grad_norm_sq:
            return s, j
    raise BacktrackExhaustedError(
        f"no Armijo-acceptable stepsize within {config.max_backtracks} backtracks "
        f"(horizon {horizon:.3e}, |g|^2 {grad_norm_sq:.3e})",
        backtracks=config.max_backtracks,
    )


def descend(
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    u0: ControllerParams,
    config: DescentConfig,
) -> DescentResult:
    """Run the gradient descent from a stabilizing start u0.

    Every recorded step satisfies the Armijo inequality (strict cost
    decrease); the run ends on the relative-gradient termination test, the
    iteration cap, or backtracking exhaustion (returned as a tagged result
    with the partial trace rather than raised).
    """
    margin = config.hurwitz_margin
    ev = evaluate(u0, plant, ccr, d, margin)
    if not ev.stable:
        raise StabilityError("initial parameters are not stabilizing")

    def cost_fn(params: ControllerParams) -> float:
        return cost_at(params, plant, ccr, d, margin)

    trace: list[IterationRecord] = []
    u = u0
    termination = TERMINATION_MAX_ITERS
    for k in range(config.max_iters):
        g = gradient_from(ev, plant, ccr, d)
        grad_norm = g.norm()
        if grad_norm == 0.0:
            trace.append(IterationRecord(k, ev.cost, 0.0, config.h_max, 0.0, 0, 0.0))
            termination = TERMINATION_GRADIENT_SMALL
            break
        if config.fd_second_gateaux:
            second = finite_diff_second_gateaux(u, g, plant, ccr, d, margin=margin)
        else:
            second = second_gateaux_from(ev, g, plant, ccr, d, margin)
        horizon = search_horizon(g.norm_sq(), second, config.h_max)
        try:
            stepsize, j = armijo_stepsize(u, g, horizon, config, cost_fn, cost_at_u=ev.cost)
        except BacktrackExhaustedError:
            termination = TERMINATION_BACKTRACK_EXHAUSTED
            break
        trace.append(IterationRecord(k, ev.cost, grad_norm, horizon, stepsize, j, second))
        u_norm = u.norm()
        u = ControllerParams(
            R=u.R - stepsize * g.dR,
            b=u.b - stepsize * g.db,
            e=u.e - stepsize * g.de,
        )
        ev = evaluate(u, plant, ccr, d, margin)
        if stepsize * grad_norm <= config.epsilon * (u_norm if u_norm > 0 else 1.0):
            termination = TERMINATION_GRADIENT_SMALL
            break

    final_grad = gradient_from(ev, plant, ccr, d).norm() if ev.stable else float("inf")
    return DescentResult(
        final_params=u,
        final_cost=ev.cost,
        trace=trace,
        termination=termination,
        final_grad_norm=final_grad,
    )


@dataclass(frozen=True)
class MultiStartResult:
    """Descents from independent random starts, ordered by final cost."""

    runs: list[DescentResult]
    best: DescentResult
    failed_inits: int = 0


def multi_start(
    plant: PlantModel,
    ccr: CcrStructure,
    d,
    config: DescentConfig,
    n_starts: int,
) -> MultiStartResult:
    """Run ``n_starts`` descents from seeds config.seed + 0, 1, ..., n_starts - 1.

    Starts whose random search finds no stabilizer are skipped and counted;
    if every start fails, the last :class:`NoStabilizerError` is re-raised
    with an aggregate message.  Deterministic for a fixed base seed.
    """
    if n_starts < 1:
        raise ValidationError(f"n_starts must be >= 1, got {n_starts}")
    runs: list[DescentResult] = []
    failures = 0
    last_error: NoStabilizerError | None = None
    for index in range(n_starts):
        rng = np.random.default_rng(config.seed + index)
        try:
            u0 = random_stabilizing_init(plant, ccr, d, config, rng)
        except NoStabilizerError as exc:
            failures += 1
            last_error = exc
            continue
        result = descend(plant, ccr, d, u0, config)
        runs.append(replace(result, start_index=index))
    if not runs:
        raise NoStabilizerError(
            f"all {n_starts} starts failed to find a stabilizing controller "
            f"({last_error})",
            attempts=n_starts * config.init_max_attempts,
        )
    runs.sort(key=lambda res: (res.final_cost, res.start_index))
    return MultiStartResult(runs=runs, best=runs[0], failed_inits=failures)
