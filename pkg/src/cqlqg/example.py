"""Bundled benchmark problem: an unstable two-variable quantum plant.

The plant data below is a physically realizable system (canonical CCR
matrices, D = [I 0], d = I) whose drift matrix A is unstable, so the zero
controller is not an option and synthesis genuinely has to stabilize the
loop.  The state CCR matrix theta1 is intentionally not stored: it is derived
from the CCR-preservation identity at problem-resolution time, and theta2 is
the canonical choice, so both are reconstructions from the plant data rather
than inputs.

A locally optimal parameter triple for this problem, converged by the
package's own descent until the gradient was at round-off level, is frozen in
:func:`example_optimum` together with the reference minimum cost; the
regression and acceptance suites compare against them.
"""

from __future__ import annotations

import numpy as np

from .descent import DescentConfig
from .model import ControllerParams, PlantModel
from .problem import Problem, resolve_theta1

#: Reference locally minimal LQG cost of the bundled problem.
EXAMPLE_MIN_COST = 12.1026

EXAMPLE_DIMS = {"n": 2, "m1": 4, "m2": 2, "p1": 2, "p2": 2, "r": 2}


def example_plant() -> tuple[PlantModel, np.ndarray]:
    """The bundled plant and its controller noise feedthrough d = I."""
    plant = PlantModel(
        A=np.array([[0.9534, -1.1165], [0.4193, 1.8821]]),
        B=np.array([[-1.7174, -0.2189, 1.9180, 0.5636],
                    [-0.6815, 1.3570, 0.2985, -0.3679]]),
        C=np.array([[-1.3570, -0.2189], [-0.6815, 1.7174]]),
        D=np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]),
        E=np.array([[-0.3238, 0.2779], [-1.1693, -0.5966]]),
        F=np.array([[-0.8290, -0.9665], [-1.8655, -0.0357]]),
        G=np.array([[-0.2324, -0.1608], [-0.5822, -1.0961]]),
    )
    return plant, np.eye(2)


def example_problem() -> Problem:
    """The bundled problem with theta1 derived and the reference descent setup."""
    plant, d = example_plant()
    ccr, source, info = resolve_theta1(plant, d, EXAMPLE_DIMS)
    config = DescentConfig(h_max=1.0, f=0.5, sigma=0.9, epsilon=1e-6)
    return Problem(
        plant=plant,
        d=d,
        ccr=ccr,
        descent=config,
        theta1_source=source,
        theta1_info=info,
    )


def example_optimum() -> ControllerParams:
    """Converged locally optimal parameters of the bundled problem.

    One representative of the optimal orbit (the cost is invariant under
    symplectic changes of controller coordinates, so the triple is unique
    only up to that symmetry).  Attains :data:`EXAMPLE_MIN_COST` to about
    1e-4 relative, limited by the 4-decimal plant data.
    """
    return ControllerParams(
        R=np.array([[3.1090517576983444, -0.6736735378143222],
                    [-0.6736735378143222, -0.3010356711054985]]),
        b=np.array([[2.1652561101680664, 3.0529728828128823],
                    [0.0670722826927252, -2.7271260396605035]]),
        e=np.array([[2.8362975708290276, 4.1374354094687254],
                    [-3.7564773112195047, 2.4434831997322807]]),
    )
