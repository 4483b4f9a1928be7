"""escapetime: narrow escape MFPT toolkit.

Solvers for the mean first passage time of a Brownian particle escaping a
bounded 3D domain through a small absorbing window: closed-form asymptotics,
an exact Fredholm route on the ball, a spectral dual-series cross-check, a
boundary-integral solver for planar windows of arbitrary ellipticity, and a
Monte Carlo path simulator.
"""

from .asymptotics import (
    AsymptoticMFPT,
    MediumSpec,
    WindowEllipse,
    forward_rate,
    mean_arrival_time,
    mfpt_circular,
    mfpt_composite_channel,
    mfpt_elliptic,
    mfpt_sphere_two_term,
    mfpt_squeezed,
    mfpt_squeezed_by_area,
)
from .collins import B0Result, CollinsConfig, b0_leading, operator_norm, solve_b0
from .errors import DomainError, SolverError
from .numerics import abel_forward, abel_invert, abel_pair, elliptic_K, gauss_rule
from .sim import (
    BallWithCap,
    BoxWithEllipticWindow,
    ConvergenceReport,
    CylinderAxial,
    SimConfig,
    SimResult,
    TheoryComparison,
    compare_with_theory,
    convergence_sweep,
    default_dt,
    simulate,
)
from .spectral import (
    LegendreSeriesSolution,
    average_mfpt,
    reconstruct_mfpt,
    solve_dual_series,
)
from .window import (
    FluxSolution,
    PlanarWindowMesh,
    build_ellipse_mesh,
    elliptic_flux_oracle,
    load_mesh,
    save_mesh,
    solve_window_ie,
    verify_constant_potential,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticMFPT",
    "B0Result",
    "BallWithCap",
    "BoxWithEllipticWindow",
    "CollinsConfig",
    "ConvergenceReport",
    "CylinderAxial",
    "DomainError",
    "FluxSolution",
    "LegendreSeriesSolution",
    "MediumSpec",
    "PlanarWindowMesh",
    "SimConfig",
    "SimResult",
    "SolverError",
    "TheoryComparison",
    "WindowEllipse",
    "__version__",
    "abel_forward",
    "abel_invert",
    "abel_pair",
    "average_mfpt",
    "b0_leading",
    "build_ellipse_mesh",
    "compare_with_theory",
    "convergence_sweep",
    "default_dt",
    "elliptic_K",
    "elliptic_flux_oracle",
    "forward_rate",
    "gauss_rule",
    "load_mesh",
    "mean_arrival_time",
    "mfpt_circular",
    "mfpt_composite_channel",
    "mfpt_elliptic",
    "mfpt_sphere_two_term",
    "mfpt_squeezed",
    "mfpt_squeezed_by_area",
    "operator_norm",
    "reconstruct_mfpt",
    "save_mesh",
    "simulate",
    "solve_b0",
    "solve_dual_series",
    "solve_window_ie",
    "verify_constant_potential",
]
