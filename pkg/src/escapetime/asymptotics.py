"""Closed-form MFPT asymptotics and the application-level rate formulas.

Escape of a Brownian particle from a large cavity of volume V through a small
absorbing window on an otherwise reflecting boundary. Leading order for an
elliptic window:

    E[tau] = V K(e) / (2 pi D a),   e = sqrt(1 - b^2/a^2),

which collapses to V/(4 a D) for a circular hole. The ball gets a two-term
refinement, a long exit channel adds L^2/2D, and the Smoluchowski rate view
gives the mean arrival time 1/(4 D a C) for ambient concentration C.

The library is unit-agnostic: any consistent (length, time) system works.
D is an explicit parameter everywhere, including the squeezed-window limits
that are often quoted without it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .numerics import elliptic_K

__all__ = [
    "WindowEllipse",
    "MediumSpec",
    "AsymptoticMFPT",
    "mfpt_elliptic",
    "mfpt_circular",
    "mfpt_squeezed",
    "mfpt_squeezed_by_area",
    "mfpt_sphere_two_term",
    "mfpt_composite_channel",
    "mean_arrival_time",
    "forward_rate",
]


@dataclass(frozen=True)
class WindowEllipse:
    """Absorbing window with semi-axes a >= b; eccentricity derived."""

    a: float
    b: float
    e: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.b <= self.a:
            raise DomainError(f"need 0 < b <= a, got a={self.a}, b={self.b}")
        object.__setattr__(self, "e", float(np.sqrt(1.0 - (self.b / self.a) ** 2)))

    @property
    def area(self) -> float:
        return np.pi * self.a * self.b


@dataclass(frozen=True)
class MediumSpec:
    volume: float
    diffusion: float

    def __post_init__(self):
        if self.volume <= 0 or self.diffusion <= 0:
            raise DomainError("volume and diffusion must be positive")


@dataclass(frozen=True)
class AsymptoticMFPT:
    """A formula value plus its named sub-terms for recomputation checks."""

    value: float
    regime: str
    correction_terms: dict


def _warn_if_window_large(a: float, volume: float):
    if a > 0.1 * volume ** (1.0 / 3.0):
        warnings.warn(
            f"window semi-axis {a} is not small against volume^(1/3); "
            "leading-order asymptotics degrade",
            stacklevel=3,
        )


def mfpt_elliptic(medium: MediumSpec, win: WindowEllipse) -> AsymptoticMFPT:
    """Leading-order MFPT through an elliptic window: V K(e) / (2 pi D a)."""
    _warn_if_window_large(win.a, medium.volume)
    if win.e == 0.0:
        # circle branch shares the exact code path with mfpt_circular
        value = medium.volume / (4.0 * win.a * medium.diffusion)
        return AsymptoticMFPT(value, "circular", {"leading": value})
    K = elliptic_K(win.e)
    value = medium.volume * K / (2.0 * np.pi * medium.diffusion * win.a)
    return AsymptoticMFPT(value, "general-elliptic", {"leading": value, "K": K})


def mfpt_circular(medium: MediumSpec, a: float) -> AsymptoticMFPT:
    """Rayleigh form for a circular hole: V / (4 a D)."""
    if a <= 0:
        raise DomainError("hole radius must be positive")
    _warn_if_window_large(a, medium.volume)
    value = medium.volume / (4.0 * a * medium.diffusion)
    return AsymptoticMFPT(value, "circular", {"leading": value})


def mfpt_squeezed(medium: MediumSpec, win: WindowEllipse) -> AsymptoticMFPT:
    """Squeezed-ellipse limit: V log(16/(1-e)) / (4 pi D a), for 1-e << 1.

    Note the family convention 1-e^2 ~ 2(1-e) baked into the log argument;
    the crossover to the exact K(e) form closes only like 1/log(16/(1-e)).
    """
    if win.e >= 1.0:
        raise DomainError("squeezed limit diverges at e = 1")
    if win.e < 0.9:
        warnings.warn(f"squeezed asymptotics dubious at e={win.e:.3f} < 0.9", stacklevel=2)
    log_term = np.log(16.0 / (1.0 - win.e))
    value = medium.volume * log_term / (4.0 * np.pi * medium.diffusion * win.a)
    return AsymptoticMFPT(value, "squeezed", {"prefactor": value / log_term, "log_term": log_term})


def mfpt_squeezed_by_area(medium: MediumSpec, area: float, e: float) -> AsymptoticMFPT:
    """Squeezed limit at fixed window area S.

    value = 2^{1/4} V (1-e)^{1/4} log(16/(1-e)) / (4 D sqrt(pi S)). Identical
    to mfpt_squeezed under a = S^{1/2}/(pi^{1/2} (2(1-e))^{1/4}), the
    substitution consistent with the 2(1-e) convention above; tends to 0 as
    e -> 1 at fixed S (a long thin slit of fixed area is escaped faster).
    """
    if area <= 0:
        raise DomainError("window area must be positive")
    if e >= 1.0:
        raise DomainError("squeezed limit not defined at e = 1")
    if e < 0.9:
        warnings.warn(f"squeezed asymptotics dubious at e={e:.3f} < 0.9", stacklevel=2)
    log_term = np.log(16.0 / (1.0 - e))
    value = (
        2.0 ** 0.25
        * medium.volume
        * (1.0 - e) ** 0.25
        * log_term
        / (4.0 * medium.diffusion * np.sqrt(np.pi * area))
    )
    return AsymptoticMFPT(value, "squeezed", {"prefactor": value / log_term, "log_term": log_term})


def mfpt_sphere_two_term(R: float, a: float, D: float) -> AsymptoticMFPT:
    """Two-term ball formula (V/4aD)[1 + (a/R) log(R/a)], V = 4 pi R^3/3."""
    if not 0 < a < R:
        raise DomainError(f"need 0 < a < R, got a={a}, R={R}")
    if D <= 0:
        raise DomainError("diffusion must be positive")
    V = 4.0 * np.pi * R**3 / 3.0
    leading = V / (4.0 * a * D)
    bracket = 1.0 + (a / R) * np.log(R / a)
    return AsymptoticMFPT(
        leading * bracket,
        "sphere-two-term",
        {"leading": leading, "bracket": bracket},
    )


def mfpt_composite_channel(V: float, D: float, a: float, L: float) -> AsymptoticMFPT:
    """Cavity drained through a hole into a channel of length L.

    Additive composition: hole resistance V/(4aD) plus the 1D transit L^2/2D
    of the channel with reflecting entrance and absorbing exit.
    """
    if V < 0 or L < 0:
        raise DomainError("volume and channel length must be nonnegative")
    if a <= 0 or D <= 0:
        raise DomainError("hole radius and diffusion must be positive")
    chamber = V / (4.0 * a * D)
    channel = L * L / (2.0 * D)
    return AsymptoticMFPT(chamber + channel, "composite-channel",
                          {"chamber": chamber, "channel": channel})


def forward_rate(D: float, a: float, C: float) -> float:
    """Smoluchowski forward binding rate 4 D a C for ambient concentration C."""
    if D <= 0 or a <= 0 or C <= 0:
        raise DomainError("all rate inputs must be positive")
    return 4.0 * D * a * C


def mean_arrival_time(D: float, a: float, C: float) -> float:
    """Mean time between arrivals at an absorbing disk of radius a: 1/(4DaC).

    C is a number concentration (particles per unit volume); molar conversion
    belongs to the CLI layer.
    """
    return 1.0 / forward_rate(D, a, C)
