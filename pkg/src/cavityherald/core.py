"""Closed-form response of a two-sided cavity coupled to ground-state atoms.

All rates are expressed in units of the atomic decay rate gamma, which is
therefore fixed to 1. The single dimensionless knob controlling the resonant
response is the cooperativity x = g^2 / (kappa * gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


def _check_n(n_atoms: int) -> int:
    if n_atoms < 0 or float(n_atoms) != int(n_atoms):
        raise ValueError(f"atom count must be a nonnegative integer, got {n_atoms}")
    return int(n_atoms)


def _check_xn(x: float, n_atoms: int) -> int:
    if x < 0:
        raise ValueError(f"cooperativity must be nonnegative, got {x}")
    return _check_n(n_atoms)


def reflection_probability(x: float, n_atoms: int) -> float:
    """Probability that a resonant photon is reflected off the cavity.

    Parameters
    ----------
    x : float
        Cooperativity g^2 / (kappa * gamma), >= 0.
    n_atoms : int
        Number of atoms occupying the coupled ground state.

    Returns
    -------
    float
        R_N = (4 N x / (1 + 4 N x))^2. Monotone nondecreasing in both
        arguments; 0 for an empty cavity, -> 1 as x -> infinity for N >= 1.
    """
    n = _check_xn(x, n_atoms)
    c = 4.0 * n * x
    return (c / (1.0 + c)) ** 2


def transmission_probability(x: float, n_atoms: int) -> float:
    """Probability that a resonant photon is transmitted through the cavity.

    T_N = (1 / (1 + 4 N x))^2; an empty symmetric cavity transmits perfectly.
    """
    n = _check_xn(x, n_atoms)
    return (1.0 / (1.0 + 4.0 * n * x)) ** 2


def scattering_loss(x: float, n_atoms: int) -> float:
    """Probability that a resonant photon is spontaneously scattered.

    lambda_N = 1 - R_N - T_N = 2 (4 N x) / (1 + 4 N x)^2. Bounded by 1/2,
    with the maximum attained exactly at 4 N x = 1.
    """
    n = _check_xn(x, n_atoms)
    c = 4.0 * n * x
    return 2.0 * c / (1.0 + c) ** 2


@dataclass(frozen=True)
class CavityParams:
    """Static cavity and detection parameters, rates in units of gamma.

    Attributes
    ----------
    g : float
        Atom-cavity coupling rate.
    kappa_a, kappa_b : float
        Decay rates of the detection-side and far-side mirrors.
    gamma : float
        Atomic decay rate; the global unit, fixed to 1.
    delta : float
        Cavity-atom detuning.
    eta : float
        Detector efficiency in [0, 1], absorbing propagation losses.
    f : float
        Spurious-reflection fraction in [0, 1).
    g_tilde, kappa_tilde : float
        Coupling and decay of a counter-propagating (ring-cavity) mode;
        both 0 for a standing-wave cavity.
    """

    g: float
    kappa_a: float
    kappa_b: float
    gamma: float = 1.0
    delta: float = 0.0
    eta: float = 1.0
    f: float = 0.0
    g_tilde: float = 0.0
    kappa_tilde: float = 0.0

    def __post_init__(self) -> None:
        if self.g < 0:
            raise ValueError("g must be nonnegative")
        if self.kappa_a <= 0 or self.kappa_b <= 0:
            raise ValueError("mirror decay rates must be positive")
        if self.gamma != 1.0:
            raise ValueError("gamma is the unit rate; normalize with from_raw_rates")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if not 0.0 <= self.f < 1.0:
            raise ValueError("f must lie in [0, 1)")
        if self.g_tilde < 0 or self.kappa_tilde < 0:
            raise ValueError("ring-mode rates must be nonnegative")
        if self.g_tilde > 0 and self.kappa_tilde == 0:
            raise ValueError("g_tilde > 0 requires kappa_tilde > 0")

    @property
    def kappa(self) -> float:
        return self.kappa_a + self.kappa_b

    @property
    def cooperativity(self) -> float:
        return self.g * self.g / (self.kappa * self.gamma)

    @classmethod
    def from_cooperativity(cls, x: float, *, eta: float = 1.0, f: float = 0.0,
                           delta: float = 0.0, g_tilde: float = 0.0,
                           kappa_tilde: float = 0.0) -> "CavityParams":
        """Symmetric-mirror parameter set realizing cooperativity x.

        Any (g, kappa) pair with g^2/kappa = x is equivalent for every
        resonant quantity in this package; this picks kappa_a = kappa_b = 1/2.
        """
        if x < 0:
            raise ValueError("cooperativity must be nonnegative")
        return cls(g=math.sqrt(x), kappa_a=0.5, kappa_b=0.5, delta=delta,
                   eta=eta, f=f, g_tilde=g_tilde, kappa_tilde=kappa_tilde)

    @classmethod
    def from_raw_rates(cls, g: float, kappa_a: float, kappa_b: float,
                       gamma: float, **kwargs) -> "CavityParams":
        """Build from dimensionful rates, normalizing everything by gamma."""
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        scaled = {k: v / gamma for k, v in kwargs.items()
                  if k in ("delta", "g_tilde", "kappa_tilde")}
        rest = {k: v for k, v in kwargs.items()
                if k not in ("delta", "g_tilde", "kappa_tilde")}
        return cls(g=g / gamma, kappa_a=kappa_a / gamma, kappa_b=kappa_b / gamma,
                   **scaled, **rest)


@dataclass(frozen=True)
class SpectrumPoint:
    """Complex scattering amplitudes and probabilities at one probe frequency.

    `loss` is the spontaneous-scattering probability 1 - R - T.
    """

    omega: float
    r: complex
    t: complex
    R: float = field(init=False)
    T: float = field(init=False)
    loss: float = field(init=False)

    def __post_init__(self) -> None:
        R = abs(self.r) ** 2
        T = abs(self.t) ** 2
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "loss", 1.0 - R - T)


def scattering_amplitudes(params: CavityParams, omega: float,
                          n_atoms: int) -> SpectrumPoint:
    """Complex reflection and transmission amplitudes at probe frequency omega.

    Fourier transforming the Heisenberg-Langevin equations for the cavity
    field and the atomic coherences in the weak-drive (single-excitation)
    regime, each of the N coupled atoms contributes a polarizability
    g^2 / (gamma/2 + i (delta - omega)) to the bare cavity response
    kappa/2 - i omega. Eliminating the atoms leaves the cavity susceptibility
    1 / D(omega) with

        D(omega) = kappa/2 - i omega + N g^2 / (gamma/2 + i (delta - omega)),

    and the input-output relations a_out = a_in - sqrt(kappa_a) c,
    b_out = -sqrt(kappa_b) c give

        r(omega) = 1 - kappa_a / D(omega),
        t(omega) = -sqrt(kappa_a kappa_b) / D(omega).

    D cannot vanish for kappa > 0: the atomic term's real part,
    N g^2 (gamma/2) / ((gamma/2)^2 + (delta - omega)^2), is nonnegative, so
    Re D >= kappa/2 > 0 and there is no singular branch. On resonance
    (omega = delta = 0) with symmetric mirrors the probabilities reduce to the
    closed forms of `reflection_probability` and `transmission_probability`
    exactly.
    """
    n = _check_n(n_atoms)
    d = (params.kappa / 2.0 - 1j * omega
         + n * params.g ** 2 / (params.gamma / 2.0 + 1j * (params.delta - omega)))
    r = 1.0 - params.kappa_a / d
    t = -math.sqrt(params.kappa_a * params.kappa_b) / d
    return SpectrumPoint(omega=omega, r=r, t=t)


def effective_cooperativity_ring(params: CavityParams) -> float:
    """Cooperativity after accounting for a counter-propagating cavity mode.

    Scattering into the reverse mode adds 4 g_tilde^2 kappa / kappa_tilde to
    the denominator: x_eff = g^2 / (kappa gamma + 4 g_tilde^2 kappa /
    kappa_tilde). With g_tilde = g and kappa_tilde = kappa this is
    x / (1 + 4 x), strictly below 1/4 for all finite couplings. For a
    standing-wave cavity (g_tilde = 0) it reduces to the bare cooperativity.
    """
    if params.g_tilde == 0:
        return params.cooperativity
    denom = (params.kappa * params.gamma
             + 4.0 * params.g_tilde ** 2 * params.kappa / params.kappa_tilde)
    return params.g ** 2 / denom


def with_cooperativity(params: CavityParams, x: float) -> CavityParams:
    """Copy of `params` with the coupling rescaled to hit cooperativity x."""
    if x < 0:
        raise ValueError("cooperativity must be nonnegative")
    return replace(params, g=math.sqrt(x * params.kappa * params.gamma))
