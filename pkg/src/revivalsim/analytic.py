"""Closed-form visibility curves for the conditional-displacement protocols.

All formulas are expressed in the dimensionless phase omega*t and the
dimensionless coupling lambda = g/omega.  Visibilities are normalized so
V(0) = 1; the raw qubit coherence is V/2.  Noise-free formulas revive
exactly at omega*t = 2*pi*k.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

ArrayLike = "float | np.ndarray"


@dataclass(frozen=True)
class CouplingParams:
    """Dimensionless parameters of a visibility curve.

    coupling        lambda = g/omega (sign irrelevant: only lambda^2 enters)
    boost_coupling  lambda' = g'/omega for the boosted protocol stage
    nbar            thermal occupation of the oscillator
    q_factor        omega/gamma_m mechanical quality factor (inf = undamped)
    qubit_decay     gamma_a/omega qubit dephasing rate (damped formula only)
    """

    coupling: float
    boost_coupling: float = 0.0
    nbar: float = 0.0
    q_factor: float = math.inf
    qubit_decay: float = 0.0

    def __post_init__(self):
        for name in ("coupling", "boost_coupling", "nbar", "qubit_decay"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")
        if self.qubit_decay < 0:
            raise ValueError(f"qubit_decay must be >= 0, got {self.qubit_decay}")
        if not self.q_factor > 0:
            raise ValueError(f"q_factor must be positive, got {self.q_factor}")


def visibility_ground(coupling: float, omega_t) -> ArrayLike:
    """Ground-state contrast exp[-8 lam^2 sin^2(omega t/2)]."""
    omega_t = np.asarray(omega_t, dtype=float)
    out = np.exp(-8.0 * coupling**2 * np.sin(omega_t / 2.0) ** 2)
    return out if out.ndim else float(out)


def visibility_thermal(params: CouplingParams, omega_t) -> ArrayLike:
    """Thermal contrast exp[-8 lam^2 (2 nbar + 1) sin^2(omega t/2)]."""
    omega_t = np.asarray(omega_t, dtype=float)
    expo = 8.0 * params.coupling**2 * (2.0 * params.nbar + 1.0)
    out = np.exp(-expo * np.sin(omega_t / 2.0) ** 2)
    return out if out.ndim else float(out)


def visibility_damped(params: CouplingParams, omega_t) -> ArrayLike:
    """Visibility with mechanical damping (Q = omega/gamma_m) and qubit
    dephasing gamma_a, to leading order in 1/Q:

        V = exp[-gamma_a t] * exp[-8 lam^2 (2 nbar + 1) f(t)]
        f = (1/4)/(1 + 1/(4Q^2)) * (2 - 2 cos(x) e^{-x/2Q} + x/Q
                                      - (8/Q) sin(x) e^{-x/2Q}),  x = omega t

    Reduces to `visibility_thermal` as 1/Q -> 0, gamma_a -> 0.  Half-period
    contrast is exp[-pi gamma_a/omega] exp[-8 lam^2 (2 nbar + 1)] up to
    O(1/Q^2).
    """
    q = params.q_factor
    if q < 10:
        warnings.warn(
            f"q_factor={q} is below 10; the O(1/Q) expansion is unreliable",
            stacklevel=2,
        )
    omega_t = np.asarray(omega_t, dtype=float)
    if np.any(omega_t / q > 1.0):
        warnings.warn(
            "gamma_m*t exceeds 1 somewhere on the requested grid; the "
            "leading-order damping expansion degrades there",
            stacklevel=2,
        )
    inv_q = 1.0 / q
    x = omega_t
    env = np.exp(-0.5 * x * inv_q)
    f = (0.25 / (1.0 + 0.25 * inv_q**2)) * (
        2.0 - 2.0 * np.cos(x) * env + x * inv_q - 8.0 * inv_q * np.sin(x) * env
    )
    expo = 8.0 * params.coupling**2 * (2.0 * params.nbar + 1.0)
    out = np.exp(-expo * f) * np.exp(-params.qubit_decay * x)
    return out if out.ndim else float(out)


def visibility_boosted(params: CouplingParams, omega_t) -> ArrayLike:
    """Two-stage boosted protocol (noise-free): coupling lam + lam' for the
    first half period, lam afterwards.

        omega t <= pi:  exp[-8 (2nbar+1) (lam+lam')^2 sin^2(omega t/2)]
        omega t >  pi:  exp[-8 (2nbar+1) (lam'^2 + (2 lam lam' + lam^2)
                                                   sin^2(omega t/2))]

    Continuous at omega t = pi; the full-period value exp[-8(2nbar+1)lam'^2]
    is the partially-suppressed revival carrying the lam signal.
    """
    omega_t = np.asarray(omega_t, dtype=float)
    lam = params.coupling
    lamp = params.boost_coupling
    pref = 8.0 * (2.0 * params.nbar + 1.0)
    s2 = np.sin(omega_t / 2.0) ** 2
    first = np.exp(-pref * (lam + lamp) ** 2 * s2)
    second = np.exp(-pref * (lamp**2 + (2.0 * lam * lamp + lam**2) * s2))
    out = np.where(omega_t <= math.pi, first, second)
    return out if out.ndim else float(out)


def delta_v_boosted(params: CouplingParams) -> float:
    """Half-to-full-period visibility rise of the boosted protocol:

        exp[-8(2nbar+1) lam'^2] - exp[-8(2nbar+1) (lam+lam')^2]

    ~ 16 (2nbar+1) lam lam' exp[-8(2nbar+1) lam'^2] for small lam.
    """
    pref = 8.0 * (2.0 * params.nbar + 1.0)
    lam = params.coupling
    lamp = params.boost_coupling
    return math.exp(-pref * lamp**2) - math.exp(-pref * (lam + lamp) ** 2)


def optimal_boost_coupling(nbar: float) -> float:
    """lam' maximizing the boosted signal: 1/sqrt(8 (2 nbar + 1))."""
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    return 1.0 / math.sqrt(8.0 * (2.0 * nbar + 1.0))


def visibility_many_atom(
    n_atoms: int, params: CouplingParams, omega_t, *, method: str = "exact"
) -> ArrayLike:
    """Per-atom visibility of N uncoupled qubits sharing the oscillator.

    Atom-atom phase noise multiplies the single-atom curve by
    cos^(N-1)(2*beta) with beta = lam^2 * omega * t (method="exact"), well
    approximated by exp(-2 N beta^2) (method="gaussian").  Valid for
    |2*beta| < pi/4.
    """
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    omega_t = np.asarray(omega_t, dtype=float)
    beta = params.coupling**2 * omega_t
    if np.any(np.abs(2.0 * beta) >= math.pi / 4.0):
        raise ValueError(
            f"|2*beta| = |2*lam^2*omega*t| reaches {np.max(np.abs(2 * beta)):.4g} "
            ">= pi/4; the collective phase-noise expansion is invalid"
        )
    if method == "exact":
        noise = np.cos(2.0 * beta) ** (n_atoms - 1)
    elif method == "gaussian":
        noise = np.exp(-2.0 * n_atoms * beta**2)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = noise * visibility_thermal(params, omega_t)
    return out if out.ndim else float(out)


def spin_echo_overlap(n_pi: int, coupling: float) -> float:
    """Branch overlap after n_pi echo iterations (pre-closing):

        exp[-32 n_pi^2 lam^2]

    Each iteration (half period, flip, half period, flip) grows the
    conditional displacement by 4*lam, so n_pi iterations separate the
    branches by 8*n_pi*lam in phase space.
    """
    if n_pi < 1:
        raise ValueError(f"n_pi must be >= 1, got {n_pi}")
    return math.exp(-32.0 * n_pi**2 * coupling**2)
