"""Coherent-state algebra and truncated Fock-space operators.

Displacement operators follow the convention D(a) = exp(a*ad - conj(a)*a),
so D(a)|0> is the coherent state |a>.  All matrix-valued helpers act on a
Fock space truncated to ``dim`` levels |0>, ..., |dim-1>; states near the
truncation edge are the caller's responsibility (see `default_dim` and the
tail diagnostics).
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.linalg import expm

DEFAULT_TAIL_BOUND = 1e-8


class TruncationError(RuntimeError):
    """Fock-space truncation too small for the requested state/evolution."""

    def __init__(self, message: str, tail_mass: float = float("nan")):
        super().__init__(message)
        self.tail_mass = tail_mass


def _check_finite(value: complex, name: str) -> complex:
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    return dim


def annihilation(dim: int) -> np.ndarray:
    """Truncated annihilation operator a."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number_op(dim: int) -> np.ndarray:
    """Truncated number operator ad*a."""
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def position_op(dim: int) -> np.ndarray:
    """Dimensionless position x = (a + ad)/sqrt(2)."""
    a = annihilation(dim)
    return (a + a.conj().T) / math.sqrt(2.0)


def displacement_compose(a: complex, b: complex) -> tuple[complex, complex]:
    """Compose D(a)D(b) = phase * D(a+b).

    Returns (label, phase) with label = a + b and the braiding phase
    exp((a*conj(b) - conj(a)*b)/2); the phase is always unimodular.
    """
    a = _check_finite(a, "a")
    b = _check_finite(b, "b")
    phase = cmath.exp((a * b.conjugate() - a.conjugate() * b) / 2.0)
    return a + b, phase


def coherent_overlap(a: complex, b: complex) -> complex:
    """Overlap <a|b> of two coherent states.

    <a|b> = exp(-|a-b|^2/2) * exp((b*conj(a) - conj(b)*a)/2).
    """
    a = _check_finite(a, "a")
    b = _check_finite(b, "b")
    d = a - b
    return cmath.exp(-0.5 * (d.real**2 + d.imag**2)) * cmath.exp(
        (b * a.conjugate() - b.conjugate() * a) / 2.0
    )


def coherent_state(alpha: complex, dim: int) -> np.ndarray:
    """Fock amplitudes of |alpha>: exp(-|alpha|^2/2) alpha^n / sqrt(n!)."""
    alpha = _check_finite(alpha, "alpha")
    dim = _check_dim(dim)
    amps = np.empty(dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps * math.exp(-0.5 * abs(alpha) ** 2)


def displacement_matrix(label: complex, dim: int) -> np.ndarray:
    """Truncated D(label) = expm(label*ad - conj(label)*a)."""
    label = _check_finite(label, "label")
    dim = _check_dim(dim)
    a = annihilation(dim)
    return expm(label * a.conj().T - label.conjugate() * a)


def thermal_occupation(
    omega: float,
    temperature: float,
    *,
    hbar: float | None = None,
    k_boltzmann: float | None = None,
) -> float:
    """Bose-Einstein occupation nbar = 1/(exp(hbar*omega/kT) - 1).

    Defaults to SI constants; pass hbar=1, k_boltzmann=1 for natural units.
    """
    from .constants import HBAR, K_B

    if hbar is None:
        hbar = HBAR
    if k_boltzmann is None:
        k_boltzmann = K_B
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return 0.0
    x = hbar * omega / (k_boltzmann * temperature)
    try:
        return 1.0 / math.expm1(x)
    except OverflowError:
        return 0.0


def thermal_tail_mass(nbar: float, dim: int) -> float:
    """Probability mass of an untruncated thermal state at levels >= dim."""
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    if nbar == 0:
        return 0.0
    # sum_{n>=dim} p_n = (nbar/(nbar+1))^dim
    return math.exp(dim * math.log(nbar / (nbar + 1.0)))


def thermal_density(
    nbar: float, dim: int, *, tail_bound: float = DEFAULT_TAIL_BOUND
) -> np.ndarray:
    """Truncated thermal density matrix, renormalized to unit trace.

    Raises TruncationError if the untruncated state has more than
    ``tail_bound`` probability mass at or above level ``dim``.
    """
    dim = _check_dim(dim)
    if nbar < 0 or not math.isfinite(nbar):
        raise ValueError(f"nbar must be finite and >= 0, got {nbar}")
    tail = thermal_tail_mass(nbar, dim)
    if tail > tail_bound:
        raise TruncationError(
            f"thermal tail mass {tail:.3e} exceeds bound {tail_bound:.3e} "
            f"at dim={dim} (nbar={nbar}); increase dim",
            tail_mass=tail,
        )
    if nbar == 0:
        probs = np.zeros(dim)
        probs[0] = 1.0
    else:
        log_r = math.log(nbar / (nbar + 1.0))
        probs = np.exp(np.arange(dim) * log_r)
        probs /= probs.sum()
    return np.diag(probs).astype(complex)


def mean_occupation(rho: np.ndarray) -> float:
    """Tr(rho ad*a) diagnostic for an oscillator density matrix."""
    return float(np.real(np.trace(rho @ number_op(rho.shape[0]))))


def default_dim(
    nbar: float,
    max_displacement: float,
    *,
    tail_bound: float = DEFAULT_TAIL_BOUND,
) -> int:
    """Fock dimension for a thermal state pushed around by displacements
    of magnitude up to ``max_displacement``.

    Uses nbar + 10*sqrt(nbar+1) + 16*|alpha|^2 + 20 as the base heuristic
    and additionally guarantees the initial thermal tail is below
    ``tail_bound``.
    """
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    disp_levels = 16.0 * max_displacement**2
    base = nbar + 10.0 * math.sqrt(nbar + 1.0) + disp_levels + 20.0
    need = base
    if nbar > 0:
        # displacing the thermal tail spreads it up by ~2|alpha|sqrt(n);
        # pad generously so the revival error stays below the tail bound
        tail_dim = math.log(tail_bound) / math.log(nbar / (nbar + 1.0))
        pad = 3.0 * max_displacement * math.sqrt(tail_dim)
        need = max(need, tail_dim + pad + disp_levels + 4.0)
    return max(2, math.ceil(need))


def validate_density(
    rho: np.ndarray,
    *,
    trace_tol: float = 1e-9,
    herm_tol: float = 1e-10,
    eig_floor: float = -1e-9,
) -> None:
    """Assert rho is a density matrix: unit trace, Hermitian, PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr} deviates from 1 by more than {trace_tol}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian within tolerance")
    eigs = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if eigs.min() < eig_floor:
        raise ValueError(f"negative eigenvalue {eigs.min():.3e} below {eig_floor:.1e}")
