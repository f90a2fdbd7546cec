"""Truncated number-basis oracle for the phase-space module.

Everything here exists to cross-check covariance-calculus results against
honest dense-matrix computations: states are built from their modular
Hamiltonians by matrix exponentials, Weyl operators by exponentiating the
quadrature generator, and the classical-noise channel by a Gaussian-weighted
mixture of displacement unitaries on a finite grid.  Single mode only, with
quadratures x = (a + a^dag)/sqrt(2), p = i (a^dag - a)/sqrt(2).

Error budget at the defaults (60 levels, 21 x 21 grid over +-5 standard
deviations, mixing weight 1e-9): grid discretization and tail truncation sit
near 1e-6, state truncation below 1e-4 for the parameter ranges exercised in
the tests, and the maximally-mixed regularization biases metric values by
about the mixing weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .infogeom import DensityMatrix, bkm_inner, dual_inner, omega
from .gaussian import QuadraticHamiltonianSpec

__all__ = [
    "annihilation",
    "position_operator",
    "momentum_operator",
    "weyl_operator",
    "thermal_fock_state",
    "displacement_grid_channel",
    "char_value_fock",
    "two_point_fock",
    "gen_inner_fock",
    "FockRelevance",
    "position_relevance_fock",
]

DEFAULT_LEVELS = 60
DEFAULT_GRID = 21
DEFAULT_SPAN = 5.0
DEFAULT_MIX = 1e-9


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def position_operator(dim: int) -> np.ndarray:
    a = annihilation(dim)
    return (a + a.conj().T) / np.sqrt(2.0)


def momentum_operator(dim: int) -> np.ndarray:
    a = annihilation(dim)
    return 1j * (a.conj().T - a) / np.sqrt(2.0)


def weyl_operator(f, dim: int) -> np.ndarray:
    """exp(i (f_x x + f_p p)) on the truncated space (exactly unitary)."""
    f = np.asarray(f, dtype=float)
    gen = 1j * (f[0] * position_operator(dim) + f[1] * momentum_operator(dim))
    return expm(gen)


def displacement_unitary(dx: float, dp: float, dim: int) -> np.ndarray:
    """Unitary shifting x by dx and p by dp."""
    gen = 1j * (dp * position_operator(dim) - dx * momentum_operator(dim))
    return expm(gen)


def thermal_fock_state(spec: QuadraticHamiltonianSpec, dim: int,
                       mix: float = 0.0) -> DensityMatrix:
    """exp(-beta H)/Z for H = (c_x x^2 + c_p p^2)/2, optionally mixed with
    the maximally mixed state to clear the positivity floor."""
    if spec.n_modes != 1:
        raise ValueError("the oracle is single mode")
    x = position_operator(dim)
    p = momentum_operator(dim)
    h = 0.5 * (spec.c_x[0] * x @ x + spec.c_p[0] * p @ p)
    w, v = np.linalg.eigh(h)
    weights = np.exp(-spec.beta * (w - w.min()))
    weights /= weights.sum()
    rho = v @ np.diag(weights) @ v.conj().T
    if mix > 0.0:
        rho = (1.0 - mix) * rho + mix * np.eye(dim) / dim
    return DensityMatrix(rho, floor=1e-13)


@dataclass
class DisplacementChannel:
    """Gaussian-weighted mixture of displacements adding covariance
    diag(sigma_x, sigma_p) to any state."""

    weights: np.ndarray
    unitaries: list

    def apply(self, m: np.ndarray) -> np.ndarray:
        out = np.zeros_like(m, dtype=complex)
        for w, u in zip(self.weights, self.unitaries):
            out += w * (u @ m @ u.conj().T)
        return out


def displacement_grid_channel(sigma_x: float, sigma_p: float, dim: int,
                              grid_points: int = DEFAULT_GRID,
                              span: float = DEFAULT_SPAN) -> DisplacementChannel:
    sx = np.sqrt(sigma_x)
    sp = np.sqrt(sigma_p)
    dxs = np.linspace(-span * sx, span * sx, grid_points) if sx > 0 else np.array([0.0])
    dps = np.linspace(-span * sp, span * sp, grid_points) if sp > 0 else np.array([0.0])
    weights = []
    unitaries = []
    for dx in dxs:
        wx = np.exp(-dx**2 / (2.0 * sigma_x)) if sx > 0 else 1.0
        for dp in dps:
            wp = np.exp(-dp**2 / (2.0 * sigma_p)) if sp > 0 else 1.0
            weights.append(wx * wp)
            unitaries.append(displacement_unitary(dx, dp, dim))
    weights = np.asarray(weights)
    weights /= weights.sum()
    return DisplacementChannel(weights, unitaries)


def char_value_fock(spec: QuadraticHamiltonianSpec, f, dim: int = DEFAULT_LEVELS) -> complex:
    rho = thermal_fock_state(spec, dim)
    return complex(np.trace(rho.matrix @ weyl_operator(f, dim)))


def two_point_fock(spec: QuadraticHamiltonianSpec, f, g, dim: int = DEFAULT_LEVELS) -> complex:
    rho = thermal_fock_state(spec, dim)
    x = position_operator(dim)
    p = momentum_operator(dim)
    phi_f = f[0] * x + f[1] * p
    phi_g = g[0] * x + g[1] * p
    return complex(np.trace(rho.matrix @ phi_f @ phi_g))


def _fused_dual_pairing(rho: DensityMatrix, a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(A^dag Omega_rho(B)) for general (non-Hermitian) A, B.

    Evaluated entirely in the eigenbasis of rho with the bounded
    divided-difference kernel, which stays stable when rho has eigenvalues
    near the floor (materializing Theta_rho(B) first would not).
    """
    w, v = np.linalg.eigh(rho.matrix)
    at = v.conj().T @ a @ v
    bt = v.conj().T @ b @ v
    lam_i = w[:, None]
    lam_j = w[None, :]
    u = (lam_i - lam_j) / (lam_i + lam_j)
    small = np.abs(u) < 1e-6
    u_safe = np.where(small, 0.5, u)
    ratio = np.where(small, 1.0 + u * u / 3.0, np.arctanh(u_safe) / u_safe)
    kernel = 0.5 * (lam_i + lam_j) / ratio
    return complex(np.sum(at.conj() * bt * kernel))


def gen_inner_fock(spec: QuadraticHamiltonianSpec, f, g, dim: int = DEFAULT_LEVELS,
                   mix: float = DEFAULT_MIX) -> complex:
    """Number-basis evaluation of the generating-function inner product."""
    rho = thermal_fock_state(spec, dim, mix=mix)
    cov = spec.thermal_covariance()
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    gf = weyl_operator(f, dim) * np.exp(0.5 * f @ cov @ f)
    gg = weyl_operator(g, dim) * np.exp(0.5 * g @ cov @ g)
    return _fused_dual_pairing(rho, gf, gg)


@dataclass(frozen=True)
class FockRelevance:
    """Oracle value with the quantities entering the ratio."""

    eta: float
    numerator: float
    denominator: float
    dim: int
    grid_points: int
    mix: float


def observable_relevance_fock(u: float, v: float, sigma_x: float, sigma_p: float,
                              observables,
                              dim: int = DEFAULT_LEVELS,
                              grid_points: int = DEFAULT_GRID,
                              span: float = DEFAULT_SPAN,
                              mix: float = DEFAULT_MIX) -> list:
    """BKM relevances of arbitrary observables by brute force.

    Builds the thermal state, lifts each observable to its feature through
    omega, pushes state and features through the displacement-mixture
    channel, and takes the ratios of the BKM norms.  The channel is unital,
    so the maximally mixed regularization commutes with it exactly; it is
    built once and shared across observables.
    """
    spec = QuadraticHamiltonianSpec.particle(u, v)
    rho = thermal_fock_state(spec, dim, mix=mix)
    channel = displacement_grid_channel(sigma_x, sigma_p, dim, grid_points, span)
    sigma_state = DensityMatrix(channel.apply(rho.matrix), floor=1e-13)
    results = []
    for obs in observables:
        feature = omega(rho, obs)
        denominator = dual_inner(rho, obs, obs)
        pushed = channel.apply(feature)
        pushed = 0.5 * (pushed + pushed.conj().T)
        numerator = bkm_inner(sigma_state, pushed, pushed)
        results.append(FockRelevance(numerator / denominator, numerator,
                                     denominator, dim, grid_points, mix))
    return results


def position_relevance_fock(u: float, v: float, sigma_x: float, sigma_p: float,
                            dim: int = DEFAULT_LEVELS,
                            grid_points: int = DEFAULT_GRID,
                            span: float = DEFAULT_SPAN,
                            mix: float = DEFAULT_MIX) -> FockRelevance:
    """BKM relevance of the position observable by brute force."""
    return observable_relevance_fock(u, v, sigma_x, sigma_p,
                                     [position_operator(dim)],
                                     dim, grid_points, span, mix)[0]
