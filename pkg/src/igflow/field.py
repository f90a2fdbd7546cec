"""Lattice classical field model and its exact generating-functional solution.

A translation-invariant Gaussian state factorizes into independent modes, so
the noise channel (spatial smearing of width sigma plus field-value blur of
width h) reduces per mode to the single-particle convolution model under the
substitution 1/tau^2 -> a_k and sigma^2 -> h^2 exp(k^2 sigma^2).  The general
(dense) case is handled by the operator
H = (1 + A^{-1} (X^T)^{-1} Y X^{-1})^{-1}, which is symmetric in the
A-weighted inner product and whose eigenvalues are the per-direction
relevances; products of its eigenvalues govern higher-degree observables,
verified here by exact polynomial algebra on coefficient tensors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .config import parse_keyvalue_file

__all__ = [
    "ZeroModeError",
    "SingularSmearingError",
    "LatticeSpec",
    "FieldCovariance",
    "FieldChannel",
    "ModeObservable",
    "covariance_massive",
    "smearing_eigenvalue",
    "mode_relevance",
    "product_relevance",
    "QuadraticRelevance",
    "quadratic_observable_relevance",
    "HOperatorResult",
    "h_operator",
    "EigencheckEntry",
    "EigencheckReport",
    "functional_derivative_eigencheck",
    "FieldSpec",
    "load_field_spec",
]


class ZeroModeError(ValueError):
    """The massless zero mode gives a vanishing covariance eigenvalue."""


class SingularSmearingError(ValueError):
    """The smearing operator is not invertible."""


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic cubic lattice; modes are the discrete Fourier wavenumbers."""

    d: int
    n_per_side: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be at least 1")
        if self.n_per_side < 2:
            raise ValueError("n_per_side must be at least 2")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def n_modes(self) -> int:
        return self.n_per_side**self.d

    def modes(self) -> np.ndarray:
        """All wavevectors, shape (n_modes, d), in ascending |k| order.

        Indices past n/2 wrap to negative wavenumbers; the +k/-k partners are
        kept as distinct modes (the cosine and sine labels of a real basis).
        """
        n = self.n_per_side
        single = np.array([j if j <= n // 2 else j - n for j in range(n)], dtype=float)
        single *= 2.0 * np.pi / (n * self.spacing)
        grids = np.meshgrid(*([single] * self.d), indexing="ij")
        ks = np.stack([g.ravel() for g in grids], axis=1)
        order = np.lexsort((*(ks[:, i] for i in range(self.d)), np.sum(ks * ks, axis=1)))
        return ks[order]


@dataclass(frozen=True)
class FieldChannel:
    """Noise model: distance precision sigma and field-value precision h."""

    sigma: float
    h: float

    def __post_init__(self):
        if self.sigma <= 0 or self.h <= 0:
            raise ValueError("sigma and h must be positive")


class FieldCovariance:
    """Per-mode eigenvalues a_k of the quadratic form defining the state."""

    def __init__(self, modes: np.ndarray, a: np.ndarray):
        modes = np.atleast_2d(np.asarray(modes, dtype=float))
        a = np.asarray(a, dtype=float)
        if modes.shape[0] != a.shape[0]:
            raise ValueError("one eigenvalue per mode required")
        if np.any(a <= 0.0):
            raise ZeroModeError("covariance eigenvalues must be strictly positive")
        self.modes = modes
        self.a = a

    def __len__(self) -> int:
        return len(self.a)

    def lookup(self, k) -> float:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        hits = np.where(np.all(np.abs(self.modes - k[None, :]) < 1e-9, axis=1))[0]
        if len(hits) == 0:
            raise ValueError(f"mode {k} is not on the lattice")
        return float(self.a[hits[0]])


def covariance_massive(beta: float, mass: float, lattice: LatticeSpec,
                       exclude_zero_mode: bool = False) -> FieldCovariance:
    """Massive-field eigenvalues a_k = beta (|k|^2 + m^2) on the lattice.

    At m = 0 the zero mode must be excluded explicitly; it is dropped from
    the returned covariance rather than regularized.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if mass < 0:
        raise ValueError("mass must be nonnegative")
    ks = lattice.modes()
    k2 = np.sum(ks * ks, axis=1)
    a = beta * (k2 + mass**2)
    if mass == 0.0:
        zero = k2 < 1e-18
        if np.any(zero):
            if not exclude_zero_mode:
                raise ZeroModeError(
                    "massless zero mode has a_k = 0; pass exclude_zero_mode=True"
                )
            keep = ~zero
            return FieldCovariance(ks[keep], a[keep])
    return FieldCovariance(ks, a)


def smearing_eigenvalue(k, sigma: float) -> float:
    """Plane-wave eigenvalue exp(-|k|^2 sigma^2 / 2) of the spatial blur."""
    k2 = float(np.sum(np.square(np.atleast_1d(np.asarray(k, dtype=float)))))
    return float(np.exp(-k2 * sigma**2 / 2.0))


def mode_relevance(a_k: float, h: float, sigma: float, k, n: int) -> float:
    """Per-mode relevance (1 + a_k h^2 exp(|k|^2 sigma^2))^{-n}.

    Equals the single-particle closed form alpha^{-n} under the substitution
    1/tau^2 -> a_k, sigma^2 -> h^2 exp(k^2 sigma^2).
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    k2 = float(np.sum(np.square(np.atleast_1d(np.asarray(k, dtype=float)))))
    return float((1.0 + a_k * h**2 * np.exp(k2 * sigma**2)) ** (-n))


@dataclass(frozen=True)
class ModeObservable:
    """Product observable: wavenumbers k_i with Hermite degrees n_i."""

    modes: tuple
    degrees: tuple

    def __post_init__(self):
        if len(self.modes) != len(self.degrees):
            raise ValueError("modes and degrees must have equal length")
        if len(self.modes) < 1:
            raise ValueError("a mode observable needs at least one factor")
        if any(n < 1 for n in self.degrees):
            raise ValueError("degrees must be positive")


def product_relevance(obs: ModeObservable, cov: FieldCovariance,
                      chan: FieldChannel) -> float:
    """Relevance of a product observable: the product of its mode factors."""
    out = 1.0
    for k, n in zip(obs.modes, obs.degrees):
        out *= mode_relevance(cov.lookup(k), chan.h, chan.sigma, k, n)
    return out


@dataclass(frozen=True)
class QuadraticRelevance:
    """Relevance of the integrated squared field minus its trace part."""

    value: float
    numerator: float
    denominator: float


def quadratic_observable_relevance(cov: FieldCovariance,
                                   chan: FieldChannel) -> QuadraticRelevance:
    """sum_k a_k^{-2} eta_{k,2} / sum_k a_k^{-2}, terms in ascending |k|.

    Numerator and denominator are reported separately so cutoff studies can
    track their growth with lattice size.
    """
    k2 = np.sum(cov.modes * cov.modes, axis=1)
    order = np.argsort(k2, kind="stable")
    num = 0.0
    den = 0.0
    for idx in order:
        a = cov.a[idx]
        eta2 = mode_relevance(a, chan.h, chan.sigma, cov.modes[idx], 2)
        num += eta2 / a**2
        den += 1.0 / a**2
    return QuadraticRelevance(num / den, num, den)


@dataclass
class HOperatorResult:
    """H with its spectrum and A-orthonormal eigenbasis (descending eta)."""

    h: np.ndarray
    etas: np.ndarray
    basis: np.ndarray  # columns f_k with (f_k, A f_l) = delta_kl
    symmetry_residual: float


def h_operator(a, x, y) -> HOperatorResult:
    """H = (1 + A^{-1} (X^T)^{-1} Y X^{-1})^{-1} with its eigensystem.

    Accepts 1-d arrays for the mutually diagonal (translation-invariant)
    case or dense positive matrices.  A H equals H^T A, so A H is symmetric
    and the eigenproblem is solved as a symmetric-definite pencil, which
    yields the A-orthonormal eigenbasis directly.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim == 1:
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("diagonal A requires diagonal (1-d) X and Y")
        if np.any(np.abs(x) < 1e-300):
            raise SingularSmearingError("diagonal smearing has a zero entry")
        etas = 1.0 / (1.0 + y / (a * x * x))
        order = np.argsort(etas)[::-1]
        h = np.diag(etas)
        basis = np.zeros((len(a), len(a)))
        basis[np.arange(len(a)), np.arange(len(a))] = 1.0 / np.sqrt(a)
        return HOperatorResult(h, etas[order], basis[:, order], 0.0)
    det = np.linalg.det(x)
    if abs(det) < 1e-12:
        raise SingularSmearingError("smearing matrix is not invertible")
    n = a.shape[0]
    x_inv = np.linalg.inv(x)
    middle = x_inv.T @ y @ x_inv
    h = np.linalg.inv(np.eye(n) + np.linalg.solve(a, middle))
    ah = a @ h
    residual = float(np.max(np.abs(ah - ah.T)))
    etas, basis = eigh(0.5 * (ah + ah.T), a)
    order = np.argsort(etas)[::-1]
    return HOperatorResult(h, etas[order], basis[:, order], residual)


# --- exact polynomial algebra under Gaussian maps ---------------------------
#
# Polynomials over m field modes are dicts {exponent tuple: coefficient}.
# The two channel building blocks (conditional expectation and noisy
# pushforward) are both of the form  q(w) = E_z[ p(L w + z) ],  z ~ N(0, S),
# which for total degree <= 3 needs Gaussian moments no higher than second
# order, so the algebra below is exact.

MAX_EIGENCHECK_ORDER = 3


def _poly_add(p: dict, q: dict, scale: float = 1.0) -> dict:
    out = dict(p)
    for mono, c in q.items():
        out[mono] = out.get(mono, 0.0) + scale * c
    return {m: c for m, c in out.items() if c != 0.0}


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ma, ca in p.items():
        for mb, cb in q.items():
            mono = tuple(i + j for i, j in zip(ma, mb))
            out[mono] = out.get(mono, 0.0) + ca * cb
    return out


def _poly_linear(coeffs: np.ndarray) -> dict:
    m = len(coeffs)
    out = {}
    for i, c in enumerate(coeffs):
        if c != 0.0:
            mono = tuple(1 if j == i else 0 for j in range(m))
            out[mono] = float(c)
    return out


def _poly_const(value: float, m: int) -> dict:
    return {tuple([0] * m): float(value)} if value != 0.0 else {}


def _gaussian_affine_expectation(poly: dict, l: np.ndarray, s: np.ndarray) -> dict:
    """E_z[ poly(L w + z) ] with z ~ N(0, S), exact for degree <= 3."""
    m = l.shape[0]
    out: dict = {}
    one = _poly_const(1.0, m)
    for mono, coeff in poly.items():
        factors = [i for i, e in enumerate(mono) for _ in range(e)]
        if len(factors) > MAX_EIGENCHECK_ORDER:
            raise ValueError("polynomial degree exceeds the configured expansion")
        # expand prod_i (ell_i(w) + z_i) over subsets taking the z part
        term_total: dict = {}
        for pattern in itertools.product((0, 1), repeat=len(factors)):
            z_idx = [factors[i] for i, bit in enumerate(pattern) if bit]
            if len(z_idx) == 1 or len(z_idx) == 3:
                continue  # odd Gaussian moments vanish
            if len(z_idx) == 0:
                z_moment = 1.0
            else:
                z_moment = float(s[z_idx[0], z_idx[1]])
            if z_moment == 0.0:
                continue
            w_part = one
            for i, bit in enumerate(pattern):
                if not bit:
                    w_part = _poly_mul(w_part, _poly_linear(l[factors[i], :]))
            term_total = _poly_add(term_total, w_part, z_moment)
        out = _poly_add(out, term_total, coeff)
    return out


def _derivative_tensor_poly(directions: np.ndarray, c: np.ndarray) -> dict:
    """Derivative of the Gaussian generating functional along the directions.

    For directions f_1..f_n (n <= 3) the result is the polynomial
    v_1        (n = 1)
    v_1 v_2 - c_12        (n = 2)
    v_1 v_2 v_3 - (v_1 c_23 + v_2 c_13 + v_3 c_12)        (n = 3)
    with v_a = (f_a, phi) and c_ab = (f_a, C f_b); n = 0 gives the constant 1.
    """
    n = directions.shape[1]
    m = directions.shape[0]
    if n == 0:
        return _poly_const(1.0, m)
    vs = [_poly_linear(directions[:, a]) for a in range(n)]

    def pair(a: int, b: int) -> float:
        return float(directions[:, a] @ c @ directions[:, b])
    if n == 1:
        return vs[0]
    if n == 2:
        return _poly_add(_poly_mul(vs[0], vs[1]), _poly_const(pair(0, 1), m), -1.0)
    if n == 3:
        out = _poly_mul(_poly_mul(vs[0], vs[1]), vs[2])
        out = _poly_add(out, vs[0], -pair(1, 2))
        out = _poly_add(out, vs[1], -pair(0, 2))
        out = _poly_add(out, vs[2], -pair(0, 1))
        return out
    raise ValueError(f"order {n} exceeds the configured expansion ({MAX_EIGENCHECK_ORDER})")


@dataclass(frozen=True)
class EigencheckEntry:
    indices: tuple
    eta_product: float
    residual: float


@dataclass
class EigencheckReport:
    entries: list
    max_residual: float

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_residual <= tol


def functional_derivative_eigencheck(a, x, y, directions=None) -> EigencheckReport:
    """Verify that noise pullback scales derivative tensors by eta products.

    The channel (smear by X, add Gaussian field noise Y) and its metric
    adjoint act on polynomial observables through two exact Gaussian
    conditional expectations; applying that composite to the order-n
    derivative tensor of the generating functional along H-eigenbasis
    directions must reproduce the tensor times the product of eigenvalues.
    ``directions`` is a list of index tuples into the H eigenbasis, each of
    length (order) at most 3; defaults cover orders 0..3.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = np.diag(a)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = np.diag(x)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = np.diag(y)
    result = h_operator(a, x, y)
    m = a.shape[0]
    if directions is None:
        directions = [()]
        directions += [(i,) for i in range(m)]
        directions += [(i, j) for i in range(m) for j in range(i, m)]
        directions += [(0, min(1, m - 1), min(2, m - 1))]
    for idx in directions:
        if len(idx) > MAX_EIGENCHECK_ORDER:
            raise ValueError(
                f"order {len(idx)} exceeds the configured expansion "
                f"({MAX_EIGENCHECK_ORDER})"
            )
    # Schroedinger-picture smearing is the transpose of the Heisenberg X
    x_s = x.T
    pushed = x_s @ a @ x_s.T + y
    gain = a @ x_s.T @ np.linalg.inv(pushed)
    cond_cov = a - gain @ x_s @ a
    entries = []
    for idx in directions:
        dirs = result.basis[:, list(idx)] if idx else np.zeros((m, 0))
        tensor = _derivative_tensor_poly(dirs, a)
        pulled = _gaussian_affine_expectation(tensor, gain, cond_cov)
        mapped = _gaussian_affine_expectation(pulled, x_s, y)
        eta_prod = float(np.prod([result.etas[i] for i in idx])) if idx else 1.0
        expected = {mono: eta_prod * cv for mono, cv in tensor.items()}
        monos = set(mapped) | set(expected)
        residual = max(
            (abs(mapped.get(mo, 0.0) - expected.get(mo, 0.0)) for mo in monos),
            default=0.0,
        )
        entries.append(EigencheckEntry(tuple(idx), eta_prod, residual))
    return EigencheckReport(entries, max(e.residual for e in entries))


# --- file ingestion ----------------------------------------------------------

_FIELD_KEYS = ("d", "n_per_side", "spacing", "beta", "mass", "h", "sigma")


@dataclass(frozen=True)
class FieldSpec:
    """Parsed lattice field description."""

    lattice: LatticeSpec
    beta: float
    mass: float
    channel: FieldChannel


def load_field_spec(path, allow_extra: bool = False) -> FieldSpec:
    """Read a key=value field description (keys d, n_per_side, spacing,
    beta, mass, h, sigma)."""
    raw = parse_keyvalue_file(path)
    unknown = set(raw) - set(_FIELD_KEYS)
    if unknown and not allow_extra:
        raise ValueError(f"unknown field-spec keys: {sorted(unknown)}")
    missing = set(_FIELD_KEYS) - set(raw)
    if missing:
        raise ValueError(f"missing field-spec keys: {sorted(missing)}")
    lattice = LatticeSpec(int(raw["d"]), int(raw["n_per_side"]), float(raw["spacing"]))
    return FieldSpec(
        lattice,
        beta=float(raw["beta"]),
        mass=float(raw["mass"]),
        channel=FieldChannel(sigma=float(raw["sigma"]), h=float(raw["h"])),
    )
