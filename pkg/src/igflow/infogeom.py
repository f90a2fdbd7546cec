"""Finite-dimensional information geometry on strictly positive states.

Everything here derives from the Umegaki relative entropy
``D(rho, sigma) = Tr(rho log rho - rho log sigma)``.  Its second-order
expansion defines the Kubo-Mori (BKM) inner product, which is computed
through the superoperators ``omega`` and ``omega_inv``.  Both are matrix
transforms in the eigenbasis of rho with divided-difference (Daleckii-Krein)
kernels, so they are exact up to roundoff; the integral representations
(``int_0^1 rho^s A rho^{1-s} ds`` and friends) exist in the test suite as
independent quadrature oracles only.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

__all__ = [
    "PositivityError",
    "DimensionMismatchError",
    "OverflowGuardError",
    "KernelError",
    "DensityMatrix",
    "Feature",
    "Observable",
    "ThermalModel",
    "require_hermitian",
    "as_matrix",
    "relative_entropy",
    "omega_inv",
    "omega",
    "theta_op",
    "bkm_inner",
    "dual_inner",
    "monotone_metric",
    "bkm_theta",
    "thermal_state",
    "partition_first_order",
]

HERMITICITY_TOL = 1e-12
DEFAULT_FLOOR = 1e-12


class PositivityError(ValueError):
    """A state failed the strict-positivity requirement."""


class DimensionMismatchError(ValueError):
    """Operands live on spaces of different dimension."""


class OverflowGuardError(ValueError):
    """A Boltzmann exponent exceeded the configured overflow bound."""


class KernelError(ValueError):
    """A metric kernel violated positivity or the symmetry condition."""


def as_matrix(obj) -> np.ndarray:
    """Return the underlying square complex array of a matrix-like object."""
    if isinstance(obj, np.ndarray):
        return obj
    m = getattr(obj, "matrix", None)
    if m is None:
        return np.asarray(obj, dtype=complex)
    return m


def require_hermitian(m, tol: float = HERMITICITY_TOL, what: str = "matrix") -> np.ndarray:
    """Validate Hermiticity elementwise and return a complex ndarray."""
    a = np.asarray(as_matrix(m), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > tol * scale:
        raise ValueError(f"{what} is not Hermitian within {tol}")
    return a


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


class DensityMatrix:
    """Positive unit-trace Hermitian matrix, the hypothesis state.

    The strict-positivity floor is configurable; metric operations refuse
    states whose smallest eigenvalue does not clear it rather than
    regularizing silently.
    """

    def __init__(self, matrix, floor: float = DEFAULT_FLOOR):
        a = require_hermitian(matrix, what="density matrix")
        tr = np.trace(a).real
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"density matrix must have unit trace, got {tr!r}")
        self._matrix = 0.5 * (a + a.conj().T)
        self.floor = float(floor)
        if self.min_eigenvalue < -1e-12:
            raise PositivityError(
                f"density matrix has negative eigenvalue {self.min_eigenvalue:.3e}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @cached_property
    def _eigh(self):
        w, v = np.linalg.eigh(self._matrix)
        return w, v

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigh[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eigh[1]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def strictly_positive(self, floor: float | None = None) -> bool:
        f = self.floor if floor is None else floor
        return self.min_eigenvalue > f

    def require_strictly_positive(self, floor: float | None = None) -> "DensityMatrix":
        f = self.floor if floor is None else floor
        if not self.strictly_positive(f):
            raise PositivityError(
                f"state is not strictly positive: min eigenvalue "
                f"{self.min_eigenvalue:.3e} <= floor {f:.1e}"
            )
        return self

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityMatrix":
        return DensityMatrix(np.eye(dim) / dim)


class Feature:
    """Traceless Hermitian matrix: a tangent direction at a state."""

    def __init__(self, matrix):
        a = require_hermitian(matrix, what="feature")
        tr = abs(np.trace(a))
        scale = max(1.0, float(np.max(np.abs(a))))
        if tr > 1e-12 * scale:
            raise ValueError(f"feature must be traceless, got trace magnitude {tr:.3e}")
        self.matrix = a

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


class Observable:
    """Hermitian matrix paired to a feature by the BKM metric.

    Constants are allowed; conversions that need tracelessness subtract the
    induced trace part themselves.
    """

    def __init__(self, matrix):
        self.matrix = require_hermitian(matrix, what="observable")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


class ThermalModel:
    """Gibbs data: Hamiltonian, inverse temperature, partition function, state."""

    def __init__(self, hamiltonian: np.ndarray, beta: float, partition: float,
                 state: DensityMatrix):
        self.hamiltonian = hamiltonian
        self.beta = float(beta)
        self.partition = float(partition)
        self.state = state


# --- divided-difference kernels -------------------------------------------
#
# All kernels are functions of eigenvalue pairs (a, b).  They are written in
# terms of u = (a - b)/(a + b) with atanh so that nearly degenerate pairs do
# not suffer catastrophic cancellation; |u| below the series cutoff switches
# to the Taylor form of atanh(u)/u, whose truncation error is far below
# machine precision there.

_SERIES_CUTOFF = 1e-6


def _atanh_over_u(u: np.ndarray) -> np.ndarray:
    small = np.abs(u) < _SERIES_CUTOFF
    u_safe = np.where(small, 0.5, u)
    out = np.arctanh(u_safe) / u_safe
    u2 = u * u
    series = 1.0 + u2 / 3.0 + u2 * u2 / 5.0
    return np.where(small, series, out)


def _kernel_log_dd(w: np.ndarray) -> np.ndarray:
    """(log a - log b)/(a - b), diagonal limit 1/a."""
    a = w[:, None]
    b = w[None, :]
    u = (a - b) / (a + b)
    return (2.0 / (a + b)) * _atanh_over_u(u)


def _kernel_exp_dd(w: np.ndarray) -> np.ndarray:
    """(a - b)/(log a - log b), diagonal limit a."""
    a = w[:, None]
    b = w[None, :]
    u = (a - b) / (a + b)
    return 0.5 * (a + b) / _atanh_over_u(u)


def _transform(rho: DensityMatrix, m: np.ndarray, kernel: np.ndarray,
               hermitize: bool) -> np.ndarray:
    w, v = rho._eigh
    mt = v.conj().T @ m @ v
    out = v @ (kernel * mt) @ v.conj().T
    if hermitize:
        out = 0.5 * (out + out.conj().T)
    return out


# --- operations -------------------------------------------------------------


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Umegaki relative entropy Tr(rho log rho - rho log sigma) >= 0."""
    rho.require_strictly_positive()
    sigma.require_strictly_positive()
    _check_same_dim(rho.matrix, sigma.matrix)
    w_r = rho.eigenvalues
    term1 = float(np.dot(w_r, np.log(w_r)))
    w_s, v_s = sigma._eigh
    # populations of rho in sigma's eigenbasis
    pops = np.einsum("ij,jk,ki->i", v_s.conj().T, rho.matrix, v_s).real
    term2 = float(np.dot(pops, np.log(w_s)))
    return term1 - term2


def omega_inv(rho: DensityMatrix, y) -> np.ndarray:
    """Directional derivative of log at rho: d/dt log(rho + t Y) at t = 0.

    Noncommutative division by rho; for commuting arguments it reduces to
    elementwise Y / rho in the common eigenbasis.
    """
    rho.require_strictly_positive()
    m = require_hermitian(y, what="argument of omega_inv")
    _check_same_dim(rho.matrix, m)
    return _transform(rho, m, _kernel_log_dd(rho.eigenvalues), hermitize=True)


def omega(rho: DensityMatrix, a) -> np.ndarray:
    """Inverse of omega_inv: the Frechet derivative of exp, pulled back to rho."""
    rho.require_strictly_positive()
    m = require_hermitian(a, what="argument of omega")
    _check_same_dim(rho.matrix, m)
    return _transform(rho, m, _kernel_exp_dd(rho.eigenvalues), hermitize=True)


def theta_op(rho: DensityMatrix, a) -> np.ndarray:
    """Modular average: the s-integral of rho^s A rho^{-s} over [0, 1].

    Not Hermitian in general.  Useful because
    Tr(rho A^* theta_op(rho, B)) equals dual_inner(rho, A, B).
    """
    rho.require_strictly_positive()
    m = require_hermitian(a, what="argument of theta_op")
    _check_same_dim(rho.matrix, m)
    w = rho.eigenvalues
    kernel = _kernel_exp_dd(w) / w[None, :]
    return _transform(rho, m, kernel, hermitize=False)


def bkm_inner(rho: DensityMatrix, x, y) -> float:
    """Kubo-Mori inner product <X, Y>_rho = Tr(X^* omega_inv(rho, Y))."""
    rho.require_strictly_positive()
    mx = require_hermitian(x, what="first feature")
    my = require_hermitian(y, what="second feature")
    _check_same_dim(rho.matrix, mx)
    _check_same_dim(rho.matrix, my)
    w, v = rho._eigh
    xt = v.conj().T @ mx @ v
    yt = v.conj().T @ my @ v
    val = np.sum(xt.conj() * yt * _kernel_log_dd(w))
    return float(val.real)


def dual_inner(rho: DensityMatrix, a, b, route: str = "omega") -> float:
    """Dual (observable-side) metric <<A, B>>_rho = Tr(A^* omega(rho, B)).

    ``route="theta"`` evaluates the equivalent form Tr(rho A^* Theta_rho(B))
    through an explicitly materialized theta_op; the two routes agree to
    roundoff and exist as mutual checks.
    """
    rho.require_strictly_positive()
    ma = require_hermitian(a, what="first observable")
    mb = require_hermitian(b, what="second observable")
    _check_same_dim(rho.matrix, ma)
    _check_same_dim(rho.matrix, mb)
    if route == "omega":
        val = np.trace(ma.conj().T @ omega(rho, mb))
    elif route == "theta":
        val = np.trace(rho.matrix @ ma.conj().T @ theta_op(rho, mb))
    else:
        raise ValueError(f"unknown route {route!r}")
    return float(val.real)


def bkm_theta(x):
    """The kernel (x - 1)/log x that generates the BKM metric, stable at x = 1."""
    x = np.asarray(x, dtype=float)
    u = (x - 1.0) / (x + 1.0)
    out = 0.5 * (x + 1.0) / _atanh_over_u(u)
    return out if out.ndim else float(out)


def monotone_metric(theta_kernel, rho: DensityMatrix, x, y) -> float:
    """Metric Tr(X^* Omega_rho^{-1}(Y)) for an operator-monotone kernel theta.

    The caller asserts operator monotonicity; the symmetry theta(t) = t
    theta(1/t) is spot-checked on sample points, and positivity is checked on
    the eigenvalue ratios actually used.
    """
    rho.require_strictly_positive()
    mx = require_hermitian(x, what="first feature")
    my = require_hermitian(y, what="second feature")
    _check_same_dim(rho.matrix, mx)
    _check_same_dim(rho.matrix, my)
    for t in (0.37, 0.9, 2.0, 5.3):
        lhs = theta_kernel(t)
        rhs = t * theta_kernel(1.0 / t)
        if abs(lhs - rhs) > 1e-8 * max(1.0, abs(lhs)):
            raise KernelError(f"kernel violates theta(t) = t theta(1/t) at t={t}")
    w, v = rho._eigh
    ratios = w[:, None] / w[None, :]
    theta_vals = np.asarray(theta_kernel(ratios), dtype=float)
    if np.any(theta_vals <= 0.0):
        raise KernelError("kernel returned non-positive values on positive ratios")
    kernel = 1.0 / (theta_vals * w[None, :])
    xt = v.conj().T @ mx @ v
    yt = v.conj().T @ my @ v
    return float(np.sum(xt.conj() * yt * kernel).real)


def thermal_state(hamiltonian, beta: float, clip_bound: float = 700.0) -> ThermalModel:
    """Gibbs state exp(-beta H)/Z with Z = Tr(exp(-beta H)).

    Entries of beta*H beyond ``clip_bound`` are refused rather than clipped,
    since a clipped exponent would silently change the state.
    """
    h = require_hermitian(hamiltonian, what="Hamiltonian")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if np.max(np.abs(beta * h)) > clip_bound:
        raise OverflowGuardError(
            f"entries of beta*H exceed the overflow bound {clip_bound}"
        )
    w, v = np.linalg.eigh(h)
    exponents = -beta * w
    shift = exponents.max()
    weights = np.exp(exponents - shift)
    log_z = shift + np.log(weights.sum())
    if log_z > 709.0:
        raise OverflowGuardError("partition function overflows a double")
    z = float(np.exp(log_z))
    state = DensityMatrix(v @ np.diag(weights / weights.sum()) @ v.conj().T)
    return ThermalModel(h, beta, z, state)


def partition_first_order(hamiltonian, a, eps: float, project: bool = True,
                          clip_bound: float = 700.0) -> float:
    """Tr(exp(-H + eps A)) for an observable A.

    With ``project=True`` the trace part Tr(rho A) I is subtracted first, so A
    corresponds to a traceless feature and the deviation from Z is O(eps^2).
    ``project=False`` keeps the raw A, whose induced trace part produces an
    O(eps) deviation instead.
    """
    h = require_hermitian(hamiltonian, what="Hamiltonian")
    ma = require_hermitian(a, what="observable")
    _check_same_dim(h, ma)
    if project:
        rho = thermal_state(h, 1.0, clip_bound).state
        ma = ma - np.trace(rho.matrix @ ma) * np.eye(h.shape[0])
    exponent = -h + eps * ma
    if np.max(np.abs(exponent)) > clip_bound:
        raise OverflowGuardError(
            f"entries of -H + eps*A exceed the overflow bound {clip_bound}"
        )
    w = np.linalg.eigvalsh(exponent)
    return float(np.sum(np.exp(w)))
