"""Single-particle toy model: Gaussian prior, convolution noise, flows.

States are probability densities on a line, noise is convolution with a
Gaussian of width sigma, and the eigenrelevance observables are scaled
Hermite polynomials with eigenvalues alpha^{-n} for
alpha = (sigma^2 + tau^2)/tau^2.  Moment matching inside the resulting
equivalence classes reproduces two coupling-constant flows: a
coarse-graining step tau -> (1 - 6 lambda) tau, and a regulator flow
(tau(eps), lambda(eps)) that keeps low-order expectations fixed while a
sixth-order term renders negative quartic couplings normalizable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh

__all__ = [
    "GridCoverageError",
    "NonNormalizableError",
    "LineGrid",
    "GaussianPrior",
    "QuarticModel",
    "convolve",
    "estar_rstar",
    "hermite_values",
    "hermite_observable",
    "relevance_spectrum",
    "kernel_spectrum",
    "moment",
    "expectation_hermite",
    "stat_flow",
    "qft_flow",
    "FlowResult",
    "qft_flow_trajectory",
]

MASS_TOL = 1e-6
FIRST_ORDER_WARN = 0.05
MAX_DEGREE = 30


class GridCoverageError(ValueError):
    """The grid is too narrow: probability mass leaked past the boundary."""


class NonNormalizableError(ValueError):
    """exp(-H) has infinite mass, the model admits no thermal density."""


@dataclass(frozen=True)
class LineGrid:
    """Uniform discretization of an interval of the real line."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 points")
        if not self.hi > self.lo:
            raise ValueError("grid needs hi > lo")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @staticmethod
    def for_width(tau: float, half_width: float = 10.0, n: int = 2001) -> "LineGrid":
        return LineGrid(-half_width * tau, half_width * tau, n)


@dataclass(frozen=True)
class GaussianPrior:
    """Centered normal density of width tau, the maximum-entropy hypothesis."""

    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-x * x / (2.0 * self.tau**2)) / (np.sqrt(2.0 * np.pi) * self.tau)

    def samples(self, grid: LineGrid) -> np.ndarray:
        return self.pdf(grid.points)


@dataclass(frozen=True)
class QuarticModel:
    """Hamiltonian x^2/(2 tau^2) + lam x^4/tau^4 + eps x^6/tau^6.

    Without the sextic regulator (eps = 0) a negative quartic coupling makes
    exp(-H) non-normalizable and is rejected at construction.
    """

    tau: float
    lam: float
    eps: float = 0.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.eps < 0:
            raise NonNormalizableError("negative sextic coefficient is unbounded below")
        if self.eps == 0.0 and self.lam < 0:
            raise NonNormalizableError(
                "lam < 0 without a regulator leaves the energy unbounded below"
            )

    def energy(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t2 = self.tau**2
        return x * x / (2 * t2) + self.lam * x**4 / t2**2 + self.eps * x**6 / t2**3


def _check_density(p: np.ndarray, grid: LineGrid) -> None:
    if np.any(p < -1e-12):
        raise ValueError("density has negative entries")
    mass = float(np.sum(p) * grid.spacing)
    if abs(mass - 1.0) > MASS_TOL:
        raise ValueError(f"density is not normalized on the grid: mass {mass!r}")


def convolve(p, grid: LineGrid, sigma: float) -> np.ndarray:
    """Gaussian blur of a sampled density; the noise model of this system.

    The kernel is renormalized on the grid so the output stays a density;
    mass lost past the boundary beyond 1e-6 raises GridCoverageError.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    p = np.asarray(p, dtype=float)
    _check_density(p, grid)
    h = grid.spacing
    offsets = np.arange(-(grid.n - 1), grid.n) * h
    kernel = np.exp(-offsets**2 / (2.0 * sigma**2))
    kernel /= kernel.sum() * h
    out = np.convolve(p, kernel, mode="valid") * h
    mass = float(np.sum(out) * h)
    if abs(mass - 1.0) > MASS_TOL:
        raise GridCoverageError(
            f"grid too narrow: convolution lost mass {1.0 - mass:.3e} at the boundaries"
        )
    return out


def estar_rstar(a, grid: LineGrid, tau: float, sigma: float,
                pad_factor: float = 0.5) -> np.ndarray:
    """Pullback of an observable through noise and its metric adjoint.

    Integral kernel (in y, for each output point x):
    alpha/(sqrt(2 pi (alpha^2 - 1)) tau) * exp(-(x - alpha y)^2 /
    (2 tau^2 (alpha^2 - 1))), evaluated by quadrature.  Scaled Hermite
    polynomials are eigenfunctions with eigenvalues alpha^{-n}.

    ``a`` may be samples on ``grid`` (integration is then confined to the
    grid, with a truncation warning when kernel mass leaks past it) or a
    callable, in which case the integration domain is extended by
    ``pad_factor`` times the grid length on each side so that growing
    observables keep their tails inside the quadrature.  Output points are
    always ``grid.points``.
    """
    if sigma <= 0 or tau <= 0:
        raise ValueError("tau and sigma must be positive")
    alpha = (sigma**2 + tau**2) / tau**2
    width2 = tau**2 * (alpha**2 - 1.0)
    if callable(a):
        extra = int(np.ceil(pad_factor * (grid.n - 1)))
        h = grid.spacing
        y_pts = np.concatenate([
            grid.lo + np.arange(-extra, 0) * h,
            grid.points,
            grid.hi + np.arange(1, extra + 1) * h,
        ])
        values = np.asarray(a(y_pts), dtype=float)
    else:
        values = np.asarray(a, dtype=float)
        y_pts = grid.points
    x = grid.points[:, None]
    y = y_pts[None, :]
    kernel = alpha / np.sqrt(2.0 * np.pi * width2) * np.exp(-((x - alpha * y) ** 2) / (2.0 * width2))
    out = kernel @ values * grid.spacing
    if not callable(a):
        # integrand left at the quadrature boundary signals truncated tails
        edge = (np.abs(kernel[:, 0] * values[0])
                + np.abs(kernel[:, -1] * values[-1])) * grid.spacing
        if np.any(edge > 1e-9 * (np.abs(out) + 1.0)):
            warnings.warn("integrand truncated at the grid boundary; widen the grid",
                          stacklevel=2)
    return out


def hermite_values(n: int, tau: float, x) -> np.ndarray:
    """He_n(x/tau)/sqrt(n!) by the three-term recurrence."""
    if not 0 <= n <= MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}]")
    z = np.asarray(x, dtype=float) / tau
    prev = np.ones_like(z)
    if n == 0:
        return prev
    cur = z.copy()
    for k in range(1, n):
        prev, cur = cur, z * cur - k * prev
    return cur / math.sqrt(math.factorial(n))


def hermite_observable(n: int, tau: float, grid: LineGrid) -> np.ndarray:
    """Sampled eigenrelevance observable of degree n, orthonormal under the prior."""
    return hermite_values(n, tau, grid.points)


def relevance_spectrum(tau: float, sigma: float, n_max: int) -> list[tuple[int, float]]:
    """Closed-form spectrum [(n, alpha^{-n})] for degrees 0..n_max."""
    if not 0 <= n_max <= MAX_DEGREE:
        raise ValueError(f"n_max must lie in [0, {MAX_DEGREE}]")
    if tau <= 0 or sigma <= 0:
        raise ValueError("tau and sigma must be positive")
    alpha = (sigma**2 + tau**2) / tau**2
    return [(n, alpha ** (-n)) for n in range(n_max + 1)]


@dataclass
class KernelSpectrum:
    """Numerical route: eigensystem of the weight-symmetrized kernel."""

    etas: np.ndarray
    vectors: np.ndarray  # columns, in the sqrt(p)-weighted representation
    overlaps: np.ndarray  # |<vector, weighted Hermite>| per degree
    grid: LineGrid


def kernel_spectrum(tau: float, sigma: float, n_max: int,
                    grid: LineGrid | None = None) -> KernelSpectrum:
    """Top eigenpairs of the discretized noise-pullback kernel.

    The kernel is not symmetric in flat measure, but conjugating by the
    square root of the Gaussian prior makes it so (it is self-adjoint in the
    prior-weighted dual metric), and the conjugated matrix is assembled
    directly from a single joint exponent so no huge/tiny products appear.
    """
    if not 0 <= n_max <= MAX_DEGREE:
        raise ValueError(f"n_max must lie in [0, {MAX_DEGREE}]")
    if grid is None:
        grid = LineGrid.for_width(tau)
    alpha = (sigma**2 + tau**2) / tau**2
    x = grid.points[:, None]
    y = grid.points[None, :]
    denom = 4.0 * tau**2 * (alpha**2 - 1.0)
    exponent = -((alpha**2 + 1.0) * (x * x + y * y) - 4.0 * alpha * x * y) / denom
    m = alpha / np.sqrt(2.0 * np.pi * tau**2 * (alpha**2 - 1.0)) * np.exp(exponent)
    m *= grid.spacing
    n = grid.n
    count = n_max + 1
    w, v = eigh(m, subset_by_index=(n - count, n - 1))
    w = w[::-1]
    v = v[:, ::-1]
    prior = GaussianPrior(tau).samples(grid)
    sqrt_p = np.sqrt(prior)
    overlaps = np.empty(count)
    for deg in range(count):
        weighted = sqrt_p * hermite_values(deg, tau, grid.points)
        weighted /= np.linalg.norm(weighted)
        overlaps[deg] = abs(float(np.dot(weighted, v[:, deg])))
    return KernelSpectrum(w, v, overlaps, grid)


def _integration_halfwidth(model: QuarticModel, target: float = 80.0) -> float:
    r = 2.0 * model.tau
    while model.energy(r) < target and r < 1e6 * model.tau:
        r *= 1.5
    return r


def moment(model: QuarticModel, k: int) -> float:
    """<x^k> under exp(-H)/Z by adaptive quadrature, absolute tolerance 1e-10."""
    if k % 2 == 1:
        return 0.0
    r = _integration_halfwidth(model)

    def weight(x):
        return np.exp(-model.energy(x))

    z, _ = quad(weight, -r, r, epsabs=1e-12, epsrel=1e-12, limit=200)
    num, _ = quad(lambda x: x**k * weight(x), -r, r, epsabs=1e-10, epsrel=1e-12, limit=200)
    return num / z


def expectation_hermite(model: QuarticModel, n: int, tau_ref: float) -> float:
    """Expectation of the degree-n Hermite observable built at width tau_ref."""
    if n == 0:
        return 1.0
    if n % 2 == 1:
        return 0.0
    moments = {k: moment(model, k) for k in range(0, n + 1, 2)}
    t2 = tau_ref**2
    if n == 2:
        return (moments[2] / t2 - 1.0) / math.sqrt(2.0)
    if n == 4:
        return (moments[4] / t2**2 - 6.0 * moments[2] / t2 + 3.0) / math.sqrt(24.0)
    # general even degree via explicit Hermite coefficients
    coeffs = np.polynomial.hermite_e.herme2poly([0.0] * n + [1.0])
    acc = coeffs[0]
    for k in range(2, n + 1, 2):
        acc += coeffs[k] * moments[k] / tau_ref**k
    return float(acc) / math.sqrt(math.factorial(n))


def _warn_first_order(**couplings) -> None:
    for name, value in couplings.items():
        if abs(value) > FIRST_ORDER_WARN:
            warnings.warn(
                f"{name} = {value} is outside the first-order regime", stacklevel=3
            )


def stat_flow(tau: float, lam: float) -> float:
    """Coarse-graining step: the Gaussian width (1 - 6 lam) tau whose second
    moment matches the quartic model's to first order."""
    _warn_first_order(lam=lam)
    return (1.0 - 6.0 * lam) * tau


def qft_flow(tau_phys: float, lam_phys: float, eps: float) -> tuple[float, float]:
    """Regulator flow (tau(eps), lam(eps)) keeping degree-2 and degree-4
    expectations fixed to first order."""
    _warn_first_order(lam_phys=lam_phys, eps=eps)
    lam = lam_phys - 15.0 * eps
    tau = tau_phys * (1.0 + 6.0 * lam_phys - 45.0 * eps)
    return tau, lam


@dataclass
class FlowResult:
    """Coupling trajectory with relevant-observable expectation drifts."""

    eps: np.ndarray
    tau: np.ndarray
    lam: np.ndarray
    a2: np.ndarray
    a4: np.ndarray
    drift_a2: np.ndarray = field(init=False)
    drift_a4: np.ndarray = field(init=False)

    def __post_init__(self):
        self.drift_a2 = np.abs(self.a2 - self.a2[0])
        self.drift_a4 = np.abs(self.a4 - self.a4[0])


def qft_flow_trajectory(tau_phys: float, lam_phys: float, eps_values) -> FlowResult:
    """Run the regulator flow over a grid of eps and record expectation drifts.

    The drift reference (first entry) should be eps = 0.
    """
    eps_values = np.asarray(list(eps_values), dtype=float)
    taus, lams, a2s, a4s = [], [], [], []
    for eps in eps_values:
        tau, lam = qft_flow(tau_phys, lam_phys, eps)
        model = QuarticModel(tau, lam, eps)
        taus.append(tau)
        lams.append(lam)
        a2s.append(expectation_hermite(model, 2, tau_phys))
        a4s.append(expectation_hermite(model, 4, tau_phys))
    return FlowResult(eps_values, np.array(taus), np.array(lams),
                      np.array(a2s), np.array(a4s))
