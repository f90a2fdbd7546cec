"""Phase-space (Gaussian) quantum theory: Weyl algebra bookkeeping,
covariance calculus, and mode relevances for particle and field systems.

No Weyl operator is ever materialized as a matrix here; states and channels
live entirely on phase space (the truncated number-basis representation in
``igflow.fock`` exists only as a cross-checking oracle).  The modular flow
of a quadratic-Hamiltonian thermal state acts on phase space through the
one-parameter group R_s = exp(-i s beta H_quad Delta), which leaves the
covariance invariant in the plain-transpose sense and drives the
generating-function inner products evaluated by ``gen_inner``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

from .config import parse_keyvalue_file
from .field import LatticeSpec

__all__ = [
    "StateValidityError",
    "ChannelValidityError",
    "PhaseSpace",
    "GaussianState",
    "GaussianChannel",
    "QuadraticHamiltonianSpec",
    "weyl_phase",
    "weyl_star_product",
    "char_value",
    "two_point",
    "evolve_covariance",
    "rs_matrix",
    "gen_inner",
    "dual_metric_linear",
    "linear_observable_relevance",
    "ParticleRelevance",
    "particle_mode_relevance",
    "FieldModeRelevance",
    "field_mode_relevance",
    "CutoffReport",
    "cutoff_equivalence",
    "QuantumFieldSpec",
    "load_quantum_field_spec",
]

PSD_TOL = 1e-10


class StateValidityError(ValueError):
    """The covariance violates the uncertainty bound A + (i/2) Delta >= 0."""


class ChannelValidityError(ValueError):
    """The (X, Y) pair does not define a completely positive map."""


def canonical_delta(n_modes: int) -> np.ndarray:
    """Symplectic form in interleaved (x_1, p_1, x_2, p_2, ...) ordering."""
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for m in range(n_modes):
        out[2 * m : 2 * m + 2, 2 * m : 2 * m + 2] = block
    return out


@dataclass(frozen=True)
class PhaseSpace:
    """Real symplectic vector space (V, Delta)."""

    n_modes: int
    delta: np.ndarray = None

    def __post_init__(self):
        if self.delta is None:
            object.__setattr__(self, "delta", canonical_delta(self.n_modes))
        d = np.asarray(self.delta, dtype=float)
        if d.shape != (2 * self.n_modes, 2 * self.n_modes):
            raise ValueError("Delta must be 2n x 2n")
        if np.max(np.abs(d + d.T)) > 1e-12:
            raise ValueError("Delta must be antisymmetric")
        if abs(np.linalg.det(d)) < 1e-12:
            raise ValueError("Delta must be nondegenerate")
        object.__setattr__(self, "delta", d)

    @property
    def dim(self) -> int:
        return 2 * self.n_modes


def _min_herm_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])


class GaussianState:
    """Centered state with Gaussian characteristic function exp(-(f, A f)/2)."""

    def __init__(self, space: PhaseSpace, cov):
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (space.dim, space.dim):
            raise ValueError("covariance must be 2n x 2n")
        if np.max(np.abs(cov - cov.T)) > 1e-10:
            raise ValueError("covariance must be symmetric")
        bound = _min_herm_eig(cov + 0.5j * space.delta)
        if bound < -PSD_TOL:
            raise StateValidityError(
                f"A + (i/2) Delta has negative eigenvalue {bound:.3e}"
            )
        self.space = space
        self.cov = 0.5 * (cov + cov.T)


class GaussianChannel:
    """Channel acting on Weyl indices as f -> X f with Gaussian noise Y."""

    def __init__(self, space: PhaseSpace, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (space.dim, space.dim) or y.shape != (space.dim, space.dim):
            raise ValueError("X and Y must be 2n x 2n")
        if np.max(np.abs(y - y.T)) > 1e-10:
            raise ValueError("Y must be symmetric")
        d = space.delta
        bound = _min_herm_eig(y.astype(complex) - 0.5j * (x.T @ d @ x) + 0.5j * d)
        if bound < -PSD_TOL:
            raise ChannelValidityError(
                f"Y - (i/2) X^T Delta X + (i/2) Delta has negative eigenvalue {bound:.3e}"
            )
        self.space = space
        self.x = x
        self.y = 0.5 * (y + y.T)


def weyl_phase(space: PhaseSpace, f, g) -> complex:
    """Multiplier exp(-(i/2)(f, Delta g)) in W_f W_g = phase * W_{f+g}.

    Bilinear in (f, g); for real vectors it is a unit complex number.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.shape != (space.dim,) or g.shape != (space.dim,):
        raise ValueError(f"vectors must have length {space.dim}")
    return complex(np.exp(-0.5j * (f @ space.delta @ g)))


def weyl_star_product(space: PhaseSpace, f, g) -> tuple[complex, np.ndarray]:
    """Tracked phase and index of W_f^* W_g = phase * W_{g - conj(f)}."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    phase = weyl_phase(space, -f.conj(), g)
    return phase, g - f.conj()


def char_value(state: GaussianState, f) -> complex:
    """Characteristic function exp(-(1/2) f^T A f), the analytic extension in f."""
    f = np.asarray(f, dtype=complex)
    return complex(np.exp(-0.5 * (f @ state.cov @ f)))


def two_point(state: GaussianState, f, g) -> complex:
    """Correlation of the field operators indexed by f and g.

    Equals f^dagger (A + (i/2) Delta) g; the symmetric part is the covariance
    pairing and the imaginary part is half the symplectic form.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    m = state.cov + 0.5j * state.space.delta
    return complex(f.conj() @ m @ g)


def evolve_covariance(state: GaussianState, chan: GaussianChannel) -> GaussianState:
    """Covariance map A -> X^T A X + Y; the output is validated as a state."""
    if chan.space.dim != state.space.dim:
        raise ValueError("channel and state live on different spaces")
    return GaussianState(state.space, chan.x.T @ state.cov @ chan.x + chan.y)


class QuadraticHamiltonianSpec:
    """Per-mode quadratic Hamiltonian sum_k (c_x,k x_k^2 + c_p,k p_k^2)/2
    at inverse temperature beta.

    The particle parametrization (u, v) has beta = 2 arccoth(u v), frequency
    one, and thermal covariance diag(u^2, v^2)/2; the field parametrization
    takes mode frequencies omega_k with c_x = omega_k^2 and c_p = 1.
    """

    def __init__(self, c_x, c_p, beta: float):
        self.c_x = np.atleast_1d(np.asarray(c_x, dtype=float))
        self.c_p = np.atleast_1d(np.asarray(c_p, dtype=float))
        if self.c_x.shape != self.c_p.shape:
            raise ValueError("c_x and c_p must have matching shapes")
        if np.any(self.c_x <= 0) or np.any(self.c_p <= 0):
            raise ValueError("quadratic coefficients must be positive")
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.beta = float(beta)

    @classmethod
    def particle(cls, u: float, v: float) -> "QuadraticHamiltonianSpec":
        if u <= 0 or v <= 0 or u * v < 1.0:
            raise ValueError("need u, v > 0 with u v >= 1")
        beta = 2.0 * np.arctanh(1.0 / (u * v)) if u * v > 1.0 else np.inf
        if not np.isfinite(beta):
            raise ValueError("u v = 1 is a pure state with infinite beta")
        return cls(v / u, u / v, beta)

    @classmethod
    def field(cls, omegas, beta: float) -> "QuadraticHamiltonianSpec":
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        if np.any(omegas <= 0):
            raise ValueError("mode frequencies must be positive")
        return cls(omegas**2, np.ones_like(omegas), beta)

    @classmethod
    def from_covariance(cls, cov_diag) -> "QuadraticHamiltonianSpec":
        """Modular Hamiltonian of a mode-diagonal Gaussian state.

        ``cov_diag`` holds (A_xx, A_pp) per mode; each mode must be strictly
        above the uncertainty bound A_xx A_pp > 1/4.
        """
        cov = np.atleast_2d(np.asarray(cov_diag, dtype=float))
        nu = np.sqrt(cov[:, 0] * cov[:, 1])
        if np.any(nu <= 0.5 + 1e-12):
            raise StateValidityError("pure modes have no finite modular Hamiltonian")
        theta = 2.0 * np.arctanh(0.5 / nu)
        # choose omega_k = 1 per mode, beta carries theta through a shared scale
        if len(theta) > 1 and np.max(np.abs(theta - theta[0])) > 1e-12 * theta[0]:
            # distinct temperatures per mode: encode via c scaling at beta = 1
            return cls(theta * cov[:, 1] / nu, theta * cov[:, 0] / nu, 1.0)
        return cls(cov[:, 1] / nu, cov[:, 0] / nu, float(theta[0]))

    @property
    def n_modes(self) -> int:
        return len(self.c_x)

    @property
    def omegas(self) -> np.ndarray:
        return np.sqrt(self.c_x * self.c_p)

    @property
    def uv(self) -> np.ndarray:
        """coth(beta omega / 2) per mode."""
        return 1.0 / np.tanh(0.5 * self.beta * self.omegas)

    @property
    def s_parameter(self) -> np.ndarray:
        """arccoth of the per-mode coth factor (= beta omega / 2), the
        large-temperature expansion variable."""
        return 0.5 * self.beta * self.omegas

    def quadratic_form(self) -> np.ndarray:
        """Matrix of the Hamiltonian quadratic form in interleaved ordering."""
        return np.diag(np.ravel(np.column_stack([self.c_x, self.c_p])))

    def thermal_covariance(self) -> np.ndarray:
        """Covariance of exp(-beta H)/Z: per mode
        diag(c_p coth(beta omega/2)/(2 omega), c_x coth(beta omega/2)/(2 omega))."""
        om = self.omegas
        coth = self.uv
        a_x = self.c_p * coth / (2.0 * om)
        a_p = self.c_x * coth / (2.0 * om)
        return np.diag(np.ravel(np.column_stack([a_x, a_p])))

    def thermal_state(self, space: PhaseSpace | None = None) -> GaussianState:
        return GaussianState(space or PhaseSpace(self.n_modes), self.thermal_covariance())


def rs_matrix(spec: QuadraticHamiltonianSpec, s: float,
              delta: np.ndarray | None = None) -> np.ndarray:
    """Complex canonical transformation R_s = exp(-i s beta H_quad Delta).

    Conjugating a Weyl index by the s-th power of the thermal state acts as
    f -> R_s f; the thermal covariance satisfies R_s^T A R_s = A (plain
    transpose).  Passing Delta = 0 is the commuting test double, for which
    R_s is the identity.
    """
    if delta is None:
        delta = canonical_delta(spec.n_modes)
    generator = -1j * spec.beta * spec.quadratic_form() @ delta
    return expm(s * generator)


def gen_inner(spec: QuadraticHamiltonianSpec, f, g,
              delta: np.ndarray | None = None) -> complex:
    """Dual-metric inner product of two Gaussian generating functions.

    Evaluates the s-integral of exp(f^dagger (A + (i/2) Delta) R_s g) over
    [0, 1] by adaptive quadrature with absolute tolerance 1e-10.
    """
    if delta is None:
        delta = canonical_delta(spec.n_modes)
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    m = spec.thermal_covariance() + 0.5j * delta

    def integrand(s: float) -> complex:
        return np.exp(f.conj() @ m @ rs_matrix(spec, s, delta) @ g)

    re, _ = quad(lambda s: integrand(s).real, 0.0, 1.0, epsabs=1e-10, limit=200)
    im, _ = quad(lambda s: integrand(s).imag, 0.0, 1.0, epsabs=1e-10, limit=200)
    return complex(re, im)


def dual_metric_linear(spec: QuadraticHamiltonianSpec,
                       delta: np.ndarray | None = None, nodes: int = 96) -> np.ndarray:
    """Dual metric restricted to linear observables: the s-integral of
    (A + (i/2) Delta) R_s, by Gauss-Legendre quadrature (entire integrand)."""
    if delta is None:
        delta = canonical_delta(spec.n_modes)
    m = spec.thermal_covariance() + 0.5j * delta
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    acc = np.zeros_like(m)
    for xi, wi in zip(xs, ws):
        acc += wi * (m @ rs_matrix(spec, xi, delta))
    return acc


def linear_observable_relevance(spec: QuadraticHamiltonianSpec, y_diag) -> np.ndarray:
    """Exact relevances of the per-mode quadrature observables under
    mode-diagonal classical noise, via the generating-function machinery.

    The dual metric on linear observables is the matrix returned by
    ``dual_metric_linear``; pairing the channel adjoints against it reduces
    the eigenrelevance problem on the linear sector to
    M(output)^{-1} M(input), which is diagonal here.  Returns the relevances
    in interleaved (x_1, p_1, ...) order.
    """
    y_diag = np.ravel(np.asarray(y_diag, dtype=float))
    m_in = dual_metric_linear(spec)
    cov_out = np.diag(np.diag(spec.thermal_covariance()) + y_diag)
    pairs = np.diag(cov_out).reshape(-1, 2)
    spec_out = QuadraticHamiltonianSpec.from_covariance(pairs)
    m_out = dual_metric_linear(spec_out)
    return np.real(np.diag(m_in) / np.diag(m_out))


@dataclass(frozen=True)
class ParticleRelevance:
    """Closed-form candidates for single-mode quadrature relevances.

    ``eta_x`` / ``eta_p`` follow the per-mode H-operator formula
    1/(1 + sigma/A); the ``printed`` variants are the alternative closed
    forms 1/(1 + 2 v sigma_x / coth(beta/2)) and its momentum partner.  The
    pairs disagree whenever the corresponding scale parameter (u for x, v
    for p) differs from one; the number-basis oracle adjudicates.
    """

    eta_x: float
    eta_p: float
    eta_x_printed: float
    eta_p_printed: float


def particle_mode_relevance(u: float, v: float, sigma_x: float,
                            sigma_p: float) -> ParticleRelevance:
    """Both closed-form relevance candidates for position and momentum."""
    if sigma_x < 0 or sigma_p < 0:
        raise ValueError("noise strengths must be nonnegative")
    spec = QuadraticHamiltonianSpec.particle(u, v)
    cov = spec.thermal_covariance()
    a_xx, a_pp = cov[0, 0], cov[1, 1]
    coth = float(spec.uv[0])
    return ParticleRelevance(
        eta_x=1.0 / (1.0 + sigma_x / a_xx),
        eta_p=1.0 / (1.0 + sigma_p / a_pp),
        eta_x_printed=1.0 / (1.0 + 2.0 * v * sigma_x / coth),
        eta_p_printed=1.0 / (1.0 + 2.0 * u * sigma_p / coth),
    )


@dataclass(frozen=True)
class FieldModeRelevance:
    """Relevances of the field and conjugate-momentum operators of one mode,
    with their large-temperature approximants."""

    eta_phi: float
    eta_pi: float
    eta_phi_large_t: float
    eta_pi_large_t: float


def field_mode_relevance(k, mass: float, beta: float, y_phi: float, y_pi: float,
                         sigma: float) -> FieldModeRelevance:
    """Mode-k relevances for the thermal scalar field under smearing noise.

    eta(Phi_k) = coth(beta omega_k/2) / (coth(beta omega_k/2)
                 + 2 omega_k y_phi exp(k^2 sigma^2)), and the momentum
    partner carries (2/omega_k) y_pi instead.  The thermal argument is
    beta omega_k / 2 throughout (the per-mode two-point function).
    """
    k2 = float(np.sum(np.square(np.atleast_1d(np.asarray(k, dtype=float)))))
    omega = math.sqrt(k2 + mass**2)
    if omega <= 0:
        raise ValueError("omega_k must be positive; massless zero mode excluded")
    coth = 1.0 / math.tanh(0.5 * beta * omega)
    blow = math.exp(k2 * sigma**2)
    eta_phi = coth / (coth + 2.0 * omega * y_phi * blow)
    eta_pi = coth / (coth + (2.0 / omega) * y_pi * blow)
    half = 0.5 * beta * omega
    eta_phi_lt = 1.0 / (half * coth + beta * omega**2 * y_phi * blow)
    eta_pi_lt = 1.0 / (half * coth + beta * y_pi * blow)
    return FieldModeRelevance(eta_phi, eta_pi, eta_phi_lt, eta_pi_lt)


@dataclass
class CutoffReport:
    """Mode-by-mode comparison of two cutoff Hamiltonians' thermal states."""

    common_modes: list
    differing_modes: list
    rows: list  # (|k|, omega, in_sigma, in_eps, phi_var, pi_var)
    sigma: float
    eps_cut: float
    relevant_order: int

    @property
    def equivalent(self) -> bool:
        return not self.differing_modes


def cutoff_equivalence(lattice: LatticeSpec, mass: float, beta: float,
                       sigma: float, eps_cut: float,
                       relevant_order: int = 2) -> CutoffReport:
    """Compare free-field thermal states truncated at 1/sigma and 1/eps_cut.

    Both states are mode-diagonal, so every one- and two-point function of
    modes kept by both cutoffs coincides identically; the report lists the
    modes present under the finer cutoff only.
    """
    if not 0.0 < eps_cut <= sigma:
        raise ValueError("need 0 < eps_cut <= sigma")
    ks = lattice.modes()
    knorm = np.sqrt(np.sum(ks * ks, axis=1))
    common, differing, rows = [], [], []
    for k, kn in zip(ks, knorm):
        in_sigma = kn < 1.0 / sigma
        in_eps = kn < 1.0 / eps_cut
        omega = math.sqrt(kn**2 + mass**2)
        if in_eps:
            coth = 1.0 / math.tanh(0.5 * beta * omega)
            phi_var = coth / (2.0 * omega)
            pi_var = coth * omega / 2.0
        else:
            phi_var = pi_var = float("nan")
        rows.append((float(kn), omega, in_sigma, in_eps, phi_var, pi_var))
        if in_sigma and in_eps:
            common.append(tuple(k))
        elif in_eps and not in_sigma:
            differing.append(tuple(k))
    return CutoffReport(common, differing, rows, sigma, eps_cut, relevant_order)


_QUANTUM_KEYS = ("d", "n_per_side", "spacing", "beta", "mass", "h", "sigma",
                 "y_phi", "y_pi", "eps_cut")


@dataclass(frozen=True)
class QuantumFieldSpec:
    """Quantum extension of the lattice field description."""

    lattice: LatticeSpec
    beta: float
    mass: float
    sigma: float
    h: float | None
    y_phi: float | None
    y_pi: float | None
    eps_cut: float | None


def load_quantum_field_spec(path) -> QuantumFieldSpec:
    """Read the key=value field format extended with y_phi, y_pi, eps_cut."""
    raw = parse_keyvalue_file(path)
    unknown = set(raw) - set(_QUANTUM_KEYS)
    if unknown:
        raise ValueError(f"unknown field-spec keys: {sorted(unknown)}")
    required = ("d", "n_per_side", "spacing", "beta", "mass", "sigma")
    missing = set(required) - set(raw)
    if missing:
        raise ValueError(f"missing field-spec keys: {sorted(missing)}")
    opt = lambda key: float(raw[key]) if key in raw else None
    return QuantumFieldSpec(
        LatticeSpec(int(raw["d"]), int(raw["n_per_side"]), float(raw["spacing"])),
        beta=float(raw["beta"]),
        mass=float(raw["mass"]),
        sigma=float(raw["sigma"]),
        h=opt("h"),
        y_phi=opt("y_phi"),
        y_pi=opt("y_pi"),
        eps_cut=opt("eps_cut"),
    )
