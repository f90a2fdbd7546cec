"""Experiment registry backing the CLI.

Each experiment is a named, schema-validated computation returning a
ResultTable.  Results are deterministic for a fixed parameter set: anything
randomized draws from a generator seeded by an explicit ``seed`` parameter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, ParamSpec, coerce_params
from .infogeom import (
    DensityMatrix,
    bkm_inner,
    bkm_theta,
    monotone_metric,
    omega,
    omega_inv,
    relative_entropy,
)
from .channels import (
    Channel,
    channel_output,
    eigenrelevance,
    partial_trace_channel,
    relevance,
)
from . import particle
from . import field as field_mod
from . import gaussian
from . import fock

__all__ = [
    "ResultTable",
    "ExperimentSpec",
    "ExperimentConfig",
    "REGISTRY",
    "run_experiment",
    "catalog",
]


@dataclass
class ResultTable:
    """Columns plus numeric records, with run metadata carried alongside."""

    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row length does not match column count")

    def _format_cell(self, value, digits: int) -> str:
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return f"{float(value):.{digits}g}"
        return str(value)

    def to_delimited(self, digits: int = 12, sep: str = "\t") -> str:
        lines = [sep.join(self.columns)]
        for row in self.rows:
            lines.append(sep.join(self._format_cell(v, digits) for v in row))
        return "\n".join(lines) + "\n"

    def to_record(self, digits: int = 12) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [[self._json_cell(v) for v in row] for row in self.rows],
            "metadata": self.metadata,
        }

    @staticmethod
    def _json_cell(value):
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            return float(value)
        return str(value)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    description: str
    params: dict
    runner: object

    def run(self, raw_params: dict) -> ResultTable:
        values = coerce_params(self.params, raw_params)
        return self.runner(values)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run request: experiment name, parameters, output, precision."""

    experiment: str
    parameters: dict
    output_path: object = None
    precision: int = 12

    def __post_init__(self):
        if self.experiment not in REGISTRY:
            raise ConfigError(f"unknown experiment {self.experiment!r}; see 'igflow list'")
        if self.precision < 1:
            raise ConfigError("precision must be positive")
        # rejects unknown keys and pins types up front
        coerce_params(REGISTRY[self.experiment].params, self.parameters)

    def run(self) -> ResultTable:
        return run_experiment(self.experiment, self.parameters)


# --- runners -----------------------------------------------------------------


def _run_particle_spectrum(p: dict) -> ResultTable:
    count = p["n_max"]
    if count < 1:
        raise ConfigError("n_max must be at least 1")
    grid = particle.LineGrid.for_width(p["tau"], p["grid_halfwidth"], p["grid_points"])
    closed = particle.relevance_spectrum(p["tau"], p["sigma"], count - 1)
    numeric = particle.kernel_spectrum(p["tau"], p["sigma"], count - 1, grid)
    rows = [
        (n, eta, float(numeric.etas[n]), float(numeric.overlaps[n]))
        for n, eta in closed
    ]
    return ResultTable(["n", "eta_closed", "eta_numeric", "overlap"], rows)


def _run_genfun_covariance(p: dict) -> ResultTable:
    grid = particle.LineGrid.for_width(p["tau"], p["grid_halfwidth"], p["grid_points"])
    tau, sigma = p["tau"], p["sigma"]
    alpha = (sigma**2 + tau**2) / tau**2
    x = grid.points
    rows = []
    for t in p["t_values"]:
        pushed = particle.estar_rstar(
            lambda y, t=t: np.exp(y * t / tau - t**2 / 2.0), grid, tau, sigma)
        target = np.exp(x * (t / alpha) / tau - (t / alpha) ** 2 / 2.0)
        rows.append((t, float(np.max(np.abs(pushed - target)))))
    return ResultTable(["t", "max_abs_error"], rows, {"alpha": alpha})


def _run_ptrace_relevance(p: dict) -> ResultTable:
    rho = DensityMatrix.maximally_mixed(4)
    chan = partial_trace_channel((2, 2), traced=1)
    spectrum = eigenrelevance(chan, rho)
    clusters: list[list[float]] = []
    for eta in spectrum.etas:
        for cluster in clusters:
            if abs(cluster[0] - eta) < 1e-6:
                cluster.append(float(eta))
                break
        else:
            clusters.append([float(eta)])
    rows = [(float(np.mean(c)), len(c)) for c in clusters]
    return ResultTable(["eigenvalue", "multiplicity"], rows)


def _run_stat_flow(p: dict) -> ResultTable:
    tau = p["tau"]
    rows = []
    for lam in p["lam_values"]:
        tau1 = particle.stat_flow(tau, lam)
        quartic = particle.QuarticModel(tau, lam)
        x2 = particle.moment(quartic, 2)
        first_order = (1.0 - 12.0 * lam) * tau**2
        gauss_x2 = particle.moment(particle.QuarticModel(tau1, 0.0), 2)
        rows.append((lam, tau1, x2, first_order, abs(x2 - first_order),
                     abs(x2 - gauss_x2)))
    return ResultTable(
        ["lam", "tau1", "quartic_x2", "first_order_x2", "residual", "gaussian_mismatch"],
        rows,
    )


def _run_qft_flow(p: dict) -> ResultTable:
    result = particle.qft_flow_trajectory(p["tau_phys"], p["lam_phys"], p["eps_values"])
    rows = [
        (float(result.eps[i]), float(result.tau[i]), float(result.lam[i]),
         float(result.drift_a2[i]), float(result.drift_a4[i]))
        for i in range(len(result.eps))
    ]
    return ResultTable(["eps", "tau", "lam", "drift_A2", "drift_A4"], rows)


def _field_inputs(p: dict):
    lattice = field_mod.LatticeSpec(p["d"], p["n_per_side"], p["spacing"])
    cov = field_mod.covariance_massive(p["beta"], p["mass"], lattice)
    chan = field_mod.FieldChannel(sigma=p["sigma"], h=p["h"])
    return lattice, cov, chan


def _run_field_mode_relevance(p: dict) -> ResultTable:
    _, cov, chan = _field_inputs(p)
    rows = []
    for k, a in zip(cov.modes, cov.a):
        eta = field_mod.mode_relevance(a, chan.h, chan.sigma, k, p["degree"])
        rows.append((float(np.linalg.norm(k)), float(a), eta))
    return ResultTable(["k_norm", "a_k", "eta"], rows)


def _run_field_quadratic(p: dict) -> ResultTable:
    rows = []
    for n in [int(v) for v in p["n_values"]]:
        lattice = field_mod.LatticeSpec(p["d"], n, p["spacing"])
        cov = field_mod.covariance_massive(p["beta"], p["mass"], lattice)
        chan = field_mod.FieldChannel(sigma=p["sigma"], h=p["h"])
        res = field_mod.quadratic_observable_relevance(cov, chan)
        rows.append((n, res.value, res.numerator, res.denominator))
    return ResultTable(["n_per_side", "eta", "numerator", "denominator"], rows)


def _run_h_operator_check(p: dict) -> ResultTable:
    rng = np.random.default_rng(p["seed"])
    dim = p["dim"]
    rows = []
    for trial in range(p["count"]):
        a = _random_spd(rng, dim, lo=0.5, hi=2.0)
        x = _random_spd(rng, dim, lo=0.5, hi=2.0)
        y = _random_spd(rng, dim, lo=0.0, hi=1.0)
        res = field_mod.h_operator(a, x, y)
        gram = res.basis.T @ a @ res.basis
        ortho = float(np.max(np.abs(gram - np.eye(dim))))
        rows.append((trial, res.symmetry_residual, ortho,
                     float(res.etas.min()), float(res.etas.max())))
    return ResultTable(
        ["trial", "symmetry_residual", "orthonormality_residual", "min_eta", "max_eta"],
        rows,
    )


def _random_spd(rng, dim: int, lo: float, hi: float) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q @ np.diag(rng.uniform(lo, hi, size=dim)) @ q.T


def _run_functional_eigencheck(p: dict) -> ResultTable:
    rng = np.random.default_rng(p["seed"])
    m = p["modes"]
    a = _random_spd(rng, m, 0.5, 2.0)
    x = _random_spd(rng, m, 0.5, 2.0)
    y = _random_spd(rng, m, 0.1, 1.0)
    report = field_mod.functional_derivative_eigencheck(a, x, y)
    rows = [
        ("-".join(str(i) for i in e.indices) or "const", len(e.indices),
         e.eta_product, e.residual)
        for e in report.entries
    ]
    return ResultTable(["direction", "order", "eta_product", "residual"], rows,
                       {"max_residual": report.max_residual})


def _run_quantum_particle(p: dict) -> ResultTable:
    u, v = p["u"], p["v"]
    sigma_x, sigma_p = p["sigma_x"], p["sigma_p"]
    closed = gaussian.particle_mode_relevance(u, v, sigma_x, sigma_p)
    spec = gaussian.QuadraticHamiltonianSpec.particle(u, v)
    quadrature = gaussian.linear_observable_relevance(spec, [sigma_x, sigma_p])
    oracle = fock.position_relevance_fock(
        u, v, sigma_x, sigma_p, dim=p["fock_levels"],
        grid_points=p["grid_points"], span=p["span"],
    )
    candidates = {"h_formula": closed.eta_x, "printed_formula": closed.eta_x_printed}
    closest = min(candidates, key=lambda k: abs(candidates[k] - oracle.eta))
    gap = abs(candidates[closest] - oracle.eta)
    rows = [
        ("eta_x", closed.eta_x, closed.eta_x_printed, float(quadrature[0]),
         oracle.eta, closest, gap),
        ("eta_p", closed.eta_p, closed.eta_p_printed, float(quadrature[1]),
         float("nan"), "", float("nan")),
    ]
    return ResultTable(
        ["quantity", "h_formula", "printed_formula", "linear_quadrature",
         "fock_oracle", "closest_form", "closest_gap"],
        rows,
        {"fock_levels": oracle.dim, "grid_points": oracle.grid_points,
         "regularization": oracle.mix},
    )


def _run_quantum_field(p: dict) -> ResultTable:
    lattice = field_mod.LatticeSpec(p["d"], p["n_per_side"], p["spacing"])
    seen = set()
    rows = []
    for k in lattice.modes():
        kn = float(np.linalg.norm(k))
        if kn in seen:
            continue
        seen.add(kn)
        if kn == 0.0 and p["mass"] == 0.0:
            continue
        res = gaussian.field_mode_relevance(k, p["mass"], p["beta"], p["y_phi"],
                                            p["y_pi"], p["sigma"])
        omega_k = float(np.sqrt(kn**2 + p["mass"] ** 2))
        rows.append((kn, omega_k, res.eta_phi, res.eta_pi,
                     res.eta_phi_large_t, res.eta_pi_large_t))
    return ResultTable(
        ["k_norm", "omega", "eta_phi", "eta_pi", "eta_phi_large_t", "eta_pi_large_t"],
        rows,
    )


def _random_state(rng, dim: int, floor_mix: float = 0.5) -> DensityMatrix:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    w = g @ g.conj().T
    w /= np.trace(w).real
    mixed = (1.0 - floor_mix) * w + floor_mix * np.eye(dim) / dim
    return DensityMatrix(mixed)


def _random_feature(rng, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (g + g.conj().T)
    return h - np.trace(h) * np.eye(dim) / dim


def _random_channel(rng, dim: int, n_kraus: int = 3) -> Channel:
    g = rng.standard_normal((dim * n_kraus, dim)) + 1j * rng.standard_normal((dim * n_kraus, dim))
    q, _ = np.linalg.qr(g)
    return Channel([q[i * dim:(i + 1) * dim, :] for i in range(n_kraus)])


def _run_metric_suite(p: dict) -> ResultTable:
    rng = np.random.default_rng(p["seed"])
    dims = [int(d) for d in p["dims"]]
    samples = p["samples"]
    mono_worst = 0.0
    rel_worst = 0.0
    inverse_worst = 0.0
    metric_gap_worst = 0.0
    c_values = []
    eps = 1e-2
    for i in range(samples):
        dim = dims[i % len(dims)]
        rho = _random_state(rng, dim)
        sigma = _random_state(rng, dim)
        chan = _random_channel(rng, dim)
        x = _random_feature(rng, dim)
        # monotonicity of the distinguishability distance
        d_in = relative_entropy(rho, sigma)
        d_out = relative_entropy(channel_output(chan, rho), channel_output(chan, sigma))
        mono_worst = max(mono_worst, d_out - d_in)
        # relevance stays within the unit interval
        eta = relevance(chan, rho, x)
        rel_worst = max(rel_worst, eta - 1.0, -eta)
        # inverse pair
        back = omega(rho, omega_inv(rho, x))
        inverse_worst = max(inverse_worst, float(np.max(np.abs(back - x))))
        # operator-monotone route reproduces the BKM value
        direct = bkm_inner(rho, x, x)
        via_kernel = monotone_metric(bkm_theta, rho, x, x)
        metric_gap_worst = max(metric_gap_worst, abs(direct - via_kernel))
        # second-order expansion constant (symmetrized quotient)
        norm = direct
        scale = eps / max(1.0, float(np.max(np.abs(x))))
        plus = DensityMatrix(rho.matrix + scale * x)
        minus = DensityMatrix(rho.matrix - scale * x)
        d2 = relative_entropy(plus, rho) + relative_entropy(minus, rho)
        c_values.append(d2 / (2.0 * scale**2 * norm))
    c_arr = np.asarray(c_values)
    c_mean = float(c_arr.mean())
    c_spread = float(np.max(np.abs(c_arr - c_mean)) / c_mean)
    closer = 0.5 if abs(c_mean - 0.5) < abs(c_mean - 1.0) else 1.0
    rows = [
        ("monotonicity_worst_gap", mono_worst),
        ("relevance_worst_excess", rel_worst),
        ("inverse_pair_residual", inverse_worst),
        ("bkm_vs_monotone_gap", metric_gap_worst),
        ("c_mean", c_mean),
        ("c_spread_relative", c_spread),
        ("c_closer_candidate", closer),
    ]
    return ResultTable(["check", "value"], rows, {"samples": samples, "dims": dims})


def _run_cutoff_equivalence(p: dict) -> ResultTable:
    lattice = field_mod.LatticeSpec(p["d"], p["n_per_side"], p["spacing"])
    sigma = p["sigma"] if p["sigma"] > 0 else 4.0 * p["eps_cut"]
    report = gaussian.cutoff_equivalence(lattice, p["mass"], p["beta"], sigma,
                                         p["eps_cut"], p["relevant_order"])
    rows = []
    for kn, omega_k, in_sigma, in_eps, phi_var, pi_var in report.rows:
        status = "common" if (in_sigma and in_eps) else ("flagged" if in_eps else "absent")
        rows.append((kn, omega_k, in_sigma, in_eps, phi_var, pi_var, status))
    return ResultTable(
        ["k_norm", "omega", "in_sigma_state", "in_eps_state", "phi_var", "pi_var", "status"],
        rows,
        {"n_common": len(report.common_modes), "n_flagged": len(report.differing_modes),
         "sigma": sigma, "eps_cut": p["eps_cut"]},
    )


# --- registry ----------------------------------------------------------------


def _grid_params() -> dict:
    return {
        "grid_points": ParamSpec("int", 2001, help="grid resolution"),
        "grid_halfwidth": ParamSpec("float", 10.0, help="half width in units of tau"),
    }


REGISTRY: dict[str, ExperimentSpec] = {}


def _register(name, description, params, runner):
    REGISTRY[name] = ExperimentSpec(name, description, params, runner)


_register(
    "particle-spectrum",
    "Relevance spectrum of the Gaussian-convolution particle model: closed "
    "form vs the discretized symmetrized-kernel eigensolve.",
    {
        "tau": ParamSpec("float", 1.0, help="prior width"),
        "sigma": ParamSpec("float", 1.0, help="noise width"),
        "n_max": ParamSpec("int", 6, help="number of spectrum rows (degrees 0..n_max-1)"),
        **_grid_params(),
    },
    _run_particle_spectrum,
)

_register(
    "genfun-covariance",
    "Hermite generating function pushed through the noise adjoints: should "
    "rescale its parameter by 1/alpha.",
    {
        "tau": ParamSpec("float", 1.0),
        "sigma": ParamSpec("float", 1.0),
        "t_values": ParamSpec("floats", [0.25, 0.5, 1.0]),
        **_grid_params(),
    },
    _run_genfun_covariance,
)

_register(
    "ptrace-relevance",
    "Eigenrelevance spectrum of the partial-trace channel at the two-qubit "
    "maximally mixed state, clustered into (eigenvalue, multiplicity).",
    {},
    _run_ptrace_relevance,
)

_register(
    "stat-flow",
    "Coarse-graining flow: Gaussian width matching the quartic model's "
    "second moment, with quadrature residuals.",
    {
        "tau": ParamSpec("float", 1.0),
        "lam_values": ParamSpec("floats", [1e-2, 1e-3]),
    },
    _run_stat_flow,
)

_register(
    "qft-flow",
    "Regulator flow (tau(eps), lam(eps)) with expectation drifts of the "
    "degree-2 and degree-4 observables.",
    {
        "tau_phys": ParamSpec("float", 1.0),
        "lam_phys": ParamSpec("float", 1e-3),
        "eps_values": ParamSpec("floats", [0.0, 5e-4, 1e-3]),
    },
    _run_qft_flow,
)

_FIELD_PARAMS = {
    "d": ParamSpec("int", 1, help="spatial dimension"),
    "n_per_side": ParamSpec("int", 64),
    "spacing": ParamSpec("float", 1.0),
    "beta": ParamSpec("float", 1.0),
    "mass": ParamSpec("float", 1.0),
    "h": ParamSpec("float", 1.0, help="field-value precision"),
    "sigma": ParamSpec("float", 0.5, help="distance precision"),
}

_register(
    "field-mode-relevance",
    "Per-mode relevance of the lattice classical field under smearing and "
    "field-value noise.",
    {**_FIELD_PARAMS, "degree": ParamSpec("int", 1)},
    _run_field_mode_relevance,
)

_register(
    "field-quadratic-relevance",
    "Relevance of the integrated squared field (trace part removed), with "
    "numerator/denominator growth across lattice sizes.",
    {**_FIELD_PARAMS, "n_values": ParamSpec("floats", [16, 32, 64])},
    _run_field_quadratic,
)

_register(
    "h-operator-check",
    "Random dense positive triples (A, X, Y): symmetry A H = H^T A and "
    "A-orthonormality of the eigenbasis.",
    {
        "dim": ParamSpec("int", 4),
        "count": ParamSpec("int", 20),
        "seed": ParamSpec("int", 2025, help="rng seed"),
    },
    _run_h_operator_check,
)

_register(
    "functional-eigencheck",
    "Exact polynomial algebra: noise pullback scales generating-functional "
    "derivative tensors by products of H eigenvalues.",
    {
        "modes": ParamSpec("int", 3),
        "seed": ParamSpec("int", 7),
    },
    _run_functional_eigencheck,
)

_register(
    "quantum-particle-relevance",
    "Single quantum mode: both closed-form position/momentum relevance "
    "candidates, the linear-sector quadrature value, and the number-basis "
    "oracle that adjudicates between them.",
    {
        "u": ParamSpec("float", 2.0),
        "v": ParamSpec("float", 1.0),
        "sigma_x": ParamSpec("float", 1.0),
        "sigma_p": ParamSpec("float", 1.0),
        "fock_levels": ParamSpec("int", 60),
        "grid_points": ParamSpec("int", 21),
        "span": ParamSpec("float", 5.0),
    },
    _run_quantum_particle,
)

_register(
    "quantum-field-relevance",
    "Per-mode relevance of the thermal quantum scalar field and its "
    "large-temperature approximants.",
    {
        "d": ParamSpec("int", 1),
        "n_per_side": ParamSpec("int", 64),
        "spacing": ParamSpec("float", 1.0),
        "beta": ParamSpec("float", 1.0),
        "mass": ParamSpec("float", 1.0),
        "y_phi": ParamSpec("float", 1.0),
        "y_pi": ParamSpec("float", 1.0),
        "sigma": ParamSpec("float", 0.5),
    },
    _run_quantum_field,
)

_register(
    "metric-suite",
    "Random-instance metric properties: monotonicity, relevance bounds, "
    "inverse pair, kernel-route agreement, and the second-order expansion "
    "constant of the distinguishability distance.",
    {
        "samples": ParamSpec("int", 100),
        "dims": ParamSpec("floats", [2, 3, 4]),
        "seed": ParamSpec("int", 11),
    },
    _run_metric_suite,
)

_register(
    "cutoff-equivalence",
    "Free-field thermal states under two momentum cutoffs: common modes "
    "agree identically, the finer-cutoff extras are flagged.",
    {
        "d": ParamSpec("int", 1),
        "n_per_side": ParamSpec("int", 64),
        "spacing": ParamSpec("float", 1.0),
        "mass": ParamSpec("float", 1.0),
        "beta": ParamSpec("float", 1.0),
        "eps_cut": ParamSpec("float", 0.5),
        "sigma": ParamSpec("float", 0.0, help="defaults to 4 * eps_cut when 0"),
        "relevant_order": ParamSpec("int", 2),
    },
    _run_cutoff_equivalence,
)


def run_experiment(name: str, raw_params: dict) -> ResultTable:
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; see 'igflow list'")
    spec = REGISTRY[name]
    start = time.perf_counter()
    table = spec.run(raw_params)
    elapsed = time.perf_counter() - start
    table.metadata = {
        "experiment": name,
        "parameters": {k: ResultTable._json_cell(v) if not isinstance(v, list) else v
                       for k, v in coerce_params(spec.params, raw_params).items()},
        "version": __version__,
        "wall_time_s": elapsed,
        **table.metadata,
    }
    return table


def catalog() -> list[dict]:
    out = []
    for name in sorted(REGISTRY):
        spec = REGISTRY[name]
        out.append({
            "name": name,
            "description": spec.description,
            "parameters": {
                pname: {
                    "kind": ps.kind,
                    "default": ps.default,
                    "required": ps.required,
                    "help": ps.help,
                }
                for pname, ps in spec.params.items()
            },
        })
    return out
