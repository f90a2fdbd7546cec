"""Quantum channels in operator-sum form and the eigenrelevance machinery.

A channel models information loss.  Its adjoint with respect to the BKM
metric pulls features at the output state back to the input state, and the
composition of channel and adjoint defines a self-adjoint positive operator
on the traceless Hermitian space whose spectrum orders features by how
distinguishable they remain after the loss.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh

from .infogeom import (
    DensityMatrix,
    DimensionMismatchError,
    Feature,
    Observable,
    as_matrix,
    bkm_inner,
    omega,
    omega_inv,
    relative_entropy,
    require_hermitian,
)

__all__ = [
    "TracePreservationError",
    "ZeroFeatureError",
    "Channel",
    "build_channel",
    "unitary_channel",
    "depolarizing_channel",
    "dephasing_channel",
    "partial_trace_channel",
    "kraus_channel",
    "apply_channel",
    "hs_adjoint",
    "channel_output",
    "bkm_adjoint",
    "relevance",
    "traceless_hermitian_basis",
    "RelevanceSpectrum",
    "eigenrelevance",
    "first_order_equivalent",
    "approx_equivalent",
]

TP_TOL = 1e-10


class TracePreservationError(ValueError):
    """The Kraus operators do not sum to the identity on the input space."""


class ZeroFeatureError(ValueError):
    """Relevance of the zero feature is undefined."""


class Channel:
    """Completely positive trace-preserving map in operator-sum form."""

    def __init__(self, kraus):
        ops = [np.asarray(k, dtype=complex) for k in kraus]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        out_dim, in_dim = ops[0].shape
        for k in ops:
            if k.shape != (out_dim, in_dim):
                raise ValueError("all Kraus operators must share one shape")
        acc = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(acc - np.eye(in_dim))) > TP_TOL:
            raise TracePreservationError(
                "Kraus operators violate trace preservation beyond 1e-10"
            )
        self.kraus = ops
        self.input_dim = in_dim
        self.output_dim = out_dim


def unitary_channel(u) -> Channel:
    u = np.asarray(u, dtype=complex)
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > TP_TOL:
        raise ValueError("matrix is not unitary")
    return Channel([u])


def depolarizing_channel(p: float, dim: int = 2) -> Channel:
    """E(rho) = (1 - p) rho + p Tr(rho) I/d, via clock-and-shift unitaries."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    eye = np.eye(dim, dtype=complex)
    shift = np.roll(eye, 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    kraus = [np.sqrt(1.0 - p) * eye]
    for a in range(dim):
        for b in range(dim):
            kraus.append(
                np.sqrt(p) / dim * np.linalg.matrix_power(shift, a)
                @ np.linalg.matrix_power(clock, b)
            )
    return Channel(kraus)


def dephasing_channel(basis) -> Channel:
    """Full dephasing: projectors onto the columns of a unitary basis matrix.

    An integer argument selects the computational basis in that dimension.
    """
    if isinstance(basis, (int, np.integer)):
        v = np.eye(int(basis), dtype=complex)
    else:
        v = np.asarray(basis, dtype=complex)
        if np.max(np.abs(v.conj().T @ v - np.eye(v.shape[0]))) > TP_TOL:
            raise ValueError("basis columns must be orthonormal")
    return Channel([np.outer(v[:, j], v[:, j].conj()) for j in range(v.shape[1])])


def partial_trace_channel(dims, traced: int = 1) -> Channel:
    """Partial trace over one factor of a bipartite space dims = (d_a, d_b)."""
    d_a, d_b = dims
    if traced not in (0, 1):
        raise ValueError("traced must be 0 or 1")
    kraus = []
    if traced == 1:
        for j in range(d_b):
            k = np.zeros((d_a, d_a * d_b), dtype=complex)
            for r in range(d_a):
                k[r, r * d_b + j] = 1.0
            kraus.append(k)
    else:
        for j in range(d_a):
            k = np.zeros((d_b, d_a * d_b), dtype=complex)
            for r in range(d_b):
                k[r, j * d_b + r] = 1.0
            kraus.append(k)
    return Channel(kraus)


def kraus_channel(ops) -> Channel:
    return Channel(ops)


_BUILDERS = {
    "unitary": lambda **kw: unitary_channel(kw["u"]),
    "depolarizing": lambda **kw: depolarizing_channel(kw["p"], kw.get("dim", 2)),
    "dephasing": lambda **kw: dephasing_channel(kw["basis"]),
    "partial_trace": lambda **kw: partial_trace_channel(kw["dims"], kw.get("traced", 1)),
    "kraus": lambda **kw: kraus_channel(kw["ops"]),
}


def build_channel(kind: str, **params) -> Channel:
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown channel kind {kind!r}") from None
    return builder(**params)


def apply_channel(channel: Channel, m) -> np.ndarray:
    """Operator-sum action sum_m K_m M K_m^*."""
    a = np.asarray(as_matrix(m), dtype=complex)
    if a.shape[0] != channel.input_dim:
        raise DimensionMismatchError(
            f"channel expects dimension {channel.input_dim}, got {a.shape[0]}"
        )
    out = np.zeros((channel.output_dim, channel.output_dim), dtype=complex)
    for k in channel.kraus:
        out += k @ a @ k.conj().T
    return out


def hs_adjoint(channel: Channel, a) -> np.ndarray:
    """Hilbert-Schmidt adjoint sum_m K_m^* A K_m, acting on observables."""
    m = np.asarray(as_matrix(a), dtype=complex)
    if m.shape[0] != channel.output_dim:
        raise DimensionMismatchError(
            f"adjoint expects dimension {channel.output_dim}, got {m.shape[0]}"
        )
    out = np.zeros((channel.input_dim, channel.input_dim), dtype=complex)
    for k in channel.kraus:
        out += k.conj().T @ m @ k
    return out


def channel_output(channel: Channel, rho: DensityMatrix,
                   floor: float | None = None) -> DensityMatrix:
    """Apply the channel to a state and validate the output.

    Outputs at or below the positivity floor are an error; callers wanting
    boundary channels must mix in some maximally mixed state themselves.
    """
    out = DensityMatrix(apply_channel(channel, rho), floor=rho.floor if floor is None else floor)
    return out.require_strictly_positive()


def bkm_adjoint(channel: Channel, rho: DensityMatrix, y) -> np.ndarray:
    """BKM adjoint of the channel at rho applied to a feature at the output.

    Satisfies <adjoint(Y), X>_rho = <Y, E(X)>_{E(rho)} for all features X.
    """
    sigma = channel_output(channel, rho)
    return omega(rho, hs_adjoint(channel, omega_inv(sigma, y)))


def relevance(channel: Channel, rho: DensityMatrix, x) -> float:
    """Relevance ratio <E(X), E(X)>_{E(rho)} / <X, X>_rho in [0, 1]."""
    mx = require_hermitian(x, what="feature")
    if np.max(np.abs(mx)) == 0.0:
        raise ZeroFeatureError("relevance of the zero feature is undefined")
    sigma = channel_output(channel, rho)
    ex = apply_channel(channel, mx)
    return bkm_inner(sigma, ex, ex) / bkm_inner(rho, mx, mx)


def traceless_hermitian_basis(dim: int) -> list[np.ndarray]:
    """Hilbert-Schmidt orthonormal basis of the traceless Hermitian space."""
    basis = []
    for i in range(dim):
        for j in range(i + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(sym)
            anti = np.zeros((dim, dim), dtype=complex)
            anti[i, j] = -1j / np.sqrt(2.0)
            anti[j, i] = 1j / np.sqrt(2.0)
            basis.append(anti)
    for level in range(1, dim):
        diag = np.zeros(dim)
        diag[:level] = 1.0
        diag[level] = -level
        basis.append(np.diag(diag / np.sqrt(level * (level + 1))).astype(complex))
    return basis


class RelevanceSpectrum:
    """Full eigenrelevance spectrum, sorted by descending eta.

    ``cutoff_index`` marks how many leading pairs count as relevant.  No
    default heuristic is applied: it starts at the full length and is set by
    ``with_top`` or ``with_threshold``.
    """

    def __init__(self, etas, features, observables, cutoff_index: int | None = None):
        self.etas = np.asarray(etas, dtype=float)
        self.features = list(features)
        self.observables = list(observables)
        self.cutoff_index = len(self.etas) if cutoff_index is None else int(cutoff_index)
        if np.any(self.etas < 0.0) or np.any(self.etas > 1.0 + 1e-9):
            raise ValueError("relevance eigenvalues must lie in [0, 1 + 1e-9]")

    def __len__(self) -> int:
        return len(self.etas)

    def with_top(self, n: int) -> "RelevanceSpectrum":
        return RelevanceSpectrum(self.etas, self.features, self.observables, cutoff_index=n)

    def with_threshold(self, eta_min: float) -> "RelevanceSpectrum":
        n = int(np.sum(self.etas >= eta_min))
        return RelevanceSpectrum(self.etas, self.features, self.observables, cutoff_index=n)

    @property
    def relevant_observables(self) -> list[Observable]:
        return self.observables[: self.cutoff_index]


def eigenrelevance(channel: Channel, rho: DensityMatrix) -> RelevanceSpectrum:
    """Solve the eigenrelevance problem over the traceless Hermitian space.

    The pulled-back form <E(X), E(Y)>_{E(rho)} is materialized against a
    fixed Hilbert-Schmidt basis and solved as a symmetric-definite
    generalized eigenproblem with the BKM Gram matrix, which guarantees a
    real spectrum and BKM-orthonormal eigenfeatures.  Eigenvectors inside a
    degenerate eta block come back in an arbitrary orthonormal basis.
    """
    rho.require_strictly_positive()
    sigma = channel_output(channel, rho)
    basis = traceless_hermitian_basis(rho.dim)
    images = [apply_channel(channel, b) for b in basis]
    n = len(basis)
    gram = np.empty((n, n))
    pulled = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = bkm_inner(rho, basis[i], basis[j])
            pulled[i, j] = pulled[j, i] = bkm_inner(sigma, images[i], images[j])
    try:
        w, vecs = eigh(pulled, gram)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defective numerics
        raise ArithmeticError(f"eigenrelevance solver failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    w = w[order]
    vecs = vecs[:, order]
    if np.any(w < -1e-9):
        raise ArithmeticError(f"eigenrelevance produced eta < -1e-9: {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    features = []
    observables = []
    for idx in range(n):
        x = sum(vecs[k, idx] * basis[k] for k in range(n))
        x = 0.5 * (x + x.conj().T)
        features.append(Feature(x))
        observables.append(Observable(omega_inv(rho, x)))
    return RelevanceSpectrum(w, features, observables)


def first_order_equivalent(rho1: DensityMatrix, rho2: DensityMatrix,
                           relevant, tol: float) -> bool:
    """True when every listed observable has matching expectations."""
    if rho1.dim != rho2.dim:
        raise DimensionMismatchError("states live on different dimensions")
    for a in relevant:
        m = as_matrix(a)
        gap = abs(np.trace(rho1.matrix @ m) - np.trace(rho2.matrix @ m))
        if gap > tol:
            return False
    return True


def approx_equivalent(channel: Channel, rho: DensityMatrix, sigma: DensityMatrix,
                      eps: float) -> bool:
    """True when the channel outputs are within eps in relative entropy."""
    out_rho = channel_output(channel, rho)
    out_sigma = channel_output(channel, sigma)
    return relative_entropy(out_rho, out_sigma) <= eps
