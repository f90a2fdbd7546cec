import numpy as np
import pytest

from igflow.infogeom import DensityMatrix
from igflow.channels import Channel


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_hermitian(rng, dim, scale=1.0):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (g + g.conj().T)


def random_traceless(rng, dim, scale=1.0):
    h = random_hermitian(rng, dim, scale)
    return h - np.trace(h) * np.eye(dim) / dim


def random_state(rng, dim, mix=0.5):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    w = g @ g.conj().T
    w /= np.trace(w).real
    return DensityMatrix((1.0 - mix) * w + mix * np.eye(dim) / dim)


def mild_state(rng, dim, spread=0.015):
    """State close to maximally mixed; keeps midpoint-quadrature oracles tight."""
    h = random_traceless(rng, dim)
    h *= spread / max(1e-12, float(np.max(np.abs(h))))
    return DensityMatrix(np.eye(dim) / dim + h)


def random_channel(rng, dim, n_kraus=3):
    g = rng.standard_normal((dim * n_kraus, dim)) + 1j * rng.standard_normal((dim * n_kraus, dim))
    q, _ = np.linalg.qr(g)
    return Channel([q[i * dim:(i + 1) * dim, :] for i in range(n_kraus)])


def random_spd(rng, dim, lo, hi):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q @ np.diag(rng.uniform(lo, hi, size=dim)) @ q.T
