import numpy as np
import pytest

from nls_transport import WeightFamily, WeightKind


@pytest.fixture
def fam_eq():
    return WeightFamily(WeightKind.EQUIVALENT_NORM, 2.0)


@pytest.fixture
def fam_jb():
    return WeightFamily(WeightKind.JAPANESE_BRACKET, 2.0)


def random_coeffs(rng, m_ambient, scale=0.4):
    dim = 2 * m_ambient + 1
    return scale * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def mu_like_coeffs(rng, m_ambient, s=2.0, scale=1.0):
    """Sample-shaped data: per-mode standard complex Gaussians damped by
    the bracket weight, the typical roughness of the Gaussian ensemble."""
    ks = np.arange(-m_ambient, m_ambient + 1)
    g = (rng.standard_normal(ks.size) + 1j * rng.standard_normal(ks.size))
    return scale * np.sqrt(0.5) * g / (1.0 + ks**2.0) ** (s / 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
