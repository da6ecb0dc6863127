"""Torus functions as finite Fourier series, norms, invariants, and the
dealiased quintic nonlinearity.

Conventions: the torus is [0, 2pi) with Lebesgue measure dx, functions are
u(x) = sum_k u_k e^{ikx} with k = -M..M, and the Fourier pairing is
u_k = (1/2pi) int u e^{-ikx} dx.  All physical-space products are evaluated
on grids large enough that no aliased mode can reach the retained band, so
spectral results agree with exact convolutions to roundoff.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridTooSmall

TWO_PI = 2.0 * np.pi


def wavenumbers(m_ambient: int) -> np.ndarray:
    return np.arange(-m_ambient, m_ambient + 1)


@dataclass(frozen=True)
class FourierState:
    """Complex Fourier coefficients of a torus function, indexed k = -M..M.

    Immutable after construction; the coefficient array is copied and
    marked read-only so states can be shared freely.
    """

    m_ambient: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.m_ambient < 0:
            raise ValueError("m_ambient must be >= 0")
        c = np.asarray(self.coeffs, dtype=np.complex128).copy()
        if c.shape != (2 * self.m_ambient + 1,):
            raise ValueError(
                f"need {2 * self.m_ambient + 1} coefficients, got {c.shape}"
            )
        if not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def wavenumbers(self) -> np.ndarray:
        return wavenumbers(self.m_ambient)

    def coeff(self, k: int) -> complex:
        if abs(k) > self.m_ambient:
            return 0.0 + 0.0j
        return complex(self.coeffs[k + self.m_ambient])

    @classmethod
    def from_modes(cls, m_ambient: int, modes: dict[int, complex]) -> "FourierState":
        c = np.zeros(2 * m_ambient + 1, dtype=np.complex128)
        for k, v in modes.items():
            if abs(k) > m_ambient:
                raise ValueError(f"mode {k} outside ambient band {m_ambient}")
            c[k + m_ambient] = v
        return cls(m_ambient, c)

    @classmethod
    def zero(cls, m_ambient: int) -> "FourierState":
        return cls(m_ambient, np.zeros(2 * m_ambient + 1, dtype=np.complex128))


class WeightKind(Enum):
    JAPANESE_BRACKET = "japanese_bracket"   # m(k) = (1+k^2)^s
    EQUIVALENT_NORM = "equivalent_norm"     # m(k) = 1 + |k|^(2s)


@dataclass(frozen=True)
class WeightFamily:
    """Fourier multiplier behind both the Sobolev form and the Gaussian
    covariance: Japanese bracket <k>^(2s) or the equivalent 1 + |k|^(2s)."""

    kind: WeightKind
    s: float

    def __post_init__(self):
        if not self.s > 1.5:
            raise ValueError("weight family requires s > 3/2")

    def multiplier(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.float64)
        if self.kind is WeightKind.JAPANESE_BRACKET:
            return (1.0 + ks * ks) ** self.s
        return 1.0 + np.abs(ks) ** (2.0 * self.s)


def bracket_multiplier(ks, sigma: float) -> np.ndarray:
    """Generic <k>^(2 sigma) multiplier for auxiliary sigma-norms."""
    ks = np.asarray(ks, dtype=np.float64)
    return (1.0 + ks * ks) ** sigma


@dataclass(frozen=True)
class GridSpec:
    """Collocation grid size for physical-space products."""

    n_points: int

    def require_quintic(self, n_cut: int) -> None:
        # quintic product of a Pi_N-truncated state has bandwidth 5N; an
        # alias k -> k - G lands in |k| <= N only if G <= 6N
        if self.n_points < 6 * n_cut + 2:
            raise GridTooSmall(
                f"grid {self.n_points} < {6 * n_cut + 2} needed for quintic "
                f"dealiasing at n_cut={n_cut}"
            )

    def require_sextic(self, m_ambient: int) -> None:
        if self.n_points < 6 * m_ambient + 2:
            raise GridTooSmall(
                f"grid {self.n_points} < {6 * m_ambient + 2} needed to "
                f"integrate |u|^6 exactly at m_ambient={m_ambient}"
            )


def default_grid(n_cut: int) -> GridSpec:
    g = 16
    while g < 8 * n_cut:
        g *= 2
    return GridSpec(g)


# ---------------------------------------------------------------------------
# batched kernels: coefficients as (batch, 2M+1) arrays

def grid_values(coeffs: np.ndarray, m_ambient: int, n_points: int) -> np.ndarray:
    """Evaluate u(x_j) on the equispaced grid x_j = 2pi j / G, batched."""
    ks = wavenumbers(m_ambient)
    if n_points < 2 * m_ambient + 1:
        raise GridTooSmall(f"grid {n_points} cannot hold band {m_ambient}")
    spec = np.zeros(coeffs.shape[:-1] + (n_points,), dtype=np.complex128)
    spec[..., ks % n_points] = coeffs
    return np.fft.ifft(spec, axis=-1) * n_points


def grid_coefficients(values: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Forward transform of grid values, restricted to wavenumbers `keep`."""
    n_points = values.shape[-1]
    spec = np.fft.fft(values, axis=-1) / n_points
    return spec[..., keep % n_points]


def quintic_batch(coeffs: np.ndarray, m_ambient: int, n_cut: int,
                  n_points: int) -> np.ndarray:
    """Pi_N(|Pi_N u|^4 Pi_N u) for a (batch, 2M+1) coefficient block.

    Only the |k| <= n_cut band enters, so the grid needs to dealias the
    quintic band, not to hold the full ambient spectrum.
    """
    ks = wavenumbers(m_ambient)
    low = np.abs(ks) <= n_cut
    if n_points < 6 * n_cut + 2:
        raise GridTooSmall(f"grid {n_points} < {6 * n_cut + 2} for quintic")
    spec = np.zeros(coeffs.shape[:-1] + (n_points,), dtype=np.complex128)
    spec[..., ks[low] % n_points] = coeffs[..., low]
    vals = np.fft.ifft(spec, axis=-1) * n_points
    nl = np.abs(vals) ** 4 * vals
    out = np.zeros_like(coeffs)
    out[..., low] = np.fft.fft(nl, axis=-1)[..., ks[low] % n_points] / n_points
    return out


def conserved_c_batch(coeffs: np.ndarray, m_ambient: int,
                      n_points: int) -> np.ndarray:
    ks = wavenumbers(m_ambient)
    mass_v = TWO_PI * np.sum(np.abs(coeffs) ** 2, axis=-1)
    grad_v = TWO_PI * np.sum(ks**2 * np.abs(coeffs) ** 2, axis=-1)
    vals = grid_values(coeffs, m_ambient, n_points)
    l6 = TWO_PI * np.mean(np.abs(vals) ** 6, axis=-1)
    return 0.5 * mass_v + 0.5 * grad_v + l6 / 6.0


def weighted_norm_sq_batch(coeffs: np.ndarray, mult: np.ndarray,
                           keep=None) -> np.ndarray:
    if keep is None:
        return np.sum(mult * np.abs(coeffs) ** 2, axis=-1)
    return np.sum(mult[keep] * np.abs(coeffs[..., keep]) ** 2, axis=-1)


# ---------------------------------------------------------------------------
# single-state operations

def project_low(u: FourierState, n_cut: int) -> FourierState:
    """Dirichlet projector: keep |k| <= n_cut, zero the rest."""
    if n_cut < 0:
        raise ValueError("n_cut must be >= 0")
    ks = u.wavenumbers()
    c = np.where(np.abs(ks) <= n_cut, u.coeffs, 0.0)
    return FourierState(u.m_ambient, c)


def sobolev_norm_sq(u: FourierState, family: WeightFamily) -> float:
    """sum_k m(k) |u_k|^2 for the family's multiplier."""
    return float(np.sum(family.multiplier(u.wavenumbers()) * np.abs(u.coeffs) ** 2))


def sobolev_norm_sq_sigma(u: FourierState, sigma: float) -> float:
    """sum_k <k>^(2 sigma) |u_k|^2, the generic sigma-norm."""
    return float(np.sum(bracket_multiplier(u.wavenumbers(), sigma)
                        * np.abs(u.coeffs) ** 2))


def mass(u: FourierState) -> float:
    """L^2 norm squared, 2pi sum |u_k|^2."""
    return float(TWO_PI * np.sum(np.abs(u.coeffs) ** 2))


def hamiltonian(u: FourierState, grid: GridSpec) -> float:
    """(1/2) int |u_x|^2 + (1/6) int |u|^6, by exact spectral quadrature."""
    grid.require_sextic(u.m_ambient)
    ks = u.wavenumbers()
    grad = TWO_PI * np.sum(ks**2 * np.abs(u.coeffs) ** 2)
    vals = grid_values(u.coeffs[None, :], u.m_ambient, grid.n_points)[0]
    l6 = TWO_PI * np.mean(np.abs(vals) ** 6)
    return float(0.5 * grad + l6 / 6.0)


def conserved_c(u: FourierState, grid: GridSpec) -> float:
    """(1/2) ||u||_{L^2}^2 + H(u); conserved by the truncated flow."""
    return 0.5 * mass(u) + hamiltonian(u, grid)


def quintic_nonlinearity(u: FourierState, n_cut: int, grid: GridSpec) -> FourierState:
    """Pi_N(|Pi_N u|^4 Pi_N u) on a dealiased grid; exact convolution."""
    grid.require_quintic(n_cut)
    out = quintic_batch(u.coeffs[None, :], u.m_ambient, n_cut, grid.n_points)[0]
    return FourierState(u.m_ambient, out)


def wiener_norm(u: FourierState) -> float:
    """sum_k |u_k|, the absolutely-summable-coefficients norm."""
    return float(np.sum(np.abs(u.coeffs)))


# ---------------------------------------------------------------------------
# snapshot files

def state_to_dict(u: FourierState) -> dict:
    return {
        "m_ambient": u.m_ambient,
        "coeffs": [[float(c.real), float(c.imag)] for c in u.coeffs],
    }


def state_from_dict(d: dict) -> FourierState:
    c = np.array([complex(re, im) for re, im in d["coeffs"]], dtype=np.complex128)
    return FourierState(int(d["m_ambient"]), c)


def save_state(u: FourierState, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(u), fh)


def load_state(path) -> FourierState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
