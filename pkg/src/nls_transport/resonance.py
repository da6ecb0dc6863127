"""Resonance function, symmetrized multiplier, constrained 6-tuple
enumeration, and executable forms of the deterministic counting lemmas.

A 6-tuple (k1..k6) is *constrained* when its alternating sum
k1 - k2 + k3 - k4 + k5 - k6 vanishes; the resonance function
Omega = sum_j (-1)^(j-1) k_j^2 splits the constrained set into the
resonant (Omega = 0) and non-resonant parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterator, NamedTuple

import numpy as np

from .errors import GridTooSmall
from .spectral import WeightFamily

ALT_SIGNS = np.array([1, -1, 1, -1, 1, -1], dtype=np.int64)


class Tuple6(NamedTuple):
    k1: int
    k2: int
    k3: int
    k4: int
    k5: int
    k6: int


class TupleFilter(Enum):
    ALL = "all"
    NON_RESONANT = "non_resonant"
    RESONANT = "resonant"


def omega(t) -> int:
    """Resonance function: alternating sum of squares, exact integer."""
    k = [int(x) for x in t]
    return (k[0] * k[0] - k[1] * k[1] + k[2] * k[2] - k[3] * k[3]
            + k[4] * k[4] - k[5] * k[5])


def psi(t, family: WeightFamily) -> float:
    """Symmetrized multiplier sum_j (-1)^(j-1) m(k_j).

    For the equivalent-norm family the six alternating constants cancel and
    this is sum_j (-1)^(j-1) |k_j|^(2s); the bracket family gives the
    analogous alternating bracket weight.
    """
    m = family.multiplier(np.asarray(t, dtype=np.int64))
    return float(np.sum(ALT_SIGNS * m))


def enumerate_constrained(n_cut: int, filt: TupleFilter = TupleFilter.ALL,
                          k1_range=None) -> Iterator[Tuple6]:
    """Yield constrained tuples with all |k_j| <= n_cut, lexicographic in
    (k1..k5); k6 is solved from the constraint and range-checked.

    `k1_range` restricts the leading index for deterministic work splitting;
    sub-streams over a partition of -n_cut..n_cut are disjoint and their
    concatenation in order reproduces the full stream.
    """
    if n_cut < 0:
        raise ValueError("n_cut must be >= 0")
    lo, hi = (-n_cut, n_cut) if k1_range is None else k1_range
    rng = range(-n_cut, n_cut + 1)
    for k1 in range(lo, hi + 1):
        for k2 in rng:
            for k3 in rng:
                for k4 in rng:
                    for k5 in rng:
                        k6 = k1 - k2 + k3 - k4 + k5
                        if abs(k6) > n_cut:
                            continue
                        if filt is not TupleFilter.ALL:
                            om = (k1 * k1 - k2 * k2 + k3 * k3 - k4 * k4
                                  + k5 * k5 - k6 * k6)
                            if filt is TupleFilter.NON_RESONANT and om == 0:
                                continue
                            if filt is TupleFilter.RESONANT and om != 0:
                                continue
                        yield Tuple6(k1, k2, k3, k4, k5, k6)


@lru_cache(maxsize=8)
def tuple_table(n_cut: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized constrained-tuple table: (T, 6) wavenumbers and (T,) Omega.

    Same tuples and order as enumerate_constrained(n_cut, ALL).  Cached for
    small n_cut; larger sweeps should chunk via tuple_table_k1.
    """
    return tuple_table_k1(n_cut, -n_cut, n_cut)


def tuple_table_k1(n_cut: int, k1_lo: int, k1_hi: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.arange(-n_cut, n_cut + 1, dtype=np.int64)
    k1, k2, k3, k4, k5 = np.meshgrid(
        np.arange(k1_lo, k1_hi + 1, dtype=np.int64), r, r, r, r, indexing="ij"
    )
    k6 = k1 - k2 + k3 - k4 + k5
    ok = np.abs(k6) <= n_cut
    cols = np.stack([k[ok] for k in (k1, k2, k3, k4, k5, k6)], axis=1)
    om = (cols[:, 0] ** 2 - cols[:, 1] ** 2 + cols[:, 2] ** 2
          - cols[:, 3] ** 2 + cols[:, 4] ** 2 - cols[:, 5] ** 2)
    return cols, om


@dataclass(frozen=True)
class OrderedMagnitudes:
    perm: tuple    # positions (1-based) sorted by |k| descending
    mags: tuple    # the sorted magnitudes


def order_desc(t) -> OrderedMagnitudes:
    """Stable magnitude ordering |k_(1)| >= ... >= |k_(6)|, ties by position."""
    mags = [abs(int(x)) for x in t]
    order = sorted(range(len(mags)), key=lambda i: (-mags[i], i))
    return OrderedMagnitudes(
        perm=tuple(i + 1 for i in order),
        mags=tuple(mags[i] for i in order),
    )


# ---------------------------------------------------------------------------
# counting lemma

def block_values(n_block: int) -> np.ndarray:
    """Wavenumbers of a dyadic block: |k| <= 1 for block 1, else N <= |k| < 2N."""
    if n_block == 1:
        return np.arange(-1, 2, dtype=np.int64)
    if n_block < 1 or (n_block & (n_block - 1)) != 0:
        raise ValueError(f"{n_block} is not a dyadic block size")
    mags = np.arange(n_block, 2 * n_block, dtype=np.int64)
    return np.concatenate([-mags[::-1], mags])


class CountingResult(NamedTuple):
    count: int
    bound: int
    ratio: float


def counting_check(blocks, signs, kappa: int) -> CountingResult:
    """Exact number of solutions of sum_j eps_j k_j = kappa with k_j in its
    dyadic block, against the product bound N_(2)...N_(m).

    The count is computed by exact integer convolution of the block
    indicator vectors, which enumerates the same solution set as nested
    loops.
    """
    if not 2 <= len(blocks) <= 6 or len(signs) != len(blocks):
        raise ValueError("need 2..6 blocks with matching signs")
    hist = None
    offset = 0
    for n_block, eps in zip(blocks, signs):
        vals = int(eps) * block_values(n_block)
        lo = int(vals.min())
        vec = np.zeros(int(vals.max()) - lo + 1, dtype=np.int64)
        vec[vals - lo] = 1
        if hist is None:
            hist, offset = vec, lo
        else:
            hist = np.convolve(hist, vec)
            offset += lo
    idx = int(kappa) - offset
    count = int(hist[idx]) if 0 <= idx < len(hist) else 0
    ordered = sorted(int(b) for b in blocks)[::-1]
    bound = 1
    for b in ordered[1:]:
        bound *= b
    return CountingResult(count, bound, count / bound)


# ---------------------------------------------------------------------------
# psi estimate

def psi_bound_ratio(n_cut: int, s: float) -> float:
    """max over constrained tuples (|k_j| <= n_cut, not all zero) of
    |psi_2s| / (|k_(1)|^(2s-2) (|Omega| + |k_(3)|^2)).

    Tuples with vanishing denominator are checked to have psi = 0 and
    skipped; the returned maximum is the empirical lemma constant.
    """
    if n_cut < 1:
        raise ValueError("n_cut must be >= 1")
    best = 0.0
    for k1_lo in range(-n_cut, n_cut + 1):
        cols, om = tuple_table_k1(n_cut, k1_lo, k1_lo)
        mags = np.sort(np.abs(cols), axis=1)[:, ::-1]
        k1m = mags[:, 0].astype(np.float64)
        k3m = mags[:, 2].astype(np.float64)
        psi_v = np.sum(ALT_SIGNS * np.abs(cols).astype(np.float64) ** (2 * s), axis=1)
        denom = np.where(k1m > 0, k1m ** (2 * s - 2), 0.0) * (np.abs(om) + k3m**2)
        bad = denom == 0
        if np.any(np.abs(psi_v[bad]) > 0):
            raise AssertionError("tuple with zero denominator but psi != 0")
        good = ~bad
        if np.any(good):
            best = max(best, float(np.max(np.abs(psi_v[good]) / denom[good])))
    return best


# ---------------------------------------------------------------------------
# sum-as-integral identity

def strichartz_sum(n_cut: int, kappa: int, mods, t_points: int | None = None,
                   n_space: int | None = None) -> tuple[float, float]:
    """The constrained moduli sum at resonance level kappa, two ways.

    (a) brute force over the tuple table;
    (b) the space-time quadrature (1/2pi)^2 iint F1 conj(F2) ... conj(F6)
        with F1 = e^{it dxx} e^{it kappa} F01, Fj = e^{it dxx} F0j, and
        F0j built from the moduli |f_j|.  Both grids are large enough that
        the trigonometric integrand is integrated exactly.
    """
    mods = [np.abs(np.asarray(f, dtype=np.float64)) for f in mods]
    if len(mods) != 6 or any(f.shape != (2 * n_cut + 1,) for f in mods):
        raise ValueError("need six arrays on wavenumbers -n_cut..n_cut")

    cols, om = tuple_table(n_cut)
    sel = om == kappa
    brute = 0.0
    if np.any(sel):
        idx = cols[sel] + n_cut
        prod = np.ones(idx.shape[0], dtype=np.float64)
        for j in range(6):
            prod *= mods[j][idx[:, j]]
        brute = float(np.sum(prod))

    # time frequencies are Omega - kappa with |Omega| <= 3 n^2
    t_needed = max(12 * n_cut * n_cut + 2, 3 * n_cut * n_cut + abs(kappa) + 1)
    if t_points is None:
        t_points = t_needed
    if n_space is None:
        n_space = 6 * n_cut + 2
    if n_space < 6 * n_cut + 2:
        raise GridTooSmall(f"space grid {n_space} < {6 * n_cut + 2}")
    if t_points < t_needed:
        raise GridTooSmall(f"time grid {t_points} < {t_needed}")

    ks = np.arange(-n_cut, n_cut + 1)
    ts = 2.0 * np.pi * np.arange(t_points) / t_points
    # phases[t, k] = e^{-i k^2 t}; F_j(t, x) = ifft of (|f_j|_k e^{-i k^2 t})
    phases = np.exp(-1j * np.outer(ts, ks.astype(np.float64) ** 2))
    vals = []
    for j, f in enumerate(mods):
        spec = np.zeros((t_points, n_space), dtype=np.complex128)
        coeff = phases * f
        if j == 0:
            coeff = coeff * np.exp(1j * kappa * ts)[:, None]
        spec[:, ks % n_space] = coeff
        vals.append(np.fft.ifft(spec, axis=1) * n_space)
    integrand = (vals[0] * np.conj(vals[1]) * vals[2] * np.conj(vals[3])
                 * vals[4] * np.conj(vals[5]))
    quad = float(np.mean(integrand).real)
    return brute, quad
