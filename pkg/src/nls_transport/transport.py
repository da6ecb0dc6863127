"""Transported-measure densities and the Monte Carlo studies that verify
them.

The sampled Gaussian ensemble has per-mode law exp(-m(k) |u_k|^2), so its
exponent quadratic form is GAUSS_FORM_FACTOR times the coefficient sum
S(u) = sum m(k) |u_k|^2 (the familiar "e^{-1/2 ||u||^2}" notation refers to
that doubled form: for complex Gaussians the Cameron-Martin norm is twice
the naive Fourier-side sum).  All density formulas below are exact for the
sampled ensemble:

  log G(t, u) = -(1/2) * GAUSS_FORM_FACTOR * [S(P_N Phi_N(-t) u) - S(P_N u)]
              = GAUSS_FORM_FACTOR * [R(Phi_N(-t)u) - R(u)
                                     - int_0^{-t} Q(Phi_N(tau) u) dtau]

with R, Q the normal-form quantities of `energies`.  At finite ambient
truncation these are theorems, not approximations, so the Monte Carlo
change-of-measure z-scores measure nothing but sampling noise and
integrator error.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .energies import (EnergyParams, q_derivative_batch, r_correction_batch)
from .errors import MissingCutoff, NlsTransportError
from .flow import FlowParams, evolve_batch, trajectory_batch
from .measures import (McReport, MeasureParams, SeededRng, SAMPLE_CHUNK,
                       cutoff_indicator_batch, mean_report, sample_batch)
from .parallel import run_chunked
from .spectral import (FourierState, GridSpec, WeightFamily, WeightKind,
                       bracket_multiplier, default_grid, wavenumbers)

GAUSS_FORM_FACTOR = 2.0

_Q_NODE_CHUNK = 128  # Simpson nodes per grouped-path call (memory bound)


@dataclass(frozen=True)
class DensityParams:
    t: float
    energy: EnergyParams
    flow: FlowParams
    quad_points: int = 501

    def __post_init__(self):
        if self.quad_points < 3 or self.quad_points % 2 == 0:
            raise ValueError("quad_points must be odd and >= 3")
        if self.energy.n_cut is not None and self.energy.n_cut != self.flow.n_cut:
            raise ValueError("flow and energy truncations must agree")


def _simpson_weights(n_nodes: int, h: float) -> np.ndarray:
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _norm_sq_low(coeffs: np.ndarray, m_ambient: int, n_cut: int,
                 energy: EnergyParams) -> np.ndarray:
    ks = wavenumbers(m_ambient)
    keep = np.abs(ks) <= n_cut
    mult = energy.family.multiplier(ks[keep])
    return np.sum(mult * np.abs(coeffs[..., keep]) ** 2, axis=-1)


def log_density_direct_batch(coeffs: np.ndarray, m_ambient: int,
                             d: DensityParams) -> np.ndarray:
    n_cut = d.energy.resolve_cut(m_ambient)
    bwd = evolve_batch(coeffs, m_ambient, -d.t, d.flow)
    ds = (_norm_sq_low(bwd, m_ambient, n_cut, d.energy)
          - _norm_sq_low(coeffs, m_ambient, n_cut, d.energy))
    return -0.5 * GAUSS_FORM_FACTOR * ds


def density_direct(u: FourierState, d: DensityParams,
                   grid: GridSpec | None = None) -> float:
    """log of the transported-measure density, from the defining quadratic
    form difference along the backward flow."""
    return float(log_density_direct_batch(u.coeffs[None, :], u.m_ambient, d)[0])


def _normal_form_pieces(coeffs: np.ndarray, m_ambient: int, d: DensityParams):
    """(delta_R, q_integral) for a (batch, dim) block: R at the endpoints of
    the backward trajectory and the Simpson integral of Q over [0, -t]."""
    if d.t == 0.0:
        z = np.zeros(coeffs.shape[:-1])
        return z, z.copy()
    times, snaps = trajectory_batch(coeffs, m_ambient, -d.t, d.flow,
                                    d.quad_points)
    r0 = r_correction_batch(coeffs, m_ambient, d.energy)
    r1 = r_correction_batch(snaps[..., -1, :], m_ambient, d.energy)
    lead = snaps.shape[:-2]
    flat = snaps.reshape((-1, snaps.shape[-1]))
    qs = np.empty(flat.shape[0])
    for lo in range(0, flat.shape[0], _Q_NODE_CHUNK):
        hi = min(lo + _Q_NODE_CHUNK, flat.shape[0])
        qs[lo:hi] = q_derivative_batch(flat[lo:hi], m_ambient, d.energy,
                                       d.flow.grid, method="grouped")
    qs = qs.reshape(lead + (d.quad_points,))
    weights = _simpson_weights(d.quad_points, times[1] - times[0])
    return r1 - r0, qs @ weights


def log_density_normal_form_batch(coeffs: np.ndarray, m_ambient: int,
                                  d: DensityParams) -> np.ndarray:
    delta_r, q_int = _normal_form_pieces(coeffs, m_ambient, d)
    return GAUSS_FORM_FACTOR * (delta_r - q_int)


def density_normal_form(u: FourierState, d: DensityParams,
                        grid: GridSpec | None = None) -> float:
    """log density via the normal form: the energy-correction difference at
    the endpoints minus the integrated modified-energy derivative."""
    return float(log_density_normal_form_batch(u.coeffs[None, :],
                                               u.m_ambient, d)[0])


def density_wgm(u: FourierState, d: DensityParams,
                grid: GridSpec | None = None) -> float:
    """log density of the transported *weighted* ensemble (weight
    1_{C<=R} e^{-R_corr}) with respect to itself: equals
    log G - R(Phi(-t)u) + R(u), i.e. the R-difference enters once less than
    in log G."""
    delta_r, q_int = _normal_form_pieces(u.coeffs[None, :], u.m_ambient, d)
    val = (GAUSS_FORM_FACTOR - 1.0) * delta_r - GAUSS_FORM_FACTOR * q_int
    return float(val[0])


# ---------------------------------------------------------------------------
# observables

class ObservableKind(Enum):
    MODE_MODULUS_SQ = "mode_modulus_sq"
    LOW_NORM_SQ = "low_norm_sq"
    BOUNDED_EXP = "bounded_exp"
    HIGH_MASS_ONLY = "high_mass_only"


@dataclass(frozen=True)
class ObservableSpec:
    """Bounded or integrable test functions for the transport identity."""

    kind: ObservableKind
    k: int = 0
    sigma: float = 0.0
    n_cut: int = 0
    scale: float = 1.0

    @property
    def name(self) -> str:
        if self.kind is ObservableKind.MODE_MODULUS_SQ:
            return f"|u_{self.k}|^2"
        if self.kind is ObservableKind.LOW_NORM_SQ:
            return f"low_norm_sq(sigma={self.sigma}, n={self.n_cut})"
        if self.kind is ObservableKind.BOUNDED_EXP:
            return f"exp(-{self.scale} * norm_sq(sigma={self.sigma}))"
        return f"high_mass(|k|>{self.n_cut})"

    def evaluate_batch(self, coeffs: np.ndarray, m_ambient: int) -> np.ndarray:
        ks = wavenumbers(m_ambient)
        if self.kind is ObservableKind.MODE_MODULUS_SQ:
            if abs(self.k) > m_ambient:
                raise ValueError("mode outside ambient band")
            return np.abs(coeffs[..., self.k + m_ambient]) ** 2
        if self.kind is ObservableKind.LOW_NORM_SQ:
            keep = np.abs(ks) <= self.n_cut
            mult = bracket_multiplier(ks[keep], self.sigma)
            return np.sum(mult * np.abs(coeffs[..., keep]) ** 2, axis=-1)
        if self.kind is ObservableKind.BOUNDED_EXP:
            mult = bracket_multiplier(ks, self.sigma)
            return np.exp(-self.scale
                          * np.sum(mult * np.abs(coeffs) ** 2, axis=-1))
        keep = np.abs(ks) > self.n_cut
        return np.sum(np.abs(coeffs[..., keep]) ** 2, axis=-1)


def default_observable_battery(n_cut: int) -> list[ObservableSpec]:
    return [
        ObservableSpec(ObservableKind.MODE_MODULUS_SQ, k=0),
        ObservableSpec(ObservableKind.MODE_MODULUS_SQ, k=1),
        ObservableSpec(ObservableKind.MODE_MODULUS_SQ, k=-2),
        ObservableSpec(ObservableKind.LOW_NORM_SQ, sigma=1.0, n_cut=n_cut),
        ObservableSpec(ObservableKind.BOUNDED_EXP, sigma=0.0, scale=1.0),
        ObservableSpec(ObservableKind.HIGH_MASS_ONLY, n_cut=n_cut),
    ]


@dataclass(frozen=True)
class ObservableComparison:
    observable: ObservableSpec
    lhs: McReport       # E[f(Phi_N(t) u)]
    rhs: McReport       # E[f(u) G(u)]
    z: float


def change_of_measure_test(d: DensityParams, m: MeasureParams, observables,
                           n: int, rng: SeededRng) -> list[ObservableComparison]:
    """Paired Monte Carlo comparison of E[f(Phi_N(t)u)] against
    E[f(u) G(u)] over common samples; when a cutoff is configured both
    sides carry the indicator, each evaluated at its own argument (the
    push-forward identity holds for the product indicator*f verbatim, and
    the two indicators agree pathwise up to truncation coupling).

    The identity is exact at finite ambient truncation, so z is sampling
    noise plus integrator error only.
    """
    n_cut = d.energy.resolve_cut(m.m_ambient)
    if m.m_ambient < n_cut:
        raise ValueError("ambient truncation below density truncation")
    obs = list(observables)
    lhs_vals = np.empty((len(obs), n))
    rhs_vals = np.empty((len(obs), n))
    sextic = GridSpec(max(d.flow.grid.n_points, 6 * m.m_ambient + 2))

    def body(lo, hi):
        coeffs = sample_batch(rng.substream(lo), hi - lo, m)
        fwd = evolve_batch(coeffs, m.m_ambient, d.t, d.flow)
        g = np.exp(log_density_direct_batch(coeffs, m.m_ambient, d))
        if m.cutoff_r is not None:
            ind_u = cutoff_indicator_batch(coeffs, m, sextic)
            ind_fwd = cutoff_indicator_batch(fwd, m, sextic)
        else:
            ind_u = ind_fwd = np.ones(hi - lo)
        for j, spec in enumerate(obs):
            lhs_vals[j, lo:hi] = ind_fwd * spec.evaluate_batch(fwd, m.m_ambient)
            rhs_vals[j, lo:hi] = (ind_u * spec.evaluate_batch(coeffs, m.m_ambient)
                                  * g)

    run_chunked(body, n, SAMPLE_CHUNK)
    out = []
    for j, spec in enumerate(obs):
        lhs = mean_report(lhs_vals[j], seed=rng.master_seed)
        rhs = mean_report(rhs_vals[j], seed=rng.master_seed)
        diff = lhs_vals[j] - rhs_vals[j]
        stderr = float(np.std(diff, ddof=1) / np.sqrt(n))
        z = float(np.mean(diff) / stderr) if stderr > 0 else 0.0
        out.append(ObservableComparison(spec, lhs, rhs, z))
    return out


# ---------------------------------------------------------------------------
# convergence and L^p studies

class StudyKind(Enum):
    R = "R"
    Q = "Q"
    G = "G"


@dataclass(frozen=True)
class StudyRow:
    kind: str
    n_cut: int
    sup_diff: float


def convergence_study(kind: StudyKind, s: float, t: float, n_states: int,
                      n_list, m_ambient: int, rng: SeededRng,
                      family: WeightFamily | None = None,
                      step: float = 1e-3, quad_points: int = 201,
                      check_decrease: bool = True) -> list[StudyRow]:
    """sup over a fixed sample set of |X_M - X_N| for X in {R, Q, log G},
    N running through n_list with reference at the ambient truncation M.

    The finite sample ensemble with a pinned seed stands in for a compact
    set; the sup must decrease strictly in N.
    """
    if max(n_list) > m_ambient:
        raise ValueError("n_list entries must not exceed m_ambient")
    fam = family or WeightFamily(WeightKind.JAPANESE_BRACKET, s)
    meas = MeasureParams(s=s, m_ambient=m_ambient, family=fam)
    coeffs = sample_batch(rng, n_states, meas)

    def values_at(n_cut: int) -> np.ndarray:
        energy = EnergyParams(n_cut=n_cut, family=fam)
        if kind is StudyKind.R:
            return r_correction_batch(coeffs, m_ambient, energy)
        if kind is StudyKind.Q:
            grid = default_grid(n_cut)
            return q_derivative_batch(coeffs, m_ambient, energy, grid)
        flow = FlowParams(n_cut=n_cut, step=step, grid=default_grid(n_cut))
        d = DensityParams(t=t, energy=energy, flow=flow,
                          quad_points=quad_points)
        return log_density_direct_batch(coeffs, m_ambient, d)

    ref = values_at(m_ambient)
    rows = []
    for n_cut in sorted(n_list):
        rows.append(StudyRow(kind.value, n_cut,
                             float(np.max(np.abs(ref - values_at(n_cut))))))
    if check_decrease:
        sups = [r.sup_diff for r in sorted(rows, key=lambda r: r.n_cut)]
        if any(b >= a for a, b in zip(sups, sups[1:])):
            raise NlsTransportError(f"sup differences not decreasing: {sups}")
    return rows


@dataclass(frozen=True)
class LpStudyRow:
    n_cut: int
    p_exp: float
    norm_g: float
    diff_norm: float   # || G_M - G_N ||_p, 0 for the reference row


def lp_density_study(d: DensityParams, m: MeasureParams, p_list, n: int,
                     rng: SeededRng, n_list=None) -> list[LpStudyRow]:
    """L^p norms of the truncated densities under the restricted normalized
    ensemble, and the L^p distance from the ambient-truncation reference."""
    if m.cutoff_r is None:
        raise MissingCutoff("lp_density_study requires the energy cutoff")
    if n_list is None:
        n_list = [d.flow.n_cut]
    coeffs = sample_batch(rng, n, m)
    sextic = GridSpec(max(d.flow.grid.n_points, 6 * m.m_ambient + 2))
    ind = cutoff_indicator_batch(coeffs, m, sextic)
    mass = float(np.mean(ind))
    if mass == 0.0:
        raise NlsTransportError("cutoff keeps no samples; raise cutoff_r")

    def log_g_at(n_cut: int) -> np.ndarray:
        energy = EnergyParams(n_cut=n_cut, family=m.family)
        flow = FlowParams(n_cut=n_cut, step=d.flow.step,
                          grid=default_grid(n_cut))
        dd = DensityParams(t=d.t, energy=energy, flow=flow,
                           quad_points=d.quad_points)
        return log_density_direct_batch(coeffs, m.m_ambient, dd)

    g_ref = np.exp(log_g_at(m.m_ambient))
    rows = []
    for n_cut in sorted(set(list(n_list) + [m.m_ambient])):
        g = np.exp(log_g_at(n_cut)) if n_cut != m.m_ambient else g_ref
        for p_exp in p_list:
            norm_g = float((np.mean(ind * g**p_exp) / mass) ** (1.0 / p_exp))
            diff = float((np.mean(ind * np.abs(g_ref - g) ** p_exp)
                          / mass) ** (1.0 / p_exp))
            if not np.isfinite(norm_g):
                raise NlsTransportError("density L^p norm not finite")
            rows.append(LpStudyRow(n_cut, p_exp, norm_g, diff))
    return rows
