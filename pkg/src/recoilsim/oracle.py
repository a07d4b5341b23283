"""Brute-force validators for the closed-form theory.

Two independent routes live here:

* :func:`integrate_amplitudes` -- direct adaptive Runge-Kutta integration of
  the coupled three-sector amplitude equations on a discrete mode grid, with
  no Markovian dressing anywhere.  Its trajectories are what the closed
  forms get compared against.
* :func:`density_quadrature` -- direct two-angle quadrature of the traced
  density-matrix integrand before the Bessel-function reduction, used to
  bound the error of the J0^2 factorization.

Both are deliberately dumb: accuracy comes from tolerances and grid
resolution, never from reusing the closed-form algebra they are meant to
check.  A discrete bath refeeds the atoms after the recurrence time
``2 pi / (c dk)``; comparisons are only meaningful before ~0.8 of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .core import (
    ConfigurationError,
    ModelParams,
    ModeGrid,
    omega_no_photon,
    omega_one_photon,
    omega_two_photon,
    recoil_momentum,
)
from .amplitudes import AmplitudeState
from .density import psi_free

__all__ = [
    "NormDriftFailure",
    "OdeRun",
    "RateCheck",
    "StiffnessFailure",
    "Trajectory",
    "density_quadrature",
    "integrate_amplitudes",
    "max_decay_error",
    "ww_rate_check",
]

MIN_BANDWIDTH_GAMMAS = 10.0
COMPARISON_WINDOW_FRACTION = 0.8


class StiffnessFailure(RuntimeError):
    """The adaptive integrator underflowed its step size."""


class NormDriftFailure(RuntimeError):
    """Sector norm drifted beyond what the tolerance permits."""


@dataclass(frozen=True)
class OdeRun:
    """Frozen configuration of one brute-force integration.

    ``keep_cross_term`` controls the feedback of the two-photon sector on the
    one-photon sector.  Physically a photon pair {k, j} can refeed B_k by
    reabsorbing photon j along two routes: the pair may have been created
    from B_k itself (emit j, reabsorb j) or from B_j (emit k, reabsorb j,
    exchanging which photon belongs to which decay).  With the flag on, both
    routes are kept and the sector norm is conserved exactly.  With it off,
    the exchange route -- second order in the coupling -- is dropped, which
    is precisely the approximation the closed forms are built on.
    """

    params: ModelParams
    grid: ModeGrid
    p: float = 0.0
    total_momentum: float = 0.0
    c_p: complex = 1.0 + 0.0j
    t_span: tuple[float, float] = (0.0, 1.0)
    sample_times: np.ndarray | None = None
    tol: float = 1e-10
    keep_cross_term: bool = True

    def __post_init__(self):
        if not (1e-12 <= self.tol <= 1e-6):
            raise ConfigurationError("tol must lie in [1e-12, 1e-6]")
        t0, t1 = self.t_span
        if t0 != 0.0 or t1 <= 0.0:
            raise ConfigurationError("t_span must be (0, T) with T > 0")
        k0 = self.params.k0
        min_w = MIN_BANDWIDTH_GAMMAS * self.params.gamma / self.params.c
        low = k0 - float(self.grid.k_values[0])
        high = float(self.grid.k_values[-1]) - k0
        if min(low, high) < min_w * (1.0 - 1e-9):
            raise ConfigurationError(
                f"grid bandwidth ({low:.4g}, {high:.4g}) around k0 is below the "
                f"required {MIN_BANDWIDTH_GAMMAS} gamma/c on each side")
        if self.sample_times is not None:
            st = np.array(self.sample_times, dtype=float, copy=True)
            if st.ndim != 1 or st.size < 2 or np.any(np.diff(st) <= 0):
                raise ConfigurationError("sample_times must be ascending, length >= 2")
            if st[0] < t0 or st[-1] > t1 * (1.0 + 1e-12):
                raise ConfigurationError("sample_times must lie within t_span")
            st.setflags(write=False)
            object.__setattr__(self, "sample_times", st)
        if self.keep_cross_term:
            q = recoil_momentum(self.grid.mode_k, self.grid.mode_phi, self.params)
            if self.p != 0.0 and np.ptp(q) != 0.0:
                raise ConfigurationError(
                    "the packed symmetric two-photon storage requires the "
                    "two-photon frequencies to be exchange-symmetric: use "
                    "p = 0, or a grid whose modes all carry the same recoil "
                    "kick (e.g. a single angle at phi = 0)")

    @property
    def times(self) -> np.ndarray:
        if self.sample_times is not None:
            return self.sample_times
        return np.linspace(self.t_span[0], self.t_span[1], 51)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of one :class:`OdeRun`.

    ``d_data`` holds the two-photon sector in packed upper-triangle form for
    norm-conserving runs, or as the ordered (first-emission-labeled) full
    matrix when the exchange feedback was dropped; :meth:`state_at` expands
    either into the observable ordered matrix.
    """

    run: OdeRun
    times: np.ndarray
    a: np.ndarray        # (n_t,) complex
    b: np.ndarray        # (n_t, n_modes) complex
    d_data: np.ndarray   # (n_t, M) packed or (n_t, n_modes**2) ordered
    symmetric: bool

    def __post_init__(self):
        for name in ("times", "a", "b", "d_data"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_modes(self) -> int:
        return self.run.grid.n_modes

    @property
    def recurrence_time(self) -> float:
        """Time at which the discrete bath refeeds the atoms."""
        return 2.0 * np.pi / (self.run.params.c * self.run.grid.spacing)

    @property
    def comparison_window(self) -> float:
        """Largest time to which this trajectory should be trusted as an oracle."""
        return COMPARISON_WINDOW_FRACTION * self.recurrence_time

    def _d_matrix(self, i: int) -> np.ndarray:
        n = self.n_modes
        if self.symmetric:
            rows, cols = np.triu_indices(n)
            full = np.empty((n, n), dtype=complex)
            full[rows, cols] = self.d_data[i]
            full[cols, rows] = self.d_data[i]
            return full
        e = self.d_data[i].reshape(n, n)
        return e + e.T

    def state_at(self, i: int) -> AmplitudeState:
        return AmplitudeState(p=self.run.p, t=float(self.times[i]),
                              a_val=complex(self.a[i]), b_vals=self.b[i],
                              d_vals=self._d_matrix(i))

    @property
    def sector_populations(self) -> np.ndarray:
        """(n_t, 3) array of (|A|^2, 2 sum|B|^2, sum|D|^2) per sample."""
        pop_a = np.abs(self.a) ** 2
        pop_b = 2.0 * np.add.reduce(np.abs(self.b) ** 2, axis=1)
        if self.symmetric:
            n = self.n_modes
            rows, cols = np.triu_indices(n)
            sq = np.abs(self.d_data) ** 2
            pop_d = 2.0 * np.add.reduce(sq, axis=1) \
                - np.add.reduce(sq[:, rows == cols], axis=1)
        else:
            pop_d = np.array([np.add.reduce(np.abs(self._d_matrix(i)).ravel() ** 2)
                              for i in range(self.times.size)])
        return np.column_stack([pop_a, pop_b, pop_d])

    @property
    def norms(self) -> np.ndarray:
        return np.add.reduce(self.sector_populations, axis=1)


def integrate_amplitudes(run: OdeRun) -> Trajectory:
    """Integrate the coupled amplitude equations on the discrete grid.

    Explicit adaptive Runge-Kutta (8th order, relative tolerance ``run.tol``)
    on the complex state [A, B_k, D-sector] in the rotating frame.  Initial
    condition A = C_p, everything else zero.  For norm-conserving runs the
    conserved quantity |A|^2 + 2 sum|B|^2 + sum|D|^2 is monitored and a drift
    beyond ``10 * tol`` raises :class:`NormDriftFailure`.  Deterministic:
    every mode sum is a fixed-order pairwise reduction.
    """
    params, grid = run.params, run.grid
    n = grid.n_modes
    g = grid.mode_coupling
    mk, mphi = grid.mode_k, grid.mode_phi
    alpha = omega_no_photon(run.p, run.total_momentum, params) - params.omega0
    beta = omega_one_photon(mk, mphi, run.p, run.total_momentum, params) - params.omega0
    delta_full = omega_two_photon(
        mk[:, None], mphi[:, None], mk[None, :], mphi[None, :],
        run.p, run.total_momentum, params) - params.omega0

    if run.keep_cross_term:
        rows, cols = np.triu_indices(n)
        delta_packed = delta_full[rows, cols]
        g_rows, g_cols = g[rows], g[cols]
        full_buf = np.empty((n, n), dtype=complex)

        def rhs(t, y):
            a, b, dp = y[0], y[1:1 + n], y[1 + n:]
            full_buf[rows, cols] = dp
            full_buf[cols, rows] = dp
            s = np.add.reduce(full_buf * g[None, :], axis=1)
            da = -1j * alpha * a - 2j * np.add.reduce(g * b)
            db = -1j * beta * b - 1j * g * a - 1j * s
            ddp = -1j * delta_packed * dp - 1j * (g_cols * b[rows] + g_rows * b[cols])
            return np.concatenate(([da], db, ddp))

        dim = 1 + n + n * (n + 1) // 2
    else:
        def rhs(t, y):
            a, b = y[0], y[1:1 + n]
            e = y[1 + n:].reshape(n, n)
            s = np.add.reduce(e * g[None, :], axis=1)
            da = -1j * alpha * a - 2j * np.add.reduce(g * b)
            db = -1j * beta * b - 1j * g * a - 1j * s
            de = -1j * delta_full * e - 1j * np.multiply.outer(b, g)
            return np.concatenate(([da], db, de.ravel()))

        dim = 1 + n + n * n

    y0 = np.zeros(dim, dtype=complex)
    y0[0] = run.c_p
    times = run.times
    sol = solve_ivp(rhs, run.t_span, y0, method="DOP853", t_eval=times,
                    rtol=run.tol, atol=run.tol * 1e-3)
    if sol.status == -1:
        reached = sol.t[-1] if sol.t.size else run.t_span[0]
        raise StiffnessFailure(
            f"integrator step size underflowed near t = {reached:.6g}: {sol.message}")
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")

    traj = Trajectory(run=run, times=sol.t, a=sol.y[0],
                      b=sol.y[1:1 + n].T.copy(),
                      d_data=sol.y[1 + n:].T.copy(),
                      symmetric=run.keep_cross_term)
    if run.keep_cross_term:
        drift = float(np.max(np.abs(traj.norms - abs(run.c_p) ** 2)))
        if drift > 10.0 * run.tol:
            raise NormDriftFailure(
                f"sector norm drifted by {drift:.3e} (allowed {10.0 * run.tol:.3e}); "
                "tighten tol or shorten the run")
    return traj


def max_decay_error(traj: Trajectory) -> float:
    """Worst relative deviation of |A(t)|^2 from pure exponential decay.

    Compares against ``|C_p|^2 e^{-2 gamma t}`` at every sample inside the
    grid's comparison window.
    """
    gamma = traj.run.params.gamma
    mask = traj.times <= traj.comparison_window
    if not mask.any():
        raise ConfigurationError("no samples inside the comparison window")
    expected = abs(traj.run.c_p) ** 2 * np.exp(-2.0 * gamma * traj.times[mask])
    actual = np.abs(traj.a[mask]) ** 2
    return float(np.max(np.abs(actual - expected) / expected))


class RateCheck(NamedTuple):
    """Discrete golden-rule sum vs the configured rate.

    ``rate`` should match ``expected = gamma/2`` (the per-atom width) when
    the grid is dense and wide; ``flagged`` marks a gross deficit from too
    narrow a bandwidth.
    """

    rate: float
    expected: float
    flagged: bool


def ww_rate_check(grid: ModeGrid, params: ModelParams) -> RateCheck:
    """Evaluate the on-shell pole sum implied by the discrete modes.

    Sums ``g(k)^2 (gamma/2) / ((omega_k - omega0)^2 + (gamma/2)^2)`` over all
    modes -- the discrete stand-in for the resolvent's imaginary part whose
    continuum value is exactly ``gamma/2``.  Accurate to ~2% only when the
    bandwidth clears ~20 gamma/c on each side; narrower grids underestimate
    the rate (the Lorentzian wings are cut off) and a result below
    ``0.9 * gamma/2`` is flagged.
    """
    gamma = params.gamma
    detuning = params.c * grid.mode_k - params.omega0
    half = gamma / 2.0
    rate = float(np.add.reduce(
        grid.mode_coupling**2 * half / (detuning**2 + half**2)))
    return RateCheck(rate=rate, expected=half, flagged=rate < 0.9 * half)


def density_quadrature(x, x2, t, packet_spec, params: ModelParams,
                       n_phi: int = 256, *, include_offset: bool = True) -> complex:
    """Directly integrate the traced density-matrix element over both photon
    emission angles, before any Bessel-function reduction.

    The integrand carries the photon which-path phases
    ``e^{-i (omega0/2c)(x - x2) sin(phi)} e^{+i (omega0/2c)(x - x2) sin(phi')}``
    and the recoil-shifted packets evaluated at
    ``x + s (sin(phi) + sin(phi'))`` with ``s = hbar omega0 t / (2 mu c)``.
    ``include_offset=False`` forces s = 0, isolating the pure phase average
    whose exact value is the J0^2 factorization.

    Uniform (rectangle-rule) sampling of both angles: spectrally accurate for
    these periodic integrands once ``n_phi`` comfortably exceeds the phase
    argument, hence the n_phi >= 128 floor.
    """
    if n_phi < 128:
        raise ConfigurationError("n_phi must be at least 128")
    x, x2, t = float(x), float(x2), float(t)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sphi = np.sin(phi)
    dphase = (params.omega0 / (2.0 * params.c)) * (x - x2)
    w1 = np.exp(-1j * dphase * sphi)
    w2 = np.exp(+1j * dphase * sphi)
    if include_offset:
        s_off = params.hbar * params.omega0 * t / (2.0 * params.mu * params.c)
        shift = s_off * (sphi[:, None] + sphi[None, :])
        psi1 = psi_free(x + shift, t, packet_spec, params)
        psi2 = psi_free(x2 + shift, t, packet_spec, params)
    else:
        psi1 = psi_free(x, t, packet_spec, params)
        psi2 = psi_free(x2, t, packet_spec, params)
    integrand = (w1[:, None] * w2[None, :]) * (psi1 * np.conj(psi2))
    return complex(np.add.reduce(np.asarray(integrand).ravel()) / n_phi**2)
