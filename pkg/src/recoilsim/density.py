"""The observable layer: free wave packets, the Bessel-squared decoherence
factor, and reduced density matrices of the relative coordinate.

After both atoms have emitted (times well past ``1/gamma``), tracing the
photons, the internal states, and the center of mass out of the two-atom
state leaves the relative coordinate in

    rho(x, x', t) = N' psi(x, t) psi*(x', t) F(x, x')

where psi is the freely evolved relative wave function and
``F = J0^2(pi (x - x') / lambda)`` suppresses coherences between points
separated on the scale of the emitted wavelength.  F never touches the
diagonal (F(x, x) = 1), so emission changes coherences only, never the
position distribution itself.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import toeplitz

from .core import ConfigurationError, ModelParams, MomentumAmplitude
from .specfun import bessel_j0

__all__ = [
    "CoherenceLength",
    "DensityGrid",
    "GaussianPacket",
    "ModelValidityError",
    "Scenario",
    "SpatialGrid",
    "ValidityWarning",
    "coherence_length",
    "decoherence_factor",
    "psi_free",
    "reduced_density",
    "scenario_sweep",
    "worker_count",
]

# Emission-on density matrices presume both atoms have decayed.
HARD_TIME_GATE = 1.0   # gamma*t below this: hard error
SOFT_TIME_GATE = 5.0   # gamma*t below this: warning


def worker_count(n_jobs: int) -> int:
    """Number of worker threads for ``n_jobs`` independent evaluations.

    Bounded by the SIM_THREADS environment variable when set (values below 1
    are treated as 1), otherwise by the CPU count.
    """
    limit = os.cpu_count() or 1
    env = os.environ.get("SIM_THREADS")
    if env is not None:
        try:
            limit = int(env)
        except ValueError:
            raise ConfigurationError(f"SIM_THREADS must be an integer, got {env!r}")
        limit = max(limit, 1)
    return max(1, min(n_jobs, limit))


class ModelValidityError(ValueError):
    """The requested evaluation lies outside the model's validity window."""


class ValidityWarning(UserWarning):
    """The requested evaluation is marginal but not outright invalid."""


@dataclass(frozen=True)
class GaussianPacket:
    """Normalized Gaussian wave packet: |G|^2 has standard deviation ``width``."""

    center: float
    width: float

    def __post_init__(self):
        if not np.isfinite(self.width) or self.width <= 0:
            raise ConfigurationError(f"packet width must be positive, got {self.width!r}")
        if not np.isfinite(self.center):
            raise ConfigurationError("packet center must be finite")

    def value(self, x):
        """G(x) at t = 0."""
        d = self.width
        return (2.0 * np.pi * d**2) ** (-0.25) * np.exp(
            -((np.asarray(x, dtype=float) - self.center) ** 2) / (4.0 * d**2))

    def evolved(self, x, t, params: ModelParams):
        """Free evolution under the relative-motion Hamiltonian p^2 / (2 mu).

        The Gaussian stays Gaussian with the complex width
        ``D_t = d^2 + i hbar t / (2 mu)``; |psi|^2 keeps unit norm with
        variance ``d^2 + (hbar t / (2 mu d))^2``.
        """
        d = self.width
        d_t = d**2 + 0.5j * params.hbar * t / params.mu
        pref = (2.0 * np.pi) ** (-0.25) * np.sqrt(d / d_t)
        return pref * np.exp(-((np.asarray(x, dtype=float) - self.center) ** 2)
                             / (4.0 * d_t))

    def momentum_amplitude(self, p, params: ModelParams):
        """Momentum-space profile: Gaussian of width hbar/(2d) with the
        center's translation phase."""
        sigma_p = params.hbar / (2.0 * self.width)
        return (2.0 * np.pi * sigma_p**2) ** (-0.25) * np.exp(
            -np.asarray(p, dtype=float) ** 2 / (4.0 * sigma_p**2)
            - 1j * np.asarray(p, dtype=float) * self.center / params.hbar)

    def sigma(self, t, params: ModelParams) -> float:
        """Position spread of |psi(.,t)|^2."""
        d = self.width
        return float(np.hypot(d, params.hbar * t / (2.0 * params.mu * d)))


@dataclass(frozen=True)
class Scenario:
    """A weighted superposition of Gaussian packets as the initial relative state."""

    packets: tuple[GaussianPacket, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.packets) != len(self.weights) or not self.packets:
            raise ConfigurationError("packets and weights must match and be nonempty")

    @classmethod
    def single(cls, width: float, center: float = 0.0) -> "Scenario":
        return cls(packets=(GaussianPacket(center, width),), weights=(1.0,))

    @classmethod
    def superposition(cls, center_offset: float, width: float) -> "Scenario":
        """Symmetric cat state: packets at +-center_offset, equal weights.

        The normalization carries the packet overlap
        ``S = exp(-center_offset^2 / (2 width^2))``: each weight is
        ``1/sqrt(2(1+S))`` so the summed state has exactly unit norm.
        """
        if center_offset <= 0:
            raise ConfigurationError("center_offset must be positive")
        s = float(np.exp(-(center_offset**2) / (2.0 * width**2)))
        w = 1.0 / np.sqrt(2.0 * (1.0 + s))
        return cls(packets=(GaussianPacket(center_offset, width),
                            GaussianPacket(-center_offset, width)),
                   weights=(w, w))

    def max_sigma(self, t, params: ModelParams) -> float:
        return max(pk.sigma(t, params) for pk in self.packets)


def psi_free(x, t, c_p_spec, params: ModelParams):
    """Freely evolved relative wave function at position(s) ``x``.

    ``c_p_spec`` may be a :class:`GaussianPacket` or :class:`Scenario`
    (closed-form evolution) or a :class:`~recoilsim.core.MomentumAmplitude`
    (direct quadrature of the momentum integral).  The quadrature route is
    the numerical fallback used to cross-check the closed forms.
    """
    if isinstance(c_p_spec, GaussianPacket):
        return c_p_spec.evolved(x, t, params)
    if isinstance(c_p_spec, Scenario):
        parts = [w * pk.evolved(x, t, params)
                 for pk, w in zip(c_p_spec.packets, c_p_spec.weights)]
        total = parts[0]
        for part in parts[1:]:
            total = total + part
        return total
    if isinstance(c_p_spec, MomentumAmplitude):
        x_arr = np.asarray(x, dtype=float)
        p = c_p_spec.p_values
        dp = np.full(p.size, c_p_spec.spacing)
        dp[0] = dp[-1] = c_p_spec.spacing / 2.0
        hbar, mu = params.hbar, params.mu
        phase = np.exp(1j * (np.multiply.outer(x_arr, p)
                             - p**2 * t / (2.0 * mu)) / hbar)
        out = phase @ (c_p_spec.c_p * dp) / np.sqrt(2.0 * np.pi * hbar)
        return complex(out) if x_arr.ndim == 0 else out
    raise ConfigurationError(
        f"unsupported wave-packet specification: {type(c_p_spec).__name__}")


def decoherence_factor(x, x2, params: ModelParams):
    """Coherence suppression between ``x`` and ``x2``:
    ``F = J0^2(pi (x - x2) / lambda)``.

    Depends only on the separation; F(x, x) = 1; 0 <= F <= 1.
    """
    arg = (params.omega0 / (2.0 * params.c)) * (np.asarray(x, dtype=float)
                                                - np.asarray(x2, dtype=float))
    return bessel_j0(arg) ** 2


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform position grid for density matrices."""

    x_values: np.ndarray

    def __post_init__(self):
        x = np.array(self.x_values, dtype=float, copy=True)
        if x.ndim != 1 or x.size < 2:
            raise ConfigurationError("need at least two grid points")
        dx = np.diff(x)
        if np.any(dx <= 0) or not np.allclose(dx, dx[0], rtol=1e-12, atol=0.0):
            raise ConfigurationError("x_values must be uniform and increasing")
        x.setflags(write=False)
        object.__setattr__(self, "x_values", x)

    @classmethod
    def linspace(cls, x_min: float, x_max: float, points: int) -> "SpatialGrid":
        if points < 2 or x_max <= x_min:
            raise ConfigurationError("need x_max > x_min and at least 2 points")
        return cls(x_values=np.linspace(x_min, x_max, points))

    @property
    def spacing(self) -> float:
        return float(self.x_values[1] - self.x_values[0])

    @property
    def extent(self) -> float:
        return float(self.x_values[-1] - self.x_values[0])

    @property
    def n(self) -> int:
        return self.x_values.size


@dataclass(frozen=True)
class DensityGrid:
    """Reduced density matrix of the relative coordinate sampled on a grid.

    Hermitian by construction (exactly, not to rounding), diagonal real and
    non-negative, trace normalized to one via ``norm_factor``.
    """

    grid: SpatialGrid
    rho: np.ndarray
    t: float
    emission: bool
    norm_factor: float
    params: ModelParams

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (self.grid.n, self.grid.n):
            raise ConfigurationError("rho must be square over the grid")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @property
    def diagonal(self) -> np.ndarray:
        return self.rho.diagonal().real

    def trace(self) -> float:
        return float(np.add.reduce(self.diagonal) * self.grid.spacing)

    def purity(self) -> float:
        """trace(rho^2) by the grid quadrature; 1 for a pure state."""
        return float(np.add.reduce(np.abs(self.rho).ravel() ** 2)
                     * self.grid.spacing**2)

    def diag_width(self) -> float:
        """Standard deviation of the position distribution (the diagonal)."""
        x = self.grid.x_values
        w = self.diagonal * self.grid.spacing
        total = np.add.reduce(w)
        mean = np.add.reduce(x * w) / total
        var = np.add.reduce((x - mean) ** 2 * w) / total
        return float(np.sqrt(var))

    def off_band_mass(self, width: float) -> float:
        """Sum of |rho| over pairs separated by more than ``width/2``."""
        x = self.grid.x_values
        sep = np.abs(x[:, None] - x[None, :])
        return float(np.add.reduce(np.abs(self.rho[sep > width / 2.0])))


def reduced_density(grid: SpatialGrid, t: float, scenario, emission: bool,
                    params: ModelParams) -> DensityGrid:
    """Assemble rho(x, x', t) = N' psi psi* F on the grid.

    With ``emission`` the Bessel-squared factor multiplies every coherence;
    without it F is identically one and the state stays pure.  The emission
    form presumes both atoms have long since decayed: below ``gamma t = 1``
    it is refused outright, below ``gamma t = 5`` a warning is issued.
    """
    if t < 0:
        raise ConfigurationError("t must be non-negative")
    if emission:
        _check_emission_time(t, params)
    params.require_scenario_regime()
    return _assemble_density(grid, t, scenario, emission, params)


def _check_emission_time(t: float, params: ModelParams) -> None:
    gt = params.gamma * t
    if gt < HARD_TIME_GATE:
        raise ModelValidityError(
            f"emission density matrix requested at gamma*t = {gt:.3g}; "
            f"the traced-out form requires gamma*t >= {HARD_TIME_GATE} "
            "(both atoms must have decayed)")
    if gt < SOFT_TIME_GATE:
        warnings.warn(
            f"gamma*t = {gt:.3g} is marginal for the emission-traced "
            f"density matrix (recommended gamma*t >= {SOFT_TIME_GATE})",
            ValidityWarning, stacklevel=3)


def _assemble_density(grid: SpatialGrid, t: float, scenario, emission: bool,
                      params: ModelParams) -> DensityGrid:
    psi = np.asarray(psi_free(grid.x_values, t, scenario, params), dtype=complex)
    rho = np.outer(psi, psi.conj())
    # The Hermiticity contract is exact, not to rounding, and a fused
    # multiply-add in the platform's complex product can leave ~1e-18
    # asymmetries in psi_i * conj(psi_j); mirror the upper triangle instead
    # of trusting the product.
    lower = np.tril_indices(grid.n, -1)
    rho[lower] = np.conj(rho.T[lower])
    np.fill_diagonal(rho, rho.diagonal().real)
    if emission:
        offsets = np.arange(grid.n) * grid.spacing
        factor_column = np.asarray(decoherence_factor(offsets, 0.0, params))
        rho = rho * toeplitz(factor_column)
    norm = 1.0 / (float(np.add.reduce(rho.diagonal().real)) * grid.spacing)
    rho = rho * norm
    return DensityGrid(grid=grid, rho=rho, t=float(t), emission=bool(emission),
                       norm_factor=norm, params=params)


class CoherenceLength(NamedTuple):
    """First e^{-1} crossing of the center-normalized coherence profile.

    ``crossed`` is False when no crossing exists within the grid (or the grid
    is too coarse to resolve one); ``length`` then holds the grid extent as a
    sentinel.
    """

    length: float
    crossed: bool


def coherence_length(dg: DensityGrid) -> CoherenceLength:
    """Separation at which coherence through the densest point falls to e^{-1}.

    Scans |rho(x0 + dx/2, x0 - dx/2)| / rho(x0, x0) outward from the peak x0
    of the position distribution and linearly interpolates the first crossing
    below e^{-1}.  Normalizing by the central diagonal value (not by the
    geometric mean of the endpoints' diagonals) keeps the profile sensitive
    to both the packet envelope and the emission damping: for a pure packet
    it tracks the growing width, with emission it saturates at the separation
    where the Bessel-squared factor alone reaches e^{-1}.
    """
    lam = dg.params.wavelength
    sentinel = CoherenceLength(length=dg.grid.extent, crossed=False)
    if dg.grid.spacing > lam / 4.0:
        return sentinel
    diag = dg.diagonal
    i0 = int(np.argmax(diag))
    center = diag[i0]
    if center <= 0:
        return sentinel
    m_max = min(i0, dg.grid.n - 1 - i0)
    threshold = float(np.exp(-1.0))
    prev = 1.0
    for m in range(1, m_max + 1):
        cur = abs(dg.rho[i0 + m, i0 - m]) / center
        if cur < threshold:
            dx_prev = 2.0 * (m - 1) * dg.grid.spacing
            dx_cur = 2.0 * m * dg.grid.spacing
            frac = (prev - threshold) / (prev - cur)
            return CoherenceLength(length=dx_prev + frac * (dx_cur - dx_prev),
                                   crossed=True)
        prev = cur
    return sentinel


def scenario_sweep(scenario, times, emission: bool, grid: SpatialGrid,
                   params: ModelParams) -> list[DensityGrid]:
    """Density matrices at several times, with up-front validation.

    The grid must resolve the Bessel oscillations (spacing <= lambda/20) and
    contain the packets at the final time (extent >= 6x the largest packet
    spread).  All times are gate-checked before any matrix is assembled, so
    a validity failure produces no partial results.
    """
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigurationError("times must be strictly ascending")
    if not times:
        return []
    lam = params.wavelength
    # Relative slack so a grid built to land exactly on lambda/20 is not
    # rejected over the last bit of the spacing division.
    if grid.spacing > lam / 20.0 * (1.0 + 1e-9):
        raise ConfigurationError(
            f"grid spacing {grid.spacing:.4g} exceeds lambda/20 = {lam / 20.0:.4g}; "
            "the decoherence factor would be under-resolved")
    needed = 6.0 * scenario.max_sigma(times[-1], params)
    if grid.extent < needed:
        raise ConfigurationError(
            f"grid extent {grid.extent:.4g} is below 6x the largest packet "
            f"spread {needed:.4g} at the final time")
    if times[0] < 0:
        raise ConfigurationError("t must be non-negative")
    if emission:
        for t in times:
            _check_emission_time(t, params)
    params.require_scenario_regime()
    if len(times) == 1:
        return [_assemble_density(grid, times[0], scenario, emission, params)]
    # All inputs are immutable and every run is independent, so the sweep can
    # fan out over times (gates above already ran, in this thread, for all of
    # them); results come back in time order regardless.
    with ThreadPoolExecutor(max_workers=worker_count(len(times))) as pool:
        return list(pool.map(
            lambda t: _assemble_density(grid, t, scenario, emission, params),
            times))
