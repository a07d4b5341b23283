"""Decoherence of two-atom relative motion from spontaneous emission.

Two cold two-level atoms that each scatter a single photon entangle their
relative position with the photon field.  Tracing the photons out leaves the
relative coordinate's density matrix multiplied by a Bessel-squared
decoherence factor ``F = J0^2(pi dx / lambda)`` -- coherences between points
separated by more than about half an emitted wavelength are destroyed, and a
delocalized relative position collapses to that scale.

The package has three layers:

* closed-form theory -- photon-emission amplitudes for the zero-, one-, and
  two-photon sectors (:mod:`~recoilsim.amplitudes`) and the traced reduced
  density matrix built on them (:mod:`~recoilsim.density`);
* brute force -- direct ODE integration of the coupled amplitude equations
  on a discretized field and direct angular quadrature of the pre-reduction
  density integral (:mod:`~recoilsim.oracle`), used to validate every closed
  form;
* plumbing -- model parameters and mode grids (:mod:`~recoilsim.core`), an
  in-repo Bessel J0 (:mod:`~recoilsim.specfun`), and a CLI
  (:mod:`~recoilsim.cli`).
"""

from .core import (
    ConfigurationError,
    ModeGrid,
    ModelParams,
    MomentumAmplitude,
    coupling_strength,
    decay_rate,
    omega_no_photon,
    omega_one_photon,
    omega_two_photon,
    recoil_momentum,
)
from .specfun import (
    BesselEval,
    BesselMethod,
    bessel_j0,
    bessel_j0_eval,
    j0_quadrature_oracle,
)
from .amplitudes import (
    AmplitudeState,
    TwoPhotonLimit,
    amplitude_a,
    amplitude_b,
    amplitude_d,
    amplitude_d_infinity,
    closed_form_state,
)
from .density import (
    CoherenceLength,
    DensityGrid,
    GaussianPacket,
    ModelValidityError,
    Scenario,
    SpatialGrid,
    ValidityWarning,
    coherence_length,
    decoherence_factor,
    psi_free,
    reduced_density,
    scenario_sweep,
)
from .oracle import (
    NormDriftFailure,
    OdeRun,
    RateCheck,
    StiffnessFailure,
    Trajectory,
    density_quadrature,
    integrate_amplitudes,
    max_decay_error,
    ww_rate_check,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeState",
    "BesselEval",
    "BesselMethod",
    "CoherenceLength",
    "ConfigurationError",
    "DensityGrid",
    "GaussianPacket",
    "ModeGrid",
    "ModelParams",
    "ModelValidityError",
    "MomentumAmplitude",
    "NormDriftFailure",
    "OdeRun",
    "RateCheck",
    "Scenario",
    "SpatialGrid",
    "StiffnessFailure",
    "Trajectory",
    "TwoPhotonLimit",
    "ValidityWarning",
    "__version__",
    "amplitude_a",
    "amplitude_b",
    "amplitude_d",
    "amplitude_d_infinity",
    "bessel_j0",
    "bessel_j0_eval",
    "closed_form_state",
    "coherence_length",
    "coupling_strength",
    "decay_rate",
    "decoherence_factor",
    "density_quadrature",
    "integrate_amplitudes",
    "j0_quadrature_oracle",
    "max_decay_error",
    "omega_no_photon",
    "omega_one_photon",
    "omega_two_photon",
    "psi_free",
    "recoil_momentum",
    "reduced_density",
    "scenario_sweep",
    "ww_rate_check",
]
