"""Shared fixtures.

The expensive runs (the 400-mode oracle trajectory, the default CLI evolve)
are session-scoped so the acceptance criteria and the module tests share one
computation each.
"""

import json
import time

import numpy as np
import pytest

from recoilsim.cli import main
from recoilsim.core import ModelParams, ModeGrid
from recoilsim.oracle import OdeRun, integrate_amplitudes


@pytest.fixture(scope="session")
def params():
    """Standard scenario-regime parameters: omega0/gamma = 100."""
    return ModelParams(omega0=1.0, mu=10.0, gamma=0.01)


@pytest.fixture(scope="session")
def big_trajectory():
    """The 400-mode Weisskopf-Wigner oracle run over gamma*t in [0, 5].

    Shared by acceptance criteria 3 and 4.  The line is kept narrow
    (omega0/gamma = 1e4) so the sqrt(k/k0) coupling slope is flat across the
    50-linewidth band; a broad line pulls the resonance and the closed-form
    phases drift away from the integrated ones.  The returned dict carries
    the trajectory, its parameters, and the wall time of the integration so
    each criterion can account for it in its runtime budget.
    """
    narrow = ModelParams(omega0=1.0, mu=10.0, gamma=1e-4)
    grid = ModeGrid.build(narrow, n_k=401, bandwidth_gammas=50.0, n_phi=1)
    t_final = 5.0 / narrow.gamma
    run = OdeRun(params=narrow, grid=grid, t_span=(0.0, t_final),
                 sample_times=np.linspace(0.0, t_final, 51), tol=1e-10)
    start = time.perf_counter()
    trajectory = integrate_amplitudes(run)
    elapsed = time.perf_counter() - start
    return {"trajectory": trajectory, "grid": grid, "params": narrow,
            "elapsed": elapsed}


def run_cli(argv, tmp):
    """Invoke the CLI in-process with --out pointed at ``tmp``."""
    return main([*argv, "--out", str(tmp)])


@pytest.fixture(scope="session")
def default_evolve_runs(tmp_path_factory):
    """The default-config evolve subcommand, run twice into separate dirs.

    Used by the CLI file-census tests and by acceptance criterion 7
    (byte-reproducibility) without paying for extra runs.
    """
    first = tmp_path_factory.mktemp("evolve-default-1")
    second = tmp_path_factory.mktemp("evolve-default-2")
    assert run_cli(["evolve"], first) == 0
    assert run_cli(["evolve"], second) == 0
    return first, second


@pytest.fixture(scope="session")
def small_modes_config(tmp_path_factory):
    """Config with a thinned 120-mode grid: a cheap amplitudes-oracle run
    that still keeps the full 50-gamma bandwidth (and so passes the decay
    tolerance; narrower windows truncate the Lorentzian wings and breach it).
    """
    path = tmp_path_factory.mktemp("cfg") / "small_modes.json"
    path.write_text(json.dumps(
        {"modes": {"n_k": 120, "bandwidth_gammas": 50.0}}))
    return path
