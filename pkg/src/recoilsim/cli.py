"""Command-line front end: every dataset and oracle run from one binary.

Three subcommands cover the package's outputs:

* ``recoilsim decoherence-factor`` -- tabulate the Bessel-squared coherence
  suppression F against separation.
* ``recoilsim evolve`` -- reduced density matrices for a packet scenario at a
  list of times, with and/or without emission, plus a JSON summary.
* ``recoilsim oracle --which {amplitudes,quadrature,rate}`` -- run one of the
  brute-force validators and fail loudly if its tolerance is breached.

Configuration is a JSON document overlaid onto built-in defaults (the
single-packet narrowing scenario); every file is written atomically and all
floats are serialized with 17 significant digits so reruns are byte-identical.

Exit codes: 0 success; 1 configuration or I/O error; 2 model-validity gate;
3 oracle tolerance breach.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import tempfile

import numpy as np

from .core import ConfigurationError, ModelParams, ModeGrid
from .density import (
    ModelValidityError,
    Scenario,
    SpatialGrid,
    coherence_length,
    decoherence_factor,
    psi_free,
    scenario_sweep,
)
from .oracle import (
    NormDriftFailure,
    OdeRun,
    StiffnessFailure,
    density_quadrature,
    integrate_amplitudes,
    max_decay_error,
    ww_rate_check,
)
from .specfun import bessel_j0

__all__ = ["DEFAULTS", "OracleToleranceError", "load_config", "main"]

# Tolerances the oracle subcommand enforces (breach -> exit 3).
DECAY_TOLERANCE = 0.05        # |A|^2 vs e^{-2 gamma t}, relative
RATE_TOLERANCE = 0.05         # pole-sum rate vs gamma/2, relative
QUADRATURE_TOLERANCE = 1e-8   # angle quadrature vs factorized form, relative

# Fixed probe grid for the quadrature oracle (in wavelengths); the full
# configured grid would be prohibitively slow under a double angle sum.
QUADRATURE_POINTS = 16
QUADRATURE_SPAN = 2.0

DEFAULTS = {
    "params": {"omega0": 1.0, "gamma": 0.01, "mu": 10.0},
    "scenario": {"kind": "single", "width_over_lambda": 0.5,
                 "center_over_lambda": 0.0},
    "grid": {"min_over_lambda": -8.0, "max_over_lambda": 8.0, "points": 321},
    "modes": {"n_k": 400, "bandwidth_gammas": 50.0, "n_phi": 1,
              "flat_coupling": False},
    "times": [2.0, 3.0, 5.0],
    "decoherence": {"max_dx_over_lambda": 3.0, "points": 600},
    "output": {"dir": "."},
}

_SCENARIO_KEYS = {
    "single": {"kind", "width_over_lambda", "center_over_lambda"},
    "superposition": {"kind", "width_over_lambda", "center_offset_over_lambda"},
}

# "dipole" is accepted as an alternative to the default "gamma", so the
# allowed set is wider than the default keys.
_PARAMS_KEYS = {"omega0", "gamma", "mu", "dipole"}


class OracleToleranceError(RuntimeError):
    """An oracle comparison exceeded its documented tolerance."""


# ----------------------------------------------------------------------
# configuration


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigurationError(f"{where} must be a JSON object")
    return value


def _require_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where} must be a number")
    return float(value)


def _require_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{where} must be an integer")
    return value


def _require_bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigurationError(f"{where} must be true or false")
    return value


def _reject_unknown(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigurationError(f"unknown {where} key(s): {', '.join(unknown)}")


def load_config(path: str | None) -> dict:
    """Parse a JSON config file and overlay it onto the built-in defaults.

    Sections merge key-by-key except ``scenario`` and ``times``, which are
    replaced wholesale (a scenario's keys depend on its kind).  Unknown keys
    anywhere are rejected.  Returns the fully validated config dict.
    """
    merged = json.loads(json.dumps(DEFAULTS))  # deep copy
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path} is not valid JSON: {exc}")
        user = _require_mapping(user, "config")
        _reject_unknown(user, DEFAULTS, "config")
        for key, value in user.items():
            if key == "times":
                if not isinstance(value, list):
                    raise ConfigurationError("times must be a list")
                merged["times"] = [_require_number(v, "times entry") for v in value]
            elif key == "scenario":
                merged["scenario"] = _require_mapping(value, "scenario")
            else:
                section = _require_mapping(value, key)
                allowed = _PARAMS_KEYS if key == "params" else DEFAULTS[key]
                _reject_unknown(section, allowed, key)
                if key == "params" and "dipole" in section and "gamma" not in section:
                    # The decay rate came in through its alternative form;
                    # the default gamma must not shadow it.
                    merged["params"].pop("gamma", None)
                merged[key].update(section)

    p = merged["params"]
    if "gamma" in p and "dipole" in p:
        raise ConfigurationError("params: give gamma or dipole, not both")
    for key, value in p.items():
        _require_number(value, f"params.{key}")

    s = merged["scenario"]
    kind = s.get("kind")
    if kind not in _SCENARIO_KEYS:
        raise ConfigurationError(
            "scenario.kind must be 'single' or 'superposition'")
    _reject_unknown(s, _SCENARIO_KEYS[kind], "scenario")
    for key, value in s.items():
        if key != "kind":
            _require_number(value, f"scenario.{key}")

    g = merged["grid"]
    _require_number(g["min_over_lambda"], "grid.min_over_lambda")
    _require_number(g["max_over_lambda"], "grid.max_over_lambda")
    _require_int(g["points"], "grid.points")

    m = merged["modes"]
    _require_int(m["n_k"], "modes.n_k")
    _require_number(m["bandwidth_gammas"], "modes.bandwidth_gammas")
    _require_int(m["n_phi"], "modes.n_phi")
    _require_bool(m["flat_coupling"], "modes.flat_coupling")

    d = merged["decoherence"]
    _require_number(d["max_dx_over_lambda"], "decoherence.max_dx_over_lambda")
    _require_int(d["points"], "decoherence.points")
    if d["points"] < 2 or d["max_dx_over_lambda"] <= 0:
        raise ConfigurationError("decoherence range must be positive with >= 2 points")

    if not isinstance(merged["output"].get("dir"), str):
        raise ConfigurationError("output.dir must be a string")
    return merged


def _model_params(cfg: dict) -> ModelParams:
    p = cfg["params"]
    return ModelParams(omega0=p["omega0"], mu=p["mu"],
                       gamma=p.get("gamma"), dipole=p.get("dipole"))


def _scenario(cfg: dict, params: ModelParams) -> Scenario:
    s = cfg["scenario"]
    lam = params.wavelength
    width = s["width_over_lambda"] * lam
    if s["kind"] == "single":
        return Scenario.single(width=width,
                               center=s.get("center_over_lambda", 0.0) * lam)
    return Scenario.superposition(
        center_offset=s["center_offset_over_lambda"] * lam, width=width)


def _spatial_grid(cfg: dict, params: ModelParams) -> SpatialGrid:
    g = cfg["grid"]
    lam = params.wavelength
    return SpatialGrid.linspace(g["min_over_lambda"] * lam,
                                g["max_over_lambda"] * lam, g["points"])


def _mode_grid(cfg: dict, params: ModelParams) -> ModeGrid:
    m = cfg["modes"]
    return ModeGrid.build(params, n_k=m["n_k"],
                          bandwidth_gammas=m["bandwidth_gammas"],
                          n_phi=m["n_phi"], flat_coupling=m["flat_coupling"])


# ----------------------------------------------------------------------
# output plumbing


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a same-directory temp file + rename."""
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-recoilsim-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_csv(path: str, header: str, rows) -> None:
    lines = [header]
    lines.extend(rows)
    _atomic_write(path, "\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# subcommands


def cmd_decoherence_factor(cfg: dict, out_dir: str) -> int:
    """Tabulate F(dx) = J0^2(pi dx / lambda) on a half-open separation grid."""
    dec = cfg["decoherence"]
    n = dec["points"]
    # Half-open grid [0, max): n evenly spaced rows starting exactly at zero.
    dx = dec["max_dx_over_lambda"] * np.arange(n) / n
    f_values = bessel_j0(np.pi * dx) ** 2
    path = os.path.join(out_dir, "decoherence_factor.csv")
    _write_csv(path, "dx_over_lambda,F",
               (f"{_fmt(a)},{_fmt(b)}" for a, b in zip(dx, f_values)))
    print(f"wrote {path} ({n} rows)")
    return 0


def _density_rows(dg, lam: float):
    x_strings = [_fmt(v) for v in dg.grid.x_values / lam]
    for i, xi in enumerate(x_strings):
        row = dg.rho[i]
        for j, xj in enumerate(x_strings):
            v = row[j]
            yield f"{xi},{xj},{_fmt(v.real)},{_fmt(v.imag)},{_fmt(abs(v))}"


def cmd_evolve(cfg: dict, out_dir: str, emission: str | None,
               times: list[float] | None) -> int:
    """Density matrices for the configured scenario at each (time, emission)."""
    params = _model_params(cfg)
    lam = params.wavelength
    scenario = _scenario(cfg, params)
    grid = _spatial_grid(cfg, params)
    gamma_times = cfg["times"] if times is None else times
    flags = [True, False] if emission is None else [emission == "on"]

    # Compute everything up front: a validity-gate failure on any requested
    # time must leave the output directory untouched.
    sweeps = [(flag, scenario_sweep(scenario,
                                    [gt / params.gamma for gt in gamma_times],
                                    flag, grid, params))
              for flag in flags]

    entries = []
    for flag, runs in sweeps:
        tag = "on" if flag else "off"
        for gt, dg in zip(gamma_times, runs):
            name = f"density_gt{gt:g}_{tag}.csv"
            _write_csv(os.path.join(out_dir, name),
                       "x_over_lambda,xp_over_lambda,re_rho,im_rho,abs_rho",
                       _density_rows(dg, lam))
            length = coherence_length(dg)
            entries.append({
                "gamma_t": gt,
                "time": gt / params.gamma,
                "emission": flag,
                "file": name,
                "trace": dg.trace(),
                "purity": dg.purity(),
                "coherence_length_over_lambda": length.length / lam,
                "coherence_crossed": length.crossed,
                "diag_width_over_lambda": dg.diag_width() / lam,
            })

    summary = {
        "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "runs": entries,
    }
    path = os.path.join(out_dir, "evolve_summary.json")
    _atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(entries)} density files + {path}")
    return 0


def _oracle_amplitudes(cfg: dict, out_dir: str) -> int:
    params = _model_params(cfg)
    grid = _mode_grid(cfg, params)
    t_final = 5.0 / params.gamma
    run = OdeRun(params=params, grid=grid, t_span=(0.0, t_final),
                 sample_times=np.linspace(0.0, t_final, 51), tol=1e-10)
    trajectory = integrate_amplitudes(run)
    populations = trajectory.sector_populations
    norms = trajectory.norms
    rows = (
        f"{_fmt(t)},{_fmt(a.real)},{_fmt(a.imag)},{_fmt(n)},"
        f"{_fmt(pa)},{_fmt(pb)},{_fmt(pd)}"
        for t, a, n, (pa, pb, pd)
        in zip(trajectory.times, trajectory.a, norms, populations)
    )
    path = os.path.join(out_dir, "oracle_amplitudes.csv")
    _write_csv(path, "t,re_a,im_a,norm,pop_a,pop_b,pop_d", rows)
    decay = max_decay_error(trajectory)
    drift = float(np.abs(norms - norms[0]).max())
    print(f"wrote {path}")
    print(f"max |A|^2 decay deviation (within recurrence window): {decay:.3e}")
    print(f"max sector-norm drift: {drift:.3e}")
    if decay > DECAY_TOLERANCE:
        raise OracleToleranceError(
            f"decay_rate deviation {decay:.3e} > {DECAY_TOLERANCE}")
    return 0


def _oracle_quadrature(cfg: dict, out_dir: str) -> int:
    params = _model_params(cfg)
    scenario = _scenario(cfg, params)
    lam = params.wavelength
    t = (max(cfg["times"]) if cfg["times"] else 5.0) / params.gamma
    xs = np.linspace(-QUADRATURE_SPAN * lam, QUADRATURE_SPAN * lam,
                     QUADRATURE_POINTS)
    psi = np.asarray(psi_free(xs, t, scenario, params), dtype=complex)
    factorized = np.multiply.outer(psi, psi.conj()) * decoherence_factor(
        xs[:, None], xs[None, :], params)
    quad = np.empty_like(factorized)
    for i, x in enumerate(xs):
        for j, x2 in enumerate(xs):
            quad[i, j] = density_quadrature(x, x2, t, scenario, params,
                                            n_phi=256, include_offset=False)
    scale = float(np.abs(factorized).max())
    rows = (
        f"{_fmt(xs[i] / lam)},{_fmt(xs[j] / lam)},"
        f"{_fmt(quad[i, j].real)},{_fmt(quad[i, j].imag)},"
        f"{_fmt(factorized[i, j].real)},{_fmt(factorized[i, j].imag)},"
        f"{_fmt(abs(quad[i, j] - factorized[i, j]))}"
        for i in range(xs.size) for j in range(xs.size)
    )
    path = os.path.join(out_dir, "oracle_quadrature.csv")
    _write_csv(path, "x_over_lambda,xp_over_lambda,re_quad,im_quad,"
                     "re_fact,im_fact,abs_diff", rows)
    relative = float(np.abs(quad - factorized).max()) / scale
    print(f"wrote {path}")
    print(f"max |quadrature - factorized| / max|factorized|: {relative:.3e}")
    if relative > QUADRATURE_TOLERANCE:
        raise OracleToleranceError(
            f"quadrature deviation {relative:.3e} > {QUADRATURE_TOLERANCE}")
    return 0


def _oracle_rate(cfg: dict, out_dir: str) -> int:
    params = _model_params(cfg)
    grid = _mode_grid(cfg, params)
    check = ww_rate_check(grid, params)
    relative = abs(check.rate / check.expected - 1.0)
    path = os.path.join(out_dir, "oracle_rate.csv")
    _write_csv(path, "rate,expected,relative_error,flagged",
               [f"{_fmt(check.rate)},{_fmt(check.expected)},"
                f"{_fmt(relative)},{str(check.flagged).lower()}"])
    print(f"wrote {path}")
    print(f"pole-sum rate relative error: {relative:.3e}")
    if check.flagged or relative > RATE_TOLERANCE:
        raise OracleToleranceError(
            f"rate_deficit {relative:.3e} > {RATE_TOLERANCE} "
            "(grid bandwidth too small)")
    return 0


def cmd_oracle(cfg: dict, out_dir: str, which: str) -> int:
    runner = {"amplitudes": _oracle_amplitudes,
              "quadrature": _oracle_quadrature,
              "rate": _oracle_rate}[which]
    return runner(cfg, out_dir)


# ----------------------------------------------------------------------
# entry point


def _parse_times(text: str) -> list[float]:
    stripped = text.strip()
    if not stripped:
        return []
    try:
        return [float(part) for part in stripped.split(",")]
    except ValueError:
        raise ConfigurationError(f"--times must be a comma list of numbers, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recoilsim",
        description="Spontaneous-emission decoherence of two-atom relative motion")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config overlaid on the defaults")
        p.add_argument("--out", help="output directory (default: config output.dir)")

    p_dec = sub.add_parser("decoherence-factor",
                           help="tabulate F(dx) = J0^2(pi dx/lambda)")
    add_common(p_dec)

    p_evo = sub.add_parser("evolve",
                           help="density matrices over the configured times")
    add_common(p_evo)
    p_evo.add_argument("--emission", choices=["on", "off"],
                       help="restrict to one emission flag (default: both)")
    p_evo.add_argument("--times",
                       help="comma list of times in 1/gamma units "
                            "(default: config times)")

    p_orc = sub.add_parser("oracle", help="run a brute-force validator")
    add_common(p_orc)
    p_orc.add_argument("--which", required=True,
                       choices=["amplitudes", "quadrature", "rate"])
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, else usage error
        return 0 if exc.code == 0 else 1

    try:
        cfg = load_config(ns.config)
        out_dir = ns.out if ns.out is not None else cfg["output"]["dir"]
        os.makedirs(out_dir, exist_ok=True)
        if ns.command == "decoherence-factor":
            return cmd_decoherence_factor(cfg, out_dir)
        if ns.command == "evolve":
            times = _parse_times(ns.times) if ns.times is not None else None
            return cmd_evolve(cfg, out_dir, ns.emission, times)
        return cmd_oracle(cfg, out_dir, ns.which)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except ModelValidityError as exc:
        print(f"validity gate: {exc}", file=sys.stderr)
        return 2
    except (OracleToleranceError, NormDriftFailure, StiffnessFailure) as exc:
        print(f"oracle tolerance breach: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
