"""Command-line entry point: `cdt-sim [flags] <command> [name]`.

Commands: spectrum, propagate, manifold, scenario <name|all>, calibrate.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import export
from .config import RunConfig, load_config, serialize_config
from .errors import CDTSimError, ValidationError
from .floquet import bessel_zero_amplitude, fit_argument_scale, manifold_scan
from .geometry import WaveguideGeometry
from .propagate import Frame, Launch, fluorescence_render, initial_field, kh_transform, propagate_record
from .scenarios import SpectrumCache, builtin_scenarios, run_scenario
from .spectrum import calibrate_ns, dipole_element, parities, solve_spectrum, tunneling_period, two_level

COMMANDS = ("spectrum", "propagate", "manifold", "scenario", "calibrate")


class _Run:
    """State shared by the command handlers of one invocation."""

    def __init__(self, config: RunConfig, quiet: bool):
        self.config = config
        self.quiet = quiet
        self.out = export.ArtifactWriter(config.out_dir)
        self.manifest: dict = {}
        self._geom = None

    def say(self, text: str) -> None:
        if not self.quiet:
            print(text)

    def base_geometry(self) -> WaveguideGeometry:
        """Straight-guide geometry with n_s calibrated to the target doublet period (if enabled)."""
        if self._geom is None:
            c = self.config
            geom = c.geometry().with_(A=0.0)
            if c.calibrate:
                cal = calibrate_ns(geom, c.target_d12, grid=c.grid(), slab=c.slab())
                geom = geom.with_(n_s=cal.n_s)
                self.manifest["calibration"] = {"n_s": cal.n_s, "d12_um": cal.d12, "target_d12_um": cal.target_d12}
            self._geom = geom
        return self._geom


def cmd_calibrate(run: _Run, name=None) -> int:
    c = run.config
    cal = calibrate_ns(c.geometry().with_(A=0.0), c.target_d12, grid=c.grid(), slab=c.slab())
    run.out.json("calibration.json", {"n_s": cal.n_s, "d12_um": cal.d12, "target_d12_um": cal.target_d12,
                                      "relative_error": cal.relative_error, "evaluations": cal.evaluations})
    run.say(f"n_s = {cal.n_s:.10f}\nd12 = {cal.d12:.3f} um (target {cal.target_d12:g} um)")
    return 0


def cmd_spectrum(run: _Run, name=None) -> int:
    c = run.config
    geom = run.base_geometry()
    potential, bs = solve_spectrum(geom, c.grid(), c.slab())
    par = parities(bs)
    lb = geom.lambda_bar
    E = bs.energies
    periods = {f"d1{l + 1}_um": tunneling_period(E[0], E[l], lb) for l in range(1, len(E))}
    run.out.csv("spectrum/energies.csv", ("l", "E_l", "parity"), [(l + 1, e, p) for l, (e, p) in enumerate(zip(E, par))])
    run.out.csv("spectrum/states.csv", ("x_um", *[f"xi_{l + 1}" for l in range(len(E))]),
                np.column_stack([bs.x, bs.states.T]).tolist())
    run.out.csv("spectrum/potential.csv", ("x_um", "V_e"), zip(potential.x, potential.values))
    mu12 = dipole_element(bs, 0, 1) if len(E) > 1 else None
    run.out.json("spectrum/summary.json", {"n_s": geom.n_s, "energies": E, "parities": par, "mu12_um": mu12,
                                           **periods})
    run.say(f"{len(E)} bound states, n_s = {geom.n_s:.10f}")
    for l, (e, p) in enumerate(zip(E, par)):
        run.say(f"  E_{l + 1} = {e:+.9e}  ({'even' if p > 0 else 'odd'})")
    for k, v in periods.items():
        run.say(f"  {k} = {v:.2f}")
    return 0


def cmd_propagate(run: _Run, name=None) -> int:
    c = run.config
    base = run.base_geometry()
    geom = base.with_(A=c.A, Lambda=c.Lambda)
    potential, bs = solve_spectrum(base, c.grid(), c.slab())
    field0 = initial_field(Launch(c.launch), geom, bs, potential.grid, Frame.LAB)
    if Frame(c.frame) is Frame.KH:
        field0 = kh_transform(field0, geom)
    record = propagate_record(field0, geom, potential, c.z_end, c.sample_every, c.dz, c.absorber())
    image = fluorescence_render(record, c.absorption_length, c.per_frame_rescale)
    export.write_record(run.out, "propagate", record, image,
                        {"absorption_length_um": c.absorption_length, "per_frame_rescale": c.per_frame_rescale},
                        c.pgm_format)
    run.out.json("propagate/summary.json", {"A_um": geom.A, "Lambda_um": geom.Lambda, "n_s": geom.n_s,
                                            "launch": c.launch, "frame": c.frame,
                                            "min_P_L": record.P_L.min(), "final_P_L": record.P_L[-1],
                                            "final_P_R": record.P_R[-1], "final_norm": record.norm[-1],
                                            "absorbed": record.absorbed[-1]})
    run.say(f"z = {record.z_samples[-1]:g} um: P_L = {record.P_L[-1]:.4f}, P_R = {record.P_R[-1]:.4f}, "
            f"min P_L = {record.P_L.min():.4f}")
    return 0


def cmd_manifold(run: _Run, name=None) -> int:
    c = run.config
    base = run.base_geometry()
    _, bs = solve_spectrum(base, c.grid(), c.slab())
    tls = two_level(bs, base)
    curve = manifold_scan(tls, base, (c.manifold_min, c.manifold_max), c.manifold_samples)
    rows = list(zip(curve.Lambda, curve.A_star, curve.delta_ratio))
    run.out.csv("manifold/manifold.csv", ("Lambda_um", "A_star_um", "delta_eps_over_doublet"), rows)
    scale = fit_argument_scale(curve, tls, min(1000.0, c.manifold_max)) if len(curve) else float("nan")
    run.out.csv("manifold/comparison.csv",
                ("Lambda_um", "A_star_um", "delta_eps_over_doublet", "A_bessel_um", "A_bessel_fitted_um"),
                [(lam, a, d, bessel_zero_amplitude(tls, lam), bessel_zero_amplitude(tls, lam, scale))
                 for lam, a, d in rows])
    slope = curve.slope() if len(curve) else float("nan")
    run.out.json("manifold/summary.json", {"slope": slope, "argument_scale": scale, "omitted_Lambda_um": curve.omitted,
                                           "mu12_um": tls.mu12, "splitting": tls.splitting})
    run.say(f"{len(curve)} crossings, slope A*/Lambda = {slope:.4e}, fitted Bessel argument scale = {scale:.4f}")
    if curve.omitted:
        run.say(f"no crossing bracketed at Lambda = {curve.omitted}")
    return 0


def cmd_scenario(run: _Run, name=None) -> int:
    c = run.config
    name = name or c.scenario
    base = run.base_geometry()
    scenarios = builtin_scenarios(base, c.launch_right)
    known = [s.name for s in scenarios]
    if name != "all":
        if name not in known:
            raise ValidationError("scenario", f"unknown scenario {name!r}; choose from {known + ['all']}")
        scenarios = [s for s in scenarios if s.name == name]
    cache = SpectrumCache(base, c.grid(), c.slab())
    status = {}
    provenance = {}
    for s in scenarios:
        s = replace(s, z_end=min(s.z_end, c.z_end))
        report = run_scenario(s, cache, c.dz, c.absorber(), c.frame)
        image = fluorescence_render(report.record, c.absorption_length, c.per_frame_rescale)
        files = export.write_record(run.out, f"scenarios/{s.name}", report.record, image,
                                    {"absorption_length_um": c.absorption_length,
                                     "per_frame_rescale": c.per_frame_rescale}, c.pgm_format)
        report.artifacts = files + [f"scenarios/{s.name}/report.json"]
        run.out.json(f"scenarios/{s.name}/report.json", report.to_json())
        status[s.name] = report.passed
        provenance[s.name] = {e["id"]: e["provenance"] for e in report.expectations}
        run.say(f"{'PASS' if report.passed else 'FAIL'}  {s.name}")
        for e in report.expectations:
            run.say(f"      {'ok  ' if e['pass'] else 'FAIL'} {e['id']} = {e['actual']:.4g} (expected {e['expected']}, "
                    f"{e['provenance']})")
    run.manifest["scenarios"] = status
    run.manifest["expectation_provenance"] = provenance
    return 0 if all(status.values()) else 1


HANDLERS = {"spectrum": cmd_spectrum, "propagate": cmd_propagate, "manifold": cmd_manifold,
            "scenario": cmd_scenario, "calibrate": cmd_calibrate}


def dispatch(command: str, config: RunConfig, name: str | None = None, quiet: bool = False) -> int:
    """Run one command; 0 on success, 1 if scenario expectations failed, 2 on errors."""
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    run = _Run(config, quiet)
    try:
        code = HANDLERS[command](run, name)
    except (CDTSimError, ValueError) as exc:
        err = {"error": getattr(exc, "code", "invalid_argument"), "message": str(exc), "command": command}
        if isinstance(exc, ValidationError):
            err["key"] = exc.key
        print(json.dumps(err), file=sys.stderr)
        return 2
    run.out.path("config.txt").write_text(serialize_config(config), encoding="utf-8")
    run.out.manifest({"command": command, "exit_status": code, **run.manifest})
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdt-sim", description="Coherent destruction of tunneling in curved "
                                                            "optical waveguide couplers.")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("--scenario", help="scenario name or 'all' (overrides scenario)")
    p.add_argument("--quiet", action="store_true", help="suppress the console summary")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("name", nargs="?", help="scenario name or 'all' for the scenario command")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        overrides = {}
        if args.out:
            overrides["out_dir"] = args.out
        if args.scenario:
            overrides["scenario"] = args.scenario
        config = replace(config, **overrides)
    except (CDTSimError, OSError) as exc:
        err = {"error": getattr(exc, "code", "io"), "message": str(exc)}
        for attr in ("key", "line"):
            if hasattr(exc, attr):
                err[attr] = getattr(exc, attr)
        print(json.dumps(err), file=sys.stderr)
        return 2
    return dispatch(args.command, config, args.name, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
