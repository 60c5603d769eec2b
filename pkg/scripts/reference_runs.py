"""Reference BPM runs behind the DERIVED scenario thresholds.

Runs all seven scenarios on the calibrated device and writes their metrics to
a JSON file, together with dz/dx refinements and a no-absorber control for
the CDT points. The thresholds frozen in cdt_sim.scenarios were read off this
output:

    python3 scripts/reference_runs.py --out reference_runs.json
"""

import argparse
import json
import time

from cdt_sim.export import write_json
from cdt_sim.geometry import Grid, WaveguideGeometry
from cdt_sim.propagate import Absorber, Frame
from cdt_sim.scenarios import SpectrumCache, builtin_scenarios, run_scenario, scenario_by_name
from cdt_sim.spectrum import calibrate_ns


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="reference_runs.json")
    p.add_argument("--refine", action="store_true", help="also rerun the CDT points with dz/2, dx/2 and a wider domain")
    args = p.parse_args()

    cal = calibrate_ns(WaveguideGeometry())
    geom = WaveguideGeometry(n_s=cal.n_s)
    cache = SpectrumCache(geom)
    result = {"n_s": cal.n_s, "d12_um": cal.d12, "scenarios": {}, "refinements": {}}
    for s in builtin_scenarios(geom):
        t0 = time.perf_counter()
        rep = run_scenario(s, cache)
        result["scenarios"][s.name] = {"metrics": rep.metrics, "pass": rep.passed}
        print(f"{s.name:18s} {time.perf_counter() - t0:6.1f} s  " +
              "  ".join(f"{k}={v:.4g}" for k, v in rep.metrics.items()))

    if args.refine:
        fine_dx = SpectrumCache(geom, Grid(dx=0.025))
        wide = SpectrumCache(geom, Grid(-160, 160, 0.05))
        for name in ("cdt-1", "cdt-2", "cdt-3"):
            s = scenario_by_name(geom, name)
            variants = {
                "dz_half": run_scenario(s, cache, dz=0.25),
                "dx_half": run_scenario(s, fine_dx),
                "wide_domain": run_scenario(s, wide),
                "kh_frame": run_scenario(s, cache, frame=Frame.KH),
                "weak_absorber": run_scenario(s, cache, absorber=Absorber(30.0, 0.01)),
            }
            result["refinements"][name] = {k: v.metrics["min_P_initial"] for k, v in variants.items()}
            print(name, result["refinements"][name])
    write_json(args.out, result)


if __name__ == "__main__":
    main()
