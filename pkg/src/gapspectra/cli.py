"""Command line entry point ``gapspectra``.

Every subcommand reads a JSON config (``--config``); flags override the
matching config fields.  Results are printed as JSON and, with ``--out``,
also written into that directory.  Exit codes: 0 success, 2 configuration
error, 3 solver failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from .asymptotics import (predict_comparison, predict_dirac_long, predict_dirac_second_order,
                          predict_schrodinger_long, predict_schrodinger_short)
from .birman_schwinger import find_bound_state, find_resonance
from .grid import GridSpec, dirac_eigen_in_gap, schrodinger_ground_state
from .harness import (CONFIG_SCHEMA, ConfigError, SweepConfig, _check_keys, _grid_window,
                      _scalar_entry, build_potential, fit_coefficients, fit_long_range,
                      load_config, quad_from, run_sweep, write_csv)
from .minmax import solve_minmax
from .moments import MomentError, compute_moments
from .potentials import ParameterError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
COMMANDS = ("moments", "predict", "solve-bs", "solve-grid", "solve-minmax", "sweep", "fit")


def _parser():
    p = argparse.ArgumentParser(prog="gapspectra", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--m", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--threshold", choices=("plus_m", "minus_m"))
    p.add_argument("--sheet", choices=("physical", "second"))
    p.add_argument("--quad-panels", type=int)
    p.add_argument("--quad-order", type=int)
    p.add_argument("--trunc-radius", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--window", type=float, nargs=2)
    p.add_argument("--operator", choices=("dirac", "schrodinger"))
    return p


def _merge(doc, args):
    """Apply command line overrides to the config document."""
    doc = json.loads(json.dumps(doc))
    for key in ("m", "eps", "threshold", "sheet", "operator"):
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    if args.eps is not None and args.command not in ("sweep", "fit"):
        doc.pop("eps_list", None)
    bs = doc.setdefault("bs", {})
    for flag, key in (("quad_panels", "panels"), ("quad_order", "order"),
                      ("trunc_radius", "trunc_radius")):
        if getattr(args, flag) is not None:
            bs[key] = getattr(args, flag)
    section = {"solve-minmax": "minmax"}.get(args.command, "grid")
    if args.command == "solve-grid" and doc.get("operator") == "schrodinger":
        section = "schrodinger"
    if args.L is not None or args.N is not None or args.window is not None:
        g = doc.setdefault(section, {})
        if args.L is not None:
            g["L"] = args.L
        if args.N is not None:
            g["N"] = args.N
        if args.window is not None:
            g["window"] = list(args.window)
    return doc


def _single_eps(doc):
    if "eps" in doc:
        return float(doc["eps"])
    if doc.get("eps_list"):
        return float(doc["eps_list"][0])
    raise ConfigError("this command needs 'eps'")


def _cmd_moments(doc):
    V = build_potential(doc["potential"])
    return compute_moments(V, float(doc.get("m", 1.0))).as_dict()


def _cmd_predict(doc):
    V = build_potential(doc["potential"])
    m, eps = float(doc.get("m", 1.0)), _single_eps(doc)
    thr = doc.get("threshold", "plus_m")
    out = {}
    if V.finite_moments >= 1:
        mom = compute_moments(V, m)
        k = 0 if thr == "plus_m" else 1
        U = mom.U[k, k] * (1 if thr == "plus_m" else -1)
        cross = mom.sch_cross if k == 0 else None
        out["dirac_second_order"] = predict_dirac_second_order(mom, m, eps, thr).as_dict()
        out["schrodinger_short_1"] = predict_schrodinger_short(U, 0.0, m, eps, 1).as_dict()
        if cross is not None:
            for form in ("stated", "corrected"):
                out[f"schrodinger_short_2_{form}"] = predict_schrodinger_short(
                    U, cross, m, eps, 2, form).as_dict()
    if 0 < eps < 1:
        out["schrodinger_long"] = predict_schrodinger_long(m, eps).as_dict()
        out["dirac_long"] = predict_dirac_long(m, eps).as_dict()
    if doc.get("schrodinger") is not None:
        s = doc["schrodinger"]
        lam = schrodinger_ground_state(_scalar_entry(V, 0, "plus_m"), m, eps,
                                       GridSpec(float(s.get("L", 500.0)), int(s.get("N", 100000))),
                                       breakpoints=V.breakpoints)
        out["comparison"] = predict_comparison(lam or 0.0, m, eps).as_dict()
    return out


def _cmd_solve_bs(doc):
    V = build_potential(doc["potential"])
    m, eps = float(doc.get("m", 1.0)), _single_eps(doc)
    thr = doc.get("threshold", "plus_m")
    quad = quad_from(doc.get("bs", {}))
    if doc.get("sheet", "physical") == "second":
        root = find_resonance(V, m, eps, threshold=thr, quad=quad)
    else:
        root = find_bound_state(V, m, eps, threshold=thr, quad=quad)
    return {"root": None if root is None else root.as_dict()}


def _cmd_solve_grid(doc):
    V = build_potential(doc["potential"])
    m, eps = float(doc.get("m", 1.0)), _single_eps(doc)
    thr = doc.get("threshold", "plus_m")
    if doc.get("operator", "dirac") == "schrodinger":
        s = doc.get("schrodinger", {})
        lam = schrodinger_ground_state(_scalar_entry(V, 0 if thr == "plus_m" else 1, thr), m, eps,
                                       GridSpec(float(s.get("L", 500.0)), int(s.get("N", 100000))),
                                       breakpoints=V.breakpoints)
        return {"lambda": lam}
    g = doc.get("grid", {})
    spec = GridSpec(float(g.get("L", 200.0)), int(g.get("N", 40000)))
    window = tuple(g["window"]) if g.get("window") else (-m * (1 - 1e-9), m * (1 - 1e-9))
    sigma = g.get("sigma")
    found = dirac_eigen_in_gap(V, m, eps, spec, window=window,
                               sigma=0.0 if sigma is None else sigma)
    return {"eigenvalues": [f.as_dict() for f in found]}


def _cmd_solve_minmax(doc):
    V = build_potential(doc["potential"])
    m, eps = float(doc.get("m", 1.0)), _single_eps(doc)
    g = doc.get("minmax", {})
    res = solve_minmax(V, m, eps, GridSpec(float(g.get("L", 200.0)), int(g.get("N", 200))))
    return res.as_dict()


def _cmd_sweep(doc, out_dir):
    config = SweepConfig.from_dict(doc)
    report = run_sweep(config)
    _write_outputs(config, report, out_dir)
    return report.as_dict()


def _cmd_fit(doc, out_dir):
    config = SweepConfig.from_dict(doc)
    report = run_sweep(config)
    fitted = {}
    if report.moments is not None:
        try:
            fitted["coefficients"] = fit_coefficients(report, config.m, report.moments,
                                                      config.threshold, config.solver_tol)
        except ParameterError as exc:
            fitted["coefficients_error"] = str(exc)
    else:
        fitted["long_range"] = fit_long_range(report, config.m)
    _write_outputs(config, report, out_dir)
    return {"fitted": _plain(fitted), "report": report.as_dict()}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _write_outputs(config, report, out_dir):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    csv_name = config.outputs.get("csv", "sweep.csv")
    json_name = config.outputs.get("json", "report.json")
    write_csv(report, os.path.join(out_dir, csv_name))
    with open(os.path.join(out_dir, json_name), "w") as fh:
        json.dump(_plain(report.as_dict()), fh, indent=2)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        doc = _merge(load_config(args.config), args)
        _check_keys(doc, CONFIG_SCHEMA)
        if "potential" not in doc:
            raise ConfigError("config needs a 'potential'")
        handlers = {
            "moments": _cmd_moments,
            "predict": _cmd_predict,
            "solve-bs": _cmd_solve_bs,
            "solve-grid": _cmd_solve_grid,
            "solve-minmax": _cmd_solve_minmax,
        }
        if args.command in handlers:
            result = handlers[args.command](doc)
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                name = args.command.replace("-", "_") + ".json"
                with open(os.path.join(args.out, name), "w") as fh:
                    json.dump(_plain(result), fh, indent=2)
        elif args.command == "sweep":
            result = _cmd_sweep(doc, args.out)
        else:
            result = _cmd_fit(doc, args.out)
    except (ConfigError, ParameterError, MomentError, KeyError, TypeError) as exc:
        print(f"gapspectra: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # any solver failure
        print(f"gapspectra: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(json.dumps(_plain(result), indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
