"""Batch command surface: run configurations, result files, plots.

Commands map one-to-one onto the library modules: spectrum, foliate,
plateau-sweep, jacobi-suite, diagnostics.  A run reads an optional
key=value config file, applies command-line overrides, executes the
experiment into an output directory, and writes a machine-readable
summary with one pass/fail entry per invariant checked.  Identical
configs produce byte-identical outputs: no timestamps, fixed float
formatting, seeded randomness.

Exit status: 0 all checks passed, 1 an invariant failed, 2 invalid
config, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .cones import ConeSpec, cone_density, growth_gap, spectrum_rows
from .errors import ConfigError, ConvergenceError
from .jacobi import (admissible_levels, annulus_norm, make_field,
                     random_spectral_field, solve_dirichlet_ball_bounded,
                     three_annulus_check, write_field_json, write_norms_csv)
from .measures import density, diagnostics_summary, write_density_csv
from .plateau import sweep_boundary, write_sweep_csv
from .profiles import (default_fit_window, fit_decay, graph_over_cone,
                       scale_curve, shoot_foliate, write_curve_csv)

COMMANDS = ("spectrum", "foliate", "plateau-sweep", "jacobi-suite",
            "diagnostics")

MAX_OFFSET = math.pi / 8.0


@dataclass(frozen=True)
class RunConfig:
    """One experiment run.  Every field has a documented default.

    p, q          cone factors (default 3, 3)
    max_degree    link mode truncation for spectra and random fields (3)
    r_max         outer radius for foliate shooting (150)
    tol           command tolerance: Plateau boundary residual for
                  plateau-sweep (default 1e-8), cone-angle settling for
                  foliate (default 1e-3 when not set explicitly)
    t_min, t_max  boundary offset range for sweeps (-0.05, 0.05)
    samples       offsets per sweep (21)
    rho0          annulus ratio for the growth dichotomy (0.5)
    tau           density pinning threshold (0.01)
    eps           graphicality smallness threshold (0.1)
    scale         leaf scale used by the diagnostics command (0.02)
    seed          RNG seed for the jacobi suite (0)
    fields        number of random fields in the jacobi suite (1000)
    out           output directory (./conelab-out, env CONELAB_OUT)
    plot          also emit SVG plots derived from the CSVs (false)
    """

    command: str
    p: int = 3
    q: int = 3
    max_degree: int = 3
    r_max: float = 150.0
    tol: float = 1e-8
    t_min: float = -0.05
    t_max: float = 0.05
    samples: int = 21
    rho0: float = 0.5
    tau: float = 0.01
    eps: float = 0.1
    scale: float = 0.02
    seed: int = 0
    fields: int = 1000
    out: str = "./conelab-out"
    plot: bool = False

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "command":
                continue
            val = getattr(self, f.name)
            if isinstance(val, float):
                val = format(val, ".17g")
            elif isinstance(val, bool):
                val = "true" if val else "false"
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        text = self.command + "\n" + "\n".join(
            line for line in self.to_text().splitlines()
            if not line.startswith(("out ", "plot ")))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


_INT_KEYS = {"p", "q", "max_degree", "samples", "seed", "fields"}
_FLOAT_KEYS = {"r_max", "tol", "t_min", "t_max", "rho0", "tau", "eps",
               "scale"}
_BOOL_KEYS = {"plot"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | {"out"}


def _parse_entries(text: str, errors: list) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            errors.append(f"line {lineno}: expected key = value, got"
                          f" {raw.strip()!r}")
            continue
        key, val = key.strip().replace("-", "_"), val.strip()
        if key not in _ALL_KEYS:
            errors.append(f"unknown key {key!r}")
            continue
        values[key] = val
    return values


def _coerce(values: dict, errors: list) -> dict:
    out = {}
    for key, val in values.items():
        if isinstance(val, (int, float, bool)):
            out[key] = val
            continue
        try:
            if key in _INT_KEYS:
                out[key] = int(val)
            elif key in _FLOAT_KEYS:
                out[key] = float(val)
            elif key in _BOOL_KEYS:
                if val.lower() not in ("true", "false", "0", "1"):
                    raise ValueError
                out[key] = val.lower() in ("true", "1")
            else:
                out[key] = val
        except ValueError:
            errors.append(f"{key}: cannot parse {val!r}")
    return out


def _check_constraints(cfg: RunConfig, errors: list):
    if cfg.command not in COMMANDS:
        errors.append(f"command: unknown command {cfg.command!r}; choose"
                      f" from {', '.join(COMMANDS)}")
    if cfg.p < 1:
        errors.append(f"p: must be >= 1, got {cfg.p}")
    if cfg.q < 1:
        errors.append(f"q: must be >= 1, got {cfg.q}")
    if cfg.max_degree < 0:
        errors.append(f"max_degree: must be >= 0, got {cfg.max_degree}")
    if not cfg.r_max > 10:
        errors.append(f"r_max: must exceed 10, got {cfg.r_max}")
    if not cfg.tol > 0:
        errors.append(f"tol: must be positive, got {cfg.tol}")
    if not 0 < cfg.rho0 < 1:
        errors.append(f"rho0: must lie in (0,1), got {cfg.rho0}")
    if not cfg.tau > 0:
        errors.append(f"tau: must be positive, got {cfg.tau}")
    if not cfg.eps > 0:
        errors.append(f"eps: must be positive, got {cfg.eps}")
    if not cfg.scale > 0:
        errors.append(f"scale: must be positive, got {cfg.scale}")
    if cfg.samples < 1:
        errors.append(f"samples: must be >= 1, got {cfg.samples}")
    if cfg.seed < 0:
        errors.append(f"seed: must be >= 0, got {cfg.seed}")
    if cfg.fields < 1:
        errors.append(f"fields: must be >= 1, got {cfg.fields}")
    if cfg.t_min > cfg.t_max:
        errors.append(f"t_min: must not exceed t_max, got"
                      f" [{cfg.t_min}, {cfg.t_max}]")
    for name, val in (("t_min", cfg.t_min), ("t_max", cfg.t_max)):
        if not -MAX_OFFSET < val < MAX_OFFSET:
            errors.append(f"{name}: must lie in (-pi/8, pi/8), got {val}")


def validate_config(text: str, command: str, overrides=None) -> RunConfig:
    """Parse key=value text, apply overrides, and validate every entry.

    All problems are collected into a single ConfigError rather than
    stopping at the first.
    """
    errors: list = []
    values = _parse_entries(text, errors)
    if overrides:
        for key, val in overrides.items():
            if key not in _ALL_KEYS:
                errors.append(f"unknown key {key!r}")
            elif val is not None:
                values[key] = val
    coerced = _coerce(values, errors)
    cfg = RunConfig(command=command,
                    **{k: v for k, v in coerced.items() if k in _ALL_KEYS})
    if "tol" not in coerced and command == "foliate":
        cfg = replace(cfg, tol=1e-3)
    _check_constraints(cfg, errors)
    if errors:
        raise ConfigError(errors)
    out_from_flag = bool(overrides) and overrides.get("out") is not None
    if "CONELAB_OUT" in os.environ and not out_from_flag:
        cfg = replace(cfg, out=os.environ["CONELAB_OUT"])
    return cfg


def _meta(cfg: RunConfig):
    return [("version", __version__), ("config", cfg.config_hash()),
            ("seed", cfg.seed)]


def _fmt(x) -> str:
    return format(x, ".17g") if isinstance(x, float) else str(x)


def _run_spectrum(cfg: RunConfig, out, summary):
    cone = ConeSpec(cfg.p, cfg.q)
    rows = spectrum_rows(cone, cfg.max_degree)
    path = os.path.join(out, "spectrum.csv")
    with open(path, "w") as fh:
        for key, val in _meta(cfg):
            fh.write(f"# {key}={val}\n")
        fh.write("k,l,degeneracy,mu,gamma_plus,gamma_minus\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    n = cone.n
    root_sum_ok = all(abs(gp + gm - (2 - n)) < 1e-12
                      for _, _, _, mu, gp, gm in rows)
    root_prod_ok = all(abs(gp * gm + mu) < 1e-9 * max(1.0, abs(mu))
                       for _, _, _, mu, gp, gm in rows)
    summary["checks"]["indicial_root_sum"] = root_sum_ok
    summary["checks"]["indicial_root_product"] = root_prod_ok
    summary["checks"]["degeneracies_positive"] = all(
        row[2] >= 1 for row in rows)
    if cone.is_minimizing:
        summary["checks"]["growth_gap_positive"] = \
            growth_gap(cone, cfg.max_degree) > 0
    summary["outputs"].append(path)


def _run_foliate(cfg: RunConfig, out, summary):
    cone = ConeSpec(cfg.p, cfg.q)
    gamma = cone_density(cone).gamma
    fit_info = {}
    for sign, name in (("+", "foliate_plus"), ("-", "foliate_minus")):
        curve = shoot_foliate(cone, sign, cfg.r_max, cfg.tol)
        path = os.path.join(out, f"{name}.csv")
        write_curve_csv(curve, path, extra_meta=_meta(cfg))
        summary["outputs"].append(path)
        graph = graph_over_cone(curve)
        r_lo, r_hi = default_fit_window(graph)
        fit = fit_decay(graph, r_lo, r_hi)
        fit_info[name] = {"coefficient": fit.coefficient,
                          "exponent": fit.exponent,
                          "residual": fit.residual,
                          "window": [r_lo, r_hi]}
        summary["checks"][f"{name}_exponent_near_gamma"] = \
            abs(fit.exponent - gamma) < 0.05 * abs(gamma)
        summary["checks"][f"{name}_fit_residual_small"] = fit.residual < 0.05
    fit_path = os.path.join(out, "foliate_fits.json")
    with open(fit_path, "w") as fh:
        json.dump(fit_info, fh, indent=1, sort_keys=True)
        fh.write("\n")
    summary["outputs"].append(fit_path)


def _run_plateau_sweep(cfg: RunConfig, out, summary):
    cone = ConeSpec(cfg.p, cfg.q)
    result = sweep_boundary(cone, cfg.t_min, cfg.t_max, cfg.samples,
                            tol=cfg.tol)
    path = os.path.join(out, "sweep.csv")
    write_sweep_csv(result, path, meta=_meta(cfg))
    summary["outputs"].append(path)
    summary["checks"]["all_offsets_solved"] = not result.failures
    summary["checks"]["solutions_disjoint"] = result.min_separation > 0
    summary["checks"]["mass_bound"] = all(result.mass_bound_ok)
    summary["checks"]["continuity_modulus_finite"] = \
        math.isfinite(result.continuity_modulus) or len(result.solutions) < 2
    gaps = [hi - lo for lo, hi in result.barrier_bounds]
    summary["checks"]["barrier_gap_small"] = all(g < 1e-6 for g in gaps)
    lam = {t: hi for t, (lo, hi) in zip(result.offsets,
                                        result.barrier_bounds)}
    ts = sorted(lam)
    summary["checks"]["barrier_monotone"] = all(
        lam[a] > lam[b] if a < b <= 0 else lam[a] < lam[b]
        for a, b in zip(ts[:-1], ts[1:]) if (b <= 0) or (a >= 0))
    if result.failures:
        summary["failures"] = [[t, msg] for t, msg in result.failures]


def _run_jacobi_suite(cfg: RunConfig, out, summary):
    cone = ConeSpec(cfg.p, cfg.q)
    rng = np.random.default_rng(cfg.seed)
    violations = 0
    checked = 0
    for i in range(cfg.fields):
        if i % 2 == 0:
            field = random_spectral_field(cone, rng,
                                          max_degree=cfg.max_degree)
        else:
            field = random_spectral_field(cone, rng, r_inner=cfg.rho0 ** 5,
                                          max_degree=cfg.max_degree)
        for k in admissible_levels(field, cfg.rho0):
            hyp, concl = three_annulus_check(field, cfg.rho0, k)
            checked += 1
            if hyp and not concl:
                violations += 1
        if i == 0:
            fpath = os.path.join(out, "field_0.json")
            write_field_json(field, fpath)
            npath = os.path.join(out, "norms_0.csv")
            write_norms_csv(field, cfg.rho0,
                            admissible_levels(field, cfg.rho0), npath,
                            meta=_meta(cfg))
            summary["outputs"].extend([fpath, npath])
    summary["checks"]["three_annulus_no_violations"] = violations == 0
    summary["levels_checked"] = checked

    # pure-mode closed form against direct quadrature
    pure = make_field(cone, {(1, 0): (0.0, 1.0)}, cfg.rho0 ** 6, 1.0)
    grid = np.geomspace(cfg.rho0 ** 6, 1.0, 20001)
    vals = grid ** pure.modes[0].entry.gamma_minus
    exact = annulus_norm(pure, cfg.rho0, 2)
    sampled = annulus_norm((grid, vals), cfg.rho0, 2)
    summary["checks"]["norm_closed_form_matches_quadrature"] = \
        abs(exact - sampled) < 1e-6 * exact

    zero = solve_dirichlet_ball_bounded(
        cone, {(k, l): 0.0 for k in range(cfg.max_degree + 1)
               for l in range(cfg.max_degree + 1)})
    summary["checks"]["dirichlet_rigidity_zero_data"] = all(
        m.c_plus == 0.0 and m.c_minus == 0.0 for m in zero.modes)


def _run_diagnostics(cfg: RunConfig, out, summary):
    cone = ConeSpec(cfg.p, cfg.q)
    diag = {}
    for sign, name in (("+", "foliate_plus"), ("-", "foliate_minus")):
        leaf = scale_curve(shoot_foliate(cone, sign, cfg.r_max), cfg.scale)
        report = diagnostics_summary(leaf, tau=cfg.tau, eps=cfg.eps)
        radii = np.geomspace(cfg.scale, 1.0, 49)
        profile = density(leaf, (0.0, 0.0), radii)
        dpath = os.path.join(out, f"density_{name}.csv")
        write_density_csv(profile, dpath, meta=_meta(cfg))
        summary["outputs"].append(dpath)
        diag[name] = report
        summary["checks"][f"{name}_monotone"] = \
            profile.max_violation < 1e-8
        summary["checks"][f"{name}_mass_bound"] = report["mass_bound_ok"]
        summary["checks"][f"{name}_density_pins_cone"] = (
            report["density_radius"] is not None)
    jpath = os.path.join(out, "diagnostics.json")
    with open(jpath, "w") as fh:
        json.dump(diag, fh, indent=1, sort_keys=True)
        fh.write("\n")
    summary["outputs"].append(jpath)


def _emit_plots(cfg: RunConfig, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    def load(name):
        with open(os.path.join(out, name)) as fh:
            rows = [ln for ln in fh if not ln.startswith("#")]
        return np.genfromtxt(io.StringIO("".join(rows)), delimiter=",",
                             names=True)

    fig, ax = plt.subplots(figsize=(5, 4))
    if cfg.command == "spectrum":
        data = load("spectrum.csv")
        ax.plot(data["mu"], data["gamma_plus"], "o", label="gamma+")
        ax.plot(data["mu"], data["gamma_minus"], "s", label="gamma-")
        ax.set_xlabel("mu")
        ax.legend()
    elif cfg.command == "foliate":
        for name in ("foliate_plus", "foliate_minus"):
            data = load(f"{name}.csv")
            u, v = data["u"], data["v"]
            ax.plot(u, v, label=name)
        ax.set_xlabel("u")
        ax.set_ylabel("v")
        ax.legend()
    elif cfg.command == "plateau-sweep":
        data = load("sweep.csv")
        ax.plot(np.atleast_1d(data["t"]),
                np.atleast_1d(data["axis_intercept"]), "o-")
        ax.set_xlabel("t")
        ax.set_ylabel("axis intercept")
    elif cfg.command == "jacobi-suite":
        data = load("norms_0.csv")
        ax.semilogy(np.atleast_1d(data["k"]), np.atleast_1d(data["norm"]),
                    "o-")
        ax.set_xlabel("k")
        ax.set_ylabel("annulus norm")
    else:
        data = load("density_foliate_plus.csv")
        ax.semilogx(data["r"], data["theta"])
        ax.set_xlabel("r")
        ax.set_ylabel("theta")
    fig.tight_layout()
    fig.savefig(os.path.join(out, f"{cfg.command}.svg"))
    plt.close(fig)


_RUNNERS = {
    "spectrum": _run_spectrum,
    "foliate": _run_foliate,
    "plateau-sweep": _run_plateau_sweep,
    "jacobi-suite": _run_jacobi_suite,
    "diagnostics": _run_diagnostics,
}


def run(cfg: RunConfig) -> int:
    """Execute one configured experiment.  Returns the exit status."""
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    summary = {"command": cfg.command, "version": __version__,
               "config": cfg.config_hash(), "seed": cfg.seed,
               "checks": {}, "outputs": []}
    _RUNNERS[cfg.command](cfg, out, summary)
    summary["outputs"] = [os.path.basename(p) for p in summary["outputs"]]
    spath = os.path.join(out, "summary.json")
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if cfg.plot:
        _emit_plots(cfg, out)
    failed = [name for name, ok in summary["checks"].items() if not ok]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conelab",
        description="Minimal hypersurfaces near minimizing quadratic cones:"
                    " spectra, foliates, Plateau sweeps, Jacobi fields,"
                    " density diagnostics.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--p", type=int)
    parser.add_argument("--q", type=int)
    parser.add_argument("--max-degree", type=int, dest="max_degree")
    parser.add_argument("--r-max", type=float, dest="r_max")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--t-min", type=float, dest="t_min")
    parser.add_argument("--t-max", type=float, dest="t_max")
    parser.add_argument("--samples", type=int)
    parser.add_argument("--rho0", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--scale", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--fields", type=int)
    parser.add_argument("--out")
    parser.add_argument("--plot", action="store_true", default=None)
    args = parser.parse_args(argv)

    text = ""
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: cannot read {args.config}: {exc}",
                  file=sys.stderr)
            return 2
    overrides = {key: getattr(args, key) for key in _ALL_KEYS
                 if getattr(args, key, None) is not None}
    try:
        cfg = validate_config(text, args.command, overrides)
    except ConfigError as exc:
        for entry in exc.entries:
            print(f"config error: {entry}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
