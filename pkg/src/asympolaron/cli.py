"""Command-line interface.

Every command reads a flat JSON config (``--config``) whose keys are also
available as flags; flags win over the file and the file wins over the
defaults.  Each run writes its tables into ``--out`` together with a
``manifest.json`` holding the resolved config, the sha256 of every output,
library versions and wall time.  ``rerun`` replays a manifest and checks the
outputs byte for byte.

Exit codes: 0 success, 2 config error, 3 convergence failure, 4 validation
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import io
from .analysis import (asymmetry_Q, default_omegas, ed_wavefunction, fit_polaron_to_ed,
                       phase_diagram)
from .ed import (AlignmentError, CutoffError, ED_COLUMNS, converged_cutoff, diagonalize, ed_row,
                 qfi_ed)
from .model import ModelParams, Parity, gc, gcF
from .qfi import COMPONENTS, PeakWindowError, find_qfi_peak, qfi_at
from .variational import (SCAN_COLUMNS, Mode, OptimizerSettings, optimize, scan_g, scan_rows)

log = logging.getLogger("asympolaron")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_VALIDATION = 4

MANIFEST = "manifest.json"


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class ConvergenceFailure(RuntimeError):
    """A solver did not converge; outputs may be partial."""


class ValidationFailure(RuntimeError):
    """Self-check or rerun comparison failed."""


# ---------------------------------------------------------------------------
# configuration

def _floats(value):
    if isinstance(value, str):
        return [float(t) for t in value.split(",") if t.strip()]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(t) for t in value]


def _bool(value):
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_int(value):
    if value is None or (isinstance(value, str) and value.lower() in ("", "auto", "none")):
        return None
    return int(value)


@dataclass(frozen=True)
class Option:
    key: str
    parse: object
    default: object
    help: str


_SCAN_OPTS = (
    Option("omega", float, 0.15, "bosonic frequency in units of Omega"),
    Option("Omega", float, 1.0, "qubit splitting (energy unit)"),
    Option("parity", str, "ground", "parity sector: ground/-1 or excited/+1"),
    Option("g", _floats, None, "explicit couplings, comma separated (overrides the range)"),
    Option("g_min", float, 0.2, "start of the coupling range"),
    Option("g_max", float, 2.0, "end of the coupling range"),
    Option("n_g", int, 19, "number of couplings in the range"),
    Option("g_units", str, "gc", "units of g values: 'gc' (multiples of gc) or 'abs'"),
)
_OPT_OPTS = (
    Option("mode", str, "asymmetric", "symmetric or asymmetric trial state"),
    Option("starts", int, 8, "multi-start count per point"),
    Option("max_evals", int, 200_000, "simplex evaluation cap per run"),
    Option("xtol", float, 1e-9, "simplex size tolerance"),
    Option("ftol", float, 1e-12, "energy tolerance"),
    Option("max_restarts", int, 20, "simplex restarts per start"),
    Option("kappa", float, 0.95, "positivity guard |delta| <= kappa sqrt(xi)"),
    Option("seed", int, 0, "random seed for the jittered start"),
    Option("grid_points", int, 2001, "quadrature nodes for observables"),
)
_ED_OPTS = (
    Option("cutoff", _optional_int, None, "Fock cutoff (default: converged doubling search)"),
    Option("dg", float, 1e-4, "finite-difference step for ED QFI"),
)
_WORKERS = Option("workers", int, 1, "process pool size")

COMMAND_OPTIONS = {
    "ed-sweep": _SCAN_OPTS + _ED_OPTS + (
        Option("qfi_method", str, "fd", "ED QFI method: fd or sos"), _WORKERS),
    "variational": (
        Option("omega", float, 0.15, "bosonic frequency in units of Omega"),
        Option("Omega", float, 1.0, "qubit splitting (energy unit)"),
        Option("parity", str, "ground", "parity sector: ground/-1 or excited/+1"),
        Option("g", float, 1.0, "coupling"),
        Option("g_units", str, "gc", "units of g: 'gc' or 'abs'"),
    ) + _OPT_OPTS,
    "scan": _SCAN_OPTS + _OPT_OPTS,
    "qfi": _SCAN_OPTS + _OPT_OPTS + _ED_OPTS + (
        Option("h_rel", float, 1e-4, "stencil half-width in units of gc0"),
        Option("literal", _bool, False, "literal cross-term bookkeeping (no sum rule)"),
        Option("with_ed", _bool, True, "add the ED QFI column"), _WORKERS),
    "phase-diagram": (
        Option("omegas", _floats, None, "explicit frequencies, comma separated"),
        Option("n_omega", int, 24, "number of log-spaced frequencies"),
        Option("omega_min", float, 0.05, "smallest frequency"),
        Option("omega_max", float, 1.0, "largest frequency"),
        Option("Omega", float, 1.0, "qubit splitting (energy unit)"),
        Option("parity", str, "ground", "parity sector"),
        Option("g_min", float, 0.2, "start of the g/gc range"),
        Option("g_max", float, 3.0, "end of the g/gc range"),
        Option("n_g", int, 81, "couplings per frequency"),
        Option("refine", _bool, True, "re-optimize inside brackets to refine roots"),
        _WORKERS) + _OPT_OPTS,
    "fit-ed": _SCAN_OPTS + _OPT_OPTS + _ED_OPTS[:1] + (
        Option("fit_symmetric", _bool, False, "fit without asymmetry factors"), _WORKERS),
    "validate": (
        Option("draws", int, 200, "random parameter draws for the oracle check"),
        Option("seed", int, 12345, "random seed for the draws"),
    ),
}

COMMAND_HELP = {
    "ed-sweep": "exact-diagonalization spectrum, observables and QFI over g",
    "variational": "single-point variational optimum (JSON)",
    "scan": "continuation scan of the variational optimum over g",
    "qfi": "variational QFI decomposition over g with ED reference",
    "phase-diagram": "transition boundaries over a frequency grid",
    "fit-ed": "polaron fits of ED wavefunctions and the asymmetry Q",
    "validate": "closed forms vs quadrature, QFI sum rule, ED convergence",
}


def resolve_config(command: str, file_config: dict | None, flags: dict) -> dict:
    """Merge defaults, config file and flags; parse and check every value."""
    opts = {o.key: o for o in COMMAND_OPTIONS[command]}
    file_config = dict(file_config or {})
    unknown = sorted(set(file_config) - set(opts))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    cfg = {}
    for key, opt in opts.items():
        raw = flags.get(key)
        if raw is None:
            raw = file_config.get(key, opt.default)
        try:
            cfg[key] = None if raw is None else opt.parse(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}") from None
    _check(command, cfg)
    return cfg


def _check(command, cfg):
    for key in ("omega", "Omega", "omega_min", "omega_max"):
        if key in cfg and not cfg[key] > 0.0:
            raise ConfigError(f"{key} must be positive")
    if "parity" in cfg:
        try:
            cfg["parity"] = int(Parity.parse(cfg["parity"]))
        except (KeyError, ValueError):
            raise ConfigError(f"parity: cannot parse {cfg['parity']!r}") from None
    if "mode" in cfg:
        try:
            cfg["mode"] = Mode.parse(cfg["mode"]).value
        except ValueError:
            raise ConfigError(f"mode: cannot parse {cfg['mode']!r}") from None
    if cfg.get("g_units", "gc") not in ("gc", "abs"):
        raise ConfigError("g_units must be 'gc' or 'abs'")
    if cfg.get("qfi_method", "fd") not in ("fd", "sos"):
        raise ConfigError("qfi_method must be 'fd' or 'sos'")
    for key in ("n_g", "n_omega", "workers", "draws", "grid_points", "max_evals"):
        if key in cfg and cfg[key] < 1:
            raise ConfigError(f"{key} must be at least 1")
    if "starts" in cfg and cfg["starts"] < 1:
        raise ConfigError("starts must be at least 1")
    if cfg.get("cutoff") is not None and cfg["cutoff"] < 1:
        raise ConfigError("cutoff must be at least 1")
    if "kappa" in cfg and not 0.0 < cfg["kappa"] < 1.0:
        raise ConfigError("kappa must lie in (0, 1)")
    if command == "qfi" and cfg["g"] is None and cfg["n_g"] < 3:
        raise ConfigError("qfi needs at least 3 couplings")
    if command == "variational" and cfg["g"] < 0.0:
        raise ConfigError("g must be non-negative")
    if command in ("ed-sweep", "scan", "qfi", "fit-ed"):
        g = coupling_list(cfg)
        if any(v < 0.0 for v in g):
            raise ConfigError("couplings must be non-negative")
        if any(b < a for a, b in zip(g, g[1:])):
            raise ConfigError("couplings must be sorted")


def coupling_list(cfg) -> list:
    """Absolute couplings from a resolved config."""
    if cfg.get("g") is not None:
        vals = list(cfg["g"]) if isinstance(cfg["g"], list) else [cfg["g"]]
    else:
        vals = list(np.linspace(cfg["g_min"], cfg["g_max"], cfg["n_g"]))
    scale = gc(cfg["omega"], cfg["Omega"]) if cfg.get("g_units", "gc") == "gc" else 1.0
    return [float(v) * scale for v in vals]


def optimizer_settings(cfg) -> OptimizerSettings:
    return OptimizerSettings(starts=cfg["starts"], max_evals=cfg["max_evals"], xtol=cfg["xtol"],
                             ftol=cfg["ftol"], max_restarts=cfg["max_restarts"], kappa=cfg["kappa"],
                             rng_seed=cfg["seed"], grid_points=cfg["grid_points"])


def _pmap(fn, tasks, workers: int):
    """Map in a process pool; results come back in task order."""
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


# ---------------------------------------------------------------------------
# commands; each returns {file name: sha256}

def _ed_task(args):
    omega, Omega, g, parity, cutoff, method, dg = args
    return ed_row(ModelParams(omega, g, Omega), parity, cutoff, method, dg)


def cmd_ed_sweep(cfg, out) -> dict:
    g_list = coupling_list(cfg)
    tasks = [(cfg["omega"], cfg["Omega"], g, cfg["parity"], cfg["cutoff"], cfg["qfi_method"],
              cfg["dg"]) for g in g_list]
    rows = _pmap(_ed_task, tasks, cfg["workers"])
    gcv = gc(cfg["omega"], cfg["Omega"])
    cols = ED_COLUMNS[:1] + ("g_over_gc",) + ED_COLUMNS[1:]
    rows = [(r[0], r[0] / gcv) + tuple(r[1:]) for r in rows]
    return {"ed_sweep.csv": io.write_csv(os.path.join(out, "ed_sweep.csv"), "ed_sweep", cols, rows)}


def cmd_variational(cfg, out) -> dict:
    g = coupling_list(cfg)[0]
    res = optimize(ModelParams(cfg["omega"], g, cfg["Omega"]), cfg["parity"], cfg["mode"],
                   settings=optimizer_settings(cfg))
    digest = io.write_json(os.path.join(out, "variational.json"), res.to_dict())
    if not res.converged:
        raise ConvergenceFailure("variational optimum not converged", {"variational.json": digest})
    return {"variational.json": digest}


def _run_scan(cfg):
    return scan_g(cfg["omega"], coupling_list(cfg), cfg["parity"], cfg["mode"], Omega=cfg["Omega"],
                  settings=optimizer_settings(cfg))


def _unconverged(scan):
    return [r.params.g for r in scan.rows if not r.converged]


def cmd_scan(cfg, out) -> dict:
    scan = _run_scan(cfg)
    outputs = {"scan.csv": io.write_csv(os.path.join(out, "scan.csv"), "scan", SCAN_COLUMNS,
                                        scan_rows(scan))}
    bad = _unconverged(scan)
    if bad:
        raise ConvergenceFailure(f"{len(bad)} scan points not converged", outputs)
    return outputs


QFI_CSV_COLUMNS = ("g", "g_over_gc", "g_over_gc0") + COMPONENTS + (
    "total", "total_oracle", "qfi_ed", "peak_var", "peak_ed")


def _qfi_task(args):
    row, h, settings, literal = args
    return qfi_at(row, h, settings, literal)


def _ed_qfi_task(args):
    omega, Omega, g, parity, cutoff, dg = args
    p = ModelParams(omega, g, Omega)
    n = cutoff if cutoff is not None else converged_cutoff(p)
    res = diagonalize(p, n)
    return qfi_ed(p, res.index(parity), dg=dg, cutoff=n)


def _peak(g, F):
    try:
        return find_qfi_peak(g, F)
    except PeakWindowError:
        return None


def _nearest_flags(g, peak):
    flags = np.zeros(len(g), dtype=int)
    if peak is not None:
        flags[int(np.argmin(np.abs(np.asarray(g) - peak[0])))] = 1
    return flags


def cmd_qfi(cfg, out) -> dict:
    from .model import gc0

    settings = optimizer_settings(cfg)
    scan = _run_scan(cfg)
    h = cfg["h_rel"] * gc0(cfg["omega"], cfg["Omega"])
    br = _pmap(_qfi_task, [(r, h, settings, cfg["literal"]) for r in scan.rows], cfg["workers"])
    g = scan.g
    if cfg["with_ed"]:
        tasks = [(cfg["omega"], cfg["Omega"], float(v), cfg["parity"], cfg["cutoff"], cfg["dg"])
                 for v in g]
        fed = np.array(_pmap(_ed_qfi_task, tasks, cfg["workers"]))
    else:
        fed = np.full(len(g), math.nan)
    total = np.array([b.total for b in br])
    pv = _peak(g, total)
    pe = _peak(g, fed) if cfg["with_ed"] else None
    gcv = gc(cfg["omega"], cfg["Omega"])
    g0 = gc0(cfg["omega"], cfg["Omega"])
    fv, fe = _nearest_flags(g, pv), _nearest_flags(g, pe)
    rows = [(b.g, b.g / gcv, b.g / g0) + tuple(getattr(b, k) for k in COMPONENTS)
            + (b.total, b.total_oracle, fed[i], fv[i], fe[i]) for i, b in enumerate(br)]
    outputs = {"qfi.csv": io.write_csv(os.path.join(out, "qfi.csv"), "qfi", QFI_CSV_COLUMNS, rows)}
    gf = gcF(cfg["omega"], cfg["Omega"])
    summary = {
        "gcF_fullrange": gf,
        "peak_variational": None if pv is None else {"g": pv[0], "F": pv[1], "rel_err": pv[0] / gf - 1},
        "peak_ed": None if pe is None else {"g": pe[0], "F": pe[1], "rel_err": pe[0] / gf - 1},
        "max_sum_rule_rel": max(abs(b.component_sum() - b.total) / abs(b.total) for b in br),
        "max_oracle_rel": max(abs(b.total - b.total_oracle) / abs(b.total_oracle) for b in br),
    }
    outputs["qfi_summary.json"] = io.write_json(os.path.join(out, "qfi_summary.json"), summary)
    bad = _unconverged(scan)
    if bad:
        raise ConvergenceFailure(f"{len(bad)} scan points not converged", outputs)
    return outputs


def cmd_phase_diagram(cfg, out) -> dict:
    oms = cfg["omegas"] if cfg["omegas"] is not None else list(
        default_omegas(cfg["n_omega"], cfg["omega_min"], cfg["omega_max"]))
    pd = phase_diagram(oms, cfg["parity"], cfg["mode"], cfg["Omega"], cfg["n_g"],
                       (cfg["g_min"], cfg["g_max"]), optimizer_settings(cfg), cfg["workers"],
                       cfg["refine"])
    outputs = {"phase_boundaries.csv": io.write_csv(
        os.path.join(out, "phase_boundaries.csv"), "phase_boundaries",
        ("kind", "omega", "g", "g_over_gc"), pd.rows())}
    outputs["phase_summary.json"] = io.write_json(os.path.join(out, "phase_summary.json"),
                                                  pd.summary())
    return outputs


FIT_COLUMNS = ("g", "g_over_gc", "alpha", "beta", "zeta_a", "zeta_b", "xi_a", "xi_b", "delta_a",
               "delta_b", "residual", "relative_residual", "poor_fit", "Q", "delta_a_var")


def _fit_task(args):
    omega, Omega, g, parity, cutoff, seed, symmetric, kappa = args
    p = ModelParams(omega, g, Omega)
    psi = ed_wavefunction(p, parity, cutoff)
    fit = fit_polaron_to_ed(psi, p, parity, seed, symmetric=symmetric, kappa=kappa)
    hw = 2.0 * p.gprime + 12.0
    try:
        q = asymmetry_Q(psi, np.linspace(-hw, hw, 4001))
    except ValueError:
        q = math.nan
    s, w = fit.shape, fit.weights
    return (g, w.alpha, w.beta, s.zeta_a, s.zeta_b, s.xi_a, s.xi_b, s.delta_a, s.delta_b,
            fit.residual, fit.relative_residual, int(fit.poor_fit), q)


def cmd_fit_ed(cfg, out) -> dict:
    scan = _run_scan(cfg)
    tasks = [(cfg["omega"], cfg["Omega"], r.params.g, cfg["parity"], cfg["cutoff"], r.shape,
              cfg["fit_symmetric"], cfg["kappa"]) for r in scan.rows]
    fits = _pmap(_fit_task, tasks, cfg["workers"])
    gcv = gc(cfg["omega"], cfg["Omega"])
    rows = [(f[0], f[0] / gcv) + f[1:] + (r.shape.delta_a,) for f, r in zip(fits, scan.rows)]
    return {"fit_ed.csv": io.write_csv(os.path.join(out, "fit_ed.csv"), "fit_ed", FIT_COLUMNS, rows)}


def cmd_validate(cfg, out) -> dict:
    from .validate import run_validation

    rep = run_validation(cfg["draws"], cfg["seed"])
    for line in rep.lines():
        print(line)
    outputs = {"validate.csv": io.write_csv(
        os.path.join(out, "validate.csv"), "validate", ("check", "value", "tol", "ok"),
        ((c.name.replace(",", ";"), c.value, c.tol, int(c.ok)) for c in rep.checks))}
    if not rep.ok:
        raise ValidationFailure("oracle checks failed", outputs)
    return outputs


COMMANDS = {
    "ed-sweep": cmd_ed_sweep,
    "variational": cmd_variational,
    "scan": cmd_scan,
    "qfi": cmd_qfi,
    "phase-diagram": cmd_phase_diagram,
    "fit-ed": cmd_fit_ed,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# driver

def execute(command: str, cfg: dict, out: str) -> int:
    """Run a command with a resolved config, write the manifest, return the exit code."""
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        outputs = COMMANDS[command](cfg, out)
    except ConvergenceFailure as exc:
        msg, outputs = exc.args
        log.error("%s", msg)
        code = EXIT_CONVERGENCE
    except ValidationFailure as exc:
        msg, outputs = exc.args
        log.error("%s", msg)
        code = EXIT_VALIDATION
    except (CutoffError, AlignmentError) as exc:
        log.error("%s", exc)
        return EXIT_CONVERGENCE
    io.write_manifest(os.path.join(out, MANIFEST), command, cfg, outputs,
                      time.perf_counter() - t0)
    return code


def rerun(manifest_path: str, out: str | None) -> int:
    """Replay a manifest and compare every output hash."""
    try:
        m = io.load_manifest(manifest_path)
    except (OSError, ValueError) as exc:
        log.error("cannot read manifest: %s", exc)
        return EXIT_CONFIG
    if m["command"] not in COMMANDS:
        log.error("unknown command in manifest: %s", m["command"])
        return EXIT_CONFIG
    out = out or os.path.join(os.path.dirname(os.path.abspath(manifest_path)), "rerun")
    try:
        cfg = resolve_config(m["command"], m["config"], {})
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    code = execute(m["command"], cfg, out)
    mismatched = []
    for name, digest in sorted(m["outputs"].items()):
        path = os.path.join(out, name)
        if not os.path.exists(path) or io.sha256_file(path) != digest:
            mismatched.append(name)
    for name in mismatched:
        print(f"MISMATCH {name}")
    if mismatched:
        return EXIT_VALIDATION
    print(f"all {len(m['outputs'])} outputs reproduced")
    return code


def _flag_type(opt: Option):
    return str if opt.parse in (_floats, _bool, _optional_int) else opt.parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asympolaron", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMAND_OPTIONS.items():
        p = sub.add_parser(name, help=COMMAND_HELP[name])
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        for o in opts:
            p.add_argument("--" + o.key.replace("_", "-"), dest=o.key, type=_flag_type(o),
                           default=None, help=f"{o.help} (default: {o.default})")
    p = sub.add_parser("rerun", help="replay a manifest and check outputs byte for byte")
    p.add_argument("manifest", help="path to manifest.json")
    p.add_argument("--out", default=None, help="output directory (default: <manifest dir>/rerun)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "rerun":
        return rerun(args.manifest, args.out)
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            log.error("cannot read config: %s", exc)
            return EXIT_CONFIG
        if not isinstance(file_cfg, dict):
            log.error("config must be a JSON object")
            return EXIT_CONFIG
    flags = {o.key: getattr(args, o.key) for o in COMMAND_OPTIONS[args.command]}
    try:
        cfg = resolve_config(args.command, file_cfg, flags)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return execute(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
