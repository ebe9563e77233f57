"""Command-line entry point: simulate, resolvent, spectrum, check, decay-fit."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .energy import read_energy_csv, write_energy_csv
from .generator import assemble_generator, dissipation_identity, dump_matrix_market
from .mesh import build_mesh
from .params import ConfigError, default_params, load_config
from .resolvent import (SpectrumHit, decay_fit, resolvent_sweep, smooth_forcing,
                        solve_shifted, static_solve_oracle, write_resolvent_csv,
                        write_sweep_json)
from .spectral import EigenIterationError, spectral_scan, write_spectrum_csv
from .timestep import init_state, simulate

log = logging.getLogger("thermotimo")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _setup(args):
    if args.config:
        p, d = load_config(args.config)
    else:
        p, d = default_params()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    m = build_mesh(p, d)
    gen = assemble_generator(p, m)
    if getattr(args, "dump_matrices", False):
        dump_matrix_market(gen, out)
    return p, d, m, gen, out


def cmd_simulate(args) -> int:
    p, d, m, gen, out = _setup(args)
    phi0 = init_state(d.ic_preset, p, m)
    series = simulate(gen, phi0.data, d)
    write_energy_csv(series, out / "energy.csv")
    _write_json(out / "summary.json", series.summary)
    log.info("E_final=%.6e sup_tE=%.6e monotone=%s", series.summary["E_final"],
             series.summary["sup_tE"], series.summary["monotone"])
    return EXIT_OK


def cmd_resolvent(args) -> int:
    p, d, m, gen, out = _setup(args)
    band = 0.3 * m.N / p.ell
    lmax = args.lmax if args.lmax is not None else band
    if lmax > band:
        log.warning("lmax=%g exceeds the resolved band 0.3 N/ell = %g", lmax, band)
    if not 0 < args.lmin < lmax:
        raise ConfigError("need 0 < lmin < lmax")
    lams = np.geomspace(args.lmin, lmax, args.samples)
    report = resolvent_sweep(gen, lams, workers=args.workers)
    write_resolvent_csv(report, out / "resolvent.csv")
    write_sweep_json(report, out / "sweep.json")
    log.info("fitted_slope=%.4f sup_ratio=%.4e flagged=%d", report.fitted_slope,
             report.sup_ratio, len(report.flagged))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    p, d, m, gen, out = _setup(args)
    if args.targets:
        targets = [float(t) for t in args.targets.split(",") if t.strip()]
    else:
        targets = list(np.linspace(0.0, 0.3 * m.N / p.ell, 30))
    result = spectral_scan(gen, targets)
    write_spectrum_csv(result, out / "spectrum.csv")
    log.info("min |Re mu| = %.4e, flagged %d", result.min_abs_re, len(result.flagged))
    return EXIT_OK


def run_checks(p, d, seed: int = 0, n_states: int = 20) -> dict:
    """Dissipation identity on random states and the static closed-form oracle."""
    m = build_mesh(p, d)
    gen = assemble_generator(p, m)
    rng = np.random.default_rng(seed)
    worst_res, worst_slack = 0.0, np.inf
    for _ in range(n_states):
        x = rng.standard_normal(gen.dim) + 1j * rng.standard_normal(gen.dim)
        x /= gen.norm(x)
        r = dissipation_identity(gen, x)
        worst_res = max(worst_res, abs(r["residual"]) / (1 + abs(r["lhs"])))
        worst_slack = min(worst_slack, r["young_slack"])
    errs = []
    for n in (d.N, 2 * d.N):
        mm = build_mesh(p, n, d.M)
        gg = assemble_generator(p, mm)
        F = smooth_forcing(mm, seed=seed)
        diff = solve_shifted(gg, 0.0, F).data - static_solve_oracle(p, mm, F).data
        errs.append(gg.norm(diff))
    order = float(np.log2(errs[0] / errs[1])) if errs[1] > 0 else float("inf")
    checks = {
        "dissipation_residual": {"value": worst_res, "pass": worst_res <= 1e-12},
        "young_slack": {"value": float(worst_slack), "pass": worst_slack >= -1e-12},
        "oracle_order": {"value": order, "errors": errs, "pass": order >= 1.0},
    }
    checks["all_pass"] = all(c["pass"] for c in checks.values())
    return checks


def cmd_check(args) -> int:
    p, d, m, gen, out = _setup(args)
    checks = run_checks(p, d, seed=args.seed)
    _write_json(out / "check.json", checks)
    for name, c in checks.items():
        if name != "all_pass":
            log.info("%-22s %-4s %.3e", name, "PASS" if c["pass"] else "FAIL", c["value"])
    return EXIT_OK if checks["all_pass"] else 1


def cmd_decay_fit(args) -> int:
    out = Path(args.out)
    path = Path(args.energy) if args.energy else out / "energy.csv"
    if not path.exists():
        raise ConfigError(f"energy file not found: {path}")
    series = read_energy_csv(path)
    fit = decay_fit(series)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "decay_fit.json", fit)
    log.info("alpha=%.4f C=%.4e super_polynomial=%s", fit["alpha"], fit["C"], fit["super_polynomial"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermotimo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config (default: built-in reference parameters)")
        sp.add_argument("--out", default="out", help="output directory (default ./out)")
        sp.add_argument("--dump-matrices", action="store_true",
                        help="also write A.mtx and W.mtx (Matrix Market)")
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    common(sub.add_parser("simulate", help="time integration, writes energy.csv and summary.json"))
    rs = common(sub.add_parser("resolvent", help="resolvent-norm sweep along the imaginary axis"))
    rs.add_argument("--lmin", type=float, default=10.0)
    rs.add_argument("--lmax", type=float, default=None, help="default 0.3 N / ell")
    rs.add_argument("--samples", type=int, default=40)
    rs.add_argument("--workers", type=int, default=1)
    sc = common(sub.add_parser("spectrum", help="eigenvalues nearest to i*lambda targets"))
    sc.add_argument("--targets", default=None, help='comma-separated, e.g. "1,2.5,7"')
    ck = common(sub.add_parser("check", help="dissipation identity and static-oracle checks"))
    ck.add_argument("--seed", type=int, default=0)
    df = sub.add_parser("decay-fit", help="fit E ~ C t^-alpha to an existing energy.csv")
    df.add_argument("--out", default="out")
    df.add_argument("--energy", default=None, help="energy CSV (default OUT/energy.csv)")
    df.add_argument("--config", help=argparse.SUPPRESS)
    df.add_argument("-v", "--verbose", action="store_true")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "resolvent": cmd_resolvent,
    "spectrum": cmd_spectrum,
    "check": cmd_check,
    "decay-fit": cmd_decay_fit,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (SpectrumHit, EigenIterationError, FloatingPointError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "diagnostics.json", diag)
        print(json.dumps(diag), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
