"""Command-line driver: ``maxcloak <command> [--config PATH] [--out DIR] ...``.

Every command writes CSV files into the output directory.  Rows carry the
hash of the effective configuration in the first column and a UTC timestamp
in the last; all other columns depend only on the configuration.  Existing
files with the same header are appended to, otherwise a new numbered file is
created, so no run rewrites earlier output.
"""

import argparse
import csv
import os
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .errors import CloakError

COMMANDS = ("solve", "sweep-rho", "sweep-omega", "time-domain", "verify-identities", "print-config")


# ---------------------------------------------------------------------------
# CSV output

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def complex_columns(name, value):
    """Split a complex value into ``name_re`` and ``name_im`` entries."""
    z = complex(value)
    return {f"{name}_re": z.real, f"{name}_im": z.imag}


class CsvSink:
    """Single writer for one output table."""

    def __init__(self, out_dir, name, config_hash):
        self.out_dir = Path(out_dir)
        self.name = name
        self.config_hash = config_hash
        self.rows = []

    def add(self, row):
        self.rows.append(row)

    def _target(self, header):
        line = ",".join(header)
        path = self.out_dir / f"{self.name}.csv"
        i = 1
        while path.exists():
            with open(path, encoding="utf-8", newline="") as fh:
                if fh.readline().rstrip("\r\n") == line:
                    return path, True
            i += 1
            path = self.out_dir / f"{self.name}-{i}.csv"
        return path, False

    def flush(self):
        if not self.rows:
            return None
        keys = []
        for row in self.rows:
            keys += [k for k in row if k not in keys]
        header = ["config_hash"] + keys + ["timestamp"]
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path, append = self._target(header)
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        with open(path, "a" if append else "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if not append:
                w.writerow(header)
            for row in self.rows:
                w.writerow([self.config_hash] + [_cell(row.get(k)) for k in keys] + [stamp])
        self.rows = []
        return path


# ---------------------------------------------------------------------------
# commands

def _record_row(rec):
    row = rec.as_row()
    row["self_consistency"] = rec.self_consistency
    return row


def cmd_solve(cfg, out, workers, tol):
    from .mie import solve_source
    from .specfun import mode_degrees
    from .visibility import visibility

    src = cfg.make_source()
    factory = cfg.medium_factory()
    main = CsvSink(out, "solve", cfg.hash())
    coef = CsvSink(out, "solve_coefficients", cfg.hash())
    for rho in cfg.sweep.rhos:
        med = factory(rho, cfg.medium.eps_core, cfg.medium.mu_core)
        for omega in cfg.sweep.omegas:
            sol = solve_source(med, src, omega, cap=cfg.solver.n_max_cap)
            rec = visibility(sol, cfg.observation.r_in, cfg.observation.r_out, tol)
            row = _record_row(rec)
            row["mode_discrepancy"] = sol.dual_path_discrepancy
            main.add(row)
            nl, ml = mode_degrees(sol.n_max)
            for pol, arr in (("TE", sol.scattered.te), ("TM", sol.scattered.tm)):
                for n, m, a in zip(nl, ml, arr):
                    coef.add({"rho": rho, "omega": omega, "polarization": pol, "n": n, "m": m,
                              **complex_columns("coefficient", a)})
    return [main.flush(), coef.flush()], 0


def cmd_sweep_rho(cfg, out, workers, tol):
    from .visibility import rho_scaling_sweep

    res = rho_scaling_sweep(cfg.sweep.omega, cfg.sweep.rhos, cfg.observation.r_out,
                            cfg.make_source(), cfg.medium_factory(), cfg.medium.eps_core,
                            cfg.medium.mu_core, tol, workers, cfg.solver.n_max_cap)
    sink = CsvSink(out, "sweep_rho", cfg.hash())
    for rec in res.records:
        sink.add({"row_type": "record", **_record_row(rec)})
    sink.add({"row_type": "summary", "omega": res.omega, "slope": res.slope,
              "slope_residual": res.slope_residual,
              "min_pair_ratio": min(res.ratios) if res.ratios else None,
              "max_pair_ratio": max(res.ratios) if res.ratios else None,
              "degenerate": res.degenerate})
    return [sink.flush()], 0


def cmd_sweep_omega(cfg, out, workers, tol):
    from .visibility import omega_regime_report, spread

    sink = CsvSink(out, "sweep_omega", cfg.hash())
    for rho in cfg.sweep.rhos:
        rows = omega_regime_report(rho, cfg.sweep.omegas, cfg.observation.r_out, cfg.make_source(),
                                   cfg.medium_factory(), cfg.medium.eps_core, cfg.medium.mu_core,
                                   tol=tol, workers=workers, cap=cfg.solver.n_max_cap)
        for r in rows:
            sink.add({"row_type": "record", "rho": rho, "omega": r.omega, "V": r.V, "low": r.low,
                      "middle": r.middle, "high": r.high, "regime": r.regime,
                      "n_max": r.record.n_max, "quad_order": r.record.quad_order,
                      "self_consistency": r.record.self_consistency})
        summary = {"row_type": "summary", "rho": rho}
        for col in ("low", "middle", "high"):
            vals = [getattr(r, col) for r in rows if r.regime == col]
            summary[f"{col}_spread"] = spread(vals) if vals else None
        summary["low_spread_all"] = spread([r.low for r in rows])
        sink.add(summary)
    return [sink.flush()], 0


def cmd_time_domain(cfg, out, workers, tol):
    from .timedomain import GaussianCarrier, PulsedSource, sobolev_time_norm, time_domain_error

    pulse = PulsedSource(cfg.make_source(), GaussianCarrier(cfg.time.center, cfg.time.bandwidth))
    h11 = sobolev_time_norm(pulse, 11)
    pts, wts = cfg.observation_points()
    summary = CsvSink(out, "time_domain", cfg.hash())
    traces = CsvSink(out, "time_traces", cfg.hash())
    for rho in cfg.sweep.rhos:
        res = time_domain_error(rho, pulse, pts, cfg.time.T, medium_factory=cfg.medium_factory(),
                                eps_core=cfg.medium.eps_core, mu_core=cfg.medium.mu_core,
                                tol=tol, point_weights=wts, workers=workers)
        summary.add({**res.summary(), "bound": res.bound, "initial": res.initial,
                     "peak_time": res.peak_time, "h11_norm": h11, "solve_count": res.solve_count,
                     "imag_residual": res.imag_residual})
        for k, p in enumerate(res.points):
            for t, e in zip(res.times, res.traces[:, k]):
                traces.add({"rho": rho, "point": k, "x": p[0], "y": p[1], "z": p[2], "t": t,
                            "Ex": e[0], "Ey": e[1], "Ez": e[2]})
    return [summary.flush(), traces.flush()], 0


def cmd_verify_identities(cfg, out, workers, tol):
    from .identities import standard_suite
    from .mie import RadialLayeredMedium, solve_source

    ids = cfg.identities
    sink = CsvSink(out, "identities", cfg.hash())
    status = 0
    reports = standard_suite(ids.rho, ids.omega, ids.R, cfg.make_source())
    for rep in reports:
        ok = rep.passed(tol)
        status |= 0 if ok else 1
        sink.add({"identity": rep.name, **complex_columns("lhs", rep.lhs),
                  **complex_columns("rhs", rep.rhs), "residual": rep.residual, "ok": ok})
    sol = solve_source(RadialLayeredMedium.paper_inclusion(ids.rho), cfg.make_source(), ids.omega)
    disc = sol.dual_path_discrepancy
    ok = disc < 1e-12
    status |= 0 if ok else 1
    sink.add({"identity": "dual-path solve", **complex_columns("lhs", disc),
              **complex_columns("rhs", 0.0), "residual": disc, "ok": ok})
    return [sink.flush()], status


HANDLERS = {
    "solve": (cmd_solve, "quad"),
    "sweep-rho": (cmd_sweep_rho, "quad"),
    "sweep-omega": (cmd_sweep_omega, "quad"),
    "time-domain": (cmd_time_domain, "time"),
    "verify-identities": (cmd_verify_identities, "identity"),
}


# ---------------------------------------------------------------------------
# entry point

def build_parser():
    parser = argparse.ArgumentParser(
        prog="maxcloak",
        description="Frequency- and time-domain visibility of a regularized spherical cloak.")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)
    helps = {
        "solve": "solve every (rho, omega) pair and write V and scattered coefficients",
        "sweep-rho": "V against rho at fixed omega with the fitted exponent",
        "sweep-omega": "normalised V columns for the frequency regimes",
        "time-domain": "synthesised cloaking error of a pulsed source",
        "verify-identities": "integral identity residuals; exit 1 on failure",
        "print-config": "print the effective configuration with defaults",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", metavar="PATH", help="INI configuration file")
        p.add_argument("--out", metavar="DIR", default="results", help="output directory")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="parallel worker processes")
        p.add_argument("--tol", type=float, default=None,
                       help="tolerance of the command (quadrature, identity or time-grid)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        if args.tol is not None and args.command in HANDLERS:
            setattr(cfg.tolerances, HANDLERS[args.command][1], args.tol)
        if args.workers is not None and args.workers < 1:
            raise ConfigError(["--workers must be at least 1"])
        cfg.validate(args.command)
    except (ConfigError, OSError) as exc:
        print(f"maxcloak: {exc}", file=sys.stderr)
        return 2
    if args.command == "print-config":
        sys.stdout.write(cfg.to_ini())
        return 0
    handler, tol_key = HANDLERS[args.command]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            paths, status = handler(cfg, args.out, args.workers, getattr(cfg.tolerances, tol_key))
    except CloakError as exc:
        print(f"maxcloak: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        if p is not None:
            print(p)
    return status


if __name__ == "__main__":
    sys.exit(main())
