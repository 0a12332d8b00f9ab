"""Command-line front end.

Four subcommands cover the pipeline: ``stationary`` searches for a
profile and writes the solution artifact, ``spectrum`` builds the
linearization potential from a solution file and solves for its bound
states, ``evolve`` integrates perturbations of a background in time,
and ``verify`` runs the invariant suite.

Exit codes: 0 success, 1 verify failure, 2 search failure, 3 invariant
or physics violation (including unreadable or incompatible input
files), 64 usage error.  Artifacts are deterministic: rerunning the
same invocation produces byte-identical files.  Paths default into
--out-dir, which falls back to the SWYM_OUT_DIR environment variable
and then the working directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, fileio
from . import evolution as ev
from . import spectrum as sp
from . import verify as vf
from .numerics import NumericsError
from .stationary import (
    SearchConfig,
    SearchResolutionError,
    find_a_n,
    read_solution,
    vacuum_profile,
    write_solution,
)

__all__ = ["main", "console_entry"]

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_SEARCH = 2
EXIT_INVARIANT = 3
EXIT_USAGE = 64

OUT_DIR_ENV = "SWYM_OUT_DIR"


class CliError(Exception):
    """Carries the exit code for a clean, message-only failure."""

    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for search
    # failures, so route parse problems through CliError with 64
    def error(self, message):
        raise CliError(EXIT_USAGE, "%s: %s" % (self.prog, message))


# ---------------------------------------------------------------------------
# config file and shared helpers

_CONFIG_SECTIONS = ("stationary", "spectrum", "evolve", "verify")


def _load_config(path):
    try:
        data = fileio.read_json(path)
    except FileNotFoundError:
        raise CliError(EXIT_USAGE, "config file not found: %s" % path)
    except (json.JSONDecodeError, fileio.FormatVersionError, ValueError) as exc:
        raise CliError(EXIT_USAGE, "unreadable config %s: %s" % (path, exc))
    if not isinstance(data, dict):
        raise CliError(EXIT_USAGE, "config must be a JSON object")
    for section, values in data.items():
        if section == "format_version":
            continue
        if section not in _CONFIG_SECTIONS:
            raise CliError(EXIT_USAGE, "unknown config section %r" % section)
        if not isinstance(values, dict):
            raise CliError(EXIT_USAGE,
                           "config section %r must be an object" % section)
        for key, value in values.items():
            if "tol" in key and not (isinstance(value, (int, float))
                                     and value > 0):
                raise CliError(EXIT_USAGE,
                               "config %s.%s: tolerances must be positive"
                               % (section, key))
    return data


def _out_path(args, name):
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV) or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _say(args, text):
    if not args.quiet:
        print(text)


def _load_solution(path):
    if not os.path.exists(path):
        raise CliError(EXIT_USAGE, "solution file not found: %s" % path)
    try:
        return read_solution(path)
    except fileio.FormatVersionError as exc:
        raise CliError(EXIT_INVARIANT, str(exc))
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_INVARIANT,
                       "unreadable solution file %s: %s" % (path, exc))


def _parse_window(text):
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError:
        raise CliError(EXIT_USAGE,
                       "window must be LO,HI (got %r)" % text)
    if not lo < hi:
        raise CliError(EXIT_USAGE, "window needs LO < HI")
    return (lo, hi)


def _parse_pulse(text):
    """gauss:CENTER,WIDTH,AMPLITUDE with an optional ,DIRECTION."""
    if not text.startswith("gauss:"):
        raise CliError(EXIT_USAGE,
                       "pulse must look like gauss:CENTER,WIDTH,AMPLITUDE")
    parts = text[len("gauss:"):].split(",")
    if len(parts) not in (3, 4):
        raise CliError(EXIT_USAGE,
                       "pulse must look like gauss:CENTER,WIDTH,AMPLITUDE")
    try:
        center, width, amplitude = (float(p) for p in parts[:3])
        direction = int(parts[3]) if len(parts) == 4 else 0
    except ValueError:
        raise CliError(EXIT_USAGE, "pulse fields must be numeric")
    if width <= 0.0:
        raise CliError(EXIT_USAGE, "pulse width must be positive")
    if direction not in (-1, 0, 1):
        raise CliError(EXIT_USAGE, "pulse direction must be -1, 0 or 1")
    return center, width, amplitude, direction


# ---------------------------------------------------------------------------
# stationary

def _cmd_stationary(args):
    if args.vacuum is not None:
        profile = vacuum_profile(args.vacuum)
        path = _out_path(args, "solution_vacuum.json")
        write_solution(path, profile)
        _say(args, "vacuum solution (W = %+d) -> %s" % (args.vacuum, path))
        return EXIT_OK

    if args.n is None:
        raise CliError(EXIT_USAGE, "stationary: --n is required")
    if args.n < 1:
        raise CliError(EXIT_USAGE,
                       "stationary: --n must be a positive integer "
                       "(the vacuum is --vacuum 1)")

    overrides = {}
    for key in ("delta", "rel_tol", "abs_tol", "bisect_tol"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    try:
        config = SearchConfig(**overrides)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "stationary: %s" % exc)

    profile = find_a_n(args.n, config)

    path = _out_path(args, "solution_n%d.json" % args.n)
    checks = vf.stationary_property_checks(profile)
    failed = [c for c in checks if not c.passed]
    if failed:
        rejected = path + ".rejected"
        write_solution(rejected, profile)
        for c in failed:
            print("FAIL %s: measured %r against bound %r"
                  % (c.name, c.measured, c.bound), file=sys.stderr)
        print("profile rejected; dumped to %s" % rejected, file=sys.stderr)
        return EXIT_INVARIANT

    write_solution(path, profile)
    _say(args, "n = %d  a = %.10f  zeros = %d  limit = %+d" %
         (profile.n, profile.a, len(profile.zero_locations),
          profile.limit_sign))
    _say(args, "zero radii: %s" %
         ", ".join("%.6f" % z for z in profile.zero_locations))
    _say(args, "residual = %.3e  bracket width = %.3e" %
         (profile.residual_norm,
          profile.bracket[1] - profile.bracket[0]))
    _say(args, "solution -> %s" % path)

    if args.plot:
        from . import plots
        fig = plots.profile_figure(
            _out_path(args, "profile_n%d.svg" % args.n), profile)
        _say(args, "figure -> %s" % fig)
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectrum

def _cmd_spectrum(args):
    profile = _load_solution(args.solution)
    tag = "vacuum" if profile.n == 0 else "n%d" % profile.n

    if args.window is not None:
        window = _parse_window(args.window)
        n_points = args.points or sp.DEFAULT_POINTS
    elif args.points is not None:
        window, n_points = sp.DEFAULT_WINDOW, args.points
    else:
        window, n_points = sp.recommended_grid(profile.n)

    k = args.states if args.states is not None else max(profile.n + 1, 1)
    try:
        potential = sp.build_potential(profile, window=window,
                                       n_points=n_points)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "spectrum: %s" % exc)

    if profile.n >= 1 and potential.integral_v >= 0.0:
        print("integral of V is %.6e but a nontrivial profile must make "
              "it negative" % potential.integral_v, file=sys.stderr)
        return EXIT_INVARIANT

    want_both = args.cross_check or args.method == "both"
    fd_report = None
    shooting_report = None
    if args.method != "shooting" or want_both:
        fd_report = sp.eigen_fd(potential, k=k)
    if args.method != "fd" or want_both:
        shooting_report = sp.eigen_shooting(potential, k=k)
    # the artifact convention keeps the finite-difference route primary
    # whenever it ran; `--method shooting` alone promotes the other one
    primary = fd_report if fd_report is not None else shooting_report

    if profile.n >= 1 and primary.count == 0:
        print("no negative eigenvalue found for n = %d; the instability "
              "is a hard prediction" % profile.n, file=sys.stderr)
        return EXIT_INVARIANT

    _say(args, "integral of V = %.12g" % potential.integral_v)
    _say(args, "%s eigenvalues: %s" %
         (primary.method,
          ", ".join("%.12g" % m for m in primary.eigenvalues) or "none"))
    _say(args, "growth rates: %s" %
         (", ".join("%.12g" % g for g in primary.growth_rates) or "none"))
    if profile.n >= 1 and primary.count != profile.n:
        _say(args, "note: found %d negative eigenvalues, expected %d "
             "for this profile" % (primary.count, profile.n))

    delta = None
    if fd_report is not None and shooting_report is not None:
        delta, _, _ = sp.cross_check(fd_report, shooting_report)
        _say(args, "shooting eigenvalues: %s" %
             (", ".join("%.12g" % m
                        for m in shooting_report.eigenvalues) or "none"))
        _say(args, "cross-check delta = %.3e (tolerance %.1e)"
             % (delta, args.delta_tol))
        if fd_report.count != shooting_report.count:
            print("methods disagree on the state count: fd %d, shooting %d"
                  % (fd_report.count, shooting_report.count), file=sys.stderr)
            return EXIT_INVARIANT
        if delta > args.delta_tol:
            print("cross-check delta %.3e exceeds %.1e"
                  % (delta, args.delta_tol), file=sys.stderr)
            return EXIT_INVARIANT

    inequalities = sp.check_eigenfunction_inequalities(primary, potential)
    path = _out_path(args, "spectrum_%s.json" % tag)
    eig_csv = (_out_path(args, "eigenfunctions_%s.csv" % tag)
               if args.eigenfunctions else None)
    sp.write_spectrum(path, potential, primary,
                      shooting_report=(shooting_report
                                       if primary is fd_report else None),
                      inequalities=inequalities,
                      expected_count=(profile.n if profile.n >= 1 else 0),
                      eigenfunctions_csv=eig_csv)
    _say(args, "spectrum -> %s" % path)
    if eig_csv:
        _say(args, "eigenfunctions -> %s" % eig_csv)

    if args.plot:
        from . import plots
        fig = plots.potential_figure(
            _out_path(args, "potential_%s.svg" % tag), potential, primary)
        _say(args, "figure -> %s" % fig)
    return EXIT_OK


# ---------------------------------------------------------------------------
# evolve

def _cmd_evolve(args):
    if args.background == "vacuum":
        profile = None
    elif args.solution is not None:
        profile = _load_solution(args.solution)
    else:
        raise CliError(EXIT_USAGE,
                       "evolve: give a solution file or --background vacuum")

    overrides = {}
    if args.x_lo is not None:
        overrides["x_lo"] = args.x_lo
    if args.x_hi is not None:
        overrides["x_hi"] = args.x_hi
    if args.points is not None:
        overrides["n_points"] = args.points
    if args.boundary is not None:
        overrides["boundary"] = args.boundary
    try:
        config = ev.EvolutionConfig(**overrides)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "evolve: %s" % exc)

    if profile is None:
        background = ev.vacuum_background(config)
    else:
        background = ev.profile_background(profile, config)

    lam_grid = None
    if args.pulse is not None:
        center, width, amplitude, direction = _parse_pulse(args.pulse)
        state = ev.gaussian_pulse(background, amplitude, center, width,
                                  direction=direction)
        tag = "pulse"
        growth_expected = False
    elif args.amplitude == 0.0:
        state = ev.zero_state(background)
        tag = "zero"
        growth_expected = False
    else:
        if args.perturb != "mode0":
            raise CliError(EXIT_USAGE,
                           "evolve: nonzero --amplitude needs --perturb "
                           "mode0 or a --pulse")
        try:
            state, lam_grid = ev.eigenmode_state(background, args.amplitude)
        except ValueError as exc:
            # no bound state to perturb: the mode search came up empty
            print("evolve: %s" % exc, file=sys.stderr)
            return EXIT_SEARCH
        tag = "mode0"
        growth_expected = True

    lam_ref = lam_grid
    if args.spectrum is not None:
        try:
            spec = fileio.read_json(args.spectrum)
            rates = spec.get("growth_rates", [])
            lam_ref = float(rates[0]) if rates else None
        except fileio.FormatVersionError as exc:
            raise CliError(EXIT_INVARIANT, str(exc))
        except (OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
            raise CliError(EXIT_INVARIANT,
                           "unreadable spectrum file %s: %s"
                           % (args.spectrum, exc))

    try:
        series = ev.evolve(state, args.t_max, dt=args.dt, mode=args.mode,
                           probes=args.probes,
                           snapshot_times=tuple(args.snapshot or ()))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "evolve: %s" % exc)

    series_path = _out_path(args, "series_%s.csv" % tag)
    ev.write_series_csv(series_path, series)
    _say(args, "series -> %s" % series_path)
    for t_snap, snap in sorted(series.snapshots.items()):
        snap_path = _out_path(args, "snapshot_%s_t%g.csv" % (tag, t_snap))
        ev.write_snapshot_csv(snap_path, snap)
        _say(args, "snapshot t = %g -> %s" % (t_snap, snap_path))

    e0, e1 = float(series.total[0]), float(series.total[-1])
    _say(args, "mode %s on %s background, t to %g (stop: %s)"
         % (series.mode, background.kind, series.t[-1], series.stop_reason))
    _say(args, "energy start %.12g end %.12g; max |u| = %.6e"
         % (e0, e1, float(np.max(series.max_abs_u))))

    if series.stop_reason in ("overflow", "nan"):
        print("evolution left the trusted regime (%s)" % series.stop_reason,
              file=sys.stderr)
        return EXIT_INVARIANT

    if tag == "zero":
        worst = float(np.max(series.max_abs_u))
        _say(args, "fixed-point residual: max |u| = %.3e (bound 1e-9)"
             % worst)
        if worst > 1e-9:
            print("stationary background failed to stay put: max |u| = %.3e"
                  % worst, file=sys.stderr)
            return EXIT_INVARIANT
        return EXIT_OK

    if growth_expected:
        fit = ev.fit_growth(series, lambda_predicted=lam_ref)
        growth_path = _out_path(args, "growth_%s.json" % tag)
        ev.write_growth(growth_path, fit)
        _say(args, "growth fit -> %s" % growth_path)
        if fit.status != "ok":
            print("expected exponential growth but the fit found none",
                  file=sys.stderr)
            return EXIT_INVARIANT
        _say(args, "measured growth rate %.8f (r^2 = %.6f)"
             % (fit.lambda_measured, fit.r_squared))
        if lam_ref is not None:
            rel = abs(fit.lambda_measured - lam_ref) / lam_ref
            _say(args, "predicted %.8f; discrepancy %.3e" % (lam_ref, rel))
        if fit.r_squared < args.fit_r2:
            print("growth fit quality r^2 = %.6f below %.6f"
                  % (fit.r_squared, args.fit_r2), file=sys.stderr)
            return EXIT_INVARIANT
        if args.plot:
            from . import plots
            fig = plots.series_figure(
                _out_path(args, "growth_%s.svg" % tag), series, fit)
            _say(args, "figure -> %s" % fig)
        return EXIT_OK

    # pulse on a stable or vacuum background: report boundedness
    peak = float(np.max(series.total)) / e0 if e0 > 0.0 else 0.0
    _say(args, "bounded run: peak/initial energy = %.6f, final/initial "
         "= %.6f" % (peak, e1 / e0 if e0 > 0.0 else 0.0))
    if args.plot:
        from . import plots
        fig = plots.series_figure(
            _out_path(args, "series_%s.svg" % tag), series)
        _say(args, "figure -> %s" % fig)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _cmd_verify(args):
    def progress(result):
        if args.quiet:
            return
        mark = "ok  " if result.passed else "FAIL"
        measured = ("%.6g" % result.measured
                    if result.measured is not None else "-")
        bound = "%.6g" % result.bound if result.bound is not None else "-"
        print("%s %-38s measured %-12s bound %-10s"
              % (mark, result.name, measured, bound))

    results = vf.run_checks(name_filter=args.filter, progress=progress)
    if not results:
        raise CliError(EXIT_USAGE,
                       "no checks match filter %r" % args.filter)

    path = _out_path(args, "verify_report.json")
    payload = vf.write_report(path, results)
    _say(args, "report -> %s" % path)

    failed = payload["counts"]["failed"]
    _say(args, "%d checks, %d failed" % (payload["counts"]["total"], failed))
    if failed:
        for r in results:
            if not r.passed:
                print("FAIL %s: %s" % (r.name, r.statement), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly

def _build_parser():
    parser = _Parser(prog="swym",
                     description="stationary profiles, their linearized "
                                 "spectra, and time evolution on the "
                                 "static exterior")
    parser.add_argument("--version", action="version",
                        version="swym " + __version__)

    common = _Parser(add_help=False)
    common.add_argument("--out-dir", default=None,
                        help="artifact directory (default: $%s or the "
                             "working directory)" % OUT_DIR_ENV)
    common.add_argument("--config", default=None,
                        help="JSON file with per-command default flags")
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational output")
    common.add_argument("--plot", action="store_true",
                        help="also render SVG figures next to the data")

    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_st = sub.add_parser("stationary", parents=[common],
                          help="search for a stationary profile")
    p_st.add_argument("--n", type=int, default=None,
                      help="number of interior zeros (positive)")
    p_st.add_argument("--vacuum", type=int, choices=(-1, 1), default=None,
                      help="write the trivial W = +/-1 solution instead")
    p_st.add_argument("--delta", type=float, default=None,
                      help="horizon offset for the series seed")
    p_st.add_argument("--rel-tol", type=float, default=None)
    p_st.add_argument("--abs-tol", type=float, default=None)
    p_st.add_argument("--bisect-tol", type=float, default=None,
                      help="bracket width on the horizon value")
    p_st.set_defaults(func=_cmd_stationary)

    p_sp = sub.add_parser("spectrum", parents=[common],
                          help="bound states of the linearization potential")
    p_sp.add_argument("solution", help="solution JSON from `stationary`")
    p_sp.add_argument("--method", choices=("fd", "shooting", "both"),
                      default="fd")
    p_sp.add_argument("--cross-check", action="store_true",
                      help="run the second method and compare")
    p_sp.add_argument("--window", default=None,
                      help="tortoise window LO,HI (default: sized to the "
                           "profile)")
    p_sp.add_argument("--points", type=int, default=None,
                      help="grid points (odd; default sized to the profile)")
    p_sp.add_argument("--states", type=int, default=None,
                      help="how many states to request (default n + 1)")
    p_sp.add_argument("--delta-tol", type=float, default=1e-6,
                      help="cross-check agreement bound")
    p_sp.add_argument("--eigenfunctions", action="store_true",
                      help="also write the eigenfunction CSV")
    p_sp.set_defaults(func=_cmd_spectrum)

    p_ev = sub.add_parser("evolve", parents=[common],
                          help="integrate perturbations in time")
    p_ev.add_argument("solution", nargs="?", default=None,
                      help="solution JSON for the background")
    p_ev.add_argument("--background", choices=("vacuum",), default=None,
                      help="use the vacuum background instead of a file")
    p_ev.add_argument("--spectrum", default=None,
                      help="spectrum JSON supplying the predicted rate")
    p_ev.add_argument("--perturb", choices=("mode0",), default="mode0",
                      help="perturbation shape for --amplitude")
    p_ev.add_argument("--amplitude", type=float, default=0.0,
                      help="perturbation amplitude (0 checks the fixed "
                           "point)")
    p_ev.add_argument("--pulse", default=None,
                      help="gauss:CENTER,WIDTH,AMPLITUDE[,DIRECTION] "
                           "initial pulse")
    p_ev.add_argument("--mode", choices=("linear", "nonlinear"),
                      default="nonlinear")
    p_ev.add_argument("--t-max", type=float, default=80.0)
    p_ev.add_argument("--dt", type=float, default=None,
                      help="time step (default: CFL fraction of h)")
    p_ev.add_argument("--x-lo", type=float, default=None)
    p_ev.add_argument("--x-hi", type=float, default=None)
    p_ev.add_argument("--points", type=int, default=None)
    p_ev.add_argument("--boundary", choices=("radiation", "reflecting"),
                      default=None)
    p_ev.add_argument("--probes", type=int, default=400,
                      help="energy samples along the run")
    p_ev.add_argument("--snapshot", type=float, action="append",
                      help="write the field at this time (repeatable)")
    p_ev.add_argument("--fit-r2", type=float, default=0.999,
                      help="minimum r^2 for an accepted growth fit")
    p_ev.set_defaults(func=_cmd_evolve)

    p_vf = sub.add_parser("verify", parents=[common],
                          help="run the invariant suite")
    p_vf.add_argument("--filter", default=None,
                      help="run only checks whose name contains this")
    p_vf.set_defaults(func=_cmd_verify)

    return parser, {"stationary": p_st, "spectrum": p_sp,
                    "evolve": p_ev, "verify": p_vf}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        # peel --config first so it can set subcommand defaults
        pre = _Parser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        if known.config is not None:
            config = _load_config(known.config)
            for section, values in config.items():
                if section not in subparsers:
                    continue
                valid = {a.dest for a in subparsers[section]._actions}
                for key in values:
                    if key not in valid:
                        raise CliError(
                            EXIT_USAGE,
                            "config %s.%s does not name a flag"
                            % (section, key))
                subparsers[section].set_defaults(**values)

        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(file=sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except SearchResolutionError as exc:
        print("search failed: %s" % exc, file=sys.stderr)
        return EXIT_SEARCH
    except sp.SpectrumError as exc:
        print("spectrum invariant violated: %s" % exc, file=sys.stderr)
        return EXIT_INVARIANT
    except NumericsError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_SEARCH
    except SystemExit as exc:  # argparse --help / --version
        code = exc.code if isinstance(exc.code, int) else 0
        return code


def console_entry():
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
