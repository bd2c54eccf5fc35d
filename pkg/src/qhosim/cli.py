"""Command-line experiment harness.

Each subcommand writes one CSV: a header row, the data rows, then "#" lines
with the full run configuration and, where it applies, a fit footer
``# fit slope=... intercept=... r2=...``.  Floats carry 17 significant
digits and nothing time-dependent is written, so identical configurations
give byte-identical files.

Exit status: 0 on success, 1 for usage or configuration errors, 2 for
numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import re
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalFailure, UsageError
from .numerics import fit_line
from .oscillator import GridSpec, build_hamiltonian, hermite_states, make_hermite_state, overlap_matrix
from .prep import jc_build, ladder_prepare, prepare_ground
from .scattering import (
    SpectralCoefficients,
    amplitude_unitary,
    cv_amplitude,
    discrete_amplitude,
    frft_apply,
    hadamard_test,
    read_signal_csv,
)
from .sp2 import defect_poly, dominance_radius, lowest_degree
from .trotter import build_schedule, plan_error, select_plan, trotter_errors

OUTPUT_DIR_ENV = "QHOSIM_OUTPUT_DIR"
log = logging.getLogger("qhosim")


@dataclass
class Table:
    columns: list
    rows: list
    fit: object = None
    meta: dict = field(default_factory=dict)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(table, config_items):
    """CSV text for a table; config_items are (key, value) pairs for the metadata."""
    lines = [",".join(table.columns)]
    for row in table.rows:
        if len(row) != len(table.columns):
            raise NumericalFailure(f"record {row!r} does not match header {table.columns}")
        lines.append(",".join(_fmt(v) for v in row))
    for key, value in config_items:
        lines.append(f"# {key}={_fmt(value)}")
    for key in table.meta:
        lines.append(f"# {key}={_fmt(table.meta[key])}")
    if table.fit is not None:
        lines.append(f"# fit slope={_fmt(table.fit.slope)} intercept={_fmt(table.fit.intercept)} "
                     f"r2={_fmt(table.fit.r_squared)}")
    return "\n".join(lines) + "\n"


def emit_fit_report(xs, ys, model="loglinear"):
    """Fit for the footer: loglinear fits ln(y) vs x, powerlaw ln(y) vs ln(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise UsageError(f"a fit needs at least 3 records, got {xs.size}")
    if np.any(ys <= 0):
        raise NumericalFailure("fit ordinates must be positive for a logarithmic fit")
    if model == "loglinear":
        return fit_line(xs, np.log(ys))
    if model == "powerlaw":
        return fit_line(np.log(xs), np.log(ys))
    raise UsageError(f"unknown fit model {model!r}")


def _ints(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text):
    try:
        return [_float(v) for v in str(text).split(",") if v.strip()]
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _float(text):
    """A number, or a multiple of pi such as ``pi/2`` or ``-3*pi/4``."""
    t = str(text).strip().lower()
    try:
        return float(t)
    except ValueError:
        pass
    m = re.fullmatch(r"([-+]?[0-9.e+-]*?)\*?pi(?:/([0-9.e+-]+))?", t)
    if m:
        try:
            num = {"": 1.0, "+": 1.0, "-": -1.0}.get(m[1]) or float(m[1])
            den = float(m[2]) if m[2] else 1.0
            return num * math.pi / den
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")


def _complexes(text):
    try:
        return [complex(v.replace(" ", "")) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}") from None


def _pool_map(fn, items, workers):
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


# ---------------------------------------------------------------- subcommands

def cmd_spectrum(args):
    grid = GridSpec(args.n_dim)
    h = build_hamiltonian(grid, args.kind, eigh_method=args.eigh_method)
    w = h.eigenvalues()
    n_max = args.n_max if args.n_max is not None else grid.n_dim - 1
    if args.kind == "qho":
        ref = np.arange(n_max + 1) + 0.5
    else:
        ref = build_hamiltonian(GridSpec(args.ref_n_dim), args.kind, eigh_method=args.eigh_method).eigenvalues()
        if ref.size <= n_max:
            raise UsageError("reference grid is too small for the requested n_max")
    rows = [(grid.n_dim, n, w[n], ref[n]) for n in range(n_max + 1)]
    return Table(["N", "n", "E_n", "ref"], rows)


def cmd_overlap_matrix(args):
    grid = GridSpec(args.n_dim)
    max_n = args.max_n if args.max_n is not None else grid.n_dim - 1
    o = overlap_matrix(build_hamiltonian(grid, eigh_method=args.eigh_method), max_n)
    rows = [(m, n, o[m, n]) for m in range(max_n + 1) for n in range(max_n + 1)]
    return Table(["m", "n", "abs_overlap"], rows)


def _level(n_dim, args):
    return args.n if args.n is not None else int(round(args.fraction * n_dim))


def cmd_eig_error_scan(args):
    def one(n_dim):
        n = _level(n_dim, args)
        w = build_hamiltonian(GridSpec(n_dim), eigh_method=args.eigh_method).eigenvalues()
        err = abs(w[n] - (n + 0.5))
        if err == 0:
            raise NumericalFailure(f"record N={n_dim}: eigenvalue error is exactly zero")
        return (n_dim, n, math.log(err))

    rows = _pool_map(one, sorted(args.n_dims), args.workers)
    fit = emit_fit_report([r[0] for r in rows], [math.exp(r[2]) for r in rows], "loglinear")
    return Table(["N", "n", "log_abs_err"], rows, fit)


def cmd_trotter_error_n(args):
    grid = GridSpec(args.n_dim)
    h = build_hamiltonian(grid, args.kind, eigh_method=args.eigh_method)
    n_max = args.n_max if args.n_max is not None else grid.n_dim // 4
    ns = list(range(args.n_min, n_max + 1))
    errs = trotter_errors(h, args.p, args.s, ns)
    rows = list(zip(ns, errs))
    fit = emit_fit_report(ns, errs, "powerlaw") if args.n_min > 0 else None
    sched = build_schedule(args.p, args.s, args.kind)
    meta = {"raw_exponentials": sched.raw_count, "merged_exponentials": sched.merged_count}
    return Table(["n", "err"], rows, fit, meta)


def cmd_trotter_converge(args):
    def one(n_dim):
        n = _level(n_dim, args)
        h = build_hamiltonian(GridSpec(n_dim), eigh_method=args.eigh_method)
        plan = select_plan(n, args.t, args.eps)
        err = plan_error(plan, h, make_hermite_state(h.grid, n).amplitudes)
        return (n_dim, plan.p, plan.k, err), plan

    out = _pool_map(one, sorted(args.n_dims), args.workers)
    meta = {}
    for (row, plan) in out:
        meta[f"plan_N{row[0]}"] = (f"M={plan.exponentials} merged={plan.merged_exponentials} "
                                   f"bound={format(plan.bound, '.17g')}")
    return Table(["N", "p", "k", "err"], [r for r, _ in out], None, meta)


def cmd_prep_ground(args):
    grid = GridSpec(args.n_dim)
    deltas = sorted(args.deltas)
    rows = []
    for d in deltas:
        _, err, params = prepare_ground(grid, d, p2_sign=args.p2_sign)
        rows.append((d, err))
    fit = emit_fit_report(deltas, [r[1] for r in rows], "loglinear") if len(rows) >= 3 else None
    return Table(["delta", "err"], rows, fit)


def cmd_jc_ladder(args):
    grid = GridSpec(args.n_dim)
    system = jc_build(grid)
    keys = [(n, mode) for n in sorted(args.n_targets) for mode in sorted(args.modes)]

    def one(key):
        n, mode = key
        _, fid, m = ladder_prepare(grid, n, args.eps, mode, args.constant, system=system)
        return (n, mode, m, fid)

    return Table(["n_target", "mode", "m", "fidelity"], _pool_map(one, keys, args.workers))


def quartic_thresholds(n_dims, ref_n_dim, thresholds, eigh_method="lapack", workers=1):
    """Rows (N, eps, n_max, n_max/N) comparing quartic spectra with a reference grid.

    n_max is the largest n such that every level up to n agrees with the
    reference to within eps.
    """
    ref = build_hamiltonian(GridSpec(ref_n_dim), "quartic", eigh_method=eigh_method).eigenvalues()

    def one(n_dim):
        if n_dim >= ref_n_dim:
            raise UsageError(f"grid N={n_dim} must be smaller than the reference {ref_n_dim}")
        w = build_hamiltonian(GridSpec(n_dim), "quartic", eigh_method=eigh_method).eigenvalues()
        dev = np.abs(w - ref[: w.size])
        out = []
        for eps in thresholds:
            bad = np.flatnonzero(dev > eps)
            n_max = int(bad[0]) - 1 if bad.size else w.size - 1
            out.append((n_dim, eps, n_max, n_max / n_dim))
        return out

    rows = []
    for chunk in _pool_map(one, sorted(n_dims), workers):
        rows.extend(chunk)
    return rows


def cmd_quartic_table(args):
    rows = quartic_thresholds(args.n_dims, args.ref_n_dim, sorted(args.thresholds), args.eigh_method, args.workers)
    return Table(["N", "threshold_eps", "n_max", "ratio"], rows)


def cmd_amplitude(args):
    grid = GridSpec(args.n_dim)
    h = build_hamiltonian(grid, eigh_method=args.eigh_method)
    c = SpectralCoefficients.normalized(args.coeffs)
    cp = SpectralCoefficients.normalized(args.coeffs_prime if args.coeffs_prime else args.coeffs)
    if c.n_prime != cp.n_prime:
        raise UsageError("--coeffs and --coeffs-prime must have the same length")
    rows = []
    for t in sorted(args.times):
        method = select_plan(c.n_prime, t, args.eps) if args.method == "plan" else "exact"
        disc = discrete_amplitude(h, c, cp, t, method)
        cv = cv_amplitude(c, cp, t)
        row = [t, disc.real, disc.imag, cv.real, cv.imag, abs(disc - cv)]
        if args.shots is not None:
            est = hadamard_test(amplitude_unitary(h, c, cp, t), grid.n_dim,
                                shots=args.shots or None, seed=args.seed, workers=args.workers)
            row += [est.real, est.imag]
        rows.append(tuple(row))
    cols = ["t", "re_discrete", "im_discrete", "re_cv", "im_cv", "abs_diff"]
    if args.shots is not None:
        cols += ["re_hadamard", "im_hadamard"]
    return Table(cols, rows)


def cmd_frft(args):
    grid = GridSpec(args.n_dim)
    h = build_hamiltonian(grid, eigh_method=args.eigh_method)
    if args.input:
        signal = read_signal_csv(args.input, grid.n_dim)
    else:
        signal = hermite_states(grid, args.hermite)[:, args.hermite].astype(complex)
    if args.method == "plan" and args.order != 0:
        method = select_plan(args.plan_n, abs(args.order) * math.pi / 2, args.eps)
        if args.order < 0:
            raise UsageError("plan method needs a positive order")
    else:
        method = "exact"
    out = frft_apply(h, signal, args.order, method)
    return Table(["re", "im"], [(z.real, z.imag) for z in out])


def cmd_sp2_defect(args):
    poly = defect_poly(args.p)
    meta = {"lowest_degree": lowest_degree(poly, args.rel_tol),
            "dominance_radius": dominance_radius(poly, args.rel_tol)}
    return Table(["degree", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c"], poly.rows(), None, meta)


# ---------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


COMMON = ("output", "config", "seed", "workers", "eigh_method", "verbose")


def _add_common(p):
    p.add_argument("--output", "-o", help=f"output CSV path (default: ${OUTPUT_DIR_ENV}/<command>.csv, "
                                          "or ./<command>.csv when the variable is unset)")
    p.add_argument("--config", help="key=value file of defaults; flags given on the command line win")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled quantities (default: 0)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="parallel workers for independent grid points (default: number of cores)")
    p.add_argument("--eigh-method", choices=("lapack", "householder-ql"), default="lapack",
                   help="dense eigensolver backend (default: lapack)")
    p.add_argument("--verbose", "-v", action="store_true", help="log progress and timings to stderr")


def build_parser():
    parser = _Parser(prog="qhosim", description="Discrete harmonic oscillator experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        _add_common(p)
        p.set_defaults(func=fn)
        return p

    p = add("spectrum", cmd_spectrum, "eigenvalues E_n of the discrete Hamiltonian with a reference")
    p.add_argument("--n-dim", type=int, default=400, help="grid size N")
    p.add_argument("--kind", choices=("qho", "quartic"), default="qho", help="Hamiltonian")
    p.add_argument("--n-max", type=int, default=None, help="last level written (default N-1)")
    p.add_argument("--ref-n-dim", type=int, default=1024, help="reference grid for the quartic spectrum")

    p = add("overlap-matrix", cmd_overlap_matrix, "|<phi_m|psi_n>| between eigenvectors and Hermite states")
    p.add_argument("--n-dim", type=int, default=64, help="grid size N")
    p.add_argument("--max-n", type=int, default=None, help="largest m, n (default N-1)")

    p = add("eig-error-scan", cmd_eig_error_scan, "log |E_n - (n+1/2)| against N, with a line fit")
    p.add_argument("--n-dims", type=_ints, default=[32, 48, 64, 80, 96], help="comma-separated grid sizes")
    p.add_argument("--fraction", type=float, default=0.5, help="level n = fraction*N")
    p.add_argument("--n", type=int, default=None, help="fixed level n (overrides --fraction)")

    p = add("trotter-error-n", cmd_trotter_error_n, "single-step Trotter error against n, with a power-law fit")
    p.add_argument("--n-dim", type=int, default=200, help="grid size N")
    p.add_argument("--kind", choices=("qho", "quartic"), default="qho", help="Hamiltonian")
    p.add_argument("--p", type=int, default=4, help="Suzuki order p")
    p.add_argument("--s", type=_float, default=1.0, help="step span s")
    p.add_argument("--n-min", type=int, default=4, help="first level")
    p.add_argument("--n-max", type=int, default=None, help="last level (default N/4)")

    p = add("trotter-converge", cmd_trotter_converge, "end-to-end error of the selected (p, k) plan")
    p.add_argument("--n-dims", type=_ints, default=[64, 128, 256, 512], help="comma-separated grid sizes")
    p.add_argument("--t", type=_float, default=math.pi / 2, help="evolution time (accepts pi/2)")
    p.add_argument("--eps", type=_float, default=1e-3, help="target accuracy")
    p.add_argument("--fraction", type=float, default=0.5, help="level n = fraction*N")
    p.add_argument("--n", type=int, default=None, help="fixed level n (overrides --fraction)")

    p = add("prep-ground", cmd_prep_ground, "ground-state preparation error against delta")
    p.add_argument("--n-dim", type=int, default=512, help="grid size N")
    p.add_argument("--deltas", type=_floats, default=[4.0, 8.0, 12.0, 16.0, 20.0], help="comma-separated widths")
    p.add_argument("--p2-sign", type=int, choices=(1, -1), default=1, help="sign of the p^2 free-evolution exponent")

    p = add("jc-ladder", cmd_jc_ladder, "eigenstate ladder through the Jaynes-Cummings model")
    p.add_argument("--n-dim", type=int, default=64, help="grid size N")
    p.add_argument("--n-targets", type=_ints, default=[0, 1, 2, 3], help="comma-separated target levels")
    p.add_argument("--modes", type=lambda t: [m for m in t.split(",") if m], default=["exact", "trotter"],
                   help="comma-separated modes from {exact, trotter}")
    p.add_argument("--eps", type=_float, default=0.05, help="target accuracy in trotter mode")
    p.add_argument("--constant", type=float, default=4.0, help="C in m = ceil(C n/eps)")

    p = add("quartic-table", cmd_quartic_table, "largest n whose quartic eigenvalue matches a reference grid")
    p.add_argument("--n-dims", type=_ints, default=[100, 200, 400], help="comma-separated grid sizes")
    p.add_argument("--ref-n-dim", type=int, default=1024, help="reference grid size")
    p.add_argument("--thresholds", type=_floats, default=[1e-5], help="comma-separated eigenvalue tolerances")

    p = add("amplitude", cmd_amplitude, "scattering amplitude <phi'|U(t)|phi>, discrete against continuous")
    p.add_argument("--n-dim", type=int, default=128, help="grid size N")
    p.add_argument("--coeffs", type=_complexes, default=[1.0], help="Hermite coefficients of phi, e.g. 1,0.5j")
    p.add_argument("--coeffs-prime", type=_complexes, default=None, help="coefficients of phi' (default: same)")
    p.add_argument("--times", type=_floats, default=[0.7, math.pi / 2, 3.0], help="comma-separated times")
    p.add_argument("--method", choices=("exact", "plan"), default="exact", help="propagator")
    p.add_argument("--eps", type=_float, default=1e-3, help="plan accuracy")
    p.add_argument("--shots", type=int, default=None,
                   help="also run a Hadamard test: 0 for exact readout, >0 for sampled shots")

    p = add("frft", cmd_frft, "fractional Fourier transform of a signal; writes re,im rows")
    p.add_argument("--n-dim", type=int, default=128, help="grid size N")
    p.add_argument("--input", default=None, help="signal CSV (re,im per grid point); default is a Hermite state")
    p.add_argument("--hermite", type=int, default=1, help="Hermite state used when --input is absent")
    p.add_argument("--order", type=_float, default=1.0, help="order a (a=1 is the Fourier transform)")
    p.add_argument("--method", choices=("exact", "plan"), default="exact", help="propagator")
    p.add_argument("--eps", type=_float, default=1e-6, help="plan accuracy")
    p.add_argument("--plan-n", type=int, default=32, help="highest level the plan is sized for")

    p = add("sp2-defect", cmd_sp2_defect, "coefficients of the Trotter defect polynomial f_p(s)")
    p.add_argument("--p", type=int, default=1, help="Suzuki order, 1 to 3")
    p.add_argument("--rel-tol", type=float, default=1e-9, help="tolerance for the lowest degree")
    return parser


def read_config(path):
    """Parse a key=value file; blank lines and '#' comments are skipped."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:  # argparse keeps no public accessor
        if name in action.choices:
            return action.choices[name]
    raise UsageError(f"unknown command {name!r}")


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config(args.config)
        sub = _subparser(parser, args.command)
        known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "func")}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        defaults = {}
        for key, raw in values.items():
            action = known[key]
            if action.const is True or isinstance(action, argparse._StoreTrueAction):
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
                continue
            conv = action.type or str
            try:
                val = conv(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from None
            if action.choices is not None and val not in action.choices:
                raise UsageError(f"config key {key}: {val!r} not in {sorted(action.choices)}")
            defaults[key] = val
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    return args


def _output_path(args):
    if args.output:
        return Path(args.output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    return Path(base or ".") / f"{args.command}.csv"


def _config_items(args):
    skip = {"func", "output", "config", "workers", "verbose"}
    items = [("command", args.command)]
    for key in sorted(vars(args)):
        if key in skip or key == "command":
            continue
        val = getattr(args, key)
        if isinstance(val, list):
            val = ";".join(_fmt(v) for v in val)
        elif val is None:
            val = ""
        items.append((key, val))
    return items


def write_atomic(path, text):
    """Write through a temporary file so failures never leave partial output."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_experiment(argv=None):
    """Run one subcommand; returns the process exit status."""
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    path = _output_path(args)
    start = time.perf_counter()
    try:
        table = args.func(args)
        text = render_csv(table, _config_items(args))
        write_atomic(path, text)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return 2
    log.info("%s: %d records -> %s in %.2f s", args.command, len(table.rows), path, time.perf_counter() - start)
    return 0


def main(argv=None):
    sys.exit(run_experiment(argv))


if __name__ == "__main__":
    main()
