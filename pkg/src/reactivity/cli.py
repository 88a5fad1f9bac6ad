"""Command-line front end.

Every run echoes its resolved configuration: CSV output starts with
``# key=value`` lines followed by a header row; JSON output is a single
object ``{config, rows, diagnostics}``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, ftle, interval_cert, mean_reactivity, net_sync
from .errors import NumericalError, SingularMatrixError
from .linalg_core import inverse
from .norms import NormFamily, NormSpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4

EXIT_HELP = f"""\
exit status:
  {EXIT_OK}  success
  {EXIT_USAGE}  configuration / usage error
  {EXIT_NUMERICAL}  numerical failure (non-convergence, divergence, overflow)
  {EXIT_INFEASIBLE}  interval-cert found no feasible row
"""

COLUMNS = {
    "reactivity": ("k", "r"),
    "ftle": ("p", "mftle", "mftle_one_over_2p"),
    "interval-cert": interval_cert.SWEEP_COLUMNS,
    "sync-bounds": ("p", "beta_mean", "beta_max", "L_mean", "U_mean", "L_max", "U_max",
                    "S_mean", "S_max", "nested"),
    "sync-sim": ("kappa", "E", "synchronized", "diverged"),
}

COLUMN_HELP = {
    "reactivity": "k: time index; r: reactivity of the p-step Jacobian at x_k",
    "ftle": "p: horizon; mftle: (1/p) log sigma_1(Df^(p)); mftle_one_over_2p: same with 1/(2p)",
    "interval-cert": "param: alpha or e; p; feasible; w_star: (b-a)+(d-c); a, b, c, d: interval ends",
    "sync-bounds": ("p; beta_mean, beta_max: mean/max of ||DF^(p)|| over the sample; "
                    "L_mean, U_mean, L_max, U_max: coupling-strength bounds from each beta; "
                    "S_mean, S_max: synchronizability values; "
                    "nested: [L_max,U_max] inside [L_mean,U_mean]"),
    "sync-sim": "kappa; E: synchronization error; synchronized: E < threshold; diverged",
}

GRAPH_HELP = ("built-in name (wheel5, k3, path3) or a file: an n x n whitespace matrix "
              "when the first line has n numeric tokens and n such lines follow forming a "
              "valid adjacency, otherwise an edge list 'i j [weight]' (0-indexed, symmetrised)")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- helpers

def _floats(text: str) -> list:
    try:
        return [float(t) for t in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise UsageError(f"expected numbers, got {text!r}") from exc


def _ints(text: str) -> list:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _weight(text):
    if text is None:
        return None
    rows = [_floats(r) for r in str(text).split(";")]
    if len({len(r) for r in rows}) != 1:
        raise UsageError("weight rows must have equal length")
    Q = np.array(rows)
    try:
        inverse(Q)
    except (ValueError, SingularMatrixError) as exc:
        raise UsageError(f"--weight must be an invertible square matrix: {exc}") from exc
    return Q


def make_system(args) -> dynamics.MapSystem:
    name = args.system
    if name == "example1":
        return dynamics.example1_linear(args.lam)
    if name == "logistic":
        return dynamics.logistic(args.alpha)
    if name == "logistic-tv":
        return dynamics.time_varying_logistic(args.e, args.base)
    if name == "henon":
        return dynamics.henon(args.a, args.b)
    raise UsageError(f"unknown system {name!r}")


DEFAULT_X0 = {"example1": "1,1", "logistic": "0.3", "logistic-tv": "0.3", "henon": "0.1,0.1"}


def _x0(args, system):
    text = args.x0 if args.x0 is not None else DEFAULT_X0[args.system]
    x = np.array(_floats(text))
    if x.size != system.dim:
        raise UsageError(f"--x0 needs {system.dim} values for {args.system}")
    return x


def read_graph(spec: str) -> net_sync.Network:
    if spec in net_sync.GRAPHS:
        return net_sync.GRAPHS[spec]()
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"unknown graph {spec!r} (not a built-in name or a file)")
    lines = [ln.split() for ln in path.read_text().splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise UsageError(f"graph file {spec} is empty")
    try:
        rows = [[float(t) for t in ln] for ln in lines]
    except ValueError as exc:
        raise UsageError(f"graph file {spec} has non-numeric tokens") from exc
    n = len(rows[0])
    as_matrix = (len(rows) == n and all(len(r) == n for r in rows))
    if as_matrix:
        A = np.array(rows)
        if (np.allclose(A, A.T) and np.all(np.diag(A) == 0) and np.all(A >= 0)):
            return net_sync.build_network(A, path.name)
    edges = []
    for r in rows:
        if len(r) not in (2, 3) or r[0] != int(r[0]) or r[1] != int(r[1]) or min(r[:2]) < 0:
            raise UsageError(f"graph file {spec}: bad edge line {r}")
        edges.append((int(r[0]), int(r[1]), r[2] if len(r) == 3 else 1.0))
    n = 1 + max(max(i, j) for i, j, _ in edges)
    A = np.zeros((n, n))
    for i, j, w in edges:
        if i == j:
            raise UsageError(f"graph file {spec}: self-loop at node {i}")
        A[i, j] = A[j, i] = w
    return net_sync.build_network(A, path.name)


# ---------------------------------------------------------------- commands

def cmd_reactivity(args):
    system = make_system(args)
    norm = NormSpec(NormFamily(args.norm), _weight(args.weight))
    series = mean_reactivity.stepwise_reactivity(system, norm, _x0(args, system),
                                                 args.k0, args.window, args.p)
    report = mean_reactivity.mean_report(series, args.band)
    rows = [dict(k=args.k0 + i, r=float(v)) for i, v in enumerate(series.values)]
    diag = dict(sup_mean=report.sup_mean, lim_mean_estimate=report.lim_mean_estimate,
                converged=report.converged, classification=report.classification.value)
    return rows, diag, EXIT_OK


def cmd_ftle(args):
    system = make_system(args)
    x0 = _x0(args, system)
    rows = []
    for p in sorted(set(_ints(args.p))):
        if p < 1:
            raise UsageError("--p values must be >= 1")
        one = ftle.mftle(system, x0, p, ftle.Convention.ONE_OVER_P)
        half = ftle.mftle(system, x0, p, ftle.Convention.PAPER_ONE_OVER_2P)
        rows.append(dict(p=p, mftle=one.value, mftle_one_over_2p=half.value))
    diag = {}
    if args.mle_horizon:
        est = ftle.mle_estimate(system, x0, args.mle_horizon, args.burn_in)
        diag = dict(mle=est.value, mle_trace={str(k): v for k, v in est.trace.items()},
                    burn_in=est.burn_in, horizon=est.horizon)
    return rows, diag, EXIT_OK


def cmd_interval_cert(args):
    ps = sorted(set(_ints(args.p)))
    if any(p < 2 or p % 2 for p in ps):
        raise UsageError("--p values must be even and >= 2")
    kw = dict(eps=args.eps) if args.mode == "time-invariant" else dict(base=args.base)
    if args.range is not None:
        lo, hi, step = _floats(args.range) if isinstance(args.range, str) else args.range
        if step <= 0 or hi < lo:
            raise UsageError("--range needs LO <= HI and STEP > 0")
    else:
        v = args.alpha if args.mode == "time-invariant" else args.e
        lo, hi, step = v, v, 1.0
    rows = interval_cert.sweep(args.mode, lo, hi, step, ps, args.grid_points, **kw)
    p_ok = {}
    for r in rows:
        p_ok.setdefault(r["param"], []).append(r["feasible"])
    flagged = [v for v, fs in p_ok.items() if any(a and not b for a, b in zip(fs, fs[1:]))]
    diag = dict(feasible_rows=sum(r["feasible"] for r in rows), total_rows=len(rows),
                feasibility_not_monotone_in_p=flagged)
    code = EXIT_OK if any(r["feasible"] for r in rows) else EXIT_INFEASIBLE
    return rows, diag, code


def _sync_setup(args):
    system = make_system(args)
    if not system.time_invariant:
        raise UsageError("synchronization commands need a time-invariant system")
    net = read_graph(args.graph)
    sample = net_sync.sample_attractor(system, _x0(args, system), args.burn_in,
                                       args.sample_size, args.seed)
    return system, net, sample


def _spectrum_diag(spec):
    return dict(eigenvalues=[float(v) for v in spec.eigenvalues], lambda2=spec.lambda2,
                lambda_n=spec.lambda_n, ratio=spec.ratio, connected=spec.connected)


def cmd_sync_bounds(args):
    system, net, sample = _sync_setup(args)
    if args.p_max < 1:
        raise UsageError("--p-max must be >= 1")
    spec = net_sync.spectrum(net)
    if not spec.connected:
        raise UsageError(f"graph {args.graph} is disconnected")
    betas = net_sync.beta_profile(system, sample, args.p_max)
    bounds = [net_sync.kappa_bounds(spec, b) for b in betas]
    report = net_sync.SyncReport(spec, bounds, [], sample.count, sample.seed)
    rows = []
    for b, st in zip(report.bounds, betas):
        rows.append(dict(p=b.p, beta_mean=st.beta_mean, beta_max=st.beta_max,
                         L_mean=b.L_mean, U_mean=b.U_mean, L_max=b.L_max, U_max=b.U_max,
                         S_mean=b.S_mean, S_max=b.S_max, nested=b.nested()))
    diag = dict(spectrum=_spectrum_diag(spec), sample_size=sample.count, seed=args.seed,
                sync_mean_all_p=all(r["S_mean"] > spec.ratio for r in rows),
                sync_max_all_p=all(r["S_max"] > spec.ratio for r in rows),
                **report.trend_flags())
    return rows, diag, EXIT_OK


def cmd_sync_sim(args):
    system, net, sample = _sync_setup(args)
    if args.kappa_range is not None:
        lo, hi, step = (_floats(args.kappa_range) if isinstance(args.kappa_range, str)
                        else args.kappa_range)
        if step <= 0 or hi < lo:
            raise UsageError("--kappa-range needs LO <= HI and STEP > 0")
        kappas = interval_cert.param_grid(lo, hi, step)
    else:
        kappas = _floats(args.kappa)
    if any(k < 0 for k in kappas):
        raise UsageError("kappa must be nonnegative")
    if not 0 <= args.k0 < args.kf:
        raise UsageError("need 0 <= --k0 < --kf")
    report = net_sync.sweep_kappa(net, system, (), kappas, sample, seed=args.seed,
                                  k_f=args.kf, k_0=args.k0, threshold=args.threshold)
    rows = [dict(kappa=r.kappa, E=r.E, synchronized=r.synchronized, diverged=r.diverged)
            for r in report.simulations]
    sk = report.sync_kappas()
    diag = dict(spectrum=_spectrum_diag(report.spectrum), sample_size=sample.count,
                seed=args.seed, contiguous=report.contiguous(),
                sync_interval=[min(sk), max(sk)] if sk else None)
    return rows, diag, EXIT_OK


COMMANDS = {
    "reactivity": cmd_reactivity,
    "ftle": cmd_ftle,
    "interval-cert": cmd_interval_cert,
    "sync-bounds": cmd_sync_bounds,
    "sync-sim": cmd_sync_sim,
}


# ---------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=0, help="nonnegative RNG seed (default 0)")
    p.add_argument("--config", default=None,
                   help="JSON file of option values (keys as option dests); flags override")


def _add_system(p, default, choices):
    p.add_argument("--system", choices=choices, default=default)
    p.add_argument("--lambda", dest="lam", type=float, default=0.9, help="example1 lambda")
    p.add_argument("--alpha", type=float, default=3.2, help="logistic parameter")
    p.add_argument("--e", type=float, default=2.6, help="logistic-tv offset")
    p.add_argument("--base", type=float, default=3.075, help="logistic-tv base parameter")
    p.add_argument("--a", type=float, default=1.4, help="Henon a")
    p.add_argument("--b", type=float, default=0.3, help="Henon b")
    p.add_argument("--x0", default=None, help="initial state, comma separated")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reactivity", description=__doc__, epilog=EXIT_HELP,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    systems = ("example1", "logistic", "logistic-tv", "henon")

    def add(name, help_):
        p = sub.add_parser(name, help=help_, epilog="columns: " + COLUMN_HELP[name] + "\n\n" + EXIT_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(p)
        return p

    p = add("reactivity", "per-step reactivity along an orbit")
    _add_system(p, "example1", systems)
    p.add_argument("--norm", choices=[f.value for f in NormFamily], default="l2")
    p.add_argument("--weight", default=None, help="weight matrix, rows ';'-separated, e.g. '1,0;0,3'")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--k0", type=int, default=0)
    p.add_argument("--band", type=float, default=1e-9, help="classification tolerance band")

    p = add("ftle", "maximum finite-time Lyapunov exponents")
    _add_system(p, "henon", systems)
    p.add_argument("--p", default="1,10,100", help="comma-separated horizons")
    p.add_argument("--mle-horizon", type=int, default=0, help="also estimate the MLE (>= 1000)")
    p.add_argument("--burn-in", type=int, default=1000)

    p = add("interval-cert", "widest certified invariant interval pairs")
    p.add_argument("--mode", choices=("time-invariant", "time-varying"), default="time-invariant")
    p.add_argument("--alpha", type=float, default=3.2)
    p.add_argument("--e", type=float, default=2.6)
    p.add_argument("--base", type=float, default=3.075)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--p", default="2", help="comma-separated even p values")
    p.add_argument("--range", nargs=3, type=float, default=None, metavar=("LO", "HI", "STEP"),
                   help="sweep alpha (or e) instead of a single value")
    p.add_argument("--grid-points", type=int, default=50)

    for name, help_ in (("sync-bounds", "coupling-strength bounds versus p"),
                        ("sync-sim", "simulated synchronization error versus kappa")):
        p = add(name, help_)
        _add_system(p, "henon", ("logistic", "henon"))
        p.add_argument("--graph", default="wheel5", help=GRAPH_HELP)
        p.add_argument("--sample-size", type=int, default=10_000)
        p.add_argument("--burn-in", type=int, default=1000)
        if name == "sync-bounds":
            p.add_argument("--p-max", type=int, default=100)
        else:
            p.add_argument("--kappa", default="0.25", help="comma-separated coupling strengths")
            p.add_argument("--kappa-range", nargs=3, type=float, default=None,
                           metavar=("LO", "HI", "STEP"))
            p.add_argument("--kf", type=int, default=10_000)
            p.add_argument("--k0", type=int, default=9_000)
            p.add_argument("--threshold", type=float, default=1e-10)
    parser._subparsers_map = sub.choices
    return parser


def parse_config(argv):
    """Parse ``argv``, folding in ``--config`` JSON values as defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        sp = parser._subparsers_map[args.command]
        known = {a.dest for a in sp._actions} - {"help", "config"}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    return args


def resolved_config(args) -> dict:
    skip = {"config", "output", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _cfg(v) -> str:
    # Config echoes use the shortest round-trip form.
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cfg(x) for x in v)
    return _fmt(v)


def _json_value(v):
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; keep them as strings.
        return v if math.isfinite(v) else str(v)
    return v


def render(command, config, rows, diagnostics, fmt) -> str:
    cols = COLUMNS[command]
    if fmt == "json":
        obj = dict(config=_json_value(config),
                   rows=[{c: _json_value(r[c]) for c in cols} for r in rows],
                   diagnostics=_json_value(diagnostics))
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"
    lines = [f"# {k}={_cfg(v)}" for k, v in config.items()]
    lines.append(",".join(cols))
    lines += [",".join(_fmt(r[c]) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = parse_config(argv)
        rows, diag, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"reactivity: error: {exc}", file=stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"reactivity: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"reactivity: error: {exc}", file=stderr)
        return EXIT_USAGE
    text = render(args.command, resolved_config(args), rows, diag, args.format)
    if args.output:
        Path(args.output).write_text(text)
    else:
        stdout.write(text)
    return code


def main(argv=None):
    try:
        return run(argv)
    except SystemExit as exc:
        # --help exits through argparse
        return exc.code if isinstance(exc.code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
