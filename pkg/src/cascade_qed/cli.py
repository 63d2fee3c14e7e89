"""Command-line explorer: simulate, sweep, compare, diffusion, optimize, convert.

All output is data (CSV or JSON); plotting is left to downstream scripts.
Exit codes: 0 success, 2 usage, 3 numerical failure, 4 infeasible/degraded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .ensemble import DiffusionSpec, ensemble_point
from .errors import CascadeError, InfeasibleProblem, InvalidParameters
from .master import propagate
from .model import SystemParams
from .optimize import OBJECTIVES, Bounds, Constraints, optimize
from .rates import build_rate_model, rate_propagate
from .report import SCHEMA_VERSION, evaluate_point, fmt, parallel_map, round9
from .units import SIV_GAMMA, SIV_OMEGA, QFactorSpec, kappa_to_q, q_to_kappa

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_DEGRADED = 0, 2, 3, 4
SUCCESS_FRACTION = 0.9
SWEEP_COLUMNS = ["axis1", "axis2", "eta_master", "i_master", "eta_closed", "i_closed", "r1", "r2", "regime", "note"]
PARAM_NAMES = ("g1", "kappa1", "g2", "kappa2", "gamma", "gamma_star", "delta")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------- config


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; '#' starts a comment. Keys are long flag names."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, config: dict[str, str]):
    """Install config values as defaults so explicit flags still win."""
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in config.items():
        dest = key.replace("-", "_")
        if key == "command":
            continue
        act = actions.get(dest)
        if act is None:
            parser.error(f"unknown config key {key!r}")
        if act.nargs == 0:  # store_true
            defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[dest] = act.type(raw) if act.type else raw
            except (TypeError, ValueError):
                parser.error(f"bad value for config key {key!r}: {raw!r}")
    sub.set_defaults(**defaults)


# --------------------------------------------------------------------------- parameters


def params_from_args(args) -> tuple[SystemParams, bool]:
    common = dict(gamma=args.gamma, gamma_star=args.gamma_star, delta=args.delta)
    if args.single:
        g = args.g if args.g is not None else args.g1
        kappa = args.kappa if args.kappa is not None else args.kappa1
        if g is None or kappa is None:
            raise UsageError("--single needs --g and --kappa")
        return SystemParams.single_cavity(g, kappa, **common), True
    missing = [f"--{n}" for n in ("g1", "kappa1", "g2", "kappa2") if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + ", ".join(missing))
    return SystemParams(args.g1, args.kappa1, args.g2, args.kappa2, **common), False


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int
    scale: str = "linear"

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``name:min:max:n[:linear|log]``."""
        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise argparse.ArgumentTypeError("axis must be name:min:max:n[:linear|log]")
        name = parts[0].replace("-", "_")
        if name == "g":
            name = "g1"
        elif name == "kappa":
            name = "kappa1"
        if name not in PARAM_NAMES:
            raise argparse.ArgumentTypeError(f"unknown axis parameter {parts[0]!r}")
        try:
            lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise argparse.ArgumentTypeError("axis bounds must be numbers and n an integer") from None
        scale = parts[4] if len(parts) == 5 else "linear"
        if scale not in ("linear", "log"):
            raise argparse.ArgumentTypeError("scale must be linear or log")
        # a single point is allowed only as the degenerate range min = max
        if n < 1 or (n == 1 and lo != hi) or (n >= 2 and not lo < hi):
            raise argparse.ArgumentTypeError("need n >= 2 and min < max (or n = 1 with min = max)")
        if scale == "log" and lo <= 0:
            raise argparse.ArgumentTypeError("log scale requires min > 0")
        return cls(name, lo, hi, n, scale)

    def values(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.lo])
        if self.scale == "log":
            v = np.geomspace(self.lo, self.hi, self.n)
        else:
            v = np.linspace(self.lo, self.hi, self.n)
        v[0], v[-1] = self.lo, self.hi
        return v


# --------------------------------------------------------------------------- output


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def write_csv(path, header, rows):
    buf = io.StringIO()
    buf.write(f"# schema-version: {SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    fh, close = _open_out(path)
    try:
        fh.write(buf.getvalue())
    finally:
        if close:
            fh.close()


def write_json(path, obj):
    fh, close = _open_out(path)
    try:
        fh.write(json.dumps(obj, indent=2, allow_nan=False) + "\n")
    finally:
        if close:
            fh.close()


def _records(header, rows):
    return [{k: (round9(v) if isinstance(v, (float, int)) and not isinstance(v, bool) else (v or None))
             for k, v in zip(header, row)} for row in rows]


def emit_table(args, header, rows):
    if args.format == "json":
        write_json(args.out, {"schema_version": SCHEMA_VERSION, "rows": _records(header, rows)})
    else:
        write_csv(args.out, header, rows)


# --------------------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    params, single = params_from_args(args)
    rep = evaluate_point(params, single, args.evaluator)
    if args.format == "csv":
        header = ["eta_master", "i_master", "eta_closed", "i_closed", "r1", "r2", "pb_decay_rate", "regime"]
        emit_table(args, header, [[rep.eta_master, rep.i_master, rep.eta_closed, rep.i_closed,
                                   rep.r1, rep.r2, rep.pb_decay_rate, rep.regime]])
    else:
        write_json(args.out, rep.to_json())
    return EXIT_OK


def _failed_row(a1, a2, exc) -> list:
    note = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return [a1, a2, None, None, None, None, None, None, "", note]


def _sweep_point(job) -> tuple[list, bool]:
    """(row, ok) for one grid point; failures keep their place with a note."""
    params, single, evaluator, outputs, a1, a2 = job
    if isinstance(params, Exception):
        return _failed_row(a1, a2, params), False
    try:
        rep = evaluate_point(params, single, evaluator, outputs)
    except (CascadeError, ValueError, np.linalg.LinAlgError) as exc:
        return _failed_row(a1, a2, exc), False
    note = ""
    if evaluator != "rate" and "ind" in outputs and rep.i_master is None:
        note = "indistinguishability undefined"
    row = [a1, a2, rep.eta_master, rep.i_master, rep.eta_closed, rep.i_closed, rep.r1, rep.r2, rep.regime, note]
    return row, True


def _write_traces(directory, params_list):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for n, params in enumerate(params_list):
        header, rows = compare_rows(params, None, 201)
        write_csv(d / f"point_{n:05d}.csv", header, rows)


def cmd_sweep(args) -> int:
    base, single = params_from_args(args)
    outputs = set(args.outputs)
    ax1, ax2 = args.axis1, args.axis2
    if single and "g2" in (ax1.name, getattr(ax2, "name", None)):
        raise UsageError("g2 cannot be swept with --single")
    if "traces" in outputs and not args.traces_dir:
        raise UsageError("outputs=traces needs --traces-dir")
    if "eta_ind" in outputs:
        outputs |= {"eta", "ind"}
    point_outputs = tuple(sorted(outputs - {"traces", "eta_ind"}))
    jobs = []
    for v1 in ax1.values():
        for v2 in (ax2.values() if ax2 else [None]):  # axis2 varies fastest
            kw = {ax1.name: float(v1)}
            if ax2 is not None:
                kw[ax2.name] = float(v2)
            try:
                p = base.with_(**kw)
            except InvalidParameters as exc:
                p = exc
            jobs.append((p, single, args.evaluator, point_outputs, float(v1), None if v2 is None else float(v2)))
    results = parallel_map(_sweep_point, jobs)
    emit_table(args, SWEEP_COLUMNS, [row for row, _ in results])
    if "traces" in outputs:
        _write_traces(args.traces_dir, [j[0] for j in jobs if isinstance(j[0], SystemParams)])
    failed = sum(1 for _, ok in results if not ok)
    if len(results) - failed < SUCCESS_FRACTION * len(results):
        print(f"sweep degraded: {failed} of {len(results)} points failed", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def compare_rows(params: SystemParams, t_max: Optional[float], n: int):
    model = build_rate_model(params)
    if t_max is None:
        t_max = 10.0 / float(np.min(np.abs(model.roots.real)))
    t = np.linspace(0.0, t_max, n)
    master = propagate(params)
    rho = master.rho_at(t)
    rate = rate_propagate(model, t)
    header = ["t", "p_e_master", "p_a_master", "p_b_master", "p_e_rate", "p_a_rate", "p_b_rate"]
    rows = np.column_stack([t, rho[:, 0, 0].real, rho[:, 1, 1].real, rho[:, 2, 2].real, rate.p_e, rate.p_a, rate.p_b])
    return header, rows.tolist()


def cmd_compare(args) -> int:
    params, _ = params_from_args(args)
    header, rows = compare_rows(params, args.t_max, args.n_times)
    emit_table(args, header, rows)
    return EXIT_OK


def cmd_diffusion(args) -> int:
    params, single = params_from_args(args)
    mode = "a" if single else "b"
    if any(f < 0 for f in args.fwhm):
        raise UsageError("fwhm values must be >= 0")
    eta0, i0 = ensemble_point(params, DiffusionSpec(0.0), mode)
    rows = []
    for f in args.fwhm:
        eta, ind = ensemble_point(params, DiffusionSpec(f, args.nodes), mode, args.definition)
        rows.append([f, eta, ind, eta0, i0])
    emit_table(args, ["fwhm", "eta_ensemble", "i_ensemble", "eta_delta0", "i_delta0"], rows)
    return EXIT_OK


def cmd_optimize(args) -> int:
    g1 = args.g1 if args.g1 is not None else 500.0
    extra = dict(gamma=args.gamma, gamma_star=args.gamma_star, delta=args.delta)
    try:
        c = Constraints.from_q(args.q1_max, args.q2_max, args.q_min, g1=g1, g1_max=args.g1_max,
                               g2_max=args.g2_max, g2_min=args.g2_min, omega=args.omega,
                               gamma_lab=args.gamma_lab, **extra)
        if args.kappa2_max is not None:
            c = Constraints(c.kappa1, Bounds(c.kappa2.lo, args.kappa2_max), c.g2, c.g1, c.base)
    except InfeasibleProblem as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_DEGRADED
    res = optimize(c, args.objective, grid_points=args.grid_points, rounds=args.rounds)
    p = res.params
    q1 = kappa_to_q(p.kappa1, args.omega, args.gamma_lab)
    q2 = kappa_to_q(p.kappa2, args.omega, args.gamma_lab)
    if args.format == "csv":
        header = ["g1", "kappa1", "g2", "kappa2", "q1", "q2", "eta", "ind", "eta_ind", "objective", "evaluations"]
        emit_table(args, header, [[p.g1, p.kappa1, p.g2, p.kappa2, q1, q2, res.eta, res.ind, res.eta_ind,
                                   res.objective, res.evaluations]])
    else:
        write_json(args.out, {
            "params": {k: round9(v) for k, v in p.as_dict().items()},
            "q": {"q1": round9(q1), "q2": round9(q2)},
            "objective": res.objective,
            "eta": round9(res.eta),
            "ind": round9(res.ind),
            "eta_ind": round9(res.eta_ind),
            "evaluations": res.evaluations,
        })
    return EXIT_OK


def cmd_convert(args) -> int:
    if (args.q is None) == (args.kappa is None):
        raise UsageError("give exactly one of --q or --kappa")
    if args.q is not None:
        q = args.q
        kappa = q_to_kappa(QFactorSpec(q, args.omega, args.gamma_lab))
    else:
        kappa = args.kappa
        q = kappa_to_q(kappa, args.omega, args.gamma_lab)
    emit_table(args, ["q", "kappa", "omega", "gamma_lab"], [[q, kappa, args.omega, args.gamma_lab]])
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _float_list(text):
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def _str_list(text):
    items = [x for x in text.replace(" ", "").split(",") if x]
    bad = set(items) - {"eta", "ind", "eta_ind", "traces"}
    if bad:
        raise argparse.ArgumentTypeError(f"unknown outputs: {', '.join(sorted(bad))}")
    return items


def _io_flags(p, default_format):
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--config", help="flat 'key = value' file applied before flags")
    p.add_argument("-v", "--verbose", action="store_true")


def _physics_flags(p):
    p.add_argument("--g1", type=float)
    p.add_argument("--kappa1", type=float)
    p.add_argument("--g2", type=float)
    p.add_argument("--kappa2", type=float)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--gamma-star", type=float, default=1e4)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--single", action="store_true", help="emitter + C1 only, collected through C1")
    p.add_argument("--g", type=float, help="single-cavity coupling (with --single)")
    p.add_argument("--kappa", type=float, help="single-cavity decay (with --single)")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="cascade-qed", description="Cascaded-cavity single-photon source explorer.")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("simulate", help="evaluate one parameter point")
    _physics_flags(p)
    _io_flags(p, "json")
    p.add_argument("--evaluator", choices=("master", "rate", "both"), default="both")
    p.set_defaults(func=cmd_simulate)
    subs["simulate"] = p

    p = sub.add_parser("sweep", help="1D/2D parameter sweep")
    _physics_flags(p)
    _io_flags(p, "csv")
    p.add_argument("--axis1", type=Axis.parse, required=False, help="name:min:max:n[:linear|log]")
    p.add_argument("--axis2", type=Axis.parse, help="second axis (varies fastest)")
    p.add_argument("--evaluator", choices=("master", "rate", "both"), default="both")
    p.add_argument("--outputs", type=_str_list, default=["eta", "ind"], help="comma list of eta,ind,eta_ind,traces")
    p.add_argument("--traces-dir", help="directory for per-point trace CSVs (outputs=traces)")
    p.set_defaults(func=cmd_sweep)
    subs["sweep"] = p

    p = sub.add_parser("compare", help="master-equation vs rate-equation population traces")
    _physics_flags(p)
    _io_flags(p, "csv")
    p.add_argument("--t-max", type=float, help="end of the time grid (default 10 / slowest rate)")
    p.add_argument("--n-times", type=_positive_int, default=1001)
    p.set_defaults(func=cmd_compare)
    subs["compare"] = p

    p = sub.add_parser("diffusion", help="eta and I under Gaussian spectral diffusion")
    _physics_flags(p)
    _io_flags(p, "csv")
    p.add_argument("--fwhm", type=_float_list, default=[0.0, 250.0, 500.0, 750.0, 1000.0])
    p.add_argument("--nodes", type=_positive_int, default=15)
    p.add_argument("--definition", choices=("pairwise", "average"), default="pairwise")
    p.set_defaults(func=cmd_diffusion)
    subs["diffusion"] = p

    p = sub.add_parser("optimize", help="maximize eta*I (or I, eta) under Q-factor limits")
    _physics_flags(p)
    _io_flags(p, "json")
    p.add_argument("--objective", choices=OBJECTIVES, default="eta_ind")
    p.add_argument("--q1-max", type=float, default=5e5)
    p.add_argument("--q2-max", type=float, default=5e5)
    p.add_argument("--q-min", type=float, default=1e3)
    p.add_argument("--kappa2-max", type=float, help="override the q-min cap on kappa2")
    p.add_argument("--g1-max", type=float, help="search g1 in [g1, g1-max] instead of fixing it")
    p.add_argument("--g2-min", type=float, default=1.0)
    p.add_argument("--g2-max", type=float, default=2000.0)
    p.add_argument("--omega", type=float, default=SIV_OMEGA)
    p.add_argument("--gamma-lab", type=float, default=SIV_GAMMA)
    p.add_argument("--grid-points", type=_positive_int, default=6)
    p.add_argument("--rounds", type=int, default=3)
    p.set_defaults(func=cmd_optimize)
    subs["optimize"] = p

    p = sub.add_parser("convert", help="quality factor <-> normalized decay rate")
    _io_flags(p, "csv")
    p.add_argument("--q", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--omega", type=float, default=SIV_OMEGA)
    p.add_argument("--gamma-lab", type=float, default=SIV_GAMMA)
    p.set_defaults(func=cmd_convert)
    subs["convert"] = p
    return parser, subs


def parse_args(argv):
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in subs), None)
    if known.config and command is not None:
        try:
            _apply_config(parser, subs[command], read_config(known.config))
        except UsageError as exc:
            parser.error(str(exc))
    args = parser.parse_args(argv)
    if args.command == "sweep" and args.axis1 is None:
        subs["sweep"].error("--axis1 is required")
    return args


def main(argv=None) -> int:
    args = parse_args(argv)  # argparse exits with 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:  # e.g. piped into head
        sys.stderr.close()
        return EXIT_OK
    except (UsageError, InvalidParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleProblem as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_DEGRADED
    except (CascadeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
