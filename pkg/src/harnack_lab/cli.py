"""Command-line front end: ``harnack-lab <bound|minimize|solve|verify|hoelder>``.

Every subcommand reads defaults, then an optional JSON ``--config`` file,
then explicit flags (flags win).  Results go to CSV files under ``--out``
with a fixed header per file; ``--svg`` adds a line chart that never
changes the exit code.

Exit codes: 0 success, 1 inequality violations, 2 configuration or
parameter error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .bounds import (
    Case,
    Constant,
    Direction,
    EstimateParams,
    HarnackBound,
    PdiffParams,
    PmeParams,
    PowerLaw,
    heat_bound,
    lower_bound,
    pdiff_bound,
    pme_bound,
    upper_bound,
)
from .errors import ConfigError, HarnackLabError
from .moser import (
    CylinderKind,
    HolderParams,
    ParabolicCylinder,
    SpaceTimeBox,
    empirical_holder_quotient,
    estimate_harnack_constant,
    holder_bound,
    oscillation,
    oscillation_inequality_check,
    parabolic_distance,
    sample_cylinders,
    sup_norm,
)
from .paths import ExpOfA, PowerTime, closed_form_min, numeric_minimize, optimal_path
from .pde import Barenblatt, HeatKernel, PBarenblatt, SeparableProfile, SolverConfig
from .pde import solve_heat, solve_pdiff, solve_pme
from .svg import LineChart
from .verify import (
    SamplePlan,
    aronson_benilan_check,
    benilan_crandall_check,
    esteban_vazquez_check,
    harnack_check,
    heat_producer,
    li_yau_check,
    pdiff_producer,
    pme_producer,
    random_bumps,
    weak_form_residual,
    write_reports,
)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

BOUND_HEADER = (
    "kind", "direction", "d", "x1", "t1", "x2", "t2", "u1",
    "value", "case", "power", "sense", "valid", "implied_sense", "implied_bound",
)
MINIMIZE_HEADER = (
    "q", "weight", "d", "t1", "t2", "x1", "x2", "knots",
    "value", "closed_form", "relative_gap", "iterations", "converged", "grad_norm",
)
PATH_HEADER = ("t", "x", "x_optimal")
REFINE_HEADER = ("level", "dx", "dt_max", "steps", "l1_error", "observed_order")
SOLVE_HEADER = ("equation", "d", "L", "dx", "t_start", "t_end", "steps", "dt_max", "mass_final", "l1_error_final")
WEAK_HEADER = ("equation", "gamma", "dx", "bumps", "residual", "tolerance", "passed")
CYLINDER_HEADER = ("index", "center", "t0", "R", "harnack_ratio", "omega", "omega_plus", "zeta", "holds")
HOELDER_HEADER = (
    "C", "zeta", "nu", "parabolic_distance", "sup_norm", "quotient", "bound",
    "holder_holds", "cylinders", "oscillation_failures",
)


class CommandFailed(Exception):
    """Raised by a subcommand to request a non-zero exit code."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# value parsing shared by flags and the JSON config


def _float(v) -> float:
    if isinstance(v, bool):
        raise ValueError("expected a number, got a boolean")
    return float(v)


def _opt_float(v):
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none", "null")):
        return None
    return _float(v)


def _int(v) -> int:
    if isinstance(v, bool):
        raise ValueError("expected an integer, got a boolean")
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(f"expected an integer, got {v}")
        return int(v)
    return int(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    text = str(v).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _vector(v) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(_float(c) for c in v)
    if isinstance(v, str):
        return tuple(float(c) for c in v.split(",") if c.strip())
    return (_float(v),)


def _str(v) -> str:
    if not isinstance(v, str):
        raise ValueError(f"expected a string, got {v!r}")
    return v


class _Options:
    """Option table for one subcommand: ``dest -> (converter, default, choices)``."""

    def __init__(self, name: str, parser: argparse.ArgumentParser):
        self.name = name
        self.parser = parser
        self.options: dict[str, tuple] = {}

    def positional(self, dest, default, choices, help):
        self.parser.add_argument(dest, nargs="?", default=argparse.SUPPRESS, help=f"{help}; one of {', '.join(choices)}")
        self.options[dest] = (_str, default, tuple(choices))

    def opt(self, flag, conv, default, help, choices=None):
        dest = flag.lstrip("-").replace("-", "_")
        kwargs = {"dest": dest, "default": argparse.SUPPRESS, "help": f"{help} (default: {default})"}
        if conv is _bool:
            kwargs["nargs"] = "?"
            kwargs["const"] = True
        kwargs["type"] = _argtype(conv, flag)
        self.parser.add_argument(flag, **kwargs)
        self.options[dest] = (conv, default, tuple(choices) if choices else None)


def _argtype(conv, flag):
    def parse(text):
        try:
            return conv(text)
        except (TypeError, ValueError) as exc:
            raise argparse.ArgumentTypeError(f"{flag}: {exc}") from None

    parse.__name__ = conv.__name__.lstrip("_")
    return parse


def _field_line(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _load_config(path, opts: _Options) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: the config must be a JSON object")
    out = {}
    for key, value in raw.items():
        dest = key.replace("-", "_")
        line = _field_line(text, key)
        where = f"{path}:{line}" if line else str(path)
        if dest not in opts.options:
            raise ConfigError(f"{where}: field '{key}' is not an option of '{opts.name}'")
        conv = opts.options[dest][0]
        if value is None and conv is not _opt_float:
            raise ConfigError(f"{where}: field '{key}' may not be null")
        try:
            out[dest] = conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: field '{key}': {exc}") from None
    return out


def _settings(opts: _Options, args: argparse.Namespace) -> SimpleNamespace:
    values = {dest: default for dest, (_, default, _) in opts.options.items()}
    config = getattr(args, "config", None)
    if config:
        values.update(_load_config(config, opts))
    for dest in opts.options:
        if hasattr(args, dest):
            values[dest] = getattr(args, dest)
    for dest, (_, _, choices) in opts.options.items():
        if choices and values[dest] is not None and values[dest] not in choices:
            raise ConfigError(f"{dest}={values[dest]!r}: expected one of {', '.join(choices)}")
    return SimpleNamespace(**values)


# --------------------------------------------------------------------------
# output helpers


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    if isinstance(v, (tuple, list, np.ndarray)):
        return " ".join(_cell(c) for c in np.ravel(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Write an RFC 4180 style CSV with ``repr`` floats (exact round trip)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _emit_svg(s, chart: LineChart, name: str) -> None:
    if not s.svg:
        return
    try:
        chart.write(Path(s.out) / name)
    except OSError as exc:
        # plots are optional and never change the exit code
        print(f"warning: could not write {name}: {exc}", file=sys.stderr)


def _point(x, d: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 1 and d > 1:
        x = np.full(d, float(x[0]))
    if x.size != d:
        raise ConfigError(f"{name} has {x.size} components but d={d}")
    return x


# --------------------------------------------------------------------------
# bound


def _bound_record(s, x1, x2) -> HarnackBound:
    p1, p2 = (x1, s.t1), (x2, s.t2)
    if s.kind != "general" and s.direction != "forward":
        raise ConfigError(f"direction={s.direction!r} is only available for kind 'general'")
    if s.kind == "heat":
        v = heat_bound(s.d, p1, p2, s.u1)
        return HarnackBound(v, Case.I, 1.0, True, "lower", math.log(v) if v > 0 else -math.inf)
    if s.kind == "pme":
        return pme_bound(PmeParams(s.M, s.d), p1, p2, s.u1)
    if s.kind == "pdiff":
        return pdiff_bound(PdiffParams(s.p, s.d, s.K), p1, p2, s.u1)
    coeff = Constant(s.a_const) if s.a_const is not None else PowerLaw(s.mu)
    params = EstimateParams(s.C, s.p, s.r, coeff, Direction(s.direction))
    if params.direction is Direction.FORWARD:
        return lower_bound(params, p1, p2, s.u1)
    return upper_bound(params, p1, p2, s.u1)


def cmd_bound(s) -> int:
    x1, x2 = _point(s.x1, s.d, "x1"), _point(s.x2, s.d, "x2")
    rec = _bound_record(s, x1, x2)
    sense, implied = rec.implied()
    print(f"bound={rec.value!r} case={rec.case.value} valid={_cell(rec.parenthesis_nonneg)}")
    row = (
        s.kind, s.direction, s.d, x1, s.t1, x2, s.t2, s.u1,
        rec.value, rec.case.value, rec.power, rec.sense, rec.parenthesis_nonneg, sense, implied,
    )
    write_csv(Path(s.out) / "bound.csv", BOUND_HEADER, [row])

    if s.svg:
        # sweep the second point along the ray from x1 through x2
        fractions = np.linspace(0.0, 2.0, 81)
        values = []
        for f in fractions:
            try:
                values.append(_bound_record(s, x1, x1 + f * (x2 - x1)).implied()[1])
            except HarnackLabError:
                values.append(math.nan)
        dist = fractions * float(np.linalg.norm(x2 - x1))
        chart = LineChart(f"{s.kind} bound at t2={s.t2:g}", "|x2 - x1|", "bound on u(x2, t2)", log_y=True)
        chart.add("bound", dist, values)
        if s.kind == "heat":
            # the kernel centred at x1 with u(x1, t1) = u1 attains the bound
            actual = s.u1 * (s.t1 / s.t2) ** (s.d / 2) * np.exp(-dist**2 / (4 * s.t2))
            chart.add("centred kernel", dist, actual, dashed=True)
        _emit_svg(s, chart, "bound.svg")
    return EXIT_OK


# --------------------------------------------------------------------------
# minimize


def _weight(s):
    if s.w == "one":
        return PowerTime(0.0)
    if s.w == "power":
        return PowerTime(s.sigma)
    return ExpOfA(s.m, PowerLaw(s.mu))


def cmd_minimize(s) -> int:
    x1, x2 = _point(s.x1, s.d, "x1"), _point(s.x2, s.d, "x2")
    w = _weight(s)
    res = numeric_minimize(s.q, w, s.t1, s.t2, x1, x2, N=s.knots, tol=s.tol, max_iters=s.max_iters, spacing=s.spacing)
    exact = closed_form_min(s.q, w, s.t1, s.t2, x1, x2)
    rel = abs(res.value - exact) / abs(exact) if exact else abs(res.value)
    print(f"value={res.value!r} closed_form={exact!r} relative_gap={rel!r} converged={_cell(res.converged)}")
    row = (
        s.q, s.w, s.d, s.t1, s.t2, x1, x2, s.knots,
        res.value, exact, rel, res.iterations, res.converged, res.grad_norm,
    )
    out = Path(s.out)
    write_csv(out / "minimize.csv", MINIMIZE_HEADER, [row])
    best = optimal_path(s.q, w, s.t1, s.t2, x1, x2)
    times = res.path.times
    ref = best(times)
    write_csv(out / "minimize_path.csv", PATH_HEADER, [(t, v, r) for t, v, r in zip(times, res.path.values, ref)])
    if s.svg:
        chart = LineChart(f"minimizing path, q={s.q:g}", "t", "first coordinate")
        chart.add("numeric", times, res.path.values[:, 0])
        chart.add("closed form", times, ref[:, 0], dashed=True)
        _emit_svg(s, chart, "minimize.svg")
    if not res.converged:
        raise CommandFailed(EXIT_NONCONVERGENCE, f"no convergence after {res.iterations} iterations (gradient {res.grad_norm:.3e})")
    return EXIT_OK


# --------------------------------------------------------------------------
# solve


def _exact_oracle(equation: str, d: int, M: float, p: float):
    if equation == "heat" or (equation == "pdiff" and p == 2.0):
        return HeatKernel(d)
    if equation == "pme":
        PmeParams(M, d)
        return Barenblatt(d, M)
    if p > 2:
        return PBarenblatt(d, p)
    return None


def _grid(s, equation: str, dx: float, store_every=None, gaussian=False, dt_cap=None):
    """Solve ``equation`` and return ``(solution, exact or None, t_origin)``.

    ``gaussian=True`` starts the nonlinear equations from Gaussian data, which
    keeps the solution positive everywhere.
    """
    exact = _exact_oracle(equation, s.d, s.M, s.p)
    if gaussian and equation != "heat":
        exact = None
    boundary = s.boundary or ("exact" if exact is not None else "fixed")
    eps = s.eps if s.eps is not None else (0.0 if equation != "pdiff" or s.p >= 2 else 1e-3)
    cfg = SolverConfig(
        L=s.L, dx=dx, t_start=s.t_start, t_end=s.t_end, cfl=s.cfl, d=s.d,
        boundary=boundary, eps=eps, store_every=store_every, max_snapshots=s.max_snapshots,
        dt_cap=dt_cap if dt_cap is not None else s.dt_cap,
    )
    if exact is not None:
        initial, origin = None, 0.0
    else:
        # Gaussian data: the estimates' clock starts at t_start
        initial, origin = HeatKernel(s.d), s.t_start
    if equation == "heat":
        sol = solve_heat(cfg, initial=initial, exact=exact)
    elif equation == "pme":
        sol = solve_pme(s.M, cfg, initial=initial, exact=exact)
    else:
        sol = solve_pdiff(s.p, cfg, initial=initial, exact=exact)
    if not np.all(np.isfinite(sol.values)):
        raise CommandFailed(EXIT_NONCONVERGENCE, f"non-finite values in the {equation} solution at dx={dx}")
    return sol, exact, origin


def cmd_solve(s) -> int:
    out = Path(s.out)
    if s.refine == 0:
        sol, exact, _ = _grid(s, s.equation, s.dx, s.store_every)
        sol.write(out, "solution")
        err = sol.metadata.get("l1_error_final")
        md = sol.metadata
        row = (s.equation, s.d, s.L, s.dx, s.t_start, s.t_end, md["steps"], md["dt_max"], sol.mass(-1), err)
        write_csv(out / "solve.csv", SOLVE_HEADER, [row])
        print(f"steps={md['steps']} mass={sol.mass(-1)!r} l1_error={err!r}")
        if s.svg:
            mid = sol.axis.size // 2
            line = sol.values[-1][(slice(None),) + (mid,) * (s.d - 1)]
            chart = LineChart(f"{s.equation} at t={sol.times[-1]:g}", "x", "u")
            chart.add("numeric", sol.axis, line)
            if exact is not None:
                pts = np.zeros((sol.axis.size, s.d))
                pts[:, 0] = sol.axis
                chart.add("exact", sol.axis, exact.u(pts, sol.times[-1]), dashed=True)
            _emit_svg(s, chart, "solve.svg")
        return EXIT_OK

    if _exact_oracle(s.equation, s.d, s.M, s.p) is None:
        raise ConfigError(f"refinement needs an exact solution; none is available for p={s.p} < 2")
    rows, errors, dxs = [], [], []
    for level in range(s.refine):
        dx = s.dx / 2**level
        sol, exact, _ = _grid(s, s.equation, dx, s.store_every)
        err = sol.l1_error(exact, -1)
        order = math.log2(errors[-1] / err) if errors and err > 0 else None
        errors.append(err)
        dxs.append(dx)
        rows.append((level, dx, sol.metadata["dt_max"], sol.metadata["steps"], err, order))
        print(f"dx={dx!r} l1_error={err!r}" + (f" order={order:.3f}" if order is not None else ""))
    write_csv(out / "refinement.csv", REFINE_HEADER, rows)
    if s.svg:
        chart = LineChart(f"{s.equation} refinement", "dx", "L1 error", log_y=True)
        chart.add("L1 error", dxs, errors)
        _emit_svg(s, chart, "refinement.svg")
    if any(b >= a for a, b in zip(errors, errors[1:])):
        raise CommandFailed(EXIT_NONCONVERGENCE, "the L1 error did not decrease under refinement")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify

DEFAULT_ORACLE = {
    "liyau": "heat-kernel",
    "aronson-benilan": "barenblatt",
    "esteban-vazquez": "p-barenblatt",
    "benilan-crandall": "separable",
    "harnack": "heat-kernel",
    "weak-form": "grid",
}
GRID_EQUATION = {"liyau": "heat", "aronson-benilan": "pme", "esteban-vazquez": "pdiff", "benilan-crandall": "pdiff"}


def _analytic(s, oracle: str):
    if oracle == "heat-kernel":
        return HeatKernel(s.d)
    if oracle == "barenblatt":
        PmeParams(s.M, s.d)
        return Barenblatt(s.d, s.M)
    if oracle == "p-barenblatt":
        return PBarenblatt(s.d, s.p)
    if oracle == "separable":
        if s.p == 2.0:
            return SeparableProfile(-s.d / 2, d=s.d)
        return SeparableProfile(1.0 / (2.0 - s.p), c=0.7, d=s.d)
    raise ConfigError(f"oracle {oracle!r} is not analytic")


def _plan(s, t_origin=0.0, grid=False) -> SamplePlan:
    t_range = (s.t_end, s.t_end) if grid else (s.t_min, s.t_max)
    return SamplePlan(
        n_points=s.samples, n_pairs=s.samples, seed=s.seed, x_half_width=s.x_half_width,
        t_range=t_range, dt_min=s.dt_min, dt_max=s.dt_max, t_origin=t_origin, tol_constant=s.tol_constant,
    )


def _producer(s, equation: str):
    if equation == "heat":
        return heat_producer(s.d)
    if equation == "pme":
        return pme_producer(s.M, s.d)
    return pdiff_producer(s.p, s.d, s.K)


def cmd_verify(s) -> int:
    oracle = s.oracle or DEFAULT_ORACLE[s.inequality]
    out = Path(s.out)
    if s.inequality == "weak-form":
        return _verify_weak_form(s, oracle, out)

    if oracle == "grid":
        equation = s.equation or GRID_EQUATION.get(s.inequality, "heat")
        sol, _, origin = _grid(s, equation, s.dx)
        plan = _plan(s, origin, grid=True)
    else:
        sol = _analytic(s, oracle)
        equation = {"heat-kernel": "heat", "barenblatt": "pme", "p-barenblatt": "pdiff", "separable": "pdiff"}[oracle]
        plan = _plan(s)

    if s.inequality == "liyau":
        report = li_yau_check(sol, plan)
    elif s.inequality == "aronson-benilan":
        report = aronson_benilan_check(sol, s.M, plan)
    elif s.inequality == "esteban-vazquez":
        report = esteban_vazquez_check(sol, s.p, s.K, plan)
    elif s.inequality == "benilan-crandall":
        report = benilan_crandall_check(sol, s.p, plan)
    else:
        if plan.t_origin != 0:
            raise ConfigError("Harnack pairs need a solution whose clock starts at t = 0 (an exact oracle)")
        report = harnack_check(sol, _producer(s, equation), plan)

    write_reports([report], out, "verification")
    print(
        f"{report.inequality}: samples={report.samples} violations={report.violations} "
        f"tolerated={report.tolerated} worst_margin={report.worst_margin!r}"
    )
    if report.violations:
        raise CommandFailed(EXIT_VIOLATIONS, f"{report.violations} violations of {report.inequality}")
    return EXIT_OK


def _verify_weak_form(s, oracle: str, out: Path) -> int:
    if oracle != "grid":
        raise ConfigError("the weak-form residual is computed on grid solutions only (--oracle grid)")
    if s.equation == "pme":
        raise ConfigError("the weak form is stated for p-diffusion (heat is p = 2)")
    equation = "heat" if s.equation == "heat" or s.p == 2.0 else "pdiff"
    PdiffParams(s.p if equation == "pdiff" else 2.0, s.d)
    # the pressure u^gamma / gamma of p-diffusion has gamma = (p-2)/(p-1)
    gamma = 0.0 if equation == "heat" else (s.p - 2.0) / (s.p - 1.0)
    # time integrals need the bumps resolved in time even where the stable step is long
    cap = s.dt_cap if s.dt_cap is not None else (s.t_end - s.t_start) / 1000
    sol, _, _ = _grid(s, equation, s.dx, store_every=1, gaussian=True, dt_cap=cap)
    bumps = random_bumps(sol, s.bumps, seed=s.seed)
    residual = weak_form_residual(sol, gamma, bumps, relative=True)
    passed = residual <= s.weak_tol
    write_csv(out / "weak_form.csv", WEAK_HEADER, [(equation, gamma, s.dx, s.bumps, residual, s.weak_tol, passed)])
    print(f"weak_form: relative_residual={residual!r} tolerance={s.weak_tol!r}")
    if not passed:
        raise CommandFailed(EXIT_VIOLATIONS, "weak-form residual above tolerance")
    return EXIT_OK


# --------------------------------------------------------------------------
# hoelder


def cmd_hoelder(s) -> int:
    cfg = SolverConfig(L=s.L, dx=s.dx, t_start=s.t_start, t_end=s.t_end, d=s.d, max_snapshots=s.max_snapshots)
    # Gaussian data sampled from the kernel; the exact kernel also supplies the boundary values
    sol = solve_heat(cfg, exact=HeatKernel(s.d))
    cyls = sample_cylinders(s.L, s.dx, s.t_start, s.t_end, s.d, s.cylinders, (s.r_min, s.r_max), s.seed)
    ratios = [estimate_harnack_constant(sol, c, t0, R) for c, t0, R in cyls]
    C = s.C if s.C is not None else max(4.0 / 3.0, max(ratios))
    params = HolderParams(C)
    rows, failures = [], 0
    for i, ((c, t0, R), ratio) in enumerate(zip(cyls, ratios)):
        res = oscillation_inequality_check(sol, c, t0, R, C)
        failures += not res["holds"]
        rows.append((i, c, t0, R, ratio, res["omega"], res["omega_plus"], res["zeta"], res["holds"]))

    d = s.d
    box = SpaceTimeBox(
        (s.outer_x[0],) * d, (s.outer_x[1],) * d, (s.inner_x[0],) * d, (s.inner_x[1],) * d, *_four(s.box_times)
    )
    dist = parabolic_distance(box)
    sup = sup_norm(sol, box)
    quotient = empirical_holder_quotient(sol, box, params.nu, s.pairs, seed=s.seed)
    bound = holder_bound(C, dist, sup)
    holds = quotient <= bound
    out = Path(s.out)
    write_csv(out / "hoelder_cylinders.csv", CYLINDER_HEADER, rows)
    summary = (C, params.zeta, params.nu, dist, sup, quotient, bound, holds, len(cyls), failures)
    write_csv(out / "hoelder.csv", HOELDER_HEADER, [summary])
    print(
        f"C={C!r} nu={params.nu!r} quotient={quotient!r} bound={bound!r} "
        f"holder_holds={_cell(holds)} oscillation_failures={failures}/{len(cyls)}"
    )
    if s.svg:
        _oscillation_chain_svg(s, sol, cyls[0], params)
    if failures or not holds:
        raise CommandFailed(EXIT_VIOLATIONS, "oscillation or Hölder inequality violated")
    return EXIT_OK


def _four(v) -> tuple:
    if len(v) != 4:
        raise ConfigError(f"box_times needs four times T1,T2,T3,T4, got {len(v)}")
    return tuple(v)


def _oscillation_chain_svg(s, sol, cyl, params) -> None:
    """Oscillation over cylinders shrinking by 4 around one centre, with the geometric decay."""
    center, t0, R = cyl
    radii, omegas = [], []
    while R >= 2 * s.dx:
        omegas.append(oscillation(sol, ParabolicCylinder(center, t0, R, CylinderKind.FULL)))
        radii.append(R)
        R /= 4
    steps = np.arange(len(radii))
    chart = LineChart("oscillation chain", "step j (R_j = R_0 / 4^j)", "oscillation", log_y=True)
    chart.add("omega(R_j)", steps, omegas)
    chart.add("zeta^j omega(R_0)", steps, omegas[0] * params.zeta**steps, dashed=True)
    _emit_svg(s, chart, "hoelder.svg")


# --------------------------------------------------------------------------
# parser


def _common(opts: _Options):
    opts.parser.add_argument("--config", default=None, help="JSON file of option values; flags override it")
    opts.opt("--out", _str, ".", "output directory")
    opts.opt("--seed", _int, 0, "random seed")
    opts.opt("--svg", _bool, False, "also write an SVG line chart")


def _solver_options(opts: _Options, L=8.0, dx=0.1, t_end=2.0):
    opts.opt("--d", _int, 1, "space dimension")
    opts.opt("--M", _float, 2.0, "porous medium exponent")
    opts.opt("--p", _float, 3.0, "p-diffusion exponent")
    opts.opt("--L", _float, L, "box half-width")
    opts.opt("--dx", _float, dx, "grid spacing")
    opts.opt("--t-start", _float, 1.0, "initial time")
    opts.opt("--t-end", _float, t_end, "final time")
    opts.opt("--cfl", _float, 0.4, "explicit step safety factor in (0, 1)")
    opts.opt("--boundary", _str, None, "exact, fixed or homogeneous (default: exact when an exact solution exists)")
    opts.opt("--eps", _opt_float, None, "gradient regularization for p-diffusion")
    opts.opt("--max-snapshots", _int, 400, "stored time levels")
    opts.opt("--dt-cap", _opt_float, None, "largest time step (weak-form default: (t_end - t_start)/1000)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="harnack-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    tables = {}

    sp = _Options("bound", sub.add_parser("bound", help="two-point Harnack bound"))
    sp.positional("kind", "heat", ("general", "heat", "pme", "pdiff"), "which bound")
    sp.opt("--direction", _str, "forward", "estimate direction (general only)", ("forward", "backward"))
    sp.opt("--d", _int, 1, "space dimension")
    sp.opt("--x1", _vector, (0.0,), "first point, comma separated")
    sp.opt("--x2", _vector, (1.0,), "second point, comma separated")
    sp.opt("--t1", _float, 1.0, "first time")
    sp.opt("--t2", _float, 2.0, "second time")
    sp.opt("--u1", _float, 1.0, "value at the first point (f1 for kind general)")
    sp.opt("--C", _float, 1.0, "gradient-estimate constant")
    sp.opt("--p", _float, 2.0, "gradient exponent (general) or p-diffusion exponent (pdiff)")
    sp.opt("--r", _float, 0.0, "power of f in the estimate's denominator")
    sp.opt("--mu", _float, 0.0, "time coefficient a(t) = mu / t")
    sp.opt("--a-const", _opt_float, None, "constant time coefficient a(t) = c (overrides --mu)")
    sp.opt("--M", _float, 2.0, "porous medium exponent")
    sp.opt("--K", _opt_float, None, "p-diffusion estimate constant (default d/(d(p-2)+p))")
    tables["bound"] = sp

    sp = _Options("minimize", sub.add_parser("minimize", help="weighted path minimization"))
    sp.opt("--q", _float, 2.0, "energy exponent q > 1")
    sp.opt("--w", _str, "one", "weight: one, power (t^sigma) or exp (exp(-m mu log t))", ("one", "power", "exp"))
    sp.opt("--sigma", _float, 0.0, "exponent of the power weight")
    sp.opt("--m", _float, 1.0, "exponential weight factor m")
    sp.opt("--mu", _float, 0.0, "exponential weight coefficient mu")
    sp.opt("--d", _int, 1, "path dimension")
    sp.opt("--t1", _float, 1.0, "start time")
    sp.opt("--t2", _float, 2.0, "end time")
    sp.opt("--x1", _vector, (0.0,), "start point")
    sp.opt("--x2", _vector, (1.0,), "end point")
    sp.opt("--knots", _int, 200, "number of knots N")
    sp.opt("--tol", _float, 1e-8, "gradient tolerance")
    sp.opt("--max-iters", _int, 100_000, "iteration cap")
    sp.opt("--spacing", _str, "uniform", "knot spacing: uniform in t or uniform in W", ("uniform", "W"))
    tables["minimize"] = sp

    sp = _Options("solve", sub.add_parser("solve", help="finite-difference solve or refinement study"))
    sp.positional("equation", "heat", ("heat", "pme", "pdiff"), "model equation")
    _solver_options(sp)
    sp.opt("--store-every", _int, None, "store every n-th step")
    sp.opt("--refine", _int, 0, "number of refinement levels (dx, dx/2, ...); 0 writes the solution")
    tables["solve"] = sp

    sp = _Options("verify", sub.add_parser("verify", help="check an estimate on an oracle"))
    ineqs = ("liyau", "aronson-benilan", "esteban-vazquez", "benilan-crandall", "harnack", "weak-form")
    sp.positional("inequality", "liyau", ineqs, "inequality to check")
    sp.opt("--oracle", _str, None, "solution to test (default depends on the inequality)",
           ("heat-kernel", "barenblatt", "p-barenblatt", "separable", "grid"))
    sp.opt("--equation", _str, None, "equation solved for --oracle grid", ("heat", "pme", "pdiff"))
    _solver_options(sp, L=6.0)
    sp.opt("--K", _opt_float, None, "p-diffusion estimate constant")
    sp.opt("--samples", _int, 1000, "analytic sample points, or pairs for harnack")
    sp.opt("--x-half-width", _float, 3.0, "analytic sampling half-width")
    sp.opt("--t-min", _float, 0.1, "analytic sampling start time")
    sp.opt("--t-max", _float, 10.0, "analytic sampling end time")
    sp.opt("--dt-min", _float, 1e-3, "smallest pair time gap")
    sp.opt("--dt-max", _float, 2.0, "largest pair time gap")
    sp.opt("--tol-constant", _float, 10.0, "grid tolerance constant c in c (dx^2 + dt)")
    sp.opt("--bumps", _int, 6, "weak-form test functions")
    sp.opt("--weak-tol", _float, 0.05, "largest accepted relative weak-form residual")
    tables["verify"] = sp

    sp = _Options("hoelder", sub.add_parser("hoelder", help="oscillation decay and Hölder quotient on a heat grid"))
    sp.opt("--d", _int, 1, "space dimension")
    sp.opt("--L", _float, 6.0, "box half-width")
    sp.opt("--dx", _float, 0.02, "grid spacing")
    sp.opt("--t-start", _float, 1.0, "initial time")
    sp.opt("--t-end", _float, 3.0, "final time")
    sp.opt("--max-snapshots", _int, 2000, "stored time levels")
    sp.opt("--cylinders", _int, 100, "random cylinders")
    sp.opt("--r-min", _float, 0.2, "smallest cylinder scale R")
    sp.opt("--r-max", _float, 0.6, "largest cylinder scale R")
    sp.opt("--C", _opt_float, None, "Harnack constant (default: estimated, at least 4/3)")
    sp.opt("--outer-x", _vector, (-4.0, 4.0), "outer box spatial interval")
    sp.opt("--inner-x", _vector, (-2.0, 2.0), "inner box spatial interval")
    sp.opt("--box-times", _vector, (1.2, 1.6, 2.4, 2.8), "times T1 < T2 < T3 < T4")
    sp.opt("--pairs", _int, 10_000, "random pairs for the Hölder quotient")
    tables["hoelder"] = sp

    for opts in tables.values():
        _common(opts)
    return parser, tables


COMMANDS = {"bound": cmd_bound, "minimize": cmd_minimize, "solve": cmd_solve, "verify": cmd_verify, "hoelder": cmd_hoelder}


def main(argv=None) -> int:
    parser, tables = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        settings = _settings(tables[args.command], args)
        return COMMANDS[args.command](settings)
    except CommandFailed as exc:
        print(f"harnack-lab: {exc}", file=sys.stderr)
        return exc.code
    except HarnackLabError as exc:
        print(f"harnack-lab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
