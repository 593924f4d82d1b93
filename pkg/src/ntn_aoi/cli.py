"""Command-line entry point: ``ntn-aoi analyze | sweep | validate``."""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import geometry, renewal_sim
from .aoi_analysis import UpdateModel, breakdown
from .config import ENGINES, ConfigError, ExperimentConfig, load_config
from .errors import ParameterError, PermanentDisconnectionError, StarvationError
from .onoff_process import OnOffParams, mean_service_time, service_cdf
from .orbital_sim import simulate_connectivity, run_geo_aoi
from .stats import ks_statistic

WORKERS_ENV = "NTN_AOI_WORKERS"

CSV_COLUMNS = (
    "sweep_var", "density", "analytic_aoi", "renewal_aoi", "renewal_se", "orbital_aoi", "orbital_se",
    "p_off", "p_f_given_f", "p_o_given_o", "n_delivered", "seed", "status",
)

# validation gate settings
KS_MIN_SAMPLES = 5000
THINNING_MIN_CYCLES = 1000
ORACLE_SIGMAS = 3.0
AOI_REL_TOL = 0.05
VALIDATE_MIN_OFF_PERIODS = 40_000

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DISCONNECTED = 0, 1, 2, 3


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


# ---------------------------------------------------------------- analyze

def cmd_analyze(cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    geo = cfg.geometry_config()
    d = geometry.dome(geo)
    params = OnOffParams(geometry.off_rate(geo, d.earth_zenith), d.earth_zenith, geo.angular_rate)
    model = UpdateModel(cfg.model.update_rate, cfg.model.delay)
    try:
        result = breakdown(params, model)
    except PermanentDisconnectionError as exc:
        print(f"error: permanent disconnection: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED
    rows = [
        ("node_zenith_deg", math.degrees(d.node_zenith)),
        ("earth_zenith_deg", math.degrees(d.earth_zenith)),
        ("max_range_km", d.max_range),
        ("satellite_count", geometry.satellite_count(geo.density, geo)),
        ("off_rate", params.off_rate),
        ("mean_service_time", mean_service_time(params)),
        ("update_rate", model.update_rate),
        ("delay", model.propagation_delay),
    ] + list(asdict(result).items())
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        print(f"{key:<{width}}  {value!r}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------- sweep

@dataclass(frozen=True)
class SweepPoint:
    index: int
    sweep_value: float
    density: float
    update_rate: float
    node_zenith_deg: float | None
    seed: int


def sweep_points(cfg: ExperimentConfig) -> list[SweepPoint]:
    """Grid in output order: densities outermost, sweep grid innermost."""
    s = cfg.sweep
    pairs = [(v, v) for v in s.grid] if s.variable == "density" else [(v, rho) for rho in s.densities for v in s.grid]
    points = []
    for i, (value, density) in enumerate(pairs):
        points.append(SweepPoint(
            index=i,
            sweep_value=value,
            density=density,
            update_rate=value if s.variable == "update_rate" else cfg.model.update_rate,
            node_zenith_deg=value if s.variable == "node_zenith" else None,
            seed=renewal_sim.point_seed(cfg.sim.seed, i),
        ))
    return points


def _engines(name: str) -> set[str]:
    return {"analytic", "renewal", "orbital"} if name == "all" else {name}


def evaluate_point(cfg: ExperimentConfig, pt: SweepPoint) -> dict:
    engines = _engines(cfg.sim.engine)
    geo = cfg.geometry_config(density=pt.density, node_zenith_deg=pt.node_zenith_deg)
    d = geometry.dome(geo)
    params = OnOffParams(geometry.off_rate(geo, d.earth_zenith), d.earth_zenith, geo.angular_rate)
    model = UpdateModel(pt.update_rate, cfg.model.delay)
    row = dict.fromkeys(CSV_COLUMNS)
    row.update(sweep_var=pt.sweep_value, density=pt.density, seed=pt.seed, status="ok")
    if params.off_rate == 0:
        row["status"] = "disconnected"
        return row
    if "analytic" in engines:
        b = breakdown(params, model)
        row.update(analytic_aoi=b.time_avg_aoi, p_off=b.p_off, p_f_given_f=b.p_f_given_f,
                   p_o_given_o=b.p_o_given_o)
    n = renewal_sim.arrivals_for_power(params, model, cfg.sim.n_arrivals, cfg.sim.min_off_periods)
    try:
        if "renewal" in engines:
            est = renewal_sim.run(params, model, n, pt.seed)
            row.update(renewal_aoi=est.time_avg_aoi, renewal_se=est.std_error, n_delivered=est.n_delivered)
        if "orbital" in engines:
            est = run_geo_aoi(geo, d, model, n, pt.seed)
            row.update(orbital_aoi=est.time_avg_aoi, orbital_se=est.std_error)
            if row["n_delivered"] is None:
                row["n_delivered"] = est.n_delivered
    except StarvationError:
        row["status"] = "starved"
    return row


def _evaluate_star(args):
    return evaluate_point(*args)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    points = sweep_points(cfg)
    workers = worker_count() if workers is None else workers
    jobs = [(cfg, p) for p in points]
    if workers <= 1 or len(points) <= 1 or cfg.sim.engine == "analytic":
        return [_evaluate_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
        # map yields in submission order, so rows stay in grid order
        return list(pool.map(_evaluate_star, jobs))


def write_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([row["status"] if c == "status" else _fmt(row[c]) for c in CSV_COLUMNS])


def cmd_sweep(cfg: ExperimentConfig) -> int:
    directory = os.path.dirname(os.path.abspath(cfg.output))
    if not os.access(directory, os.W_OK):
        print(f"error: output.path: cannot write to {cfg.output}", file=sys.stderr)
        return EXIT_USAGE
    rows = run_sweep(cfg)
    try:
        write_csv(rows, cfg.output)
    except OSError as exc:
        print(f"error: output.path: {exc}", file=sys.stderr)
        return EXIT_USAGE
    flagged = [r for r in rows if r["status"] != "ok"]
    print(f"wrote {len(rows)} rows to {cfg.output}" + (f" ({len(flagged)} flagged)" if flagged else ""))
    return EXIT_OK


# ---------------------------------------------------------------- validate

@dataclass(frozen=True)
class Gate:
    name: str
    status: str  # "pass", "fail" or "skip"
    detail: str


def _sigma_gate(name: str, empirical: float, se: float, expected: float, low_power: bool = False) -> Gate:
    detail = f"empirical={empirical:.6g} expected={expected:.6g} se={se:.3g}"
    if low_power or not math.isfinite(se):
        return Gate(name, "skip", detail + " (low power)")
    ok = abs(empirical - expected) <= ORACLE_SIGMAS * se
    return Gate(name, "pass" if ok else "fail", detail)


def _rel_gate(name: str, got: float, ref: float) -> Gate:
    rel = abs(got - ref) / ref
    return Gate(name, "pass" if rel <= AOI_REL_TOL else "fail", f"got={got:.6g} ref={ref:.6g} rel={rel:.3%}")


def validation_gates(cfg: ExperimentConfig, corrupt_off_rate: float = 1.0) -> list[Gate]:
    """Run every gate at the configured single point.

    ``corrupt_off_rate`` scales the off-rate used as the analytic reference
    (the simulators keep the true one), so the gates can be shown to react.
    """
    geo = cfg.geometry_config()
    d = geometry.dome(geo)
    true = OnOffParams(geometry.off_rate(geo, d.earth_zenith), d.earth_zenith, geo.angular_rate)
    ref = replace(true, off_rate=true.off_rate * corrupt_off_rate)
    model = UpdateModel(cfg.model.update_rate, cfg.model.delay)
    seed = cfg.sim.seed
    gates: list[Gate] = []

    conn = simulate_connectivity(geo, d, cfg.sim.n_cycles, renewal_sim.point_seed(seed, 0))
    off = conn.complete_off_durations
    chords = conn.chord_durations
    if off.size >= KS_MIN_SAMPLES:
        stat, crit = ks_statistic(off, lambda x: -np.expm1(-ref.off_rate * x))
        gates.append(Gate("off_law_ks", "pass" if stat <= crit else "fail", f"D={stat:.5f} crit={crit:.5f} n={off.size}"))
        mean = float(off.mean())
        se = float(off.std(ddof=1) / math.sqrt(off.size))
        gates.append(_sigma_gate("off_rate", mean, se, 1.0 / ref.off_rate))
    else:
        gates.append(Gate("off_law_ks", "skip", f"n={off.size} < {KS_MIN_SAMPLES}"))
        gates.append(Gate("off_rate", "skip", f"n={off.size} < {KS_MIN_SAMPLES}"))
    if chords.size >= KS_MIN_SAMPLES:
        stat, crit = ks_statistic(chords, lambda x: service_cdf(ref, x))
        gates.append(Gate("on_law_ks", "pass" if stat <= crit else "fail", f"D={stat:.5f} crit={crit:.5f} n={chords.size}"))
    else:
        gates.append(Gate("on_law_ks", "skip", f"n={chords.size} < {KS_MIN_SAMPLES}"))
    if conn.band_counts.size >= THINNING_MIN_CYCLES:
        c = conn.band_counts
        # satellites in the reachable band per revolution: off_rate * period
        expected = ref.off_rate * geo.revolution_period
        gates.append(_sigma_gate("thinning_count", float(c.mean()), math.sqrt(expected / c.size), expected))
    else:
        gates.append(Gate("thinning_count", "skip", f"cycles={conn.band_counts.size} < {THINNING_MIN_CYCLES}"))

    sim_seed = renewal_sim.point_seed(seed, 1)
    est = renewal_sim.run(true, model, cfg.sim.n_arrivals, sim_seed)
    b = breakdown(ref, model)
    low = est.n_off_periods < renewal_sim.MIN_CLASS_COUNT
    gates += [
        _sigma_gate("p_off", est.empirical_p_off, est.p_off_se, b.p_off, low),
        _sigma_gate("p_f_given_f", est.empirical_p_f_given_f, est.p_f_given_f_se, b.p_f_given_f, low),
        _sigma_gate("p_o_given_o", est.empirical_p_o_given_o, est.p_o_given_o_se, b.p_o_given_o, low),
        _sigma_gate("mean_y", est.empirical_mean_y, est.mean_y_se, b.mean_y, low),
        _sigma_gate("second_moment_y", est.empirical_second_moment_y, est.second_moment_y_se, b.second_moment_y, low),
    ]

    n_big = renewal_sim.arrivals_for_power(true, model, cfg.sim.n_arrivals, VALIDATE_MIN_OFF_PERIODS)
    ren = renewal_sim.run(true, model, n_big, renewal_sim.point_seed(seed, 2))
    orb = run_geo_aoi(geo, d, model, n_big, renewal_sim.point_seed(seed, 3))
    gates.append(_rel_gate("aoi_renewal", ren.time_avg_aoi, b.time_avg_aoi))
    gates.append(_rel_gate("aoi_orbital", orb.time_avg_aoi, b.time_avg_aoi))
    return gates


def cmd_validate(cfg: ExperimentConfig, corrupt_off_rate: float = 1.0, out=None) -> int:
    out = out or sys.stdout
    try:
        gates = validation_gates(cfg, corrupt_off_rate)
    except PermanentDisconnectionError as exc:
        print(f"error: permanent disconnection: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED
    except StarvationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for g in gates:
        print(f"{g.status.upper():4}  {g.name:<16} {g.detail}", file=out)
    failed = sum(g.status == "fail" for g in gates)
    skipped = sum(g.status == "skip" for g in gates)
    print(f"{len(gates) - failed - skipped} passed, {failed} failed, {skipped} skipped", file=out)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------- entry

def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI experiment file (defaults used when omitted)")
    common.add_argument("--seed", type=_u64, help="master seed")
    common.add_argument("--arrivals", type=int, dest="n_arrivals", metavar="N", help="update arrivals per point")
    common.add_argument("--engine", choices=ENGINES)
    common.add_argument("--out", dest="output", metavar="PATH", help="CSV output path")
    common.add_argument("--min-off-periods", type=int, metavar="K",
                        help="raise arrivals so each point spans about K off periods")
    common.add_argument("--cycles", type=int, dest="n_cycles", metavar="N",
                        help="orbital revolutions for the validate KS gates")
    common.add_argument("--corrupt-off-rate", type=float, default=1.0, help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="ntn-aoi", description="Age of information under LEO satellite coverage.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="closed-form breakdown at one point")
    sub.add_parser("sweep", parents=[common], help="write a parameter sweep as CSV")
    sub.add_parser("validate", parents=[common], help="run simulation gates against the closed forms")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
        cfg = cfg.with_overrides(seed=args.seed, n_arrivals=args.n_arrivals, engine=args.engine,
                                 output=args.output, min_off_periods=args.min_off_periods,
                                 n_cycles=args.n_cycles)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_validate(cfg, args.corrupt_off_rate)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
