"""Sweeps over analytic and simulated cooperation availability, and their comparison."""

import csv
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dish import analytic
from dish.sim import run
from dish.sim.config import DISH_MODES, MODEL_BASED, SATURATED, STABLE, SimConfig

ANALYTIC = "analytic"
ALL_MODES = (ANALYTIC,) + DISH_MODES
SWEEP_PARAMS = ("lambda", "n", "L", "joint")

CSV_COLUMNS = ("sweep_param", "sweep_value", "mode", "p_co", "p_co_ci_lo", "p_co_ci_hi", "xi",
               "delta_s", "S_bps", "eta_xi", "eta_delta", "eta_S", "deviation")

# stop/replication counts at which a warning about wall-clock time is issued
LONG_RUN_PACKETS = 100_000
LONG_RUN_REPLICATIONS = 15


class ConfigError(ValueError):
    def __init__(self, key, msg):
        super().__init__(f"{key}: {msg}")
        self.key = key


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _positive(x):
    return _num(x) and x > 0


def _nonneg(x):
    return _num(x) and x >= 0


# section -> key -> (check, message, SimConfig field or None)
SCHEMA = {
    "network": {
        "topology": (lambda v: v in ("single-hop", "multi-hop"), "single-hop or multi-hop", "topology"),
        "n": (_positive, "positive number", "n"),
        "lambda": (_nonneg, "non-negative number", "lam"),
        "L": (lambda v: _int(v) and v > 0, "positive integer", "L"),
        "channels": (lambda v: _int(v) and v >= 2, "integer >= 2 (1 control + data)", "num_channels"),
        "rate_bps": (_positive, "positive number", None),
        "area_m": (_positive, "positive number", "area_m"),
        "range_m": (_positive, "positive number", "range_m"),
    },
    "sim": {
        "dish_mode": (lambda v: v in DISH_MODES, f"one of {DISH_MODES}", "dish_mode"),
        "traffic": (lambda v: v in (STABLE, SATURATED), f"{STABLE} or {SATURATED}", "traffic_mode"),
        "seed": (lambda v: _int(v) and 0 <= v < 2**64, "integer in [0, 2**64)", "seed"),
        "stop_packets": (lambda v: _int(v) and v > 0, "positive integer", "stop_packets"),
        "replications": (lambda v: _int(v) and v > 0, "positive integer", "replications"),
        "max_time": (_positive, "positive number", "max_time"),
        "contention_b": (_positive, "positive number", "contention_b"),
        "cts_timeout_b": (_positive, "positive number", "cts_timeout_b"),
        "backoff_b": (_positive, "positive number", "backoff_b"),
        "connect_retries": (lambda v: _int(v) and v > 0, "positive integer", "connect_retries"),
    },
    "sweep": {
        "param": (lambda v: v in SWEEP_PARAMS, f"one of {SWEEP_PARAMS}", None),
        "values": (lambda v: isinstance(v, list) and len(v) > 0, "non-empty list", None),
    },
    "run": {
        "modes": (lambda v: isinstance(v, list) and len(v) > 0 and all(m in ALL_MODES for m in v),
                  f"non-empty list drawn from {ALL_MODES}", None),
        "output": (lambda v: isinstance(v, str) and v != "", "path string", None),
        "workers": (lambda v: _int(v) and v >= 1, "integer >= 1", None),
    },
    "assert": {
        "single_hop_tolerance": (_positive, "positive number", None),
        "multi_hop_tolerance": (_positive, "positive number", None),
    },
}


@dataclass
class ExperimentSpec:
    base: SimConfig
    sweep_param: str = None
    values: list = field(default_factory=list)
    modes: tuple = (ANALYTIC, MODEL_BASED)
    output: str = None
    workers: int = 1
    tolerances: dict = field(default_factory=lambda: {"single-hop": 0.07, "multi-hop": 0.12})

    def __post_init__(self):
        if not self.modes:
            raise ConfigError("run.modes", "at least one mode is required")
        for m in self.modes:
            if m not in ALL_MODES:
                raise ConfigError("run.modes", f"unknown mode {m!r}")
        if self.sweep_param is not None and self.sweep_param not in SWEEP_PARAMS:
            raise ConfigError("sweep.param", f"must be one of {SWEEP_PARAMS}")

    def points(self):
        """(sweep value, SimConfig) per point; a single point when no sweep is set."""
        if self.sweep_param is None:
            return [(None, self.base)]
        return [(v, apply_sweep(self.base, self.sweep_param, v)) for v in self.values]

    def with_overrides(self, **kw):
        changes = {k: v for k, v in kw.items() if v is not None}
        mode = changes.pop("mode", None)
        spec = ExperimentSpec(self.base.replace(**changes) if changes else self.base,
                              self.sweep_param, list(self.values), self.modes, self.output,
                              self.workers, dict(self.tolerances))
        if mode is not None:
            spec.modes = tuple(mode) if isinstance(mode, (list, tuple)) else (mode,)
            spec.__post_init__()
        return spec


def apply_sweep(base, param, value):
    if param == "lambda":
        return base.replace(lam=float(value))
    if param == "n":
        return base.replace(n=value)
    if param == "L":
        return base.replace(L=int(value))
    lam, n = value
    return base.replace(lam=float(lam), n=n)


def parse_config(data):
    """Validate a parsed TOML mapping into an ExperimentSpec."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a table")
    for section in data:
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        if not isinstance(data[section], dict):
            raise ConfigError(section, "expected a table")
        for key, val in data[section].items():
            rule = SCHEMA[section].get(key)
            if rule is None:
                raise ConfigError(f"{section}.{key}", "unknown key")
            check, msg, _ = rule
            if not check(val):
                raise ConfigError(f"{section}.{key}", f"expected {msg}, got {val!r}")

    cfg = {}
    for section in ("network", "sim"):
        for key, val in data.get(section, {}).items():
            target = SCHEMA[section][key][2]
            if target is not None:
                cfg[target] = val
    rate = data.get("network", {}).get("rate_bps")
    if rate is not None:
        cfg["rate_control"] = cfg["rate_data"] = float(rate)
    if "lam" in cfg:
        cfg["lam"] = float(cfg["lam"])
    try:
        base = SimConfig(**cfg)
    except ValueError as exc:
        raise ConfigError("network", str(exc)) from None

    sweep = data.get("sweep", {})
    if ("param" in sweep) != ("values" in sweep):
        raise ConfigError("sweep", "param and values go together")
    param = sweep.get("param")
    values = list(sweep.get("values", []))
    for i, v in enumerate(values):
        ok = (isinstance(v, list) and len(v) == 2 and all(map(_positive, v))) if param == "joint" \
            else _nonneg(v) if param == "lambda" else _positive(v)
        if not ok:
            raise ConfigError(f"sweep.values[{i}]", f"bad value {v!r} for sweep over {param}")
        try:
            apply_sweep(base, param, v)
        except ValueError as exc:
            raise ConfigError(f"sweep.values[{i}]", str(exc)) from None

    run_sec = data.get("run", {})
    tol = {"single-hop": 0.07, "multi-hop": 0.12}
    a = data.get("assert", {})
    tol["single-hop"] = a.get("single_hop_tolerance", tol["single-hop"])
    tol["multi-hop"] = a.get("multi_hop_tolerance", tol["multi-hop"])
    spec = ExperimentSpec(base, param, values, tuple(run_sec.get("modes", (ANALYTIC, MODEL_BASED))),
                          run_sec.get("output"), run_sec.get("workers", 1), tol)
    if base.stop_packets >= LONG_RUN_PACKETS or base.replications >= LONG_RUN_REPLICATIONS:
        warnings.warn(f"{base.stop_packets} packets x {base.replications} replications per point "
                      "may take hours on one core", RuntimeWarning, stacklevel=2)
    return spec


def load_config(path):
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"not valid TOML: {exc}") from None
    return parse_config(data)


# -- evaluation --------------------------------------------------------

def analytic_params(cfg):
    return analytic.NetworkParams(n=cfg.n, lam=cfg.lam, T_d=cfg.T_d, b=cfg.b, topology=cfg.topology)


def analytic_p_co(cfg):
    """Analytic availability for a stable-traffic config, or None outside the stable region."""
    if cfg.traffic_mode == SATURATED:
        return None
    try:
        return analytic.p_co(analytic_params(cfg)).p_co
    except analytic.NoStableSolution:
        return None


def _simulate(cfg):
    return run(cfg)


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _ratio(a, b):
    if a is None or b is None or b == 0:
        return None
    return a / b


def _mean(iv):
    return None if iv is None else iv.mean


def compare(spec):
    """One row per (sweep point, mode). Simulated rows carry η ratios against model-based."""
    points = spec.points()
    sim_modes = [m for m in spec.modes if m != ANALYTIC]
    jobs = [cfg.replace(dish_mode=m) for _, cfg in points for m in sim_modes]
    results = iter(_map(_simulate, jobs, spec.workers))
    param = spec.sweep_param or ""
    rows = []
    for value, cfg in points:
        a = analytic_p_co(cfg)
        if ANALYTIC in spec.modes:
            rows.append(dict(sweep_param=param, sweep_value=value, mode=ANALYTIC, p_co=a))
        per_mode = {m: next(results) for m in sim_modes}
        ref = per_mode.get(MODEL_BASED)
        for m in sim_modes:
            met = per_mode[m]
            row = dict(sweep_param=param, sweep_value=value, mode=m, p_co=met.p_co,
                       xi=_mean(met.xi), delta_s=_mean(met.delta), S_bps=_mean(met.S))
            if met.p_co_ci is not None:
                row["p_co_ci_lo"] = met.p_co_ci.lo
                row["p_co_ci_hi"] = met.p_co_ci.hi
            if ref is not None and m != MODEL_BASED:
                row["eta_xi"] = _ratio(_mean(met.xi), _mean(ref.xi))
                row["eta_delta"] = _ratio(_mean(met.delta), _mean(ref.delta))
                row["eta_S"] = _ratio(_mean(ref.S), _mean(met.S))
            if a is not None and a > 0 and met.p_co is not None:
                row["deviation"] = abs(met.p_co - a) / a
            row["_metrics"] = met
            row["_config"] = cfg
            rows.append(row)
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return ":".join(_fmt(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def tolerance_breaches(rows, tolerances):
    """Simulated model-based rows whose deviation from analysis exceeds the topology tolerance."""
    bad = []
    for r in rows:
        if r["mode"] != MODEL_BASED or r.get("deviation") is None:
            continue
        tol = tolerances[r["_config"].topology]
        if r["deviation"] > tol:
            bad.append(r)
    return bad


# -- correlation -------------------------------------------------------

@dataclass
class LinearFit:
    slope: float
    intercept: float
    r: float

    @property
    def r2(self):
        return self.r * self.r


def linear_fit(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    if np.std(x) == 0 or np.std(y) == 0:
        r = 0.0
    else:
        r = float(np.corrcoef(x, y)[0, 1])
    return LinearFit(float(slope), float(intercept), r)


@dataclass
class CorrelationReport:
    tuples: list  # (sweep value, p_co, eta_xi, eta_delta, eta_S)
    fits: dict  # eta name -> LinearFit against p_co
    spread: dict  # eta name -> (mean, max - min) of eta + p_co

    def monotone_opposite(self, name):
        """True when eta moves against p_co at every step of the sweep."""
        pts = [(t[1], t[2 + ("eta_xi", "eta_delta", "eta_S").index(name)]) for t in self.tuples]
        steps = [(b[0] - a[0]) * (b[1] - a[1]) for a, b in zip(pts, pts[1:])]
        return all(s < 0 for s in steps)


def correlate(rows, mode=None, use_analytic=True):
    """Pair p_co with the η ratios of ``mode`` (first cooperative mode found by default)."""
    by_value = {}
    for r in rows:
        by_value.setdefault(_fmt(r["sweep_value"]), {})[r["mode"]] = r
    if mode is None:
        present = {r["mode"] for r in rows}
        mode = next((m for m in DISH_MODES if m != MODEL_BASED and m in present), None)
        if mode is None:
            raise ValueError("correlation needs an ideal or real mode alongside model-based")
    tuples = []
    for key, modes in by_value.items():
        if mode not in modes or MODEL_BASED not in modes:
            continue
        x = modes.get(ANALYTIC, {}).get("p_co") if use_analytic else None
        if x is None:
            x = modes[MODEL_BASED]["p_co"]
        r = modes[mode]
        tuples.append((r["sweep_value"], x, r.get("eta_xi"), r.get("eta_delta"), r.get("eta_S")))
    if len(tuples) < 4:
        raise ValueError(f"correlation needs at least 4 sweep points, got {len(tuples)}")
    fits, spread = {}, {}
    for i, name in enumerate(("eta_xi", "eta_delta", "eta_S"), start=2):
        pairs = [(t[1], t[i]) for t in tuples if t[1] is not None and t[i] is not None]
        if len(pairs) < 4:
            continue
        xs, ys = zip(*pairs)
        fits[name] = linear_fit(xs, ys)
        s = [a + b for a, b in pairs]
        spread[name] = (float(np.mean(s)), float(max(s) - min(s)))
    return CorrelationReport(tuples, fits, spread)


def format_report(report):
    out = ["sweep_value,p_co,eta_xi,eta_delta,eta_S"]
    for t in report.tuples:
        out.append(",".join(_fmt(v) for v in t))
    for name, fit in report.fits.items():
        mean, width = report.spread[name]
        out.append(f"# {name}: slope={fit.slope:.6g} intercept={fit.intercept:.6g} "
                   f"r={fit.r:.4f} R2={fit.r2:.4f} {name}+p_co mean={mean:.4f} spread={width:.4f}")
    return "\n".join(out)
