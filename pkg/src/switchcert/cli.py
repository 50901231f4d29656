"""Command-line interface: certify, sweep, attack, simulate, oracle, bench, lp-debug.

Scenarios come from JSON config files::

    {
      "schema_version": 1,
      "kind": "delay_free_ncs",
      "system": {"A": [[1, 0.1], [-0.5, 1.1]], "B": [[0.1], [1.2]], "K": [[-2.9012, -0.9411]], "rho": 0.5},
      "analysis": {"h": 22, "norm": "spectral", "epsilon": 1e-24},
      "sweep": {"h": [1, 2, 3], "grid": {"rho": [0.3, 0.5, 0.7]}},
      "signal": {"type": "gilbert_elliott", "p": 0.5, "q": 0.5, "e": 0.05, "f": 0.9}
    }

``norm`` is one of one, inf, spectral, frobenius, weighted (with a ``weight``
matrix ``P``) or lyapunov (weighted, ``P`` from the Lyapunov equation of mode 1).

Exit codes: 0 certified stable, 2 inconclusive, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import json.decoder
import json.scanner
import logging
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .certify import (
    DEFAULT_EPSILON,
    StabilityCertificate,
    build_lp1,
    build_lp2,
    certify,
    extract_attack,
    monodromy_check,
)
from .lifting import MATERIALIZE_LIMIT, build_gamma_tables, variable_counts
from .lpcore import solve, verify_certificate
from .matlib import InvalidInput, NormKind, norm_kind
from .model import ActivationBounds, SwitchedSystem
from .ncs import Plant, build_delay_free, build_two_channel, lyapunov_weight, prop2_bounds
from .signals import (
    HiddenMarkovSpec,
    PeriodicSignal,
    gilbert_elliott,
    limit_oracle,
    periodic_chain,
    sample_signal,
    simulate_lognorm,
)

log = logging.getLogger("switchcert")

SCHEMA_VERSION = 1
EXIT_STABLE, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2
DEFAULT_SEED = 20170101

KINDS = {
    "raw_switched": {"matrices", "bounds"},
    "delay_free_ncs": {"A", "B", "K", "rho"},
    "two_channel_ncs": {"A", "B", "K_N", "K_D", "sigma_N", "rho_N", "sigma_D", "rho_D"},
}
GRID_KEYS = {
    "raw_switched": (),
    "delay_free_ncs": ("rho",),
    "two_channel_ncs": ("sigma_N", "rho_N", "sigma_D", "rho_D"),
}
TOP_KEYS = {"schema_version", "kind", "system", "analysis", "sweep", "signal"}
# weighted norm with P from the discrete Lyapunov equation of mode 1
LYAPUNOV = "lyapunov"
ANALYSIS_KEYS = {"h", "h_max", "norm", "weight", "epsilon", "lp", "seed", "T", "x0", "max_denominator", "workers"}
SWEEP_KEYS = {"h", "grid"}
SIGNAL_KEYS = {
    "periodic": {"type", "pattern"},
    "explicit": {"type", "modes"},
    "hidden_markov": {"type", "transition", "initial_state", "partition"},
    "gilbert_elliott": {"type", "p", "q", "e", "f"},
}


class ConfigError(Exception):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = path or "config"
        super().__init__(f"{where}:{line}: {message}" if line else f"{where}: {message}")


# ---------------------------------------------------------------- config loading


class _Spans:
    """Remembers where each parsed JSON object/array starts and ends."""

    def __init__(self, text):
        self.text = text
        self.spans = {}
        self.keep = []

    def line_of(self, pos):
        return self.text.count("\n", 0, pos) + 1

    def line_for(self, obj, key=None):
        span = self.spans.get(id(obj))
        if span is None:
            return None
        start, end = span
        if key is not None:
            hit = self.text.find(json.dumps(key), start, end)
            if hit >= 0:
                return self.line_of(hit)
        return self.line_of(start)


def _parse_json(text):
    spans = _Spans(text)
    decoder = json.JSONDecoder()

    def parse_object(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None):
        start = s_and_end[1] - 1
        obj, end = json.decoder.JSONObject(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo)
        spans.spans[id(obj)] = (start, end)
        spans.keep.append(obj)
        return obj, end

    def parse_array(s_and_end, scan_once):
        start = s_and_end[1] - 1
        obj, end = json.decoder.JSONArray(s_and_end, scan_once)
        spans.spans[id(obj)] = (start, end)
        spans.keep.append(obj)
        return obj, end

    decoder.parse_object = parse_object
    decoder.parse_array = parse_array
    decoder.memo = {}
    decoder.scan_once = json.scanner.py_make_scanner(decoder)
    try:
        data = decoder.decode(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    return data, spans


@dataclass
class Scenario:
    kind: str
    system: SwitchedSystem
    bounds: ActivationBounds
    params: dict
    analysis: dict
    sweep: dict | None
    signal: object | None
    raw_system: dict


class _Loader:
    def __init__(self, text, path=None):
        self.path = path
        self.data, self.spans = _parse_json(text)

    def fail(self, msg, obj=None, key=None):
        line = self.spans.line_for(obj, key) if obj is not None else None
        raise ConfigError(msg, line, self.path)

    def obj(self, parent, key, required=True):
        if key not in parent:
            if required:
                self.fail(f"missing field '{key}'", parent)
            return None
        val = parent[key]
        if not isinstance(val, dict):
            self.fail(f"'{key}' must be an object", parent, key)
        return val

    def check_keys(self, obj, allowed, where):
        for k in obj:
            if k not in allowed:
                self.fail(f"unknown field '{k}' in {where}", obj, k)

    def number(self, parent, key, lo=None, hi=None, integer=False):
        if key not in parent:
            self.fail(f"missing field '{key}'", parent)
        v = parent[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
            self.fail(f"'{key}' must be {'an integer' if integer else 'a number'}", parent, key)
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            self.fail(f"'{key}' = {v} outside [{lo}, {hi}]", parent, key)
        return v

    def matrix(self, parent, key):
        if key not in parent:
            self.fail(f"missing field '{key}'", parent)
        return self.matrix_value(parent[key], key, self.spans.line_for(parent, key))

    def matrix_value(self, m, name, line):
        if not isinstance(m, list) or not m:
            raise ConfigError(f"'{name}' must be a nonempty array of rows", line, self.path)
        width = None
        for i, row in enumerate(m):
            row_line = self.spans.line_for(row) or line
            if not isinstance(row, list) or not row:
                raise ConfigError(f"'{name}' row {i + 1} must be a nonempty array of numbers", row_line, self.path)
            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in row):
                raise ConfigError(f"'{name}' row {i + 1} has a non-numeric entry", row_line, self.path)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ConfigError(f"'{name}' row {i + 1} has {len(row)} entries, expected {width}",
                                  row_line, self.path)
        return np.array(m, dtype=float)

    def vector(self, parent, key):
        v = parent.get(key)
        if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            self.fail(f"'{key}' must be an array of numbers", parent, key)
        return [float(x) for x in v]

    def load(self) -> Scenario:
        d = self.data
        if not isinstance(d, dict):
            raise ConfigError("top level must be an object", 1, self.path)
        self.check_keys(d, TOP_KEYS, "top level")
        if d.get("schema_version") != SCHEMA_VERSION:
            self.fail(f"schema_version must be {SCHEMA_VERSION}", d, "schema_version" if "schema_version" in d else None)
        kind = d.get("kind")
        if kind not in KINDS:
            self.fail(f"kind must be one of {sorted(KINDS)}", d, "kind" if "kind" in d else None)
        sysd = self.obj(d, "system")
        self.check_keys(sysd, KINDS[kind], "system")
        params = {}
        try:
            if kind == "raw_switched":
                mats = sysd.get("matrices")
                if not isinstance(mats, list) or not mats:
                    self.fail("'matrices' must be a nonempty array of matrices", sysd, "matrices")
                system = SwitchedSystem(tuple(
                    self.matrix_value(m, f"matrices[{i}]", self.spans.line_for(m) or self.spans.line_for(mats))
                    for i, m in enumerate(mats)))
                bd = self.obj(sysd, "bounds")
                self.check_keys(bd, {"lower", "upper"}, "bounds")
                bounds = ActivationBounds(self.vector(bd, "lower"), self.vector(bd, "upper"))
            else:
                plant = Plant(self.matrix(sysd, "A"), self.matrix(sysd, "B"))
                if kind == "delay_free_ncs":
                    params["rho"] = self.number(sysd, "rho", 0.0, 1.0)
                    system, bounds = build_delay_free(plant, self.matrix(sysd, "K"), params["rho"])
                else:
                    for k in GRID_KEYS[kind]:
                        params[k] = self.number(sysd, k, 0.0, 1.0)
                    system, bounds = build_two_channel(
                        plant, self.matrix(sysd, "K_N"), self.matrix(sysd, "K_D"),
                        tuple(params[k] for k in GRID_KEYS[kind]))
        except InvalidInput as exc:
            self.fail(str(exc), sysd)

        an = self.obj(d, "analysis", required=False) or {}
        self.check_keys(an, ANALYSIS_KEYS, "analysis")
        analysis = self._analysis(an)
        if analysis["norm"] == LYAPUNOV:
            try:
                analysis["norm_kind"] = _lyapunov_norm(system)
            except InvalidInput as exc:
                self.fail(str(exc), an, "norm")

        sweep = None
        if "sweep" in d:
            sw = self.obj(d, "sweep")
            self.check_keys(sw, SWEEP_KEYS, "sweep")
            hs = sw.get("h", [])
            if not isinstance(hs, list) or any(isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in hs):
                self.fail("sweep 'h' must be an array of positive integers", sw, "h")
            grid = sw.get("grid", {})
            if not isinstance(grid, dict):
                self.fail("sweep 'grid' must be an object", sw, "grid")
            self.check_keys(grid, set(GRID_KEYS[kind]), "sweep grid")
            for k in grid:
                self.vector(grid, k)
            sweep = {"h": hs, "grid": {k: [float(v) for v in grid[k]] for k in GRID_KEYS[kind] if k in grid}}

        signal = None
        if "signal" in d:
            signal = self._signal(self.obj(d, "signal"))
        return Scenario(kind, system, bounds, params, analysis, sweep, signal, sysd)

    def _analysis(self, an):
        out = {"h": None, "h_max": None, "norm": "spectral", "weight": None, "epsilon": DEFAULT_EPSILON,
               "lp": 2, "seed": DEFAULT_SEED, "T": 10_000, "x0": None, "max_denominator": 100, "workers": None}
        for key in ("h", "h_max", "lp", "seed", "T", "max_denominator", "workers"):
            if key in an:
                out[key] = self.number(an, key, 0 if key == "seed" else 1, integer=True)
        if "epsilon" in an:
            out["epsilon"] = self.number(an, "epsilon")
            if not 0.0 < out["epsilon"] < 1.0:
                self.fail("'epsilon' must lie in (0, 1)", an, "epsilon")
        if "norm" in an:
            out["norm"] = an["norm"]
        if "weight" in an:
            out["weight"] = self.matrix(an, "weight")
        if "x0" in an:
            out["x0"] = self.vector(an, "x0")
        if out["lp"] not in (1, 2):
            self.fail("'lp' must be 1 or 2", an, "lp")
        try:
            out["norm_kind"] = None if out["norm"] == LYAPUNOV else norm_kind(out["norm"], out["weight"])
        except InvalidInput as exc:
            self.fail(str(exc), an, "norm" if "norm" in an else None)
        return out

    def _signal(self, sg):
        typ = sg.get("type")
        if typ not in SIGNAL_KEYS:
            self.fail(f"signal type must be one of {sorted(SIGNAL_KEYS)}", sg, "type" if "type" in sg else None)
        self.check_keys(sg, SIGNAL_KEYS[typ], "signal")
        try:
            if typ == "periodic":
                return PeriodicSignal(tuple(int(v) for v in self.vector(sg, "pattern")))
            if typ == "explicit":
                return np.array(self.vector(sg, "modes"), dtype=np.int64)
            if typ == "gilbert_elliott":
                return gilbert_elliott(*(self.number(sg, k, 0.0, 1.0) for k in ("p", "q", "e", "f")))
            parts = sg.get("partition")
            if not isinstance(parts, list):
                self.fail("'partition' must be an array of state arrays", sg, "partition")
            return HiddenMarkovSpec(self.matrix(sg, "transition"),
                                    self.number(sg, "initial_state", 0, integer=True), parts)
        except InvalidInput as exc:
            self.fail(str(exc), sg)


def load_config(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from None
    return _Loader(text, path).load()


def load_config_text(text: str, path: str = "<config>") -> Scenario:
    return _Loader(text, path).load()


# ---------------------------------------------------------------- helpers


def _lyapunov_norm(system):
    return NormKind.weighted(lyapunov_weight(system[1]))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _show(x) -> str:
    return repr(float(x))


def _analysis_overrides(sc: Scenario, args):
    an = dict(sc.analysis)
    if getattr(args, "h", None) is not None:
        an["h"] = args.h
    if getattr(args, "h_max", None) is not None:
        an["h_max"] = args.h_max
    if getattr(args, "norm", None) is not None:
        an["norm"] = args.norm
        an["norm_kind"] = (_lyapunov_norm(sc.system) if args.norm == LYAPUNOV
                           else norm_kind(args.norm, an.get("weight")))
    if getattr(args, "epsilon", None) is not None:
        an["epsilon"] = args.epsilon
    if getattr(args, "seed", None) is not None:
        an["seed"] = args.seed
    if getattr(args, "lp", None) is not None:
        an["lp"] = args.lp
    if getattr(args, "workers", None) is not None:
        an["workers"] = args.workers
    if not 0.0 < an["epsilon"] < 1.0:
        raise InvalidInput("epsilon must lie in (0, 1)")
    return an


def _require_h(an):
    if an["h"] is None:
        raise InvalidInput("no horizon: set analysis.h in the config or pass --h")
    return an["h"]


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _certificate_json(cert: StabilityCertificate, kind: str, lp: int) -> dict:
    d = cert.to_dict()
    d["kind"] = kind
    d["lp"] = lp
    return d


def certificate_from_json(text: str) -> StabilityCertificate:
    d = json.loads(text)
    return StabilityCertificate.from_dict({k: d[k] for k in
                                           ("h", "norm", "epsilon", "J", "verdict", "worst_occupancy",
                                            "witness_schedule")})


# ---------------------------------------------------------------- commands


def cmd_certify(args) -> int:
    sc = load_config(args.config)
    an = _analysis_overrides(sc, args)
    h = _require_h(an)
    tables = build_gamma_tables(sc.system, h, an["norm_kind"], an["epsilon"],
                                materialize_sequences=(an["lp"] == 1), workers=an["workers"])
    cert = certify(sc.system, sc.bounds, h, an["norm_kind"], an["epsilon"], tables=tables)
    J = cert.J
    if an["lp"] == 1:
        model = build_lp1(tables, sc.bounds)
        sol = solve(model)
        J1 = sol.objective_value
        print(f"LP1 value: {_show(J1)} (LP2 value {_show(J)})")
    print(f"verdict: {cert.verdict}")
    print(f"J'_{h} = {_show(J)}  (norm={an['norm']}, epsilon={_show(an['epsilon'])})")
    print("worst occupancy:")
    for z, w in cert.worst_occupancy.items():
        print(f"  z={list(z)} weight={_show(w)}")
    print("witnesses:")
    for q, w in cert.witness_schedule:
        print(f"  q={list(q)} weight={_show(w)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(_certificate_json(cert, sc.kind, an["lp"]), fh, indent=2)
            fh.write("\n")
    if args.json:
        print(json.dumps(_certificate_json(cert, sc.kind, an["lp"])))
    return EXIT_STABLE if cert.stable else EXIT_INCONCLUSIVE


def _sweep_cells(sc: Scenario, hs):
    keys = [k for k in GRID_KEYS[sc.kind] if k in (sc.sweep or {}).get("grid", {})]
    values = [sc.sweep["grid"][k] for k in keys]
    for combo in itertools.product(*values):
        params = dict(sc.params)
        params.update(dict(zip(keys, combo)))
        for h in hs:
            yield h, keys, combo, params


def _scenario_bounds(sc: Scenario, params):
    if sc.kind == "raw_switched":
        return sc.bounds
    if sc.kind == "delay_free_ncs":
        return ActivationBounds((1.0 - params["rho"], 0.0), (1.0, params["rho"]))
    return prop2_bounds(*(params[k] for k in GRID_KEYS[sc.kind]))


def cmd_sweep(args) -> int:
    sc = load_config(args.config)
    an = _analysis_overrides(sc, args)
    if args.h_max is not None:
        hs = list(range(1, args.h_max + 1))
    elif args.h is not None:
        hs = [args.h]
    elif sc.sweep and sc.sweep["h"]:
        hs = list(sc.sweep["h"])
    elif an["h_max"] is not None:
        hs = list(range(1, an["h_max"] + 1))
    else:
        hs = [] if an["h"] is None else [an["h"]]
    if sc.sweep is None:
        sc.sweep = {"h": hs, "grid": {}}
    keys = [k for k in GRID_KEYS[sc.kind] if k in sc.sweep["grid"]]

    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["h", *keys, "J", "verdict", "status", "wall_ms"])
        tables = {}
        for h, _, combo, params in _sweep_cells(sc, hs):
            t0 = time.perf_counter()
            try:
                if h not in tables:
                    tables[h] = build_gamma_tables(sc.system, h, an["norm_kind"], an["epsilon"],
                                                   workers=an["workers"])
                bounds = _scenario_bounds(sc, params)
                cert = certify(sc.system, bounds, h, an["norm_kind"], an["epsilon"], tables=tables[h])
                row = [h, *map(_fmt, combo), _fmt(cert.J), str(cert.verdict), "ok"]
            except (InvalidInput, RuntimeError) as exc:
                row = [h, *map(_fmt, combo), "", "", f"error: {exc}"]
            wall = (time.perf_counter() - t0) * 1e3
            row.append(format(wall, ".3f") if args.timing else "")
            writer.writerow(row)
            fh.flush()
    finally:
        if close:
            fh.close()
    return EXIT_STABLE


def cmd_attack(args) -> int:
    sc = load_config(args.config)
    an = _analysis_overrides(sc, args)
    if args.schedule:
        schedule = [int(s) for s in args.schedule.split(",")]
        radius, unstable = monodromy_check(sc.system, schedule)
        out = {"period": len(schedule), "schedule": schedule, "monodromy_radius": radius,
               "destabilizing": unstable}
    else:
        h = _require_h(an)
        tables = build_gamma_tables(sc.system, h, an["norm_kind"], an["epsilon"], workers=an["workers"])
        cert = certify(sc.system, sc.bounds, h, an["norm_kind"], an["epsilon"], tables=tables)
        maxd = args.max_denominator or an["max_denominator"]
        plan = extract_attack(sc.system, cert, tables, maxd)
        out = {"period": plan.period, "schedule": plan.schedule,
               "mode_frequencies": plan.mode_frequencies.tolist(),
               "monodromy_radius": plan.monodromy_radius, "destabilizing": plan.destabilizing,
               "blocks": [{"sequence": list(q), "repeat": k} for q, k in plan.blocks],
               "max_deviation": plan.max_deviation, "J": cert.J}
    fh, close = _open_out(args.out)
    try:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return EXIT_STABLE


def _signal_for(sc: Scenario, args):
    if args.schedule:
        return np.array([int(s) for s in args.schedule.split(",")], dtype=np.int64)
    if sc.signal is None:
        raise InvalidInput("no signal: add a 'signal' block to the config or pass --schedule")
    return sc.signal


def cmd_simulate(args) -> int:
    sc = load_config(args.config)
    an = _analysis_overrides(sc, args)
    T = args.T or an["T"]
    spec = _signal_for(sc, args)
    if isinstance(spec, np.ndarray) and spec.size < T:
        spec = PeriodicSignal(tuple(spec.tolist()))
    x0 = an["x0"] if an["x0"] is not None else [1.0] + [0.0] * (sc.system.n - 1)
    runs = args.runs
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "seed", "t", "log_norm"])
        for r in range(runs):
            seed = an["seed"] + r
            sig = sample_signal(spec, T, seed)
            traj = simulate_lognorm(sc.system, sig, x0)
            stride = max(1, args.stride)
            idx = list(range(0, T + 1, stride))
            if idx[-1] != T:
                idx.append(T)
            for t in idx:
                writer.writerow([r, seed, t, _fmt(traj[t])])
    finally:
        if close:
            fh.close()
    return EXIT_STABLE


def cmd_oracle(args) -> int:
    sc = load_config(args.config)
    an = _analysis_overrides(sc, args)
    h = _require_h(an)
    spec = sc.signal
    if isinstance(spec, PeriodicSignal):
        spec = periodic_chain(spec.pattern, sc.system.M)
    if not isinstance(spec, HiddenMarkovSpec):
        raise InvalidInput("oracle needs a hidden_markov, gilbert_elliott or periodic signal block")
    table = limit_oracle(spec, h)
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sequence", "limit"])
        for q, w in table.entries.items():
            writer.writerow([" ".join(map(str, q)), _fmt(w)])
    finally:
        if close:
            fh.close()
    log.info("tau=%d d=%d lifted states=%d", table.tau, table.d, table.lifted_state_count)
    return EXIT_STABLE


def cmd_bench(args) -> int:
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["h", "M", "f", "f_prime"])
        for M in range(2, args.m_max + 1):
            for h in range(1, args.h_max + 1):
                f, fp = variable_counts(h, M)
                writer.writerow([h, M, f, fp])
        if args.kernels:
            writer.writerow([])
            writer.writerow(["backend", "h", "M", "n", "sequences", "seconds"])
            rng = np.random.default_rng(args.seed if args.seed is not None else DEFAULT_SEED)
            system = SwitchedSystem(tuple(rng.normal(size=(4, 4)) * 0.5 for _ in range(2)))
            for name in _backend.available():
                t0 = time.perf_counter()
                build_gamma_tables(system, args.kernel_h, workers=1, backend=name)
                writer.writerow([name, args.kernel_h, 2, 4, 2 ** args.kernel_h,
                                 format(time.perf_counter() - t0, ".4f")])
    finally:
        if close:
            fh.close()
    return EXIT_STABLE


def cmd_lp_debug(args) -> int:
    sc = load_config(args.config)
    an = _analysis_overrides(sc, args)
    h = _require_h(an)
    if an["lp"] == 1 and sc.system.M ** h > MATERIALIZE_LIMIT:
        raise InvalidInput("LP1 needs M**h <= 2**24")
    tables = build_gamma_tables(sc.system, h, an["norm_kind"], an["epsilon"],
                                materialize_sequences=(an["lp"] == 1), workers=an["workers"])
    model = build_lp1(tables, sc.bounds) if an["lp"] == 1 else build_lp2(tables, sc.bounds)
    sol = solve(model)
    report = verify_certificate(model, sol) if sol.optimal else None
    buf = io.StringIO()
    buf.write(f"LP{an['lp']}: {model.n_vars} variables, {model.n_rows} rows\n")
    for i in range(model.n_rows):
        buf.write(f"row {i}: [{_fmt(model.row_lo[i])}, {_fmt(model.row_hi[i])}]\n")
    buf.write(f"status: {sol.status}  iterations: {sol.iterations}\n")
    if sol.optimal:
        buf.write(f"objective: {_fmt(sol.objective_value)}\n")
        buf.write("duals: " + " ".join(_fmt(v) for v in sol.duals) + "\n")
        nz = np.flatnonzero(sol.x > 0.0)
        for j in nz:
            buf.write(f"x[{j}] = {_fmt(sol.x[j])}  gamma = {_fmt(model.objective[j])}\n")
        buf.write(f"certificate: {'ok' if report.ok else 'FAILED'}\n")
        for v in report.violations:
            buf.write(f"  {v}\n")
    fh, close = _open_out(args.out)
    try:
        fh.write(buf.getvalue())
    finally:
        if close:
            fh.close()
    return EXIT_STABLE if sol.optimal and report.ok else EXIT_ERROR


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="switchcert", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--h", type=int)
        sp.add_argument("--h-max", type=int, dest="h_max")
        sp.add_argument("--norm", choices=["one", "inf", "spectral", "frobenius", "weighted", LYAPUNOV])
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--lp", type=int, choices=[1, 2])

    sp = sub.add_parser("certify", help="certify one scenario")
    common(sp)
    sp.add_argument("--json", action="store_true", help="also print the certificate as JSON")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("sweep", help="CSV of J' over h and a parameter grid")
    common(sp)
    sp.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("attack", help="periodic worst-case schedule and its monodromy")
    common(sp)
    sp.add_argument("--max-denominator", type=int, dest="max_denominator")
    sp.add_argument("--schedule", help="comma-separated modes; check this schedule instead")
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("simulate", help="log-norm trajectories under the config's signal")
    common(sp)
    sp.add_argument("--T", type=int)
    sp.add_argument("--runs", type=int, default=1)
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--schedule", help="comma-separated periodic schedule overriding the signal block")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("oracle", help="exact long-run block frequencies of the signal chain")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="variable-count table, optional kernel timing")
    common(sp, config=False)
    sp.add_argument("--m-max", type=int, default=5, dest="m_max")
    sp.add_argument("--kernels", action="store_true")
    sp.add_argument("--kernel-h", type=int, default=14, dest="kernel_h")
    sp.set_defaults(func=cmd_bench, h_max=15)

    sp = sub.add_parser("lp-debug", help="dump the LP, its solution and certificate check")
    common(sp)
    sp.set_defaults(func=cmd_lp_debug)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which would read as "inconclusive"
        return EXIT_ERROR if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "bench" and args.h_max is None:
        args.h_max = 15
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (InvalidInput, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
