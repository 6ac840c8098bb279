"""Batch scenarios: config -> construct -> solve -> differentiate -> residual report.

A scenario is a JSON document naming an equation, its function slots
(expression strings, or ``{"preset": kind}`` for a seeded random map), a
coordinate lattice and tolerances.  :func:`run_scenario` is deterministic:
the same config always yields the same report, down to the bytes of its
serialized form.
"""

import copy
import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .calculus import implicit_jet, chaundy_consistency
from .constructors import (
    bateman_ansatz,
    legendre_pair,
    ma_chaundy,
    monge_flow,
    periodic_trapezoid,
    superposed_wave,
    ufe_chaundy,
    wave_ansatz,
)
from .errors import (
    ConfigError,
    DomainViolation,
    ExpressionError,
    HomogeneityViolation,
    NonConvergence,
    NullConstraintViolation,
)
from .expressions import SmoothMap
from .families import PRESETS, random_family
from .residuals import (
    SIGN_CONVENTIONS,
    bateman_residual,
    bordered_hessian,
    euler_defect,
    monge_ampere_det,
    null_gradient,
    wave_residual,
)
from .solve import MAX_ITER, NEWTON_TOL, TRAVERSALS, Axis, Lattice, grid_continuation

__all__ = ["EQUATIONS", "ScenarioConfig", "ResidualReport", "PointRecord", "run_scenario", "load_config"]

EQUATIONS = ("bateman", "ufe", "monge_ampere", "wave", "monge_flow", "legendre", "superposed_wave")
FORMATS = ("json", "csv")
DEFAULT_NODES = 8
MIN_FRACTION = 0.5


def _slots(equation, functions):
    """Required function slots for ``equation``; some depend on how many were given."""
    if equation == "bateman":
        return ["f1", "f2"]
    if equation == "ufe":
        return ["F1", "F2", "F3", "F4"]
    if equation == "monge_ampere":
        return ["G1", "G2", "G3", "G4"]
    if equation == "wave":
        n = sum(1 for k in functions if k.startswith("F") and k[1:].isdigit())
        return [f"F{i}" for i in range(max(n, 2))]
    if equation == "monge_flow":
        n = sum(1 for k in functions if k.startswith("F") and k[1:].isdigit())
        return [f"F{i}" for i in range(1, max(n, 1) + 1)]
    if equation == "legendre":
        return ["f0", "f1"]
    return ["profile"]


@dataclass
class ScenarioConfig:
    equation: str
    functions: dict
    grid: list
    seed_values: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: {"newton": NEWTON_TOL, "residual": 1e-8})
    sign_convention: str = "material"
    rng_seed: int = 0
    output: dict = field(default_factory=lambda: {"format": "json", "path": None})
    id: str = None
    traversal: str = "lexicographic"
    quadrature_nodes: int = DEFAULT_NODES

    _KEYS = ("equation", "functions", "grid", "seed_values", "tolerances", "sign_convention", "rng_seed",
             "output", "id", "traversal", "quadrature_nodes")

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("scenario config must be a JSON object")
        unknown = sorted(set(data) - set(cls._KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        for key in ("equation", "functions", "grid"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")
        kw = {k: copy.deepcopy(data[k]) for k in cls._KEYS if k in data}
        tol = {"newton": NEWTON_TOL, "residual": 1e-8}
        tol.update(kw.get("tolerances") or {})
        kw["tolerances"] = tol
        out = {"format": "json", "path": None}
        out.update(kw.get("output") or {})
        kw["output"] = out
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def to_dict(self):
        return {k: copy.deepcopy(getattr(self, k)) for k in self._KEYS}

    def validate(self):
        if self.equation not in EQUATIONS:
            raise ConfigError(f"unknown equation {self.equation!r}; choose from {list(EQUATIONS)}")
        if not isinstance(self.functions, dict):
            raise ConfigError("functions must map slot names to expressions")
        missing = [s for s in _slots(self.equation, self.functions) if s not in self.functions]
        if missing:
            raise ConfigError(f"equation {self.equation!r} needs function slots {missing}")
        for name, f in self.functions.items():
            if isinstance(f, dict):
                if set(f) != {"preset"} or f["preset"] not in PRESETS:
                    raise ConfigError(f"slot {name!r}: presets look like {{\"preset\": one of {sorted(PRESETS)}}}")
            elif not isinstance(f, (str, int, float)):
                raise ConfigError(f"slot {name!r} must be an expression string")
        if not isinstance(self.grid, list) or not self.grid:
            raise ConfigError("grid must be a non-empty list of {min, max, count} axes")
        for ax in self.grid:
            if not isinstance(ax, dict) or set(ax) != {"min", "max", "count"}:
                raise ConfigError(f"grid axis {ax!r} must have exactly min, max and count")
            if not isinstance(ax["count"], int) or ax["count"] < 1:
                raise ConfigError(f"grid counts must be integers >= 1, got {ax['count']!r}")
        for key in ("newton", "residual"):
            v = self.tolerances.get(key)
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"tolerance {key!r} must be positive, got {v!r}")
        if self.sign_convention not in SIGN_CONVENTIONS:
            raise ConfigError(f"sign_convention must be one of {list(SIGN_CONVENTIONS)}")
        if self.traversal not in TRAVERSALS:
            raise ConfigError(f"traversal must be one of {list(TRAVERSALS)}")
        if self.output.get("format") not in FORMATS:
            raise ConfigError(f"output format must be one of {list(FORMATS)}")
        if not isinstance(self.rng_seed, int):
            raise ConfigError("rng_seed must be an integer")
        if not isinstance(self.quadrature_nodes, int) or self.quadrature_nodes < 1:
            raise ConfigError("quadrature_nodes must be a positive integer")
        if not isinstance(self.seed_values, list) or not all(isinstance(v, (int, float)) for v in self.seed_values):
            raise ConfigError("seed_values must be a list of numbers")

    def lattice(self):
        return Lattice([Axis(float(a["min"]), float(a["max"]), a["count"]) for a in self.grid])

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def scenario_id(self):
        return self.id if self.id is not None else f"{self.equation}-{self.digest()[:12]}"


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(data)


@dataclass
class PointRecord:
    index: list
    coords: list
    phi: float
    params: list
    residuals: dict
    status: str
    iterations: int

    def to_dict(self):
        return {
            "index": self.index,
            "coords": self.coords,
            "phi": _num(self.phi),
            "params": [_num(p) for p in self.params],
            "residuals": {k: _num(v) for k, v in self.residuals.items()},
            "status": self.status,
            "iterations": self.iterations,
        }


def _num(v):
    return None if v is None or not math.isfinite(v) else float(v)


@dataclass
class ResidualReport:
    scenario_id: str
    equation: str
    coord_names: list
    param_names: list
    residual_names: list
    records: list
    tolerance: float
    provenance: dict

    def summary(self):
        """Statistics recomputed from the per-point records."""
        ok = [r for r in self.records if r.status == "ok"]
        vals = [abs(v) for r in ok for v in r.residuals.values()]
        per = {}
        for name in self.residual_names:
            col = [abs(r.residuals[name]) for r in ok]
            per[name] = max(col) if col else None
        n = len(self.records)
        return {
            "points": n,
            "converged": len(ok),
            "convergence_fraction": len(ok) / n if n else 0.0,
            "max_abs": max(vals) if vals else None,
            "rms": math.sqrt(sum(v * v for v in vals) / len(vals)) if vals else None,
            "residual_max": per,
            "failures": [r.index for r in self.records if r.status != "ok"],
        }

    @property
    def passed(self):
        s = self.summary()
        if s["convergence_fraction"] < MIN_FRACTION:
            return False
        return s["max_abs"] is None or s["max_abs"] <= self.tolerance

    def to_dict(self):
        return {
            "scenario": self.scenario_id,
            "equation": self.equation,
            "columns": {"coords": self.coord_names, "params": self.param_names, "residuals": self.residual_names},
            "points": [r.to_dict() for r in self.records],
            "summary": self.summary(),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "provenance": self.provenance,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.coord_names) + ["phi"] + list(self.param_names)
                   + [f"residual_{n}" for n in self.residual_names] + ["status", "iterations"])
        for r in self.records:
            params = list(r.params) + [None] * (len(self.param_names) - len(r.params))
            w.writerow([repr(c) for c in r.coords] + [_cell(r.phi)] + [_cell(p) for p in params]
                       + [_cell(r.residuals.get(n)) for n in self.residual_names] + [r.status, r.iterations])
        return buf.getvalue()

    def render(self, fmt="json"):
        return self.to_csv() if fmt == "csv" else self.to_json()


def _cell(v):
    return "" if v is None or not math.isfinite(v) else repr(float(v))


# ---------------------------------------------------------------- scenario builders


def _functions(cfg, params):
    """Slot name -> SmoothMap; presets draw from one generator seeded by ``rng_seed``."""
    rng = np.random.default_rng(cfg.rng_seed)
    out = {}
    for name in sorted(cfg.functions):
        f = cfg.functions[name]
        try:
            if isinstance(f, dict):
                out[name] = random_family(rng, params, f["preset"])
            else:
                out[name] = SmoothMap.parse(str(f), params) if isinstance(f, str) else SmoothMap.constant(f, params)
        except ExpressionError as exc:
            raise ConfigError(f"slot {name!r}: {exc}") from exc
    return out


def _need_dim(cfg, d):
    if cfg.lattice().dim != d:
        raise ConfigError(f"equation {cfg.equation!r} needs a {d}-axis grid, got {cfg.lattice().dim}")


def _need_seed(cfg, m):
    if len(cfg.seed_values) != m:
        raise ConfigError(f"equation {cfg.equation!r} needs {m} seed values, got {len(cfg.seed_values)}")


def _records_from_branch(grid, branch, evaluate):
    records = []
    for k, (idx, p) in enumerate(zip(grid.indices(), grid.points())):
        z, status = branch.values[k], branch.status[k]
        coords = [float(c) for c in p]
        if z is None:
            records.append(PointRecord(list(idx), coords, None, [], {}, status, branch.iterations[k]))
            continue
        try:
            phi, params, res = evaluate(p, z)
        except NonConvergence:
            records.append(PointRecord(list(idx), coords, None, [float(v) for v in z], {}, "singular",
                                       branch.iterations[k]))
            continue
        records.append(PointRecord(list(idx), coords, phi, params, res, "ok", branch.iterations[k]))
    return records


def _failed_branch(grid, status):
    return [PointRecord(list(idx), [float(c) for c in p], None, [], {}, status, 0)
            for idx, p in zip(grid.indices(), grid.points())]


def _continuation(cfg, system, grid, evaluate):
    try:
        branch = grid_continuation(system, grid, cfg.seed_values, traversal=cfg.traversal,
                                   tol=cfg.tolerances["newton"], max_iter=MAX_ITER)
    except NonConvergence as exc:
        return _failed_branch(grid, "singular" if "singular" in str(exc) else "nonconvergent")
    return _records_from_branch(grid, branch, evaluate)


def _explicit(grid, evaluate):
    records = []
    for idx, p in zip(grid.indices(), grid.points()):
        coords = [float(c) for c in p]
        try:
            phi, params, res = evaluate(p)
        except (DomainViolation, NonConvergence):
            records.append(PointRecord(list(idx), coords, None, [], {}, "undefined", 0))
            continue
        records.append(PointRecord(list(idx), coords, phi, params, res, "ok", 0))
    return records


def _check_tol(cfg):
    # solved points are re-verified against the constraints before differentiating
    return max(1e-8, 10.0 * cfg.tolerances["newton"])


def _scalar(residual):
    return float(residual.normalized)


def _run_bateman(cfg, grid):
    fs = _functions(cfg, ("phi",))
    _need_dim(cfg, 2)
    _need_seed(cfg, 1)
    system = bateman_ansatz(fs["f1"], fs["f2"])

    def evaluate(p, z):
        s = implicit_jet(system, p, z, residual_tol=_check_tol(cfg))
        return s.phi, [], {"bateman": _scalar(bateman_residual(s))}

    return ("t", "x"), (), ("bateman",), _continuation(cfg, system, grid, evaluate)


def _run_ufe(cfg, grid):
    fs = _functions(cfg, ("phi", "u"))
    F = [fs[f"F{i}"] for i in range(1, 5)]
    _need_dim(cfg, 3)
    system = ufe_chaundy(*F)
    _need_seed(cfg, system.m)
    names = ("bordered_hessian", "consistency") if system.m == 2 else ("bordered_hessian",)

    def evaluate(p, z):
        s = implicit_jet(system, p, z, residual_tol=_check_tol(cfg))
        res = {"bordered_hessian": _scalar(bordered_hessian(s))}
        if system.m == 2:
            res["consistency"] = chaundy_consistency(F, s)
        return s.phi, [float(v) for v in s.parameters], res

    return system.coord_names, system.unknown_names[1:], names, _continuation(cfg, system, grid, evaluate)


def _run_monge_ampere(cfg, grid):
    fs = _functions(cfg, ("u", "v"))
    _need_dim(cfg, 3)
    _need_seed(cfg, 2)
    fld = ma_chaundy(*[fs[f"G{i}"] for i in range(1, 5)])
    homogeneous = fld.G[-1].is_constant_zero()
    names = ("monge_ampere", "euler_weight_one") if homogeneous else ("monge_ampere",)

    def evaluate(p, uv):
        s = fld.sample(p, uv)
        res = {"monge_ampere": _scalar(monge_ampere_det(s))}
        if homogeneous:
            res["euler_weight_one"] = _scalar(euler_defect(s, 1.0))
        return s.phi, [float(v) for v in uv], res

    return fld.param_system.coord_names, ("u", "v"), names, _continuation(cfg, fld.param_system, grid, evaluate)


def _run_wave(cfg, grid):
    fs = _functions(cfg, ("u",))
    n = len(_slots("wave", cfg.functions))
    try:
        system = wave_ansatz(*[fs[f"F{i}"] for i in range(n)])
    except NullConstraintViolation as exc:
        raise ConfigError(f"wave coefficients are not null: {exc}") from exc
    _need_dim(cfg, n)
    _need_seed(cfg, 1)

    def evaluate(p, z):
        s = implicit_jet(system, p, z, residual_tol=_check_tol(cfg))
        return s.phi, [], {"wave": _scalar(wave_residual(s)), "null_gradient": _scalar(null_gradient(s))}

    return system.coord_names, (), ("wave", "null_gradient"), _continuation(cfg, system, grid, evaluate)


def _run_monge_flow(cfg, grid):
    n = len(_slots("monge_flow", cfg.functions))
    fs = _functions(cfg, tuple("abcdefgh"[:n]))
    flow = monge_flow(*[fs[f"F{i}"] for i in range(1, n + 1)], sign=cfg.sign_convention)
    _need_dim(cfg, n + 1)
    _need_seed(cfg, n)
    names = tuple(f"transport_{i}" for i in range(1, n + 1))
    s = 1.0 if cfg.sign_convention == "material" else -1.0

    def evaluate(p, z):
        fld = flow.sample(p, z)
        transport = fld.grads[:, 1:] * fld.values
        raw = fld.grads[:, 0] + s * transport.sum(axis=1)
        scale = 1.0 + np.abs(fld.grads[:, 0]) + np.abs(transport).sum(axis=1)
        return float(z[0]), [float(v) for v in z[1:]], dict(zip(names, (raw / scale).tolist()))

    return flow.system.coord_names, flow.system.unknown_names[1:], names, _continuation(cfg, flow.system, grid, evaluate)


def _run_legendre(cfg, grid):
    d = grid.dim
    xi = tuple(f"xi{i}" for i in range(1, d + 1))
    fs = _functions(cfg, xi)
    try:
        pair = legendre_pair(fs["f0"], fs["f1"])
    except HomogeneityViolation as exc:
        raise ConfigError(str(exc)) from exc

    def evaluate(p):
        if abs(p[-1]) < 1e-8:
            raise DomainViolation("chart boundary xi_d = 0")
        lhs, f1 = pair.euler(p)
        return float(pair.w(*p)), [], {
            "legendre": _scalar(pair.check_univ3(p)),
            "euler": (lhs - f1) / (1.0 + abs(f1)),
        }

    return xi, (), ("legendre", "euler"), _explicit(grid, evaluate)


def _run_superposed(cfg, grid):
    fs = _functions(cfg, ("s", "theta"))
    _need_dim(cfg, 3)
    wave = superposed_wave(fs["profile"], periodic_trapezoid(cfg.quadrature_nodes))

    def evaluate(p):
        s = wave.sample(p)
        return s.phi, [], {"wave": _scalar(wave_residual(s))}

    return ("t", "x", "y"), (), ("wave",), _explicit(grid, evaluate)


_RUNNERS = {
    "bateman": _run_bateman,
    "ufe": _run_ufe,
    "monge_ampere": _run_monge_ampere,
    "wave": _run_wave,
    "monge_flow": _run_monge_flow,
    "legendre": _run_legendre,
    "superposed_wave": _run_superposed,
}


def run_scenario(config, grid_scale=None):
    """Run one scenario; ``grid_scale`` multiplies every axis count."""
    cfg = config if isinstance(config, ScenarioConfig) else ScenarioConfig.from_dict(config)
    grid = cfg.lattice()
    if grid_scale is not None:
        if not grid_scale > 0:
            raise ConfigError("grid scale must be positive")
        grid = grid.scaled(grid_scale)
    coords, params, names, records = _RUNNERS[cfg.equation](cfg, grid)
    provenance = {
        "config_sha256": cfg.digest(),
        "rng_seed": cfg.rng_seed,
        "version": __version__,
        "grid_shape": list(grid.shape),
    }
    return ResidualReport(cfg.scenario_id, cfg.equation, list(coords), list(params), list(names), records,
                          float(cfg.tolerances["residual"]), provenance)
