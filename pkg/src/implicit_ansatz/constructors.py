"""Builders for the implicit-solution constructions.

Each builder turns user-supplied function families into either an
:class:`~implicit_ansatz.solve.AnsatzSystem` (solved pointwise by Newton)
or an explicit field object exposing ``sample(coords, ...)``.  Side
conditions of a construction (null condition, homogeneity) are enforced
at build time.
"""

import math
from dataclasses import dataclass

import numpy as np

from .calculus import ScalarFieldSample, implicit_derivatives
from .errors import DomainViolation, NullConstraintViolation
from .expressions import Bin, Num, SmoothMap, Var
from .families import HomogeneousMap
from .jets import Jet2, jet_const, seed_all
from .residuals import ResidualValue, VectorFieldSample
from .solve import AnsatzSystem, newton_solve

__all__ = [
    "as_map",
    "coord_names",
    "bateman_ansatz",
    "ufe_chaundy",
    "ma_chaundy",
    "MongeAmpereField",
    "wave_ansatz",
    "null_deviation",
    "monge_flow",
    "MongeFlow",
    "legendre_pair",
    "LegendreData",
    "QuadratureRule",
    "periodic_trapezoid",
    "superposed_wave",
    "SuperposedWave",
    "level_set",
]


def as_map(f, params):
    """Coerce an expression string or map to a :class:`SmoothMap` over ``params``."""
    params = tuple(params)
    if isinstance(f, (int, float)):
        return SmoothMap.constant(f, params)
    if isinstance(f, str):
        return SmoothMap.parse(f, params)
    if len(f.params) != len(params):
        raise ValueError(f"arity mismatch: map takes {list(f.params)}, expected arguments {list(params)}")
    if f.params != params:
        return f.rename(params)
    return f


def coord_names(d):
    if d == 2:
        return ("t", "x")
    if d == 3:
        return ("t", "x", "y")
    return ("t",) + tuple(f"x{i}" for i in range(1, d))


def _plane(coefs, names, rhs):
    body = None
    for c, n in zip(coefs, names):
        term = Bin("*", Var(n), c)
        body = term if body is None else Bin("+", body, term)
    return Bin("-", body, rhs)


def bateman_ansatz(f1, f2):
    """``t f1(phi) + x f2(phi) = 1`` with unknown ``phi``."""
    f1, f2 = as_map(f1, ("phi",)), as_map(f2, ("phi",))
    body = _plane([f1.body, f2.body], ("t", "x"), Num(1.0))
    g = SmoothMap(("phi", "t", "x"), body)
    return AnsatzSystem(("phi",), ("t", "x"), [g], label="bateman")


def ufe_chaundy(*F, coords=None):
    """Envelope of the plane family ``sum x_i F_i(phi, u) = F_last(phi, u)``.

    Takes ``d + 1`` maps of ``(phi, u)``.  The unknowns are ``(phi, u)``
    with constraints the plane equation and its ``u`` derivative; when no
    map depends on ``u`` the second constraint is identically zero and the
    system collapses to ``phi`` alone.
    """
    if len(F) == 1 and isinstance(F[0], (list, tuple)):
        F = tuple(F[0])
    maps = [as_map(f, ("phi", "u")) for f in F]
    d = len(maps) - 1
    if d < 2:
        raise ValueError("need at least two coordinate coefficients plus a right-hand side")
    names = tuple(coords) if coords is not None else coord_names(d)
    depends = any(m.depends_on("u") for m in maps)
    unknowns = ("phi", "u") if depends else ("phi",)
    params = unknowns + names

    plane = SmoothMap(params, _plane([m.body for m in maps[:d]], names, maps[d].body))
    residuals = [plane]
    if depends:
        du = [m.diff("u") for m in maps]
        residuals.append(SmoothMap(params, _plane([m.body for m in du[:d]], names, du[d].body)))
    system = AnsatzSystem(unknowns, names, residuals, label="ufe")
    system.family = maps
    return system


# ---------------------------------------------------------------- Monge-Ampere


class MongeAmpereField:
    """Field ``phi = sum x_i G_i(u, v) - G_last(u, v)`` with ``(u, v)`` stationary.

    The parameters solve ``d/du`` and ``d/dv`` of the plane equation; the
    gradient is then ``G_i`` itself and the Hessian is
    ``dG_i/du u_j + dG_i/dv v_j``, of rank at most two.
    """

    def __init__(self, G, names):
        self.G = G
        self.names = names
        d = len(names)
        Gu = [g.diff("u") for g in G]
        Gv = [g.diff("v") for g in G]
        pars = ("u", "v") + names
        self.param_system = AnsatzSystem(
            ("u", "v"),
            names,
            [
                SmoothMap(pars, _plane([g.body for g in Gu[:d]], names, Gu[d].body)),
                SmoothMap(pars, _plane([g.body for g in Gv[:d]], names, Gv[d].body)),
            ],
            field="u",
            label="monge_ampere_params",
        )
        full = ("phi", "u", "v") + names
        phi_eq = SmoothMap(
            full, Bin("-", Var("phi"), _plane([g.body for g in G[:d]], names, G[d].body))
        )
        lifted = [g.substitute({}, full) for g in self.param_system.residual_maps]
        self.full_system = AnsatzSystem(("phi", "u", "v"), names, [phi_eq] + lifted, label="monge_ampere")
        self._Gu, self._Gv = Gu, Gv

    @property
    def dim(self):
        return len(self.names)

    def solve(self, coords, seed, **kw):
        return newton_solve(self.param_system, coords, seed, **kw)

    def value(self, coords, uv):
        coords = np.asarray(coords, dtype=float)
        g = np.array([m(*uv) for m in self.G])
        return float(coords @ g[:-1] - g[-1])

    def sample(self, coords, uv):
        """Sample built from the explicit gradient and the rank-two Hessian formula."""
        coords = np.asarray(coords, dtype=float)
        d = self.dim
        _, dz, _ = implicit_derivatives(self.param_system, coords, uv)
        a = np.array([[self._Gu[i](*uv), self._Gv[i](*uv)] for i in range(d)])
        hess = a @ dz
        hess = 0.5 * (hess + hess.T)
        grad = np.array([self.G[i](*uv) for i in range(d)])
        return ScalarFieldSample(
            coords=coords,
            phi=self.value(coords, uv),
            parameters=np.asarray(uv, dtype=float),
            grad=grad,
            hess=hess,
            param_grad=dz,
        )


def ma_chaundy(*G, coords=None):
    """Monge-Ampere construction from ``d + 1`` maps of ``(u, v)``."""
    if len(G) == 1 and isinstance(G[0], (list, tuple)):
        G = tuple(G[0])
    maps = [as_map(g, ("u", "v")) for g in G]
    d = len(maps) - 1
    names = tuple(coords) if coords is not None else tuple(f"x{i}" for i in range(1, d + 1))
    return MongeAmpereField(maps, names)


# ---------------------------------------------------------------- wave equation


def null_deviation(F, interval=(-1.0, 1.0), samples=32):
    """Largest ``|F0^2 - sum Fk^2|`` over sampled ``u`` and where it occurs."""
    worst, at, seen = -1.0, math.nan, 0
    for u in np.linspace(interval[0], interval[1], samples):
        try:
            vals = np.array([f(float(u)) for f in F])
        except DomainViolation:
            continue
        seen += 1
        dev = abs(vals[0] ** 2 - float(np.sum(vals[1:] ** 2)))
        if dev > worst:
            worst, at = dev, float(u)
    if seen == 0:
        raise DomainViolation("coefficient maps are undefined at every sampled u")
    return worst, at


def wave_ansatz(*F, interval=(-1.0, 1.0), samples=32, tol=1e-8):
    """``t F0(u) + sum x_i F_i(u) = 1`` subject to ``F0^2 = sum F_i^2``."""
    if len(F) == 1 and isinstance(F[0], (list, tuple)):
        F = tuple(F[0])
    maps = [as_map(f, ("u",)) for f in F]
    if len(maps) < 2:
        raise ValueError("need F0 and at least one spatial coefficient")
    dev, at = null_deviation(maps, interval, samples)
    if not dev <= tol:
        raise NullConstraintViolation(dev, at)
    names = coord_names(len(maps))
    g = SmoothMap(("u",) + names, _plane([m.body for m in maps], names, Num(1.0)))
    system = AnsatzSystem(("u",), names, [g], field="u", label="wave")
    system.family = maps
    return system


@dataclass(frozen=True)
class QuadratureRule:
    nodes: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise ValueError("nodes and weights differ in length")


def periodic_trapezoid(n):
    """Equal-weight rule on ``[0, 2 pi)``; weights sum to ``2 pi``."""
    if n < 1:
        raise ValueError("need at least one node")
    return QuadratureRule(tuple(2 * math.pi * k / n for k in range(n)), (2 * math.pi / n,) * n)


class SuperposedWave:
    """``u(t, x, y) = sum_q w_q profile(t + x cos th_q + y sin th_q, th_q)``."""

    def __init__(self, profile, rule):
        self.profile = profile
        self.rule = rule

    def value(self, coords):
        t, x, y = (float(c) for c in coords)
        return sum(w * self.profile(t + x * math.cos(th) + y * math.sin(th), th)
                   for th, w in zip(self.rule.nodes, self.rule.weights))

    def jet(self, coords):
        seeds = seed_all(np.asarray(coords, dtype=float))
        total = jet_const(0.0, 3)
        for th, w in zip(self.rule.nodes, self.rule.weights):
            s = seeds[0] + seeds[1] * math.cos(th) + seeds[2] * math.sin(th)
            term = self.profile(s, th)
            if not isinstance(term, Jet2):
                term = jet_const(term, 3)
            total = total + term * w
        return total

    def sample(self, coords, seed=None):
        return ScalarFieldSample.from_jet(coords, self.jet(coords))


def superposed_wave(profile, rule, spatial_dim=2):
    if spatial_dim != 2:
        raise ValueError("plane-wave superposition is implemented for two spatial dimensions")
    if not rule.nodes:
        raise ValueError("quadrature rule has no nodes")
    return SuperposedWave(as_map(profile, ("s", "theta")), rule)


# ---------------------------------------------------------------- Monge flow


class MongeFlow:
    """Velocity field solving ``u_i = F_i(x - s u t)`` pointwise (``s = +1`` material, ``-1`` printed)."""

    def __init__(self, F, sign):
        self.F = F
        self.sign = sign
        n = len(F)
        unknowns = tuple(f"u{i}" for i in range(1, n + 1))
        names = ("t",) + tuple(f"x{i}" for i in range(1, n + 1))
        op = "-" if sign == "material" else "+"
        pars = unknowns + names
        residuals = []
        for f in F:
            args = {p: Bin(op, Var(f"x{j + 1}"), Bin("*", Var(f"u{j + 1}"), Var("t"))) for j, p in enumerate(f.params)}
            body = f.substitute(args, pars).body
            residuals.append(SmoothMap(pars, Bin("-", Var(unknowns[len(residuals)]), body)))
        self.system = AnsatzSystem(unknowns, names, residuals, field="u1", label="monge_flow")

    def solve(self, coords, seed, **kw):
        return newton_solve(self.system, coords, seed, **kw)

    def sample(self, coords, values):
        coords = np.asarray(coords, dtype=float)
        z, dz, _ = implicit_derivatives(self.system, coords, values)
        return VectorFieldSample(coords, z, dz)


def monge_flow(*F, sign="material"):
    """General solution of the transport system from ``n`` maps of ``n`` arguments."""
    if len(F) == 1 and isinstance(F[0], (list, tuple)):
        F = tuple(F[0])
    if sign not in ("material", "printed"):
        raise ValueError(f"unknown sign convention {sign!r}")
    n = len(F)
    maps = []
    for f in F:
        if isinstance(f, str):
            f = SmoothMap.parse(f, tuple("abcdefgh"[:n]))
        if len(f.params) != n:
            raise ValueError(f"each map must take {n} arguments")
        maps.append(f)
    return MongeFlow(maps, sign)


# ---------------------------------------------------------------- Legendre


class LegendreData:
    """Dual-space potential ``w = f0 + f1`` with weights zero and one."""

    def __init__(self, f0, f1):
        self.f0 = f0
        self.f1 = f1
        self.xi = f1.map.params
        self.w = SmoothMap(self.xi, Bin("+", f0.map.body, f1.map.body))

    @property
    def dim(self):
        return len(self.xi)

    def check_univ3(self, xi):
        """``sum xi_i xi_j w_ij`` at ``xi``; vanishes identically for this ``w``."""
        xi = np.asarray(xi, dtype=float)
        H = self.w(*seed_all(xi)).hess
        terms = np.outer(xi, xi) * H
        return ResidualValue(float(terms.sum()), 1.0 + float(np.abs(terms).sum()))

    def euler(self, xi):
        """``(sum xi_i dw/dxi_i, f1(xi))``; equal by homogeneity."""
        xi = np.asarray(xi, dtype=float)
        g = self.w(*seed_all(xi)).grad
        return float(xi @ g), float(self.f1(*xi))


def legendre_pair(f0, f1, names=None):
    """Validate and pair a weight-zero and a weight-one map of the dual coordinates."""
    if not isinstance(f1, HomogeneousMap):
        if names is None:
            names = f1.params if isinstance(f1, SmoothMap) else None
        f1 = HomogeneousMap(as_map(f1, names), 1)
    names = f1.map.params
    if not isinstance(f0, HomogeneousMap):
        f0 = HomogeneousMap(as_map(f0, names), 0)
    if f0.weight != 0 or f1.weight != 1:
        raise ValueError("need weights 0 and 1")
    if f0.map.params != names:
        f0 = HomogeneousMap(f0.map.rename(names), 0)
    return LegendreData(f0, f1)


def level_set(phi, level=0.0):
    """Graph ``x_d = z(x_1, ..., x_{d-1})`` of the level set ``phi = level``.

    ``phi`` is a map of ``d`` coordinates; the returned system has the
    single unknown ``z`` and the first ``d - 1`` coordinates.
    """
    names = phi.params
    base = names[:-1]
    body = phi.substitute({names[-1]: Var("z")}, ("z",) + base).body
    g = SmoothMap(("z",) + base, Bin("-", body, Num(float(level))))
    return AnsatzSystem(("z",), base, [g], field="z", label="level_set")
