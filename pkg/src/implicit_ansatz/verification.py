"""Randomized admissible families and the solve -> differentiate -> residual pipeline.

Random families rarely have solutions everywhere on a fixed box, so each
case is anchored: a parameter value is drawn first and a coordinate point
is then chosen where the constraints hold exactly.  The solved region is
a box around that anchor, shrunk by :func:`~implicit_ansatz.solve.restrict_region`
until continuation mostly converges.
"""

from dataclasses import dataclass, field

import numpy as np

from .calculus import ScalarFieldSample, chaundy_consistency, chaundy_jet, implicit_jet, separation
from .constructors import bateman_ansatz, level_set, ma_chaundy, ufe_chaundy, wave_ansatz
from .errors import DomainViolation, NonConvergence
from .expressions import Bin, SmoothMap, Var
from .families import random_family, random_poly
from .jets import seed_all
from .residuals import bateman_residual, bordered_hessian, bordered_matrix, euler_defect, monge_ampere_det, null_gradient, wave_residual
from .solve import newton_solve, restrict_region

__all__ = [
    "Case",
    "FamilyResult",
    "relative_error",
    "random_bateman_case",
    "random_ufe_case",
    "random_ma_case",
    "random_wave_case",
    "oracle_case",
    "oracle_admissible",
    "ORACLE_SEPARATION",
    "LevelSetCase",
    "random_level_set_case",
    "run_bateman_family",
    "run_ufe_family",
    "run_ma_family",
    "run_wave_family",
    "explicit_sample",
]


@dataclass
class Case:
    system: object
    center: np.ndarray
    seed: np.ndarray
    family: list = None
    construction: object = None


@dataclass
class FamilyResult:
    points: int = 0
    converged: int = 0
    worst: dict = field(default_factory=dict)

    @property
    def fraction(self):
        return self.converged / self.points if self.points else 0.0

    def record(self, name, value):
        self.worst[name] = max(self.worst.get(name, 0.0), abs(float(value)))


def relative_error(a, b):
    """``max|a - b| / max(max|a|, 1)``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(a))), 1.0))


def _ok(value, lo, hi=np.inf):
    return np.isfinite(value) and lo <= abs(value) <= hi


def random_bateman_case(rng, kind="poly", max_tries=200):
    for _ in range(max_tries):
        f1 = random_family(rng, ("phi",), kind)
        f2 = random_family(rng, ("phi",), kind)
        phi0 = rng.uniform(-1.0, 1.0)
        t0 = rng.uniform(1.0, 2.0)
        try:
            a, b = f1(phi0), f2(phi0)
            if abs(b) < 0.2:
                continue
            x0 = (1.0 - t0 * a) / b
            mu = t0 * f1.diff("phi")(phi0) + x0 * f2.diff("phi")(phi0)
        except DomainViolation:
            continue
        if abs(x0) > 4.0 or not _ok(mu, 0.2):
            continue
        return Case(bateman_ansatz(f1, f2), np.array([t0, x0]), np.array([phi0]), [f1, f2])
    raise RuntimeError("could not draw an admissible Bateman family")


def random_ufe_case(rng, max_tries=500):
    params = ("phi", "u")
    for _ in range(max_tries):
        F = [random_poly(rng, params) for _ in range(4)]
        phi0, u0 = rng.uniform(-1.0, 1.0, size=2)
        vals = np.array([f(phi0, u0) for f in F])
        du = np.array([f.diff("u")(phi0, u0) for f in F])
        A = np.vstack([vals[:3], du[:3]])
        rhs = np.array([vals[3], du[3]])
        if np.linalg.matrix_rank(A) < 2:
            continue
        particular = np.linalg.lstsq(A, rhs, rcond=None)[0]
        null = np.cross(A[0], A[1])
        null /= np.linalg.norm(null)
        x0 = particular + rng.uniform(-1.0, 1.0) * null
        if np.max(np.abs(x0)) > 4.0:
            continue
        system = ufe_chaundy(*F)
        try:
            s = chaundy_jet(F, x0, (phi0, u0))
        except NonConvergence:
            continue
        d = s.diagnostics
        b_u = float(x0 @ np.array([f.diff("u").diff("u")(phi0, u0) for f in F[:3]]) - F[3].diff("u").diff("u")(phi0, u0))
        if not (_ok(d.mu, 0.2) and _ok(b_u, 0.2)):
            continue
        return Case(system, x0, np.array([phi0, u0]), F)
    raise RuntimeError("could not draw an admissible Chaundy family")


def random_ma_case(rng, homogeneous=False, max_tries=500):
    params = ("u", "v")
    for _ in range(max_tries):
        G = [random_poly(rng, params) for _ in range(3)]
        G.append(random_poly(rng, params, degree=0, coef=0.0) if homogeneous else random_poly(rng, params))
        u0, v0 = rng.uniform(-1.0, 1.0, size=2)
        gu = np.array([g.diff("u")(u0, v0) for g in G])
        gv = np.array([g.diff("v")(u0, v0) for g in G])
        A = np.vstack([gu[:3], gv[:3]])
        if np.linalg.matrix_rank(A) < 2:
            continue
        null = np.cross(A[0], A[1])
        null /= np.linalg.norm(null)
        if homogeneous:
            x0 = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]) * null
        else:
            x0 = np.linalg.lstsq(A, np.array([gu[3], gv[3]]), rcond=None)[0] + rng.uniform(-1.0, 1.0) * null
        if np.max(np.abs(x0)) > 4.0:
            continue
        field_ = ma_chaundy(*G)
        J = np.array([[field_.param_system.residual_maps[i].diff(p)(u0, v0, *x0) for p in params] for i in range(2)])
        if abs(np.linalg.det(J)) < 0.05 * np.prod(np.linalg.norm(J, axis=1)) or np.min(np.abs(np.linalg.eigvals(J))) < 0.1:
            continue
        return Case(field_.param_system, x0, np.array([u0, v0]), G, field_)
    raise RuntimeError("could not draw an admissible Monge-Ampere family")


def random_wave_case(rng, spatial_dim=2, max_tries=200):
    for _ in range(max_tries):
        g = random_poly(rng, ("u",))
        direction = rng.normal(size=spatial_dim)
        direction /= np.linalg.norm(direction)
        src = g.to_source()
        F = [src] + [f"({src}) * {float(c)!r}" for c in direction]
        u0 = rng.uniform(-1.0, 1.0)
        gv, gp = g(u0), g.diff("u")(u0)
        if abs(gv) < 0.3 or abs(gp) < 0.2:
            continue
        xs = rng.uniform(-1.0, 1.0, size=spatial_dim)
        t0 = 1.0 / gv - direction @ xs
        if abs(t0) > 4.0:
            continue
        system = wave_ansatz(*F)
        return Case(system, np.concatenate([[t0], xs]), np.array([u0]), F)
    raise RuntimeError("could not draw an admissible wave family")


# oracle points closer to an envelope than this are not admissible: the
# fixed finite-difference steps lose their accuracy there
ORACLE_SEPARATION = 0.1

_ORACLE_KINDS = ("bateman_poly", "bateman_trig", "bateman_exp", "ufe", "wave", "monge_ampere")


def oracle_case(rng, index, spread=0.1):
    """System and nearby point for the derivative oracle, rotating through the constructions.

    The point is the case anchor moved by up to ``spread`` per axis, so it
    is generally not where the family was drawn.  Returns the case (with
    ``center`` replaced by the moved point) and the kind.
    """
    kind = _ORACLE_KINDS[index % len(_ORACLE_KINDS)]
    if kind.startswith("bateman"):
        case = random_bateman_case(rng, kind.split("_")[1])
    elif kind == "ufe":
        case = random_ufe_case(rng)
    elif kind == "wave":
        case = random_wave_case(rng)
    else:
        case = random_ma_case(rng)
    case.center = case.center + rng.uniform(-spread, spread, size=len(case.center))
    return case, kind


def oracle_admissible(case, min_separation=ORACLE_SEPARATION):
    """Solve at ``case.center``; the unknowns, or ``None`` if the point is not a usable regular point."""
    try:
        z = newton_solve(case.system, case.center, case.seed)
    except NonConvergence:
        return None
    return z if separation(case.system, case.center, z) >= min_separation else None


@dataclass
class LevelSetCase:
    phi: SmoothMap
    point: np.ndarray
    level: float
    developable: bool

    @property
    def system(self):
        return level_set(self.phi, self.level)


def random_level_set_case(rng, developable, max_tries=200):
    """Level set of a map of ``(x1, x2, x3)`` through a random point.

    Developable cases are ``x3 + h(a x1 + b x2)``, whose level sets are
    cylinders: the graph Hessian and the bordered Hessian both vanish.
    Otherwise ``phi`` is a random cubic and both are kept away from zero.
    """
    names = ("x1", "x2", "x3")
    for _ in range(max_tries):
        if developable:
            h = random_poly(rng, ("s",))
            a, b = rng.uniform(-1.0, 1.0, size=2)
            inner = SmoothMap.parse(f"{float(a)!r} * x1 + {float(b)!r} * x2", names)
            phi = SmoothMap(names, Bin("+", Var("x3"), h.substitute({"s": inner}, names).body))
        else:
            phi = random_poly(rng, names)
        p = rng.uniform(-1.0, 1.0, size=3)
        j = phi(*seed_all(p))
        if abs(j.grad[2]) < 0.2:
            continue
        if not developable:
            # keep well away from the zero set of the bordered determinant
            B = bordered_matrix(j.grad, j.hess)
            if abs(np.linalg.det(B)) < 1e-2 * np.prod(np.linalg.norm(B, axis=1)):
                continue
        return LevelSetCase(phi, p, float(j.value), developable)
    raise RuntimeError("could not draw an admissible level-set case")


def _branch(case, half, count, min_fraction):
    d = len(case.center)
    return restrict_region(case.system, case.center, case.seed, [half] * d, [count] * d, min_fraction=min_fraction)


def run_bateman_family(case, count=20, half=0.5, min_fraction=0.8):
    branch = _branch(case, half, count, min_fraction)
    res = FamilyResult(points=len(branch.values))
    for p, z in branch.solved():
        try:
            s = implicit_jet(case.system, p, z)
        except NonConvergence:
            continue
        res.converged += 1
        res.record("bateman", bateman_residual(s).normalized)
    return res


def run_ufe_family(case, count=5, half=0.25, min_fraction=0.8):
    branch = _branch(case, half, count, min_fraction)
    res = FamilyResult(points=len(branch.values))
    for p, z in branch.solved():
        try:
            a = implicit_jet(case.system, p, z)
            b = chaundy_jet(case.family, p, z)
        except NonConvergence:
            continue
        res.converged += 1
        res.record("bordered", bordered_hessian(a).normalized)
        res.record("consistency", chaundy_consistency(case.family, a))
        res.record("chaundy_vs_ift", max(relative_error(a.grad, b.grad), relative_error(a.hess, b.hess),
                                         relative_error(a.param_grad, b.param_grad)))
    return res


def run_ma_family(case, count=6, half=0.25, min_fraction=0.8, homogeneous=False):
    branch = _branch(case, half, count, min_fraction)
    field_ = case.construction
    res = FamilyResult(points=len(branch.values))
    for p, uv in branch.solved():
        try:
            s = field_.sample(p, uv)
            full = implicit_jet(field_.full_system, p, np.concatenate([[s.phi], uv]))
        except NonConvergence:
            continue
        res.converged += 1
        res.record("monge_ampere", monge_ampere_det(s).normalized)
        res.record("three_vs_ift", max(relative_error(full.hess, s.hess), relative_error(full.grad, s.grad)))
        if homogeneous:
            res.record("euler_weight_one", abs(euler_defect(s, 1.0).raw) / (1.0 + abs(s.phi)))
    return res


def run_wave_family(case, count=8, half=0.25, min_fraction=0.8):
    branch = _branch(case, half, count, min_fraction)
    res = FamilyResult(points=len(branch.values))
    for p, z in branch.solved():
        try:
            s = implicit_jet(case.system, p, z)
        except NonConvergence:
            continue
        res.converged += 1
        res.record("wave", wave_residual(s).normalized)
        res.record("null_gradient", null_gradient(s).normalized)
    return res


def explicit_sample(fmap, point):
    """Jet sample of an explicitly given field (a map of the coordinates)."""
    return ScalarFieldSample.from_jet(point, fmap(*seed_all(np.asarray(point, dtype=float))))
