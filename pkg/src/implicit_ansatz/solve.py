"""Newton solution of implicit constraint systems over coordinate lattices.

The implicit solutions handled here are generally multivalued, so branch
choice is always explicit: each solve is seeded, and lattice sweeps seed
every point from an already-solved neighbour.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, NonConvergence, SingularJacobian
from .expressions import SmoothMap

__all__ = [
    "Axis",
    "Lattice",
    "AnsatzSystem",
    "SolutionBranch",
    "newton_solve",
    "grid_continuation",
    "walk_seed",
    "restrict_region",
    "hadamard_ratio",
    "NEWTON_TOL",
    "MAX_ITER",
    "TRAVERSALS",
]

NEWTON_TOL = 1e-12
MAX_ITER = 50
MAX_HALVINGS = 20
NEWTON_SINGULAR = 1e-12


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    count: int

    def values(self):
        if self.count == 1:
            return np.array([0.5 * (self.min + self.max)])
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class Lattice:
    axes: tuple

    def __init__(self, axes):
        object.__setattr__(self, "axes", tuple(a if isinstance(a, Axis) else Axis(*a) for a in axes))
        for a in self.axes:
            if a.count < 0:
                raise ValueError("axis counts must be non-negative")

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.count for a in self.axes)

    def __len__(self):
        return math.prod(self.shape)

    def indices(self):
        return list(itertools.product(*(range(c) for c in self.shape)))

    def point(self, index):
        return np.array([ax.values()[i] for ax, i in zip(self.axes, index)])

    def points(self):
        vals = [a.values() for a in self.axes]
        return [np.array([v[i] for v, i in zip(vals, idx)]) for idx in self.indices()]

    def scaled(self, factor):
        """Same extent with every count multiplied by ``factor`` (at least 1)."""
        return Lattice([Axis(a.min, a.max, max(1, int(round(a.count * factor)))) for a in self.axes])


class AnsatzSystem:
    """Square constraint system ``g(unknowns; coords) = 0``.

    ``residual_maps`` are :class:`SmoothMap` objects whose parameters are the
    unknown names followed by the coordinate names.  ``field`` names the
    unknown whose derivatives are reported (``"phi"`` unless stated).
    """

    def __init__(self, unknown_names, coord_names, residual_maps, field="phi", label=None):
        self.unknown_names = tuple(unknown_names)
        self.coord_names = tuple(coord_names)
        self.residual_maps = list(residual_maps)
        self.field = field
        self.label = label
        self._jacobian_maps = None
        if len(self.residual_maps) != len(self.unknown_names):
            raise ValueError(
                f"system is not square: {len(self.residual_maps)} residuals for {len(self.unknown_names)} unknowns"
            )
        if field not in self.unknown_names:
            raise ValueError(f"field {field!r} is not among the unknowns {self.unknown_names}")
        expected = self.unknown_names + self.coord_names
        for g in self.residual_maps:
            if g.params != expected:
                raise ValueError(f"residual map parameters {g.params} differ from {expected}")

    @property
    def coord_dim(self):
        return len(self.coord_names)

    @property
    def m(self):
        return len(self.unknown_names)

    @property
    def field_index(self):
        return self.unknown_names.index(self.field)

    def residual(self, z, coords):
        args = tuple(float(v) for v in z) + tuple(float(c) for c in coords)
        return np.array([g(*args) for g in self.residual_maps])

    @property
    def jacobian_maps(self):
        """Symbolic partials of each residual in each unknown, built once."""
        if self._jacobian_maps is None:
            self._jacobian_maps = [[g.diff(u) for u in self.unknown_names] for g in self.residual_maps]
        return self._jacobian_maps

    def residual_and_jacobian(self, z, coords):
        # plain float evaluation: Newton needs no second derivatives
        args = tuple(float(v) for v in z) + tuple(float(c) for c in coords)
        r = np.array([g(*args) for g in self.residual_maps])
        J = np.array([[d(*args) for d in row] for row in self.jacobian_maps])
        return r, J

    def __repr__(self):
        return f"AnsatzSystem(unknowns={self.unknown_names}, coords={self.coord_names}, label={self.label!r})"


def hadamard_ratio(M):
    """``|det M|`` divided by the product of its row norms (0 for a zero row)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    norms = np.linalg.norm(M, axis=1)
    scale = float(np.prod(norms))
    if scale == 0.0:
        return 0.0
    return abs(float(np.linalg.det(M))) / scale


@dataclass
class NewtonResult:
    z: np.ndarray
    iterations: int
    residual_norm: float


def newton_solve(system, coords, seed, tol=NEWTON_TOL, max_iter=MAX_ITER, full_output=False):
    """Damped Newton iteration for ``system`` at fixed ``coords``.

    Steps are halved (up to 20 times) while the max-norm residual fails to
    decrease.  Raises :class:`SingularJacobian` when the Jacobian is
    numerically singular relative to its row norms and
    :class:`NonConvergence` when ``max_iter`` is exhausted.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    coords = np.asarray(coords, dtype=float)
    z = np.array(seed, dtype=float).reshape(-1)
    if z.shape[0] != system.m:
        raise ValueError(f"seed has {z.shape[0]} entries, system has {system.m} unknowns")
    try:
        r, J = system.residual_and_jacobian(z, coords)
    except DomainViolation as exc:
        raise NonConvergence(f"residual undefined at seed: {exc}") from exc
    norm = float(np.max(np.abs(r)))
    for it in range(max_iter + 1):
        if not np.isfinite(norm):
            raise NonConvergence("non-finite residual")
        # checked before the convergence test: a root on an envelope is not a usable branch point
        if hadamard_ratio(J) <= NEWTON_SINGULAR:
            raise SingularJacobian(f"singular constraint Jacobian at coords {coords.tolist()}")
        if norm <= tol:
            z, norm = _polish(system, coords, z, r, J, norm)
            res = NewtonResult(z, it, norm)
            return res if full_output else z
        if it == max_iter:
            break
        step = np.linalg.solve(J, -r)
        alpha = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = z + alpha * step
            try:
                n_trial = float(np.max(np.abs(system.residual(trial, coords))))
            except DomainViolation:
                n_trial = math.inf
            if n_trial < norm:
                break
            alpha *= 0.5
        else:
            raise NonConvergence(f"line search stalled at coords {coords.tolist()} (residual {norm:.3g})")
        z = trial
        r, J = system.residual_and_jacobian(z, coords)
        norm = float(np.max(np.abs(r)))
    raise NonConvergence(
        f"no convergence after {max_iter} iterations at coords {coords.tolist()} (residual {norm:.3g})"
    )


def _polish(system, coords, z, r, J, norm):
    # one extra full step, kept only if it does not worsen the residual
    if norm == 0.0:
        return z, norm
    trial = z + np.linalg.solve(J, -r)
    try:
        n_trial = float(np.max(np.abs(system.residual(trial, coords))))
    except DomainViolation:
        return z, norm
    return (trial, n_trial) if n_trial <= norm else (z, norm)


TRAVERSALS = ("lexicographic", "serpentine", "neighbor")


@dataclass
class SolutionBranch:
    grid: Lattice
    seed: np.ndarray
    values: list = field(default_factory=list)  # unknown vectors, None on failure
    status: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)

    @property
    def n_solved(self):
        return sum(v is not None for v in self.values)

    @property
    def convergence_fraction(self):
        return self.n_solved / len(self.values) if self.values else 1.0

    def coords(self):
        return self.grid.points()

    def solved(self):
        """Pairs of (coords, unknowns) for every solved point, in lattice order."""
        return [(p, v) for p, v in zip(self.grid.points(), self.values) if v is not None]


def _order(grid, traversal):
    idx = grid.indices()
    if traversal == "lexicographic" or traversal == "neighbor":
        return idx
    if traversal == "serpentine":
        return sorted(idx, key=lambda i: _serpentine_key(i, grid.shape))
    raise ValueError(f"unknown traversal {traversal!r}; choose from {TRAVERSALS}")


def _serpentine_key(index, shape):
    key = []
    parity = 0
    for i, n in zip(index, shape):
        key.append(n - 1 - i if parity % 2 else i)
        parity += key[-1]
    return tuple(key)


def grid_continuation(
    system, grid, seed, traversal="lexicographic", tol=NEWTON_TOL, max_iter=MAX_ITER, max_failures=None
):
    """Solve ``system`` at every lattice point by seeded continuation.

    Failures after the first point are recorded per point; a failure at the
    first traversed point propagates.  With ``max_failures`` the sweep stops
    once that many points have failed, leaving the rest marked ``skipped``.
    """
    if not isinstance(grid, Lattice):
        grid = Lattice(grid)
    order = _order(grid, traversal)
    n = len(grid)
    branch = SolutionBranch(grid, np.asarray(seed, dtype=float), [None] * n, ["pending"] * n, [0] * n, [math.nan] * n)
    if n == 0:
        return branch
    flat = {idx: k for k, idx in enumerate(grid.indices())}
    previous = np.asarray(seed, dtype=float)
    failures = 0
    for step, idx in enumerate(order):
        if max_failures is not None and failures > max_failures:
            for rest in order[step:]:
                branch.status[flat[rest]] = "skipped"
            break
        k = flat[idx]
        start = previous
        if traversal == "neighbor":
            start = _neighbor_seed(idx, flat, branch.values, previous)
        try:
            res = newton_solve(system, grid.point(idx), start, tol=tol, max_iter=max_iter, full_output=True)
        except NonConvergence as exc:
            if step == 0:
                raise
            branch.status[k] = "singular" if isinstance(exc, SingularJacobian) else "nonconvergent"
            failures += 1
            continue
        branch.values[k] = res.z
        branch.status[k] = "ok"
        branch.iterations[k] = res.iterations
        branch.residual_norms[k] = res.residual_norm
        previous = res.z
    return branch


def _neighbor_seed(idx, flat, values, fallback):
    for axis in reversed(range(len(idx))):
        if idx[axis] > 0:
            nb = list(idx)
            nb[axis] -= 1
            v = values[flat[tuple(nb)]]
            if v is not None:
                return v
    return fallback


def walk_seed(system, start, seed, end, steps=16, tol=NEWTON_TOL, max_iter=MAX_ITER):
    """Carry a solution from ``start`` to ``end`` along the straight segment."""
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    z = np.asarray(seed, dtype=float)
    for s in np.linspace(0.0, 1.0, steps + 1)[1:]:
        z = newton_solve(system, start + s * (end - start), z, tol=tol, max_iter=max_iter)
    return z


def restrict_region(system, center, seed, half_widths, counts, min_fraction=0.8, max_shrinks=10, **kw):
    """Continuation over a box around a known solution, shrunk until it mostly converges.

    ``seed`` must solve (or nearly solve) the system at ``center``.  The box
    is halved until the convergence fraction reaches ``min_fraction``; the
    last attempted branch is returned if that never happens.
    """
    center = np.asarray(center, dtype=float)
    half = np.asarray(half_widths, dtype=float)
    z0 = newton_solve(system, center, seed, **kw)
    branch = None
    for _ in range(max_shrinks + 1):
        grid = Lattice([Axis(c - h, c + h, n) for c, h, n in zip(center, half, counts)])
        try:
            corner_seed = walk_seed(system, center, z0, grid.point((0,) * grid.dim), **kw)
            allowed = int(math.floor((1.0 - min_fraction) * len(grid)))
            branch = grid_continuation(system, grid, corner_seed, max_failures=allowed, **kw)
        except NonConvergence:
            half = half / 2
            continue
        if branch.convergence_fraction >= min_fraction:
            return branch
        half = half / 2
    if branch is None:
        raise NonConvergence("no convergent region found around the given center")
    return branch
