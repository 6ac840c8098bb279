"""Derivatives of implicitly defined fields.

Three independent routes to the gradient and Hessian of the field defined
by a solved :class:`~implicit_ansatz.solve.AnsatzSystem`:

* :func:`implicit_jet` -- implicit function theorem on full second-order
  jets of the constraints (the general, authoritative route);
* :func:`chaundy_jet` -- closed formulas for the two-constraint plane
  envelope family, written in terms of the auxiliaries ``mu`` and
  ``lambda``;
* :func:`fd_jet` -- central finite differences of re-solved values.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularJacobian
from .jets import Jet2, seed_all
from .solve import NEWTON_TOL, MAX_ITER, newton_solve

__all__ = [
    "ScalarFieldSample",
    "ChaundyDiagnostics",
    "implicit_derivatives",
    "implicit_jet",
    "chaundy_jet",
    "chaundy_consistency",
    "fd_jet",
    "separation",
    "SINGULAR_TOL",
]

SINGULAR_TOL = 1e-10
FD_STEP = 1e-5
FD_STEP_HESS = 1e-4


@dataclass
class ChaundyDiagnostics:
    mu: float
    lam: float
    param_grad: np.ndarray
    mu_u: float = 0.0


@dataclass
class ScalarFieldSample:
    coords: np.ndarray
    phi: float
    parameters: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    diagnostics: ChaundyDiagnostics = None
    param_grad: np.ndarray = None  # one row per parameter
    info: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.grad.shape[0]

    @classmethod
    def from_jet(cls, coords, jet):
        """Sample of an explicitly known field given its jet at ``coords``."""
        return cls(np.asarray(coords, dtype=float), jet.value, np.zeros(0), jet.grad.copy(), jet.hess.copy())


def _jets(maps, point):
    seeds = seed_all(point)
    out = []
    n = len(point)
    for g in maps:
        j = g(*seeds)
        if not isinstance(j, Jet2):
            j = Jet2(j, np.zeros(n), np.zeros((n, n)))
        out.append(j)
    return out


def separation(system, coords, unknowns):
    """Distance from an envelope, scale free: ``sigma_min(G_z) / ||G||_2``.

    ``G`` is the full constraint Jacobian at the solved point and ``G_z``
    its block in the unknowns.  Zero on an envelope; the field gradient
    is bounded by roughly its inverse.
    """
    coords = np.asarray(coords, dtype=float)
    point = np.concatenate([np.asarray(unknowns, dtype=float), coords])
    G = np.array([j.grad for j in _jets(system.residual_maps, point)])
    norm = np.linalg.norm(G, 2)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.svd(G[:, : system.m], compute_uv=False)[-1] / norm)


def implicit_derivatives(system, coords, unknowns, singular_tol=SINGULAR_TOL):
    """First and second coordinate derivatives of every unknown.

    Returns ``(z, dz, d2z)`` with shapes ``(m,)``, ``(m, d)`` and
    ``(m, d, d)``.
    """
    coords = np.asarray(coords, dtype=float)
    z = np.asarray(unknowns, dtype=float)
    m, d = system.m, system.coord_dim
    jets = _jets(system.residual_maps, np.concatenate([z, coords]))
    G = np.array([j.grad for j in jets])
    Gz, Gx = G[:, :m], G[:, m:]
    row = np.prod(np.linalg.norm(G, axis=1))
    if row == 0.0 or abs(np.linalg.det(Gz)) <= singular_tol * row:
        raise SingularJacobian(f"envelope point: constraint Jacobian singular at coords {coords.tolist()}")
    dz = np.linalg.solve(Gz, -Gx)
    P = np.vstack([dz, np.eye(d)])
    Q = np.array([P.T @ j.hess @ P for j in jets])
    d2z = -np.linalg.solve(Gz, Q.reshape(m, d * d)).reshape(m, d, d)
    d2z = 0.5 * (d2z + d2z.transpose(0, 2, 1))
    return z, dz, d2z


def implicit_jet(system, coords, unknowns, residual_tol=1e-8):
    """Gradient and Hessian of the field unknown by the implicit function theorem."""
    coords = np.asarray(coords, dtype=float)
    r = system.residual(unknowns, coords)
    if not np.max(np.abs(r), initial=0.0) <= residual_tol:
        raise ValueError(f"unknowns do not solve the system at {coords.tolist()} (residual {np.max(np.abs(r)):.3g})")
    z, dz, d2z = implicit_derivatives(system, coords, unknowns)
    k = system.field_index
    others = [i for i in range(system.m) if i != k]
    return ScalarFieldSample(
        coords=coords,
        phi=float(z[k]),
        parameters=z[others],
        grad=dz[k],
        hess=d2z[k],
        param_grad=dz[others],
        info={"param_hess": d2z[others]},
    )


def chaundy_jet(F, coords, solved, singular_tol=SINGULAR_TOL):
    """Closed-form derivatives for the plane-envelope constraints.

    ``F`` holds ``d + 1`` maps of ``(phi, u)``: the coefficients of the
    ``d`` coordinates followed by the right-hand side, so the constraints
    read ``sum x_i F_i = F_{d+1}`` and its ``u`` derivative.  ``solved`` is
    ``(phi, u)``, or ``(phi,)`` when no map depends on ``u``.
    """
    coords = np.asarray(coords, dtype=float)
    d = coords.shape[0]
    if len(F) != d + 1:
        raise ValueError(f"need {d + 1} maps for {d} coordinates")
    phi = float(solved[0])
    u = float(solved[1]) if len(solved) > 1 else 0.0
    jets = _jets(F, np.array([phi, u]))
    val = np.array([j.value for j in jets])
    Fp = np.array([j.grad[0] for j in jets])
    Fu = np.array([j.grad[1] for j in jets])
    Fpp = np.array([j.hess[0, 0] for j in jets])
    Fpu = np.array([j.hess[0, 1] for j in jets])
    Fuu = np.array([j.hess[1, 1] for j in jets])

    def combo(a):
        return float(coords @ a[:d] - a[d])

    def magnitude(a):
        return float(np.abs(coords * a[:d]).sum() + abs(a[d]))

    mu = combo(Fp)
    if magnitude(Fp) == 0.0 or abs(mu) <= singular_tol * magnitude(Fp):
        raise SingularJacobian(f"envelope point: mu = {mu:.3g} at coords {coords.tolist()}")
    lam = combo(Fpp)
    grad = -val[:d] / mu
    if len(solved) > 1:
        mu_u = combo(Fpu)
        b_u = combo(Fuu)
        if magnitude(Fuu) == 0.0 or abs(b_u) <= singular_tol * magnitude(Fuu):
            raise SingularJacobian(f"parameter constraint singular at coords {coords.tolist()}")
        c = Fu[:d] + mu_u * grad
        ugrad = -c / b_u
    else:
        mu_u = 0.0
        c = np.zeros(d)
        ugrad = np.zeros(d)
    cross = np.outer(Fp[:d], grad)
    hess = -(cross + cross.T + lam * np.outer(grad, grad) + np.outer(c, ugrad)) / mu
    hess = 0.5 * (hess + hess.T)
    return ScalarFieldSample(
        coords=coords,
        phi=phi,
        parameters=np.array([u]) if len(solved) > 1 else np.zeros(0),
        grad=grad,
        hess=hess,
        diagnostics=ChaundyDiagnostics(mu=mu, lam=lam, param_grad=ugrad, mu_u=mu_u),
        param_grad=ugrad[None, :] if len(solved) > 1 else np.zeros((0, d)),
    )


def chaundy_consistency(F, sample, drop_mu_u=False):
    """Cross-derivative consistency of the envelope parameter, per coordinate pair.

    Returns the largest normalized defect over pairs ``k < l`` of
    ``c_k u_l - c_l u_k`` with ``c_k = dF_k/du + mu_u * phi_k``.  With
    ``drop_mu_u=True`` the ``mu_u`` correction is dropped, which is only an
    identity for families whose ``phi``-slope does not vary with ``u``.
    The sample's gradients may come from any route.
    """
    d = sample.dim
    jets = _jets(F, np.array([sample.phi, sample.parameters[0]]))
    Fu = np.array([j.grad[1] for j in jets])
    Fpu = np.array([j.hess[0, 1] for j in jets])
    c = Fu[:d].copy()
    if not drop_mu_u:
        c += float(sample.coords @ Fpu[:d] - Fpu[d]) * sample.grad
    ugrad = sample.param_grad[0]
    worst = 0.0
    for k in range(d):
        for l in range(k + 1, d):
            a, b = c[k] * ugrad[l], c[l] * ugrad[k]
            scale = abs(a) + abs(b)
            if scale > 0.0:
                worst = max(worst, abs(a - b) / scale)
    return worst


def fd_jet(
    system, coords, seed, h=FD_STEP, h_hess=FD_STEP_HESS, tol=NEWTON_TOL, max_iter=MAX_ITER, symmetry=True
):
    """Finite-difference oracle: central differences of re-solved field values.

    The gradient uses step ``h``; the Hessian uses 3-point diagonal and
    4-point cross stencils with step ``h_hess``.  ``info["asymmetry"]``
    compares each mixed partial from two rectangular stencils with the
    step ratios swapped, both extrapolated to zero step;
    ``symmetry=False`` skips those extra solves and leaves it out.  Any
    failed stencil solve propagates as :class:`NonConvergence`.
    """
    coords = np.asarray(coords, dtype=float)
    d = coords.shape[0]
    k = system.field_index
    z0 = newton_solve(system, coords, seed, tol=tol, max_iter=max_iter)
    E = np.eye(d)

    def f(x):
        return newton_solve(system, x, z0, tol=tol, max_iter=max_iter)[k]

    f0 = z0[k]
    grad = np.array([(f(coords + h * E[i]) - f(coords - h * E[i])) / (2 * h) for i in range(d)])
    hess = np.zeros((d, d))
    s = h_hess
    plus = [f(coords + s * E[i]) for i in range(d)]
    minus = [f(coords - s * E[i]) for i in range(d)]
    mixed = []
    for i in range(d):
        hess[i, i] = (plus[i] - 2 * f0 + minus[i]) / (s * s)
        for j in range(i + 1, d):
            pp = f(coords + s * E[i] + s * E[j])
            pm = f(coords + s * E[i] - s * E[j])
            mp = f(coords - s * E[i] + s * E[j])
            mm = f(coords - s * E[i] - s * E[j])
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4 * s * s)
            if not symmetry:
                continue
            # the same mixed partial from two rectangular stencils, s x 2s and 2s x s,
            # each Richardson-extrapolated so the O(s^2) truncation cancels
            a_ij = _richardson(lambda r: _rect(f, coords, r * E[i], 2 * r * E[j]) / (8 * r * r), s)
            a_ji = _richardson(lambda r: _rect(f, coords, 2 * r * E[i], r * E[j]) / (8 * r * r), s)
            mixed.append(abs(a_ij - a_ji))
    info = {}
    if symmetry:
        # relative to the Hessian as a whole, like relative_error
        info["asymmetry"] = max(mixed, default=0.0) / max(float(np.max(np.abs(hess))), 1.0)
    others = [i for i in range(system.m) if i != k]
    return ScalarFieldSample(
        coords=coords,
        phi=float(f0),
        parameters=z0[others],
        grad=grad,
        hess=hess,
        info=info,
    )


def _rect(f, x, a, b):
    return f(x + a + b) - f(x - a + b) - f(x + a - b) + f(x - a - b)


def _richardson(a, s):
    return (4.0 * a(s / 2) - a(s)) / 3.0
