"""PDE residuals and identities evaluated on field samples.

Every residual comes with a magnitude ``scale`` built from its constituent
terms; vanishing is always judged on ``raw / scale``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SingularJacobian

__all__ = [
    "ResidualValue",
    "VectorFieldSample",
    "bateman_residual",
    "bordered_matrix",
    "bordered_hessian",
    "monge_ampere_det",
    "wave_residual",
    "null_gradient",
    "monge_system_residual",
    "euler_defect",
    "hessian_equivalence",
    "HessianEquivalence",
    "SIGN_CONVENTIONS",
]

SIGN_CONVENTIONS = ("material", "printed")


@dataclass(frozen=True)
class ResidualValue:
    raw: float
    scale: float

    @property
    def normalized(self):
        return self.raw / self.scale

    def __float__(self):
        return self.normalized


def _row_scale(M):
    s = float(np.prod(np.linalg.norm(M, axis=1)))
    return s if s > 0.0 else 1.0


def bateman_residual(s):
    """``phi_tt phi_x^2 - 2 phi_tx phi_t phi_x + phi_xx phi_t^2`` for coordinates (t, x)."""
    if s.dim != 2:
        raise ValueError(f"Bateman residual needs 2 coordinates, sample has {s.dim}")
    pt, px = s.grad
    H = s.hess
    terms = (H[0, 0] * px * px, -2.0 * H[0, 1] * pt * px, H[1, 1] * pt * pt)
    return ResidualValue(float(sum(terms)), 1.0 + float(sum(abs(t) for t in terms)))


def bordered_matrix(grad, hess):
    d = len(grad)
    B = np.zeros((d + 1, d + 1))
    B[0, 1:] = grad
    B[1:, 0] = grad
    B[1:, 1:] = hess
    return B


def bordered_hessian(s, d=None):
    """Determinant of the Hessian bordered by the gradient (zero corner)."""
    if d is not None and s.dim != d:
        raise ValueError(f"sample dimension {s.dim} differs from requested {d}")
    if s.dim < 2:
        raise ValueError("bordered Hessian needs at least 2 coordinates")
    B = bordered_matrix(s.grad, s.hess)
    return ResidualValue(float(np.linalg.det(B)), _row_scale(B))


def monge_ampere_det(s):
    H = np.asarray(s.hess)
    return ResidualValue(float(np.linalg.det(H)), _row_scale(H))


def wave_residual(s, time_axis=0):
    """d'Alembertian ``u_tt - sum of spatial u_ii``."""
    if s.dim < 2:
        raise ValueError("wave residual needs time plus at least one spatial axis")
    diag = np.diag(s.hess)
    spatial = np.delete(diag, time_axis)
    return ResidualValue(float(diag[time_axis] - spatial.sum()), 1.0 + float(np.abs(diag).sum()))


def null_gradient(s, time_axis=0):
    """``u_t^2 - |grad_x u|^2``: vanishes for lightlike gradients."""
    if s.dim < 2:
        raise ValueError("null gradient needs time plus at least one spatial axis")
    g2 = np.asarray(s.grad) ** 2
    spatial = np.delete(g2, time_axis)
    return ResidualValue(float(g2[time_axis] - spatial.sum()), 1.0 + float(g2.sum()))


def euler_defect(s, weight):
    """``sum x_i phi_i - weight * phi``; zero for fields homogeneous of ``weight``."""
    terms = np.asarray(s.coords) * np.asarray(s.grad)
    raw = float(terms.sum() - weight * s.phi)
    return ResidualValue(raw, 1.0 + abs(s.phi) + float(np.abs(terms).sum()))


@dataclass
class VectorFieldSample:
    coords: np.ndarray
    values: np.ndarray  # (n,)
    grads: np.ndarray  # (n, d), axis 0 is time

    @property
    def dim(self):
        return len(self.coords)


def monge_system_residual(field, sign="material"):
    """Residuals of the first-order transport system, one per component.

    ``material``: ``u_t + sum_j u_j d_j u = 0`` (vanishing material
    derivative).  ``printed``: ``u_t - sum_j u_j d_j u = 0``.
    """
    if sign not in SIGN_CONVENTIONS:
        raise ValueError(f"unknown sign convention {sign!r}; choose from {SIGN_CONVENTIONS}")
    n = len(field.values)
    if field.grads.shape != (n, n + 1):
        raise ValueError(f"expected {n} components over {n + 1} coordinates (t first)")
    s = 1.0 if sign == "material" else -1.0
    transport = field.grads[:, 1:] @ field.values
    return field.grads[:, 0] + s * transport


class HessianEquivalence(NamedTuple):
    det_hz: float
    bordered: float
    ratio: float
    predicted_ratio: float
    consistent: bool


def hessian_equivalence(phi_sample, z_sample, tol=1e-8, threshold=1e-10):
    """Compare the level-set graph Hessian with the bordered Hessian of ``phi``.

    ``z_sample`` describes ``x_d = z(x_1, ..., x_{d-1})`` on a level set of
    ``phi`` at the same point.  The two determinants are related by the
    factor ``-1 / phi_{x_d}^(d+1)``; ``consistent`` reports whether they
    vanish together (each judged normalized against ``tol``).
    """
    d = phi_sample.dim
    if z_sample.dim != d - 1:
        raise ValueError("z sample must have one coordinate fewer than phi sample")
    pd = float(phi_sample.grad[-1])
    if abs(pd) <= threshold * (1.0 + float(np.linalg.norm(phi_sample.grad))):
        raise SingularJacobian("level set is not a graph over the first d-1 coordinates here")
    hz = monge_ampere_det(z_sample)
    bh = bordered_hessian(phi_sample)
    ratio = hz.raw / bh.raw if bh.raw != 0.0 else float("nan")
    consistent = (abs(hz.normalized) <= tol) == (abs(bh.normalized) <= tol)
    return HessianEquivalence(hz.raw, bh.raw, ratio, -1.0 / pd ** (d + 1), consistent)
