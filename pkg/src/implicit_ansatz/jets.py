"""Second-order truncated Taylor arithmetic in ``d`` variables.

A :class:`Jet2` carries the value, gradient and (symmetric) Hessian of a
quantity at a point.  Arithmetic on jets propagates all three exactly, so
any composite of the supported operations yields exact first and second
derivatives up to rounding.
"""

import math

import numpy as np

from .errors import DomainViolation

__all__ = ["Jet2", "jet_seed", "jet_const", "jet_mul", "jet_chain", "seed_all", "ELEMENTARY"]


class Jet2:
    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @property
    def dim(self):
        return self.grad.shape[0]

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad.tolist()!r}, hess={self.hess.tolist()!r})"

    def _check(self, other):
        if self.grad.shape[0] != other.grad.shape[0]:
            raise ValueError(f"jet dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        return Jet2(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)
        return Jet2(self.value - other, self.grad, self.hess)

    def __rsub__(self, other):
        return Jet2(other - self.value, -self.grad, -self.hess)

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            return jet_mul(self, other)
        return Jet2(self.value * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            if other.value == 0.0:
                raise DomainViolation("division by a jet with zero value")
            q = self.value / other.value
            gq = (self.grad - q * other.grad) / other.value
            cross = gq[:, None] * other.grad
            hq = (self.hess - q * other.hess - cross - cross.T) / other.value
            return Jet2(q, gq, hq)
        if other == 0:
            raise DomainViolation("division by zero")
        return Jet2(self.value / other, self.grad / other, self.hess / other)

    def __rtruediv__(self, other):
        return jet_const(other, self.dim) / self


def jet_const(value, dim):
    return Jet2(value, np.zeros(dim), np.zeros((dim, dim)))


def jet_seed(point, index):
    """Jet of the coordinate function ``x[index]`` at ``point``."""
    point = np.asarray(point, dtype=float)
    d = point.shape[0]
    if not 0 <= index < d:
        raise IndexError(f"seed index {index} out of range for dimension {d}")
    grad = np.zeros(d)
    grad[index] = 1.0
    return Jet2(point[index], grad, np.zeros((d, d)))


def seed_all(point):
    return [jet_seed(point, i) for i in range(len(point))]


def jet_mul(a, b):
    ga, gb = a.grad, b.grad
    if ga.shape != gb.shape:
        raise ValueError(f"jet dimension mismatch: {a.dim} vs {b.dim}")
    cross = ga[:, None] * gb
    av, bv = a.value, b.value
    return Jet2(av * bv, av * gb + bv * ga, av * b.hess + bv * a.hess + cross + cross.T)


def _derivs(name, x, p=None):
    # (f, f', f'') at x
    if name == "sin":
        s, c = math.sin(x), math.cos(x)
        return s, c, -s
    if name == "cos":
        s, c = math.sin(x), math.cos(x)
        return c, -s, -c
    if name == "exp":
        e = math.exp(x) if x < 709.0 else math.inf
        return e, e, e
    if name == "log":
        if x <= 0.0:
            raise DomainViolation(f"log of non-positive value {x!r}")
        return math.log(x), 1.0 / x, -1.0 / (x * x)
    if name == "sqrt":
        if x < 0.0:
            raise DomainViolation(f"sqrt of negative value {x!r}")
        r = math.sqrt(x)
        if r == 0.0:
            raise DomainViolation("sqrt is not differentiable at 0")
        return r, 0.5 / r, -0.25 / (r * x)
    if name == "neg":
        return -x, -1.0, 0.0
    if name == "inv":
        if x == 0.0:
            raise DomainViolation("inverse of zero")
        return 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)
    if name == "pow":
        if float(p).is_integer():
            n = int(p)
            if n < 0 and x == 0.0:
                raise DomainViolation("negative power of zero")
            return x**n, n * x ** (n - 1) if n != 0 else 0.0, n * (n - 1) * x ** (n - 2) if n not in (0, 1) else 0.0
        if x <= 0.0:
            raise DomainViolation(f"non-integer power of non-positive value {x!r}")
        return x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2)
    raise KeyError(name)


ELEMENTARY = ("sin", "cos", "exp", "log", "sqrt", "pow", "neg", "inv")


def jet_chain(name, a, p=None):
    """Apply the elementary function ``name`` to jet ``a`` (``p`` is the exponent for ``pow``)."""
    if name not in ELEMENTARY:
        raise KeyError(f"unknown elementary function {name!r}")
    f, f1, f2 = _derivs(name, a.value, p)
    g = a.grad
    return Jet2(f, f1 * g, f1 * a.hess + f2 * (g[:, None] * g))
