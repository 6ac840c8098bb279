"""Function families: homogeneous maps and seeded random presets."""

import numpy as np

from .errors import DomainViolation, HomogeneityViolation
from .expressions import Bin, Num, SmoothMap, Var, parse

__all__ = ["HomogeneousMap", "homogeneity_check", "random_poly", "random_family", "random_expression", "PRESETS"]

CHART_EPS = 1e-8
DEFAULT_SCALES = (0.5, 2.0, 3.0)


def homogeneity_check(fmap, weight, samples, scales=DEFAULT_SCALES, relative=True):
    """Largest deviation of ``f(s*xi)`` from ``s**weight * f(xi)`` over samples and scales.

    With ``relative`` the deviation at each sample is divided by ``1 + |f(xi)|``.
    Samples must stay off the chart boundary ``xi[-1] == 0``.
    """
    worst = 0.0
    for xi in samples:
        xi = np.asarray(xi, dtype=float)
        if abs(xi[-1]) < CHART_EPS:
            raise ValueError(f"sample {xi.tolist()} lies on the chart boundary xi_d = 0")
        base = fmap(*xi)
        for s in scales:
            dev = abs(fmap(*(s * xi)) - s**weight * base)
            if relative:
                dev /= 1.0 + abs(base)
            worst = max(worst, dev)
    return worst


class HomogeneousMap:
    """A map of ``d`` dual coordinates declared homogeneous of ``weight``.

    Build one from an explicit expression (validated on construction), or
    from a base function of the ``d - 1`` ratios ``xi_i / xi_d`` with
    :meth:`from_base`, which is homogeneous by construction.
    """

    def __init__(self, fmap, weight, tol=1e-8, samples=None, base=None):
        self.map = fmap
        self.weight = float(weight)
        self.base = base
        if samples is None:
            rng = np.random.default_rng(12345)
            samples = rng.uniform(0.5, 2.0, size=(8, len(fmap.params)))
            samples *= rng.choice([-1.0, 1.0], size=samples.shape)
        try:
            dev = homogeneity_check(fmap, self.weight, samples)
        except DomainViolation:
            samples = np.abs(samples)
            dev = homogeneity_check(fmap, self.weight, samples)
        if not dev <= tol:
            raise HomogeneityViolation(self.weight, dev)
        self.deviation = dev

    @property
    def dim(self):
        return len(self.map.params)

    @classmethod
    def from_base(cls, base, weight, names):
        names = tuple(names)
        if len(base.params) != len(names) - 1:
            raise ValueError("base must take one argument per ratio xi_i / xi_d")
        last = Var(names[-1])
        ratios = {p: Bin("/", Var(n), last) for p, n in zip(base.params, names[:-1])}
        body = base.substitute(ratios, names).body
        if weight == 1:
            body = Bin("*", last, body)
        elif weight != 0:
            body = Bin("*", Bin("^", last, Num(float(weight))), body)
        return cls(SmoothMap(names, body), weight, base=base)

    @classmethod
    def parse(cls, source, weight, names):
        return cls(SmoothMap.parse(source, names), weight)

    def __call__(self, *args):
        return self.map(*args)


def random_poly(rng, params, degree=3, coef=2.0):
    """Random polynomial of total degree <= ``degree`` with coefficients in ``[-coef, coef]``."""
    params = tuple(params)
    terms = []
    for exps in _monomials(len(params), degree):
        c = float(rng.uniform(-coef, coef))
        factors = [f"{p}^{e}" if e > 1 else p for p, e in zip(params, exps) if e > 0]
        terms.append(" * ".join([repr(c)] + factors))
    return SmoothMap(params, parse(" + ".join(terms), params))


def _monomials(n, degree):
    if n == 0:
        yield ()
        return
    for e in range(degree + 1):
        for rest in _monomials(n - 1, degree - e):
            yield (e,) + rest


def _random_trig(rng, params, coef=2.0):
    p = params[0]
    lin = " + ".join(f"{float(rng.uniform(-1, 1))!r} * {q}" for q in params)
    return SmoothMap(
        params,
        parse(f"{float(rng.uniform(-coef, coef))!r} + {float(rng.uniform(-coef, coef))!r} * sin({lin}) "
              f"+ {float(rng.uniform(-coef, coef))!r} * cos({float(rng.uniform(0.5, 1.5))!r} * {p})", params),
    )


def _random_exp(rng, params, coef=2.0):
    lin = " + ".join(f"{float(rng.uniform(-1, 1))!r} * {q}" for q in params)
    return SmoothMap(
        params,
        parse(f"{float(rng.uniform(-coef, coef))!r} + {float(rng.uniform(-coef, coef))!r} * exp({lin})", params),
    )


PRESETS = {
    "poly": random_poly,
    "trig": _random_trig,
    "exp": _random_exp,
}


def random_family(rng, params, kind="poly", **kwargs):
    """Draw one map from a named preset generator."""
    try:
        gen = PRESETS[kind]
    except KeyError:
        raise ValueError(f"unknown preset {kind!r}; choose from {sorted(PRESETS)}") from None
    return gen(rng, tuple(params), **kwargs)


def random_expression(rng, params, depth=3):
    """Random composite expression that is smooth and defined for all real arguments.

    ``log`` and ``sqrt`` only ever see arguments of the form ``1 + a^2``;
    ``exp`` sees a bounded sine so values stay moderate.
    """
    params = tuple(params)

    def leaf():
        if rng.random() < 0.3:
            return f"{rng.uniform(-2, 2):.3f}"
        return str(rng.choice(params))

    def build(level):
        if level == 0:
            return leaf()
        r = rng.integers(0, 9)
        a = build(level - 1)
        if r <= 1:
            return f"({a} + {build(level - 1)})"
        if r == 2:
            return f"({a} - {build(level - 1)})"
        if r == 3:
            return f"({a} * {build(level - 1)})"
        if r == 4:
            return f"({a} / (1.5 + sin({build(level - 1)})))"
        if r == 5:
            return f"{rng.choice(['sin', 'cos'])}({a})"
        if r == 6:
            return f"exp(sin({a}))"
        if r == 7:
            return f"{rng.choice(['log', 'sqrt'])}(1 + ({a})^2)"
        return f"({a})^{int(rng.integers(2, 4))}"

    return SmoothMap(params, parse(build(depth), params))
