import math

import numpy as np
import pytest

from implicit_ansatz.calculus import implicit_jet
from implicit_ansatz.constructors import (
    as_map,
    bateman_ansatz,
    legendre_pair,
    ma_chaundy,
    monge_flow,
    null_deviation,
    periodic_trapezoid,
    QuadratureRule,
    superposed_wave,
    ufe_chaundy,
    wave_ansatz,
)
from implicit_ansatz.errors import HomogeneityViolation, NonConvergence, NullConstraintViolation, SingularJacobian
from implicit_ansatz.expressions import SmoothMap
from implicit_ansatz.families import HomogeneousMap
from implicit_ansatz.residuals import (
    bateman_residual,
    bordered_hessian,
    euler_defect,
    monge_ampere_det,
    monge_system_residual,
    null_gradient,
    wave_residual,
)
from implicit_ansatz.solve import Lattice, grid_continuation, newton_solve
from implicit_ansatz.verification import explicit_sample, random_ma_case, relative_error


def solved_samples(system, grid, seed):
    branch = grid_continuation(system, grid, seed)
    for p, z in branch.solved():
        yield implicit_jet(system, p, z)


def test_as_map_arity():
    assert as_map(2, ("u",))(0.3) == 2.0
    assert as_map(SmoothMap.parse("a + 1", ("a",)), ("phi",)).params == ("phi",)
    with pytest.raises(ValueError):
        as_map(SmoothMap.parse("a + b", ("a", "b")), ("phi",))
    with pytest.raises(ValueError):
        bateman_ansatz(SmoothMap.parse("a * b", ("a", "b")), "1")


def test_bateman_linear_family():
    sys = bateman_ansatz("phi", "1")
    grid = Lattice([(1.0, 2.0, 20), (-1.0, 1.0, 20)])
    branch = grid_continuation(sys, grid, [2.0])
    assert branch.convergence_fraction == 1.0
    for p, z in branch.solved():
        assert z[0] == pytest.approx((1 - p[1]) / p[0], abs=1e-12)
        assert abs(bateman_residual(implicit_jet(sys, p, z)).normalized) <= 1e-10


def test_bateman_degenerate_family():
    with pytest.raises(SingularJacobian):
        newton_solve(bateman_ansatz("1", "1"), [0.5, 0.5], [0.0])


def test_bateman_trig_family():
    sys = bateman_ansatz("sin(phi)", "cos(phi)")
    grid = Lattice([(1.0, 1.5, 8), (0.5, 1.0, 8)])
    samples = list(solved_samples(sys, grid, [0.6]))
    assert len(samples) == 64
    assert max(abs(bateman_residual(s).normalized) for s in samples) <= 1e-8


def test_ufe_chaundy_example():
    sys = ufe_chaundy("u", "1", "phi", "u^2")
    assert sys.unknown_names == ("phi", "u")
    grid = Lattice([(0.5, 1.5, 5), (-0.5, 0.5, 5), (0.5, 1.5, 5)])
    t, x, y = grid.point((0, 0, 0))
    for s in solved_samples(sys, grid, [-(t * t / 4 + x) / y, t / 2]):
        t, x, y = s.coords
        assert s.phi == pytest.approx(-(t * t / 4 + x) / y, abs=1e-12)
        assert s.parameters[0] == pytest.approx(t / 2, abs=1e-12)
        assert abs(bordered_hessian(s).normalized) <= 1e-9


def test_ufe_u_independent_collapses():
    sys = ufe_chaundy("phi", "1", "phi^2", "1")
    assert sys.unknown_names == ("phi",) and len(sys.residual_maps) == 1
    grid = Lattice([(1.0, 1.5, 5), (0.0, 0.5, 5), (0.1, 0.4, 5)])
    samples = list(solved_samples(sys, grid, [0.5]))
    assert len(samples) == 125
    assert max(abs(bordered_hessian(s).normalized) for s in samples) <= 1e-9


def test_ufe_embeds_bateman():
    emb = ufe_chaundy("phi", "1", "0", "1")
    bat = bateman_ansatz("phi", "1")
    rng = np.random.default_rng(0)
    for _ in range(20):
        t, x, y = rng.uniform(0.5, 2.0), rng.uniform(-1, 1), rng.uniform(-3, 3)
        a = newton_solve(emb, [t, x, y], [0.0])[0]
        b = newton_solve(bat, [t, x], [0.0])[0]
        assert abs(a - b) <= 1e-12


def test_ufe_needs_three_maps():
    with pytest.raises(ValueError):
        ufe_chaundy("phi", "1")


def test_ma_example():
    field = ma_chaundy("u", "v", "1", "(u^2 + v^2) / 2")
    rng = np.random.default_rng(1)
    for _ in range(10):
        p = rng.uniform(-1, 1, size=3)
        uv = field.solve(p, [0.0, 0.0])
        np.testing.assert_allclose(uv, p[:2], atol=1e-12)
        s = field.sample(p, uv)
        assert s.phi == pytest.approx((p[0] ** 2 + p[1] ** 2) / 2 + p[2], abs=1e-12)
        assert abs(monge_ampere_det(s).raw) <= 1e-12


def test_ma_rank_two_hessian_matches_ift():
    rng = np.random.default_rng(2)
    for _ in range(5):
        case = random_ma_case(rng)
        field = case.construction
        uv = field.solve(case.center, case.seed)
        s = field.sample(case.center, uv)
        full = implicit_jet(field.full_system, case.center, np.concatenate([[s.phi], uv]))
        assert relative_error(full.hess, s.hess) <= 1e-9
        assert np.linalg.matrix_rank(s.hess, tol=1e-9 * max(1.0, np.abs(s.hess).max())) <= 2


def test_ma_weight_one_when_g4_vanishes():
    rng = np.random.default_rng(3)
    for _ in range(5):
        case = random_ma_case(rng, homogeneous=True)
        s = case.construction.sample(case.center, case.construction.solve(case.center, case.seed))
        assert abs(euler_defect(s, 1.0).normalized) <= 1e-10


def test_ma_parameter_system_singular():
    # every map depends on u + v only, so both stationarity equations coincide
    field = ma_chaundy("u + v", "(u + v)^2", "1", "(u + v)^3")
    with pytest.raises(SingularJacobian):
        field.solve([0.3, 0.2, 0.1], [0.1, 0.2])


def test_wave_null_family():
    sys = wave_ansatz("u", "u", "0")
    for y in (-1.0, 0.0, 2.0):
        assert newton_solve(sys, [1.0, 1.0, y], [0.3])[0] == pytest.approx(0.5, abs=1e-14)
    grid = Lattice([(0.5, 1.5, 6), (0.5, 1.5, 6), (-1.0, 1.0, 6)])
    for s in solved_samples(sys, grid, [1.0]):
        assert s.phi == pytest.approx(1 / (s.coords[0] + s.coords[1]), abs=1e-12)
        assert abs(wave_residual(s).normalized) <= 1e-10
        assert abs(null_gradient(s).normalized) <= 1e-10


def test_wave_rejects_non_null_family():
    with pytest.raises(NullConstraintViolation) as info:
        wave_ansatz("u", "1", "0", interval=(0.0, 2.0))
    assert info.value.deviation == pytest.approx(3.0)
    assert info.value.at == pytest.approx(2.0)
    dev, at = null_deviation([as_map(s, ("u",)) for s in ("u", "1", "0")], (0.0, 2.0))
    assert (dev, at) == (pytest.approx(3.0), pytest.approx(2.0))


def test_wave_exp_family():
    sys = wave_ansatz("exp(u)", "exp(u) * cos(1)", "exp(u) * sin(1)")
    grid = Lattice([(0.5, 1.0, 5), (0.0, 0.5, 5), (0.0, 0.5, 5)])
    t, x, y = grid.point((0, 0, 0))
    seed = -math.log(t + x * math.cos(1) + y * math.sin(1))
    samples = list(solved_samples(sys, grid, [seed]))
    assert len(samples) == 125
    assert max(abs(wave_residual(s).normalized) for s in samples) <= 1e-9


def test_monge_flow_examples():
    flow = monge_flow("a", "0")
    u = flow.solve([1.0, 2.0, 0.0], [0.0, 0.0])
    np.testing.assert_allclose(u, [1.0, 0.0], atol=1e-14)
    rng = np.random.default_rng(4)
    for _ in range(10):
        p = np.array([rng.uniform(0, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)])
        f = flow.sample(p, flow.solve(p, [0.0, 0.0]))
        assert f.values[0] == pytest.approx(p[1] / (1 + p[0]), abs=1e-12)
        np.testing.assert_allclose(monge_system_residual(f), [0.0, 0.0], atol=1e-12)
    const = monge_flow("0 * a + 2", "0 * b - 3")
    np.testing.assert_allclose(const.solve([0.7, 1.0, 1.0], [0.0, 0.0]), [2.0, -3.0], atol=1e-14)
    with pytest.raises(NonConvergence):
        flow.solve([-1.0, 2.0, 0.0], [0.0, 0.0])


def test_monge_flow_printed_sign():
    # printed convention: u = F(x + u t), so u = x / (1 - t) for F = a
    flow = monge_flow("a", "0", sign="printed")
    p = [0.5, 2.0, 0.0]
    f = flow.sample(p, flow.solve(p, [0.0, 0.0]))
    assert f.values[0] == pytest.approx(4.0, abs=1e-12)
    np.testing.assert_allclose(monge_system_residual(f, sign="printed"), [0.0, 0.0], atol=1e-12)
    with pytest.raises(ValueError):
        monge_flow("a", "0", sign="upwind")
    with pytest.raises(ValueError):
        monge_flow(SmoothMap.parse("a", ("a",)), "0")


def test_legendre_examples():
    xi = ("xi1", "xi2")
    data = legendre_pair(SmoothMap.parse("xi1 / xi2", xi), SmoothMap.parse("sqrt(xi1^2 + xi2^2)", xi))
    assert data.dim == 2 and data.xi == xi
    assert abs(data.check_univ3([3.0, 4.0]).raw) <= 1e-10
    lhs, rhs = data.euler([3.0, 4.0])
    assert lhs == pytest.approx(rhs, abs=1e-12) and rhs == pytest.approx(5.0)
    with pytest.raises(HomogeneityViolation):
        legendre_pair(SmoothMap.parse("xi1^2", xi), SmoothMap.parse("xi1", xi))
    with pytest.raises(ValueError):
        legendre_pair(HomogeneousMap.parse("xi1", 1, xi), HomogeneousMap.parse("xi1", 1, xi))


def test_degree_zero_field():
    f = SmoothMap.parse("x / t", ("t", "x"))
    rng = np.random.default_rng(5)
    for _ in range(10):
        p = rng.uniform(0.5, 2.0, size=2)
        assert abs(euler_defect(explicit_sample(f, p), 0.0).raw) <= 1e-14


def test_periodic_trapezoid():
    rule = periodic_trapezoid(8)
    assert sum(rule.weights) == pytest.approx(2 * math.pi, abs=1e-15)
    assert rule.nodes[2] == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        periodic_trapezoid(0)
    with pytest.raises(ValueError):
        QuadratureRule((0.0,), (1.0, 2.0))


def test_superposition_eight_nodes():
    wave = superposed_wave("s^2", periodic_trapezoid(8))
    rng = np.random.default_rng(6)
    for _ in range(10):
        t, x, y = rng.uniform(-1, 1, size=3)
        s = wave.sample([t, x, y])
        assert s.phi == pytest.approx(2 * math.pi * t * t + math.pi * (x * x + y * y), abs=1e-12)
        assert abs(wave_residual(s).raw) <= 1e-10


def test_superposition_single_plane_wave():
    wave = superposed_wave("sin(s)", QuadratureRule((0.0,), (1.0,)))
    s = wave.sample([0.4, 1.3, -2.0])
    assert s.phi == pytest.approx(math.sin(1.7), abs=1e-15)
    assert abs(wave_residual(s).raw) <= 1e-12


def test_superposition_two_nodes():
    # u = pi ((t + x)^2 + (t + y)^2): not the continuum field, evaluated directly
    wave = superposed_wave("s^2", QuadratureRule((0.0, math.pi / 2), (math.pi, math.pi)))
    t, x, y = 0.5, -0.3, 0.8
    s = wave.sample([t, x, y])
    assert s.phi == pytest.approx(math.pi * ((t + x) ** 2 + (t + y) ** 2), abs=1e-12)
    assert s.phi != pytest.approx(2 * math.pi * t * t + math.pi * (x * x + y * y), abs=1e-3)
    r = wave_residual(s)
    assert math.isfinite(r.normalized)
    # each node is itself a plane wave, so the two-node sum is still a solution
    assert abs(r.raw) <= 1e-12


def test_superposition_preconditions():
    with pytest.raises(ValueError):
        superposed_wave("s", QuadratureRule((), ()))
    with pytest.raises(ValueError):
        superposed_wave("s", periodic_trapezoid(4), spatial_dim=3)
