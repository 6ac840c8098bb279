import numpy as np
import pytest

from implicit_ansatz.calculus import chaundy_consistency, chaundy_jet, fd_jet, implicit_derivatives, implicit_jet
from implicit_ansatz.constructors import bateman_ansatz, ufe_chaundy
from implicit_ansatz.errors import NonConvergence, SingularJacobian
from implicit_ansatz.expressions import SmoothMap
from implicit_ansatz.solve import AnsatzSystem, newton_solve
from implicit_ansatz.verification import random_ufe_case, relative_error

LINEAR = bateman_ansatz("phi", "1")
CHAUNDY_F = [SmoothMap.parse(s, ("phi", "u")) for s in ("u", "1", "phi", "u^2")]


def closed_chaundy(t, x, y):
    # phi = -(t^2/4 + x)/y, u = t/2
    phi = -(t * t / 4 + x) / y
    grad = np.array([-t / (2 * y), -1 / y, (t * t / 4 + x) / y**2])
    hess = np.array(
        [
            [-1 / (2 * y), 0.0, t / (2 * y**2)],
            [0.0, 0.0, 1 / y**2],
            [t / (2 * y**2), 1 / y**2, -2 * (t * t / 4 + x) / y**3],
        ]
    )
    return phi, grad, hess


def test_implicit_jet_bateman_example():
    s = implicit_jet(LINEAR, [1.0, 0.5], [0.5])
    assert s.phi == 0.5
    np.testing.assert_allclose(s.grad, [-0.5, -1.0], atol=1e-15)
    np.testing.assert_allclose(s.hess, [[1.0, 1.0], [1.0, 0.0]], atol=1e-15)


def test_implicit_jet_explicit_linear_field():
    sys = AnsatzSystem(("phi",), ("t", "x"), [SmoothMap.parse("phi - t - x", ("phi", "t", "x"))])
    s = implicit_jet(sys, [0.3, -2.0], [-1.7])
    np.testing.assert_array_equal(s.grad, [1.0, 1.0])
    np.testing.assert_array_equal(s.hess, np.zeros((2, 2)))


def test_implicit_jet_chaundy_example():
    sys = ufe_chaundy(*CHAUNDY_F)
    z = newton_solve(sys, [2.0, 1.0, 1.0], [-1.5, 0.8])
    s = implicit_jet(sys, [2.0, 1.0, 1.0], z)
    phi, grad, hess = closed_chaundy(2.0, 1.0, 1.0)
    assert s.phi == pytest.approx(phi, abs=1e-12)
    np.testing.assert_allclose(s.grad, [-1.0, -1.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(s.hess, hess, atol=1e-12)
    np.testing.assert_allclose(s.param_grad[0], [0.5, 0.0, 0.0], atol=1e-12)


def test_implicit_jet_rejects_non_solution():
    with pytest.raises(ValueError):
        implicit_jet(LINEAR, [1.0, 0.5], [0.7])


def test_implicit_derivatives_singular():
    with pytest.raises(SingularJacobian):
        implicit_derivatives(LINEAR, [0.0, 1.0], [0.3])


def test_implicit_hessian_symmetric():
    rng = np.random.default_rng(5)
    case = random_ufe_case(rng)
    s = implicit_jet(case.system, case.center, newton_solve(case.system, case.center, case.seed))
    np.testing.assert_array_equal(s.hess, s.hess.T)


def test_chaundy_bateman_embedding():
    F = [SmoothMap.parse(v, ("phi", "u")) for v in ("phi", "1", "0", "1")]
    s = chaundy_jet(F, [1.0, 0.5, 3.0], (0.5,))
    assert s.diagnostics.mu == 1.0
    assert s.grad[0] == pytest.approx(-0.5)
    ref = implicit_jet(ufe_chaundy(*F), [1.0, 0.5, 3.0], [0.5])
    np.testing.assert_allclose(s.hess, ref.hess, atol=1e-15)


def test_chaundy_envelope_is_singular():
    F = [SmoothMap.parse(v, ("phi", "u")) for v in ("phi", "1", "0", "1")]
    with pytest.raises(SingularJacobian):
        chaundy_jet(F, [0.0, 1.0, 1.0], (0.3,))


def test_chaundy_needs_d_plus_one_maps():
    with pytest.raises(ValueError):
        chaundy_jet(CHAUNDY_F[:3], [1.0, 1.0, 1.0], (0.0, 0.0))


def test_chaundy_matches_closed_form_and_ift():
    for p in ([2.0, 1.0, 1.0], [1.3, -0.4, 0.7], [0.5, 2.0, -1.5]):
        t, x, y = p
        z = (closed_chaundy(t, x, y)[0], t / 2)
        c = chaundy_jet(CHAUNDY_F, p, z)
        a = implicit_jet(ufe_chaundy(*CHAUNDY_F), p, z)
        _, grad, hess = closed_chaundy(t, x, y)
        np.testing.assert_allclose(c.grad, grad, rtol=1e-13, atol=1e-14)
        np.testing.assert_allclose(c.hess, hess, rtol=1e-13, atol=1e-14)
        assert relative_error(a.hess, c.hess) <= 1e-12


def test_chaundy_vs_ift_random_points():
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 50:
        case = random_ufe_case(rng)
        for _ in range(5):
            p = case.center + rng.uniform(-0.05, 0.05, size=3)
            try:
                z = newton_solve(case.system, p, case.seed)
                a = implicit_jet(case.system, p, z)
                c = chaundy_jet(case.family, p, z)
            except NonConvergence:
                continue
            err = max(relative_error(a.grad, c.grad), relative_error(a.hess, c.hess),
                      relative_error(a.param_grad, c.param_grad))
            assert err <= 1e-9
            checked += 1


def test_consistency_identity():
    rng = np.random.default_rng(21)
    saw_mu_u = False
    for _ in range(10):
        case = random_ufe_case(rng)
        z = newton_solve(case.system, case.center, case.seed)
        s = implicit_jet(case.system, case.center, z)
        assert chaundy_consistency(case.family, s) <= 1e-10
        c = chaundy_jet(case.family, case.center, z)
        if abs(c.diagnostics.mu_u) > 0.1:
            # dropping the mu_u correction breaks the identity for these families
            assert chaundy_consistency(case.family, s, drop_mu_u=True) > 1e-6
            saw_mu_u = True
    assert saw_mu_u


def test_uncorrected_consistency_holds_without_mu_u():
    # F3 = phi is the only phi-dependent map and it has no u, so mu_u = 0
    z = (closed_chaundy(1.3, 0.2, 0.9)[0], 0.65)
    s = implicit_jet(ufe_chaundy(*CHAUNDY_F), [1.3, 0.2, 0.9], z)
    assert chaundy_jet(CHAUNDY_F, [1.3, 0.2, 0.9], z).diagnostics.mu_u == 0.0
    assert chaundy_consistency(CHAUNDY_F, s, drop_mu_u=True) <= 1e-12


def test_fd_jet_examples():
    s = fd_jet(LINEAR, [1.0, 0.5], [0.4])
    ref = implicit_jet(LINEAR, [1.0, 0.5], [0.5])
    np.testing.assert_allclose(s.grad, ref.grad, atol=1e-6)
    sys = AnsatzSystem(("phi",), ("t", "x"), [SmoothMap.parse("phi - 2 * t + x", ("phi", "t", "x"))])
    assert np.max(np.abs(fd_jet(sys, [0.1, 0.2], [0.0]).hess)) <= 1e-8
    with pytest.raises(NonConvergence):
        fd_jet(LINEAR, [1e-5, 0.5], [5e4])


def test_fd_asymmetry_small():
    case = random_ufe_case(np.random.default_rng(13))
    s = fd_jet(case.system, case.center, case.seed)
    assert s.info["asymmetry"] <= 1e-4
