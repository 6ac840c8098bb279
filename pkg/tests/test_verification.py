import numpy as np
import pytest

from implicit_ansatz.calculus import separation
from implicit_ansatz.constructors import bateman_ansatz
from implicit_ansatz.residuals import bordered_hessian
from implicit_ansatz.verification import (
    FamilyResult,
    explicit_sample,
    oracle_admissible,
    oracle_case,
    random_bateman_case,
    random_level_set_case,
    random_wave_case,
    relative_error,
    run_bateman_family,
)

LINEAR = bateman_ansatz("phi", "1")


def test_relative_error():
    assert relative_error([2.0, 4.0], [2.0, 3.0]) == 0.25
    assert relative_error([0.1], [0.3]) == pytest.approx(0.2)


def test_family_result():
    r = FamilyResult(points=4, converged=3)
    r.record("a", -2.0)
    r.record("a", 1.0)
    assert r.fraction == 0.75 and r.worst == {"a": 2.0}
    assert FamilyResult().fraction == 0.0


def test_separation():
    # G = (t, phi, 1) at (t, x) = (1, 0.5), phi = 0.5: |G_phi| / |G| = 1 / 1.5
    assert separation(LINEAR, [1.0, 0.5], [0.5]) == pytest.approx(1 / 1.5)
    assert separation(LINEAR, [0.0, 1.0], [0.3]) == 0.0


def test_cases_are_anchored_on_solutions():
    rng = np.random.default_rng(0)
    for kind in ("poly", "trig", "exp"):
        case = random_bateman_case(rng, kind)
        assert abs(case.system.residual(case.seed, case.center)[0]) <= 1e-12
    case = random_wave_case(rng, 3)
    assert abs(case.system.residual(case.seed, case.center)[0]) <= 1e-12


def test_oracle_cases_rotate_and_move():
    rng = np.random.default_rng(1)
    kinds = [oracle_case(rng, i)[1] for i in range(6)]
    assert len(set(kinds)) == 6
    case, _ = oracle_case(rng, 0)
    z = oracle_admissible(case)
    assert z is None or abs(case.system.residual(z, case.center)[0]) <= 1e-12
    case.center = np.array([0.0, 1.0])
    case.system = LINEAR
    assert oracle_admissible(case) is None


def test_level_set_cases():
    rng = np.random.default_rng(2)
    for developable in (True, False):
        case = random_level_set_case(rng, developable)
        assert case.phi(*case.point) == pytest.approx(case.level, abs=1e-15)
        b = bordered_hessian(explicit_sample(case.phi, case.point)).normalized
        assert (abs(b) <= 1e-12) == developable


def test_run_bateman_family_reports_fraction():
    case = random_bateman_case(np.random.default_rng(3), "poly")
    res = run_bateman_family(case, count=6)
    assert res.points == 36 and res.fraction >= 0.8
    assert res.worst["bateman"] <= 1e-8
