"""Acceptance criteria 1-8, each with its tolerance and time limit.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per criterion
is printed in the terminal summary.  ``python tests/test_acceptance.py`` does the same.
"""

import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from shadowshift import (
    WeightSequence,
    adversarial_pseudotrajectory,
    bounded_orbit_witness,
    classify_shadowing,
    conjugacy_residual,
    conjugate_forward,
    conjugate_inverse,
    constant_map,
    fhc_check,
    finite_sup_geomean,
    oracle_best_shadow,
    random_pseudotrajectory,
    shadow_bilateral,
    tail_rates,
    uniform_expansivity_class,
    unilateral_sums,
    verify_shadow,
)
from shadowshift.classify import orbit_sup_ratio
from shadowshift.conjugacy import perturbed_step
from shadowshift.spaces import C0, SeqVector, iterate, norm

from conftest import A2, GRID, SPACES, const, random_class_specs, random_point, random_spec, rank_one_within

HALF = Fraction(1, 2)
e = SeqVector.basis


@contextmanager
def time_limit(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f}s, limit {seconds}s"


def hyperbolic_by_powers(w, n=1024):
    # ||B^n|| and ||B^-n|| are the extreme n-window products, so one of them below 1 is a dichotomy
    return finite_sup_geomean(w, n, "allZ_sup") < 1 or finite_sup_geomean(w, n, "allZ_inf") > 1


@pytest.mark.criterion(1)
def test_c1_classification_examples():
    with time_limit(1.0):
        rep = classify_shadowing(A2())
        assert rep.shadowing_class == "C" and rep.hyperbolic is False
        for v, cls in ((HALF, "A"), (2, "B"), (1, "NONE")):
            rep = classify_shadowing(const(v))
            assert rep.shadowing_class == cls and rep.arithmetic_mode == "exact"
        assert classify_shadowing(WeightSequence.two_sided(2, 1)).shadowing_class == "NONE"
        reversed_pair = WeightSequence.two_sided(2, HALF)
        assert uniform_expansivity_class(reversed_pair) == "c"
        assert classify_shadowing(reversed_pair).shadowing_class == "NONE"


@pytest.mark.criterion(2)
def test_c2_hyperbolic_iff_expansive_and_shadowing():
    rng = random.Random(2)
    specs = [random_spec(rng) for _ in range(240)]
    with time_limit(10.0):
        class_c = 0
        for w in specs:
            rep = classify_shadowing(w)
            assert rep.hyperbolic == (rep.shadowing_class in ("A", "B"))
            assert rep.hyperbolic == hyperbolic_by_powers(w)
            expansive = rep.uniform_expansivity != "none"
            assert rep.hyperbolic == (expansive and rep.shadowing_class != "NONE")
            if rep.shadowing_class == "C":
                class_c += 1
                x = bounded_orbit_witness(w, C0, 60, 4)
                assert x is not None and norm(C0, x) == 1
                assert orbit_sup_ratio(w, C0, x, 60) <= 4
    assert class_c >= 20


@pytest.mark.criterion(3)
def test_c3_unilateral_decisions_agree():
    rng = random.Random(3)
    pick = lambda lo, hi: [rng.choice(GRID) for _ in range(rng.randint(lo, hi))]
    specs = [WeightSequence.unilateral(pick(0, 3), pick(1, 3)) for _ in range(240)]
    with time_limit(10.0):
        tallies = set()
        for w in specs:
            sums = unilateral_sums(w, 300)
            decisions = (tail_rates(w).right_sign() < 0, sums.q2_witness is not None,
                         sums.q3_finite, sums.q4_finite)
            assert len(set(decisions)) == 1, (w, decisions)
            tallies.add(decisions[0])
    assert tallies == {True, False}


@pytest.mark.criterion(4)
def test_c4_shadowing_sufficiency_float():
    rng = random.Random(4)
    specs = random_class_specs(rng, ("A", "B", "C"), 50, exact=False)
    assert {classify_shadowing(w).shadowing_class for w in specs} == {"A", "B", "C"}
    with time_limit(30.0):
        for i in range(1000):
            w, space = specs[i % len(specs)], SPACES[i % len(SPACES)]
            traj = random_pseudotrajectory(w, space, 0.05, (-40, 40), seed=i)
            res = shadow_bilateral(w, space, traj)
            assert res.max_error <= res.error_bound, (i, res.max_error, res.error_bound)
            assert res.recurrence_residual <= 1e-12, (i, res.recurrence_residual)


@pytest.mark.criterion(4)
def test_c4_shadowing_sufficiency_exact():
    rng = random.Random(44)
    specs = random_class_specs(rng, ("A", "B", "C"), 12, exact=True)
    for i, w in enumerate(specs):
        traj = random_pseudotrajectory(w, C0, Fraction(1, 20), (-40, 40), seed=i)
        res = shadow_bilateral(w, C0, traj)
        assert res.recurrence_residual == 0
        assert res.max_error <= res.error_bound
        # in exact arithmetic the reported errors are the distances to the orbit itself
        assert verify_shadow(w, C0, traj, res.shadow_point, res.error_bound).max_error == res.max_error


@pytest.mark.criterion(5)
def test_c5_identity_weights_bilateral_e0():
    # the literal check: w = 1 with the bilateral_e0 construction
    with time_limit(10.0):
        w = const(1)
        traj = adversarial_pseudotrajectory(w, C0, "bilateral_e0", Fraction(1, 10), {"m": 20})
        best = oracle_best_shadow(w, C0, traj, (-60, 60))
        assert best.exact
        assert best.best_error >= 1, f"best_error = {best.best_error}"


@pytest.mark.criterion(5)
def test_c5_necessity_constructions():
    with time_limit(10.0):
        w = const(1)
        traj = adversarial_pseudotrajectory(w, C0, "backward_necessity", Fraction(1, 10), {"t": 1, "m": 20})
        for window in ((-60, 60), (-20, 20), (0, 25)):
            best = oracle_best_shadow(w, C0, traj, window)
            assert best.exact and best.best_error >= 1
        w = const(2)
        traj = adversarial_pseudotrajectory(w, C0, "forward_unilateral", Fraction(1, 10), {"t": 4})
        best = oracle_best_shadow(w, C0, traj, (1, 60))
        assert best.exact and best.best_error >= 1


@pytest.mark.criterion(6)
def test_c6_conjugacy_closed_form():
    w = A2(exact=False)
    alpha = constant_map(C0, e(0, 0.05))
    rng = random.Random(6)
    points = [random_point(rng) for _ in range(50)]
    with time_limit(10.0):
        res = conjugate_forward(w, C0, alpha, points[0], tol=1e-10)
        assert res.fixed_point_iterations <= 2
        u = res.correction
        assert u[0] == 0
        for i in range(1, 80):
            assert abs(u[i] + 0.05 * 2.0 ** -i) < 1e-12
            assert abs(u[-i]) < 1e-12
        # u does not depend on x here, so u(Bx) - B u(x) = u - B u must reproduce alpha
        gap = u - iterate(w, C0, u, 1) - alpha(points[0])
        assert max(map(abs, gap.restrict(-60, 60).coeffs), default=0) < 1e-12
        for x in points:
            assert conjugacy_residual(w, C0, alpha, x, tol=1e-10) < 1e-9
            h = conjugate_forward(w, C0, alpha, x, tol=1e-10).image
            assert norm(C0, conjugate_inverse(w, C0, alpha, h).image - x) < 1e-9


@pytest.mark.criterion(7)
def test_c7_conjugacy_rank_one_suite():
    rng = random.Random(7)
    specs = random_class_specs(rng, ("C",), 20, exact=False)
    tol = 1e-10
    with time_limit(60.0):
        for k, w in enumerate(specs):
            space = SPACES[k % len(SPACES)]
            alpha = rank_one_within(w, space, rng, fraction=0.5)
            for _ in range(20):
                x = random_point(rng)
                hx = conjugate_forward(w, space, alpha, x, tol=tol)
                hbx = conjugate_forward(w, space, alpha, iterate(w, space, x, 1), tol=tol)
                assert all(r <= 0.5 for r in hx.contraction_rates + hbx.contraction_rates)
                residual = norm(space, hbx.image - perturbed_step(w, space, alpha, hx.image))
                assert residual <= 10 * tol
                # u(Bx) - B u(x) = alpha(x + u(x)) up to the errors of the two evaluations
                lhs = hbx.correction - iterate(w, space, hx.correction, 1)
                slack = hbx.error_bound + (float(w.max_abs) + alpha.lip_bound) * hx.error_bound
                assert norm(space, lhs - alpha(hx.image)) <= slack + 1e-12


@pytest.mark.criterion(8)
def test_c8_fhc_certification():
    with time_limit(5.0):
        for space in SPACES:
            for y in (e(-2), e(0), e(3)):
                rep = fhc_check(A2(), space, y)
                assert rep.converges and rep.tail_bound < 1e-9
                assert math.isfinite(float(rep.forward_sum)) and math.isfinite(float(rep.backward_sum))
        rep = fhc_check(const(1), C0, e(0))
        assert not rep.converges


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
