import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from shadowshift import ClassificationError, TrajectoryError, WeightSequence
from shadowshift.shadowing import (
    PseudoTrajectory,
    adversarial_pseudotrajectory,
    best_split_index,
    correction_sequence,
    defect,
    oracle_best_shadow,
    random_pseudotrajectory,
    shadow_bilateral,
    shadow_positive,
    step_defects,
    verify_shadow,
)
from shadowshift.spaces import C0, SeqVector, SpaceSpec, basis_image, iterate, norm
from shadowshift.weights import splitting_constants

from conftest import A2, SPACES, const, random_class_specs, weight_specs

HALF = Fraction(1, 2)
TENTH = Fraction(1, 10)
e = SeqVector.basis


def orbit_traj(w, x, steps, n0=0, delta=0):
    pts = [iterate(w, C0, x, n0)]
    for _ in range(steps):
        pts.append(iterate(w, C0, pts[-1], 1))
    return PseudoTrajectory(n0, tuple(pts), delta)


# -- defects and generators ------------------------------------------------------


def test_defect_examples():
    w = const(HALF)
    assert defect(w, C0, orbit_traj(w, e(0), 10)) == 0
    traj = PseudoTrajectory(0, (e(0), iterate(w, C0, e(0), 1) + e(3, TENTH)), TENTH)
    for space in SPACES:
        assert math.isclose(float(defect(w, space, traj)), 0.1)
    with pytest.raises(TrajectoryError):
        defect(w, C0, PseudoTrajectory(0, (e(0),), 0))


@pytest.mark.parametrize("space", SPACES)
def test_random_trajectory_contract(space):
    w = const(0.5)
    traj = random_pseudotrajectory(w, space, 0.05, (0, 40), seed=1)
    assert len(traj) == 41 and defect(w, space, traj) <= 0.05
    assert norm(space, traj.at(0)) <= 1
    again = random_pseudotrajectory(w, space, 0.05, (0, 40), seed=1)
    assert again == traj
    assert random_pseudotrajectory(w, space, 0.05, (0, 40), seed=2) != traj


def test_random_trajectory_zero_delta_is_orbit():
    w = A2(exact=False)
    traj = random_pseudotrajectory(w, C0, 0.0, (-5, 5), seed=3)
    assert defect(w, C0, traj) == 0


def test_random_trajectory_exact_and_complex():
    traj = random_pseudotrajectory(A2(), C0, Fraction(1, 20), (-5, 5), seed=4)
    assert all(isinstance(c, Fraction) for p in traj.points for c in p.coeffs)
    assert defect(A2(), C0, traj) <= Fraction(1, 20)
    wc = WeightSequence((0.5j,), 0, (), (2,), "complex")
    traj = random_pseudotrajectory(wc, SpaceSpec("lp", 2), 0.05, (-5, 5), seed=4)
    assert defect(wc, SpaceSpec("lp", 2), traj) <= 0.05


def test_random_trajectory_rejects_bad_window():
    with pytest.raises(TrajectoryError):
        random_pseudotrajectory(A2(), C0, 0.05, (3, 3), seed=0)
    with pytest.raises(TrajectoryError):
        random_pseudotrajectory(A2(), C0, -0.05, (0, 3), seed=0)


def test_trajectory_json_roundtrip():
    traj = random_pseudotrajectory(A2(), C0, Fraction(1, 20), (-3, 3), seed=5)
    doc = json.loads(json.dumps(traj.to_json()))
    assert PseudoTrajectory.from_json(doc, exact=True) == traj
    with pytest.raises(TrajectoryError):
        PseudoTrajectory.from_json([{"lo": 0, "coeffs": [1]}])


# -- adversarial constructions -----------------------------------------------------


def test_backward_necessity_coordinate():
    traj = adversarial_pseudotrajectory(const(1), C0, "backward_necessity", HALF, {"t": 1, "m": 10})
    assert (traj.n0, traj.n1) == (0, 11)
    assert traj.at(11)[0] == 6
    assert defect(const(1), C0, traj) == HALF


def test_backward_necessity_general_formula():
    # coordinate t-1 of x_{m+1} is |w_t..w_{t+m}| + (|w_t..w_{t+m-1}| + ... + |w_t|) delta
    w = WeightSequence((2, 3), -1, (HALF, -3), (Fraction(4, 3), -1))
    t, m, d = 2, 5, TENTH
    traj = adversarial_pseudotrajectory(w, C0, "backward_necessity", d, {"t": t, "m": m})
    from shadowshift.weights import partial_product
    expected = abs(partial_product(w, t, t + m)) + d * sum(
        abs(partial_product(w, t, t + m - k)) for k in range(1, m + 1))
    assert traj.at(m + 1)[t - 1] == expected
    assert defect(w, C0, traj) == d


@pytest.mark.parametrize("w", [A2(), WeightSequence((2, 3), -1, (HALF, -3), (Fraction(4, 3), -1))])
def test_bilateral_e0_closed_form(w):
    from shadowshift.weights import partial_product

    traj = adversarial_pseudotrajectory(w, C0, "bilateral_e0", 0.1, {"m": 8})
    assert (traj.n0, traj.n1) == (-8, 8)
    assert traj.delta == TENTH
    assert defect(w, C0, traj) == TENTH
    prod = lambda i, j: partial_product(w, i, j) if i <= j else 1
    for n in range(1, 9):
        fwd = {-n: prod(-n + 1, 0)}
        fwd.update({-k: TENTH * prod(-k + 1, 0) for k in range(n)})
        assert traj.at(n) == SeqVector.from_mapping(fwd)
        bwd = {n: (1 + TENTH) / prod(1, n)}
        bwd.update({k: TENTH / prod(1, k) for k in range(1, n)})
        assert traj.at(-n) == SeqVector.from_mapping(bwd)


def test_forward_unilateral_coordinate():
    traj = adversarial_pseudotrajectory(const(2), C0, "forward_unilateral", 0.1, {"t": 4})
    assert traj.operator == "unilateral_forward" and traj.n1 == 5
    assert traj.at(5)[5] == 3
    assert defect(const(2), C0, traj) == TENTH


def test_adversarial_complex_phases():
    w = WeightSequence((1j,), 0, (), (1j,), "complex")
    traj = adversarial_pseudotrajectory(w, C0, "backward_necessity", 0.5, {"t": 1, "m": 4})
    # aligned phases make every contribution to coordinate t-1 add up
    assert math.isclose(abs(traj.at(5)[0]), 1 + 4 * 0.5)


def test_adversarial_rejects_params():
    with pytest.raises(TrajectoryError):
        adversarial_pseudotrajectory(const(1), C0, "backward_necessity", 0.1, {"t": 1})
    with pytest.raises(TrajectoryError):
        adversarial_pseudotrajectory(const(1), C0, "bilateral_e0", 0.1, {"m": 0})
    with pytest.raises(TrajectoryError):
        adversarial_pseudotrajectory(const(1), C0, "bilateral_e0", 0, {"m": 3})
    with pytest.raises(TrajectoryError):
        adversarial_pseudotrajectory(const(1), C0, "other", 0.1, {"m": 3})


# -- series shadowing ------------------------------------------------------------


def test_shadow_positive_contracting_example():
    w = const(HALF)
    pts = [e(0)]
    for _ in range(20):
        pts.append(iterate(w, C0, pts[-1], 1) + e(0, TENTH))
    traj = PseudoTrajectory(0, tuple(pts), TENTH)
    res = shadow_positive(w, C0, traj)
    assert res.shadow_point == e(0) and res.splitting == "A"
    assert res.max_error == TENTH
    assert res.recurrence_residual == 0


@pytest.mark.parametrize("w", [const(HALF), const(2), A2()])
def test_zero_delta_shadows_itself(w):
    traj = orbit_traj(w, e(1) + e(-2, 3), 12, n0=-4)
    res = shadow_bilateral(w, C0, traj)
    assert res.shadow_point == traj.at(0) and res.max_error == 0


def test_shadow_a2_adversarial():
    w = A2()
    traj = adversarial_pseudotrajectory(w, C0, "bilateral_e0", 0.1, {"m": 8})
    res = shadow_bilateral(w, C0, traj)
    assert res.max_error < HALF
    best = oracle_best_shadow(w, C0, traj, (-20, 20))
    assert best.best_error <= res.max_error <= res.error_bound


def test_shadow_rejects_bad_inputs():
    traj = orbit_traj(const(1), e(0), 3)
    with pytest.raises(ClassificationError):
        shadow_bilateral(const(1), C0, traj)
    with pytest.raises(TrajectoryError):
        shadow_bilateral(A2(), C0, orbit_traj(A2(), e(0), 3, n0=1))
    with pytest.raises(TrajectoryError):
        shadow_positive(A2(), C0, orbit_traj(A2(), e(0), 3, n0=-1))


@settings(max_examples=30, deadline=None)
@given(weight_specs(exact=False), st.integers(0, 10_000), st.sampled_from(SPACES))
def test_shadow_bound_and_genuine_orbit(w, seed, space):
    from shadowshift import classify_shadowing

    if classify_shadowing(w).shadowing_class not in ("A", "B", "C"):
        return
    traj = random_pseudotrajectory(w, space, 0.05, (-12, 12), seed=seed)
    res = shadow_bilateral(w, space, traj)
    assert res.max_error <= res.error_bound
    assert res.recurrence_residual <= 1e-12
    rep = verify_shadow(w, space, traj, res.shadow_point, res.error_bound * (1 + 1e-12))
    assert rep.ok and rep.max_error == res.direct_max_error


@settings(max_examples=20, deadline=None)
@given(weight_specs(), st.integers(0, 10_000))
def test_exact_recurrence(w, seed):
    from shadowshift import classify_shadowing

    if classify_shadowing(w).shadowing_class not in ("A", "B", "C"):
        return
    traj = random_pseudotrajectory(w, C0, Fraction(1, 20), (-6, 6), seed=seed)
    res = shadow_bilateral(w, C0, traj)
    assert res.recurrence_residual == 0
    assert res.max_error <= res.error_bound
    assert res.direct_max_error == res.max_error


@settings(max_examples=20, deadline=None)
@given(weight_specs(), st.integers(0, 10_000), st.sampled_from([Fraction(1, 3), 2, Fraction(-3, 2)]))
def test_linearity_in_delta(w, seed, lam):
    from shadowshift import classify_shadowing

    cls = classify_shadowing(w).shadowing_class
    if cls not in ("A", "B", "C"):
        return
    traj = random_pseudotrajectory(w, C0, Fraction(1, 20), (-5, 5), seed=seed)
    x0 = traj.at(0)
    orb = {n: iterate(w, C0, x0, n) for n in traj.times()}
    scaled = PseudoTrajectory(traj.n0, tuple(orb[n] + (traj.at(n) - orb[n]) * lam
                                            for n in traj.times()), traj.delta * abs(lam))
    j = best_split_index(w) if cls == "C" else 0
    ys = correction_sequence(w, C0, traj, cls, j)
    ys_scaled = correction_sequence(w, C0, scaled, cls, j)
    assert all(ys_scaled[n] == ys[n] * lam for n in traj.times())
    a = shadow_bilateral(w, C0, traj, split_index=j)
    b = shadow_bilateral(w, C0, scaled, split_index=j)
    assert b.max_error == a.max_error * abs(lam)


def test_positive_agrees_with_bilateral_from_zero():
    w = const(0.5)
    traj = random_pseudotrajectory(w, C0, 0.05, (0, 30), seed=9)
    a, b = shadow_positive(w, C0, traj), shadow_bilateral(w, C0, traj)
    assert norm(C0, a.shadow_point - b.shadow_point) <= 1e-12
    assert all(abs(x - y) <= 1e-12 for x, y in zip(a.per_step_errors, b.per_step_errors))


def test_split_index_choice():
    # expanding weights at indices -2..0 push the best cut left of the core
    w = WeightSequence((Fraction(1, 3),), -3, (HALF,), (3,))
    assert best_split_index(w) == -4
    assert splitting_constants(w.shifted(-4)).C < splitting_constants(w.shifted(-3)).C \
        < splitting_constants(w).C
    traj = random_pseudotrajectory(w, C0, Fraction(1, 20), (-8, 8), seed=2)
    fixed = shadow_bilateral(w, C0, traj, split_index=0)
    auto = shadow_bilateral(w, C0, traj)
    best = shadow_bilateral(w, C0, traj, split_index="min_error")
    assert auto.split_index == -4 and fixed.split_index == 0
    assert best.max_error <= min(auto.max_error, fixed.max_error)
    for r in (fixed, auto, best):
        assert r.max_error <= r.error_bound


# -- oracle --------------------------------------------------------------------------


def _lp_oracle(w, traj, lo, hi):
    """Independent sup-norm minimax by linear programming over (v_lo..v_hi, E)."""
    width = hi - lo + 1
    rows, rhs = [], []
    covered = set()
    for n in traj.times():
        x = traj.at(n)
        for i in range(lo, hi + 1):
            j, p = basis_image(w, i, n)
            covered.add((n, j))
            a = np.zeros(width + 1)
            a[i - lo], a[-1] = float(p), -1.0
            rows.append(a.copy()); rhs.append(float(x[j]))
            a[i - lo] = -float(p)
            rows.append(a); rhs.append(-float(x[j]))
    floor = max((abs(float(c)) for n in traj.times() for j, c in traj.at(n).items()
                 if (n, j) not in covered), default=0.0)
    cost = np.zeros(width + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(None, None)] * width + [(floor, None)], method="highs")
    return res.fun


def test_oracle_exact_orbit():
    w = A2()
    traj = orbit_traj(w, e(2) - e(-1, 3), 6, n0=-3)
    best = oracle_best_shadow(w, C0, traj, (-10, 10))
    assert best.best_error == 0 and best.best_point == traj.at(0)


def test_oracle_identity_weights():
    # with w = 1 every coordinate is a plain constant fit: error = half the spread
    traj = adversarial_pseudotrajectory(const(1), C0, "bilateral_e0", 0.1, {"m": 20})
    best = oracle_best_shadow(const(1), C0, traj, (-60, 60))
    assert best.exact and best.best_error == Fraction(1, 20)
    traj = adversarial_pseudotrajectory(const(1), C0, "backward_necessity", 0.1, {"t": 1, "m": 20})
    best = oracle_best_shadow(const(1), C0, traj, (-60, 60))
    assert best.best_error == 1


@settings(max_examples=25, deadline=None)
@given(weight_specs(), st.integers(0, 10_000))
def test_oracle_matches_linear_program(w, seed):
    traj = random_pseudotrajectory(w, C0, Fraction(1, 20), (-4, 4), seed=seed)
    best = oracle_best_shadow(w, C0, traj, (-6, 6))
    assert math.isclose(float(best.best_error), _lp_oracle(w, traj, -6, 6), rel_tol=1e-6, abs_tol=1e-9)


@settings(max_examples=25, deadline=None)
@given(weight_specs(), st.integers(0, 10_000))
def test_oracle_soundness(w, seed):
    traj = random_pseudotrajectory(w, C0, Fraction(1, 20), (-4, 4), seed=seed)
    best = oracle_best_shadow(w, C0, traj, (-6, 6))
    assert verify_shadow(w, C0, traj, best.best_point, best.best_error + Fraction(1, 10 ** 12)).ok
    rng = random.Random(seed)
    for _ in range(20):
        i = rng.randint(-6, 6)
        nudged = best.best_point + e(i, Fraction(rng.randint(-50, 50), 100))
        assert verify_shadow(w, C0, traj, nudged, best.best_error + 1).max_error >= best.best_error


@pytest.mark.parametrize("p", [1, 2, 3])
def test_oracle_lp_bracket(p):
    space = SpaceSpec("lp", p)
    w = A2(exact=False)
    traj = random_pseudotrajectory(w, space, 0.05, (-6, 6), seed=p)
    best = oracle_best_shadow(w, space, traj, (-12, 12))
    assert best.lower_bound <= best.best_error
    res = shadow_bilateral(w, space, traj)
    # nothing can beat the sup-norm relaxation, which bounds every lp error from below
    assert best.lower_bound <= res.max_error * (1 + 1e-12)


def test_oracle_complex_weights():
    w = WeightSequence((0.5j,), 0, (), (2,), "complex")
    traj = random_pseudotrajectory(w, C0, 0.05, (-4, 4), seed=3)
    best = oracle_best_shadow(w, C0, traj, (-8, 8))
    res = shadow_bilateral(w, C0, traj)
    assert best.lower_bound <= best.best_error + 1e-9
    assert best.best_error <= res.max_error + 1e-9


def test_oracle_forward_unilateral():
    traj = adversarial_pseudotrajectory(const(2), C0, "forward_unilateral", 0.1, {"t": 4})
    best = oracle_best_shadow(const(2), C0, traj, (1, 60))
    assert best.best_error >= 1


def test_verify_shadow_examples():
    w = const(HALF)
    traj = orbit_traj(w, e(0), 5)
    assert verify_shadow(w, C0, traj, e(0), Fraction(1, 10 ** 9)).ok
    adv = adversarial_pseudotrajectory(const(1), C0, "backward_necessity", 0.1, {"t": 1, "m": 20})
    best = oracle_best_shadow(const(1), C0, adv, (-60, 60))
    assert not verify_shadow(const(1), C0, adv, best.best_point, 1).ok


def test_shadow_within_twice_oracle_when_minimising_error():
    rng = random.Random(3)
    for i, w in enumerate(random_class_specs(rng, ("C",), 30, exact=False)):
        traj = random_pseudotrajectory(w, C0, 0.05, (-15, 15), seed=i)
        res = shadow_bilateral(w, C0, traj, split_index="min_error")
        best = oracle_best_shadow(w, C0, traj, (-25, 25))
        assert res.max_error <= 2 * best.best_error * (1 + 1e-9)
