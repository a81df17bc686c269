import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from shadowshift import WeightSequence
from shadowshift.conjugacy import cutoff_affine, epsilon_budget
from shadowshift.spaces import SeqVector, SpaceSpec

GRID = tuple(Fraction(v) for v in
             ("1/4", "1/3", "1/2", "2/3", "3/4", "1", "4/3", "3/2", "2", "3", "4"))

SPACES = (SpaceSpec("c0"), SpaceSpec("lp", 1), SpaceSpec("lp", 2), SpaceSpec("lp", 3))


def A2(exact=True):
    """w_n = 1/2 for n < 0 and 2 for n >= 0."""
    if exact:
        return WeightSequence.two_sided(Fraction(1, 2), 2)
    return WeightSequence.two_sided(0.5, 2.0)


def const(v):
    return WeightSequence.constant(Fraction(v))


grid_values = st.sampled_from(GRID)


@st.composite
def weight_specs(draw, exact=True):
    left = draw(st.lists(grid_values, min_size=1, max_size=3))
    core = draw(st.lists(grid_values, min_size=0, max_size=3))
    right = draw(st.lists(grid_values, min_size=1, max_size=3))
    start = draw(st.integers(-4, 4))
    w = WeightSequence(tuple(left), start, tuple(core), tuple(right))
    if not exact:
        w = WeightSequence(tuple(map(float, left)), start, tuple(map(float, core)),
                           tuple(map(float, right)))
    return w


@st.composite
def vectors(draw, lo=-6, hi=6, size=4):
    start = draw(st.integers(lo, hi))
    coeffs = draw(st.lists(st.integers(-5, 5).map(Fraction), min_size=1, max_size=size))
    return SeqVector(start, tuple(coeffs))


def random_spec(rng: random.Random, exact=True) -> WeightSequence:
    pick = lambda lo, hi: [rng.choice(GRID) for _ in range(rng.randint(lo, hi))]
    left, core, right = pick(1, 3), pick(0, 3), pick(1, 3)
    start = rng.randint(-4, 4)
    if not exact:
        left, core, right = ([float(v) for v in seq] for seq in (left, core, right))
    return WeightSequence(tuple(left), start, tuple(core), tuple(right))


def random_class_specs(rng: random.Random, classes, count, exact=True):
    from shadowshift import classify_shadowing

    out = []
    while len(out) < count:
        w = random_spec(rng, exact)
        if classify_shadowing(w).shadowing_class in classes:
            out.append(w)
    return out


def random_point(rng, lo=-4, hi=4, scale=1.0):
    return SeqVector(lo, tuple(rng.uniform(-scale, scale) for _ in range(hi - lo + 1)))


def rank_one_within(w, space, rng, fraction=0.5):
    """A rank-one cutoff map whose sup and Lip bounds sit at ``fraction`` of the budget."""
    budget = epsilon_budget(w, space)
    i = rng.randint(-3, 3)
    direction = SeqVector(rng.randint(-3, 1), tuple(rng.uniform(-1, 1) for _ in range(3)))
    matrix = np.outer([direction[k] for k in range(direction.lo, direction.hi + 1)], [1.0])
    alpha = cutoff_affine(space, matrix, i, direction.lo)
    size = max(alpha.sup_bound, alpha.lip_bound)
    matrix = matrix * fraction * budget / size
    return cutoff_affine(space, matrix, i, direction.lo)


@pytest.fixture
def a2():
    return A2()


@pytest.fixture
def rng():
    return random.Random(20240601)


# -- acceptance reporting ------------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    failed = _criteria.setdefault(mark.args[0], [])
    if not rep.passed:
        failed.append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        failed = _criteria[n]
        detail = f"  ({', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n}: {'FAIL' if failed else 'PASS'}{detail}")
