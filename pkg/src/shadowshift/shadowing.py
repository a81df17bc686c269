"""Pseudotrajectories, their shadowing orbits, and a minimax oracle for the best shadow.

A trajectory is a finite window x_{n0}, ..., x_{n1}; outside the window the
defects z_n = x_{n+1} - T x_n are taken to be zero, which turns the shadowing
series into finite sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Literal, Mapping, Optional, Sequence, Union

import numpy as np

from ._scalars import is_exact, parse_scalar, to_json_scalar, unit_phase
from .classify import classify_shadowing
from .errors import ClassificationError, TrajectoryError
from .spaces import (
    OPERATOR_KINDS,
    OperatorKind,
    SeqVector,
    SpaceSpec,
    basis_image,
    iterate,
    norm,
)
from .weights import WeightSequence, partial_product, splitting_constants

AdversarialKind = Literal["backward_necessity", "bilateral_e0", "forward_unilateral"]


@dataclass(frozen=True)
class PseudoTrajectory:
    n0: int
    points: tuple
    delta: object
    operator: OperatorKind = "bilateral"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise TrajectoryError("a trajectory needs at least one point")
        if self.operator not in OPERATOR_KINDS:
            raise TrajectoryError(f"unknown operator kind {self.operator!r}")

    @property
    def n1(self) -> int:
        return self.n0 + len(self.points) - 1

    def __len__(self):
        return len(self.points)

    def at(self, n: int) -> SeqVector:
        if not self.n0 <= n <= self.n1:
            raise IndexError(f"time {n} outside [{self.n0}, {self.n1}]")
        return self.points[n - self.n0]

    def times(self) -> range:
        return range(self.n0, self.n1 + 1)

    def to_json(self) -> dict:
        return {"n0": self.n0, "delta": to_json_scalar(self.delta), "operator": self.operator,
                "points": [p.to_json() for p in self.points]}

    @classmethod
    def from_json(cls, obj, exact: bool = False) -> "PseudoTrajectory":
        if isinstance(obj, list):
            raise TrajectoryError("trajectory files need the {n0, delta} header")
        try:
            points = [SeqVector.from_json(p, exact) for p in obj["points"]]
            return cls(int(obj["n0"]), tuple(points), parse_scalar(obj["delta"], exact),
                       obj.get("operator", "bilateral"))
        except (KeyError, ValueError) as exc:
            raise TrajectoryError(f"malformed trajectory: {exc}") from exc


def _step(w, space, x, kind):
    return iterate(w, space, x, 1, kind)


def step_defects(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory) -> list:
    """||T x_n - x_{n+1}|| for n = n0, ..., n1 - 1."""
    pts = traj.points
    return [norm(space, _step(w, space, pts[k], traj.operator) - pts[k + 1])
            for k in range(len(pts) - 1)]


def defect(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory):
    """max_n ||T x_n - x_{n+1}|| over the window."""
    if len(traj) < 2:
        raise TrajectoryError("defect needs at least two points")
    return max(step_defects(w, space, traj))


def _coerce_real(w: WeightSequence, value):
    """A real parameter in the arithmetic of w (decimal literals become exact rationals)."""
    if w.exact:
        return parse_scalar(value, exact=True)
    return float(value)


# -- random trajectories ------------------------------------------------------------


def _ball_sample(rng: np.random.Generator, space: SpaceSpec, dim: int, radius: float,
                 complex_field: bool) -> np.ndarray:
    """A point of the radius-ball of R^dim (c0: cube, lp: uniform via generalized Gaussians).

    For complex fields the moduli come from the real sampler and the phases are uniform.
    """
    if space.kind == "c0":
        mags = rng.uniform(-1.0, 1.0, dim)
    else:
        p = float(space.p)
        g = rng.gamma(1.0 / p, 1.0, dim) ** (1.0 / p) * rng.choice([-1.0, 1.0], dim)
        mags = g / (np.sum(np.abs(g) ** p) + rng.exponential()) ** (1.0 / p)
    if complex_field:
        return radius * np.abs(mags) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, dim))
    return radius * mags


def _support_range(operator: OperatorKind, radius: int) -> range:
    if operator == "bilateral":
        return range(-radius, radius + 1)
    return range(1, 2 * radius + 2)


def _as_vector(values: np.ndarray, lo: int, exact: bool) -> SeqVector:
    if exact:
        return SeqVector(lo, tuple(Fraction(float(v)) for v in values))
    return SeqVector(lo, tuple(complex(v) if np.iscomplexobj(values) else float(v) for v in values))


def random_pseudotrajectory(w: WeightSequence, space: SpaceSpec, delta, window: Sequence[int],
                            seed: int, support_radius: int = 3,
                            operator: OperatorKind = "bilateral") -> PseudoTrajectory:
    """x_{n0} uniform in the unit ball, x_{n+1} = T x_n + kick_n with kicks in the delta-ball.

    Supports of the initial point and of every kick lie in [-support_radius, support_radius]
    (for unilateral operators in [1, 2 support_radius + 1]).  Exact weights
    give exact (dyadic) trajectories.
    """
    n0, n1 = window
    if n0 >= n1:
        raise TrajectoryError("window must satisfy n0 < n1")
    if operator != "bilateral" and n0 < 0:
        raise TrajectoryError("unilateral trajectories start at n0 >= 0")
    delta = _coerce_real(w, delta)
    if delta < 0:
        raise TrajectoryError("delta must be nonnegative")
    rng = np.random.default_rng(seed)
    idx = _support_range(operator, support_radius)
    cplx = w.scalar_field == "complex"
    # a hair inside the ball so rounding in the norm cannot push past delta
    shrink = 1.0 - 1e-9
    x = _as_vector(_ball_sample(rng, space, len(idx), shrink, cplx), idx.start, w.exact)
    points = [x]
    for _ in range(n1 - n0):
        image = _step(w, space, points[-1], operator)
        kick_raw = _ball_sample(rng, space, len(idx), float(delta) * shrink, cplx)
        for _attempt in range(60):
            nxt = image + _as_vector(kick_raw, idx.start, w.exact)
            if norm(space, image - nxt) <= delta:
                break
            kick_raw = kick_raw * 0.5
        else:
            raise TrajectoryError("cannot keep the defect below delta at this magnitude")
        points.append(nxt)
    return PseudoTrajectory(n0, tuple(points), delta, operator)


# -- adversarial constructions ---------------------------------------------------


def _positive_int(params: Mapping, key: str) -> int:
    if key not in params:
        raise TrajectoryError(f"missing parameter {key}")
    value = params[key]
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise TrajectoryError(f"parameter {key} must be a positive integer")
    return int(value)


def adversarial_pseudotrajectory(w: WeightSequence, space: SpaceSpec, kind: AdversarialKind,
                                 delta, params: Mapping) -> PseudoTrajectory:
    """The pseudotrajectories used to refute shadowing.

    backward_necessity (t, m): x_0 = u_0 e_{t+m}, x_k = B x_{k-1} + delta u_k e_{t+m-k}
        for k <= m, x_{m+1} = B x_m, phases u_k aligning w_t ... w_{t+m-k}; window 0..m+1.
    bilateral_e0 (m): y_0 = e_0, y_n = B y_{n-1} + delta e_0 (n >= 1),
        y_n = B^-1 (y_{n+1} + delta e_0) (n <= -1); window -m..m.
    forward_unilateral (t): x_0 = 0, x_k = F x_{k-1} + delta u_k e_k for k <= t,
        x_{t+1} = F x_t for the forward shift F e_k = w_k e_{k+1}; window 0..t+1.
    """
    delta = _coerce_real(w, delta)
    if delta <= 0:
        raise TrajectoryError("delta must be positive")
    one = w.one
    if kind == "backward_necessity":
        t, m = _positive_int(params, "t"), _positive_int(params, "m")
        phase = lambda k: unit_phase(partial_product(w, t, t + m - k))
        points = [SeqVector.basis(t + m, phase(0))]
        for k in range(1, m + 1):
            kick = SeqVector.basis(t + m - k, delta * phase(k))
            points.append(_step(w, space, points[-1], "bilateral") + kick)
        points.append(_step(w, space, points[-1], "bilateral"))
        return PseudoTrajectory(0, tuple(points), delta, "bilateral")
    if kind == "bilateral_e0":
        m = _positive_int(params, "m")
        kick = SeqVector.basis(0, delta * one)
        forward = [SeqVector.basis(0, one)]
        for _ in range(m):
            forward.append(_step(w, space, forward[-1], "bilateral") + kick)
        backward = [forward[0]]
        for _ in range(m):
            backward.append(iterate(w, space, backward[-1] + kick, -1))
        return PseudoTrajectory(-m, tuple(backward[:0:-1] + forward), delta, "bilateral")
    if kind == "forward_unilateral":
        t = _positive_int(params, "t")
        points = [SeqVector.zero()]
        for k in range(1, t + 1):
            kick = SeqVector.basis(k, delta * unit_phase(partial_product(w, k, t)))
            points.append(_step(w, space, points[-1], "unilateral_forward") + kick)
        points.append(_step(w, space, points[-1], "unilateral_forward"))
        return PseudoTrajectory(0, tuple(points), delta, "unilateral_forward")
    raise TrajectoryError(f"unknown adversarial kind {kind!r}")


# -- shadowing via the splitting series ------------------------------------------------


@dataclass(frozen=True)
class ShadowResult:
    """Outcome of series shadowing.

    ``per_step_errors`` are ||y_n||, which equal ||x_n - T^n shadow_point|| in
    exact arithmetic.  ``direct_errors`` re-run the orbit of the stored point;
    in float mode along strongly expanding directions they are dominated by
    rounding of the point (amplified by the weight products), so they can
    exceed the true errors.
    """

    shadow_point: SeqVector
    max_error: float
    error_bound: float
    per_step_errors: tuple
    n0: int
    splitting: str
    split_index: int
    C: float
    t: float
    delta_used: object
    recurrence_residual: float
    direct_errors: tuple = field(repr=False, default=())

    @property
    def direct_max_error(self):
        return max(self.direct_errors) if self.direct_errors else self.max_error

    def to_json(self) -> dict:
        return {
            "shadow_point": self.shadow_point.to_json(),
            "max_error": float(self.max_error),
            "error_bound": float(self.error_bound),
            "per_step_errors": [float(e) for e in self.per_step_errors],
            "direct_max_error": float(self.direct_max_error),
            "n0": self.n0,
            "splitting": self.splitting,
            "split_index": self.split_index,
            "C": self.C,
            "t": self.t,
            "delta_used": float(self.delta_used),
            "recurrence_residual": self.recurrence_residual,
        }


def _check_shadowable(w: WeightSequence):
    report = classify_shadowing(w)
    if report.shadowing_class not in ("A", "B", "C"):
        raise ClassificationError(
            f"class {report.shadowing_class} has no hyperbolic-type splitting", report)
    return report


def correction_sequence(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory,
                        splitting: str, split_index: int = 0,
                        defects: Optional[Sequence[SeqVector]] = None) -> dict:
    """{n: y_n} with y_n = sum_{k>=0} B^k z^M_{n-k-1} - sum_{k>=1} B^-k z^N_{n+k-1}.

    For class C, M holds indices <= split_index and N the rest.  Both sums are evaluated in nested form: Y^M_{n+1} = B Y^M_n + z^M_n from
    Y^M_{n0} = 0 and Y^N_n = B^-1 (Y^N_{n+1} - z^N_n) from Y^N_{n1} = 0.
    """
    pts = traj.points
    z = _defects(w, space, traj) if defects is None else defects
    zero = SeqVector.zero()
    if splitting == "A":
        parts = [(d, zero) for d in z]
    elif splitting == "B":
        parts = [(zero, d) for d in z]
    else:
        parts = [(d.restrict(None, split_index), d.restrict(split_index + 1, None)) for d in z]
    count = len(pts)
    ym = [zero] * count
    for k in range(count - 1):
        ym[k + 1] = _step(w, space, ym[k], "bilateral") + parts[k][0]
    yn = [zero] * count
    for k in range(count - 2, -1, -1):
        yn[k] = iterate(w, space, yn[k + 1] - parts[k][1], -1)
    return {traj.n0 + k: ym[k] + yn[k] for k in range(count)}


def _orbit_errors(w, space, traj, point, kind="bilateral"):
    """||x_n - T^n point|| across the window, stepping the orbit one iterate at a time."""
    errors = {}
    if traj.n0 <= 0:
        cur = point
        for n in range(0, traj.n1 + 1):
            errors[n] = norm(space, traj.at(n) - cur)
            cur = _step(w, space, cur, kind)
        cur = point
        for n in range(-1, traj.n0 - 1, -1):
            cur = iterate(w, space, cur, -1)
            errors[n] = norm(space, traj.at(n) - cur)
    else:
        cur = iterate(w, space, point, traj.n0, kind)
        for n in traj.times():
            errors[n] = norm(space, traj.at(n) - cur)
            cur = _step(w, space, cur, kind)
    return [errors[n] for n in traj.times()]


def _split_candidates(w: WeightSequence) -> list:
    a, b = w.core_start, w.core_end
    span = range(a - len(w.left_tail) - 1, b + len(w.right_tail) + 1)
    return sorted(set(span) | {0}, key=lambda j: (abs(j), j))


@lru_cache(maxsize=256)
def best_split_index(w: WeightSequence) -> int:
    """The index j minimising the constant C of the splitting (indices <= j, indices > j).

    Any j gives a valid class-C splitting; C is smallest when j sits at the
    junction of the contracting and expanding parts.  Ties go to the j nearest 0.
    """
    best, best_c = 0, None
    for j in _split_candidates(w):
        c = splitting_constants(w.shifted(j)).C
        if best_c is None or c < best_c:
            best, best_c = j, c
    return best


SplitChoice = Union[int, Literal["min_constant", "min_error"], None]


def _defects(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory) -> list:
    pts = traj.points
    return [pts[k + 1] - _step(w, space, pts[k], "bilateral") for k in range(len(pts) - 1)]


def _series_shadow(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory,
                   split_index: SplitChoice, defects: Optional[list] = None) -> ShadowResult:
    if traj.operator != "bilateral":
        raise TrajectoryError("series shadowing is implemented for the bilateral shift")
    if not traj.n0 <= 0 <= traj.n1:
        raise TrajectoryError("the trajectory window must contain time 0")
    report = _check_shadowable(w)
    if report.shadowing_class != "C":
        split_index = 0
    elif split_index is None or split_index == "min_constant":
        split_index = best_split_index(w)
    elif split_index == "min_error":
        defects = _defects(w, space, traj)
        results = [_series_shadow(w, space, traj, j, defects) for j in _split_candidates(w)]
        return min(results, key=lambda r: r.max_error)
    elif isinstance(split_index, bool) or not isinstance(split_index, int):
        raise ValueError(f"unknown split choice {split_index!r}")
    consts = splitting_constants(w.shifted(split_index))
    if defects is None:
        defects = _defects(w, space, traj)
    ys = correction_sequence(w, space, traj, consts.splitting, split_index, defects)
    point = traj.at(0) - ys[0]
    direct = _orbit_errors(w, space, traj, point)
    per_step = [norm(space, ys[n]) for n in traj.times()]
    residual = 0.0
    worst_defect = 0
    for n in range(traj.n0, traj.n1):
        z = defects[n - traj.n0]
        worst_defect = max(worst_defect, norm(space, z))
        image = _step(w, space, ys[n], "bilateral")
        gap = float(norm(space, image + z - ys[n + 1]))
        if gap:
            # relative to the terms being added, so cancellation to 0 is not amplified
            scale = max(float(norm(space, image)), float(norm(space, z)), float(norm(space, ys[n + 1])))
            residual = max(residual, gap / scale)
    # the bound needs every defect below delta; a mislabelled trajectory uses its measured defect
    delta = max(traj.delta, worst_defect)
    bound = 2 * consts.C * float(delta) / (1 - consts.t)
    return ShadowResult(
        shadow_point=point,
        max_error=max(per_step),
        error_bound=bound,
        per_step_errors=tuple(per_step),
        n0=traj.n0,
        splitting=consts.splitting,
        split_index=split_index,
        C=consts.C,
        t=consts.t,
        delta_used=delta,
        recurrence_residual=residual,
        direct_errors=tuple(direct),
    )


def shadow_bilateral(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory,
                     split_index: SplitChoice = None) -> ShadowResult:
    """Shadow a two-sided window through the splitting series; the window must contain 0.

    ``split_index`` is where the class-C splitting cuts the index line.  The
    default ``"min_constant"`` takes the cut with the smallest constant C;
    ``"min_error"`` tries every cut near the core and keeps the closest orbit.
    """
    return _series_shadow(w, space, traj, split_index)


def shadow_positive(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory,
                    split_index: SplitChoice = None) -> ShadowResult:
    """Shadow a window indexed from time 0."""
    if traj.n0 != 0:
        raise TrajectoryError("positive shadowing needs a trajectory based at n0 = 0")
    return _series_shadow(w, space, traj, split_index)


# -- ground-truth oracle -----------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    best_point: SeqVector
    best_error: object
    lower_bound: object
    exact: bool

    def __iter__(self):
        yield self.best_point
        yield self.best_error

    def to_json(self) -> dict:
        return {"best_point": self.best_point.to_json(), "best_error": to_json_scalar(self.best_error),
                "lower_bound": to_json_scalar(self.lower_bound), "exact": self.exact}


def _chebyshev_real(r: list, q: list):
    """min_c max_k q_k |c - r_k| for real r_k and q_k > 0: (optimal value, minimiser).

    The optimum is max over pairs of (r_k - r_j) q_k q_j / (q_k + q_j); float
    search picks the active pair and exact arithmetic confirms it, falling back
    to the full pair scan if the float guess was not optimal.
    """
    if len(r) == 1:
        return 0 * q[0], r[0]
    rf = np.array([float(v) for v in r])
    qf = np.array([float(v) for v in q])
    gaps = (rf[:, None] - rf[None, :]) * (qf[:, None] * qf[None, :]) / (qf[:, None] + qf[None, :])
    k, j = np.unravel_index(int(np.argmax(gaps)), gaps.shape)

    def value_at(k, j):
        return max(0 * q[0], (r[k] - r[j]) * q[k] * q[j] / (q[k] + q[j]))

    def feasible(E):
        low = max(rk - E / qk for rk, qk in zip(r, q))
        high = min(rk + E / qk for rk, qk in zip(r, q))
        return low, high

    E = value_at(k, j)
    low, high = feasible(E)
    if low > high and is_exact(r[0]):
        E = max(value_at(a, b) for a in range(len(r)) for b in range(len(r)))
        low, high = feasible(E)
    if is_exact(r[0]):
        return E, low
    if low > high:
        E = float(E) * (1 + 1e-15) + 1e-300
        low, high = feasible(E)
    return E, (low + high) / 2


def _chebyshev_complex(r: list, q: list):
    """(lower bound, upper bound, minimiser) for min_c max_k q_k |c - r_k| over complex c."""
    from scipy.optimize import minimize

    rv = np.array(r, dtype=complex)
    qv = np.array([float(v) for v in q])
    if len(rv) == 1:
        return 0.0, 0.0, complex(rv[0])
    gaps = np.abs(rv[:, None] - rv[None, :]) * (qv[:, None] * qv[None, :]) / (qv[:, None] + qv[None, :])
    k, j = np.unravel_index(int(np.argmax(gaps)), gaps.shape)
    lower = float(gaps[k, j])
    start = (qv[k] * rv[k] + qv[j] * rv[j]) / (qv[k] + qv[j])
    objective = lambda v: float(np.max(qv * np.abs(v[0] + 1j * v[1] - rv)))
    res = minimize(objective, [start.real, start.imag], method="Nelder-Mead",
                   options={"xatol": 1e-14, "fatol": 1e-15, "maxiter": 4000})
    best = res.x if res.fun < objective([start.real, start.imag]) else [start.real, start.imag]
    c = complex(best[0], best[1])
    return lower, objective(best), c


def oracle_best_shadow(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory,
                       support_window: Sequence[int]) -> OracleResult:
    """Minimise max_n ||x_n - T^n v|| over v supported in ``support_window``.

    (T^n v)_j involves a single coordinate of v, so in the sup norm the problem
    splits into one weighted Chebyshev problem per coordinate, solved exactly
    for real data.  Positions of the trajectory never reached by any
    coordinate contribute their own size as an unavoidable floor.  For lp the
    reported error is that of the sup-norm minimiser (an upper bound) and
    ``lower_bound`` is the sup-norm optimum.
    """
    lo, hi = support_window
    kind = traj.operator
    if kind != "bilateral":
        lo = max(lo, 1)
    cplx = w.scalar_field == "complex" or any(
        isinstance(c, complex) for p in traj.points for c in p.coeffs)
    exact = w.exact and all(is_exact(c) for p in traj.points for c in p.coeffs) and not cplx
    times = list(traj.times())
    floor = 0 * w.one if exact else 0.0
    for n in times:
        x = traj.at(n)
        reach = (lo + n, hi + n) if kind == "unilateral_forward" else (lo - n, hi - n)
        for j, c in x.items():
            if not reach[0] <= j <= reach[1]:
                floor = max(floor, abs(c))
    coords = {}
    lower = floor
    for i in range(lo, hi + 1):
        r, q = [], []
        for n in times:
            j, p = basis_image(w, i, n, kind)
            if p == 0:
                continue
            r.append(traj.at(n)[j] / p)
            q.append(abs(p))
        if not r:
            continue
        if cplx:
            low_i, _, c = _chebyshev_complex(r, q)
        else:
            low_i, c = _chebyshev_real(r, q)
        lower = max(lower, low_i)
        if c != 0:
            coords[i] = c
    point = SeqVector.from_mapping(coords)
    best = max(_orbit_errors(w, space, traj, point, kind))
    if exact and space.kind == "c0":
        lower = best
    return OracleResult(point, best, lower, exact and (space.kind == "c0"))


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    max_error: object
    per_step_errors: tuple

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "max_error": to_json_scalar(self.max_error),
                "per_step_errors": [float(e) for e in self.per_step_errors]}


def verify_shadow(w: WeightSequence, space: SpaceSpec, traj: PseudoTrajectory,
                  candidate: SeqVector, eps) -> VerifyReport:
    """True iff max_n ||x_n - T^n candidate|| < eps over the window."""
    errors = _orbit_errors(w, space, traj, candidate, traj.operator)
    worst = max(errors)
    return VerifyReport(worst < eps, worst, tuple(errors))


__all__ = [
    "PseudoTrajectory", "ShadowResult", "OracleResult", "VerifyReport", "defect", "step_defects",
    "random_pseudotrajectory", "adversarial_pseudotrajectory", "correction_sequence", "best_split_index",
    "shadow_bilateral", "shadow_positive", "oracle_best_shadow", "verify_shadow",
]
