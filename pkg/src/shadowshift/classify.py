"""Decisions about a weighted shift read off its tail rates.

Every verdict is a comparison of a period product with 1: exact in rational
mode, and BOUNDARY in float mode whenever a decisive rate lies within the
relative tolerance of 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

from ._scalars import DEFAULT_RTOL, to_json_scalar
from .spaces import SeqVector, SpaceSpec, iterate, norm
from .weights import TailRates, WeightSequence, tail_rates

ShadowClass = Literal["A", "B", "C", "NONE", "BOUNDARY"]


@dataclass(frozen=True)
class ClassificationReport:
    shadowing_class: ShadowClass
    rates: TailRates
    hyperbolic: Union[bool, Literal["boundary"]]
    uniform_expansivity: Literal["a", "b", "c", "none", "boundary"]
    tolerance_used: float
    arithmetic_mode: Literal["exact", "float"]
    boundary: Optional[dict] = None

    def to_dict(self) -> dict:
        out = {
            "shadowing_class": self.shadowing_class,
            "hyperbolic": self.hyperbolic,
            "uniform_expansivity": self.uniform_expansivity,
            "tolerance_used": self.tolerance_used,
            "arithmetic_mode": self.arithmetic_mode,
        }
        out.update(self.rates.to_dict())
        if self.boundary is not None:
            out["boundary"] = self.boundary
        return out


def _signs(rates: TailRates, rtol: float):
    return rates.left_sign(rtol), rates.right_sign(rtol)


def _boundary_detail(rates: TailRates, rtol: float) -> Optional[dict]:
    sl, sr = _signs(rates, rtol)
    hits = []
    if sl == 0:
        hits.append(("g_left", rates.g_left))
    if sr == 0:
        hits.append(("g_right", rates.g_right))
    if not hits:
        return None
    name, value = hits[0]
    return {"quantity": name, "value": float(value), "distance_to_one": abs(float(value) - 1.0),
            "all": [h[0] for h in hits]}


def _shadow_class(sl: int, sr: int, exact: bool) -> ShadowClass:
    if not exact and (sl == 0 or sr == 0):
        return "BOUNDARY"
    if sl < 0 and sr < 0:
        return "A"
    if sl > 0 and sr > 0:
        return "B"
    if sl < 0 < sr:
        return "C"
    return "NONE"


def _expansivity_class(sl: int, sr: int, exact: bool) -> str:
    if not exact and (sl == 0 or sr == 0):
        return "boundary"
    if sl < 0 and sr < 0:
        return "a"
    if sl > 0 and sr > 0:
        return "b"
    if sr < 0 < sl:
        return "c"
    return "none"


def classify_shadowing(w: WeightSequence, rtol: float = DEFAULT_RTOL) -> ClassificationReport:
    """Shadowing class A/B/C/NONE from the two tail rates (BOUNDARY in float mode near 1)."""
    rates = tail_rates(w)
    sl, sr = _signs(rates, rtol)
    cls = _shadow_class(sl, sr, w.exact)
    if cls == "BOUNDARY":
        hyperbolic = "boundary"
    else:
        hyperbolic = cls in ("A", "B")
    return ClassificationReport(
        shadowing_class=cls,
        rates=rates,
        hyperbolic=hyperbolic,
        uniform_expansivity=_expansivity_class(sl, sr, w.exact),
        tolerance_used=0.0 if w.exact else rtol,
        arithmetic_mode=w.mode,
        boundary=_boundary_detail(rates, rtol) if not w.exact else None,
    )


def uniform_expansivity_class(w: WeightSequence, rtol: float = DEFAULT_RTOL) -> str:
    """a: both tails contract; b: both expand; c: left expands while right contracts."""
    rates = tail_rates(w)
    return _expansivity_class(*_signs(rates, rtol), w.exact)


def classify_unilateral(w: WeightSequence, direction: Literal["backward", "forward"],
                        rtol: float = DEFAULT_RTOL) -> str:
    """Positive shadowing of the unilateral shift with weights w_1, w_2, ...

    The backward shift shadows iff the tail rate is < 1 (hyperbolic) or > 1
    (expanding); the forward shift shadows iff it is hyperbolic, i.e. rate < 1.
    """
    sign = tail_rates(w).right_sign(rtol)
    if sign == 0:
        return "none" if w.exact else "boundary"
    if sign < 0:
        return "hyperbolic_A"
    if direction == "backward":
        return "expanding_b"
    if direction == "forward":
        return "none"
    raise ValueError(f"unknown direction {direction!r}")


# -- stable / unstable sets -------------------------------------------------------


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    witness: Optional[int]
    checked_through: int
    certified: bool

    def __bool__(self):
        return self.member


def stable_set_member(w: WeightSequence, space: SpaceSpec, x: SeqVector, c, rate, horizon: int,
                      side: Literal["stable", "unstable"] = "stable",
                      rtol: float = DEFAULT_RTOL) -> MembershipResult:
    """Decide ||T^n x|| <= c rate^n ||x|| for every n >= 1 (T = B_w, or B_w^-1 on the unstable side).

    Once the support of T^n x sits in one tail, T^L multiplies the norm by the
    period product G, so the ratio to c rate^n evolves by G / rate^L per period:
    checking one period past that point settles the infinite tail.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if x.is_zero():
        return MembershipResult(True, None, 0, True)
    exact_norms = w.exact and (space.kind == "c0" or space.p == 1)
    slack = 0 if exact_norms else rtol
    base = norm(space, x)
    step = 1 if side == "stable" else -1
    if side == "stable":
        period = len(w.left_tail)
        G = abs(math.prod(w.left_tail))
        settle = max(0, x.hi - w.core_start + 1)
    elif side == "unstable":
        period = len(w.right_tail)
        G = abs(1 / math.prod(w.right_tail))
        settle = max(0, w.core_end - 1 - x.lo)
    else:
        raise ValueError(f"unknown side {side!r}")

    def fails(value, n):
        return value > c * rate ** n * base * (1 + slack)

    last = max(horizon, settle + period)
    cur = x
    norms = {}
    for n in range(1, last + 1):
        cur = iterate(w, space, cur, step)
        norms[n] = norm(space, cur)
        if fails(norms[n], n):
            return MembershipResult(False, n, n, True)
    if G <= rate ** period * (1 + slack):
        return MembershipResult(True, None, last, True)
    # growth per period beats the allowed decay, so some later n must fail
    k = 1
    while True:
        for m in range(last - period + 1, last + 1):
            n = m + k * period
            if fails(norms[m] * G ** k, n):
                return MembershipResult(False, n, n, True)
        k += 1


# -- expansivity falsifier -----------------------------------------------------------


def orbit_sup_ratio(w: WeightSequence, space: SpaceSpec, x: SeqVector, horizon: int,
                    stop_above: Optional[float] = None) -> float:
    """max over |n| <= horizon of ||B^n x|| / ||x|| (stops early once stop_above is exceeded)."""
    base = norm(space, x)
    best = 1.0
    for step in (1, -1):
        cur = x
        for _ in range(horizon):
            cur = iterate(w, space, cur, step)
            best = max(best, float(norm(space, cur) / base))
            if stop_above is not None and best > stop_above:
                return best
    return best


def _candidate_vectors(w: WeightSequence):
    a, b = w.core_start, w.core_end
    L, R = len(w.left_tail), len(w.right_tail)
    indices = sorted(set(range(a - L - 1, b + R + 1)) | {0}, key=lambda i: (abs(i), i))
    for i in indices:
        yield SeqVector.basis(i)
    one = w.one
    coeffs = [one, -one, one / 2, -one / 2, 2 * one, -2 * one]
    window = range(a - 1, b + 1)
    for i, j in itertools.combinations(window, 2):
        for q in coeffs:
            yield SeqVector.from_mapping({i: one, j: q})


def bounded_orbit_witness(w: WeightSequence, space: SpaceSpec, horizon: int,
                          bound: float) -> Optional[SeqVector]:
    """A unit vector whose orbit stays within ``bound`` for |n| <= horizon, if the search finds one.

    Candidates: basis vectors around the core (nearest to index 0 first), then
    two-term combinations on the core window.  Semi-decision only.
    """
    for x in _candidate_vectors(w):
        if orbit_sup_ratio(w, space, x, horizon, stop_above=bound) <= bound:
            size = norm(space, x)
            return x if size == 1 else x.scale(1 / size)
    return None


# -- frequent hypercyclicity criterion ------------------------------------------------


@dataclass(frozen=True)
class FhcReport:
    forward_sum: object
    backward_sum: object
    tail_bound: float
    converges: bool
    forward_converges: bool
    backward_converges: bool
    forward_terms: int
    backward_terms: int

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if v == math.inf else to_json_scalar(v)
        return {"forward_sum": enc(self.forward_sum), "backward_sum": enc(self.backward_sum),
                "tail_bound": enc(self.tail_bound), "converges": self.converges,
                "forward_converges": self.forward_converges,
                "backward_converges": self.backward_converges,
                "forward_terms": self.forward_terms, "backward_terms": self.backward_terms}


def _orbit_series(w: WeightSequence, space: SpaceSpec, y: SeqVector, step: int, rtol: float,
                  tol: float, max_terms: int, divergent_terms: int):
    """(partial sum, certified remainder, converges, terms) for sum_{k>=1} ||B^{step k} y||.

    After the support has entered the tail that the iteration moves into, the
    terms satisfy N(k + P) = G N(k), so the remainder after h terms is exactly
    (N(h+1) + ... + N(h+P)) / (1 - G).
    """
    if step > 0:
        period = len(w.left_tail)
        G = abs(math.prod(w.left_tail))
        settle = max(0, y.hi - w.core_start + 1)
    else:
        period = len(w.right_tail)
        G = abs(1 / math.prod(w.right_tail))
        settle = max(0, w.core_end - 1 - y.lo)
    converging = (G < 1) if w.exact else (G < 1 - rtol)
    if y.is_zero():
        return 0, 0.0, True, 0
    terms = []
    cur = y
    if not converging:
        for _ in range(divergent_terms):
            cur = iterate(w, space, cur, step)
            terms.append(norm(space, cur))
        return sum(terms), math.inf, False, len(terms)
    for _ in range(settle + period):
        cur = iterate(w, space, cur, step)
        terms.append(norm(space, cur))
    h = settle
    while True:
        remainder = sum(terms[h:h + period]) / (1 - G)
        if remainder < tol or h >= max_terms:
            break
        cur = iterate(w, space, cur, step)
        terms.append(norm(space, cur))
        h += 1
    return sum(terms[:h]), remainder, True, h


def fhc_check(w: WeightSequence, space: SpaceSpec, y: SeqVector, tol: float = 1e-9,
              rtol: float = DEFAULT_RTOL, max_terms: int = 100_000,
              divergent_terms: int = 64) -> FhcReport:
    """Sum ||B^k y|| and ||B^-k y|| over k >= 1 with exact geometric remainders.

    The forward series converges iff the left tail contracts and the backward
    one iff the right tail expands; both happen exactly for class C.
    """
    f_sum, f_tail, f_ok, f_n = _orbit_series(w, space, y, 1, rtol, tol, max_terms, divergent_terms)
    b_sum, b_tail, b_ok, b_n = _orbit_series(w, space, y, -1, rtol, tol, max_terms, divergent_terms)
    tail = max(float(f_tail), float(b_tail))
    return FhcReport(f_sum, b_sum, tail, f_ok and b_ok and tail < tol, f_ok, b_ok, f_n, b_n)


__all__ = [
    "ClassificationReport", "MembershipResult", "FhcReport", "classify_shadowing",
    "uniform_expansivity_class", "classify_unilateral", "stable_set_member", "orbit_sup_ratio",
    "bounded_orbit_witness", "fhc_check",
]
