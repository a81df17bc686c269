"""Eventually periodic bi-infinite weight sequences.

A sequence is stored as a finite core flanked by two periodic tails, so every
asymptotic quantity that drives the shadowing theory of a weighted shift
(limits of n-step geometric means, geometric decay constants) reduces to a
finite computation over the stored data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Mapping, Optional, Sequence

from ._scalars import (
    DEFAULT_RTOL,
    ScalarParseError,
    is_exact,
    log_abs,
    nth_root,
    one_like,
    parse_scalar,
    sign_vs_one,
    to_json_scalar,
    unify,
)
from .errors import ClassificationError, WeightSpecError

GeomeanDomain = Literal["allZ_sup", "allZ_inf", "leftN_sup", "rightN_inf"]

# relative slack used to make the dichotomy constants strictly admissible
_CONSTANT_SLACK = 1e-12


@dataclass(frozen=True)
class WeightSequence:
    """Weights w_n: ``left_tail`` repeats for n < core_start, ``right_tail`` for n >= core_end.

    The left period is anchored so that ``w_{core_start-1} = left_tail[-1]``;
    the right period starts with ``w_{core_end} = right_tail[0]``.
    """

    left_tail: tuple
    core_start: int
    core: tuple
    right_tail: tuple
    scalar_field: Literal["real", "complex"] = "real"

    def __post_init__(self):
        left, core, right = tuple(self.left_tail), tuple(self.core), tuple(self.right_tail)
        if not left or not right:
            raise WeightSpecError("both tails need at least one weight")
        if self.scalar_field not in ("real", "complex"):
            raise WeightSpecError(f"unknown scalar field {self.scalar_field!r}")
        try:
            values = unify(parse_scalar(v) for v in left + core + right)
        except ScalarParseError as exc:
            raise WeightSpecError(str(exc)) from exc
        if any(v == 0 for v in values):
            raise WeightSpecError("weights must be nonzero")
        if self.scalar_field == "real" and any(isinstance(v, complex) for v in values):
            if any(v.imag != 0 for v in values):
                raise WeightSpecError("complex weight in a real weight sequence")
            values = tuple(v.real for v in values)
        nl, nc = len(left), len(core)
        object.__setattr__(self, "left_tail", values[:nl])
        object.__setattr__(self, "core", values[nl:nl + nc])
        object.__setattr__(self, "right_tail", values[nl + nc:])
        object.__setattr__(self, "core_start", int(self.core_start))

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value, scalar_field="real") -> "WeightSequence":
        return cls((value,), 0, (), (value,), scalar_field)

    @classmethod
    def two_sided(cls, left, right, scalar_field="real") -> "WeightSequence":
        """w_n = left for n < 0 and right for n >= 0."""
        return cls((left,), 0, (), (right,), scalar_field)

    @classmethod
    def unilateral(cls, head: Sequence, tail: Sequence, scalar_field="real") -> "WeightSequence":
        """Weights (w_1, w_2, ...) indexed by the positive integers.

        The left tail is a placeholder ``[1]``; unilateral operations never read
        indices below 1.
        """
        return cls((1,), 1, tuple(head), tuple(tail), scalar_field)

    # -- basic data -----------------------------------------------------------

    @property
    def core_end(self) -> int:
        """First index of the right tail."""
        return self.core_start + len(self.core)

    @property
    def exact(self) -> bool:
        return is_exact(self.left_tail[0])

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "float"

    @property
    def one(self):
        return one_like(self.left_tail[0])

    def values(self) -> tuple:
        return self.left_tail + self.core + self.right_tail

    @property
    def min_abs(self):
        """m_w = inf |w_n|, attained on the stored data."""
        return min(abs(v) for v in self.values())

    @property
    def max_abs(self):
        """M_w = sup |w_n|."""
        return max(abs(v) for v in self.values())

    def __call__(self, n: int):
        return weight_at(self, n)

    # -- transformations ------------------------------------------------------

    def shifted(self, offset: int) -> "WeightSequence":
        """The sequence n -> w_{n + offset}."""
        return WeightSequence(self.left_tail, self.core_start - offset, self.core,
                              self.right_tail, self.scalar_field)

    def reflected(self) -> "WeightSequence":
        """The sequence n -> w_{-n}."""
        return WeightSequence(self.right_tail[::-1], 1 - self.core_end, self.core[::-1],
                              self.left_tail[::-1], self.scalar_field)

    def inverted(self) -> "WeightSequence":
        """The sequence n -> 1/w_n."""
        inv = lambda seq: tuple(1 / v for v in seq)
        return WeightSequence(inv(self.left_tail), self.core_start, inv(self.core),
                              inv(self.right_tail), self.scalar_field)

    def reversed_inverted(self) -> "WeightSequence":
        """n -> 1/w_{-n+1}: the weights of the backward shift conjugate to B_w^{-1}."""
        return self.inverted().reflected().shifted(-1)

    def scaled(self, factor) -> "WeightSequence":
        sc = lambda seq: tuple(factor * v for v in seq)
        return WeightSequence(sc(self.left_tail), self.core_start, sc(self.core),
                              sc(self.right_tail), self.scalar_field)

    def to_dict(self) -> dict:
        return {
            "scalar_field": self.scalar_field,
            "left_tail": [to_json_scalar(v) for v in self.left_tail],
            "core_start": self.core_start,
            "core": [to_json_scalar(v) for v in self.core],
            "right_tail": [to_json_scalar(v) for v in self.right_tail],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


_SPEC_KEYS = {"scalar_field", "left_tail", "core_start", "core", "right_tail"}


def parse_weight_spec(text, exact: bool = False) -> WeightSequence:
    """Read a weight-spec document (JSON text or an already decoded mapping).

    With ``exact=True`` decimal literals such as ``0.1`` are read as the
    rationals they denote; otherwise JSON floats select float arithmetic.
    Integers and ``"p/q"`` strings are always exact.
    """
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise WeightSpecError(f"malformed weight spec: {exc}") from exc
    else:
        doc = text
    if not isinstance(doc, Mapping):
        raise WeightSpecError("weight spec must be a JSON object")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise WeightSpecError(f"unknown keys {sorted(unknown)}")
    for key in ("left_tail", "right_tail"):
        if key not in doc:
            raise WeightSpecError(f"missing {key}")
    field_ = doc.get("scalar_field", "real")
    core_start = doc.get("core_start", 0)
    if isinstance(core_start, bool) or not isinstance(core_start, int):
        raise WeightSpecError("core_start must be an integer")
    lists = []
    for key in ("left_tail", "core", "right_tail"):
        raw = doc.get(key, [])
        if not isinstance(raw, list):
            raise WeightSpecError(f"{key} must be an array")
        try:
            lists.append([parse_scalar(v, exact) for v in raw])
        except ScalarParseError as exc:
            raise WeightSpecError(f"{key}: {exc}") from exc
    if field_ == "real" and any(isinstance(v, complex) for part in lists for v in part):
        raise WeightSpecError("complex weight given for a real scalar field")
    return WeightSequence(tuple(lists[0]), core_start, tuple(lists[1]), tuple(lists[2]), field_)


def weight_at(w: WeightSequence, n: int):
    if n < w.core_start:
        return w.left_tail[(n - w.core_start) % len(w.left_tail)]
    if n >= w.core_end:
        return w.right_tail[(n - w.core_end) % len(w.right_tail)]
    return w.core[n - w.core_start]


def weight_slice(w: WeightSequence, lo: int, hi: int) -> list:
    """[w_lo, ..., w_hi] assembled segment by segment."""
    if lo > hi:
        return []
    a, b = w.core_start, w.core_end
    out = []
    if lo < a:
        count = min(hi, a - 1) - lo + 1
        L = len(w.left_tail)
        s = (lo - a) % L
        out.extend((w.left_tail * (count // L + 2))[s:s + count])
    c_lo, c_hi = max(lo, a), min(hi, b - 1)
    if c_lo <= c_hi:
        out.extend(w.core[c_lo - a:c_hi - a + 1])
    if hi >= b:
        start = max(lo, b)
        count = hi - start + 1
        R = len(w.right_tail)
        s = (start - b) % R
        out.extend((w.right_tail * (count // R + 2))[s:s + count])
    return out


def _prod(values: Iterable, one):
    out = one
    for v in values:
        out = out * v
    return out


def _cyclic_product(period: tuple, start: int, count: int, one):
    """Product of ``count`` consecutive period entries beginning at ``start``."""
    p = len(period)
    q, r = divmod(count, p)
    out = _prod(period, one) ** q if q else one
    for k in range(r):
        out = out * period[(start + k) % p]
    return out


def partial_product(w: WeightSequence, i: int, j: int):
    """w_i * w_{i+1} * ... * w_j  (i <= j)."""
    if i > j:
        raise ValueError(f"empty product range [{i}, {j}]")
    a, b = w.core_start, w.core_end
    out = w.one
    if i < a:
        hi = min(j, a - 1)
        out = out * _cyclic_product(w.left_tail, (i - a) % len(w.left_tail), hi - i + 1, w.one)
    lo_c, hi_c = max(i, a), min(j, b - 1)
    for n in range(lo_c, hi_c + 1):
        out = out * w.core[n - a]
    if j >= b:
        lo = max(i, b)
        out = out * _cyclic_product(w.right_tail, (lo - b) % len(w.right_tail), j - lo + 1, w.one)
    return out


def window_abs_product(w: WeightSequence, start: int, length: int):
    """|w_start ... w_{start+length-1}|; 1 for an empty window."""
    if length <= 0:
        return abs(w.one)
    return abs(partial_product(w, start, start + length - 1))


@dataclass(frozen=True)
class TailRates:
    """Period geometric means of |w| on each side plus the exact period products."""

    g_left: object
    g_right: object
    left_period_product: object
    right_period_product: object
    left_period: int
    right_period: int
    exact: bool

    def left_sign(self, rtol: float = DEFAULT_RTOL) -> int:
        """Sign of g_left - 1 (0 = on the unit circle, within rtol in float mode)."""
        if self.exact:
            return sign_vs_one(self.left_period_product, True)
        return sign_vs_one(self.g_left, False, rtol)

    def right_sign(self, rtol: float = DEFAULT_RTOL) -> int:
        if self.exact:
            return sign_vs_one(self.right_period_product, True)
        return sign_vs_one(self.g_right, False, rtol)

    def to_dict(self) -> dict:
        return {"g_left": float(self.g_left), "g_right": float(self.g_right),
                "left_period_product": to_json_scalar(self.left_period_product),
                "right_period_product": to_json_scalar(self.right_period_product)}


def tail_rates(w: WeightSequence) -> TailRates:
    left = abs(_prod(w.left_tail, w.one))
    right = abs(_prod(w.right_tail, w.one))
    return TailRates(
        g_left=nth_root(left, len(w.left_tail)),
        g_right=nth_root(right, len(w.right_tail)),
        left_period_product=left,
        right_period_product=right,
        left_period=len(w.left_tail),
        right_period=len(w.right_tail),
        exact=w.exact,
    )


def _candidate_starts(w: WeightSequence, n: int, lo: Optional[int], hi: Optional[int]) -> set:
    """Window starts in [lo, hi] that realise the sup and inf of |w_k ... w_{k+n-1}|.

    Starts split into regimes: window inside the left tail (product periodic in
    k), inside the right tail (periodic), straddling the whole core (product
    geometric along residues mod lcm of the periods, so extremes sit at the
    ends of each residue class), and the finitely many windows with an
    endpoint in the core.
    """
    a, b = w.core_start, w.core_end
    L, R = len(w.left_tail), len(w.right_tail)
    lam = L * R // math.gcd(L, R)
    out: set = set()

    def clip(s, e):
        if lo is not None:
            s = lo if s is None else max(s, lo)
        if hi is not None:
            e = hi if e is None else min(e, hi)
        return s, e

    def take_ends(s, e, period):
        if s is not None and e is not None and s > e:
            return
        if s is None:
            s = e - period + 1
        if e is None:
            e = s + period - 1
        out.update(range(s, min(e, s + period - 1) + 1))
        out.update(range(max(s, e - period + 1), e + 1))

    def take_all(s, e):
        s, e = clip(s, e)
        out.update(range(s, e + 1))

    take_ends(*clip(None, a - n), L)
    take_ends(*clip(b, None), R)
    if b - n + 1 <= a - 1:
        take_ends(*clip(b - n + 1, a - 1), lam)
        take_all(a - n + 1, b - n)
        take_all(a, b - 1)
    else:
        take_all(a - n + 1, b - 1)
    return out


def extreme_window_product(w: WeightSequence, n: int, lo: Optional[int], hi: Optional[int],
                           which: Literal["sup", "inf"]):
    """Exact sup/inf over starts k in [lo, hi] of |w_k ... w_{k+n-1}|."""
    starts = _candidate_starts(w, n, lo, hi)
    if not starts:
        raise ValueError("empty range of window starts")
    vals = [window_abs_product(w, k, n) for k in starts]
    return max(vals) if which == "sup" else min(vals)


def finite_sup_geomean(w: WeightSequence, n: int, domain: GeomeanDomain):
    """sup/inf of the n-step geometric mean |w_k ... w_{k+n-1}|^(1/n).

    ``leftN_sup`` ranges over the windows w_{-k} ... w_{-k-n+1}, k >= 1;
    ``rightN_inf`` over w_k ... w_{k+n-1}, k >= 1.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if domain == "allZ_sup":
        val = extreme_window_product(w, n, None, None, "sup")
    elif domain == "allZ_inf":
        val = extreme_window_product(w, n, None, None, "inf")
    elif domain == "leftN_sup":
        val = extreme_window_product(w, n, None, -n, "sup")
    elif domain == "rightN_inf":
        val = extreme_window_product(w, n, 1, None, "inf")
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return nth_root(val, n)


# -- unilateral sequences -------------------------------------------------------


@dataclass(frozen=True)
class UnilateralSums:
    """The three quantities testing conditions (ii)-(iv) for weights indexed by N.

    ``q2`` is min over n <= horizon of sup_k |w_k ... w_{k+n-1}|, ``q2_witness``
    the first n where that sup drops below 1 (None if none up to the horizon).
    ``q3``/``q4`` are ``math.inf`` when a divergence certificate was found.
    """

    q2: float
    q2_witness: Optional[int]
    q3: object
    q4: object
    horizon: int

    @property
    def q3_finite(self) -> bool:
        return self.q3 != math.inf

    @property
    def q4_finite(self) -> bool:
        return self.q4 != math.inf

    def to_dict(self) -> dict:
        enc = lambda q: "inf" if q == math.inf else to_json_scalar(q)
        return {"q2": float(self.q2), "q2_witness": self.q2_witness, "q3": enc(self.q3),
                "q4": enc(self.q4), "horizon": self.horizon}


def _abs_pair(x):
    x = abs(Fraction(x))
    return x.numerator, x.denominator


def _unilateral_q2(w: WeightSequence, horizon: int):
    first_tail = max(w.core_end, 1)
    starts = range(1, first_tail + len(w.right_tail))
    best = None
    witness = None
    if w.exact:
        # unreduced integer pairs keep the scan cheap; only comparisons are needed
        nums = [1] * len(starts)
        dens = [1] * len(starts)
        best_pair = None
        for n in range(1, horizon + 1):
            top = None
            for idx, k in enumerate(starts):
                p, q = _abs_pair(weight_at(w, k + n - 1))
                nums[idx] *= p
                dens[idx] *= q
                if top is None or nums[idx] * top[1] > top[0] * dens[idx]:
                    top = (nums[idx], dens[idx])
            if witness is None and top[0] < top[1]:
                witness = n
            if best_pair is None or top[0] * best_pair[1] < best_pair[0] * top[1]:
                best_pair = top
        best = best_pair[0] / best_pair[1]
    else:
        prods = [1.0] * len(starts)
        for n in range(1, horizon + 1):
            for idx, k in enumerate(starts):
                prods[idx] *= abs(weight_at(w, k + n - 1))
            top = max(prods)
            if witness is None and top < 1.0:
                witness = n
            best = top if best is None else min(best, top)
    return float(best), witness


def _unilateral_q3(w: WeightSequence, rtol: float):
    """sup_k sum_{n>=0} |w_k ... w_{k+n}| in closed form over one period."""
    R = len(w.right_tail)
    G = abs(_prod(w.right_tail, w.one))
    if sign_vs_one(G, w.exact, rtol) >= 0:
        return math.inf
    first_tail = max(w.core_end, 1)

    def tail_sum(k):
        acc, prod = 0 * w.one, abs(w.one)
        for n in range(R):
            prod = prod * abs(weight_at(w, k + n))
            acc = acc + prod
        return acc / (1 - G)

    totals = [tail_sum(k) for k in range(first_tail, first_tail + R)]
    anchor = totals[0]
    for k in range(1, first_tail):
        acc, prod = 0 * w.one, abs(w.one)
        for n in range(k, first_tail):
            prod = prod * abs(weight_at(w, n))
            acc = acc + prod
        totals.append(acc + prod * anchor)
    return max(totals)


def _unilateral_q4(w: WeightSequence, rtol: float):
    """sup_k sum_{n=0}^{k-1} |w_k w_{k-1} ... w_{k-n}| via T_k = |w_k| (1 + T_{k-1})."""
    R = len(w.right_tail)
    G = abs(_prod(w.right_tail, w.one))
    if sign_vs_one(G, w.exact, rtol) >= 0:
        return math.inf
    first_tail = max(w.core_end, 1)
    zero = 0 * abs(w.one)
    T = [zero]
    for k in range(1, first_tail + R - 1):
        T.append(abs(weight_at(w, k)) * (1 + T[-1]))
    candidates = T[1:]
    # along each residue class T_{k+R} = G T_k + c_k; the class limit is c_k / (1 - G)
    for k in range(first_tail - 1, first_tail + R - 1):
        c, prod = zero, abs(w.one)
        for j in range(k + R, k, -1):
            prod = prod * abs(weight_at(w, j))
            c = c + prod
        candidates.append(c / (1 - G))
    return max(candidates)


def unilateral_sums(w: WeightSequence, horizon: int, rtol: float = DEFAULT_RTOL) -> UnilateralSums:
    """Evaluate the (ii)/(iii)/(iv) quantities for the weights w_1, w_2, ... of ``w``.

    q3 and q4 are exact closed forms (geometric over one right-tail period);
    they are flagged infinite when the right-tail period product is >= 1,
    which makes every tail term bounded below.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    q2, witness = _unilateral_q2(w, horizon)
    return UnilateralSums(q2, witness, _unilateral_q3(w, rtol), _unilateral_q4(w, rtol), horizon)


# -- dichotomy constants ----------------------------------------------------------


@dataclass(frozen=True)
class DichotomyConstants:
    """Geometric bounds for a class-C sequence.

    beta, s: |w_{-j} ... w_{-j-k+1}| <= beta s^k and 1/|w_j ... w_{j+k-1}| <= beta s^k (j, k >= 1).
    C, t:    ||B^n x|| <= C t^n ||x|| on indices <= 0, ||B^-n x|| <= C t^n ||x|| on indices > 0.
    """

    beta: float
    s: float
    C: float
    t: float

    def to_dict(self) -> dict:
        return {"beta": float(self.beta), "s": float(self.s), "C": float(self.C), "t": float(self.t)}


def _sup_leftward_ratio(w: WeightSequence, rate, ends: Iterable[int]) -> float:
    """sup over the given ends e and k >= 0 of |w_e w_{e-1} ... w_{e-k+1}| / rate^k."""
    a, L = w.core_start, len(w.left_tail)
    rate = float(rate)
    best = 1.0
    for e in ends:
        ratio = 1.0
        for k in range(1, max(0, e - a + 1) + L + 1):
            ratio *= abs(complex(weight_at(w, e - k + 1))) / rate
            best = max(best, ratio)
    return best


def _sup_rightward_ratio(w: WeightSequence, rate, starts: Iterable[int]) -> float:
    """sup over the given starts j and k >= 0 of 1 / (|w_j ... w_{j+k-1}| rate^k)."""
    b, R = w.core_end, len(w.right_tail)
    rate = float(rate)
    best = 1.0
    for j in starts:
        ratio = 1.0
        for k in range(1, max(0, b - j) + R + 1):
            ratio /= abs(complex(weight_at(w, j + k - 1))) * rate
            best = max(best, ratio)
    return best


def _left_ends(w: WeightSequence, last: int) -> range:
    """Ends e <= last covering every residue of windows that lie in the left tail."""
    L = len(w.left_tail)
    return range(min(last, w.core_start - 1) - L + 1, last + 1)


def _right_starts(w: WeightSequence, first: int) -> range:
    R = len(w.right_tail)
    return range(first, max(first, w.core_end) + R)


def _admissible(value: float) -> float:
    return max(value, 1.0) * (1.0 + _CONSTANT_SLACK)


def dichotomy_constants(w: WeightSequence, margin: float = 0.0,
                        rtol: float = DEFAULT_RTOL) -> DichotomyConstants:
    """(beta, s, C, t) for a class-C sequence.

    s defaults to the sharp rate max(g_left, 1/g_right); for eventually periodic
    weights the transient ratio stays bounded at that rate, so beta is finite.
    ``margin`` in [0, 1) moves s that fraction of the way towards 1.  The
    suprema defining beta and C are taken over a finite window that is
    provably exhaustive: once a product window lies in a tail, extending it by
    one period multiplies the ratio by a factor <= 1.
    """
    from .classify import classify_shadowing

    report = classify_shadowing(w, rtol)
    if report.shadowing_class == "BOUNDARY":
        raise ClassificationError("weights sit on the boundary of class C", report)
    if report.shadowing_class != "C":
        raise ClassificationError(f"weights are class {report.shadowing_class}, not C", report)
    if not 0 <= margin < 1:
        raise ValueError("margin must lie in [0, 1)")
    rates = report.rates
    sharp = max(rates.g_left, 1 / rates.g_right)
    s = sharp if margin == 0 else float(sharp) + margin * (1 - float(sharp))
    beta = max(_sup_leftward_ratio(w, s, _left_ends(w, -1)),
               _sup_rightward_ratio(w, s, _right_starts(w, 1)))
    C = max(_sup_leftward_ratio(w, s, _left_ends(w, 0)),
            _sup_rightward_ratio(w, s, _right_starts(w, 2)))
    return DichotomyConstants(beta=_admissible(beta), s=float(s), C=_admissible(C), t=float(s))


@dataclass(frozen=True)
class SplittingConstants:
    """(C, t) with ||T^n|| <= C t^n on the contracting pieces of the splitting."""

    C: float
    t: float
    splitting: Literal["A", "B", "C"]


def splitting_constants(w: WeightSequence, rtol: float = DEFAULT_RTOL) -> SplittingConstants:
    """Contraction constants for the splitting used to shadow: A -> (X, 0), B -> (0, X), C -> (M, N)."""
    from .classify import classify_shadowing

    report = classify_shadowing(w, rtol)
    cls = report.shadowing_class
    rates = report.rates
    a, b = w.core_start, w.core_end
    L, R = len(w.left_tail), len(w.right_tail)
    # ends (starts) reach one full period into the far tail, so every residue
    # gets windows lying wholly inside that tail as well as windows crossing the core
    if cls == "A":
        t = max(rates.g_left, rates.g_right)
        return SplittingConstants(_admissible(_sup_leftward_ratio(w, t, range(a - L, b + 2 * R))), float(t), "A")
    if cls == "B":
        t = 1 / min(rates.g_left, rates.g_right)
        return SplittingConstants(_admissible(_sup_rightward_ratio(w, t, range(a - 2 * L, b + R))), float(t), "B")
    if cls == "C":
        d = dichotomy_constants(w, rtol=rtol)
        return SplittingConstants(d.C, d.t, "C")
    raise ClassificationError(f"no hyperbolic-type splitting for class {cls}", report)


__all__ = [
    "WeightSequence", "TailRates", "UnilateralSums", "DichotomyConstants", "SplittingConstants",
    "parse_weight_spec", "weight_at", "weight_slice", "partial_product", "window_abs_product", "tail_rates",
    "finite_sup_geomean", "extreme_window_product", "unilateral_sums", "dichotomy_constants",
    "splitting_constants",
]
