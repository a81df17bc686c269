"""Finitely supported sequences, their norms, and the shift operators acting on them."""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Optional

from ._scalars import ScalarParseError, is_exact, parse_scalar, to_json_scalar
from .weights import WeightSequence, partial_product, weight_slice

OperatorKind = Literal["bilateral", "unilateral_backward", "unilateral_forward"]
OPERATOR_KINDS = ("bilateral", "unilateral_backward", "unilateral_forward")


@dataclass(frozen=True)
class SpaceSpec:
    kind: Literal["lp", "c0"]
    p: Optional[float] = None

    def __post_init__(self):
        if self.kind == "lp":
            if self.p is None or not (1 <= self.p < math.inf):
                raise ValueError(f"lp needs 1 <= p < inf, got {self.p!r}")
        elif self.kind == "c0":
            object.__setattr__(self, "p", None)
        else:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "SpaceSpec":
        """Accepts ``c0``, ``lp:P`` or ``lP`` (e.g. ``l2``)."""
        t = text.strip().lower()
        if t == "c0":
            return cls("c0")
        if t.startswith("lp:"):
            t = t[3:]
        elif t.startswith("l"):
            t = t[1:]
        try:
            p = float(t)
        except ValueError as exc:
            raise ValueError(f"cannot read space {text!r}") from exc
        return cls("lp", int(p) if p.is_integer() else p)

    def __str__(self):
        return "c0" if self.kind == "c0" else f"lp:{self.p:g}"


C0 = SpaceSpec("c0")


@dataclass(frozen=True)
class SeqVector:
    """x with x_{lo + j} = coeffs[j] and zeros elsewhere; stored trimmed."""

    lo: int
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        start, stop = 0, len(coeffs)
        while start < stop and coeffs[start] == 0:
            start += 1
        while stop > start and coeffs[stop - 1] == 0:
            stop -= 1
        if start == stop:
            object.__setattr__(self, "lo", 0)
            object.__setattr__(self, "coeffs", ())
        else:
            object.__setattr__(self, "lo", int(self.lo) + start)
            object.__setattr__(self, "coeffs", coeffs[start:stop])

    @classmethod
    def zero(cls) -> "SeqVector":
        return cls(0, ())

    @classmethod
    def basis(cls, n: int, value=1) -> "SeqVector":
        """value * e_n; the default value is the exact integer 1."""
        return cls(n, (value,))

    @classmethod
    def from_mapping(cls, entries: Mapping[int, object]) -> "SeqVector":
        entries = {int(k): v for k, v in entries.items() if v != 0}
        if not entries:
            return cls.zero()
        lo, hi = min(entries), max(entries)
        return cls(lo, tuple(entries.get(i, 0) for i in range(lo, hi + 1)))

    @property
    def hi(self) -> int:
        """Last stored index (lo - 1 for the zero vector)."""
        return self.lo + len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, i: int):
        j = i - self.lo
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return 0

    def items(self):
        for j, c in enumerate(self.coeffs):
            if c != 0:
                yield self.lo + j, c

    def _combine(self, other: "SeqVector", sign: int) -> "SeqVector":
        if other.is_zero():
            return self
        if self.is_zero():
            return other if sign > 0 else -other
        op = operator.add if sign > 0 else operator.sub
        if self.lo == other.lo and len(self.coeffs) == len(other.coeffs):
            return SeqVector(self.lo, tuple(map(op, self.coeffs, other.coeffs)))
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        left = [0] * (self.lo - lo) + list(self.coeffs) + [0] * (hi - self.hi)
        right = [0] * (other.lo - lo) + list(other.coeffs) + [0] * (hi - other.hi)
        return SeqVector(lo, tuple(map(op, left, right)))

    def __add__(self, other: "SeqVector") -> "SeqVector":
        return self._combine(other, 1)

    def __sub__(self, other: "SeqVector") -> "SeqVector":
        return self._combine(other, -1)

    def __neg__(self) -> "SeqVector":
        return SeqVector(self.lo, tuple(-c for c in self.coeffs))

    def scale(self, factor) -> "SeqVector":
        return SeqVector(self.lo, tuple(factor * c for c in self.coeffs))

    def __mul__(self, factor) -> "SeqVector":
        return self.scale(factor)

    __rmul__ = __mul__

    def restrict(self, lo: Optional[int] = None, hi: Optional[int] = None) -> "SeqVector":
        """Coordinates inside [lo, hi] (either end may be open)."""
        if self.is_zero():
            return self
        a = self.lo if lo is None else max(lo, self.lo)
        b = self.hi if hi is None else min(hi, self.hi)
        if a > b:
            return SeqVector.zero()
        return SeqVector(a, self.coeffs[a - self.lo:b - self.lo + 1])

    def map(self, fn) -> "SeqVector":
        return SeqVector(self.lo, tuple(fn(c) for c in self.coeffs))

    def to_json(self) -> dict:
        return {"lo": self.lo, "coeffs": [to_json_scalar(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj, exact: bool = False) -> "SeqVector":
        if not isinstance(obj, Mapping) or "lo" not in obj or "coeffs" not in obj:
            raise ValueError("a vector is a JSON object {lo, coeffs}")
        try:
            coeffs = tuple(parse_scalar(c, exact) for c in obj["coeffs"])
        except ScalarParseError as exc:
            raise ValueError(str(exc)) from exc
        return cls(int(obj["lo"]), coeffs)


def norm(space: SpaceSpec, x: SeqVector):
    """Sup norm for c0, p-norm for lp; exact for c0 and p = 1 on rational data."""
    if x.is_zero():
        return 0
    if space.kind == "c0":
        return max(map(abs, x.coeffs))
    if space.p == 1:
        return sum(map(abs, x.coeffs))
    p = float(space.p)
    mags = [float(m) for m in map(abs, x.coeffs)]
    top = max(mags)
    # scale by the largest entry so huge or tiny coordinates do not overflow
    return top * math.fsum((m / top) ** p for m in mags) ** (1.0 / p)


def basis_image(w: WeightSequence, i: int, n: int, kind: OperatorKind = "bilateral"):
    """(j, factor) with T^n e_i = factor * e_j; factor 0 when T^n kills e_i.

    bilateral:           B e_k = w_k e_{k-1}, negative n allowed.
    unilateral_backward: the same on indices >= 1, with B e_1 = 0.
    unilateral_forward:  F e_k = w_k e_{k+1} on indices >= 1.
    """
    if n == 0:
        return i, w.one
    if kind == "bilateral":
        if n > 0:
            return i - n, partial_product(w, i - n + 1, i)
        return i - n, 1 / partial_product(w, i + 1, i - n)
    if n < 0:
        raise ValueError("unilateral shifts are only iterated forward")
    if i < 1:
        raise ValueError(f"index {i} outside the unilateral index set")
    if kind == "unilateral_backward":
        if i - n < 1:
            return i - n, 0 * w.one
        return i - n, partial_product(w, i - n + 1, i)
    if kind == "unilateral_forward":
        return i + n, partial_product(w, i, i + n - 1)
    raise ValueError(f"unknown operator kind {kind!r}")


def _step_bilateral(w: WeightSequence, x: SeqVector, forward: bool) -> SeqVector:
    if x.is_zero():
        return x
    if forward:
        ws = weight_slice(w, x.lo, x.hi)
        return SeqVector(x.lo - 1, tuple(map(operator.mul, ws, x.coeffs)))
    ws = weight_slice(w, x.lo + 1, x.hi + 1)
    return SeqVector(x.lo + 1, tuple(map(operator.truediv, x.coeffs, ws)))


def iterate(w: WeightSequence, space: SpaceSpec, x: SeqVector, n: int,
            kind: OperatorKind = "bilateral") -> SeqVector:
    """T^n x for the shift of the given kind (negative n = inverse, bilateral only)."""
    if n == 0 or x.is_zero():
        return x
    if kind == "bilateral" and abs(n) == 1:
        return _step_bilateral(w, x, n > 0)
    if kind != "bilateral" and x.lo < 1:
        raise ValueError("unilateral vectors live on indices >= 1")
    out = {}
    for i, c in x.items():
        j, f = basis_image(w, i, n, kind)
        if f != 0:
            out[j] = f * c
    return SeqVector.from_mapping(out)


def orbit(w: WeightSequence, space: SpaceSpec, x: SeqVector, n_from: int, n_to: int,
          kind: OperatorKind = "bilateral") -> dict:
    """{n: T^n x} for n_from <= n <= n_to, stepping one iterate at a time."""
    out = {0: x} if n_from <= 0 <= n_to else {}
    start = x if n_from <= 0 else iterate(w, space, x, n_from, kind)
    if n_from > 0:
        out[n_from] = start
    cur = start
    for n in range(max(n_from, 0) + 1, n_to + 1):
        cur = iterate(w, space, cur, 1, kind)
        out[n] = cur
    cur = x
    for n in range(-1, n_from - 1, -1):
        cur = iterate(w, space, cur, -1, kind)
        out[n] = cur
    return out


def split_MN(x: SeqVector):
    """(x_M, x_N): coordinates with index <= 0 and index > 0."""
    return x.restrict(None, 0), x.restrict(1, None)


def is_exact_vector(x: SeqVector) -> bool:
    return all(is_exact(c) for c in x.coeffs)


__all__ = [
    "SpaceSpec", "SeqVector", "C0", "OPERATOR_KINDS", "norm", "basis_image", "iterate",
    "orbit", "split_MN", "is_exact_vector",
]
