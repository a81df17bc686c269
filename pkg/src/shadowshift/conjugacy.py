"""Conjugacies between B_w and small Lipschitz perturbations B_w + alpha (class C).

Everything rests on the linear operator F(phi) = phi o B - B o phi, whose
inverse on maps with phi_j = 0 is the two-sided orbit series

    F^-1(eta)(x) = sum_{t>=1} B^{t-1} Q eta(B^-t x) - sum_{t>=0} B^-(t+1) P eta(B^t x),

with P/Q the coordinate projections onto indices >= j and < j.  The
conjugacy h = I + u solves u = F^-1(alpha o (I + u)), a contraction when
alpha is small; its inverse h' = I + v is an explicit series along the
orbit of S = B + alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._scalars import parse_scalar, to_json_scalar
from .errors import BudgetExceededError, ConvergenceError
from .spaces import SeqVector, SpaceSpec, iterate, norm
from .weights import DichotomyConstants, WeightSequence, dichotomy_constants, weight_slice


# -- perturbation maps ----------------------------------------------------------


@dataclass(frozen=True)
class PerturbationMap:
    """A bounded Lipschitz map X -> X with finitely supported outputs.

    ``point`` evaluates on a SeqVector.  ``dense`` evaluates many points at once:
    it receives an array whose rows are points sampled on the index grid
    starting at ``lo`` and returns the outputs on the same grid.  The grid is
    always wide enough to hold ``output_window`` and ``input_window``.
    """

    kind: str
    output_window: tuple
    sup_bound: float
    lip_bound: float
    space: SpaceSpec
    point: Callable[[SeqVector], SeqVector] = field(repr=False)
    dense: Optional[Callable[[np.ndarray, int], np.ndarray]] = field(default=None, repr=False)
    input_window: Optional[tuple] = None
    spec: Optional[dict] = field(default=None, repr=False)

    def __call__(self, x: SeqVector) -> SeqVector:
        return self.point(x)

    eval = __call__

    def batch(self, rows: np.ndarray, lo: int) -> np.ndarray:
        if self.dense is not None:
            return self.dense(rows, lo)
        out = np.zeros_like(rows)
        for r, row in enumerate(rows):
            _place(out[r], lo, self.point(_to_vector(row, lo)))
        return out


def _row_norms(space: SpaceSpec, rows: np.ndarray) -> np.ndarray:
    mags = np.abs(rows)
    if space.kind == "c0":
        return mags.max(axis=-1) if mags.shape[-1] else np.zeros(mags.shape[:-1])
    p = float(space.p)
    return (mags ** p).sum(axis=-1) ** (1.0 / p)


def _place(target: np.ndarray, lo: int, v: SeqVector):
    """Add v into a dense row whose first entry is index lo."""
    for i, c in v.items():
        target[i - lo] += complex(c) if np.iscomplexobj(target) else float(c)


def _to_vector(row: np.ndarray, lo: int) -> SeqVector:
    vals = row.tolist()
    return SeqVector(lo, tuple(vals))


def zero_map(space: SpaceSpec) -> PerturbationMap:
    return constant_map(space, SeqVector.zero())


def constant_map(space: SpaceSpec, vector: SeqVector) -> PerturbationMap:
    window = (vector.lo, vector.hi) if not vector.is_zero() else (0, 0)

    def dense(rows, lo):
        out = np.zeros_like(rows)
        if not vector.is_zero():
            _place(out[0], lo, vector)
            out[1:] = out[0]
        return out

    size = norm(space, vector)
    return PerturbationMap("constant", window, float(size), 0.0, space, lambda x: vector, dense,
                           spec={"kind": "constant", "vector": vector.to_json()})


def _clamp(t):
    return t / (1 + abs(t))


def coordinate_rank_one(space: SpaceSpec, index: int, direction: SeqVector, gain) -> PerturbationMap:
    """x -> gain * clamp(x_index) * direction with clamp(t) = t / (1 + |t|)."""
    gain = float(gain)
    dnorm = float(norm(space, direction))
    bound = abs(gain) * dnorm
    dvec = direction

    def point(x):
        return dvec.scale(gain * _clamp(x[index]))

    def dense(rows, lo):
        out = np.zeros_like(rows)
        col = rows[:, index - lo]
        factor = gain * col / (1 + np.abs(col))
        drow = np.zeros(rows.shape[1], dtype=rows.dtype)
        _place(drow, lo, dvec)
        return factor[:, None] * drow[None, :]

    return PerturbationMap("coordinate_rank_one", (direction.lo, direction.hi), bound, bound, space,
                           point, dense, input_window=(index, index),
                           spec={"kind": "coordinate_rank_one", "functional_index": index,
                                 "direction": direction.to_json(), "gain": gain})


def matrix_norm_bound(space: SpaceSpec, matrix: np.ndarray) -> float:
    """Operator-norm bound of a finite matrix acting between coordinate windows."""
    mags = np.abs(np.asarray(matrix))
    if mags.size == 0:
        return 0.0
    rows = float(mags.sum(axis=1).max())   # sup-norm to sup-norm
    cols = float(mags.sum(axis=0).max())   # l1 to l1
    if space.kind == "c0":
        return rows
    p = float(space.p)
    # Riesz-Thorin interpolation between the l1 and sup bounds
    return cols ** (1.0 / p) * rows ** (1.0 - 1.0 / p)


def affine_map(space: SpaceSpec, matrix, in_lo: int, out_lo: int,
               offset: Optional[SeqVector] = None) -> PerturbationMap:
    """x -> M x[in_lo : in_lo + cols] placed from out_lo, plus offset (unbounded; Lip = ||M||)."""
    M = np.asarray(matrix, dtype=complex if np.iscomplexobj(np.asarray(matrix)) else float)
    if M.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    nrows, ncols = M.shape
    offset = offset if offset is not None else SeqVector.zero()
    lip = matrix_norm_bound(space, M)
    out_lo_all = min(out_lo, offset.lo) if not offset.is_zero() else out_lo
    out_hi_all = max(out_lo + nrows - 1, offset.hi) if not offset.is_zero() else out_lo + nrows - 1

    def point(x):
        col = np.array([complex(x[in_lo + c]) if np.iscomplexobj(M) else float(x[in_lo + c])
                        for c in range(ncols)])
        vals = M @ col
        return SeqVector(out_lo, tuple(v.item() for v in vals)) + offset

    def dense(rows, lo):
        out = np.zeros(rows.shape, dtype=np.result_type(rows, M))
        out[:, out_lo - lo:out_lo - lo + nrows] = rows[:, in_lo - lo:in_lo - lo + ncols] @ M.T
        if not offset.is_zero():
            orow = np.zeros(rows.shape[1], dtype=out.dtype)
            _place(orow, lo, offset)
            out += orow[None, :]
        return out

    return PerturbationMap("affine", (out_lo_all, out_hi_all), math.inf, lip, space, point, dense,
                           input_window=(in_lo, in_lo + ncols - 1))


def _cutoff(t):
    """1 on [0, 1], 2 - t on [1, 2], 0 beyond."""
    return np.clip(2.0 - t, 0.0, 1.0)


def extend_lipschitz(alpha: PerturbationMap, kind: Optional[str] = None) -> PerturbationMap:
    """phi(x) = alpha(0) + rho(||x||) (alpha(x) - alpha(0)), rho the piecewise linear cutoff.

    phi agrees with alpha on the unit ball and is constant outside the ball of
    radius 2.  Since rho(r) r <= 1, ||phi|| <= ||alpha(0)|| + Lip(alpha); phi is
    also a convex combination of two values of alpha on the 2-ball.
    Lip(phi) <= 3 Lip(alpha).
    """
    if alpha.kind == "constant":
        return alpha
    space = alpha.space
    base = alpha.point(SeqVector.zero())
    base_norm = float(norm(space, base))
    sup = min(alpha.sup_bound, base_norm + alpha.lip_bound)

    def point(x):
        r = float(_cutoff(float(norm(space, x))))
        if r == 0.0:
            return base
        return base + (alpha.point(x) - base).scale(r)

    def dense(rows, lo):
        weights = _cutoff(_row_norms(space, rows))
        brow = np.zeros(rows.shape[1], dtype=rows.dtype)
        _place(brow, lo, base)
        vals = alpha.batch(rows, lo)
        return brow[None, :] + weights[:, None] * (vals - brow[None, :])

    return PerturbationMap(kind or alpha.kind, alpha.output_window, sup, 3.0 * alpha.lip_bound, space,
                           point, dense, input_window=alpha.input_window, spec=alpha.spec)


def cutoff_affine(space: SpaceSpec, matrix, in_lo: int, out_lo: int,
                  offset: Optional[SeqVector] = None) -> PerturbationMap:
    """Lipschitz cutoff of the affine map x -> M x + offset (bounded on all of X)."""
    spec = {"kind": "cutoff_affine",
            "matrix_window": {"in_lo": in_lo, "out_lo": out_lo,
                              "matrix": [[to_json_scalar(complex(v) if isinstance(v, complex) else float(v))
                                          for v in row] for row in np.asarray(matrix).tolist()]}}
    if offset is not None and not offset.is_zero():
        spec["matrix_window"]["offset"] = offset.to_json()
    mapped = extend_lipschitz(affine_map(space, matrix, in_lo, out_lo, offset), kind="cutoff_affine")
    return PerturbationMap(mapped.kind, mapped.output_window, mapped.sup_bound, mapped.lip_bound,
                           space, mapped.point, mapped.dense, mapped.input_window, spec)


def custom_map(space: SpaceSpec, fn: Callable[[SeqVector], SeqVector], output_window: Sequence[int],
               sup_bound: float, lip_bound: float,
               input_window: Optional[Sequence[int]] = None) -> PerturbationMap:
    """Wrap a user map; its declared bounds are trusted, not proven."""
    return PerturbationMap("custom", tuple(output_window), float(sup_bound), float(lip_bound), space,
                           fn, None, tuple(input_window) if input_window else None)


def perturbation_from_spec(doc: dict, space: SpaceSpec, exact: bool = False) -> PerturbationMap:
    """Build a map from its JSON description (kinds constant, coordinate_rank_one, cutoff_affine)."""
    kind = doc.get("kind")
    if kind == "constant":
        return constant_map(space, SeqVector.from_json(doc["vector"], exact))
    if kind == "coordinate_rank_one":
        return coordinate_rank_one(space, int(doc["functional_index"]),
                                   SeqVector.from_json(doc["direction"]), doc.get("gain", 1.0))
    if kind == "cutoff_affine":
        mw = doc["matrix_window"]
        matrix = [[parse_scalar(v) for v in row] for row in mw["matrix"]]
        is_c = any(isinstance(v, complex) for row in matrix for v in row)
        matrix = np.array([[complex(v) if is_c else float(v) for v in row] for row in matrix])
        offset = SeqVector.from_json(mw["offset"]) if "offset" in mw else None
        return cutoff_affine(space, matrix, int(mw["in_lo"]), int(mw["out_lo"]), offset)
    raise ValueError(f"unknown perturbation kind {kind!r}")


# -- constants and budgets ----------------------------------------------------------


def _constants(w: WeightSequence, normalization: int) -> DichotomyConstants:
    return dichotomy_constants(w.shifted(normalization) if normalization else w)


def epsilon_budget(w: WeightSequence, space: SpaceSpec, safety: float = 0.5,
                   normalization: int = 0) -> float:
    """Largest admissible max(sup, Lip) of a perturbation: (1 - s) / (2 beta) * safety."""
    d = _constants(w, normalization)
    return (1 - d.s) / (2 * d.beta) * safety


def _series_lengths(d: DichotomyConstants, sup: float, tol: float):
    """Terms kept on each side so that each certified remainder is <= tol / 2.

    The t-th term is at most beta s^(t+1) sup on the P side (t >= 0) and
    beta s^(t-1) sup on the Q side (t >= 1).
    """
    if sup == 0:
        return 0, 0, 0.0
    scale = d.beta * sup / (1 - d.s)
    log_s = math.log(d.s)
    n_p = max(0, math.ceil(math.log(tol / 2 / scale) / log_s - 1))
    n_q = max(0, math.ceil(math.log(tol / 2 / scale) / log_s))
    tail = scale * (d.s ** (n_p + 1) + d.s ** n_q)
    return n_p, n_q, tail


@dataclass(frozen=True)
class SeriesValue:
    value: SeqVector
    tail_bound: float
    p_terms: int
    q_terms: int


def _projections(v: SeqVector, j: int):
    return v.restrict(None, j - 1), v.restrict(j, None)


def f_inverse_eval(w: WeightSequence, space: SpaceSpec, eta: PerturbationMap, x: SeqVector,
                   tol: float, normalization: int = 0) -> SeriesValue:
    """F^-1(eta)(x), truncated where the certified geometric remainder drops below tol.

    Works on sparse vectors, so exact weights and exact eta values give exact terms.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = _constants(w, normalization)
    j = normalization
    n_p, n_q, tail = _series_lengths(d, eta.sup_bound, tol)
    # P side: sum_{t < n_p} B^-(t+1) P eta(B^t x), nested from the far end
    forward = [x]
    for _ in range(n_p - 1):
        forward.append(iterate(w, space, forward[-1], 1))
    acc = SeqVector.zero()
    for t in range(n_p - 1, -1, -1):
        acc = iterate(w, space, acc + _projections(eta(forward[t]), j)[1], -1)
    p_part = acc
    # Q side: sum_{1 <= t <= n_q} B^(t-1) Q eta(B^-t x)
    backward = [x]
    for _ in range(n_q):
        backward.append(iterate(w, space, backward[-1], -1))
    acc = SeqVector.zero()
    for t in range(n_q, 0, -1):
        acc = iterate(w, space, acc, 1) + _projections(eta(backward[t]), j)[0]
    return SeriesValue(acc - p_part, tail, n_p, n_q)


# -- dense orbit-window machinery --------------------------------------------------


class _Grid:
    """Index grid [lo, lo + width) with the shift acting on dense rows."""

    def __init__(self, w: WeightSequence, lo: int, hi: int, dtype):
        self.lo, self.width, self.dtype = lo, hi - lo + 1, dtype
        self.weights = np.array([complex(v) if dtype == complex else float(v)
                                 for v in weight_slice(w, lo, hi)], dtype=dtype)

    def dense(self, v: SeqVector) -> np.ndarray:
        row = np.zeros(self.width, dtype=self.dtype)
        _place(row, self.lo, v)
        return row

    def sparse(self, row: np.ndarray) -> SeqVector:
        vals = row.tolist()
        if self.dtype != complex:
            vals = [float(v) for v in vals]
        return SeqVector(self.lo, tuple(vals))

    def forward(self, rows: np.ndarray) -> np.ndarray:
        """B: (B x)_i = w_{i+1} x_{i+1}."""
        out = np.zeros_like(rows)
        out[..., :-1] = self.weights[1:] * rows[..., 1:]
        return out

    def backward(self, rows: np.ndarray) -> np.ndarray:
        """B^-1: (B^-1 x)_i = x_{i-1} / w_i."""
        out = np.zeros_like(rows)
        out[..., 1:] = rows[..., :-1] / self.weights[1:]
        return out

    def split_mask(self, j: int) -> np.ndarray:
        """True on indices >= j (the P side)."""
        return np.arange(self.lo, self.lo + self.width) >= j


def _window_series(grid: _Grid, values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Rows U_t = sum_{r>=1} B^(r-1) Q A_{t-r} - sum_{r>=0} B^-(r+1) P A_{t+r} over the window."""
    count = values.shape[0]
    q_vals = np.where(mask, 0, values)
    p_vals = np.where(mask, values, 0)
    lower = np.zeros_like(values)
    for k in range(1, count):
        lower[k] = grid.forward(lower[k - 1]) + q_vals[k - 1]
    upper = np.zeros_like(values)
    upper[count - 1] = grid.backward(p_vals[count - 1])
    for k in range(count - 2, -1, -1):
        upper[k] = grid.backward(p_vals[k] + upper[k + 1])
    return lower - upper


@dataclass(frozen=True)
class ConjugacyResult:
    point: SeqVector
    image: SeqVector
    series_tail_bound: float
    fixed_point_iterations: int
    residual: float
    error_bound: float = 0.0
    contraction_rates: tuple = ()
    window: int = 0

    @property
    def correction(self) -> SeqVector:
        return self.image - self.point

    def to_json(self) -> dict:
        return {"point": self.point.to_json(), "image": self.image.to_json(),
                "series_tail_bound": self.series_tail_bound,
                "fixed_point_iterations": self.fixed_point_iterations,
                "residual": self.residual, "error_bound": self.error_bound,
                "contraction_rates": list(self.contraction_rates), "window": self.window}


def _check_budget(w, space, alpha, normalization):
    budget = epsilon_budget(w, space, normalization=normalization)
    worst = max(alpha.sup_bound, alpha.lip_bound)
    if worst > budget:
        raise BudgetExceededError(f"perturbation size {worst:.6g} exceeds the budget {budget:.6g}")
    return budget


def _dtype_for(w: WeightSequence, alpha: PerturbationMap, x: SeqVector):
    cplx = w.scalar_field == "complex" or any(isinstance(c, complex) for c in x.coeffs)
    if alpha.spec and "matrix_window" in alpha.spec:
        cplx = cplx or any(isinstance(v, list) for row in alpha.spec["matrix_window"]["matrix"] for v in row)
    return complex if cplx else float


def _window_radius(d: DichotomyConstants, lip: float, sup: float, tol: float):
    """Window half-width W and the certified effect of cutting the orbit at |t| = W.

    With lam = (1 + s) / 2 the truncation error e_t obeys a contraction in the
    weighted norm sup_t ||e_t|| lam^-(W - |t|) with factor
    kappa = lip beta (1/lam + s) / (1 - s/lam) < 1 under the budget, which
    gives ||e_0|| <= 2 beta sup / ((1 - s)(1 - kappa)) lam^W.
    """
    s, beta = d.s, d.beta
    lam = (1 + s) / 2
    kappa = lip * beta * (1 / lam + s) / (1 - s / lam)
    if sup == 0:
        return 0, 0.0, kappa
    if kappa >= 1:
        raise BudgetExceededError("perturbation too large for a certified window bound")
    E = 2 * beta * sup / ((1 - s) * (1 - kappa))
    W = max(1, math.ceil(math.log(tol / (2 * E)) / math.log(lam)))
    return W, E * lam ** W, kappa


def _grid_for(w, x: SeqVector, alpha: PerturbationMap, j: int, W: int, dtype) -> _Grid:
    lows = [alpha.output_window[0], j]
    highs = [alpha.output_window[1], j]
    if alpha.input_window:
        lows.append(alpha.input_window[0])
        highs.append(alpha.input_window[1])
    lo = min(min(lows) - 2 * W, (x.lo if not x.is_zero() else 0) - W) - 3
    hi = max(max(highs) + 2 * W, (x.hi if not x.is_zero() else 0) + W) + 3
    return _Grid(w, lo, hi, dtype)


def conjugate_forward(w: WeightSequence, space: SpaceSpec, alpha: PerturbationMap, x: SeqVector,
                      tol: float = 1e-10, normalization: int = 0,
                      max_iter: int = 500) -> ConjugacyResult:
    """h(x) = x + u(x) where u = F^-1(alpha o (I + u)).

    u is iterated on the orbit points B^t x, |t| <= W: each sweep evaluates alpha
    at p_t + u_t and recomputes every u_t from the two orbit series.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = _constants(w, normalization)
    _check_budget(w, space, alpha, normalization)
    W, window_tail, _ = _window_radius(d, alpha.lip_bound, alpha.sup_bound, tol)
    dtype = _dtype_for(w, alpha, x)
    grid = _grid_for(w, x, alpha, normalization, W, dtype)
    count = 2 * W + 1
    orbit = np.zeros((count, grid.width), dtype=dtype)
    orbit[W] = grid.dense(x)
    for k in range(W + 1, count):
        orbit[k] = grid.forward(orbit[k - 1])
    for k in range(W - 1, -1, -1):
        orbit[k] = grid.backward(orbit[k + 1])
    mask = grid.split_mask(normalization)
    u = np.zeros_like(orbit)
    diffs = []
    q = alpha.lip_bound * d.beta * (1 + d.s) / (1 - d.s)
    for it in range(1, max_iter + 1):
        new = _window_series(grid, alpha.batch(orbit + u, grid.lo), mask)
        diff = float(_row_norms(space, new - u).max())
        u = new
        diffs.append(diff)
        if diff < tol:
            break
    else:
        raise ConvergenceError(f"fixed point not reached in {max_iter} sweeps")
    floor = 1e-13 * max(1.0, float(_row_norms(space, u).max()))
    rates = tuple(b / a for a, b in zip(diffs, diffs[1:]) if a > floor and b > floor)
    iterate_error = q / (1 - q) * diffs[-1] if q < 1 else math.inf
    image = x + grid.sparse(u[W])
    return ConjugacyResult(x, image, window_tail, it, diffs[-1],
                           error_bound=window_tail + iterate_error, contraction_rates=rates, window=W)


def perturbed_step(w: WeightSequence, space: SpaceSpec, alpha: PerturbationMap, x: SeqVector) -> SeqVector:
    """S x = B x + alpha(x)."""
    return iterate(w, space, x, 1) + alpha(x)


def conjugate_inverse(w: WeightSequence, space: SpaceSpec, alpha: PerturbationMap, x: SeqVector,
                      tol: float = 1e-10, normalization: int = 0,
                      max_iter: int = 500) -> ConjugacyResult:
    """h'(x) = x + v(x), v = -F^-1 evaluated along the S-orbit with eta_t = alpha(S^t x).

    S^-1 is applied by iterating y <- B^-1 (z - alpha(y)), a contraction with
    factor Lip(alpha) / min|w|.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = _constants(w, normalization)
    _check_budget(w, space, alpha, normalization)
    n_p, n_q, tail = _series_lengths(d, alpha.sup_bound, tol)
    W = max(n_p, n_q)
    contraction = alpha.lip_bound / float(w.min_abs)
    if contraction >= 1:
        raise ConvergenceError("S^-1 solve is not a contraction for this perturbation")
    dtype = _dtype_for(w, alpha, x)
    grid = _grid_for(w, x, alpha, normalization, W, dtype)
    count = 2 * W + 1
    pts = np.zeros((count, grid.width), dtype=dtype)
    pts[W] = grid.dense(x)
    for k in range(W + 1, count):
        pts[k] = grid.forward(pts[k - 1]) + alpha.batch(pts[k - 1][None, :], grid.lo)[0]
    inner = 0
    for k in range(W - 1, -1, -1):
        target = pts[k + 1]
        y = grid.backward(target)
        for sweep in range(1, max_iter + 1):
            nxt = grid.backward(target - alpha.batch(y[None, :], grid.lo)[0])
            change = float(_row_norms(space, nxt - y))
            y = nxt
            scale = max(1.0, float(_row_norms(space, y)))
            if change <= 1e-3 * tol * scale or change == 0.0:
                break
        else:
            raise ConvergenceError("S^-1 fixed point did not converge")
        inner = max(inner, sweep)
        pts[k] = y
    values = alpha.batch(pts, grid.lo)
    v = -_window_series(grid, values, grid.split_mask(normalization))[W]
    image = x + grid.sparse(v)
    return ConjugacyResult(x, image, tail, inner, 0.0, error_bound=tail, window=W)


def conjugacy_residual(w: WeightSequence, space: SpaceSpec, alpha: PerturbationMap, x: SeqVector,
                       tol: float = 1e-10, normalization: int = 0) -> float:
    """||h(B x) - (B + alpha)(h(x))|| with both values of h computed independently."""
    hx = conjugate_forward(w, space, alpha, x, tol, normalization).image
    hbx = conjugate_forward(w, space, alpha, iterate(w, space, x, 1), tol, normalization).image
    return float(norm(space, hbx - perturbed_step(w, space, alpha, hx)))


__all__ = [
    "PerturbationMap", "ConjugacyResult", "SeriesValue", "zero_map", "constant_map",
    "coordinate_rank_one", "affine_map", "cutoff_affine", "custom_map", "extend_lipschitz",
    "perturbation_from_spec", "matrix_norm_bound", "epsilon_budget", "f_inverse_eval",
    "conjugate_forward", "conjugate_inverse", "conjugacy_residual", "perturbed_step",
]
