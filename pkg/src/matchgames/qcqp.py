"""Structured solvers for max{xAy | xMy >= c} over simplex pairs.

The general problem is NP-hard, but each supported game class reduces it:

* zero-sum: value is min(c', max A) for the sign-normalised bound c', and a
  solution always exists with one side pure and the other of support <= 2,
  built from a straddling row or column by a one-line convex combination;
* repeated (uniform) games: a linear program over joint distributions on
  S x T, realised exactly as a finite cycle of pure profiles via the lcm of
  the distribution's denominators;
* strictly competitive: an affine change of payoff units onto a zero-sum
  image with ratio <= 1, solved there and mapped back.

A grid oracle (floating point scan, never authoritative) cross-checks all of
them in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, Optional, Tuple

from .core import (
    REPEATED,
    STRICTLY_COMPETITIVE,
    ZERO_SUM,
    BimatrixGame,
    CycleStrategy,
    Matrix,
    bilinear,
    matrix_max,
    matrix_min,
    negate,
    pure,
)
from .errors import (
    InfeasibleError,
    MatchGamesError,
    NotStrictlyCompetitiveError,
    UnsupportedClassError,
)
from .lp import EQ, GE, OPTIMAL, LinearProgram, solve_lp


@dataclass
class QcqpSolution:
    x: Tuple[Fraction, ...]
    y: Tuple[Fraction, ...]
    value: Fraction
    support_note: str = ""
    approximate: bool = False


def _two_point_mix(lo_idx, hi_idx, lo_val, hi_val, target, size):
    """Mixed strategy on {lo_idx, hi_idx} hitting ``target`` between the values."""
    if lo_val == hi_val:
        return pure(lo_idx, size)
    lam = (target - lo_val) / (hi_val - lo_val)  # weight on the high entry
    weights = [Fraction(0)] * size
    weights[lo_idx] += 1 - lam
    weights[hi_idx] += lam
    return tuple(weights)


def achieve_value_zero_sum(a: Matrix, target: Fraction) -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...], str]:
    """Profile with x.A.y == target, one side pure, other support <= 2.

    Requires min A <= target <= max A.  Prefers the pure-row construction and
    scans indices in order, so the output is deterministic.
    """
    n_rows, n_cols = len(a), len(a[0])
    for s in range(n_rows):
        row = a[s]
        lo = next((t for t in range(n_cols) if row[t] <= target), None)
        hi = next((t for t in range(n_cols) if row[t] >= target), None)
        if lo is not None and hi is not None:
            y = _two_point_mix(lo, hi, row[lo], row[hi], target, n_cols)
            return pure(s, n_rows), y, "pure_row"
    for t in range(n_cols):
        col = [a[s][t] for s in range(n_rows)]
        lo = next((s for s in range(n_rows) if col[s] <= target), None)
        hi = next((s for s in range(n_rows) if col[s] >= target), None)
        if lo is not None and hi is not None:
            x = _two_point_mix(lo, hi, col[lo], col[hi], target, n_rows)
            return x, pure(t, n_cols), "pure_column"
    raise MatchGamesError("target outside the attainable payoff interval")


def solve_qcqp_zero_sum(a: Matrix, c: Fraction) -> QcqpSolution:
    """max{xAy | xAy <= c}: value min(c, max A), infeasible when c < min A."""
    a_min, a_max = matrix_min(a), matrix_max(a)
    if c < a_min:
        raise InfeasibleError(
            f"no profile satisfies xAy <= {c} when min A = {a_min}"
        )
    target = min(c, a_max)
    x, y, note = achieve_value_zero_sum(a, target)
    support = sum(1 for w in (y if note == "pure_row" else x) if w != 0)
    return QcqpSolution(x=x, y=y, value=target, support_note=f"{note},support={support}")


LambdaDistribution = Dict[Tuple[int, int], Fraction]


def solve_qcqp_repeated(a: Matrix, m: Matrix, c: Fraction):
    """max over joint distributions of the A-average subject to M-average >= c.

    Returns ``(lambda, (f, g))`` where ``lambda`` maps pure profiles to
    weights.  Infeasible when c > max M.
    """
    if c > matrix_max(m):
        raise InfeasibleError(f"M-average >= {c} unattainable (max M = {matrix_max(m)})")
    lam, values = _hull_lp(a, m, objective=("max_f",), f_floor=None, g_floor=c)
    return lam, values


def _hull_lp(a: Matrix, m: Matrix, objective, f_floor=None, g_floor=None,
             f_exact=None, g_exact=None):
    """LP over joint distributions with the given side constraints.

    ``objective`` is a tuple of passes applied lexicographically, each one of
    "max_f", "max_g", "max_sum".  Returns (lambda, (f, g)) or raises
    InfeasibleError.
    """
    n_rows, n_cols = len(a), len(a[0])
    cells = [(s, t) for s in range(n_rows) for t in range(n_cols)]
    n = len(cells)
    a_coeffs = [a[s][t] for s, t in cells]
    m_coeffs = [m[s][t] for s, t in cells]

    constraints = [( [Fraction(1)] * n, EQ, Fraction(1) )]
    if f_floor is not None:
        constraints.append((a_coeffs, GE, f_floor))
    if g_floor is not None:
        constraints.append((m_coeffs, GE, g_floor))
    if f_exact is not None:
        constraints.append((a_coeffs, EQ, f_exact))
    if g_exact is not None:
        constraints.append((m_coeffs, EQ, g_exact))

    extra: list = []
    for pass_name in objective:
        if pass_name == "max_f":
            obj = a_coeffs
        elif pass_name == "max_g":
            obj = m_coeffs
        elif pass_name == "max_sum":
            obj = [fa + fm for fa, fm in zip(a_coeffs, m_coeffs)]
        else:
            raise MatchGamesError(f"unknown objective pass {pass_name!r}")
        lp = LinearProgram(objective=obj, sense="max")
        for row in constraints + extra:
            lp.add(*row)
        result = solve_lp(lp)
        if result.status != OPTIMAL:
            raise InfeasibleError("empty feasible payoff region")
        extra.append((obj, EQ, result.value))
    lam_list = result.solution
    lam = {cell: w for cell, w in zip(cells, lam_list) if w != 0}
    f_val = sum(a[s][t] * w for (s, t), w in lam.items())
    g_val = sum(m[s][t] * w for (s, t), w in lam.items())
    return lam, (Fraction(f_val), Fraction(g_val))


def distribution_to_cycle(lam: LambdaDistribution, a: Matrix, m: Matrix) -> CycleStrategy:
    """Finite cycle whose long-run average equals the distribution's payoffs.

    Cycle length is the lcm of the weights' denominators; profile (s, t) is
    visited exactly ``N * lambda[s,t]`` times, in row-major order.
    """
    total = sum(lam.values(), Fraction(0))
    if total != 1:
        raise MatchGamesError("distribution weights must sum to 1")
    n = 1
    for w in lam.values():
        n = n * w.denominator // math.gcd(n, w.denominator)
    steps = []
    for (s, t) in sorted(lam):
        count = lam[(s, t)] * n
        steps.extend([(s, t)] * int(count))
    return CycleStrategy(cycle=tuple(steps))


@dataclass(frozen=True)
class AffineTransform:
    """Affine bridge between a strictly competitive pair and its zero-sum image.

    With B := -M, exactly one orientation has ratio <= 1:

    * direction "doctor":   A == ratio * B + shift * U; image matrix is B and
      the doctor's payoffs are the rescaled ones.
    * direction "hospital": B == ratio * A + shift * U; image matrix is A and
      the hospital's payoffs are the rescaled ones (M-payoff ==
      ratio * (-A-payoff) - shift).
    """

    ratio: Fraction
    shift: Fraction
    direction: str
    image: Matrix

    def image_doctor_value(self, f: Fraction) -> Fraction:
        if self.direction == "doctor":
            return (f - self.shift) / self.ratio
        return f

    def original_doctor_value(self, z: Fraction) -> Fraction:
        if self.direction == "doctor":
            return self.ratio * z + self.shift
        return z

    def image_hospital_value(self, g: Fraction) -> Fraction:
        if self.direction == "doctor":
            return g
        return (g + self.shift) / self.ratio

    def original_hospital_value(self, ih: Fraction) -> Fraction:
        if self.direction == "doctor":
            return ih
        return self.ratio * ih - self.shift


def affine_transform(a: Matrix, m: Matrix) -> AffineTransform:
    """Compute the ratio-<=-1 affine bridge for a strictly competitive pair."""
    b = negate(m)
    a_range = matrix_max(a) - matrix_min(a)
    b_range = matrix_max(b) - matrix_min(b)
    if a_range <= b_range and b_range > 0:
        ratio = a_range / b_range
        shift = matrix_min(a) - matrix_min(b) * ratio
        _verify_affine(a, b, ratio, shift)
        return AffineTransform(ratio=ratio, shift=shift, direction="doctor", image=b)
    if b_range == 0 and a_range == 0:
        return AffineTransform(
            ratio=Fraction(1), shift=a[0][0] - b[0][0], direction="doctor", image=b
        )
    if b_range == 0 or a_range == 0:
        rows, cols = len(a), len(a[0])
        for i in range(rows):
            for j in range(cols):
                if a[i][j] != a[0][0] or b[i][j] != b[0][0]:
                    raise NotStrictlyCompetitiveError(
                        "one matrix is constant and the other is not",
                        entry=(i, j, a[i][j], b[i][j]),
                    )
    ratio = b_range / a_range
    shift = matrix_min(b) - matrix_min(a) * ratio
    _verify_affine(b, a, ratio, shift)
    return AffineTransform(ratio=ratio, shift=shift, direction="hospital", image=a)


def _verify_affine(left: Matrix, right: Matrix, ratio: Fraction, shift: Fraction):
    for i, row in enumerate(left):
        for j, value in enumerate(row):
            expected = ratio * right[i][j] + shift
            if value != expected:
                raise NotStrictlyCompetitiveError(
                    f"no affine variant: entry ({i},{j}) is {value}, expected {expected}",
                    entry=(i, j, value, expected),
                )


# ---------------------------------------------------------------------------
# Class-dispatched frontier queries (original payoff units throughout)


@dataclass
class PairOutcome:
    """One feasible point of a couple's constrained frontier."""

    f: Fraction
    g: Fraction
    x: Optional[Tuple[Fraction, ...]] = None
    y: Optional[Tuple[Fraction, ...]] = None
    cycle: Optional[CycleStrategy] = None


def max_f_given_g_floor(game: BimatrixGame, theta: Fraction,
                        strict: bool = False) -> Optional[PairOutcome]:
    """Best doctor payoff while giving the partner at least ``theta``.

    Returns None when the floor is unattainable in the pair's game.  With
    ``strict`` the partner must be strictly above the floor: the supremum
    value is unchanged where the open set is non-empty, but boundary-only
    options (partner floor equal to her best attainable payoff) disappear.
    """
    a, m = game.doctor_matrix, game.hospital_matrix
    if game.class_tag == ZERO_SUM:
        c = -theta
        if c < matrix_min(a) or (strict and c == matrix_min(a)):
            return None
        sol = solve_qcqp_zero_sum(a, c)
        return PairOutcome(f=sol.value, g=-sol.value, x=sol.x, y=sol.y)
    if game.class_tag == STRICTLY_COMPETITIVE:
        tr = affine_transform(a, m)
        c = -tr.image_hospital_value(theta)
        z = tr.image
        if c < matrix_min(z) or (strict and c == matrix_min(z)):
            return None
        sol = solve_qcqp_zero_sum(z, c)
        return PairOutcome(
            f=bilinear(sol.x, a, sol.y),
            g=bilinear(sol.x, m, sol.y),
            x=sol.x,
            y=sol.y,
        )
    if game.class_tag == REPEATED:
        if theta > matrix_max(m) or (strict and theta == matrix_max(m)):
            return None
        lam, (f, g) = solve_qcqp_repeated(a, m, theta)
        return PairOutcome(f=f, g=g, cycle=distribution_to_cycle(lam, a, m))
    raise UnsupportedClassError(f"no exact frontier solver for class {game.class_tag}")


def max_g_given_f_floor(game: BimatrixGame, beta: Fraction,
                        strict: bool = False) -> Optional[PairOutcome]:
    """Best partner payoff while granting the doctor at least ``beta``.

    ``strict`` demands the doctor strictly above the floor; the supremum is
    reported (for the one-shot classes the witness profile then sits at the
    closed boundary, arbitrarily approachable from the strict side).
    """
    a, m = game.doctor_matrix, game.hospital_matrix
    if game.class_tag == ZERO_SUM:
        if beta > matrix_max(a) or (strict and beta == matrix_max(a)):
            return None
        target = max(beta, matrix_min(a))
        x, y, _ = achieve_value_zero_sum(a, target)
        return PairOutcome(f=target, g=-target, x=x, y=y)
    if game.class_tag == STRICTLY_COMPETITIVE:
        tr = affine_transform(a, m)
        beta_img = tr.image_doctor_value(beta)
        z = tr.image
        if beta_img > matrix_max(z) or (strict and beta_img == matrix_max(z)):
            return None
        target = max(beta_img, matrix_min(z))
        x, y, _ = achieve_value_zero_sum(z, target)
        return PairOutcome(f=bilinear(x, a, y), g=bilinear(x, m, y), x=x, y=y)
    if game.class_tag == REPEATED:
        if beta > matrix_max(a) or (strict and beta == matrix_max(a)):
            return None
        lam, (f, g) = _hull_lp(a, m, objective=("max_g",), f_floor=beta)
        return PairOutcome(f=f, g=g, cycle=distribution_to_cycle(lam, a, m))
    raise UnsupportedClassError(f"no exact frontier solver for class {game.class_tag}")


# ---------------------------------------------------------------------------
# Grid oracle (approximate, never authoritative)


def simplex_grid(size: int, resolution: int):
    """All rational grid points of the simplex with denominators ``resolution``."""
    if size == 1:
        yield (Fraction(1),)
        return
    for split in _compositions(resolution, size):
        yield tuple(Fraction(k, resolution) for k in split)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def solve_qcqp_grid_oracle(a: Matrix, m: Matrix, c: Fraction, grid_resolution: int) -> QcqpSolution:
    """Best grid profile for max{xAy | xMy >= c}; approximate by construction.

    Floating point (numpy) screens the grid; the winning point is re-checked
    in exact arithmetic and an exact rescan covers the rare boundary miss.
    """
    import numpy as np

    if grid_resolution < 1:
        raise MatchGamesError("grid_resolution must be >= 1")
    n_rows, n_cols = len(a), len(a[0])
    xs = list(simplex_grid(n_rows, grid_resolution))
    ys = list(simplex_grid(n_cols, grid_resolution))
    xf = np.array([[float(v) for v in x] for x in xs])
    yf = np.array([[float(v) for v in y] for y in ys])
    af = np.array([[float(v) for v in row] for row in a])
    mf = np.array([[float(v) for v in row] for row in m])
    g_grid = xf @ mf @ yf.T
    f_grid = xf @ af @ yf.T
    feasible = g_grid >= float(c) - 1e-9
    if not feasible.any():
        raise InfeasibleError("grid scan found no feasible profile")
    f_masked = np.where(feasible, f_grid, -np.inf)
    i, j = np.unravel_index(int(np.argmax(f_masked)), f_masked.shape)
    x, y = xs[i], ys[j]
    if bilinear(x, m, y) < c:
        # The float screen admitted a boundary point; fall back to an exact scan.
        best = None
        for x in xs:
            for y in ys:
                if bilinear(x, m, y) >= c:
                    fv = bilinear(x, a, y)
                    if best is None or fv > best[0]:
                        best = (fv, x, y)
        if best is None:
            raise InfeasibleError("grid scan found no feasible profile")
        _, x, y = best
    return QcqpSolution(
        x=x, y=y, value=bilinear(x, a, y), support_note="grid", approximate=True
    )
