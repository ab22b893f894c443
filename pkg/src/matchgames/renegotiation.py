"""Reservation payoffs, constrained Nash equilibria, and the renegotiation sweep.

A couple's reservations are the best each side can secure outside the couple
given the rest of the allocation.  Replacing every couple's profile with a
constrained Nash equilibrium (CNE) for its reservations, sweep after sweep,
drives the allocation to renegotiation proofness.

Unit conventions, fixed once:

* ``reservation_payoffs`` returns the doctor value in doctor units and the
  hospital value in the hospital's own payoff units;
* ``compute_cne_zero_sum`` takes the hospital reservation already negated
  into a doctor-unit cap (the single negation happens at this boundary);
* the strictly competitive and repeated solvers take hospital units.

The zero-sum CNE value is median{f_res - 2e, w, g_cap + 2e}; the returned
profile survives both constrained best-response checks with slack e.  The
2e-wide feasibility band is what makes the construction always exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .core import (
    REPEATED,
    ROOMMATES,
    STRICTLY_COMPETITIVE,
    ZERO_SUM,
    Allocation,
    BimatrixGame,
    CyclePunishment,
    CycleStrategy,
    MatchingGameInstance,
    Matrix,
    bilinear,
    matrix_max,
    matrix_min,
    negate,
    pure,
    seat_contribution,
)
from .errors import (
    EpsilonNotPositiveError,
    InfeasibleReservationsError,
    InputNotPairwiseStableError,
    MatchGamesError,
    UnsupportedClassError,
)
from .lp import GE, OPTIMAL, LinearProgram, game_value, solve_lp
from .qcqp import (
    AffineTransform,
    achieve_value_zero_sum,
    affine_transform,
    distribution_to_cycle,
    _hull_lp,
    max_f_given_g_floor,
    max_g_given_f_floor,
)

SADDLE_VALUE = "saddle_value"
DOCTOR_BINDING = "doctor_binding"
HOSPITAL_BINDING = "hospital_binding"
UNIFORM_EQUILIBRIUM = "uniform_equilibrium"
PUNISHMENT_SUPPORTED = "punishment_supported"


@dataclass
class ReservationPair:
    doctor_reservation: Fraction      # doctor units
    hospital_reservation: Fraction    # hospital's own payoff units (per seat)


@dataclass
class CneResult:
    x: Optional[Tuple[Fraction, ...]]
    y: Optional[Tuple[Fraction, ...]]
    cycle: Optional[CycleStrategy]
    doctor_payoff: Fraction
    hospital_payoff: Fraction
    case_tag: str


# ---------------------------------------------------------------------------
# Reservation payoffs


def reservation_payoffs(instance: MatchingGameInstance, allocation: Allocation,
                        d: str, partner: str, epsilon: Fraction) -> ReservationPair:
    """Best outside values of a matched couple, computed from everyone else.

    Doctor side: best value over other hospitals (beating their weakest seat
    or free-seat baseline by epsilon) and the unmatched option.  Hospital
    side: best per-seat value over outside doctors, each granted strictly
    more than her current payoff plus epsilon, and the hospital's baseline.

    Outside options use strict inequalities (supremum semantics): an option
    whose constraint can only bind exactly at the game's boundary is no
    outside option at all, exactly as it is no blocking opportunity.
    """
    from .core import evaluate_payoffs

    payoffs = evaluate_payoffs(instance, allocation)
    doctor_res = _doctor_outside_value(instance, allocation, payoffs, d, exclude=partner,
                                       epsilon=epsilon)
    if instance.model == ROOMMATES:
        partner_res = _doctor_outside_value(instance, allocation, payoffs, partner,
                                            exclude=d, epsilon=epsilon)
        return ReservationPair(doctor_res, partner_res)

    h = partner
    best = instance.hospitals[h].irp
    members = set(allocation.hospital_members(h))
    for k in instance.doctor_ids:
        if k in members or not instance.has_game(k, h):
            continue
        outcome = max_g_given_f_floor(
            instance.game_for(k, h), payoffs.doctor_payoffs[k] + epsilon, strict=True
        )
        if outcome is not None and outcome.g > best:
            best = outcome.g
    return ReservationPair(doctor_res, best)


def _doctor_outside_value(instance, allocation, payoffs, d, exclude, epsilon):
    best = instance.doctors[d].irp
    for k in instance.partner_options(d):
        if k == exclude:
            continue
        if instance.model == ROOMMATES:
            threshold = payoffs.doctor_payoffs[k] + epsilon
        else:
            hosp = instance.hospitals[k]
            members = [m for m in allocation.hospital_members(k) if m != d]
            if len(members) < hosp.quota:
                threshold = hosp.irp + epsilon
            else:
                threshold = min(
                    seat_contribution(instance, allocation, m, k) for m in members
                ) + epsilon
        outcome = max_f_given_g_floor(instance.game_for(d, k), threshold, strict=True)
        if outcome is not None and outcome.f > best:
            best = outcome.f
    return best


# ---------------------------------------------------------------------------
# Constrained best responses (deviation audits)


def constrained_best_response_doctor(a: Matrix, m: Matrix,
                                     y0: Tuple[Fraction, ...],
                                     g_res: Fraction, epsilon: Fraction):
    """max x.A.y0 over x in the simplex with x.M.y0 + epsilon >= g_res, or None."""
    n = len(a)
    a_col = [bilinear(pure(i, n), a, y0) for i in range(n)]
    m_col = [bilinear(pure(i, n), m, y0) for i in range(n)]
    lp = LinearProgram(objective=a_col)
    lp.add([Fraction(1)] * n, "==", Fraction(1))
    lp.add(m_col, GE, g_res - epsilon)
    result = solve_lp(lp)
    if result.status != OPTIMAL:
        return None
    return result.value


def constrained_best_response_hospital(a: Matrix, m: Matrix,
                                       x0: Tuple[Fraction, ...],
                                       f_res: Fraction, epsilon: Fraction):
    """max x0.M.y over y in the simplex with x0.A.y + epsilon >= f_res, or None."""
    n = len(a[0])
    a_row = [bilinear(x0, a, pure(j, n)) for j in range(n)]
    m_row = [bilinear(x0, m, pure(j, n)) for j in range(n)]
    lp = LinearProgram(objective=m_row)
    lp.add([Fraction(1)] * n, "==", Fraction(1))
    lp.add(a_row, GE, f_res - epsilon)
    result = solve_lp(lp)
    if result.status != OPTIMAL:
        return None
    return result.value


def _assert_cne_deviations(a, m, x, y, f_res, g_res, epsilon, where):
    f_now = bilinear(x, a, y)
    g_now = bilinear(x, m, y)
    best_d = constrained_best_response_doctor(a, m, y, g_res, epsilon)
    if best_d is not None and best_d > f_now + epsilon:
        raise MatchGamesError(f"{where}: doctor retains a profitable constrained deviation")
    best_h = constrained_best_response_hospital(a, m, x, f_res, epsilon)
    if best_h is not None and best_h > g_now + epsilon:
        raise MatchGamesError(f"{where}: hospital retains a profitable constrained deviation")


# ---------------------------------------------------------------------------
# Zero-sum CNE (median construction)


def compute_cne_zero_sum(a: Matrix, f_res: Fraction, g_cap: Fraction,
                         epsilon: Fraction) -> CneResult:
    """CNE of a zero-sum pair; ``g_cap`` is the hospital reservation negated
    into doctor units.

    The value is median{f_res - 2e, w, g_cap + 2e}: the saddle when it fits
    between the (2e-slackened) reservations, else the binding side's bound,
    reached by sliding a payoff-preserving profile toward the saddle until
    every pure row (column) sits on the safe side.
    """
    lo = f_res - 2 * epsilon
    hi = g_cap + 2 * epsilon
    a_min, a_max = matrix_min(a), matrix_max(a)
    if lo > hi or hi < a_min or lo > a_max:
        raise InfeasibleReservationsError(
            f"reservation band [{lo}, {hi}] misses the attainable interval [{a_min}, {a_max}]"
        )
    w, x_star, y_star = game_value(a)
    if lo <= w <= hi:
        x, y, tag, value = x_star, y_star, SADDLE_VALUE, w
    elif w < lo:
        x, y = _slide_rows_to_value(a, lo, y_star, w)
        tag, value = DOCTOR_BINDING, lo
    else:
        x, y = _slide_cols_to_value(a, hi, x_star, w)
        tag, value = HOSPITAL_BINDING, hi
    if bilinear(x, a, y) != value:
        raise MatchGamesError("CNE construction missed its target value")
    _assert_cne_deviations(a, negate(a), x, y, f_res, -g_cap, epsilon, "zero-sum CNE")
    return CneResult(x=x, y=y, cycle=None, doctor_payoff=value,
                     hospital_payoff=-value, case_tag=tag)


def _slide_rows_to_value(a: Matrix, v: Fraction, y_star, w):
    """Profile of value v > w: pure row against a column mix pushed toward y*.

    Along y_tau = (1-tau).y0 + tau.y*, each pure row's payoff is affine and
    ends below w < v; the largest tau at which some row still attains v
    leaves every row at or below v, killing all doctor deviations.
    """
    x0, y0, _ = achieve_value_zero_sum(a, v)
    n_rows, n_cols = len(a), len(a[0])
    best = None
    for s in range(n_rows):
        a_s = bilinear(pure(s, n_rows), a, y0)
        b_s = bilinear(pure(s, n_rows), a, y_star)
        if a_s < v:
            continue  # starts below and ends below: never attains v
        if a_s == b_s:
            tau = Fraction(0) if a_s == v else None
        else:
            tau = (v - a_s) / (b_s - a_s)
        if tau is None or tau < 0 or tau > 1:
            continue
        if best is None or tau > best[0] or (tau == best[0] and s < best[1]):
            best = (tau, s)
    if best is None:
        raise MatchGamesError("no pure row attains the target value on the segment")
    tau, s = best
    y = tuple((1 - tau) * w0 + tau * w1 for w0, w1 in zip(y0, y_star))
    return pure(s, n_rows), y


def _slide_cols_to_value(a: Matrix, v: Fraction, x_star, w):
    """Mirror of _slide_rows_to_value for the hospital-binding case (v < w)."""
    x0, y0, _ = achieve_value_zero_sum(a, v)
    n_rows, n_cols = len(a), len(a[0])
    best = None
    for t in range(n_cols):
        a_t = bilinear(x0, a, pure(t, n_cols))
        b_t = bilinear(x_star, a, pure(t, n_cols))
        if a_t > v:
            continue
        if a_t == b_t:
            tau = Fraction(0) if a_t == v else None
        else:
            tau = (v - a_t) / (b_t - a_t)
        if tau is None or tau < 0 or tau > 1:
            continue
        if best is None or tau > best[0] or (tau == best[0] and t < best[1]):
            best = (tau, t)
    if best is None:
        raise MatchGamesError("no pure column attains the target value on the segment")
    tau, t = best
    x = tuple((1 - tau) * w0 + tau * w1 for w0, w1 in zip(x0, x_star))
    return x, pure(t, n_cols)


# ---------------------------------------------------------------------------
# Strictly competitive CNE (affine transfer)


def compute_cne_strictly_competitive(a: Matrix, m: Matrix, f_res: Fraction,
                                     g_res: Fraction, epsilon: Fraction,
                                     tight: bool = False) -> CneResult:
    """CNE via the zero-sum image; reservations move with an epsilon correction.

    The correction makes the image's constrained-deviation sets coincide with
    the original ones, so an image CNE maps back unchanged (the deviation
    audit below runs in the original game).  ``g_res`` is in hospital units.

    ``tight`` raises both image reservations by epsilon *in image units*
    (the rescaled side's epsilon is worth only ratio * epsilon in original
    units, so shifting before the transform under-protects when the ratio is
    small); the binding-side value then sits exactly on the one-epsilon
    original-unit boundary, which is what the renegotiation sweep needs.
    """
    tr = affine_transform(a, m)
    z = tr.image
    if tr.direction == "doctor":
        f_img = tr.image_doctor_value(f_res) - epsilon * (1 - tr.ratio) / tr.ratio
        g_img = g_res  # hospital payoffs coincide with the image's
    else:
        f_img = f_res
        g_img = tr.image_hospital_value(g_res) - epsilon * (1 - tr.ratio) / tr.ratio
    if tight:
        f_img += epsilon
        g_img += epsilon
    inner = compute_cne_zero_sum(z, f_img, -g_img, epsilon)
    x, y = inner.x, inner.y
    f_val = bilinear(x, a, y)
    g_val = bilinear(x, m, y)
    _assert_cne_deviations(a, m, x, y, f_res, g_res, epsilon, "strictly competitive CNE")
    return CneResult(x=x, y=y, cycle=None, doctor_payoff=f_val,
                     hospital_payoff=g_val, case_tag=inner.case_tag)


# ---------------------------------------------------------------------------
# Repeated games: punishment levels and folk-theorem CNEs


def punishment_levels(a: Matrix, m: Matrix):
    """Minimax levels (alpha, beta) and the minimaxing strategies.

    alpha = min_y max_x x.A.y with the hospital's punishing y; beta the
    mirror image on the doctor's side against M.
    """
    alpha, _, y_alpha = game_value(a)
    neg_beta, x_beta, _ = game_value(negate(m))
    return alpha, -neg_beta, y_alpha, x_beta


def _uniform_point(a, m, f_floor, g_floor):
    """Lexicographic max of f+g then f over the hull above the floors."""
    lam, (f, g) = _hull_lp(a, m, objective=("max_sum", "max_f"),
                           f_floor=f_floor, g_floor=g_floor)
    return lam, f, g


def compute_cne_repeated(a: Matrix, m: Matrix, f_res: Fraction, g_res: Fraction,
                         epsilon: Fraction) -> CneResult:
    """CNE of the uniform (infinitely repeated) game with stage matrices a, m.

    Inside the acceptable payoff set (hull points within epsilon of both
    reservations), prefer a uniform-equilibrium point (above both punishment
    levels) maximizing f+g with grim punishments on both sides.  When the
    intersection is empty, the safe side concedes: play the acceptable point
    maximizing the exposed side's payoff, bumped by epsilon when the hull
    allows, with the safe side punished by grim minimaxing and the exposed
    side's deviations ignored.
    """
    try:
        _hull_lp(a, m, objective=("max_f",), f_floor=f_res - epsilon, g_floor=g_res - epsilon)
    except Exception:
        raise InfeasibleReservationsError("acceptable payoff set is empty")
    alpha, beta, y_alpha, x_beta = punishment_levels(a, m)

    try:
        lam, f, g = _uniform_point(a, m, max(alpha, f_res - epsilon), max(beta, g_res - epsilon))
    except Exception:
        lam = None
    if lam is not None:
        cycle = distribution_to_cycle(lam, a, m)
        cycle.punishment = CyclePunishment(
            punisher="both", doctor_strategy=x_beta, hospital_strategy=y_alpha
        )
        return CneResult(x=None, y=None, cycle=cycle, doctor_payoff=f,
                         hospital_payoff=g, case_tag=UNIFORM_EQUILIBRIUM)

    if f_res - epsilon >= alpha:
        # Doctor safe above her punishment level; hospital is the exposed side.
        _, (_, g_bar) = _hull_lp(a, m, objective=("max_g",),
                                 f_floor=f_res - epsilon, g_floor=g_res - epsilon)
        lam, (f_bar, _) = _hull_lp(a, m, objective=("max_f",),
                                   f_floor=f_res - epsilon, g_exact=g_bar)
        target = _try_exact_point(a, m, f_bar, g_bar + epsilon)
        if target is None:
            target = lam
        cycle = distribution_to_cycle(target, a, m)
        cycle.punishment = CyclePunishment(punisher="hospital", hospital_strategy=y_alpha)
        f_out = sum(a[s][t] * wgt for (s, t), wgt in target.items())
        g_out = sum(m[s][t] * wgt for (s, t), wgt in target.items())
        return CneResult(x=None, y=None, cycle=cycle, doctor_payoff=f_out,
                         hospital_payoff=g_out, case_tag=PUNISHMENT_SUPPORTED)
    if g_res - epsilon >= beta:
        _, (f_bar, _) = _hull_lp(a, m, objective=("max_f",),
                                 f_floor=f_res - epsilon, g_floor=g_res - epsilon)
        lam, (_, g_bar) = _hull_lp(a, m, objective=("max_g",),
                                   g_floor=g_res - epsilon, f_exact=f_bar)
        target = _try_exact_point(a, m, f_bar + epsilon, g_bar)
        if target is None:
            target = lam
        cycle = distribution_to_cycle(target, a, m)
        cycle.punishment = CyclePunishment(punisher="doctor", doctor_strategy=x_beta)
        f_out = sum(a[s][t] * wgt for (s, t), wgt in target.items())
        g_out = sum(m[s][t] * wgt for (s, t), wgt in target.items())
        return CneResult(x=None, y=None, cycle=cycle, doctor_payoff=f_out,
                         hospital_payoff=g_out, case_tag=PUNISHMENT_SUPPORTED)
    raise MatchGamesError("unreachable: both sides below punishment levels implies a uniform point")


def _try_exact_point(a, m, f_target, g_target):
    try:
        lam, _ = _hull_lp(a, m, objective=("max_f",), f_exact=f_target, g_exact=g_target)
        return lam
    except Exception:
        return None


# ---------------------------------------------------------------------------
# CNE verification (used by the stability oracles)


def check_couple_is_cne(instance, allocation, d, partner, reservations: ReservationPair,
                        epsilon: Fraction):
    """Does the couple's current profile survive the CNE characterisation?"""
    game = instance.game_for(d, partner)
    a, m = game.doctor_matrix, game.hospital_matrix
    f_res, g_res = reservations.doctor_reservation, reservations.hospital_reservation

    if game.class_tag == REPEATED:
        return _check_repeated_cne(instance, allocation, d, partner, a, m,
                                   f_res, g_res, epsilon)

    if instance.model == ROOMMATES:
        x = allocation.doctor_strategies[d]
        y = allocation.doctor_strategies[partner]
    else:
        x = allocation.doctor_strategies[d]
        y = allocation.hospital_strategies[(partner, d)]
    f_now = bilinear(x, a, y)
    g_now = bilinear(x, m, y)
    if f_now + epsilon < f_res:
        return False, f"doctor payoff {f_now} not feasible against reservation {f_res}"
    if g_now + epsilon < g_res:
        return False, f"hospital payoff {g_now} not feasible against reservation {g_res}"
    best_d = constrained_best_response_doctor(a, m, y, g_res, epsilon)
    if best_d is not None and best_d > f_now + epsilon:
        return False, f"doctor deviation worth {best_d} > {f_now} + eps"
    best_h = constrained_best_response_hospital(a, m, x, f_res, epsilon)
    if best_h is not None and best_h > g_now + epsilon:
        return False, f"hospital deviation worth {best_h} > {g_now} + eps"
    return True, None


def _check_repeated_cne(instance, allocation, d, partner, a, m, f_res, g_res, epsilon):
    from .core import _cycle_for

    cycle = _cycle_for(instance, allocation, d, partner)
    f_bar, g_bar = cycle.average_payoffs(a, m)
    if f_bar + epsilon < f_res:
        return False, "cycle average below the doctor's acceptable set"
    if g_bar + epsilon < g_res:
        return False, "cycle average below the hospital's acceptable set"
    alpha, beta, _, _ = punishment_levels(a, m)
    pun = cycle.punishment
    if pun is None:
        return False, "repeated-pair profile lacks a punishment directive"
    doctor_guarded = pun.punisher in ("hospital", "both")
    hospital_guarded = pun.punisher in ("doctor", "both")
    if doctor_guarded:
        if f_bar < alpha:
            return False, "cycle pays the doctor below her punishment level"
    else:
        # Doctor deviations unpunished: any f-gain > eps must break feasibility.
        _, (f_cap, _) = _hull_lp(a, m, objective=("max_f",), g_floor=g_res - epsilon)
        if f_cap > f_bar + epsilon:
            return False, "doctor could gain within the hospital's acceptable set"
    if hospital_guarded:
        if g_bar < beta:
            return False, "cycle pays the hospital below its punishment level"
    else:
        _, (_, g_cap) = _hull_lp(a, m, objective=("max_g",), f_floor=f_res - epsilon)
        if g_cap > g_bar + epsilon:
            return False, "hospital could gain within the doctor's acceptable set"
    return True, None


# ---------------------------------------------------------------------------
# The renegotiation process


@dataclass
class RenegotiationResult:
    allocation: Allocation
    sweeps: int  # sweeps that changed at least one payoff pair
    payoff_history: List[Dict[Tuple[str, str], Tuple[Fraction, Fraction]]] = field(default_factory=list)


def compute_cne_for_pair(game: BimatrixGame, reservations: ReservationPair,
                         epsilon: Fraction) -> CneResult:
    f_res, g_res = reservations.doctor_reservation, reservations.hospital_reservation
    if game.class_tag == ZERO_SUM:
        return compute_cne_zero_sum(game.doctor_matrix, f_res, -g_res, epsilon)
    if game.class_tag == STRICTLY_COMPETITIVE:
        return compute_cne_strictly_competitive(
            game.doctor_matrix, game.hospital_matrix, f_res, g_res, epsilon
        )
    if game.class_tag == REPEATED:
        return compute_cne_repeated(
            game.doctor_matrix, game.hospital_matrix, f_res, g_res, epsilon
        )
    raise UnsupportedClassError(f"no CNE routine for class {game.class_tag}")


def select_process_cne(game: BimatrixGame, reservations: ReservationPair,
                       epsilon: Fraction) -> CneResult:
    """The CNE the renegotiation sweep installs for a couple.

    For the one-shot classes the selection targets the tight feasibility
    boundary (value at least f_res - e and at most e above the hospital's
    negated reservation): such a profile is an e-CNE outright -- e-feasible
    per the definition and immune to constrained deviations -- and, unlike
    the 2e-wide median point, it cannot reopen an outside blocking pair.  It
    is obtained by running the median construction with both reservations
    raised by e (in image units for strictly competitive pairs).  When the
    tight band is empty (free-seat floor corners) the plain median point is
    the fallback.  Repeated pairs already select inside the 1e acceptable
    set.
    """
    f_res, g_res = reservations.doctor_reservation, reservations.hospital_reservation
    if game.class_tag == REPEATED:
        return compute_cne_for_pair(game, reservations, epsilon)
    try:
        if game.class_tag == ZERO_SUM:
            return compute_cne_zero_sum(
                game.doctor_matrix, f_res + epsilon, -(g_res + epsilon), epsilon
            )
        return compute_cne_strictly_competitive(
            game.doctor_matrix, game.hospital_matrix, f_res, g_res, epsilon, tight=True
        )
    except InfeasibleReservationsError:
        return compute_cne_for_pair(game, reservations, epsilon)


def run_renegotiation(instance: MatchingGameInstance, allocation: Allocation,
                      epsilon: Fraction, max_sweeps: Optional[int] = None,
                      on_sweep=None) -> RenegotiationResult:
    """Replace every couple's profile with a CNE until payoffs fix.

    Sweeps are Gauss-Seidel style: each couple's reservations see the updates
    already applied earlier in the same sweep.  (Batch updates admit two-state
    limit cycles: couples coupled through their reservations bounce between
    the even and odd states forever; in-place sweeps break the symmetry.)
    The returned sweep count excludes the final no-change detection sweep.
    """
    from .stability import find_blocking_pair

    if epsilon <= 0:
        raise EpsilonNotPositiveError("epsilon must be strictly positive")
    witness = find_blocking_pair(instance, allocation, epsilon)
    if witness is not None:
        raise InputNotPairwiseStableError(
            f"input allocation is blocked by ({witness.doctor},{witness.partner})"
        )

    current = _copy_allocation(allocation)
    couples = _sweep_order(instance, current)
    if max_sweeps is None:
        # Reservations move by at least epsilon-scaled steps while a couple
        # keeps changing, so payoff spreads over epsilon bound the sweeps.
        spread = Fraction(0)
        for d, partner in couples:
            game = instance.game_for(d, partner)
            spread = max(
                spread,
                matrix_max(game.doctor_matrix) - matrix_min(game.doctor_matrix),
                matrix_max(game.hospital_matrix) - matrix_min(game.hospital_matrix),
            )
        max_sweeps = 4 * int(spread / epsilon) + 100
    previous = _payoff_pairs(instance, current, couples)
    sweeps = 0
    history = []
    for _ in range(max_sweeps):
        for d, partner in couples:
            reservations = reservation_payoffs(instance, current, d, partner, epsilon)
            game = instance.game_for(d, partner)
            still_fine, _ = check_couple_is_cne(
                instance, current, d, partner, reservations, epsilon
            )
            if still_fine:
                # Keeping the incumbent profile is itself a choice from the
                # CNE set; moving only under a real objection stops couples
                # from chasing each other's sub-epsilon reservation wiggles.
                continue
            try:
                cne = select_process_cne(game, reservations, epsilon)
            except InfeasibleReservationsError:
                # Mid-sweep states can transiently squeeze a couple's band
                # empty; park the couple and let the others move first.
                continue
            _apply_updates(instance, current, {(d, partner): cne})
        now = _payoff_pairs(instance, current, couples)
        history.append(now)
        if on_sweep is not None:
            on_sweep(_copy_allocation(current))
        if now == previous:
            return RenegotiationResult(allocation=current, sweeps=sweeps, payoff_history=history)
        previous = now
        sweeps += 1
    raise MatchGamesError("renegotiation did not converge within the sweep cap")


def _sweep_order(instance, allocation):
    pairs = []
    for d, partner in allocation.matched_pairs():
        if instance.model == ROOMMATES:
            if d < partner:
                pairs.append((d, partner))
        else:
            pairs.append((d, partner))
    if instance.model == ROOMMATES:
        pairs.sort()
    else:
        pairs.sort(key=lambda dp: (dp[1], dp[0]))
    return pairs


def _payoff_pairs(instance, allocation, couples):
    out = {}
    for d, partner in couples:
        game = instance.game_for(d, partner)
        if game.class_tag == REPEATED:
            from .core import _cycle_for

            cycle = _cycle_for(instance, allocation, d, partner)
            out[(d, partner)] = cycle.average_payoffs(game.doctor_matrix, game.hospital_matrix)
        else:
            if instance.model == ROOMMATES:
                x, y = allocation.doctor_strategies[d], allocation.doctor_strategies[partner]
            else:
                x, y = allocation.doctor_strategies[d], allocation.hospital_strategies[(partner, d)]
            out[(d, partner)] = (
                bilinear(x, game.doctor_matrix, y),
                bilinear(x, game.hospital_matrix, y),
            )
    return out


def _apply_updates(instance, allocation, updates):
    for (d, partner), cne in updates.items():
        if cne.cycle is not None:
            key = (partner, d) if instance.model != ROOMMATES else instance.pair_key(d, partner)
            allocation.cycles[key] = cne.cycle
            allocation.doctor_strategies.pop(d, None)
            if instance.model != ROOMMATES:
                allocation.hospital_strategies.pop((partner, d), None)
        else:
            allocation.doctor_strategies[d] = cne.x
            if instance.model == ROOMMATES:
                allocation.doctor_strategies[partner] = cne.y
            else:
                allocation.hospital_strategies[(partner, d)] = cne.y


def _copy_allocation(allocation: Allocation) -> Allocation:
    return Allocation(
        matching=dict(allocation.matching),
        doctor_strategies=dict(allocation.doctor_strategies),
        hospital_strategies=dict(allocation.hospital_strategies),
        cycles=dict(allocation.cycles),
    )
