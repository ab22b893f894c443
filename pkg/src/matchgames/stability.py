"""Independent stability oracles: blocking pairs, coalitions, core enumeration.

The checks here never reuse solver internals: zero-sum and strictly
competitive pairs are audited through exact attainable-interval tests,
repeated pairs through exact LPs over the feasible payoff hull, and the
enumerated model through direct table scans.  Grid methods are tagged
approximate and any witness they produce is replayed exactly before being
reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from .core import (
    ADDITIVE_SEPARABLE,
    GENERAL,
    GENERAL_ENUMERATED,
    NEG_INF,
    REPEATED,
    ROOMMATES,
    STRICTLY_COMPETITIVE,
    ZERO_SUM,
    Allocation,
    BimatrixGame,
    MatchingGameInstance,
    PayoffReport,
    bilinear,
    evaluate_payoffs,
    matrix_max,
    matrix_min,
    seat_contribution,
)
from .errors import CapExceededError, MatchGamesError, UnsupportedClassError
from .lp import GE, OPTIMAL, LinearProgram, solve_lp
from .qcqp import (
    achieve_value_zero_sum,
    affine_transform,
    distribution_to_cycle,
    _hull_lp,
    simplex_grid,
)

EXACT_INTERVAL = "exact_interval"
EXACT_LP = "exact_lp"
EXACT_TABLE = "exact_table"


def grid_method(mesh: int) -> str:
    return f"grid(1/{mesh})"


@dataclass
class BlockingPairWitness:
    doctor: str
    partner: str
    doctor_gain: Fraction
    partner_gain: Fraction
    method: str
    x: Optional[Tuple[Fraction, ...]] = None
    y: Optional[Tuple[Fraction, ...]] = None
    cycle_distribution: Optional[dict] = None


@dataclass
class BlockingCoalitionWitness:
    doctors: Tuple[str, ...]
    hospital: str
    method: str
    profiles: Dict[str, Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...]]] = field(default_factory=dict)
    hospital_gain: Optional[Fraction] = None


@dataclass
class StabilityReport:
    individually_rational: bool
    ir_witness: Optional[str]
    blocking_pair: Optional[BlockingPairWitness]
    blocking_coalition: Optional[BlockingCoalitionWitness]
    renegotiation_proof: Optional[bool] = None
    renegotiation_witness: Optional[str] = None
    methods: Dict[str, str] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Individual rationality


def check_individual_rationality(instance, allocation, epsilon: Fraction,
                                 payoffs: Optional[PayoffReport] = None):
    """No agent may sit more than epsilon below its IRP.

    Hospital rationality is per seat: every seat contribution must reach the
    hospital's baseline minus epsilon (the baseline is the hospital's outside
    option for one position, which is also the free-seat blocking threshold).
    """
    report = payoffs or evaluate_payoffs(instance, allocation)
    for d, doc in instance.doctors.items():
        if report.doctor_payoffs[d] < doc.irp - epsilon:
            return False, f"doctor {d} below IRP"
    for h, hosp in instance.hospitals.items():
        value = report.hospital_payoffs[h]
        if value is NEG_INF:
            return False, f"hospital {h} over quota"
        if instance.model == GENERAL_ENUMERATED:
            if allocation.hospital_members(h) and value < hosp.irp - epsilon:
                return False, f"hospital {h} below IRP"
            continue
        for d in allocation.hospital_members(h):
            if seat_contribution(instance, allocation, d, h) < hosp.irp - epsilon:
                return False, f"hospital {h} seat {d} below the per-seat baseline"
    return True, None


# ---------------------------------------------------------------------------
# Pair blocking


def _open_interval_point(lo: Fraction, hi: Fraction, lo_cap: Fraction, hi_cap: Fraction):
    """A point of (lo, hi) within [lo_cap, hi_cap], or None.

    The open bounds are the strict blocking thresholds; the caps are the
    attainable payoff interval.
    """
    if lo >= hi:
        return None
    left = max(lo, lo_cap)
    right = min(hi, hi_cap)
    if left > right:
        return None
    if left < right:
        return (left + right) / 2
    # Single candidate point: admissible only if strictly inside (lo, hi).
    if lo < left < hi:
        return left
    return None


def _pair_block_profile(game: BimatrixGame, f_floor: Fraction, g_floor: Fraction,
                        grid_mesh: int = 8):
    """A profile with doctor payoff > f_floor and partner payoff > g_floor.

    Returns (x, y, cycle_lambda, method) or None when no such profile exists.
    Exact for the three structured classes, grid-based otherwise.
    """
    a, m = game.doctor_matrix, game.hospital_matrix
    if game.class_tag == ZERO_SUM:
        point = _open_interval_point(f_floor, -g_floor, matrix_min(a), matrix_max(a))
        if point is None:
            return None
        x, y, _ = achieve_value_zero_sum(a, point)
        return x, y, None, EXACT_INTERVAL
    if game.class_tag == STRICTLY_COMPETITIVE:
        tr = affine_transform(a, m)
        z = tr.image
        z_lo = tr.image_doctor_value(f_floor)
        z_hi = -tr.image_hospital_value(g_floor)
        point = _open_interval_point(z_lo, z_hi, matrix_min(z), matrix_max(z))
        if point is None:
            return None
        x, y, _ = achieve_value_zero_sum(z, point)
        return x, y, None, EXACT_INTERVAL
    if game.class_tag == REPEATED:
        try:
            _, (f1, _) = _hull_lp(a, m, objective=("max_f",), g_floor=g_floor)
            lam_g, (f2, g1) = _hull_lp(a, m, objective=("max_g",), f_floor=f_floor)
        except Exception:
            return None
        if not (f1 > f_floor and g1 > g_floor):
            return None
        lam_f, (ff, gf) = _hull_lp(a, m, objective=("max_f",), g_floor=g_floor)
        mix = {}
        for cell, w in lam_f.items():
            mix[cell] = mix.get(cell, Fraction(0)) + w / 2
        for cell, w in lam_g.items():
            mix[cell] = mix.get(cell, Fraction(0)) + w / 2
        f_mid = sum(a[s][t] * w for (s, t), w in mix.items())
        g_mid = sum(m[s][t] * w for (s, t), w in mix.items())
        if f_mid > f_floor and g_mid > g_floor:
            return None, None, mix, EXACT_LP
        return None
    # General strategic pair: grid scan, exact arithmetic at every grid point.
    best = None
    for x in simplex_grid(game.n_rows, grid_mesh):
        for y in simplex_grid(game.n_cols, grid_mesh):
            if bilinear(x, a, y) > f_floor and bilinear(x, m, y) > g_floor:
                best = (x, y, None, grid_method(grid_mesh))
                break
        if best:
            break
    return best


def _pair_thresholds(instance, allocation, payoffs, d, partner):
    """(doctor floor, partner floor) a blocking profile must strictly beat."""
    f_floor = payoffs.doctor_payoffs[d]
    if instance.model == ROOMMATES:
        return f_floor, payoffs.doctor_payoffs[partner]
    hosp = instance.hospitals[partner]
    members = allocation.hospital_members(partner)
    if allocation.matching.get(d) == partner:
        g_floor = seat_contribution(instance, allocation, d, partner)
    elif len(members) >= hosp.quota:
        g_floor = min(seat_contribution(instance, allocation, dd, partner) for dd in members)
    else:
        g_floor = hosp.irp
    return f_floor, g_floor


def find_blocking_pair(instance, allocation, epsilon: Fraction,
                       grid_mesh: int = 8) -> Optional[BlockingPairWitness]:
    """First pair able to rematch with both sides gaining strictly more than epsilon."""
    payoffs = evaluate_payoffs(instance, allocation)
    if instance.model == GENERAL_ENUMERATED:
        witness = _enumerated_blocking_coalition(instance, allocation, payoffs, epsilon, max_size=1)
        if witness is None:
            return None
        d = witness.doctors[0]
        members = frozenset(witness.doctors)
        new_f = instance.coalition_doctor_payoffs[(d, members, witness.hospital)]
        current_g = payoffs.hospital_payoffs[witness.hospital]
        new_g = instance.coalition_hospital_payoffs[(members, witness.hospital)]
        return BlockingPairWitness(
            doctor=d,
            partner=witness.hospital,
            doctor_gain=new_f - payoffs.doctor_payoffs[d],
            partner_gain=(new_g - current_g) if current_g is not NEG_INF else new_g,
            method=EXACT_TABLE,
        )
    for d in instance.doctor_ids:
        for partner in instance.partner_options(d):
            # A matched pair is checked against itself too: a joint move that
            # strictly improves both sides is a blocking deviation.
            game = instance.game_for(d, partner)
            f_floor, g_floor = _pair_thresholds(instance, allocation, payoffs, d, partner)
            found = _pair_block_profile(
                game, f_floor + epsilon, g_floor + epsilon, grid_mesh=grid_mesh
            )
            if found is None:
                continue
            x, y, lam, method = found
            if lam is not None:
                f_new = sum(game.doctor_matrix[s][t] * w for (s, t), w in lam.items())
                g_new = sum(game.hospital_matrix[s][t] * w for (s, t), w in lam.items())
            else:
                f_new = bilinear(x, game.doctor_matrix, y)
                g_new = bilinear(x, game.hospital_matrix, y)
            # Witness replay: the claimed strict gains must re-evaluate exactly.
            if not (f_new > f_floor + epsilon and g_new > g_floor + epsilon):
                raise MatchGamesError("blocking witness failed exact replay")
            return BlockingPairWitness(
                doctor=d,
                partner=partner,
                doctor_gain=f_new - payoffs.doctor_payoffs[d],
                partner_gain=g_new - g_floor,
                method=method,
                x=x,
                y=y,
                cycle_distribution=lam,
            )
    return None


# ---------------------------------------------------------------------------
# Coalition blocking


def _best_seat_value_above(game: BimatrixGame, f_floor: Fraction):
    """sup of the partner's payoff over profiles with doctor payoff > f_floor.

    Returns None when the doctor cannot strictly beat the floor at all.  The
    supremum may be unattained; strict-sum comparisons remain valid because
    payoffs approach it arbitrarily closely.
    """
    a, m = game.doctor_matrix, game.hospital_matrix
    if game.class_tag == ZERO_SUM:
        if matrix_max(a) <= f_floor:
            return None
        return -max(f_floor, matrix_min(a))
    if game.class_tag == STRICTLY_COMPETITIVE:
        tr = affine_transform(a, m)
        z = tr.image
        z_floor = tr.image_doctor_value(f_floor)
        if matrix_max(z) <= z_floor:
            return None
        return tr.original_hospital_value(-max(z_floor, matrix_min(z)))
    if game.class_tag == REPEATED:
        try:
            _, (f_best, _) = _hull_lp(a, m, objective=("max_f",))
        except Exception:
            return None
        if f_best <= f_floor:
            return None
        _, (_, g_best) = _hull_lp(a, m, objective=("max_g",), f_floor=f_floor)
        return g_best
    raise UnsupportedClassError(f"coalition scan lacks an exact method for {game.class_tag}")


def find_blocking_coalition(instance, allocation, epsilon: Fraction,
                            max_coalition_size: int = 5,
                            cap: int = 1 << 16) -> Optional[BlockingCoalitionWitness]:
    """Exhaustive scan for a coalition (I, h) all of whose members gain > epsilon.

    Additive separability reduces the scan to per-doctor frontier suprema;
    the enumerated model scans its explicit tables.
    """
    payoffs = evaluate_payoffs(instance, allocation)
    if instance.model == GENERAL_ENUMERATED:
        return _enumerated_blocking_coalition(
            instance, allocation, payoffs, epsilon, max_size=max_coalition_size
        )
    if instance.model != ADDITIVE_SEPARABLE:
        raise UnsupportedClassError("coalition scan applies to additive separable or enumerated models")

    for h in instance.hospital_ids:
        hosp = instance.hospitals[h]
        current = payoffs.hospital_payoffs[h]
        eligible = []
        for d in instance.doctor_ids:
            if not instance.has_game(d, h):
                continue
            sup_g = _best_seat_value_above(
                instance.game_for(d, h), payoffs.doctor_payoffs[d] + epsilon
            )
            if sup_g is not None:
                eligible.append((d, sup_g))
        max_size = min(max_coalition_size, hosp.quota, len(eligible))
        count = 0
        for size in range(1, max_size + 1):
            for combo in combinations(eligible, size):
                count += 1
                if count > cap:
                    raise CapExceededError("coalition scan exceeded its cap")
                total = sum((g for _, g in combo), Fraction(0))
                threshold = current + epsilon if current is not NEG_INF else None
                if threshold is None or total > threshold:
                    witness = _realise_coalition(
                        instance, payoffs, [d for d, _ in combo], h, epsilon, threshold
                    )
                    if witness is not None:
                        return witness
    return None


def _realise_coalition(instance, payoffs, doctors, h, epsilon, threshold):
    """Build explicit profiles backing the coalition's strict gains, or None."""
    # Shrink the per-doctor slack until the summed seat values clear the bar.
    for halvings in range(64):
        delta = Fraction(1, 2 ** halvings)
        profiles = {}
        total = Fraction(0)
        ok = True
        for d in doctors:
            game = instance.game_for(d, h)
            floor = payoffs.doctor_payoffs[d] + epsilon
            out = _profile_just_above(game, floor, delta)
            if out is None:
                ok = False
                break
            f_val, g_val, x, y, lam = out
            profiles[d] = (x, y, lam)
            total += g_val
        if ok and (threshold is None or total > threshold):
            witness = BlockingCoalitionWitness(
                doctors=tuple(doctors),
                hospital=h,
                method=EXACT_INTERVAL,
                hospital_gain=(total - threshold + epsilon) if threshold is not None else None,
            )
            witness.profiles = {d: (p[0], p[1]) for d, p in profiles.items()}
            return witness
    return None


def _profile_just_above(game, f_floor, delta):
    """A profile with doctor payoff in (f_floor, f_floor + delta], partner payoff maximal."""
    a, m = game.doctor_matrix, game.hospital_matrix
    if game.class_tag in (ZERO_SUM, STRICTLY_COMPETITIVE):
        if game.class_tag == ZERO_SUM:
            z, tr = a, None
        else:
            tr = affine_transform(a, m)
            z = tr.image
            f_floor = tr.image_doctor_value(f_floor)
        z_min, z_max = matrix_min(z), matrix_max(z)
        if z_max <= f_floor:
            return None
        if z_min > f_floor:
            target = z_min
        else:
            target = min(f_floor + delta, (f_floor + z_max) / 2)
        x, y, _ = achieve_value_zero_sum(z, target)
        return (
            bilinear(x, a, y),
            bilinear(x, m, y),
            x,
            y,
            None,
        )
    if game.class_tag == REPEATED:
        try:
            lam, (f_val, g_val) = _hull_lp(a, m, objective=("max_g",), f_floor=f_floor + delta)
        except Exception:
            return None
        if f_val <= f_floor:
            return None
        return f_val, g_val, None, None, lam
    raise UnsupportedClassError(game.class_tag)


def _enumerated_blocking_coalition(instance, allocation, payoffs, epsilon, max_size):
    # Enumerated-model convention: every doctor in the coalition gains
    # strictly (by more than epsilon) while the hospital gains weakly.  With
    # the hospital also required to gain strictly, null-payoff hospitals
    # (hedonic and roommates encodings) could never block anything.
    for (members, h), g_value in sorted(
        instance.coalition_hospital_payoffs.items(), key=lambda kv: (len(kv[0][0]), sorted(kv[0][0]), kv[0][1])
    ):
        if len(members) > max_size or len(members) > instance.hospitals[h].quota:
            continue
        current_g = payoffs.hospital_payoffs[h]
        if current_g is not NEG_INF and not g_value >= current_g:
            continue
        if all(
            instance.coalition_doctor_payoffs[(d, members, h)] > payoffs.doctor_payoffs[d] + epsilon
            for d in members
        ):
            return BlockingCoalitionWitness(
                doctors=tuple(sorted(members)), hospital=h, method=EXACT_TABLE
            )
    return None


# ---------------------------------------------------------------------------
# Core enumeration for the enumerated model


def enumerate_core(instance: MatchingGameInstance, cap: int = 10_000_000) -> List[Allocation]:
    """All core stable full partitions of the enumerated model.

    Every doctor is assigned to some hospital (the model's outcomes are
    partitions of the doctor set among hospitals); quotas bound group sizes.
    """
    if instance.model != GENERAL_ENUMERATED:
        raise UnsupportedClassError("core enumeration applies to the enumerated model")
    doctors = instance.doctor_ids
    hospitals = instance.hospital_ids
    if len(doctors) > 10:
        raise CapExceededError("core enumeration caps at 10 doctors")
    if len(hospitals) ** len(doctors) > cap:
        raise CapExceededError("assignment space exceeds the cap")

    stable = []
    def assign(idx, matching):
        if idx == len(doctors):
            allocation = Allocation(matching=dict(matching))
            counts = {}
            for d, h in matching.items():
                counts[h] = counts.get(h, 0) + 1
            if any(counts.get(h, 0) > instance.hospitals[h].quota for h in hospitals):
                return
            try:
                payoffs = evaluate_payoffs(instance, allocation)
            except MatchGamesError:
                return  # missing table entry: assignment outside the model
            ok, _ = check_individual_rationality(instance, allocation, Fraction(0), payoffs)
            if not ok:
                return
            if _enumerated_blocking_coalition(
                instance, allocation, payoffs, Fraction(0), max_size=len(doctors)
            ) is None:
                stable.append(allocation)
            return
        d = doctors[idx]
        for h in hospitals:
            matching[d] = h
            assign(idx + 1, matching)
        del matching[d]

    assign(0, {})
    return stable


# ---------------------------------------------------------------------------
# Renegotiation proofness (delegates the CNE characterisation checks)


def verify_renegotiation_proof(instance, allocation, epsilon: Fraction):
    """Every couple must play a CNE for its freshly recomputed reservations."""
    from .renegotiation import check_couple_is_cne, reservation_payoffs

    for d, partner in allocation.matched_pairs():
        if instance.model == ROOMMATES and d > partner:
            continue
        reservations = reservation_payoffs(instance, allocation, d, partner, epsilon)
        ok, witness = check_couple_is_cne(instance, allocation, d, partner, reservations, epsilon)
        if not ok:
            return False, f"couple ({d},{partner}): {witness}"
    return True, None


def full_report(instance, allocation, epsilon: Fraction,
                coalition_size: Optional[int] = None,
                grid_mesh: int = 8,
                check_renegotiation: bool = True) -> StabilityReport:
    ir_ok, ir_witness = check_individual_rationality(instance, allocation, epsilon)
    pair = find_blocking_pair(instance, allocation, epsilon, grid_mesh=grid_mesh)
    coalition = None
    if coalition_size and instance.model in (ADDITIVE_SEPARABLE, GENERAL_ENUMERATED):
        coalition = find_blocking_coalition(instance, allocation, epsilon, coalition_size)
    reneg_ok = reneg_witness = None
    if check_renegotiation and instance.model != GENERAL_ENUMERATED:
        try:
            reneg_ok, reneg_witness = verify_renegotiation_proof(instance, allocation, epsilon)
        except UnsupportedClassError as exc:
            reneg_ok, reneg_witness = None, f"unsupported: {exc}"
    tags = {ZERO_SUM: EXACT_INTERVAL, STRICTLY_COMPETITIVE: EXACT_INTERVAL,
            REPEATED: EXACT_LP, GENERAL: grid_method(grid_mesh)}
    methods = {"pair": pair.method if pair else "/".join(sorted(
        {tags[g.class_tag] for g in instance.games.values()} or {EXACT_TABLE}
    ))}
    if coalition is not None:
        methods["coalition"] = coalition.method
    elif coalition_size:
        methods["coalition"] = EXACT_TABLE if instance.model == GENERAL_ENUMERATED else EXACT_INTERVAL
    if reneg_ok is not None:
        methods["renegotiation"] = EXACT_LP
    return StabilityReport(
        individually_rational=ir_ok,
        ir_witness=ir_witness,
        blocking_pair=pair,
        blocking_coalition=coalition,
        renegotiation_proof=reneg_ok,
        renegotiation_witness=reneg_witness,
        methods=methods,
    )


# ---------------------------------------------------------------------------
# Grid brute force over roommates allocations


def all_matchings(items: List[str]):
    """All partitions of ``items`` into pairs and singletons."""
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for sub in all_matchings(rest):
        yield [(head, None)] + sub
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for sub in all_matchings(remaining):
            yield [(head, partner)] + sub


def grid_stable_roommates_search(instance, mesh: int = 16,
                                 tolerance: Fraction = Fraction(0)):
    """Search all matchings x per-pair value grids for a tolerance-stable allocation.

    Zero-sum and strictly competitive pairs only: the Pareto frontier is one
    dimensional, so profiles reduce to a grid over the attainable value
    interval.  Returns (matching, payoffs) of the first allocation without a
    blocking pair gaining more than ``tolerance`` on both sides, else None.
    """
    if instance.model != ROOMMATES:
        raise UnsupportedClassError("grid search is a roommates oracle")
    doctors = instance.doctor_ids
    intervals = {}
    for key, game in instance.games.items():
        if game.class_tag == ZERO_SUM:
            z = game.doctor_matrix
            to_f = lambda v: v
            to_g = lambda v: -v
        elif game.class_tag == STRICTLY_COMPETITIVE:
            tr = affine_transform(game.doctor_matrix, game.hospital_matrix)
            z = tr.image
            to_f = tr.original_doctor_value
            to_g = lambda v, _tr=tr: _tr.original_hospital_value(-v)
        else:
            raise UnsupportedClassError("grid oracle handles zero-sum and strictly competitive pairs")
        lo, hi = matrix_min(z), matrix_max(z)
        points = [lo + (hi - lo) * Fraction(k, mesh) for k in range(mesh + 1)] if hi > lo else [lo]
        intervals[key] = [(to_f(v), to_g(v)) for v in points]

    for matching in all_matchings(list(doctors)):
        pairs = [(a, b) for a, b in matching if b is not None]
        if any(not instance.has_game(a, b) for a, b in pairs):
            continue
        singles = [a for a, b in matching if b is None]
        choice_sets = [intervals[instance.pair_key(a, b)] for a, b in pairs]

        def rec(idx, payoffs):
            if idx == len(pairs):
                for d in singles:
                    payoffs[d] = instance.doctors[d].irp
                if _grid_alloc_is_stable(instance, payoffs, tolerance):
                    return dict(payoffs)
                return None
            a, b = pairs[idx]
            for f_val, g_val in choice_sets[idx]:
                payoffs[a], payoffs[b] = f_val, g_val
                hit = rec(idx + 1, payoffs)
                if hit is not None:
                    return hit
            return None

        hit = rec(0, {})
        if hit is not None:
            return matching, hit
    return None


def _grid_alloc_is_stable(instance, payoffs, tolerance):
    for d, e in combinations(instance.doctor_ids, 2):
        if not instance.has_game(d, e):
            continue
        if payoffs[d] < instance.doctors[d].irp - tolerance:
            return False
        game = instance.game_for(d, e)
        if _pair_block_profile(game, payoffs[d] + tolerance, payoffs[e] + tolerance) is not None:
            return False
    for d in instance.doctor_ids:
        if payoffs[d] < instance.doctors[d].irp - tolerance:
            return False
    return True
