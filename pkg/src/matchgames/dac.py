"""Deferred acceptance with competitions for additive separable instances.

Unmatched doctors propose the profile that maximises their payoff subject to
beating the target hospital's weakest seat by epsilon (or the free-seat
baseline).  A proposal against a full hospital triggers a second-price
auction between proposer and weakest incumbent: each side's bid is the most
it can concede while staying above its reservation (best option elsewhere),
the higher bid wins, ties keep the incumbent, and the winner settles at the
loser's bid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .core import (
    ADDITIVE_SEPARABLE,
    REPEATED,
    Allocation,
    MatchingGameInstance,
    format_rational,
)
from .errors import EpsilonNotPositiveError, MatchGamesError, UnsupportedClassError
from .qcqp import PairOutcome, max_f_given_g_floor, max_g_given_f_floor

FREE_SEAT = "__free_seat__"


@dataclass
class Proposal:
    """A doctor's best admissible option; hospital None means stay unmatched."""

    hospital: Optional[str]
    displaced: Optional[str]  # FREE_SEAT or an incumbent doctor id
    outcome: Optional[PairOutcome]
    doctor_value: Fraction


@dataclass
class DacTrace:
    """Event log and counters.

    ``iterations`` counts seat-binding events (acceptances and competition
    settlements), the quantity whose epsilon-sized payoff increases drive the
    termination bound; ``loop_passes`` counts raw proposer turns.
    """

    events: List[str] = field(default_factory=list)
    iterations: int = 0
    loop_passes: int = 0
    competitions: int = 0

    def log(self, line: str):
        self.events.append(line)


@dataclass
class DacState:
    instance: MatchingGameInstance
    epsilon: Fraction
    matching: Dict[str, Optional[str]] = field(default_factory=dict)
    seats: Dict[Tuple[str, str], PairOutcome] = field(default_factory=dict)
    unmatched: List[str] = field(default_factory=list)
    trace: DacTrace = field(default_factory=DacTrace)

    def members(self, h: str) -> List[str]:
        return [d for (hh, d) in sorted(self.seats) if hh == h]

    def seat_threshold(self, h: str) -> Fraction:
        """Baseline while seats are free, else the weakest seat contribution."""
        hosp = self.instance.hospitals[h]
        members = self.members(h)
        if len(members) < hosp.quota:
            return hosp.irp
        return min(self.seats[(h, d)].g for d in members)

    def weakest_incumbent(self, h: str) -> str:
        members = self.members(h)
        best = None
        for d in members:  # sorted id order; ties -> lowest doctor id
            g = self.seats[(h, d)].g
            if best is None or g < best[0]:
                best = (g, d)
        return best[1]

    def to_allocation(self) -> Allocation:
        allocation = Allocation(matching=dict(self.matching))
        for (h, d), outcome in self.seats.items():
            if outcome.cycle is not None:
                allocation.cycles[(h, d)] = outcome.cycle
            else:
                allocation.doctor_strategies[d] = outcome.x
                allocation.hospital_strategies[(h, d)] = outcome.y
        return allocation


def hospital_options(state: DacState, d: str, exclude: Tuple[str, ...] = ()) -> List[Tuple[Fraction, int, str, Optional[str], PairOutcome]]:
    """Feasible (value, hospital_index, hospital, displaced, outcome) options."""
    instance = state.instance
    eps = state.epsilon
    options = []
    for idx, h in enumerate(instance.hospital_ids):
        if h in exclude or not instance.has_game(d, h):
            continue
        game = instance.game_for(d, h)
        hosp = instance.hospitals[h]
        members = state.members(h)
        if len(members) < hosp.quota:
            threshold = hosp.irp + eps
            displaced = FREE_SEAT
        else:
            threshold = min(state.seats[(h, dd)].g for dd in members) + eps
            displaced = state.weakest_incumbent(h)
        outcome = max_f_given_g_floor(game, threshold)
        if outcome is None:
            continue
        options.append((outcome.f, idx, h, displaced, outcome))
    return options


def optimal_proposal(state: DacState, d: str, epsilon: Fraction) -> Proposal:
    """Doctor d's best proposal given the current seats.

    The unmatched option always competes; a hospital is chosen only when it
    beats the doctor's IRP strictly.  Value ties across hospitals go to the
    lowest hospital index.
    """
    if epsilon != state.epsilon:
        raise MatchGamesError("proposal epsilon must match the run epsilon")
    irp = state.instance.doctors[d].irp
    options = hospital_options(state, d)
    options.sort(key=lambda opt: (-opt[0], opt[1]))
    if options and options[0][0] > irp:
        value, _, h, displaced, outcome = options[0]
        return Proposal(hospital=h, displaced=displaced, outcome=outcome, doctor_value=value)
    return Proposal(hospital=None, displaced=None, outcome=None, doctor_value=irp)


def reservation_value(state: DacState, d: str, h: str) -> Fraction:
    """Best value d can secure outside hospital h (including staying single)."""
    irp = state.instance.doctors[d].irp
    options = hospital_options(state, d, exclude=(h,))
    best = irp
    for value, _, _, _, _ in options:
        if value > best:
            best = value
    return best


def competition_bid(state: DacState, d: str, h: str, epsilon: Fraction):
    """Reservation payoff and bid of doctor d when competing for h.

    The bid is the most per-seat value d can hand to h while keeping her own
    payoff at or above the reservation.
    """
    if epsilon != state.epsilon:
        raise MatchGamesError("bid epsilon must match the run epsilon")
    beta = reservation_value(state, d, h)
    game = state.instance.game_for(d, h)
    outcome = max_g_given_f_floor(game, beta)
    if outcome is None:
        # The doctor cannot reach her reservation inside this game at all;
        # she concedes nothing and effectively bids below any incumbent.
        return beta, None, None
    return beta, outcome.g, outcome


def settle_competition(state: DacState, winner: str, loser_bid: Fraction, h: str,
                       epsilon: Fraction) -> PairOutcome:
    """Winner's final profile: best own payoff with per-seat value >= loser's bid."""
    if epsilon != state.epsilon:
        raise MatchGamesError("settle epsilon must match the run epsilon")
    game = state.instance.game_for(winner, h)
    outcome = max_f_given_g_floor(game, loser_bid)
    if outcome is None:
        raise MatchGamesError("winner cannot match the losing bid; auction invariant broken")
    return outcome


def run_dac(instance: MatchingGameInstance, epsilon: Fraction,
            max_iterations: Optional[int] = None) -> Tuple[Allocation, DacTrace]:
    """Run deferred acceptance with competitions to an eps-pairwise stable allocation."""
    if epsilon <= 0:
        raise EpsilonNotPositiveError("epsilon must be strictly positive")
    if instance.model != ADDITIVE_SEPARABLE:
        raise MatchGamesError("run_dac requires an additive separable instance")
    for key, game in instance.games.items():
        if game.class_tag not in ("zero_sum", "strictly_competitive", "repeated"):
            raise UnsupportedClassError(f"pair {key} has unsupported class {game.class_tag}")

    state = DacState(
        instance=instance,
        epsilon=epsilon,
        matching={d: None for d in instance.doctors},
        unmatched=list(instance.doctor_ids),
    )
    for h, hosp in instance.hospitals.items():
        state.trace.log(f"baseline h={h} g={format_rational(hosp.irp)}")

    if max_iterations is None:
        max_iterations = _default_iteration_cap(instance, epsilon)

    doctor_order = {d: i for i, d in enumerate(instance.doctor_ids)}
    settled_out: set = set()
    while state.unmatched:
        if state.trace.loop_passes > max_iterations:
            raise MatchGamesError("iteration cap exceeded; monotonicity invariant broken")
        state.trace.loop_passes += 1
        d = min(state.unmatched, key=doctor_order.__getitem__)
        proposal = optimal_proposal(state, d, epsilon)
        target = proposal.hospital or "unmatched"
        displaced = "free" if proposal.displaced == FREE_SEAT else (proposal.displaced or "-")
        state.trace.log(
            f"propose d={d} h={target} displace={displaced} "
            f"value={format_rational(proposal.doctor_value)}"
        )
        if proposal.hospital is None:
            state.trace.log(f"exit d={d} value={format_rational(proposal.doctor_value)}")
            state.unmatched.remove(d)
            settled_out.add(d)
            continue
        h = proposal.hospital
        out = proposal.outcome
        if proposal.displaced == FREE_SEAT:
            state.trace.log(
                f"accept d={d} h={h} f={format_rational(out.f)} g={format_rational(out.g)}"
            )
            state.trace.iterations += 1
            state.seats[(h, d)] = out
            state.matching[d] = h
            state.unmatched.remove(d)
            continue

        incumbent = proposal.displaced
        state.trace.competitions += 1
        beta_p, bid_p, _ = competition_bid(state, d, h, epsilon)
        beta_i, bid_i, _ = competition_bid(state, incumbent, h, epsilon)
        state.trace.log(
            f"compete h={h} proposer={d} bid={_fmt_bid(bid_p)} "
            f"incumbent={incumbent} bid={_fmt_bid(bid_i)}"
        )
        proposer_wins = _bid_beats(bid_p, bid_i)
        if proposer_wins:
            winner, loser, loser_bid = d, incumbent, bid_i
        else:
            winner, loser, loser_bid = incumbent, d, bid_p
        if loser_bid is None:
            # The loser could not bid at all; the winner keeps the pressure of
            # the proposal threshold instead of an unbounded concession.
            settled = out if winner == d else state.seats[(h, incumbent)]
        else:
            settled = settle_competition(state, winner, loser_bid, h, epsilon)
        state.trace.log(
            f"settle winner={winner} h={h} f={format_rational(settled.f)} "
            f"g={format_rational(settled.g)} out={loser if winner == d else 'none'}"
        )
        state.trace.iterations += 1
        if winner == d:
            del state.seats[(h, incumbent)]
            state.matching[incumbent] = None
            state.seats[(h, d)] = settled
            state.matching[d] = h
            state.unmatched.remove(d)
            state.unmatched.append(incumbent)
        else:
            state.seats[(h, incumbent)] = settled
            # proposer stays unmatched; her next proposal faces a higher bar

    allocation = state.to_allocation()
    return allocation, state.trace


def _bid_beats(bid_proposer, bid_incumbent) -> bool:
    """Highest bid wins; the incumbent keeps her seat on ties or both-None."""
    if bid_proposer is None:
        return False
    if bid_incumbent is None:
        return True
    return bid_proposer > bid_incumbent


def _fmt_bid(bid) -> str:
    return format_rational(bid) if bid is not None else "none"


def _default_iteration_cap(instance: MatchingGameInstance, epsilon: Fraction) -> int:
    from .core import matrix_max

    g_max = Fraction(0)
    for (d, h), game in instance.games.items():
        spread = matrix_max(game.hospital_matrix) - instance.hospitals[h].irp
        if spread > g_max:
            g_max = spread
    bound = g_max / epsilon
    return int(bound) + 10 * (len(instance.doctors) + 1) + 100
