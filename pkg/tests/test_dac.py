import random
from fractions import Fraction as F

import pytest

from matchgames.core import (
    Allocation,
    BimatrixGame,
    Doctor,
    Hospital,
    MatchingGameInstance,
    evaluate_payoffs,
    matrix_max,
    negate,
)
from matchgames.dac import (
    DacState,
    FREE_SEAT,
    competition_bid,
    optimal_proposal,
    run_dac,
    settle_competition,
)
from matchgames.errors import EpsilonNotPositiveError
from matchgames.gen import generate_instance
from matchgames.qcqp import PairOutcome
from matchgames.stability import check_individual_rationality, find_blocking_pair

from fixtures import multi_auction_instance


def one_hospital_instance(a_rows, doctor_irp=F(-1), hospital_irp=F(0), quota=1):
    a = tuple(tuple(F(v) for v in row) for row in a_rows)
    return MatchingGameInstance(
        model="additive_separable",
        doctors={"d1": Doctor("d1", doctor_irp, tuple(f"s{i}" for i in range(len(a))))},
        hospitals={"h1": Hospital("h1", hospital_irp, quota, tuple(f"t{j}" for j in range(len(a[0]))))},
        games={("d1", "h1"): BimatrixGame(a, negate(a), "zero_sum")},
    )


def fresh_state(instance, epsilon):
    return DacState(
        instance=instance,
        epsilon=epsilon,
        matching={d: None for d in instance.doctors},
        unmatched=list(instance.doctor_ids),
    )


class TestOptimalProposal:
    def test_unreachable_baseline_means_unmatched(self):
        # The hospital demands baseline + eps = 1/2 per seat, but this game
        # never pays the hospital more than 0: the doctor stays unmatched.
        inst = one_hospital_instance([[0, 4], [2, 2]], doctor_irp=F(-1))
        state = fresh_state(inst, F(1, 2))
        proposal = optimal_proposal(state, "d1", F(1, 2))
        assert proposal.hospital is None
        assert proposal.doctor_value == F(-1)

    def test_free_seat_threshold_binds(self):
        # Attainable interval [-4, 4]: the free-seat constraint caps the
        # doctor at -(0 + 1/2).
        inst = one_hospital_instance([[-4, 4]], doctor_irp=F(-1))
        state = fresh_state(inst, F(1, 2))
        proposal = optimal_proposal(state, "d1", F(1, 2))
        assert proposal.hospital == "h1"
        assert proposal.displaced == FREE_SEAT
        assert proposal.doctor_value == F(-1, 2)

    def test_displacement_threshold_is_min_seat_plus_eps(self):
        inst = MatchingGameInstance(
            model="additive_separable",
            doctors={
                "d1": Doctor("d1", F(-10), ("s",)),
                "d2": Doctor("d2", F(-10), ("s",)),
                "d3": Doctor("d3", F(-10), ("s",)),
            },
            hospitals={"h1": Hospital("h1", F(0), 2, ("t1", "t2"))},
            games={
                (d, "h1"): BimatrixGame(((F(-9), F(9)),), ((F(9), F(-9)),), "zero_sum")
                for d in ("d1", "d2", "d3")
            },
        )
        state = fresh_state(inst, F(1))
        # Incumbent contributions 5 and 3: the proposal must beat 3 + 1 = 4.
        state.matching["d1"] = "h1"
        state.matching["d2"] = "h1"
        state.unmatched = ["d3"]
        state.seats[("h1", "d1")] = PairOutcome(f=F(-5), g=F(5), x=(F(1),), y=None)
        state.seats[("h1", "d2")] = PairOutcome(f=F(-3), g=F(3), x=(F(1),), y=None)
        assert state.seat_threshold("h1") == F(3)
        proposal = optimal_proposal(state, "d3", F(1))
        assert proposal.displaced == "d2"
        assert proposal.outcome.g >= F(4)


class TestCompetitionBid:
    def test_no_outside_option_bids_everything(self):
        inst = one_hospital_instance([[1, -1], [-1, 1]], doctor_irp=F(-2))
        state = fresh_state(inst, F(1, 10))
        beta, bid, _ = competition_bid(state, "d1", "h1", F(1, 10))
        assert beta == F(-2)
        assert bid == F(1)  # -min A: the doctor concedes down to her floor

    def test_reservation_at_max_bids_negated_max(self):
        inst = one_hospital_instance([[1, -1], [-1, 1]], doctor_irp=F(1))
        state = fresh_state(inst, F(1, 10))
        beta, bid, _ = competition_bid(state, "d1", "h1", F(1, 10))
        assert beta == F(1)
        assert bid == F(-1)


class TestSettle:
    def test_winner_matches_losing_bid_exactly(self):
        inst = one_hospital_instance([[1, -1], [-1, 1]])
        state = fresh_state(inst, F(1, 10))
        outcome = settle_competition(state, "d1", F(1, 2), "h1", F(1, 10))
        assert outcome.f == F(-1, 2) and outcome.g == F(1, 2)

    def test_slack_bid_frees_the_winner(self):
        inst = one_hospital_instance([[1, -1], [-1, 1]])
        state = fresh_state(inst, F(1, 10))
        outcome = settle_competition(state, "d1", F(-5), "h1", F(1, 10))
        assert outcome.f == F(1)  # unconstrained maximum


class TestRunDac:
    def test_epsilon_must_be_positive(self):
        inst = one_hospital_instance([[1, -1], [-1, 1]])
        with pytest.raises(EpsilonNotPositiveError):
            run_dac(inst, F(0))

    def test_empty_doctor_set(self):
        inst = MatchingGameInstance(
            model="additive_separable",
            doctors={},
            hospitals={"h1": Hospital("h1", F(0), 1, ("t",))},
            games={},
        )
        alloc, trace = run_dac(inst, F(1, 2))
        assert alloc.matching == {} and trace.iterations == 0

    def test_multi_auction_matching(self):
        inst = multi_auction_instance()
        alloc, trace = run_dac(inst, F(1, 2))
        assert alloc.matching == {"a": "alpha", "b": "alpha", "c": "beta", "d": "beta"}
        payoffs = evaluate_payoffs(inst, alloc)
        for seller in "abcd":
            assert F(0) <= payoffs.doctor_payoffs[seller] <= F(9)
        assert find_blocking_pair(inst, alloc, F(1, 2)) is None

    def test_ties_go_to_incumbent(self):
        # Two identical doctors compete for a single seat; identical bids
        # mean the first-seated doctor keeps the seat.
        game = BimatrixGame(((F(-2), F(2)),), ((F(2), F(-2)),), "zero_sum")
        inst = MatchingGameInstance(
            model="additive_separable",
            doctors={
                "d1": Doctor("d1", F(-2), ("s",)),
                "d2": Doctor("d2", F(-2), ("s",)),
            },
            hospitals={"h1": Hospital("h1", F(0), 1, ("t1", "t2"))},
            games={("d1", "h1"): game, ("d2", "h1"): game},
        )
        alloc, trace = run_dac(inst, F(1, 10))
        assert alloc.matching["d1"] == "h1"
        assert alloc.matching["d2"] is None
        assert trace.competitions >= 1

    @pytest.mark.parametrize("classes", [
        ["zero_sum"], ["strictly_competitive"], ["repeated"],
        ["zero_sum", "strictly_competitive", "repeated"],
    ])
    def test_random_outputs_stable_and_rational(self, classes):
        eps = F(1, 10)
        for seed in range(6):
            inst = generate_instance(
                seed=seed, n_doctors=4, n_hospitals=2,
                max_strategies=3, max_quota=2, classes=classes,
            )
            alloc, trace = run_dac(inst, eps)
            assert find_blocking_pair(inst, alloc, eps) is None
            ok, witness = check_individual_rationality(inst, alloc, eps)
            assert ok, witness

    def test_unit_quota_matches_one_to_one_reference(self):
        # With q == 1 everywhere the run must agree with a direct
        # one-to-one deferred-acceptance reimplementation step for step.
        eps = F(1, 10)
        for seed in range(4):
            inst = generate_instance(
                seed=seed, n_doctors=3, n_hospitals=3,
                max_strategies=3, max_quota=1, classes=["zero_sum"],
            )
            alloc, _ = run_dac(inst, eps)
            reference = _reference_one_to_one_dac(inst, eps)
            assert alloc.matching == reference

    def test_full_hospital_threshold_never_decreases(self):
        # Replay the trace: once a hospital is full, its weakest-seat value
        # (the displacement threshold) must be nondecreasing.
        eps = F(1, 10)
        for seed in (3, 23, 31):
            inst = generate_instance(seed=seed, n_doctors=5, n_hospitals=3,
                                     max_strategies=4, max_quota=2, classes=["zero_sum"])
            _, trace = run_dac(inst, eps)
            seats = {}
            last_threshold = {}
            for line in trace.events:
                if not line.startswith(("accept", "settle")):
                    continue
                fields = dict(part.split("=") for part in line.split()[1:])
                h = fields["h"]
                g = F(fields["g"])
                if line.startswith("accept"):
                    seats.setdefault(h, {})[fields["d"]] = g
                else:
                    winner = fields["winner"]
                    out = fields["out"]
                    if out != "none":
                        seats[h].pop(out, None)
                    seats.setdefault(h, {})[winner] = g
                if len(seats[h]) >= inst.hospitals[h].quota:
                    threshold = min(seats[h].values())
                    if h in last_threshold:
                        assert threshold >= last_threshold[h]
                    last_threshold[h] = threshold


def _reference_one_to_one_dac(instance, eps):
    """Independent tiny one-to-one DAC used as a step-for-step oracle."""
    from matchgames.qcqp import max_f_given_g_floor, max_g_given_f_floor

    matching = {d: None for d in instance.doctor_ids}
    seats = {}
    unmatched = list(instance.doctor_ids)
    while unmatched:
        d = unmatched[0]
        best = (instance.doctors[d].irp, None, None)
        for idx, h in enumerate(instance.hospital_ids):
            holder = next((x for x, hh in matching.items() if hh == h), None)
            threshold = (seats[h] if holder else instance.hospitals[h].irp) + eps
            out = max_f_given_g_floor(instance.game_for(d, h), threshold)
            if out is not None and out.f > best[0]:
                best = (out.f, h, out)
        if best[1] is None:
            unmatched.pop(0)
            matching[d] = None
            continue
        h, out = best[1], best[2]
        holder = next((x for x, hh in matching.items() if hh == h), None)
        if holder is None:
            matching[d] = h
            seats[h] = out.g
            unmatched.pop(0)
            continue
        def bid(doc):
            beta = instance.doctors[doc].irp
            for idx2, h2 in enumerate(instance.hospital_ids):
                if h2 == h:
                    continue
                holder2 = next((x for x, hh in matching.items() if hh == h2), None)
                thr = (seats[h2] if holder2 else instance.hospitals[h2].irp) + eps
                o = max_f_given_g_floor(instance.game_for(doc, h2), thr)
                if o is not None and o.f > beta:
                    beta = o.f
            o = max_g_given_f_floor(instance.game_for(doc, h), beta)
            return o.g if o is not None else None
        bid_d, bid_holder = bid(d), bid(holder)
        proposer_wins = bid_d is not None and (bid_holder is None or bid_d > bid_holder)
        if proposer_wins:
            winner, loser_bid = d, bid_holder
            matching[holder] = None
            unmatched.pop(0)
            unmatched.append(holder)
            matching[d] = h
        else:
            winner, loser_bid = holder, bid_d
        if loser_bid is None:
            if winner == holder:
                continue
            settle = out
        else:
            settle = max_f_given_g_floor(instance.game_for(winner, h), loser_bid)
        seats[h] = settle.g
    return matching
