"""Domain model: exact rationals, bimatrix games, matching-game instances.

Everything numerical in this module is a :class:`fractions.Fraction`; floating
point never enters authoritative computations.  Matrices are stored as tuples
of tuples, row index = doctor pure strategy, column index = hospital pure
strategy.  Hospital matrices hold the hospital's *own* payoff (one sign
convention everywhere: a zero-sum pair has ``M == -A`` entrywise).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from .errors import (
    ClassTagViolationError,
    DimensionMismatchError,
    MalformedRationalError,
    MatchGamesError,
    NotStrictlyCompetitiveError,
    QuotaOutOfRangeError,
)

# Game class tags.
ZERO_SUM = "zero_sum"
STRICTLY_COMPETITIVE = "strictly_competitive"
REPEATED = "repeated"
GENERAL = "general"
GAME_CLASSES = (ZERO_SUM, STRICTLY_COMPETITIVE, REPEATED, GENERAL)

# Model kinds.
ADDITIVE_SEPARABLE = "additive_separable"
ROOMMATES = "roommates"
GENERAL_ENUMERATED = "general"
MODEL_KINDS = (ADDITIVE_SEPARABLE, ROOMMATES, GENERAL_ENUMERATED)


class NegInfinity:
    """Singleton sentinel for the hospital's over-quota payoff."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "-inf"

    def __lt__(self, other):
        return not isinstance(other, NegInfinity)

    def __gt__(self, other):
        return False

    def __le__(self, other):
        return True

    def __ge__(self, other):
        return isinstance(other, NegInfinity)


NEG_INF = NegInfinity()

Rational = Fraction
Matrix = Tuple[Tuple[Fraction, ...], ...]


def parse_rational(value: Union[int, str, Fraction]) -> Fraction:
    """Parse an exact rational from an int, a Fraction, or a "p/q" string."""
    if isinstance(value, bool):
        raise MalformedRationalError(f"not a rational literal: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            frac = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedRationalError(f"malformed rational literal: {value!r}") from exc
        if "." in text or "e" in text.lower():
            raise MalformedRationalError(
                f"rational literals must be integers or p/q strings, got {value!r}"
            )
        return frac
    raise MalformedRationalError(f"not a rational literal: {value!r}")


def format_rational(value: Fraction) -> str:
    """Canonical "p/q" (or plain integer) rendering of an exact rational."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_matrix(rows: Sequence[Sequence[object]]) -> Matrix:
    if not rows or any(not row for row in rows):
        raise DimensionMismatchError("matrices must have at least one row and column")
    width = len(rows[0])
    out = []
    for row in rows:
        if len(row) != width:
            raise DimensionMismatchError("ragged matrix rows")
        out.append(tuple(parse_rational(v) for v in row))
    return tuple(out)


def matrix_min(m: Matrix) -> Fraction:
    return min(v for row in m for v in row)


def matrix_max(m: Matrix) -> Fraction:
    return max(v for row in m for v in row)


def transpose(m: Matrix) -> Matrix:
    return tuple(zip(*m))


def negate(m: Matrix) -> Matrix:
    return tuple(tuple(-v for v in row) for row in m)


def check_affine_variant(a: Matrix, b: Matrix):
    """Find (ratio, shift) with ``A == ratio*B + shift*U`` or raise.

    Returns the pair for the A-from-B direction; the ratio may exceed 1 here,
    callers pick the orientation they need.  Constant pairs return ratio 1.
    """
    a_min, a_max = matrix_min(a), matrix_max(a)
    b_min, b_max = matrix_min(b), matrix_max(b)
    if a_max == a_min or b_max == b_min:
        if a_max == a_min and b_max == b_min:
            return Fraction(1), a_min - b_min
        # One matrix constant, the other not: no positive ratio can relate them.
        rows, cols = len(a), len(a[0])
        for i in range(rows):
            for j in range(cols):
                if a[i][j] != a[0][0] or b[i][j] != b[0][0]:
                    raise NotStrictlyCompetitiveError(
                        "one matrix is constant and the other is not",
                        entry=(i, j, a[i][j], b[i][j]),
                    )
    ratio = (a_max - a_min) / (b_max - b_min)
    shift = a_min - b_min * ratio
    for i, row in enumerate(a):
        for j, value in enumerate(row):
            expected = ratio * b[i][j] + shift
            if value != expected:
                raise NotStrictlyCompetitiveError(
                    f"affine identity fails at entry ({i},{j}): "
                    f"found {format_rational(value)}, expected {format_rational(expected)}",
                    entry=(i, j, value, expected),
                )
    return ratio, shift


@dataclass(frozen=True)
class BimatrixGame:
    """A two-player game: doctor matrix A, hospital matrix M, class tag.

    For ``repeated`` games A and M are the stage matrices and payoffs are
    long-run averages of the uniform game.
    """

    doctor_matrix: Matrix
    hospital_matrix: Matrix
    class_tag: str

    def __post_init__(self):
        if self.class_tag not in GAME_CLASSES:
            raise ClassTagViolationError(f"unknown game class {self.class_tag!r}")
        a, m = self.doctor_matrix, self.hospital_matrix
        if len(a) != len(m) or len(a[0]) != len(m[0]):
            raise DimensionMismatchError("A and M must have identical shape")
        if self.class_tag == ZERO_SUM:
            for i, row in enumerate(a):
                for j, value in enumerate(row):
                    if m[i][j] != -value:
                        raise ClassTagViolationError(
                            f"zero_sum game has M != -A at entry ({i},{j})",
                            entry=(i, j, m[i][j], -value),
                        )
        elif self.class_tag == STRICTLY_COMPETITIVE:
            # -M must be an affine variant of A (checked in both directions
            # implicitly: the relation is symmetric up to inverting the ratio).
            check_affine_variant(a, negate(m))

    @property
    def n_rows(self) -> int:
        return len(self.doctor_matrix)

    @property
    def n_cols(self) -> int:
        return len(self.doctor_matrix[0])


@dataclass(frozen=True)
class Doctor:
    id: str
    irp: Fraction
    strategies: Tuple[str, ...]


@dataclass(frozen=True)
class Hospital:
    id: str
    irp: Fraction
    quota: int
    strategies: Tuple[str, ...]


# A matched coalition in the enumerated model is a frozenset of doctor ids.
Coalition = FrozenSet[str]


@dataclass
class MatchingGameInstance:
    """A validated matching-game problem statement.

    ``games`` is keyed by ``(doctor_id, hospital_id)`` for two-sided models
    and by ``(doctor_id, doctor2_id)`` with ids in sorted order for the
    roommates model.  The enumerated model carries explicit coalition payoff
    tables instead of strategic games.
    """

    model: str
    doctors: Dict[str, Doctor]
    hospitals: Dict[str, Hospital]
    games: Dict[Tuple[str, str], BimatrixGame]
    coalition_doctor_payoffs: Dict[Tuple[str, Coalition, str], Fraction] = field(default_factory=dict)
    coalition_hospital_payoffs: Dict[Tuple[Coalition, str], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        validate_instance(self)

    @property
    def doctor_ids(self) -> List[str]:
        return list(self.doctors)

    @property
    def hospital_ids(self) -> List[str]:
        return list(self.hospitals)

    def pair_key(self, d: str, other: str) -> Tuple[str, str]:
        if self.model == ROOMMATES:
            return (d, other) if d < other else (other, d)
        return (d, other)

    def has_game(self, d: str, other: str) -> bool:
        return self.pair_key(d, other) in self.games

    def game_for(self, d: str, other: str) -> BimatrixGame:
        """The game of pair (d, other) oriented so rows belong to ``d``.

        In the roommates model the stored orientation has rows owned by the
        lexicographically smaller doctor; the flipped view transposes both
        matrices and swaps their roles.
        """
        key = self.pair_key(d, other)
        game = self.games[key]
        if self.model == ROOMMATES and key[0] != d:
            return BimatrixGame(
                doctor_matrix=transpose(game.hospital_matrix),
                hospital_matrix=transpose(game.doctor_matrix),
                class_tag=game.class_tag,
            )
        return game

    def partner_options(self, d: str) -> List[str]:
        """Agents on the other side that d has a game with."""
        if self.model == ROOMMATES:
            return [x for x in self.doctors if x != d and self.has_game(d, x)]
        return [h for h in self.hospitals if self.has_game(d, h)]


def validate_instance(instance: MatchingGameInstance, coalition_cap: int = 4096):
    if instance.model not in MODEL_KINDS:
        raise MatchGamesError(f"unknown model kind {instance.model!r}")
    for h in instance.hospitals.values():
        if h.quota < 1:
            raise QuotaOutOfRangeError(f"hospital {h.id} has quota {h.quota} < 1")
    if instance.model == ROOMMATES and instance.hospitals:
        raise MatchGamesError("roommates instances carry no hospital list")
    for key, game in instance.games.items():
        d, other = key
        if d not in instance.doctors:
            raise MatchGamesError(f"game references unknown doctor {d!r}")
        if instance.model == ROOMMATES:
            if other not in instance.doctors:
                raise MatchGamesError(f"game references unknown doctor {other!r}")
            if not d < other:
                raise MatchGamesError("roommates games must be keyed by sorted doctor pair")
            cols = len(instance.doctors[other].strategies)
        else:
            if other not in instance.hospitals:
                raise MatchGamesError(f"game references unknown hospital {other!r}")
            cols = len(instance.hospitals[other].strategies)
        rows = len(instance.doctors[d].strategies)
        if game.n_rows != rows or game.n_cols != cols:
            raise DimensionMismatchError(
                f"game {key} is {game.n_rows}x{game.n_cols}, expected {rows}x{cols}"
            )
    if instance.model == GENERAL_ENUMERATED:
        n_tables = len(instance.coalition_hospital_payoffs)
        cap = (2 ** len(instance.doctors)) * max(1, len(instance.hospitals))
        if n_tables > min(cap, coalition_cap):
            raise MatchGamesError("coalition table exceeds the configured cap")


# ---------------------------------------------------------------------------
# Strategies and allocations


def validate_mixed(weights: Sequence[Fraction], size: int, label: str = "strategy"):
    if len(weights) != size:
        raise DimensionMismatchError(f"{label} has {len(weights)} weights, expected {size}")
    total = sum(weights, Fraction(0))
    if total != 1:
        raise MatchGamesError(f"{label} weights sum to {format_rational(total)}, not 1")
    for w in weights:
        if w < 0 or w > 1:
            raise MatchGamesError(f"{label} weight {format_rational(w)} outside [0, 1]")


def pure(index: int, size: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(1) if i == index else Fraction(0) for i in range(size))


def bilinear(x: Sequence[Fraction], matrix: Matrix, y: Sequence[Fraction]) -> Fraction:
    """Exact x.A.y for mixed strategies x, y."""
    total = Fraction(0)
    for i, xi in enumerate(x):
        if xi == 0:
            continue
        row = matrix[i]
        acc = Fraction(0)
        for j, yj in enumerate(y):
            if yj != 0:
                acc += row[j] * yj
        total += xi * acc
    return total


@dataclass
class CyclePunishment:
    """Grim-trigger directive attached to a cycle strategy.

    ``punisher`` is "doctor", "hospital", or "both"; strategies are the
    minimaxing mixed strategies played forever after the first observed
    off-cycle action of the other side.
    """

    punisher: str
    doctor_strategy: Optional[Tuple[Fraction, ...]] = None
    hospital_strategy: Optional[Tuple[Fraction, ...]] = None
    trigger: str = "first_off_cycle_action"


@dataclass
class CycleStrategy:
    """A finite sequence of pure profiles repeated forever."""

    cycle: Tuple[Tuple[int, int], ...]
    punishment: Optional[CyclePunishment] = None

    def average_payoffs(self, a: Matrix, m: Matrix) -> Tuple[Fraction, Fraction]:
        n = len(self.cycle)
        fa = sum((a[s][t] for s, t in self.cycle), Fraction(0))
        fm = sum((m[s][t] for s, t in self.cycle), Fraction(0))
        return fa / n, fm / n


@dataclass
class Allocation:
    """A matching plus per-couple strategy profiles.

    ``matching`` maps doctor -> hospital id (two-sided), doctor -> partner id
    (roommates) or doctor -> None for unmatched.  Repeated-class pairs store a
    :class:`CycleStrategy` in ``cycles`` instead of one-shot profiles.
    """

    matching: Dict[str, Optional[str]]
    doctor_strategies: Dict[str, Tuple[Fraction, ...]] = field(default_factory=dict)
    hospital_strategies: Dict[Tuple[str, str], Tuple[Fraction, ...]] = field(default_factory=dict)
    cycles: Dict[Tuple[str, str], CycleStrategy] = field(default_factory=dict)

    def matched_pairs(self) -> List[Tuple[str, str]]:
        return [(d, p) for d, p in sorted(self.matching.items()) if p is not None]

    def hospital_members(self, h: str) -> List[str]:
        return [d for d, p in sorted(self.matching.items()) if p == h]


@dataclass
class PayoffReport:
    doctor_payoffs: Dict[str, Fraction]
    hospital_payoffs: Dict[str, object]  # Fraction or NEG_INF


def evaluate_payoffs(instance: MatchingGameInstance, allocation: Allocation) -> PayoffReport:
    """Exact per-agent payoffs of an allocation.

    Unmatched agents receive their IRP.  Additive separable hospitals earn the
    sum of per-seat contributions, or the -inf sentinel when over quota.
    """
    doctor_payoffs: Dict[str, Fraction] = {}
    hospital_payoffs: Dict[str, object] = {}

    if instance.model == GENERAL_ENUMERATED:
        return _evaluate_enumerated(instance, allocation)

    for d, doc in instance.doctors.items():
        partner = allocation.matching.get(d)
        if partner is None:
            doctor_payoffs[d] = doc.irp
            continue
        doctor_payoffs[d] = _pair_doctor_payoff(instance, allocation, d, partner)

    if instance.model == ROOMMATES:
        return PayoffReport(doctor_payoffs, hospital_payoffs)

    for h, hosp in instance.hospitals.items():
        members = allocation.hospital_members(h)
        if not members:
            hospital_payoffs[h] = hosp.irp
            continue
        if len(members) > hosp.quota:
            hospital_payoffs[h] = NEG_INF
            continue
        total = Fraction(0)
        for d in members:
            total += seat_contribution(instance, allocation, d, h)
        hospital_payoffs[h] = total
    return PayoffReport(doctor_payoffs, hospital_payoffs)


def _profile_for(instance, allocation, d, partner):
    game = instance.game_for(d, partner)
    if game.class_tag == REPEATED:
        return None
    x = allocation.doctor_strategies[d]
    if instance.model == ROOMMATES:
        y = allocation.doctor_strategies[partner]
    else:
        y = allocation.hospital_strategies[(partner, d)]
    validate_mixed(x, game.n_rows, f"doctor {d} strategy")
    validate_mixed(y, game.n_cols, f"partner {partner} strategy vs {d}")
    return x, y


def _cycle_for(instance, allocation, d, partner):
    if instance.model == ROOMMATES:
        key_pair = instance.pair_key(d, partner)
        cycle = allocation.cycles.get((key_pair[0], key_pair[1]))
        if cycle is None:
            raise MatchGamesError(f"repeated pair {key_pair} has no cycle strategy")
        if key_pair[0] != d:
            flipped = tuple((t, s) for s, t in cycle.cycle)
            return CycleStrategy(flipped, cycle.punishment)
        return cycle
    cycle = allocation.cycles.get((partner, d))
    if cycle is None:
        raise MatchGamesError(f"repeated pair ({d},{partner}) has no cycle strategy")
    return cycle


def _pair_doctor_payoff(instance, allocation, d, partner) -> Fraction:
    game = instance.game_for(d, partner)
    if game.class_tag == REPEATED:
        cycle = _cycle_for(instance, allocation, d, partner)
        f, _ = cycle.average_payoffs(game.doctor_matrix, game.hospital_matrix)
        return f
    x, y = _profile_for(instance, allocation, d, partner)
    return bilinear(x, game.doctor_matrix, y)


def seat_contribution(instance, allocation, d, h) -> Fraction:
    """The hospital's per-seat value x_d M_{d,h} y_{d,h} for a matched doctor."""
    game = instance.game_for(d, h)
    if game.class_tag == REPEATED:
        cycle = _cycle_for(instance, allocation, d, h)
        _, g = cycle.average_payoffs(game.doctor_matrix, game.hospital_matrix)
        return g
    x, y = _profile_for(instance, allocation, d, h)
    return bilinear(x, game.hospital_matrix, y)


def _evaluate_enumerated(instance, allocation):
    doctor_payoffs = {}
    hospital_payoffs = {}
    for d, doc in instance.doctors.items():
        partner = allocation.matching.get(d)
        if partner is None:
            doctor_payoffs[d] = doc.irp
        else:
            coalition = frozenset(allocation.hospital_members(partner))
            key = (d, coalition, partner)
            if key not in instance.coalition_doctor_payoffs:
                raise MatchGamesError(f"no table entry for doctor {d} in coalition {sorted(coalition)} at {partner}")
            doctor_payoffs[d] = instance.coalition_doctor_payoffs[key]
    for h, hosp in instance.hospitals.items():
        members = frozenset(allocation.hospital_members(h))
        if not members:
            hospital_payoffs[h] = hosp.irp
        elif len(members) > hosp.quota:
            hospital_payoffs[h] = NEG_INF
        else:
            key = (members, h)
            if key not in instance.coalition_hospital_payoffs:
                raise MatchGamesError(f"no table entry for coalition {sorted(members)} at {h}")
            hospital_payoffs[h] = instance.coalition_hospital_payoffs[key]
    return PayoffReport(doctor_payoffs, hospital_payoffs)


# ---------------------------------------------------------------------------
# Serialisation


def load_instance(source: Union[str, dict]) -> MatchingGameInstance:
    """Load and validate an instance from a JSON document (path or dict)."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = source
    model = doc.get("model")
    if model not in MODEL_KINDS:
        raise MatchGamesError(f"unknown model {model!r}")

    doctors: Dict[str, Doctor] = {}
    for entry in doc.get("doctors", []):
        doctors[str(entry["id"])] = Doctor(
            id=str(entry["id"]),
            irp=parse_rational(entry.get("irp", 0)),
            strategies=tuple(str(s) for s in entry.get("strategies", [])),
        )
    hospitals: Dict[str, Hospital] = {}
    for entry in doc.get("hospitals", []) if model != ROOMMATES else []:
        quota = entry.get("quota", 1)
        if not isinstance(quota, int) or quota < 1:
            raise QuotaOutOfRangeError(f"hospital {entry.get('id')} has quota {quota!r}")
        hospitals[str(entry["id"])] = Hospital(
            id=str(entry["id"]),
            irp=parse_rational(entry.get("irp", 0)),
            quota=quota,
            strategies=tuple(str(s) for s in entry.get("strategies", [])),
        )

    games: Dict[Tuple[str, str], BimatrixGame] = {}
    for entry in doc.get("games", []):
        d = str(entry["doctor"])
        if model == ROOMMATES:
            other = str(entry["doctor2"])
            key = (d, other) if d < other else (other, d)
            if key != (d, other):
                raise MatchGamesError(f"roommates game ({d},{other}) must list the smaller id first")
        else:
            other = str(entry["hospital"])
            key = (d, other)
        games[key] = BimatrixGame(
            doctor_matrix=parse_matrix(entry["A"]),
            hospital_matrix=parse_matrix(entry["M"]),
            class_tag=str(entry["class"]),
        )

    coalition_doctor_payoffs = {}
    coalition_hospital_payoffs = {}
    for entry in doc.get("coalitions", []):
        members = frozenset(str(x) for x in entry["doctors"])
        h = str(entry["hospital"])
        coalition_hospital_payoffs[(members, h)] = parse_rational(entry["hospital_payoff"])
        for did, value in entry["doctor_payoffs"].items():
            coalition_doctor_payoffs[(str(did), members, h)] = parse_rational(value)

    return MatchingGameInstance(
        model=model,
        doctors=doctors,
        hospitals=hospitals,
        games=games,
        coalition_doctor_payoffs=coalition_doctor_payoffs,
        coalition_hospital_payoffs=coalition_hospital_payoffs,
    )


def serialize_instance(instance: MatchingGameInstance) -> dict:
    doc = {
        "model": instance.model,
        "doctors": [
            {"id": d.id, "irp": format_rational(d.irp), "strategies": list(d.strategies)}
            for d in instance.doctors.values()
        ],
    }
    if instance.model != ROOMMATES:
        doc["hospitals"] = [
            {
                "id": h.id,
                "irp": format_rational(h.irp),
                "quota": h.quota,
                "strategies": list(h.strategies),
            }
            for h in instance.hospitals.values()
        ]
    games = []
    for (d, other), game in sorted(instance.games.items()):
        entry = {
            "doctor": d,
            "doctor2" if instance.model == ROOMMATES else "hospital": other,
            "class": game.class_tag,
            "A": [[format_rational(v) for v in row] for row in game.doctor_matrix],
            "M": [[format_rational(v) for v in row] for row in game.hospital_matrix],
        }
        games.append(entry)
    doc["games"] = games
    if instance.model == GENERAL_ENUMERATED:
        coalitions = []
        for (members, h), gval in sorted(
            instance.coalition_hospital_payoffs.items(), key=lambda kv: (sorted(kv[0][0]), kv[0][1])
        ):
            coalitions.append(
                {
                    "doctors": sorted(members),
                    "hospital": h,
                    "hospital_payoff": format_rational(gval),
                    "doctor_payoffs": {
                        d: format_rational(instance.coalition_doctor_payoffs[(d, members, h)])
                        for d in sorted(members)
                    },
                }
            )
        doc["coalitions"] = coalitions
    return doc


def serialize_allocation(allocation: Allocation) -> dict:
    doc = {
        "matching": {d: p for d, p in sorted(allocation.matching.items())},
        "doctor_strategies": {
            d: [format_rational(w) for w in ws]
            for d, ws in sorted(allocation.doctor_strategies.items())
        },
        "hospital_strategies": {
            f"{h}|{d}": [format_rational(w) for w in ws]
            for (h, d), ws in sorted(allocation.hospital_strategies.items())
        },
    }
    if allocation.cycles:
        cycles = {}
        for (h, d), cyc in sorted(allocation.cycles.items()):
            entry = {"cycle": [[s, t] for s, t in cyc.cycle]}
            if cyc.punishment is not None:
                pun = {"punisher": cyc.punishment.punisher, "trigger": cyc.punishment.trigger}
                if cyc.punishment.doctor_strategy is not None:
                    pun["doctor_strategy"] = [format_rational(w) for w in cyc.punishment.doctor_strategy]
                if cyc.punishment.hospital_strategy is not None:
                    pun["hospital_strategy"] = [format_rational(w) for w in cyc.punishment.hospital_strategy]
                entry["punishment"] = pun
            cycles[f"{h}|{d}"] = entry
        doc["cycles"] = cycles
    return doc


def load_allocation(source: Union[str, dict]) -> Allocation:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = source
    matching = {str(d): (str(p) if p is not None else None) for d, p in doc["matching"].items()}
    doctor_strategies = {
        str(d): tuple(parse_rational(w) for w in ws)
        for d, ws in doc.get("doctor_strategies", {}).items()
    }
    hospital_strategies = {}
    for key, ws in doc.get("hospital_strategies", {}).items():
        h, d = key.split("|", 1)
        hospital_strategies[(h, d)] = tuple(parse_rational(w) for w in ws)
    cycles = {}
    for key, entry in doc.get("cycles", {}).items():
        h, d = key.split("|", 1)
        punishment = None
        if "punishment" in entry:
            p = entry["punishment"]
            punishment = CyclePunishment(
                punisher=p["punisher"],
                doctor_strategy=tuple(parse_rational(w) for w in p["doctor_strategy"]) if "doctor_strategy" in p else None,
                hospital_strategy=tuple(parse_rational(w) for w in p["hospital_strategy"]) if "hospital_strategy" in p else None,
                trigger=p.get("trigger", "first_off_cycle_action"),
            )
        cycles[(h, d)] = CycleStrategy(
            cycle=tuple((int(s), int(t)) for s, t in entry["cycle"]),
            punishment=punishment,
        )
    return Allocation(
        matching=matching,
        doctor_strategies=doctor_strategies,
        hospital_strategies=hospital_strategies,
        cycles=cycles,
    )


def dump_json(doc: dict, path: str):
    """Write a canonical JSON document (sorted keys, stable separators)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
