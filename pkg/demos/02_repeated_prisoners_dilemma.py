"""Folk-theorem machinery on the repeated prisoners' dilemma.

A couple playing the PD stage game forever can sustain any feasible payoff
pair above the punishment levels.  This walks through: the feasible hull,
realising the payoff pair (1, 1) as a finite cycle, minimax punishments,
and constrained Nash equilibria for two reservation regimes.

Run:  python3 demos/02_repeated_prisoners_dilemma.py
"""

from fractions import Fraction as F

from matchgames import (
    compute_cne_repeated,
    distribution_to_cycle,
    punishment_levels,
    solve_qcqp_repeated,
)

A = ((F(2), F(-1)), (F(3), F(0)))   # row player (cooperate, betray)
M = ((F(2), F(3)), (F(-1), F(0)))   # column player

print("=== realising (1, 1) as a cycle ===")
quarters = {(s, t): F(1, 4) for s in range(2) for t in range(2)}
cycle = distribution_to_cycle(quarters, A, M)
names = {0: "C", 1: "B"}
print("  cycle:", " ".join(f"({names[s]},{names[t]})" for s, t in cycle.cycle))
print("  long-run average:", cycle.average_payoffs(A, M))

print("\n=== constrained optimum: best row payoff with column >= 1 ===")
lam, (f, g) = solve_qcqp_repeated(A, M, F(1))
print(f"  value ({f}, {g}) via distribution {dict(lam)}")
print("  cycle:", distribution_to_cycle(lam, A, M).cycle)

print("\n=== punishment levels ===")
alpha, beta, y_alpha, x_beta = punishment_levels(A, M)
print(f"  alpha = {alpha} (column holds row to this by playing {y_alpha})")
print(f"  beta  = {beta} (row holds column to this by playing {x_beta})")

print("\n=== CNE, comfortable reservations (1/2, 1/2) ===")
cne = compute_cne_repeated(A, M, F(1, 2), F(1, 2), F(1, 10))
print(f"  case {cne.case_tag}: payoffs ({cne.doctor_payoff}, {cne.hospital_payoff})")
print(f"  cycle {cne.cycle.cycle} with punisher '{cne.cycle.punishment.punisher}'")

print("\n=== CNE, lopsided reservations (14/5, -9/10) ===")
cne = compute_cne_repeated(A, M, F(14, 5), F(-9, 10), F(1, 10))
print(f"  case {cne.case_tag}: payoffs ({cne.doctor_payoff}, {cne.hospital_payoff})")
print(f"  punisher: {cne.cycle.punishment.punisher} "
      f"(deviations by the row player are minimaxed to {alpha})")
