"""From pairwise stable to renegotiation proof.

Deferred acceptance with competitions leaves every couple unblocked from the
outside, but couples may still play profiles one side would renegotiate.
The renegotiation process recomputes each couple's outside options and
replaces profiles with constrained Nash equilibria until payoffs fix.

Run:  python3 demos/03_renegotiation.py
"""

from fractions import Fraction as F

from matchgames import evaluate_payoffs, run_dac, run_renegotiation
from matchgames.gen import generate_instance
from matchgames.stability import find_blocking_pair, verify_renegotiation_proof

epsilon = F(1, 10)
instance = generate_instance(
    seed=9, n_doctors=5, n_hospitals=3, max_strategies=4, max_quota=2,
    classes=["zero_sum"], hospital_irp_lo=0, hospital_irp_hi=0,
)

allocation, trace = run_dac(instance, epsilon)
print("=== after deferred acceptance ===")
print("  matching:", {d: h for d, h in sorted(allocation.matching.items())})
before = evaluate_payoffs(instance, allocation)
print("  doctor payoffs:", {d: str(v) for d, v in sorted(before.doctor_payoffs.items())})
ok, _ = verify_renegotiation_proof(instance, allocation, epsilon)
print("  renegotiation proof?", ok)

result = run_renegotiation(
    instance, allocation, epsilon,
    on_sweep=lambda a: print(
        "  sweep keeps pairwise stability:",
        find_blocking_pair(instance, a, epsilon) is None,
    ),
)
print(f"\n=== after {result.sweeps} renegotiation sweep(s) ===")
after = evaluate_payoffs(instance, result.allocation)
print("  doctor payoffs:", {d: str(v) for d, v in sorted(after.doctor_payoffs.items())})
ok, witness = verify_renegotiation_proof(instance, result.allocation, epsilon)
print("  renegotiation proof?", ok)
changed = {
    d: (str(before.doctor_payoffs[d]), str(after.doctor_payoffs[d]))
    for d in instance.doctor_ids
    if before.doctor_payoffs[d] != after.doctor_payoffs[d]
}
print("  renegotiated doctors (before -> after):", changed or "none")
