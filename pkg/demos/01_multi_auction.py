"""Two buyers, four sellers, one price grid: solving a multi-item auction.

Buyers alpha and beta value the sellers' items at (10, 10, 2, 2) and
(2, 2, 10, 10); every seller values her own item at 1 and quotes a price
from the grid 0..10.  Encoded as a matching game, a seller earns p - 1 and
her buyer earns u - p: strictly competitive pairs, so deferred acceptance
with competitions applies after the affine change of units.

Run:  python3 demos/01_multi_auction.py
"""

import os
from fractions import Fraction

from matchgames import evaluate_payoffs, format_rational, load_instance, run_dac
from matchgames.stability import find_blocking_pair, find_blocking_coalition

HERE = os.path.dirname(__file__)

instance = load_instance(os.path.join(HERE, "data", "example4_auction.json"))
epsilon = Fraction(1, 2)

allocation, trace = run_dac(instance, epsilon)

print("=== matching ===")
for seller, buyer in sorted(allocation.matching.items()):
    print(f"  seller {seller} -> buyer {buyer}")

payoffs = evaluate_payoffs(instance, allocation)
print("\n=== payoffs (seller profit = price - 1) ===")
for seller in sorted(instance.doctors):
    print(f"  {seller}: {format_rational(payoffs.doctor_payoffs[seller])}")
for buyer in sorted(instance.hospitals):
    print(f"  {buyer}: {format_rational(payoffs.hospital_payoffs[buyer])}")

print(f"\nsolver ran {trace.iterations} seat events, {trace.competitions} auctions")

witness = find_blocking_pair(instance, allocation, epsilon)
print(f"blocking pair: {witness if witness else 'none'}")
coalition = find_blocking_coalition(instance, allocation, epsilon, max_coalition_size=4)
print(f"blocking coalition: {coalition if coalition else 'none'}")

# The same pipeline through the CLI:
#   matchgames solve-dac --input demos/data/example4_auction.json \
#       --epsilon 1/2 --output /tmp/alloc.json --trace /tmp/trace.log --oracle
#   matchgames verify --input demos/data/example4_auction.json \
#       --allocation /tmp/alloc.json --epsilon 1/2 --coalitions 4
