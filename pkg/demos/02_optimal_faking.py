"""What the strongest faker can get away with.

A malicious node knows where the honest nodes sit and picks the claimed
position that maximizes the expected number of them it deceives. The claim
must stay inside the deployment region but outside an exclusion ball
around its true position (claiming where you actually are is not a lie).
"""

import numpy as np

from posverify import (
    FakingSearchConfig,
    Region,
    SignalParams,
    Verdict,
    ideal_received_power,
    optimize_fake_position,
)

rng = np.random.default_rng(21)

region = Region(0.0, 100.0, 0.0, 100.0)
sigma = ideal_received_power(SignalParams(1.0, 0.125), region.diagonal) / 3.0
params = SignalParams(1.0, 0.125, noise_sigma=sigma)
search = FakingSearchConfig(
    exclusion_radius=0.2 * region.diagonal,
    grid_step=region.diagonal / 30.0,
)

genuine = region.sample(rng, 25)
true_position = (20.0, 35.0)

outcome = optimize_fake_position(params, region, true_position, genuine, search)
fx, fy = outcome.fake_position
lie = np.hypot(fx - true_position[0], fy - true_position[1])

print(f"true position      ({true_position[0]:.1f}, {true_position[1]:.1f})")
print(f"optimal fake claim ({fx:.1f}, {fy:.1f}), {lie:.1f} m away")
print(f"expected honest nodes deceived: {outcome.expected_deceived:.2f} of 25")

print("\nper-receiver deception probability (sorted)")
for p in sorted(outcome.per_node_probs, reverse=True)[:8]:
    print(f"  {p:.3f}")
print("  ...")

# the lie is cheapest against far receivers: power falls off like 1/d^2,
# so at long range a displaced claim barely moves the expected reading
dists = np.hypot(genuine[:, 0] - true_position[0], genuine[:, 1] - true_position[1])
order = np.argsort(dists)
print("\ndistance from faker vs chance of being fooled")
for i in order[[0, 12, 24]]:
    print(f"  receiver at {dists[i]:6.1f} m -> {outcome.per_node_probs[i]:.3f}")
