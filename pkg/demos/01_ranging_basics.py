"""How one receiver judges one position claim.

Every node radiates at a known power, so a receiver can turn a power
reading into a distance estimate. The reading is noisy; the receiver
therefore accepts any claimed distance whose ideal power sits within
3 sigma of what it measured. This script walks the pieces end to end.
"""

import numpy as np

from posverify import (
    SignalParams,
    Verdict,
    acceptance_interval,
    deception_probability,
    estimate_distance,
    ideal_received_power,
    link_verdict,
    noisy_received_power,
    simulate_approval_rate,
)

rng = np.random.default_rng(7)

# 2.4 GHz carrier, 1 W transmitter, free-space falloff
params = SignalParams(transmit_power=1.0, wavelength=0.125, noise_sigma=0.0)

print("ideal received power by distance")
for d in (5.0, 20.0, 80.0):
    print(f"  {d:5.1f} m -> {ideal_received_power(params, d):.3e} W")

# turn the noise on: sigma a third of the power at 140 m, so even the
# weakest in-range reading stays positive almost surely
sigma = ideal_received_power(params, 140.0) / 3.0
noisy = SignalParams(1.0, 0.125, noise_sigma=sigma)
print(f"\nnoise sigma = {sigma:.3e} W")

true_d = 30.0
reading = float(noisy_received_power(noisy, true_d, rng))
print(f"one reading at {true_d} m: {reading:.3e} W "
      f"-> estimated distance {estimate_distance(noisy, reading):.2f} m")

band = acceptance_interval(noisy, true_d)
print(f"claims of {true_d} m are accepted for estimates in "
      f"[{band.lower:.2f}, {band.upper:.2f}] m")

print(f"\nverdict on an honest claim:   "
      f"{link_verdict(noisy, true_d, reading).value}")
far_reading = float(noisy_received_power(noisy, 90.0, rng))
print(f"verdict on a 90 m signal claiming {true_d} m: "
      f"{link_verdict(noisy, true_d, far_reading).value}")
assert link_verdict(noisy, true_d, far_reading) is Verdict.ACCUSE

# the 3-sigma band means a truthful claim passes with probability 0.9973
analytic = deception_probability(noisy, true_d, true_d)
empirical = simulate_approval_rate(noisy, true_d, true_d, 200_000, rng)
print(f"\ntruthful-claim pass rate: analytic {analytic:.4f}, "
      f"simulated {empirical:.4f}")

# lying gets harder the further the claim sits from the truth
print("\npass rate for a signal from 30 m claiming other distances")
for claim in (29.5, 30.5, 31.0, 33.0):
    p = deception_probability(noisy, true_d, claim)
    print(f"  claim {claim:5.1f} m -> {p:.4f}")
