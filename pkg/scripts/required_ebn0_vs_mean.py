"""Required Eb/N0 versus mean number of active users, small-scale demo.

Sweeps a few Poisson means at a reduced blocklength and prints the minimum
Eb/N0 meeting symmetric MD/FA targets together with the high-power error
floors of the same configuration.
"""

import math

from uma_bounds import activity, bound_core, search
from uma_bounds.bound_core import BoundSettings

N = 2000
K_BITS = 16
TARGETS = search.Targets(0.1, 0.1)


def main():
    settings = BoundSettings(n=N, log_M=K_BITS * math.log(2), mc_samples=5000, seed=0)
    print(f"{'E[Ka]':>6}  {'required':>11}  {'floor_md':>9}  {'floor_fa':>9}")
    for mean in (2.0, 5.0, 10.0):
        model = activity.poisson(mean)
        window = activity.truncation_bounds_pmf(model)
        db = search.required_ebn0(
            "theorem1", model, K_BITS, TARGETS, settings,
            p_prime_ratios=(0.9,), bracket=(-2.0, 15.0),
        )
        fl = bound_core.eval_floors(model, window, settings)
        print(f"{mean:6.1f}  {db:9.2f} dB  {fl.eps_md:9.2e}  {fl.eps_fa:9.2e}")


if __name__ == "__main__":
    main()
