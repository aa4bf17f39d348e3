"""The cosine noise schedule and the closed-form forward process.

Noising a fixed point and checking the empirical moments against
sqrt(abar_t) * x0 and (1 - abar_t).
"""

import numpy as np

from diffaug import forward_sample, make_cosine_schedule, make_linear_schedule

T = 200
cos = make_cosine_schedule(T, s=0.008)
lin = make_linear_schedule(T, 1e-4, 0.02)

print("t     abar(cosine)  abar(linear)  beta(cosine)")
for t in (0, T // 4, T // 2, 3 * T // 4, T - 1):
    print(f"{t:3d}   {cos.alpha_bars[t]:.6f}      {lin.alpha_bars[t]:.6f}      {cos.betas[t]:.6f}")

# The cosine schedule destroys information more gradually in the middle.
half = np.searchsorted(-cos.alpha_bars, -0.5)
print(f"\ncosine abar crosses 0.5 at t={half}; linear at "
      f"t={np.searchsorted(-lin.alpha_bars, -0.5)}")

x0 = np.array([1.0, -1.0])
n = 100_000
rng = np.random.default_rng(0)
print("\nforward process moments from", n, "draws")
for t in (T // 4, T // 2, 3 * T // 4):
    xt = forward_sample(np.broadcast_to(x0, (n, 2)), np.full(n, t), rng.standard_normal((n, 2)), cos)
    print(f"t={t:3d} mean {xt.mean(0).round(4)} expected {(np.sqrt(cos.alpha_bars[t]) * x0).round(4)}"
          f"  var {xt.var(0).round(4)} expected {1 - cos.alpha_bars[t]:.4f}")
