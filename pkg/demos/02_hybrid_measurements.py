"""The two measurement channels of the hybrid Bell test.

A bucket photodetector answers "click or not"; a homodyne detector measures
the X quadrature and the outcome is binarised by whether |x| exceeds a bin
half-width delta.  Both are POVMs on the truncated Fock space, and losses
enter as efficiency factors.
"""

import numpy as np

from cvbell import ideal_binned_homodyne, lossy_binned_homodyne, photodetection_povm

# --- photodetection ------------------------------------------------------------
for eta in (1.0, 0.8, 0.5):
    n0, n1, n_obs = photodetection_povm(eta, 3)
    print(f"eta_d = {eta}: no-click weights per Fock level {np.diag(n0).round(4)}")
print("a lossy detector mistakes photons for vacuum at rate (1-eta)^n\n")

# --- binned homodyne ------------------------------------------------------------
print("inner-bin weight of the vacuum vs bin half-width (erf curve):")
for delta in (0.25, 0.5, 1.0, 2.0, 4.0):
    M = ideal_binned_homodyne(delta, 4)
    print(f"  delta = {delta:4.2f}: <0|inner|0> = {M[0, 0]:.6f}")

delta = 1.0
M = ideal_binned_homodyne(delta, 4)
print(f"\nfull inner element at delta = {delta}:")
print(np.round(M, 4))
print("odd n+m entries vanish by parity; the 0-2 coherence drives the Bell test")

# --- losses degrade the measurement ----------------------------------------------
inner, outer, X = lossy_binned_homodyne(0.7, delta, 4)
print(f"\nwith efficiency 0.7 the observable's diagonal becomes {np.diag(X).round(4)}")
print("completeness survives exactly:",
      np.abs(inner + outer - np.eye(5)).max() < 1e-12)
