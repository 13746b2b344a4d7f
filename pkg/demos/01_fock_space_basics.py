"""Tour of the truncated Fock-space toolkit.

Builds occupation bases, interferes photons on beam splitters, applies loss
channels and reduces states with the partial trace.
"""

import numpy as np

from cvbell import (
    LossChannel,
    ModeBasis,
    StateVector,
    apply_channel,
    beam_splitter,
    enumerate_basis,
    fock_state,
    partial_trace,
)

# --- occupation bases -------------------------------------------------------
basis = enumerate_basis(2, [2, 2], total_cap=2)
print("two modes, cutoff 2, at most 2 photons in total:")
for i in range(basis.dimension):
    print(f"  index {i}: |{''.join(map(str, basis.occupation_of(i)))}>")

# --- Hong-Ou-Mandel interference --------------------------------------------
full = ModeBasis((2, 2))
U = beam_splitter(full, 0.5, (0, 1))
out = U @ fock_state(full, (1, 1)).amplitudes
print("\n50/50 splitter on |11>:")
for i, amp in enumerate(out):
    if abs(amp) > 1e-12:
        occ = full.occupation_of(i)
        print(f"  |{occ[0]}{occ[1]}>: {amp.real:+.4f}")
print("the photons bunch: no |11> component survives")

# --- photon loss -------------------------------------------------------------
psi2 = StateVector(full, np.zeros(9, complex))
psi2.amplitudes[full.index_of((2, 0))] = 2**-0.5
psi2.amplitudes[full.index_of((0, 2))] = 2**-0.5
rho = psi2.to_density()
eta = 0.8
for mode in (0, 1):
    rho = apply_channel(rho, LossChannel(eta), mode)
print(f"\n(|20> + |02>)/sqrt(2) through per-mode transmission {eta}:")
print(f"  two-photon weight: {2 * rho.matrix[full.index_of((2, 0)), full.index_of((2, 0))].real:.4f}"
      f"  (eta^2 = {eta**2:.4f})")
print(f"  one-photon weight: {2 * rho.matrix[full.index_of((1, 0)), full.index_of((1, 0))].real:.4f}"
      f"  (2 eta (1-eta) = {2 * eta * (1 - eta):.4f})")
print(f"  vacuum weight:     {rho.matrix[0, 0].real:.4f}  ((1-eta)^2 = {(1 - eta)**2:.4f})")

# --- reduced states -----------------------------------------------------------
reduced = partial_trace(psi2.to_density(), keep=(0,))
print("\nreduced state of one arm:")
print(np.round(reduced.matrix.real, 4))
print("an even mixture of |0> and |2>, as the Schmidt form dictates")
