"""The quantum Ohmic bath: coloured noise and zero-point motion.

At temperature T the symmetrized force correlation has the spectrum
hbar gamma w coth(hbar w / 2kT), cut off at w_c. Hot baths reduce to white
noise of strength 2 kT gamma; cold baths keep a zero-point floor, and the
momentum variance then grows like log(w_c) instead of settling at M kT.
"""
import numpy as np

from rodlangevin import (BathParams, RngStream, RodParams, SpectralDensity, quantum_kernel,
                         quantum_variance_oracle, synthesize_colored_noise)
from rodlangevin.noise import sample_autocovariance

tau = np.array([0.0, 0.05, 0.1, 0.2, 0.5])
print("kernel C(tau), gamma = 1, w_c = 20")
print("   T  " + "".join(f"{t:>10.2f}" for t in tau))
for T in (0.0, 1.0, 10.0):
    sd = SpectralDensity(gamma=1.0, temperature=T, cutoff=20.0)
    print(f"{T:5.1f} " + "".join(f"{c:10.3f}" for c in quantum_kernel(tau, sd)))

# one realization set, compared with the quadrature kernel
sd = SpectralDensity(gamma=1.0, temperature=1.0, cutoff=20.0)
series = synthesize_colored_noise(sd, 4096, 0.01, 1, RngStream(3).generator(), batch_shape=(500,))
acf = sample_autocovariance(series.values, 20)
print("\nsynthesized vs kernel at lags 0, 5, 10, 20 steps:")
for lag in (0, 5, 10, 20):
    print(f"  {lag:3d}  {acf[lag]:8.3f}  {quantum_kernel(lag * 0.01, sd):8.3f}")

print("\nzero-temperature <p_i^2> (M = gamma = 1): grows by ln(2)/pi per doubling of w_c")
for wc in (12.5, 25.0, 50.0, 100.0, 200.0):
    bath = BathParams(temperature=0.0, cutoff=wc, regime="quantum")
    print(f"  w_c = {wc:6.1f}: {quantum_variance_oracle(RodParams(), bath):.4f}")
print(f"  ln(2)/pi = {np.log(2) / np.pi:.4f}")
