"""Thermalization of a rod released from rest.

Momentum relaxes on M/gamma, angular velocity on I/gamma_rot. Once both have
relaxed, each degree of freedom holds kT/2: <p_par^2> = M kT,
<p_perp^2> = 2 M kT, I <Omega^2> = 2 kT and <E> = 5/2 kT.
"""
from rodlangevin import BathParams, ExperimentConfig, IntegratorConfig, RodParams, simulate
from rodlangevin.observables import equipartition_oracle, moment_estimates

rod = RodParams(mass=1.0, length=1.0)
bath = BathParams(temperature=1.0, gamma_par=1.0, gamma_perp=1.0, gamma_rot=1.0)
# dt must resolve the fastest relaxation, here I/gamma_rot = 1/12
cfg = ExperimentConfig(rod=rod, bath=bath, initial="rest", n_trajectories=2000, seed=2,
                       integrator=IntegratorConfig("inertial", dt=1 / 120, n_steps=1800, record_stride=12))
acc = simulate(cfg)

print("   t   <p_par^2>  <p_perp^2>  I<W^2>    <E>")
for k in (0, 1, 3, 10, 30, acc.times.size - 1):
    print(f"{acc.times[k]:5.1f} {acc.mean('p_par_sq')[k]:9.3f} {acc.mean('p_perp_sq')[k]:11.3f} "
          f"{rod.moment_of_inertia * acc.mean('omega_sq')[k]:7.3f} {acc.mean('energy')[k]:7.3f}")

m = moment_estimates(acc, rod, bath, n_relax=5)
p_par, p_perp, omega_sq, energy = equipartition_oracle(rod, bath)
print(f"\nstationary averages (t >= 5): p_par^2 {m['p_par_sq']:.3f}/{p_par:g}, p_perp^2 {m['p_perp_sq']:.3f}/{p_perp:g}, "
      f"I W^2 {rod.moment_of_inertia * m['omega_sq']:.3f}/{rod.moment_of_inertia * omega_sq:g}, "
      f"E {m['energy']:.3f}/{energy:g}")
