"""Trajectory propagation for the rod.

Inertial steps integrate the momentum and angular-velocity Langevin
equations with the exact Ornstein-Uhlenbeck transition for the current rod
axis. Overdamped steps move the position by the mobility-weighted force
impulse and turn the axis by the torque impulse over the rotational
friction. Orientation updates are finite rotations, so the axis stays on
the unit sphere.

Every step function works on arrays of shape ``(3,)`` or ``(n, 3)`` and
takes ``rng`` as anything with ``standard_normal(shape)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (CLASSICAL, QUANTUM, BathParams, ParameterError, RngStream, RodParams, RodState,
                   StreamBank, WrongRegime, project_perp, relaxation_times, validate_params)
from .friction import FrictionTensor, dot, green_function, tensor_apply, tensor_power
from .noise import NoiseSeries, SpectralDensity, synthesize_colored_noise, white_force_increment, \
    white_torque_increment

INERTIAL = "inertial"
OVERDAMPED = "overdamped"
MIN_SERIES_RELAXATIONS = 50.0


@dataclass(frozen=True)
class IntegratorConfig:
    mode: str = OVERDAMPED
    dt: float = 0.01
    n_steps: int = 1000
    record_stride: int = 10
    position_scheme: str = "euler"

    def __post_init__(self):
        if self.mode not in (INERTIAL, OVERDAMPED):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if self.n_steps < 0 or self.record_stride < 1:
            raise ParameterError("n_steps must be >= 0 and record_stride >= 1")
        if self.position_scheme not in ("euler", "midpoint"):
            raise ParameterError(f"unknown position scheme {self.position_scheme!r}")

    def check(self, rod: RodParams, bath: BathParams):
        """Raise if ``dt`` does not resolve the inertial relaxation times."""
        if self.mode == INERTIAL:
            limit = 0.1 * min(relaxation_times(rod, bath).values())
            if self.dt > limit * (1 + 1e-12):
                raise ParameterError(f"inertial dt={self.dt} exceeds 0.1 x shortest relaxation time ({limit:.4g})")
        elif bath.regime == QUANTUM:
            raise WrongRegime("overdamped propagation is only defined for the classical regime")


@dataclass(frozen=True)
class Trajectory:
    """Recorded snapshots of one or more rods on a shared time grid.

    ``r``, ``p``, ``u`` and ``omega`` have shape ``(n_records, n_traj, 3)``.
    Overdamped runs record zero momentum and angular velocity.
    """

    times: np.ndarray
    r: np.ndarray
    p: np.ndarray
    u: np.ndarray
    omega: np.ndarray
    rod: RodParams
    bath: BathParams
    mode: str = OVERDAMPED

    @property
    def n_traj(self) -> int:
        return self.u.shape[1]

    @property
    def n_records(self) -> int:
        return self.times.size

    def states(self, traj: int = 0):
        """RodState snapshots for one trajectory."""
        return [RodState(self.r[k, traj], self.p[k, traj], self.u[k, traj], self.omega[k, traj], float(t))
                for k, t in enumerate(self.times)]

    def select(self, idx) -> "Trajectory":
        idx = np.atleast_1d(idx)
        return Trajectory(self.times, self.r[:, idx], self.p[:, idx], self.u[:, idx], self.omega[:, idx],
                          self.rod, self.bath, self.mode)


def rotate(v, rotvec):
    """Rotate ``v`` by the rotation vector ``rotvec`` (Rodrigues' formula)."""
    v = np.asarray(v, dtype=float)
    rotvec = np.asarray(rotvec, dtype=float)
    theta = np.sqrt(dot(rotvec, rotvec))[..., None]
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    sinc = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    cosc = np.where(small, 0.5 - theta**2 / 24.0, 2.0 * np.sin(0.5 * safe) ** 2 / safe**2)
    return (v * np.cos(theta) + sinc * np.cross(rotvec, v)
            + cosc * dot(rotvec, v)[..., None] * rotvec)


def _renormalize(u):
    return u / np.sqrt(dot(u, u))[..., None]


def _translational_tensor(bath, u):
    return FrictionTensor(bath.gamma_par, bath.gamma_perp, u)


def step_momentum_inertial(p, u, rod: RodParams, bath: BathParams, dt: float, rng):
    """Exact OU transition of the momentum for a frozen axis ``u``.

    Each Cartesian component along (across) ``u`` becomes
    ``a p + xi`` with ``a = exp(-gamma dt / M)`` and
    ``Var xi = M k_B T (1 - a^2)``. Draws three normals per rod.
    """
    if bath.regime != CLASSICAL:
        raise WrongRegime("use step_momentum_colored in the quantum regime")
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    g = green_function(_translational_tensor(bath, u), rod.mass, dt)
    z = rng.standard_normal(p.shape)
    spread = FrictionTensor._on_axis(np.sqrt(rod.mass * bath.kT * (1.0 - g.gamma_par**2)),
                            np.sqrt(rod.mass * bath.kT * (1.0 - g.gamma_perp**2)), g.axis)
    return tensor_apply(g, p) + tensor_apply(spread, z)


def step_position(r, p, rod: RodParams, dt: float, p_new=None):
    """Drift ``r`` by ``p dt / M``; with ``p_new`` the midpoint momentum is used."""
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    if p_new is not None:
        p = 0.5 * (p + np.asarray(p_new, dtype=float))
    return r + p * (dt / rod.mass)


def step_rotation_inertial(omega, u, rod: RodParams, bath: BathParams, dt: float, rng):
    """Angular-velocity OU update followed by a finite rotation of ``u``.

    ``omega`` relaxes at rate ``gamma_rot / I`` towards a stationary variance
    of ``k_B T / I`` per in-plane component; the axis then turns about
    ``omega`` by ``|omega| dt``. Three normals per rod.
    """
    if bath.regime != CLASSICAL:
        raise WrongRegime("use step_rotation_colored in the quantum regime")
    inertia = rod.moment_of_inertia
    a = math.exp(-bath.gamma_rot * dt / inertia)
    z = rng.standard_normal(np.shape(u))
    omega = a * np.asarray(omega, dtype=float) + math.sqrt(bath.kT / inertia * (1.0 - a * a)) * project_perp(z, u)
    return _turn(omega, u, dt)


def _turn(omega, u, dt):
    u_new = _renormalize(rotate(u, omega * dt))
    return project_perp(omega, u_new), u_new


def step_overdamped(r, u, rod: RodParams, bath: BathParams, dt: float, rng):
    """Brownian time-scale update of position and orientation.

    The position moves by ``Gamma^-1`` applied to the force impulse; the
    axis turns by the rotation vector ``torque impulse / gamma_rot``.
    Six normals per rod: force first, then torque.
    """
    u = np.asarray(u, dtype=float)
    f_par, f_perp = white_force_increment(bath, u, dt, rng)
    torque = white_torque_increment(bath, u, dt, rng)
    r_new = np.asarray(r, dtype=float) + f_par / bath.gamma_par + f_perp / bath.gamma_perp
    u_new = _renormalize(rotate(u, torque / bath.gamma_rot))
    return r_new, u_new


def step_momentum_colored(p, u, rod: RodParams, bath: BathParams, series: NoiseSeries, step_index: int, dt: float):
    """Momentum update driven by a precomputed coloured force series.

    ``p <- exp(-Gamma dt / M) p + F dt`` where the force is the friction
    tensor's square root applied to the series sample (rescaled from the
    series' own friction to unit friction).
    """
    if bath.regime != QUANTUM:
        raise WrongRegime("coloured steps need the quantum regime")
    p = np.asarray(p, dtype=float)
    xi = series.sample(step_index)[..., :3] / math.sqrt(series.spectrum.gamma)
    gam = _translational_tensor(bath, u)
    force = tensor_apply(tensor_power(gam, 0.5), xi)
    return tensor_apply(green_function(gam, rod.mass, dt), p) + force * dt


def step_rotation_colored(omega, u, rod: RodParams, bath: BathParams, series: NoiseSeries, step_index: int,
                          dt: float):
    """Coloured-torque counterpart of :func:`step_rotation_inertial`."""
    if bath.regime != QUANTUM:
        raise WrongRegime("coloured steps need the quantum regime")
    inertia = rod.moment_of_inertia
    xi = series.sample(step_index)[..., :3] / math.sqrt(series.spectrum.gamma)
    torque = math.sqrt(bath.gamma_rot) * project_perp(xi, u)
    a = math.exp(-bath.gamma_rot * dt / inertia)
    omega = a * np.asarray(omega, dtype=float) + torque * (dt / inertia)
    return _turn(project_perp(omega, u), u, dt)


def orientation_from_euler(beta, gamma_angle):
    """Rod axis for Euler angles: ``(sin b cos g, -sin b sin g, cos b)``."""
    beta = np.asarray(beta, dtype=float)
    gamma_angle = np.asarray(gamma_angle, dtype=float)
    return np.stack([np.sin(beta) * np.cos(gamma_angle),
                     -np.sin(beta) * np.sin(gamma_angle),
                     np.cos(beta)], axis=-1)


# Generators of rotations: L[i] @ u == e_i x u.
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0
GENERATORS = -LEVI_CIVITA


def euler_orientation_step(u, bath: BathParams, dt: float, rng):
    """First-order orientation step used as a brute-force reference.

    Builds the matrix ``F = sum_i theta_i L_i`` from the torque impulse over
    ``gamma_rot``, applies ``u + F u`` and renormalizes. Three normals per rod.
    """
    u = np.asarray(u, dtype=float)
    theta = white_torque_increment(bath, u, dt, rng) / bath.gamma_rot
    F = np.einsum("...i,ijk->...jk", theta, GENERATORS)
    return _renormalize(u + np.einsum("...jk,...k->...j", F, u))


def series_block_length(rod: RodParams, bath: BathParams, dt: float, n_steps: int, max_block=2**16) -> int:
    """Length of the per-trajectory coloured-noise blocks.

    A power of two covering the run (up to ``max_block``) and at least 50
    of the slowest time scale among the relaxation rates and the cutoff.
    """
    rates = [1.0 / t for t in relaxation_times(rod, bath).values()] + [bath.cutoff]
    floor = _next_pow2(math.ceil(MIN_SERIES_RELAXATIONS / (min(rates) * dt)))
    return max(floor, min(_next_pow2(n_steps), max_block))


def _next_pow2(n):
    return 1 << (max(int(n), 2) - 1).bit_length()


def unit_spectra(bath: BathParams) -> SpectralDensity:
    """Unit-friction spectrum; physical noise is this scaled by sqrt(gamma)."""
    return SpectralDensity.from_bath(bath, gamma=1.0)


def _as_bank(rng):
    if isinstance(rng, StreamBank):
        return rng
    if isinstance(rng, RngStream):
        return StreamBank([rng])
    streams = list(rng)
    if streams and isinstance(streams[0], RngStream):
        return StreamBank(streams)
    raise TypeError("rng must be an RngStream, a sequence of RngStreams or a StreamBank")


def propagate(initial: RodState, rod: RodParams, bath: BathParams, cfg: IntegratorConfig, rng) -> Trajectory:
    """Run ``cfg.n_steps`` steps and record every ``cfg.record_stride``.

    ``initial`` holds one rod or a batch; ``rng`` supplies one stream per
    rod (an :class:`RngStream`, a list of them, or a :class:`StreamBank`).
    Row ``i`` depends only on its own stream, so a rod simulated alone gives
    the same numbers as inside a batch.
    """
    validate_params(rod, bath)
    cfg.check(rod, bath)
    r, p, u, omega = (np.atleast_2d(x).copy() for x in (initial.r, initial.p, initial.u, initial.omega))
    bank = _as_bank(rng)
    if len(bank) != u.shape[0]:
        raise ValueError(f"{len(bank)} streams for {u.shape[0]} rods")
    dt = cfg.dt
    n_rec = cfg.n_steps // cfg.record_stride + 1
    times = initial.t + dt * cfg.record_stride * np.arange(n_rec)
    rec = {name: np.empty((n_rec,) + u.shape) for name in ("r", "p", "u", "omega")}

    def record(k):
        rec["r"][k], rec["p"][k], rec["u"][k], rec["omega"][k] = r, p, u, omega

    if cfg.mode == OVERDAMPED:
        p = np.zeros_like(p)
        omega = np.zeros_like(omega)
    record(0)
    quantum = bath.regime == QUANTUM
    if quantum:
        block = series_block_length(rod, bath, dt, cfg.n_steps)
        spectrum = unit_spectra(bath)
    force = torque = None
    for step in range(cfg.n_steps):
        if cfg.mode == OVERDAMPED:
            r, u = step_overdamped(r, u, rod, bath, dt, bank)
        elif quantum:
            j = step % block
            if j == 0:
                force = synthesize_colored_noise(spectrum, block, dt, 3, bank)
                torque = synthesize_colored_noise(spectrum, block, dt, 3, bank)
            p_new = step_momentum_colored(p, u, rod, bath, force, j, dt)
            r = step_position(r, p, rod, dt, p_new if cfg.position_scheme == "midpoint" else None)
            p = p_new
            omega, u = step_rotation_colored(omega, u, rod, bath, torque, j, dt)
        else:
            p_new = step_momentum_inertial(p, u, rod, bath, dt, bank)
            r = step_position(r, p, rod, dt, p_new if cfg.position_scheme == "midpoint" else None)
            p = p_new
            omega, u = step_rotation_inertial(omega, u, rod, bath, dt, bank)
        if (step + 1) % cfg.record_stride == 0:
            record((step + 1) // cfg.record_stride)
    return Trajectory(times, rec["r"], rec["p"], rec["u"], rec["omega"], rod, bath, cfg.mode)
