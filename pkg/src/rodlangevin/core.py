"""Parameter types, state container and random streams for the rod simulator.

Reduced units are the default: ``k_B = hbar = 1``. Only the effective
frictions are exposed; the microscopic bath couplings never appear.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

CLASSICAL = "classical"
QUANTUM = "quantum"
REGIMES = (CLASSICAL, QUANTUM)

UNIT_TOL = 1e-12
PERP_TOL = 1e-10


class ParameterError(ValueError):
    """Base class for invalid simulation inputs."""


class NonPositiveParameter(ParameterError):
    def __init__(self, name, value=None):
        self.field = name
        msg = f"parameter {name!r} must be positive"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class MissingCutoff(ParameterError):
    """Quantum regime requested without a cutoff frequency."""


CutoffMissing = MissingCutoff


class WrongRegime(ParameterError):
    """Operation called for a bath in the wrong noise regime."""


@dataclass(frozen=True)
class RodParams:
    """Mechanical identity of the rod: mass and length.

    The moment of inertia about an axis perpendicular to the rod is derived,
    ``I = M l^2 / 12``, and is never stored.
    """

    mass: float = 1.0
    length: float = 1.0

    def __post_init__(self):
        for name in ("mass", "length"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise NonPositiveParameter(name, value)

    @property
    def moment_of_inertia(self) -> float:
        return self.mass * self.length**2 / 12.0


@dataclass(frozen=True)
class BathParams:
    """Bath temperature, effective frictions and noise regime.

    Parameters
    ----------
    temperature : float
        Bath temperature T (``k_B T`` is the thermal energy).
    gamma_par, gamma_perp : float
        Translational friction along and across the rod axis.
    gamma_rot : float
        Rotational friction (angular-friction units).
    k_B, hbar : float
        Boltzmann and Planck constants, 1 in reduced units.
    cutoff : float or None
        Upper frequency cutoff of the Ohmic spectrum; required for the
        quantum regime.
    regime : {"classical", "quantum"}
    cutoff_shape : {"sharp", "exponential"}
        Sharp truncation at ``cutoff`` or a smooth ``exp(-w/cutoff)`` factor.
    """

    temperature: float = 1.0
    gamma_par: float = 1.0
    gamma_perp: float = 1.0
    gamma_rot: float = 1.0
    k_B: float = 1.0
    hbar: float = 1.0
    cutoff: float | None = None
    regime: str = CLASSICAL
    cutoff_shape: str = "sharp"

    def __post_init__(self):
        for name in ("gamma_par", "gamma_perp", "gamma_rot", "k_B"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise NonPositiveParameter(name, value)
        if not np.isfinite(self.temperature) or self.temperature < 0:
            raise NonPositiveParameter("temperature", self.temperature)
        if self.regime not in REGIMES:
            raise ParameterError(f"unknown regime {self.regime!r}")
        if self.cutoff_shape not in ("sharp", "exponential"):
            raise ParameterError(f"unknown cutoff shape {self.cutoff_shape!r}")
        if self.regime == QUANTUM:
            if self.cutoff is None:
                raise MissingCutoff("quantum regime requires a cutoff frequency")
            if not self.cutoff > 0:
                raise NonPositiveParameter("cutoff", self.cutoff)
            if not self.hbar > 0:
                raise NonPositiveParameter("hbar", self.hbar)
        else:
            if self.temperature <= 0:
                raise NonPositiveParameter("temperature", self.temperature)
            if self.cutoff is not None and not self.cutoff > 0:
                raise NonPositiveParameter("cutoff", self.cutoff)

    @property
    def kT(self) -> float:
        return self.k_B * self.temperature

    @property
    def rotational_diffusion(self) -> float:
        """D_r = k_B T / gamma_rot."""
        return self.kT / self.gamma_rot


def validate_params(rod: RodParams, bath: BathParams) -> tuple[RodParams, BathParams]:
    """Check a parameter pair and return it unchanged.

    Both types validate on construction, so this mainly guards against
    objects built with ``object.__new__`` or mutated through ``__dict__``;
    it re-runs every invariant.
    """
    if not isinstance(rod, RodParams) or not isinstance(bath, BathParams):
        raise ParameterError("expected RodParams and BathParams")
    RodParams.__post_init__(rod)
    BathParams.__post_init__(bath)
    return rod, bath


def relaxation_times(rod: RodParams, bath: BathParams) -> dict[str, float]:
    """Inertial relaxation times M/gamma_par, M/gamma_perp and I/gamma_rot."""
    inertia = rod.moment_of_inertia
    return {
        "par": rod.mass / bath.gamma_par,
        "perp": rod.mass / bath.gamma_perp,
        "rot": inertia / bath.gamma_rot,
    }


def _as_vec(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class RodState:
    """Position, momentum, orientation and angular velocity at time ``t``.

    Arrays have shape ``(3,)`` for one rod or ``(n, 3)`` for an ensemble
    that shares the time stamp.
    """

    r: np.ndarray
    p: np.ndarray
    u: np.ndarray
    omega: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("r", "p", "u", "omega"):
            arr = _as_vec(getattr(self, name))
            if arr.shape[-1:] != (3,):
                raise ParameterError(f"{name} must have trailing dimension 3")
            object.__setattr__(self, name, arr)
        norm = np.linalg.norm(self.u, axis=-1)
        if np.any(np.abs(norm - 1.0) > UNIT_TOL):
            raise ParameterError("orientation u must be a unit vector")
        # relative to |omega| so that large angular velocities are not rejected for rounding
        scale = np.maximum(1.0, np.linalg.norm(self.omega, axis=-1))
        if np.any(np.abs(np.sum(self.omega * self.u, axis=-1)) > PERP_TOL * scale):
            raise ParameterError("angular velocity must be perpendicular to u")

    @property
    def n_rods(self) -> int:
        return 1 if self.u.ndim == 1 else self.u.shape[0]

    def replace(self, **changes) -> "RodState":
        return dataclasses.replace(self, **changes)

    def row(self, i: int) -> "RodState":
        if self.u.ndim == 1:
            if i != 0:
                raise IndexError(i)
            return self
        return RodState(self.r[i], self.p[i], self.u[i], self.omega[i], self.t)


@dataclass(frozen=True)
class RngStream:
    """One reproducible random stream per trajectory index.

    ``(seed, stream_id)`` maps through :class:`numpy.random.SeedSequence`
    spawn keys, so streams with different ids are independent and the same
    pair always yields the same bit stream.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


class StreamBank:
    """Per-row standard normals for a batch of independent streams.

    ``standard_normal((n, ...))`` returns an array whose row ``i`` comes from
    stream ``i``. Draws are buffered, but each stream is consumed strictly in
    order, so row ``i`` is bit-identical to what a lone generator for stream
    ``i`` would produce with the same sequence of requests.
    """

    def __init__(self, streams, buffer_size=2048):
        self.streams = list(streams)
        self._gens = [s.generator() for s in self.streams]
        self._buffer_size = buffer_size
        self._buf = np.empty((len(self._gens), 0))
        self._pos = 0

    @classmethod
    def from_seed(cls, seed: int, ids, **kw) -> "StreamBank":
        return cls([RngStream(seed, int(i)) for i in ids], **kw)

    def __len__(self):
        return len(self._gens)

    def _refill(self, need):
        rest = self._buf[:, self._pos:]
        extra = max(self._buffer_size, need - rest.shape[1])
        fresh = np.stack([g.standard_normal(extra) for g in self._gens]) if self._gens else np.empty((0, extra))
        self._buf = np.concatenate([rest, fresh], axis=1)
        self._pos = 0

    def standard_normal(self, shape):
        shape = tuple(np.atleast_1d(shape))
        if shape[0] != len(self._gens):
            raise ValueError(f"leading dimension {shape[0]} != number of streams {len(self._gens)}")
        k = int(np.prod(shape[1:], dtype=int))
        if self._buf.shape[1] - self._pos < k:
            self._refill(k)
        out = self._buf[:, self._pos:self._pos + k]
        self._pos += k
        return out.reshape(shape)


def random_unit_vectors(z):
    """Map standard normals of shape (..., 3) to uniform points on the sphere."""
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def project_perp(v, u):
    """Component of ``v`` perpendicular to the unit vector ``u``."""
    return v - np.einsum("...i,...i->...", v, u)[..., None] * u


def equilibrium_initial_state(rod: RodParams, bath: BathParams, rng, size=None) -> RodState:
    """Draw a rod state from the classical equilibrium distribution.

    Momentum components are Gaussian with variance ``M k_B T``, the
    orientation is uniform on the sphere and the angular velocity lies in the
    plane perpendicular to ``u`` with variance ``k_B T / I`` per in-plane
    component. The position starts at the origin.

    ``rng`` is anything with a ``standard_normal(shape)`` method; nine
    normals are consumed per rod. ``size`` gives the number of rods (``None``
    for a single state). A :class:`StreamBank` fixes ``size`` to its length.
    """
    if bath.regime != CLASSICAL:
        raise WrongRegime("equilibrium_initial_state needs the classical regime")
    if isinstance(rng, StreamBank):
        size = len(rng)
    lead = () if size is None else (size,)
    z = rng.standard_normal(lead + (9,))
    u = random_unit_vectors(z[..., 3:6])
    p = np.sqrt(rod.mass * bath.kT) * z[..., 0:3]
    omega = np.sqrt(bath.kT / rod.moment_of_inertia) * project_perp(z[..., 6:9], u)
    omega = project_perp(omega, u)
    return RodState(np.zeros_like(p), p, u, omega, 0.0)


def rest_initial_state(rng, size=None) -> RodState:
    """Rod at rest at the origin with a uniformly random orientation.

    Consumes the same nine normals per rod as :func:`equilibrium_initial_state`
    so both initial conditions leave the streams at the same position.
    """
    if isinstance(rng, StreamBank):
        size = len(rng)
    lead = () if size is None else (size,)
    z = rng.standard_normal(lead + (9,))
    u = random_unit_vectors(z[..., 3:6])
    zero = np.zeros_like(u)
    return RodState(zero, zero.copy(), u, zero.copy(), 0.0)
