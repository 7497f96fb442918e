"""Thermal force and torque noise.

Classical noise is white: over a step ``dt`` each Cartesian component of the
impulse is Gaussian with variance ``2 k_B T gamma dt``. The force splits into
one component along the rod (friction ``gamma_par``) and two across it
(``gamma_perp``); the torque lives in the plane perpendicular to the rod.

Quantum noise is stationary and Gaussian with the symmetrized Ohmic spectrum

    S(w) = hbar gamma |w| coth(hbar |w| / 2 k_B T),   |w| <= w_c,

whose autocovariance ``C(tau) = (1/2 pi) int S(w) cos(w tau) dw`` is
evaluated by adaptive quadrature in :func:`quantum_kernel` and sampled on a
grid by spectral synthesis in :func:`synthesize_colored_noise`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import CLASSICAL, QUANTUM, BathParams, MissingCutoff, ParameterError, StreamBank, WrongRegime
from .friction import decompose


class NyquistViolation(ParameterError):
    """Grid spacing too coarse to resolve the cutoff frequency."""


class NotPowerOfTwo(ParameterError):
    pass


class SeriesExhausted(IndexError):
    """Step index beyond the end of a precomputed noise series."""


def white_force_strengths(bath: BathParams) -> dict[str, float]:
    """Total delta-correlation strengths of the classical force blocks.

    The perpendicular block has two components, so its total strength is
    ``4 k_B T gamma_perp`` against ``2 k_B T gamma_par`` along the axis.
    """
    return {
        "par": 2.0 * bath.kT * bath.gamma_par,
        "perp": 4.0 * bath.kT * bath.gamma_perp,
        "par_per_component": 2.0 * bath.kT * bath.gamma_par,
        "perp_per_component": 2.0 * bath.kT * bath.gamma_perp,
        "torque_per_component": 2.0 * bath.kT * bath.gamma_rot,
    }


def _require_classical(bath):
    if bath.regime != CLASSICAL:
        raise WrongRegime(f"white noise needs the classical regime, bath is {bath.regime!r}")


def white_force_increment(bath: BathParams, u, dt: float, rng):
    """Force impulse over one step, split along and across the rod axis.

    Parameters
    ----------
    bath : BathParams
        Classical bath.
    u : array_like, shape (..., 3)
        Current rod axis.
    dt : float
        Step length, > 0.
    rng
        ``numpy.random.Generator`` or :class:`~rodlangevin.core.StreamBank`;
        three normals are drawn per rod.

    Returns
    -------
    impulse_par, impulse_perp : ndarray
        The parallel impulse lies along ``u`` with variance
        ``2 k_B T gamma_par dt``; the perpendicular one lies in the plane
        normal to ``u`` with variance ``2 k_B T gamma_perp dt`` per component.
    """
    _require_classical(bath)
    if dt <= 0:
        raise ParameterError("dt must be positive")
    u = np.asarray(u, dtype=float)
    z_par, z_perp = decompose(rng.standard_normal(u.shape), u)
    return (np.sqrt(2.0 * bath.kT * bath.gamma_par * dt) * z_par,
            np.sqrt(2.0 * bath.kT * bath.gamma_perp * dt) * z_perp)


def white_torque_increment(bath: BathParams, u, dt: float, rng):
    """Torque impulse over one step, perpendicular to ``u``.

    Variance is ``2 k_B T gamma_rot dt`` per in-plane component.
    """
    _require_classical(bath)
    if dt <= 0:
        raise ParameterError("dt must be positive")
    u = np.asarray(u, dtype=float)
    _, z_perp = decompose(rng.standard_normal(u.shape), u)
    return np.sqrt(2.0 * bath.kT * bath.gamma_rot * dt) * z_perp


def omega_coth(omega, hbar: float, kT: float):
    """``|w| coth(hbar |w| / 2kT)`` with the w -> 0 and T -> 0 limits built in."""
    w = np.abs(np.asarray(omega, dtype=float))
    if kT == 0:
        return w
    x = hbar * w / (2.0 * kT)
    small = x < 1e-6
    xs = np.where(small, 1.0, x)
    val = np.where(small, 1.0 + x * x / 3.0, xs / np.tanh(xs))
    return (2.0 * kT / hbar) * val


@dataclass(frozen=True)
class SpectralDensity:
    """Two-sided power spectrum of one noise component.

    ``regime="quantum"`` gives the coth spectrum; ``regime="classical"`` the
    flat white spectrum ``2 k_B T gamma``. Either is multiplied by the cutoff
    factor (sharp step or ``exp(-|w|/w_c)``) when a cutoff is set.
    """

    gamma: float
    temperature: float
    hbar: float = 1.0
    k_B: float = 1.0
    cutoff: float | None = None
    regime: str = QUANTUM
    cutoff_shape: str = "sharp"

    def __post_init__(self):
        if self.gamma <= 0:
            raise ParameterError("gamma must be positive")
        if self.temperature < 0:
            raise ParameterError("temperature must be non-negative")
        if self.regime == QUANTUM and self.cutoff is None:
            raise MissingCutoff("quantum spectral density requires a cutoff")

    @classmethod
    def from_bath(cls, bath: BathParams, gamma: float | None = None) -> "SpectralDensity":
        return cls(
            gamma=bath.gamma_par if gamma is None else gamma,
            temperature=bath.temperature,
            hbar=bath.hbar,
            k_B=bath.k_B,
            cutoff=bath.cutoff,
            regime=bath.regime,
            cutoff_shape=bath.cutoff_shape,
        )

    @property
    def kT(self) -> float:
        return self.k_B * self.temperature

    def cutoff_factor(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        if self.cutoff is None:
            return np.ones_like(w)
        if self.cutoff_shape == "exponential":
            return np.exp(-w / self.cutoff)
        return (w <= self.cutoff).astype(float)

    def bare(self, omega):
        """Spectrum without the cutoff factor."""
        if self.regime == CLASSICAL:
            return np.full_like(np.asarray(omega, dtype=float), 2.0 * self.kT * self.gamma)
        return self.hbar * self.gamma * omega_coth(omega, self.hbar, self.kT)

    def __call__(self, omega):
        return self.bare(omega) * self.cutoff_factor(omega)

    def with_gamma(self, gamma: float) -> "SpectralDensity":
        return SpectralDensity(gamma, self.temperature, self.hbar, self.k_B,
                               self.cutoff, self.regime, self.cutoff_shape)


def _kernel_zero(sd: SpectralDensity) -> float:
    f = lambda w: sd.bare(w) / np.pi  # noqa: E731
    if sd.cutoff_shape == "exponential":
        val, _ = integrate.quad(lambda w: f(w) * np.exp(-w / sd.cutoff), 0.0, np.inf,
                                epsabs=0.0, epsrel=1e-12, limit=200)
    else:
        val, _ = integrate.quad(f, 0.0, sd.cutoff, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def quantum_kernel(tau, sd: SpectralDensity):
    """Symmetrized autocovariance ``C(tau)`` of one noise component.

    ``C(tau) = (hbar gamma / pi) int_0^{w_c} w coth(hbar w / 2kT) cos(w tau) dw``
    (or with ``exp(-w/w_c)`` over the half line for the smooth cutoff).
    QUADPACK's Gauss-Kronrod rules handle the integral, with the cosine as a
    weight function so the oscillation costs nothing. Accuracy is 1e-10 of
    ``C(0)`` in absolute terms. The kernel is even in ``tau``.
    """
    if sd.cutoff is None:
        raise MissingCutoff("kernel integral needs a cutoff")
    taus = np.abs(np.asarray(tau, dtype=float))
    c0 = _kernel_zero(sd)
    epsabs = 1e-10 * abs(c0) if c0 != 0 else 1e-14
    f = lambda w: sd.bare(w) / np.pi  # noqa: E731
    out = np.empty(taus.shape)
    for idx, t in np.ndenumerate(taus):
        if t == 0:
            out[idx] = c0
        elif sd.cutoff_shape == "exponential":
            val, _ = integrate.quad(lambda w: f(w) * np.exp(-w / sd.cutoff), 0.0, np.inf,
                                    weight="cos", wvar=t, epsabs=epsabs, limlst=200)
            out[idx] = val
        else:
            val, _ = integrate.quad(f, 0.0, sd.cutoff, weight="cos", wvar=t,
                                    epsabs=epsabs, epsrel=0.0, limit=500)
            out[idx] = val
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class NoiseSeries:
    """Stationary Gaussian samples on a uniform grid.

    ``values`` has shape ``batch + (n_components, n)``; ``spectrum`` is the
    declared per-component covariance contract.
    """

    dt: float
    values: np.ndarray
    spectrum: SpectralDensity

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def n_components(self) -> int:
        return self.values.shape[-2]

    def sample(self, step_index: int):
        if not 0 <= step_index < self.n:
            raise SeriesExhausted(f"step {step_index} outside series of length {self.n}")
        return self.values[..., step_index]

    def expected_autocovariance(self, lags):
        """Exact expected circular autocovariance of the synthesized series."""
        return discrete_autocovariance(self.spectrum, self.n, self.dt, lags)


def _check_grid(sd: SpectralDensity, n: int, dt: float):
    if n < 2 or n & (n - 1):
        raise NotPowerOfTwo(f"series length {n} is not a power of two")
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if sd.cutoff is not None and dt * sd.cutoff > np.pi:
        raise NyquistViolation(f"dt * cutoff = {dt * sd.cutoff:.4g} exceeds pi")


def discrete_autocovariance(sd: SpectralDensity, n: int, dt: float, lags):
    """Autocovariance at integer ``lags`` implied by the grid spectrum.

    This is the Riemann sum ``(1 / n dt) sum_k S(w_k) cos(w_k m dt)`` over the
    ``n`` DFT frequencies, i.e. what :func:`synthesize_colored_noise`
    produces in expectation.
    """
    _check_grid(sd, n, dt)
    w = 2.0 * np.pi * np.fft.fftfreq(n, dt)
    s = sd(w)
    lags = np.asarray(lags)
    return np.cos(np.multiply.outer(lags * dt, w)) @ s / (n * dt)


def synthesize_colored_noise(sd: SpectralDensity, n: int, dt: float, n_components: int, rng,
                             batch_shape=()) -> NoiseSeries:
    """Draw a real stationary Gaussian series with spectrum ``sd``.

    Each positive-frequency bin gets an independent complex Gaussian
    amplitude with ``E|X_k|^2 = n S(w_k) / dt``; the zero and Nyquist bins
    are real. An inverse real FFT then enforces Hermitian symmetry. Two
    normals are drawn per bin per component.

    With a :class:`~rodlangevin.core.StreamBank` the batch shape is the
    number of streams and each stream fills its own series.
    """
    _check_grid(sd, n, dt)
    if isinstance(rng, StreamBank):
        batch_shape = (len(rng),)
    batch_shape = tuple(batch_shape)
    w = 2.0 * np.pi * np.fft.rfftfreq(n, dt)
    s = sd(w)
    nb = w.size
    z = rng.standard_normal(batch_shape + (n_components, nb, 2))
    amp = np.sqrt(n * s / (2.0 * dt))
    amp[0] = np.sqrt(n * s[0] / dt)
    amp[-1] = np.sqrt(n * s[-1] / dt)
    spec = amp * (z[..., 0] + 1j * z[..., 1])
    spec[..., 0] = amp[0] * z[..., 0, 0]
    spec[..., -1] = amp[-1] * z[..., -1, 0]
    values = np.fft.irfft(spec, n=n, axis=-1)
    return NoiseSeries(dt, values, sd)


def sample_autocovariance(values, max_lag: int):
    """Circular sample autocovariance along the last axis, averaged over the rest.

    Returns lags ``0..max_lag``. Zero mean is assumed (it is part of the
    series contract), so no mean is subtracted.
    """
    x = np.asarray(values, dtype=float)
    n = x.shape[-1]
    f = np.fft.rfft(x, axis=-1)
    acf = np.fft.irfft(f * np.conj(f), n=n, axis=-1) / n
    acf = acf.reshape(-1, n).mean(axis=0)
    return acf[: max_lag + 1]
