"""Ensemble estimators and the closed-form values they are checked against.

The accumulator keeps per-trajectory sums and sums of squares so that
ensembles built in separate workers combine by plain addition. Lag-type
observables (mean-square displacement, orientation correlation) average
over moving time origins within each trajectory before entering the sums;
one-time observables (momentum and angular-velocity moments, energy) are
averaged over trajectories at each recorded time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .core import QUANTUM, BathParams, MissingCutoff, RodParams, WrongRegime, relaxation_times
from .dynamics import Trajectory
from .friction import dot
from .noise import SpectralDensity

LAG_KEYS = ("msd", "orient_corr", "du2")
TIME_KEYS = ("p_par_sq", "p_perp_sq", "omega_sq", "energy")
KEYS = LAG_KEYS + TIME_KEYS


class GridMismatch(ValueError):
    pass


class InsufficientEquilibration(ValueError):
    pass


class NonPositiveCurve(ValueError):
    pass


@dataclass
class EnsembleAccumulator:
    """Running sums over trajectories on a fixed record grid.

    ``origin_stride`` is the spacing, in records, between time origins for
    the lag observables; ``None`` uses only the first record as origin.
    """

    times: np.ndarray
    origin_stride: int | None = None
    n_traj: int = 0
    sums: dict = field(default_factory=dict)
    sumsq: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        n = self.times.size
        for k in KEYS:
            self.sums.setdefault(k, np.zeros(n))
            self.sumsq.setdefault(k, np.zeros(n))

    @property
    def origins(self):
        n = self.times.size
        if self.origin_stride is None:
            return np.array([0])
        return np.arange(0, n, self.origin_stride)

    @property
    def lag_counts(self):
        """Number of time origins contributing to each lag per trajectory."""
        n = self.times.size
        return np.array([np.sum(self.origins <= n - 1 - lag) for lag in range(n)])

    def mean(self, key):
        if self.n_traj == 0:
            return np.full(self.times.size, np.nan)
        return self.sums[key] / self.n_traj

    def stderr(self, key):
        n = self.n_traj
        if n < 2:
            return np.full(self.times.size, np.nan)
        m = self.sums[key] / n
        var = np.maximum(self.sumsq[key] / n - m * m, 0.0) * n / (n - 1)
        return np.sqrt(var / n)

    def copy(self) -> "EnsembleAccumulator":
        return EnsembleAccumulator(self.times.copy(), self.origin_stride, self.n_traj,
                                   {k: v.copy() for k, v in self.sums.items()},
                                   {k: v.copy() for k, v in self.sumsq.items()})

    def compatible(self, other) -> bool:
        return (self.origin_stride == other.origin_stride and self.times.shape == other.times.shape
                and np.allclose(self.times, other.times, rtol=1e-12, atol=0))


def _lag_average(x, origins, pair):
    """Per-trajectory origin-averaged ``pair(x[o + lag], x[o])`` for every lag."""
    n = x.shape[0]
    out = np.zeros((n, x.shape[1]))
    counts = np.zeros(n)
    for o in origins:
        out[: n - o] += pair(x[o:], x[o])
        counts[: n - o] += 1
    return out / counts[:, None]


def trajectory_observables(traj: Trajectory, origin_stride=None):
    """Per-trajectory observable curves, each of shape ``(n_records, n_traj)``."""
    n = traj.n_records
    origins = np.array([0]) if origin_stride is None else np.arange(0, n, origin_stride)
    rod = traj.rod
    sq = lambda a, b: dot(a - b, a - b)  # noqa: E731
    msd = _lag_average(traj.r, origins, sq)
    corr = _lag_average(traj.u, origins, dot)
    p_par = dot(traj.p, traj.u)
    p_par_sq = p_par**2
    p_perp_sq = dot(traj.p, traj.p) - p_par_sq
    omega_sq = dot(traj.omega, traj.omega)
    energy = mean_energy(p_par_sq, p_perp_sq, omega_sq, rod)
    return {"msd": msd, "orient_corr": corr, "du2": 2.0 * (1.0 - corr), "p_par_sq": p_par_sq,
            "p_perp_sq": p_perp_sq, "omega_sq": omega_sq, "energy": energy}


def accumulate(acc: EnsembleAccumulator, traj: Trajectory) -> EnsembleAccumulator:
    """Return a new accumulator with the trajectories of ``traj`` added."""
    if traj.times.shape != acc.times.shape or not np.allclose(traj.times, acc.times, rtol=1e-12, atol=1e-12):
        raise GridMismatch("trajectory recorded on a different time grid")
    obs = trajectory_observables(traj, acc.origin_stride)
    out = acc.copy()
    for k in KEYS:
        out.sums[k] += obs[k].sum(axis=1)
        out.sumsq[k] += (obs[k] ** 2).sum(axis=1)
    out.n_traj += traj.n_traj
    return out


def merge(a: EnsembleAccumulator, b: EnsembleAccumulator) -> EnsembleAccumulator:
    if not a.compatible(b):
        raise GridMismatch("accumulators use different grids or origin spacing")
    return EnsembleAccumulator(a.times.copy(), a.origin_stride, a.n_traj + b.n_traj,
                               {k: a.sums[k] + b.sums[k] for k in KEYS},
                               {k: a.sumsq[k] + b.sumsq[k] for k in KEYS})


@dataclass(frozen=True)
class OracleReport:
    """One estimate compared to its reference value.

    ``kind`` is ``"abs"`` or ``"rel"`` (a relative tolerance is measured
    against ``|oracle|``), or ``"max"`` for a one-sided bound
    ``estimate <= oracle``.
    """

    id: str
    estimate: float
    oracle: float
    tolerance: float
    kind: str = "rel"
    note: str = ""

    @property
    def error(self) -> float:
        return abs(self.estimate - self.oracle)

    @property
    def passed(self) -> bool:
        if self.kind == "max":
            return bool(self.estimate <= self.oracle)
        bound = self.tolerance * abs(self.oracle) if self.kind == "rel" else self.tolerance
        return bool(np.isfinite(self.estimate) and self.error <= bound)

    def as_dict(self) -> dict:
        d = {"id": self.id, "estimate": float(self.estimate), "oracle": float(self.oracle),
             "tolerance": float(self.tolerance), "tolerance_kind": self.kind, "pass": self.passed}
        if self.note:
            d["note"] = self.note
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tol = {"rel": f"{100 * self.tolerance:g}%", "abs": f"{self.tolerance:g}", "max": "upper bound"}[self.kind]
        return f"[{status}] {self.id}: estimate={self.estimate:.6g} oracle={self.oracle:.6g} tol={tol}"


def _require_classical(bath):
    if bath.regime == QUANTUM:
        raise WrongRegime("classical oracle requested for a quantum bath")


def msd_oracle(t, bath: BathParams):
    """Mean-square displacement ``2 k_B T t (1/gamma_par + 2/gamma_perp)``."""
    _require_classical(bath)
    return 2.0 * bath.kT * np.asarray(t, dtype=float) * (1.0 / bath.gamma_par + 2.0 / bath.gamma_perp)


def diffusion_coefficients(bath: BathParams) -> dict[str, float]:
    return {"par": bath.kT / bath.gamma_par, "perp": bath.kT / bath.gamma_perp, "rot": bath.kT / bath.gamma_rot}


def orientation_oracle(t, bath: BathParams):
    """``(<u(t).u(0)>, <|u(t) - u(0)|^2>) = (exp(-2 D_r t), 2 (1 - exp(-2 D_r t)))``."""
    _require_classical(bath)
    corr = np.exp(-2.0 * bath.rotational_diffusion * np.asarray(t, dtype=float))
    return corr, 2.0 * (1.0 - corr)


def equipartition_oracle(rod: RodParams, bath: BathParams):
    """Long-time second moments and mean energy of the classical rod.

    Returns ``(<p_par^2>, <p_perp^2>, <Omega^2>, <E>)`` =
    ``(M kT, 2 M kT, 2 kT / I, 5/2 kT)``. The angular-velocity entry counts
    two rotational degrees of freedom, consistent with the 5/2 energy.
    """
    _require_classical(bath)
    kT = bath.kT
    return rod.mass * kT, 2.0 * rod.mass * kT, 2.0 * kT / rod.moment_of_inertia, 2.5 * kT


def mean_energy(p_par_sq, p_perp_sq, omega_sq, rod: RodParams):
    """``I <Omega^2> / 2 + <p_par^2> / 2M + <p_perp^2> / 2M``."""
    return (0.5 * rod.moment_of_inertia * np.asarray(omega_sq)
            + (np.asarray(p_par_sq) + np.asarray(p_perp_sq)) / (2.0 * rod.mass))


def equilibrium_window(acc: EnsembleAccumulator, rod: RodParams, bath: BathParams, n_relax: float = 10.0):
    """Mask of records at least ``n_relax`` slowest relaxation times into the run."""
    t_min = acc.times[0] + n_relax * max(relaxation_times(rod, bath).values())
    mask = acc.times >= t_min - 1e-12
    if not mask.any():
        raise InsufficientEquilibration(
            f"run ends at t={acc.times[-1]:.4g}, equilibrated samples need t >= {t_min:.4g}")
    return mask


def moment_estimates(acc: EnsembleAccumulator, rod: RodParams, bath: BathParams, n_relax: float = 10.0):
    """Time- and ensemble-averaged one-time moments over the equilibrated window."""
    mask = equilibrium_window(acc, rod, bath, n_relax)
    return {k: float(acc.mean(k)[mask].mean()) for k in TIME_KEYS}


def mean_energy_estimate(acc: EnsembleAccumulator, rod: RodParams, bath: BathParams, n_relax: float = 10.0) -> float:
    m = moment_estimates(acc, rod, bath, n_relax)
    return float(mean_energy(m["p_par_sq"], m["p_perp_sq"], m["omega_sq"], rod))


def quantum_variance_oracle(rod: RodParams, bath: BathParams, which: str = "translational", axis: str = "par",
                            spectrum: SpectralDensity | None = None) -> float:
    """Stationary per-component variance of the noise-driven OU process.

    Translational: ``<p_i^2> = (1/2pi) int S(w) / (w^2 + (gamma/M)^2) dw``
    with ``gamma`` the friction along ``axis`` (``"par"`` or ``"perp"``).
    Rotational: ``<Omega_i^2>``, the same integral with rate
    ``gamma_rot / I`` divided by ``I^2``.

    ``spectrum`` overrides the bath's own (e.g. a flat classical spectrum
    with a cutoff); its friction is replaced by the relevant one.
    """
    if which == "translational":
        gamma = bath.gamma_par if axis == "par" else bath.gamma_perp
        rate, scale = gamma / rod.mass, 1.0
    elif which == "rotational":
        gamma = bath.gamma_rot
        rate, scale = gamma / rod.moment_of_inertia, 1.0 / rod.moment_of_inertia**2
    else:
        raise ValueError(f"unknown variance {which!r}")
    sd = SpectralDensity.from_bath(bath, gamma) if spectrum is None else spectrum.with_gamma(gamma)
    if sd.cutoff is None:
        raise MissingCutoff("variance integral needs a cutoff")
    f = lambda w: sd.bare(w) / (w * w + rate * rate) / np.pi  # noqa: E731
    if sd.cutoff_shape == "exponential":
        val, _ = integrate.quad(lambda w: f(w) * np.exp(-w / sd.cutoff), 0.0, np.inf, epsabs=0.0,
                                epsrel=1e-10, limit=500)
    else:
        pts = [rate] if rate < sd.cutoff else None
        val, _ = integrate.quad(f, 0.0, sd.cutoff, points=pts, epsabs=0.0, epsrel=1e-10, limit=500)
    return scale * val


def fit_exponential(t, curve, threshold: float = 0.05, t_min: float = 0.0, sigma=None):
    """Fit ``A exp(-rate t)`` to the leading part of a decaying curve.

    Least squares on ``log(curve)`` over records with ``t >= t_min`` up to
    the first value below ``threshold``. Returns ``(rate, amplitude,
    rms_residual)``, the residual measured in log units.

    With ``sigma`` (standard errors of ``curve``) the log residuals are
    weighted by ``curve / sigma``; zero errors are raised to the smallest
    positive one.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(curve, dtype=float)
    sel = t >= t_min
    t, y = t[sel], y[sel]
    sig = None if sigma is None else np.asarray(sigma, dtype=float)[sel]
    if y.size == 0 or y[0] <= 0:
        raise NonPositiveCurve("curve must start positive")
    below = np.nonzero(y < threshold)[0]
    end = below[0] if below.size else y.size
    if end < 2:
        raise NonPositiveCurve("fewer than two points above the fit threshold")
    t, y = t[:end], y[:end]
    logy = np.log(y)
    w = None
    if sig is not None:
        sig = sig[:end]
        positive = sig[np.isfinite(sig) & (sig > 0)]
        if positive.size:
            w = y / np.where(np.isfinite(sig) & (sig > 0), sig, positive.min())
    slope, intercept = np.polyfit(t, logy, 1, w=w)
    resid = logy - (slope * t + intercept)
    return -slope, float(np.exp(intercept)), float(np.sqrt(np.mean(resid**2)))


def fit_line(t, y, t_min: float = 0.0, sigma=None):
    """Least-squares slope and intercept of ``y(t)`` for ``t >= t_min``.

    ``sigma`` weights the residuals by ``1 / sigma`` (zero errors raised to
    the smallest positive one).
    """
    t = np.asarray(t, dtype=float)
    sel = t >= t_min
    w = None
    if sigma is not None:
        sig = np.asarray(sigma, dtype=float)[sel]
        ok = np.isfinite(sig) & (sig > 0)
        if ok.any():
            w = 1.0 / np.where(ok, sig, sig[ok].min())
    slope, intercept = np.polyfit(t[sel], np.asarray(y, dtype=float)[sel], 1, w=w)
    return float(slope), float(intercept)


def saturation_estimate(acc: EnsembleAccumulator, bath: BathParams, n_decay: float = 5.0):
    """Mean ``<du^2>`` over lags ``t >= n_decay / (2 D_r)``; ``None`` if the run is too short."""
    lags = acc.times - acc.times[0]
    mask = lags >= n_decay / (2.0 * bath.rotational_diffusion)
    if not mask.any():
        return None
    return float(acc.mean("du2")[mask].mean())


