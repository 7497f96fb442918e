"""Friction tensors of the form ``g_par uu + g_perp (1 - uu)``.

Tensors are kept in eigen form ``(g_par, g_perp, u)``: powers and the matrix
exponential act on the two eigenvalues and leave the axis alone. All
operations broadcast over leading dimensions of ``u`` (an ensemble of rods)
and over array-valued eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParameterError

AXIS_TOL = 1e-9


class NonUnitAxis(ParameterError):
    """Axis vector deviates from unit length by more than the tolerance."""


class SingularTensor(ParameterError):
    """Negative power requested for a tensor with a zero eigenvalue."""


def _unit_axis(u):
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (3,):
        raise NonUnitAxis("axis must have trailing dimension 3")
    norm = np.linalg.norm(u, axis=-1, keepdims=True)
    if np.any(np.abs(norm - 1.0) > AXIS_TOL):
        raise NonUnitAxis(f"axis norm off by more than {AXIS_TOL}")
    return u / norm


def dot(a, b):
    """Row-wise dot product over the trailing axis of length 3."""
    return np.einsum("...i,...i->...", a, b)


def decompose(v, u):
    """Split ``v`` into components along and across the unit axis ``u``.

    Returns ``(v_par, v_perp)`` with ``v_par = (v.u) u`` and
    ``v_perp = v - v_par``.
    """
    return _split(np.asarray(v, dtype=float), _unit_axis(u))


def _split(v, u):
    v_par = dot(v, u)[..., None] * u
    return v_par, v - v_par


@dataclass(frozen=True)
class FrictionTensor:
    gamma_par: float
    gamma_perp: float
    axis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "axis", _unit_axis(self.axis))
        self._check_eigenvalues()

    @classmethod
    def _on_axis(cls, gamma_par, gamma_perp, axis):
        # axis taken from an already validated tensor
        obj = object.__new__(cls)
        object.__setattr__(obj, "gamma_par", gamma_par)
        object.__setattr__(obj, "gamma_perp", gamma_perp)
        object.__setattr__(obj, "axis", axis)
        obj._check_eigenvalues()
        return obj

    def _check_eigenvalues(self):
        if np.any(np.asarray(self.gamma_par) < 0) or np.any(np.asarray(self.gamma_perp) < 0):
            raise ParameterError("friction eigenvalues must be non-negative")

    @property
    def eigenvalues(self):
        return self.gamma_par, self.gamma_perp, self.gamma_perp


def tensor_apply(gamma: FrictionTensor, v):
    """Return ``gamma_par v_par + gamma_perp v_perp``."""
    v_par, v_perp = _split(np.asarray(v, dtype=float), gamma.axis)
    g_par = np.asarray(gamma.gamma_par, dtype=float)[..., None]
    g_perp = np.asarray(gamma.gamma_perp, dtype=float)[..., None]
    return g_par * v_par + g_perp * v_perp


def tensor_power(gamma: FrictionTensor, s: float) -> FrictionTensor:
    """Real power of the tensor, computed on the eigenvalues."""
    g_par = np.asarray(gamma.gamma_par, dtype=float)
    g_perp = np.asarray(gamma.gamma_perp, dtype=float)
    if s < 0 and (np.any(g_par == 0) or np.any(g_perp == 0)):
        raise SingularTensor(f"power {s} of a tensor with a zero eigenvalue")
    if s == 0:
        return FrictionTensor._on_axis(np.ones_like(g_par)[()], np.ones_like(g_perp)[()], gamma.axis)
    return FrictionTensor._on_axis((g_par**s)[()], (g_perp**s)[()], gamma.axis)


def green_function(gamma: FrictionTensor, mass: float, dt: float) -> FrictionTensor:
    """Propagator ``exp(-gamma dt / M)`` of the damped momentum equation."""
    if mass <= 0:
        raise ParameterError("mass must be positive")
    if np.any(np.asarray(dt) < 0):
        raise ParameterError("time step must be non-negative")
    return FrictionTensor._on_axis(
        np.exp(-np.asarray(gamma.gamma_par) * dt / mass)[()],
        np.exp(-np.asarray(gamma.gamma_perp) * dt / mass)[()],
        gamma.axis,
    )
