"""Adaptive explicit Runge-Kutta integrator (Dormand-Prince 5(4) pair).

Seven-stage embedded pair: the fifth-order result propagates, the
difference against the embedded fourth-order result estimates the local
error. A step is accepted when every component of that estimate is within
``abs_tol + rel_tol * |state|``; the step size follows the standard
controller with exponent 1/5, safety factor 0.9, and growth clamped to
[0.2, 5]. The state may be an array of any shape (a batch of systems is
integrated under a shared step sequence).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ArgumentError, DivergenceError, StiffnessError

__all__ = ["OdeSolution", "dopri45_step", "integrate_dopri45"]

_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)

_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)

# Fifth-order weights (the seventh stage has weight zero) and the
# difference against the embedded fourth-order weights.
_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
       11.0 / 84.0, 0.0)
_E = (71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
      -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_UNDERFLOW = 1e-12


@dataclass(frozen=True)
class OdeSolution:
    """Terminal state of one integration."""

    final_state: np.ndarray
    steps_taken: int
    max_local_error: float


def dopri45_step(rhs: Callable, t: float, y: np.ndarray, dt: float):
    """One trial step; returns the fifth-order state and the error estimate."""
    k = [np.asarray(rhs(t, y), dtype=np.float64)]
    for stage in range(1, 7):
        incr = _A[stage][0] * k[0]
        for j in range(1, stage):
            if _A[stage][j] != 0.0:
                incr = incr + _A[stage][j] * k[j]
        k.append(np.asarray(rhs(t + _C[stage] * dt, y + dt * incr), dtype=np.float64))
    acc = _B5[0] * k[0]
    err = _E[0] * k[0]
    for j in range(1, 7):
        if _B5[j] != 0.0:
            acc = acc + _B5[j] * k[j]
        if _E[j] != 0.0:
            err = err + _E[j] * k[j]
    return y + dt * acc, dt * err


def integrate_dopri45(rhs: Callable, initial_state, t0: float, tf: float,
                      rel_tol: float = 1e-8, abs_tol: float = 1e-8) -> OdeSolution:
    """Integrate ``dy/dt = rhs(t, y)`` from ``t0`` to ``tf``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt`` with the shape of ``y``.
    initial_state : array-like
        Starting state; any shape.
    t0, tf : float
        Integration interval, ``tf > t0``.
    rel_tol, abs_tol : float
        Componentwise tolerances, both positive.

    Raises
    ------
    StiffnessError
        If the accepted step underflows ``1e-12 * (tf - t0)``.
    DivergenceError
        If the state or its derivative becomes non-finite.
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise ArgumentError("tolerances must be positive")
    if not tf > t0:
        raise ArgumentError("tf must exceed t0")
    y = np.asarray(initial_state, dtype=np.float64).copy()
    if not np.all(np.isfinite(y)):
        raise DivergenceError("initial state is not finite")
    span = tf - t0
    t = t0
    dt = span
    steps = 0
    max_err = 0.0
    while t < tf:
        if dt < _UNDERFLOW * span:
            raise StiffnessError(
                f"step size underflow at t={t!r}; problem too stiff"
            )
        last = dt >= tf - t
        h = tf - t if last else dt
        y_new, err = dopri45_step(rhs, t, y, h)
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(err))):
            # A non-finite trial usually means the step overshot; shrink and
            # retry, letting the underflow guard end genuine blow-ups.
            dt = h * _MIN_FACTOR
            continue
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = float(np.max(np.abs(err) / scale))
        if ratio <= 1.0:
            t = tf if last else t + h
            y = y_new
            steps += 1
            max_err = max(max_err, float(np.max(np.abs(err))))
            factor = _MAX_FACTOR if ratio == 0.0 else _SAFETY * ratio**-0.2
            dt = h * min(max(factor, _MIN_FACTOR), _MAX_FACTOR)
        else:
            dt = h * min(max(_SAFETY * ratio**-0.2, _MIN_FACTOR), 1.0)
    return OdeSolution(final_state=y, steps_taken=steps, max_local_error=max_err)
