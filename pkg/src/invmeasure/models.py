"""Forward maps from parameters to observable outputs.

All models are pure: repeated evaluation of the same point matrix is
bit-identical. Analytic maps carry closed-form Jacobians (used to verify
that the output components are geometrically distinct) and, for a single
output in one or two dimensions, closed-form preimage volumes that serve
as oracles in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import Box, ParameterDomain
from .exceptions import ArgumentError, GdViolationError
from .ode import integrate_dopri45
from .validation import as_matrix, as_vector

__all__ = [
    "QoIModel",
    "FunctionModel",
    "LinearMap",
    "SaddleMap",
    "MseirsParameters",
    "MseirsModel",
    "mseirs_rhs",
    "MSEIRS_LOWER",
    "MSEIRS_UPPER",
    "MSEIRS_REFERENCE",
    "MSEIRS_PARAM_NAMES",
    "PerturbedModel",
    "perturb",
]


class QoIModel:
    """Deterministic map from an ``n``-dimensional parameter point to an
    ``m``-dimensional output, ``m <= n``."""

    def __init__(self, n_inputs: int, m_outputs: int):
        if m_outputs > n_inputs:
            raise ArgumentError("output dimension must not exceed input dimension")
        self.n_inputs = int(n_inputs)
        self.m_outputs = int(m_outputs)

    def evaluate(self, points) -> np.ndarray:
        """Map a ``(k, n)`` point matrix to a ``(k, m)`` output matrix."""
        raise NotImplementedError

    def _check_points(self, points) -> np.ndarray:
        return as_matrix(points, "points", n_cols=self.n_inputs)


class FunctionModel(QoIModel):
    """Wrap an arbitrary vectorized callable as a model."""

    def __init__(self, n_inputs: int, m_outputs: int,
                 fn: Callable[[np.ndarray], np.ndarray]):
        super().__init__(n_inputs, m_outputs)
        self._fn = fn

    def evaluate(self, points) -> np.ndarray:
        pts = self._check_points(points)
        out = np.asarray(self._fn(pts), dtype=np.float64)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (pts.shape[0], self.m_outputs):
            raise ArgumentError(
                f"model callable returned shape {out.shape}, expected "
                f"{(pts.shape[0], self.m_outputs)}"
            )
        return out


class LinearMap(QoIModel):
    """``q = W @ lambda`` for a full-rank ``(m, n)`` weight matrix.

    The preimage of an output interval under one output component is a
    slab; its volume inside a box is available in closed form for one and
    two input dimensions, which makes this map the main test oracle.
    """

    def __init__(self, weights):
        w = as_matrix(weights, "weights")
        super().__init__(n_inputs=w.shape[1], m_outputs=w.shape[0])
        if np.linalg.matrix_rank(w) < self.m_outputs:
            raise GdViolationError(
                "weight matrix is rank-deficient; outputs are not "
                "geometrically distinct"
            )
        w.flags.writeable = False
        self.weights = w

    def evaluate(self, points) -> np.ndarray:
        return self._check_points(points) @ self.weights.T

    def jacobian(self, points) -> np.ndarray:
        pts = self._check_points(points)
        return np.broadcast_to(self.weights, (pts.shape[0], *self.weights.shape))

    def slab_volume(self, domain: ParameterDomain, lo: float, hi: float,
                    within: Box | None = None, component: int = 0) -> float:
        """Exact volume of ``{lo <= (W @ x)[component] <= hi}`` in the box.

        ``within`` restricts to a sub-box (intersected with the domain).
        Only implemented for 1-D and 2-D input spaces.
        """
        if not hi >= lo:
            raise ArgumentError("slab needs lo <= hi")
        w = self.weights[component]
        box_lo = domain.lower.copy()
        box_hi = domain.upper.copy()
        if within is not None:
            box_lo = np.maximum(box_lo, within.lower)
            box_hi = np.minimum(box_hi, within.upper)
            if np.any(box_lo >= box_hi):
                return 0.0
        if self.n_inputs == 1:
            return _slab_interval_length(w[0], lo, hi, box_lo[0], box_hi[0])
        if self.n_inputs == 2:
            upper = _halfspace_box_area(w[0], w[1], hi, box_lo[0], box_hi[0],
                                        box_lo[1], box_hi[1])
            lower = _halfspace_box_area(w[0], w[1], lo, box_lo[0], box_hi[0],
                                        box_lo[1], box_hi[1])
            return max(upper - lower, 0.0)
        raise ArgumentError("closed-form slab volumes cover only 1-D and 2-D")


def _slab_interval_length(w: float, lo: float, hi: float,
                          xlo: float, xhi: float) -> float:
    if w == 0.0:
        return (xhi - xlo) if lo <= 0.0 <= hi else 0.0
    a, b = sorted((lo / w, hi / w))
    return max(min(b, xhi) - max(a, xlo), 0.0)


def _halfspace_box_area(w1: float, w2: float, t: float, xlo: float, xhi: float,
                        ylo: float, yhi: float) -> float:
    """Exact area of ``{w1*x + w2*y <= t}`` inside ``[xlo,xhi] x [ylo,yhi]``."""
    if w1 == 0.0 and w2 == 0.0:
        return (xhi - xlo) * (yhi - ylo) if t >= 0.0 else 0.0
    if w2 == 0.0:
        cut = min(max(t / w1, xlo), xhi)
        run = cut - xlo if w1 > 0.0 else xhi - cut
        return run * (yhi - ylo)
    if w1 == 0.0:
        cut = min(max(t / w2, ylo), yhi)
        run = cut - ylo if w2 > 0.0 else yhi - cut
        return run * (xhi - xlo)

    def depth(x: float) -> float:
        yc = min(max((t - w1 * x) / w2, ylo), yhi)
        return yc - ylo if w2 > 0.0 else yhi - yc

    # The depth profile is piecewise linear with kinks where the cut line
    # crosses y = ylo or y = yhi, so trapezoids between nodes are exact.
    nodes = {xlo, xhi}
    for y_edge in (ylo, yhi):
        x_cross = (t - w2 * y_edge) / w1
        if xlo < x_cross < xhi:
            nodes.add(x_cross)
    xs = sorted(nodes)
    area = 0.0
    for a, b in zip(xs[:-1], xs[1:]):
        area += 0.5 * (depth(a) + depth(b)) * (b - a)
    return area


class SaddleMap(QoIModel):
    """Scalar map ``q = x * y`` on a 2-D box.

    Its level sets are hyperbolas, so output densities concentrated near a
    saddle value pull back to bimodal parameter measures.
    """

    def __init__(self):
        super().__init__(n_inputs=2, m_outputs=1)

    def evaluate(self, points) -> np.ndarray:
        pts = self._check_points(points)
        return (pts[:, 0] * pts[:, 1])[:, None]

    def jacobian(self, points) -> np.ndarray:
        pts = self._check_points(points)
        return np.stack([pts[:, 1], pts[:, 0]], axis=1)[:, None, :]


MSEIRS_PARAM_NAMES = (
    "birth", "delta", "mu_m", "beta", "mu_g", "eps", "mu_i", "gamma",
    "f", "iota", "m0", "s0", "e0", "i0", "r0",
)

# Admissible intervals and the reference configuration. Time unit is one
# week, populations are in millions, and birth/death rates are normalized
# to a population of 300 million.
MSEIRS_LOWER = np.array([
    2.72e-4, 1.0 / 12.0, 4e-3, 1.92e-3, 2.4e-4, 0.571, 4.81e-6, 0.7,
    0.125, 0.015, 2.5, 260.0, 0.01, 0.1, 10.0,
])
MSEIRS_UPPER = np.array([
    3.04e-4, 1.0 / 4.0, 6e-3, 3.85e-3, 2.72e-4, 1.0, 2.11e-5, 2.33,
    0.25, 0.0375, 3.5, 275.0, 0.5, 4.0, 20.0,
])
MSEIRS_REFERENCE = np.array([
    3.02e-4, 0.16, 4.5e-3, 3.4e-3, 2.52e-4, 0.7, 1.75e-5, 0.8,
    0.18, 0.026, 3.25, 270.0, 0.425, 3.8, 13.0,
])


@dataclass(frozen=True)
class MseirsParameters:
    """Rates (per week) and initial populations (millions) of the
    maternal-immunity epidemic compartment model."""

    birth: float      # birth rate into the maternally protected class
    delta: float      # loss of maternal immunity, M -> S
    mu_m: float       # infant death rate
    beta: float       # contact/infectivity rate
    mu_g: float       # general death rate
    eps: float        # progression rate, E -> I
    mu_i: float       # death rate of the infected class
    gamma: float      # recovery rate, I -> R
    f: float          # loss of acquired immunity, R -> S
    iota: float       # immunization rate, S -> R
    m0: float
    s0: float
    e0: float
    i0: float
    r0: float

    @classmethod
    def from_vector(cls, values) -> "MseirsParameters":
        vec = as_vector(values, "values", size=15)
        return cls(*vec.tolist())

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in MSEIRS_PARAM_NAMES])

    def initial_state(self) -> np.ndarray:
        return np.array([self.m0, self.s0, self.e0, self.i0, self.r0])

    @classmethod
    def reference(cls) -> "MseirsParameters":
        return cls.from_vector(MSEIRS_REFERENCE)


def mseirs_rhs(state, params: MseirsParameters) -> np.ndarray:
    """Time derivative of the compartment vector ``(M, S, E, I, R)``."""
    m, s, e, i, r = np.asarray(state, dtype=np.float64)
    p = params
    dm = p.birth * (s + e + i + r) - (p.delta + p.mu_m) * m
    ds = p.delta * m - p.beta * s * i - (p.mu_g + p.iota) * s + p.f * r
    de = p.beta * s * i - (p.eps + p.mu_g) * e
    di = p.eps * e - (p.gamma + p.mu_i + p.mu_g) * i
    dr = p.gamma * i - (p.mu_g + p.f) * r + p.iota * s
    return np.array([dm, ds, de, di, dr])


def mseirs_domain(metric: str = "euclidean") -> ParameterDomain:
    """The 15-D admissible box for the epidemic model."""
    return ParameterDomain(MSEIRS_LOWER, MSEIRS_UPPER, voronoi_metric=metric)


class MseirsModel(QoIModel):
    """Outputs ``(M(6), I(6))``: protected infants and infected individuals
    (in millions) after six weeks."""

    final_time = 6.0

    def __init__(self, rel_tol: float = 1e-8, abs_tol: float = 1e-8):
        super().__init__(n_inputs=15, m_outputs=2)
        self.rel_tol = float(rel_tol)
        self.abs_tol = float(abs_tol)

    def solve(self, params: MseirsParameters):
        def rhs(t, y):
            return mseirs_rhs(y, params)

        return integrate_dopri45(rhs, params.initial_state(), 0.0,
                                 self.final_time, self.rel_tol, self.abs_tol)

    def evaluate(self, points) -> np.ndarray:
        pts = self._check_points(points)
        out = np.empty((pts.shape[0], 2))
        for row in range(pts.shape[0]):
            sol = self.solve(MseirsParameters.from_vector(pts[row]))
            out[row, 0] = sol.final_state[0]
            out[row, 1] = sol.final_state[3]
        return out


class PerturbedModel:
    """An exact map paired with a cheaper approximation and an estimate of
    the approximation error.

    ``exact(x) == numerical(x) + map_error(x)`` holds by construction;
    ``error_estimate`` approximates ``map_error`` with some quality.
    """

    def __init__(self, exact: QoIModel, numerical: QoIModel,
                 error_estimate: Callable[[np.ndarray], np.ndarray]):
        if (exact.n_inputs, exact.m_outputs) != (numerical.n_inputs, numerical.m_outputs):
            raise ArgumentError("exact and numerical maps must share dimensions")
        if error_estimate is None:
            raise ArgumentError("an error-estimate function is required")
        self.exact = exact
        self.numerical = numerical
        self._error_estimate = error_estimate
        self.n_inputs = exact.n_inputs
        self.m_outputs = exact.m_outputs

    def error_estimate(self, points) -> np.ndarray:
        out = np.asarray(self._error_estimate(points), dtype=np.float64)
        if out.ndim == 1:
            out = out[:, None]
        return out

    def map_error(self, points) -> np.ndarray:
        """The true pointwise error ``exact - numerical``."""
        return self.exact.evaluate(points) - self.numerical.evaluate(points)

    def corrected(self, points) -> np.ndarray:
        """Error-corrected evaluation, ``numerical + error_estimate``."""
        return self.numerical.evaluate(points) + self.error_estimate(points)


def perturb(exact: QoIModel, bias, estimate_quality: float) -> PerturbedModel:
    """Build a perturbed model by subtracting a known bias from ``exact``.

    ``bias`` is a vectorized callable ``(k, n) -> (k, m)`` or a constant
    (scalar or length-m vector). The numerical map is ``exact - bias`` and
    the error estimate recovers the fraction ``estimate_quality`` of the
    true pointwise error, so quality 1 makes the corrected map reproduce
    the exact one.
    """
    if not 0.0 <= estimate_quality <= 1.0:
        raise ArgumentError("estimate_quality must lie in [0, 1]")

    if callable(bias):
        bias_fn = bias
    else:
        const = np.atleast_1d(np.asarray(bias, dtype=np.float64))
        if const.size == 1:
            const = np.full(exact.m_outputs, float(const[0]))
        if const.shape != (exact.m_outputs,):
            raise ArgumentError(
                f"constant bias must be scalar or length {exact.m_outputs}"
            )

        def bias_fn(points, _c=const):
            return np.broadcast_to(_c, (np.asarray(points).shape[0], _c.shape[0]))

    def numerical_fn(points):
        out = np.asarray(bias_fn(points), dtype=np.float64)
        if out.ndim == 1:
            out = out[:, None]
        return exact.evaluate(points) - out

    numerical = FunctionModel(exact.n_inputs, exact.m_outputs, numerical_fn)

    def error_estimate(points):
        return estimate_quality * (exact.evaluate(points) - numerical.evaluate(points))

    return PerturbedModel(exact=exact, numerical=numerical,
                          error_estimate=error_estimate)
