"""Counting-measure and grid approximations of the inverse measure.

Given parameter samples, their outputs, and a simple-function output
density, the Monte Carlo solve assigns each sample to its output bin and
splits every bin's probability across the samples that landed in it
(equally, or proportionally to supplied per-cell weights). The result is a
point-mass measure on the samples whose push-forward through the bin
assignment reproduces the output density exactly on every nonempty bin.
Probability sitting in bins no sample reached is reported as lost mass,
never silently renormalized away.

The grid solve is the dense reference path: it partitions the parameter
box into tensor cells, estimates per-cell output-region overlaps by
emulation, and applies the same probability-splitting rule to the grid
cells.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .density import DataPartition, SimpleFunctionDensity
from .domain import (
    Box,
    BoxUnion,
    CellUnion,
    Event,
    ParameterDomain,
    SampleSet,
    voronoi_coverage,
)
from .exceptions import ArgumentError, LostMassWarning
from .models import QoIModel
from .validation import as_matrix, as_vector, check_positive_int

__all__ = [
    "AnsatzWeights",
    "CountingMeasure",
    "GridMeasure",
    "MarginalTable",
    "solve_counting",
    "solve_grid",
    "event_probability",
    "marginalize",
    "InverseDensityEstimator",
]


@dataclass(frozen=True)
class AnsatzWeights:
    """Relative conditional weights of the samples within a contour region.

    The probability of an output bin is split across the samples assigned
    to it proportionally to these (strictly positive) weights, replacing
    the default non-preferential volume weighting along contours.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = as_vector(self.weights, "weights")
        if np.any(w <= 0):
            raise ArgumentError("ansatz weights must be strictly positive")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class CountingMeasure:
    """Point-mass approximation of the inverse probability measure.

    Attributes
    ----------
    samples : SampleSet
        The carrier; ``cell_prob[j - 1]`` is the mass on sample ``j``.
    density : SimpleFunctionDensity
        The output density that was inverted.
    cell_prob : ndarray of shape (N,)
        Per-cell probabilities; they sum to ``1 - lost_mass``.
    pointer : ndarray of shape (N,)
        1-based output bin of each sample, 0 if the output fell outside
        the partition box.
    counts : ndarray of shape (M,)
        Samples per output bin.
    lost_mass : float
        Total probability of supported bins containing no samples.
    """

    samples: SampleSet
    density: SimpleFunctionDensity
    cell_prob: np.ndarray
    pointer: np.ndarray
    counts: np.ndarray
    lost_mass: float

    @property
    def n_samples(self) -> int:
        return self.samples.n_samples

    def region_ids(self, bin_id: int) -> np.ndarray:
        """1-based sample ids assigned to one output bin."""
        return np.nonzero(self.pointer == bin_id)[0].astype(np.int64) + 1


@dataclass(frozen=True)
class GridMeasure:
    """Probabilities of tensor grid cells partitioning the parameter box."""

    domain: ParameterDomain
    edges: tuple[np.ndarray, ...]
    cell_prob: np.ndarray
    lost_mass: float

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(e.shape[0] - 1 for e in self.edges)

    def cell_centers(self) -> np.ndarray:
        mids = [0.5 * (e[:-1] + e[1:]) for e in self.edges]
        grids = np.meshgrid(*mids, indexing="ij")
        return np.stack([g.ravel(order="C") for g in grids], axis=1)

    def event_probability(self, event: Event) -> float:
        """Sum of cell probabilities over cells whose center is in the event.

        Exact when the event is a union of grid cells.
        """
        if not isinstance(event, (Box, BoxUnion)):
            raise ArgumentError("grid measures support box events only")
        mask = event.contains(self.cell_centers())
        return float(np.sum(self.cell_prob[mask]))


@dataclass(frozen=True)
class MarginalTable:
    """2-D marginal probabilities over a grid on two parameter coordinates."""

    dims: tuple[int, int]
    row_edges: np.ndarray
    col_edges: np.ndarray
    values: np.ndarray


def assign_bins(qoi_values, partition: DataPartition) -> np.ndarray:
    """1-based bin id per output row (0 = outside the partition box)."""
    return partition.locate(qoi_values)


def _combine_weights(n: int, weights, ansatz: AnsatzWeights | None) -> np.ndarray | None:
    w = None
    if weights is not None:
        w = as_vector(weights, "weights", size=n)
        if np.any(w <= 0):
            raise ArgumentError("per-cell weights must be strictly positive")
    if ansatz is not None:
        aw = as_vector(ansatz.weights, "ansatz weights", size=n)
        w = aw if w is None else w * aw
    return w


def solve_counting(samples: SampleSet, qoi_values, density: SimpleFunctionDensity,
                   weights=None, ansatz: AnsatzWeights | None = None,
                   renormalize: bool = False) -> CountingMeasure:
    """Monte Carlo inverse solve on a fixed sample set.

    Parameters
    ----------
    samples : SampleSet
        N parameter samples carrying the implicit cell tessellation.
    qoi_values : array-like of shape (N, m)
        Model outputs of the samples, row-aligned with ``samples``.
    density : SimpleFunctionDensity
        Output density to invert.
    weights : array-like of shape (N,), optional
        Per-cell weights (normalized volume estimates) replacing the
        equal-cell-volume split of a bin's probability.
    ansatz : AnsatzWeights, optional
        Extra per-sample conditional weights, multiplied into ``weights``.
    renormalize : bool
        Rescale the supported bins so no mass is lost. The default keeps
        the defect visible as ``lost_mass``.

    Warns
    -----
    LostMassWarning
        When supported bins received no sample; carries the bin ids.
    """
    values = as_matrix(qoi_values, "qoi_values", n_cols=density.partition.m_dims)
    if values.shape[0] != samples.n_samples:
        raise ArgumentError(
            f"qoi_values has {values.shape[0]} rows for {samples.n_samples} samples"
        )
    pointer = assign_bins(values, density.partition)
    counts = np.bincount(pointer[pointer > 0] - 1, minlength=density.n_bins)

    p = density.p
    empty_supported = np.nonzero((counts == 0) & (p > 0))[0]
    lost_mass = float(np.sum(p[empty_supported]))
    if lost_mass > 0 and not renormalize:
        warnings.warn(LostMassWarning(
            f"{lost_mass:.3e} of output probability sits in "
            f"{empty_supported.size} bins containing no samples",
            bins=(empty_supported + 1).tolist(), mass=lost_mass))

    if renormalize and lost_mass > 0:
        kept = p.copy()
        kept[empty_supported] = 0.0
        density = SimpleFunctionDensity(density.partition, kept)
        p = density.p
        lost_mass = 0.0

    w = _combine_weights(samples.n_samples, weights, ansatz)
    cell_prob = np.zeros(samples.n_samples)
    inside = pointer > 0
    if w is None:
        denom = counts.astype(np.float64)
    else:
        denom = np.zeros(density.n_bins)
        np.add.at(denom, pointer[inside] - 1, w[inside])
    share = np.where(inside, p[pointer - 1], 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        if w is None:
            cell_prob[inside] = share[inside] / denom[pointer[inside] - 1]
        else:
            cell_prob[inside] = share[inside] * w[inside] / denom[pointer[inside] - 1]
    return CountingMeasure(samples=samples, density=density, cell_prob=cell_prob,
                           pointer=pointer, counts=counts, lost_mass=lost_mass)


def solve_grid(domain: ParameterDomain, resolutions, model: QoIModel,
               density: SimpleFunctionDensity, budget_per_cell: int,
               seed: int) -> GridMeasure:
    """Dense reference solve on a tensor grid of the parameter box.

    For every grid cell, ``budget_per_cell`` uniform points are drawn and
    mapped through the model; the hit fractions estimate how much of each
    cell lies in each output-bin preimage. Each bin's probability is then
    distributed over the grid cells proportionally to those overlaps.
    """
    res = [check_positive_int(r, "resolution") for r in np.atleast_1d(resolutions)]
    if len(res) != domain.ndim:
        raise ArgumentError("one grid resolution per parameter dimension required")
    budget = check_positive_int(budget_per_cell, "budget_per_cell")
    if model.n_inputs != domain.ndim:
        raise ArgumentError("model input dimension does not match the domain")

    edges = tuple(np.linspace(domain.lower[d], domain.upper[d], res[d] + 1)
                  for d in range(domain.ndim))
    n_cells = int(np.prod(res))
    lows = [e[:-1] for e in edges]
    widths = [np.diff(e) for e in edges]
    grid_lo = np.stack([g.ravel(order="C") for g in
                        np.meshgrid(*lows, indexing="ij")], axis=1)
    grid_w = np.stack([g.ravel(order="C") for g in
                       np.meshgrid(*widths, indexing="ij")], axis=1)

    rng = np.random.default_rng(seed)
    u = rng.random((n_cells, budget, domain.ndim))
    points = (grid_lo[:, None, :] + u * grid_w[:, None, :]).reshape(-1, domain.ndim)
    values = model.evaluate(points)
    bin_ids = density.partition.locate(values)

    cell_ids = np.repeat(np.arange(n_cells), budget)
    hits = np.zeros((density.n_bins + 1, n_cells), dtype=np.int64)
    np.add.at(hits, (bin_ids, cell_ids), 1)
    hits = hits[1:]  # drop the outside row

    cell_volumes = np.prod(grid_w, axis=1)
    overlap = cell_volumes[None, :] * (hits / budget)
    row_sums = np.sum(overlap, axis=1)

    p = density.p
    lost_bins = np.nonzero((p > 0) & (row_sums == 0))[0]
    lost_mass = float(np.sum(p[lost_bins]))
    if lost_mass > 0:
        warnings.warn(LostMassWarning(
            f"{lost_mass:.3e} of output probability maps to no grid cell",
            bins=(lost_bins + 1).tolist(), mass=lost_mass))

    cell_prob = np.zeros(n_cells)
    for i in np.nonzero((p > 0) & (row_sums > 0))[0]:
        cell_prob += p[i] * overlap[i] / row_sums[i]
    return GridMeasure(domain=domain, edges=edges, cell_prob=cell_prob,
                       lost_mass=lost_mass)


def event_probability(measure: CountingMeasure, domain: ParameterDomain,
                      event: Event) -> float:
    """Measure of an event: the summed mass of the samples it contains."""
    ids = voronoi_coverage(domain, measure.samples, event)
    if ids.size == 0:
        return 0.0
    return float(np.sum(measure.cell_prob[ids - 1]))


def marginalize(measure: CountingMeasure, domain: ParameterDomain,
                dims: tuple[int, int], resolution: int | tuple[int, int]) -> MarginalTable:
    """Aggregate the point masses onto a 2-D grid over two coordinates.

    ``dims`` are 1-based parameter coordinates. Each table entry collects
    the mass of the samples whose projection falls in that grid cell, so
    the entries sum to ``1 - lost_mass``.
    """
    d1, d2 = (int(d) for d in dims)
    if d1 == d2:
        raise ArgumentError("marginal dimensions must be distinct")
    for d in (d1, d2):
        if not 1 <= d <= domain.ndim:
            raise ArgumentError(f"dimension {d} outside 1..{domain.ndim}")
    if np.isscalar(resolution):
        r1 = r2 = check_positive_int(resolution, "resolution")
    else:
        r1, r2 = (check_positive_int(r, "resolution") for r in resolution)

    row_edges = np.linspace(domain.lower[d1 - 1], domain.upper[d1 - 1], r1 + 1)
    col_edges = np.linspace(domain.lower[d2 - 1], domain.upper[d2 - 1], r2 + 1)
    pts = measure.samples.points

    def _locate(coords, edges):
        idx = np.searchsorted(edges, coords, side="right") - 1
        idx[coords == edges[-1]] = edges.shape[0] - 2
        return np.clip(idx, 0, edges.shape[0] - 2)

    rows = _locate(pts[:, d1 - 1], row_edges)
    cols = _locate(pts[:, d2 - 1], col_edges)
    table = np.zeros((r1, r2))
    np.add.at(table, (rows, cols), measure.cell_prob)
    return MarginalTable(dims=(d1, d2), row_edges=row_edges,
                         col_edges=col_edges, values=table)


class InverseDensityEstimator(BaseEstimator):
    """Scikit-learn style front end for the Monte Carlo inverse solve.

    Fit with ``X`` the parameter samples (a matrix or a ``SampleSet``) and
    ``y`` their model outputs; the fitted estimator exposes the counting
    measure and its event/marginal queries.

    Parameters
    ----------
    density : SimpleFunctionDensity
        Output density to invert (required before fitting).
    domain : ParameterDomain, optional
        Needed only for marginal tables and domain-aware event queries.
    weights : array-like, optional
        Per-cell weights, as in :func:`solve_counting`.
    ansatz : AnsatzWeights, optional
        Conditional in-region weights.
    renormalize_lost_mass : bool
        Rescale supported bins instead of reporting lost mass.

    Attributes
    ----------
    measure_ : CountingMeasure
    cell_prob_, pointer_, counts_ : ndarray
    lost_mass_ : float
    """

    def __init__(self, density: SimpleFunctionDensity | None = None,
                 domain: ParameterDomain | None = None, weights=None,
                 ansatz: AnsatzWeights | None = None,
                 renormalize_lost_mass: bool = False):
        self.density = density
        self.domain = domain
        self.weights = weights
        self.ansatz = ansatz
        self.renormalize_lost_mass = renormalize_lost_mass

    def fit(self, X, y) -> "InverseDensityEstimator":
        if self.density is None:
            raise ArgumentError("set density= before fitting")
        samples = X if isinstance(X, SampleSet) else SampleSet(points=np.asarray(X))
        self.measure_ = solve_counting(
            samples, y, self.density, weights=self.weights, ansatz=self.ansatz,
            renormalize=self.renormalize_lost_mass,
        )
        self.cell_prob_ = self.measure_.cell_prob
        self.pointer_ = self.measure_.pointer
        self.counts_ = self.measure_.counts
        self.lost_mass_ = self.measure_.lost_mass
        self.n_features_in_ = samples.ndim
        return self

    def _fitted_domain(self) -> ParameterDomain:
        if self.domain is None:
            raise ArgumentError("this query needs the domain= parameter")
        return self.domain

    def event_probability(self, event: Event) -> float:
        self._check_fitted()
        if isinstance(event, CellUnion):
            ids = event.indices
            if ids.size and ids[-1] > self.measure_.n_samples:
                raise ArgumentError("cell-union id exceeds the sample count")
            return float(np.sum(self.cell_prob_[ids - 1])) if ids.size else 0.0
        mask = event.contains(self.measure_.samples.points)
        return float(np.sum(self.cell_prob_[mask]))

    def marginal(self, dims: tuple[int, int], resolution) -> MarginalTable:
        self._check_fitted()
        return marginalize(self.measure_, self._fitted_domain(), dims, resolution)

    def _check_fitted(self):
        if not hasattr(self, "measure_"):
            raise ArgumentError("estimator is not fitted; call fit(X, y) first")
