"""A-posteriori error analysis for computed counting measures.

Two error sources are quantified for an event's computed probability.
Finite sampling makes the cell coverage of each output-bin preimage an
imperfect stand-in for the true preimage region; sandwiching each covered
region between an inner union (cells with no foreign neighbor) and an
outer union (region plus all neighboring cells) yields signed, computable
lower and upper bounds on that error. Numerical map error can assign
samples to the wrong output bin; re-binning the error-corrected outputs
yields a signed estimate of the resulting probability shift.

All volume quantities inside one analysis should come from a single shared
emulation point set (same seed) so the inner/outer inequalities hold
exactly at the estimator level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DataPartition, SimpleFunctionDensity
from .domain import (
    Adjacency,
    Box,
    BoxUnion,
    CellUnion,
    CellVolumes,
    Event,
    ParameterDomain,
    SampleSet,
    VolumeEstimate,
    coverage_mask,
    estimate_adjacency,
    estimate_cell_volumes,
    symmetric_difference_volume,
    voronoi_coverage,
)
from .exceptions import ArgumentError, AssumptionError, EmptyCoverageError
from .models import PerturbedModel
from .solver import AnsatzWeights, CountingMeasure, assign_bins, solve_counting
from .validation import as_matrix

__all__ = [
    "RegionSandwich",
    "Term1Bounds",
    "Term2Estimate",
    "ErrorReport",
    "build_sandwich",
    "term1_bounds",
    "term2_estimate",
    "term2_from_values",
    "optimal_coverage",
    "improved_invert",
    "error_report",
    "distinguishing_density",
]


@dataclass(frozen=True)
class RegionSandwich:
    """Inner and outer cell unions bracketing every covered bin preimage.

    For bin ``i`` (1-based), ``inner_ids[i - 1]`` holds the cells of the
    bin's coverage having no neighbor outside it and ``outer_ids[i - 1]``
    the coverage plus all neighboring cells, so inner subseteq coverage
    subseteq outer. Volumes are sums of the shared per-cell estimates.
    """

    n_bins: int
    region_ids: tuple[np.ndarray, ...]
    inner_ids: tuple[np.ndarray, ...]
    outer_ids: tuple[np.ndarray, ...]
    region_volume: np.ndarray
    inner_volume: np.ndarray
    outer_volume: np.ndarray
    volumes: CellVolumes


@dataclass(frozen=True)
class Term1Bounds:
    """Signed bounds on the finite-sampling probability error of an event."""

    lower: float
    upper: float
    bins: np.ndarray
    p: np.ndarray
    e_value: np.ndarray
    inner_ratio: np.ndarray
    outer_ratio: np.ndarray


@dataclass(frozen=True)
class Term2Estimate:
    """Signed estimate of the bin-misassignment probability error."""

    value: float
    bins: np.ndarray
    p: np.ndarray
    j_event: np.ndarray
    j_total: np.ndarray
    j_event_corrected: np.ndarray
    j_total_corrected: np.ndarray
    flagged_bins: tuple[int, ...]


@dataclass(frozen=True)
class ErrorReport:
    """Combined error analysis of one event."""

    event: Event
    term1: Term1Bounds
    term2: Term2Estimate | None
    coverage_residual: VolumeEstimate | None

    @property
    def term1_lower(self) -> float:
        return self.term1.lower

    @property
    def term1_upper(self) -> float:
        return self.term1.upper

    @property
    def term2_estimate(self) -> float:
        return self.term2.value if self.term2 is not None else float("nan")


def build_sandwich(samples: SampleSet, pointer, adjacency: Adjacency,
                   volumes: CellVolumes, supported=None) -> RegionSandwich:
    """Bracket every covered bin preimage between inner and outer cell unions.

    Parameters
    ----------
    samples : SampleSet
    pointer : ndarray of shape (N,)
        1-based bin assignment of each sample (0 = outside).
    adjacency : Adjacency
        Estimated neighbor relation of the cells.
    volumes : CellVolumes
        Per-cell volume estimates (share the emulation seed with
        ``adjacency`` so all derived quantities are mutually consistent).
    supported : array-like of 1-based bin ids, optional
        Bins that must have a nonempty inner union; violations raise an
        ``AssumptionError`` naming the bins (refine sampling to fix).
    """
    pointer = np.asarray(pointer, dtype=np.int64)
    n = samples.n_samples
    if pointer.shape != (n,):
        raise ArgumentError("pointer must have one entry per sample")
    if adjacency.n_cells != n or len(volumes) != n:
        raise ArgumentError("adjacency/volumes do not match the sample count")
    n_bins = int(pointer.max()) if pointer.size else 0

    foreign = np.zeros(n, dtype=bool)
    extra: list[set[int]] = [set() for _ in range(n_bins + 1)]
    for a, b in adjacency.pairs:
        ra, rb = pointer[a - 1], pointer[b - 1]
        if ra != rb:
            foreign[a - 1] = True
            foreign[b - 1] = True
            if ra >= 1:
                extra[ra].add(int(b))
            if rb >= 1:
                extra[rb].add(int(a))

    region_ids, inner_ids, outer_ids = [], [], []
    region_volume = np.zeros(n_bins)
    inner_volume = np.zeros(n_bins)
    outer_volume = np.zeros(n_bins)
    vols = volumes.values
    for i in range(1, n_bins + 1):
        rows = np.nonzero(pointer == i)[0]
        region = rows + 1
        inner = rows[~foreign[rows]] + 1
        outer = np.union1d(region, np.fromiter(extra[i], dtype=np.int64,
                                               count=len(extra[i])))
        region_ids.append(region)
        inner_ids.append(inner)
        outer_ids.append(outer)
        region_volume[i - 1] = np.sum(vols[region - 1])
        inner_volume[i - 1] = np.sum(vols[inner - 1])
        outer_volume[i - 1] = np.sum(vols[outer - 1])

    if supported is not None:
        bad = [i for i in np.asarray(supported, dtype=np.int64)
               if i > n_bins or inner_ids[i - 1].size == 0]
        if bad:
            raise AssumptionError(
                "no interior cell exists for supported bins "
                f"{sorted(int(b) for b in bad)}; refine the sampling",
                bins=bad)

    return RegionSandwich(
        n_bins=n_bins, region_ids=tuple(region_ids), inner_ids=tuple(inner_ids),
        outer_ids=tuple(outer_ids), region_volume=region_volume,
        inner_volume=inner_volume, outer_volume=outer_volume, volumes=volumes)


def _event_mask(samples: SampleSet, event: Event) -> np.ndarray:
    if isinstance(event, CellUnion):
        ids = event.indices
        if ids.size and ids[-1] > samples.n_samples:
            raise ArgumentError("cell-union id exceeds the sample count")
        return coverage_mask(samples, ids)
    if isinstance(event, (Box, BoxUnion)):
        return event.contains(samples.points)
    raise ArgumentError(f"unsupported event type {type(event).__name__}")


def term1_bounds(measure: CountingMeasure, sandwich: RegionSandwich, event: Event,
                 e_mode: str = "counts") -> Term1Bounds:
    """Signed lower/upper bounds on the finite-sampling error for ``event``.

    The event is interpreted through its cell coverage (a box stands in
    for the union of cells whose sample it contains). For every supported
    bin the computed in-region fraction ``E`` (``counts``: sample counts;
    ``volumes``: estimated cell volumes) is compared against the two
    bracket ratios built from the inner/outer unions; the min/max of the
    two differences, weighted by the bin probabilities, accumulate into
    the bounds.

    Raises
    ------
    AssumptionError
        If a supported bin has no samples, no interior cell, or a
        zero-volume inner union.
    """
    if e_mode not in ("counts", "volumes"):
        raise ArgumentError("e_mode must be 'counts' or 'volumes'")
    samples = measure.samples
    mask = _event_mask(samples, event)
    vols = sandwich.volumes.values
    p = measure.density.p

    supported = np.nonzero(p > 0)[0] + 1
    bad: list[int] = []
    rows_bins, rows_p, rows_e, rows_inner, rows_outer = [], [], [], [], []
    lower = 0.0
    upper = 0.0
    for i in supported:
        k = i - 1
        if i > sandwich.n_bins or sandwich.region_ids[k].size == 0:
            bad.append(int(i))
            continue
        if sandwich.inner_ids[k].size == 0 or sandwich.inner_volume[k] <= 0:
            bad.append(int(i))
            continue
        region = sandwich.region_ids[k]
        in_region = mask[region - 1]
        if e_mode == "counts":
            e_val = float(np.sum(in_region)) / region.size
        else:
            if sandwich.region_volume[k] <= 0:
                bad.append(int(i))
                continue
            e_val = float(np.sum(vols[region[in_region] - 1])) / sandwich.region_volume[k]
        inner = sandwich.inner_ids[k]
        outer = sandwich.outer_ids[k]
        vol_a_inner = float(np.sum(vols[inner[mask[inner - 1]] - 1]))
        vol_a_outer = float(np.sum(vols[outer[mask[outer - 1]] - 1]))
        ratio_inner = vol_a_inner / sandwich.outer_volume[k]
        ratio_outer = vol_a_outer / sandwich.inner_volume[k]
        lower += p[k] * (min(ratio_inner, ratio_outer) - e_val)
        upper += p[k] * (max(ratio_inner, ratio_outer) - e_val)
        rows_bins.append(int(i))
        rows_p.append(float(p[k]))
        rows_e.append(e_val)
        rows_inner.append(ratio_inner)
        rows_outer.append(ratio_outer)

    if bad:
        raise AssumptionError(
            f"error bounds unavailable: supported bins {bad} lack samples, "
            "interior cells, or interior volume", bins=bad)
    return Term1Bounds(
        lower=lower, upper=upper, bins=np.array(rows_bins, dtype=np.int64),
        p=np.array(rows_p), e_value=np.array(rows_e),
        inner_ratio=np.array(rows_inner), outer_ratio=np.array(rows_outer))


def term2_estimate(model: PerturbedModel, samples: SampleSet,
                   density: SimpleFunctionDensity, event: Event,
                   volumes: CellVolumes | None = None) -> Term2Estimate:
    """Signed estimate of the probability shift caused by map error.

    Bins both the numerical outputs and the error-corrected outputs of all
    samples; the difference of the per-bin event fractions, weighted by
    the bin probabilities, estimates how much probability the numerical
    map moved across bin preimages. Supplying per-cell ``volumes``
    replaces sample counts by cell-volume sums throughout. Bins empty
    under either assignment contribute zero and are flagged.
    """
    return term2_from_values(model.numerical.evaluate(samples.points),
                             model.corrected(samples.points), samples,
                             density, event, volumes=volumes)


def term2_from_values(numerical_values, corrected_values, samples: SampleSet,
                      density: SimpleFunctionDensity, event: Event,
                      volumes: CellVolumes | None = None) -> Term2Estimate:
    """Same as :func:`term2_estimate`, from precomputed output matrices."""
    partition = density.partition
    numerical = as_matrix(numerical_values, "numerical_values",
                          n_cols=partition.m_dims)
    corrected = as_matrix(corrected_values, "corrected_values",
                          n_cols=partition.m_dims)
    if numerical.shape[0] != samples.n_samples or corrected.shape[0] != samples.n_samples:
        raise ArgumentError("output matrices must have one row per sample")
    ptr_num = assign_bins(numerical, partition)
    ptr_cor = assign_bins(corrected, partition)
    mask = _event_mask(samples, event)

    if volumes is None:
        weight = np.ones(samples.n_samples)
    else:
        if len(volumes) != samples.n_samples:
            raise ArgumentError("volumes do not match the sample count")
        weight = volumes.values

    def tally(ptr, row_mask):
        out = np.zeros(density.n_bins)
        sel = ptr > 0
        sel &= row_mask
        np.add.at(out, ptr[sel] - 1, weight[sel])
        return out

    all_rows = np.ones(samples.n_samples, dtype=bool)
    j_total = tally(ptr_num, all_rows)
    j_event = tally(ptr_num, mask)
    j_total_cor = tally(ptr_cor, all_rows)
    j_event_cor = tally(ptr_cor, mask)

    p = density.p
    value = 0.0
    flagged: list[int] = []
    for k in np.nonzero(p > 0)[0]:
        if j_total[k] == 0 or j_total_cor[k] == 0:
            flagged.append(k + 1)
            continue
        value += p[k] * (j_event[k] * j_total_cor[k] - j_event_cor[k] * j_total[k]) \
            / (j_total[k] * j_total_cor[k])
    return Term2Estimate(
        value=value, bins=np.arange(1, density.n_bins + 1, dtype=np.int64),
        p=p.copy(), j_event=j_event, j_total=j_total,
        j_event_corrected=j_event_cor, j_total_corrected=j_total_cor,
        flagged_bins=tuple(flagged))


def optimal_coverage(domain: ParameterDomain, samples: SampleSet,
                     event: Event) -> CellUnion:
    """The unique cell-union representative of an event holding samples.

    Any two events with the same coverage receive the same probability
    under every output density, so this cell union is the canonical
    computable stand-in for the event.
    """
    ids = voronoi_coverage(domain, samples, event)
    if ids.size == 0:
        raise EmptyCoverageError("event contains no sample point")
    return CellUnion(indices=ids)


def improved_invert(model: PerturbedModel, samples: SampleSet,
                    density: SimpleFunctionDensity, correct: bool,
                    weights=None, ansatz: AnsatzWeights | None = None) -> CountingMeasure:
    """Inverse solve on the numerical map, optionally error-corrected.

    With ``correct=True`` the samples are binned through
    ``numerical + error_estimate`` instead of the raw numerical map,
    which shrinks the bin-misassignment error in proportion to the
    estimate quality.
    """
    values = model.corrected(samples.points) if correct \
        else model.numerical.evaluate(samples.points)
    return solve_counting(samples, values, density, weights=weights, ansatz=ansatz)


def error_report(measure: CountingMeasure, domain: ParameterDomain, event: Event,
                 seed: int, n_emulated: int | None = None, e_mode: str = "counts",
                 perturbed: PerturbedModel | None = None,
                 volumes: CellVolumes | None = None,
                 adjacency: Adjacency | None = None) -> ErrorReport:
    """Full error analysis of one event.

    Volumes and adjacency default to fresh estimates from one shared
    emulation point set of size ``n_emulated`` (default ``100 N``) seeded
    by ``seed``; pass both to reuse existing estimates. For a box event
    the returned ``coverage_residual`` estimates the volume by which the
    box differs from its cell-union stand-in.
    """
    samples = measure.samples
    if n_emulated is None:
        n_emulated = 100 * samples.n_samples
    if volumes is None:
        volumes = estimate_cell_volumes(domain, samples, n_emulated, seed)
    if adjacency is None:
        adjacency = estimate_adjacency(domain, samples, n_emulated, seed)

    supported = measure.density.supported_bins()
    sandwich = build_sandwich(samples, measure.pointer, adjacency, volumes,
                              supported=supported)
    bounds = term1_bounds(measure, sandwich, event, e_mode=e_mode)
    shift = None
    if perturbed is not None:
        shift = term2_estimate(perturbed, samples, measure.density, event,
                               volumes=volumes if e_mode == "volumes" else None)
    residual = None
    if isinstance(event, (Box, BoxUnion)):
        residual = symmetric_difference_volume(domain, samples, event,
                                               n_emulated, seed)
    return ErrorReport(event=event, term1=bounds, term2=shift,
                       coverage_residual=residual)


def distinguishing_density(samples: SampleSet, qoi_values,
                           partition: DataPartition, first_ids, second_ids):
    """Construct an output density giving two coverages different probabilities.

    Given the coverages of two events (1-based id arrays), puts uniform
    probability on the output bins hit by the cells in one coverage but
    not the other. If cells unique to the opposite coverage map into those
    same bins, an accompanying ansatz assigns them vanishing conditional
    weight so the two probabilities still differ. Returns
    ``(density, ansatz_or_None)``.
    """
    values = as_matrix(qoi_values, "qoi_values", n_cols=partition.m_dims)
    if values.shape[0] != samples.n_samples:
        raise ArgumentError("qoi_values rows must match the sample count")
    a = np.unique(np.asarray(first_ids, dtype=np.int64))
    b = np.unique(np.asarray(second_ids, dtype=np.int64))
    only_b = np.setdiff1d(b, a)
    only_a = np.setdiff1d(a, b)
    key = only_b if only_b.size else only_a
    other = only_a if only_b.size else only_b
    if key.size == 0:
        raise ArgumentError("the two coverages are identical")

    pointer = assign_bins(values, partition)
    key_bins = np.unique(pointer[key - 1])
    key_bins = key_bins[key_bins > 0]
    if key_bins.size == 0:
        raise ArgumentError("coverage-difference cells map outside the partition")
    p = np.zeros(partition.n_bins)
    p[key_bins - 1] = 1.0 / key_bins.size
    density = SimpleFunctionDensity(partition=partition, p=p)

    ansatz = None
    if other.size:
        collides = np.isin(pointer[other - 1], key_bins)
        if np.any(collides):
            w = np.ones(samples.n_samples)
            w[other[collides] - 1] = 1e-12
            ansatz = AnsatzWeights(weights=w)
    return density, ansatz
