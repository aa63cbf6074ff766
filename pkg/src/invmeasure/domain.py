"""Parameter box, sample sets, events, and the implicit cell tessellation.

A finite sample set inside a hyperrectangular parameter box implicitly
tessellates the box into nearest-sample cells under a chosen metric. Cells
are never constructed geometrically: every geometric quantity (cell
volumes, cell adjacency, cell radii, coverages of events) is estimated by
assigning points to their nearest sample. Sample ids are 1-based
throughout the public API; row ``j - 1`` of ``SampleSet.points`` holds
sample ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import ArgumentError, DomainMembershipError
from .validation import as_matrix, as_vector, check_positive_int, check_sample_ids

__all__ = [
    "ParameterDomain",
    "SampleSet",
    "Box",
    "BoxUnion",
    "CellUnion",
    "VolumeEstimate",
    "CellVolumes",
    "Adjacency",
    "nearest_sample",
    "voronoi_coverage",
    "estimate_cell_volumes",
    "estimate_adjacency",
    "max_cell_radius",
    "symmetric_difference_volume",
]

_METRIC_P = {"euclidean": 2.0, "onenorm": 1.0}

# Above this many point-sample distance pairs the nearest-sample assignment
# switches from the chunked brute-force scan to a k-d tree. The choice is a
# function of the inputs only, so results stay deterministic.
_BRUTE_FORCE_LIMIT = 2**24


@dataclass(frozen=True)
class ParameterDomain:
    """Compact hyperrectangle of admissible parameters.

    Parameters
    ----------
    lower, upper : array-like of shape (n,)
        Componentwise bounds, ``lower[k] < upper[k]``.
    voronoi_metric : {"euclidean", "onenorm"}
        Metric used for nearest-sample cells. It may differ from the
        (always Lebesgue) volume measure on the box.
    """

    lower: np.ndarray
    upper: np.ndarray
    voronoi_metric: str = "euclidean"

    def __post_init__(self):
        lower = as_vector(self.lower, "lower")
        upper = as_vector(self.upper, "upper", size=lower.shape[0])
        if not np.all(lower < upper):
            raise ArgumentError("domain must satisfy lower[k] < upper[k] for all k")
        if self.voronoi_metric not in _METRIC_P:
            raise ArgumentError(
                f"voronoi_metric must be one of {sorted(_METRIC_P)}, "
                f"got {self.voronoi_metric!r}"
            )
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def ndim(self) -> int:
        return self.lower.shape[0]

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def diameter(self) -> float:
        """Diameter of the box in the cell metric."""
        widths = self.upper - self.lower
        if self.voronoi_metric == "euclidean":
            return float(np.sqrt(np.sum(widths**2)))
        return float(np.sum(widths))

    def contains(self, points) -> np.ndarray:
        """Closed-box membership mask for a matrix of points."""
        pts = as_matrix(points, "points", n_cols=self.ndim)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def uniform_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``count`` uniform points; consumes ``count * ndim`` variates."""
        u = rng.random((count, self.ndim))
        return self.lower + (self.upper - self.lower) * u


@dataclass(frozen=True)
class SampleSet:
    """Parameter samples with generation provenance.

    The rows implicitly define the nearest-sample tessellation. Duplicate
    rows are rejected because two identical samples would define the same
    cell twice.
    """

    points: np.ndarray
    rule_tag: str = "external"
    seed: int = 0

    def __post_init__(self):
        pts = as_matrix(self.points, "points")
        if pts.shape[0] < 1:
            raise ArgumentError("sample set needs at least one point")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ArgumentError("sample points must be pairwise distinct")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    @property
    def ndim(self) -> int:
        return self.points.shape[1]

    def all_ids(self) -> np.ndarray:
        """All sample ids, ``1..N``."""
        return np.arange(1, self.n_samples + 1, dtype=np.int64)


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box event ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = as_vector(self.lower, "lower")
        upper = as_vector(self.upper, "upper", size=lower.shape[0])
        if not np.all(lower <= upper):
            raise ArgumentError("box event must satisfy lower[k] <= upper[k]")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def ndim(self) -> int:
        return self.lower.shape[0]

    def contains(self, points) -> np.ndarray:
        pts = as_matrix(points, "points", n_cols=self.ndim)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


@dataclass(frozen=True)
class BoxUnion:
    """Finite union of closed boxes."""

    boxes: tuple[Box, ...]

    def __post_init__(self):
        boxes = tuple(self.boxes)
        if not boxes:
            raise ArgumentError("box union needs at least one box")
        dims = {b.ndim for b in boxes}
        if len(dims) != 1:
            raise ArgumentError("all boxes in a union must share the dimension")
        object.__setattr__(self, "boxes", boxes)

    @property
    def ndim(self) -> int:
        return self.boxes[0].ndim

    def contains(self, points) -> np.ndarray:
        mask = self.boxes[0].contains(points)
        for box in self.boxes[1:]:
            mask |= box.contains(points)
        return mask


@dataclass(frozen=True)
class CellUnion:
    """Union of whole cells, identified by their 1-based sample ids."""

    indices: np.ndarray

    def __post_init__(self):
        ids = np.unique(np.asarray(self.indices, dtype=np.int64)).ravel()
        if ids.size and ids[0] < 1:
            raise ArgumentError("cell-union ids must be >= 1")
        ids.flags.writeable = False
        object.__setattr__(self, "indices", ids)


Event = Box | BoxUnion | CellUnion


@dataclass(frozen=True)
class VolumeEstimate:
    """Monte Carlo volume with its binomial standard error."""

    value: float
    n_emulated: int
    std_error: float


@dataclass(frozen=True)
class CellVolumes:
    """Per-cell volume estimates from one shared emulation point set.

    ``values[j - 1]`` estimates the volume of sample ``j``'s cell. The
    integer hit counts always sum to ``n_emulated``, so the estimates sum
    to the box volume up to floating-point rounding.
    """

    values: np.ndarray
    std_errors: np.ndarray
    n_emulated: int
    counts: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return self.values.shape[0]

    def estimate(self, sample_id: int) -> VolumeEstimate:
        """Volume estimate for one 1-based sample id."""
        k = int(sample_id) - 1
        return VolumeEstimate(
            float(self.values[k]), self.n_emulated, float(self.std_errors[k])
        )


@dataclass(frozen=True)
class Adjacency:
    """Symmetric, irreflexive cell-neighbor relation.

    Estimated by marking, for each emulated point, its nearest and second
    nearest samples as neighbors. The estimate can only miss true
    adjacencies (a shared boundary whose attraction region caught no
    emulated point), never invent them beyond second-nearest pairs.
    """

    n_cells: int
    pairs: np.ndarray  # (P, 2) int64, each row sorted, unique, 1-based
    n_emulated: int

    def neighbor_lists(self) -> list[np.ndarray]:
        """Neighbor ids per cell; entry ``j - 1`` lists neighbors of ``j``."""
        out = [[] for _ in range(self.n_cells)]
        for a, b in self.pairs:
            out[a - 1].append(b)
            out[b - 1].append(a)
        return [np.array(sorted(v), dtype=np.int64) for v in out]

    def as_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n_cells, self.n_cells), dtype=bool)
        if self.pairs.size:
            i = self.pairs[:, 0] - 1
            j = self.pairs[:, 1] - 1
            mat[i, j] = True
            mat[j, i] = True
        return mat

    def is_adjacent(self, a: int, b: int) -> bool:
        lo, hi = (a, b) if a < b else (b, a)
        if self.pairs.size == 0:
            return False
        return bool(np.any((self.pairs[:, 0] == lo) & (self.pairs[:, 1] == hi)))


def _pairwise_distance(queries: np.ndarray, samples: np.ndarray, p: float) -> np.ndarray:
    """Distance block (squared for the 2-norm, which preserves order)."""
    if p == 2.0:
        d = np.sum(queries**2, axis=1)[:, None] + np.sum(samples**2, axis=1)[None, :]
        d -= 2.0 * (queries @ samples.T)
        np.maximum(d, 0.0, out=d)
        return d
    d = np.zeros((queries.shape[0], samples.shape[0]))
    for dim in range(queries.shape[1]):
        d += np.abs(queries[:, dim, None] - samples[None, :, dim])
    return d


def _brute_nearest(samples: np.ndarray, queries: np.ndarray, p: float, k: int):
    """Chunked brute-force scan; ``np.argmin`` picks the smallest index on ties.

    Returns 0-based index arrays (and the distance to the nearest), shape
    ``(len(queries),)`` each; the second-nearest array is None for k == 1.
    """
    n = samples.shape[0]
    chunk = max(1, int(_BRUTE_FORCE_LIMIT // max(n, 1)))
    first = np.empty(queries.shape[0], dtype=np.int64)
    second = np.empty(queries.shape[0], dtype=np.int64) if k == 2 else None
    dist = np.empty(queries.shape[0], dtype=np.float64)
    for start in range(0, queries.shape[0], chunk):
        q = queries[start : start + chunk]
        d = _pairwise_distance(q, samples, p)
        idx1 = np.argmin(d, axis=1)
        first[start : start + len(q)] = idx1
        dmin = d[np.arange(len(q)), idx1]
        dist[start : start + len(q)] = np.sqrt(dmin) if p == 2.0 else dmin
        if k == 2:
            d[np.arange(len(q)), idx1] = np.inf
            second[start : start + len(q)] = np.argmin(d, axis=1)
    return first, second, dist


def _assign_nearest(samples: np.ndarray, queries: np.ndarray, metric: str, k: int = 1):
    """Nearest (and optionally second-nearest) sample rows for each query.

    The brute-force scan is the semantic reference; the k-d tree is used
    for large workloads and falls back to the scan on exact distance ties
    so the smallest-index tie-break is always honored.
    """
    p = _METRIC_P[metric]
    n_pairs = samples.shape[0] * queries.shape[0]
    if samples.shape[0] < 2 and k == 2:
        raise ArgumentError("second-nearest assignment needs at least two samples")
    if samples.shape[0] == 1:
        d = _pairwise_distance(queries, samples, p)[:, 0]
        if p == 2.0:
            d = np.sqrt(d)
        return np.zeros(queries.shape[0], dtype=np.int64), None, d
    if n_pairs <= _BRUTE_FORCE_LIMIT:
        return _brute_nearest(samples, queries, p, k)

    tree = cKDTree(samples)
    dist, idx = tree.query(queries, k=2, p=p, workers=-1)
    ties = dist[:, 0] == dist[:, 1]
    if np.any(ties):
        f, s, d = _brute_nearest(samples, queries[ties], p, 2)
        idx[ties, 0], dist[ties, 0] = f, d
        if s is not None:
            idx[ties, 1] = s
    first = idx[:, 0].astype(np.int64)
    second = idx[:, 1].astype(np.int64) if k == 2 else None
    return first, second, dist[:, 0]


def _emulate(domain: ParameterDomain, samples: SampleSet, n_emulated: int, seed: int,
             k: int = 1):
    """Shared emulation draw: uniform points plus their nearest-sample rows.

    Identical ``(domain, samples, n_emulated, seed)`` always reproduce the
    same point set, so separate estimators can share one emulation set by
    sharing the seed.
    """
    rng = np.random.default_rng(seed)
    points = domain.uniform_points(n_emulated, rng)
    first, second, dist = _assign_nearest(
        samples.points, points, domain.voronoi_metric, k=k
    )
    return points, first, second, dist


def _check_pair(domain: ParameterDomain, samples: SampleSet):
    if samples.ndim != domain.ndim:
        raise ArgumentError(
            f"samples have dimension {samples.ndim}, domain has {domain.ndim}"
        )


def nearest_sample(domain: ParameterDomain, samples: SampleSet, point) -> int:
    """Id of the sample nearest to ``point``; ties go to the smallest id.

    Raises
    ------
    DomainMembershipError
        If ``point`` lies outside the (closed) parameter box.
    """
    _check_pair(domain, samples)
    pt = as_vector(point, "point", size=domain.ndim)
    if not bool(domain.contains(pt[None, :])[0]):
        raise DomainMembershipError(f"point {pt.tolist()} is outside the domain")
    first, _, _ = _brute_nearest(
        samples.points, pt[None, :], _METRIC_P[domain.voronoi_metric], k=1
    )
    return int(first[0]) + 1


def voronoi_coverage(domain: ParameterDomain, samples: SampleSet, event: Event) -> np.ndarray:
    """Ids of the samples lying in ``event`` (the event's cell coverage).

    For box events this is membership of the sample points themselves; a
    cell union is returned unchanged (validated against ``N``). The result
    is a sorted 1-based id array; empty coverage is a valid result.
    """
    _check_pair(domain, samples)
    if isinstance(event, CellUnion):
        return check_sample_ids(event.indices, samples.n_samples)
    if isinstance(event, (Box, BoxUnion)):
        if event.ndim != domain.ndim:
            raise ArgumentError("event dimension does not match the domain")
        mask = event.contains(samples.points)
        return np.nonzero(mask)[0].astype(np.int64) + 1
    raise ArgumentError(f"unsupported event type {type(event).__name__}")


def coverage_mask(samples: SampleSet, ids: np.ndarray) -> np.ndarray:
    """Boolean row mask for a 1-based id array."""
    mask = np.zeros(samples.n_samples, dtype=bool)
    mask[np.asarray(ids, dtype=np.int64) - 1] = True
    return mask


def estimate_cell_volumes(domain: ParameterDomain, samples: SampleSet,
                          n_emulated: int, seed: int) -> CellVolumes:
    """Monte Carlo cell volumes: ``volume(box) * hits_j / n_emulated``.

    The hit counts partition the emulated points, so the estimates sum to
    the box volume; the standard error per cell is binomial.
    """
    _check_pair(domain, samples)
    n_emulated = check_positive_int(n_emulated, "n_emulated", minimum=samples.n_samples)
    _, first, _, _ = _emulate(domain, samples, n_emulated, seed)
    counts = np.bincount(first, minlength=samples.n_samples)
    frac = counts / n_emulated
    vol = domain.volume()
    values = vol * frac
    std_errors = vol * np.sqrt(frac * (1.0 - frac) / n_emulated)
    return CellVolumes(values=values, std_errors=std_errors,
                       n_emulated=n_emulated, counts=counts)


def estimate_adjacency(domain: ParameterDomain, samples: SampleSet,
                       n_emulated: int, seed: int) -> Adjacency:
    """Estimate which cells share boundary.

    Marks the nearest and second-nearest samples of every emulated point
    as adjacent. This underestimates the true boundary-sharing relation:
    a shared facet is missed only if no emulated point landed in its
    attraction region, and measure-zero contacts (e.g. corner touches) are
    essentially never reported.
    """
    _check_pair(domain, samples)
    if samples.n_samples < 2:
        raise ArgumentError("adjacency needs at least two samples")
    n_emulated = check_positive_int(
        n_emulated, "n_emulated", minimum=10 * samples.n_samples
    )
    _, first, second, _ = _emulate(domain, samples, n_emulated, seed, k=2)
    lo = np.minimum(first, second)
    hi = np.maximum(first, second)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0) + 1
    return Adjacency(n_cells=samples.n_samples, pairs=pairs, n_emulated=n_emulated)


def max_cell_radius(domain: ParameterDomain, samples: SampleSet,
                    n_emulated: int, seed: int) -> float:
    """Monte Carlo estimate of the largest cell radius.

    This is the maximal distance from an emulated point to its nearest
    sample; it tends to zero almost surely for any rule with a positive
    sampling density, which makes it a useful convergence diagnostic.
    """
    _check_pair(domain, samples)
    n_emulated = check_positive_int(n_emulated, "n_emulated", minimum=samples.n_samples)
    _, _, _, dist = _emulate(domain, samples, n_emulated, seed)
    return float(np.max(dist))


def symmetric_difference_volume(domain: ParameterDomain, samples: SampleSet,
                                event: Event, n_emulated: int,
                                seed: int) -> VolumeEstimate:
    """Volume of (event coverage) triangle-minus (event), estimated by emulation.

    For a cell union the coverage is the event itself and the estimate is
    exactly zero.
    """
    _check_pair(domain, samples)
    n_emulated = check_positive_int(n_emulated, "n_emulated", minimum=1)
    points, first, _, _ = _emulate(domain, samples, n_emulated, seed)
    ids = voronoi_coverage(domain, samples, event)
    in_coverage = coverage_mask(samples, ids)[first]
    if isinstance(event, CellUnion):
        in_event = in_coverage
    else:
        in_event = event.contains(points)
    frac = float(np.mean(in_coverage != in_event))
    vol = domain.volume()
    se = vol * float(np.sqrt(frac * (1.0 - frac) / n_emulated))
    return VolumeEstimate(value=vol * frac, n_emulated=n_emulated, std_error=se)
