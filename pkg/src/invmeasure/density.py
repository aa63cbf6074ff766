"""Simple-function densities on a tensor-grid partition of the output space.

A partition is a per-dimension list of strictly increasing bin edges over a
bounding box of the output space; everything outside that box forms one
implicit "outside" region. Bins are half-open ``[edge_k, edge_{k+1})``
except the last bin of each dimension, which is closed, so points on the
upper boundary count. Bin ids are 1-based and flattened in C order (last
output dimension fastest); id 0 denotes the outside region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ArgumentError, EmptyDensityError, OutsideMassWarning
from .validation import as_matrix, as_vector, check_positive_int

__all__ = [
    "DataPartition",
    "SimpleFunctionDensity",
    "ScaledBeta",
    "beta_for_reference",
    "sample_density",
    "bin_to_simple_function",
    "uniform_on_box",
]

# A sample fraction outside the partition box above this threshold is
# treated as a hard error rather than a warning.
_OUTSIDE_ERROR_FRACTION = 1e-3


@dataclass(frozen=True)
class DataPartition:
    """Tensor grid over a bounding box of the output space."""

    edges: tuple[np.ndarray, ...]

    def __post_init__(self):
        cleaned = []
        for k, e in enumerate(self.edges):
            e = as_vector(e, f"edges[{k}]")
            if e.shape[0] < 2 or not np.all(np.diff(e) > 0):
                raise ArgumentError("bin edges must be strictly increasing, >= 2 per dim")
            e.flags.writeable = False
            cleaned.append(e)
        object.__setattr__(self, "edges", tuple(cleaned))

    @property
    def m_dims(self) -> int:
        return len(self.edges)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(e.shape[0] - 1 for e in self.edges)

    @property
    def n_bins(self) -> int:
        return int(np.prod(self.shape))

    @classmethod
    def regular(cls, lower, upper, resolutions) -> "DataPartition":
        """Uniform edges: ``resolutions[d]`` equal bins over ``[lower, upper]``."""
        lower = as_vector(np.atleast_1d(lower), "lower")
        upper = as_vector(np.atleast_1d(upper), "upper", size=lower.shape[0])
        if np.any(lower >= upper):
            raise ArgumentError("partition box must satisfy lower < upper")
        res = [check_positive_int(r, "resolution") for r in np.atleast_1d(resolutions)]
        if len(res) != lower.shape[0]:
            raise ArgumentError("one resolution per output dimension required")
        return cls(tuple(np.linspace(lower[d], upper[d], res[d] + 1)
                         for d in range(lower.shape[0])))

    @classmethod
    def from_samples(cls, values, resolutions, pad_rel: float = 1e-9) -> "DataPartition":
        """Bounding box from the sample min/max, padded relatively."""
        vals = as_matrix(values, "values")
        lo = np.min(vals, axis=0)
        hi = np.max(vals, axis=0)
        pad = pad_rel * np.maximum(np.abs(lo), np.abs(hi))
        pad = np.where(pad > 0, pad, pad_rel)
        return cls.regular(lo - pad, hi + pad, resolutions)

    def locate(self, values) -> np.ndarray:
        """1-based bin id per row of ``values``; 0 for points outside."""
        vals = as_matrix(values, "values", n_cols=self.m_dims)
        multi = np.empty((vals.shape[0], self.m_dims), dtype=np.int64)
        inside = np.ones(vals.shape[0], dtype=bool)
        for d, e in enumerate(self.edges):
            idx = np.searchsorted(e, vals[:, d], side="right") - 1
            on_top = vals[:, d] == e[-1]
            idx[on_top] = e.shape[0] - 2
            inside &= (idx >= 0) & (idx <= e.shape[0] - 2)
            multi[:, d] = np.clip(idx, 0, e.shape[0] - 2)
        flat = np.ravel_multi_index(tuple(multi.T), self.shape) + 1
        flat[~inside] = 0
        return flat

    def bin_bounds(self, bin_id: int) -> tuple[np.ndarray, np.ndarray]:
        """Lower/upper corners of a 1-based bin."""
        if not 1 <= bin_id <= self.n_bins:
            raise ArgumentError(f"bin id must lie in 1..{self.n_bins}")
        multi = np.unravel_index(bin_id - 1, self.shape)
        lo = np.array([self.edges[d][multi[d]] for d in range(self.m_dims)])
        hi = np.array([self.edges[d][multi[d] + 1] for d in range(self.m_dims)])
        return lo, hi

    def bin_volumes(self) -> np.ndarray:
        """Volume of every bin, flattened in C order."""
        widths = [np.diff(e) for e in self.edges]
        vol = widths[0]
        for w in widths[1:]:
            vol = np.multiply.outer(vol, w)
        return vol.ravel(order="C")


@dataclass(frozen=True)
class SimpleFunctionDensity:
    """Piecewise-constant probability density: bin probabilities ``p`` on a
    partition. ``p`` is renormalized to sum to one on construction."""

    partition: DataPartition
    p: np.ndarray

    def __post_init__(self):
        p = as_vector(self.p, "p", size=self.partition.n_bins)
        if np.any(p < 0):
            raise ArgumentError("bin probabilities must be nonnegative")
        total = float(np.sum(p))
        if total <= 0:
            raise ArgumentError("bin probabilities sum to zero")
        p = p / total
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def n_bins(self) -> int:
        return self.partition.n_bins

    def supported_bins(self) -> np.ndarray:
        """1-based ids of bins with positive probability."""
        return np.nonzero(self.p > 0)[0].astype(np.int64) + 1


@dataclass(frozen=True)
class ScaledBeta:
    """Beta(alpha, beta) stretched onto the interval ``[loc, loc + scale]``."""

    alpha: float
    beta: float
    loc: float
    scale: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ArgumentError("shape parameters must be positive")
        if not self.scale > 0:
            raise ArgumentError("scale must be positive")

    @property
    def mean(self) -> float:
        return self.loc + self.scale * self.alpha / (self.alpha + self.beta)

    @property
    def support(self) -> tuple[float, float]:
        return (self.loc, self.loc + self.scale)

    def pdf(self, x) -> np.ndarray:
        from scipy.stats import beta as beta_dist

        return beta_dist.pdf(np.asarray(x, dtype=np.float64), self.alpha,
                             self.beta, loc=self.loc, scale=self.scale)

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Exact draws via the generator's gamma-ratio beta sampler."""
        return self.loc + self.scale * rng.beta(self.alpha, self.beta, size=count)


def beta_for_reference(ref_value: float, half_range: float, alpha: float,
                       beta: float) -> ScaledBeta:
    """Scaled beta with mean ``ref_value`` and the widest support contained
    in ``[ref_value - half_range, ref_value + half_range]``.

    Putting the mean at ``ref_value`` leaves one degree of freedom, the
    support length L. The support then reaches ``max(alpha, beta)/(alpha+beta) * L``
    to one side of the mean, so the largest admissible length is
    ``half_range * (alpha + beta) / max(alpha, beta)``.
    """
    if not half_range > 0:
        raise ArgumentError("half_range must be positive")
    if not (alpha > 0 and beta > 0):
        raise ArgumentError("shape parameters must be positive")
    scale = half_range * (alpha + beta) / max(alpha, beta)
    loc = ref_value - scale * alpha / (alpha + beta)
    return ScaledBeta(alpha=alpha, beta=beta, loc=loc, scale=scale)


def sample_density(density: ScaledBeta | tuple | list, count: int,
                   seed: int) -> np.ndarray:
    """I.i.d. draws from one scaled beta or a tensor product of them.

    Returns a ``(count, m)`` matrix; the dimensions are drawn one after the
    other from a single seeded stream.
    """
    count = check_positive_int(count, "count")
    components = [density] if isinstance(density, ScaledBeta) else list(density)
    if not all(isinstance(c, ScaledBeta) for c in components):
        raise ArgumentError("density must be ScaledBeta or a sequence of them")
    rng = np.random.default_rng(seed)
    out = np.empty((count, len(components)))
    for d, comp in enumerate(components):
        out[:, d] = comp.draw(count, rng)
    return out


def bin_to_simple_function(output_samples, partition: DataPartition) -> SimpleFunctionDensity:
    """Empirical bin probabilities from output samples.

    ``p_i`` is the fraction of in-box samples landing in bin ``i``. Samples
    outside the partition box raise an ``OutsideMassWarning`` with their
    fraction; beyond 0.1 % of the samples this becomes an error, and so
    does an entirely empty box.
    """
    samples = as_matrix(output_samples, "output_samples", n_cols=partition.m_dims)
    ids = partition.locate(samples)
    inside = ids > 0
    n_inside = int(np.sum(inside))
    if n_inside == 0:
        raise EmptyDensityError("no output samples fall inside the partition box")
    outside_fraction = 1.0 - n_inside / samples.shape[0]
    if outside_fraction > 0:
        if outside_fraction > _OUTSIDE_ERROR_FRACTION:
            raise EmptyDensityError(
                f"{outside_fraction:.2%} of output samples fall outside the "
                "partition box"
            )
        warnings.warn(OutsideMassWarning(
            f"{outside_fraction:.3e} of output samples fall outside the "
            "partition box", fraction=outside_fraction))
    counts = np.bincount(ids[inside] - 1, minlength=partition.n_bins)
    return SimpleFunctionDensity(partition=partition, p=counts / n_inside)


def uniform_on_box(partition: DataPartition, support_lower, support_upper) -> SimpleFunctionDensity:
    """Exact simple-function form of a uniform density on a box.

    ``p_i`` is proportional to the overlap volume of bin ``i`` with the
    support box, so when the support aligns with bin edges the density is
    represented without any sampling error.
    """
    lo = as_vector(np.atleast_1d(support_lower), "support_lower",
                   size=partition.m_dims)
    hi = as_vector(np.atleast_1d(support_upper), "support_upper",
                   size=partition.m_dims)
    if np.any(lo >= hi):
        raise ArgumentError("support box must satisfy lower < upper")
    overlap = None
    for d, e in enumerate(partition.edges):
        left = np.maximum(e[:-1], lo[d])
        right = np.minimum(e[1:], hi[d])
        width = np.maximum(right - left, 0.0)
        overlap = width if overlap is None else np.multiply.outer(overlap, width)
    p = overlap.ravel(order="C")
    if not np.sum(p) > 0:
        raise EmptyDensityError("support box does not intersect the partition")
    return SimpleFunctionDensity(partition=partition, p=p)
