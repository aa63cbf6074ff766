"""Sampling rules for the parameter box and per-cell weighting.

Every rule draws from a seeded PCG64 generator (``numpy.random.default_rng``),
whose output stream is documented and platform-independent, so a given
``(rule, domain, N)`` triple reproduces the same sample set bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import CellVolumes, ParameterDomain, SampleSet
from .exceptions import ArgumentError, DensityError
from .validation import check_positive_int

__all__ = [
    "SamplingDensity",
    "UniformRule",
    "SerpentineGridRule",
    "LatinHypercubeRule",
    "DensityWeightedRule",
    "generate",
    "effective_weights",
]

# Rejection sampling aborts once at least this many candidates were drawn
# with an acceptance rate below _MIN_ACCEPT_RATE.
_REJECTION_PROBE_BUDGET = 1_000_000
_MIN_ACCEPT_RATE = 1e-6


@dataclass(frozen=True)
class SamplingDensity:
    """Unnormalized sampling density with a known upper bound.

    ``evaluator`` maps a ``(k, n)`` point matrix to ``k`` density values.
    The density must be strictly positive on the box: a rule that avoids a
    region of positive volume leaves the inverse measure unable to converge
    there. Positivity is spot-checked on every candidate batch drawn during
    generation.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    upper_bound: float

    def __post_init__(self):
        if not self.upper_bound > 0:
            raise ArgumentError("upper_bound must be positive")


@dataclass(frozen=True)
class UniformRule:
    """Independent draws, each coordinate uniform over its bounds."""

    seed: int
    tag = "uniform_iid"


@dataclass(frozen=True)
class SerpentineGridRule:
    """Cell-centered grid points emitted in boustrophedon order.

    The last dimension runs fastest and every dimension reverses direction
    each time the dimensions before it advance, so consecutive points are
    always grid neighbors. The seed is provenance only; the rule is
    deterministic.
    """

    resolutions: tuple[int, ...]
    seed: int = 0
    tag = "serpentine_grid"

    def __post_init__(self):
        res = tuple(int(r) for r in self.resolutions)
        if not res or any(r < 1 for r in res):
            raise ArgumentError("grid resolutions must all be >= 1")
        object.__setattr__(self, "resolutions", res)


@dataclass(frozen=True)
class LatinHypercubeRule:
    """Plain Latin hypercube: one point per axis stratum per dimension.

    For each dimension in turn, a permutation of the N strata and then N
    within-stratum positions are drawn from the rule's stream. No
    optimization (maximin etc.) is applied.
    """

    seed: int
    tag = "latin_hypercube"


@dataclass(frozen=True)
class DensityWeightedRule:
    """Rejection sampling against ``density.upper_bound``."""

    density: SamplingDensity
    seed: int
    tag = "density_weighted"


SamplingRule = UniformRule | SerpentineGridRule | LatinHypercubeRule | DensityWeightedRule


def _serpentine_indices(resolutions: tuple[int, ...]) -> np.ndarray:
    """Grid multi-indices in snake order, one row per point."""
    grids = np.meshgrid(*[np.arange(r) for r in resolutions], indexing="ij")
    idx = np.stack([g.ravel(order="C") for g in grids], axis=1)
    parity = np.zeros(idx.shape[0], dtype=np.int64)
    for dim in range(len(resolutions)):
        if dim > 0:
            flip = parity % 2 == 1
            idx[flip, dim] = resolutions[dim] - 1 - idx[flip, dim]
        parity += idx[:, dim]
    return idx


def _serpentine_points(domain: ParameterDomain, resolutions: tuple[int, ...]) -> np.ndarray:
    res = np.array(resolutions, dtype=np.float64)
    idx = _serpentine_indices(resolutions)
    widths = (domain.upper - domain.lower) / res
    return domain.lower + (idx + 0.5) * widths


def _latin_hypercube(domain: ParameterDomain, n: int, rng: np.random.Generator) -> np.ndarray:
    pts = np.empty((n, domain.ndim))
    for dim in range(domain.ndim):
        perm = rng.permutation(n)
        u = rng.random(n)
        unit = (perm + u) / n
        pts[:, dim] = domain.lower[dim] + (domain.upper[dim] - domain.lower[dim]) * unit
    return pts


def _rejection_sample(domain: ParameterDomain, density: SamplingDensity, n: int,
                      rng: np.random.Generator) -> np.ndarray:
    accepted: list[np.ndarray] = []
    n_accepted = 0
    n_drawn = 0
    batch = max(1024, 2 * n)
    while n_accepted < n:
        candidates = domain.uniform_points(batch, rng)
        values = np.asarray(density.evaluator(candidates), dtype=np.float64).ravel()
        if values.shape[0] != batch:
            raise DensityError("density evaluator returned a wrong-sized result")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise DensityError("sampling density must be strictly positive and finite")
        if np.any(values > density.upper_bound):
            raise DensityError("sampling density exceeds its stated upper bound")
        u = rng.random(batch)
        keep = candidates[u * density.upper_bound <= values]
        accepted.append(keep)
        n_accepted += keep.shape[0]
        n_drawn += batch
        if n_drawn >= _REJECTION_PROBE_BUDGET and n_accepted < _MIN_ACCEPT_RATE * n_drawn:
            raise DensityError(
                f"rejection acceptance rate below {_MIN_ACCEPT_RATE:g} after "
                f"{n_drawn} candidates"
            )
    return np.concatenate(accepted, axis=0)[:n]


def generate(rule: SamplingRule, domain: ParameterDomain, n_samples: int) -> SampleSet:
    """Draw ``n_samples`` points from ``rule`` inside ``domain``.

    For a serpentine grid, ``n_samples`` must equal the product of the
    per-dimension resolutions.
    """
    n = check_positive_int(n_samples, "n_samples")
    if isinstance(rule, UniformRule):
        rng = np.random.default_rng(rule.seed)
        pts = domain.uniform_points(n, rng)
    elif isinstance(rule, SerpentineGridRule):
        expected = int(np.prod(rule.resolutions))
        if len(rule.resolutions) != domain.ndim:
            raise ArgumentError("grid resolutions must match the domain dimension")
        if n != expected:
            raise ArgumentError(
                f"serpentine grid with resolutions {rule.resolutions} yields "
                f"{expected} points, not {n}"
            )
        pts = _serpentine_points(domain, rule.resolutions)
    elif isinstance(rule, LatinHypercubeRule):
        rng = np.random.default_rng(rule.seed)
        pts = _latin_hypercube(domain, n, rng)
    elif isinstance(rule, DensityWeightedRule):
        rng = np.random.default_rng(rule.seed)
        pts = _rejection_sample(domain, rule.density, n, rng)
    else:
        raise ArgumentError(f"unknown sampling rule {type(rule).__name__}")
    return SampleSet(points=pts, rule_tag=rule.tag, seed=getattr(rule, "seed", 0))


def effective_weights(rule: SamplingRule | str, samples: SampleSet,
                      volumes: CellVolumes | None = None) -> np.ndarray:
    """Per-cell weights used in place of the equal-cell-volume assumption.

    With no volume estimates, rules whose cells are statistically (or, for
    the grid, exactly) exchangeable get the standard equal weight ``1/N``.
    A density-weighted rule makes cell volumes systematically unequal, so
    it requires volume estimates. With estimates supplied, the weights are
    the normalized estimated volumes.
    """
    tag = rule if isinstance(rule, str) else rule.tag
    n = samples.n_samples
    if volumes is None:
        if tag == "density_weighted":
            raise ArgumentError(
                "density-weighted sampling requires cell-volume estimates"
            )
        return np.full(n, 1.0 / n)
    if len(volumes) != n:
        raise ArgumentError(
            f"got {len(volumes)} volume estimates for {n} samples"
        )
    total = float(np.sum(volumes.values))
    if not total > 0:
        raise ArgumentError("volume estimates sum to zero")
    return volumes.values / total
