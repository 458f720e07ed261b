"""Feasibility-prioritizing acquisition: improvement, per-candidate
feasibility probability, the FIP and HFI scores, and the branch policy
that picks the next experiment from a scored candidate pool.

All functions are pure; pool scoring is vectorized through the
array-based helpers so a 20000-candidate pool costs one pass of
normal-CDF evaluations per constraint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import InvalidArgumentError
from .gp import PosteriorPrediction


@dataclass(frozen=True)
class ConstraintSpec:
    """Ordered per-output feasibility bands, in physical units."""

    names: tuple
    lowers: np.ndarray
    uppers: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lowers, dtype=float)
        hi = np.asarray(self.uppers, dtype=float)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "lowers", lo)
        object.__setattr__(self, "uppers", hi)
        if not (len(self.names) == lo.size == hi.size):
            raise InvalidArgumentError("constraint names and bands must align")
        if lo.size == 0:
            raise InvalidArgumentError("at least one constraint is required")
        if not np.all(lo < hi):
            raise InvalidArgumentError("each band must satisfy lower < upper")

    @property
    def count(self) -> int:
        return len(self.names)

    def band(self, name: str) -> tuple:
        i = self.names.index(name)
        return float(self.lowers[i]), float(self.uppers[i])

    def is_feasible(self, values: Sequence[float]) -> bool:
        v = np.asarray(values, dtype=float)
        return bool(np.all(v >= self.lowers) and np.all(v <= self.uppers))

    def to_dict(self) -> dict:
        return {name: [float(self.lowers[i]), float(self.uppers[i])]
                for i, name in enumerate(self.names)}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintSpec":
        names = tuple(d.keys())
        return cls(names,
                   np.array([d[n][0] for n in names], dtype=float),
                   np.array([d[n][1] for n in names], dtype=float))


def default_constraints() -> ConstraintSpec:
    """Microhardness 635-675 HV and porosity 6-8.2 %."""
    return ConstraintSpec(("microhardness_HV", "porosity_pct"),
                          np.array([635.0, 6.0]), np.array([675.0, 8.2]))


@dataclass(frozen=True)
class Incumbent:
    """Cheapest feasible experiment found so far, or the fallback."""

    point: Optional[object]  # InputVector when present
    cost: float
    history_index: Optional[int] = None

    @property
    def present(self) -> bool:
        return self.point is not None


@dataclass(frozen=True)
class ScoredCandidate:
    x: object
    cost: float
    improvement: float
    fp: float
    alpha_fip: float
    alpha_hfi: float


def improvement(cost: float, incumbent: Incumbent) -> float:
    """I = max{0, incumbent cost - candidate cost}."""
    return max(0.0, incumbent.cost - cost)


def improvement_batch(costs: np.ndarray, incumbent: Incumbent) -> np.ndarray:
    return np.maximum(0.0, incumbent.cost - np.asarray(costs, dtype=float))


def feasibility_probability(predictions: Sequence[PosteriorPrediction],
                            spec: ConstraintSpec) -> float:
    """Probability that every constrained output falls inside its band,
    assuming independent Gaussian posteriors (product of per-band normal
    CDF differences). A zero-variance prediction contributes the indicator
    of its mean lying inside the band."""
    if len(predictions) == 0:
        raise InvalidArgumentError("feasibility needs one prediction per constraint")
    if len(predictions) != spec.count:
        raise InvalidArgumentError(
            f"got {len(predictions)} predictions for {spec.count} constraints")
    means = np.array([p.mean for p in predictions])
    sds = np.sqrt(np.array([p.variance for p in predictions]))
    return float(feasibility_probability_batch(
        means[:, None], sds[:, None], spec)[0])


def feasibility_probability_batch(means: np.ndarray, sds: np.ndarray,
                                  spec: ConstraintSpec) -> np.ndarray:
    """Vectorized product over constraints; ``means``/``sds`` have shape
    (n_constraints, n_points)."""
    means = np.atleast_2d(means)
    sds = np.atleast_2d(sds)
    fp = np.ones(means.shape[1])
    for k in range(spec.count):
        mu, sd = means[k], sds[k]
        lo, hi = spec.lowers[k], spec.uppers[k]
        factor = np.where(
            sd > 0,
            ndtr((hi - mu) / np.where(sd > 0, sd, 1.0))
            - ndtr((lo - mu) / np.where(sd > 0, sd, 1.0)),
            ((mu >= lo) & (mu <= hi)).astype(float),
        )
        fp *= factor
    return np.clip(fp, 0.0, 1.0)


def alpha_fip(fp: float, improvement: float) -> float:
    """FP(x) * sgn{I(x)} with sgn(0) = 0: the feasibility probability of
    candidates that are known to reduce the cost."""
    return fp if improvement > 0 else 0.0


def alpha_hfi(fp: float, improvement: float, pi: float) -> float:
    """(FP(x) - pi) * I(x); negative below the confidence threshold."""
    return (fp - pi) * improvement


def select_index(alpha_fip_values: np.ndarray, alpha_hfi_values: np.ndarray,
                 fp: np.ndarray, cost: np.ndarray, any_feasible_known: bool,
                 pi: float, *, restrict_hfi_to_confident: bool = False,
                 mask: Optional[np.ndarray] = None) -> tuple:
    """Branch policy over a scored pool; returns (index, acquisition name).

    Branches: with no feasible experiment known, maximize FIP; otherwise
    switch to HFI whenever any candidate exceeds the threshold probability,
    falling back to FIP when none does. Ties break on highest feasibility
    probability, then lowest cost, then lowest index.

    ``restrict_hfi_to_confident`` additionally limits the HFI argmax to
    candidates with fp > pi (off by default: the printed selection rule
    gates only on the existence of one super-threshold candidate).
    ``mask`` marks selectable entries (True = eligible).
    """
    a_fip = np.asarray(alpha_fip_values, dtype=float)
    a_hfi = np.asarray(alpha_hfi_values, dtype=float)
    fp = np.asarray(fp, dtype=float)
    cost = np.asarray(cost, dtype=float)
    n = a_fip.size
    if n == 0:
        raise InvalidArgumentError("candidate pool is empty")
    eligible = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, bool)
    if not eligible.any():
        raise InvalidArgumentError("no eligible candidates remain")

    if not any_feasible_known:
        score, used = a_fip, "FIP"
    elif bool(np.max(np.where(eligible, a_fip, -np.inf)) > pi):
        score, used = a_hfi, "HFI"
        if restrict_hfi_to_confident:
            confident = eligible & (fp > pi)
            if confident.any():
                eligible = confident
    else:
        score, used = a_fip, "FIP"

    masked = np.where(eligible, score, -np.inf)
    best = np.max(masked)
    ties = np.flatnonzero(masked == best)
    if ties.size > 1:
        order = np.lexsort((ties, cost[ties], -fp[ties]))
        idx = int(ties[order[0]])
    else:
        idx = int(ties[0])
    return idx, used


def select_candidate(pool: Sequence[ScoredCandidate], any_feasible_known: bool,
                     pi: float, *, restrict_hfi_to_confident: bool = False
                     ) -> ScoredCandidate:
    """Pick the next experiment from the scored pool (see select_index)."""
    if len(pool) == 0:
        raise InvalidArgumentError("candidate pool is empty")
    idx, _ = select_index(
        np.array([c.alpha_fip for c in pool]),
        np.array([c.alpha_hfi for c in pool]),
        np.array([c.fp for c in pool]),
        np.array([c.cost for c in pool]),
        any_feasible_known, pi,
        restrict_hfi_to_confident=restrict_hfi_to_confident)
    return pool[idx]


def score_candidate(x, cost: float, fp: float, incumbent: Incumbent,
                    pi: float) -> ScoredCandidate:
    """Assemble a ScoredCandidate from its cost and feasibility probability."""
    imp = improvement(cost, incumbent)
    return ScoredCandidate(x, cost, imp, fp, alpha_fip(fp, imp),
                           alpha_hfi(fp, imp, pi))
