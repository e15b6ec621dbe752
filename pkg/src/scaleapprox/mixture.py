"""One-dimensional Gaussian mixture fitting on pitch histograms.

EM runs over the occupied bin centers with the bin counts acting as sample
weights, which is the same objective as EM on the raw (already quantized)
frames.  The number of components is chosen by BIC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitDivergedError, InfeasibleKError, InsufficientDataError, ScaleApproxError
from .f0_ingest import PitchHistogram

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

INIT_STD_CENTS = 30.0
INIT_MIN_SPACING_CENTS = 60.0
PARAMS_PER_COMPONENT = 3


@dataclass(frozen=True)
class GaussianComponent:
    mean_cents: float
    std_cents: float
    weight: float


@dataclass(frozen=True)
class FitConfig:
    k_min: int = 2
    k_max: int = 14
    max_iters: int = 200
    rel_tol: float = 1e-6
    variance_floor_cents: float = 10.0
    min_weight: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.k_min < 1:
            raise ValueError(f"k_min must be >= 1, got {self.k_min}")
        if self.k_min > self.k_max:
            raise ValueError(f"k_min ({self.k_min}) exceeds k_max ({self.k_max})")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("rel_tol", "variance_floor_cents"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.min_weight < 1:
            raise ValueError("min_weight must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class MixtureModel:
    """A fitted mixture, components sorted by mean.

    ``ll_history`` holds the log-likelihood before the first EM step and
    after every step; ``log_likelihood`` is that of the final (pruned)
    model and is what ``bic`` is computed from.
    """

    components: tuple[GaussianComponent, ...]
    log_likelihood: float
    n_samples: int
    k: int
    bic: float
    n_iter: int = 0
    converged: bool = False
    ll_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean_cents for c in self.components])

    @property
    def stds(self) -> np.ndarray:
        return np.array([c.std_cents for c in self.components])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])


def bic_score(log_likelihood: float, k: int, n_samples: int) -> float:
    return k * PARAMS_PER_COMPONENT * math.log(n_samples) - 2.0 * log_likelihood


def _occupied(hist: PitchHistogram):
    counts = np.asarray(hist.counts)
    idx = np.flatnonzero(counts)
    if len(idx) == 0:
        raise InsufficientDataError("histogram is empty")
    return idx, hist.centers[idx], counts[idx].astype(float)


def _component_log_density(x, means, stds, weights):
    # shape (k, n_bins)
    z = (x[None, :] - means[:, None]) / stds[:, None]
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return log_w[:, None] - np.log(stds)[:, None] - _LOG_SQRT_2PI - 0.5 * z * z


def _log_likelihood(x, c, means, stds, weights):
    lp = _component_log_density(x, means, stds, weights)
    top = lp.max(axis=0)
    per_bin = top + np.log(np.exp(lp - top).sum(axis=0))
    return float(np.dot(c, per_bin)), lp, per_bin


def initial_means(hist: PitchHistogram, k: int, seed: int = 0) -> np.ndarray:
    """Greedy peak picking: highest bins first, at least 60 cents apart.

    Count ties go to the lower bin.  If fewer than ``k`` peaks qualify the
    rest are drawn uniformly over the occupied span from a generator seeded
    with ``seed``.
    """
    idx, x, c = _occupied(hist)
    # stable sort on -count keeps ascending-cents order among equal counts
    order = np.argsort(-c, kind="stable")
    min_gap_bins = INIT_MIN_SPACING_CENTS / hist.bin_cents
    chosen: list[int] = []
    for j in order:
        if len(chosen) == k:
            break
        if all(abs(int(idx[j]) - int(idx[p])) >= min_gap_bins - 1e-9 for p in chosen):
            chosen.append(int(j))
    means = [float(x[j]) for j in chosen]
    if len(means) < k:
        rng = np.random.default_rng(seed)
        means.extend(rng.uniform(x[0], x[-1], size=k - len(means)).tolist())
    return np.array(means)


def fit_em(hist: PitchHistogram, k: int, config: FitConfig = FitConfig()) -> MixtureModel:
    """Weighted EM for a ``k``-component mixture on ``hist``."""
    idx, x, c = _occupied(hist)
    if k < 1 or k > len(idx):
        raise InfeasibleKError(f"k={k} infeasible for {len(idx)} non-empty bins")
    n = float(c.sum())
    floor = config.variance_floor_cents

    means = initial_means(hist, k, config.seed)
    stds = np.full(k, max(INIT_STD_CENTS, floor))
    weights = np.full(k, 1.0 / k)

    ll, lp, per_bin = _log_likelihood(x, c, means, stds, weights)
    if not math.isfinite(ll):
        raise FitDivergedError(f"non-finite initial log-likelihood (k={k})")
    history = [ll]
    converged = False
    n_iter = 0
    while n_iter < config.max_iters:
        # E-step
        resp = np.exp(lp - per_bin[None, :]) * c[None, :]
        nk = resp.sum(axis=1)
        # M-step; a component with no responsibility keeps its location
        alive = nk > 0
        new_means = means.copy()
        new_stds = stds.copy()
        safe_nk = np.where(alive, nk, 1.0)
        mu = resp @ x / safe_nk
        new_means[alive] = mu[alive]
        var = np.einsum("kb,kb->k", resp, (x[None, :] - new_means[:, None]) ** 2) / safe_nk
        new_stds[alive] = np.maximum(np.sqrt(var[alive]), floor)
        weights = nk / nk.sum()
        means, stds = new_means, new_stds
        n_iter += 1

        prev = ll
        ll, lp, per_bin = _log_likelihood(x, c, means, stds, weights)
        if not math.isfinite(ll):
            raise FitDivergedError(f"non-finite log-likelihood at iteration {n_iter} (k={k})")
        history.append(ll)
        if abs(ll - prev) < config.rel_tol * abs(prev):
            converged = True
            break

    keep = weights >= config.min_weight
    if not keep.any():
        keep = weights == weights.max()
    if not keep.all():
        means, stds, weights = means[keep], stds[keep], weights[keep]
        weights = weights / weights.sum()
        ll, _, _ = _log_likelihood(x, c, means, stds, weights)

    order = np.argsort(means, kind="stable")
    comps = tuple(
        GaussianComponent(float(means[j]), float(stds[j]), float(weights[j])) for j in order
    )
    n_samples = int(round(n))
    return MixtureModel(
        components=comps,
        log_likelihood=ll,
        n_samples=n_samples,
        k=len(comps),
        bic=bic_score(ll, len(comps), n_samples),
        n_iter=n_iter,
        converged=converged,
        ll_history=tuple(history),
    )


def candidate_ks(hist: PitchHistogram, config: FitConfig) -> range:
    """k values tried by :func:`select_model`.

    When the histogram has fewer occupied bins than ``k_min`` the range
    starts at the occupied-bin count instead of being empty.
    """
    nonempty = hist.n_nonempty
    if nonempty == 0:
        raise InsufficientDataError("histogram is empty")
    hi = min(config.k_max, nonempty)
    lo = min(config.k_min, hi)
    return range(lo, hi + 1)


def fit_all(hist: PitchHistogram, config: FitConfig = FitConfig()) -> dict[int, MixtureModel]:
    """Fit every candidate k; failed fits are left out of the result."""
    fits = {}
    last_error = None
    for k in candidate_ks(hist, config):
        try:
            fits[k] = fit_em(hist, k, config)
        except ScaleApproxError as exc:
            last_error = exc
    if not fits:
        raise last_error
    return fits


def select_model(hist: PitchHistogram, config: FitConfig = FitConfig()) -> MixtureModel:
    """Lowest-BIC fit over the candidate k range, ties to the smaller k."""
    best = None
    for k, model in sorted(fit_all(hist, config).items()):
        if best is None or model.bic < best.bic:
            best = model
    return best
