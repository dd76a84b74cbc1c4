"""Tree-structured Parzen estimator (TPE) search over flat spaces.

Each parameter gets its own one-dimensional density (the usual TPE
factorization). Continuous and integer parameters use Gaussian kernels
centred on the observed values, truncated to the domain, with bandwidth
``max(span / count, 1e-3 * span)``; log-uniform parameters are modelled in
log space. Categorical parameters use Laplace-smoothed frequencies.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .learners.spaces import Categorical, HyperConfig
from .oob import oob_predict
from .utils import derive_seed, make_rng, mse


@dataclass(frozen=True)
class SearchParams:
    n_trials: int = 30
    n_startup: int = 5
    gamma: float = 0.25
    n_ei_candidates: int = 24
    b: int = 12

    def __post_init__(self):
        if self.n_trials < 1 or self.b < 1 or self.n_ei_candidates < 1:
            raise ValueError("n_trials, b and n_ei_candidates must be >= 1")
        if not 0 <= self.n_startup <= self.n_trials:
            raise ValueError("need 0 <= n_startup <= n_trials")
        if self.b > self.n_trials:
            raise ValueError("need b <= n_trials")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")


@dataclass(frozen=True)
class Trial:
    config: HyperConfig
    loss: float


class ParzenDensity:
    """Truncated Gaussian mixture on an interval, one kernel per observation."""

    def __init__(self, points, lo, hi):
        self.lo, self.hi = lo, hi
        span = hi - lo
        self.points = np.asarray(points, dtype=float)
        n = max(self.points.size, 1)
        self.bandwidth = max(span / n, 1e-3 * span)
        sd = self.bandwidth
        # probability mass of each kernel inside [lo, hi]
        self._mass = ndtr((hi - self.points) / sd) - ndtr((lo - self.points) / sd)

    def pdf(self, x):
        if self.points.size == 0:
            return np.full(np.shape(x), 1.0 / (self.hi - self.lo))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = (x[:, None] - self.points[None, :]) / self.bandwidth
        kern = np.exp(-0.5 * z * z) / (self.bandwidth * math.sqrt(2.0 * math.pi))
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, (kern / self._mass).mean(axis=1), 0.0)

    def sample(self, rng):
        if self.points.size == 0:
            return float(rng.uniform(self.lo, self.hi))
        centre = self.points[int(rng.integers(self.points.size))]
        while True:
            x = centre + self.bandwidth * rng.standard_normal()
            if self.lo <= x <= self.hi:
                return float(x)


class CategoricalDensity:
    def __init__(self, observed, values):
        self.values = tuple(values)
        counts = np.array([sum(1 for o in observed if o == v) for v in self.values], dtype=float)
        self.probs = (counts + 1.0) / (counts.sum() + len(self.values))

    def pdf(self, x):
        return np.array([self.probs[self.values.index(v)] for v in np.atleast_1d(x)])

    def sample(self, rng):
        return self.values[int(rng.choice(len(self.values), p=self.probs))]


def _density(domain, observed):
    if isinstance(domain, Categorical):
        return CategoricalDensity(observed, domain.values)
    lo, hi = domain.internal_bounds
    return ParzenDensity([domain.to_internal(v) for v in observed], lo, hi)


def split_history(history, gamma):
    """Good set = the ``ceil(gamma * N)`` lowest-loss trials (stable order)."""
    order = sorted(range(len(history)), key=lambda i: (history[i].loss, i))
    n_good = math.ceil(gamma * len(history))
    good = [history[i] for i in order[:n_good]]
    bad = [history[i] for i in order[n_good:]]
    return good, bad


def _log_ratio(space, good_d, bad_d, candidates):
    score = np.zeros(len(candidates))
    for name in space.names():
        dom = space[name]
        vals = [c[name] for c in candidates]
        if not isinstance(dom, Categorical):
            vals = [dom.to_internal(v) for v in vals]
        lx = np.maximum(good_d[name].pdf(vals), 1e-300)
        gx = np.maximum(bad_d[name].pdf(vals), 1e-300)
        score += np.log(lx) - np.log(gx)
    return score


def tpe_suggest(space, history, params, rng, learner="config"):
    """Propose the next config for ``space`` given past trials."""
    if not space:
        raise ValueError("empty hyperparameter space")
    if any(not math.isfinite(t.loss) for t in history):
        raise ValueError("trial losses must be finite")
    if len(history) < params.n_startup:
        return HyperConfig(learner, space.sample(rng))

    good, bad = split_history(history, params.gamma)
    good_d, bad_d = {}, {}
    for name in space.names():
        good_d[name] = _density(space[name], [t.config[name] for t in good])
        bad_d[name] = _density(space[name], [t.config[name] for t in bad])

    candidates = []
    for _ in range(params.n_ei_candidates):
        cand = {}
        for name in space.names():
            dom = space[name]
            draw = good_d[name].sample(rng)
            cand[name] = draw if isinstance(dom, Categorical) else dom.from_internal(draw)
        candidates.append(cand)
    best = int(np.argmax(_log_ratio(space, good_d, bad_d, candidates)))
    return HyperConfig(learner, candidates[best])


@dataclass
class SearchResult:
    """Outcome of one learner's search.

    ``candidates`` are the best distinct configs, best first; ``short`` is
    set when fewer than ``b`` distinct configs were explored.
    """

    spec: object
    candidates: list
    losses: list
    trials: list = field(default_factory=list)
    short: bool = False

    @property
    def best(self):
        return self.candidates[0]

    @property
    def best_trace(self):
        return np.minimum.accumulate([t.loss for t in self.trials]).tolist()


def bayes_candidates(ds, spec, plan, params, seed=0, cache=None):
    """Run ``n_trials`` TPE trials scored by OOB MSE; keep the best ``b``."""
    rng = make_rng(derive_seed(seed, "search", spec.kind))
    trials = []
    for _ in range(params.n_trials):
        config = tpe_suggest(spec.space, trials, params, rng, learner=spec.kind)
        vec = oob_predict(ds, spec, config, plan, seed, cache)
        trials.append(Trial(config, mse(ds.target, vec.predictions)))

    best_by_key = {}
    for i, t in enumerate(trials):
        prev = best_by_key.get(t.config.key)
        if prev is None or t.loss < prev[0]:
            best_by_key[t.config.key] = (t.loss, i, t.config)
    ranked = sorted(best_by_key.values(), key=lambda item: (item[0], item[1]))
    chosen = ranked[: params.b]
    short = len(chosen) < params.b
    if short:
        warnings.warn(
            f"{spec.name}: only {len(chosen)} distinct configs explored, fewer than b={params.b}",
            RuntimeWarning,
            stacklevel=2,
        )
    return SearchResult(
        spec=spec,
        candidates=[c for _, _, c in chosen],
        losses=[loss for loss, _, _ in chosen],
        trials=trials,
        short=short,
    )
