"""Hyperparameter domains, spaces, configurations and learner specs."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..utils import hash64, render_value


@dataclass(frozen=True)
class Continuous:
    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.log and self.lo <= 0:
            raise ValueError("log-uniform domain requires lo > 0")

    def contains(self, value):
        return isinstance(value, (int, float, np.floating, np.integer)) and self.lo <= value <= self.hi

    # TPE works in the "internal" coordinate: log(x) for log domains, x otherwise.
    def to_internal(self, value):
        return math.log(value) if self.log else float(value)

    def from_internal(self, z):
        value = math.exp(z) if self.log else float(z)
        return min(max(value, self.lo), self.hi)

    @property
    def internal_bounds(self):
        if self.log:
            return math.log(self.lo), math.log(self.hi)
        return float(self.lo), float(self.hi)

    def sample(self, rng):
        lo, hi = self.internal_bounds
        return self.from_internal(rng.uniform(lo, hi))


@dataclass(frozen=True)
class Integer:
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, value):
        return isinstance(value, (int, np.integer)) and self.lo <= value <= self.hi

    def to_internal(self, value):
        return float(value)

    def from_internal(self, z):
        return int(min(max(round(z), self.lo), self.hi))

    @property
    def internal_bounds(self):
        # half-unit padding gives every integer the same prior mass
        return self.lo - 0.5, self.hi + 0.5

    def sample(self, rng):
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class Categorical:
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError("categorical domain needs at least one value")
        if len(set(self.values)) != len(self.values):
            raise ValueError("categorical values must be distinct")

    def contains(self, value):
        return value in self.values

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]


class HyperSpace(dict):
    """Mapping of parameter name to domain, iterated in sorted-name order."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        if not self:
            raise ValueError("hyperparameter space must not be empty")
        for name, dom in self.items():
            if not isinstance(dom, (Continuous, Integer, Categorical)):
                raise TypeError(f"{name}: unsupported domain {dom!r}")

    def names(self):
        return sorted(self)

    def sample(self, rng):
        return {name: self[name].sample(rng) for name in self.names()}

    def validate(self, values):
        missing = set(self) - set(values)
        extra = set(values) - set(self)
        if missing or extra:
            raise ValueError(f"config keys mismatch: missing {sorted(missing)}, unknown {sorted(extra)}")
        for name in self.names():
            if not self[name].contains(values[name]):
                raise ValueError(f"{name}={values[name]!r} outside domain {self[name]}")


@dataclass(frozen=True)
class HyperConfig:
    learner: str
    values: tuple = ()

    def __post_init__(self):
        items = self.values.items() if isinstance(self.values, dict) else self.values
        normalized = []
        for k, v in sorted(items):
            if isinstance(v, np.integer):
                v = int(v)
            elif isinstance(v, np.floating):
                v = float(v)
            normalized.append((k, v))
        object.__setattr__(self, "values", tuple(normalized))

    @property
    def params(self):
        return dict(self.values)

    @property
    def key(self):
        """Canonical serialization; equal keys mean equal configs."""
        body = ",".join(f"{k}={render_value(v)}" for k, v in self.values)
        return f"{self.learner}({body})"

    @property
    def hash(self):
        return format(hash64(self.key), "016x")

    def __getitem__(self, name):
        return self.params[name]

    def to_json(self):
        return {"learner": self.learner, "values": self.params}

    @classmethod
    def from_json(cls, data):
        return cls(data["learner"], data["values"])


@dataclass(frozen=True)
class LearnerSpec:
    """A base learner kind with its search space.

    ``name`` identifies the learner inside a pool; it defaults to ``kind``.
    Two specs with equal kind and space behave identically whatever their
    names, which is how duplicate learners are modelled.
    """

    kind: str
    space: HyperSpace = field(compare=False)
    name: str = ""

    def __post_init__(self):
        from .registry import LEARNERS

        if self.kind not in LEARNERS:
            raise ValueError(f"unknown learner kind {self.kind!r}; choose from {sorted(LEARNERS)}")
        if not isinstance(self.space, HyperSpace):
            object.__setattr__(self, "space", HyperSpace(self.space))
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def config(self, **values):
        cfg = HyperConfig(self.kind, values)
        self.space.validate(cfg.params)
        return cfg
