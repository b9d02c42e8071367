"""Seeded random matrices ``(a_ij X_ij)`` with iid symmetric entries ``X_ij``.

Random streams are Philox4x32-10 counter-based generators keyed through
``numpy.random.SeedSequence(seed, spawn_key=(stream, substream))``. Entries
are drawn in row-major order, so a matrix depends only on
``(seed, stream, substream)`` and never on scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, as_profile

KINDS = ("gaussian", "weibull", "mixture", "bernoulli")
MIXING_LAWS = ("constant", "two_point", "lognormal")


@dataclass(frozen=True)
class MixingLaw:
    """Law of the nonnegative scale ``R`` in a Gaussian mixture ``R g``.

    ``constant``: ``R = c``. ``two_point``: ``R = a`` with probability
    ``prob``, else ``b``. ``lognormal``: ``R = exp(mu + sigma Z)``.
    """

    law: str = "constant"
    c: float = 1.0
    a: float = 1.0
    b: float = 1.0
    prob: float = 0.5
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.law not in MIXING_LAWS:
            raise ConfigurationError(f"unknown mixing law {self.law!r}")
        if self.law == "constant" and self.c < 0:
            raise ConfigurationError("constant mixing scale must be nonnegative")
        if self.law == "two_point":
            if self.a < 0 or self.b < 0:
                raise ConfigurationError("two-point mixing values must be nonnegative")
            if not 0 <= self.prob <= 1:
                raise ConfigurationError("two-point probability must lie in [0, 1]")
        if self.law == "lognormal" and self.sigma < 0:
            raise ConfigurationError("lognormal sigma must be nonnegative")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.law == "constant":
            return np.full(size, float(self.c))
        if self.law == "two_point":
            return np.where(rng.random(size) < self.prob, self.a, self.b)
        return np.exp(self.mu + self.sigma * rng.standard_normal(size))

    def to_dict(self) -> dict:
        if self.law == "constant":
            return {"law": "constant", "c": self.c}
        if self.law == "two_point":
            return {"law": "two_point", "a": self.a, "b": self.b, "prob": self.prob}
        return {"law": "lognormal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str = "gaussian"
    r: float | None = None
    mixing: MixingLaw | None = None
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "weibull":
            if self.r is None or not (0 < self.r <= 2):
                raise ConfigurationError(f"weibull needs shape r in (0, 2], got {self.r}")
        elif self.r is not None:
            raise ConfigurationError("shape r only applies to weibull entries")
        if self.kind == "mixture" and self.mixing is None:
            object.__setattr__(self, "mixing", MixingLaw())
        if self.kind != "mixture" and self.mixing is not None:
            raise ConfigurationError("mixing law only applies to mixture entries")
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and 0 <= v < 2**64):
                raise ConfigurationError(f"{name} must be a 64-bit unsigned integer")

    def generator(self, substream: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), int(substream)))
        return np.random.Generator(np.random.Philox(ss))

    def draw(self, shape, substream: int = 0) -> np.ndarray:
        """Raw entries ``X_ij`` (without the profile) for one substream."""
        rng = self.generator(substream)
        if self.kind == "gaussian":
            return rng.standard_normal(shape)
        if self.kind == "bernoulli":
            return np.where(rng.random(shape) < 0.5, -1.0, 1.0)
        if self.kind == "weibull":
            e = rng.standard_exponential(shape)
            sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
            return sign * e ** (1.0 / self.r)
        g = rng.standard_normal(shape)
        return self.mixing.sample(rng, shape) * g

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "seed": int(self.seed), "stream": int(self.stream)}
        if self.r is not None:
            d["r"] = self.r
        if self.mixing is not None:
            d["mixing"] = self.mixing.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        d = dict(d)
        mixing = d.pop("mixing", None)
        unknown = set(d) - {"kind", "r", "seed", "stream"}
        if unknown:
            raise ConfigurationError(f"unknown ensemble fields {sorted(unknown)}")
        if mixing is not None:
            mixing = MixingLaw(**mixing)
        return cls(mixing=mixing, **d)

    @classmethod
    def from_json(cls, text: str) -> "EnsembleSpec":
        return cls.from_dict(json.loads(text))

    def with_seed(self, seed: int) -> "EnsembleSpec":
        return EnsembleSpec(self.kind, self.r, self.mixing, seed, self.stream)

    def moments_abs(self, k: float) -> float | None:
        """``E|X|^k`` where a closed form is available."""
        if self.kind == "gaussian":
            return 2 ** (k / 2) * math.gamma((k + 1) / 2) / math.sqrt(math.pi)
        if self.kind == "bernoulli":
            return 1.0
        if self.kind == "weibull":
            return math.gamma(1 + k / self.r)
        return None


def parse_dist(text: str, seed: int = 0, stream: int = 0) -> EnsembleSpec:
    """Parse ``gauss``, ``weibull:R``, ``bernoulli`` or ``mixture:LAW:ARGS``.

    Mixture forms: ``mixture:constant:c``, ``mixture:two_point:a,b,prob``
    and ``mixture:lognormal:mu,sigma``.
    """
    parts = text.strip().split(":")
    head = parts[0].lower()
    try:
        if head in ("gauss", "gaussian", "normal"):
            return EnsembleSpec("gaussian", seed=seed, stream=stream)
        if head in ("bernoulli", "rademacher"):
            return EnsembleSpec("bernoulli", seed=seed, stream=stream)
        if head == "weibull":
            return EnsembleSpec("weibull", r=float(parts[1]), seed=seed, stream=stream)
        if head == "mixture":
            law = parts[1].lower() if len(parts) > 1 else "constant"
            args = [float(x) for x in parts[2].split(",")] if len(parts) > 2 and parts[2] else []
            law = law.replace("-", "_").replace("twopoint", "two_point")
            if law == "constant":
                mix = MixingLaw("constant", c=args[0] if args else 1.0)
            elif law == "two_point":
                mix = MixingLaw("two_point", a=args[0], b=args[1], prob=args[2] if len(args) > 2 else 0.5)
            elif law == "lognormal":
                mix = MixingLaw("lognormal", mu=args[0], sigma=args[1])
            else:
                raise ConfigurationError(f"unknown mixing law {law!r}")
            return EnsembleSpec("mixture", mixing=mix, seed=seed, stream=stream)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"cannot parse distribution {text!r}") from exc
    raise ConfigurationError(f"unknown distribution {text!r}")


def sample_matrix(A, spec: EnsembleSpec, substream: int = 0) -> np.ndarray:
    """One draw of ``(a_ij X_ij)``; identical ``(seed, stream, substream)`` give identical bits."""
    a = np.asarray(as_profile(A).entries)
    return a * spec.draw(a.shape, substream)
