"""Foundational value types, exponent arithmetic and vector norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

import numpy as np

INF = math.inf

Real = Union[int, float, Fraction]


class GnormError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GnormError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateInputError(DomainError):
    """The input is degenerate (e.g. a zero vector where a direction is needed)."""


class ConfigurationError(GnormError, ValueError):
    """A configuration object is incomplete or inconsistent."""


class ResourceError(GnormError):
    """An exhaustive computation would exceed its budget."""


class NumericError(GnormError, ArithmeticError):
    """An iterative method failed to converge."""


def _as_exponent(p: Any) -> float:
    if isinstance(p, str):
        return parse_exponent(p)
    p = float(p)
    if math.isnan(p):
        raise DomainError("exponent is NaN")
    return p


def parse_exponent(text: str) -> float:
    """Parse ``"3"``, ``"1.5"``, ``"4/3"`` or ``"inf"`` into a float exponent."""
    s = text.strip().lower()
    if s in ("inf", "infinity", "+inf", "oo"):
        return INF
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse exponent {text!r}") from exc


def conjugate_exponent(p: Real) -> float:
    """Hölder conjugate ``p/(p-1)``, with ``1 <-> inf``."""
    p = _as_exponent(p)
    if p < 1:
        raise DomainError(f"exponent must be >= 1, got {p}")
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def lp_norm(v, p: Real) -> float:
    """ℓp norm of a real vector, using compensated summation for finite ``p``.

    Parameters
    ----------
    v : array_like
        Finite real entries; any shape is flattened.
    p : float
        Exponent in ``[1, inf]``.
    """
    p = _as_exponent(p)
    if p < 1:
        raise DomainError(f"exponent must be >= 1, got {p}")
    a = np.abs(np.asarray(v, dtype=float).ravel())
    if a.size == 0:
        return 0.0
    if not np.all(np.isfinite(a)):
        raise DomainError("vector has non-finite entries")
    top = float(a.max())
    if top == 0.0:
        return 0.0
    if p == INF:
        return top
    if p == 1:
        return math.fsum(a.tolist())
    # scale by the max entry to keep |v|^p away from under/overflow
    scaled = (a / top) ** p
    return top * math.fsum(scaled.tolist()) ** (1.0 / p)


def log_bar(k: Real) -> float:
    """``Log 0 = 1`` and ``Log x = max(1, ln x)``."""
    if k < 0:
        raise DomainError(f"Log is defined for k >= 0, got {k}")
    if k == 0:
        return 1.0
    return max(1.0, math.log(k))


def _fmt_exponent(x: float) -> Any:
    return "inf" if x == INF else x


@dataclass(frozen=True)
class ExponentPair:
    """Exponents ``p`` in ``[1, 2]`` and ``q`` in ``[2, inf]`` with their conjugates."""

    p: float
    q: float
    p_star: float = field(init=False)
    q_star: float = field(init=False)

    def __post_init__(self):
        p = _as_exponent(self.p)
        q = _as_exponent(self.q)
        if not (1.0 <= p <= 2.0):
            raise DomainError(f"p must lie in [1, 2], got {p}")
        if not (2.0 <= q <= INF):
            raise DomainError(f"q must lie in [2, inf], got {q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p_star", conjugate_exponent(p))
        object.__setattr__(self, "q_star", conjugate_exponent(q))

    @property
    def finite(self) -> bool:
        """True when both ``p*`` and ``q`` are finite."""
        return self.p_star != INF and self.q != INF

    @property
    def max_exponent(self) -> float:
        return max(self.p_star, self.q)

    def to_dict(self) -> dict:
        return {
            "p": _fmt_exponent(self.p),
            "q": _fmt_exponent(self.q),
            "p_star": _fmt_exponent(self.p_star),
            "q_star": _fmt_exponent(self.q_star),
        }


class VarianceProfile:
    """Dense real ``m x n`` coefficient matrix with cached order statistics.

    The entries are copied and frozen; ``sorted_abs`` is the nonincreasing
    sequence of all ``|a_ij|``, computed on first access.
    """

    __slots__ = ("_a", "_sorted_abs")

    def __init__(self, entries):
        if isinstance(entries, VarianceProfile):
            entries = entries.entries
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DomainError(f"profile must be a nonempty 2-d matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("profile has non-finite entries")
        a.setflags(write=False)
        self._a = a
        self._sorted_abs = None

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def sorted_abs(self) -> np.ndarray:
        if self._sorted_abs is None:
            s = np.sort(np.abs(self._a), axis=None)[::-1].copy()
            s.setflags(write=False)
            self._sorted_abs = s
        return self._sorted_abs

    @property
    def max_abs(self) -> float:
        return float(self.sorted_abs[0])

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self._a))

    def is_zero(self) -> bool:
        return self.max_abs == 0.0

    def scaled(self, c: float) -> "VarianceProfile":
        return VarianceProfile(c * self._a)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "data": self._a.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "VarianceProfile":
        try:
            m, n, data = int(d["rows"]), int(d["cols"]), d["data"]
        except (KeyError, TypeError) as exc:
            raise DomainError("matrix JSON needs 'rows', 'cols' and 'data'") from exc
        if len(data) != m * n:
            raise DomainError(f"expected {m * n} entries, got {len(data)}")
        return cls(np.asarray(data, dtype=float).reshape(m, n))

    def __array__(self, dtype=None, copy=None):
        return self._a if dtype is None else self._a.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, VarianceProfile):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._a, other._a))

    def __hash__(self):
        return hash((self.shape, self._a.tobytes()))

    def __repr__(self):
        return f"VarianceProfile({self.rows}x{self.cols})"


def as_profile(A) -> VarianceProfile:
    return A if isinstance(A, VarianceProfile) else VarianceProfile(A)


CERTIFICATES = ("exact", "lower_bound", "upper_bound", "interval")


@dataclass(frozen=True)
class NormEstimate:
    """A norm value with the kind of guarantee attached to it.

    For ``interval`` certificates ``lower``/``upper`` bracket the norm and
    ``value`` is their midpoint; otherwise all three coincide.
    """

    value: float
    certificate: str
    method: str
    lower: float | None = None
    upper: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.certificate not in CERTIFICATES:
            raise ConfigurationError(f"unknown certificate {self.certificate!r}")
        if self.certificate == "interval":
            if self.lower is None or self.upper is None:
                raise ConfigurationError("interval certificate needs lower and upper")
            if self.lower > self.upper:
                raise ConfigurationError(f"interval lower {self.lower} > upper {self.upper}")
        else:
            object.__setattr__(self, "lower", self.value if self.lower is None else self.lower)
            object.__setattr__(self, "upper", self.value if self.upper is None else self.upper)
        if self.value < 0:
            raise ConfigurationError("norm estimates are nonnegative")

    @classmethod
    def interval(cls, lower: float, upper: float, method: str, **diagnostics) -> "NormEstimate":
        return cls(
            value=0.5 * (lower + upper),
            certificate="interval",
            method=method,
            lower=lower,
            upper=upper,
            diagnostics=diagnostics,
        )

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "certificate": self.certificate,
            "method": self.method,
            "lower": self.lower,
            "upper": self.upper,
            "diagnostics": dict(self.diagnostics),
        }
