"""ℓp -> ℓq operator norms of deterministic matrices.

``||A||_{p->q} = sup { sum_ij a_ij s_i t_j : s in B_{q*}^m, t in B_p^n }``.

Closed forms cover ``p = 1`` (largest column ℓq norm), ``q = inf`` (largest
row ℓ_{p*} norm) and rank-one matrices. In general the norm is bracketed
from below by alternating duality ascent and from above by the factor-4
dyadic net bound or a Hölder factorization.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .core import (
    INF,
    DegenerateInputError,
    DomainError,
    ExponentPair,
    NormEstimate,
    NumericError,
    ResourceError,
    as_profile,
    conjugate_exponent,
    lp_norm,
)

logger = logging.getLogger(__name__)

MAX_BASIS_STARTS = 256


@dataclass(frozen=True)
class AscentConfig:
    restarts: int = 32
    max_iterations: int = 500
    rel_tolerance: float = 1e-10
    seed: int = 0
    include_basis_starts: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise DomainError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not self.rel_tolerance > 0:
            raise DomainError("rel_tolerance must be > 0")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class DyadicNetConfig:
    """Net depth ``k0`` (``None``: ``ceil(log2 n) + 2``) and an enumeration budget."""

    k0: int | None = None
    cardinality_budget: int = 10**7

    def __post_init__(self):
        if self.k0 is not None and self.k0 < 0:
            raise DomainError("k0 must be >= 0")
        if self.cardinality_budget < 1:
            raise DomainError("cardinality_budget must be positive")

    def depth(self, n: int) -> int:
        if self.k0 is not None:
            return self.k0
        return math.ceil(math.log2(n)) + 2 if n > 1 else 2


def column_norms(A, q) -> np.ndarray:
    a = np.asarray(as_profile(A).entries)
    return np.array([lp_norm(a[:, j], q) for j in range(a.shape[1])])


def row_norms(A, r) -> np.ndarray:
    a = np.asarray(as_profile(A).entries)
    return np.array([lp_norm(a[i, :], r) for i in range(a.shape[0])])


def norm_1_to_q(A, q) -> NormEstimate:
    """Exact ``||A||_{1->q}``: the largest column ℓq norm."""
    value = float(column_norms(A, q).max())
    return NormEstimate(value, "exact", "max_column_norm")


def norm_p_to_inf(A, p) -> NormEstimate:
    """Exact ``||A||_{p->inf}``: the largest row ℓ_{p*} norm."""
    value = float(row_norms(A, conjugate_exponent(p)).max())
    return NormEstimate(value, "exact", "max_row_norm")


def norm_2_to_2(A, tol: float = 1e-10, max_iterations: int = 100_000, seed: int = 0) -> NormEstimate:
    """Spectral norm by power iteration on the smaller Gram matrix.

    Returns the interval ``[sigma (1 - tol), sigma (1 + tol)]`` around the
    converged Rayleigh estimate ``sigma``; raises :class:`NumericError` if
    the estimate has not stabilised within ``max_iterations``.
    """
    if not tol > 0:
        raise DomainError("tol must be > 0")
    P = as_profile(A)
    a = np.asarray(P.entries)
    if P.is_zero():
        return NormEstimate.interval(0.0, 0.0, "power_iteration", iterations=0)
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    x = np.random.default_rng(seed).standard_normal(gram.shape[0])
    x /= np.linalg.norm(x)
    lam_old = float(x @ gram @ x)
    stop = tol * 1e-3
    for it in range(1, max_iterations + 1):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # start vector in the kernel; restart on a fresh direction
            x = np.random.default_rng(seed + it).standard_normal(gram.shape[0])
            x /= np.linalg.norm(x)
            lam_old = float(x @ gram @ x)
            continue
        x = y / ny
        lam = float(x @ gram @ x)
        if abs(lam - lam_old) <= stop * lam:
            sigma = math.sqrt(max(lam, 0.0))
            return NormEstimate.interval(
                sigma * (1 - tol), sigma * (1 + tol), "power_iteration", iterations=it, estimate=sigma
            )
        lam_old = lam
    raise NumericError(f"power iteration did not converge in {max_iterations} iterations")


def dual_norming_vector(y, r) -> np.ndarray:
    """``s`` with ``||s||_{r*} = 1`` and ``<s, y> = ||y||_r``.

    For ``r = inf`` this is ``sign(y_k) e_k`` at the first maximal
    coordinate; for ``r = 1`` the sign vector.
    """
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise DegenerateInputError("dual norming vector of the zero vector")
    return _dual_columns(y.reshape(-1, 1), float(r))[:, 0]


def _dual_columns(Y: np.ndarray, r: float) -> np.ndarray:
    """Column-wise dual norming vectors; zero columns map to zero."""
    if r == INF:
        out = np.zeros_like(Y)
        idx = np.argmax(np.abs(Y), axis=0)
        cols = np.arange(Y.shape[1])
        out[idx, cols] = np.sign(Y[idx, cols])
        return out
    if r == 1:
        return np.sign(Y)
    top = np.abs(Y).max(axis=0)
    safe = np.where(top > 0, top, 1.0)
    Z = np.abs(Y) / safe
    W = Z ** (r - 1.0)
    nrm = np.sum(Z**r, axis=0) ** ((r - 1.0) / r)
    nrm = np.where(nrm > 0, nrm, 1.0)
    return np.sign(Y) * W / nrm


def _col_norms(Y: np.ndarray, r: float) -> np.ndarray:
    if Y.shape[0] == 0:
        return np.zeros(Y.shape[1])
    return np.linalg.norm(Y, ord=r, axis=0)


def _exact_branch(P, pq: ExponentPair) -> NormEstimate | None:
    if P.is_zero():
        return NormEstimate(0.0, "exact", "zero_matrix")
    if pq.p == 1:
        return norm_1_to_q(P, pq.q)
    if pq.q == INF:
        return norm_p_to_inf(P, pq.p)
    return None


def rank_one_factors(A, rtol: float = 1e-12):
    """Return ``(u, v)`` with ``A = u v^T`` when ``A`` is rank one, else ``None``."""
    a = np.asarray(as_profile(A).entries)
    flat = int(np.argmax(np.abs(a)))
    i0, j0 = divmod(flat, a.shape[1])
    pivot = a[i0, j0]
    if pivot == 0:
        return None
    u = a[:, j0].copy()
    v = a[i0, :] / pivot
    if np.max(np.abs(a - np.outer(u, v))) <= rtol * abs(pivot):
        return u, v
    return None


def exact_norm(A, pq: ExponentPair) -> NormEstimate | None:
    """Closed form when one applies (zero, ``p = 1``, ``q = inf``, rank one)."""
    P = as_profile(A)
    est = _exact_branch(P, pq)
    if est is not None:
        return est
    f = rank_one_factors(P)
    if f is not None:
        u, v = f
        return NormEstimate(lp_norm(u, pq.q) * lp_norm(v, pq.p_star), "exact", "rank_one")
    return None


def _starts(a: np.ndarray, pq: ExponentPair, cfg: AscentConfig) -> np.ndarray:
    m, n = a.shape
    cols = []
    rng = np.random.default_rng(cfg.seed)
    R = rng.standard_normal((n, cfg.restarts))
    R /= np.linalg.norm(R, ord=pq.p, axis=0)
    cols.append(R)
    if cfg.include_basis_starts:
        cn = _col_norms(a, pq.q)
        jj = np.argsort(-cn, kind="stable")[:MAX_BASIS_STARTS]
        E = np.zeros((n, len(jj)))
        E[jj, np.arange(len(jj))] = 1.0
        cols.append(E)
        rn = _col_norms(a.T, pq.p_star)
        ii = np.argsort(-rn, kind="stable")[:MAX_BASIS_STARTS]
        ii = ii[rn[ii] > 0]
        if len(ii):
            cols.append(_dual_columns(a[ii, :].T, pq.p_star))
    return np.hstack(cols)


def _ascent(a: np.ndarray, pq: ExponentPair, T: np.ndarray, max_iterations: int, rel_tolerance: float):
    """Alternate ``s <- J_q(A t)``, ``t <- J_{p*}(A^T s)`` on every column of ``T``."""
    vals = _col_norms(a @ T, pq.q)
    active = np.ones(T.shape[1], dtype=bool)
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        idx = np.flatnonzero(active)
        S = _dual_columns(a @ T[:, idx], pq.q)
        Tn = _dual_columns(a.T @ S, pq.p_star)
        new = _col_norms(a @ Tn, pq.q)
        improved = new > vals[idx]
        # monotone by construction; keep the old iterate on round-off regressions
        T[:, idx[improved]] = Tn[:, improved]
        gain = np.where(improved, new - vals[idx], 0.0)
        vals[idx] = np.maximum(new, vals[idx])
        done = gain <= rel_tolerance * np.maximum(vals[idx], np.finfo(float).tiny)
        active[idx[done]] = False
        if not active.any():
            break
    return vals, T, iterations


def ascent_trace(A, pq: ExponentPair, t0, max_iterations: int = 500) -> list[float]:
    """Objective values ``||A t_k||_q`` along the ascent path from a single start."""
    a = np.asarray(as_profile(A).entries)
    t = np.asarray(t0, dtype=float).reshape(-1, 1)
    t = t / lp_norm(t, pq.p)
    out = [float(_col_norms(a @ t, pq.q)[0])]
    for _ in range(max_iterations):
        s = _dual_columns(a @ t, pq.q)
        t = _dual_columns(a.T @ s, pq.p_star)
        out.append(float(_col_norms(a @ t, pq.q)[0]))
        if out[-1] - out[-2] <= 1e-15 * out[-1]:
            break
    return out


def basis_floor(A, pq: ExponentPair) -> float:
    """``max(max_j ||col_j||_q, max_i ||row_i||_{p*}, max |a_ij|)``, each attained at a feasible pair."""
    P = as_profile(A)
    return max(float(column_norms(P, pq.q).max()), float(row_norms(P, pq.p_star).max()), P.max_abs)


def alternating_norm_lower(A, pq: ExponentPair, cfg: AscentConfig | None = None) -> NormEstimate:
    """Lower bound on ``||A||_{p->q}`` by multi-start alternating duality ascent."""
    cfg = cfg or AscentConfig()
    P = as_profile(A)
    exact = _exact_branch(P, pq)
    if exact is not None:
        return exact
    a = np.asarray(P.entries)
    T = _starts(a, pq, cfg)
    vals, T, iterations = _ascent(a, pq, T, cfg.max_iterations, cfg.rel_tolerance)
    best = int(np.argmax(vals))
    value = lp_norm(a @ T[:, best], pq.q) / max(lp_norm(T[:, best], pq.p), 1.0)
    if cfg.include_basis_starts:
        value = max(value, basis_floor(P, pq))
    return NormEstimate(
        value,
        "lower_bound",
        "alternating",
        diagnostics={
            "restarts": cfg.restarts,
            "starts": int(T.shape[1]),
            "iterations": iterations,
            "seed": cfg.seed,
        },
    )


def cheap_norm_upper(A, pq: ExponentPair) -> NormEstimate:
    """Hölder factorization through ℓ1 or ℓ∞: always an upper bound."""
    P = as_profile(A)
    m, n = P.shape
    through_l1 = n ** (1.0 / pq.p_star) * norm_1_to_q(P, pq.q).value
    through_linf = m ** (1.0 / pq.q) * norm_p_to_inf(P, pq.p).value
    return NormEstimate(min(through_l1, through_linf), "upper_bound", "holder")


def _level_tuples(s: int, k: int, p: float) -> np.ndarray:
    """All ordered level tuples ``(l_1..l_s)`` in ``{0..k}^s`` with ``sum 2^{-p l} <= 1``."""
    w = 2.0 ** (-p * np.arange(k + 1))
    tol = 1e-12
    tuples = np.zeros((1, 0), dtype=np.int8)
    used = np.zeros(1)
    for _ in range(s):
        nt, nu = [], []
        for lev in range(k + 1):
            ok = used + w[lev] <= 1.0 + tol
            if ok.any():
                nt.append(np.hstack([tuples[ok], np.full((int(ok.sum()), 1), lev, dtype=np.int8)]))
                nu.append(used[ok] + w[lev])
        if not nt:
            return np.zeros((0, s), dtype=np.int8)
        tuples, used = np.vstack(nt), np.concatenate(nu)
    return tuples


def _level_multiset_count(s: int, k: int, p: float) -> int:
    """Number of ordered feasible level tuples of length ``s``, via multisets."""
    w = [2.0 ** (-p * lev) for lev in range(k + 1)]
    total = 0

    def rec(pos: int, lo: int, budget: float, counts: list[int]):
        nonlocal total
        if pos == s:
            c = math.factorial(s)
            for x in counts:
                c //= math.factorial(x)
            total += c
            return
        for lev in range(lo, k + 1):
            if w[lev] <= budget + 1e-12:
                counts[lev] += 1
                rec(pos + 1, lev, budget - w[lev], counts)
                counts[lev] -= 1

    rec(0, 0, 1.0, [0] * (k + 1))
    return total


def dyadic_net_cardinality(n: int, p: float, k: int) -> int:
    """Exact ``|T_{<=k}|``: vectors in ``B_p^n`` with ``|t_j|`` in ``{0, 1, 1/2, ..., 2^-k}``."""
    max_support = n if p == INF else min(n, int(math.floor(2.0 ** (p * k) + 1e-9)))
    total = 1
    for s in range(1, max_support + 1):
        total += comb(n, s) * _level_multiset_count(s, k, p) * 2**s
    return total


def dyadic_net_log_bound(n: int, p: float, k: int) -> float:
    """``log`` of the crude count ``(2 n (k + 1))^(2^{pk} + 1)``."""
    return (2.0 ** (p * k) + 1) * math.log(2 * n * (k + 1))


def dyadic_net_upper(A, pq: ExponentPair, cfg: DyadicNetConfig | None = None) -> NormEstimate:
    """``4 max_{t in T_{<=k0}} ||A t||_q`` by exhaustive streaming enumeration.

    Supports are visited by size and then lexicographically; global sign
    symmetry halves the work. Raises :class:`ResourceError` when the exact
    net cardinality exceeds the budget.
    """
    cfg = cfg or DyadicNetConfig()
    P = as_profile(A)
    m, n = P.shape
    k0 = cfg.depth(n)
    card = dyadic_net_cardinality(n, pq.p, k0)
    diag = {"k0": k0, "net_size": card, "log_cardinality_bound": dyadic_net_log_bound(n, pq.p, k0)}
    if card > cfg.cardinality_budget:
        raise ResourceError(f"dyadic net has {card} points, budget {cfg.cardinality_budget}")
    if P.is_zero():
        return NormEstimate(0.0, "upper_bound", "dyadic_net", diagnostics=diag)
    a = np.asarray(P.entries)
    mags = 2.0 ** (-np.arange(k0 + 1))
    best = 0.0
    chunk = 1 << 15
    for s in range(1, n + 1):
        lv = _level_tuples(s, k0, pq.p)
        if lv.shape[0] == 0:
            break
        signs = np.array([(1.0,) + rest for rest in itertools.product((1.0, -1.0), repeat=s - 1)])
        V = (mags[lv][:, None, :] * signs[None, :, :]).reshape(-1, s)
        for supp in itertools.combinations(range(n), s):
            sub = a[:, supp]
            for c0 in range(0, V.shape[0], chunk):
                Y = sub @ V[c0 : c0 + chunk].T
                best = max(best, float(_col_norms(Y, pq.q).max()))
    return NormEstimate(4.0 * best, "upper_bound", "dyadic_net", diagnostics={**diag, "net_max": best})


def certified_norm_interval(
    A,
    pq: ExponentPair,
    cfg_lower: AscentConfig | None = None,
    cfg_upper: DyadicNetConfig | None = None,
) -> NormEstimate:
    """Interval ``[L, U]`` containing ``||A||_{p->q}``.

    ``L`` comes from the alternating ascent, ``U`` is the smallest of the
    dyadic net bound, the Hölder bound and (for ``p = q = 2``) the power
    iteration bracket. Closed-form cases give a degenerate interval.
    """
    P = as_profile(A)
    exact = exact_norm(P, pq)
    if exact is not None:
        return NormEstimate.interval(exact.value, exact.value, "exact:" + exact.method)
    lower = alternating_norm_lower(P, pq, cfg_lower)
    L = lower.value
    uppers = {"holder": cheap_norm_upper(P, pq).value}
    try:
        uppers["dyadic_net"] = dyadic_net_upper(P, pq, cfg_upper).value
    except ResourceError as exc:
        logger.info("dyadic net skipped: %s", exc)
    if pq.p == 2 and pq.q == 2:
        spec = norm_2_to_2(P)
        uppers["power_iteration"] = spec.upper
        L = max(L, spec.diagnostics["estimate"])
    U = min(uppers.values())
    if L > U:
        if L - U > 1e-9 * max(L, 1.0):
            raise NumericError(f"lower bound {L} exceeds certified upper bound {U}")
        U = L
    return NormEstimate.interval(
        L,
        U,
        "certified_interval",
        upper_routes=uppers,
        lower_iterations=lower.diagnostics.get("iterations", 0),
        seed=lower.diagnostics.get("seed"),
    )


METHODS = ("exact", "alt", "net", "cheap", "interval", "spectral")


def operator_norm(A, pq: ExponentPair, method: str = "interval", cfg: AscentConfig | None = None,
                  net: DyadicNetConfig | None = None) -> NormEstimate:
    """Dispatch on a method label (as used by the command line)."""
    if method == "exact":
        est = exact_norm(A, pq)
        if est is None:
            raise DomainError("no closed form for this matrix and exponent pair")
        return est
    if method == "alt":
        return alternating_norm_lower(A, pq, cfg)
    if method == "net":
        return dyadic_net_upper(A, pq, net)
    if method == "cheap":
        return cheap_norm_upper(A, pq)
    if method == "interval":
        return certified_norm_interval(A, pq, cfg, net)
    if method == "spectral":
        if not (pq.p == 2 and pq.q == 2):
            raise DomainError("spectral method needs p = q = 2")
        return norm_2_to_2(A)
    raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
