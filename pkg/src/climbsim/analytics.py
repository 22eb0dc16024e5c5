"""Independent-requests (IR) analytics for small caches.

Closed-form steady-state distributions for LRU and CLIMB, the stationary
hit ratio, and a brute-force Markov-chain oracle.  The oracle builds the
exact transition matrix from its own tuple-level transition rules and
never calls into the simulator, so the two can check each other.

Configurations are tuples of 1-based item indices, top of cache first.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import permutations
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

SUM_TOL = 1e-12
MAX_ORACLE_N = 7
MAX_ORACLE_K = 4


class DegenerateDistributionError(ValueError):
    pass


class StateSpaceError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"power iteration did not converge after {iterations} "
                         f"iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


def as_probabilities(p: Sequence[float]) -> np.ndarray:
    """Validate and return ``p`` as a float array."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("probability vector must be one-dimensional and non-empty")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("probabilities must be finite and non-negative")
    total = math.fsum(arr)
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    return arr


def _check_config(sigma: Sequence[int], n: int) -> tuple[int, ...]:
    sigma = tuple(int(s) for s in sigma)
    if len(set(sigma)) != len(sigma):
        raise ValueError(f"configuration has repeated items: {sigma}")
    if not all(1 <= s <= n for s in sigma):
        raise ValueError(f"configuration items must lie in [1, {n}]: {sigma}")
    if len(sigma) >= n:
        raise ValueError(f"cache size {len(sigma)} must be smaller than N={n}")
    return sigma


def configurations(n: int, k: int) -> list[tuple[int, ...]]:
    """All ordered K-tuples of distinct items from 1..N."""
    return list(permutations(range(1, n + 1), k))


def pi_lru(p: Sequence[float], sigma: Sequence[int]) -> float:
    """Steady-state probability of configuration ``sigma`` under LRU.

    Product over positions of ``p[s_i] / (1 - mass of items above i)``.
    """
    p = as_probabilities(p)
    sigma = _check_config(sigma, p.size)
    prob = 1.0
    above = 0.0
    for s in sigma:
        denom = 1.0 - above
        if denom <= SUM_TOL:
            raise DegenerateDistributionError(
                f"items above position {sigma.index(s) + 1} carry all probability mass")
        prob *= p[s - 1] / denom
        above += p[s - 1]
    return prob


def _climb_weight(p: np.ndarray, sigma: tuple[int, ...]) -> float:
    k = len(sigma)
    w = 1.0
    for i, s in enumerate(sigma):
        w *= p[s - 1] ** (k - i)
    return w


@lru_cache(maxsize=256)
def _climb_normaliser(p: tuple[float, ...], k: int) -> float:
    arr = np.asarray(p)
    return math.fsum(_climb_weight(arr, s) for s in configurations(arr.size, k))


def pi_climb(p: Sequence[float], sigma: Sequence[int]) -> float:
    """Steady-state probability of ``sigma`` under CLIMB.

    Proportional to ``prod p[s_i] ** (K - i + 1)``; the constant is found by
    summing the weight over every K-permutation.
    """
    p = as_probabilities(p)
    sigma = _check_config(sigma, p.size)
    total = _climb_normaliser(tuple(p.tolist()), len(sigma))
    if total <= 0:
        raise DegenerateDistributionError("every configuration has zero CLIMB weight")
    return _climb_weight(p, sigma) / total


def lru_stationary(p: Sequence[float], k: int) -> dict[tuple[int, ...], float]:
    p = as_probabilities(p)
    return {s: pi_lru(p, s) for s in configurations(p.size, k)}


def climb_stationary(p: Sequence[float], k: int) -> dict[tuple[int, ...], float]:
    p = as_probabilities(p)
    return {s: pi_climb(p, s) for s in configurations(p.size, k)}


# -- Markov oracle -------------------------------------------------------

def _lru_step(sigma, j, _k):
    if j in sigma:
        i = sigma.index(j)
        return (j,) + sigma[:i] + sigma[i + 1:]
    return (j,) + sigma[:-1]


def _climb_step(sigma, j, _k):
    if j in sigma:
        i = sigma.index(j)
        if i == 0:
            return sigma
        s = list(sigma)
        s[i - 1], s[i] = s[i], s[i - 1]
        return tuple(s)
    return sigma[:-1] + (j,)


def _adaptive_step(state, j, k):
    sigma, jump = state
    s = list(sigma)
    if j in sigma:
        i = sigma.index(j) + 1
        if jump > 1:
            jump -= 1
        if i > 1:
            target = max(1, i - jump)
            s.insert(target - 1, s.pop(i - 1))
        return tuple(s), jump
    if jump < k:
        jump += 1
    s.pop()
    s.insert(k - jump, j)
    return tuple(s), jump


_STEPS = {"lru": _lru_step, "climb": _climb_step, "adaptiveclimb": _adaptive_step}


def transition_matrix(policy: str, p: Sequence[float], k: int):
    """Sparse transition matrix over full-cache states, plus the state list."""
    p = as_probabilities(p)
    n = p.size
    policy = policy.lower()
    if policy not in _STEPS:
        raise ValueError(f"no Markov model for policy {policy!r}")
    if n > MAX_ORACLE_N or k > MAX_ORACLE_K:
        raise StateSpaceError(f"oracle limited to N <= {MAX_ORACLE_N}, K <= {MAX_ORACLE_K}; "
                              f"got N={n}, K={k}")
    if not 1 <= k < n:
        raise StateSpaceError(f"need 1 <= K < N, got K={k}, N={n}")
    configs = configurations(n, k)
    if policy == "adaptiveclimb":
        states = [(c, jmp) for c in configs for jmp in range(1, k + 1)]
    else:
        states = configs
    index = {s: i for i, s in enumerate(states)}
    step = _STEPS[policy]
    rows, cols, vals = [], [], []
    for a, state in enumerate(states):
        for j in range(1, n + 1):
            if p[j - 1] == 0:
                continue
            rows.append(a)
            cols.append(index[step(state, j, k)])
            vals.append(p[j - 1])
    m = len(states)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m)), states


def power_iteration(P, tol: float = 1e-12, max_iter: int = 10**6) -> tuple[np.ndarray, float, int]:
    """Left fixed point of a row-stochastic matrix, from the uniform vector.

    Stops when the L1 residual ``|x P - x|`` drops below ``tol``.
    """
    m = P.shape[0]
    PT = P.T.tocsr()
    x = np.full(m, 1.0 / m)
    residual = math.inf
    for it in range(1, max_iter + 1):
        y = PT @ x
        y /= y.sum()
        residual = float(np.abs(y - x).sum())
        x = y
        if residual < tol:
            return x, residual, it
    raise ConvergenceError(residual, max_iter)


def markov_stationary(policy: str, p: Sequence[float], k: int, *, tol: float = 1e-12,
                      max_iter: int = 10**6, joint: bool = False) -> dict:
    """Stationary distribution of the exact IR chain for ``policy``.

    ``policy`` is one of ``"lru"``, ``"climb"``, ``"adaptiveclimb"``.  For
    AdaptiveClimb the chain runs over (configuration, jump) pairs; the
    result is marginalised onto configurations unless ``joint`` is true.
    """
    P, states = transition_matrix(policy, p, k)
    x, _, _ = power_iteration(P, tol=tol, max_iter=max_iter)
    if policy.lower() != "adaptiveclimb" or joint:
        return dict(zip(states, x.tolist()))
    out: dict = {}
    for (sigma, _jump), v in zip(states, x.tolist()):
        out[sigma] = out.get(sigma, 0.0) + v
    return out


def expected_hit_ratio(dist: Mapping[tuple[int, ...], float], p: Sequence[float]) -> float:
    """Probability that a request hits, averaged over ``dist``."""
    p = as_probabilities(p)
    return math.fsum(prob * math.fsum(p[s - 1] for s in sigma) for sigma, prob in dist.items())


def total_variation(a: Mapping, b: Mapping) -> float:
    keys = set(a) | set(b)
    return 0.5 * math.fsum(abs(a.get(s, 0.0) - b.get(s, 0.0)) for s in keys)
