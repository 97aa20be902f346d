"""Closed-form and fixed-point calculators.

Covers: extinction probability of the Binomial(d, 1-mu) Galton-Watson process,
the technical growth/decay condition on (d, mu), the single-survivor pmf value
p1, edge-time quantile constants, exponential-sum tail bounds, the tile-fanout
constant, and the tree percolation threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleError, InvalidParameterError


@dataclass
class GwSpec:
    """Offspring law Binomial(d, 1-mu): each of d potential children is kept
    independently with probability 1-mu."""

    d: int
    mu: float

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParameterError(f"d must be >= 1, got {self.d}")
        if not (0.0 <= self.mu <= 1.0):
            raise InvalidParameterError(f"mu must be in [0,1], got {self.mu}")

    @property
    def mean_offspring(self) -> float:
        return self.d * (1.0 - self.mu)


def _pgf(spec: GwSpec, q: float) -> float:
    return (spec.mu + (1.0 - spec.mu) * q) ** spec.d


def gw_extinction(spec: GwSpec, tol: float = 1e-12) -> float:
    """Smallest fixed point of q = (mu + (1-mu) q)^d.

    Iteration from q0 = 0 converges monotonically to the smallest fixed point
    for any monotone generating function; a Newton fallback handles slow
    near-critical convergence.  Returns exactly 1 when d(1-mu) <= 1.
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    if spec.mean_offspring <= 1.0:
        return 1.0
    q = 0.0
    threshold = tol / 10.0
    for _ in range(10_000):
        q_next = _pgf(spec, q)
        if abs(q_next - q) < threshold:
            return q_next
        q = q_next
    # Newton on g(q) - q = 0 from the current iterate (still below the root).
    for _ in range(200):
        g = _pgf(spec, q)
        dg = spec.d * (1.0 - spec.mu) * (spec.mu + (1.0 - spec.mu) * q) ** (spec.d - 1)
        step = (g - q) / (1.0 - dg)
        q += step
        if abs(step) < threshold:
            break
    return q


def check_tech_cond(d: int, mu: float) -> tuple[bool, bool]:
    """(supercritical growth, decay of the slow-lineage weight):
    d(1-mu) > 1 and d^2 (1-mu)^2 mu^(d-1) < 1."""
    if d < 1:
        raise InvalidParameterError(f"d must be >= 1, got {d}")
    cond1 = d * (1.0 - mu) > 1.0
    cond2 = d ** 2 * (1.0 - mu) ** 2 * mu ** (d - 1) < 1.0
    return cond1, cond2


def p_one(spec: GwSpec) -> float:
    """P(exactly one offspring) = d (1-mu) mu^(d-1)."""
    return spec.d * (1.0 - spec.mu) * spec.mu ** (spec.d - 1)


def edge_quantile_const(eps: float, gamma: float) -> float:
    """Minimal C with P(Exp(gamma) < C) > 1 - eps, i.e. -ln(eps)/gamma."""
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError(f"eps must be in (0,1), got {eps}")
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    return -math.log(eps) / gamma


def frak_c(eps: float, lam: float) -> float:
    """max{C(eps,1), C(eps,lambda)} - the common edge-time quantile constant
    for both spread rates; equals C(eps, lambda) whenever lambda < 1."""
    return max(edge_quantile_const(eps, 1.0), edge_quantile_const(eps, lam))


def janson_upper_tail(a_star: float, mean: float, delta: float) -> float:
    """Upper bound on P(X >= (1+delta) E X) for X a sum of independent
    exponentials with minimum rate a_star."""
    if a_star <= 0 or mean <= 0 or delta <= 0:
        raise InvalidParameterError("a_star, mean, delta must be positive")
    bound = math.exp(-a_star * mean * (delta - math.log1p(delta))) / (1.0 + delta)
    return min(bound, 1.0)


def janson_lower_tail(a_star: float, mean: float, delta: float) -> float:
    """Upper bound on P(X <= (1-delta) E X), for 0 < delta < 1."""
    if a_star <= 0 or mean <= 0:
        raise InvalidParameterError("a_star and mean must be positive")
    if not (0.0 < delta < 1.0):
        raise InvalidParameterError(f"delta must be in (0,1), got {delta}")
    bound = math.exp(-a_star * mean * (-delta - math.log1p(-delta)))
    return min(bound, 1.0)


def epsilon_max(D: int, mu2: float, eta_D: float, f_D: float) -> float:
    """Cap on the slack parameter: min{1/700, (1-eta_D-f_D)(1-mu2)^2}.

    A nonpositive return value means the (D, mu2, eta_D) combination is
    infeasible; callers must treat it as such.
    """
    return min(1.0 / 700.0, (1.0 - eta_D - f_D) * (1.0 - mu2) ** 2)


def phi_from_params(D: int, mu2: float, eta_D: float, f_D: float, eps: float) -> int:
    """Tile fanout: ceil( 2 D^3 / ( (99/100) [ (1-eta_D-f_D)(1-mu2)^2 - eps ] ) )."""
    denom_core = (1.0 - eta_D - f_D) * (1.0 - mu2) ** 2 - eps
    if denom_core <= 0:
        raise InfeasibleError(
            f"(1-eta_D-f_D)(1-mu2)^2 - eps = {denom_core:.6g} is nonpositive")
    return math.ceil(2.0 * D ** 3 / (0.99 * denom_core))


def tree_percolation_threshold(phi: int) -> float:
    """Critical edge-percolation parameter on the rooted phi-ary tree."""
    if phi < 1:
        raise InvalidParameterError(f"phi must be >= 1, got {phi}")
    return 1.0 / phi


def inverse_size_rate_limit(spec: GwSpec) -> float:
    """Decay rate of E[1/N_n | survival]: max{ln p1, -ln(d(1-mu))}."""
    if spec.mean_offspring <= 1.0:
        raise InvalidParameterError("spec must be supercritical")
    p1 = p_one(spec)
    low = -math.log(spec.mean_offspring)
    return max(math.log(p1), low) if p1 > 0 else low
