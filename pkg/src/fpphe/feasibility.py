"""Empirical rate constants and the tile-parameter feasibility system.

The two inequalities tie the tile dimensions (H, L) to the connecting-path
length R, the mixing rate lambda, the edge-time quantile constant frak_c, and
six passage-speed constants (three "fast" constants c_in < 1 and three "slow"
constants c_out > 1, indexed by branch degree 1, 2 and D):

  (1)  (H+1)/cin2 + R/(lambda cin1) + frak_c          <  (L+1)/coutD
  (2)  (H/2)/cout2 + (H/2+1)/(lambda cout2)
         + R/(lambda cout1)                           >  2 frak_c + (L+1)/cinD

Both admit a simultaneous integer solution (H, L) for every lambda below the
closed-form threshold lambda_zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .rng import generator_for_trial

DEFAULT_GRID = 1e-3


@dataclass
class RateConstants:
    cin1: float
    cin2: float
    cinD: float
    cout1: float
    cout2: float
    coutD: float

    def __post_init__(self):
        for name in ("cin1", "cin2", "cinD"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise InvalidParameterError(f"{name} must be in (0,1), got {v}")
        for name in ("cout1", "cout2", "coutD"):
            v = getattr(self, name)
            if v <= 1.0:
                raise InvalidParameterError(f"{name} must be > 1, got {v}")


@dataclass
class FeasibilityProblem:
    lam: float
    constants: RateConstants
    frak_c: float
    R: int

    def __post_init__(self):
        if self.lam <= 0:
            raise InvalidParameterError(f"lambda must be positive, got {self.lam}")
        if self.R < 1:
            raise InvalidParameterError(f"R must be >= 1, got {self.R}")
        if self.frak_c < 0:
            raise InvalidParameterError("frak_c must be nonnegative")


@dataclass
class FeasibilitySolution:
    H: int
    L: int
    feasible: bool
    lhs1: float = math.nan
    rhs1: float = math.nan
    lhs2: float = math.nan
    rhs2: float = math.nan
    diagnostics: str = ""

    def to_dict(self) -> dict:
        return {
            "H": self.H, "L": self.L, "feasible": self.feasible,
            "lhs1": self.lhs1, "rhs1": self.rhs1,
            "lhs2": self.lhs2, "rhs2": self.rhs2,
            "diagnostics": self.diagnostics,
        }


def lambda_zero(c: RateConstants) -> float:
    """Largest rate below which the H-coefficient of the combined inequality
    is positive: cinD*cin2 / (2*cout2*coutD - cinD*cin2)."""
    denom = 2.0 * c.cout2 * c.coutD - c.cinD * c.cin2
    if denom <= 0:
        # impossible under the invariants cin < 1 < cout, guarded anyway
        raise InvalidParameterError("degenerate rate constants")
    return c.cinD * c.cin2 / denom


def h_coefficient(c: RateConstants, lam: float) -> float:
    """Coefficient of H in the combined inequality; positive iff lam < lambda_zero."""
    return c.cinD / (2.0 * c.cout2) * (1.0 + 1.0 / lam) - c.coutD / c.cin2


def _audit(p: FeasibilityProblem, H: int, L: int) -> tuple[float, float, float, float]:
    c = p.constants
    lhs1 = (H + 1) / c.cin2 + p.R / (p.lam * c.cin1) + p.frak_c
    rhs1 = (L + 1) / c.coutD
    lhs2 = (H / 2) / c.cout2 + (H / 2 + 1) / (p.lam * c.cout2) + p.R / (p.lam * c.cout1)
    rhs2 = 2.0 * p.frak_c + (L + 1) / c.cinD
    return lhs1, rhs1, lhs2, rhs2


def solve_hl(p: FeasibilityProblem, max_h_steps: int = 1000) -> FeasibilitySolution:
    """Smallest even H making the combined inequality strict, then the
    smallest integer L in the interval the two original inequalities carve
    out.  The returned solution re-validates both inequalities by direct
    substitution before reporting feasible=True."""
    c = p.constants
    coeff = h_coefficient(c, p.lam)
    if coeff <= 0:
        return FeasibilitySolution(
            0, 0, False,
            diagnostics=(f"H-coefficient {coeff:.6g} <= 0: lambda={p.lam} is not "
                         f"below lambda_zero={lambda_zero(c):.6g}"))
    # Constant side of the combined inequality (everything that is not H).
    const = (c.coutD / c.cin2
             + (p.R / p.lam) * (c.coutD / c.cin1 - c.cinD / c.cout1)
             + 2.0 * p.frak_c * (c.coutD + c.cinD)
             + 1.0)
    H = max(2, 2 * (math.floor(const / coeff / 2.0) + 1))
    for _ in range(max_h_steps):
        # L interval: (1) forces L+1 > low, (2) forces L+1 < up.
        low = c.coutD * ((H + 1) / c.cin2 + p.R / (p.lam * c.cin1) + p.frak_c)
        up = c.cinD * ((H / 2) / c.cout2 + (H / 2 + 1) / (p.lam * c.cout2)
                       + p.R / (p.lam * c.cout1) - 2.0 * p.frak_c)
        l_min = max(1, math.floor(low))
        l_max = math.ceil(up) - 2
        if l_min <= l_max:
            L = l_min
            lhs1, rhs1, lhs2, rhs2 = _audit(p, H, L)
            if lhs1 < rhs1 and lhs2 > rhs2:
                return FeasibilitySolution(H, L, True, lhs1, rhs1, lhs2, rhs2)
        H += 2
    return FeasibilitySolution(
        0, 0, False,
        diagnostics=f"no L interval found after {max_h_steps} even-H steps")


# ---------------------------------------------------------------------------
# Empirical estimation of the passage-speed constants.

@dataclass
class GraphFamily:
    """Family the per-length extremal passage times are sampled on: "path"
    (a single line, so min = max = a Gamma sum) or "tree" (the full d-ary
    tree, extremal over all d^k root-to-level-k paths)."""

    kind: str
    d: int = 1

    def __post_init__(self):
        if self.kind not in ("path", "tree"):
            raise InvalidParameterError(f"unknown family kind {self.kind!r}")
        if self.kind == "tree" and self.d < 2:
            raise InvalidParameterError("tree family needs d >= 2")


@dataclass
class RateEstimate:
    cin_hat: float
    cout_hat: float
    target_exponent: float
    k_values: list[int]
    trials: int
    cin_exponents: dict[int, float] = field(default_factory=dict)
    cout_exponents: dict[int, float] = field(default_factory=dict)
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "cin_hat": self.cin_hat, "cout_hat": self.cout_hat,
            "target_exponent": self.target_exponent,
            "k_values": self.k_values, "trials": self.trials,
            "cin_exponents": {str(k): v for k, v in self.cin_exponents.items()},
            "cout_exponents": {str(k): v for k, v in self.cout_exponents.items()},
            "warning": self.warning,
        }


def _sample_extremal_passages(family: GraphFamily, gamma: float, k_max: int,
                              trials: int, master_seed: int):
    """Per trial and per level k: (min, max) passage time over all length-k
    root paths.  Levels grow as d^k for trees, so keep k_max modest."""
    mins = np.empty((trials, k_max))
    maxs = np.empty((trials, k_max))
    scale = 1.0 / gamma
    for t in range(trials):
        rng = generator_for_trial(master_seed, t)
        if family.kind == "path":
            total = np.cumsum(rng.exponential(scale, size=k_max))
            mins[t] = total
            maxs[t] = total
        else:
            level = np.zeros(1)
            for k in range(k_max):
                level = np.repeat(level, family.d) + rng.exponential(
                    scale, size=level.size * family.d)
                mins[t, k] = level.min()
                maxs[t, k] = level.max()
    return mins, maxs


def estimate_rate_constants(family: GraphFamily, gamma: float, k_range,
                            trials: int, target_exponent: float,
                            master_seed: int, grid: float = DEFAULT_GRID,
                            c_max: float = 20.0) -> RateEstimate:
    """Grid-search the largest c < 1 and smallest c > 1 whose empirical
    extremal-passage tails decay at least like exp(-target_exponent * k)
    for every tested k.

    cin certifies P(slowest length-k path >= k/(gamma c)); cout certifies
    P(fastest length-k path <= k/(gamma c)).
    """
    if trials < 1000:
        raise InvalidParameterError("need at least 10^3 trials")
    k_values = sorted(int(k) for k in k_range)
    if not k_values or k_values[0] < 1:
        raise InvalidParameterError("k_range must contain positive lengths")
    k_max = k_values[-1]
    mins, maxs = _sample_extremal_passages(family, gamma, k_max, trials, master_seed)

    warning = None
    if math.exp(-target_exponent * k_max) < 1.0 / trials:
        warning = ("estimate-unstable: exp(-target_exponent*k) below Monte Carlo "
                   "resolution 1/trials at the largest k")

    cin_grid = np.arange(grid, 1.0, grid)
    cout_grid = np.arange(1.0 + grid, c_max + grid / 2, grid)
    cin_ok = np.ones(cin_grid.size, dtype=bool)
    cout_ok = np.ones(cout_grid.size, dtype=bool)
    for k in k_values:
        bound = math.exp(-target_exponent * k)
        max_sorted = np.sort(maxs[:, k - 1])
        min_sorted = np.sort(mins[:, k - 1])
        # slow-path tail: P(max >= k/(gamma c)) for each cin candidate
        thr = k / (gamma * cin_grid)
        tail = trials - np.searchsorted(max_sorted, thr, side="left")
        cin_ok &= (tail / trials) <= bound
        # fast-path tail: P(min <= k/(gamma c)) for each cout candidate
        thr = k / (gamma * cout_grid)
        tail = np.searchsorted(min_sorted, thr, side="right")
        cout_ok &= (tail / trials) <= bound

    cin_hat = float(cin_grid[cin_ok].max()) if cin_ok.any() else math.nan
    cout_hat = float(cout_grid[cout_ok].min()) if cout_ok.any() else math.nan

    def fitted(samples_sorted, thr, k, upper):
        if upper:
            tail = (trials - np.searchsorted(samples_sorted, thr, side="left")) / trials
        else:
            tail = np.searchsorted(samples_sorted, thr, side="right") / trials
        return -math.log(max(tail, 1.0 / trials)) / k

    cin_exp, cout_exp = {}, {}
    for k in k_values:
        if not math.isnan(cin_hat):
            cin_exp[k] = fitted(np.sort(maxs[:, k - 1]), k / (gamma * cin_hat), k, True)
        if not math.isnan(cout_hat):
            cout_exp[k] = fitted(np.sort(mins[:, k - 1]), k / (gamma * cout_hat), k, False)

    return RateEstimate(cin_hat, cout_hat, target_exponent, k_values, trials,
                        cin_exp, cout_exp, warning)
