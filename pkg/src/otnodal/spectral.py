"""Neumann cosine eigenbasis on the cube, heat flow, and band sweeps.

Eigenfunctions are products of cosines with eigenvalue pi^2 |k|^2.
`SpectralFunction` stores coefficients against the orthonormal basis
(sqrt(2) factors per nonzero index), so the coefficient l2-norm matches
the L2 norm.  `heat_bound_check` and `sturm_hurwitz_check` sample random
functions supported on an octave band [lambda, 4 lambda], measure
transport cost and nodal size on grids resolving the top mode, and fit
the decay/growth exponents in lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EmptyBand, ZeroNodal
from .grids import GridFunction, make_zero_mean, nodal_measure, norms, split_signs
from .transport import SolverConfig, solve_transport
from .uncertainty import ratio_exponent

LAMBDA_CAP_FACTOR = 4.0  # octave band keeps log-lambda factors slowly varying
CELLS_PER_TOP_MODE = 8  # grid resolution rule n >= 8 k_max


@dataclass(frozen=True)
class SpectralFunction:
    """Finite cosine expansion with zero mean (no constant coefficient)."""

    dim: int
    coefficients: tuple  # ((k tuple, coefficient), ...) sorted by k

    def __post_init__(self):
        coefs = tuple(sorted((tuple(k), float(c)) for k, c in dict(self.coefficients).items()))
        for k, _ in coefs:
            if len(k) != self.dim:
                raise ValueError(f"wavevector {k} has wrong dimension")
            if all(ki == 0 for ki in k):
                raise ValueError("constant mode k=0 not allowed (zero mean)")
        object.__setattr__(self, "coefficients", coefs)

    def eigenvalue(self, k) -> float:
        return math.pi**2 * sum(ki**2 for ki in k)

    def k_max(self) -> int:
        return max(max(abs(ki) for ki in k) for k, _ in self.coefficients)

    def l2_norm(self) -> float:
        return math.sqrt(sum(c * c for _, c in self.coefficients))


def eigenvalue_of(k) -> float:
    return math.pi**2 * sum(ki**2 for ki in k)


def neumann_eigenfunction(k, n: int | None = None) -> GridFunction:
    """Sample prod_i cos(pi k_i x_i) at cell centers (unnormalized)."""
    k = tuple(int(ki) for ki in k)
    dim = len(k)
    if n is None:
        n = max(8, CELLS_PER_TOP_MODE * max(1, max(abs(ki) for ki in k)))
    x = (np.arange(n) + 0.5) / n
    values = np.ones(())
    for ki in k:
        values = np.multiply.outer(values, np.cos(np.pi * ki * x))
    return GridFunction(dim, n, values.reshape((n,) * dim))


def synthesize(sf: SpectralFunction, n: int | None = None) -> GridFunction:
    """Sum the expansion on a grid (orthonormal cosine normalization)."""
    if n is None:
        n = CELLS_PER_TOP_MODE * sf.k_max()
    x = (np.arange(n) + 0.5) / n
    k_top = sf.k_max()
    cos_tab = np.stack([np.cos(np.pi * k * x) for k in range(k_top + 1)])
    values = np.zeros((n,) * sf.dim)
    for k, c in sf.coefficients:
        term = np.ones(())
        for ki in k:
            factor = math.sqrt(2.0) if ki else 1.0
            term = np.multiply.outer(term, factor * cos_tab[abs(ki)])
        values = values + c * term.reshape((n,) * sf.dim)
    return GridFunction(sf.dim, n, values)


def band_wavevectors(dim: int, lambda_min: float, lambda_cap: float):
    """All k in N0^dim with eigenvalue in [lambda_min, lambda_cap]."""
    k_top = int(math.floor(math.sqrt(lambda_cap) / math.pi))
    ks = []
    for k in np.ndindex(*((k_top + 1,) * dim)):
        lam = eigenvalue_of(k)
        if any(k) and lambda_min <= lam <= lambda_cap:
            ks.append(tuple(k))
    return ks


def highpass_sample(
    lambda_min: float,
    seed: int = 0,
    dim: int = 2,
    coeff_law: str = "uniform",
    lambda_cap: float | None = None,
) -> SpectralFunction:
    """Random expansion over the band lambda_k in [lambda_min, 4 lambda_min].

    Coefficients are iid uniform[-1,1], normalized to unit l2-norm.
    Raises EmptyBand when no eigenvalue falls in the band.
    """
    if lambda_cap is None:
        lambda_cap = LAMBDA_CAP_FACTOR * lambda_min
    ks = band_wavevectors(dim, lambda_min, lambda_cap)
    if not ks:
        raise EmptyBand(f"no eigenvalues in [{lambda_min:.4g}, {lambda_cap:.4g}]")
    if coeff_law != "uniform":
        raise ValueError(f"unknown coefficient law {coeff_law!r}")
    rng = np.random.default_rng(seed)
    coefs = rng.uniform(-1.0, 1.0, len(ks))
    coefs /= np.linalg.norm(coefs)
    return SpectralFunction(dim, tuple(zip(ks, coefs)))


def heat_evolve(sf: SpectralFunction, t: float) -> SpectralFunction:
    """Heat semigroup: multiply each coefficient by exp(-lambda_k t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return SpectralFunction(
        sf.dim,
        tuple((k, c * math.exp(-eigenvalue_of(k) * t)) for k, c in sf.coefficients),
    )


class BandRow(NamedTuple):
    lam: float
    seed: int
    w: float
    l1: float
    linf: float
    nodal: float
    w_over_l1: float
    method: str
    grid_n: int


_row_cache: dict = {}


def band_row(lam: float, seed: int, cfg: SolverConfig | None = None,
             dim: int = 2) -> BandRow:
    """Measure one band sample: transport cost, norms, nodal size.

    Rows are cached per (lam, seed, cfg, dim) so the transport decay and
    nodal growth checks share one set of solves.
    """
    key = (lam, seed, cfg, dim)
    if key in _row_cache:
        return _row_cache[key]
    sf = highpass_sample(lam, seed=seed, dim=dim)
    f = make_zero_mean(synthesize(sf))
    l1, linf = norms(f)
    nodal = nodal_measure(f)
    mu, nu = split_signs(f)
    solve_cfg = cfg
    if solve_cfg is None:
        if max(mu.size, nu.size) <= 1024:
            solve_cfg = SolverConfig(method="exact")
        else:
            solve_cfg = SolverConfig(method="sinkhorn", reg=f.h, support_cap=10000)
    sol = solve_transport(mu, nu, solve_cfg)
    row = BandRow(lam, seed, sol.cost, l1, linf, nodal, sol.cost / l1,
                  sol.method, f.n)
    _row_cache[key] = row
    return row


def seed_band_row_cache(rows, cfgs) -> None:
    """Insert precomputed rows (e.g. from worker processes)."""
    for row, (lam, seed, cfg, dim) in zip(rows, cfgs):
        _row_cache[(lam, seed, cfg, dim)] = row


def _band_table(lambda_list, seeds, cfg: SolverConfig | None, dim: int):
    return tuple(
        band_row(lam, seed, cfg, dim) for lam in lambda_list for seed in seeds
    )


def _fit(xs, ys):
    lx = np.log(xs)
    if np.ptp(lx) == 0:
        return math.nan, float(np.mean(np.log(ys)))
    slope, intercept = np.polyfit(lx, np.log(ys), 1)
    return float(slope), float(intercept)


class BandCheck(NamedTuple):
    rows: tuple
    slope: float
    intercept: float


def heat_bound_check(
    lambda_list, seeds=(0, 1), cfg: SolverConfig | None = None, dim: int = 2
) -> BandCheck:
    """Transport decay of band functions: slope of log(W1/l1) vs log(lambda).

    The heat-flow upper bound predicts about -1/2 up to the log factor.
    """
    rows = _band_table(tuple(lambda_list), tuple(seeds), cfg, dim)
    slope, intercept = _fit([r.lam for r in rows], [r.w_over_l1 for r in rows])
    return BandCheck(rows, slope, intercept)


class NodalGrowthRow(NamedTuple):
    lam: float
    seed: int
    nodal: float
    ratio: float
    quotient: float


def sturm_hurwitz_check(
    lambda_list, seeds=(0, 1), cfg: SolverConfig | None = None, dim: int = 2
) -> BandCheck:
    """Nodal growth of band functions: slope of log(nodal) vs log(lambda).

    Also reports per-sample the quotient of the nodal measure against
    the combined spectral lower bound (sqrt(lambda)/log(lambda)) times
    ratio^(4 - 1/d); the quotient must be positive.
    """
    base = _band_table(tuple(lambda_list), tuple(seeds), cfg, dim)
    slope, intercept = _fit([r.lam for r in base], [r.nodal for r in base])
    rows = []
    alpha = ratio_exponent(dim, p=1.0)
    for r in base:
        if r.nodal <= 0:
            raise ZeroNodal(f"band sample lambda={r.lam} seed={r.seed} has empty nodal set")
        ratio = r.l1 / r.linf
        bound = (math.sqrt(r.lam) / math.log(r.lam)) * ratio**alpha
        rows.append(NodalGrowthRow(r.lam, r.seed, r.nodal, ratio, r.nodal / bound))
    return BandCheck(tuple(rows), slope, intercept)
