"""Deterministic test-function families on the unit cube.

Families: random trigonometric polynomials over the Neumann cosine basis,
piecewise-constant block patterns, and the separated-bump construction
(n bumps of radius eps on a shifted lattice over a constant negative
level).  All outputs are recentered to zero mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EpsTooLarge, ResolutionTooCoarse, UnknownFamily
from .grids import GridFunction, make_zero_mean


@dataclass(frozen=True)
class FamilySpec:
    """Specification of a corpus function.

    family: "trig", "piecewise", "bump" or "constant".
    n is the grid resolution (cells per axis).  For the bump family,
    n_bumps and eps describe the construction and n may be omitted to get
    the default resolution (8 cells across a bump radius).
    """

    family: str
    dim: int = 2
    n: int | None = None
    seed: int = 0
    k_max: int = 3
    decay: float = 0.0
    n_bumps: int | None = None
    eps: float | None = None


def ball_volume(dim: int, radius: float) -> float:
    if dim == 1:
        return 2.0 * radius
    if dim == 2:
        return math.pi * radius**2
    return 4.0 / 3.0 * math.pi * radius**3


def trig_polynomial(
    dim: int, n: int, k_max: int = 3, decay: float = 0.0, seed: int = 0
) -> GridFunction:
    """Random trig polynomial over nonconstant Neumann cosine modes.

    Coefficients are uniform[-1,1] damped by (1+|k|^2)^(-decay/2) on the
    modes 0 < max_i k_i <= k_max; the sample is recentered to zero mean.
    """
    rng = np.random.default_rng(seed)
    x = (np.arange(n) + 0.5) / n
    cos_tab = np.stack([np.cos(np.pi * k * x) for k in range(k_max + 1)])
    values = np.zeros((n,) * dim)
    for k in np.ndindex(*((k_max + 1,) * dim)):
        if all(ki == 0 for ki in k):
            continue
        coef = rng.uniform(-1.0, 1.0) * (1.0 + sum(ki**2 for ki in k)) ** (-decay / 2)
        term = cos_tab[k[0]]
        for ki in k[1:]:
            term = np.multiply.outer(term, cos_tab[ki])
        values = values + coef * term
    return make_zero_mean(GridFunction(dim, n, values))


def piecewise_blocks(dim: int, n: int, blocks: int = 4, seed: int = 0) -> GridFunction:
    """Piecewise-constant random levels on a blocks^dim partition."""
    if n % blocks:
        raise ValueError("blocks must divide n")
    rng = np.random.default_rng(seed)
    levels = rng.uniform(-1.0, 1.0, (blocks,) * dim)
    reps = n // blocks
    values = levels
    for axis in range(dim):
        values = np.repeat(values, reps, axis=axis)
    return make_zero_mean(GridFunction(dim, n, values))


def _bump_centers(dim: int, n_bumps: int) -> np.ndarray:
    m = max(1, math.ceil(n_bumps ** (1.0 / dim)))
    while m**dim < n_bumps:
        m += 1
    sites = np.stack(
        np.meshgrid(*([np.arange(m)] * dim), indexing="ij"), axis=-1
    ).reshape(-1, dim)
    return (sites[:n_bumps] + 0.5) / m


def extremal_family(
    d: int, n: int, eps: float, grid_n: int | None = None
) -> GridFunction:
    """n separated bumps of radius eps over a constant negative level.

    Bumps sit on a shifted regular lattice (separation ~ n^(-1/d)); each
    bump is a plateau of height eps^(-d)/n with a piecewise-linear skirt
    about two cells wide whose zero crossing lies on the sphere of radius
    eps, so the sampled function is continuous at grid scale and the
    nodal estimate recovers the n sphere interfaces.  The output is
    exactly zero-mean.

    Raises
    ------
    EpsTooLarge
        If eps > n^(-1/d)/4 (bumps would not be separated).
    ResolutionTooCoarse
        If the grid spacing exceeds eps/8.
    """
    sep = n ** (-1.0 / d)
    if eps > sep / 4.0:
        raise EpsTooLarge(f"eps={eps} exceeds separation/4={sep / 4:.4g}")
    if grid_n is None:
        grid_n = int(math.ceil(8.0 / eps))
    h = 1.0 / grid_n
    if h > eps / 8.0:
        raise ResolutionTooCoarse(f"grid h={h:.4g} exceeds eps/8={eps / 8:.4g}")

    amp = eps ** (-d) / n
    c_est = amp * n * ball_volume(d, eps)  # continuum mean of the bump sum
    centers = _bump_centers(d, n)
    x = (np.arange(grid_n) + 0.5) * h
    axes = np.meshgrid(*([x] * d), indexing="ij")
    values = np.zeros((grid_n,) * d)
    for ck in centers:
        d2 = np.zeros_like(values)
        for axis_vals, c in zip(axes, ck):
            d2 += (axis_vals - c) ** 2
        dist = np.sqrt(d2)
        near = dist <= eps + 2 * h
        dn = dist[near]
        # plateau to eps-h, then linear skirt of slope c_est/h crossing the
        # zero level (global offset c_est) exactly on the sphere of radius eps
        skirt = np.clip(c_est * (2.0 - (dn - (eps - h)) / h), 0.0, 2.0 * c_est)
        bump = np.where(dn <= eps - h, amp, skirt)
        patch = values[near]
        values[near] = patch + bump
    return make_zero_mean(GridFunction(d, grid_n, values))


def sample_family(spec: FamilySpec) -> GridFunction:
    """Build a reproducible GridFunction from a FamilySpec.

    Raises
    ------
    UnknownFamily
        For unrecognized family names.
    AllConstant
        For the "constant" family (propagated from centering).
    """
    if spec.family == "trig":
        n = spec.n if spec.n is not None else 128
        return trig_polynomial(spec.dim, n, spec.k_max, spec.decay, spec.seed)
    if spec.family == "piecewise":
        n = spec.n if spec.n is not None else 128
        return piecewise_blocks(spec.dim, n, seed=spec.seed)
    if spec.family == "bump":
        if spec.n_bumps is None or spec.eps is None:
            raise ValueError("bump family needs n_bumps and eps")
        return extremal_family(spec.dim, spec.n_bumps, spec.eps, grid_n=spec.n)
    if spec.family == "constant":
        n = spec.n if spec.n is not None else 4
        return make_zero_mean(GridFunction(spec.dim, n, np.zeros((n,) * spec.dim)))
    raise UnknownFamily(f"unknown family {spec.family!r}")
