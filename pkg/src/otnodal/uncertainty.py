"""Uncertainty products of transport cost against nodal-set size.

For a zero-mean f on [0,1]^d the product W_p(f_+, f_-) * H^{d-1}{f = 0}
is compared against (||f||_1/||f||_inf)^alpha * ||f||_1 with
alpha = 3 - 1/d + 1/p (equal to 4 - 1/d at p = 1).  The module also runs
the cube-partition proof trace (negligible / balanced / unbalanced cube
classification with its count and transport bounds), the critical cube
scale, and the separated-bump scaling sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MisalignedEpsilon, NotZeroMean, TooFewPoints, ZeroNodal
from .families import extremal_family
from .grids import GridFunction, nodal_measure, norms, split_signs
from .transport import SolverConfig, default_config, solve_transport

NEGLIGIBLE = "negligible"
BALANCED = "balanced"
UNBALANCED = "unbalanced"

# classification thresholds from the cube-partition argument
MASS_SHARE = 1.0 / 100.0  # cube holds a non-negligible share of ||f_+||_1
IMBALANCE = 1.0 / 100.0  # negative mass at most this fraction of positive
COUNT_CONST = 49.0 / 50.0  # lower-bound constant for the non-negligible count


def ratio_exponent(d: int, p: float = 1.0) -> float:
    """Exponent on the L1/Linf ratio: 3 - 1/d + 1/p (4 - 1/d at p=1)."""
    return 3.0 - 1.0 / d + 1.0 / p


@dataclass(frozen=True)
class UncertaintyReport:
    w: float
    nodal: float
    l1: float
    linf: float
    ratio: float
    alpha: float
    lhs: float
    rhs: float
    quotient: float
    p: float = 1.0
    method: str = "exact"
    n: int = 0
    dim: int = 0
    aggregation_bound: float = 0.0
    converged: bool = True


def uncertainty_product(
    f: GridFunction, cfg: SolverConfig | None = None
) -> UncertaintyReport:
    """Evaluate the transport-interface product and its lower-bound quotient.

    With cfg=None the solver defaults to exact below 64^2 support atoms
    per side and sinkhorn with reg = h above.
    """
    if not f.is_zero_mean() or not np.any(f.values):
        raise NotZeroMean("uncertainty product needs a zero-mean, nonzero f")
    l1, linf = norms(f)
    ratio = l1 / linf
    nodal = nodal_measure(f)
    mu, nu = split_signs(f)
    if cfg is None:
        cfg = default_config(mu, nu, f.h)
    solve = solve_transport(mu, nu, cfg)
    alpha = ratio_exponent(f.dim, cfg.p)
    lhs = solve.cost * nodal
    rhs = ratio**alpha * l1
    return UncertaintyReport(
        w=solve.cost,
        nodal=nodal,
        l1=l1,
        linf=linf,
        ratio=ratio,
        alpha=alpha,
        lhs=lhs,
        rhs=rhs,
        quotient=lhs / rhs if rhs > 0 else math.inf,
        p=cfg.p,
        method=solve.method,
        n=f.n,
        dim=f.dim,
        aggregation_bound=solve.aggregation_bound,
        converged=solve.converged,
    )


@dataclass(frozen=True)
class CubeDecomposition:
    """Classification of the eps-cube partition plus the proof-step bounds.

    indices, l1_plus, l1_minus and classes are parallel arrays over the
    eps^(-d) cubes in C order.  bounds holds: b_lower, the (49/50)
    eps^(-d) ratio count bound; per_unbalanced_transport, the
    eps^(d+1) l1^2 / linf outward-transport bound; per_balanced_nodal,
    the eps^(d-1) ratio^((d-1)/d) per-cube interface bound; annulus_r,
    the smallest surplus-annulus thickness over unbalanced cubes (nan if
    none).
    """

    epsilon: float
    dim: int
    indices: np.ndarray
    l1_plus: np.ndarray
    l1_minus: np.ndarray
    classes: np.ndarray
    n_negligible: int
    n_b: int
    n_balanced: int
    n_unbalanced: int
    bounds: dict

    def counts_consistent(self) -> bool:
        total = round(self.epsilon**-1) ** self.dim
        return (
            self.n_negligible + self.n_b == total
            and self.n_balanced + self.n_unbalanced == self.n_b
        )


def cube_decomposition(f: GridFunction, epsilon: float) -> CubeDecomposition:
    """Partition [0,1]^d into eps-cubes and classify each one.

    A cube is negligible when eps^(-d) ||f_+||_{L1(Q)} is at most 1/100 of
    ||f_+||_1; a non-negligible cube is unbalanced when its negative mass
    is at most 1/100 of its positive mass, else balanced.

    Raises
    ------
    MisalignedEpsilon
        Unless 1/eps and n*eps are both integers (cubes tile the grid).
    """
    if not f.is_zero_mean():
        raise NotZeroMean("cube decomposition requires a zero-mean f")
    q = 1.0 / epsilon
    m = f.n * epsilon
    if abs(q - round(q)) > 1e-9 or abs(m - round(m)) > 1e-9:
        raise MisalignedEpsilon(f"eps={epsilon} does not tile the n={f.n} grid")
    q = round(q)
    m = round(m)
    d = f.dim
    vol = f.cell_volume
    pos = np.maximum(f.values, 0.0)
    neg = np.maximum(-f.values, 0.0)
    shape = sum(((q, m),) * d, ())
    sum_axes = tuple(range(1, 2 * d, 2))
    l1p = pos.reshape(shape).sum(axis=sum_axes).ravel() * vol
    l1m = neg.reshape(shape).sum(axis=sum_axes).ravel() * vol

    l1, linf = norms(f)
    pos_total = l1 / 2.0  # zero mean: positive and negative parts balance
    negligible = (q**d) * l1p <= MASS_SHARE * pos_total
    unbalanced = ~negligible & (l1m <= IMBALANCE * l1p)
    classes = np.full(l1p.shape, BALANCED, dtype=object)
    classes[negligible] = NEGLIGIBLE
    classes[unbalanced] = UNBALANCED

    ratio = l1 / linf
    n_unb = int(unbalanced.sum())
    if n_unb:
        r_min = (
            (1.0 / (2.0 * d)) * epsilon ** (1 - d) * l1p[unbalanced].min() / linf
        )
    else:
        r_min = math.nan
    bounds = {
        "b_lower": COUNT_CONST * epsilon ** (-d) * ratio,
        "per_unbalanced_transport": epsilon ** (d + 1) * l1**2 / linf,
        "per_balanced_nodal": epsilon ** (d - 1) * ratio ** ((d - 1) / d),
        "annulus_r": r_min,
    }
    return CubeDecomposition(
        epsilon=epsilon,
        dim=d,
        indices=np.arange(l1p.size),
        l1_plus=l1p,
        l1_minus=l1m,
        classes=classes,
        n_negligible=int(negligible.sum()),
        n_b=int((~negligible).sum()),
        n_balanced=int((~negligible & ~unbalanced).sum()),
        n_unbalanced=n_unb,
        bounds=bounds,
    )


def critical_scale(f: GridFunction, nodal: float) -> float:
    """Cube scale ratio^(2-1/d) / nodal that balances the two cube classes.

    Returns the raw value clamped to at most 1; ZeroNodal if the nodal
    measure vanishes.  The admissibility chain eps <= ratio (up to the
    isoperimetric constant) holds because nodal >= c ratio^((d-1)/d).
    """
    if nodal <= 0:
        raise ZeroNodal("critical scale undefined for an empty nodal set")
    l1, linf = norms(f)
    ratio = l1 / linf
    return min(1.0, ratio ** (2.0 - 1.0 / f.dim) / nodal)


def align_epsilon(eps: float, n: int) -> float:
    """Largest grid-aligned cube scale 1/q <= eps with q dividing n."""
    eps = min(1.0, eps)
    for q in range(max(1, math.ceil(1.0 / eps)), n + 1):
        if n % q == 0:
            return 1.0 / q
    return 1.0 / n


@dataclass(frozen=True)
class SweepRow:
    d: int
    n: int
    eps: float
    ratio: float
    w: float
    nodal: float
    lhs: float
    rhs: float
    quotient: float
    method: str
    grid_n: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    slope: float
    intercept: float
    target_slope: float


def scaling_sweep(
    d: int,
    n: int,
    eps_list,
    cfg: SolverConfig | None = None,
    grid_n: int | None = None,
) -> SweepResult:
    """Product-versus-ratio scaling of the separated-bump family.

    For fixed bump count n and each eps in eps_list, measures the report
    of the extremal family and fits the least-squares slope of log(lhs)
    against log(ratio); the construction's analytic slope is (d-1)/d.
    """
    eps_list = list(eps_list)
    if len(eps_list) < 2:
        raise TooFewPoints("scaling sweep needs at least two eps values")
    rows = []
    for eps in sorted(eps_list, reverse=True):
        f = extremal_family(d, n, eps, grid_n=grid_n)
        sweep_cfg = cfg
        if sweep_cfg is None:
            sweep_cfg = SolverConfig(
                method="sinkhorn", reg=2.0 * f.h, support_cap=20000
            )
        rep = uncertainty_product(f, sweep_cfg)
        rows.append(
            SweepRow(
                d=d,
                n=n,
                eps=eps,
                ratio=rep.ratio,
                w=rep.w,
                nodal=rep.nodal,
                lhs=rep.lhs,
                rhs=rep.rhs,
                quotient=rep.quotient,
                method=rep.method,
                grid_n=f.n,
            )
        )
    lx = np.log([r.ratio for r in rows])
    ly = np.log([r.lhs for r in rows])
    slope, intercept = np.polyfit(lx, ly, 1)
    return SweepResult(tuple(rows), float(slope), float(intercept), (d - 1) / d)
