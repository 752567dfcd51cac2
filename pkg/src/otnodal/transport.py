"""Exact and entropic optimal transport between discrete measures.

`wp_exact` solves the Kantorovich problem on the complete bipartite support
graph with Euclidean ground distance raised to the p-th power.  1-D
instances use the monotone coupling; higher dimensions go through the
HiGHS LP.  Every exact solve carries a dual certificate (potentials with
phi_i + psi_j <= c_ij and equality on active pairs).

`sinkhorn` is a log-stabilized entropic solver with eps-scaling used for
instances too large for the LP; its reported cost is the cost of a rounded
feasible plan, hence an upper bound on the exact cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import EmptySupport, MassMismatch, NotZeroMean, WrongDimension
from .grids import DiscreteMeasure, GridFunction

MASS_FLOOR_REL = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Transport solver configuration.

    method is "exact" or "sinkhorn"; reg is the entropic regularization
    strength (required > 0 for sinkhorn); support_cap, when set, block-
    aggregates any measure with more atoms before solving and records the
    aggregation cost as an error bound.
    """

    method: str = "exact"
    p: float = 1.0
    reg: float = 1e-3
    max_iter: int = 5000
    feasibility_tol: float = 1e-9
    duality_tol: float = 1e-9
    support_cap: int | None = None

    def __post_init__(self):
        if self.method not in ("exact", "sinkhorn"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.method == "sinkhorn" and not self.reg > 0:
            raise ValueError("sinkhorn requires reg > 0")


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling on the support pairs, with its dual certificate.

    pairs is an (K, 3) array of (source index, target index, mass); cost is
    sum(mass * |x_i - y_j|^p), i.e. before the p-th root.  phi/psi are the
    dual potentials on the mu/nu atoms.
    """

    pairs: np.ndarray
    cost: float
    p: float
    phi: np.ndarray
    psi: np.ndarray
    marginal_error: float
    duality_gap: float


class SinkhornResult(NamedTuple):
    cost: float
    converged: bool
    marginal_error: float
    iterations: int


class CertificateReport(NamedTuple):
    marginal_error_mu: float
    marginal_error_nu: float
    dual_feasibility_gap: float
    complementary_gap: float
    ok: bool


def _prune(mu: DiscreteMeasure) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    floor = MASS_FLOOR_REL * mu.total_mass()
    keep = np.nonzero(mu.masses > floor)[0]
    return mu.points[keep], mu.masses[keep].copy(), keep


def _validate_pair(mu: DiscreteMeasure, nu: DiscreteMeasure, feasibility_tol: float):
    if mu.size == 0 or nu.size == 0:
        raise EmptySupport("both measures need at least one atom")
    if mu.dim != nu.dim:
        raise WrongDimension(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    a, b = mu.total_mass(), nu.total_mass()
    if a <= 0 or b <= 0:
        raise EmptySupport("both measures need positive mass")
    if abs(a - b) > feasibility_tol * max(a, b):
        raise MassMismatch(f"total masses differ: {a:.6e} vs {b:.6e}")


def _cost_matrix(xa: np.ndarray, xb: np.ndarray, p: float, dtype=float) -> np.ndarray:
    d2 = ((xa[:, None, :] - xb[None, :, :]) ** 2).sum(-1)
    C = np.sqrt(d2, dtype=dtype)
    if p != 1:
        C = C**p
    return C


def wp_exact(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: float = 1.0,
    feasibility_tol: float = 1e-9,
    duality_tol: float = 1e-9,
) -> tuple[float, TransportPlan]:
    """Exact p-Wasserstein distance between two discrete measures.

    Returns the p-th root of the optimal total cost together with the
    optimal plan.  Atoms below 1e-14 of the total mass are dropped and the
    second measure is rescaled to balance exactly.

    Raises
    ------
    MassMismatch
        If total masses differ by more than feasibility_tol relative.
    EmptySupport
        If either support is empty.
    """
    _validate_pair(mu, nu, feasibility_tol)
    xa, a, keep_a = _prune(mu)
    xb, b, keep_b = _prune(nu)
    if len(a) == 0 or len(b) == 0:
        raise EmptySupport("support empty after mass-floor pruning")
    b *= a.sum() / b.sum()

    if mu.dim == 1:
        plan = _monotone_1d(xa[:, 0], a, xb[:, 0], b, p)
        report = check_plan(plan, xa, a, xb, b, feasibility_tol, duality_tol)
        if not report.ok:
            plan = _lp_plan(xa, a, xb, b, p)
    else:
        plan = _lp_plan(xa, a, xb, b, p)
    if len(keep_a) < mu.size or len(keep_b) < nu.size:
        plan = _unprune_plan(plan, mu, nu, keep_a, keep_b, xa, xb, p)
    return plan.cost ** (1.0 / p), plan


def _unprune_plan(plan, mu, nu, keep_a, keep_b, xa, xb, p) -> TransportPlan:
    # re-index onto the original atoms; dropped atoms get c-transform
    # potentials so dual feasibility holds on every support pair
    pairs = plan.pairs.copy()
    if len(pairs):
        pairs[:, 0] = keep_a[pairs[:, 0].astype(int)]
        pairs[:, 1] = keep_b[pairs[:, 1].astype(int)]
    phi = np.empty(mu.size)
    psi = np.empty(nu.size)
    phi[keep_a] = plan.phi
    psi[keep_b] = plan.psi
    for i in np.setdiff1d(np.arange(mu.size), keep_a):
        c = np.linalg.norm(mu.points[i] - xb, axis=1) ** p
        phi[i] = (c - plan.psi).min()
    for j in np.setdiff1d(np.arange(nu.size), keep_b):
        c = np.linalg.norm(nu.points[j] - xa, axis=1) ** p
        psi[j] = (c - plan.phi).min()
    return _finish_plan(
        pairs, plan.cost, p, phi, psi, mu.points, mu.masses, nu.points, nu.masses
    )


def _finish_plan(pairs, cost, p, phi, psi, xa, a, xb, b) -> TransportPlan:
    pairs = np.asarray(pairs, dtype=float)
    row = np.zeros(len(a))
    col = np.zeros(len(b))
    if len(pairs):
        np.add.at(row, pairs[:, 0].astype(int), pairs[:, 2])
        np.add.at(col, pairs[:, 1].astype(int), pairs[:, 2])
    marg = max(np.abs(row - a).max(), np.abs(col - b).max())
    if len(pairs):
        i = pairs[:, 0].astype(int)
        j = pairs[:, 1].astype(int)
        c_act = np.linalg.norm(xa[i] - xb[j], axis=1) ** p
        cs = float(np.abs(phi[i] + psi[j] - c_act).max())
    else:
        cs = 0.0
    return TransportPlan(pairs, float(cost), p, phi, psi, float(marg), cs)


def _monotone_1d(xa, a, xb, b, p) -> TransportPlan:
    """Monotone (quantile) coupling; optimal for convex costs on the line."""
    ia = np.argsort(xa, kind="stable")
    ib = np.argsort(xb, kind="stable")
    xs, ms = xa[ia], a[ia].copy()
    xt, mt = xb[ib], b[ib].copy()
    pairs = []
    cost = 0.0
    i = j = 0
    while i < len(xs) and j < len(xt):
        m = min(ms[i], mt[j])
        if m > 0:
            cost += m * abs(xs[i] - xt[j]) ** p
            pairs.append((ia[i], ib[j], m))
        ms[i] -= m
        mt[j] -= m
        if ms[i] <= 0:
            i += 1
        if mt[j] <= 0:
            j += 1
    if p == 1:
        phi, psi = _potentials_1d_w1(xa, a, xb, b)
    else:
        phi, psi = _potentials_1d_chain(xa, xb, pairs, p)
    return _finish_plan(pairs, cost, p, phi, psi, xa[:, None], a, xb[:, None], b)


def _potentials_1d_w1(xa, a, xb, b):
    # Kantorovich potential phi with phi' = -sign(F), F the CDF difference
    z = np.concatenate([xa, xb])
    w = np.concatenate([a, -b])
    order = np.argsort(z, kind="stable")
    zs, ws = z[order], w[order]
    F = np.cumsum(ws)
    gaps = np.diff(zs)
    slope = -np.sign(F[:-1])
    vals = np.concatenate([[0.0], np.cumsum(slope * gaps)])
    phi_all = np.empty_like(vals)
    phi_all[order] = vals
    return phi_all[: len(xa)], -phi_all[len(xa):]


def _potentials_1d_chain(xa, xb, pairs, p):
    # propagate potentials along the monotone chain; psi from the c-transform
    phi = np.full(len(xa), np.nan)
    psi = np.full(len(xb), np.nan)
    for i, j, _ in pairs:
        i, j = int(i), int(j)
        c = abs(xa[i] - xb[j]) ** p
        if np.isnan(phi[i]) and np.isnan(psi[j]):
            phi[i] = 0.0
            psi[j] = c
        elif np.isnan(psi[j]):
            psi[j] = c - phi[i]
        elif np.isnan(phi[i]):
            phi[i] = c - psi[j]
    phi = np.nan_to_num(phi)
    # exact c-transform keeps feasibility even across independent blocks
    C = np.abs(xa[:, None] - xb[None, :]) ** p
    psi = (C - phi[:, None]).min(axis=0)
    return phi, psi


def _lp_plan(xa, a, xb, b, p) -> TransportPlan:
    m, k = len(a), len(b)
    C = _cost_matrix(xa, xb, p)
    rows = np.repeat(np.arange(m), k)
    cols = np.tile(np.arange(k), m) + m
    var = np.arange(m * k)
    A = sparse.csr_matrix(
        (
            np.ones(2 * m * k),
            (np.concatenate([rows, cols]), np.concatenate([var, var])),
        ),
        shape=(m + k, m * k),
    )
    res = linprog(
        C.ravel(),
        A_eq=A,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    X = res.x.reshape(m, k)
    duals = res.eqlin.marginals
    phi, psi = duals[:m].copy(), duals[m:].copy()
    nz = np.nonzero(X > MASS_FLOOR_REL * a.sum())
    pairs = np.column_stack([nz[0], nz[1], X[nz]])
    cost = float((X * C).sum())
    return _finish_plan(pairs, cost, p, phi, psi, xa, a, xb, b)


def check_plan(
    plan: TransportPlan,
    xa,
    a,
    xb,
    b,
    feasibility_tol: float = 1e-9,
    duality_tol: float = 1e-9,
) -> CertificateReport:
    """Validate marginals and the dual certificate of an exact plan.

    Feasibility: phi_i + psi_j <= c_ij on all support pairs; equality on
    active pairs within duality_tol; marginals within feasibility_tol
    relative to total mass.
    """
    xa = np.atleast_2d(xa.T).T if xa.ndim == 1 else xa
    xb = np.atleast_2d(xb.T).T if xb.ndim == 1 else xb
    mass = float(np.sum(a))
    row = np.zeros(len(a))
    col = np.zeros(len(b))
    if len(plan.pairs):
        np.add.at(row, plan.pairs[:, 0].astype(int), plan.pairs[:, 2])
        np.add.at(col, plan.pairs[:, 1].astype(int), plan.pairs[:, 2])
    err_mu = float(np.abs(row - a).max())
    err_nu = float(np.abs(col - b).max())
    C = _cost_matrix(np.asarray(xa, float), np.asarray(xb, float), plan.p)
    feas = float((plan.phi[:, None] + plan.psi[None, :] - C).max())
    scale = max(1.0, float(np.abs(C).max()))
    ok = (
        err_mu <= feasibility_tol * max(mass, 1e-300)
        and err_nu <= feasibility_tol * max(mass, 1e-300)
        and feas <= duality_tol * scale
        and plan.duality_gap <= duality_tol * scale
    )
    return CertificateReport(err_mu, err_nu, feas, plan.duality_gap, ok)


def w1_1d_oracle(f: GridFunction) -> float:
    """Independent 1-D W1 oracle: integral of |F| for F the primitive of f.

    Computed by cumulative sums of the cell values; for the atomic
    cell-center measures this equals the exact W1 of split_signs(f).
    """
    if f.dim != 1:
        raise WrongDimension("oracle only defined for dim=1")
    if not f.is_zero_mean():
        raise NotZeroMean("oracle requires a zero-mean function")
    F = np.cumsum(f.values) * f.h
    return float(np.abs(F[:-1]).sum() * f.h)


# ---------------------------------------------------------------------------
# entropic solver
# ---------------------------------------------------------------------------


def sinkhorn(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: float = 1.0,
    reg: float = 1e-3,
    max_iter: int = 5000,
    feasibility_tol: float = 1e-6,
    reg_start: float = 0.25,
    reg_scaling: float = 0.5,
    stage_iters: int = 300,
) -> SinkhornResult:
    """Entropically regularized transport cost (log-stabilized, eps-scaled).

    Iterations are kernel matvecs with periodic absorption of the scaling
    factors into the potentials; the regularization is annealed from
    reg_start down to reg.  The returned cost is the transport cost of the
    rounded feasible plan (an upper bound on the exact cost).  converged
    is True iff the row-marginal violation fell below feasibility_tol
    relative to the total mass; on failure the best iterate is still
    returned (soft NotConverged).
    """
    if not reg > 0:
        raise ValueError("reg must be > 0")
    _validate_pair(mu, nu, feasibility_tol=np.inf)
    xa, a, _ = _prune(mu)
    xb, b, _ = _prune(nu)
    if len(a) == 0 or len(b) == 0:
        raise EmptySupport("support empty after mass-floor pruning")
    b = b * (a.sum() / b.sum())
    dtype = np.float64 if len(a) * len(b) <= 4_000_000 else np.float32
    C = _cost_matrix(xa, xb, p, dtype=dtype)
    mass = a.sum()
    tol = feasibility_tol * mass

    f = np.zeros(len(a))
    g = np.zeros(len(b))
    regs = [reg]
    r = reg
    while r < reg_start * 0.999:
        r /= reg_scaling
        regs.append(min(r, reg_start))
    regs = regs[::-1]

    total_it = 0
    err = np.inf
    for rg in regs:
        last = rg == regs[-1]
        K = np.exp((f[:, None] + g[None, :] - C) / rg, dtype=dtype)
        u = np.ones(len(a))
        v = np.ones(len(b))
        n_it = max_iter if last else stage_iters
        it = 0
        while it < n_it:
            Kv = (K @ v.astype(dtype)).astype(float)
            u = a / np.maximum(Kv, 1e-300)
            Ktu = (K.T @ u.astype(dtype)).astype(float)
            v = b / np.maximum(Ktu, 1e-300)
            it += 1
            total_it += 1
            spike = max(u.max(), v.max()) > 1e200
            if spike or it % 20 == 0 or it == n_it:
                row = u * (K @ v.astype(dtype)).astype(float)
                err = float(np.abs(row - a).max())
                if err < (tol if last else 50 * tol) and not spike:
                    break
                if spike:
                    f = f + rg * np.log(np.maximum(u, 1e-300))
                    g = g + rg * np.log(np.maximum(v, 1e-300))
                    K = np.exp((f[:, None] + g[None, :] - C) / rg, dtype=dtype)
                    u = np.ones(len(a))
                    v = np.ones(len(b))
        f = f + rg * np.log(np.maximum(u, 1e-300))
        g = g + rg * np.log(np.maximum(v, 1e-300))

    # round to a feasible plan without leaving the working dtype; the
    # rank-1 marginal correction enters the cost as a matvec only
    P = np.exp((f[:, None] + g[None, :] - C) / regs[-1], dtype=dtype)
    r1 = P.sum(1, dtype=np.float64)
    P *= np.minimum(1.0, a / np.maximum(r1, 1e-300)).astype(dtype)[:, None]
    c1 = P.sum(0, dtype=np.float64)
    P *= np.minimum(1.0, b / np.maximum(c1, 1e-300)).astype(dtype)[None, :]
    da = np.maximum(a - P.sum(1, dtype=np.float64), 0.0)
    db = np.maximum(b - P.sum(0, dtype=np.float64), 0.0)
    cost_p = 0.0
    step = max(1, int(4e6 // max(1, P.shape[1])))
    for lo in range(0, P.shape[0], step):
        hi = lo + step
        cost_p += float((P[lo:hi] * C[lo:hi]).sum(dtype=np.float64))
    if da.sum() > 1e-300:
        Cdb = (C @ db.astype(dtype)).astype(np.float64)
        cost_p += float(da @ Cdb) / float(da.sum())
    return SinkhornResult(cost_p ** (1.0 / p), err <= tol, err, total_it)


# ---------------------------------------------------------------------------
# aggregation and the solve policy
# ---------------------------------------------------------------------------


def coarsen_measure(mu: DiscreteMeasure, block: float) -> tuple[DiscreteMeasure, float]:
    """Aggregate atoms onto cubic blocks of side `block`.

    Each block's atoms merge into one atom at their mass-weighted centroid.
    Returns the aggregated measure and the exact aggregation transport cost
    sum(m_i |x_i - centroid|), which by the triangle inequality bounds the
    change of any W1 distance against a fixed second measure.
    """
    keys = np.floor(mu.points / block).astype(np.int64)
    span = int(np.ceil(1.0 / block)) + 2
    mult = span ** np.arange(mu.dim, dtype=np.int64)
    flat = keys @ mult
    order = np.argsort(flat, kind="stable")
    flat_s = flat[order]
    _, start = np.unique(flat_s, return_index=True)
    m_s = mu.masses[order]
    p_s = mu.points[order]
    msum = np.add.reduceat(m_s, start)
    cent = np.add.reduceat(p_s * m_s[:, None], start) / msum[:, None]
    cent = np.clip(cent, 0.0, 1.0)
    inv = np.repeat(np.arange(len(start)), np.diff(np.append(start, len(flat_s))))
    moved = np.linalg.norm(p_s - cent[inv], axis=1)
    bound = float((m_s * moved).sum())
    return DiscreteMeasure(cent, msum), bound


class TransportSolve(NamedTuple):
    cost: float
    method: str
    converged: bool
    aggregation_bound: float
    plan: TransportPlan | None


def default_config(mu: DiscreteMeasure, nu: DiscreteMeasure, h: float) -> SolverConfig:
    """Default policy: exact up to 64^2 support atoms per side, else sinkhorn
    with reg equal to the grid spacing; very large supports are aggregated
    first to keep the kernel matrix in memory."""
    size = max(mu.size, nu.size)
    if size <= 64**2:
        return SolverConfig(method="exact")
    cap = 12000 if size > 12000 else None
    return SolverConfig(method="sinkhorn", reg=h, support_cap=cap)


def solve_transport(
    mu: DiscreteMeasure, nu: DiscreteMeasure, cfg: SolverConfig
) -> TransportSolve:
    """Solve transport under a config, applying support_cap aggregation.

    When a side exceeds cfg.support_cap atoms it is block-aggregated with
    the block size doubling until under the cap; the summed aggregation
    transport cost is returned as aggregation_bound.
    """
    bound = 0.0
    if cfg.support_cap is not None:
        sides = []
        for m in (mu, nu):
            b = 0.0
            block = 1.0 / max(2, int(np.ceil(cfg.support_cap ** (1.0 / m.dim))))
            while m.size > cfg.support_cap:
                m, db = coarsen_measure(m, block)
                b += db
                block *= 2.0
            sides.append((m, b))
        (mu, b1), (nu, b2) = sides
        bound = b1 + b2
        total = mu.total_mass()
        nu = DiscreteMeasure(nu.points, nu.masses * (total / nu.total_mass()))
    if cfg.method == "exact":
        cost, plan = wp_exact(mu, nu, cfg.p, cfg.feasibility_tol, cfg.duality_tol)
        return TransportSolve(cost, "exact", True, bound, plan)
    res = sinkhorn(
        mu,
        nu,
        p=cfg.p,
        reg=cfg.reg,
        max_iter=cfg.max_iter,
        feasibility_tol=max(cfg.feasibility_tol, 1e-7),
    )
    return TransportSolve(res.cost, "sinkhorn", res.converged, bound, None)


def emd_exact_matrix(a: np.ndarray, b: np.ndarray, C: np.ndarray):
    """Exact transport for an explicit cost matrix (used for cross-checks,
    e.g. shortest-path ground metrics on graphs).  Returns (cost, plan
    matrix, potentials)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    b = b * (a.sum() / b.sum())
    m, k = len(a), len(b)
    rows = np.repeat(np.arange(m), k)
    cols = np.tile(np.arange(k), m) + m
    var = np.arange(m * k)
    A = sparse.csr_matrix(
        (
            np.ones(2 * m * k),
            (np.concatenate([rows, cols]), np.concatenate([var, var])),
        ),
        shape=(m + k, m * k),
    )
    res = linprog(
        np.asarray(C, float).ravel(),
        A_eq=A,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    duals = res.eqlin.marginals
    return float(res.fun), res.x.reshape(m, k), (duals[:m], duals[m:])
