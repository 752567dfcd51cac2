"""Discrete analogue on finite graphs: transport, sign boundaries, designs.

W1 between the positive and negative parts of a zero-mean vertex function
is the minimum of sum_e length(e) |J(e)| over edge flows with divergence
f (equivalently, transport under the shortest-path metric); the sign
boundary counts edges from {f > 0} to its complement.  A vertex subset is
scored by how many Laplacian eigenfunctions its centered indicator
integrates exactly, counted by whole eigenspaces with the constant
included; `search_designs` enumerates subsets maximizing that count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import BadSubset, Disconnected, NotZeroMean, TooLargeForExhaustive

DESIGN_TOL = 1e-8
SPECTRUM_TOL = 1e-9
EXHAUSTIVE_CAP = 10**7


@dataclass(frozen=True)
class Graph:
    """Simple connected undirected graph with 1-based vertex labels."""

    n: int
    edges: tuple  # ((u, v), ...) with u < v
    weights: tuple | None = None  # positive edge lengths, default all 1

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ValueError(f"edge ({u},{v}) out of range 1..{self.n}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(norm))
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != len(norm) or any(x <= 0 for x in w):
                raise ValueError("weights must be positive, one per edge")
            object.__setattr__(self, "weights", w)
        if not self._connected():
            raise Disconnected("graph is not connected")

    def _connected(self) -> bool:
        adj = self.adjacency_lists()
        seen = {1}
        stack = [1]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    def adjacency_lists(self):
        adj = {v: [] for v in range(1, self.n + 1)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def edge_lengths(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.edges))
        return np.asarray(self.weights)

    def laplacian(self) -> np.ndarray:
        L = np.zeros((self.n, self.n))
        for (u, v), w in zip(self.edges, self.edge_lengths()):
            L[u - 1, u - 1] += w
            L[v - 1, v - 1] += w
            L[u - 1, v - 1] -= w
            L[v - 1, u - 1] -= w
        return L


@dataclass(frozen=True)
class VertexFunction:
    values: np.ndarray
    zero_mean: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, float).copy()
        if self.zero_mean and abs(v.sum()) > 1e-12 * max(1.0, np.abs(v).sum()):
            raise NotZeroMean(f"vertex values sum to {v.sum():.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def centered_indicator(g: Graph, subset) -> VertexFunction:
    """chi_S - |S|/n, the zero-mean indicator of a vertex subset."""
    subset = _check_subset(g, subset, allow_full=True)
    v = np.full(g.n, -len(subset) / g.n)
    v[[s - 1 for s in subset]] += 1.0
    return VertexFunction(v)


# ---------------------------------------------------------------------------
# built-in graphs
# ---------------------------------------------------------------------------

_CYCLE24 = tuple((i, i + 1) for i in range(1, 24)) + ((1, 24),)

# 24-cycle plus twelve chords; vertex numbering follows the drawing.
_NAURU_CHORDS = (
    (1, 6), (2, 17), (3, 10), (4, 21), (5, 14), (7, 12),
    (8, 23), (9, 16), (11, 20), (13, 18), (15, 22), (19, 24),
)

# 24-cycle plus twelve chords; (12, 24) completes 3-regularity (the unique
# degree-2 pair), giving the girth-7 (3,7)-cage.
_MCGEE_CHORDS = (
    (1, 8), (2, 19), (3, 15), (4, 11), (5, 22), (6, 18),
    (7, 14), (9, 21), (10, 17), (13, 20), (16, 23), (12, 24),
)

NAURU_DESIGN = frozenset({7, 10, 14, 17, 21, 24})
MCGEE_DESIGN = frozenset({4, 7, 8, 11, 16, 19, 20, 23})


def nauru_graph() -> Graph:
    return Graph(24, _CYCLE24 + _NAURU_CHORDS)


def mcgee_graph() -> Graph:
    return Graph(24, _CYCLE24 + _MCGEE_CHORDS)


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(1, n)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(1, n)) + ((1, n),))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple(itertools.combinations(range(1, n + 1), 2)))


def load_graph(name_or_path: str) -> Graph:
    """Resolve a built-in name (nauru, mcgee, path:N, cycle:N, complete:N)
    or read a plain-text edge list (one 1-based "u v" pair per line)."""
    name = name_or_path.strip().lower()
    if name == "nauru":
        return nauru_graph()
    if name == "mcgee":
        return mcgee_graph()
    for prefix, builder in (("path", path_graph), ("cycle", cycle_graph),
                            ("complete", complete_graph)):
        if name.startswith(prefix + ":"):
            return builder(int(name.split(":", 1)[1]))
    edges = []
    with open(name_or_path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                u, v = line.split()
                edges.append((int(u), int(v)))
    n = max(max(e) for e in edges)
    return Graph(n, tuple(edges))


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns
    groups: tuple  # index tuples per eigenspace (equal eigenvalues)


_spectrum_cache: dict = {}


def laplacian_spectrum(g: Graph, spectrum_tol: float = SPECTRUM_TOL) -> Spectrum:
    """Dense eigendecomposition of L = D - A with eigenvalue grouping.

    Eigenvalues within spectrum_tol (relative) of each other form one
    eigenspace; the first eigenvalue is 0 with the constant eigenvector.
    """
    key = (g.edges, g.weights, g.n, spectrum_tol)
    if key in _spectrum_cache:
        return _spectrum_cache[key]
    vals, vecs = np.linalg.eigh(g.laplacian())
    groups = []
    for i, v in enumerate(vals):
        if groups and abs(v - vals[groups[-1][0]]) <= spectrum_tol * max(1.0, abs(v)):
            groups[-1].append(i)
        else:
            groups.append([i])
    spec = Spectrum(vals, vecs, tuple(tuple(gp) for gp in groups))
    _spectrum_cache[key] = spec
    return spec


# ---------------------------------------------------------------------------
# transport and boundary
# ---------------------------------------------------------------------------


class GraphFlow(NamedTuple):
    cost: float
    flow: np.ndarray  # signed flow per edge, positive along u -> v
    potentials: np.ndarray


def graph_w1(g: Graph, f: VertexFunction) -> tuple[float, GraphFlow]:
    """W1 between the positive and negative parts of a zero-mean f.

    Solves the divergence-constrained flow LP (two arcs per edge); the LP
    multipliers are vertex potentials, 1-Lipschitz along edges and tight
    on active ones.
    """
    v = f.values
    if abs(v.sum()) > 1e-12 * max(1.0, np.abs(v).sum()):
        raise NotZeroMean("graph transport needs a zero-mean vertex function")
    m = len(g.edges)
    lengths = g.edge_lengths()
    cost = np.concatenate([lengths, lengths])
    rows, cols, vals = [], [], []
    for e, (u, w) in enumerate(g.edges):
        rows += [u - 1, w - 1, w - 1, u - 1]
        cols += [e, e, m + e, m + e]
        vals += [1.0, -1.0, 1.0, -1.0]
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(g.n, 2 * m))
    res = linprog(
        cost,
        A_eq=A,
        b_eq=v,
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status != 0:
        raise RuntimeError(f"flow LP failed: {res.message}")
    J = res.x[:m] - res.x[m:]
    total = float(np.abs(J) @ lengths)
    return total, GraphFlow(total, J, res.eqlin.marginals.copy())


def boundary_size(g: Graph, f: VertexFunction) -> int:
    """Number of edges from {f > 0} to its complement {f <= 0}."""
    v = f.values
    count = 0
    for u, w in g.edges:
        a, b = v[u - 1] > 0, v[w - 1] > 0
        if a != b:
            count += 1
    return count


class GraphUncertainty(NamedTuple):
    product: float
    w1: float
    boundary: int
    l1: float
    normalized_product: float


def uncertainty_product_graph(g: Graph, f: VertexFunction) -> GraphUncertainty:
    """graph_w1 x boundary_size, with the l1-normalized variant."""
    if not np.any(f.values):
        raise NotZeroMean("uncertainty product needs a nonzero function")
    w1, _ = graph_w1(g, f)
    bd = boundary_size(g, f)
    l1 = float(np.abs(f.values).sum())
    return GraphUncertainty(w1 * bd, w1, bd, l1, w1 * bd / l1 if l1 else math.inf)


# ---------------------------------------------------------------------------
# graphical designs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignCertificate:
    """Orthogonality record of a centered indicator against the spectrum.

    residuals holds (eigenvalue, dimension, projection norm) per
    nontrivial eigenspace, ascending.  integrated_exactly counts the
    eigenfunctions integrated exactly by S: the constant plus every fully
    orthogonal eigenspace (basis independent).  orthogonal_prefix is the
    consecutive count from the bottom of the nontrivial spectrum, the
    stricter reading when a failure splits the spectrum.  pass_ requires
    integrated_exactly >= k_requested and the lowest nontrivial
    eigenspace orthogonal (a subset failing the lowest band integrates
    no nonconstant smooth function and is no design).
    """

    subset: tuple
    k_requested: int
    residuals: tuple  # ((lam, dim, residual), ...)
    integrated_exactly: int
    orthogonal_prefix: int
    pass_: bool
    design_tol: float = DESIGN_TOL


def _check_subset(g: Graph, subset, allow_full: bool = False):
    subset = tuple(sorted(int(s) for s in set(subset)))
    if not subset:
        raise BadSubset("subset is empty")
    if any(s < 1 or s > g.n for s in subset):
        raise BadSubset("subset contains out-of-range vertices")
    if not allow_full and len(subset) >= g.n:
        raise BadSubset("subset must be a proper subset")
    return subset


def _residuals(spec: Spectrum, x: np.ndarray):
    out = []
    for gp in spec.groups[1:]:
        r = float(np.linalg.norm(spec.eigenvectors[:, gp].T @ x))
        out.append((float(spec.eigenvalues[gp[0]]), len(gp), r))
    return tuple(out)


def _counts(residuals, tol: float):
    integrated = 1  # the constant is always integrated exactly
    prefix = 0
    broken = False
    for _, dim, r in residuals:
        if r <= tol:
            integrated += dim
            if not broken:
                prefix += dim
        else:
            broken = True
    return integrated, prefix


def verify_design(g: Graph, subset, k: int, design_tol: float = DESIGN_TOL) -> DesignCertificate:
    """Check whether S integrates at least k Laplacian eigenfunctions exactly.

    S integrates an eigenfunction exactly when its average over S equals
    its global average, i.e. the centered indicator is orthogonal to it;
    counting is by whole eigenspaces (grouped eigenvalues), constant
    included, so the result does not depend on the basis chosen inside a
    multiplicity group.  The certificate also reports the stricter
    consecutive-from-the-bottom count of nontrivial eigenfunctions.
    """
    subset = _check_subset(g, subset)
    if k > g.n - 1:
        raise BadSubset(f"k={k} exceeds the {g.n - 1} nontrivial eigenfunctions")
    spec = laplacian_spectrum(g)
    x = centered_indicator(g, subset).values
    residuals = _residuals(spec, x)
    integrated, prefix = _counts(residuals, design_tol)
    return DesignCertificate(
        subset=subset,
        k_requested=k,
        residuals=residuals,
        integrated_exactly=integrated,
        orthogonal_prefix=prefix,
        pass_=integrated >= k and prefix > 0,
        design_tol=design_tol,
    )


class SearchResult(NamedTuple):
    best_count: int
    subsets: tuple  # best subsets, each a sorted vertex tuple
    certificates: tuple  # certificates for the best subsets
    mode: str
    scanned: int


def _integrated_counts_bulk(spec: Spectrum, combs: np.ndarray, tol: float):
    counts = np.ones(len(combs), dtype=np.int64)
    for gp in spec.groups[1:]:
        proj = spec.eigenvectors[:, gp]
        c = proj[combs].sum(axis=1)
        r2 = (c * c).sum(axis=1)
        counts += len(gp) * (r2 <= tol * tol)
    return counts


def search_designs(
    g: Graph,
    size: int,
    mode: str = "exhaustive",
    samples: int = 10000,
    seed: int = 0,
    design_tol: float = DESIGN_TOL,
    cap: int = EXHAUSTIVE_CAP,
) -> SearchResult:
    """Find size-subsets maximizing the integrated-exactly count.

    Exhaustive mode scans all C(n, size) subsets (vectorized, chunked) and
    returns every maximizer; randomized mode samples `samples` subsets
    with the given seed and returns the best found.
    """
    if not (0 < size <= g.n):
        raise BadSubset(f"size must be in 1..{g.n}")
    spec = laplacian_spectrum(g)
    if size == g.n:
        # centered indicator of the full set is zero: all residuals vanish
        full = tuple(range(1, g.n + 1))
        cert = DesignCertificate(
            subset=full,
            k_requested=g.n,
            residuals=_residuals(spec, np.zeros(g.n)),
            integrated_exactly=g.n,
            orthogonal_prefix=g.n - 1,
            pass_=True,
            design_tol=design_tol,
        )
        return SearchResult(g.n, (full,), (cert,), mode, 1)
    # Centered-indicator residuals shift subset-sum coefficients only on the
    # constant eigenspace, so raw chi_S coefficients suffice off it.
    if mode == "exhaustive":
        n_comb = math.comb(g.n, size)
        if n_comb > cap:
            raise TooLargeForExhaustive(f"C({g.n},{size})={n_comb} exceeds cap {cap}")
        best_count = -1
        best: list = []
        scanned = 0
        chunk = []
        CHUNK = 200_000
        for comb in itertools.combinations(range(g.n), size):
            chunk.append(comb)
            if len(chunk) == CHUNK:
                best_count, best = _scan_chunk(spec, chunk, design_tol, best_count, best)
                scanned += len(chunk)
                chunk = []
        if chunk:
            best_count, best = _scan_chunk(spec, chunk, design_tol, best_count, best)
            scanned += len(chunk)
    else:
        rng = np.random.default_rng(seed)
        subsets = {tuple(sorted(rng.choice(g.n, size, replace=False))) for _ in range(samples)}
        chunk = sorted(subsets)
        best_count, best = _scan_chunk(spec, chunk, design_tol, -1, [])
        scanned = len(chunk)
    subsets = tuple(tuple(v + 1 for v in s) for s in best)
    certs = tuple(verify_design(g, s, min(best_count, g.n - 1), design_tol) for s in subsets)
    return SearchResult(int(best_count), subsets, certs, mode, scanned)


def _scan_chunk(spec, chunk, tol, best_count, best):
    combs = np.asarray(chunk, dtype=np.int64)
    counts = _integrated_counts_bulk(spec, combs, tol)
    mx = int(counts.max())
    if mx > best_count:
        best_count = mx
        best = [tuple(c) for c in combs[counts == mx]]
    elif mx == best_count:
        best.extend(tuple(c) for c in combs[counts == mx])
    return best_count, best


class ExtremalityRow(NamedTuple):
    subset: tuple
    kind: str  # "design" or "random"
    product: float
    w1: float
    boundary: int


class ExtremalityTable(NamedTuple):
    rows: tuple
    design_products: tuple
    random_quantiles: dict


def design_extremality_experiment(
    g: Graph, size: int, samples: int = 200, seed: int = 0
) -> ExtremalityTable:
    """Compare products of design indicators against random subsets.

    Exploratory: finds the best designs of the given size (exhaustive when
    feasible, randomized otherwise), evaluates the graph uncertainty
    product of each centered indicator, and tabulates the same for random
    size-matched subsets.  Deterministic under the seed.
    """
    try:
        found = search_designs(g, size, mode="exhaustive")
    except TooLargeForExhaustive:
        found = search_designs(g, size, mode="random", samples=samples, seed=seed)
    rows = []
    for s in found.subsets[:8]:
        rep = uncertainty_product_graph(g, centered_indicator(g, s))
        rows.append(ExtremalityRow(s, "design", rep.product, rep.w1, rep.boundary))
    rng = np.random.default_rng(seed)
    rand_products = []
    for _ in range(samples):
        s = tuple(sorted(int(v) + 1 for v in rng.choice(g.n, size, replace=False)))
        rep = uncertainty_product_graph(g, centered_indicator(g, s))
        rows.append(ExtremalityRow(s, "random", rep.product, rep.w1, rep.boundary))
        rand_products.append(rep.product)
    qs = np.quantile(rand_products, [0.0, 0.25, 0.5, 0.75, 1.0]) if rand_products else []
    return ExtremalityTable(
        tuple(rows),
        tuple(r.product for r in rows if r.kind == "design"),
        {q: float(x) for q, x in zip((0.0, 0.25, 0.5, 0.75, 1.0), qs)},
    )


def perfect_domination_check(g: Graph, subset) -> bool:
    """True iff every vertex outside S is adjacent to exactly one member."""
    subset = set(_check_subset(g, subset, allow_full=True))
    adj = g.adjacency_lists()
    return all(
        len(set(adj[v]) & subset) == 1 for v in range(1, g.n + 1) if v not in subset
    )
