"""Functions sampled on uniform cell-centered grids over the unit cube.

`GridFunction` carries values at the centers of the n^dim cells of
[0,1]^dim (dim in {1,2,3}).  The module provides zero-mean centering, the
sign decomposition into a pair of atomic measures, L1/Linf norms, and an
estimate of the (dim-1)-dimensional measure of the zero level set via
sub-cell linear interpolation (sign-change counting in 1-D, marching
squares in 2-D, marching cubes in 3-D).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllConstant, NotZeroMean, WrongDimension

DEFAULT_MEAN_TOL = 1e-12


@dataclass(frozen=True)
class GridFunction:
    """Real function on the uniform cell-centered grid of [0,1]^dim.

    Attributes
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    n : int
        Cells per axis; the grid has n**dim cells of side h = 1/n.
    values : ndarray of shape (n,)*dim
        Value at each cell center, C order, axis i increasing in x_i.
    mean_tol : float
        Relative tolerance certifying zero mean: a function is accepted
        as zero-mean when |h^dim * sum(values)| <= mean_tol * l1_norm.
    """

    dim: int
    n: int
    values: np.ndarray
    mean_tol: float = DEFAULT_MEAN_TOL

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise WrongDimension(f"dim must be 1, 2 or 3, got {self.dim}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n,) * self.dim:
            raise ValueError(f"values shape {v.shape} != {(self.n,) * self.dim}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def axis_centers(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return (np.arange(self.n) + 0.5) * self.h

    def cell_centers(self) -> np.ndarray:
        """All cell centers as an (n**dim, dim) array in C order."""
        x = self.axis_centers()
        grids = np.meshgrid(*([x] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def mean(self) -> float:
        return float(self.values.sum()) * self.cell_volume

    def is_zero_mean(self) -> bool:
        l1 = float(np.abs(self.values).sum()) * self.cell_volume
        return abs(self.mean()) <= self.mean_tol * max(l1, np.finfo(float).tiny)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.dim, self.n, values, self.mean_tol)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Atomic measure: support points in the closed unit cube and masses.

    Masses are nonnegative L1-mass units (value * cell volume for measures
    arising from grid functions).
    """

    points: np.ndarray  # (N, dim)
    masses: np.ndarray  # (N,)

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        m = np.asarray(self.masses, dtype=float).ravel()
        if p.shape[0] != m.shape[0]:
            raise ValueError("points and masses length mismatch")
        if p.size and (p.min() < -1e-12 or p.max() > 1 + 1e-12):
            raise ValueError("points must lie in the closed unit cube")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(m))):
            raise ValueError("points and masses must be finite")
        p = p.copy()
        m = m.copy()
        p.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "masses", m)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.masses.shape[0]

    def total_mass(self) -> float:
        return float(self.masses.sum())


def make_zero_mean(f: GridFunction) -> GridFunction:
    """Subtract the discrete mean so that h^dim * sum(values) = 0.

    Raises
    ------
    AllConstant
        If the input is constant, so the centered result would be
        identically zero.
    """
    centered = f.values - f.values.mean()
    if not np.any(centered):
        raise AllConstant("input is constant; centered result is identically zero")
    return f.with_values(centered)


def norms(f: GridFunction) -> tuple[float, float]:
    """Return (l1, linf): h^dim * sum|values| and max|values|."""
    l1 = float(np.abs(f.values).sum()) * f.cell_volume
    linf = float(np.abs(f.values).max()) if f.values.size else 0.0
    return l1, linf


def split_signs(f: GridFunction) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Decompose a zero-mean f into measures for the positive and negative parts.

    Atoms sit at cell centers; cells with value exactly 0 appear in
    neither measure (the positive part is the open set {f > 0}).

    Returns
    -------
    (mu, nu) : pair of DiscreteMeasure
        mu has masses f_plus * h^dim, nu has masses f_minus * h^dim.
    """
    if not f.is_zero_mean():
        raise NotZeroMean(f"discrete mean {f.mean():.3e} exceeds tolerance")
    centers = f.cell_centers()
    flat = f.values.ravel()
    pos = flat > 0
    neg = flat < 0
    vol = f.cell_volume
    mu = DiscreteMeasure(centers[pos], flat[pos] * vol)
    nu = DiscreteMeasure(centers[neg], -flat[neg] * vol)
    return mu, nu


# ---------------------------------------------------------------------------
# nodal-set measure
# ---------------------------------------------------------------------------


def nodal_measure(f: GridFunction) -> float:
    """Estimate the (dim-1)-measure of the zero level set of f.

    Uses linear sub-cell interpolation of the cell-center values on the
    dual lattice: crossing count in 1-D, marching-squares segment length
    in 2-D, marching-cubes triangle area (clipped to the unit cube) in
    3-D.  The lattice is replicate-padded to the cube boundary so that
    interfaces reaching the boundary are measured at full length.
    Identically-signed functions return 0.
    """
    if f.dim == 1:
        return float(_sign_changes_1d(f.values))
    if f.dim == 2:
        return _marching_squares_length(f.values, f.h)
    return _marching_cubes_area(f.values, f.h)


def _sign_changes_1d(values: np.ndarray) -> int:
    s = np.sign(values)
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _pad_lattice(values: np.ndarray) -> np.ndarray:
    # replicate padding keeps spacing h uniform; lattice spans [-h/2, 1+h/2]
    return np.pad(values, 1, mode="edge")


def _clip_segment_length(p, q, lo=0.0, hi=1.0) -> float:
    # Liang-Barsky clip of segment p-q against [lo,hi]^2, returns clipped length
    t0, t1 = 0.0, 1.0
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    for delta, start in ((dx, p[0]), (dy, p[1])):
        for sign, bound in ((-1.0, lo), (1.0, hi)):
            den = delta * sign
            num = (bound - start) * sign
            if den == 0.0:
                if num < 0.0:
                    return 0.0
            else:
                t = num / den
                if den > 0.0:
                    t1 = min(t1, t)
                else:
                    t0 = max(t0, t)
    if t0 >= t1:
        return 0.0
    return (t1 - t0) * float(np.hypot(dx, dy))


def _marching_squares_length(values: np.ndarray, h: float) -> float:
    V = _pad_lattice(values)
    m = V.shape[0]
    xs = (np.arange(m) - 0.5) * h
    pos = V > 0.0
    mixed = ~(
        (pos[:-1, :-1] == pos[1:, :-1])
        & (pos[:-1, :-1] == pos[:-1, 1:])
        & (pos[:-1, :-1] == pos[1:, 1:])
    )
    ii, jj = np.nonzero(mixed)
    total = 0.0
    for i, j in zip(ii.tolist(), jj.tolist()):
        x0, x1 = xs[i], xs[i + 1]
        y0, y1 = xs[j], xs[j + 1]
        # corners counterclockwise, edges 0..3 between consecutive corners
        v = (V[i, j], V[i + 1, j], V[i + 1, j + 1], V[i, j + 1])
        c = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
        s = (v[0] > 0.0, v[1] > 0.0, v[2] > 0.0, v[3] > 0.0)
        pts = []
        for a in range(4):
            b = (a + 1) % 4
            if s[a] != s[b]:
                t = v[a] / (v[a] - v[b])
                xa, ya = c[a]
                xb, yb = c[b]
                pts.append((xa + t * (xb - xa), ya + t * (yb - ya)))
        if len(pts) == 2:
            total += _clip_segment_length(pts[0], pts[1])
        elif len(pts) == 4:
            # saddle: pair crossings using the cell-center average
            vc = 0.25 * (v[0] + v[1] + v[2] + v[3])
            if (vc > 0.0) == s[0]:
                total += _clip_segment_length(pts[0], pts[1])
                total += _clip_segment_length(pts[2], pts[3])
            else:
                total += _clip_segment_length(pts[0], pts[3])
                total += _clip_segment_length(pts[1], pts[2])
    return total


def _polygon_area_3d(P) -> float:
    if len(P) < 3:
        return 0.0
    s = np.zeros(3)
    p0 = P[0]
    for i in range(1, len(P) - 1):
        s += np.cross(P[i] - p0, P[i + 1] - p0)
    return 0.5 * float(np.linalg.norm(s))


def _clip_polygon_axis(P, axis, bound, keep_ge):
    out = []
    k = len(P)
    for i in range(k):
        cur = P[i]
        nxt = P[(i + 1) % k]
        cin = cur[axis] >= bound if keep_ge else cur[axis] <= bound
        nin = nxt[axis] >= bound if keep_ge else nxt[axis] <= bound
        if cin:
            out.append(cur)
        if cin != nin:
            t = (bound - cur[axis]) / (nxt[axis] - cur[axis])
            out.append(cur + t * (nxt - cur))
    return out


def _marching_cubes_area(values: np.ndarray, h: float) -> float:
    from skimage import measure  # deferred: only needed for dim=3

    V = _pad_lattice(values)
    if not ((V > 0).any() and (V <= 0).any()):
        return 0.0
    try:
        verts, faces, _, _ = measure.marching_cubes(V, level=0.0, spacing=(h, h, h))
    except (ValueError, RuntimeError):
        return 0.0
    verts = verts - h / 2.0  # lattice origin sits at -h/2
    tri = verts[faces]
    inside = np.all((tri >= 0.0) & (tri <= 1.0), axis=(1, 2))
    a = tri[:, 1] - tri[:, 0]
    b = tri[:, 2] - tri[:, 0]
    areas = 0.5 * np.linalg.norm(np.cross(a, b), axis=1)
    total = float(areas[inside].sum())
    for idx in np.nonzero(~inside)[0]:
        P = [tri[idx, i].copy() for i in range(3)]
        for axis in range(3):
            P = _clip_polygon_axis(P, axis, 0.0, True)
            if not P:
                break
            P = _clip_polygon_axis(P, axis, 1.0, False)
            if not P:
                break
        if P:
            total += _polygon_area_3d(P)
    return total


# ---------------------------------------------------------------------------
# grid file format: one-line header "dim,n", one value per line, C order
# ---------------------------------------------------------------------------


def save_grid(f: GridFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{f.dim},{f.n}\n")
        np.savetxt(fh, f.values.ravel(), fmt="%.17g")


def load_grid(path, mean_tol: float = DEFAULT_MEAN_TOL) -> GridFunction:
    with open(path) as fh:
        header = fh.readline().strip()
        dim, n = (int(tok) for tok in header.split(","))
        flat = np.loadtxt(fh)
    return GridFunction(dim, n, flat.reshape((n,) * dim), mean_tol)
