"""P1 finite elements for the mixed Robin/Dirichlet problem on the disc.

    -Laplace v = f                                in D
    alpha dv/dnu + beta dv/dtau + gamma v = g     on the arcs E
    v = 0 (or given data)                         on the rest of the circle

The weak form is ``alpha K + beta T + gamma M`` with the stiffness matrix
``K``, the edgewise tangential block ``T`` and the boundary mass ``M`` on
``E``.  ``T`` pairs the piecewise-constant tangential derivative of the trace
with the test trace by the edge midpoint rule; on the free degrees of freedom
it is exactly skew-symmetric, so it never changes the quadratic form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import Delaunay

TWO_PI = 2.0 * np.pi


class MeshError(ValueError):
    pass


class RobinSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class RobinCoeffs:
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


@dataclass(frozen=True)
class BoundaryArcs:
    """Open angular intervals ``(start, end)`` whose union is ``E``."""

    arcs: tuple = ((-0.75 * np.pi, -0.25 * np.pi),)

    def __post_init__(self):
        arcs = tuple((float(a), float(b)) for a, b in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        if not arcs:
            raise ValueError("at least one arc is required")
        for a, b in arcs:
            if not b > a:
                raise ValueError(f"arc ({a}, {b}) must have end > start")
        if not 0 < self.measure < TWO_PI:
            raise ValueError(f"total arc length must lie in (0, 2pi), got {self.measure}")
        # disjointness modulo 2pi
        spans = sorted(((a % TWO_PI), (a % TWO_PI) + (b - a)) for a, b in arcs)
        for (a0, b0), (a1, _) in zip(spans, spans[1:] + [(spans[0][0] + TWO_PI, 0)]):
            if b0 > a1 + 1e-12:
                raise ValueError("arcs overlap")

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.arcs))

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([t % TWO_PI for arc in self.arcs for t in arc])

    def contains(self, theta) -> np.ndarray:
        """Membership of angles in the open arcs (modulo ``2pi``)."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=bool)
        for a, b in self.arcs:
            rel = (theta - a) % TWO_PI
            out |= (rel > 0) & (rel < b - a)
        return out


@dataclass
class TriMesh:
    vertices: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3), counterclockwise
    boundary_edges: np.ndarray  # (b, 2), each oriented counterclockwise around the circle
    edge_on_arc: np.ndarray  # (b,) True for edges in E, False for Dirichlet edges
    h: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @property
    def dirichlet_vertices(self) -> np.ndarray:
        """Boundary vertices not strictly inside ``E`` (arc endpoints included)."""
        inner = self.arc_vertices
        b = self.boundary_vertices
        return b[~np.isin(b, inner)]

    @property
    def arc_vertices(self) -> np.ndarray:
        """Vertices whose two boundary edges both lie in ``E``."""
        e = self.boundary_edges
        on = self.edge_on_arc
        count = np.bincount(e[on].ravel(), minlength=self.n_vertices)
        return np.nonzero(count == 2)[0]

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.dirichlet_vertices] = False
        return mask

    def write(self, path) -> None:
        """Plain-text snapshot.

        Three blocks, each introduced by a ``#`` header line:
        ``vertices`` (index x y), ``triangles`` (i j k, counterclockwise) and
        ``edges`` (i j marker) with marker ``E`` or ``D``.
        """
        with open(path, "w") as fh:
            fh.write(f"# vertices {self.n_vertices}: index x y\n")
            for i, (x, y) in enumerate(self.vertices):
                fh.write(f"{i} {x:.17g} {y:.17g}\n")
            fh.write(f"# triangles {len(self.triangles)}: i j k\n")
            for t in self.triangles:
                fh.write(f"{t[0]} {t[1]} {t[2]}\n")
            fh.write(f"# edges {len(self.boundary_edges)}: i j marker\n")
            for (i, j), m in zip(self.boundary_edges, self.edge_on_arc):
                fh.write(f"{i} {j} {'E' if m else 'D'}\n")


def _boundary_angles(h: float, arcs: BoundaryArcs, anchors) -> np.ndarray:
    fixed = np.unique(np.round(np.concatenate([arcs.endpoints, np.asarray(anchors, float) % TWO_PI]), 14))
    out = []
    for a, b in zip(fixed, np.append(fixed[1:], fixed[0] + TWO_PI)):
        n = max(1, int(np.ceil((b - a) / h)))
        out.append(a + (b - a) * np.arange(n) / n)
    return np.concatenate(out) % TWO_PI


def mesh_disc(h: float, arcs: BoundaryArcs | None = None, anchors=(-0.5 * np.pi,)) -> TriMesh:
    """Quasi-uniform Delaunay triangulation of the disc with ``E`` markers.

    Boundary vertices sit on the unit circle with the arc endpoints and the
    ``anchors`` angles among them (by default the concentration point
    ``-e_2``, so the polygon does not cut off a bubble sitting there);
    interior vertices lie on concentric rings spaced by ``h``.
    """
    if arcs is None:
        arcs = BoundaryArcs()
    if not 0 < h < 1:
        raise MeshError(f"mesh size must lie in (0, 1), got {h}")
    theta_b = _boundary_angles(h, arcs, anchors)
    pts = [np.column_stack([np.cos(theta_b), np.sin(theta_b)])]
    phase = float(anchors[0]) if len(anchors) else 0.0
    ring = 1
    r = 1.0 - h * np.sqrt(3.0) / 2.0
    while r > 0.5 * h:
        n = max(6, int(round(TWO_PI * r / h)))
        # rings alternate on/off the first anchor so the local pattern there
        # is the same at every mesh size
        t = phase + (np.arange(n) + 0.5 * (ring % 2)) * TWO_PI / n
        pts.append(r * np.column_stack([np.cos(t), np.sin(t)]))
        r -= h * np.sqrt(3.0) / 2.0
        ring += 1
    pts.append(np.zeros((1, 2)))
    vertices = np.vstack(pts)
    tri = Delaunay(vertices)
    triangles = tri.simplices.copy()
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    triangles = triangles[np.abs(signed) > 1e-14 * h * h]
    signed = signed[np.abs(signed) > 1e-14 * h * h]
    flip = signed < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    order = np.argsort(theta_b)
    edges = np.column_stack([order, np.roll(order, -1)])
    mid = np.angle(vertices[edges[:, 0]] @ [1, 1j] + vertices[edges[:, 1]] @ [1, 1j])
    on_arc = arcs.contains(mid)
    for a, b in arcs.arcs:
        rel = (mid - a) % TWO_PI
        if np.count_nonzero((rel > 0) & (rel < b - a)) < 2:
            raise MeshError(f"arc ({a:.4g}, {b:.4g}) is thinner than two boundary edges at h={h}")
    lengths = np.linalg.norm(vertices[triangles[:, [1, 2, 0]]] - vertices[triangles], axis=-1)
    return TriMesh(vertices, triangles, edges, on_arc, float(lengths.max()))


# ---------------------------------------------------------------------------
# assembly

def _gradients(mesh: TriMesh):
    p = mesh.vertices[mesh.triangles]
    area = mesh.areas
    # gradient of the hat function of local vertex a: rot90 of the opposite edge / (2 area)
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    return grads, area


def stiffness(mesh: TriMesh) -> sp.csr_matrix:
    grads, area = _gradients(mesh)
    local = np.einsum("tad,tbd->tab", grads, grads) * area[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def boundary_mass(mesh: TriMesh) -> sp.csr_matrix:
    e = mesh.boundary_edges[mesh.edge_on_arc]
    length = np.linalg.norm(mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]], axis=1)
    local = length[:, None] / 6.0 * np.array([2.0, 1.0, 1.0, 2.0])[None, :]
    rows = e[:, [0, 0, 1, 1]].ravel()
    cols = e[:, [0, 1, 0, 1]].ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def tangential_block(mesh: TriMesh) -> sp.csr_matrix:
    """``int_E (dv/dtau) psi`` with the P1 trace differentiated edgewise.

    On an edge ``p -> q`` the contribution is ``(v_q - v_p)(psi_p + psi_q) / 2``.
    """
    e = mesh.boundary_edges[mesh.edge_on_arc]
    p, q = e[:, 0], e[:, 1]
    rows = np.concatenate([p, p, q, q])
    cols = np.concatenate([q, p, q, p])
    half = 0.5 * np.ones(p.size)
    vals = np.concatenate([half, -half, half, -half])
    n = mesh.n_vertices
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass
class RobinSystem:
    mesh: TriMesh
    coeffs: RobinCoeffs
    stiffness: sp.csr_matrix
    tangential: sp.csr_matrix
    mass: sp.csr_matrix

    @property
    def matrix(self) -> sp.csr_matrix:
        c = self.coeffs
        return (c.alpha * self.stiffness + c.beta * self.tangential + c.gamma * self.mass).tocsr()

    def constrained(self) -> sp.csr_matrix:
        """The system restricted to the free degrees of freedom."""
        free = self.mesh.free
        return self.matrix[free][:, free]


def assemble(mesh: TriMesh, coeffs: RobinCoeffs) -> RobinSystem:
    return RobinSystem(mesh, coeffs, stiffness(mesh), tangential_block(mesh), boundary_mass(mesh))


# ---------------------------------------------------------------------------
# load vectors

# degree-5 rule on the reference triangle, barycentric points and weights summing to 1
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def load_vector(
    mesh: TriMesh,
    density: Callable[[np.ndarray], np.ndarray],
    center: complex = -1j,
    scale: float = 1.0,
    ratio: float = 0.3,
    max_depth: int = 40,
) -> np.ndarray:
    """``F_i = int f phi_i`` with triangles split adaptively around ``center``.

    A sub-triangle is split in four while its diameter exceeds
    ``ratio * max(distance to center, scale)``.  ``density`` takes complex
    points.
    """
    verts = mesh.vertices[:, 0] + 1j * mesh.vertices[:, 1]
    corners = verts[mesh.triangles]
    n = mesh.n_vertices
    out = np.zeros(n)
    parent = np.arange(len(mesh.triangles))
    # sub-triangle corners in the parent's barycentric coordinates
    bary = np.broadcast_to(np.eye(3), (parent.size, 3, 3)).copy()
    area_frac = np.ones(parent.size)
    for depth in range(max_depth + 1):
        pts = np.einsum("tab,tb->ta", bary, corners[parent])
        diam = np.max(np.abs(pts - np.roll(pts, 1, axis=1)), axis=1)
        dist = np.maximum(np.min(np.abs(pts - center), axis=1) - diam, 0.0)
        split = diam > ratio * np.maximum(dist, scale)
        if depth == max_depth:
            split[:] = False
        done = ~split
        if np.any(done):
            b = np.einsum("qa,tab->tqb", _BARY, bary[done])  # parent barycentrics of the rule
            x = np.einsum("tqb,tb->tq", b, corners[parent[done]])
            fx = density(x)
            w = (mesh.areas[parent[done]] * area_frac[done])[:, None] * _W[None, :] * fx
            contrib = np.einsum("tq,tqb->tb", w, b)
            np.add.at(out, mesh.triangles[parent[done]], contrib)
        if not np.any(split):
            break
        bs = bary[split]
        m01 = 0.5 * (bs[:, 0] + bs[:, 1])
        m12 = 0.5 * (bs[:, 1] + bs[:, 2])
        m20 = 0.5 * (bs[:, 2] + bs[:, 0])
        kids = [
            np.stack([bs[:, 0], m01, m20], 1),
            np.stack([m01, bs[:, 1], m12], 1),
            np.stack([m20, m12, bs[:, 2]], 1),
            np.stack([m01, m12, m20], 1),
        ]
        bary = np.concatenate(kids)
        parent = np.tile(parent[split], 4)
        area_frac = np.tile(area_frac[split] / 4.0, 4)
    return out


def boundary_load(mesh: TriMesh, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``int_E g psi_i`` along the marked edges, two-point Gauss per edge."""
    e = mesh.boundary_edges[mesh.edge_on_arc]
    v = mesh.vertices[:, 0] + 1j * mesh.vertices[:, 1]
    a, b = v[e[:, 0]], v[e[:, 1]]
    length = np.abs(b - a)
    out = np.zeros(mesh.n_vertices)
    for t in (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)):
        gx = g(a + t * (b - a)) * 0.5 * length
        np.add.at(out, e[:, 0], (1 - t) * gx)
        np.add.at(out, e[:, 1], t * gx)
    return out


# ---------------------------------------------------------------------------
# solves and measurements

@dataclass
class MeshField:
    mesh: TriMesh
    values: np.ndarray

    def energy(self) -> float:
        """``int |grad v|^2`` of the piecewise-linear interpolant."""
        return float(self.values @ (stiffness(self.mesh) @ self.values))

    def grad_l2(self) -> float:
        return float(np.sqrt(max(self.energy(), 0.0)))

    def gradients(self) -> np.ndarray:
        grads, _ = _gradients(self.mesh)
        return np.einsum("tad,ta->td", grads, self.values[self.mesh.triangles])


def solve_robin(
    mesh: TriMesh,
    coeffs: RobinCoeffs,
    load: np.ndarray,
    boundary_data: np.ndarray | None = None,
    dirichlet_values: np.ndarray | None = None,
    system: RobinSystem | None = None,
) -> MeshField:
    """Solve ``(alpha K + beta T + gamma M) v = alpha F + G`` on the free nodes.

    ``load`` is ``F_i = int f phi_i``; ``boundary_data`` the vector
    ``G_i = int_E g phi_i``; ``dirichlet_values`` the nodal values imposed on
    the Dirichlet vertices (zero by default).
    """
    if system is None:
        system = assemble(mesh, coeffs)
    a = system.matrix
    free = mesh.free
    rhs = coeffs.alpha * np.asarray(load, dtype=float)
    if boundary_data is not None:
        rhs = rhs + boundary_data
    v = np.zeros(mesh.n_vertices)
    if dirichlet_values is not None:
        v[~free] = np.asarray(dirichlet_values)[~free]
        rhs = rhs - a @ v
    with np.errstate(all="raise"):
        try:
            sol = spla.spsolve(a[free][:, free].tocsc(), rhs[free])
        except (FloatingPointError, RuntimeError) as exc:
            raise RobinSolveError(f"sparse solve failed: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise RobinSolveError("singular Robin system")
    v[free] = sol
    return MeshField(mesh, v)


def galerkin_residual(system: RobinSystem, field: MeshField, load: np.ndarray, boundary_data=None) -> float:
    """Relative residual of the discrete equations on the free nodes."""
    free = system.mesh.free
    rhs = system.coeffs.alpha * load + (0.0 if boundary_data is None else boundary_data)
    res = (system.matrix @ field.values - rhs)[free]
    return float(np.linalg.norm(res) / max(np.linalg.norm(rhs[free]), 1e-300))


@dataclass
class FluxFunctional:
    """``l(psi) = alpha (int grad u . grad psi - int f psi)`` on hat functions.

    ``values[i]`` is the action on the hat function of vertex ``i``; for a
    discrete Dirichlet solution it vanishes at every interior vertex.
    """

    mesh: TriMesh
    values: np.ndarray

    def apply(self, psi: np.ndarray) -> float:
        return float(self.values @ psi)

    def dual_norm(self) -> float:
        """Supremum of ``l(psi) / ||grad psi||`` over the trial space vanishing off ``E``."""
        free = self.mesh.free
        k = stiffness(self.mesh)[free][:, free].tocsc()
        lf = self.values[free]
        return float(np.sqrt(max(lf @ spla.spsolve(k, lf), 0.0)))


def robin_flux_functional(u: MeshField, load: np.ndarray, coeffs: RobinCoeffs) -> FluxFunctional:
    k = stiffness(u.mesh)
    return FluxFunctional(u.mesh, coeffs.alpha * (k @ u.values - load))


def solve_dirichlet_fem(mesh: TriMesh, load: np.ndarray) -> MeshField:
    """Homogeneous Dirichlet solve on the whole circle with the same mesh."""
    k = stiffness(mesh)
    interior = np.ones(mesh.n_vertices, dtype=bool)
    interior[mesh.boundary_vertices] = False
    v = np.zeros(mesh.n_vertices)
    v[interior] = spla.spsolve(k[interior][:, interior].tocsc(), load[interior])
    return MeshField(mesh, v)


@dataclass
class CoercivityReport:
    margins: np.ndarray  # x^T A x - alpha x^T K x per sample
    energies: np.ndarray  # x^T K x per sample
    scale: float

    @property
    def worst(self) -> float:
        return float(self.margins.min(initial=0.0))

    def passed(self, tol: float = 1e-8) -> bool:
        return bool(self.worst >= -tol * self.scale)


def random_trial_functions(mesh: TriMesh, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random nodal vectors vanishing on the Dirichlet vertices, shape ``(count, n)``."""
    x = rng.standard_normal((count, mesh.n_vertices))
    x[:, ~mesh.free] = 0.0
    return x


def coercivity_check(system: RobinSystem, samples: np.ndarray) -> CoercivityReport:
    """Compare ``<B x, x>`` with ``alpha ||grad x||^2`` for each sample row."""
    samples = np.atleast_2d(samples)
    if np.any(samples[:, ~system.mesh.free] != 0):
        raise ValueError("trial functions must vanish on the Dirichlet vertices")
    a = system.matrix
    k = system.stiffness
    form = np.einsum("si,si->s", samples, (a @ samples.T).T)
    energy = np.einsum("si,si->s", samples, (k @ samples.T).T)
    margins = form - system.coeffs.alpha * energy
    scale = float(max(np.max(np.abs(form), initial=0.0), 1.0))
    return CoercivityReport(margins, energy, scale)


def interpolate_to(field: MeshField, target: TriMesh) -> np.ndarray:
    """Piecewise-linear interpolation onto another mesh's vertices.

    Target vertices outside the source polygon (a sliver of width ``O(h^2)``
    along the circle) take the value at their nearest source vertex.
    """
    from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator

    lin = LinearNDInterpolator(field.mesh.vertices, field.values)(target.vertices)
    miss = ~np.isfinite(lin)
    if np.any(miss):
        lin[miss] = NearestNDInterpolator(field.mesh.vertices, field.values)(target.vertices[miss])
    return lin


def h1_seminorm_error(field: MeshField, grad_exact: Callable[[np.ndarray], np.ndarray]) -> float:
    """``||grad(v_h - v)||_2`` by the edge-midpoint rule (exact for quadratics).

    ``grad_exact`` maps complex points to an array of shape ``(..., 2)``.
    """
    mesh = field.mesh
    g = field.gradients()
    p = mesh.vertices[mesh.triangles]
    z = p[..., 0] + 1j * p[..., 1]
    err = np.zeros(len(mesh.triangles))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        d = g - grad_exact(0.5 * (z[:, a] + z[:, b]))
        err += np.sum(d * d, axis=1) / 3.0
    return float(np.sqrt(np.sum(err * mesh.areas)))
