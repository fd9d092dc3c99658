"""Quadratic finite elements for the stationary potential equation.

Solves ``alpha * lap(u) - beta * u + m = 0`` with zero normal flux on every
boundary loop. The discrete system is ``(alpha S + beta M) u = M m`` where
``S`` and ``M`` are the P2 stiffness and consistent mass matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from hedac.geometry import Point2, TriMesh, locate_all, locate_point

# Degree-4 six-point rule on the reference triangle, weights sum to 1.
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
QUAD_POINTS = np.array(
    [
        [_A1, _A1, _B1],
        [_A1, _B1, _A1],
        [_B1, _A1, _A1],
        [_A2, _A2, _B2],
        [_A2, _B2, _A2],
        [_B2, _A2, _A2],
    ]
)
QUAD_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])


class OutsideDomainError(ValueError):
    """Query point is not inside any mesh element."""


class AssemblyError(RuntimeError):
    pass


class FactorizationError(RuntimeError):
    pass


def shape_values(lam: np.ndarray) -> np.ndarray:
    """P2 shape functions at barycentric points ``lam`` (..., 3) -> (..., 6)."""
    l1, l2, l3 = lam[..., 0], lam[..., 1], lam[..., 2]
    return np.stack(
        [l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1), 4 * l2 * l3, 4 * l3 * l1, 4 * l1 * l2],
        axis=-1,
    )


def shape_lambda_derivs(lam: np.ndarray) -> np.ndarray:
    """Derivatives of the six shape functions w.r.t. the barycentrics, (..., 6, 3)."""
    l1, l2, l3 = lam[..., 0], lam[..., 1], lam[..., 2]
    z = np.zeros_like(l1)
    rows = [
        [4 * l1 - 1, z, z],
        [z, 4 * l2 - 1, z],
        [z, z, 4 * l3 - 1],
        [z, 4 * l3, 4 * l2],
        [4 * l3, z, 4 * l1],
        [4 * l2, 4 * l1, z],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


_N_Q = shape_values(QUAD_POINTS)  # (6 quad, 6 shape)
_DN_Q = shape_lambda_derivs(QUAD_POINTS)  # (6 quad, 6 shape, 3)
_MASS_REF = np.einsum("q,qa,qb->ab", QUAD_WEIGHTS, _N_Q, _N_Q)


@dataclass(eq=False)
class HelmholtzSystem:
    mesh: TriMesh
    alpha: float
    beta: float
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    matrix: sp.csc_matrix
    # Integral of each shape function over the domain, i.e. 1^T M.
    node_weights: np.ndarray
    _lu: object = field(default=None, repr=False)

    @property
    def factorized(self) -> bool:
        return self._lu is not None

    def integrate(self, values: np.ndarray) -> float:
        """Domain integral of the P2 interpolant of nodal ``values``."""
        return float(self.node_weights @ values)


def _element_matrices(mesh: TriMesh):
    areas = mesh.element_areas
    bad = np.nonzero(~(areas > 0))[0]
    if len(bad):
        e = int(bad[0])
        raise AssemblyError(f"element {e + 1} is degenerate or inverted (signed area {areas[e]:.3g} m^2)")
    grads = mesh.lambda_gradient_table  # (E, 3, 2)
    gN = np.einsum("qak,ekd->eqad", _DN_Q, grads)  # (E, Q, 6, 2)
    S = np.einsum("q,eqad,eqbd->eab", QUAD_WEIGHTS, gN, gN) * areas[:, None, None]
    S = 0.5 * (S + S.transpose(0, 2, 1))
    M = _MASS_REF[None] * areas[:, None, None]
    return S, M


def assemble(mesh: TriMesh, alpha: float, beta: float) -> HelmholtzSystem:
    """Assemble ``K = alpha S + beta M`` with the degree-4 triangle rule."""
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"alpha and beta must be positive, got {alpha}, {beta}")
    S_e, M_e = _element_matrices(mesh)
    el = mesh.elements
    rows = np.repeat(el, 6, axis=1).ravel()
    cols = np.tile(el, (1, 6)).ravel()
    n = mesh.node_count
    S = sp.coo_matrix((S_e.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((M_e.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    S = ((S + S.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    K = (alpha * S + beta * M).tocsc()
    K.sort_indices()
    # On affine P2 elements corner shape functions integrate to 0, midsides to area/3.
    weights = np.zeros(n)
    third = mesh.element_areas / 3.0
    for k in range(3, 6):
        np.add.at(weights, el[:, k], third)
    return HelmholtzSystem(mesh, float(alpha), float(beta), S, M, K, weights)


def factorize(system: HelmholtzSystem) -> None:
    """Factorize the system matrix once; later calls return immediately."""
    if system._lu is not None:
        return
    K = system.matrix
    diag = K.diagonal()
    if not np.all(diag > 0):
        i = int(np.argmin(diag))
        raise FactorizationError(f"system matrix is not positive definite: diagonal entry {i + 1} is {diag[i]:.3g}")
    try:
        system._lu = splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise FactorizationError(f"sparse factorization failed on {K.shape[0]} unknowns: {exc}") from exc


def solve_potential(system: HelmholtzSystem, m: np.ndarray) -> np.ndarray:
    """Nodal potential for nodal target density ``m`` (right-hand side ``M m``)."""
    m = np.asarray(m, dtype=float)
    if m.shape != (system.mesh.node_count,):
        raise ValueError(f"density has shape {m.shape}, expected ({system.mesh.node_count},)")
    if not np.all(np.isfinite(m)):
        raise ValueError("density contains non-finite values")
    factorize(system)
    return system._lu.solve(system.mass @ m)


def _locate(mesh: TriMesh, p: Point2):
    loc = locate_point(mesh, p)
    if loc is None:
        raise OutsideDomainError(f"point ({p[0]:.6g}, {p[1]:.6g}) is outside the mesh")
    return loc


def eval_field(mesh: TriMesh, values: np.ndarray, p: Point2) -> float:
    e, lam = _locate(mesh, p)
    return float(shape_values(lam) @ values[mesh.elements[e]])


def _element_gradient(mesh: TriMesh, values: np.ndarray, e: int, lam: np.ndarray) -> np.ndarray:
    dN = shape_lambda_derivs(lam) @ mesh.lambda_gradients(e)  # (6, 2)
    return values[mesh.elements[e]] @ dN


def eval_gradient(mesh: TriMesh, values: np.ndarray, p: Point2) -> np.ndarray:
    """Gradient of the P2 interpolant at ``p`` as a length-2 array.

    The gradient jumps across element edges; on an edge or vertex the one-sided
    gradients of all touching elements are averaged, which keeps the result
    independent of element numbering (and mirror symmetric on symmetric meshes).
    """
    locs = locate_all(mesh, p)
    if len(locs) <= 1:
        e, lam = locs[0] if locs else _locate(mesh, p)
        return _element_gradient(mesh, values, e, lam)
    return sum(_element_gradient(mesh, values, e, lam) for e, lam in locs) / len(locs)
