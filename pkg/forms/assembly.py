"""
Symmetric interior penalty form for the biharmonic operator.

    B(w, v) = (lap_h w, lap_h v)
            + int_G {{grad lap w}} . [[v]] + {{grad lap v}} . [[w]]
                    - {{lap w}} [[grad v]] - {{lap v}} [[grad w]]
                    + sigma [[w]] . [[v]] + xi [[grad w]] [[grad v]]

with sigma = sigma0 h^-3 and xi = xi0 h^-1 on every edge (h the edge weight).
"""
import logging
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh

from dg_space import DgSpace, FeFunction, edge_traces, inner_product_with_basis, quadrature
from quadrature.rules import edge_rule, triangle_rule
from shared.config import settings
from shared.errors import SingularSystemError
from shared.schemas import PenaltyConfig

logger = logging.getLogger(__name__)


def penalty_coefficients(space: DgSpace, penalty: PenaltyConfig):
    """(sigma, xi) per edge"""
    if penalty.sigma0 <= 0 or penalty.xi0 <= 0:
        raise ValueError(f"Penalty parameters must be positive, got {penalty.sigma0}, {penalty.xi0}")
    h = space.mesh.face_weights
    return penalty.sigma0 / h ** 3, penalty.xi0 / h


def _coo(rows: np.ndarray, local: np.ndarray):
    """COO triplets of local matrices (E, m, m) scattered to dofs (E, m)"""
    m = rows.shape[1]
    r = np.broadcast_to(rows[:, :, None], (rows.shape[0], m, m))
    c = np.broadcast_to(rows[:, None, :], (rows.shape[0], m, m))
    return r.ravel(), c.ravel(), local.ravel()


def _edge_matrices(weights, jv, jg, agl, al, sigma, xi, consistency: bool = True):
    """Local edge matrices from per-point test vectors of shape (E, nq, m)"""
    def outer(a, b):
        return np.einsum("eq,eqi,eqj->eij", weights, a, b)

    local = sigma[:, None, None] * outer(jv, jv) + xi[:, None, None] * outer(jg, jg)
    if consistency:
        local += outer(agl, jv) + outer(jv, agl) - outer(al, jg) - outer(jg, al)
    return local


def assemble_stiffness(space: DgSpace, penalty: PenaltyConfig, consistency: bool = True) -> sp.csr_matrix:
    """CSR matrix of B in the orthonormal element basis.

    Without the consistency terms this is the Gram matrix of the energy norm.
    """
    mesh, basis, r = space.mesh, space.basis, space.degree
    sigma, xi = penalty_coefficients(space, penalty)
    rows, cols, vals = [], [], []

    points, weights = quadrature(mesh, triangle_rule(max(1, 2 * (r - 2))))
    lap = basis.evaluate(points, derivative="lap")
    local = np.einsum("kq,kqi,kqj->kij", weights, lap, lap)
    for part, array in zip((rows, cols, vals), _coo(space.dofs(np.arange(mesh.n_elements)), local)):
        part.append(array)

    rule = edge_rule(2 * r)
    edge_points = mesh.edge_points(rule.points)
    edge_weights = mesh.edge_lengths[:, None] * rule.weights[None, :]
    normals = mesh.edge_normals
    plus, minus = mesh.edge_elements[:, 0], mesh.edge_elements[:, 1]

    def side(positions, selection):
        pts = edge_points[selection]
        n = normals[selection][:, None, None, :]
        value = basis.evaluate(pts, positions, "value")
        dn = np.sum(basis.evaluate(pts, positions, "grad") * n, axis=-1)
        lap_ = basis.evaluate(pts, positions, "lap")
        dn_lap = np.sum(basis.evaluate(pts, positions, "gradlap") * n, axis=-1)
        return value, dn, lap_, dn_lap

    boundary = mesh.boundary_mask
    if np.any(boundary):
        value, dn, lap_, dn_lap = side(plus[boundary], boundary)
        local = _edge_matrices(edge_weights[boundary], value, dn, dn_lap, lap_, sigma[boundary], xi[boundary],
                                consistency)
        for part, array in zip((rows, cols, vals), _coo(space.dofs(plus[boundary]), local)):
            part.append(array)

    interior = ~boundary
    if np.any(interior):
        vp, dnp, lp, dnlp = side(plus[interior], interior)
        vm, dnm, lm, dnlm = side(minus[interior], interior)
        jv = np.concatenate([vp, -vm], axis=-1)
        jg = np.concatenate([dnp, -dnm], axis=-1)
        agl = 0.5 * np.concatenate([dnlp, dnlm], axis=-1)
        al = 0.5 * np.concatenate([lp, lm], axis=-1)
        local = _edge_matrices(edge_weights[interior], jv, jg, agl, al, sigma[interior], xi[interior],
                                consistency)
        dofs = np.concatenate([space.dofs(plus[interior]), space.dofs(minus[interior])], axis=1)
        for part, array in zip((rows, cols, vals), _coo(dofs, local)):
            part.append(array)

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(space.dim, space.dim)
    ).tocsr()
    logger.debug(f"[forms] stiffness assembled: {space.dim} dofs, {matrix.nnz} nonzeros")
    return matrix


def stiffness(space: DgSpace, penalty: PenaltyConfig) -> sp.csr_matrix:
    """Assembled stiffness, cached on the space"""
    cache = space.operator_cache()
    key = ("stiffness", penalty.sigma0, penalty.xi0)
    if key not in cache:
        cache[key] = assemble_stiffness(space, penalty)
    return cache[key]


def smallest_eigenvalue(space: DgSpace, penalty: PenaltyConfig) -> float:
    """Smallest eigenvalue of B (dense, so only for moderate spaces)"""
    B = stiffness(space, penalty).toarray()
    return float(eigh(B, eigvals_only=True, subset_by_index=[0, 0])[0])


def check_positivity(space: DgSpace, penalty: PenaltyConfig) -> Optional[float]:
    """Smallest eigenvalue of B, raising SingularSystemError when it is not positive.

    Spaces above ``settings.direct_solver_max_unknowns`` are skipped (None); there
    a breakdown of the Cholesky factor or of CG reports the same condition.
    """
    if space.dim > settings.direct_solver_max_unknowns:
        logger.debug(f"[forms] positivity check skipped for {space.dim} dofs")
        return None
    value = smallest_eigenvalue(space, penalty)
    if value <= 0.0:
        raise SingularSystemError(
            f"B is indefinite for degree {space.degree} on {space.mesh!r} "
            f"(smallest eigenvalue {value:.3e}); increase sigma0={penalty.sigma0} and xi0={penalty.xi0}"
        )
    logger.debug(f"[forms] smallest eigenvalue of B: {value:.3e}")
    return value


def assemble_mass(space: DgSpace) -> sp.csr_matrix:
    return sp.identity(space.dim, format="csr")


def assemble_load(space: DgSpace, phi) -> np.ndarray:
    """load_i = <phi, b_i>"""
    return inner_product_with_basis(phi, space)


def bilinear_form_terms(w: FeFunction, v: FeFunction, penalty: PenaltyConfig) -> Dict[str, float]:
    """The seven terms of B(w, v), integrated from traces"""
    space = w.space
    if v.space is not space:
        raise ValueError("bilinear_form_terms needs both functions in one space")
    r = space.degree
    sigma, xi = penalty_coefficients(space, penalty)
    points, weights = quadrature(space.mesh, triangle_rule(max(1, 2 * (r - 2))))
    lap_w = w.evaluate_on(space.mesh, points, "lap")
    lap_v = v.evaluate_on(space.mesh, points, "lap")
    tw, tv = edge_traces(w), edge_traces(v)
    ew = tw.weights

    def edge_integral(values) -> float:
        return float(np.sum(ew * values))

    def dot(a, b):
        return np.einsum("eqd,eqd->eq", a, b)

    return {
        "laplacians": float(np.sum(weights * lap_w * lap_v)),
        "gradlap_w_jump_v": edge_integral(dot(tw.gradlap_average, tv.value_jump)),
        "gradlap_v_jump_w": edge_integral(dot(tv.gradlap_average, tw.value_jump)),
        "lap_w_jump_grad_v": -edge_integral(tw.lap_average * tv.grad_jump),
        "lap_v_jump_grad_w": -edge_integral(tv.lap_average * tw.grad_jump),
        "value_penalty": edge_integral(sigma[:, None] * dot(tw.value_jump, tv.value_jump)),
        "gradient_penalty": edge_integral(xi[:, None] * tw.grad_jump * tv.grad_jump),
    }


def bilinear_form(w: FeFunction, v: FeFunction, penalty: PenaltyConfig) -> float:
    return sum(bilinear_form_terms(w, v, penalty).values())


def energy_norm_squared(w: FeFunction, penalty: PenaltyConfig) -> float:
    """||lap_h w||^2 + ||sqrt(sigma) [[w]]||^2 + ||sqrt(xi) [[grad w]]||^2"""
    terms = bilinear_form_terms(w, w, penalty)
    return terms["laplacians"] + terms["value_penalty"] + terms["gradient_penalty"]
