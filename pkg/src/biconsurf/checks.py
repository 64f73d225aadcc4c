"""Stress-bienergy tensor checks, equivalence matrix, Simons and integral
formulas, parallel shape-operator diagnostics, space-form target derivation.

All residuals are reported both as area-weighted L2 and as L-infinity norms
of pointwise g-norms; "analytic" jets put them at round-off, finite
difference jets at O(h^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import curvature_operator, split_tangent_normal
from .grid import integrate
from .immersion import (
    EPS_PU_ANALYTIC,
    EPS_PU_FD,
    SurfaceGeometry,
    trace_A_dperpH,
    trace_RN_H,
)
from .tensors import (
    ConformalChart,
    codazzi_defect_coords,
    cov_derivative,
    cov_deriv_inner,
    divergence_coords,
    grad_norm_sq,
    grad_vec,
    holomorphicity_residual,
    laplacian,
    tensor_inner,
    vec_divergence,
)


class NonConstantCurvaturesError(ValueError):
    """Space-form target derivation requires constant principal curvatures."""


def interior_mask(grid, margin: int) -> np.ndarray:
    """Boolean node mask excluding ``margin`` rows at each non-periodic edge.

    Finite-difference jets carry one-sided-stencil error bands at open
    boundaries; differencing those fields again does not converge there, so
    residual norms of derived identities are restricted to the interior.
    """
    mask = np.ones(grid.shape, dtype=bool)
    if margin > 0:
        if not grid.periodic_u:
            mask[:margin] = False
            mask[-margin:] = False
        if not grid.periodic_v:
            mask[:, :margin] = False
            mask[:, -margin:] = False
    return mask


def weighted_l2(field: np.ndarray, geom: SurfaceGeometry, mask=None) -> float:
    dv = geom.area_element
    f2 = np.asarray(field) ** 2
    if mask is not None:
        f2 = np.where(mask, f2, 0.0)
        dv = np.where(mask, dv, 0.0)
    num = integrate(geom.grid, f2 * geom.area_element)
    den = integrate(geom.grid, dv)
    return float(np.sqrt(num / den))


def vector_norms(V: np.ndarray, geom: SurfaceGeometry, mask=None) -> tuple[float, float]:
    """(L2, Linf) of the pointwise g-norm of a coordinate vector field."""
    mag = np.sqrt(np.maximum(geom.vec_norm_sq(V), 0.0))
    if mask is not None:
        mag = np.where(mask, mag, 0.0)
    return weighted_l2(mag, geom), float(np.max(mag))


def stress_bienergy(A_H: np.ndarray, Hsq: np.ndarray) -> np.ndarray:
    """S2 = -2 |H|^2 I + 4 A_H (mixed components, m = 2)."""
    S2 = 4.0 * np.asarray(A_H).copy()
    S2[..., 0, 0] -= 2.0 * Hsq
    S2[..., 1, 1] -= 2.0 * Hsq
    return S2


def principal_curvatures(A_H: np.ndarray, Hsq: np.ndarray, source: str = "analytic"):
    """Eigenvalues of the shape operator, their gap, pseudoumbilical mask.

    The mixed-component matrix of a g-symmetric operator is similar to a
    symmetric one, so its eigenvalues are real; tiny negative discriminants
    from round-off are clamped.
    """
    tr = A_H[..., 0, 0] + A_H[..., 1, 1]
    det = A_H[..., 0, 0] * A_H[..., 1, 1] - A_H[..., 0, 1] * A_H[..., 1, 0]
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    lam1 = 0.5 * (tr + disc)
    lam2 = 0.5 * (tr - disc)
    mu = lam1 - lam2
    eps = EPS_PU_ANALYTIC if source == "analytic" else EPS_PU_FD
    pu_mask = mu <= eps * (1.0 + Hsq)
    return lam1, lam2, mu, pu_mask


def shape_operator_norm_sq(geom: SurfaceGeometry) -> np.ndarray:
    """|A_H|^2 = lambda_1^2 + lambda_2^2."""
    lam1, lam2, _, _ = geom.principal
    return lam1 * lam1 + lam2 * lam2


def biconservativity_residuals(geom: SurfaceGeometry) -> dict:
    """The four equivalent biconservativity conditions plus internal identities.

    Returns coordinate vector fields keyed ``cond1`` .. ``cond4`` (each zero
    iff the surface is biconservative), the divergence-route gap of the
    stress tensor, and the trace identity for nabla A_H.
    """
    S2 = stress_bienergy(geom.A_H, geom.Hsq)
    div_S2 = divergence_coords(geom.grid, S2, geom.gamma, geom.ginv)
    div_AH = divergence_coords(geom.grid, geom.A_H, geom.gamma, geom.ginv)
    gH = geom.grad_scalar(geom.Hsq)
    div_S2_formula = -2.0 * gH + 4.0 * div_AH

    tA = trace_A_dperpH(geom)
    tR = trace_RN_H(geom)
    tr_nabla_AH = div_AH  # trace of nabla T equals Div T for symmetric T

    return {
        "cond1": div_S2,
        "cond2": tA + tr_nabla_AH + tR,
        "cond3": gH + 2.0 * tA + 2.0 * tR,
        "cond4": 2.0 * tr_nabla_AH - gH,
        "divergence_route_gap": div_S2 - div_S2_formula,
        "trace_identity": tr_nabla_AH - gH - tA - tR,
        "grad_Hsq": gH,
    }


def equivalence_matrix(
    geom: SurfaceGeometry,
    chart: ConformalChart | None,
    tol_pass: float,
    tol_implied: float,
) -> dict:
    """Residuals of the four equivalent surface conditions and the pairwise
    implication table: any two conditions passing must imply the others."""
    res = biconservativity_residuals(geom)
    _, r1 = vector_norms(res["cond1"], geom)
    _, r2 = vector_norms(res["grad_Hsq"], geom)
    if chart is not None:
        r3 = float(np.max(np.abs(holomorphicity_residual(chart, geom.A_H))))
    else:
        r3 = None
    defect = codazzi_defect_coords(geom.grid, geom.A_H, geom.gamma)
    _, r4 = vector_norms(defect, geom)

    residuals = {"biconservative": r1, "cmc": r2, "hopf_holomorphic": r3, "codazzi": r4}
    avail = {k: v for k, v in residuals.items() if v is not None}
    keys = list(avail)
    implications = []
    ok = True
    for i, ki in enumerate(keys):
        for kj in keys[i + 1 :]:
            if avail[ki] <= tol_pass and avail[kj] <= tol_pass:
                implied = all(v <= tol_implied for v in avail.values())
                implications.append({"pair": (ki, kj), "implied_pass": implied})
                ok = ok and implied
    return {
        "residuals": residuals,
        "implications": implications,
        "all_implications_hold": ok,
        "hopf_skipped": chart is None,
    }


def simons_residual(geom: SurfaceGeometry, chart: ConformalChart, bicons_tol: float = 1e-6):
    """Pointwise residual of the Simons-type identity for S2.

    Valid only on biconservative input; if the surface fails the
    biconservativity residual at ``bicons_tol`` the result is flagged, not
    rejected.
    """
    res = biconservativity_residuals(geom)
    _, bicons_linf = vector_norms(res["cond1"], geom)
    tau2 = 4.0 * geom.Hsq  # |tau(phi)|^2 = 4 |H|^2
    S2 = stress_bienergy(geom.A_H, geom.Hsq)
    S2_sq = tensor_inner(chart, S2, S2)
    K = geom.K
    nabla_S2 = cov_derivative(chart, S2)
    sharp = np.einsum("...ij,...j->...i", S2, grad_vec(chart, tau2))
    lhs = 0.5 * laplacian(chart, S2_sq)
    rhs = (
        -2.0 * K * S2_sq
        + vec_divergence(chart, sharp)
        + K * tau2**2
        + 0.5 * laplacian(chart, tau2**2)
        + grad_norm_sq(chart, tau2)
        - cov_deriv_inner(chart, nabla_S2, nabla_S2)
    )
    return lhs - rhs, bool(bicons_linf > bicons_tol)


def positivity_quantity(geom: SurfaceGeometry) -> np.ndarray:
    """2 |S2|^2 - |tau|^4 = 32 (|A_H|^2 - 2 |H|^4), nonnegative pointwise."""
    return 32.0 * (shape_operator_norm_sq(geom) - 2.0 * geom.Hsq**2)


def integral_formula_check(geom: SurfaceGeometry, chart: ConformalChart) -> dict:
    """Both compact-surface integral formulas on a doubly periodic grid."""
    if not geom.grid.doubly_periodic:
        raise ValueError("integral formulas need a doubly periodic (torus) grid")
    dv = geom.area_element
    tau2 = 4.0 * geom.Hsq
    S2 = stress_bienergy(geom.A_H, geom.Hsq)
    S2_sq = tensor_inner(chart, S2, S2)
    nabla_S2 = cov_derivative(chart, S2)
    K = geom.K

    lhs_s2 = integrate(
        geom.grid,
        (cov_deriv_inner(chart, nabla_S2, nabla_S2) + 2.0 * K * (S2_sq - 0.5 * tau2**2)) * dv,
    )
    rhs_s2 = integrate(geom.grid, grad_norm_sq(chart, tau2) * dv)

    nabla_AH = cov_derivative(chart, geom.A_H)
    AH_sq = shape_operator_norm_sq(geom)
    lhs_ah = integrate(
        geom.grid,
        (cov_deriv_inner(chart, nabla_AH, nabla_AH) + 2.0 * K * (AH_sq - 2.0 * geom.Hsq**2)) * dv,
    )
    rhs_ah = integrate(geom.grid, 2.5 * grad_norm_sq(chart, geom.Hsq) * dv)

    return {
        "int_S2_gap": lhs_s2 - rhs_s2,
        "int_AH_gap": lhs_ah - rhs_ah,
        "positivity_min": float(np.min(positivity_quantity(geom))),
    }


def parallel_AH_checks(geom: SurfaceGeometry, tol: float) -> dict:
    """Norm of nabla A_H plus the consequences that must follow when it vanishes:
    constant eigenvalues, the curvature-commutation identity, the trace
    cancellation, and pseudoumbilical-or-flat."""
    nab = geom.nabla_AH
    mag = np.sqrt(np.maximum(geom.nabla_norm_sq(nab), 0.0))
    linf = float(np.max(mag))
    lam1, lam2, mu, _ = geom.principal

    out = {
        "nabla_AH_l2": weighted_l2(mag, geom),
        "nabla_AH_linf": linf,
        "is_parallel": linf <= tol,
    }
    if linf <= tol:
        out["lambda_spread"] = float(
            max(np.ptp(lam1), np.ptp(lam2))
        )
        # A_{dperp_u H}(d_v) - A_{dperp_v H}(d_u) = (R^N(d_u, d_v) H)^T
        lhs = np.einsum(
            "...ic,...c->...i",
            geom.ginv,
            np.einsum("...cm,...m->...c", geom.B[..., :, 1, :], geom.dperpH[..., 0, :])
            - np.einsum("...cm,...m->...c", geom.B[..., :, 0, :], geom.dperpH[..., 1, :]),
        )
        R = _rn_xy_h(geom)
        tang, _ = split_tangent_normal(geom.jet.d1, R)
        rhs = np.einsum("...ab,...bk,...k->...a", geom.ginv, geom.jet.d1, tang)
        _, out["commutation_linf"] = vector_norms(lhs - rhs, geom)
        tA = trace_A_dperpH(geom)
        tR = trace_RN_H(geom)
        _, out["trace_cancellation_linf"] = vector_norms(tA + tR, geom)
        out["flat_or_pseudoumbilical_gap"] = float(
            min(np.max(np.abs(mu)), np.max(np.abs(geom.K)))
        )
    return out


def _rn_xy_h(geom: SurfaceGeometry) -> np.ndarray:
    return curvature_operator(
        geom.space, geom.jet.d1[..., 0, :], geom.jet.d1[..., 1, :], geom.H
    )


def derive_spaceform_target(lam1, lam2, mode: str, K=None, tol: float = 1e-8):
    """Constant sectional curvature c and mean curvature |H| of the local
    3-space-form immersion whose shape operator is A_H or S2.

    ``lam1``/``lam2`` may be fields (constancy is enforced) or scalars.
    Umbilical modes additionally require a flat surface (K = 0).
    """
    lam1 = np.asarray(lam1, dtype=np.float64)
    lam2 = np.asarray(lam2, dtype=np.float64)
    for lam in (lam1, lam2):
        spread = float(np.ptp(lam)) if lam.ndim else 0.0
        if spread > tol * (1.0 + float(np.max(np.abs(lam)))):
            raise NonConstantCurvaturesError(
                f"principal curvatures not constant (spread {spread:.3e})"
            )
    l1 = float(np.mean(lam1))
    l2 = float(np.mean(lam2))
    if l1 < l2:
        raise ValueError("expected lam1 >= lam2")
    hsq = 0.5 * (l1 + l2)
    mu = l1 - l2

    if mode in ("umbilical_A_H", "umbilical_S2"):
        if mu > tol * (1.0 + abs(l1)):
            raise ValueError("umbilical modes require lam1 = lam2")
        if K is None or float(np.max(np.abs(K))) > tol * (1.0 + hsq**2):
            raise ValueError("umbilical modes require a flat surface (K = 0)")
        if mode == "umbilical_A_H":
            return -(hsq**2), hsq
        return -4.0 * hsq**2, 2.0 * hsq

    if mu <= tol * (1.0 + abs(l1)):
        raise ValueError(f"mode {mode!r} requires lam1 > lam2; use an umbilical mode")
    if mode == "A_H":
        return mu**2 / 4.0 - hsq**2, hsq
    if mode == "S2":
        return 4.0 * (mu**2 - hsq**2), 2.0 * hsq
    raise ValueError(f"unknown mode {mode!r}")
