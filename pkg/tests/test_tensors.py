import numpy as np
import pytest

from biconsurf.grid import build_grid, flat_laplacian
from biconsurf.tensors import (
    ConformalChart,
    InternalConsistencyError,
    NonIsothermalError,
    christoffel_isothermal,
    codazzi_defect,
    conformal_chart_from_metric,
    cov_derivative,
    divergence,
    divergence_routes,
    div_T_grad_alpha_residual,
    flat_chart,
    gauss_curvature_conformal,
    grad_vec,
    hessian,
    holomorphicity_residual,
    holomorphicity_residual_routes,
    hopf_differential,
    laplacian,
    nabla_grad,
    raise_index,
    rough_laplacian,
    tensor_inner,
    tensor_trace,
    vec_divergence,
    weitzenbock_pairing_residual,
)


def periodic_chart(n):
    g = build_grid((0.0, 2.0 * np.pi), (0.0, 2.0 * np.pi), n, n, True, True)
    U, V = g.mesh()
    rho = 0.2 * np.sin(U) * np.cos(V)
    return ConformalChart(g, rho), U, V


def smooth_tensor(U, V):
    T = np.empty(U.shape + (2, 2))
    T[..., 0, 0] = 1.0 + 0.3 * np.cos(U + V)
    T[..., 1, 1] = 2.0 - 0.2 * np.sin(U)
    T[..., 0, 1] = T[..., 1, 0] = 0.1 * np.sin(U) * np.sin(V)
    return T


def open_flat_chart(n):
    g = build_grid((0.0, 1.0), (0.0, 1.0), n, n)
    return flat_chart(g), *g.mesh()


def airy_tensor(psi_xx, psi_xy, psi_yy):
    """Divergence-free symmetric tensor built from second derivatives of a
    potential on a flat chart."""
    T = np.empty(psi_xx.shape + (2, 2))
    T[..., 0, 0] = psi_yy
    T[..., 1, 1] = psi_xx
    T[..., 0, 1] = T[..., 1, 0] = -psi_xy
    return T


class TestChristoffels:
    def test_flat_chart_zero(self):
        chart, _, _ = open_flat_chart(8)
        np.testing.assert_allclose(chart.gamma, 0.0)

    def test_linear_rho_oracle(self):
        g = build_grid((0.0, 1.0), (0.0, 1.0), 16, 16)
        U, V = g.mesh()
        a, b = 0.7, -0.3
        chart = ConformalChart(g, a * U + b * V)
        gamma = christoffel_isothermal(chart)
        # Gamma^k_{ij} for g = e^{2 rho} delta with rho_x = a, rho_y = b
        np.testing.assert_allclose(gamma[..., 0, 0, 0], a, atol=1e-10)
        np.testing.assert_allclose(gamma[..., 0, 0, 1], b, atol=1e-10)
        np.testing.assert_allclose(gamma[..., 0, 1, 1], -a, atol=1e-10)
        np.testing.assert_allclose(gamma[..., 1, 0, 0], -b, atol=1e-10)
        np.testing.assert_allclose(gamma[..., 1, 0, 1], a, atol=1e-10)
        np.testing.assert_allclose(gamma[..., 1, 1, 1], b, atol=1e-10)


class TestChartExtraction:
    def test_round_trip(self):
        chart, _, _ = periodic_chart(16)
        g = np.zeros(chart.grid.shape + (2, 2))
        g[..., 0, 0] = g[..., 1, 1] = chart.e2r
        chart2 = conformal_chart_from_metric(chart.grid, g)
        np.testing.assert_allclose(chart2.rho, chart.rho, atol=1e-12)

    def test_rejects_non_isothermal(self):
        g = build_grid((0.0, 1.0), (0.0, 1.0), 8, 8)
        met = np.zeros(g.shape + (2, 2))
        met[..., 0, 0] = 1.0
        met[..., 1, 1] = 2.0
        with pytest.raises(NonIsothermalError):
            conformal_chart_from_metric(g, met)


class TestDivergence:
    def test_routes_agree(self):
        # the two routes rearrange the same stencil outputs, so they agree
        # to round-off, which is stronger than the O(h^2) requirement
        for n in (32, 64):
            chart, U, V = periodic_chart(n)
            T = smooth_tensor(U, V)
            a, b = divergence_routes(chart, T)
            assert np.max(np.abs(a - b)) < 1e-12

    def test_airy_divergence_free(self):
        for n, bound in ((32, 2e-2), (64, 5e-3)):
            chart, U, V = open_flat_chart(n)
            # psi = x^4 y^2, analytic second derivatives
            T = airy_tensor(12.0 * U**2 * V**2, 8.0 * U**3 * V, 2.0 * U**4)
            div = divergence(chart, T)
            assert np.max(np.abs(div)) < bound

    def test_consistency_guard(self):
        chart, U, V = periodic_chart(16)
        T = 1e8 * smooth_tensor(U, V)  # amplify round-off above the guard
        divergence(chart, T, consistency_tol=1.0)
        with pytest.raises(InternalConsistencyError):
            divergence(chart, T, consistency_tol=1e-18)

    def test_identity_tensor_divergence_free(self):
        chart, _, _ = periodic_chart(16)
        T = np.zeros(chart.grid.shape + (2, 2))
        T[..., 0, 0] = T[..., 1, 1] = 1.0
        np.testing.assert_allclose(divergence(chart, T), 0.0, atol=1e-12)


class TestFourConditions:
    """Synthetic pair-implication cases: constructions satisfying two of
    {divergence-free, constant trace, holomorphic quadratic differential,
    Codazzi} must satisfy the other two at truncation level."""

    def harmonic_airy(self, n):
        chart, U, V = open_flat_chart(n)
        # psi = x^3 - 3 x y^2 is harmonic: trace = 0 and Div T = 0 exactly
        T = airy_tensor(6.0 * U, -6.0 * V, -6.0 * U)
        return chart, T

    def test_harmonic_airy_implies_codazzi_and_holomorphic(self):
        prev = None
        for n in (32, 64):
            chart, T = self.harmonic_airy(n)
            cod = np.max(np.abs(codazzi_defect(chart, T)))
            hol = np.max(np.abs(holomorphicity_residual(chart, T)))
            cur = max(cod, hol)
            if prev is not None:
                assert cur < 1e-10 or np.log2(prev / cur) > 1.8
            prev = cur

    def test_const_trace_codazzi_implies_divergence_free(self):
        # T = c I + Hess(psi), psi harmonic: Codazzi with constant trace
        for n, bound in ((32, 2e-2), (64, 6e-3)):
            chart, U, V = open_flat_chart(n)
            T = np.empty(chart.grid.shape + (2, 2))
            T[..., 0, 0] = 5.0 + 6.0 * U
            T[..., 1, 1] = 5.0 - 6.0 * U
            T[..., 0, 1] = T[..., 1, 0] = -6.0 * V
            assert np.max(np.abs(tensor_trace(T) - 10.0)) < 1e-12
            assert np.max(np.abs(codazzi_defect(chart, T))) < 1e-10
            assert np.max(np.abs(divergence(chart, T))) < bound
            hopf = hopf_differential(chart, T)
            np.testing.assert_allclose(hopf, 3.0 * (U + 1j * V), atol=1e-12)

    def test_divergence_free_alone_does_not_imply(self):
        # generic Airy potential: Div T = 0 but trace nonconstant; the
        # Codazzi and holomorphicity residuals must stay bounded away from 0
        linfs = []
        for n in (32, 64):
            chart, U, V = open_flat_chart(n)
            T = airy_tensor(12.0 * U**2, 0.0 * U, 12.0 * V**2)
            linfs.append(np.max(np.abs(codazzi_defect(chart, T))))
        assert min(linfs) > 1.0
        assert abs(linfs[0] - linfs[1]) / linfs[0] < 0.2


class TestHopf:
    def test_multiple_of_identity_vanishes(self):
        chart, U, V = periodic_chart(16)
        T = np.zeros(chart.grid.shape + (2, 2))
        T[..., 0, 0] = T[..., 1, 1] = 1.0 + np.sin(U)
        np.testing.assert_allclose(hopf_differential(chart, T), 0.0, atol=1e-14)

    def test_routes_agree(self):
        gaps = []
        for n in (32, 64):
            chart, U, V = periodic_chart(n)
            T = smooth_tensor(U, V)
            direct, closed = holomorphicity_residual_routes(chart, T)
            gaps.append(np.max(np.abs(direct - closed)))
        assert np.log2(gaps[0] / gaps[1]) > 1.8


class TestRoughLaplacian:
    def test_trace_formula_divergence_free_flat(self):
        # trace(grad^2 T) = 2KT - tKI - (Lap t)I - grad(grad t) for
        # divergence-free T; on a flat chart K = 0
        errs = []
        for n in (32, 64):
            chart, U, V = open_flat_chart(n)
            T = airy_tensor(12.0 * U**2 * V**2, 8.0 * U**3 * V, 2.0 * U**4)
            t = tensor_trace(T)
            lhs = -rough_laplacian(chart, T)  # trace of the second derivative
            rhs = np.zeros_like(T)
            lap_t = laplacian(chart, t)
            rhs[..., 0, 0] -= lap_t
            rhs[..., 1, 1] -= lap_t
            rhs -= nabla_grad(chart, t)
            # one-sided boundary stencils differenced twice do not converge;
            # the identity is checked on the interior
            errs.append(np.max(np.abs(lhs - rhs)[2:-2, 2:-2]))
        assert np.log2(errs[0] / errs[1]) > 1.8

    def test_weitzenbock_pairing(self):
        # discrete integration by parts is exact on a doubly periodic grid,
        # so the pairing residual sits at round-off
        for n in (32, 64):
            chart, U, V = periodic_chart(n)
            T = smooth_tensor(U, V)
            S = smooth_tensor(V, U)
            assert weitzenbock_pairing_residual(chart, T, S) < 1e-12

    def test_weitzenbock_needs_periodicity(self):
        chart, U, V = open_flat_chart(8)
        T = airy_tensor(U, V, U)
        with pytest.raises(ValueError):
            weitzenbock_pairing_residual(chart, T, T)


class TestScalarOperators:
    def test_laplacian_sign_and_hessian_trace(self):
        chart, U, V = periodic_chart(32)
        f = np.sin(U) + np.cos(V)
        lap = laplacian(chart, f)
        # geometer's convention: positive on the flat-chart eigenfunctions
        flat = flat_chart(chart.grid)
        np.testing.assert_allclose(laplacian(flat, f), f, atol=1e-2)
        # trace_g Hess f = div grad f = -Lap f
        H = nabla_grad(chart, f)
        np.testing.assert_allclose(H[..., 0, 0] + H[..., 1, 1], -lap, atol=1e-10)

    def test_hessian_symmetric(self):
        chart, U, V = periodic_chart(16)
        Hs = hessian(chart, np.sin(U) * np.cos(V))
        np.testing.assert_allclose(Hs[..., 0, 1], Hs[..., 1, 0], atol=1e-14)

    def test_vec_divergence_against_gradient(self):
        # div grad f = -Lap f on any conformal chart
        errs = []
        for n in (32, 64):
            chart, U, V = periodic_chart(n)
            f = np.sin(U) * np.cos(V)
            errs.append(np.max(np.abs(vec_divergence(chart, grad_vec(chart, f)) + laplacian(chart, f))))
        assert np.log2(errs[0] / errs[1]) > 1.8


class TestGaussCurvature:
    def test_mercator_chart_oracle(self):
        # rho = log r - log cosh v gives the round metric of radius r
        r = 2.0
        errs = []
        for n in (32, 64):
            g = build_grid((0.0, 2.0 * np.pi), (-1.2, 1.2), n, n, periodic_u=True)
            _, V = g.mesh()
            chart = ConformalChart(g, np.log(r) - np.log(np.cosh(V)))
            errs.append(np.max(np.abs(gauss_curvature_conformal(chart) - 1.0 / r**2)))
        assert errs[1] < 1e-3
        assert np.log2(errs[0] / errs[1]) > 1.8

    def test_flat_chart_zero(self):
        chart, _, _ = open_flat_chart(8)
        np.testing.assert_allclose(gauss_curvature_conformal(chart), 0.0)


class TestDivTGradAlpha:
    def test_constant_alpha(self):
        chart, U, V = periodic_chart(16)
        T = smooth_tensor(U, V)
        res = div_T_grad_alpha_residual(chart, T, np.full(chart.grid.shape, 3.0))
        np.testing.assert_allclose(res, 0.0, atol=1e-12)

    def test_identity_tensor_reduces(self):
        errs = []
        for n in (32, 64):
            chart, U, V = periodic_chart(n)
            T = np.zeros(chart.grid.shape + (2, 2))
            T[..., 0, 0] = T[..., 1, 1] = 1.0
            errs.append(np.max(np.abs(div_T_grad_alpha_residual(chart, T, np.sin(U) * np.sin(V)))))
        assert np.log2(errs[0] / errs[1]) > 1.8

    def test_generic_residual_second_order(self):
        errs = []
        for n in (32, 64):
            chart, U, V = periodic_chart(n)
            T = smooth_tensor(U, V)
            errs.append(np.max(np.abs(div_T_grad_alpha_residual(chart, T, np.cos(U) + np.sin(V)))))
        assert np.log2(errs[0] / errs[1]) > 1.8


def test_tensor_inner_frame_invariance():
    # orthonormal-frame components of a (1,1) field equal its mixed
    # coordinate components, so the inner product ignores the conformal factor
    chart, U, V = periodic_chart(8)
    T = smooth_tensor(U, V)
    flat = flat_chart(chart.grid)
    np.testing.assert_allclose(tensor_inner(chart, T, T), tensor_inner(flat, T, T))


def test_cov_derivative_reduces_to_fd_on_flat(rng):
    chart, U, V = open_flat_chart(16)
    T = np.einsum("...i,...j->...ij", np.stack([U, V], -1), np.stack([V, U], -1))
    S = cov_derivative(chart, T)
    from biconsurf.grid import fd_derivative

    np.testing.assert_allclose(S[..., 0, :, :], fd_derivative(chart.grid, T, 0, 1), atol=1e-12)
    np.testing.assert_allclose(S[..., 1, :, :], fd_derivative(chart.grid, T, 1, 1), atol=1e-12)


def test_raise_lower_round_trip():
    chart, U, V = periodic_chart(8)
    T = smooth_tensor(U, V)
    from biconsurf.tensors import lower_index

    np.testing.assert_allclose(raise_index(chart, lower_index(chart, T)), T, atol=1e-14)
