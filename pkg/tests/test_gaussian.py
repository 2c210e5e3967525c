import json

import numpy as np
import pytest

from eprdrive import gaussian as g
from eprdrive.exceptions import InvalidStateError


def coth(x):
    return 1.0 / np.tanh(x)


class TestSymplecticEigenvalues:
    def test_vacuum(self):
        assert np.allclose(g.symplectic_eigenvalues(g.vacuum_cov(1)), [1.0], atol=1e-12)

    def test_thermal_beta_one(self):
        # analytic thermal variance per quadrature is coth(beta/2)/2
        sigma = np.diag([coth(0.5) / 2] * 2)
        nus = g.symplectic_eigenvalues(sigma)
        assert abs(nus[0] - coth(0.5)) < 1e-12
        assert abs(nus[0] - 2.1639534) < 1e-6

    def test_two_mode_squeezed_is_pure(self):
        nus = g.symplectic_eigenvalues(g.two_mode_squeezed_cov(0.5))
        assert np.allclose(nus, [1.0, 1.0], atol=1e-12)

    def test_invariant_under_symplectic_conjugation(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            sigma = g.random_physical_cov(2, rng)
            s = g.random_symplectic(2, rng)
            before = g.symplectic_eigenvalues(sigma)
            after = g.symplectic_eigenvalues(s @ sigma @ s.T)
            assert np.max(np.abs(before - after)) < 1e-9 * max(1.0, before[-1])

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidStateError):
            g.symplectic_eigenvalues(np.diag([1.0, -1.0]))

    def test_rejects_asymmetric(self):
        bad = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(InvalidStateError):
            g.symplectic_eigenvalues(bad)


class TestPartialTranspose:
    def test_vacuum_unchanged(self):
        sigma = g.vacuum_cov(2)
        assert np.array_equal(g.partial_transpose(sigma, 1), sigma)

    def test_involution_bit_exact(self):
        rng = np.random.default_rng(3)
        sigma = g.random_physical_cov(2, rng)
        twice = g.partial_transpose(g.partial_transpose(sigma, 1), 1)
        assert np.array_equal(twice, sigma)

    def test_two_mode_squeezed_smallest_nu(self):
        sigma = g.two_mode_squeezed_cov(0.5)
        nu = g.symplectic_eigenvalues(g.partial_transpose(sigma, 1))[0]
        assert abs(nu - np.exp(-1.0)) < 1e-12

    def test_index_out_of_range(self):
        with pytest.raises(InvalidStateError):
            g.partial_transpose(g.vacuum_cov(2), 2)


class TestLogNegativity:
    def test_vacuum_zero(self):
        assert g.log_negativity(g.vacuum_cov(2)) == 0.0

    @pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 2.0])
    def test_two_mode_squeezed_equals_2r(self, r):
        assert abs(g.log_negativity(g.two_mode_squeezed_cov(r)) - 2.0 * r) < 1e-9

    def test_local_symplectic_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            sigma = g.random_physical_cov(2, rng)
            s_local = np.zeros((4, 4))
            s_local[0:2, 0:2] = g.random_symplectic(1, rng)
            s_local[2:4, 2:4] = g.random_symplectic(1, rng)
            before = g.log_negativity(sigma)
            after = g.log_negativity(s_local @ sigma @ s_local.T)
            assert abs(before - after) < 1e-8 * max(1.0, abs(before))

    def test_nonnegative_det_gamma_implies_separable(self):
        rng = np.random.default_rng(13)
        found = 0
        for _ in range(300):
            sigma = g.random_physical_cov(2, rng)
            if g.det_gamma(sigma) >= 0.0:
                found += 1
                assert g.log_negativity(sigma) == 0.0
        assert found > 10  # the sample actually exercises the branch


class TestTwoModeNuOracle:
    def test_vacuum(self):
        assert abs(g.two_mode_nu_oracle(g.vacuum_cov(2)) - 1.0) < 1e-12

    def test_two_mode_squeezed(self):
        assert abs(g.two_mode_nu_oracle(g.two_mode_squeezed_cov(1.0)) - np.exp(-2.0)) < 1e-9

    def test_matches_eigen_path_on_random_states(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            sigma = g.random_physical_cov(2, rng)
            via_eig = g.smallest_pt_symplectic_eigenvalue(sigma)
            via_oracle = g.two_mode_nu_oracle(sigma)
            assert abs(via_eig - via_oracle) < 1e-9 * via_oracle


class TestDetGamma:
    def test_vacuum(self):
        assert g.det_gamma(g.vacuum_cov(2)) == 0.0

    def test_thermal_product(self):
        sigma = np.diag([1.3, 1.3, 2.5, 2.5])
        assert g.det_gamma(sigma) == 0.0

    def test_two_mode_squeezed_negative(self):
        for r in [0.2, 0.7, 1.5]:
            expected = -np.sinh(2.0 * r) ** 2 / 4.0
            assert abs(g.det_gamma(g.two_mode_squeezed_cov(r)) - expected) < 1e-12


class TestNegLogNuGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        step = 1e-6
        for _ in range(40):
            sigma = g.random_physical_cov(2, rng, nu_max=2.0)
            _, grad, degenerate = g.neg_log_nu_gradient(sigma)
            if degenerate:
                continue
            fd = np.zeros((4, 4))
            for i in range(4):
                for j in range(i, 4):
                    d = np.zeros((4, 4))
                    d[i, j] = d[j, i] = step
                    fd_val = (g.neg_log_nu(sigma + d) - g.neg_log_nu(sigma - d)) / (2 * step)
                    fd[i, j] = fd[j, i] = fd_val
            # fd pairs against symmetric perturbations: diagonal once, off-diagonal twice
            paired = grad * (2.0 - np.eye(4))
            assert np.max(np.abs(paired - fd)) < 1e-5 * max(1.0, np.max(np.abs(fd)))

    def test_flags_degenerate_pair(self):
        # vacuum has nu_- = nu_+ = 1 exactly
        _, _, degenerate = g.neg_log_nu_gradient(g.vacuum_cov(2))
        assert degenerate


class TestWigner:
    def test_vacuum_origin_value(self):
        qs, ps, w = g.wigner_grid(g.vacuum_cov(1), [0.0, 0.0], (-1, 1), (-1, 1), 3, 3)
        assert abs(w[1, 1] - 1.0 / np.pi) < 1e-12

    def test_normalization_by_riemann_sum(self):
        qs, ps, w = g.wigner_grid(g.vacuum_cov(1), [0.0, 0.0], (-6, 6), (-6, 6), 201, 201)
        total = w.sum() * (qs[1] - qs[0]) * (ps[1] - ps[0])
        assert abs(total - 1.0) < 1e-3

    def test_squeezed_contour_axis_ratio(self):
        r = 0.6
        sigma = g.squeezed_cov(r)
        level = np.exp(-0.5) / (2.0 * np.pi * np.sqrt(np.linalg.det(sigma)))
        # crossing points of the e^{-1/2} contour along the principal axes
        q_star = np.sqrt(sigma[0, 0])
        p_star = np.sqrt(sigma[1, 1])
        for point, expected in [((q_star, 0.0), level), ((0.0, p_star), level)]:
            qs, ps, w = g.wigner_grid(sigma, [0, 0], (point[0], point[0]), (point[1], point[1]), 1, 1)
            assert abs(w[0, 0] - expected) < 1e-12
        assert abs(q_star / p_star - np.exp(2.0 * r)) < 1e-12

    def test_singular_rejected(self):
        with pytest.raises(InvalidStateError):
            g.wigner_grid(np.zeros((2, 2)), [0, 0], (-1, 1), (-1, 1), 3, 3)


class TestCovarianceMatrixType:
    def test_json_round_trip(self):
        cm = g.CovarianceMatrix.from_matrix(g.two_mode_squeezed_cov(0.3))
        again = g.CovarianceMatrix.from_json(cm.to_json())
        assert again.dim == 4
        assert np.allclose(again.entries, cm.entries, atol=0, rtol=0)
        # serialized form is {dim, row-major entries}
        payload = json.loads(cm.to_json())
        assert set(payload) == {"dim", "entries"}
        assert len(payload["entries"]) == 16

    def test_rejects_heisenberg_violation(self):
        with pytest.raises(InvalidStateError):
            g.CovarianceMatrix.from_matrix(0.3 * np.eye(4))

    def test_rejects_odd_dimension(self):
        with pytest.raises(InvalidStateError):
            g.CovarianceMatrix(dim=3, entries=np.eye(3))
