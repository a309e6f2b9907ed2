import numpy as np
import pytest

from qbattery import numerics
from qbattery.dicke import SIGMA_X, SIGMA_Z


I2 = np.eye(2, dtype=complex)


def random_hermitian(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)


def random_state(rng, dim):
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


class TestKron:
    def test_identity(self):
        assert np.array_equal(numerics.kron(I2, I2), np.eye(4))

    def test_sigma_z_identity(self):
        got = numerics.kron(SIGMA_Z, I2)
        # battery ordering: |g> first, so sigma_z = diag(-1, 1)
        assert np.array_equal(np.diag(got), [-1, -1, 1, 1])

    def test_flip_both_qubits(self):
        psi00 = np.array([1, 0, 0, 0], dtype=complex)
        got = numerics.kron(SIGMA_X, SIGMA_X) @ psi00
        assert np.array_equal(got, [0, 0, 0, 1])

    def test_associativity(self):
        rng = np.random.default_rng(7)
        a, b, c = (rng.standard_normal((2, 2)) for _ in range(3))
        left = numerics.kron(numerics.kron(a, b), c)
        right = numerics.kron(a, numerics.kron(b, c))
        assert np.max(np.abs(left - right)) <= 1e-14


class TestEigHermitian:
    def test_sigma_z(self):
        w, _ = numerics.eig_hermitian(SIGMA_Z)
        assert np.allclose(w, [-1, 1])

    def test_sigma_x_closed_form(self):
        w, q = numerics.eig_hermitian(SIGMA_X)
        assert np.allclose(w, [-1, 1])
        # eigenvectors (|0> -+ |1>)/sqrt(2), up to phase
        expect = np.array([[1, 1], [-1, 1]]) / np.sqrt(2)
        for k in range(2):
            overlap = abs(np.vdot(expect[:, k], q[:, k]))
            assert overlap == pytest.approx(1.0, abs=1e-12)

    def test_zero_matrix(self):
        w, _ = numerics.eig_hermitian(np.zeros((4, 4)))
        assert np.array_equal(w, np.zeros(4))

    def test_rejects_non_hermitian(self):
        with pytest.raises(numerics.NotHermitianError):
            numerics.eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(numerics.NotSquareError):
            numerics.eig_hermitian(np.zeros((2, 3)))

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = random_hermitian(rng, 12)
            w, q = numerics.eig_hermitian(a)
            assert np.all(np.diff(w) >= 0)
            recon = (q * w) @ q.conj().T
            scale = max(np.max(np.abs(a)), 1.0)
            assert np.max(np.abs(recon - a)) <= numerics.RECONSTRUCTION_RTOL * scale
            gram = q.conj().T @ q
            assert np.max(np.abs(gram - np.eye(12))) <= numerics.ORTHONORMALITY_TOL


class TestPropagator:
    def test_dt_zero_is_identity(self):
        rng = np.random.default_rng(11)
        h = random_hermitian(rng, 6)
        assert np.max(np.abs(numerics.propagator(h, 0.0) - np.eye(6))) <= 1e-12

    def test_pauli_rotation(self):
        theta = 0.734
        got = numerics.propagator(SIGMA_X, theta)
        expect = np.cos(theta) * I2 - 1j * np.sin(theta) * SIGMA_X
        assert np.max(np.abs(got - expect)) <= 1e-12

    def test_norm_preservation(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            h = random_hermitian(rng, 8)
            psi = random_state(rng, 8)
            out = numerics.propagator(h, 0.2) @ psi
            assert abs(np.linalg.norm(out) - 1.0) <= 1e-10

    def test_unitarity(self):
        rng = np.random.default_rng(9)
        for dt in (0.05, 0.2, 1.7):
            h = random_hermitian(rng, 10)
            u = numerics.propagator(h, dt)
            defect = np.max(np.abs(u.conj().T @ u - np.eye(10)))
            assert defect <= numerics.UNITARY_TOL

    def test_matches_apply_propagator(self):
        rng = np.random.default_rng(13)
        h = random_hermitian(rng, 7)
        psi = random_state(rng, 7)
        direct = numerics.propagator(h, 0.3) @ psi
        applied = numerics.apply_propagator(h, 0.3, psi)
        assert np.max(np.abs(direct - applied)) <= 1e-12

    def test_rejects_non_finite_dt(self):
        with pytest.raises(ValueError):
            numerics.propagator(SIGMA_X, np.inf)


class TestPartialTrace:
    def test_product_state(self):
        battery = np.zeros(4, dtype=complex)
        battery[0] = 1.0
        cavity = np.zeros(3, dtype=complex)
        cavity[2] = 1.0
        psi = np.kron(battery, cavity)
        rho = numerics.partial_trace_cavity(psi, 4, 3)
        expect = np.outer(battery, battery.conj())
        assert np.max(np.abs(rho - expect)) <= 1e-14

    def test_bell_like_state(self):
        psi = np.zeros(4, dtype=complex)
        psi[0] = psi[3] = 1 / np.sqrt(2)  # |g,0> + |e,1>
        rho = numerics.partial_trace_cavity(psi, 2, 2)
        assert np.max(np.abs(rho - np.eye(2) / 2)) <= 1e-12

    def test_trace_hermitian_psd(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            psi = random_state(rng, 6 * 5)
            rho = numerics.partial_trace_cavity(psi, 6, 5)
            assert abs(np.trace(rho).real - 1.0) <= numerics.TRACE_TOL
            assert numerics.hermiticity_defect(rho) <= 1e-12
            assert np.min(np.linalg.eigvalsh(rho)) >= -numerics.PSD_EIGENVALUE_TOL

    def test_dimension_mismatch(self):
        with pytest.raises(numerics.DimensionMismatchError):
            numerics.partial_trace_cavity(np.zeros(7), 2, 3)
