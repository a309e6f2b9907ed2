import numpy as np
import pytest

from qbattery import numerics, symmetric
from qbattery.dicke import (
    BatterySpec,
    IndexOutOfRangeError,
    JointState,
    ParitySector,
    SameSiteError,
    TruncationTooSmallError,
    basis_index,
    build_system,
    check_truncation,
    evolve_step,
    initial_state,
    pair_correlation,
    pauli_expectation,
    photon_number,
    split_index,
    tls_energies,
    tls_energy,
    total_energy,
)

ENV1_SUM = 0.8745 + 1.4507 + 1.2320 + 1.0987


@pytest.fixture(scope="module")
def env1():
    spec = BatterySpec.preset("env1")
    return spec, build_system(spec)


def battery_state(spec, battery_vec, fock):
    """Joint state = given battery vector (x) |fock>."""
    psi = np.zeros(spec.dim, dtype=complex)
    for b, amp in enumerate(battery_vec):
        psi[basis_index(b, fock, spec)] = amp
    return JointState(psi=psi)


class TestSpec:
    def test_preset_defaults(self):
        spec = BatterySpec.preset("env1")
        assert spec.n_tls == 4
        assert spec.n_max == 12
        assert spec.n_init == 4
        assert spec.omega_c == 1.0

    def test_truncation_too_small(self):
        with pytest.raises(TruncationTooSmallError):
            BatterySpec(n_tls=2, frequencies=(1.0, 1.0), n_max=1, n_init=3)

    def test_bad_frequencies(self):
        with pytest.raises(ValueError):
            BatterySpec(n_tls=2, frequencies=(1.0, -0.5))
        with pytest.raises(ValueError):
            BatterySpec(n_tls=3, frequencies=(1.0, 1.0))

    def test_roundtrip(self):
        spec = BatterySpec.preset("env2")
        assert BatterySpec.from_dict(spec.to_dict()) == spec

    def test_sampled_in_range(self):
        spec = BatterySpec.sampled(4, seed=42)
        assert all(0.5 <= w <= 1.5 for w in spec.frequencies)

    def test_basis_roundtrip(self):
        spec = BatterySpec.preset("env1")
        for idx in range(spec.dim):
            b, f = split_index(idx, spec)
            assert basis_index(b, f, spec) == idx


class TestBuildSystem:
    def test_n1_hand_construction(self):
        spec = BatterySpec(n_tls=1, frequencies=(1.0,), n_max=1, n_init=1)
        split = build_system(spec)
        assert np.allclose(np.diag(split.h0), [0, 1, 1, 2])
        assert np.allclose(split.h0, np.diag(np.diag(split.h0)))

    def test_hermitian(self, env1):
        _, split = env1
        for m in (split.h0, split.v, split.hb):
            assert numerics.hermiticity_defect(m) <= numerics.HERMITIAN_TOL

    def test_v_diagonal_free(self, env1):
        _, split = env1
        assert np.max(np.abs(np.diag(split.v))) == 0.0

    def test_h0_ground_energy_zero(self, env1):
        _, split = env1
        w = np.linalg.eigvalsh(split.h0)
        assert abs(w[0]) <= 1e-12

    def test_hb_battery_diagonal_nonneg(self, env1):
        spec, split = env1
        assert np.allclose(split.hb_battery, np.diag(np.diag(split.hb_battery)))
        d = np.diag(split.hb_battery)
        assert np.min(d) == 0.0
        assert np.max(d) == pytest.approx(ENV1_SUM)


class TestInitialState:
    def test_single_amplitude(self):
        spec = BatterySpec.preset("env1")
        st = initial_state(spec)
        nz = np.nonzero(st.psi)[0]
        assert list(nz) == [basis_index(0, 4, spec)]
        assert st.time == 0.0

    def test_zero_energy_and_photons(self, env1):
        spec, split = env1
        st = initial_state(spec)
        assert total_energy(st, split) == pytest.approx(0.0, abs=1e-14)
        assert photon_number(st, spec) == pytest.approx(spec.n_init)


class TestObservables:
    def test_tls_energy_initial(self, env1):
        spec, split = env1
        st = initial_state(spec)
        for j in range(4):
            assert tls_energy(st, spec, j) == pytest.approx(0.0, abs=1e-14)

    def test_tls_energy_excited(self, env1):
        spec, _ = env1
        for j in range(4):
            bits = 1 << (spec.n_tls - 1 - j)
            vec = np.zeros(spec.battery_dim)
            vec[bits] = 1.0
            st = battery_state(spec, vec, 0)
            assert tls_energy(st, spec, j) == pytest.approx(spec.frequencies[j])

    def test_tls_energy_superposition(self, env1):
        spec, _ = env1
        j = 2
        bits = 1 << (spec.n_tls - 1 - j)
        vec = np.zeros(spec.battery_dim)
        vec[0] = vec[bits] = 1 / np.sqrt(2)
        st = battery_state(spec, vec, 0)
        assert tls_energy(st, spec, j) == pytest.approx(spec.frequencies[j] / 2)

    def test_pauli_ground(self, env1):
        spec, _ = env1
        st = initial_state(spec)
        for j in range(4):
            assert pauli_expectation(st, spec, j, "z") == pytest.approx(-1.0)
            assert pauli_expectation(st, spec, j, "x") == pytest.approx(0.0, abs=1e-14)

    def test_pauli_plus_state(self, env1):
        spec, _ = env1
        j = 0
        bits = 1 << (spec.n_tls - 1 - j)
        vec = np.zeros(spec.battery_dim)
        vec[0] = vec[bits] = 1 / np.sqrt(2)
        st = battery_state(spec, vec, 0)
        assert pauli_expectation(st, spec, j, "x") == pytest.approx(1.0)

    def test_pair_ground(self, env1):
        spec, _ = env1
        st = initial_state(spec)
        assert pair_correlation(st, spec, 0, 1, "z", "z") == pytest.approx(1.0)
        assert pair_correlation(st, spec, 0, 1, "x", "x") == pytest.approx(0.0, abs=1e-14)

    def test_pair_ghz_like(self):
        spec = BatterySpec(n_tls=2, frequencies=(1.0, 1.0), n_max=2, n_init=0)
        vec = np.zeros(4)
        vec[0] = vec[3] = 1 / np.sqrt(2)  # (|gg> + |ee>)/sqrt(2)
        st = battery_state(spec, vec, 0)
        assert pair_correlation(st, spec, 0, 1, "x", "x") == pytest.approx(1.0)

    def test_pair_same_site_rejected(self, env1):
        spec, _ = env1
        st = initial_state(spec)
        with pytest.raises(SameSiteError):
            pair_correlation(st, spec, 1, 1, "x", "x")

    def test_index_out_of_range(self, env1):
        spec, _ = env1
        st = initial_state(spec)
        with pytest.raises(IndexOutOfRangeError):
            tls_energy(st, spec, 4)
        with pytest.raises(IndexOutOfRangeError):
            pauli_expectation(st, spec, -1, "x")

    def test_total_matches_sum(self, env1):
        spec, split = env1
        rng = np.random.default_rng(23)
        for _ in range(10):
            psi = rng.standard_normal(spec.dim) + 1j * rng.standard_normal(spec.dim)
            st = JointState(psi=psi / np.linalg.norm(psi))
            total = total_energy(st, split)
            assert total == pytest.approx(np.sum(tls_energies(st, spec)), abs=1e-10)
            assert -1e-10 <= total <= ENV1_SUM + 1e-10

    def test_fully_excited_energy(self, env1):
        spec, split = env1
        vec = np.zeros(spec.battery_dim)
        vec[-1] = 1.0
        st = battery_state(spec, vec, 0)
        assert total_energy(st, split) == pytest.approx(ENV1_SUM)

    def test_v_expectation_zero_in_basis_states(self, env1):
        spec, split = env1
        rng = np.random.default_rng(4)
        for _ in range(10):
            idx = rng.integers(spec.dim)
            psi = np.zeros(spec.dim, dtype=complex)
            psi[idx] = 1.0
            assert abs(np.vdot(psi, split.v @ psi)) == 0.0


class TestEvolveStep:
    def test_drift_eigenstate_stays_discharged(self, env1):
        spec, split = env1
        st = initial_state(spec)
        for _ in range(5):
            st = evolve_step(st, split, 0.0, 0.2)
            assert total_energy(st, split) == pytest.approx(0.0, abs=1e-12)

    def test_semigroup(self, env1):
        spec, split = env1
        st = initial_state(spec)
        lam = 0.25
        once = evolve_step(evolve_step(st, split, lam, 0.2), split, lam, 0.2)
        twice = evolve_step(st, split, lam, 0.4)
        assert np.max(np.abs(once.psi - twice.psi)) <= 1e-9

    def test_norm_after_random_protocol(self, env1):
        spec, split = env1
        rng = np.random.default_rng(31)
        st = initial_state(spec)
        for lam in rng.uniform(-0.3, 0.3, 28):
            st = evolve_step(st, split, lam, 0.2)
        assert numerics.norm_defect(st.psi) <= 1e-9

    def test_parity_sector_matches_full(self, env1):
        spec, split = env1
        sector = ParitySector.for_initial_state(spec, split)
        rng = np.random.default_rng(37)
        st = initial_state(spec)
        phi = sector.project(st.psi)
        for lam in rng.uniform(-0.3, 0.3, 10):
            st = evolve_step(st, split, lam, 0.2)
            phi = sector.evolve(phi, lam, 0.2)
        assert np.max(np.abs(sector.embed(phi) - st.psi)) <= 1e-10


class TestTruncation:
    def test_initial_far_from_cutoff(self):
        spec = BatterySpec.preset("env1")  # n_init=4 <= n_max-2=10
        assert check_truncation(initial_state(spec), spec) == 0.0

    def test_top_level_state(self):
        spec = BatterySpec.preset("env1")
        psi = np.zeros(spec.dim, dtype=complex)
        psi[basis_index(3, spec.n_max, spec)] = 1.0
        assert check_truncation(JointState(psi=psi), spec) == 1.0

    def test_random_rollouts_converged(self):
        # The working truncation (12) is certified against a reference
        # truncation (16) whose own top-two-Fock leakage is negligible.
        from qbattery.ergotropy import ergotropy_trajectory

        spec = BatterySpec.preset("env1")
        ref_spec = BatterySpec.preset("env1", n_max=spec.n_max + 4)
        split = build_system(spec)
        ref_split = build_system(ref_spec)
        rng = np.random.default_rng(41)
        worst_dev = 0.0
        worst_leak = 0.0
        for _ in range(3):
            protocol = rng.uniform(-0.3, 0.3, 28)
            work = ergotropy_trajectory(protocol, spec, split, 0.2)
            ref = ergotropy_trajectory(protocol, ref_spec, ref_split, 0.2)
            for (_, e1, w1), (_, e2, w2) in zip(work, ref):
                worst_dev = max(worst_dev, abs(e1 - e2), abs(w1 - w2))
            st = initial_state(ref_spec)
            for lam in protocol:
                st = evolve_step(st, ref_split, lam, 0.2)
                worst_leak = max(worst_leak, check_truncation(st, ref_spec))
        assert worst_dev < numerics.LEAKAGE_TOL
        assert worst_leak < numerics.LEAKAGE_TOL


class TestHomogeneousOracle:
    def test_full_vs_symmetric(self):
        from qbattery.ergotropy import ergotropy_trajectory

        spec = BatterySpec.preset("homogeneous")
        split = build_system(spec)
        rng = np.random.default_rng(43)
        for _ in range(3):
            protocol = rng.uniform(-0.3, 0.3, 28)
            full = ergotropy_trajectory(protocol, spec, split, 0.2)
            sym = symmetric.simulate(protocol, 4, spec.n_max, spec.n_init, 0.2)
            for (t1, e1, w1), (t2, e2, w2) in zip(full, sym):
                assert t1 == pytest.approx(t2)
                assert e1 == pytest.approx(e2, abs=1e-8)
                assert w1 == pytest.approx(w2, abs=1e-8)
