import numpy as np
import pytest

from qbattery.dicke import (
    BatterySpec,
    JointState,
    basis_index,
    build_system,
    evolve_step,
    initial_state,
)
from qbattery.ergotropy import (
    ActionOutOfBoundsError,
    battery_spectrum,
    ergotropy_report,
    ergotropy_trajectory,
    passive_energy,
    passive_state,
    report_from_rho,
)

ENV1_SUM = 0.8745 + 1.4507 + 1.2320 + 1.0987


@pytest.fixture(scope="module")
def env1():
    spec = BatterySpec.preset("env1")
    return spec, build_system(spec)


def random_reachable_state(spec, split, rng, n_steps=10):
    st = initial_state(spec)
    for lam in rng.uniform(-0.3, 0.3, n_steps):
        st = evolve_step(st, split, lam, 0.2)
    return st


class TestBatterySpectrum:
    def test_two_tls_degenerate(self):
        spec = BatterySpec(n_tls=2, frequencies=(1.0, 1.0), n_max=2, n_init=0)
        s = battery_spectrum(spec)
        assert np.allclose(s.energies, [0, 1, 1, 2])

    def test_env1_extremes(self):
        s = battery_spectrum(BatterySpec.preset("env1"))
        assert s.energies[0] == 0.0
        assert s.energies[-1] == pytest.approx(ENV1_SUM)
        assert np.all(np.diff(s.energies) >= 0)

    def test_single_tls(self):
        spec = BatterySpec(n_tls=1, frequencies=(0.9170,), n_max=1, n_init=0)
        assert np.allclose(battery_spectrum(spec).energies, [0.0, 0.9170])

    def test_matches_diagonal(self, env1):
        spec, split = env1
        s = battery_spectrum(spec)
        diag = np.diag(split.hb_battery)
        assert np.allclose(np.sort(diag), s.energies)
        assert np.allclose(diag[s.basis_order], s.energies)


class TestErgotropyReport:
    def test_initial_state_zero(self, env1):
        spec, split = env1
        rep = ergotropy_report(initial_state(spec), spec, split)
        assert rep.energy == pytest.approx(0.0, abs=1e-12)
        assert rep.ergotropy == pytest.approx(0.0, abs=1e-12)

    def test_fully_excited_pure(self, env1):
        spec, split = env1
        psi = np.zeros(spec.dim, dtype=complex)
        psi[basis_index(spec.battery_dim - 1, 0, spec)] = 1.0
        rep = ergotropy_report(JointState(psi=psi), spec, split)
        assert rep.energy == pytest.approx(ENV1_SUM)
        assert rep.ergotropy == pytest.approx(ENV1_SUM)

    def test_maximally_mixed_is_passive(self, env1):
        spec, split = env1
        rho = np.eye(spec.battery_dim) / spec.battery_dim
        rep = report_from_rho(rho, spec, split)
        assert rep.passive_energy == pytest.approx(rep.energy, abs=1e-12)
        assert rep.ergotropy == pytest.approx(0.0, abs=1e-12)

    def test_bounds_on_reachable_states(self, env1):
        spec, split = env1
        rng = np.random.default_rng(5)
        for _ in range(20):
            st = random_reachable_state(spec, split, rng)
            rep = ergotropy_report(st, spec, split)
            assert rep.ergotropy >= -1e-10
            assert rep.ergotropy <= rep.energy + 1e-10
            assert rep.energy <= ENV1_SUM + 1e-10

    def test_passive_fixpoint(self, env1):
        spec, split = env1
        rng = np.random.default_rng(8)
        st = random_reachable_state(spec, split, rng)
        from qbattery import numerics

        rho = numerics.partial_trace_cavity(st.psi, spec.battery_dim, spec.cavity_dim)
        rep = report_from_rho(passive_state(rho, spec), spec, split)
        assert rep.ergotropy == pytest.approx(0.0, abs=1e-10)

    def test_tie_permutation_invariance(self):
        # Degenerate battery spectrum: any permutation among tied levels and
        # tied density-matrix eigenvalues leaves the ergotropy value fixed.
        spec = BatterySpec.preset("homogeneous")
        split = build_system(spec)
        rng = np.random.default_rng(11)
        st = random_reachable_state(spec, split, rng)
        rep = ergotropy_report(st, spec, split)
        levels = battery_spectrum(spec).energies
        for _ in range(20):
            perm_levels = levels.copy()
            perm_eigs = rep.eigenvalues.copy()
            for arr in (perm_levels, perm_eigs):
                # shuffle inside each tie group
                vals, idx = np.unique(np.round(arr, 12), return_inverse=True)
                for g in range(len(vals)):
                    sel = np.nonzero(idx == g)[0]
                    arr[sel] = arr[rng.permutation(sel)]
            alt = rep.energy - passive_energy(perm_eigs, perm_levels)
            assert alt == pytest.approx(rep.ergotropy, abs=1e-10)


class TestTrajectory:
    def test_zero_protocol(self, env1):
        spec, split = env1
        traj = ergotropy_trajectory([0.0] * 28, spec, split, 0.2)
        assert len(traj) == 29
        for _, e, w in traj:
            assert abs(e) <= 1e-10 and abs(w) <= 1e-10

    def test_first_entry_discharged(self, env1):
        spec, split = env1
        traj = ergotropy_trajectory([0.1] * 5, spec, split, 0.2)
        assert traj[0] == (0.0, pytest.approx(0.0, abs=1e-12), pytest.approx(0.0, abs=1e-12))

    def test_telescoping(self, env1):
        spec, split = env1
        rng = np.random.default_rng(13)
        traj = ergotropy_trajectory(rng.uniform(-0.3, 0.3, 28), spec, split, 0.2)
        gains = sum(
            traj[k + 1][2] - traj[k][2] for k in range(len(traj) - 1)
        )
        assert gains == pytest.approx(traj[-1][2], abs=1e-10)

    def test_out_of_bounds(self, env1):
        spec, split = env1
        with pytest.raises(ActionOutOfBoundsError):
            ergotropy_trajectory([0.0] * 27 + [0.31], spec, split, 0.2)
