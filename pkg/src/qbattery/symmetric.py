"""Independent symmetric-subspace simulator for the homogeneous battery.

With identical TLS frequencies the dynamics started from |g...g> x |n>
stays in the maximal-spin sector, so an (N+1)(n_max+1)-dimensional
simulation in the |J=N/2, m> x |n> basis must reproduce the full
2^N (n_max+1)-dimensional one. This module builds that model from scratch
(collective spin ladder operators, not the per-site construction) and is
used purely as a cross-validation oracle for the full simulator.
"""

from __future__ import annotations

from math import comb

import numpy as np
import scipy.linalg


def collective_spin_ops(n_tls: int) -> tuple[np.ndarray, np.ndarray]:
    """(Jz, Jx) in the |J, m> basis, m ascending from -J to +J."""
    j = n_tls / 2.0
    m = np.arange(-j, j + 1)
    jz = np.diag(m)
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(ladder, k=-1)  # J+ |m> = c |m+1>: entry (m+1, m)
    jx = 0.5 * (jp + jp.T)
    return jz, jx


def homogeneous_passive_levels(n_tls: int, omega0: float) -> np.ndarray:
    """Ascending 2^N battery eigenenergies with binomial multiplicities."""
    levels = []
    for k in range(n_tls + 1):
        levels.extend([omega0 * k] * comb(n_tls, k))
    return np.array(levels)


def simulate(
    protocol,
    n_tls: int,
    n_max: int,
    n_init: int,
    dt: float,
    omega0: float = 1.0,
    omega_c: float = 1.0,
) -> list[tuple[float, float, float]]:
    """Roll out a protocol in the symmetric subspace.

    Returns K+1 rows ``(time, energy, ergotropy)`` matching the format of
    :func:`qbattery.ergotropy.ergotropy_trajectory`.
    """
    ncav = n_max + 1
    nspin = n_tls + 1
    jz, jx = collective_spin_ops(n_tls)
    hb_spin = omega0 * (jz + (n_tls / 2.0) * np.eye(nspin))
    a = np.diag(np.sqrt(np.arange(1, ncav)), k=1)
    x_cav = a + a.T
    h0 = np.kron(hb_spin, np.eye(ncav)) + np.kron(np.eye(nspin), omega_c * a.T @ a)
    v = 2.0 * np.kron(jx, x_cav)

    psi = np.zeros(nspin * ncav, dtype=complex)
    psi[0 * ncav + n_init] = 1.0  # m = -J (first spin index), Fock n_init

    passive_levels = homogeneous_passive_levels(n_tls, omega0)
    diag_hb = np.diag(hb_spin)

    def observables(psi, t):
        m = psi.reshape(nspin, ncav)
        rho = m @ m.conj().T
        energy = float(np.real(np.diag(rho)) @ diag_hb)
        eigs = np.clip(np.linalg.eigvalsh(rho)[::-1], 0.0, None)
        p_energy = float(eigs @ passive_levels[: len(eigs)])
        return (t, energy, energy - p_energy)

    rows = [observables(psi, 0.0)]
    t = 0.0
    for lam in protocol:
        h = h0 + float(lam) * v
        w, q = scipy.linalg.eigh(h, check_finite=False)
        psi = q @ (np.exp(-1j * w * dt) * (q.T @ psi))
        t += dt
        rows.append(observables(psi, t))
    return rows
