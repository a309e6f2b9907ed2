"""Inhomogeneous Dicke battery-plus-charger system.

N two-level systems (the battery cells), each with its own splitting
``omega_j``, couple to one truncated cavity mode (the charger) through
``sigma_x (a + a^dag)`` with a common scalar coupling ``lambda``. No
rotating-wave approximation is applied anywhere, so photon number is not
conserved and the Fock truncation has to be validated (see
:func:`check_truncation`).

Basis convention (fixed, relied on by the partial trace and the replay
formats): flat index = battery_index * (n_max + 1) + fock_index, where
battery_index = sum_j b_j * 2^(N-1-j) with b_j = 1 for the excited state of
TLS j; TLS 1 is the most significant bit. Index 0 is |g...g> x |0>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg

from . import numerics

# Single-TLS operators in the (|g>, |e>) ordering used by the flat basis.
# |g> is the sigma_z = -1 eigenstate so that (omega/2)(sigma_z + 1) = diag(0, omega).
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
IDENTITY_2 = np.eye(2, dtype=complex)

#: Disordered frequency sets used throughout the experiments, plus the
#: homogeneous set that admits an exact symmetric-subspace cross-check.
FREQUENCY_PRESETS = {
    "env1": (0.8745, 1.4507, 1.2320, 1.0987),
    "env2": (0.9170, 1.2203, 0.5001, 0.8023),
    "env3": (0.7220, 1.3707, 0.7067, 1.4186),
    "homogeneous": (1.0, 1.0, 1.0, 1.0),
}


class TruncationTooSmallError(ValueError):
    """Cavity truncation cannot hold the initial photon number."""


class IndexOutOfRangeError(IndexError):
    """TLS index outside 0..N-1."""


class SameSiteError(ValueError):
    """Two-site correlation requested with i == j."""


@dataclass(frozen=True)
class BatterySpec:
    """Static description of one battery-plus-charger instance.

    ``n_max`` defaults to 3 N: counter-rotating terms push population above
    the initial photon number, and the default passes the leakage gate of
    :func:`check_truncation` for the couplings considered here.
    """

    n_tls: int
    frequencies: tuple[float, ...]
    omega_c: float = 1.0
    n_max: int = -1  # -1 means use the 3 * n_tls default
    n_init: int = -1  # -1 means n_init = n_tls

    def __post_init__(self):
        if self.n_tls < 1:
            raise ValueError(f"n_tls must be positive, got {self.n_tls}")
        freqs = tuple(float(w) for w in self.frequencies)
        if len(freqs) != self.n_tls:
            raise ValueError(
                f"expected {self.n_tls} frequencies, got {len(freqs)}"
            )
        if any(w <= 0 for w in freqs):
            raise ValueError(f"frequencies must be positive, got {freqs}")
        object.__setattr__(self, "frequencies", freqs)
        if self.n_max < 0:
            object.__setattr__(self, "n_max", 3 * self.n_tls)
        if self.n_init < 0:
            object.__setattr__(self, "n_init", self.n_tls)
        if self.n_init > self.n_max:
            raise TruncationTooSmallError(
                f"n_init={self.n_init} exceeds n_max={self.n_max}"
            )

    @property
    def battery_dim(self) -> int:
        return 2**self.n_tls

    @property
    def cavity_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.battery_dim * self.cavity_dim

    @classmethod
    def preset(cls, name: str, **overrides) -> "BatterySpec":
        if name not in FREQUENCY_PRESETS:
            raise KeyError(
                f"unknown preset {name!r}; choose from {sorted(FREQUENCY_PRESETS)}"
            )
        freqs = FREQUENCY_PRESETS[name]
        return cls(n_tls=len(freqs), frequencies=freqs, **overrides)

    @classmethod
    def sampled(cls, n_tls: int, seed: int, low: float = 0.5, high: float = 1.5,
                **overrides) -> "BatterySpec":
        """Draw disordered frequencies uniformly from [low, high]."""
        rng = np.random.default_rng(seed)
        freqs = tuple(rng.uniform(low, high, size=n_tls))
        return cls(n_tls=n_tls, frequencies=freqs, **overrides)

    def to_dict(self) -> dict:
        return {
            "n_tls": self.n_tls,
            "frequencies": list(self.frequencies),
            "omega_c": self.omega_c,
            "n_max": self.n_max,
            "n_init": self.n_init,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BatterySpec":
        return cls(**d)


@dataclass(frozen=True)
class HamiltonianSplit:
    """Drift / control split H(lambda) = h0 + lambda * v on the joint space.

    All four matrices are real symmetric in the chosen basis, which lets the
    propagator run on the cheaper real-symmetric eigensolver.
    """

    h0: np.ndarray
    v: np.ndarray
    hb: np.ndarray
    hb_battery: np.ndarray


@dataclass
class JointState:
    psi: np.ndarray
    time: float = 0.0


def basis_index(battery_bits: int, fock: int, spec: BatterySpec) -> int:
    return battery_bits * spec.cavity_dim + fock


def split_index(idx: int, spec: BatterySpec) -> tuple[int, int]:
    return divmod(idx, spec.cavity_dim)


def _embed_tls(op: np.ndarray, j: int, n_tls: int) -> np.ndarray:
    """Lift a single-TLS operator to the 2^N battery space (TLS 0 = MSB)."""
    factors = [IDENTITY_2] * n_tls
    factors[j] = op
    return reduce(numerics.kron, factors)


def build_system(spec: BatterySpec) -> HamiltonianSplit:
    """Construct the Hamiltonian split for one battery spec.

    h0 = sum_j (omega_j/2)(sigma_z^(j)+1) (x) I_cav + I_bat (x) omega_c a^dag a
    v  = sum_j sigma_x^(j) (x) (a + a^dag)
    """
    n = spec.n_tls
    ncav = spec.cavity_dim
    a = np.diag(np.sqrt(np.arange(1, ncav)), k=1).astype(complex)
    x_cav = a + a.conj().T
    n_cav = a.conj().T @ a
    i_cav = np.eye(ncav, dtype=complex)
    i_bat = np.eye(spec.battery_dim, dtype=complex)

    hb_battery = sum(
        0.5 * w * (_embed_tls(SIGMA_Z, j, n) + np.eye(spec.battery_dim))
        for j, w in enumerate(spec.frequencies)
    )
    sx_total = sum(_embed_tls(SIGMA_X, j, n) for j in range(n))

    hb = numerics.kron(hb_battery, i_cav)
    h0 = hb + numerics.kron(i_bat, spec.omega_c * n_cav)
    v = numerics.kron(sx_total, x_cav)

    # All blocks are real in this basis; keep float64 for the fast eigensolver.
    return HamiltonianSplit(
        h0=np.ascontiguousarray(h0.real),
        v=np.ascontiguousarray(v.real),
        hb=np.ascontiguousarray(hb.real),
        hb_battery=np.ascontiguousarray(hb_battery.real),
    )


def initial_state(spec: BatterySpec) -> JointState:
    """All TLSs in the ground state, cavity in the Fock state |n_init>."""
    psi = np.zeros(spec.dim, dtype=complex)
    psi[basis_index(0, spec.n_init, spec)] = 1.0
    return JointState(psi=psi, time=0.0)


def evolve_step(
    state: JointState, split: HamiltonianSplit, lam: float, dt: float
) -> JointState:
    """One piecewise-constant step: psi' = exp(-i (h0 + lam v) dt) psi."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    h = split.h0 + lam * split.v
    w, q = scipy.linalg.eigh(h, check_finite=False)
    psi = q @ (np.exp(-1j * w * dt) * (q.T @ state.psi))
    return JointState(psi=psi, time=state.time + dt)


def _check_site(j: int, spec: BatterySpec) -> None:
    if not 0 <= j < spec.n_tls:
        raise IndexOutOfRangeError(f"TLS index {j} outside 0..{spec.n_tls - 1}")


def _site_tensor(psi: np.ndarray, spec: BatterySpec) -> np.ndarray:
    return psi.reshape((2,) * spec.n_tls + (spec.cavity_dim,))


def reduced_site(psi: np.ndarray, spec: BatterySpec, j: int) -> np.ndarray:
    """2x2 reduced density matrix of TLS j."""
    _check_site(j, spec)
    t = np.moveaxis(_site_tensor(psi, spec), j, 0).reshape(2, -1)
    return t @ t.conj().T


def reduced_pair(psi: np.ndarray, spec: BatterySpec, i: int, j: int) -> np.ndarray:
    """4x4 reduced density matrix of TLSs (i, j), i-axis major."""
    _check_site(i, spec)
    _check_site(j, spec)
    if i == j:
        raise SameSiteError(f"pair correlation needs two distinct sites, got {i}")
    t = np.moveaxis(_site_tensor(psi, spec), (i, j), (0, 1)).reshape(4, -1)
    return t @ t.conj().T


def pauli_expectation(state: JointState, spec: BatterySpec, j: int, axis: str) -> float:
    """<sigma_axis^(j)> in the current joint state."""
    rho = reduced_site(state.psi, spec, j)
    return float(np.trace(rho @ PAULI[axis]).real)


def pair_correlation(
    state: JointState, spec: BatterySpec, i: int, j: int, alpha: str, beta: str
) -> float:
    """<sigma_alpha^(i) sigma_beta^(j)> for distinct sites i, j."""
    rho = reduced_pair(state.psi, spec, i, j)
    op = numerics.kron(PAULI[alpha], PAULI[beta])
    return float(np.trace(rho @ op).real)


def tls_energy(state: JointState, spec: BatterySpec, j: int) -> float:
    """Instantaneous energy of TLS j: (omega_j/2)(<sigma_z^(j)> + 1)."""
    _check_site(j, spec)
    sz = pauli_expectation(state, spec, j, "z")
    return 0.5 * spec.frequencies[j] * (sz + 1.0)


def tls_energies(state: JointState, spec: BatterySpec) -> np.ndarray:
    return np.array([tls_energy(state, spec, j) for j in range(spec.n_tls)])


def total_energy(state: JointState, split: HamiltonianSplit) -> float:
    """Battery energy <psi| hb |psi>."""
    return float(np.vdot(state.psi, split.hb @ state.psi).real)


def photon_number(state: JointState, spec: BatterySpec) -> float:
    pops = np.abs(state.psi.reshape(spec.battery_dim, spec.cavity_dim)) ** 2
    return float(pops.sum(axis=0) @ np.arange(spec.cavity_dim))


def check_truncation(state: JointState, spec: BatterySpec) -> float:
    """Total population in the top two Fock levels (leakage proxy)."""
    pops = np.abs(state.psi.reshape(spec.battery_dim, spec.cavity_dim)) ** 2
    return float(pops[:, -2:].sum())


@dataclass(frozen=True)
class ParitySector:
    """Joint-parity-conserving sector of (h0, v).

    The interaction flips one spin and shifts the photon number by one, so
    the parity of (excited TLS count + photon number) is conserved and the
    dynamics stays in the half-dimensional sector of the initial state.
    Evolving there roughly halves the eigensolver dimension, the dominant
    per-step cost.
    """

    indices: np.ndarray
    h0: np.ndarray
    v: np.ndarray
    full_dim: int

    @classmethod
    def for_initial_state(cls, spec: BatterySpec, split: HamiltonianSplit) -> "ParitySector":
        parities = np.array([
            (bin(b).count("1") + f) % 2
            for b in range(spec.battery_dim)
            for f in range(spec.cavity_dim)
        ])
        target = spec.n_init % 2
        idx = np.nonzero(parities == target)[0]
        return cls(
            indices=idx,
            h0=np.ascontiguousarray(split.h0[np.ix_(idx, idx)]),
            v=np.ascontiguousarray(split.v[np.ix_(idx, idx)]),
            full_dim=split.h0.shape[0],
        )

    def project(self, psi: np.ndarray) -> np.ndarray:
        return psi[self.indices]

    def embed(self, phi: np.ndarray) -> np.ndarray:
        psi = np.zeros(self.full_dim, dtype=complex)
        psi[self.indices] = phi
        return psi

    def evolve(self, phi: np.ndarray, lam: float, dt: float) -> np.ndarray:
        h = self.h0 + lam * self.v
        w, q = scipy.linalg.eigh(h, check_finite=False)
        return q @ (np.exp(-1j * w * dt) * (q.T @ phi))
