"""Tight-binding Hamiltonians over (polarization, site) modes and their propagators.

Propagation length ``z`` (mm) plays the role of time, so ``U(z) = exp(-i H z)``
with ``H`` in mm^-1.  Modes are ordered polarization-major: index
``p * n_sites + (site - 1)`` with ``p = 0`` for H and ``p = 1`` for V, which makes
the Hamiltonian block-diagonal over polarization.  Site indices in the public
API are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidArgumentError, InvalidHamiltonianError, SearchFailureError
from .lattice import ArrayDesign, CouplingSpectrum

POLARIZATION_LABELS = ("H", "V")
HERMITIAN_ATOL = 1e-12
# P(z) below this is round-off, not a physical peak (P ~ z^(2(N-1)) near z = 0).
PEAK_FLOOR = 1e-9


@dataclass(frozen=True)
class Hamiltonian:
    matrix: np.ndarray
    n_sites: int
    polarizations: int = 1
    basis_labels: tuple[tuple[int, str], ...] = field(default=())

    def __post_init__(self):
        m = np.asarray(self.matrix)
        dim = self.n_sites * self.polarizations
        if m.shape != (dim, dim):
            raise InvalidHamiltonianError(f"matrix shape {m.shape} does not match {dim} modes")
        if not np.allclose(m, m.conj().T, rtol=0.0, atol=HERMITIAN_ATOL):
            raise InvalidHamiltonianError("Hamiltonian is not Hermitian")
        if np.any(np.diag(m) != 0):
            raise InvalidHamiltonianError("on-site terms are not part of the model")
        if self.polarizations == 2 and np.any(m[: self.n_sites, self.n_sites :] != 0):
            raise InvalidHamiltonianError("cross-polarization coupling is not allowed")
        if not self.basis_labels:
            labels = tuple(
                (site, POLARIZATION_LABELS[p]) for p in range(self.polarizations) for site in range(1, self.n_sites + 1)
            )
            object.__setattr__(self, "basis_labels", labels)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.n_sites * self.polarizations

    def block(self, polarization: int = 0) -> np.ndarray:
        s = slice(polarization * self.n_sites, (polarization + 1) * self.n_sites)
        return self.matrix[s, s]

    @property
    def c_max(self) -> float:
        return float(np.max(np.abs(self.matrix)))

    def z_pst(self) -> float:
        """Transfer length of an odd-N PST chain whose largest coupling matches this one."""
        return math.pi * math.sqrt(self.n_sites**2 - 1) / (4.0 * self.c_max)


@dataclass(frozen=True)
class PropagationProfile:
    z_grid: np.ndarray
    intensities: np.ndarray  # [z index, site]


def _tridiagonal(couplings) -> np.ndarray:
    c = np.asarray(couplings, dtype=float)
    return np.diag(c, 1) + np.diag(c, -1)


def _stack_blocks(blocks: list[np.ndarray]) -> np.ndarray:
    n = blocks[0].shape[0]
    out = np.zeros((n * len(blocks),) * 2)
    for p, b in enumerate(blocks):
        out[p * n : (p + 1) * n, p * n : (p + 1) * n] = b
    return out


def build_nn_hamiltonian(
    spectrum: CouplingSpectrum, polarizations: int = 1, v_spectrum: CouplingSpectrum | None = None
) -> Hamiltonian:
    """Nearest-neighbour Hamiltonian; ``v_spectrum`` gives V its own couplings."""
    if polarizations not in (1, 2):
        raise InvalidArgumentError("polarizations must be 1 or 2")
    blocks = [_tridiagonal(spectrum.couplings)]
    if polarizations == 2:
        other = spectrum if v_spectrum is None else v_spectrum
        if other.n_sites != spectrum.n_sites:
            raise InvalidArgumentError("H and V spectra have different lengths")
        blocks.append(_tridiagonal(other.couplings))
    return Hamiltonian(_stack_blocks(blocks), spectrum.n_sites, polarizations)


def _all_pairs_block(positions: np.ndarray, a: float, b: float) -> np.ndarray:
    dist = np.abs(positions[:, None] - positions[None, :])
    block = a * np.exp(-b * dist)
    np.fill_diagonal(block, 0.0)
    return block


def build_full_hamiltonian(
    design: ArrayDesign,
    polarizations: int = 1,
    birefringence_override: tuple[float, float] | None = None,
) -> Hamiltonian:
    """All-pairs Hamiltonian ``H[n, m] = a exp(-b |x_n - x_m|)`` from the design geometry.

    ``birefringence_override`` is an ``(a, b)`` pair used for the V block.
    """
    if polarizations not in (1, 2):
        raise InvalidArgumentError("polarizations must be 1 or 2")
    x = np.asarray(design.positions)
    blocks = [_all_pairs_block(x, design.decay_a, design.decay_b)]
    if polarizations == 2:
        if birefringence_override is None:
            blocks.append(blocks[0].copy())
        else:
            a_v, b_v = birefringence_override
            blocks.append(_all_pairs_block(x, a_v, b_v))
    return Hamiltonian(_stack_blocks(blocks), design.n_sites, polarizations)


def build_design_nn_hamiltonian(
    design: ArrayDesign,
    polarizations: int = 1,
    birefringence_override: tuple[float, float] | None = None,
) -> Hamiltonian:
    """Nearest-neighbour Hamiltonian with couplings read off the design's gaps."""
    v = None if birefringence_override is None else design.couplings(*birefringence_override)
    return build_nn_hamiltonian(design.couplings(), polarizations, v)


def _block_eig(h: Hamiltonian, polarization: int) -> tuple[np.ndarray, np.ndarray]:
    # Per-block decomposition: degenerate H/V eigenspaces never get mixed, so
    # identical blocks give bitwise-identical propagators.
    return np.linalg.eigh(h.block(polarization))


def propagator(h: Hamiltonian, z: float) -> np.ndarray:
    """``exp(-i H z)`` by spectral decomposition of each polarization block."""
    if z < 0:
        raise InvalidArgumentError(f"z must be non-negative, got {z}")
    n = h.n_sites
    u = np.zeros((h.dim, h.dim), dtype=complex)
    for p in range(h.polarizations):
        w, v = _block_eig(h, p)
        u[p * n : (p + 1) * n, p * n : (p + 1) * n] = (v * np.exp(-1j * w * z)) @ v.conj().T
    return u


def mirror_permutation(n_sites: int) -> np.ndarray:
    return np.fliplr(np.eye(n_sites))


def attenuation(z: float, loss_db_per_cm: float) -> float:
    """Amplitude factor ``exp(-gamma z / 2)`` for a uniform propagation loss."""
    gamma_per_mm = loss_db_per_cm * math.log(10.0) / 100.0
    return math.exp(-gamma_per_mm * z / 2.0)


def _check_site(h: Hamiltonian, site: int) -> int:
    if not 1 <= site <= h.n_sites:
        raise InvalidArgumentError(f"site {site} outside 1..{h.n_sites}")
    return site - 1


def transfer_probability(h: Hamiltonian, z: float, from_site: int, to_site: int, polarization: int = 0) -> float:
    i = _check_site(h, from_site) + polarization * h.n_sites
    j = _check_site(h, to_site) + polarization * h.n_sites
    return float(abs(propagator(h, z)[j, i]) ** 2)


def propagation_profile(
    h: Hamiltonian,
    z_max: float,
    n_steps: int,
    input_site: int,
    polarization=(1.0, 0.0),
    loss_db_per_cm: float = 0.0,
) -> PropagationProfile:
    """Site occupation on a uniform grid ``0..z_max`` (both endpoints).

    ``polarization`` is the input Jones vector; it is ignored for a
    single-polarization Hamiltonian.  Site intensities sum over polarization.
    """
    if not z_max > 0:
        raise InvalidArgumentError(f"z_max must be positive, got {z_max}")
    if n_steps < 2:
        raise InvalidArgumentError(f"n_steps must be >= 2, got {n_steps}")
    s = _check_site(h, input_site)
    if h.polarizations == 1:
        jones = np.array([1.0 + 0j])
    else:
        jones = np.asarray(polarization, dtype=complex)
        jones = jones / np.linalg.norm(jones)
    z = np.linspace(0.0, z_max, n_steps)
    probs = np.zeros((n_steps, h.n_sites))
    for p in range(h.polarizations):
        w, v = _block_eig(h, p)
        coeff = jones[p] * v[s, :].conj()
        amps = (np.exp(-1j * np.outer(z, w)) * coeff) @ v.T
        probs += np.abs(amps) ** 2
    if loss_db_per_cm:
        probs *= np.array([attenuation(zi, loss_db_per_cm) ** 2 for zi in z])[:, None]
    return PropagationProfile(z_grid=z, intensities=probs)


def first_peak_max(
    h: Hamiltonian, from_site: int, to_site: int, polarization: int = 0, chunk: int = 20000
) -> tuple[float, float]:
    """First local maximum in ``z > 0`` of ``P(from -> to, z)``.

    A coarse scan with step ``1e-3 / C_max`` brackets the peak, golden-section
    refines it to ``1e-6 / C_max``.  The scan covers ``(0, 10 z_PST]``.
    """
    i = _check_site(h, from_site)
    j = _check_site(h, to_site)
    w, v = _block_eig(h, polarization)
    weights = v[j, :] * v[i, :].conj()

    def prob(z):
        return float(abs(np.sum(weights * np.exp(-1j * w * z))) ** 2)

    c_max = h.c_max
    dz = 1e-3 / c_max
    z_end = 10.0 * h.z_pst()
    n_total = int(math.ceil(z_end / dz))
    prev = None  # last two samples carried across chunk boundaries
    start = 0
    while start <= n_total:
        idx = np.arange(start, min(start + chunk, n_total + 1))
        z = idx * dz
        p = np.abs(np.exp(-1j * np.outer(z, w)) @ weights) ** 2
        if prev is not None:
            z = np.concatenate([prev[0], z])
            p = np.concatenate([prev[1], p])
        rising = p[1:-1] > p[:-2]
        falling = p[2:] <= p[1:-1]
        hits = np.nonzero(rising & falling & (p[1:-1] > PEAK_FLOOR) & (z[1:-1] > 0))[0]
        if hits.size:
            k = hits[0] + 1
            bracket = (z[k - 1], z[k], z[k + 1])
            res = minimize_scalar(
                lambda x: -prob(x), bracket=bracket, method="golden", options={"xtol": 1e-7 / (c_max * z[k])}
            )
            z_star, p_star = float(res.x), -float(res.fun)
            if not (bracket[0] <= z_star <= bracket[2]) or p_star < p[k]:
                z_star, p_star = float(z[k]), float(p[k])
            return z_star, p_star
        prev = (z[-2:], p[-2:])
        start = idx[-1] + 1
    raise SearchFailureError(f"no local maximum of P({from_site}->{to_site}) within (0, {z_end:.6g}] mm")
