"""Polarization optics and the two-photon transfer pipeline.

Jones convention (angles in radians, H = (1, 0), V = (0, 1))::

    HWP(t) = [[cos 2t,  sin 2t], [sin 2t, -cos 2t]]
    QWP(t) = R(-t) diag(1, i) R(t),  R(t) = [[cos t, sin t], [-sin t, cos t]]
    phase(f) = diag(1, exp(i f))

so HWP(22.5 deg) sends H to D = (H + V)/sqrt(2) and HWP(0) sends V to -V.
Global phases are dropped.

Two-photon states live on (photon-1 site, photon-1 polarization, photon-2
polarization), site-major, i.e. index ``4 (site - 1) + 2 p1 + p2``.  A
propagator from :mod:`pstlab.dynamics` is polarization-major over photon-1
modes; :func:`evolve_two_photon` reorders it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import EmptyPostselectionError, InvalidArgumentError

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
POSTSELECTION_FLOOR = 1e-12
TWO_QUBIT_BASIS = ("HH", "HV", "VH", "VV")


@dataclass(frozen=True)
class JonesElement:
    kind: Literal["HWP", "QWP", "phase", "PBS-H", "PBS-V"]
    angle: float = 0.0


def _rotation(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]], dtype=complex)


def hwp(theta: float) -> np.ndarray:
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp(theta: float) -> np.ndarray:
    return _rotation(-theta) @ np.diag([1.0, 1j]) @ _rotation(theta)


def phase_plate(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)])


def jones_matrix(element: JonesElement) -> np.ndarray:
    if element.kind == "HWP":
        return hwp(element.angle)
    if element.kind == "QWP":
        return qwp(element.angle)
    if element.kind == "phase":
        return phase_plate(element.angle)
    if element.kind == "PBS-H":
        return np.diag([1.0, 0.0]).astype(complex)
    if element.kind == "PBS-V":
        return np.diag([0.0, 1.0]).astype(complex)
    raise InvalidArgumentError(f"unknown Jones element {element.kind!r}")


def compensation_unitary(hwp_angle: float, phase: float) -> np.ndarray:
    """HWP rotation followed by a polarization phase, identity at (0, 0).

    The HWP is referenced to one at 0 so that ``hwp_angle`` rotates the
    polarization by ``2 * hwp_angle``.
    """
    return phase_plate(phase) @ hwp(hwp_angle) @ hwp(0.0)


@dataclass(frozen=True)
class TwoPhotonState:
    """Pure (1-D ``data``) or mixed (2-D ``data``) state over ``n_sites`` photon-1 sites."""

    data: np.ndarray
    n_sites: int = 1

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        dim = 4 * self.n_sites
        if d.shape not in ((dim,), (dim, dim)):
            raise InvalidArgumentError(f"state shape {d.shape} incompatible with {self.n_sites} sites")
        object.__setattr__(self, "data", d)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data


@dataclass(frozen=True)
class Wavepacket:
    """Gaussian wavepacket; ``delay_um`` is the path difference on one polarization."""

    coherence_length_um: float
    delay_um: float = 0.0

    def __post_init__(self):
        if not self.coherence_length_um > 0:
            raise InvalidArgumentError("coherence length must be positive")


def prepare_bell(residual_phase: float, hwp_angle: float) -> TwoPhotonState:
    """Post-selected source state ``(|H1 V2> + exp(i phi) |V1 H2>)/sqrt(2)``, ``phi = 4 (theta + eps)``."""
    phi = 4.0 * (hwp_angle + residual_phase)
    psi = np.array([0.0, 1.0, np.exp(1j * phi), 0.0], dtype=complex) / math.sqrt(2.0)
    return TwoPhotonState(psi, n_sites=1)


def inject(state: TwoPhotonState, site: int, n_sites: int) -> TwoPhotonState:
    """Place a polarization-only state with photon 1 at ``site`` (1-based)."""
    if state.n_sites != 1:
        raise InvalidArgumentError("only polarization-only states can be injected")
    if not 1 <= site <= n_sites:
        raise InvalidArgumentError(f"site {site} outside 1..{n_sites}")
    sl = slice(4 * (site - 1), 4 * site)
    if state.is_pure:
        out = np.zeros(4 * n_sites, dtype=complex)
        out[sl] = state.data
    else:
        out = np.zeros((4 * n_sites,) * 2, dtype=complex)
        out[sl, sl] = state.data
    return TwoPhotonState(out, n_sites)


def wavepacket_overlap(w: Wavepacket) -> float:
    """Normalized overlap of identical Gaussians separated by ``delay_um``."""
    return math.exp(-(w.delay_um**2) / (2.0 * w.coherence_length_um**2))


def _photon_pol(n_sites: int, which_photon: int) -> np.ndarray:
    idx = np.arange(4 * n_sites)
    if which_photon == 1:
        return (idx // 2) % 2
    if which_photon == 2:
        return idx % 2
    raise InvalidArgumentError("which_photon must be 1 or 2")


def dephase(state: TwoPhotonState, coherence: float, which_photon: int = 1) -> TwoPhotonState:
    """Scale coherences between the H and V sectors of one photon by ``coherence``."""
    if not 0.0 <= coherence <= 1.0:
        raise InvalidArgumentError("coherence must lie in [0, 1]")
    pol = _photon_pol(state.n_sites, which_photon)
    mask = np.where(pol[:, None] == pol[None, :], 1.0, coherence)
    return TwoPhotonState(state.density_matrix() * mask, state.n_sites)


def apply_delay_decoherence(state: TwoPhotonState, w: Wavepacket, which_photon: int = 1) -> TwoPhotonState:
    return dephase(state, wavepacket_overlap(w), which_photon)


def apply_polarization_unitary(state: TwoPhotonState, jones: np.ndarray, which_photon: int = 1) -> TwoPhotonState:
    """Apply a 2x2 Jones matrix to one photon's polarization at every site."""
    jones = np.asarray(jones, dtype=complex)
    if which_photon == 1:
        local = np.kron(jones, np.eye(2))
    elif which_photon == 2:
        local = np.kron(np.eye(2), jones)
    else:
        raise InvalidArgumentError("which_photon must be 1 or 2")
    op = np.kron(np.eye(state.n_sites), local)
    if state.is_pure:
        return TwoPhotonState(op @ state.data, state.n_sites)
    return TwoPhotonState(op @ state.data @ op.conj().T, state.n_sites)


def site_major_order(n_sites: int) -> np.ndarray:
    """Polarization-major index for each site-major photon-1 mode."""
    return np.array([p * n_sites + s for s in range(n_sites) for p in range(2)])


def evolve_two_photon(state: TwoPhotonState, u_array: np.ndarray) -> TwoPhotonState:
    """Apply ``U`` to photon 1 (site and polarization) and identity to photon 2.

    ``u_array`` is a dual-polarization propagator in polarization-major order.
    """
    u = np.asarray(u_array)
    if u.shape != (2 * state.n_sites,) * 2:
        raise InvalidArgumentError(f"propagator shape {u.shape} does not match {state.n_sites} sites x 2 polarizations")
    order = site_major_order(state.n_sites)
    op = np.kron(u[np.ix_(order, order)], np.eye(2))
    if state.is_pure:
        return TwoPhotonState(op @ state.data, state.n_sites)
    return TwoPhotonState(op @ state.data @ op.conj().T, state.n_sites)


def postselect_site(state: TwoPhotonState, site: int) -> tuple[np.ndarray, float]:
    """Condition on photon 1 at ``site``; returns the 4x4 polarization state and its probability."""
    if not 1 <= site <= state.n_sites:
        raise InvalidArgumentError(f"site {site} outside 1..{state.n_sites}")
    sl = slice(4 * (site - 1), 4 * site)
    if state.is_pure:
        amp = state.data[sl]
        block = np.outer(amp, amp.conj())
    else:
        block = state.data[sl, sl]
    prob = float(np.real(np.trace(block)))
    if prob < POSTSELECTION_FLOOR:
        raise EmptyPostselectionError(f"no photon-1 amplitude at site {site} (p = {prob:.3g})")
    return block / prob, prob


def single_photon_state(jones, site: int, n_sites: int) -> np.ndarray:
    """Photon at ``site`` with polarization ``jones``, polarization-major mode vector."""
    if not 1 <= site <= n_sites:
        raise InvalidArgumentError(f"site {site} outside 1..{n_sites}")
    j = np.asarray(jones, dtype=complex)
    psi = np.zeros(2 * n_sites, dtype=complex)
    psi[site - 1] = j[0]
    psi[n_sites + site - 1] = j[1]
    return psi


def postselect_single(psi: np.ndarray, site: int, n_sites: int) -> tuple[np.ndarray, float]:
    """2x2 polarization state of a single photon found at ``site``, and its probability."""
    if not 1 <= site <= n_sites:
        raise InvalidArgumentError(f"site {site} outside 1..{n_sites}")
    amp = np.array([psi[site - 1], psi[n_sites + site - 1]])
    block = np.outer(amp, amp.conj())
    prob = float(np.real(np.trace(block)))
    if prob < POSTSELECTION_FLOOR:
        raise EmptyPostselectionError(f"no amplitude at site {site} (p = {prob:.3g})")
    return block / prob, prob
