"""Polarization state and process tomography, compensation fitting and fidelity metrics.

Measurements are the tensor products of the four projectors {H, V, D, R},
D = (H + V)/sqrt(2), R = (H + iV)/sqrt(2).  Reconstruction is linear inversion
in the Pauli basis followed by eigenvalue clipping.  Process matrices use the
Pauli operator basis (I, X, Y, Z) with ``E(rho) = sum chi_mn P_m rho P_n``, so
the identity channel has ``chi_00 = 1``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidArgumentError, InvalidRecordError
from .photonics import compensation_unitary

log = logging.getLogger(__name__)

PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
PAULI_LABELS = ("I", "X", "Y", "Z")
SETTING_LETTERS = "HVDR"
CLAMP_TOL = 1e-9

_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "R": np.array([1, 1j], dtype=complex) / math.sqrt(2),
}


@dataclass(frozen=True)
class MeasurementRecord:
    """One projector setting, e.g. ``"HV"`` = photon 1 on H, photon 2 on V.

    Exactly one of ``counts`` and ``probability`` is set.
    """

    setting: str
    counts: int | None = None
    probability: float | None = None

    def __post_init__(self):
        if (self.counts is None) == (self.probability is None):
            raise InvalidRecordError("give exactly one of counts or probability")
        if self.counts is not None and self.counts < 0:
            raise InvalidRecordError("counts must be non-negative")
        if self.probability is not None and not -CLAMP_TOL <= self.probability <= 1 + CLAMP_TOL:
            raise InvalidRecordError(f"probability {self.probability} outside [0, 1]")

    @property
    def value(self) -> float:
        return float(self.counts if self.counts is not None else self.probability)


@dataclass(frozen=True)
class CompensationSetting:
    hwp_deg: float
    phase_deg: float


def _clamp(x: float, name: str, lo: float = 0.0, hi: float = 1.0) -> float:
    if x < lo or x > hi:
        if x < lo - CLAMP_TOL or x > hi + CLAMP_TOL:
            log.warning("%s = %.3g clamped to [%g, %g]", name, x, lo, hi)
        else:
            log.debug("%s = %.17g clamped to [%g, %g]", name, x, lo, hi)
        return min(max(x, lo), hi)
    return x


# -- projectors and simulated counts ---------------------------------------


def projector_set_single() -> dict[str, np.ndarray]:
    return {k: np.outer(v, v.conj()) for k, v in _KETS.items()}


def projector_set(n_qubits: int) -> dict[str, np.ndarray]:
    single = projector_set_single()
    out = {}
    for labels in itertools.product(SETTING_LETTERS, repeat=n_qubits):
        m = np.eye(1, dtype=complex)
        for lab in labels:
            m = np.kron(m, single[lab])
        out["".join(labels)] = m
    return out


def simulate_counts(
    rho: np.ndarray,
    projectors: Mapping[str, np.ndarray],
    shots: int,
    seed: int | None = None,
    dark_rate: float = 0.0,
) -> list[MeasurementRecord]:
    """Photon counts for each projector.

    Expected counts are ``shots * (Tr(P rho) + dark_rate)``, drawn from a
    Poisson distribution.  ``shots == 0`` returns exact Born probabilities.
    ``rho`` may have trace below one to represent a heralding efficiency.
    """
    if shots < 0:
        raise InvalidArgumentError("shots must be non-negative")
    probs = {k: _clamp(float(np.real(np.trace(p @ rho))), f"Tr(P_{k} rho)") for k, p in projectors.items()}
    if shots == 0:
        return [MeasurementRecord(k, probability=p) for k, p in probs.items()]
    rng = np.random.default_rng(seed)
    return [MeasurementRecord(k, counts=int(rng.poisson(shots * (p + dark_rate)))) for k, p in probs.items()]


# -- state tomography ------------------------------------------------------


def _n_qubits(dim: int) -> int:
    if dim not in (2, 4):
        raise InvalidArgumentError(f"dim must be 2 or 4, got {dim}")
    return dim.bit_length() - 1


def pauli_strings(n_qubits: int) -> list[np.ndarray]:
    out = []
    for idx in itertools.product(range(4), repeat=n_qubits):
        m = np.eye(1, dtype=complex)
        for i in idx:
            m = np.kron(m, PAULIS[i])
        out.append(m)
    return out


def _ordered_values(records: Sequence[MeasurementRecord], n_qubits: int) -> tuple[list[str], np.ndarray]:
    expected = ["".join(t) for t in itertools.product(SETTING_LETTERS, repeat=n_qubits)]
    seen: dict[str, float] = {}
    for r in records:
        if r.setting in seen:
            raise InvalidRecordError(f"duplicate setting {r.setting!r}")
        seen[r.setting] = r.value
    missing = sorted(set(expected) - set(seen))
    extra = sorted(set(seen) - set(expected))
    if missing or extra:
        raise InvalidRecordError(f"incomplete measurement set: missing {missing}, unexpected {extra}")
    return expected, np.array([seen[k] for k in expected])


def linear_inversion(records: Sequence[MeasurementRecord], dim: int) -> np.ndarray:
    """Unnormalized estimate; its trace is the total intensity behind the records."""
    n = _n_qubits(dim)
    labels, values = _ordered_values(records, n)
    proj = projector_set(n)
    paulis = pauli_strings(n)
    a = np.array([[np.real(np.trace(proj[k] @ p)) / dim for p in paulis] for k in labels])
    coeffs = np.linalg.solve(a, values)
    rho = sum(c * p for c, p in zip(coeffs, paulis)) / dim
    return 0.5 * (rho + rho.conj().T)


def physical_projection(m: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize to unit trace."""
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise InvalidRecordError("no positive weight left after clipping")
    w = w / w.sum()
    return (v * w) @ v.conj().T


def reconstruct_state(records: Sequence[MeasurementRecord], dim: int) -> np.ndarray:
    return physical_projection(linear_inversion(records, dim))


def record_intensity(records: Sequence[MeasurementRecord], dim: int) -> float:
    return float(np.real(np.trace(linear_inversion(records, dim))))


# -- process matrices ------------------------------------------------------

# vec(A rho B) = (B^T kron A) vec(rho), column stacking.
_CHI_BASIS = np.array(
    [np.kron(PAULIS[n].conj(), PAULIS[m]).reshape(-1, order="F") for m in range(4) for n in range(4)]
).T


def _vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def chi_to_superop(chi: np.ndarray) -> np.ndarray:
    return (_CHI_BASIS @ np.asarray(chi).reshape(-1)).reshape(4, 4, order="F")


def superop_to_chi(superop: np.ndarray) -> np.ndarray:
    return np.linalg.solve(_CHI_BASIS, np.asarray(superop).reshape(-1, order="F")).reshape(4, 4)


def chi_from_unitary(u: np.ndarray) -> np.ndarray:
    c = np.array([np.trace(p @ u) / 2 for p in PAULIS])
    return np.outer(c, c.conj())


def dephasing_chi(coherence: float) -> np.ndarray:
    """Channel that scales the H/V coherence by ``coherence``."""
    return np.diag([(1 + coherence) / 2, 0, 0, (1 - coherence) / 2]).astype(complex)


def apply_chi(chi: np.ndarray, rho: np.ndarray, which_qubit: int | None = None) -> np.ndarray:
    """Apply a single-qubit process to ``rho`` (2x2), or to one qubit of a 4x4 state."""
    rho = np.asarray(rho)
    if rho.shape == (2, 2):
        ops = list(PAULIS)
    elif rho.shape == (4, 4) and which_qubit in (1, 2):
        ops = [np.kron(p, np.eye(2)) if which_qubit == 1 else np.kron(np.eye(2), p) for p in PAULIS]
    else:
        raise InvalidArgumentError("apply_chi needs a 2x2 state or a 4x4 state with which_qubit in {1, 2}")
    out = np.zeros_like(rho, dtype=complex)
    for m in range(4):
        for n in range(4):
            if chi[m, n] != 0:
                out += chi[m, n] * ops[m] @ rho @ ops[n].conj().T
    return out


def standard_inputs() -> dict[str, np.ndarray]:
    """Single-qubit process tomography inputs H, V, D, R as density matrices."""
    return projector_set_single()


def reconstruct_process(
    inputs: Sequence[np.ndarray],
    outputs: Sequence[np.ndarray],
    weights: Sequence[float] | None = None,
) -> np.ndarray:
    """Linear-inversion chi from input/output density matrix pairs.

    ``weights`` are relative output intensities (e.g. post-selection
    throughput per input); they let a trace-decreasing process be represented
    linearly.  Output is projected to a positive, unit-trace chi.
    """
    if len(inputs) != len(outputs):
        raise InvalidRecordError("need one output per input")
    ins = np.array([_vec(r) for r in inputs]).T
    if ins.shape[1] < 4 or np.linalg.matrix_rank(ins, tol=1e-9) < 4:
        raise InvalidRecordError("input states do not span the single-qubit operator space")
    outs = np.array([_vec(r) for r in outputs]).T
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        outs = outs * w[None, :]
    superop = outs @ np.linalg.pinv(ins)
    return physical_projection(superop_to_chi(superop))


def compose_with_unitary(chi: np.ndarray, u: np.ndarray) -> np.ndarray:
    """chi of the process ``rho -> E(U rho U^dag)`` (``U`` applied first)."""
    return superop_to_chi(chi_to_superop(chi) @ chi_to_superop(chi_from_unitary(u)))


def _fidelity_grid(chi: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Identity fidelity of ``E o V(theta, phi)`` on a theta x phi grid (radians)."""
    c, s = np.cos(2 * theta)[:, None], np.sin(2 * theta)[:, None]
    e = np.exp(1j * phi)[None, :]
    # v_m = Tr(P_m V) / 2 for V = phase(phi) . rot(2 theta)
    v = np.stack([c * (1 + e), s * (e - 1), -1j * s * (e + 1), c * (1 - e)], axis=-1) / 2
    return np.real(np.einsum("abm,mn,abn->ab", v, chi, v.conj()))


def _wrap(x: float, period: float) -> float:
    """Map ``x`` into ``(-period/2, period/2]``."""
    y = math.fmod(x + period / 2, period)
    if y <= 0:
        y += period
    return y - period / 2


def fit_compensation(chi: np.ndarray, step_deg: float = 0.1) -> tuple[CompensationSetting, float]:
    """Pre-compensation (HWP rotation, phase) that brings ``chi`` closest to identity.

    Grid search over theta in (-45, 45] and phi in (-180, 180] degrees, ties
    broken toward the smallest |theta| then |phi|, then Nelder-Mead refinement.
    """
    chi = np.asarray(chi)
    n_theta = int(round(90 / step_deg))
    n_phi = int(round(360 / step_deg))
    thetas = -45 + step_deg * np.arange(1, n_theta + 1)
    phis = -180 + step_deg * np.arange(1, n_phi + 1)
    best_rows = []
    for start in range(0, n_theta, 100):
        t = thetas[start : start + 100]
        best_rows.append(_fidelity_grid(chi, np.deg2rad(t), np.deg2rad(phis)))
    grid = np.concatenate(best_rows, axis=0)
    f_max = grid.max()
    ti, pi = np.nonzero(grid >= f_max - 1e-12)
    order = np.lexsort((np.abs(phis[pi]), np.abs(thetas[ti])))
    t0, p0 = thetas[ti[order[0]]], phis[pi[order[0]]]
    f0 = float(grid[ti[order[0]], pi[order[0]]])

    def neg(x):
        return -float(_fidelity_grid(chi, np.deg2rad([x[0]]), np.deg2rad([x[1]]))[0, 0])

    res = minimize(neg, x0=[t0, p0], method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-15, "maxiter": 2000})
    if -res.fun > f0:
        t0, p0, f0 = _wrap(float(res.x[0]), 90.0), _wrap(float(res.x[1]), 360.0), -float(res.fun)
    return CompensationSetting(hwp_deg=float(t0), phase_deg=float(p0)), _clamp(f0, "compensated process fidelity")


def compensated_chi(chi: np.ndarray, setting: CompensationSetting) -> np.ndarray:
    u = compensation_unitary(math.radians(setting.hwp_deg), math.radians(setting.phase_deg))
    return compose_with_unitary(chi, u)


# -- metrics ---------------------------------------------------------------


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def distribution_fidelity(p: Iterable[float], q: Iterable[float]) -> float:
    """Squared Bhattacharyya coefficient of two (renormalized) distributions."""
    p = np.asarray(list(p), dtype=float)
    q = np.asarray(list(q), dtype=float)
    if p.shape != q.shape:
        raise InvalidArgumentError("distributions differ in length")
    if np.any(p < 0) or np.any(q < 0):
        raise InvalidArgumentError("distributions must be non-negative")
    if p.sum() <= 0 or q.sum() <= 0:
        raise InvalidArgumentError("distribution is all zero")
    p, q = p / p.sum(), q / q.sum()
    return _clamp(float(np.sum(np.sqrt(p * q)) ** 2), "distribution fidelity")


def process_fidelity(chi_a: np.ndarray, chi_b: np.ndarray) -> float:
    return _clamp(float(np.real(np.trace(np.asarray(chi_a) @ np.asarray(chi_b)))), "process fidelity")


def state_fidelity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho1) sqrt(rho2)``, which
    keeps rank-deficient (pure) states accurate to round-off.
    """
    sv = np.linalg.svd(_psd_sqrt(np.asarray(rho1)) @ _psd_sqrt(np.asarray(rho2)), compute_uv=False)
    return _clamp(float(np.sum(sv) ** 2), "state fidelity")


def similarity(measured: np.ndarray, predicted: np.ndarray) -> float:
    return state_fidelity(measured, predicted)


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit state."""
    yy = np.kron(PAULIS[2], PAULIS[2])
    s = _psd_sqrt(np.asarray(rho))
    # singular values of sqrt(rho) sqrt(rho~) avoid square roots of round-off
    lam = np.linalg.svd(s @ yy @ s.conj() @ yy, compute_uv=False)
    return max(0.0, float(lam[0] - lam[1:].sum()))


# -- uncertainties ---------------------------------------------------------


def resample_counts(records: Sequence[MeasurementRecord], rng: np.random.Generator) -> list[MeasurementRecord]:
    """Parametric Poisson resample around the observed counts."""
    return [MeasurementRecord(r.setting, counts=int(rng.poisson(r.counts))) for r in records]


def bootstrap_std(
    record_sets: Sequence[Sequence[MeasurementRecord]],
    statistic: Callable[[list[list[MeasurementRecord]]], float],
    n_resamples: int,
    seed: int,
) -> float:
    """One-sigma spread of ``statistic`` over Poisson resamples of every record set.

    Resample ``i`` draws from ``default_rng(seed + i)`` so results do not depend
    on evaluation order.
    """
    if any(r.counts is None for rs in record_sets for r in rs):
        return 0.0
    values = []
    for i in range(n_resamples):
        rng = np.random.default_rng(seed + i)
        values.append(statistic([resample_counts(rs, rng) for rs in record_sets]))
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
