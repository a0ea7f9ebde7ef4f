import math

import numpy as np
import pytest
from scipy.linalg import expm

from pstlab.dynamics import (
    Hamiltonian,
    attenuation,
    build_design_nn_hamiltonian,
    build_full_hamiltonian,
    build_nn_hamiltonian,
    first_peak_max,
    mirror_permutation,
    propagation_profile,
    propagator,
    transfer_probability,
)
from pstlab.errors import InvalidArgumentError, InvalidHamiltonianError, SearchFailureError
from pstlab.lattice import design_array, pst_coupling_spectrum, pst_time, uniform_spectrum

# Frozen from tests/oracles.py (scipy expm, no package code).
NNN_5_7 = 0.03766341219633643
FULL_P = {1: 0.9200067221180435, 6: 0.39029898546078245, 10: 0.8135629723158043}
UNIFORM_PEAK_Z, UNIFORM_PEAK_P = 6.656423249993555, 0.781219864505262


@pytest.fixture(scope="module")
def ref_design():
    return design_array(11, 12.0, 3.6, 0.19)


def test_two_site_matrix():
    h = build_nn_hamiltonian(uniform_spectrum(2, 1.0))
    np.testing.assert_array_equal(h.matrix, [[0, 1], [1, 0]])


def test_pst_spectrum_is_linear():
    c0 = 0.37
    h = build_nn_hamiltonian(pst_coupling_spectrum(11, c0))
    w = np.linalg.eigvalsh(h.matrix)
    np.testing.assert_allclose(w, c0 * (2 * np.arange(11) - 10), atol=1e-12)


def test_dual_polarization_blocks_identical():
    h = build_nn_hamiltonian(pst_coupling_spectrum(7, 1.0), polarizations=2)
    np.testing.assert_array_equal(h.block(0), h.block(1))
    assert np.all(h.matrix[:7, 7:] == 0)


def test_hamiltonian_validation():
    with pytest.raises(InvalidHamiltonianError):
        Hamiltonian(np.array([[0, 1], [0, 0]], dtype=complex), 2)
    with pytest.raises(InvalidHamiltonianError):
        Hamiltonian(np.array([[1, 1], [1, 0]], dtype=complex), 2)
    m = np.zeros((4, 4))
    m[0, 3] = m[3, 0] = 1.0
    with pytest.raises(InvalidHamiltonianError):
        Hamiltonian(m, 2, polarizations=2)


def test_full_hamiltonian_matches_nn_on_adjacent_pairs(ref_design):
    full = build_full_hamiltonian(ref_design).matrix
    nn = build_design_nn_hamiltonian(ref_design).matrix
    idx = np.arange(10)
    np.testing.assert_allclose(full[idx, idx + 1], nn[idx, idx + 1], rtol=1e-14)
    assert full[4, 6] == pytest.approx(NNN_5_7, rel=1e-12)
    assert full[4, 6] == pytest.approx(0.0376, abs=1e-4)


def test_full_hamiltonian_birefringence_override(ref_design):
    h = build_full_hamiltonian(ref_design, 2, birefringence_override=(3.7, 0.19))
    assert not np.array_equal(h.block(0), h.block(1))
    np.testing.assert_allclose(h.block(1), h.block(0) * 3.7 / 3.6, rtol=1e-14)


def test_propagator_basics():
    h = build_nn_hamiltonian(uniform_spectrum(2, 1.0))
    np.testing.assert_allclose(propagator(h, 0.0), np.eye(2), atol=1e-15)
    assert abs(propagator(h, math.pi / 2)[1, 0]) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidArgumentError):
        propagator(h, -1.0)


def test_propagator_matches_expm(ref_design):
    h = build_full_hamiltonian(ref_design, 2, birefringence_override=(3.9, 0.2))
    for z in (0.3, 7.0, 23.4, 100.0):
        np.testing.assert_allclose(propagator(h, z), expm(-1j * h.matrix * z), atol=1e-10)


@pytest.mark.parametrize("z", [0.1, 5.0, 23.0, 250.0])
def test_unitarity(ref_design, z):
    u = propagator(build_full_hamiltonian(ref_design, 2), z)
    assert np.abs(u.conj().T @ u - np.eye(22)).max() <= 1e-10


@pytest.mark.parametrize("n", range(2, 26))
def test_pst_exactness_and_phase(n):
    h = build_nn_hamiltonian(pst_coupling_spectrum(n, 0.5))
    u = propagator(h, pst_time(0.5))
    r = mirror_permutation(n)
    for k in range(n):
        assert abs(u[n - 1 - k, k]) >= 1 - 1e-9
    # linear spectrum c0 (2k - N + 1): the global phase is (-i)^(N-1)
    np.testing.assert_allclose(u, (-1j) ** (n - 1) * r, atol=1e-9)


@pytest.mark.parametrize("n", [3, 11, 25])
def test_odd_n_length_from_c_max(n):
    h = build_nn_hamiltonian(pst_coupling_spectrum(n, 0.5))
    assert h.z_pst() == pytest.approx(pst_time(0.5), rel=1e-14)


def test_pst_phase_for_reference_length():
    h = build_nn_hamiltonian(pst_coupling_spectrum(11, 0.5))
    np.testing.assert_allclose(propagator(h, h.z_pst()), -mirror_permutation(11), atol=1e-9)


@pytest.mark.parametrize("n", [3, 8, 11, 20])
def test_mirror_commutation(n, ref_design):
    r = mirror_permutation(n)
    m = build_nn_hamiltonian(pst_coupling_spectrum(n, 1.3)).matrix
    assert np.abs(m @ r - r @ m).max() <= 1e-12
    m = build_full_hamiltonian(ref_design).matrix
    r = mirror_permutation(11)
    assert np.abs(m @ r - r @ m).max() <= 1e-12


def test_polarization_blocks_bitwise_identical(ref_design):
    for h in (build_full_hamiltonian(ref_design, 2), build_design_nn_hamiltonian(ref_design, 2)):
        u = propagator(h, 17.3)
        assert np.array_equal(u[:11, :11], u[11:, 11:])


def test_transfer_probability_pst(ref_design):
    h = build_design_nn_hamiltonian(ref_design)
    z = h.z_pst()
    assert transfer_probability(h, z, 1, 11) == pytest.approx(1.0, abs=1e-9)
    assert transfer_probability(h, z, 6, 6) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(InvalidArgumentError):
        transfer_probability(h, z, 0, 11)
    with pytest.raises(InvalidArgumentError):
        transfer_probability(h, z, 1, 12)


def test_full_model_degrades_transfer(ref_design):
    h = build_full_hamiltonian(ref_design)
    z = ref_design.z_pst()
    got = {s: transfer_probability(h, z, s, 12 - s) for s in (1, 6, 10)}
    for s in got:
        assert got[s] == pytest.approx(FULL_P[s], abs=1e-10)
    assert got[1] < 1
    assert 1 - got[6] > 1 - got[1]


def test_first_peak_uniform_chain():
    z, p = first_peak_max(build_nn_hamiltonian(uniform_spectrum(11, 1.0)), 1, 11)
    assert p == pytest.approx(UNIFORM_PEAK_P, abs=1e-9)
    assert z == pytest.approx(UNIFORM_PEAK_Z, abs=1e-5)
    assert p == pytest.approx(0.781, abs=0.005)


def test_first_peak_scales_with_coupling():
    z, p = first_peak_max(build_nn_hamiltonian(uniform_spectrum(11, 0.368)), 1, 11)
    assert z == pytest.approx(UNIFORM_PEAK_Z / 0.368, rel=1e-6)
    assert p == pytest.approx(UNIFORM_PEAK_P, abs=1e-9)


def test_first_peak_pst_and_two_site():
    h = build_nn_hamiltonian(pst_coupling_spectrum(11, 0.5))
    z, p = first_peak_max(h, 1, 11)
    assert z == pytest.approx(h.z_pst(), rel=1e-6)
    assert p == pytest.approx(1.0, abs=1e-9)
    z, p = first_peak_max(build_nn_hamiltonian(uniform_spectrum(2, 2.0)), 1, 2)
    assert z == pytest.approx(math.pi / 4, rel=1e-6)
    assert p == pytest.approx(1.0, abs=1e-12)


def test_first_peak_search_failure():
    # two disconnected couplers: site 1 never reaches site 4
    m = np.zeros((4, 4))
    m[0, 1] = m[1, 0] = m[2, 3] = m[3, 2] = 1.0
    h = Hamiltonian(m, 4)
    with pytest.raises(SearchFailureError):
        first_peak_max(h, 1, 4)


def test_profile_rows(ref_design):
    h = build_design_nn_hamiltonian(ref_design, 2)
    prof = propagation_profile(h, h.z_pst(), 101, 1, polarization=(1, 1j))
    assert prof.intensities.shape == (101, 11)
    assert prof.z_grid[0] == 0.0 and prof.z_grid[-1] == pytest.approx(h.z_pst())
    np.testing.assert_allclose(prof.intensities[0], np.eye(11)[0], atol=1e-15)
    np.testing.assert_allclose(prof.intensities[-1], np.eye(11)[10], atol=1e-9)
    np.testing.assert_allclose(prof.intensities.sum(axis=1), 1.0, atol=1e-9)


def test_profile_validation(ref_design):
    h = build_design_nn_hamiltonian(ref_design)
    with pytest.raises(InvalidArgumentError):
        propagation_profile(h, 0.0, 10, 1)
    with pytest.raises(InvalidArgumentError):
        propagation_profile(h, 1.0, 1, 1)
    with pytest.raises(InvalidArgumentError):
        propagation_profile(h, 1.0, 10, 12)


def test_profile_with_loss_decays(ref_design):
    h = build_full_hamiltonian(ref_design)
    prof = propagation_profile(h, 30.0, 61, 6, loss_db_per_cm=0.8)
    totals = prof.intensities.sum(axis=1)
    assert np.all(np.diff(totals) < 0)
    assert totals[-1] == pytest.approx(10 ** (-0.8 * 3.0 / 10), rel=1e-9)


def test_attenuation():
    assert attenuation(0.0, 0.8) == 1.0
    assert attenuation(10.0, 0.8) ** 2 == pytest.approx(10 ** (-0.08), rel=1e-12)
