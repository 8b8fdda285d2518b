import numpy as np
import pytest

from loopwalk.correlations import (
    classical_p,
    device_correlation,
    gamma_delayed,
    gamma_one_step,
    gamma_simultaneous,
    invariant_modes,
    optimal_theta,
    survival_prefactor,
    symmetry_map,
    two_photon_invariant_check,
)
from loopwalk.model import (
    ConfigError,
    DeviceConfig,
    Permutation,
    UnsupportedConfigError,
    permutation_for,
)
from loopwalk.propagate import permute_modes
from loopwalk.spectra import eigen_circulant, eigen_tridiagonal

Q = np.pi / 4


def _chain(n):
    return eigen_tridiagonal(n), Permutation.identity(n)


# ---- two-guide interference, worked by hand --------------------------------
# For two guides run for g tau = pi/4 the array acts as a balanced
# splitter, so photons injected one per guide must bunch: no coincidence
# across guides, each double occupation with probability 1/2.


def test_bunching_quantum():
    es, p = _chain(2)
    g = gamma_simultaneous(es, p, Q, Q, 1, 1, 2, rescaled=True)
    assert abs(g.values[0, 1]) < 1e-12
    assert abs(g.values[0, 0] - 0.5) < 1e-12
    assert abs(g.values[1, 1] - 0.5) < 1e-12


def test_bunching_gone_for_distinguishable_photons():
    es, p = _chain(2)
    c = classical_p(es, p, Q, Q, 1, 1, 2, rescaled=True)
    assert abs(c.values[0, 1] - 0.5) < 1e-12
    assert abs(c.values[0, 0] - 0.25) < 1e-12


def test_physical_scale_is_entry_probability_at_first_transit():
    es, p = _chain(2)
    g = gamma_simultaneous(es, p, Q, Q, 1, 1, 2, rescaled=False)
    assert abs(g.values[0, 0] - 0.5 * np.sin(Q) ** 4) < 1e-14


def test_one_step_alias_is_bitwise():
    es, p = _chain(7)
    a = gamma_simultaneous(es, p, 0.6, 1.0, 1, 2, 5, rescaled=True)
    b = gamma_one_step(es, p, 0.6, 1.0, 2, 5, rescaled=True)
    assert np.array_equal(a.values, b.values)


# ---- prefactor and optimal angle ----------------------------------------------


def test_survival_prefactor_values():
    th = 0.8
    assert abs(survival_prefactor(th, 1) - np.sin(th) ** 4) < 1e-15
    assert abs(
        survival_prefactor(th, 3) - np.cos(th) ** 8 * np.sin(th) ** 4
    ) < 1e-15
    with pytest.raises(ConfigError):
        survival_prefactor(th, 0)


def test_optimal_theta_known_angles():
    assert abs(optimal_theta(1) - np.pi / 2) < 1e-14
    assert abs(optimal_theta(2) - np.pi / 4) < 1e-14
    assert abs(optimal_theta(4) - np.pi / 6) < 1e-14


def test_optimal_theta_beats_neighbours():
    for n in (2, 3, 5, 8):
        t0 = optimal_theta(n)
        best = survival_prefactor(t0, n)
        assert best >= survival_prefactor(t0 + 1e-4, n)
        assert best >= survival_prefactor(t0 - 1e-4, n)


# ---- structural invariances -------------------------------------------------------


def test_common_frequency_drops_out():
    for topo, kw in (
        ("cylinder", {}),
        ("moebius", {}),
        ("twisted_circle", {"shift_c": 2, "g_vector": (0.0, 1.0) + (0.0,) * 5 + (1.0,)}),
    ):
        base = DeviceConfig(topology=topo, n_modes=8, theta=0.5, **kw)
        lifted = DeviceConfig(topology=topo, n_modes=8, theta=0.5, omega=1.7, **kw)
        for n in (1, 3):
            a = device_correlation(base, n, 1, 4, rescaled=True)
            b = device_correlation(lifted, n, 1, 4, rescaled=True)
            assert np.max(np.abs(a.values - b.values)) < 1e-12


def test_mirror_relabelling_identity_is_exact():
    n_modes = 9
    es, _ = _chain(n_modes)
    ident = Permutation.identity(n_modes)
    mirror = Permutation.mirror(n_modes)
    for n in (1, 2, 3):
        cyl = gamma_simultaneous(es, ident, 0.7, 1.0, n, 1, 4, rescaled=True)
        mob = gamma_simultaneous(es, mirror, 0.7, 1.0, n, 1, 4, rescaled=True)
        mapped = permute_modes(cyl.values, symmetry_map("moebius", n, n_modes))
        assert np.array_equal(mob.values, mapped)
    # even transit counts undo the twist entirely
    cyl2 = gamma_simultaneous(es, ident, 0.7, 1.0, 2, 1, 4, rescaled=True)
    mob2 = gamma_simultaneous(es, mirror, 0.7, 1.0, 2, 1, 4, rescaled=True)
    assert np.array_equal(mob2.values, cyl2.values)


def test_shift_relabelling_identity_is_exact():
    n_modes, c = 10, 3
    gvec = (0.0, 1.0) + (0.0,) * 7 + (1.0,)
    es = eigen_circulant(n_modes, gvec)
    ring = Permutation.identity(n_modes)
    twist = Permutation.cyclic(n_modes, c)
    for n in (1, 2, 3, 4):
        a = gamma_simultaneous(es, ring, 0.55, 1.0, n, 2, 6, rescaled=True)
        b = gamma_simultaneous(es, twist, 0.55, 1.0, n, 2, 6, rescaled=True)
        mapped = permute_modes(a.values, symmetry_map("twisted_circle", n, n_modes, c))
        assert np.array_equal(b.values, mapped)


def test_quantum_bounded_by_twice_classical():
    rng = np.random.default_rng(21)
    for _ in range(25):
        n_modes = int(rng.integers(2, 10))
        es, p = _chain(n_modes)
        theta = float(rng.uniform(0.1, 1.4))
        n = int(rng.integers(1, 5))
        j = int(rng.integers(1, n_modes + 1))
        k = int(rng.integers(1, n_modes + 1))
        g = gamma_simultaneous(es, p, theta, 1.0, n, j, k, rescaled=True)
        c = classical_p(es, p, theta, 1.0, n, j, k, rescaled=True)
        assert np.all(g.values <= 2.0 * c.values + 1e-12)


def test_doubly_occupied_input():
    """Both photons into one guide: no interference term survives, the
    quantum pattern collapses onto the classical one."""
    es, p = _chain(5)
    g = gamma_simultaneous(es, p, 0.7, 1.0, 2, 3, 3, rescaled=True)
    c = classical_p(es, p, 0.7, 1.0, 2, 3, 3, rescaled=True)
    assert np.max(np.abs(g.values - c.values)) < 1e-14
    assert abs(np.triu(g.values).sum() - 1.0) < 1e-12

    # exact simulator agrees entrywise
    from loopwalk.fock_oracle import TwoPhotonState, state_run

    cfg = DeviceConfig(topology="cylinder", n_modes=5, theta=0.7)
    run = state_run(cfg, TwoPhotonState.from_array_pair(5, 3, 3), 2)
    phys = gamma_simultaneous(es, p, 0.7, 1.0, 2, 3, 3, rescaled=False)
    assert np.max(np.abs(run.transit_records[1].coincidences - phys.values)) < 1e-12


def test_pair_mass_sums_to_one_when_rescaled():
    rng = np.random.default_rng(30)
    for _ in range(10):
        n_modes = int(rng.integers(2, 9))
        es, p = _chain(n_modes)
        n = int(rng.integers(1, 4))
        g = gamma_simultaneous(es, p, 0.8, 1.0, n, 1, n_modes, rescaled=True)
        c = classical_p(es, p, 0.8, 1.0, n, 1, n_modes, rescaled=True)
        assert abs(np.triu(g.values).sum() - 1.0) < 1e-12
        assert abs(np.triu(c.values).sum() - 1.0) < 1e-12


# ---- input snapshot and delayed entry ------------------------------------------------


def test_snapshot_before_first_transit():
    es, p = _chain(6)
    g = gamma_simultaneous(es, p, 0.5, 1.0, 0, 2, 5, rescaled=True)
    expected = np.zeros((6, 6))
    expected[1, 4] = expected[4, 1] = 1.0
    assert np.allclose(g.values, expected, atol=1e-14)
    with pytest.raises(ConfigError):
        gamma_simultaneous(es, p, 0.5, 1.0, 0, 2, 5, rescaled=False)


def test_delay_zero_reduces_to_simultaneous():
    es, p = _chain(7)
    a = gamma_simultaneous(es, p, 0.6, 1.0, 2, 1, 4, rescaled=True)
    b = gamma_delayed(es, p, 0.6, 1.0, 2, 0, 1, 4, rescaled=True)
    assert np.array_equal(a.values, b.values)


def test_delayed_two_guides_frozen():
    """One transit of extra delay on a balanced two-guide splitter.

    The early photon sees U(2 g tau) = -i X, the late one U(g tau); the
    resulting rescaled pattern is (0, 1/2, 1) over (11, 12, 22)."""
    es, p = _chain(2)
    g = gamma_delayed(es, p, Q, Q, 1, 1, 1, 2, rescaled=True)
    assert abs(g.values[0, 0] - 0.0) < 1e-12
    assert abs(g.values[0, 1] - 0.5) < 1e-12
    assert abs(g.values[1, 1] - 1.0) < 1e-12


def test_delayed_records_delay():
    es, p = _chain(4)
    g = gamma_delayed(es, p, 0.5, 1.0, 2, 3, 1, 2, rescaled=True)
    assert g.delay == 3 and g.step == 2


# ---- guards ------------------------------------------------------------------


def test_per_guide_theta_rejected_by_closed_form():
    cfg = DeviceConfig(topology="cylinder", n_modes=3, theta=(0.1, 0.2, 0.3))
    with pytest.raises(UnsupportedConfigError):
        device_correlation(cfg, 1, 1, 2, rescaled=True)


def test_classical_delayed_unsupported():
    cfg = DeviceConfig(topology="cylinder", n_modes=4, theta=0.4)
    with pytest.raises(UnsupportedConfigError):
        device_correlation(cfg, 1, 1, 2, n_d=1, kind="classical", rescaled=True)


def test_inputs_validated():
    es, p = _chain(3)
    with pytest.raises(ConfigError):
        gamma_simultaneous(es, p, 0.4, 1.0, 1, 0, 2, rescaled=True)
    with pytest.raises(ConfigError):
        gamma_simultaneous(es, p, 0.4, 1.0, 1, 1, 4, rescaled=True)


def test_symmetry_map_guards():
    with pytest.raises(ConfigError):
        symmetry_map("cylinder", 1, 5)
    with pytest.raises(ConfigError):
        symmetry_map("twisted_circle", 1, 5, shift_c=7)


# ---- invariant normal modes --------------------------------------------------------


def test_chain_modes_alternate_mirror_parity():
    # sine modes flip sign under mirroring when their index is even
    es = eigen_tridiagonal(5)
    groups = invariant_modes(es, Permutation.mirror(5))
    by_mode = {g.mode_indices[0]: g for g in groups}
    assert all(g.dim == 1 for g in groups)
    assert [by_mode[m].invariant_dim for m in (1, 2, 3, 4, 5)] == [1, 0, 1, 0, 1]


def test_ring_modes_under_shift():
    # N = 12, shift 4: Fourier mode m is fixed iff 4 (m - 1) = 0 mod 12
    gvec = (0.0, 1.0) + (0.0,) * 9 + (1.0,)
    es = eigen_circulant(12, gvec)
    groups = invariant_modes(es, Permutation.cyclic(12, 4))
    by_modes = {g.mode_indices: g for g in groups}
    assert by_modes[(1,)].invariant_dim == 1
    assert by_modes[(7,)].invariant_dim == 1
    zero_cluster = by_modes[(4, 10)]
    assert zero_cluster.dim == 2
    assert zero_cluster.invariant_dim == 2  # both Fourier modes are fixed
    assert by_modes[(2, 12)].invariant_dim == 0
    # invariant bases really are fixed by the relabelling
    pmat = Permutation.cyclic(12, 4).matrix()
    for g in groups:
        if g.invariant_dim:
            assert np.max(np.abs(pmat @ g.basis - g.basis)) < 1e-9


def test_two_photon_check_accepts_fixed_modes():
    es = eigen_tridiagonal(5)
    p = Permutation.mirror(5)
    v = es.eigenvectors
    assert two_photon_invariant_check(es, p, 0.6, 1.0, v[:, 0], v[:, 2], n_steps=3)


def test_two_photon_check_rejects_moving_state():
    es = eigen_tridiagonal(5)
    p = Permutation.mirror(5)
    e1 = np.zeros(5, dtype=complex)
    e2 = np.zeros(5, dtype=complex)
    e1[0] = 1.0
    e2[1] = 1.0
    assert not two_photon_invariant_check(
        es, p, 0.6, 1.0, e1, e2, n_steps=3, enforce_invariance=False
    )
    with pytest.raises(ValueError, match="invariant"):
        two_photon_invariant_check(es, p, 0.6, 1.0, e1, e2, n_steps=3)
