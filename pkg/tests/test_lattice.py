import numpy as np
import pytest
from hypothesis import given, strategies as st

from oscchain.errors import UnstablePotentialError
from oscchain.lattice import (
    BathSpec,
    ChainSpec,
    augment_with_baths,
    bath_couplings,
    bath_frequencies,
    build_potential,
    dispersion,
)


def test_periodic_n4_matches_hand_expansion():
    V = build_potential(ChainSpec(4, 0.1, "periodic"))
    expected = np.array([
        [1.2, -0.1, 0.0, -0.1],
        [-0.1, 1.2, -0.1, 0.0],
        [0.0, -0.1, 1.2, -0.1],
        [-0.1, 0.0, -0.1, 1.2],
    ])
    np.testing.assert_allclose(V, expected, atol=1e-15)


def test_periodic_two_sites_double_bond():
    # both bonds of the ring join the same pair
    V = build_potential(ChainSpec(2, 0.4, "periodic"))
    np.testing.assert_allclose(V, [[1.8, -0.8], [-0.8, 1.8]], atol=1e-15)
    freqs = np.sort(np.sqrt(np.linalg.eigvalsh(V)))
    np.testing.assert_allclose(freqs, [dispersion(ChainSpec(2, 0.4), k) for k in (2, 1)], atol=1e-14)


def test_open_chain_spring_ends():
    V = build_potential(ChainSpec(3, 0.2, "open"))
    np.testing.assert_allclose(V, [[1.2, -0.2, 0], [-0.2, 1.4, -0.2], [0, -0.2, 1.2]], atol=1e-15)


def test_open_chain_uniform_ends():
    V = build_potential(ChainSpec(3, 0.2, "open", "uniform"))
    np.testing.assert_allclose(np.diag(V), [1.4, 1.4, 1.4], atol=1e-15)


def test_zero_coupling_is_identity():
    np.testing.assert_array_equal(build_potential(ChainSpec(5, 0.0, "open")), np.eye(5))


@pytest.mark.parametrize("n", [2, 3, 8, 17, 64])
@pytest.mark.parametrize("c", [0.05, 0.3, 0.5])
def test_dispersion_matches_dense_spectrum(n, c):
    spec = ChainSpec(n, c, "periodic")
    dense = np.sort(np.sqrt(np.linalg.eigvalsh(build_potential(spec))))
    analytic = np.sort([dispersion(spec, k) for k in range(1, n + 1)])
    np.testing.assert_allclose(dense, analytic, atol=1e-12)


@given(
    n=st.integers(2, 24),
    c=st.floats(0, 2),
    boundary=st.sampled_from(["periodic", "open"]),
)
def test_potential_symmetric_and_positive(n, c, boundary):
    V = build_potential(ChainSpec(n, c, boundary))
    np.testing.assert_array_equal(V, V.T)
    assert np.linalg.eigvalsh(V).min() >= 1 - 1e-12


def test_invalid_chain_rejected():
    with pytest.raises(ValueError):
        ChainSpec(1, 0.1)
    with pytest.raises(ValueError):
        ChainSpec(4, -0.1)


def test_bath_example_single_oscillator():
    bath = BathSpec(2, cutoff=2.0, coupling=0.1)
    np.testing.assert_allclose(bath_frequencies(bath), [1.0, 2.0])
    np.testing.assert_allclose(bath_couplings(bath), [0.1, 0.2])
    V = augment_with_baths(np.eye(1), bath)
    np.testing.assert_allclose(V, [[1, 0.1, 0.2], [0.1, 1, 0], [0.2, 0, 4]], atol=1e-15)
    # leading principal minors by hand: 1, 0.99, 3.92
    minors = [np.linalg.det(V[:k, :k]) for k in (1, 2, 3)]
    np.testing.assert_allclose(minors, [1.0, 0.99, 3.92], atol=1e-12)


def test_bath_without_modes_returns_system():
    V = build_potential(ChainSpec(3, 0.1))
    np.testing.assert_array_equal(augment_with_baths(V, BathSpec(0)), V)


def test_bath_layout_per_site():
    bath = BathSpec(3, cutoff=3.0, coupling=0.05)
    V = augment_with_baths(build_potential(ChainSpec(2, 0.1, "open")), bath)
    assert V.shape == (8, 8)
    np.testing.assert_allclose(V[0, 2:5], 0.05 * np.array([1, 2, 3]))
    np.testing.assert_allclose(V[1, 5:8], 0.05 * np.array([1, 2, 3]))
    assert not V[0, 5:8].any() and not V[1, 2:5].any()
    np.testing.assert_allclose(np.diag(V)[2:5], [1, 4, 9])


def test_ohmic_weight_linear():
    bath = BathSpec(50, cutoff=5.0, coupling=0.01)
    w, k = bath_frequencies(bath), bath_couplings(bath)
    # discrete spectral weight k_i^2 / w_i grows linearly in w
    np.testing.assert_allclose(k**2 / w, 0.01**2 * w, rtol=1e-12)


def test_overcoupled_bath_is_unstable():
    with pytest.raises(UnstablePotentialError):
        augment_with_baths(np.eye(1), BathSpec(4, cutoff=1.0, coupling=0.6))


def test_recurrence_time():
    assert BathSpec(300, 5.0).recurrence_time == pytest.approx(2 * np.pi * 60)
