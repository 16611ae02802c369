import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qthermo.core import (
    DensityOperator,
    QubitHamiltonian,
    excited_population,
    gibbs_state,
    mean_energy,
    partition_function,
    relative_entropy,
    spectral_reconstruction,
    von_neumann_entropy,
)
from qthermo.errors import DomainError

bloch = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: 1e-6 < sum(x * x for x in v) <= 1)


class TestDensityOperator:
    def test_rejects_non_hermitian(self):
        with pytest.raises(DomainError, match="Hermitian"):
            DensityOperator(np.array([[0.5, 0.1], [0.2, 0.5]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(DomainError, match="trace"):
            DensityOperator(np.diag([0.5, 0.6]))

    def test_rejects_negative(self):
        with pytest.raises(DomainError, match="positive"):
            DensityOperator(np.diag([1.1, -0.1]))

    def test_immutable(self):
        rho = DensityOperator.maximally_mixed()
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1.0

    def test_ground_is_row_zero(self):
        assert DensityOperator.ground().excited_population == 0.0
        assert DensityOperator.excited().excited_population == 1.0


class TestHamiltonian:
    def test_matrix_form(self):
        h = QubitHamiltonian(2.0, 0.6)
        np.testing.assert_array_equal(h.matrix, [[0, 0.3], [0.3, 2.0]])

    def test_spectrum_zero_at_ground(self):
        np.testing.assert_allclose(np.linalg.eigvalsh(QubitHamiltonian(1.7).matrix), [0, 1.7])

    def test_negative_gap_rejected(self):
        with pytest.raises(DomainError):
            QubitHamiltonian(-1.0)


class TestGibbs:
    def test_excited_population_example(self):
        p = gibbs_state(QubitHamiltonian(1.0), 1.0).excited_population
        assert p == pytest.approx(oracles.p_excited(1.0, 1.0), abs=1e-12)
        assert p == pytest.approx(0.268941, abs=1e-6)

    def test_infinite_temperature(self):
        assert gibbs_state(QubitHamiltonian(1.0), 1e9).excited_population == pytest.approx(0.5, abs=1e-9)

    def test_zero_temperature(self):
        assert gibbs_state(QubitHamiltonian(1.0), 1e-6).excited_population <= 1e-12

    @pytest.mark.parametrize("t", [0.0, -1.0, math.inf, math.nan])
    def test_bad_temperature(self, t):
        with pytest.raises(DomainError):
            gibbs_state(QubitHamiltonian(1.0), t)

    @pytest.mark.parametrize("omega,delta,t", [(1.0, 0.0, 1.0), (0.7, 0.9, 0.4), (2.0, -1.5, 3.0)])
    def test_matches_matrix_exponential(self, omega, delta, t):
        rho = gibbs_state(QubitHamiltonian(omega, delta), t).matrix
        np.testing.assert_allclose(rho, oracles.gibbs_expm(omega, delta, t), atol=1e-12)

    def test_mean_energy_monotone_in_temperature(self):
        h = QubitHamiltonian(1.3)
        e = [mean_energy(gibbs_state(h, t), h) for t in np.linspace(0.05, 20, 200)]
        assert np.all(np.diff(e) > 0)

    def test_excited_population_helper(self):
        assert excited_population(1.5, 2.0) == pytest.approx(oracles.p_excited(1.5, 2.0), abs=1e-15)


class TestMeanEnergy:
    def test_ground(self):
        assert mean_energy(DensityOperator.ground(), QubitHamiltonian(1.0)) == 0.0

    def test_maximally_mixed(self):
        assert mean_energy(DensityOperator.maximally_mixed(), QubitHamiltonian(2.0)) == pytest.approx(1.0, abs=1e-12)

    def test_gibbs(self):
        h = QubitHamiltonian(1.0)
        assert mean_energy(gibbs_state(h, 1.0), h) == pytest.approx(oracles.p_excited(1, 1), abs=1e-12)


class TestEntropy:
    def test_pure(self):
        assert von_neumann_entropy(DensityOperator.pure([1, 1j])) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        assert von_neumann_entropy(DensityOperator.maximally_mixed()) == pytest.approx(math.log(2), abs=1e-12)

    def test_binary_example(self):
        p = oracles.p_excited(1, 1)
        s = von_neumann_entropy(DensityOperator.from_populations(p))
        assert s == pytest.approx(oracles.binary_entropy(p), abs=1e-12)
        assert s == pytest.approx(0.58220, abs=1e-4)

    def test_bounds_random_states(self, rng):
        for _ in range(1000):
            s = von_neumann_entropy(DensityOperator.random(rng))
            assert -1e-12 <= s <= math.log(2) + 1e-12


class TestRelativeEntropy:
    def test_identity(self, rng):
        rho = DensityOperator.random(rng)
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)

    def test_excited_vs_gibbs(self):
        d = relative_entropy(DensityOperator.excited(), gibbs_state(QubitHamiltonian(1.0), 1.0))
        assert d == pytest.approx(-math.log(oracles.p_excited(1, 1)), abs=1e-12)
        assert d == pytest.approx(1.31326, abs=1e-4)

    def test_maximally_mixed(self):
        m = DensityOperator.maximally_mixed()
        assert relative_entropy(m, m) == pytest.approx(0.0, abs=1e-15)

    def test_support_violation_is_infinite(self):
        assert relative_entropy(DensityOperator.excited(), DensityOperator.ground()) == math.inf

    def test_non_negative_random(self, rng):
        for _ in range(1000):
            a, b = DensityOperator.random(rng), DensityOperator.random(rng)
            assert relative_entropy(a, b) >= 0.0

    def test_matches_logm(self, rng):
        for _ in range(20):
            a, b = DensityOperator.random(rng), DensityOperator.random(rng)
            ref = oracles.relative_entropy_logm(a.matrix, b.matrix)
            assert relative_entropy(a, b) == pytest.approx(ref, rel=1e-8, abs=1e-10)


class TestPartitionFunction:
    def test_examples(self):
        assert partition_function(QubitHamiltonian(1.0), 1.0) == pytest.approx(1 + math.exp(-1), abs=1e-12)
        assert partition_function(QubitHamiltonian(2.0), 1.0) == pytest.approx(1.135335, abs=1e-6)
        assert partition_function(QubitHamiltonian(0.0), 0.37) == 2.0

    def test_bad_temperature(self):
        with pytest.raises(DomainError):
            partition_function(QubitHamiltonian(1.0), 0.0)


@settings(max_examples=200, deadline=None)
@given(bloch)
def test_spectral_round_trip(v):
    rho = DensityOperator.from_bloch(v)
    np.testing.assert_allclose(spectral_reconstruction(rho), rho.matrix, atol=1e-12)
