import numpy as np
import pytest

from qnklab.channels import check_choi, unitary_natural
from qnklab.families import (
    IdentificationKey,
    KeyParams,
    build_keyed_set,
    build_scheme1_family,
    build_scheme2_family,
    transform_index_set,
)
from qnklab.linalg import DensityMatrix, trace_distance
from qnklab.security import (
    averaged_cipher_states,
    check_indistinguishability,
    check_key_security,
    check_operator_security,
    choi_bounds,
    cipher_average_operators,
    diamond_norm,
    unitary_pair_diamond_distance,
)

from conftest import PAULI_X, random_unitary


def rotation(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


class TestCipherAverages:
    def test_singleton_family_degenerates_to_operators(self):
        fam = build_scheme1_family(1, 1, 2, seed=3)
        a, b = fam.s_a[0], fam.s_b[0]
        averages = cipher_average_operators(fam)
        np.testing.assert_allclose(averages.m1, a, atol=1e-14)
        np.testing.assert_allclose(averages.m2, b @ a, atol=1e-14)
        np.testing.assert_allclose(averages.m3, a.conj().T @ b @ a, atol=1e-14)

    def test_rotation_average_against_analytic_sum(self):
        # oracle: build each rotation superoperator from scratch and sum
        m = 8
        angles = [2 * np.pi * j / m for j in range(m)]
        fam = build_scheme1_family(m, m, 2, seed=0, angles_a=angles, angles_b=angles)
        averages = cipher_average_operators(fam)
        expected = sum(np.kron(rotation(t), rotation(t).conj()) for t in angles) / m
        assert np.max(np.abs(averages.m1 - expected)) < 1e-12

    def test_rejects_unnormalized_distribution(self):
        fam = build_scheme1_family(2, 2, 2, seed=3)
        with pytest.raises(ValueError):
            cipher_average_operators(fam, local_probs=[0.5, 0.4])
        with pytest.raises(ValueError):
            cipher_average_operators([fam, fam], key_probs=[0.7, 0.2])

    def test_averages_are_channel_mixtures(self, rng):
        fam = build_scheme1_family(3, 3, 2, seed=5)
        averages = cipher_average_operators(fam)
        for m in (averages.m1, averages.m2, averages.m3):
            negativity, tp_defect = check_choi(m)
            assert negativity < 1e-10
            assert tp_defect < 1e-10

    def test_averaged_states_are_valid(self, rng):
        fam = build_scheme1_family(3, 3, 2, seed=5)
        averages = cipher_average_operators(fam)
        states = averaged_cipher_states(averages, DensityMatrix.random(2, rng))
        assert all(isinstance(s, DensityMatrix) for s in states)


class TestDiamondNorm:
    def test_zero_map(self):
        assert diamond_norm(np.zeros((4, 4))) == 0.0

    def test_identity_vs_bit_flip(self):
        delta = unitary_natural(np.eye(2)) - unitary_natural(PAULI_X)
        assert abs(diamond_norm(delta) - 2.0) < 1e-6
        assert abs(unitary_pair_diamond_distance(np.eye(2), PAULI_X) - 2.0) < 1e-12

    def test_identity_vs_quarter_rotation(self):
        r = rotation(np.pi / 2)
        delta = unitary_natural(np.eye(2)) - unitary_natural(r)
        assert abs(diamond_norm(delta) - np.sqrt(2)) < 1e-6
        # hull distance nu = cos(theta / 2)
        assert abs(unitary_pair_diamond_distance(np.eye(2), r) - np.sqrt(2)) < 1e-12

    @pytest.mark.parametrize("dim", [2, 3])
    def test_matches_closed_form_on_random_pairs(self, dim, rng):
        for _ in range(5):
            u, v = random_unitary(dim, rng), random_unitary(dim, rng)
            sdp = diamond_norm(unitary_natural(u) - unitary_natural(v))
            closed = unitary_pair_diamond_distance(u, v)
            assert abs(sdp - closed) < 1e-6

    def test_choi_sandwich(self, rng):
        u, v = random_unitary(2, rng), random_unitary(2, rng)
        delta = unitary_natural(u) - unitary_natural(v)
        lower, upper = choi_bounds(delta)
        value = diamond_norm(delta)
        assert lower - 1e-6 <= value <= upper + 1e-6

    def test_channel_norm_is_one(self, rng):
        assert abs(diamond_norm(unitary_natural(random_unitary(2, rng))) - 1.0) < 1e-6

    def test_rejects_non_square_of_square(self):
        with pytest.raises(ValueError):
            diamond_norm(np.eye(6))


class TestIndistinguishability:
    def test_identical_ciphers_pass(self, rng):
        rho = DensityMatrix.random(2, rng)
        result = check_indistinguishability([rho, rho, rho], epsilon=1e-6)
        assert result.def1.passed and result.def2.passed
        assert result.equivalence_ok

    def test_orthogonal_ciphers_fail(self):
        states = [DensityMatrix.pure(v) for v in ([1, 0, 0], [0, 1, 0], [0, 0, 1])]
        result = check_indistinguishability(states, epsilon=0.9)
        # pairwise distances are exactly 1, so the pairwise reading fails
        # below 1; the best common state is the barycenter at radius 2/3
        assert not result.def1.passed
        assert abs(max(result.def2.measured.values()) - 2 / 3) < 1e-12
        tighter = check_indistinguishability(states, epsilon=0.6)
        assert not tighter.def2.passed

    def test_requires_three_ciphers(self, rng):
        rho = DensityMatrix.random(2, rng)
        with pytest.raises(ValueError):
            check_indistinguishability([rho, rho], epsilon=0.1)

    def test_equivalence_implications_on_random_triples(self, rng):
        # pass(eps) pairwise implies pass(eps) around rho1, and pass(eps)
        # around any tau implies pairwise pass(2 eps)
        for trial in range(50):
            dim = 2 if trial % 2 == 0 else 4
            anchor = DensityMatrix.random(dim, rng)
            spread = rng.uniform(0.01, 0.8)
            states = []
            for _ in range(3):
                other = DensityMatrix.random(dim, rng)
                states.append(
                    DensityMatrix((1 - spread) * anchor.matrix + spread * other.matrix)
                )
            epsilon = float(rng.uniform(0.05, 0.6))
            result = check_indistinguishability(states, epsilon)
            assert result.equivalence_ok
            if result.def1.passed:
                radius_rho1 = max(
                    trace_distance(states[1], states[0]), trace_distance(states[2], states[0])
                )
                assert radius_rho1 < epsilon
            if result.def2.passed:
                doubled = check_indistinguishability(states, 2 * epsilon)
                assert doubled.def1.passed


class TestOperatorSecurity:
    def test_identity_family_scores_zero(self):
        fam = build_scheme1_family(1, 1, 2, seed=0, angles_a=[0.0], angles_b=[0.0])
        result = check_operator_security(fam, epsilon=0.01)
        assert result.def3.passed and result.sufficient.passed
        assert max(result.def3.measured.values()) < 1e-8

    def test_tight_rotation_spread_passes(self):
        # regression baseline: worst wire norm about 3.3e-5, worst
        # sufficient norm about 1.0e-2 for a 0.01-radian spread
        tight = [0.0, 0.01, -0.01]
        fam = build_scheme1_family(3, 3, 2, seed=1, angles_a=tight, angles_b=tight)
        result = check_operator_security(fam, epsilon=0.05)
        assert result.def3.passed
        assert max(result.def3.measured.values()) < 1e-3
        assert result.sufficient.passed
        assert abs(result.sufficient.measured["||I-A^-1||"] - 0.01) < 1e-3
        assert result.implication_ok

    def test_wide_rotation_spread_fails(self):
        wide = [0.0, np.pi / 2, np.pi]
        fam = build_scheme1_family(3, 3, 2, seed=1, angles_a=wide, angles_b=wide)
        result = check_operator_security(fam, epsilon=0.1)
        assert not result.def3.passed
        # regression baseline: 0.3514 at the first two wires
        assert max(result.def3.measured.values()) > 0.3

    def test_verdict_serialization(self):
        fam = build_scheme1_family(2, 2, 2, seed=2, angles_a=[0, 0.1], angles_b=[0, 0.1])
        result = check_operator_security(fam, epsilon=0.5)
        data = result.def3.to_json()
        assert set(data) == {"criterion", "epsilon", "measured", "pass"}
        assert data["criterion"] == "Def3"


class TestKeySecurity:
    def test_key_against_itself_is_zero(self):
        fam = build_scheme1_family(2, 2, 2, seed=4)
        key = IdentificationKey.derive(7)
        keyed = build_keyed_set(key, fam, variant="plain")
        verdict = check_key_security([keyed, keyed], epsilon=0.1)
        assert verdict.passed
        assert max(verdict.measured.values()) < 1e-8

    def test_singleton_key_space_vacuous(self):
        fam = build_scheme1_family(2, 2, 2, seed=4)
        verdict = check_key_security([fam], epsilon=0.1)
        assert verdict.passed
        assert verdict.measured == {}

    def test_empty_key_list_rejected(self):
        with pytest.raises(ValueError):
            check_key_security([], epsilon=0.1)

    def test_transform_only_key_difference_scheme2(self):
        # two keys sharing k but using different transform indices; the
        # plain-keyed wire operators differ close to maximally.  frozen
        # baselines: 2.0, 1.988, 2.0 (solver at 1e-5 accuracy)
        fam = build_scheme2_family(3, 3, seed=7)
        params = KeyParams()
        i1, i2 = transform_index_set(42, params)[:2]
        keyed = [
            build_keyed_set(IdentificationKey(42, i, params), fam, variant="plain")
            for i in (i1, i2)
        ]
        verdict = check_key_security(keyed, epsilon=0.1, solver_eps=1e-5)
        assert not verdict.passed
        values = [verdict.measured[f"keys(0,1).wire{j}"] for j in (1, 2, 3)]
        np.testing.assert_allclose(values, [2.0, 1.98805, 2.0], atol=1e-3)
