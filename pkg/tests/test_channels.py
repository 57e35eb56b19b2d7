import numpy as np
import pytest

from qnklab.channels import (
    Channel,
    apply,
    check_choi,
    choi_matrix,
    choi_reshuffle,
    compose,
    identity_channel,
    kraus_from_dilation,
    natural_rep,
    unitary_channel,
    unitary_from_natural,
    unitary_natural,
)
from qnklab.linalg import DensityMatrix, is_unitary, unvectorize, vectorize

from conftest import PAULI_X, random_unitary

DEPHASING_KRAUS = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))


class TestNaturalRep:
    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_identity_channel(self, dim):
        np.testing.assert_allclose(natural_rep(identity_channel(dim)), np.eye(dim * dim))

    def test_unitary_channel(self, rng):
        u = random_unitary(3, rng)
        np.testing.assert_allclose(natural_rep(unitary_channel(u)), np.kron(u, u.conj()))

    def test_dephasing(self):
        ch = Channel(DEPHASING_KRAUS)
        np.testing.assert_allclose(natural_rep(ch), np.diag([1, 0, 0, 1]))

    def test_unitary_channel_natural_is_unitary(self, rng):
        nat = natural_rep(unitary_channel(random_unitary(4, rng)))
        assert is_unitary(nat)

    def test_rejects_non_tp(self):
        with pytest.raises(ValueError):
            Channel((np.diag([1.0, 0.5]),))


class TestDilation:
    def test_untouched_ancilla(self, rng):
        v = random_unitary(2, rng)
        ch = kraus_from_dilation(np.kron(np.eye(2), v), ancilla_dim=2)
        assert len(ch.kraus) == 1
        np.testing.assert_allclose(ch.kraus[0], v)

    def test_cnot_message_control_gives_dephasing(self):
        # ancilla x message ordering, message controls a flip of the ancilla
        u = np.zeros((4, 4))
        for anc in range(2):
            for msg in range(2):
                u[((anc ^ msg) << 1) | msg, (anc << 1) | msg] = 1.0
        ch = kraus_from_dilation(u, ancilla_dim=2)
        got = sorted(tuple(np.round(np.diag(e).real, 12)) for e in ch.kraus)
        assert got == [(0.0, 1.0), (1.0, 0.0)]

    def test_trace_preserving_sweep(self, rng):
        for _ in range(20):
            ch = kraus_from_dilation(random_unitary(4, rng), ancilla_dim=2)
            tp = sum(e.conj().T @ e for e in ch.kraus)
            assert np.max(np.abs(tp - np.eye(2))) < 1e-10

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            kraus_from_dilation(np.ones((4, 4)), ancilla_dim=2)


class TestApply:
    def test_identity(self, rng):
        rho = DensityMatrix.random(3, rng)
        assert np.max(np.abs(apply(identity_channel(3), rho).matrix - rho.matrix)) < 1e-14

    def test_bit_flip(self):
        out = apply(unitary_channel(PAULI_X), DensityMatrix.pure([1, 0]))
        np.testing.assert_allclose(out.matrix, np.diag([0.0, 1.0]), atol=1e-14)

    def test_kraus_sum_matches_vectorized_action(self, rng):
        for _ in range(10):
            ch = kraus_from_dilation(random_unitary(8, rng), ancilla_dim=2)
            rho = DensityMatrix.random(4, rng)
            via_kraus = apply(ch, rho).matrix
            via_natural = unvectorize(ch.natural @ vectorize(rho))
            assert np.max(np.abs(via_kraus - via_natural)) < 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            apply(identity_channel(2), DensityMatrix.random(3, rng))


class TestChoi:
    def test_reshuffle_is_involution(self, rng):
        m = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        np.testing.assert_array_equal(choi_reshuffle(choi_reshuffle(m)), m)

    def test_identity_channel_choi(self):
        j = choi_matrix(identity_channel(2))
        expected = np.zeros((4, 4), dtype=complex)
        for a in range(2):
            for b in range(2):
                expected[3 * a, 3 * b] = 1.0  # |aa><bb|
        np.testing.assert_allclose(j, expected)
        assert abs(np.trace(j) - 2) < 1e-14
        assert np.linalg.matrix_rank(j) == 1

    def test_random_channels_choi_properties(self, rng):
        for _ in range(10):
            ch = kraus_from_dilation(random_unitary(8, rng), ancilla_dim=2)
            negativity, tp_defect = check_choi(ch.natural)
            assert negativity < 1e-10
            assert tp_defect < 1e-10

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            choi_reshuffle(np.eye(6))


class TestComposition:
    def test_composition_is_valid_channel(self, rng):
        first = kraus_from_dilation(random_unitary(4, rng), ancilla_dim=2)
        second = kraus_from_dilation(random_unitary(4, rng), ancilla_dim=2)
        combined = compose(second, first)  # Channel validates TP on construction
        rho = DensityMatrix.random(2, rng)
        expected = apply(second, apply(first, rho))
        assert np.max(np.abs(apply(combined, rho).matrix - expected.matrix)) < 1e-12

    def test_natural_of_composition_is_product(self, rng):
        first = kraus_from_dilation(random_unitary(4, rng), ancilla_dim=2)
        second = kraus_from_dilation(random_unitary(4, rng), ancilla_dim=2)
        np.testing.assert_allclose(
            compose(second, first).natural, second.natural @ first.natural, atol=1e-12
        )


class TestUnitaryFromNatural:
    def test_round_trip_up_to_phase(self, rng):
        u = random_unitary(3, rng)
        e = unitary_from_natural(unitary_natural(u))
        phase = np.trace(e.conj().T @ u) / 3
        np.testing.assert_allclose(e * phase, u, atol=1e-10)

    def test_rejects_mixing_channel(self):
        with pytest.raises(ValueError):
            unitary_from_natural(natural_rep(Channel(DEPHASING_KRAUS)))


class TestChannelSerialization:
    def test_round_trip_recomputes_natural(self, rng):
        from qnklab.jsonio import channel_from_json, channel_to_json

        ch = kraus_from_dilation(random_unitary(4, rng), ancilla_dim=2)
        data = channel_to_json(ch)
        assert set(data) == {"dim", "kraus"}
        rebuilt = channel_from_json(data)
        np.testing.assert_allclose(rebuilt.natural, ch.natural, atol=1e-14)

    def test_rejects_non_tp_file(self):
        from qnklab.jsonio import FormatError, channel_from_json, channel_to_json

        data = channel_to_json(identity_channel(2))
        data["kraus"][0][0][0] = [0.5, 0.0]
        with pytest.raises(FormatError):
            channel_from_json(data)
