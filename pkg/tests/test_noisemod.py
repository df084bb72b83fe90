import numpy as np
import pytest

from chaosdiff.circuits import Op, rot_y
from chaosdiff.metrics import moment_distance
from chaosdiff.noisemod import (
    NoiseConfig,
    apply_dephasing,
    apply_dephasing_batch,
    dephasing_prob,
    dephasing_prob_after_steps,
    inject_rucd_pauli,
    pauli_relabel_check,
    povm_from_channel,
    povm_probs,
)
from chaosdiff.qstate import (
    PAULIS,
    Ket,
    StateEnsemble,
    basis_state,
    enumerate_branches,
)

from oracles import apply_channel, embed_gate, random_ket


class TestNoiseConfig:
    def test_bounds(self):
        with pytest.raises(ValueError):
            NoiseConfig(p1=0.7)
        with pytest.raises(ValueError):
            NoiseConfig(p2=-0.1)

    def test_from_rate(self):
        cfg = NoiseConfig.from_rate(gamma_phi=2.0, dt=0.1)
        assert cfg.p2 == pytest.approx((1 - np.exp(-0.2)) / 2)
        assert cfg.gamma_phi == 2.0


class TestDephasingProb:
    def test_zero_rate(self):
        for t in (0.0, 1.0, 100.0):
            assert dephasing_prob(t, 0.0) == 0.0

    def test_long_time_limit(self):
        assert dephasing_prob(1e9, 1.0) == pytest.approx(0.5)

    def test_monotone(self):
        ts = np.linspace(0, 10, 50)
        vals = [dephasing_prob(t, 0.3) for t in ts]
        assert np.all(np.diff(vals) >= 0)

    def test_composition_law_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            gamma = rng.uniform(0.05, 2.0)
            dt = rng.uniform(0.005, 0.05)
            p2 = dephasing_prob(dt, gamma)
            for k in range(1, 101):
                direct = dephasing_prob(k * dt, gamma)
                composed = dephasing_prob_after_steps(k, p2)
                assert abs(direct - composed) <= 1e-14


class TestApplyDephasing:
    def test_zero_prob_identity(self):
        rng = np.random.default_rng(1)
        state = Ket(random_ket(8, rng))
        out = apply_dephasing(state, 0.0, rng)
        assert np.array_equal(out.amplitudes, state.amplitudes)

    def test_basis_states_fixed_points(self):
        rng = np.random.default_rng(2)
        for idx in range(4):
            state = basis_state(2, idx)
            for _ in range(20):
                out = apply_dephasing(state, 0.5, rng)
                assert np.allclose(out.projector(), state.projector(), atol=1e-14)

    def test_full_dephasing_drives_plus_to_mixed(self):
        # trajectory average of |+> under p = 1/2 converges to I/2
        rng = np.random.default_rng(3)
        plus = np.full((100_000, 2), 1 / np.sqrt(2), dtype=complex)
        out = apply_dephasing_batch(plus, 1, 0.5, rng)
        rho = np.einsum("bi,bj->ij", out, out.conj()) / out.shape[0]
        assert np.allclose(rho, np.eye(2) / 2, atol=1e-2)


class TestInjectPauli:
    def test_zero_rate_bit_identical(self):
        rng = np.random.default_rng(4)
        state = Ket(random_ket(4, rng))
        ops = [Op("rz", (0,), angle=0.3), Op("ry", (1,), angle=-0.9), Op("cz", (0, 1))]
        ideal, injected = inject_rucd_pauli(state, ops, 0.0, rng)
        from chaosdiff.circuits import apply_ops

        reference = apply_ops(state.amplitudes[None, :], 2, ops)[0]
        assert injected == 0
        assert np.array_equal(ideal.amplitudes, reference)

    def test_expected_injection_count(self):
        # N_1q = 4 rotation locations; mean injections = p1 * N_1q
        rng = np.random.default_rng(5)
        state = Ket(random_ket(4, rng))
        ops = [
            Op("rz", (0,), angle=0.2),
            Op("ry", (0,), angle=0.4),
            Op("rz", (1,), angle=-0.1),
            Op("ry", (1,), angle=0.7),
        ]
        p1 = 0.2
        trials = 10_000
        counts = [inject_rucd_pauli(state, ops, p1, rng)[1] for _ in range(trials)]
        expect = p1 * 4
        sigma = np.sqrt(4 * p1 * (1 - p1) / trials)
        assert abs(np.mean(counts) - expect) < 4 * sigma

    def test_single_gate_channel_oracle(self):
        # p1 = 1: average density matrix equals (1/3) sum_P P U rho U^dag P
        rng = np.random.default_rng(6)
        state = Ket(random_ket(2, rng))
        ops = [Op("ry", (0,), angle=0.8)]
        u = rot_y(0.8)
        rho_u = u @ state.projector() @ u.conj().T
        exact = sum(p @ rho_u @ p.conj().T for p in PAULIS.values()) / 3
        acc = np.zeros((2, 2), dtype=complex)
        trials = 100_000
        for _ in range(trials):
            out, injected = inject_rucd_pauli(state, ops, 0.5, rng)
            # keep only trajectories that actually injected, to isolate the
            # Pauli part; with p1 = 0.5 half the trials qualify
            if injected:
                acc += out.projector()
        acc /= np.trace(acc)
        assert np.linalg.norm(acc - exact) < 1e-2


class TestPovm:
    def test_identity_channel(self):
        elems = povm_from_channel([np.eye(4)])
        for z, e in enumerate(elems):
            expected = np.zeros((4, 4))
            expected[z, z] = 1.0
            assert np.allclose(e.operator, expected, atol=1e-14)

    def test_fully_depolarizing_single_qubit(self):
        kraus = [0.5 * np.eye(2), 0.5 * PAULIS["X"], 0.5 * PAULIS["Y"], 0.5 * PAULIS["Z"]]
        elems = povm_from_channel(kraus)
        for e in elems:
            assert np.allclose(e.operator, np.eye(2) / 2, atol=1e-12)

    def test_completeness(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            kraus = _random_channel(4, 2, rng)
            elems = povm_from_channel(kraus)
            total = sum(e.operator for e in elems)
            assert np.allclose(total, np.eye(4), atol=1e-10)
            for e in elems:
                evals = np.linalg.eigvalsh(e.operator)
                assert evals.min() > -1e-10

    def test_rejects_non_trace_preserving(self):
        with pytest.raises(ValueError):
            povm_from_channel([0.5 * np.eye(2)])

    def test_probabilities_match_direct_application(self):
        # <Phi|(I (x) E_z)|Phi> vs channel-then-projective-measurement
        rng = np.random.default_rng(8)
        for _ in range(5):
            state = Ket(random_ket(8, rng))  # 1 data + 2 measured qubits
            kraus = _random_channel(4, 2, rng)
            elems = povm_from_channel(kraus)
            got = povm_probs(state, elems, n_measured=2)
            rho = state.projector()
            embedded = [embed_gate(k, (1, 2), 3) for k in kraus]
            rho_noisy = apply_channel(rho, embedded)
            for z in range(4):
                proj = np.zeros((4, 4))
                proj[z, z] = 1.0
                expected = np.trace(embed_gate(proj, (1, 2), 3) @ rho_noisy).real
                assert got[z] == pytest.approx(expected, abs=1e-12)


def _random_channel(dim, n_kraus, rng):
    """Random CPTP map from a Haar isometry, split into n_kraus blocks."""
    m = rng.normal(size=(dim * n_kraus, dim)) + 1j * rng.normal(size=(dim * n_kraus, dim))
    q, _ = np.linalg.qr(m)
    return [q[i * dim : (i + 1) * dim, :] for i in range(n_kraus)]


class TestPauliRelabel:
    def test_z_leaves_ensemble_unchanged(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            state = Ket(random_ket(8, rng))
            verdict = pauli_relabel_check(state, [1, 2], 2, "Z")
            assert verdict.ok and not verdict.relabeled

    def test_x_relabels_outcomes(self):
        rng = np.random.default_rng(10)
        state = Ket(random_ket(8, rng))
        verdict = pauli_relabel_check(state, [1, 2], 1, "X")
        assert verdict.ok and verdict.relabeled
        # directly: branch list equals the noiseless list with bit flipped
        from chaosdiff.circuits import _apply_matrix

        noisy = Ket(_apply_matrix(state.amplitudes[None, :], PAULIS["X"], (1,), 3)[0])
        base = {r.outcome: r for r in enumerate_branches(state, [1, 2])}
        flipped = {r.outcome: r for r in enumerate_branches(noisy, [1, 2])}
        for z, rec in base.items():
            other = flipped[("1" if z[0] == "0" else "0") + z[1]]
            assert other.probability == pytest.approx(rec.probability, abs=1e-14)

    def test_y_relabels_outcomes(self):
        rng = np.random.default_rng(11)
        state = Ket(random_ket(8, rng))
        assert pauli_relabel_check(state, [0, 2], 0, "Y").ok

    def test_moment_distance_invariant(self):
        # permutation-invariant statistics are untouched by any of the Paulis
        rng = np.random.default_rng(12)
        state = Ket(random_ket(8, rng))
        measured = [1, 2]

        def ensemble_of(s):
            recs = enumerate_branches(s, measured)
            return StateEnsemble(
                [r.post_state for r in recs], [r.probability for r in recs]
            )

        from chaosdiff.circuits import _apply_matrix

        base = ensemble_of(state)
        for name, mat in PAULIS.items():
            for q in measured:
                noisy = Ket(
                    _apply_matrix(state.amplitudes[None, :], mat, (q,), 3)[0]
                )
                pert = ensemble_of(noisy)
                for m in (1, 2):
                    assert moment_distance(pert, m, "haar") == pytest.approx(
                        moment_distance(base, m, "haar"), abs=1e-12
                    )

    def test_requires_measured_qubit(self):
        state = Ket(random_ket(4, np.random.default_rng(13)))
        with pytest.raises(ValueError):
            pauli_relabel_check(state, [1], 0, "X")
