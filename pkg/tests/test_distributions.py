"""Distribution table invariants and the distance toolbox."""

import numpy as np
import pytest

from chainedbell import (
    ConditionalDistribution,
    Distribution,
    assert_nonsignaling,
    average_conditional_distance,
    as_distribution,
    coupling_distance_bound,
    drop_input,
    drop_party,
    marginalize,
    product_distribution,
    read_json_file,
    stat_distance,
    uniform_distribution,
    write_json_file,
)


def random_distribution(rng, shape):
    t = rng.random(shape)
    return Distribution(t / t.sum())


def random_conditional(rng, input_sizes, output_sizes):
    shape = tuple(input_sizes) + tuple(output_sizes)
    t = rng.random(shape)
    axes = tuple(range(len(input_sizes), len(shape)))
    t = t / t.sum(axis=axes, keepdims=True)
    return ConditionalDistribution(input_sizes, output_sizes, t)


class TestConstruction:
    def test_negative_dust_clamped(self):
        d = Distribution([1.0 + 5e-10, -5e-10])
        assert d.probs[1] == 0.0
        assert abs(d.probs.sum() - 1.0) < 1e-9

    def test_large_negative_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            Distribution([1.1, -0.1])

    def test_bad_normalization_rejected(self):
        with pytest.raises(ValueError, match="sum to 1"):
            Distribution([0.6, 0.6])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            ConditionalDistribution((2,), (2,), np.ones((2, 3)) / 3)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            Distribution([np.nan, 1.0])

    def test_tables_are_frozen(self):
        d = Distribution([0.5, 0.5])
        with pytest.raises(ValueError):
            d.table[0, 0] = 1.0
        with pytest.raises(AttributeError):
            d.table = None

    def test_normalization_preserved_by_operations(self):
        rng = np.random.default_rng(0)
        p = random_conditional(rng, (2, 3), (2, 2))
        m = marginalize(p, [0])
        sums = m.table.sum(axis=(2, 3))
        assert np.abs(sums - 1.0).max() < 1e-9


class TestStatDistance:
    def test_identical_is_zero(self):
        rng = np.random.default_rng(1)
        p = random_distribution(rng, (5,))
        assert stat_distance(p, p) == 0.0

    def test_disjoint_support_is_one(self):
        assert stat_distance(Distribution([1, 0]), Distribution([0, 1])) == 1.0

    def test_direct_arithmetic(self):
        p = Distribution([0.75, 0.25])
        q = Distribution([0.5, 0.5])
        assert stat_distance(p, q) == pytest.approx(0.25, abs=1e-15)

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError, match="alphabet"):
            stat_distance(Distribution([0.5, 0.5]), Distribution([1.0, 0.0, 0.0]))

    def test_excess_form_identity_random(self):
        # Half-L1 must equal the positive-excess sum; recomputed here as an
        # independent check on top of the in-function tripwire.
        rng = np.random.default_rng(2)
        for _ in range(1000):
            p = random_distribution(rng, (6,))
            q = random_distribution(rng, (6,))
            d = stat_distance(p, q)
            excess = float(np.maximum(q.probs - p.probs, 0.0).sum())
            assert abs(d - excess) < 1e-12

    def test_triangle_inequality_random(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            p = random_distribution(rng, (4,))
            q = random_distribution(rng, (4,))
            r = random_distribution(rng, (4,))
            assert stat_distance(p, r) <= (
                stat_distance(p, q) + stat_distance(q, r) + 1e-12
            )


class TestMarginalize:
    def test_product_marginal(self):
        px = np.array([0.7, 0.3])
        pz = np.array([0.2, 0.3, 0.5])
        joint = Distribution(np.outer(px, pz))
        m = marginalize(joint, [0])
        assert np.allclose(as_distribution(m).probs.ravel(), px, atol=1e-12)

    def test_perfectly_correlated_pair(self):
        joint = Distribution(np.array([[0.5, 0.0], [0.0, 0.5]]))
        m = marginalize(joint, [0])
        assert np.allclose(as_distribution(m).probs.ravel(), [0.5, 0.5], atol=1e-15)

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            marginalize(Distribution(np.full((2, 2), 0.25)), [])

    def test_inputs_retained(self):
        rng = np.random.default_rng(4)
        p = random_conditional(rng, (3, 2), (2, 2))
        m = marginalize(p, [1])
        assert m.input_sizes == (3, 2)
        assert m.output_sizes == (1, 2)

    def test_marginals_never_increase_distance(self):
        # Monotonicity under marginalization, on random joint pairs.
        rng = np.random.default_rng(5)
        for _ in range(1000):
            p = random_distribution(rng, (3, 4))
            q = random_distribution(rng, (3, 4))
            dm = stat_distance(marginalize(p, [0]), marginalize(q, [0]))
            assert dm <= stat_distance(p, q) + 1e-12


class TestNonSignaling:
    def test_product_channels_pass(self):
        rng = np.random.default_rng(6)
        pa = random_conditional(rng, (3,), (2,))
        pb = random_conditional(rng, (4,), (3,))
        table = np.einsum("ax,by->abxy", pa.table, pb.table)
        p = ConditionalDistribution((3, 4), (2, 3), table)
        rep = assert_nonsignaling(p)
        assert rep.passed
        assert rep.max_violation < 1e-12

    def test_copy_input_table_fails_maximally(self):
        # Alice's output copies Bob's input.
        table = np.zeros((2, 2, 2, 2))
        for a in range(2):
            for b in range(2):
                table[a, b, b, 0] = 1.0
        p = ConditionalDistribution((2, 2), (2, 2), table)
        rep = assert_nonsignaling(p)
        assert not rep.passed
        assert rep.max_violation == pytest.approx(1.0, abs=1e-12)

    def test_party_cap(self):
        p = uniform_distribution((2,) * 5)
        with pytest.raises(ValueError, match="at most"):
            assert_nonsignaling(p)


class TestAverageConditionalDistance:
    def test_uniform_conditionals_give_zero(self):
        pz = np.array([0.25, 0.75])
        p = Distribution(np.outer([0.5, 0.5], pz))
        q = Distribution(np.outer([0.5, 0.5], pz))
        assert average_conditional_distance(p, q) == 0.0

    def test_deterministic_conditionals(self):
        # X = Z with Z uniform, against uniform x uniform: each conditional
        # distance is 1/2 so the average is 1/2.
        p = Distribution(np.array([[0.5, 0.0], [0.0, 0.5]]))
        q = Distribution(np.full((2, 2), 0.25))
        assert average_conditional_distance(p, q) == pytest.approx(0.5, abs=1e-12)

    def test_matches_joint_distance_random(self):
        # The average form must reproduce the joint distance whenever the
        # side marginals match; the joint distance is the oracle.
        rng = np.random.default_rng(7)
        for _ in range(1000):
            pz = rng.random(3)
            pz /= pz.sum()
            pxz = rng.random((4, 3))
            pxz /= pxz.sum(axis=0, keepdims=True)
            qxz = rng.random((4, 3))
            qxz /= qxz.sum(axis=0, keepdims=True)
            p = Distribution(pxz * pz)
            q = Distribution(qxz * pz)
            avg = average_conditional_distance(p, q)
            joint = stat_distance(p, q)
            assert abs(avg - joint) < 1e-9

    def test_unequal_marginals_rejected(self):
        p = Distribution(np.outer([0.5, 0.5], [0.9, 0.1]))
        q = Distribution(np.outer([0.5, 0.5], [0.1, 0.9]))
        with pytest.raises(ValueError, match="Z-marginals"):
            average_conditional_distance(p, q)


class TestCouplingBound:
    def test_perfect_coupling(self):
        px = np.array([0.3, 0.7])
        rep = coupling_distance_bound(Distribution(np.diag(px)))
        assert rep.lhs == 0.0
        assert rep.rhs == pytest.approx(0.0, abs=1e-15)
        assert rep.passed

    def test_independent_uniform_pair(self):
        rep = coupling_distance_bound(Distribution(np.full((2, 2), 0.25)))
        assert rep.lhs == 0.0
        assert rep.rhs == pytest.approx(0.5, abs=1e-12)
        assert rep.passed

    def test_random_joints_always_pass(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            rep = coupling_distance_bound(random_distribution(rng, (4, 4)))
            assert rep.passed
            assert rep.lhs <= rep.rhs + 1e-12


class TestHelpers:
    def test_drop_input_checks_dependence(self):
        rng = np.random.default_rng(9)
        pa = random_conditional(rng, (3,), (2,))
        table = np.repeat(pa.table[:, None, :], 4, axis=1).reshape(3, 4, 2, 1)
        p = ConditionalDistribution((3, 4), (2, 1), table)
        q = drop_input(p, 1)
        assert q.input_sizes == (3, 1)
        dependent = random_conditional(rng, (3, 4), (2, 1))
        with pytest.raises(ValueError, match="depends"):
            drop_input(dependent, 1)

    def test_drop_party(self):
        p = ConditionalDistribution((2, 1), (2, 1), np.full((2, 1, 2, 1), 0.5))
        q = drop_party(p, 1)
        assert q.input_sizes == (2,) and q.output_sizes == (2,)
        with pytest.raises(ValueError, match="non-trivial"):
            drop_party(p, 0)

    def test_product_distribution(self):
        p = Distribution([0.2, 0.8])
        q = Distribution([0.5, 0.5])
        pq = product_distribution(p, q)
        assert pq.probs[0, 1] == pytest.approx(0.1, abs=1e-15)

    def test_conditional_accessor(self):
        rng = np.random.default_rng(12)
        p = random_conditional(rng, (3, 2), (2, 2))
        d = p.conditional((1, 0))
        assert np.array_equal(d.probs, p.table[1, 0])
        with pytest.raises(ValueError, match="per party"):
            p.conditional((1,))


class TestJsonRoundTrip:
    def test_dict_round_trip_bit_exact(self):
        rng = np.random.default_rng(10)
        p = random_conditional(rng, (3, 2), (2, 2))
        q = ConditionalDistribution.from_dict(p.to_dict())
        assert q == p

    def test_file_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        p = random_conditional(rng, (2, 2), (2, 2))
        path = tmp_path / "dist.json"
        write_json_file(p, path)
        q = read_json_file(path)
        assert q == p
        # And a second hop stays identical.
        write_json_file(q, path)
        assert read_json_file(path) == p

    def test_document_shape(self, tmp_path):
        p = uniform_distribution((2, 2))
        doc = p.to_dict()
        assert set(doc) == {"parties", "outputs", "inputs", "table"}
        assert doc["parties"] == 2
        assert doc["table"] == [0.25, 0.25, 0.25, 0.25]

    def test_malformed_document_rejected(self):
        with pytest.raises(ValueError, match="malformed"):
            ConditionalDistribution.from_dict({"parties": 2})
        with pytest.raises(ValueError, match="length"):
            ConditionalDistribution.from_dict(
                {"parties": 1, "outputs": [2], "inputs": [1], "table": [1.0]}
            )
