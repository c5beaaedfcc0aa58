import itertools
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from zeroerr.config import CapExceededError, Caps
from zeroerr.probability import (DistributionError, EmpiricalType, as_channel, as_distribution,
                                 batch_conditional_entropy, conditional_entropy,
                                 conditional_types, count_S, empirical_conditional_entropy,
                                 entropy, enumerate_types, joint_counts, joint_from_json,
                                 kl_divergence, multinomial, mutual_information,
                                 sequence_probability, type_class, type_class_array)

from conftest import distributions


class TestValidation:
    def test_mass(self):
        with pytest.raises(DistributionError, match="sums to"):
            as_distribution([0.5, 0.6])

    def test_negative_entry_named(self):
        with pytest.raises(DistributionError, match=r"\(1,\)"):
            as_distribution([1.5, -0.5])

    def test_channel_row_named(self):
        with pytest.raises(DistributionError, match="row 1"):
            as_channel([[1.0, 0.0], [0.5, 0.4]])

    def test_json_shape(self):
        with pytest.raises(DistributionError, match="shape"):
            joint_from_json({"x_alphabet": 2, "y_alphabet": 2, "pxy": [[1.0]]})
        p = joint_from_json({"x_alphabet": 1, "y_alphabet": 2, "pxy": [[0.5, 0.5]]})
        assert p.shape == (1, 2)


class TestMeasures:
    @pytest.mark.parametrize("q,h", [((0.5, 0.5), 1.0), ((1, 0), 0.0), ((0.25, 0.25, 0.5), 1.5)])
    def test_entropy_examples(self, q, h):
        assert entropy(q) == pytest.approx(h, abs=1e-15)

    @settings(max_examples=50)
    @given(st.integers(1, 8).flatmap(lambda k: distributions(k)))
    def test_entropy_matches_scipy(self, q):
        assert entropy(q) == pytest.approx(scipy.stats.entropy(q, base=2), abs=1e-12)

    def test_conditional_entropy_examples(self):
        assert conditional_entropy(np.eye(3), [0.2, 0.3, 0.5]) == 0.0
        assert conditional_entropy(np.full((2, 2), 0.5), [0.9, 0.1]) == pytest.approx(1.0)
        assert conditional_entropy([[1, 0], [0.5, 0.5]], [0.5, 0.5]) == pytest.approx(0.5)
        with pytest.raises(DistributionError):
            conditional_entropy(np.eye(2), [1 / 3] * 3)

    def test_kl_examples(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(1.0)
        assert kl_divergence([0.5, 0.5], [1, 0]) == math.inf

    @settings(max_examples=50)
    @given(st.integers(1, 6).flatmap(lambda k: st.tuples(distributions(k), distributions(k))))
    def test_kl_matches_scipy(self, qp):
        q, p = qp
        ref = scipy.special.rel_entr(q, p).sum() / math.log(2)
        assert kl_divergence(q, p) == pytest.approx(ref, abs=1e-12)
        assert kl_divergence(q, p) >= 0

    def test_mutual_information_examples(self):
        assert mutual_information(np.outer([0.3, 0.7], [0.6, 0.4])) == pytest.approx(0, abs=1e-12)
        assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(1.0)
        u = np.array([[1, 1], [1, 0]]) / 3
        assert mutual_information(u) == pytest.approx(math.log2(3) - 4 / 3, abs=1e-12)

    def test_empirical_conditional_entropy(self):
        assert empirical_conditional_entropy([0, 1, 1], [0, 1, 1]) == 0.0
        assert empirical_conditional_entropy([0, 1], [0, 0]) == pytest.approx(1.0)
        h = 0.75 * entropy([2 / 3, 1 / 3])
        assert empirical_conditional_entropy([0, 0, 1, 2], [0, 0, 0, 1]) == pytest.approx(h)
        with pytest.raises(ValueError):
            empirical_conditional_entropy([0, 1], [0])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.data())
    def test_batch_matches_single(self, n, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 1000)))
        xs = rng.integers(0, 3, size=(5, n))
        y = rng.integers(0, 2, size=n)
        got = batch_conditional_entropy(xs, y, 3, 2)
        want = [_cond_h(x, y) for x in xs]
        assert got == pytest.approx(want, abs=1e-12)


def _cond_h(x, y):
    c = joint_counts(x, y, 3, 2) / len(x)
    return entropy(c.ravel()) - entropy(c.sum(axis=0))


class TestTypes:
    def test_enumerate_examples(self):
        assert [t.counts for t in enumerate_types(2, 2)] == [(0, 2), (1, 1), (2, 0)]
        assert len(enumerate_types(1, 3)) == 3
        assert len(enumerate_types(4, 3)) == 15

    @pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 9) for k in range(1, 5)])
    def test_counts_match_formulas(self, n, k):
        types = enumerate_types(n, k)
        assert len(types) == math.comb(n + k - 1, k - 1)
        total = 0
        for t in types:
            size = t.size()
            assert size == math.factorial(n) // math.prod(math.factorial(c) for c in t.counts)
            total += size
        assert total == k**n

    def test_type_class_examples(self):
        assert list(type_class(EmpiricalType((1, 1)))) == [(0, 1), (1, 0)]
        assert list(type_class(EmpiricalType((2, 0)))) == [(0, 0)]
        assert len(list(type_class(EmpiricalType((2, 1, 1))))) == 12

    def test_type_class_is_lexicographic_and_exact(self):
        t = EmpiricalType((2, 1, 1))
        seqs = list(type_class(t))
        brute = sorted(set(itertools.permutations([0, 0, 1, 2])))
        assert seqs == brute
        assert np.array_equal(type_class_array(t), np.array(brute))

    def test_type_class_cap(self):
        with pytest.raises(CapExceededError):
            type_class(EmpiricalType((5, 5)), Caps(typeclass=100))

    def test_type_of(self):
        assert EmpiricalType.of([0, 2, 2], 3).counts == (1, 0, 2)
        assert np.allclose(EmpiricalType((1, 3)).distribution(), [0.25, 0.75])
        with pytest.raises(ValueError):
            EmpiricalType((0, 0))

    def test_multinomial(self):
        assert multinomial((2, 1, 1)) == 12


class TestConditionalTypes:
    def test_degenerate_type(self):
        chans = conditional_types(EmpiricalType((3, 0)))
        assert len(chans) == 4
        assert all(np.array_equal(v[1], [0, 1]) for v in chans)

    def test_binary_examples(self):
        assert len(conditional_types(EmpiricalType((1, 1)))) == 4
        assert len(conditional_types(EmpiricalType((2, 2)))) == 9

    def test_joint_types_are_valid(self):
        q = EmpiricalType((2, 1, 1))
        for v in conditional_types(q):
            joint = np.asarray(q.counts)[:, None] * v
            assert np.allclose(joint, np.round(joint))
            assert np.allclose(v.sum(axis=1), 1)


class TestCountS:
    def test_examples(self):
        # (1,0) is also a function of y = (0,1), so it ties with x
        assert count_S([0, 1], [0, 1]) == 2
        assert count_S([0, 0, 1], [0, 0, 1]) == 1
        assert count_S([0, 1], [0, 0]) == 2

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 7, 8])
    def test_count_bound_exhaustive(self, n):
        # all binary pairs up to n = 5, a seeded sample beyond
        rng = np.random.default_rng(n)
        for x in itertools.product(range(2), repeat=n):
            for y in itertools.product(range(2), repeat=n):
                if n > 5 and rng.random() > 0.03:
                    continue
                got = count_S(x, y, 2)
                h = _cond_h_bin(x, y)
                brute = sum(1 for xt in itertools.product(range(2), repeat=n)
                            if sum(xt) == sum(x) and _cond_h_bin(xt, y) <= h + 1e-12)
                assert got == brute
                assert got <= (n + 1) ** 4 * 2 ** (n * h)


def _cond_h_bin(x, y):
    c = joint_counts(x, y, 2, 2) / len(x)
    return entropy(c.ravel()) - entropy(c.sum(axis=0))


@pytest.mark.parametrize("n", range(1, 7))
def test_sequence_probability_type_identity(n):
    rng = np.random.default_rng(n)
    p = rng.random((2, 3))
    p /= p.sum()
    for _ in range(10):
        x = rng.integers(0, 2, n)
        y = rng.integers(0, 3, n)
        q = joint_counts(x, y, 2, 3) / n
        want = 2 ** (-n * (kl_divergence(q.ravel(), p.ravel()) + entropy(q.ravel())))
        assert sequence_probability(x, y, p) == pytest.approx(want, rel=1e-10)
