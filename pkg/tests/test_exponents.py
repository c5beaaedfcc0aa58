import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from zeroerr.exponents import (ExponentValue, bhattacharyya_distance, composition_grid,
                               default_resolution, deterministic_source, exponent_ck,
                               exponent_new, exponent_oh, exponent_sweep, parity_source,
                               path_source, source_grid, sphere_packing, sweep_csv)
from zeroerr.graphs import characteristic_graph
from zeroerr.probability import conditional_entropy, entropy

warnings.filterwarnings("ignore", message="Solution may be inaccurate")


def random_source(seed, shape, zeros=0):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(shape[0] * shape[1])).reshape(shape)
    flat = rng.choice(p.size, zeros, replace=False)
    p.ravel()[flat] = 0
    # keep every x in the support
    for x in range(shape[0]):
        if p[x].sum() == 0:
            p[x, 0] = 0.1
    return p / p.sum()


# sources with their interior rates; the maximal achievable rate is degenerate
# (single feasible point) and excluded from the oracle comparison
SOURCES = {
    "path": (path_source(), [0.3, 0.8, 0.95, 1.2, 1.4]),
    "parity": (parity_source(), [0.5, 0.9, 0.99, 1.3]),
    "skew_parity": (deterministic_source([0.5, 0.2, 0.2, 0.1], [0, 1, 0, 1]), [0.6, 0.9, 1.5]),
    "random22": (random_source(0, (2, 2)), [0.2, 0.5, 0.8, 0.95]),
    "random32": (random_source(1, (3, 2), zeros=1), [0.5, 1.0, 1.3]),
    "random23": (random_source(2, (2, 3)), [0.3, 0.7, 0.9]),
}
CASES = [(name, r) for name, (_, rates) in SOURCES.items() for r in rates]


def close(got, want, tol=1e-6):
    if math.isinf(want):
        return math.isinf(got)
    return abs(got - want) <= tol + 1e-5 * abs(want)


class TestAgainstConvexOracle:
    @pytest.mark.parametrize("name,r", CASES)
    def test_sphere_packing(self, name, r):
        p = SOURCES[name][0]
        assert close(sphere_packing(r, p).value, oracles.sphere_packing(r, p))

    @pytest.mark.parametrize("name,r", CASES)
    def test_oohama_han(self, name, r):
        p = SOURCES[name][0]
        assert close(exponent_oh(r, p).value, oracles.exponent_oh(r, p))

    @pytest.mark.parametrize("name,r", CASES)
    def test_new(self, name, r):
        p = SOURCES[name][0]
        assert close(exponent_new(r, p).value, oracles.exponent_new(r, p))

    @pytest.mark.parametrize("name,r", CASES)
    def test_ck(self, name, r):
        p = SOURCES[name][0]
        want = max(oracles.exponent_ck_unclipped(r, p), 0.0)
        assert close(exponent_ck(r, p).value, want)


class TestExamples:
    @pytest.mark.parametrize("fn", [sphere_packing, exponent_oh, exponent_new])
    def test_zero_rate(self, fn):
        for p in (path_source(), parity_source(), random_source(3, (3, 3))):
            assert fn(0.0, p).value == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("fn", [sphere_packing, exponent_oh, exponent_new, exponent_ck])
    def test_above_log_alphabet(self, fn):
        out = fn(math.log2(3) + 0.01, random_source(4, (3, 2)))
        assert math.isinf(out.value) and out.argmin_q is None

    def test_sphere_packing_independent_uniform(self):
        assert sphere_packing(1.0, np.full((2, 2), 0.25)).value == pytest.approx(0.0, abs=1e-12)

    def test_oh_below_new_on_parity_at_1_5(self):
        p = deterministic_source(np.full(4, 0.25), [0, 1, 0, 1])
        oh = exponent_oh(1.5, p)
        assert oh.finite and oh.value <= exponent_new(1.5, p).value

    def test_new_infinite_above_one_bit_on_path(self):
        for r in (1.01, 1.2, 1.5):
            out = exponent_new(r, path_source())
            assert math.isinf(out.value)
            assert "chromatic" in out.certificate

    def test_argmin_is_feasible(self):
        p = path_source()
        out = sphere_packing(0.9, p)
        q = out.argmin_q
        assert q.sum() == pytest.approx(1.0)
        assert np.all(q[p == 0] == 0)
        qy = q.sum(axis=0)
        assert conditional_entropy((q / qy).T, qy) >= 0.9 - 1e-9

    def test_json(self):
        js = exponent_new(1.3, path_source()).to_json()
        assert js["value"] == "inf" and js["argmin_q"] is None
        js = sphere_packing(0.9, path_source()).to_json()
        assert isinstance(js["value"], float) and js["grid_resolution"] == 24

    def test_negative_rate(self):
        with pytest.raises(ValueError):
            exponent_ck(-0.1, path_source())


class TestBhattacharyya:
    def test_examples(self):
        w = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
        assert bhattacharyya_distance(1, 1, w) == 0.0
        assert bhattacharyya_distance(0, 2, w) == math.inf
        assert bhattacharyya_distance(0, 1, w) == pytest.approx(0.5, abs=1e-15)

    def test_edgeless_source_ck_infinite(self):
        p = np.diag([0.2, 0.3, 0.5])
        assert characteristic_graph(p).num_edges() == 0
        for r in (0.01, 0.5):
            assert math.isinf(exponent_ck(r, p).value)

    def test_ck_golden_path_half(self):
        # frozen after the first verified run; the convex oracle gives <= 0 here
        assert exponent_ck(0.5, path_source()).value == 0.0
        assert oracles.exponent_ck_unclipped(0.5, path_source()) <= 1e-8


class TestProperties:
    @pytest.mark.parametrize("name", list(SOURCES))
    def test_ordering_and_monotonicity(self, name):
        p = SOURCES[name][0]
        rows = exponent_sweep(p, np.linspace(0.0, 2.0, 11), include_ck=False)
        for row in rows:
            assert row.e_oh.value <= row.e_new.value + 1e-6
            assert row.e_new.value <= row.e_sp.value + 1e-6
            if row.rate > row.log2_gamma:
                assert math.isinf(row.e_new.value)
        for kind in ("e_oh", "e_new", "e_sp"):
            vals = [getattr(row, kind).value for row in rows]
            assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:])), kind

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([(2, 2), (3, 2), (2, 3)]), st.integers(0, 2))
    def test_new_zero_at_rate_zero(self, seed, shape, zeros):
        p = random_source(seed, shape, zeros)
        assert exponent_new(0.0, p).value == pytest.approx(0.0, abs=1e-12)

    def test_deterministic_si_reduction(self):
        p = deterministic_source([0.4, 0.3, 0.2, 0.1], [0, 0, 1, 1])
        for r in np.linspace(0.1, 1.1, 6):
            a, b = exponent_new(r, p).value, sphere_packing(r, p).value
            assert a == b or abs(a - b) <= 1e-4


class TestGrid:
    def test_composition_grid(self):
        g = composition_grid(3, 3)
        assert g.shape == (10, 3) and np.all(g.sum(axis=1) == 3)
        assert len({tuple(r) for r in g}) == 10

    def test_default_resolution(self):
        assert default_resolution(np.full((2, 3), 1 / 6)) == 24
        assert default_resolution(np.full((3, 3), 1 / 9)) == 12

    def test_source_grid_tables(self):
        p = path_source()
        sg = source_grid(p)
        i = sg.size // 3
        joint = sg.joint(sg.q[i])
        assert joint.sum() == pytest.approx(1.0)
        qy = joint.sum(axis=0)
        assert sg.h_cond[i] == pytest.approx(entropy(joint.ravel()) - entropy(qy), abs=1e-12)
        assert sg.h_x[i] == pytest.approx(entropy(joint.sum(axis=1)), abs=1e-12)
        assert sg.log_gamma == pytest.approx(1.0)

    def test_sweep_rejects_unsorted_rates(self):
        with pytest.raises(ValueError):
            exponent_sweep(path_source(), [0.5, 0.5])

    def test_csv(self):
        text = sweep_csv(exponent_sweep(path_source(), [0.0, 1.3], include_ck=True))
        lines = text.strip().split("\n")
        assert lines[0] == "rate,e_new,e_oh,e_ck,e_sp,gamma_gx_log2"
        assert lines[1].startswith("0,0,0,")
        assert lines[2].split(",")[1] == "inf" and lines[2].split(",")[-1] == "1"


def test_exponent_value_infinite_invariant():
    v = ExponentValue(math.inf, None, "empty", 24, 10)
    assert not v.finite
