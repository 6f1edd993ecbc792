import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from freelip.constructions import retractions as rt
from freelip.harness import tie_inputs

B = rt.BlockVector


def test_block_hand_value():
    # block norms 4, 1, 2: keep block 0 scaled by 1 - 2/4
    x = B(([4.0, -1.0], [1.0, 0.0], [0.0, 2.0]))
    assert rt.block_retraction(x) == B(([2.0, -0.5], [0.0, 0.0], [0.0, 0.0]))


def test_single_block_is_identity():
    x = B(([3.0, -1.0],))
    assert rt.block_retraction(x) == x


def test_image_is_supported_on_one_block():
    rng = np.random.default_rng(0)
    out = rt.block_retraction_batch(rng.normal(size=(500, 5, 3)))
    assert np.all((np.max(np.abs(out), axis=2) > 0).sum(axis=1) <= 1)


def test_zero_maps_to_zero():
    z = B(([0.0, 0.0], [0.0, 0.0]))
    assert rt.block_retraction(z) == z


def test_ties_map_to_zero_for_every_order():
    x = B(([3.0, 1.0], [-3.0, 0.0], [1.0, 1.0]))
    for perm in itertools.permutations(range(3)):
        assert rt.block_retraction(x, order=perm).norm() == 0.0


def test_tie_generator_produces_ties():
    rng = np.random.default_rng(1)
    for x, tied in tie_inputs(rng, 50, 6, 3):
        norms = np.max(np.abs(x), axis=1)
        assert len(tied) >= 2 and np.all(norms[tied] == norms.max())
        for perm in itertools.permutations(tied.tolist()):
            order = list(perm) + [j for j in range(6) if j not in tied]
            assert rt.block_retraction(B.from_array(x), order=order).norm() == 0.0


def test_dominant_block_order():
    assert rt.dominant_block(np.array([1.0, 2.0, 2.0])) == 1
    assert rt.dominant_block(np.array([1.0, 2.0, 2.0]), order=[2, 1, 0]) == 2
    with pytest.raises(ValueError):
        rt.dominant_block(np.array([1.0, 2.0]), order=[0])


block_arrays = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)),
                      elements=st.floats(-1e3, 1e3, allow_subnormal=False))


@given(block_arrays)
def test_batch_matches_scalar(x):
    scalar = rt.block_retraction(B.from_array(x))
    batch = rt.block_retraction_batch(x[None])[0]
    assert scalar == B.from_array(batch)


@given(block_arrays)
def test_block_idempotent_exactly(x):
    r = rt.block_retraction(B.from_array(x))
    assert rt.block_retraction(r) == r


@given(block_arrays, block_arrays)
def test_block_lipschitz_bound(x, y):
    if x.shape != y.shape:
        y = np.resize(y, x.shape)
    d = (B.from_array(x) - B.from_array(y)).norm()
    if d == 0:
        return
    num = (rt.block_retraction(B.from_array(x)) - rt.block_retraction(B.from_array(y))).norm()
    assert num <= 3 * d * (1 + 1e-12)
    if not np.any(y):
        assert num <= 2 * d * (1 + 1e-12)


def test_block_audit_small():
    rep = rt.block_retraction_lipschitz_audit(5000, seed=3)
    assert rep.verdict and rep.trials == 5000
    assert rep.case_max["zero"] <= 2 and rep.max_ratio <= 3
    assert rep.witness_pair is not None
    assert rep.max_ratio > 1.0  # the generator does find expansion


def test_audit_verdict_flags_excess():
    rep = rt.AuditReport("block", 1, 3.0, max_ratio=3.1)
    assert not rep.verdict
    rep = rt.AuditReport("block", 1, 3.0, max_ratio=2.5, case_max={"zero": 2.2}, case_bounds={"zero": 2.0})
    assert not rep.verdict


def test_tail_sequence_normalisation():
    a = rt.TailSequence({0: 1.0, 3: 2.0, 5: 2.0}, 2.0)
    assert a.explicit == {0: 1.0}
    assert a[5] == 2.0 and a[0] == 1.0
    assert rt.TailSequence({0: -0.0}, -0.0) == rt.TailSequence({}, 0.0)
    assert a.sup_norm() == 2.0 and not a.in_c0()
    with pytest.raises(ValueError):
        rt.TailSequence({0: np.nan}, 0.0)


def test_c0_retract_hand_value():
    # tail 1 is the distance to c0; each coordinate shrinks by 1
    x = rt.TailSequence({0: 3.0, 1: -0.5, 2: -2.0}, 1.0)
    assert rt.c0_retract(x) == rt.TailSequence({0: 2.0, 2: -1.0}, 0.0)


def test_c0_fixed_points():
    a = rt.TailSequence({0: 3.0, 4: -1.25}, 0.0)
    assert rt.c0_distance(a) == 0.0
    assert rt.c0_retract(a) == a


def test_batch_matches_scalar_c0():
    rng = np.random.default_rng(4)
    e, t = rng.normal(size=(200, 5)), rng.normal(size=200)
    be, bt = rt.c0_retract_batch(e, t)
    assert np.all(bt == 0.0)
    for seq, row in zip(rt.as_tail_sequences(e, t), be):
        assert rt.c0_retract(seq) == rt.TailSequence(dict(enumerate(row.tolist())), 0.0)


tails = st.builds(lambda e, t: rt.TailSequence(dict(enumerate(e)), t),
                  st.lists(st.floats(-1e3, 1e3), max_size=8), st.floats(-1e3, 1e3))


@given(tails)
def test_c0_output_in_c0_and_idempotent(x):
    r = rt.c0_retract(x)
    assert r.tail == 0.0
    assert rt.c0_retract(r) == r


@given(tails, tails)
def test_c0_lipschitz_two(x, y):
    d = (x - y).sup_norm()
    if d == 0:
        return
    assert (rt.c0_retract(x) - rt.c0_retract(y)).sup_norm() <= 2 * d * (1 + 1e-12)


def test_c0_bound_two_is_attained():
    # coordinate moves up by 1 while the threshold moves down by 1
    x = rt.TailSequence({0: 2.0}, 0.0)
    y = rt.TailSequence({0: 1.0}, 1.0)
    assert (x - y).sup_norm() == 1.0
    assert (rt.c0_retract(x) - rt.c0_retract(y)).sup_norm() == 2.0


def test_c0_audit_small():
    rep = rt.c0_retract_lipschitz_audit(5000, seed=2)
    assert rep.verdict and rep.max_ratio <= 2
    assert rep.max_ratio > 1.5
