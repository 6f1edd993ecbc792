import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freelip import ck_approx as ck
from freelip.metric_core import LipFunction, PointedMetricSpace


def dense_cantor(depth):
    """Reference metric from bit-string labels: 2**-(common prefix length)."""
    labels = [format(i, f"0{depth}b") for i in range(1 << depth)]
    n = len(labels)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            k = next(t for t in range(depth) if labels[i][t] != labels[j][t])
            d[i, j] = d[j, i] = 2.0 ** -k
    return PointedMetricSpace(tuple(labels), d, 0)


DENSE = {n: dense_cantor(n) for n in (1, 2, 3, 4, 5)}


def test_distances_match_reference():
    for n, ref in DENSE.items():
        space = ck.CantorApprox(n)
        i, j = np.meshgrid(space.points, space.points, indexing="ij")
        assert np.array_equal(space.distance(i, j), ref.dist)
        assert ref.validation.ok


def test_depth_limits():
    with pytest.raises(ValueError):
        ck.CantorApprox(0)
    with pytest.raises(ValueError):
        ck.CantorApprox(ck.MAX_DEPTH + 1)


def test_bits_and_labels():
    s = ck.CantorApprox(3)
    assert s.label(5) == "101"
    assert s.bits()[5].tolist() == [1, 0, 1]


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_lipschitz_constant_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    space, ref = ck.CantorApprox(n), DENSE[n]
    v = rng.normal(size=space.n_points)
    assert space.lipschitz_constant(v) == pytest.approx(ref.lipschitz_constant(v), rel=1e-12)
    k = int(rng.integers(1, space.n_points + 1))
    sub = np.sort(rng.choice(space.n_points, size=k, replace=False))
    w = rng.normal(size=k)
    assert space.lipschitz_constant(w, sub) == pytest.approx(ref.lipschitz_constant(w, sub), rel=1e-12)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_map_lipschitz_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    space, ref = ck.CantorApprox(n), DENSE[n]
    img = rng.integers(0, space.n_points, size=space.n_points)
    assert space.map_lipschitz(img) == pytest.approx(ref.map_lipschitz(img), rel=1e-12)


def test_binary_embedding_is_one_lipschitz():
    for n in range(1, 13):
        space = ck.CantorApprox(n)
        assert space.lipschitz_constant(ck.binary_embedding(space).values) <= 1.0


def test_partition_nodes():
    node = ck.PartitionNode(3, ("1", "00", "01"))
    assert node.prefixes == ("00", "01", "1")
    assert node.representatives.tolist() == [0, 2, 4]
    assert node.rep_map.tolist() == [0, 0, 2, 2, 4, 4, 4, 4]
    assert node.mesh == 0.5 and node.n_cells == 3
    assert node.refines(ck.PartitionNode.uniform(3, 1))
    assert not ck.PartitionNode.uniform(3, 1).refines(node)
    with pytest.raises(ValueError):
        ck.PartitionNode(3, ("0", "01", "1"))
    with pytest.raises(ValueError):
        ck.PartitionNode(3, ("0",))
    with pytest.raises(ValueError):
        ck.PartitionNode(3, ("2",))


def test_chain_must_strictly_refine():
    a, b = ck.PartitionNode.uniform(3, 1), ck.PartitionNode.uniform(3, 2)
    ck.RefinementChain((a, b))
    with pytest.raises(ValueError):
        ck.RefinementChain((b, a))
    with pytest.raises(ValueError):
        ck.RefinementChain((a, a))
    assert ck.uniform_chain(4).cofinal and not ck.uniform_chain(4, stop=2).cofinal


def test_representatives_are_nested():
    chain = ck.uniform_chain(6)
    for a, b in zip(chain.nodes, chain.nodes[1:]):
        assert set(a.representatives) <= set(b.representatives)


@given(st.integers(1, 10), st.data())
def test_projection_norm_one_and_idempotent(n, data):
    space = ck.CantorApprox(n)
    k = data.draw(st.integers(0, n))
    node = ck.PartitionNode.uniform(n, k)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    f = rng.normal(size=space.n_points)
    p = ck.partition_project(f, node)
    assert np.max(np.abs(p)) <= np.max(np.abs(f))
    assert np.array_equal(ck.partition_project(p, node), p)
    c = ck.constant_function(space)
    assert np.max(np.abs(ck.partition_project(c, node))) == 1.0


@pytest.mark.parametrize("n", range(1, 13))
def test_binary_embedding_dyadic_deviation(n):
    space = ck.CantorApprox(n)
    emb = ck.binary_embedding(space)
    rep = ck.projection_converges(emb, ck.uniform_chain(n))
    assert rep.monotone and rep.verdict
    for k, dev in enumerate(rep.deviations):
        assert dev <= 2.0 ** -k
        # exact value: the cell holds 2**(n-k) points spaced 2**-n apart
        assert dev == pytest.approx(2.0 ** -k - 2.0 ** -n, abs=1e-15)


def test_projection_needs_modulus():
    space = ck.CantorApprox(3)
    f = ck.CantorFunction(space, np.arange(8.0))
    with pytest.raises(ValueError, match="modulus"):
        ck.projection_converges(f, ck.uniform_chain(3))


@pytest.mark.parametrize("n", [1, 4, 8, 12])
def test_s_after_t_exact_on_measurable_functions(n):
    space = ck.CantorApprox(n)
    rng = np.random.default_rng(n)
    for k in range(0, n + 1, max(1, n // 4)):
        table = rng.normal(size=1 << k)
        table[0] = 0.0
        f = ck.first_bits_function(space, k, table)
        for stop in (k, n):
            g, m = ck.s_after_t(f.as_lip(), ck.uniform_chain(n, stop=stop), modulus=f.modulus)
            assert np.array_equal(g.values, f.values)
            assert m <= 1.0


@pytest.mark.parametrize("n", [3, 8, 12])
def test_s_after_t_modulus_bound(n):
    space = ck.CantorApprox(n)
    emb = ck.binary_embedding(space)
    for stop in range(n + 1):
        chain = ck.uniform_chain(n, stop=stop)
        g, _ = ck.s_after_t(emb.as_lip(), chain, modulus=emb.modulus)
        assert np.max(np.abs(g.values - emb.values)) <= emb.modulus(chain.nodes[-1].mesh)


def test_reconstruction_without_modulus_detects_instability():
    space = ck.CantorApprox(5)
    emb = ck.binary_embedding(space)
    with pytest.raises(ck.DivergenceError):
        ck.s_after_t(emb.as_lip(), ck.uniform_chain(5, stop=3))
    # on the full chain a Lipschitz function settles only at the very end
    g, m = ck.s_after_t(emb.as_lip(), ck.uniform_chain(5), modulus=emb.modulus)
    assert np.array_equal(g.values, emb.values) and m == 1.0


def test_restriction_values_and_map_constant_agree_with_dense():
    n = 5
    space, ref = ck.CantorApprox(n), DENSE[n]
    chain = ck.uniform_chain(n)
    f = LipFunction(space, ck.binary_embedding(space).values)
    for sub_f, node, img in zip(ck.restrict_T(f, ck.chain_subsets(chain)), chain, ck.chain_maps(chain)):
        assert np.array_equal(sub_f.values, f.values[node.representatives])
        assert space.map_lipschitz(img) == ref.map_lipschitz(img)


def test_reconstruct_s_checks_its_inputs():
    space = ck.CantorApprox(3)
    chain = ck.uniform_chain(3)
    f = LipFunction(space, np.arange(8.0) / 8)
    fs = ck.restrict_T(f, ck.chain_subsets(chain))
    maps = ck.chain_maps(chain)
    with pytest.raises(ValueError):
        ck.reconstruct_S(fs, maps[:-1])
    bad = [m.copy() for m in maps]
    bad[1][5] = 7  # 7 is not a representative at level 1
    with pytest.raises(ValueError, match="leaves"):
        ck.reconstruct_S(fs, bad)
