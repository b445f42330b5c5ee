import numpy as np
import pytest

from sldiflow.block import BlockChain, InfeasibleChain, block_feasible, block_makespan, corner_blocks
from sldiflow.maxplus import NEG_INF, eps, in_gamma, kleene_star
from sldiflow.randomized import random_batch, random_instance
from sldiflow.sldi import assemble_Mv, chain_blocks, dense_makespan

NI = NEG_INF


def one(x):
    return np.array([[float(x)]])


def test_eps_couplings_give_eps_reduced_blocks():
    chain = BlockChain([one(0)] * 3, [one(5)] * 2, [eps(1)] * 2)
    red = block_feasible(chain)
    assert all(np.array_equal(c, eps(1)) for c in red.CC)
    assert block_makespan(chain).makespan == 10


def test_scalar_chain_examples():
    red = block_feasible(BlockChain([one(0)] * 2, [one(2)], [one(-3)]))
    assert red.CC[0].tolist() == [[-1]]
    with pytest.raises(InfeasibleChain) as info:
        block_feasible(BlockChain([one(0)] * 2, [one(2)], [one(-1)]))
    assert (info.value.witness.kind, info.value.witness.index) == ("link", 1)
    res = block_makespan(BlockChain([one(0)] * 2, [one(2)], [one(-1)]))
    assert not res.feasible and res.status == "infeasible"


def test_single_step():
    c1 = np.array([[NI, NI], [3, NI]])
    chain = BlockChain([c1], [], [])
    assert block_makespan(chain).makespan == 3
    m11, mk1 = corner_blocks(chain)
    assert np.array_equal(m11, kleene_star(c1)) and np.array_equal(mk1, kleene_star(c1))


def test_bad_step_witness():
    with pytest.raises(InfeasibleChain) as info:
        block_feasible(BlockChain([one(0), one(1)], [one(0)], [eps(1)]))
    assert (info.value.witness.kind, info.value.witness.index) == ("step", 2)


def test_chain_shape_checks():
    with pytest.raises(ValueError):
        BlockChain([], [], [])
    with pytest.raises(ValueError):
        BlockChain([one(0)] * 2, [], [])


def test_all_eps_p_corner_is_c1_star():
    rng = np.random.default_rng(2)
    for _ in range(20):
        inst = random_instance(rng, n_max=4, k_max=5, p_hi=0.0)
        cs, is_, ps = chain_blocks(inst)
        chain = BlockChain(cs, is_, [eps(inst.n)] * len(ps))
        m11, _ = corner_blocks(chain)
        assert np.array_equal(m11, kleene_star(cs[0]))


def test_block_equals_dense_on_random_chains():
    rng = np.random.default_rng(21)
    for inst, _ in random_batch(rng, 200):
        d, b = dense_makespan(inst), block_makespan(inst)
        assert d.feasible == b.feasible
        assert d.makespan == b.makespan


def test_corner_blocks_match_dense_star():
    rng = np.random.default_rng(4)
    for _ in range(60):
        inst = random_instance(rng)
        n, K = inst.n, inst.K
        star = kleene_star(assemble_Mv(inst))
        m11, mk1 = corner_blocks(BlockChain.from_instance(inst))
        assert np.array_equal(m11, star[:n, :n])
        assert np.array_equal(mk1, star[(K - 1) * n:, :n])


def test_feasibility_partition():
    rng = np.random.default_rng(8)
    for inst, _ in random_batch(rng, 150, infeasible_share=0.5):
        try:
            block_feasible(BlockChain.from_instance(inst))
            split = True
        except InfeasibleChain:
            split = False
        assert in_gamma(assemble_Mv(inst)) == split


def test_reduced_chain_definitions():
    rng = np.random.default_rng(30)
    from sldiflow.maxplus import mat_otimes as mul

    inst = random_instance(rng, n_max=4, k_max=6)
    while inst.K < 3:
        inst = random_instance(rng, n_max=4, k_max=6)
    cs, is_, ps = chain_blocks(inst)
    red = block_feasible(BlockChain(cs, is_, ps))
    for i in range(inst.K - 1):
        assert np.array_equal(red.PP[i], mul(mul(red.Cstar[i], ps[i]), red.Cstar[i + 1]))
        assert np.array_equal(red.II[i], mul(mul(red.Cstar[i + 1], is_[i]), red.Cstar[i]))
    assert np.array_equal(red.CC[-1], mul(red.PP[-1], red.II[-1]))
    for i in range(inst.K - 2):
        assert np.array_equal(red.CC[i], mul(mul(red.PP[i], kleene_star(red.CC[i + 1])), red.II[i]))
