import numpy as np
import pytest

from ecpair import autodiff as ad
from ecpair import heads


def make_features(n, hidden, seed=0, zero_shared=False):
    rng = np.random.default_rng(seed)
    h_e = ad.Tensor(rng.uniform(-0.9, 0.9, (n, hidden)))
    h_c = ad.Tensor(rng.uniform(-0.9, 0.9, (n, hidden)))
    h_s = ad.Tensor(np.zeros((n, hidden)) if zero_shared
                    else rng.uniform(-0.9, 0.9, (n, hidden)))
    return h_e, h_c, h_s


def test_task_representations_concat():
    h_e, h_c, h_s = make_features(3, 4, zero_shared=True)
    r_e, r_c = heads.task_representations(h_e, h_c, h_s)
    assert r_e.shape == (3, 8)
    np.testing.assert_array_equal(r_e.data[:, :4], h_e.data)
    np.testing.assert_array_equal(r_e.data[:, 4:], np.zeros((3, 4)))
    np.testing.assert_array_equal(r_c.data[:, :4], h_c.data)


def test_task_representation_width_at_hidden_300():
    h_e, h_c, h_s = make_features(2, 300)
    r_e, _ = heads.task_representations(h_e, h_c, h_s)
    assert r_e.shape == (2, 600)


def test_task_representations_permute_rows():
    h_e, h_c, h_s = make_features(4, 3, seed=1)
    r_e, r_c = heads.task_representations(h_e, h_c, h_s)
    perm = [2, 0, 3, 1]
    pe, pc = heads.task_representations(
        ad.Tensor(h_e.data[perm]), ad.Tensor(h_c.data[perm]), ad.Tensor(h_s.data[perm]))
    np.testing.assert_array_equal(pe.data, r_e.data[perm])
    np.testing.assert_array_equal(pc.data, r_c.data[perm])


def test_pair_representation_zero_shared_identity():
    h_e, h_c, h_s = make_features(3, 4, zero_shared=True)
    e_ij = ad.Tensor(np.zeros(2))
    r = heads.pair_representation(1, 2, h_e, h_c, h_s, e_ij)
    np.testing.assert_array_equal(r.data[:4], h_e.data[1])
    np.testing.assert_array_equal(r.data[4:8], h_c.data[2])


def test_pair_representation_width_and_asymmetry():
    h_e, h_c, h_s = make_features(4, 5, seed=2)
    pos = ad.Tensor(np.random.default_rng(3).normal(size=3))
    r_ij = heads.pair_representation(0, 2, h_e, h_c, h_s, pos)
    r_ji = heads.pair_representation(2, 0, h_e, h_c, h_s, pos)
    assert r_ij.shape == (2 * 5 + 3,)
    assert np.any(r_ij.data != r_ji.data)


def test_pair_grid_matches_pairwise_representation():
    n, hidden, dim_pos = 4, 3, 2
    h_e, h_c, h_s = make_features(n, hidden, seed=4)
    pos = np.random.default_rng(5).normal(size=(n, n, dim_pos))
    grid = heads.pair_grid(h_e, h_c, h_s, ad.Tensor(pos)).data
    assert grid.shape == (n, n, 2 * hidden + dim_pos)
    for i in range(n):
        for j in range(n):
            row = heads.pair_representation(i, j, h_e, h_c, h_s, ad.Tensor(pos[i, j]))
            np.testing.assert_allclose(grid[i, j], row.data)


def make_head(n_in, seed=0, zero_out=False):
    params = ad.ParameterStore()
    head = heads.FeedForward("head", n_in, max(1, n_in // 2), 1, params,
                             np.random.default_rng(seed))
    if zero_out:
        head.out_layer[0].data[...] = 0.0
        head.out_layer[1].data[...] = 0.0
    return head, params


def test_zero_final_layer_scores_half():
    head, _ = make_head(6, zero_out=True)
    reps = ad.Tensor(np.random.default_rng(1).normal(size=(5, 6)))
    scores = heads.predict_scores(head, reps)
    np.testing.assert_array_equal(scores.data, np.full(5, 0.5))


def test_scores_strictly_inside_unit_interval():
    head, _ = make_head(6, seed=2)
    reps = ad.Tensor(np.random.default_rng(3).normal(scale=5.0, size=(64, 6)))
    scores = heads.predict_scores(head, reps).data
    assert np.all((scores > 0.0) & (scores < 1.0))


def test_head_gradcheck():
    head, params = make_head(5, seed=4)
    reps = np.random.default_rng(5).normal(size=(3, 5))

    def loss_fn():
        return ad.total(heads.predict_scores(head, ad.Tensor(reps)))

    report = ad.grad_check(loss_fn, list(params), eps=1e-5, tol=1e-4)
    assert report.passed, report.summary()


def test_pair_grid_scores_full_n_by_n():
    head, _ = make_head(2 * 3 + 2, seed=6)
    h_e, h_c, h_s = make_features(6, 3, seed=7)
    pos = ad.Tensor(np.random.default_rng(8).normal(size=(6, 6, 2)))
    scores = heads.predict_scores(head, heads.pair_grid(h_e, h_c, h_s, pos))
    assert scores.shape == (6, 6)
    assert scores.data.size == 36


def test_aux_loss_perfect_scores_vanish():
    y_e = ad.Tensor(np.array([1.0, 0.0, 0.0, 1.0]))
    y_c = ad.Tensor(np.array([0.0, 1.0, 0.0, 0.0]))
    loss = heads.aux_loss(y_e, y_c, emotions={0, 3}, causes={1})
    assert loss.item() == pytest.approx(0.0, abs=1e-9)


def test_aux_loss_uniform_half_closed_form():
    y = ad.Tensor(np.full(4, 0.5))
    loss = heads.aux_loss(y, y, emotions={1}, causes={2})
    assert loss.item() == pytest.approx(8 * np.log(2), rel=1e-12)


def test_aux_loss_literal_ignores_negatives():
    scores_a = np.array([0.9, 0.3, 0.2])
    scores_b = scores_a.copy()
    scores_b[1] = 0.7  # a negative clause moves
    base = heads.aux_loss(ad.Tensor(scores_a), ad.Tensor(scores_a), {0}, {0}, literal=True)
    moved = heads.aux_loss(ad.Tensor(scores_b), ad.Tensor(scores_b), {0}, {0}, literal=True)
    assert base.item() == pytest.approx(moved.item(), abs=1e-15)
    assert base.item() == pytest.approx(-2 * np.log(0.9), rel=1e-12)
    full_a = heads.aux_loss(ad.Tensor(scores_a), ad.Tensor(scores_a), {0}, {0})
    full_b = heads.aux_loss(ad.Tensor(scores_b), ad.Tensor(scores_b), {0}, {0})
    assert full_a.item() != pytest.approx(full_b.item())


def test_pair_loss_perfect_grid_vanishes():
    grid = np.zeros((3, 3))
    grid[1, 2] = 1.0
    loss = heads.pair_loss(ad.Tensor(grid), {(1, 2)})
    assert loss.item() == pytest.approx(0.0, abs=1e-9)


def test_pair_loss_uniform_half_closed_form():
    loss = heads.pair_loss(ad.Tensor(np.full((3, 3), 0.5)), {(0, 1)})
    assert loss.item() == pytest.approx(9 * np.log(2), rel=1e-12)


def test_pair_loss_decreases_as_gold_score_rises():
    base = np.full((3, 3), 0.4)
    better = base.copy()
    better[2, 1] = 0.8
    gold = {(2, 1)}
    assert heads.pair_loss(ad.Tensor(better), gold).item() < \
        heads.pair_loss(ad.Tensor(base), gold).item()


def test_bce_non_negative_and_zero_only_at_gold():
    rng = np.random.default_rng(9)
    gold = {1, 3}
    for _ in range(100):
        scores = ad.Tensor(rng.uniform(0.01, 0.99, 5))
        loss = heads.bce_sum(scores, heads.indicator(gold, 5))
        assert loss.item() > 0
    exact = heads.indicator(gold, 5)
    assert heads.bce_sum(ad.Tensor(exact), exact).item() == pytest.approx(0.0, abs=1e-9)


def test_bce_length_mismatch_error():
    with pytest.raises(ad.ShapeError, match="bce_sum"):
        heads.bce_sum(ad.Tensor(np.full(4, 0.5)), np.zeros(3))
