import math

import numpy as np
import pytest

from blockprox.experiments import (
    SETTINGS,
    load_dataset,
    repeat_seed,
    save_instance,
    setting_instance,
    spectral_constants,
    theory_bounds,
)


def test_setting_sizes():
    inst = setting_instance("sbm1", 0)
    assert inst.n == 75 and inst.d == 21
    np.testing.assert_array_equal(inst.losses[0].A[:, -1], 1.0)
    assert setting_instance("sbm3", 0).graph.m == 780
    assert set(SETTINGS) == {"sbm1", "sbm2", "sbm3"}


def test_instance_reproducible():
    a, b = setting_instance("sbm2", 11), setting_instance("sbm2", 11)
    assert np.array_equal(a.graph.edges, b.graph.edges)
    for fa, fb in zip(a.losses, b.losses):
        assert np.array_equal(fa.A, fb.A) and np.array_equal(fa.b, fb.b)
    c = setting_instance("sbm2", 12)
    assert not np.array_equal(a.losses[0].b, c.losses[0].b)


def test_repeat_seeds_distinct():
    seeds = {repeat_seed(0, r) for r in range(100)}
    assert len(seeds) == 100


def test_dataset_roundtrip(tmp_path):
    inst = setting_instance("sbm2", 3)
    data, graph = save_instance(inst, tmp_path)
    back = load_dataset(data, graph, inst.lam)
    assert np.array_equal(back.graph.edges, inst.graph.edges)
    x = np.random.default_rng(0).standard_normal((inst.n, inst.d))
    assert back.problem.objective(x) == pytest.approx(inst.problem.objective(x), rel=1e-12)


def _write(tmp_path, rows, graph="2 1\n0 1\n"):
    (tmp_path / "g.txt").write_text(graph)
    (tmp_path / "d.csv").write_text("\n".join(rows) + "\n")
    return tmp_path / "d.csv", tmp_path / "g.txt"


def test_dataset_missing_node(tmp_path):
    f, g = _write(tmp_path, ["node_id,y,x1", "0,1.0,2.0"])
    with pytest.raises(ValueError, match=r"node\(s\) \[1\]"):
        load_dataset(f, g, 1.0)


def test_dataset_non_numeric(tmp_path):
    f, g = _write(tmp_path, ["node_id,y,x1", "0,1.0,abc", "1,1.0,2.0"])
    with pytest.raises(ValueError, match="d.csv:2: non-numeric"):
        load_dataset(f, g, 1.0)


def test_dataset_unknown_node(tmp_path):
    f, g = _write(tmp_path, ["node_id,y,x1", "0,1.0,2.0", "1,1.0,2.0", "5,0.0,1.0"])
    with pytest.raises(ValueError, match="not in the graph"):
        load_dataset(f, g, 1.0)


def test_dataset_header(tmp_path):
    f, g = _write(tmp_path, ["id,y,x1", "0,1.0,2.0"])
    with pytest.raises(ValueError, match="node_id"):
        load_dataset(f, g, 1.0)


def test_theory_bounds_optimal_alpha():
    mu, L = 2.0, 3.0
    alpha = mu / (3 * L**2)
    tb = theory_bounds(mu, L, alpha, m=5, c=math.sqrt(2))
    assert tb.gamma == pytest.approx(mu**2 / (3 * L**2))
    assert tb.delta == pytest.approx(7 * 25 * 2 * alpha**2)
    assert tb.alpha_valid
    # alpha maximises gamma
    for a in (0.9 * alpha, 1.1 * alpha):
        assert theory_bounds(mu, L, a, 5, 1.0).gamma < tb.gamma


def test_theory_bounds_edges():
    assert theory_bounds(1.0, 1.0, 0.1, 3, 0.0).neighborhood == 0.0
    bad = theory_bounds(1.0, 1.0, 1.0, 3, 1.0)
    assert not bad.alpha_valid and bad.neighborhood == math.inf
    small = [theory_bounds(1.0, 1.0, a, 3, 1.0) for a in (1e-4, 5e-5)]
    ratio = small[0].neighborhood / small[1].neighborhood
    assert ratio == pytest.approx(2.0, rel=1e-3)


def test_spectral_constants_ridge():
    inst = setting_instance("sbm2", 0, ridge=0.5)
    mu, L = spectral_constants(inst.problem)
    # 15 samples in 21 dims: the gram is singular, so mu is the ridge alone
    assert mu == pytest.approx(0.5, abs=1e-8)
    assert L > mu
