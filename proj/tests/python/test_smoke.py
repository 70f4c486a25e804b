import numpy as np
import pytest

import xltm


def test_svd_matches_numpy():
    rng = np.random.default_rng(0)
    E = rng.normal(size=(30, 8))
    U, S, Vt = xltm.truncated_svd(E, 8, 1)
    np.testing.assert_allclose(S, np.linalg.svd(E, compute_uv=False), rtol=1e-8)
    np.testing.assert_allclose(U @ np.diag(S) @ Vt, E, atol=1e-8)


def test_welch_example():
    X = np.array([[5, 1], [5, 2], [5, 3], [5, 2], [5, 3], [5, 4]], dtype=float)
    rep = xltm.ldd_t_statistics(X, ["en"] * 3 + ["zh"] * 3)
    assert rep["sorted_dims"] == [1, 0]
    assert rep["t"][1] == pytest.approx(-1 / np.sqrt(2 / 3))


def test_refine_and_cluster_synthetic():
    data = xltm.generate_synthetic(seed=3)
    E = np.asarray(data["embeddings"])
    assert E.shape == (500, 64)
    out = xltm.refine(E, "svdlr", 16, data["langs"], 7)
    assert out["data"].shape == (500, 15)
    assert out["removed_dims"] == [int(np.argmax(np.abs(xltm.ldd_t_statistics(
        xltm.refine(E, "svd", 16, data["langs"], 7)["data"], data["langs"])["t"])))]
    fit = xltm.kmeans_fit(out["data"], 5, 11)
    assert xltm.adjusted_rand_index(fit["labels"], data["topic"]) >= 0.9
    balance = xltm.cluster_language_balance(fit["labels"], 5, data["langs"])
    assert min(balance) >= 0.9


def test_embeddings_round_trip(tmp_path):
    data = np.array([[0.5, -1.0], [2.0, 3.25]])
    path = str(tmp_path / "e.emb1")
    xltm.write_embeddings(path, ["a", "b"], data)
    ids, back = xltm.load_embeddings(path)
    assert ids == ["a", "b"]
    np.testing.assert_array_equal(back, data)


def test_run_pipeline_report():
    config = {"synthetic": {}, "method": "usvd", "rank": 16, "clusters": 5, "topn": 10}
    a = xltm.run_pipeline(config, 1)
    assert a == xltm.run_pipeline(config, 1)
    assert a["diagnostics"]["ari_vs_truth"] >= 0.9
    assert set(a["evaluation"]["aggregate"]) == {"cnpmi", "diversity", "tq"}


def test_metrics_and_errors():
    assert xltm.npmi(1, 2, 2, 4) == 0.0
    assert xltm.topic_quality(-0.244, 0.570) == 0.0
    with pytest.raises(xltm.XltmError, match="exceeds"):
        xltm.kmeans_fit(np.zeros((2, 2)), 3, 1)
