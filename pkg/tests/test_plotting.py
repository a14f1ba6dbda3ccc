import numpy as np

from nodesal import plotting
from nodesal.saliency import build_histogram, rank_nodes
from nodesal.trainer import BenchmarkRow


def test_histogram_svg_bytes_are_reproducible(tmp_path):
    rng = np.random.default_rng(0)
    hist = build_histogram(rng.random(100), np.repeat([0, 1], 50), 10)
    a = plotting.node_histogram(hist, 3, 0.25, tmp_path / "a.svg").read_bytes()
    b = plotting.node_histogram(hist, 3, 0.25, tmp_path / "b.svg").read_bytes()
    assert a == b
    assert a.lstrip().startswith(b"<?xml") and b"<svg" in a


def test_report_figures(tmp_path):
    rng = np.random.default_rng(1)
    report = rank_nodes(rng.random((5, 40)), np.repeat([0, 1], 20), 10)
    for fn, name in ((plotting.sns_curve, "s.svg"), (plotting.ned_profile, "n.svg")):
        assert fn(report, tmp_path / name).stat().st_size > 0


def test_scatter_and_scaling(tmp_path):
    scores = np.random.default_rng(2).normal(size=(10, 2))
    plotting.pca_scatter(scores, tmp_path / "p.svg", groups=["a", "b"] * 5, labels=[0, 1] * 5)
    plotting.pca_scatter(scores, tmp_path / "q.svg")
    rows = [BenchmarkRow(1, 1.0, 1.0), BenchmarkRow(2, 0.6, 1.0 / 0.6)]
    plotting.scaling(rows, tmp_path / "s.svg")
    assert all((tmp_path / f).stat().st_size > 0 for f in ("p.svg", "q.svg", "s.svg"))
