import math

import numpy as np
import pytest

import g2m


def test_render_decode_round_trip():
    for n, c in [(2, 3), (9, 10), (48, 5)]:
        m = g2m.sample_matrix(11, n, c)
        img = g2m.render(m)
        assert img.shape == (512, 512, 3) and img.dtype == np.uint8
        assert g2m.decode_image(img, n) == m
        assert g2m.decode_image(g2m.decode_png(g2m.encode_png(img)), n) == m


def test_sampling_is_seeded():
    assert g2m.sample_matrix(5, 6, 4) == g2m.sample_matrix(5, 6, 4)
    assert g2m.sample_matrix(5, 6, 4) != g2m.sample_matrix(6, 6, 4)
    assert all(0 <= v < 4 for row in g2m.sample_matrix(5, 6, 4) for v in row)


def test_decode_reports_unknown_colour():
    img = g2m.render([[0, 1], [2, 0]])
    img[384, 128] = (1, 2, 3)  # midpoint of cell (1, 0)
    with pytest.raises(g2m.DecodeError, match=r"\(1,0\)"):
        g2m.decode_image(img, 2)


def test_prompt_and_budget():
    text = g2m.build_prompt(3, 3, 3)
    assert "{White: 0, Red: 1, Blue: 2}" in text
    assert g2m.max_tokens(12, 12) == 866
    assert g2m.max_tokens(32, 32) == g2m.MAX_TOKEN_CAP == 2048


def test_parse_cascade_stages():
    assert g2m.parse("```\n[[1, 2], [3, 4]]\n```", 2, 2) == {"ok": True, "stage": "strict", "matrix": [[1, 2], [3, 4]]}
    assert g2m.parse("ROW2 = [3, 4]\nROW1 = [1, 2]", 2, 2)["stage"] == "rowwise"
    assert g2m.parse("first 1 then 2, 3 and 4", 2, 2)["stage"] == "flatten"
    out = g2m.parse("no digits here", 2, 2)
    assert out["ok"] is False and out["failure"] == "count-mismatch" and out["matrix"] is None


def test_metrics():
    truth = [[0, 1], [2, 0]]
    assert g2m.exact_match(truth, truth)
    assert g2m.cell_accuracy([[0, 1], [2, 2]], truth) == 0.75
    assert g2m.cell_accuracy(None, truth) == 0.0
    agg = g2m.score([truth, None, [[0, 1], [2, 2]]], [truth, truth, truth], 3)
    assert agg["count"] == 3
    assert agg["exact_matches"] == 1
    assert agg["correct_cells"] == 7 and agg["total_cells"] == 12
    assert agg["confusion"]["tp"] == [3, 2, 2]
    assert agg["iou"][1] == 1.0
    assert math.isclose(g2m.random_baseline(4), 0.25)


def test_geometry_facts():
    assert g2m.type_distribution(32)["Edg-Edg"] == 1024
    assert g2m.type_distribution(64)["Edg-Edg"] == 4096
    h48 = g2m.type_distribution(48)
    assert h48["Int-Int"] + h48["Int-Edg"] + h48["Int-Cro"] == 0
    assert sum(g2m.type_distribution(20, 448, 14).values()) == 400
    assert g2m.cell_interaction(0, 0, 32) == "Edg-Edg"


def test_g2mf_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((1025, 24)).astype(np.float32)
    path = tmp_path / "x.g2mf"
    g2m.save_g2mf(path, a)
    b = g2m.load_g2mf(path)
    assert b.shape == a.shape and np.array_equal(a, b)
    assert g2m.decode_g2mf(g2m.encode_g2mf(a)).tobytes() == a.tobytes()
    fm = g2m.load_features(path, drop_leading=1)
    assert fm.shape == (24, 32, 32)
    assert np.array_equal(fm[:, 0, 1], a[2])


def test_g2mf_rejects_malformed():
    data = bytearray(g2m.encode_g2mf(np.zeros((2, 3), np.float32)))
    with pytest.raises(g2m.FormatError, match="at byte 0"):
        g2m.decode_g2mf(b"NOPE" + bytes(data[4:]))
    with pytest.raises(g2m.FormatError):
        g2m.decode_g2mf(bytes(data[:-1]))
    with pytest.raises(g2m.G2MError):
        g2m.save_g2mf("/nonexistent/dir/x.g2mf", np.zeros(3, np.float32))


def test_interpolate_matches_torch_when_available():
    torch = pytest.importorskip("torch")
    rng = np.random.default_rng(1)
    x = rng.standard_normal((5, 7, 7)).astype(np.float32)
    for n in (3, 7, 12, 20):
        ours = g2m.interpolate(x, n)
        ref = torch.nn.functional.interpolate(torch.from_numpy(x)[None], size=(n, n), mode="bilinear",
                                              align_corners=False)[0].numpy()
        assert np.allclose(ours, ref, atol=1e-5)
    assert np.array_equal(g2m.interpolate(x, 7), x)


def test_synthetic_features_one_hot():
    m = g2m.sample_matrix(3, 32, 5)
    fm = g2m.synthetic_features(m, sigma=0.0, d=16)
    assert fm.shape == (16, 32, 32)
    assert np.array_equal(fm[:10].argmax(axis=0), np.array(m))
    assert np.all(fm[10:] == 0)


def test_gradient_check():
    assert max(g2m.gradient_check(s) for s in range(5)) <= 1e-4


def test_percent_rounding():
    assert g2m.percent(656, 1000) == "65.6"
    assert g2m.percent(1, 2000) == "0.1"
