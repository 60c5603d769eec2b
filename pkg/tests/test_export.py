import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cdt_sim.export import ArtifactWriter, read_pgm, to_uint16, write_csv, write_pgm


@settings(max_examples=30, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.floats(0, 1e3)),
       st.sampled_from(["P2", "P5"]))
def test_pgm_round_trip(tmp_path_factory, image, fmt):
    path = tmp_path_factory.mktemp("pgm") / "img.pgm"
    scale = write_pgm(path, image, fmt)
    pixels = read_pgm(path)
    assert pixels.shape == image.shape
    if image.max() > 0:
        assert pixels.max() == 65535
        np.testing.assert_allclose(pixels * scale, image, atol=scale)
    else:
        assert scale == 0 and pixels.max() == 0


def test_pgm_header_layout(tmp_path):
    image = np.arange(6, dtype=float).reshape(2, 3)  # 2 x-rows, 3 z-columns
    write_pgm(tmp_path / "a.pgm", image, "P5")
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n3 2\n65535\n")
    assert len(raw) == len(b"P5\n3 2\n65535\n") + 2 * 6
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "b.pgm", image, "P6")


def test_to_uint16_maps_peak_to_full_scale():
    px, scale = to_uint16(np.array([[0.0, 0.5, 2.0]]))
    assert px.tolist() == [[0, 16384, 65535]] and scale == pytest.approx(2 / 65535)


def test_csv_format(tmp_path):
    write_csv(tmp_path / "t.csv", ("z_um", "P_L", "P_R"), [(0.0, 1.0, 0.0), (0.5, np.float64(0.1), 0.9)])
    raw = (tmp_path / "t.csv").read_bytes()
    assert raw == b"z_um,P_L,P_R\n0.0,1.0,0.0\n0.5,0.1,0.9\n"


def test_writer_manifest_lists_everything(tmp_path):
    w = ArtifactWriter(tmp_path / "run")
    w.csv("a/x.csv", ("c",), [(1,)])
    w.greymap("a/img.pgm", np.ones((2, 2)), {"note": 1})
    w.json("b.json", {"v": np.float64(1.5), "n": float("nan")})
    w.manifest({"command": "test"})
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    on_disk = sorted(p.relative_to(tmp_path / "run").as_posix() for p in (tmp_path / "run").rglob("*") if p.is_file())
    assert manifest["files"] == on_disk
    assert json.loads((tmp_path / "run" / "b.json").read_text()) == {"n": None, "v": 1.5}


def test_pgm_pixels_starting_with_whitespace_bytes(tmp_path):
    # 2/37 * 65535 = 3542 = 0x0DD6: first data byte is a whitespace character
    image = np.array([[2.0, 37.0]])
    write_pgm(tmp_path / "w.pgm", image, "P5")
    assert read_pgm(tmp_path / "w.pgm").tolist() == [[3542, 65535]]
