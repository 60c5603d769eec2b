import pytest
from hypothesis import given, strategies as st

from cdt_sim.config import RunConfig, parse_config, serialize_config
from cdt_sim.errors import ParseError, ValidationError
from cdt_sim.geometry import WaveguideGeometry


def test_empty_file_gives_device_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.geometry() == WaveguideGeometry()


def test_point_two_geometry():
    geom = parse_config("# point 2\nA = 7.3\nLambda = 2000   # um\n").geometry()
    assert (geom.A, geom.Lambda) == (7.3, 2000.0)


@pytest.mark.parametrize("text,key", [("dx = -1", "dx"), ("dz = 0", "dz"), ("x_min = 5\nx_max = 1", "x_max"),
                                      ("frame = sideways", "frame"), ("colour = red", "colour"),
                                      ("dx = fast", "dx"), ("calibrate = maybe", "calibrate"),
                                      ("y_max = 10", "y_max")])
def test_validation_names_the_key(text, key):
    with pytest.raises(ValidationError) as info:
        parse_config(text)
    assert info.value.key == key


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as info:
        parse_config("A = 1\n\nthis line is wrong\n")
    assert info.value.line == 3
    with pytest.raises(ParseError) as info:
        parse_config("A = 1\nA = 2\n")
    assert info.value.line == 2
    with pytest.raises(ParseError):
        parse_config(" = 3")


_configs = st.builds(
    RunConfig,
    A=st.floats(0, 40, allow_nan=False),
    Lambda=st.floats(100, 20000),
    dx=st.sampled_from([0.05, 0.1, 0.025, 0.2]),
    dz=st.floats(0.01, 2.0),
    n_s=st.floats(1.3, 1.7),
    calibrate=st.booleans(),
    out_dir=st.text(alphabet="abcxyz_/-.0123", min_size=1, max_size=12).filter(lambda s: s.strip() == s),
    frame=st.sampled_from(["lab", "kh"]),
    manifold_samples=st.integers(1, 100),
    per_frame_rescale=st.booleans(),
)


@given(_configs)
def test_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg
