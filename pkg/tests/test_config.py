from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracburg import ConfigParseError, ConfigRangeError, ConfigUnknownKeyError, load_config, parse_config
from fracburg.config import DEFAULT_THRESHOLDS, default_config

NO_ENV: dict = {}


def test_minimal_config_fills_defaults():
    cfg = parse_config("alpha = 1.5\nbeta = 1.5\n", NO_ENV)
    assert cfg.model.M == 1.0
    assert cfg.model.b == (1.0, 0.0)
    assert (cfg.grid.N, cfg.grid.L) == (512, 64.0)
    assert cfg.solver.steps == 256 and cfg.solver.corrector_passes == 1
    assert cfg.profile.nodes == 48
    assert cfg.thresholds == DEFAULT_THRESHOLDS


def test_alpha_out_of_range_names_field_and_interval():
    with pytest.raises(ConfigRangeError, match=r"alpha.*\(1, 2\)"):
        parse_config("alpha = 2.5\nbeta = 1.5\n", NO_ENV)


def test_beta_must_stay_below_dimension():
    with pytest.raises(ConfigRangeError, match="beta"):
        parse_config("alpha = 1.5\nbeta = 2.0\n", NO_ENV)


@pytest.mark.parametrize(
    "text, err",
    [
        ("alpha = 1.5\nbeta = 1.5\nalhpa = 1.2\n", ConfigUnknownKeyError),
        ("alpha = 1.5\nbeta = 1.5\nthresholds.nope = 1\n", ConfigUnknownKeyError),
        ("alpha = 1.5\nbeta\n", ConfigParseError),
        ("alpha = 1.5\nbeta = x\n", ConfigParseError),
        ("alpha = 1.5\nalpha = 1.6\nbeta = 1.5\n", ConfigParseError),
        ("beta = 1.5\n", ConfigParseError),
        ("alpha = 1.5\nbeta = 1.5\ngrid.N = 500\n", ConfigRangeError),
        ("alpha = 1.5\nbeta = 1.5\ngrid.L = -1\n", ConfigRangeError),
        ("alpha = 1.5\nbeta = 1.5\nb = 1, 1\n", ConfigRangeError),
        ("alpha = 1.5\nbeta = 1.5\nM = 0\n", ConfigRangeError),
        ("alpha = 1.5\nbeta = 1.5\nsteps = 0\n", ConfigRangeError),
        ("alpha = 1.5\nbeta = 1.5\ndealias_rule = sharp\n", ConfigRangeError),
        ("alpha = 1.5\nbeta = 1.5\ndealias = maybe\n", ConfigParseError),
    ],
)
def test_error_classes(text, err):
    with pytest.raises(err):
        parse_config(text, NO_ENV)


def test_comments_scalar_drift_and_thresholds():
    cfg = parse_config(
        "# run\nalpha = 1.5  # order\nbeta = 1.5\nb = 2\nthresholds.profile.slope = 0.3\nsuites = kernel.*, solver.*\n",
        NO_ENV,
    )
    assert cfg.model.b == (2.0, 0.0)
    assert cfg.thresholds["profile.slope"] == 0.3
    assert cfg.suites == ("kernel.*", "solver.*")


def test_only_out_dir_comes_from_environment():
    env = {"OUT_DIR": "/tmp/elsewhere", "ALPHA": "1.9"}
    cfg = parse_config("alpha = 1.5\nbeta = 1.5\nout_dir = here\n", env)
    assert cfg.out_dir == Path("/tmp/elsewhere")
    assert cfg.model.alpha == 1.5
    assert default_config(env).out_dir == Path("/tmp/elsewhere")


def test_config_hash_tracks_text():
    a = parse_config("alpha = 1.5\nbeta = 1.5\n", NO_ENV)
    b = parse_config("alpha = 1.5\nbeta = 1.5\n# note\n", NO_ENV)
    assert a.config_hash != b.config_hash
    assert len(a.config_hash) == 64


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("alpha = 1.25\nbeta = 1.75\n", encoding="utf-8")
    assert load_config(p, NO_ENV).model.alpha == 1.25
    p.write_bytes(b"alpha = \xff\n")
    with pytest.raises(ConfigParseError):
        load_config(p, NO_ENV)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(1.01, 1.99),
    beta=st.floats(1.01, 1.99),
    M=st.floats(0.01, 100.0),
    b1=st.floats(0.0, 10.0),
    logN=st.integers(3, 11),
    L=st.floats(1.0, 500.0),
    steps=st.integers(1, 4096),
    save_every=st.integers(1, 64),
    dealias=st.booleans(),
    rule=st.sampled_from(["exponential", "two_thirds"]),
    nodes=st.integers(2, 96),
    endpoint=st.one_of(st.none(), st.floats(-0.9, 0.0)),
    slope=st.floats(0.01, 1.0),
)
def test_text_round_trip(alpha, beta, M, b1, logN, L, steps, save_every, dealias, rule, nodes, endpoint, slope):
    text = (
        f"alpha = {alpha!r}\nbeta = {beta!r}\nM = {M!r}\nb = {b1!r}\ngrid.N = {2**logN}\ngrid.L = {L!r}\n"
        f"steps = {steps}\nsave_every = {save_every}\ndealias = {dealias}\ndealias_rule = {rule}\n"
        f"profile.nodes = {nodes}\nprofile.endpoint = {endpoint!r}\nthresholds.profile.slope = {slope!r}\n"
    )
    cfg = parse_config(text, NO_ENV)
    again = parse_config(cfg.to_text(), NO_ENV)
    assert again.to_dict() == cfg.to_dict()
    assert again.model == cfg.model and again.grid == cfg.grid and again.solver == cfg.solver
