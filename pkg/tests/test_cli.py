"""Command line surface: spec parsing, subcommands, file outputs, schemas."""

import json
import math
import xml.etree.ElementTree as ET
from importlib import resources

import jsonschema
import numpy as np
import pytest
from numpy.testing import assert_allclose

from spiketx.cli import (
    ExperimentSpec,
    load_experiment,
    main,
    resolve_measure,
    resolve_transform,
    run_experiment,
)
from spiketx.errors import ValidationError
from spiketx.transforms import optimize_truncation
from spiketx.measures import cauchy


def _schema(name):
    path = resources.files("spiketx") / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text())


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _read_table(path):
    """Parse one of our CSV files: comment lines, header, typed rows."""
    comments, header, rows = [], None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line)
            elif header is None:
                header = line.split(",")
            else:
                rows.append(dict(zip(header, line.split(","))))
    return comments, header, rows


# ---------------------------------------------------------------------------
# spec resolution


def test_resolve_measure_strings():
    g = resolve_measure("gaussian")
    assert_allclose(g.moment(2), 1.0, rtol=1e-12)
    shifted = resolve_measure("gaussian:0.5,2.0")
    assert_allclose(shifted.moment(1), 0.5, rtol=1e-12)
    assert_allclose(shifted.moment(2), 0.25 + 4.0, rtol=1e-12)
    assert resolve_measure("cauchy").has_score
    bim = resolve_measure("bimodal")
    assert_allclose(bim.moment(2), 1.25, rtol=1e-12)


def test_resolve_measure_tables_and_errors():
    mix = resolve_measure(
        {"kind": "gaussian_mixture", "weights": [0.5, 0.5], "means": [1.0, -1.0],
         "scales": [0.5, 0.5]}
    )
    assert_allclose(mix.moment(2), 1.25, rtol=1e-12)
    with pytest.raises(ValidationError, match="unknown measure kind"):
        resolve_measure("levy")
    with pytest.raises(ValidationError, match="unknown keys"):
        resolve_measure({"kind": "gaussian", "scale": 2.0})
    with pytest.raises(ValidationError, match="no arguments"):
        resolve_measure("cauchy:3")
    with pytest.raises(ValidationError, match="kind"):
        resolve_measure({"mean": 0.0})


def test_resolve_transform_strings():
    g = resolve_measure("gaussian")
    assert resolve_transform("identity", g)(2.0) == 2.0
    trunc = resolve_transform("trunc:1.5", g)
    assert trunc(0.5) == 0.5
    assert trunc(2.0) == 0.0
    poly = resolve_transform("poly:0,2", g)
    assert poly(3.0) == 6.0
    score = resolve_transform("score", g)
    assert_allclose(score(1.0), -1.0, rtol=1e-12)
    # the optimal series under gaussian is +z (score up to sign)
    series = resolve_transform("series:16", g)
    assert_allclose(series(1.0), 1.0, rtol=1e-9)


def test_resolve_transform_errors():
    g = resolve_measure("gaussian")
    with pytest.raises(ValidationError, match="unknown transform kind"):
        resolve_transform("wavelet", g)
    with pytest.raises(ValidationError, match="needs a level"):
        resolve_transform("trunc", g)
    with pytest.raises(ValidationError, match="coeffs"):
        resolve_transform({"kind": "polynomial"}, g)
    with pytest.raises(ValidationError, match="unknown keys"):
        resolve_transform({"kind": "relu", "slope": 2.0}, g)


# ---------------------------------------------------------------------------
# experiment specs


def _spec(**overrides):
    base = dict(
        name="tiny", mode="standard", setting="asymmetric", gamma=0.5,
        n_grid=(200,), sigma_grid=(2.0,), reps=2, seed=9,
        measure={"kind": "gaussian"}, transform={"kind": "relu"},
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def test_experiment_spec_accepts_valid_and_fills_outputs():
    exp = _spec()
    assert exp.outputs == {"csv": "tiny.csv", "json": "tiny.json"}
    assert len(exp.sha256()) == 64
    assert exp.sha256() == _spec().sha256()
    assert exp.sha256() != _spec(seed=10).sha256()


def test_experiment_spec_rejects_bad_combinations():
    with pytest.raises(ValidationError, match="gamma = 1"):
        _spec(setting="symmetric", gamma=0.5)
    with pytest.raises(ValidationError, match="asymmetric setting"):
        _spec(mode="binomial", setting="symmetric", gamma=1.0, transform=None, m=2)
    with pytest.raises(ValidationError, match="fixes its own transform"):
        _spec(mode="binomial", m=2)
    with pytest.raises(ValidationError, match="m >= 1"):
        _spec(mode="binomial", transform=None)
    with pytest.raises(ValidationError, match="c_grid"):
        _spec(mode="truncation_sweep", transform=None)
    with pytest.raises(ValidationError, match="builds its transforms"):
        _spec(mode="truncation_sweep", c_grid=(1.0,))
    with pytest.raises(ValidationError, match="iid_normal_normalized"):
        _spec(mode="ell_star", vector_scheme="haar")
    with pytest.raises(ValidationError, match="needs a \\[transform\\]"):
        _spec(transform=None)
    with pytest.raises(ValidationError, match="only meaningful in binomial"):
        _spec(m=3)


def test_experiment_spec_grid_and_seed_caps():
    with pytest.raises(ValidationError, match="n_grid"):
        _spec(n_grid=(3,))
    with pytest.raises(ValidationError, match="n_grid"):
        _spec(n_grid=())
    with pytest.raises(ValidationError, match="n_grid"):
        _spec(n_grid=tuple([100] * 65))
    with pytest.raises(ValidationError, match="sigma_grid"):
        _spec(sigma_grid=(2.0, -1.0))
    with pytest.raises(ValidationError, match="sigma_grid"):
        _spec(sigma_grid=tuple([1.0] * 1025))
    with pytest.raises(ValidationError, match="seed"):
        _spec(seed=-1)
    with pytest.raises(ValidationError, match="seed"):
        _spec(seed=1.5)
    with pytest.raises(ValidationError, match="reps"):
        _spec(reps=0)
    with pytest.raises(ValidationError, match="degree"):
        _spec(degree=1)
    with pytest.raises(ValidationError, match="unknown keys"):
        _spec(outputs={"png": "x.png"})


def test_load_experiment_round_trip(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(
        "\n".join(
            [
                'name = "roundtrip"',
                'mode = "standard"',
                "gamma = 0.5",
                "n_grid = [200]",
                "sigma_grid = [1.5, 2.5]",
                "reps = 3",
                "seed = 17",
                'measure = "gaussian"',
                'transform = "relu"',
            ]
        )
    )
    exp = load_experiment(str(path))
    assert exp.name == "roundtrip"
    assert exp.setting == "asymmetric"
    assert exp.n_grid == (200,)
    assert exp.sigma_grid == (1.5, 2.5)
    assert exp.measure == "gaussian"


def test_load_experiment_rejects_unknown_and_missing(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(
        'name = "x"\nmode = "standard"\ngamma = 0.5\nsigma_grid = [2.0]\n'
        'reps = 1\nseed = 0\nmeasure = "gaussian"\ntransform = "relu"\nbogus_key = 1\n'
    )
    with pytest.raises(ValidationError, match="unknown keys"):
        load_experiment(str(bad))
    missing = tmp_path / "missing.toml"
    missing.write_text('name = "x"\nmode = "standard"\n')
    with pytest.raises(ValidationError, match="missing"):
        load_experiment(str(missing))
    with pytest.raises(ValidationError, match="not found"):
        load_experiment(str(tmp_path / "absent.toml"))


# ---------------------------------------------------------------------------
# subcommand stdout documents


def test_tau_command_validates_against_schema(capsys):
    code, out, _ = _run(["tau", "--measure", "gaussian", "--transform", "identity"], capsys)
    assert code == 0
    document = json.loads(out)
    jsonschema.validate(document, _schema("tau_report"))
    assert_allclose(document["tau"], 1.0, atol=1e-10)
    assert document["ell_star"] == 1


def test_tau_command_relu_value(capsys):
    code, out, _ = _run(
        ["tau", "--measure", "gaussian", "--transform", "relu", "--degree", "40"], capsys
    )
    assert code == 0
    document = json.loads(out)
    assert_allclose(document["tau"], math.sqrt(math.pi / (2.0 * (math.pi - 1.0))), atol=1e-6)


def test_predict_command_validates_against_schema(capsys):
    code, out, _ = _run(
        ["predict", "--gamma", "0.5", "--tau", "1.0", "--sigma", "2.0,0.5"], capsys
    )
    assert code == 0
    document = json.loads(out)
    jsonschema.validate(document, _schema("prediction"))
    spike = document["spikes"][0]
    assert spike["supercritical"]
    assert_allclose(spike["location"], (1 + 4) * (0.5 + 4) / 4, rtol=1e-12)
    assert not document["spikes"][1]["supercritical"]


def test_truncation_opt_command_validates_against_schema(capsys):
    code, out, _ = _run(["truncation-opt", "--measure", "cauchy"], capsys)
    assert code == 0
    document = json.loads(out)
    jsonschema.validate(document, _schema("truncation_report"))
    assert 2.027 < document["c_star"] < 2.029
    assert document["warnings"] == []


def test_shrink_command_validates_against_schema(capsys):
    code, out, _ = _run(
        ["shrink", "--gamma", "1.0", "--values", "2.5,1.9", "--rule", "eta_star"], capsys
    )
    assert code == 0
    document = json.loads(out)
    jsonschema.validate(document, _schema("shrink_report"))
    assert_allclose(document["output"], [2.0, 0.0], atol=1e-12)
    assert_allclose(document["t_squared"], [4.0, 0.0], atol=1e-12)
    assert_allclose(document["bulk_edge"], 2.0, rtol=1e-12)


def test_law_command_density_integrates_to_one(tmp_path, capsys):
    code, out, _ = _run(
        ["law", "--gamma", "0.5", "--csv", "mp.csv", "--out-dir", str(tmp_path)], capsys
    )
    assert code == 0
    document = json.loads(out)
    assert document["atom_at_zero"] == 0.0
    comments, header, rows = _read_table(tmp_path / "mp.csv")
    assert header == ["x", "density", "cdf"]
    xs = np.array([float(r["x"]) for r in rows])
    dens = np.array([float(r["density"]) for r in rows])
    assert abs(np.trapezoid(dens, xs) - 1.0) < 1e-4
    assert float(rows[0]["cdf"]) == 0.0
    assert_allclose(float(rows[-1]["cdf"]), 1.0, atol=1e-12)


def test_error_exit_codes(capsys):
    code, _, err = _run(["tau", "--measure", "cauchy", "--transform", "identity"], capsys)
    assert code == 2
    assert err.startswith("error:")
    code, _, err = _run(["predict", "--gamma", "-1", "--tau", "1", "--sigma", "2"], capsys)
    assert code == 2
    code, _, err = _run(["predict", "--gamma", "1", "--tau", "1", "--sigma", ""], capsys)
    assert code == 2


# ---------------------------------------------------------------------------
# experiment pipeline through the CLI


_TINY_TOML = """\
name = "tiny"
mode = "standard"
gamma = 0.5
n_grid = [120]
sigma_grid = [2.0]
reps = 2
seed = 3
measure = "gaussian"
transform = "relu"

[outputs]
csv = "tiny.csv"
json = "tiny.json"
svg = "tiny.svg"
"""


def test_simulate_writes_deterministic_outputs(tmp_path, capsys):
    spec = tmp_path / "tiny.toml"
    spec.write_text(_TINY_TOML)
    d1 = tmp_path / "run1"
    d2 = tmp_path / "run2"
    for d, jobs in ((d1, "1"), (d2, "2")):
        code, out, _ = _run(
            ["simulate", "--spec", str(spec), "--out-dir", str(d), "--jobs", jobs], capsys
        )
        assert code == 0
        assert out.count("wrote ") == 3

    # byte-identical reruns, invariant to the worker count
    for fname in ("tiny.csv", "tiny.json", "tiny.svg"):
        assert (d1 / fname).read_bytes() == (d2 / fname).read_bytes()

    comments, header, rows = _read_table(d1 / "tiny.csv")
    assert len(comments) == 3
    assert comments[0].startswith("# spiketx ")
    assert comments[1].startswith("# spec-sha256: ")
    assert comments[2].startswith("# seed: 3")
    assert len(rows) == 1
    assert header == [
        "variant", "n", "sigma",
        "mean_outlier", "se_outlier",
        "mean_cos_left_sq", "se_cos_left_sq",
        "mean_cos_right_sq", "se_cos_right_sq",
        "theory_outlier", "theory_cos_left_sq", "theory_cos_right_sq",
    ]

    document = json.loads((d1 / "tiny.json").read_text())
    jsonschema.validate(document, _schema("experiment_summary"))
    assert document["spec_sha256"] == load_experiment(str(spec)).sha256()
    assert comments[1] == f"# spec-sha256: {document['spec_sha256']}"

    ET.fromstring((d1 / "tiny.svg").read_text())  # well-formed XML


def test_simulate_row_matches_direct_run(tmp_path, capsys):
    spec = tmp_path / "tiny.toml"
    spec.write_text(_TINY_TOML)
    code, _, _ = _run(["simulate", "--spec", str(spec), "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    document = json.loads((tmp_path / "tiny.json").read_text())
    direct = run_experiment(load_experiment(str(spec)))
    assert document["rows"] == json.loads(json.dumps(direct["rows"]))


def test_binomial_subcommand(tmp_path, capsys):
    code, out, _ = _run(
        [
            "binomial", "--n", "200", "--gamma", "0.5", "--m", "2",
            "--sigma-grid", "2.5", "--reps", "2", "--seed", "5",
            "--name", "btiny", "--out-dir", str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    document = json.loads((tmp_path / "btiny.json").read_text())
    jsonschema.validate(document, _schema("experiment_summary"))
    assert document["mode"] == "binomial"
    row = document["rows"][0]
    assert row["mean_esd_ks"] < 0.2
    assert 0.0 <= row["mean_cos_right_sq"] <= 1.0


def test_reproduce_listing(capsys):
    code, out, _ = _run(["reproduce"], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 6
    assert lines[0].startswith("fig1-left:")
    code, out2, _ = _run(["reproduce", "list"], capsys)
    assert code == 0
    assert out2 == out


def test_reproduce_unknown_figure(capsys):
    code, _, err = _run(["reproduce", "fig9"], capsys)
    assert code == 2
    assert "unknown figure" in err


def test_reproduce_fig3_right_matches_optimizer(tmp_path, capsys):
    code, out, _ = _run(["reproduce", "fig3-right", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    document = json.loads((tmp_path / "fig3-right.json").read_text())
    jsonschema.validate(document, _schema("experiment_summary"))
    best = optimize_truncation(cauchy(), (0.1, 20.0))
    assert document["c_star"] == best.c_star
    assert document["tau_at_c_star"] == best.tau_at_c_star
    assert len(document["rows"]) == 241
    taus = [r["tau_c"] for r in document["rows"]]
    assert max(taus) <= best.tau_at_c_star + 1e-12
    comments, header, rows = _read_table(tmp_path / "fig3-right.csv")
    assert header == ["c", "tau_c"]
    assert len(rows) == 241
    ET.fromstring((tmp_path / "fig3-right.svg").read_text())
