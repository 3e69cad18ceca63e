import json

import pytest

from freeness_lab.cli import main
from freeness_lab.config import ExperimentConfig
from freeness_lab.runner import SCHEMAS, format_value, read_results, run, summarize


def cfg(kind, **kw):
    return ExperimentConfig(kind=kind, **kw).validate()


SMALL = {
    "couple": dict(n_grid=(8, 16), reps=3, k=(4, 8), m=2),
    "band": dict(n_grid=(8, 16), reps=6, epsilon=0.25),
    "esd": dict(n_grid=(8, 16), reps=2, k=(2, 4)),
    "concentration": dict(n_grid=(6,), reps=1000, stat="tr12", deltas=(0.1, 0.3)),
    "freeness": dict(n_grid=(8, 16), reps=2, restarts=2, epsilon=0.25),
}


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_run_writes_schema_and_is_deterministic(kind, tmp_path):
    config = cfg(kind, **SMALL[kind])
    m1 = run(config, tmp_path / "a", threads=1)
    m2 = run(config, tmp_path / "b", threads=3)
    for name in m1.outputs:
        if name != "manifest.json":
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    header = (tmp_path / "a" / "results.csv").read_text().splitlines()[0]
    assert header == ",".join(c for c, _ in SCHEMAS[kind])
    assert m1.config_hash == m2.config_hash
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["streams"][0]["stream_id"] == (config.n_grid[0] << 32)
    assert set(manifest["outputs"]) == set(m1.outputs)
    for name in m1.outputs:
        assert (tmp_path / "a" / name).exists()


def test_spec_columns_present(tmp_path):
    expected = {
        "couple": ["replicate", "j", "residual_two_norm", "o_k_member", "diag_distance_op_norm"],
        "band": ["replicate", "lhs_two_norm", "rhs_bound", "op_norm_ratio", "member_ok"],
        "concentration": ["delta", "freq", "bound", "ci_radius"],
    }
    for kind, cols in expected.items():
        names = [c for c, _ in SCHEMAS[kind]]
        assert all(c in names for c in cols)


def test_freeness_summary_columns(tmp_path):
    run(cfg("freeness", **SMALL["freeness"]), tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())["summary"]
    assert "max_abs_moment" in summary and "budget" in summary


def test_float_format():
    assert format_value(0.1) == "0.10000000000000001"
    assert float(format_value(1 / 3)) == 1 / 3
    assert format_value(True) == "true"


def test_summarize_identity_and_pooling(tmp_path):
    base = SMALL["couple"]
    run(cfg("couple", seed=1, **base), tmp_path / "s1")
    run(cfg("couple", seed=2, **base), tmp_path / "s2")
    single = summarize([tmp_path / "s1"])
    own = json.loads((tmp_path / "s1" / "summary.json").read_text())
    assert json.loads(json.dumps(single["summary"])) == own["summary"]
    pooled = summarize([tmp_path / "s1", tmp_path / "s2"], tmp_path / "pooled")
    assert pooled["summary"]["per_n"][8]["samples"] == 2 * base["reps"] * base["m"]
    assert (tmp_path / "pooled" / "summary.json").exists()


def test_summarize_rejects_mixed_kinds(tmp_path):
    run(cfg("couple", **SMALL["couple"]), tmp_path / "c")
    run(cfg("esd", **SMALL["esd"]), tmp_path / "e")
    with pytest.raises(ValueError):
        summarize([tmp_path / "c", tmp_path / "e"])


def test_read_results_schema_mismatch(tmp_path):
    run(cfg("esd", **SMALL["esd"]), tmp_path)
    with pytest.raises(ValueError):
        read_results(tmp_path / "results.csv", "band")


def test_band_run_has_no_membership_failures(tmp_path):
    run(cfg("band", n_grid=(16, 64), reps=100, epsilon=0.25), tmp_path)
    rows = read_results(tmp_path / "results.csv", "band")
    assert len(rows) == 200
    assert all(r["member_ok"] and r["bounds_ok"] for r in rows)


def test_numerical_failure_becomes_error_row(tmp_path):
    config = cfg("couple", n_grid=(8,), reps=2, eig_tol=1e-30)
    run(config, tmp_path)
    rows = read_results(tmp_path / "results.csv", "couple")
    assert rows and all(r["error"] for r in rows)


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["band", "--n", "8,16", "--reps", "4", "--epsilon", "0.3", "--out", str(out)]) == 0
    assert (out / "results.csv").exists()
    assert main(["summarize", str(out)]) == 0
    # bad config: error exit
    bad = tmp_path / "bad.cfg"
    bad.write_text("kind = band\nn_grid = 16, 8\n")
    assert main(["band", "--config", str(bad)]) == 1
    assert "n_grid" in capsys.readouterr().err
    # gate failure: every replicate errors, so the identity gate is red
    assert main(["couple", "--n", "8", "--reps", "1", "--out", str(tmp_path / "g")]) == 0
    gate = tmp_path / "gate.cfg"
    gate.write_text("kind = couple\nn_grid = 8\neig_tol = 1e-30\n")
    assert main(["couple", "--config", str(gate), "--out", str(tmp_path / "g2")]) == 2


def test_cli_config_and_overrides(tmp_path, monkeypatch):
    path = tmp_path / "c.cfg"
    path.write_text(f"kind = esd\nn_grid = 8\nreps = 1\nseed = 1\nout = {tmp_path / 'default'}\n")
    monkeypatch.setenv("FREENESS_LAB_THREADS", "2")
    assert main(["esd", "--config", str(path), "--seed", "5", "--reps", "2"]) == 0
    manifest = json.loads((tmp_path / "default" / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 5 and manifest["timings"]["threads"] == 2
    assert (tmp_path / "default" / "esd_n8.csv").exists()
    assert main(["couple", "--config", str(path)]) == 1


def test_cli_requires_n_without_config():
    assert main(["esd"]) == 1
