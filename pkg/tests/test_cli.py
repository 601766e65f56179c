import json

import pytest

from renyi.cli import PIPELINES, find_inconclusive, main


def run(args, tmp_path):
    return main(list(args) + ["--out", str(tmp_path)])


def test_list(capsys):
    assert main(["list"]) == 0
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert names == ["poisson", "haldane", "stone-dawid", "lebesgue", "verify"]
    assert main(["list", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [p["name"] for p in data["pipelines"]] == names


@pytest.mark.parametrize("argv", [["list", "--bogus"], ["nope"], ["poisson", "--t1", "-1"],
                                  ["haldane", "--cells", "1"], ["stone-dawid", "--prior", "cauchy"], []])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_poisson_writes_json_and_csv(tmp_path):
    assert run(["poisson", "--t1", "1", "--t2", "3", "--x1", "0", "--x2", "2", "--format", "both"], tmp_path) == 0
    report = json.loads((tmp_path / "poisson.json").read_text())
    assert report["result"]["stagedVsOneShot"]["proportional"] is True
    assert report["params"]["x2"] == 2 and report["inconclusive"] == []
    assert sorted(p.name for p in tmp_path.glob("*.csv")) == ["poisson_one_shot.csv", "poisson_stage1.csv",
                                                              "poisson_stage2.csv"]
    assert not list(tmp_path.glob(".*tmp"))


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["haldane", "--out", str(a)]) == 0
    assert main(["haldane", "--out", str(b)]) == 0
    assert (a / "haldane.json").read_bytes() == (b / "haldane.json").read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"pipeline": "haldane", "params": {"alpha": 0, "beta": 5}, "format": "csv"}))
    assert run(["haldane", "--config", str(cfg), "--beta", "4"], tmp_path) == 0
    assert (tmp_path / "haldane_posterior.csv").exists() and not (tmp_path / "haldane.json").exists()


@pytest.mark.parametrize("cfg,field", [({"params": {"gamma": 1}}, "params.gamma"), ({"colour": 1}, "colour"),
                                       ({"protocol": {"rtol": -1}}, "protocol.rtol"),
                                       ({"pipeline": "poisson"}, "pipeline")])
def test_bad_config_names_field(cfg, field, tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert run(["haldane", "--config", str(path)], tmp_path) == 1
    assert field in capsys.readouterr().err


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RENYI_OUT", str(tmp_path / "env"))
    assert main(["lebesgue"]) == 0
    assert (tmp_path / "env" / "lebesgue.json").exists()


def test_verify_fiber_suite(tmp_path):
    assert run(["verify", "--suite", "theorem1", "--cases", "30", "--seed", "7"], tmp_path) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["result"]["campaign"]["matches"] == 30


def test_strict_mode_exits_two_on_inconclusive(tmp_path):
    # a protocol without room to classify leaves the probe undecided
    cfg = tmp_path / "tight.json"
    cfg.write_text(json.dumps({"protocol": {"steps": 3, "power_steps": 3, "max_steps": 3}}))
    assert run(["lebesgue", "--config", str(cfg)], tmp_path) == 0
    report = json.loads((tmp_path / "lebesgue.json").read_text())
    assert "/plane/posteriorVerdict" in report["inconclusive"]
    assert run(["lebesgue", "--config", str(cfg), "--strict"], tmp_path) == 2


def test_inconclusive_prior_blocks_the_recipe(tmp_path, capsys):
    cfg = tmp_path / "tight.json"
    cfg.write_text(json.dumps({"protocol": {"steps": 3, "power_steps": 3, "max_steps": 3}}))
    assert run(["haldane", "--alpha", "0", "--config", str(cfg)], tmp_path) == 1
    assert "not sigma-finite" in capsys.readouterr().err


def test_find_inconclusive_paths():
    assert find_inconclusive({"a": {"kind": "inconclusive"}, "b": [{"kind": "finite"}]}) == ["/a"]


def test_registry_has_five_pipelines():
    assert list(PIPELINES) == ["poisson", "haldane", "stone-dawid", "lebesgue", "verify"]


def test_schema_matches_cli():
    import dataclasses
    from pathlib import Path

    from renyi.extension import ExtensionProtocol

    schema = json.loads((Path(__file__).parents[1] / "docs" / "config.schema.json").read_text())
    props = schema["properties"]
    assert set(props) == {"pipeline", "params", "protocol", "out", "format", "strict", "seed"}
    assert set(props["pipeline"]["enum"]) == set(PIPELINES)
    assert set(props["params"]["properties"]) == {k for p in PIPELINES.values() for k in p.params}
    assert set(props["protocol"]["properties"]) == {f.name for f in dataclasses.fields(ExtensionProtocol)}
