import json
import subprocess
import sys

import pytest

from cnnpreimage.cli import EXIT_CONFIG, EXIT_CORE, EXIT_OK, main

from test_scenarios import MINIMAL


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    assert "fig4-triangle" in capsys.readouterr().out


def test_run_bundled_with_exports(tmp_path, capsys):
    code = main(["cells", "--scenario", "fig3-identity", "--out-dir", str(tmp_path),
                 "--format", "json", "--format", "obj", "--format", "svg"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "8 cells" in out
    assert {p.name for p in tmp_path.iterdir()} == {"fig3-identity.json", "fig3-identity.obj", "fig3-identity.svg"}


def test_config_file_and_seed(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    assert main(["preimage", "--config", cfg, "--seed", "4", "--out-dir", str(tmp_path)]) == EXIT_OK
    data = json.loads((tmp_path / "tiny.json").read_text())
    assert data["summary"]["passed"]


def test_config_errors(tmp_path, capsys):
    assert main(["trace", "--scenario", "fig3-identity"]) == EXIT_CONFIG
    assert main(["preimage", "--config", write(tmp_path, {**MINIMAL, "schema": 3})]) == EXIT_CONFIG
    assert main(["preimage", "--scenario", "missing"]) == EXIT_CONFIG
    assert main(["cells", "--scenario", "fig3-identity", "--format", "svg", "--projection", "0,7",
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["preimage"])
    assert exc.value.code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_core_errors(tmp_path):
    unreachable = {**MINIMAL, "layers": [{"weights": [[1, 0], [0, 1]], "bias": 0.5}], "params": {"y": [0.1, 0.1]}}
    assert main(["preimage", "--config", write(tmp_path, unreachable)]) == EXIT_CORE
    failing = {**MINIMAL, "expect": {"max_residual": {"<": 0.0}}}
    assert main(["run", "--config", write(tmp_path, failing), "--out-dir", str(tmp_path)]) == EXIT_CORE


def test_bad_env_tolerance(monkeypatch, tmp_path):
    monkeypatch.setenv("CNNPREIMAGE_EPS_RANK", "tiny")
    assert main(["cells", "--scenario", "fig3-identity", "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "cnnpreimage", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "fig2-bias-only" in res.stdout


def test_separate_processes_write_identical_json(tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        subprocess.run([sys.executable, "-m", "cnnpreimage", "flow", "--scenario", "fig2-bias-only",
                        "--format", "json", "--out-dir", str(d)], check=True, capture_output=True)
        outs.append((d / "fig2-bias-only.json").read_bytes())
    assert outs[0] == outs[1]
