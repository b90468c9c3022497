import json

import pytest

from teirp.cli import main
from teirp.instgen import generate_micro
from teirp.model import read_instance, write_instance


@pytest.fixture
def micro_file(tmp_path):
    path = tmp_path / "micro.txt"
    write_instance(generate_micro(3, 2, seed=1), str(path))
    return str(path)


def test_gen_micro_roundtrip(tmp_path):
    out = str(tmp_path / "gen.txt")
    assert main(["gen", "--n", "4", "--tau", "2", "--seed", "3",
                 "--out", out]) == 0
    inst = read_instance(out)
    assert len(inst.customers) == 4 and inst.tau == 2


def test_solve_validate_oracle_pipeline(micro_file, tmp_path, capsys):
    report_path = str(tmp_path / "report.json")
    assert main(["solve", micro_file, "--time-limit", "60",
                 "--out", report_path]) == 0
    report = json.load(open(report_path))
    assert report["status"] == "optimal"

    assert main(["validate", micro_file, report_path]) == 0
    out = capsys.readouterr().out
    assert "pass" in out

    assert main(["oracle", micro_file]) == 0
    out = capsys.readouterr().out
    oracle = json.loads(out)
    assert oracle["objective"] == pytest.approx(report["objective"],
                                                rel=1e-6)


def test_validate_rejects_corrupted_report(micro_file, tmp_path, capsys):
    report_path = str(tmp_path / "report.json")
    main(["solve", micro_file, "--time-limit", "60", "--out", report_path])
    report = json.load(open(report_path))
    report["objective"] += 5.0
    json.dump(report, open(report_path, "w"))
    assert main(["validate", micro_file, report_path]) == 1


def test_bench_writes_csv(micro_file, tmp_path):
    out = str(tmp_path / "results.csv")
    import os
    assert main(["bench", os.path.dirname(micro_file), "--time-limit", "60",
                 "--out", out]) == 0
    text = open(out).read()
    assert text.startswith("instance,")
    assert "opt(<0.05%)" in text
