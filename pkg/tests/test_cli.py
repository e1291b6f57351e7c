from __future__ import annotations

import csv
import json

import pytest

from mcmpipe import builtin_network, default_hardware, evaluate, load_schedule
from mcmpipe.cli import main

TOY = {
    "name": "toy5",
    "layers": [
        {"kind": "conv", "c_in": 3, "c_out": 16, "h_in": 32, "w_in": 32, "k": 3, "pad": 1},
        {"kind": "conv", "c_in": 16, "c_out": 32, "h_in": 32, "w_in": 32, "k": 3, "pad": 1, "pool": 2},
        {"kind": "conv", "c_in": 32, "c_out": 64, "h_in": 16, "w_in": 16, "k": 3, "pad": 1},
        {"kind": "conv", "c_in": 64, "c_out": 64, "h_in": 16, "w_in": 16, "k": 3, "pad": 1, "pool": 2},
        {"kind": "conv", "c_in": 64, "c_out": 128, "h_in": 8, "w_in": 8, "k": 3, "pad": 1},
    ],
}


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "toy5.json"
    path.write_text(json.dumps(TOY))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSchedule:
    def test_writes_three_outputs(self, toy_file, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["schedule", "--net", toy_file, "--chiplets", "8",
                   "--method", "scope", "--samples", "16", "--out", str(out)])
        assert rc == 0
        for name in ("schedule.json", "report.json", "report_layers.csv"):
            assert (out / name).is_file()
        text = capsys.readouterr().out
        assert "t_system" in text and "throughput" in text and "energy" in text

    def test_alexnet_contract(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["schedule", "--net", "alexnet", "--chiplets", "16",
                   "--method", "scope", "--samples", "64", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "report_layers.csv")
        assert rows[0] == ["segment", "cluster", "layer", "t_pre", "t_comp", "t_comm", "t_layer"]
        assert len(rows) == 1 + 8

    def test_schedule_roundtrip_reproduces_report(self, toy_file, tmp_path):
        out = tmp_path / "out"
        main(["schedule", "--net", toy_file, "--chiplets", "8",
              "--samples", "16", "--out", str(out)])
        schedule, meta = load_schedule(out / "schedule.json")
        net = builtin_network(meta["network"]["builtin"]) if "builtin" in meta["network"] \
            else None
        from mcmpipe import load_network
        net = net or load_network(meta["network"]["path"])
        hw = default_hardware(meta["num_chiplets"])
        report = evaluate(schedule, net, hw, meta["m_samples"])
        stored = json.loads((out / "report.json").read_text())
        assert report.to_dict() == stored

    def test_full_pipeline_overflow_exit2(self, tmp_path, capsys):
        rc = main(["schedule", "--net", "resnet152", "--chiplets", "16",
                   "--method", "full_pipeline", "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "overflow" in capsys.readouterr().err

    def test_malformed_network_exit1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"layers": [{"kind": "conv", "c_in": 3}]}))
        rc = main(["schedule", "--net", str(bad), "--out", str(tmp_path / "x")])
        assert rc == 1
        assert "c_out" in capsys.readouterr().err

    def test_unknown_builtin_exit1(self, tmp_path, capsys):
        rc = main(["schedule", "--net", "nonexistent.json", "--out", str(tmp_path / "x")])
        assert rc == 1

    @pytest.mark.parametrize("method", ["scope", "sequential", "full_pipeline", "segmented"])
    def test_every_method_runs(self, method, toy_file, tmp_path):
        out = tmp_path / method
        rc = main(["schedule", "--net", toy_file, "--chiplets", "8",
                   "--method", method, "--samples", "8", "--out", str(out)])
        assert rc == 0
        assert json.loads((out / "report.json").read_text())["t_system"] > 0


class TestCompare:
    def test_sweep_shape_and_normalization(self, toy_file, tmp_path):
        out = tmp_path / "cmp"
        rc = main(["compare", "--nets", toy_file, "--chiplets", "4,8",
                   "--samples", "16", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "compare.csv")
        header, body = rows[0], rows[1:]
        assert len(body) == 2 * 4
        feas = {(r[1], r[2]): r for r in body if r[3] == "True"}
        # dominance surfaced in the output: scope at least as fast as segmented
        for c in ("4", "8"):
            if (c, "scope") in feas and (c, "segmented") in feas:
                assert float(feas[(c, "scope")][4]) <= float(feas[(c, "segmented")][4])
        nrows = read_csv(out / "throughput_normalized.csv")[1:]
        base = {
            (r[0], r[2]): float(r[4]) for r in nrows if r[1] == "4" and r[4] != ""
        }
        for v in base.values():
            assert v == 1.0

    def test_infeasible_cells_marked(self, tmp_path):
        out = tmp_path / "cmp"
        rc = main(["compare", "--nets", "resnet18", "--chiplets", "4,16",
                   "--methods", "full_pipeline,scope", "--samples", "8",
                   "--out", str(out)])
        assert rc == 0
        body = read_csv(out / "compare.csv")[1:]
        fp = [r for r in body if r[2] == "full_pipeline"]
        assert all(r[3] == "False" and r[12] for r in fp)


class TestValidate:
    def test_toy_distribution_and_rank(self, toy_file, tmp_path, capsys):
        out = tmp_path / "val"
        rc = main(["validate", "--net", toy_file, "--chiplets", "8",
                   "--samples", "16", "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "rank" in text
        dist = read_csv(out / "distribution.csv")
        assert dist[0] == ["candidate_id", "latency", "feasible"]
        assert len(dist) - 1 == 10_560
        summary = read_csv(out / "summary.csv")
        row = dict(zip(summary[0], summary[1]))
        assert float(row["rank_percent"]) <= 1.0
        assert float(row["ratio_to_optimum"]) <= 1.05

    def test_single_layer_rank_zero(self, tmp_path):
        path = tmp_path / "one.json"
        path.write_text(json.dumps({
            "layers": [{"kind": "conv", "c_in": 3, "c_out": 8, "h_in": 8, "w_in": 8,
                        "k": 3, "pad": 1}],
        }))
        out = tmp_path / "val"
        rc = main(["validate", "--net", str(path), "--chiplets", "4", "--out", str(out)])
        assert rc == 0
        row = dict(zip(*read_csv(out / "summary.csv")))
        assert float(row["rank_percent"]) == 0.0

    def test_huge_space_exit3(self, tmp_path, capsys):
        rc = main(["validate", "--net", "resnet152", "--chiplets", "256",
                   "--out", str(tmp_path / "x")])
        assert rc == 3
        assert "candidates" in capsys.readouterr().err

    def test_max_enum_flag(self, toy_file, tmp_path):
        rc = main(["validate", "--net", toy_file, "--chiplets", "8",
                   "--max-enum", "100", "--out", str(tmp_path / "x")])
        assert rc == 3

    def test_max_enum_env(self, toy_file, tmp_path, monkeypatch):
        monkeypatch.setenv("SCOPE_MAX_ENUM", "100")
        rc = main(["validate", "--net", toy_file, "--chiplets", "8",
                   "--out", str(tmp_path / "x")])
        assert rc == 3


class TestBreakdown:
    def test_outputs(self, toy_file, tmp_path):
        out = tmp_path / "bk"
        rc = main(["breakdown", "--net", toy_file, "--chiplets", "8",
                   "--samples", "16", "--out", str(out)])
        assert rc == 0
        loads = read_csv(out / "loads.csv")
        assert loads[0] == ["method", "segment", "cluster", "start", "end", "macs",
                            "normalized_load"]
        methods = {r[0] for r in loads[1:]}
        assert methods == {"scope", "segmented"}
        energy = read_csv(out / "energy.csv")
        assert {r[1] for r in energy[1:]} == {"mac", "nop", "dram"}
        scope_norm = sum(float(r[3]) for r in energy[1:] if r[0] == "scope")
        assert scope_norm == pytest.approx(1.0)

    def test_single_layer_net(self, tmp_path):
        path = tmp_path / "one.json"
        path.write_text(json.dumps({
            "layers": [{"kind": "conv", "c_in": 3, "c_out": 8, "h_in": 8, "w_in": 8,
                        "k": 3, "pad": 1}],
        }))
        rc = main(["breakdown", "--net", str(path), "--chiplets", "4",
                   "--out", str(tmp_path / "bk")])
        assert rc == 0


class TestCount:
    def test_by_layers(self, capsys):
        rc = main(["count", "--layers", "2", "--chiplets", "2"])
        assert rc == 0
        assert "design space size: 8" in capsys.readouterr().out

    def test_by_network(self, capsys):
        rc = main(["count", "--net", "resnet152", "--chiplets", "256"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "layers: 152" in out


class TestDeterminism:
    @pytest.mark.parametrize("which", ["schedule", "validate", "breakdown"])
    def test_byte_identical_reruns(self, which, toy_file, tmp_path, capsys):
        argv = {
            "schedule": ["schedule", "--net", toy_file, "--chiplets", "8",
                         "--samples", "16"],
            "validate": ["validate", "--net", toy_file, "--chiplets", "8",
                         "--samples", "16"],
            "breakdown": ["breakdown", "--net", toy_file, "--chiplets", "8",
                          "--samples", "16"],
        }[which]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        files_a = sorted(p.name for p in a.iterdir())
        files_b = sorted(p.name for p in b.iterdir())
        assert files_a == files_b and files_a
        for name in files_a:
            assert (a / name).read_bytes() == (b / name).read_bytes()
