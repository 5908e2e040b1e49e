from __future__ import annotations

import subprocess
import sys

import pytest

from p2ppl import cli
from p2ppl.errors import InvariantViolation, NoSnapshot
from p2ppl.runner import PRESETS, export_topology, preset, run
from p2ppl.scenario import Scenario, defaults_text
from p2ppl.topology import metrics, read_edge_list

FLOOD_SMALL = """\
overlay = dum
seed = 3
duration = 60
nodes = 40
snapshot_period_s = 20
[workload]
publishes = 5
queries = 10
"""


@pytest.fixture
def flood_file(tmp_path):
    path = tmp_path / "flood.ini"
    path.write_text(FLOOD_SMALL)
    return path


def test_presets_present():
    assert set(PRESETS) == {"bittorrent_baseline", "gnutella_flood", "chord_lookup_bench",
                            "emule_hybrid", "layered_supernodes", "topology_suite"}


def test_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)


def test_print_defaults(capsys):
    assert cli.main(["print-defaults"]) == 0
    assert capsys.readouterr().out == defaults_text()


def test_validate_ok_and_bad(tmp_path, flood_file, capsys):
    assert cli.main(["validate", str(flood_file)]) == 0
    bad = tmp_path / "bad.ini"
    bad.write_text("dsm.m_bits = 70\n")
    assert cli.main(["validate", str(bad)]) == 2
    assert "dsm.m_bits" in capsys.readouterr().err
    assert cli.main(["validate", str(tmp_path / "missing.ini")]) == 2


def test_run_writes_identical_outputs(tmp_path, flood_file, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", str(flood_file), "--out", str(a)]) == 0
    assert cli.main(["run", str(flood_file), "--out", str(b)]) == 0
    for name in ("metrics.csv", "summary.json", "scenario.ini"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    out = capsys.readouterr().out
    assert "flood.coverage_mean: " in out and "flood.queries: 10" in out


def test_seed_override_changes_output(tmp_path, flood_file):
    cli.main(["run", str(flood_file), "--out", str(tmp_path / "a")])
    cli.main(["run", str(flood_file), "--seed", "4", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "metrics.csv").read_bytes() != (tmp_path / "b" / "metrics.csv").read_bytes()


def test_export_topology_file_matches_in_run_metrics(tmp_path, flood_file):
    assert cli.main(["run", str(flood_file), "--out", str(tmp_path), "--export-topology", "25"]) == 0
    snap = read_edge_list(tmp_path / "topology_25.edges")
    res = run(Scenario({"scenario.overlay": "dum", "scenario.seed": 3, "scenario.duration_s": 60.0,
                        "scenario.nodes": 40, "scenario.snapshot_period_s": 20.0,
                        "workload.publishes": 5, "workload.queries": 10}))
    assert snap == res.snapshots[20.0]
    recorded = {r.name: r.value for r in res.log.records
                if r.time == 20.0 and r.name.startswith("topology.")}
    m = metrics(snap)
    assert recorded["topology.clustering"] == pytest.approx(m.clustering_coefficient)
    assert recorded["topology.avg_distance"] == pytest.approx(m.avg_connected_distance)
    assert recorded["topology.diameter"] == m.diameter


def test_export_clamps_and_rejects_early_times(flood_file):
    res = run(cli.resolve(str(flood_file)))
    assert export_topology(res, 1e9) == res.snapshots[max(res.snapshots)]
    with pytest.raises(NoSnapshot):
        export_topology(res, -1.0)


def test_export_before_any_snapshot_exits_2(tmp_path, flood_file):
    assert cli.main(["run", str(flood_file), "--export-topology", "-5"]) == 2


def test_empty_overlay_exports_empty_edge_list(tmp_path):
    sc = Scenario({"scenario.overlay": "dum", "scenario.nodes": 20, "scenario.duration_s": 200.0,
                   "churn.mean_session_s": 5.0, "churn.mean_offline_s": 1e6,
                   "workload.queries": 0})
    res = run(sc)
    snap = export_topology(res, 200.0, tmp_path / "empty.edges")
    assert snap.nodes == () and snap.edges == frozenset()
    assert read_edge_list(tmp_path / "empty.edges") == snap


def test_invariant_violation_exits_3(monkeypatch, flood_file, capsys):
    def boom(sc):
        raise InvariantViolation("ring broke")
    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["run", str(flood_file)]) == 3
    assert "ring broke" in capsys.readouterr().err


def test_multiple_runs(capsys, flood_file):
    assert cli.main(["run", str(flood_file), "--runs", "2"]) == 0
    out = capsys.readouterr().out
    assert "# seed 3" in out and "# seed 4" in out
    assert cli.main(["run", str(flood_file), "--runs", "0"]) == 2


def test_parallel_runs_match_sequential(tmp_path, flood_file):
    cli.main(["run", str(flood_file), "--runs", "2", "--out", str(tmp_path / "seq")])
    cli.main(["run", str(flood_file), "--runs", "2", "--parallel", "--out", str(tmp_path / "par")])
    for seed in (3, 4):
        assert ((tmp_path / "seq" / f"run_{seed}" / "metrics.csv").read_bytes()
                == (tmp_path / "par" / f"run_{seed}" / "metrics.csv").read_bytes())


def test_bittorrent_preset_composition():
    sc = preset("bittorrent_baseline")
    assert sc["scenario.overlay"] == "hm" and sc["scenario.workload"] == "swarm"
    assert sc["reputation.enabled"] is False
    assert (sc["swarm.M"], sc["swarm.K"], sc["swarm.T1_s"], sc["swarm.T2_s"]) == (5, 1, 10.0, 30.0)
    assert sc["swarm.piece_selection"] == "rarest"


def test_chord_bench_emits_hop_counts():
    res = run(preset("chord_lookup_bench"))
    hops = res.log.values("chord.lookup_hops")
    assert len(hops) == 1000
    assert res.summary["chord.mismatches"] == 0


def test_module_entry_point(flood_file):
    proc = subprocess.run([sys.executable, "-m", "p2ppl", "validate", str(flood_file)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("ok: overlay=dum")
