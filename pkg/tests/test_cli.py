import json
import subprocess
import sys

import pytest

from ncsim.cli import COLUMNS, COMPARE_COLUMNS, ExperimentSpec, SpecError, main, parse_csv
from ncsim.radio import save_positions, NodePosition

UNIT = ["--power-w", "1", "--d", "1"]  # P(1 m) = 1 - 1.3e-9, effectively unit links


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sweep_n_unit_probabilities(capsys):
    code, out, _ = run(capsys, "sweep-n", "--sizes", "2", "--trials", "2000", "--seed", "4", *UNIT)
    assert code == 0
    rows = parse_csv(out)
    assert [r["protocol"] for r in rows] == ["nc", "random_selection"]
    assert list(rows[0]) == COLUMNS
    assert rows[0]["mean_slots"] == pytest.approx(3.0, rel=0.05)
    assert rows[1]["mean_slots"] == pytest.approx(5.0, rel=0.07)
    assert rows[0]["bound_slots"] == pytest.approx(8.0, rel=1e-7)
    assert rows[0]["bound_degenerate"] is False
    assert rows[0]["connectivity_class"] == "fully_connected"


def test_rows_round_trip_into_spec(capsys, tmp_path):
    out = tmp_path / "rows.csv"
    code, _, _ = run(capsys, "sweep-n", "--sizes", "3,5", "--trials", "20", "--seed", "8",
                     "--power-dbm=-10", "--z-db", "40", "--eta", "2.5", "--q", "4", "--out", str(out))
    assert code == 0
    rows = parse_csv(out.read_text())
    assert [(r["N"], r["protocol"]) for r in rows] == [
        (3, "nc"), (3, "random_selection"), (5, "nc"), (5, "random_selection"),
    ]
    for row in rows:
        spec = ExperimentSpec(
            topology=row["topology"], d=row["d"], sizes=[row["N"]], power_w=[row["power_w"]],
            noise=row["noise_w"], z_db=row["z_db"], eta=row["eta"], q=row["q"],
            trials=row["trials"], seed=row["seed"], protocols=[row["protocol"]],
        ).validate()
        assert spec.power_w[0] == pytest.approx(1e-4)
        assert (spec.z_db, spec.eta, spec.q, spec.trials, spec.seed) == (40.0, 2.5, 4, 20, 8)
        assert row["ci95_lo"] <= row["mean_slots"] <= row["ci95_hi"]


def test_byte_identical_reruns(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "sweep-n", "--sizes", "4,6", "--trials", "30", "--seed", "21", "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("NCSIM_SEED", "77")
    _, out, _ = run(capsys, "simulate", "--sizes", "3", "--trials", "5", "--protocol", "nc")
    assert parse_csv(out)[0]["seed"] == 77
    _, out, _ = run(capsys, "simulate", "--sizes", "3", "--trials", "5", "--protocol", "nc", "--seed", "3")
    assert parse_csv(out)[0]["seed"] == 3


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"sizes": [3, 4], "trials": 10, "seed": 5, "power_dbm": [-20], "protocols": ["nc"]}))
    _, out, _ = run(capsys, "sweep-n", "--config", str(cfg), "--trials", "12")
    rows = parse_csv(out)
    assert [r["N"] for r in rows] == [3, 4]
    assert all(r["trials"] == 12 and r["seed"] == 5 for r in rows)
    assert rows[0]["power_w"] == pytest.approx(1e-5)


def test_sweep_power_row_count_and_trend(capsys):
    powers = ",".join(str(p) for p in range(-40, 1, 5))
    code, out, err = run(capsys, "sweep-power", "--sizes", "6", f"--power-dbm={powers}",
                         "--trials", "40", "--seed", "2", "--protocol", "both", "--max-slots", "200")
    rows = parse_csv(out)
    assert len(rows) == 18
    assert sum(r["protocol"] == "nc" for r in rows) == 9
    # Low powers stall under the 45 dB threshold; the runner must say so and exit non-zero.
    assert code == 1 and "incomplete" in err
    nc = [r for r in rows if r["protocol"] == "nc" and r["mean_slots"] is not None]
    assert nc[-1]["mean_slots"] <= nc[0]["mean_slots"]


def test_degenerate_bound_cells(capsys, tmp_path):
    # Two nodes far apart: the reception sum underflows to zero, so no bound exists.
    pos = tmp_path / "far.csv"
    save_positions([NodePosition(0, 0), NodePosition(1e6, 0)], pos)
    code, out, _ = run(capsys, "simulate", "--topology", "file", "--positions", str(pos),
                       "--trials", "2", "--max-slots", "20")
    row = parse_csv(out)[0]
    assert row["bound_degenerate"] is True and row["bound_slots"] is None
    assert row["connectivity_class"] == "disconnected"
    assert code == 1


def test_compare_ratio(capsys):
    code, out, _ = run(capsys, "compare", "--sizes", "2", "--trials", "3000", "--seed", "1", *UNIT)
    assert code == 0
    rows = parse_csv(out)
    assert list(rows[0]) == COMPARE_COLUMNS
    assert rows[0]["ratio"] == rows[1]["ratio"]
    assert rows[0]["ratio"] == pytest.approx(5 / 3, rel=0.08)


def test_compare_needs_both_protocols(capsys):
    code, _, err = run(capsys, "compare", "--sizes", "3", "--protocol", "nc")
    assert code == 2 and "both protocols" in err


def test_bound_command(capsys):
    code, out, err = run(capsys, "bound", "--sizes", "2,3", "--verbose", *UNIT)
    assert code == 0
    rows = parse_csv(out)
    assert rows[0]["bound_slots"] == pytest.approx(8.0, rel=1e-7)
    assert rows[0]["mean_slots"] is None
    assert "N=3 i=1 p=5/12" in err


def test_bound_disconnected_is_error(capsys, tmp_path):
    pos = tmp_path / "far.csv"
    save_positions([NodePosition(0, 0), NodePosition(1e6, 0)], pos)
    code, _, err = run(capsys, "bound", "--topology", "file", "--positions", str(pos))
    assert code == 2 and "disconnected" in err


def test_grid_sizes(capsys):
    code, out, _ = run(capsys, "simulate", "--topology", "grid", "--sizes", "2x3", "--trials", "5")
    assert code == 0
    assert parse_csv(out)[0]["N"] == 6


def test_trace_sidecar(capsys, tmp_path):
    out = tmp_path / "t.csv"
    run(capsys, "simulate", "--sizes", "4", "--trials", "3", "--trace", "--protocol", "nc", "--out", str(out))
    lines = (tmp_path / "t.csv.traces.jsonl").read_text().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[0])
    assert rec["dimension_trace"][0] == 0 and rec["dimension_trace"][-1] == 12


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep-n", "--sizes", "0"],
        ["sweep-n", "--trials", "0"],
        ["sweep-n", "--q", "3"],
        ["sweep-n", "--d", "-1"],
        ["sweep-n", "--topology", "file"],
        ["sweep-power", "--sizes", "3,4"],
        ["sweep-n", "--power-dbm=0", "--power-w", "1"],
        ["sweep-n", "--config", "/nonexistent.json"],
    ],
)
def test_invalid_specs_exit_nonzero(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_unknown_config_key(tmp_path):
    from ncsim.cli import build_parser, spec_from_args

    cfg = tmp_path / "c.json"
    cfg.write_text('{"sizez": [3]}')
    with pytest.raises(SpecError):
        spec_from_args(build_parser().parse_args(["sweep-n", "--config", str(cfg)]), environ={})


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ncsim", "bound", "--sizes", "2", "--power-w", "1", "--d", "1"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.splitlines()[0] == ",".join(COLUMNS)
