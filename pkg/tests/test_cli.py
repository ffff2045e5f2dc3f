"""CLI argument handling, exit codes, and CSV output targets."""

import pytest

from fcrbt.cli import build_parser, main, spec_from_args
from fcrbt.workload import WorkloadSpec

FAST = ["--ops", "200", "--key-max", "32", "--max-nodes", "16", "--seed", "3"]


def test_defaults_match_workload_spec():
    args = build_parser().parse_args([])
    spec = spec_from_args(args)
    assert spec == WorkloadSpec()


def test_flag_round_trip():
    args = build_parser().parse_args(
        [
            "--variants", "V2,V5",
            "--threads", "1,2,4,8",
            "--ops", "1000",
            "--insert-pct", "20",
            "--delete-pct", "20",
            "--get-pct", "60",
            "--key-min", "5",
            "--key-max", "50",
            "--max-nodes", "30",
            "--seed", "9",
            "--warmup", "false",
            "--watchdog-secs", "30",
        ]
    )
    spec = spec_from_args(args)
    assert spec.variants == ("V2", "V5")
    assert spec.thread_counts == (1, 2, 4, 8)
    assert spec.total_ops == 1000
    assert (spec.insert_pct, spec.delete_pct, spec.get_pct) == (20, 20, 60)
    assert (spec.key_min, spec.key_max) == (5, 50)
    assert spec.max_nodes == 30
    assert spec.seed == 9
    assert spec.warmup is False
    assert spec.watchdog_secs == 30.0


@pytest.mark.parametrize("text,expected", [("true", True), ("0", False),
                                           ("YES", True), ("off", False)])
def test_warmup_bool_spellings(text, expected):
    args = build_parser().parse_args(["--warmup", text])
    assert args.warmup is expected


def test_bad_bool_and_bad_int_list_rejected(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--warmup", "maybe"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--threads", "1,two"])
    capsys.readouterr()


def test_invalid_mix_exits_2_with_diagnostic(capsys):
    code = main(["--insert-pct", "50", "--delete-pct", "10", "--get-pct", "80"])
    captured = capsys.readouterr()
    assert code == 2
    assert captured.out == ""
    assert "must total 100" in captured.err


def test_stdout_sweep_exit_0(capsys):
    code = main(["--variants", "CoarseLock", "--threads", "1,2", *FAST])
    captured = capsys.readouterr()
    assert code == 0
    lines = captured.out.splitlines()
    assert len(lines) == 3  # header + 2 cells
    assert lines[0].startswith("variant,threads,")
    assert lines[1].split(",")[:2] == ["CoarseLock", "1"]
    assert "ops/s" in captured.err  # progress went to stderr, not the CSV


def test_failed_cell_exit_1_but_csv_still_written(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(
        ["--variants", "V9,CoarseLock", "--threads", "1", "--out", str(out), *FAST]
    )
    captured = capsys.readouterr()
    assert code == 1
    assert "FAILED" in captured.err
    data = out.read_bytes()
    assert b"\r" not in data  # LF endings
    lines = data.decode("utf-8").splitlines()
    assert len(lines) == 2  # header + the surviving CoarseLock row
    assert lines[1].startswith("CoarseLock,1,")


def test_unwritable_out_path_exits_2_before_sweeping(tmp_path, capsys):
    target = tmp_path / "no-such-dir" / "out.csv"
    code = main(["--variants", "CoarseLock", "--threads", "1",
                 "--out", str(target), *FAST])
    captured = capsys.readouterr()
    assert code == 2
    assert "cannot write" in captured.err
    assert "ops/s" not in captured.err  # failed before any cell ran


def test_out_file_same_rows_as_rerun(tmp_path):
    args = ["--variants", "V4", "--threads", "1", *FAST]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    pick = lambda line: [line.split(",")[i] for i in (0, 1, 2, 5, 6, 7)]
    rows_a = [pick(l) for l in a.read_text().splitlines()[1:]]
    rows_b = [pick(l) for l in b.read_text().splitlines()[1:]]
    assert rows_a == rows_b  # timing columns may differ; the mix may not
