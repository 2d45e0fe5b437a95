import os

from vppflow.cli import main
from vppflow.diagnostics import CSV_COLUMNS

ZERO_RUN = """
[grid]
nx = 8
ny = 8

[scheme]
dt = 0.01
T = 0.1
"""

SWEEP = """
[grid]
nx = 16
ny = 16

[scheme]
dt = 0.025
T = 0.2
mu = 0.05

[initial]
type = taylor-green

[sweep]
parameter = dt
values = 0.025 0.0125 0.00625 0.003125
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_zero_run_writes_all_zero_csv(tmp_path):
    cfg = write(tmp_path, "run.ini", ZERO_RUN)
    out = str(tmp_path / "out")
    assert main(["run", "--config", cfg, "--out", out, "--quiet"]) == 0
    csv_path = os.path.join(out, "diagnostics.csv")
    lines = open(csv_path).read().strip().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 10
    for line in lines[1:]:
        fields = line.split(",")
        # all diagnostic columns (everything after n, t) are exactly zero
        assert all(float(v) == 0.0 for v in fields[2:])


def test_identical_config_gives_bit_identical_output(tmp_path):
    cfg = write(tmp_path, "run.ini", """
[grid]
nx = 16
ny = 16
[scheme]
dt = 0.02
T = 0.1
mu = 0.05
[initial]
type = taylor-green
""")
    out1 = str(tmp_path / "a")
    out2 = str(tmp_path / "b")
    assert main(["run", "--config", cfg, "--out", out1, "--quiet"]) == 0
    assert main(["run", "--config", cfg, "--out", out2, "--quiet"]) == 0
    b1 = open(os.path.join(out1, "diagnostics.csv"), "rb").read()
    b2 = open(os.path.join(out2, "diagnostics.csv"), "rb").read()
    assert b1 == b2


def test_dt_sweep_writes_summary_with_exponent(tmp_path):
    cfg = write(tmp_path, "sweep.ini", SWEEP)
    out = str(tmp_path / "out")
    assert main(["sweep", "--config", cfg, "--out", out, "--quiet"]) == 0
    lines = open(os.path.join(out, "sweep_summary.csv")).read().strip().splitlines()
    header = lines[0].split(",")
    assert "div_exponent" in header
    assert len(lines) == 1 + 4
    # per-run CSVs exist and are independent
    assert os.path.exists(os.path.join(out, "dt0_diagnostics.csv"))
    assert os.path.exists(os.path.join(out, "dt3_diagnostics.csv"))


def test_manufactured_study_sweep_emits_error_table(tmp_path):
    # selecting the manufactured initial data and forcing turns a dt sweep
    # into a convergence study: the summary carries the space-time error
    # against the exact vortex and its fitted temporal exponent
    cfg = write(tmp_path, "study.ini", """
[grid]
nx = 16
ny = 16
[scheme]
dt = 0.025
T = 0.1
mu = 0.1
[initial]
type = taylor-green
[forcing]
type = taylor-green
[sweep]
parameter = dt
values = 0.025 0.0125 0.00625
""")
    out = str(tmp_path / "out")
    assert main(["sweep", "--config", cfg, "--out", out, "--quiet"]) == 0
    lines = open(os.path.join(out, "sweep_summary.csv")).read().strip().splitlines()
    header = lines[0].split(",")
    assert "manufactured_error" in header
    assert "manufactured_error_exponent" in header
    idx = header.index("manufactured_error")
    errs = [float(ln.split(",")[idx]) for ln in lines[1:]]
    assert all(e > 0 for e in errs)
    assert errs[0] > errs[-1]


def test_sweep_members_match_standalone_runs(tmp_path):
    # sweep isolation: each member produces exactly the rows a standalone
    # run of the same configuration produces
    cfg = write(tmp_path, "sweep.ini", SWEEP)
    out = str(tmp_path / "out")
    assert main(["sweep", "--config", cfg, "--out", out, "--quiet"]) == 0
    single = write(tmp_path, "single.ini",
                   SWEEP.replace("dt = 0.025", "dt = 0.0125").split("[sweep]")[0])
    out_single = str(tmp_path / "single")
    assert main(["run", "--config", single, "--out", out_single, "--quiet"]) == 0
    member = open(os.path.join(out, "dt1_diagnostics.csv"), "rb").read()
    standalone = open(os.path.join(out_single, "diagnostics.csv"), "rb").read()
    assert member == standalone


def test_print_config_echoes_and_exits_zero(tmp_path, capsys):
    cfg = write(tmp_path, "run.ini", ZERO_RUN)
    assert main(["print-config", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "effective configuration" in out
    assert "defaulted" in out


def test_invalid_config_exits_one(tmp_path, capsys):
    cfg = write(tmp_path, "bad.ini", ZERO_RUN.replace("dt = 0.01", "dt = -1"))
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_file_exits_three(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.ini"),
                 "--out", str(tmp_path)]) == 3


def test_solver_failure_exits_two(tmp_path, capsys):
    cfg = write(tmp_path, "hard.ini", """
[grid]
nx = 16
ny = 16
[scheme]
dt = 0.01
T = 0.05
mu = 1.0
[initial]
type = taylor-green
[solver]
max_iter = 1
prediction_rtol = 1e-12
""")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "solver failure" in capsys.readouterr().err


def test_run_verb_rejects_sweep_configs(tmp_path, capsys):
    cfg = write(tmp_path, "sweep.ini", SWEEP)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_verify_subset_prints_pass_lines(tmp_path, capsys):
    assert main(["verify", "--criteria", "A8"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] A8" in out


def test_vtk_dump_layout(tmp_path):
    cfg = write(tmp_path, "dump.ini", """
[grid]
nx = 4
ny = 4
[scheme]
dt = 0.05
T = 0.1
[output]
dump_every = 1
""")
    out = str(tmp_path / "out")
    assert main(["run", "--config", cfg, "--out", out, "--quiet"]) == 0
    path = os.path.join(out, "fields_000001.vtk")
    lines = open(path).read().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_POINTS"
    assert lines[4] == "DIMENSIONS 4 4 1"
    assert lines[7].startswith("POINT_DATA 16")
    assert "SCALARS pressure double 1" in lines
    assert "VECTORS velocity double" in lines


def test_file_initial_condition_roundtrip(tmp_path):
    import numpy as np
    from vppflow.grid import Grid
    from vppflow.manufactured import random_solenoidal

    g = Grid(8, 8)
    vel = random_solenoidal(g, np.random.default_rng(5))
    npz = tmp_path / "init.npz"
    np.savez(npz, u=vel.u, v=vel.v, p=np.zeros(g.shape_p))
    cfg = write(tmp_path, "file.ini", f"""
[grid]
nx = 8
ny = 8
[scheme]
dt = 0.01
T = 0.05
[initial]
type = file
path = {npz}
""")
    out = str(tmp_path / "out")
    assert main(["run", "--config", cfg, "--out", out, "--quiet"]) == 0
    lines = open(os.path.join(out, "diagnostics.csv")).read().strip().splitlines()
    assert len(lines) == 1 + 5
    # the loaded field actually drives the run: nonzero kinetic energy
    first = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(first["kinetic_energy"]) > 0.0


def test_io_failure_leaves_partial_output_marker(tmp_path):
    # CSV path points into a missing subdirectory: the write fails, the
    # run aborts with exit code 3 and drops a marker in the out dir
    cfg = write(tmp_path, "run.ini", ZERO_RUN + "\n[output]\ncsv = missing_dir/diag.csv\n")
    out = str(tmp_path / "out")
    assert main(["run", "--config", cfg, "--out", out, "--quiet"]) == 3
    assert os.path.exists(os.path.join(out, "PARTIAL_OUTPUT"))


def test_snapshot_retention_guard(tmp_path):
    cfg = write(tmp_path, "big.ini", """
[grid]
nx = 96
ny = 96
[scheme]
dt = 0.05
T = 0.1
[output]
retain_snapshots = true
""")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
