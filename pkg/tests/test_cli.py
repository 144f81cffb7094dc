import io

import pytest

from compactfd.cli import main


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def test_kdim_table():
    code, text = run(["kdim", "--dim", "2", "--max-m", "8"])
    assert code == 0
    rows = text.splitlines()
    assert rows[0] == "M,K"
    assert [int(r.split(",")[1]) for r in rows[1:10]] == [8, 6, 4, 2, 1, 1, 1, 1, 0]


def test_kdim_without_corners():
    code, text = run(["kdim", "--dim", "3", "--max-m", "6", "--exclude-corners"])
    assert code == 0
    assert [int(r.split(",")[1]) for r in text.splitlines()[1:]] == [18, 15, 10, 4, 1, 1, 0, 0]


def test_convergence_example1(tmp_path):
    out = tmp_path / "conv.csv"
    code, text = run(
        ["convergence", "--problem", "example1", "--scheme", "1d-o12", "--n-start", "2", "--n-end", "16",
         "--solver", "direct", "--out", str(out)]
    )  # fmt: skip
    assert code == 0
    assert out.read_text() == text
    last = float(text.splitlines()[-1].split(",")[1])
    assert 9.7771e-12 / 10 <= last <= 9.7771e-12 * 10


def test_solve_writes_csv_and_matrix(tmp_path):
    csv, mtx = tmp_path / "s.csv", tmp_path / "A.mtx"
    argv = ["solve", "--problem", "example3", "--scheme", "3d-o4", "--n", "4", "--out", str(csv), "--dump-matrix", str(mtx)]
    code, text = run(argv)
    assert code == 0
    assert csv.read_text().startswith("h,error_inf,order,iterations,relres,seconds\n")
    assert mtx.read_text().startswith("%%MatrixMarket matrix coordinate real general")


def test_same_config_gives_identical_bytes(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        code, _ = run(["kdim", "--dim", "3", "--max-m", "4", "--out", str(path)])
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rows = []
    for path in paths:
        run(["solve", "--problem", "example3", "--scheme", "3d-o4", "--n", "8", "--threads", "1", "--out", str(path)])
        # the seconds column is wall time; every other column must match exactly
        rows.append([line.rsplit(",", 1)[0] for line in path.read_text().splitlines()])
    assert rows[0] == rows[1]


def test_gate_failure_exits_two(tmp_path, capsys):
    out = tmp_path / "never.csv"
    code, _ = run(["solve", "--problem", "example2", "--scheme", "2d-o6", "--n", "16", "--out", str(out)])
    assert code == 2
    assert "constant" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["solve", "--problem", "example1"],
        ["solve", "--problem", "example1", "--scheme", "1d-o14", "--n", "8"],
        ["solve", "--problem", "example1", "--scheme", "1d-o3", "--n", "8"],
        ["solve", "--problem", "example1", "--scheme", "2d-o4", "--n", "8"],
        ["solve", "--problem", "nowhere", "--scheme", "1d-o2", "--n", "8"],
        ["consistency", "--problem", "example1", "--scheme", "1d-o2", "--n-list", "8,x"],
        ["kdim", "--dim", "2", "--frobnicate"],
    ],
)
def test_usage_errors_exit_one(argv, tmp_path, capsys):
    out = tmp_path / "out.csv"
    code, _ = run(argv + ["--out", str(out)] if argv[0] != "bogus" else argv)
    assert code == 1
    assert capsys.readouterr().err
    assert not out.exists()


def test_problem_file_and_consistency(tmp_path):
    path = tmp_path / "prob.txt"
    path.write_text("dim = 2\nl1 = 0\nl2 = 1\na = exp(x+y)\nu = sin(2*x)*cos(3*y)\n")
    code, text = run(["consistency", "--problem", str(path), "--scheme", "2d-o6", "--n-list", "8,16,32"])
    assert code == 0
    slope = float(text.splitlines()[-1].split()[2])
    assert slope >= 7.7


def test_list_problems():
    code, text = run(["list-problems"])
    assert code == 0
    assert [line.split(":")[0] for line in text.splitlines()] == ["example1", "example2", "example3"]
