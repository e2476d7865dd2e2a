import json

import pytest

from famdyn.cli import EXIT_ASSERTION, EXIT_OK, EXIT_USAGE, run
from famdyn.report import validate_report
from famdyn.sets import read_pgm

from conftest import famdyn

COMMANDS = [
    "orbit --family sq --z0 0.5 --budget 4",
    "omega --family rotations --z0 1 --budget 512 --cluster-eps 0.05",
    "invariant --family powersplus1 --points 1 --budget 4",
    "invariant --family sq --points 0 --direction backward --budget 4 --tol 1e-9",
    "nonwandering --family powers --z0 1 --budget 64",
    "universal --family rotations --region circle:0,0,1 --net circle:0,0,1 --eps 0.1 --budget 512",
    "hull --family sq --region rect:-1.5,-1.5,1.5,1.5 --start 0.5 --eps 0.1 --budget 8",
    "transitive --family ntimesz --z0 0 --radii 0.5,0.2 --net rect:-10,-10,10,10 --eps 0.5",
    "minimal --family rotations --region circle:0,0,1 --net circle:0,0,1 --budget 512",
    "densepre --family sq --region circle:0,0,1 --net circle:0,0,1 --budget 64",
    "mixing --family ntimesz --z0 0 --radii 0.2,0.1 --net1 1,-2i --net2 3,4+4i",
    "expanding --family ntimesz --z0 0 --K disk:0,0,10 --K-eps 2 --E inf --radii 0.5,0.2 --budget 128",
    "witness --family sq --z0 0.5 --U 0.5,0,0.1 --V 0,0,0.1 --budget 10",
    "closure --family powersplus1 --target 1 --region disk:0,0,0.5 --eps 1e-2",
    "marty --family ntimesz --z0 0 --radius 0.1",
    "normal --family powers --z0 0 --radii 0.5",
    "omitted --family powers --region disk:0,0,0.9 --codomain rect:-2,-2,2,2",
    "montel --family powers --region disk:0,0,0.9 --codomain rect:-2,-2,2,2",
    "equiv --family powers --z0 1 --net1 0.5,0.3i --net2 2,-1.5",
]


def run_json(capsys, argv):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("cmd", COMMANDS, ids=lambda c: c.split()[0] + "-" + c.split()[2])
def test_command_emits_valid_report(capsys, cmd):
    code, out, err = run_json(capsys, cmd.split())
    assert code == EXIT_OK, err
    assert validate_report(json.loads(out)) == []


def test_omega_example(capsys):
    code, out, _ = run_json(capsys, "omega --family powersplus1 --z0 0.5+0i --budget 128 --cluster-eps 1e-6".split())
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["witnesses"][0]["omega"] == ["1.0+0.0i"]


def test_negative_values_accepted(capsys):
    code, out, err = run_json(capsys, ["julia", "--family", "sq", "--window", "-1.5,-1.5,1.5,1.5", "--px", "16"])
    assert code == EXIT_OK, err


def test_julia_writes_pgm_and_sidecar(tmp_path, capsys):
    pgm = tmp_path / "j.pgm"
    rep = tmp_path / "j.json"
    code, _, err = run_json(capsys, ["julia", "--family", "sqm1", "--window", "-1.5,-1.5,1.5,1.5", "--px", "32",
                                     "--out", str(pgm), "--json", str(rep)])
    assert code == EXIT_OK, err
    img = read_pgm(pgm.read_bytes())
    assert img.shape == (32, 32)
    side = json.loads((tmp_path / "j.pgm.json").read_text())
    assert side["marked_count"] == int((img > 0).sum())
    assert validate_report(json.loads(rep.read_text())) == []


@pytest.mark.parametrize("argv", [
    ["normal", "--family", "ntimesz", "--z0", "0", "--radii", "-1"],
    ["julia", "--family", "sq", "--window", "1,1,0,0"],
    ["orbit", "--family", "nosuchfamily", "--z0", "0"],
    ["orbit", "--family", "sq", "--z0", "1+2j"],
    ["frobnicate"],
    ["corpus", "--only", "nosuchentry"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run_json(capsys, argv)
    assert code == EXIT_USAGE
    assert json.loads(err.strip().splitlines()[-1])["error"] == "usage"


def test_family_file_argument(tmp_path, capsys):
    p = tmp_path / "fam.json"
    p.write_text(json.dumps({"name": "half", "kind": "iterates", "expr": "z/2"}))
    code, out, _ = run_json(capsys, ["orbit", "--family", str(p), "--z0", "1", "--budget", "3"])
    assert code == EXIT_OK
    assert "0.125+0.0i" in out


def test_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, stdout, _ = run_json(capsys, ["marty", "--family", "ntimesz", "--z0", "0", "--radius", "0.1",
                                        "--out", str(out)])
    assert code == EXIT_OK and stdout == ""
    assert validate_report(json.loads(out.read_text())) == []


def test_entry_point_subprocess():
    p = famdyn("orbit", "--family", "sq", "--z0", "2", "--budget", "3")
    assert p.returncode == EXIT_OK
    assert json.loads(p.stdout)["verdict"] == "holds-with-witness"
    p = famdyn("orbit")
    assert p.returncode == EXIT_USAGE


def test_exit_code_constants():
    assert (EXIT_OK, EXIT_USAGE, EXIT_ASSERTION) == (0, 1, 2)


def test_violated_assertion_exit_code(monkeypatch, capsys):
    import famdyn.cli as cli
    from famdyn.report import AnalysisReport

    def broken(a, fam):
        return AnalysisReport("montel", "fails-at-resolution", {}, [], ["IMPLICATION VIOLATED: test"])
    monkeypatch.setitem(cli.COMMANDS, "montel", broken)
    code, out, err = run_json(capsys, "montel --family powers --region disk:0,0,0.9 --codomain rect:-2,-2,2,2".split())
    assert code == EXIT_ASSERTION
    assert json.loads(out)["verdict"] == "fails-at-resolution"
    assert json.loads(err.strip().splitlines()[-1])["error"] == "assertion"
