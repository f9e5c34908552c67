import json
import xml.etree.ElementTree as ET

from rainbowmatch.cli import main
from rainbowmatch.model import load_instance


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    assert "Subcommands" in out or "subcommand" in out or "usage" in out


def test_gen_partite_round_trips(tmp_path, capsys):
    path = tmp_path / "inst.json"
    code, _, _ = run(capsys, "gen", "--n", "3", "--m", "5", "--seed", "7", "--out", str(path))
    assert code == 0
    H = load_instance(path)
    assert H.n == 3 and H.k == 2 and len(H.edges) == 5


def test_gen_graph_complete_default(tmp_path, capsys):
    path = tmp_path / "g.json"
    code, _, _ = run(capsys, "gen", "--mode", "graph", "--n", "5", "--out", str(path))
    assert code == 0
    H = load_instance(path)
    assert H.mode == "graph" and len(H.edges) == 10


def test_gen_graph_rejects_p(capsys):
    code, _, err = run(capsys, "gen", "--mode", "graph", "--n", "4", "--p", "0.5")
    assert code == 2
    assert "partite-only" in err


def test_count_both_methods(tmp_path, capsys):
    path = tmp_path / "inst.json"
    run(capsys, "gen", "--n", "3", "--seed", "1", "--out", str(path))
    code, out, _ = run(capsys, "count", str(path))
    assert code == 0
    brute = json.loads(out)
    code, out, _ = run(capsys, "count", str(path), "--method", "ie")
    ie = json.loads(out)
    assert code == 0
    assert brute["value"] == ie["value"]
    assert brute["method"] == "brute"
    assert ie["method"] == "color-inclusion-exclusion"


def test_solve_exit_codes(tmp_path, capsys):
    found = tmp_path / "found.json"
    found.write_text(json.dumps({
        "mode": "partite", "n": 2, "k": 2, "colors": 2,
        "edges": [{"verts": [1, 1], "color": 1}, {"verts": [2, 2], "color": 2},
                  {"verts": [1, 2], "color": 1}, {"verts": [2, 1], "color": 2}],
    }))
    code, out, _ = run(capsys, "solve", str(found))
    assert code == 0
    assert json.loads(out)["outcome"] == "found"

    absent = tmp_path / "absent.json"
    absent.write_text(json.dumps({
        "mode": "partite", "n": 2, "k": 2, "colors": 2,
        "edges": [{"verts": [1, 1], "color": 1}, {"verts": [2, 2], "color": 1},
                  {"verts": [1, 2], "color": 2}, {"verts": [2, 1], "color": 2}],
    }))
    code, out, _ = run(capsys, "solve", str(absent))
    assert code == 1
    assert json.loads(out)["outcome"] == "absent"


def test_solve_latin(tmp_path, capsys):
    csv = tmp_path / "m.csv"
    csv.write_text("1,0\n0,2\n")
    code, out, _ = run(capsys, "solve", "--latin", str(csv))
    assert code == 0
    assert json.loads(out)["cells"] == [[1, 1], [2, 2]]
    csv.write_text("1,2\n2,1\n")
    code, out, _ = run(capsys, "solve", "--latin", str(csv))
    assert code == 1


def test_solve_requires_exactly_one_input(capsys):
    code, _, err = run(capsys, "solve")
    assert code == 2 and "exactly one" in err


def test_trace_headers(tmp_path, capsys):
    steps = tmp_path / "steps.csv"
    summary = tmp_path / "summary.csv"
    code, _, _ = run(
        capsys, "trace", "--n", "2", "--trials", "1", "--seed", "3",
        "--out", str(steps), "--summary-out", str(summary),
    )
    assert code == 0
    assert steps.read_text().splitlines()[0] == "i,phi,xi,gamma,p_i,w_max,w_avg,w_med,B,R,C"
    assert summary.read_text().splitlines()[0] == (
        "i,gamma,mean_xi,se_xi,trials_positive,sum_gamma_exact,sum_gamma_closed"
    )
    code, _, _ = run(
        capsys, "trace", "--n", "2", "--trials", "2", "--seed", "3", "--out", str(steps)
    )
    assert steps.read_text().splitlines()[0].startswith("trial,i,phi")


def test_threshold_header_and_determinism(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["threshold", "--n", "3", "--m", "2,5,9", "--trials", "15", "--seed", "5"]
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--jobs", "2", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == "n,k,kappa,m,trials,successes,p_hat,se,absent,budget"


def test_mean_count_csv_and_json(tmp_path, capsys):
    out = tmp_path / "mc.csv"
    code, _, _ = run(capsys, "mean-count", "--n", "2,3", "--trials", "10",
                     "--seed", "2", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("n,k,kappa,trials,mean,expected_mean")
    assert len(lines) == 3
    code, text, _ = run(capsys, "mean-count", "--n", "2", "--trials", "5",
                        "--seed", "2", "--format", "json")
    assert code == 0
    data = json.loads(text)
    assert data["kind"] == "mean-count" and len(data["rows"]) == 1


def test_hamilton_csv_and_config_error(tmp_path, capsys):
    out = tmp_path / "h.csv"
    code, _, _ = run(capsys, "hamilton", "--n", "6", "--m", "12", "--trials", "4",
                     "--seed", "1", "--out", str(out))
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header.startswith("n,m,colors,mode,trials,success,edge_class_too_small")
    code, _, err = run(capsys, "hamilton", "--n", "5", "--m", "8", "--trials", "2")
    assert code == 2 and "retries" in err


def test_hamilton_json_telemetry(capsys):
    code, text, _ = run(capsys, "hamilton", "--n", "5", "--m", "9", "--trials", "3",
                        "--retries", "2", "--seed", "4", "--format", "json")
    assert code == 0
    data = json.loads(text)
    trials = data["cells"][0]["trials"]
    assert len(trials) == 3
    for t in trials:
        assert {"stage_reached", "sizes", "matchings_found", "hc_found",
                "attempts", "elapsed"} <= set(t)


def test_plot_svg_valid_and_deterministic(tmp_path, capsys):
    csv = tmp_path / "t.csv"
    run(capsys, "threshold", "--n", "3", "--m", "2,5,9", "--trials", "10",
        "--seed", "9", "--out", str(csv))
    svg1 = tmp_path / "p1.svg"
    svg2 = tmp_path / "p2.svg"
    args = ["plot", str(csv), "--x", "m", "--y", "p_hat", "--yerr", "se"]
    assert run(capsys, *args, "--out", str(svg1))[0] == 0
    assert run(capsys, *args, "--out", str(svg2))[0] == 0
    assert svg1.read_bytes() == svg2.read_bytes()
    root = ET.parse(svg1).getroot()
    assert root.tag.endswith("svg")


def test_plot_rejects_bad_input(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code, _, err = run(capsys, "plot", str(empty), "--x", "m", "--y", "p_hat")
    assert code == 2 and "no data" in err
    csv = tmp_path / "t.csv"
    csv.write_text("a,b\n1,2\n")
    code, _, err = run(capsys, "plot", str(csv), "--x", "a", "--y", "nope")
    assert code == 2 and "column" in err


def test_raw_stream_written(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    run(capsys, "threshold", "--n", "2", "--m", "1,4", "--trials", "3",
        "--seed", "0", "--raw-out", str(raw), "--out", str(tmp_path / "x.csv"))
    lines = [json.loads(ln) for ln in raw.read_text().splitlines()]
    assert len(lines) == 6  # one per (cell, trial)
