import json

import pytest

from banachlim.cli import main
from banachlim.systems import system_from_json, validate_standard


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_validate_builtin_pass(tmp_path, capsys):
    job = _write(tmp_path, "sys.json", {"builtin": "l1_drop", "stages": 8})
    code, out = _run(capsys, "validate", job)
    assert code == 0
    report = json.loads(out)
    assert report["passed"]
    assert len(report["verdicts"]) == 7
    assert report["manifest"]["command"] == "validate"


def test_validate_random_quotient_flags(tmp_path, capsys):
    job = _write(tmp_path, "sys.json",
                 {"builtin": "random_quotient", "stages": 4, "seed": 3})
    code, out = _run(capsys, "validate", job)
    assert code == 0
    report = json.loads(out)
    assert all(v["quotient_ok"] for v in report["verdicts"])


def test_validate_corrupted_bond_fails(tmp_path, capsys):
    payload = {
        "kind": "inverse", "stages": 2,
        "spaces": [
            {"dim": 1, "spec": {"kind": "lp", "p": "1", "weights": ["1"]}},
            {"dim": 1, "spec": {"kind": "lp", "p": "1", "weights": ["1"]}},
        ],
        "bonds": [[["3"]]],           # operator norm 3 > 1
    }
    job = _write(tmp_path, "sys.json", payload)
    code, out = _run(capsys, "validate", job)
    assert code == 1
    report = json.loads(out)
    assert not report["verdicts"][0]["lipschitz_ok"]
    assert report["verdicts"][0]["stage"] == 1


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"kind": "inverse",\n  broken\n}')
    with pytest.raises(SystemExit) as exc:
        main(["validate", str(path)])
    assert ":2:" in str(exc.value)


def test_dualize_roundtrip(tmp_path, capsys):
    job = _write(tmp_path, "sys.json",
                 {"builtin": "linf_padding", "stages": 4})
    d1 = str(tmp_path / "d1.json")
    assert main(["dualize", job, "--out", d1]) == 0
    capsys.readouterr()
    dual = json.loads(open(d1).read())
    assert dual["kind"] == "inverse"
    # The dual of the padding direct system is a standard drop system.
    loaded = system_from_json(dual)
    assert all(v.lipschitz_ok for v in validate_standard(loaded))
    d2 = str(tmp_path / "d2.json")
    d3 = str(tmp_path / "d3.json")
    assert main(["dualize", d1, "--out", d2]) == 0
    assert main(["dualize", d2, "--out", d3]) == 0
    capsys.readouterr()
    assert open(d1).read() == open(d3).read()


def test_norms_exact_values(tmp_path, capsys):
    job = _write(tmp_path, "job.json", {
        "system": {"builtin": "l1_drop", "stages": 4},
        "vectors": [["1", "1/2", "0", "1"], ["2", "0", "0", "0"]],
    })
    code, out = _run(capsys, "norms", job)
    assert code == 0
    rows = json.loads(out)["vectors"]
    assert rows[0]["limit_lower_bound"]["exact"] == "5/2"
    assert rows[1]["stage_norms"] == [{"exact": "2", "float": 2.0}] * 4


_SQUARE_MAP = {
    "source": {"dim": 2, "label": "a",
               "spec": {"kind": "lp", "p": "1", "weights": ["1", "1"]}},
    "target": {"dim": 2, "label": "b",
               "spec": {"kind": "lp", "p": "inf", "weights": ["1", "1"]}},
    "matrix": [["1", "1"], ["1", "-1"]],
}


def test_opnorm_report(tmp_path, capsys):
    job = _write(tmp_path, "map.json", _SQUARE_MAP)
    code, out = _run(capsys, "opnorm", job)
    assert code == 0
    report = json.loads(out)
    assert report["value"]["exact"] == "1"
    assert report["certificate_kind"] == "exact"
    assert report["witness"] is not None


def test_quotient_check_exit_codes(tmp_path, capsys):
    job = _write(tmp_path, "map.json", _SQUARE_MAP)
    code, out = _run(capsys, "quotient-check", job)
    assert code == 0
    assert json.loads(out)["quotient"]["verdict"]
    shrunk = dict(_SQUARE_MAP, matrix=[["1/2", "0"], ["0", "1/2"]])
    job2 = _write(tmp_path, "map2.json", shrunk)
    code, out = _run(capsys, "quotient-check", job2)
    assert code == 1
    assert not json.loads(out)["quotient"]["verdict"]


def test_determine_canonical_counterexample(tmp_path, capsys):
    job = _write(tmp_path, "q.json", {
        "canonical": "prefix_obstruction", "n": 2,
        "certify": {"delta": "1/10"},
    })
    code, out = _run(capsys, "determine", job)
    assert code == 1
    report = json.loads(out)
    cx = report["certify"]["counterexample"]
    assert cx["violation"]["float"] >= 0.9


def test_determine_certificate_exit_zero(tmp_path, capsys):
    job = _write(tmp_path, "q.json", {
        "system": {"builtin": "l1_drop", "stages": 4},
        "generator": {"tail": [["1"], ["0"], ["0"], ["0"]]},
        "rho": ["1/2", "1/2"], "eps": "3/4",
        "certify": {"delta": "1/10"},
    })
    code, out = _run(capsys, "determine", job)
    assert code == 0
    assert json.loads(out)["certify"]["kind"] == "certificate"


def test_determine_search_mode(tmp_path, capsys):
    job = _write(tmp_path, "q.json", {
        "canonical": "prefix_obstruction", "n": 3, "mode": "search",
    })
    code, out = _run(capsys, "determine", job, "--seed", "5")
    assert code == 1
    report = json.loads(out)
    assert report["search"]["kind"] == "counterexample"
    assert report["manifest"]["seed"] == 5
    # Search cannot certify: a clean instance exits 2.
    job2 = _write(tmp_path, "q2.json", {
        "system": {"builtin": "l1_drop", "stages": 4},
        "generator": {"tail": [["1"], ["0"], ["0"], ["0"]]},
        "rho": ["1/2", "1/2"], "eps": "3/4", "mode": "search",
    })
    code, _ = _run(capsys, "determine", job2)
    assert code == 2


def test_reports_byte_identical(tmp_path, capsys):
    job = _write(tmp_path, "q.json", {
        "canonical": "prefix_obstruction", "n": 2,
        "certify": {"delta": "1/10"},
    })
    out_path = str(tmp_path / "rep.json")
    main(["determine", job, "--out", out_path])
    first = open(out_path).read()
    main(["determine", job, "--out", out_path])
    assert open(out_path).read() == first
    capsys.readouterr()


_FLIP_GEN = [[["1", "0"]], [["1", "0"], ["0", "1"]],
             [["1", "0"], ["0", "1"], ["1", "1"]]]


def test_gfda_check_exit_codes(tmp_path, capsys):
    from banachlim.scalar import format_scalar
    from banachlim.systems import generator_from_tail
    sys12 = system_from_json({"builtin": "l1_drop", "stages": 12})
    gen = generator_from_tail(
        sys12, [["1", "0"], ["0", "1"]] + [["0", "0"]] * 10)
    mats = [[[format_scalar(v) for v in row] for row in gen.matrix(i)]
            for i in range(1, 13)]
    good = _write(tmp_path, "good.json", {
        "system": {"builtin": "l1_drop", "stages": 12},
        "generator": mats,
        "stages": 2,
        "query": {"rho": ["1/100", "1/100"], "eps": "1",
                  "certify": {"delta": "1/40"}},
    })
    code, out = _run(capsys, "gfda-check", good)
    assert code == 0
    assert json.loads(out)["passes"]

    bad = _write(tmp_path, "bad.json", {
        "system": {"builtin": "linf_drop", "stages": 3},
        "generator": _FLIP_GEN,
        "stages": 3,
        "query": {"rho": ["1/2", "1/2"], "eps": "1/4",
                  "certify": {"delta": "1/10"}},
    })
    code, out = _run(capsys, "gfda-check", bad)
    assert code == 1
    report = json.loads(out)
    assert not report["stage_verdicts"][1]["verdict"]


def test_anp_dp_report(tmp_path, capsys):
    ones = [["1"] * k + ["0"] * (5 - k) for k in range(1, 6)]
    job = _write(tmp_path, "seq.json", {
        "system": {"builtin": "linf_drop", "stages": 5},
        "sequence": ones + [ones[-1], ones[-1]],
    })
    code, out = _run(capsys, "anp-dp", job)
    assert code == 0
    report = json.loads(out)
    assert report["dp"]["uniform_within_tol"]
    assert report["anp"]["norm_converges"]
    assert report["equivalence"]["agree"]
    assert report["equivalence"]["identity_holds"]


def test_curves_scan_and_csv(tmp_path, capsys):
    job = _write(tmp_path, "cur.json", {
        "curve": "canonical_c0", "ts": [0.0, 0.25],
        "m_range": [4, 8], "stage": 12,
    })
    out_path = str(tmp_path / "scan.json")
    code = main(["curves", job, "--out", out_path])
    capsys.readouterr()
    assert code == 0
    report = json.loads(open(out_path).read())
    assert report["classifications"][0] == "obstructed"
    csv_text = open(str(tmp_path / "scan.csv")).read()
    assert csv_text.startswith("t,m,gap,classification")


def test_curves_custom_constant(tmp_path, capsys):
    job = _write(tmp_path, "cur.json", {
        "curve": {"system": {"builtin": "l1_drop", "stages": 5},
                  "amplitudes": [0, 0, 0, 0, 0],
                  "frequencies": [1, 1, 1, 1, 1]},
        "ts": [0.0, 0.5], "m_range": [2, 5],
    })
    code, out = _run(capsys, "curves", job)
    assert code == 0
    report = json.loads(out)
    assert all(g == 0 for row in report["gaps"] for g in row)
    assert set(report["classifications"]) == {"decaying"}


def test_bad_job_exits_three(tmp_path, capsys):
    job = _write(tmp_path, "bad.json", {"nonsense": True})
    assert main(["determine", job]) == 3
    capsys.readouterr()
