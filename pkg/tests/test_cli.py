import json

import pytest

from zigzag_engine.cli import RunConfig, main, run


def invoke(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr().out
    return status, json.loads(out), out


def test_classify_worked_instance(capsys):
    status, doc, _ = invoke(capsys, "classify", "--p", "5", "--r", "23", "--ap", "5*pi")
    assert status == 0
    assert doc["schema"] == 1
    assert doc["branch"] == 4
    assert doc["descriptor"]["scalar"]["roots"] == [2, 3]


def test_classify_output_is_deterministic(capsys, tmp_path):
    path = tmp_path / "out.json"
    argv = ["classify", "--p", "5", "--r", "23", "--ap", "pi^3*(1 + 1*pi)", "--json", str(path)]
    _, _, first = invoke(capsys, *argv)
    _, _, second = invoke(capsys, *argv)
    assert first == second
    assert path.read_text() == first


def test_check_identities(capsys):
    status, doc, _ = invoke(capsys, "check-identities", "--p-list", "5,7", "--n", "1", "--t", "0", "--jobs", "2")
    assert status == 0
    assert doc["pass"] is True


def test_verify_lemma_by_regime(capsys):
    status, doc, _ = invoke(capsys, "verify-lemma", "xi", "--p", "5", "--r", "23", "--regime", "tau>t+1")
    assert status == 0
    assert doc["pass"] is True


def test_verify_lemma_failure_exits_one(capsys):
    status, doc, _ = invoke(capsys, "verify-lemma", "chi", "--p", "5", "--r", "11", "--ap", "pi^3")
    assert status == 1
    assert doc["pass"] is False


def test_verify_lemma_precondition_exits_two(capsys):
    status, doc, _ = invoke(capsys, "verify-lemma", "phi", "--p", "5", "--r", "23", "--ap", "pi^3")
    assert status == 2
    assert "PreconditionError" in doc["error"]


def test_bounded_search(capsys):
    status, doc, _ = invoke(capsys, "verify-lemma", "bounded-search", "--p", "5", "--radius", "2")
    assert status == 0
    status, doc, _ = invoke(capsys, "verify-lemma", "bounded-search", "--p", "5", "--radius", "1", "--control")
    assert status == 0


def test_verify_prop(capsys):
    status, doc, _ = invoke(capsys, "verify-prop", "F3_ge_t1", "--p", "5", "--r", "23", "--ap", "pi^3")
    assert status == 0


def test_q_structure(capsys):
    status, doc, _ = invoke(capsys, "q-structure", "--p", "5", "--r", "11")
    assert status == 0


def test_hecke_apply_from_file(capsys, tmp_path):
    r = 4
    src = {"p": 5, "r": r, "vertices": [{"side": 0, "depth": 0, "digits": [], "poly": ["0"] * r + ["1"]}]}
    path = tmp_path / "f.json"
    path.write_text(json.dumps(src))
    status, doc, _ = invoke(capsys, "hecke-apply", "--input", str(path), "--which", "T-")
    assert status == 0
    image = doc["image"]
    assert len(image["vertices"]) == 1
    v = image["vertices"][0]
    assert (v["side"], v["depth"]) == (1, 0)
    assert v["poly"][r] == "pi^0 * (1)"
    # the output is valid input; T- maps alpha one step further out
    path.write_text(json.dumps(image))
    status, doc, _ = invoke(capsys, "hecke-apply", "--input", str(path), "--which", "T-")
    assert [(w["side"], w["depth"], w["digits"]) for w in doc["image"]["vertices"]] == [(1, 1, [0])]


def test_missing_required_argument_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--p", "5", "--r", "23"])
    assert exc.value.code == 2


def test_run_returns_error_document():
    status, doc = run(RunConfig("verify-prop", p=5, target="F1"))
    assert status == 2
    assert doc["schema"] == 1 and "error" in doc


def test_config_rejects_bad_jobs():
    with pytest.raises(ValueError):
        RunConfig("check-identities", jobs=0)
