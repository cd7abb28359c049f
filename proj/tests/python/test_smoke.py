import json
import os
import shutil
import subprocess

import numpy as np
import pytest

import commprobe as cp


def two_cliques():
    edges = []
    for block in ("a", "b"):
        names = [f"{block}{i}" for i in range(5)]
        for i in range(5):
            for j in range(i + 1, 5):
                edges.append((names[i], names[j], 1))
    edges.append(("a0", "b0", 1))
    return edges


def test_clean_text_and_pseudonym():
    assert cp.clean_text(cp.clean_text("  Hello   @bob https://x.co  ")) == cp.clean_text("  Hello   @bob https://x.co  ")
    p = cp.pseudonym("secret", "12345")
    assert p.startswith("u") and len(p) == 17
    assert p == cp.pseudonym("secret", "12345")
    assert p != cp.pseudonym("other", "12345")


def test_louvain_finds_two_cliques():
    edges = two_cliques()
    assignment, q = cp.louvain(edges, seed=3)
    assert len(set(assignment.values())) == 2
    assert len({assignment[f"a{i}"] for i in range(5)}) == 1
    assert assignment["a1"] != assignment["b1"]
    assert cp.modularity(edges, assignment) == pytest.approx(q, abs=1e-12)
    # 20 intra edges of 21: Q = 2 * (10/21 - (21/42)^2)
    assert q == pytest.approx(2 * (10 / 21 - 0.25), abs=1e-12)


def test_fid_self_and_shift():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(50, 4))
    assert cp.fid(a, a) == pytest.approx(0.0, abs=1e-8)
    assert cp.fid(a, a + 1.0) == pytest.approx(4.0, rel=1e-6)
    with pytest.raises(ValueError):
        cp.fid(a[:1], a)


def test_toxicity_and_jsd():
    kept, counts = cp.toxicity_histogram([0.05, 0.049, 0.9, 0.0])
    assert kept == [0.05, 0.9]
    assert len(counts) == 20 and sum(counts) == 2
    assert cp.jsd([1, 0], [0, 1]) == pytest.approx(1.0, rel=1e-6)


def test_screener_scoring():
    pro_ed = {"Q5": "e", "Q6": "e", "Q7": "g", "Q8": "d", "Q9": "d"}
    # option counts 5, 5, 7, 4, 5 on the linear 0..100 map
    expected = (100 + 100 + 100 + 100 + 75) / 5
    assert cp.wcs_score(pro_ed) == pytest.approx(expected)
    assert cp.wcs_score({"Q5": "a", "Q6": "a", "Q7": "a", "Q8": "a", "Q9": "a"}) == 0.0
    yes4 = {"Q11a": "yes", "Q11b": "yes", "Q11c": "yes", "Q11d": "no"}
    assert cp.criteria({"Q6": "c", "Q8": "c", **yes4}) == (True, True, True)
    assert cp.criteria({"Q6": "b", "Q8": "b", "Q11a": "yes", "Q11b": "no", "Q11c": "no", "Q11d": "yes"}) == (
        False,
        False,
        False,
    )
    with pytest.raises(ValueError):
        cp.wcs_score({"Q5": "zz"})


def test_parse_and_prompt():
    assert cp.parse_answer("(c) Once a week", 5) == "c"
    assert cp.parse_answer("no idea", 5) is None
    assert len(cp.questionnaire_checksum()) == 64
    prompt = cp.render_prompt("Keto & Diet", 5)
    assert "Keto & Diet" in prompt


def test_select_quality_prefix():
    ppl = {f"p{i}": 1.0 + (i * 37) % 101 for i in range(100)}
    chosen = cp.select_quality(ppl, cap=10)
    assert len(chosen) == 10
    assert sorted(ppl[c] for c in chosen) == sorted(ppl.values())[:10]


def test_alpaca_export_check():
    good = json.dumps([{"instruction": "Classify: text", "input": "", "output": "Body Image"}])
    assert cp.check_alpaca_export(good) == []
    assert cp.check_alpaca_export(json.dumps([{"instruction": "x"}]))


def test_stage_list():
    assert cp.stages()[0] == "ingest"
    assert "build-dataset" in cp.stages()


def test_pipeline_end_to_end(tmp_path):
    tool = os.environ.get("COMMPROBE_MAKE_FIXTURE") or shutil.which("make_fixture")
    if not tool or not os.path.exists(tool):
        pytest.skip("make_fixture not available")
    fx = tmp_path / "fx"
    subprocess.run(
        [tool, str(fx), "--posts", "3000", "--tweets-per-topic", "4", "--swed-samples", "9",
         "--classification-per-community", "40"],
        check=True,
        capture_output=True,
    )
    cp.set_log_level("error")
    config = fx / "commprobe.toml"
    with pytest.raises(cp.MissingArtifact):
        cp.run_stage("screen", str(config), out=str(tmp_path / "out"))
    outcomes = cp.run_stage("all", str(config), out=str(tmp_path / "out"))
    assert [o["stage"] for o in outcomes] == cp.stages()
    assert not any(o["incomplete"] for o in outcomes)
    assert (tmp_path / "out" / "manifests" / "report.json").exists()
