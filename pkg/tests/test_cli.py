import numpy as np
import pytest

from headpose4.cli import main
from headpose4.estimator import DEFAULT_MODEL
from headpose4.formats import read_landmarks, read_predictions


def write(path, text):
    path.write_text(text)
    return str(path)


def landmarks_text(rows):
    return "image_id,label,u,v\n" + "".join(f"{i},{l},{u},{v}\n" for i, l, u, v in rows)


def model_rows(image_id="a"):
    return [(image_id, label, x, y) for label, (x, y, _) in zip(DEFAULT_MODEL.labels, DEFAULT_MODEL.points)]


def test_empty_landmarks_file(tmp_path, capsys):
    code = main(["estimate", "--landmarks", write(tmp_path / "lm.csv", ""), "--out", str(tmp_path / "p.csv")])
    assert code == 1
    assert "no records" in capsys.readouterr().err


def test_header_only_landmarks_file(tmp_path, capsys):
    code = main(["estimate", "--landmarks", write(tmp_path / "lm.csv", "image_id,label,u,v\n"),
                 "--out", str(tmp_path / "p.csv")])
    assert code == 1 and "no records" in capsys.readouterr().err


def test_malformed_line_reports_line_number(tmp_path, capsys):
    text = landmarks_text(model_rows()) + "a,chin,1.5\n"
    code = main(["estimate", "--landmarks", write(tmp_path / "lm.csv", text), "--out", str(tmp_path / "p.csv")])
    assert code == 1
    assert "lm.csv:6:" in capsys.readouterr().err


def test_non_numeric_coordinate(tmp_path, capsys):
    rows = model_rows()
    rows[1] = ("a", "nose_tip", "1,5", 0)
    text = "image_id,label,u,v\n" + "".join(f'{i},{l},"{u}",{v}\n' for i, l, u, v in rows)
    code = main(["estimate", "--landmarks", write(tmp_path / "lm.csv", text), "--out", str(tmp_path / "p.csv")])
    assert code == 1 and "lm.csv:3:" in capsys.readouterr().err


def test_missing_label_gives_failure_row(tmp_path, capsys):
    rows = model_rows("a") + model_rows("b")[:3]
    out = tmp_path / "p.csv"
    code = main(["estimate", "--landmarks", write(tmp_path / "lm.csv", landmarks_text(rows)), "--out", str(out)])
    assert code == 2
    assert "right_canthus" in capsys.readouterr().err
    preds = read_predictions(out)
    assert preds["a"].ok and not preds["b"].ok
    assert "right_canthus" in preds["b"].error
    assert "b,nan,nan,nan,0,nan,error: [input]" in out.read_text()


def test_estimate_header_and_columns(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["estimate", "--landmarks", write(tmp_path / "lm.csv", landmarks_text(model_rows())),
                 "--out", str(out), "--timing"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ("# headpose4 0.1.0 estimate eta=1.77 tol=1e-06 max_iter=100 constraints=symmetric "
                        "morph=on model=default")
    assert lines[1] == "image_id,pitch,yaw,roll,iterations,final_objective,converged,wall_time_ms"
    assert read_predictions(out)["a"].wall_time_ms > 0


def test_custom_model_file(tmp_path):
    model = tmp_path / "m.csv"
    model.write_text("label,x,y,z\n" + "".join(f"{l},{x},{y},{z}\n" for l, (x, y, z)
                                              in zip(DEFAULT_MODEL.labels, DEFAULT_MODEL.points)))
    lm = write(tmp_path / "lm.csv", landmarks_text(model_rows()))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["estimate", "--landmarks", lm, "--out", str(a)]) == 0
    assert main(["estimate", "--landmarks", lm, "--out", str(b), "--model", str(model)]) == 0
    assert a.read_text().splitlines()[1:] == b.read_text().splitlines()[1:]
    assert "model=m.csv" in b.read_text().splitlines()[0]


def truth_file(tmp_path, rows):
    return write(tmp_path / "truth.csv", "image_id,pitch,yaw,roll\n" + "".join(f"{r}\n" for r in rows))


def pred_file(tmp_path, rows):
    head = "image_id,pitch,yaw,roll,iterations,final_objective,converged\n"
    return write(tmp_path / "pred.csv", head + "".join(f"{r},3,1.0e-02,true\n" for r in rows))


def test_eval_identical_predictions(tmp_path, capsys):
    rows = ["a,1.0,2.0,3.0", "b,-4.0,5.0,-6.0"]
    assert main(["eval", "--pred", pred_file(tmp_path, rows), "--truth", truth_file(tmp_path, rows)]) == 0
    out = capsys.readouterr().out
    assert out == "# headpose4 eval n=2 failed=0\nangle,mae,std\npitch,0.00,0.00\nyaw,0.00,0.00\nroll,0.00,0.00\n"


def test_eval_hand_computed(tmp_path, capsys):
    truth = truth_file(tmp_path, ["a,0,0,0", "b,0,0,0"])
    pred = pred_file(tmp_path, ["a,2,0,0", "b,-4,0,0"])
    report = tmp_path / "r.csv"
    assert main(["eval", "--pred", pred, "--truth", truth, "--out", str(report)]) == 0
    assert "pitch,3.00,1.00\n" in report.read_text()
    assert report.read_text() == capsys.readouterr().out


def test_eval_skips_failure_rows(tmp_path, capsys):
    truth = truth_file(tmp_path, ["a,0,0,0", "b,0,0,0"])
    head = "image_id,pitch,yaw,roll,iterations,final_objective,converged\n"
    pred = write(tmp_path / "pred.csv", head + "a,1,0,0,2,1e-3,true\nb,nan,nan,nan,0,nan,\"error: [x] y\"\n")
    assert main(["eval", "--pred", pred, "--truth", truth]) == 0
    assert capsys.readouterr().out.startswith("# headpose4 eval n=1 failed=1\n")


def test_eval_disjoint_ids(tmp_path, capsys):
    truth = truth_file(tmp_path, ["a,0,0,0"])
    pred = pred_file(tmp_path, ["z,0,0,0"])
    assert main(["eval", "--pred", pred, "--truth", truth]) == 1
    err = capsys.readouterr().err
    assert "no prediction for: a" in err and "no ground truth for: z" in err


def test_synth_identity_is_model_xy(tmp_path):
    poses = truth_file(tmp_path, ["id0,0,0,0"])
    out = tmp_path / "lm.csv"
    assert main(["synth", "--poses", poses, "--out", str(out), "--truth", str(tmp_path / "t.csv"),
                 "--scale", "1", "--center", "0,0"]) == 0
    got = read_landmarks(out)["id0"]
    for label, (x, y, _) in zip(DEFAULT_MODEL.labels, DEFAULT_MODEL.points):
        assert got[label] == pytest.approx((x, y), abs=1e-9)


@pytest.mark.parametrize("extra", [[], ["--projection", "full"], ["--morph-rad", "0.1"]])
def test_synth_seed_determinism(tmp_path, extra):
    poses = truth_file(tmp_path, ["a,10,20,-5", "b,-15,0,30"])
    outs = []
    for k in range(2):
        out = tmp_path / f"lm{k}.csv"
        assert main(["synth", "--poses", poses, "--out", str(out), "--truth", str(tmp_path / f"t{k}.csv"),
                     "--noise-px", "1.0", "--seed", "42", *extra]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    other = tmp_path / "lm_other.csv"
    main(["synth", "--poses", poses, "--out", str(other), "--truth", str(tmp_path / "t.csv"),
          "--noise-px", "1.0", "--seed", "43", *extra])
    assert other.read_bytes() != outs[0]


def test_synth_estimate_eval_round_trip(tmp_path, data_dir, capsys):
    lm, truth, pred = tmp_path / "lm.csv", tmp_path / "truth.csv", tmp_path / "pred.csv"
    assert main(["synth", "--poses", str(data_dir / "grid125_poses.csv"), "--out", str(lm),
                 "--truth", str(truth)]) == 0
    assert main(["estimate", "--landmarks", str(lm), "--out", str(pred)]) == 0
    capsys.readouterr()
    assert main(["eval", "--pred", str(pred), "--truth", str(truth)]) == 0
    assert capsys.readouterr().out == (data_dir / "grid125_report.csv").read_text()


def test_missing_file(tmp_path, capsys):
    assert main(["eval", "--pred", str(tmp_path / "nope.csv"), "--truth", str(tmp_path / "nope.csv")]) == 1
    assert "headpose4:" in capsys.readouterr().err


def test_bad_center_argument(tmp_path):
    with pytest.raises(SystemExit):
        main(["synth", "--poses", "x", "--out", "y", "--truth", "z", "--center", "1"])


def test_predictions_are_parseable_numbers(tmp_path):
    out = tmp_path / "p.csv"
    main(["estimate", "--landmarks", write(tmp_path / "lm.csv", landmarks_text(model_rows())), "--out", str(out)])
    p = read_predictions(out)["a"]
    assert np.isfinite(p.angles.as_array()).all() and p.converged and p.iterations >= 1
