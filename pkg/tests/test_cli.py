from __future__ import annotations

import csv
import io
import json

import pytest

from storygauge.cli import main
from storygauge.metrics import CANONICAL_ORDER

from tests.conftest import DEMO_TEXTS


def write_backlog_csv(path, texts=DEMO_TEXTS, empty_rows=0):
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["id", "title", "description"])
    for i, text in enumerate(texts):
        writer.writerow([f"S{i}", f"Story {i}", text])
    for i in range(empty_rows):
        writer.writerow([f"E{i}", "leer", ""])
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


@pytest.fixture()
def trained_store(tmp_path):
    csv_path = write_backlog_csv(tmp_path / "backlog.csv")
    store = tmp_path / "store"
    code = main([
        "train", "--project", "p1", "--csv", str(csv_path),
        "--store", str(store), "--seed", "42", "--k", "3",
    ])
    assert code == 0
    return store


class TestImport:
    def test_writes_backlog_json(self, tmp_path, capsys):
        csv_path = write_backlog_csv(tmp_path / "b.csv")
        out = tmp_path / "backlog.json"
        assert main(["import", "--csv", str(csv_path), "--out", str(out)]) == 0
        data = json.loads(out.read_text(encoding="utf-8"))
        assert len(data["stories"]) == len(DEMO_TEXTS)

    def test_missing_column_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,title\n1,x\n", encoding="utf-8")
        assert main(["import", "--csv", str(bad)]) == 2
        assert "error" in capsys.readouterr().err

    def test_usage_error_exit_one(self, capsys):
        assert main(["import"]) == 1
        assert "usage" in capsys.readouterr().err


class TestTrain:
    def test_prints_version(self, tmp_path, capsys):
        csv_path = write_backlog_csv(tmp_path / "b.csv")
        store = tmp_path / "store"
        code = main(["train", "--project", "p1", "--csv", str(csv_path),
                     "--store", str(store)])
        assert code == 0
        assert capsys.readouterr().out.strip() == "1"

    def test_deterministic_artifacts(self, tmp_path, capsys):
        from storygauge.pipeline import load_bundle, serialize_bundle
        from tests.test_pipeline import strip_volatile

        csv_path = write_backlog_csv(tmp_path / "b.csv")
        store_a, store_b = tmp_path / "a", tmp_path / "b"
        for store in (store_a, store_b):
            main(["train", "--project", "p1", "--csv", str(csv_path),
                  "--store", str(store), "--seed", "42"])
        capsys.readouterr()
        one = serialize_bundle(load_bundle("p1", store_a))
        two = serialize_bundle(load_bundle("p1", store_b))
        assert strip_volatile(one) == strip_volatile(two)


class TestScore:
    def test_single_story_json(self, trained_store, tmp_path, capsys):
        story = tmp_path / "story.txt"
        story.write_text("Als Arzt möchte ich suchen, damit ich Zeit spare.",
                         encoding="utf-8")
        code = main(["score", "--project", "p1", "--store", str(trained_store),
                     "--in", str(story), "--format", "json"])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert len(report["metrics"]) == 8

    def test_json_validates_against_schema(self, trained_store, capsys):
        import jsonschema
        from importlib import resources

        code = main(["score", "--project", "p1", "--store", str(trained_store),
                     "--text", "Als Arzt möchte ich suchen."])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        schema = json.loads(
            resources.files("storygauge.data")
            .joinpath("quality_report.schema.json")
            .read_text(encoding="utf-8")
        )
        jsonschema.validate(report, schema)

    def test_table_format(self, trained_store, capsys):
        code = main(["score", "--project", "p1", "--store", str(trained_store),
                     "--text", "Als Arzt möchte ich suchen.",
                     "--format", "table"])
        assert code == 0
        out = capsys.readouterr().out
        for metric in CANONICAL_ORDER:
            assert metric.value in out

    def test_missing_bundle_exit_two(self, tmp_path, capsys):
        code = main(["score", "--project", "nix", "--store", str(tmp_path),
                     "--text", "hallo"])
        assert code == 2


class TestBatchScore:
    def test_row_per_story_and_header(self, trained_store, tmp_path, capsys):
        csv_path = write_backlog_csv(tmp_path / "b.csv")
        code = main(["score", "--project", "p1", "--store", str(trained_store),
                     "--csv", str(csv_path)])
        assert code == 0
        out = capsys.readouterr().out
        rows = list(csv.reader(io.StringIO(out)))
        assert len(rows) == 1 + len(DEMO_TEXTS)
        assert rows[0][:9] == ["id"] + [m.value for m in CANONICAL_ORDER]
        for row in rows[1:]:
            for cell in row[1:9]:
                value = float(cell)
                assert 0.0 <= value <= 1.0
                assert len(cell.split(".")[1]) == 6  # fixed 6 decimals

    def test_empty_rows_reported_on_stderr(self, trained_store, tmp_path, capsys):
        csv_path = write_backlog_csv(tmp_path / "b.csv", empty_rows=2)
        code = main(["score", "--project", "p1", "--store", str(trained_store),
                     "--csv", str(csv_path)])
        assert code == 0
        captured = capsys.readouterr()
        assert "skipped 2" in captured.err
        rows = list(csv.reader(io.StringIO(captured.out)))
        assert len(rows) == 1 + len(DEMO_TEXTS)

    def test_report_dir_writes_figures(self, trained_store, tmp_path, capsys):
        csv_path = write_backlog_csv(tmp_path / "b.csv")
        report_dir = tmp_path / "report"
        code = main(["score", "--project", "p1", "--store", str(trained_store),
                     "--csv", str(csv_path), "--report-dir", str(report_dir)])
        assert code == 0
        capsys.readouterr()
        assert (report_dir / "scores.csv").exists()
        assert (report_dir / "metric_distributions.png").stat().st_size > 0


class TestEval:
    def _write_inputs(self, trained_store, tmp_path, capsys):
        csv_path = write_backlog_csv(tmp_path / "b.csv")
        code = main(["score", "--project", "p1", "--store", str(trained_store),
                     "--csv", str(csv_path)])
        assert code == 0
        scores_csv = tmp_path / "scores.csv"
        scores_csv.write_text(capsys.readouterr().out, encoding="utf-8")
        ratings = tmp_path / "ratings.csv"
        rows = ["story_id,expert_id,rating"]
        for i in range(len(DEMO_TEXTS)):
            rows.append(f"S{i},e1,{(i % 5) + 1}")
            rows.append(f"S{i},e2,{((i + 1) % 5) + 1}")
        ratings.write_text("\n".join(rows) + "\n", encoding="utf-8")
        return ratings, scores_csv

    def test_prints_regression_json(self, trained_store, tmp_path, capsys):
        ratings, scores_csv = self._write_inputs(trained_store, tmp_path, capsys)
        code = main(["eval", "--ratings", str(ratings),
                     "--scores", str(scores_csv)])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert "regression" in report
        assert 0.0 <= report["regression"]["r_squared"] <= 1.0
        names = [p["name"] for p in report["regression"]["predictors"]]
        assert set(names) <= {m.value for m in CANONICAL_ORDER}
        assert "e1|e2" in report["inter_rater"]

    def test_table_format(self, trained_store, tmp_path, capsys):
        ratings, scores_csv = self._write_inputs(trained_store, tmp_path, capsys)
        code = main(["eval", "--ratings", str(ratings),
                     "--scores", str(scores_csv), "--format", "table"])
        assert code == 0
        out = capsys.readouterr().out
        assert "R squared" in out
        assert "VIF" in out

    def test_report_dir_writes_figures_and_csv(self, trained_store, tmp_path,
                                               capsys):
        ratings, scores_csv = self._write_inputs(trained_store, tmp_path, capsys)
        report_dir = tmp_path / "evalreport"
        code = main(["eval", "--ratings", str(ratings),
                     "--scores", str(scores_csv),
                     "--report-dir", str(report_dir)])
        assert code == 0
        assert (report_dir / "regression.csv").exists()
        assert (report_dir / "rating_distributions.png").stat().st_size > 0
        assert (report_dir / "beta_weights.png").stat().st_size > 0


class TestConfigFile:
    def test_toml_defaults_used(self, tmp_path, capsys, monkeypatch):
        pytest.importorskip("tomli")
        config = tmp_path / "storygauge.toml"
        config.write_text(
            '[project]\nseed = 9\nk = 3\n\n[mapping]\nid_column = "key"\n'
            'body_column = "text"\n',
            encoding="utf-8",
        )
        backlog = tmp_path / "b.csv"
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["key", "text"])
        for i, text in enumerate(DEMO_TEXTS):
            writer.writerow([f"S{i}", text])
        backlog.write_text(buffer.getvalue(), encoding="utf-8")
        store = tmp_path / "store"
        code = main(["--config", str(config), "train", "--project", "p1",
                     "--csv", str(backlog), "--store", str(store)])
        assert code == 0
        from storygauge.pipeline import load_bundle

        bundle = load_bundle("p1", store)
        assert bundle.config.seed == 9
        assert bundle.config.k == 3
