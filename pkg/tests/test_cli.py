"""Command-line surface: import, report (CSV + figure), generate, verify."""

import csv
from pathlib import Path

from click.testing import CliRunner

from epiwatch.cli import main

CASE_HEADER = ("civil_id,name,dob,sex,city,district,subdistrict,"
               "report_date,category,symptom_status,status,death_protocol")


def write_cases(path: Path, rows):
    path.write_text(CASE_HEADER + "\n" + "\n".join(rows) + "\n")


def run(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


class TestImportAndReport:
    def test_import_then_summary(self, tmp_path):
        feed = tmp_path / "cases.csv"
        write_cases(feed, [
            "3173000000000001,AA,1980-01-01,L,3173,3173010,,2021-03-10,konfirmasi,,dirawat,",
            "3173000000000002,BB,1990-01-01,P,3173,3173020,,2021-03-11,suspek,,,",
        ])
        store = tmp_path / "store"
        r = run("import", "--store", str(store), "--kind", "cases",
                "--source", "pkm", str(feed))
        assert r.exit_code == 0, r.output
        assert "accepted 2/2" in r.output

        out = tmp_path / "summary.csv"
        r = run("report", "summary", "--store", str(store),
                "--as-of", "2021-03-25", "--out", str(out))
        assert r.exit_code == 0, r.output
        with open(out) as fh:
            row = next(csv.DictReader(fh))
        assert row["confirmed"] == "1"
        assert out.with_suffix(".png").exists()  # figure rendered alongside

    def test_no_figure_flag(self, tmp_path):
        feed = tmp_path / "cases.csv"
        write_cases(feed, [
            "3173000000000001,AA,1980-01-01,L,3173,3173010,,2021-03-10,suspek,,,"])
        store = tmp_path / "store"
        run("import", "--store", str(store), "--kind", "cases", "--source", "pkm", str(feed))
        out = tmp_path / "cat.csv"
        r = run("report", "category-breakdown", "--store", str(store),
                "--as-of", "2021-03-25", "--out", str(out), "--no-figure")
        assert r.exit_code == 0
        assert out.exists() and not out.with_suffix(".png").exists()

    def test_import_failure_exits_nonzero(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("this is not even a csv header for cases\n")
        r = run("import", "--store", str(tmp_path / "s"), "--kind", "cases",
                "--source", "pkm", str(bad))
        assert r.exit_code == 1

    def test_rejects_reported_per_line(self, tmp_path):
        feed = tmp_path / "cases.csv"
        write_cases(feed, [
            "3173000000000001,AA,1980-01-01,L,3173,3173010,,2021-03-10,suspek,,,",
            "3173000000000002,BB,1990-01-01,P,3173,3173020,,never,suspek,,,",
        ])
        r = run("import", "--store", str(tmp_path / "s"), "--kind", "cases",
                "--source", "pkm", str(feed))
        assert r.exit_code == 0
        assert "accepted 1/2" in r.output
        assert "line 3" in r.output


class TestGenerate:
    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        r1 = run("generate", "--out", str(a), "--seed", "42", "--persons", "500")
        r2 = run("generate", "--out", str(b), "--seed", "42", "--persons", "500")
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert (a / "cases.csv").read_bytes() == (b / "cases.csv").read_bytes()
        assert (a / "specimens.csv").read_bytes() == (b / "specimens.csv").read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run("generate", "--out", str(a), "--seed", "1", "--persons", "200")
        run("generate", "--out", str(b), "--seed", "2", "--persons", "200")
        assert (a / "cases.csv").read_bytes() != (b / "cases.csv").read_bytes()

    def test_generated_population_imports_cleanly(self, tmp_path):
        gen = tmp_path / "gen"
        run("generate", "--out", str(gen), "--seed", "7", "--persons", "300")
        store = tmp_path / "store"
        r = run("import", "--store", str(store), "--kind", "cases",
                "--source", "synth", str(gen / "cases.csv"))
        assert r.exit_code == 0, r.output
        r = run("import", "--store", str(store), "--kind", "specimens",
                "--source", "synthlab", str(gen / "specimens.csv"))
        assert r.exit_code == 0, r.output
        r = run("verify", "--store", str(store))
        assert r.exit_code == 0, r.output
        assert "no violations" in r.output


class TestReviewQueueCli:
    def test_list_and_resolve(self, tmp_path):
        feed = tmp_path / "cases.csv"
        write_cases(feed, [
            "3173000000000001,SAMA,1980-01-01,L,3173,3173010,,2021-03-10,suspek,,,",
            "3173000000000002,SAMA,1980-01-01,L,3173,3173010,,2021-03-10,suspek,,,",
            ",SAMA,1980-01-01,L,3173,3173010,,2021-03-12,suspek,,,",
        ])
        store = tmp_path / "store"
        run("import", "--store", str(store), "--kind", "cases", "--source", "pkm", str(feed))
        r = run("review-queue", "list", "--store", str(store))
        assert r.exit_code == 0
        lines = r.output.strip().splitlines()
        assert len(lines) == 2  # header + one parked event
        qid = lines[1].split(",")[0]
        r = run("review-queue", "resolve", "--store", str(store),
                "--id", qid, "--target", "new")
        assert r.exit_code == 0
        r = run("review-queue", "list", "--store", str(store))
        assert len(r.output.strip().splitlines()) == 1

    def test_resolve_unknown_id_fails(self, tmp_path):
        store = tmp_path / "store"
        run("generate", "--out", str(tmp_path / "g"), "--seed", "1", "--persons", "10")
        run("import", "--store", str(store), "--kind", "cases", "--source", "pkm",
            str(tmp_path / "g" / "cases.csv"))
        r = run("review-queue", "resolve", "--store", str(store), "--id", "999999",
                "--target", "new")
        assert r.exit_code == 1


class TestVerifyCli:
    def test_verify_empty_store(self, tmp_path):
        r = run("verify", "--store", str(tmp_path / "s"))
        assert r.exit_code == 0

    def test_verify_after_fixture_import(self, tmp_path):
        gen = tmp_path / "g"
        run("generate", "--out", str(gen), "--seed", "3", "--persons", "150")
        store = tmp_path / "store"
        run("import", "--store", str(store), "--kind", "cases", "--source", "pkm",
            str(gen / "cases.csv"))
        r = run("verify", "--store", str(store))
        assert r.exit_code == 0, r.output
