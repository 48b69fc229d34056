"""Feed parsing and validation: batch tolerance, alias mapping, audit."""

import random
from datetime import date, datetime, timezone

import pytest

from epiwatch.config import builtin_aliases
from epiwatch.errors import MissingHeader, MissingMandatoryColumn
from epiwatch.ingest import parse_case_batch, parse_national_batch, parse_specimen_batch
from epiwatch.model import EpiCategory, Sex, SymptomStatus
from epiwatch.regions import load_region_table

CLOCK = datetime(2021, 3, 25, 12, 0, tzinfo=timezone.utc)
ALIASES = builtin_aliases()
REGION = load_region_table()

HEADER = ("civil_id,name,dob,sex,city,district,subdistrict,"
          "report_date,category,symptom_status,status,death_protocol")


def row(i=1, **kw):
    values = {
        "civil_id": f"31712345678{i:05d}",
        "name": f"WARGA {i}",
        "dob": "1980-01-01",
        "sex": "L",
        "city": "3173",
        "district": "3173010",
        "subdistrict": "",
        "report_date": "2021-03-12",
        "category": "suspek",
        "symptom_status": "",
        "status": "",
        "death_protocol": "",
    }
    values.update(kw)
    return ",".join(values[c] for c in HEADER.split(","))


def cases(*rows):
    return (HEADER + "\n" + "\n".join(rows) + "\n").encode()


def parse(payload):
    return parse_case_batch(payload, ALIASES, REGION, CLOCK, "src-test")


class TestCaseParsing:
    def test_happy_path_three_rows(self):
        vb = parse(cases(row(1), row(2), row(3)))
        assert vb.total_rows == 3
        assert len(vb.frame) == 3
        assert not vb.rejects

    def test_header_order_independent(self):
        payload = ("report_date,civil_id,category,city,district,name,dob,sex\n"
                   "2021-03-12,3171234567800001,suspek,3173,3173010,A BUDI,1980-01-01,L\n").encode()
        vb = parse(payload)
        assert len(vb.frame) == 1 and not vb.rejects

    def test_missing_mandatory_column_fatal(self):
        payload = ("civil_id,category,city,district\n"
                   "3171234567800001,suspek,3173,3173010\n").encode()
        with pytest.raises(MissingMandatoryColumn) as err:
            parse(payload)
        assert "report_date" in err.value.columns

    def test_empty_payload(self):
        with pytest.raises(MissingHeader):
            parse(b"")

    def test_unknown_column_warns_not_fatal(self):
        payload = ("civil_id,name,dob,sex,city,district,report_date,category,oddity\n"
                   "3171234567800001,A BUDI,1980-01-01,L,3173,3173010,2021-03-12,suspek,x\n").encode()
        vb = parse(payload)
        assert len(vb.frame) == 1
        assert any("oddity" in w for w in vb.warnings)

    def test_one_bad_line_among_100(self):
        # line-oriented oracle: build the batch, poison one date, count
        rows = [row(i) for i in range(1, 101)]
        poison = random.Random(7).randrange(100)
        rows[poison] = row(poison + 1, report_date="12/03/2021")
        vb = parse(cases(*rows))
        assert vb.total_rows == 100
        assert len(vb.frame) == 99
        assert len(vb.rejects) == 1
        assert vb.rejects[0].line == poison + 2  # header is line 1
        assert vb.rejects[0].rule == "BadDate"

    def test_future_report_date(self):
        vb = parse(cases(row(1, report_date="2021-03-26")))
        assert vb.rejects[0].rule == "FutureDate"

    def test_no_nik_with_full_identity_accepted(self):
        vb = parse(cases(row(1, civil_id="")))
        assert len(vb.frame) == 1
        assert bool(vb.frame["has_fuzzy"][0])
        assert int(vb.frame["civil_id"][0]) == 0

    def test_no_nik_without_identity_rejected(self):
        vb = parse(cases(row(1, civil_id="", sex="")))
        assert vb.rejects[0].rule == "MissingIdentity"

    def test_malformed_nik_rejected_not_degraded(self):
        vb = parse(cases(row(1, civil_id="3171-2345-6789-0001")))
        assert vb.rejects[0].rule == "NonNumeric"
        vb = parse(cases(row(1, civil_id="317123456789000")))
        assert vb.rejects[0].rule == "WrongLength"

    def test_indonesian_aliases(self):
        vb = parse(cases(
            row(1, category="kontak erat", status="selesai isolasi"),
            row(2, category="pelaku perjalanan", symptom_status="tanpa gejala"),
            row(3, category="konfirmasi", status="dirawat", sex="perempuan"),
        ))
        assert not vb.rejects
        cats = vb.frame["category"].to_list()
        assert cats == [int(EpiCategory.CLOSE_CONTACT), int(EpiCategory.TRAVELER),
                        int(EpiCategory.CONFIRMED)]
        assert vb.frame["symptom"].to_list()[1] == int(SymptomStatus.ASYMPTOMATIC)
        assert vb.frame["sex"].to_list()[2] == int(Sex.FEMALE)

    def test_unknown_category_rejected(self):
        vb = parse(cases(row(1, category="zombie")))
        assert vb.rejects[0].rule == "UnknownCategory"

    def test_region_names_resolve(self):
        vb = parse(cases(row(1, city="Jakarta Pusat", district="Gambir")))
        assert vb.frame["city"][0] == "3173"
        assert vb.frame["district"][0] == "3173010"

    def test_region_mismatch_rejected(self):
        vb = parse(cases(row(1, city="3171", district="3173010")))
        assert vb.rejects[0].rule == "RegionMismatch"

    def test_unknown_region_sentinel(self):
        vb = parse(cases(row(1, city="unknown", district="")))
        assert vb.frame["city"][0] == "UNKNOWN"
        assert vb.frame["district"][0] == "UNKNOWN"

    def test_dob_after_report_rejected(self):
        vb = parse(cases(row(1, dob="2021-03-13")))
        assert vb.rejects[0].rule == "FutureBirthDate"

    def test_conservation_random_batches(self):
        rng = random.Random(20210312)
        for _ in range(25):
            n = rng.randint(1, 60)
            rows = []
            for i in range(n):
                r = row(i + 1)
                if rng.random() < 0.3:
                    r = row(i + 1, report_date=rng.choice(["bad", "2021-03-30", ""]))
                rows.append(r)
            vb = parse(cases(*rows))
            assert len(vb.frame) + len(vb.rejects) == vb.total_rows == n

    def test_overlong_line_rejected_alone(self):
        bad = row(9) + ",EXTRA,EXTRA"
        payload = (HEADER + "\n" + row(1) + "\n" + bad + "\n" + row(2) + "\n").encode()
        vb = parse(payload)
        assert len(vb.frame) == 2
        assert any(r.rule == "RaggedRow" and r.line == 3 for r in vb.rejects)

    def test_short_line_fails_field_validation(self):
        # missing trailing mandatory fields surface as per-line rejections
        payload = (HEADER + "\n" + row(1) + "\n" + "3171234567800009,X,1980-01-01\n").encode()
        vb = parse(payload)
        assert len(vb.frame) == 1
        assert len(vb.rejects) == 1 and vb.rejects[0].line == 3


def specimen_rows(*rows):
    header = "specimen_id,civil_id,collection_date,result_date,result,lab"
    return (header + "\n" + "\n".join(rows) + "\n").encode()


class TestSpecimenParsing:
    def test_result_aliases(self):
        vb = parse_specimen_batch(specimen_rows(
            "S1,3171234567800001,2021-03-10,2021-03-11,POSITIF,labA",
            "S2,3171234567800002,2021-03-10,2021-03-11,negative,labA",
        ), ALIASES, CLOCK, "labX")
        assert vb.frame["result"].to_list() == [1, 2]

    def test_unknown_result_rejected(self):
        vb = parse_specimen_batch(specimen_rows(
            "S1,3171234567800001,2021-03-10,2021-03-11,PENDING,labA"), ALIASES, CLOCK, "labX")
        assert vb.rejects[0].rule == "UnknownResult"

    def test_duplicate_specimen_in_batch(self):
        vb = parse_specimen_batch(specimen_rows(
            "S1,3171234567800001,2021-03-10,2021-03-11,positif,labA",
            "S1,3171234567800002,2021-03-10,2021-03-11,negatif,labA",
            "S1,3171234567800003,2021-03-10,2021-03-11,negatif,labB",
        ), ALIASES, CLOCK, "labX")
        # same id at a different lab is fine
        assert len(vb.frame) == 2
        assert vb.rejects[0].rule == "DuplicateSpecimen"
        assert vb.rejects[0].line == 3

    def test_collection_after_result_rejected(self):
        vb = parse_specimen_batch(specimen_rows(
            "S1,3171234567800001,2021-03-12,2021-03-11,positif,labA"), ALIASES, CLOCK, "labX")
        assert vb.rejects[0].rule == "AfterResultDate"

    def test_invalid_nik_rejected(self):
        vb = parse_specimen_batch(specimen_rows(
            "S1,,2021-03-10,2021-03-11,positif,labA"), ALIASES, CLOCK, "labX")
        assert vb.rejects[0].rule == "Empty"

    def test_default_lab_from_source(self):
        vb = parse_specimen_batch(specimen_rows(
            "S1,3171234567800001,2021-03-10,2021-03-11,positif,"), ALIASES, CLOCK, "labX")
        assert vb.frame["lab"][0] == "labX"


class TestNationalParsing:
    def test_mid_march_2021_snapshot_validates(self):
        payload = (b"date,confirmed,active,recovered,dead\n"
                   b"2021-03-15,1500000,122000,1337000,41000\n")
        vb = parse_national_batch(payload, CLOCK)
        assert not vb.rejects
        assert vb.frame["confirmed"][0] == 1_500_000
        assert vb.frame["active"][0] == 122_000

    def test_negative_count_rejected(self):
        payload = b"date,confirmed,active,recovered,dead\n2021-03-15,-5,0,0,0\n"
        vb = parse_national_batch(payload, CLOCK)
        assert vb.rejects[0].rule == "BadCount"
