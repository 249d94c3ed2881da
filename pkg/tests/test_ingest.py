import math

import pytest

from ReplicaBF.consts import SSRP_PATH
from ReplicaBF.core.kernel import DomainError
from ReplicaBF.models.study import RawStudyRecord, StudyMode
from ReplicaBF.services.ingest import (
    EmptyInputError,
    StudyValidationError,
    build_study,
    fisher_transform,
    load_studies,
    load_study_pairs,
)

# 汇总表印出的 c 与 d（两位小数）
PRINTED_RATIOS = {
    "Aviezer": (0.92, 0.6),
    "Balafoutas": (3.48, 0.52),
    "Derex": (1.29, 0.65),
    "Duncan": (7.42, 0.57),
    "Gneezy": (2.31, 0.81),
    "Janssen": (0.65, 0.48),
    "Karpicke": (1.24, 0.58),
    "Kovacs": (4.38, 1.38),
    "Morewedge": (2.97, 0.76),
    "Nishi": (2.42, 0.57),
    "Pyc": (9.18, 0.38),
    "Rand": (6.27, 0.18),
}


def _write(tmp_path, text: str):
    path = tmp_path / "studies.csv"
    path.write_text(text, encoding="utf-8")
    return path


class TestFisherTransform:
    def test_zero(self):
        assert fisher_transform(0.0, 100) == (0.0, pytest.approx(1 / math.sqrt(97)))

    def test_half(self):
        theta, sigma = fisher_transform(0.5, 28)
        assert theta == pytest.approx(0.549306, abs=1e-6)
        assert sigma == pytest.approx(0.2)

    @pytest.mark.parametrize(("r", "n"), [(1.0, 50), (-1.0, 50), (0.3, 3)])
    def test_domain(self, r, n):
        with pytest.raises(DomainError):
            fisher_transform(r, n)


class TestBundledData:
    def test_twelve_records(self):
        records = load_studies(SSRP_PATH)
        assert len(records) == 12
        assert all(record.mode is StudyMode.ZSTAT for record in records)

    def test_printed_ratios(self, ssrp_studies):
        assert set(ssrp_studies) == set(PRINTED_RATIOS)
        for label, (c, d) in PRINTED_RATIOS.items():
            study = ssrp_studies[label]
            assert study.c == pytest.approx(c, abs=0.01), label
            assert study.d == pytest.approx(d, abs=0.01), label

    def test_balafoutas_variance_ratio(self, ssrp_studies):
        assert ssrp_studies["Balafoutas"].c == pytest.approx(240 / 69)

    def test_identity(self, ssrp_studies):
        for study in ssrp_studies.values():
            assert abs(study.d * study.z_o * math.sqrt(study.c) - study.z_r) <= 1e-9


class TestBuildStudy:
    def test_zstat(self):
        study = build_study(RawStudyRecord(label="w", mode=StudyMode.ZSTAT, z_o=3.0, z_r=2.5, c=1.0))
        assert study.d == pytest.approx(0.8333, abs=1e-4)
        assert study.sigma_r == 1.0

    def test_zero_original(self):
        with pytest.raises(StudyValidationError) as info:
            build_study(RawStudyRecord(label="w", mode=StudyMode.ZSTAT, z_o=0.0, z_r=2.5, c=1.0))
        assert "z_o" in info.value.fields

    def test_correlation(self, tmp_path):
        path = _write(tmp_path, "label,r_o,r_r,n_o,n_r\nA,0.5,0.3,28,103\n")
        (study,) = load_study_pairs(path)
        assert study.c == pytest.approx(4.0)
        assert study.z_o == pytest.approx(math.atanh(0.5) / 0.2)
        assert study.d == pytest.approx(math.atanh(0.3) / math.atanh(0.5))


class TestLoadErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_studies(tmp_path / "nope.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyInputError) as info:
            load_studies(_write(tmp_path, ""))
        assert "empty input" in str(info.value)

    def test_header_only(self, tmp_path):
        with pytest.raises(EmptyInputError):
            load_studies(_write(tmp_path, "label,z_o,z_r,c\n"))

    def test_missing_columns(self, tmp_path):
        with pytest.raises(StudyValidationError) as info:
            load_studies(_write(tmp_path, "label,z_o\nA,3\n"))
        assert info.value.row is None
        assert "z_r" in info.value.fields

    def test_unit_correlation(self, tmp_path):
        path = _write(tmp_path, "label,r_o,r_r,n_o,n_r\nA,0.5,0.3,28,103\nB,1.0,0.3,28,103\n")
        with pytest.raises(StudyValidationError) as info:
            load_studies(path)
        assert info.value.row == 2
        assert "r_o" in info.value.fields

    def test_unparseable(self, tmp_path):
        with pytest.raises(StudyValidationError) as info:
            load_studies(_write(tmp_path, "label,z_o,z_r,c\nA,abc,2,1\n"))
        assert info.value.row == 1
        assert info.value.fields == ("z_o",)

    def test_zero_original_row(self, tmp_path):
        path = _write(tmp_path, "label,z_o,z_r,c\nA,3,2,1\nB,0,2,1\n")
        with pytest.raises(StudyValidationError) as info:
            load_study_pairs(path)
        assert info.value.row == 2

    def test_unsupported_format(self):
        with pytest.raises(StudyValidationError):
            load_studies(SSRP_PATH, format="xlsx")
