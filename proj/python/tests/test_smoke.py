import numpy as np
import pytest

import hybsurg
from hybsurg import _core

FIXTURES = _core.default_fixture_dir()


def test_t_magic_exhaustive_passes():
    rep = hybsurg.run_protocol("t-magic", exhaustive=True)
    assert rep["status"] == "pass"
    assert rep["schema_version"] == _core.REPORT_SCHEMA_VERSION
    assert rep["clifford_level"] == 3
    assert hybsurg.exit_code(rep) == 0


def test_forced_record_is_validated():
    with pytest.raises(hybsurg.UsageError):
        hybsurg.run_protocol("s-teleport", forced="bogus=1")
    with pytest.raises(hybsurg.UsageError):
        hybsurg.run_protocol("s-teleport", nonsense=1)


def test_bundled_fixtures_verify(tmp_path):
    rep = hybsurg.verify(f"{FIXTURES}/anyons-d4.fixture", f"{FIXTURES}/syndromes-d4.fixture")
    assert rep["status"] == "pass"
    assert len(rep["fixtures"]) == 2


def test_cross_check_and_cap_refusal():
    assert hybsurg.cross_check(["z2-z2"])["status"] == "pass"
    refused = hybsurg.cross_check(["d4-z2"], cap_amplitudes=1000)
    assert refused["status"] == "refused"
    assert hybsurg.exit_code(refused) == 2


def test_syndrome_table_writes_csv(tmp_path):
    csv = tmp_path / "s.csv"
    rep = hybsurg.syndrome_table(csv=str(csv))
    assert rep["status"] == "pass"
    assert csv.read_text().splitlines()[0] == "error,probe,edge,abelian_sector,flagged,anyon"


def test_d4_center_and_s_matrix():
    c = hybsurg.center("D4")
    assert len(c["anyons"]) == 22
    assert sum(a["qdim"] ** 2 for a in c["anyons"]) == 64
    S = hybsurg.s_matrix("D4")
    assert np.allclose(S @ S.conj().T, np.eye(22), atol=1e-12)


def test_group_table_is_a_group():
    labels = hybsurg.group_labels("S3")
    t = np.array(hybsurg.multiplication_table("S3"))
    n = len(labels)
    assert t.shape == (n, n)
    assert all(sorted(row) == list(range(n)) for row in t)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                assert t[t[a, b], c] == t[a, t[b, c]]


def test_clifford_level_of_t():
    T = np.diag([1, np.exp(1j * np.pi / 4)])
    assert hybsurg.clifford_level(T) == 3
    assert hybsurg.clifford_level(np.eye(2, dtype=complex)) == 1
