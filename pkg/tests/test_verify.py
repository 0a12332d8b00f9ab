import numpy as np
import pytest

from swym import fileio, verify


class TestRegistry:
    def test_names_unique_and_complete(self):
        names = verify.check_names()
        assert len(names) == len(set(names))
        for expected in ("geometry-roundtrip", "spectrum-dual-agreement",
                         "evolution-fixed-point", "stationary-envelope",
                         "fileio-determinism"):
            assert expected in names

    def test_unmatched_filter_returns_nothing(self):
        assert verify.run_checks(name_filter="no-such-check") == []


class TestFilteredRuns:
    def test_geometry(self):
        results = verify.run_checks(name_filter="geometry")
        assert [r.name for r in results] == ["geometry-roundtrip"]
        assert results[0].passed
        assert results[0].measured <= results[0].bound

    def test_numerics(self):
        results = verify.run_checks(name_filter="numerics")
        assert len(results) == 3
        assert all(r.passed for r in results)

    def test_fileio(self):
        results = verify.run_checks(name_filter="fileio")
        assert {r.name for r in results} == {"fileio-determinism",
                                             "fileio-version-reject"}
        assert all(r.passed for r in results)

    def test_square_well(self):
        results = verify.run_checks(name_filter="square-well")
        assert len(results) == 1
        assert results[0].passed

    def test_filtered_run_skips_unrelated_fixtures(self):
        ctx = verify.VerifyContext()
        verify.run_checks(name_filter="fileio", context=ctx)
        assert not any(key[0] == "profile" for key in ctx._cache)

    def test_progress_callback_sees_every_result(self):
        seen = []
        results = verify.run_checks(name_filter="numerics",
                                    progress=lambda r: seen.append(r.name))
        assert seen == [r.name for r in results]


class TestPropertySuite:
    def test_accepted_profile_passes_everything(self, profile_n1):
        rows = verify.stationary_property_checks(profile_n1)
        assert all(r.passed for r in rows)
        names = [r.name for r in rows]
        assert names == list(verify._PROPERTY_NAMES)

    def test_prefix_is_applied(self, profile_n1):
        rows = verify.stationary_property_checks(profile_n1, prefix="cand")
        assert all(r.name.startswith("cand-") for r in rows)

    def test_broken_profile_is_caught(self, profile_n1):
        import dataclasses
        # the true slope peaks near 0.25, so 5x breaks the unit bound
        bad = dataclasses.replace(profile_n1, wp=5.0 * profile_n1.wp)
        rows = verify.stationary_property_checks(bad)
        by_name = {r.name: r for r in rows}
        assert not by_name["stationary-derivative-bound"].passed


class TestErrorHandling:
    def test_raising_check_becomes_failed_result(self, monkeypatch):
        def boom(ctx):
            raise ValueError("fixture exploded")

        monkeypatch.setattr(verify, "_REGISTRY", [(boom, ("boom-check",))])
        results = verify.run_checks()
        assert len(results) == 1
        assert results[0].name == "boom-check"
        assert not results[0].passed
        assert "ValueError" in results[0].detail
        assert "fixture exploded" in results[0].detail


class TestReport:
    def test_payload_shape(self, tmp_path):
        results = verify.run_checks(name_filter="fileio")
        payload = verify.write_report(tmp_path / "report.json", results)
        assert payload["counts"]["total"] == len(results)
        assert payload["counts"]["passed"] + payload["counts"]["failed"] \
            == payload["counts"]["total"]
        assert payload["all_passed"] == all(r.passed for r in results)
        data = fileio.read_json(tmp_path / "report.json")
        assert data["checks"][0].keys() == {
            "name", "statement", "measured", "bound", "passed", "detail"}

    def test_report_bytes_deterministic(self, tmp_path):
        results = verify.run_checks(name_filter="geometry")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        verify.write_report(a, results)
        verify.write_report(b, results)
        assert a.read_bytes() == b.read_bytes()

    def test_failure_counted(self, tmp_path):
        rows = [verify.CheckResult("x", "stmt", 2.0, 1.0, False)]
        payload = verify.write_report(tmp_path / "r.json", rows)
        assert payload["counts"]["failed"] == 1
        assert not payload["all_passed"]
