import json

import pytest

from facexpr.bench import bench_feature_creation, grid_json, grid_markdown
from facexpr.errors import ConfigError
from facexpr.topology import GroupingMode


class TestBench:
    def test_report_fields(self):
        report = bench_feature_creation("P61", GroupingMode.AU_GROUPED, iterations=100, warmup=5)
        assert report.pair_count == 1410
        assert report.iterations == 100
        assert 0 < report.median_us
        assert report.median_us <= report.p99_us
        obj = report.to_json_obj()
        assert obj["mode"] == "au"
        json.dumps(obj)

    def test_au_faster_than_full_p61(self):
        au = bench_feature_creation("P61", GroupingMode.AU_GROUPED, iterations=150, warmup=10)
        full = bench_feature_creation("P61", GroupingMode.FULL, iterations=150, warmup=10)
        assert au.median_us < full.median_us

    def test_minimum_iterations_enforced(self):
        with pytest.raises(ConfigError):
            bench_feature_creation("P61", GroupingMode.FULL, iterations=50)

    def test_grid_render(self):
        reports = [
            bench_feature_creation("P61", m, iterations=100, warmup=5)
            for m in (GroupingMode.FULL, GroupingMode.AU_GROUPED)
        ]
        md = grid_markdown(reports)
        assert "P61 Full" in md and "P61 AU" in md
        parsed = json.loads(grid_json(reports))
        assert len(parsed) == 2
