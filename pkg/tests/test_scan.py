"""Grid-scan driver tests: config validation, the per-mode sweeps,
deterministic CSV/SVG output, and the verification helpers."""

import math

import pytest

from robintri.equilateral import c0, lambda0
from robintri.errors import DomainError
from robintri.scan import (
    MODES,
    ScanConfig,
    emit_csv,
    emit_svg,
    parse_config,
    run_scan,
    soundness_sweep,
    verify_monotone,
    verify_perimeter_variant,
)

S_THIRD = 1.0 / math.sqrt(3.0)


class TestScanConfig:
    def test_rejects_unknown_mode(self):
        with pytest.raises(DomainError):
            ScanConfig(mode="spectral-flow")

    def test_alpha_range_must_stay_negative(self):
        for hi in (0.0, 0.5):
            with pytest.raises(DomainError):
                ScanConfig(mode="transplant-region", alpha_range=(-1.0, hi, 4))

    def test_rejects_reversed_range(self):
        with pytest.raises(DomainError):
            ScanConfig(mode="transplant-region", alpha_range=(-0.5, -2.0, 4))

    def test_collapsed_range_needs_equal_endpoints(self):
        with pytest.raises(DomainError):
            ScanConfig(mode="monotonicity", alpha_range=(-2.0, -1.0, 1))
        # a genuinely collapsed range is fine where the mode permits it
        cfg = ScanConfig(mode="monotonicity", alpha_range=(-2.0, -2.0, 1))
        assert cfg.alpha_range == (-2.0, -2.0, 1)
        # region modes grid over alpha and refuse the collapse outright
        with pytest.raises(DomainError):
            ScanConfig(mode="transplant-region", alpha_range=(-2.0, -2.0, 1))

    def test_gcurve_axis_stays_inside_open_unit_interval(self):
        with pytest.raises(DomainError):
            ScanConfig(mode="g-curve", a_range=(0.5, 1.0, 8))
        with pytest.raises(DomainError):
            ScanConfig(mode="g-curve", a_range=(0.0, 0.5, 8))

    def test_region_modes_take_no_c_range(self):
        with pytest.raises(DomainError):
            ScanConfig(mode="transplant-region", c_range=(0.5, 1.0, 3))

    def test_fem_conjecture_requires_c_range(self):
        with pytest.raises(DomainError):
            ScanConfig(mode="fem-conjecture")

    def test_perimeter_variant_needs_single_alpha(self):
        with pytest.raises(DomainError):
            ScanConfig(
                mode="perimeter-variant",
                alpha_range=(-2.0, -1.0, 3),
                c_range=(0.4, 0.7, 2),
            )

    def test_scalar_parameter_validation(self):
        with pytest.raises(DomainError):
            ScanConfig(mode="transplant-region", S=0.0)
        with pytest.raises(DomainError):
            ScanConfig(mode="transplant-region", c_fixed=-1.0)
        with pytest.raises(DomainError):
            ScanConfig(mode="transplant-region", fem_rel_tol=0.0)

    def test_resolved_c_defaults_to_equilateral(self):
        cfg = ScanConfig(mode="transplant-region")
        assert abs(cfg.resolved_c() - c0(cfg.S)) < 1e-15
        assert ScanConfig(mode="transplant-region", c_fixed=0.9).resolved_c() == 0.9


class TestParseConfig:
    def _write(self, tmp_path, text):
        path = tmp_path / "scan.cfg"
        path.write_text(text)
        return str(path)

    def test_round_trip(self, tmp_path):
        path = self._write(
            tmp_path,
            "# demo config\n"
            "mode = transplant-region\n"
            "alpha_range = -4.0, -0.1, 12\n"
            "a_range = 0.0, 2.5, 9\n"
            "c_fixed = 0.8\n"
            "S = 1.0\n"
            "fem_rel_tol = 1e-5\n"
            "emit_svg = yes\n"
            "output_path = out/region.csv\n",
        )
        cfg = parse_config(path)
        assert cfg.mode == "transplant-region"
        assert cfg.alpha_range == (-4.0, -0.1, 12)
        assert cfg.a_range == (0.0, 2.5, 9)
        assert cfg.c_fixed == 0.8
        assert cfg.S == 1.0
        assert cfg.fem_rel_tol == 1e-5
        assert cfg.emit_svg is True
        assert cfg.output_path == "out/region.csv"

    def test_unknown_key_rejected(self, tmp_path):
        path = self._write(tmp_path, "mode = g-curve\nmesh_budget = 12\n")
        with pytest.raises(DomainError):
            parse_config(path)

    def test_missing_mode_rejected(self, tmp_path):
        path = self._write(tmp_path, "a_range = 0.91, 0.96, 5\n")
        with pytest.raises(DomainError):
            parse_config(path)

    def test_overrides_replace_file_values(self, tmp_path):
        path = self._write(tmp_path, "mode = g-curve\na_range = 0.91, 0.96, 5\n")
        cfg = parse_config(path, overrides={"a_range": (0.5, 0.6, 3), "emit_svg": True})
        assert cfg.a_range == (0.5, 0.6, 3)
        assert cfg.emit_svg is True
        assert cfg.mode == "g-curve"
        # None-valued overrides (unset CLI flags) leave the file value alone
        cfg2 = parse_config(path, overrides={"a_range": None})
        assert cfg2.a_range == (0.91, 0.96, 5)

    def test_malformed_range_rejected(self, tmp_path):
        path = self._write(tmp_path, "mode = g-curve\na_range = 0.91, 0.96\n")
        with pytest.raises(DomainError):
            parse_config(path)


class TestGCurve:
    def test_sign_flip_bracket(self):
        """The sign change of the threshold curve falls inside [0.94, 0.95]."""
        res = run_scan(ScanConfig(mode="g-curve", a_range=(0.90, 0.97, 29)))
        ts = [row[0] for row in res.rows]
        gs = [row[1] for row in res.rows]
        flips = [
            (ts[i], ts[i + 1])
            for i in range(len(gs) - 1)
            if gs[i] < 0.0 <= gs[i + 1]
        ]
        assert len(flips) == 1
        lo, hi = flips[0]
        assert 0.94 <= lo and hi <= 0.95

    def test_verdict_marks_negative_side(self):
        res = run_scan(ScanConfig(mode="g-curve", a_range=(0.5, 0.9, 5)))
        for t, g, verdict, status in res.rows:
            assert status == "ok"
            assert verdict == int(g < 0.0)


class TestRegionModes:
    def test_transplant_weak_coupling_certifies_every_skew(self):
        res = run_scan(
            ScanConfig(
                mode="transplant-region",
                alpha_range=(-6.0, -0.05, 3),
                a_range=(0.0, 2.0, 7),
            )
        )
        weak = res.verdict_grid[-1]  # alpha = -0.05 is the last row
        assert weak[0] == 0  # equilateral cell is never strictly below
        assert all(v == 1 for v in weak[1:])
        strong = res.verdict_grid[0]  # alpha = -6
        assert sum(strong) < sum(weak)

    def test_transplant_delta_vanishes_at_equilateral(self):
        res = run_scan(
            ScanConfig(
                mode="transplant-region",
                alpha_range=(-2.0, -0.5, 2),
                a_range=(0.0, 1.0, 2),
            )
        )
        eq_rows = [row for row in res.rows if row[1] == 0.0]
        assert len(eq_rows) == 2
        for row in eq_rows:
            assert abs(row[2]) < 1e-10

    def test_transplant_reflection_symmetry(self):
        """A symmetric a-axis produces a palindromic verdict grid."""
        res = run_scan(
            ScanConfig(
                mode="transplant-region",
                alpha_range=(-1.5, -0.1, 3),
                a_range=(-1.2, 1.2, 7),
            )
        )
        for iy in range(len(res.verdict_grid)):
            row = res.verdict_grid[iy]
            assert row == tuple(reversed(row))

    def test_constant_region_grows_towards_weak_coupling(self):
        res = run_scan(
            ScanConfig(
                mode="constant-region",
                alpha_range=(-2.0, -0.05, 4),
                a_range=(0.0, 2.0, 5),
            )
        )
        counts = [sum(row) for row in res.verdict_grid]
        assert counts == sorted(counts)  # weaker coupling certifies at least as much
        assert counts[-1] > 0

    def test_condition_region_grows_towards_strong_coupling(self):
        res = run_scan(
            ScanConfig(
                mode="condition-region",
                alpha_range=(-9.0, -1.0, 4),
                a_range=(0.0, 2.5, 6),
            )
        )
        counts = [sum(row) for row in res.verdict_grid]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] > counts[-1]
        # the equilateral column never satisfies the strict condition
        assert all(row[0] == 0 for row in res.verdict_grid)

    def test_sector_rayleigh_never_beats_closed_value(self):
        res = run_scan(
            ScanConfig(
                mode="sector-region",
                alpha_range=(-9.0, -2.0, 3),
                a_range=(0.2, 2.0, 5),
            )
        )
        for _, _, rayleigh, closed, _, _, status in res.rows:
            assert status == "ok"
            assert rayleigh <= closed + 1e-9 * abs(closed)


class TestFemModes:
    def test_conjecture_grid_margins(self):
        cc = c0(S_THIRD)
        res = run_scan(
            ScanConfig(
                mode="fem-conjecture",
                alpha_range=(-1.0, -1.0, 1),
                a_range=(0.0, 0.6, 2),
                c_range=(0.8 * cc, 1.2 * cc, 2),
                fem_rel_tol=1e-4,
            )
        )
        assert res.columns[3] == "lambda_fem" and res.columns[6] == "margin"
        for row in res.rows:
            assert row[-1] == "ok"
            assert row[-2] == 1
            lam_fem, err, lam0 = row[3], row[4], row[5]
            assert lam_fem <= lam0 + 10.0 * err + 1e-9 * abs(lam0)

    def test_perimeter_variant_chain(self):
        """Perimeter-normalised comparison splits into two negative links
        away from the equilateral, and both collapse to zero on it."""
        cc = c0(S_THIRD)
        res = verify_perimeter_variant(-0.5, S_THIRD, [(0.0, cc), (0.4, 0.8 * cc)])
        by_cell = {(row[0], row[1]): row for row in res.rows}
        eq = by_cell[(0.0, cc)]
        assert abs(eq[7]) < 1e-6  # lambda_fem - lambda0(scaled) at equilateral
        assert eq[8] == 0.0  # gamma = 1 so the dilation link vanishes
        skew = by_cell[(0.4, 0.8 * cc)]
        assert skew[7] < 0.0 and skew[8] < 0.0 and skew[9] < 0.0
        assert all(row[10] == 1 for row in res.rows)

    def test_monotone_in_area(self):
        res = verify_monotone(-0.5, S_THIRD, rel_tol=1e-4)
        (row,) = res.rows
        _, l_half, l_base, l_twice, f_half, f_base, f_twice, verdict, status = row
        assert status == "ok" and verdict == 1
        assert l_half < l_base < l_twice < 0.0
        assert f_half < f_base < f_twice < 0.0

    def test_soundness_certified_cells_stay_sound(self):
        cc = c0(S_THIRD)
        res = soundness_sweep(
            [-0.5, -6.0], [0.5, 2.0], cc, S_THIRD, fem_rel_tol=1e-2, max_level=6
        )
        assert len(res.rows) == 4
        certified = [row for row in res.rows if row[5] == 1]
        assert certified  # the sweep must actually exercise a certificate
        for row in res.rows:
            assert row[10] == 1  # verdict: no contradiction anywhere
            if row[5] == 1:
                assert row[9] == 1  # certified implies sound


class TestOutputs:
    def test_csv_is_byte_deterministic(self, tmp_path):
        cfg = ScanConfig(
            mode="transplant-region",
            alpha_range=(-3.0, -0.2, 3),
            a_range=(0.0, 1.5, 4),
        )
        first = tmp_path / "one.csv"
        second = tmp_path / "two.csv"
        emit_csv(run_scan(cfg), str(first))
        emit_csv(run_scan(cfg), str(second))
        blob = first.read_bytes()
        assert blob == second.read_bytes()
        assert b"\r" not in blob
        assert blob.decode("ascii")  # pure ASCII by construction

    def test_csv_round_trips_floats_exactly(self, tmp_path):
        cfg = ScanConfig(
            mode="transplant-region",
            alpha_range=(-3.0, -0.2, 2),
            a_range=(0.0, 1.5, 3),
        )
        res = run_scan(cfg)
        path = tmp_path / "rt.csv"
        emit_csv(res, str(path))
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        header = lines[0].split(",")
        assert tuple(header) == res.columns
        for text_row, row in zip(lines[1:], res.rows):
            parts = text_row.split(",")
            for got, want in zip(parts, row):
                if isinstance(want, float):
                    assert float(got) == want or (
                        math.isnan(float(got)) and math.isnan(want)
                    )
                else:
                    assert got == str(want)

    def test_csv_header_carries_provenance(self, tmp_path):
        cfg = ScanConfig(mode="g-curve", a_range=(0.91, 0.96, 3))
        path = tmp_path / "g.csv"
        emit_csv(run_scan(cfg), str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "# robintri scan output"
        meta = [l for l in lines if l.startswith("# ") and " = " in l]
        keys = {l.split(" = ")[0][2:] for l in meta}
        assert "mode" in keys
        assert "timestamp" not in keys  # would break determinism

    def test_svg_deterministic_with_one_rect_per_cell(self, tmp_path):
        cfg = ScanConfig(
            mode="condition-region",
            alpha_range=(-9.0, -2.0, 3),
            a_range=(0.2, 2.0, 5),
        )
        first = tmp_path / "one.svg"
        second = tmp_path / "two.svg"
        emit_svg(run_scan(cfg), str(first))
        emit_svg(run_scan(cfg), str(second))
        text = first.read_text()
        assert text == second.read_text()
        # background + frame + one rect per grid cell
        assert text.count("<rect") == 3 * 5 + 2
        assert text.startswith("<svg ")
        assert text.rstrip().endswith("</svg>")

    def test_run_scan_writes_requested_files(self, tmp_path):
        out = tmp_path / "flow.csv"
        cfg = ScanConfig(
            mode="g-curve",
            a_range=(0.91, 0.96, 3),
            output_path=str(out),
            emit_svg=True,
        )
        run_scan(cfg)
        assert out.exists()
        assert out.with_suffix(".svg").exists()


class TestModeList:
    def test_every_mode_is_dispatchable(self):
        """Config construction succeeds for each advertised mode (the cheap
        sanity check that MODES and the validator stay in sync)."""
        cc = c0(S_THIRD)
        extra = {
            "fem-conjecture": dict(
                alpha_range=(-1.0, -1.0, 1), c_range=(0.8 * cc, 1.2 * cc, 2)
            ),
            "perimeter-variant": dict(
                alpha_range=(-0.5, -0.5, 1), c_range=(0.8 * cc, 1.2 * cc, 2)
            ),
            "g-curve": dict(a_range=(0.91, 0.96, 3)),
        }
        for mode in MODES:
            ScanConfig(mode=mode, **extra.get(mode, {}))
