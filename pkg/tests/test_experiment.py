import os
from dataclasses import replace

import numpy as np
import pytest

from siamp import (ParseError, ValidationError, emit_csv, parse_config,
                   run_experiment, spec_from_options)
from siamp.experiment import (annulus_gains, default_l_grid,
                              denoiser_response_curve,
                              detector_threshold_curve, read_roc_csv,
                              trial_seed)
from siamp.streams import substream


def desk_options(**overrides):
    opts = {"num_devices": "60", "pilot_length": "24", "num_antennas": "1",
            "num_blocks": "2", "activity_rate": "0.1", "persistence": "0.46",
            "gamma": "1.0", "noise_variance": "0.1", "rng_seed": "5",
            "num_trials": "4", "l_grid": "-10:10:21", "variants": "si,nosi"}
    opts.update(overrides)
    return opts


class TestParseConfig:
    def test_fig3_preset_fields(self):
        spec = spec_from_options({"preset": "paper-fig3"})
        sc = spec.scenario
        assert (sc.num_devices, sc.pilot_length, sc.num_antennas,
                sc.num_blocks) == (4000, 600, 1, 10)
        assert sc.activity_rate == 0.1 and sc.persistence == 0.46
        assert sc.beta == pytest.approx(0.06, abs=1e-15)
        assert sc.noise_variance == 1.0  # normalized to the thermal floor
        assert sc.path_losses.shape == (4000,)
        # 23 dBm over the -99 dBm thermal floor at the 1 km edge
        assert sc.path_losses.min() == pytest.approx(
            10 ** ((23 - 128.1 + 99) / 10), rel=0.5)

    def test_fig4_preset_fields(self):
        spec = spec_from_options({"preset": "paper-fig4"})
        assert spec.scenario.num_antennas == 2
        assert spec.scenario.pilot_length == 500
        assert spec.scenario.num_devices == 4000

    def test_beta_out_of_range_collected(self):
        with pytest.raises(ValidationError) as exc:
            spec_from_options(desk_options(activity_rate="0.7",
                                           persistence="0.5"))
        assert any("beta" in v for v in exc.value.violations)

    def test_all_violations_reported(self):
        with pytest.raises(ValidationError) as exc:
            spec_from_options(desk_options(activity_rate="1.7",
                                           noise_variance="-2",
                                           num_trials="0"))
        assert len(exc.value.violations) >= 3

    def test_config_file_roundtrip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment line\n"
            "num_devices = 60\n"
            "pilot_length = 24\n"
            "gamma = 1.0   # inline comment\n"
            "num_trials = 4\n"
            "l_grid = -5,0,5\n")
        spec = parse_config(path)
        assert spec.scenario.num_devices == 60
        np.testing.assert_array_equal(spec.l_grid, [-5.0, 0.0, 5.0])

    def test_unknown_key_is_parse_error(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("num_devices = 60\nbogus_key = 1\n")
        with pytest.raises(ParseError, match="bogus_key"):
            parse_config(path)

    def test_bad_value_reports_field(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("num_devices = sixty\npilot_length = 24\ngamma = 1\n")
        with pytest.raises(ParseError, match="num_devices"):
            parse_config(path)

    def test_missing_required_fields(self):
        with pytest.raises(ValidationError):
            spec_from_options({"gamma": "1.0"})

    def test_unknown_preset(self):
        with pytest.raises(ParseError, match="unknown preset"):
            spec_from_options({"preset": "fig9"})


class TestAnnulusGains:
    def test_radius_bounds_respected(self):
        gains = annulus_gains(5000, substream(0, "place"), cell_radius_km=1.0,
                              min_radius_km=0.05)
        hi = 10 ** ((23 - 30) / 10) * 10 ** ((-128.1 - 36.7 * np.log10(0.05)) / 10) \
            / (10 ** ((-169 - 30) / 10) * 1e7)
        lo = 10 ** ((23 - 30) / 10) * 10 ** (-128.1 / 10) \
            / (10 ** ((-169 - 30) / 10) * 1e7)
        assert gains.max() <= hi * (1 + 1e-9)
        assert gains.min() >= lo * (1 - 1e-9)

    def test_uniform_area_density(self):
        rng = substream(1, "place")
        gains = annulus_gains(200_000, rng, cell_radius_km=1.0,
                              min_radius_km=0.05)
        # invert the path-loss law back to distance and test r^2 uniformity
        tx = 10 ** ((23 - 30) / 10)
        noise = 10 ** ((-169 - 30) / 10) * 1e7
        loss_db = 10 * np.log10(gains * noise / tx)
        d = 10 ** ((-128.1 - loss_db) / 36.7)
        u = (d ** 2 - 0.05 ** 2) / (1.0 ** 2 - 0.05 ** 2)
        counts, _ = np.histogram(u, bins=10, range=(0, 1))
        assert counts.min() > 0.95 * len(u) / 10


class TestRunExperiment:
    def test_single_trial_single_block(self):
        spec = spec_from_options(desk_options(num_blocks="1", num_trials="1",
                                              variants="nosi"))
        result = run_experiment(spec)
        assert list(result.curves) == ["nosi"]
        assert len(result.curves["nosi"]) == 1
        assert result.curves["nosi"][0].num_trials == 1

    def test_parallel_matches_serial(self):
        spec = spec_from_options(desk_options())
        serial = run_experiment(replace(spec, parallelism=1))
        parallel = run_experiment(replace(spec, parallelism=3))
        for variant in spec.variants:
            for a, b in zip(serial.curves[variant], parallel.curves[variant]):
                np.testing.assert_array_equal(a.p_fa, b.p_fa)
                np.testing.assert_array_equal(a.p_md, b.p_md)
                np.testing.assert_array_equal(a.se_p_md, b.se_p_md)

    def test_variant_isolation(self):
        both = run_experiment(spec_from_options(desk_options()))
        only = run_experiment(spec_from_options(desk_options(variants="nosi")))
        for a, b in zip(both.curves["nosi"], only.curves["nosi"]):
            np.testing.assert_array_equal(a.p_fa, b.p_fa)
            np.testing.assert_array_equal(a.p_md, b.p_md)

    def test_trial_seeds_distinct_and_stable(self):
        seeds = [trial_seed(5, i) for i in range(100)]
        assert len(set(seeds)) == 100
        assert seeds[:3] == [trial_seed(5, i) for i in range(3)]

    def test_csv_roundtrip_exact(self, tmp_path):
        spec = spec_from_options(desk_options(num_trials="3"))
        result = run_experiment(spec)
        paths = emit_csv(result, tmp_path)
        loaded = read_roc_csv(paths["roc"])
        for variant in spec.variants:
            for j, curve in enumerate(result.curves[variant]):
                entry = loaded[(j + 1, variant)]
                np.testing.assert_array_equal(entry["p_fa"], curve.p_fa)
                np.testing.assert_array_equal(entry["p_md"], curve.p_md)
                nan_mask = np.isnan(curve.se_p_md)
                np.testing.assert_array_equal(entry["se_p_md"][~nan_mask],
                                              curve.se_p_md[~nan_mask])

    def test_csv_schema(self, tmp_path):
        spec = spec_from_options(desk_options(num_trials="2"))
        result = run_experiment(spec)
        paths = emit_csv(result, tmp_path)
        with open(paths["roc"]) as fh:
            header = fh.readline().strip().split(",")
            assert header == ["slot_j", "variant", "l", "P_FA", "P_MD",
                              "trials", "se_P_FA", "se_P_MD"]
            rows = fh.readlines()
        expected = len(spec.variants) * spec.scenario.num_blocks * len(spec.l_grid)
        assert len(rows) == expected
        assert os.path.exists(paths["se_trace"])
        assert os.path.exists(paths["metadata"])


class TestCurves:
    def test_denoiser_curve_zero_region_shrinks_with_evidence(self):
        grid = np.linspace(0, 2e-5, 501)
        rows = denoiser_response_curve(gamma=1e-8, tau=2e-6, tau_prev=2e-6,
                                       lam=0.1, alpha=0.91, beta=0.01,
                                       num_antennas=1,
                                       prev_magnitudes=[1e-7, 1e-3], grid=grid)
        def first_alive(prev_mag, variant):
            xs = [r[2] for r in rows if r[0] == variant and r[1] == prev_mag]
            ys = [r[3] for r in rows if r[0] == variant and r[1] == prev_mag]
            for x, y in zip(xs, ys):
                if x > 0 and y > 1e-3 * x:
                    return x
            return np.inf

        weak = first_alive(1e-7, "si")
        strong = first_alive(1e-3, "si")
        nosi = first_alive(0.0, "nosi")
        assert strong < nosi < weak

    def test_threshold_curve_monotone_and_bracketed(self):
        prev_grid = np.linspace(0, 2e-5, 401)
        rows, lower, upper = detector_threshold_curve(
            gamma=1e-8, tau=2e-6, tau_prev=2e-6, lam=0.1, alpha=0.91,
            beta=0.01, num_antennas=1, l=0.0, prev_grid=prev_grid)
        values = np.array([r[1] for r in rows])
        assert np.all(np.diff(values) <= 1e-25)
        assert np.all(values <= upper + 1e-25)
        assert np.all(values >= lower - 1e-25)
        assert lower < upper

    def test_default_l_grid_nonempty_and_sorted(self):
        grid = default_l_grid()
        assert grid.size > 0
        assert np.all(np.diff(grid) > 0)
