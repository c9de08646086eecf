import math
import warnings

import numpy as np
import pytest

from dislat.errors import ConfigurationError, NumericsError
from dislat.lattice import PERIOD, LatticeSpec, real_potential_value
from dislat.propagation import (AccuracyWarning, BoundaryContaminationWarning,
                                Grid, WaveField, carrier_envelope, cell_grid,
                                evolve_cell, evolve_line, fit_decay_rate,
                                line_grid, mean_position, mean_position_slope,
                                sech_envelope_fit, sech_pulse,
                                soliton_amplitude, soliton_integral,
                                spectrum_peaks)

LATTICE = LatticeSpec(v0=0.1, g0=0.0, sigma=math.pi / 20)
FOCUSING = LatticeSpec(v0=0.1, g0=0.0, sigma=math.pi / 20, g=1.0)


def smooth_cell_field(grid):
    return (1.0 + 0.3 * np.cos(grid.x)) * np.exp(0.2j * np.sin(grid.x))


class TestGrid:
    def test_cell_grid_geometry(self):
        g = cell_grid(0.3, points=512)
        assert g.length == pytest.approx(PERIOD)
        assert g.dx == pytest.approx(PERIOD / 512)
        assert g.offset == pytest.approx(0.3)
        assert g.x[0] == 0.0
        assert g.x[-1] == pytest.approx(PERIOD - g.dx)

    def test_cell_grid_wraps_quasimomentum(self):
        assert cell_grid(0.7).offset == pytest.approx(-0.3)

    def test_line_grid_geometry(self):
        g = line_grid(cells=16, points=2 ** 11)
        assert g.length == pytest.approx(16 * PERIOD)
        assert g.offset == 0.0
        assert g.x[0] == pytest.approx(-8 * PERIOD)

    def test_kinetic_wavenumbers_carry_the_offset(self):
        g = cell_grid(0.25, points=64)
        assert np.allclose(g.kinetic_wavenumbers, g.wavenumbers + 0.25)

    @pytest.mark.parametrize("points", [0, 1, 3, 100, 1000])
    def test_points_must_be_a_power_of_two(self, points):
        with pytest.raises(ConfigurationError):
            Grid(length=PERIOD, points=points)

    def test_length_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            Grid(length=0.0, points=64)

    def test_line_grid_needs_a_cell(self):
        with pytest.raises(ConfigurationError):
            line_grid(cells=0, points=64)


class TestInitialFields:
    def test_sech_pulse_values(self):
        g = line_grid(cells=4, points=256)
        f = sech_pulse(g, 0.3, 0.5, 2.0)
        want = 2.0 / np.cosh(0.5 * g.x) * np.exp(0.3j * g.x)
        assert np.allclose(f.values, want, atol=1e-15)
        assert f.time == 0.0

    def test_soliton_amplitude_matches_width(self):
        assert soliton_amplitude(0.4, 1.0) == pytest.approx(0.4 * math.sqrt(2.0))
        assert soliton_amplitude(0.4, 2.0) == pytest.approx(0.4)

    def test_soliton_amplitude_needs_focusing(self):
        with pytest.raises(ConfigurationError):
            soliton_amplitude(0.4, 0.0)

    def test_soliton_integral_is_width_independent(self):
        # integral of the matched pulse is pi*sqrt(2) regardless of width
        g = line_grid(cells=64, points=2 ** 12)
        vals = []
        for a in (0.2, 0.5, 1.0):
            f = sech_pulse(g, 0.0, a, soliton_amplitude(a, 1.0))
            vals.append(soliton_integral(f))
        assert np.allclose(vals, math.pi * math.sqrt(2.0), rtol=1e-6)

    def test_soliton_integral_of_nothing(self):
        g = line_grid(cells=4, points=64)
        f = WaveField(grid=g, values=np.zeros(64, complex), time=0.0)
        assert soliton_integral(f) == 0.0

    def test_mean_position(self):
        g = line_grid(cells=16, points=2 ** 10)
        f = sech_pulse(g, 0.0, 0.8, 1.0)
        assert mean_position(f) == pytest.approx(0.0, abs=1e-10)
        shifted = WaveField(grid=g, values=1.0 / np.cosh(0.8 * (g.x - 2.0)), time=0.0)
        assert mean_position(shifted) == pytest.approx(2.0, abs=1e-9)

    def test_mean_position_rejects_zero_field(self):
        g = line_grid(cells=4, points=64)
        with pytest.raises(ValueError):
            mean_position(WaveField(grid=g, values=np.zeros(64, complex), time=0.0))


class TestEvolveBasics:
    def test_linear_norm_conservation(self):
        grid = cell_grid(0.25, points=256)
        traj = evolve_cell(0.25, smooth_cell_field(grid), LATTICE,
                           dt=1e-2, t_final=20.0, sample_every=100)
        drift = np.abs(traj.rescaled_norm - traj.rescaled_norm[0]).max()
        assert drift < 1e-10
        assert traj.final_rescaled_norm == traj.rescaled_norm[-1]

    def test_plane_wave_picks_the_exact_kinetic_phase(self):
        free = LatticeSpec(v0=0.0, g0=0.0, sigma=math.pi / 20)
        u0 = np.ones(128, complex)
        traj = evolve_cell(0.3, u0, free, dt=1e-2, t_final=2.0, sample_every=200)
        want = np.exp(-0.5j * 0.3 ** 2 * 2.0)
        assert np.allclose(traj.final_field.values, want, atol=1e-12)

    def test_dissipation_is_monotone(self):
        spec = LatticeSpec(v0=0.1, g0=0.22, sigma=math.pi / 20)
        grid = cell_grid(0.25, points=1024)
        traj = evolve_cell(0.25, np.ones(1024, complex), spec,
                           dt=1e-3, t_final=5.0, sample_every=250)
        assert np.all(np.diff(traj.rescaled_norm) < 0.0)
        assert traj.final_rescaled_norm < 1.0

    def test_soliton_keeps_its_shape(self):
        lg = line_grid(cells=32, points=2 ** 11)
        free = LatticeSpec(v0=0.0, g0=0.0, sigma=math.pi / 20, g=1.0)
        u0 = sech_pulse(lg, 0.0, 0.5, soliton_amplitude(0.5, 1.0))
        traj = evolve_line(u0, free, dt=1e-3, t_final=5.0, sample_every=1000)
        got = np.abs(traj.final_field.values)
        want = np.abs(u0.values)
        assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-7

    def test_second_order_in_time(self):
        grid = cell_grid(0.3, points=256)
        u0 = smooth_cell_field(grid)

        def final(dt):
            return evolve_cell(0.3, u0, FOCUSING, dt=dt, t_final=1.0,
                               sample_every=int(round(1.0 / dt))).final_field.values

        ref = final(1e-4)
        ratio = (np.linalg.norm(final(8e-3) - ref)
                 / np.linalg.norm(final(4e-3) - ref))
        assert 3.8 < ratio < 4.3

    def test_energy_conservation_without_loss(self):
        lg = line_grid(cells=16, points=2 ** 11)
        u0 = sech_pulse(lg, 0.2, 0.8, soliton_amplitude(0.8, 1.0))

        def energy(values):
            hat = np.fft.fft(values)
            dpsi = np.fft.ifft(1j * lg.wavenumbers * hat)
            dens = np.abs(values) ** 2
            e = (0.5 * np.abs(dpsi) ** 2
                 + real_potential_value(lg.x, FOCUSING) * dens
                 - 0.25 * FOCUSING.g * dens ** 2)
            return float(np.sum(e) * lg.dx)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryContaminationWarning)
            traj = evolve_line(u0, FOCUSING, dt=1e-3, t_final=10.0, sample_every=1000)
        e0 = energy(u0.values)
        e1 = energy(traj.final_field.values)
        assert abs(e1 - e0) / abs(e0) < 1e-6

    def test_free_pulse_moves_at_its_carrier_velocity(self):
        free = LatticeSpec(v0=0.0, g0=0.0, sigma=math.pi / 20)
        lg = line_grid(cells=32, points=2 ** 12)
        u0 = sech_pulse(lg, 0.3, 0.1, 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = evolve_line(u0, free, dt=5e-3, t_final=10.0, sample_every=200)
        slope = np.polyfit(traj.times, traj.mean_x, 1)[0]
        assert slope == pytest.approx(0.3, abs=1e-4)

    def test_power_stays_in_quasimomentum_windows(self):
        lg = line_grid(cells=64, points=2 ** 13)
        u0 = sech_pulse(lg, 0.3, 0.03, 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = evolve_line(u0, LATTICE, dt=5e-3, t_final=5.0, sample_every=1000)
        f = traj.final_field
        power = np.abs(np.fft.fft(f.values)) ** 2
        kappa = f.grid.wavenumbers
        dist = lambda c: np.abs(kappa - c - np.round(kappa - c))
        inside = (dist(0.3) <= 0.1) | (dist(-0.3) <= 0.1)
        assert power[inside].sum() / power.sum() > 0.999

    def test_out_of_zone_carrier_is_folded(self):
        grid = cell_grid(0.3, points=128)
        u0 = smooth_cell_field(grid)
        a = evolve_cell(1.3, u0, LATTICE, dt=1e-2, t_final=1.0, sample_every=100)
        b = evolve_cell(0.3, u0 * np.exp(1j * grid.x), LATTICE,
                        dt=1e-2, t_final=1.0, sample_every=100)
        assert np.allclose(a.final_field.values, b.final_field.values,
                           rtol=1e-13, atol=1e-13)
        assert np.allclose(a.rescaled_norm, b.rescaled_norm, rtol=1e-13)


class TestEvolveValidation:
    def test_time_grid_must_divide_evenly(self):
        u0 = np.ones(64, complex)
        with pytest.raises(ConfigurationError):
            evolve_cell(0.0, u0, LATTICE, dt=1e-2, t_final=0.105)

    @pytest.mark.parametrize("dt", [0.0, -1e-3, math.nan])
    def test_dt_must_be_positive(self, dt):
        with pytest.raises(ConfigurationError):
            evolve_cell(0.0, np.ones(64, complex), LATTICE, dt=dt, t_final=1.0)

    def test_sampling_stride_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            evolve_cell(0.0, np.ones(64, complex), LATTICE,
                        dt=1e-2, t_final=1.0, sample_every=0)

    def test_zero_field_is_rejected(self):
        with pytest.raises(ConfigurationError):
            evolve_cell(0.0, np.zeros(64, complex), LATTICE, dt=1e-2, t_final=1.0)

    def test_non_finite_field_is_a_numerics_error(self):
        u0 = np.ones(64, complex)
        u0[3] = math.nan
        with pytest.raises(NumericsError):
            evolve_cell(0.0, u0, LATTICE, dt=1e-2, t_final=1.0)

    def test_line_run_rejects_offset_grids(self):
        g = cell_grid(0.3, points=64)
        f = WaveField(grid=g, values=np.ones(64, complex), time=0.0)
        with pytest.raises(ConfigurationError):
            evolve_line(f, LATTICE, dt=1e-2, t_final=1.0)

    def test_line_run_rejects_torn_boxes(self):
        g = Grid(length=5.0, points=64)
        f = WaveField(grid=g, values=np.ones(64, complex), time=0.0)
        with pytest.raises(ConfigurationError):
            evolve_line(f, LATTICE, dt=1e-2, t_final=1.0)


class TestWarnings:
    def test_coarse_grid_warns_when_absorbers_are_narrow(self):
        spec = LatticeSpec(v0=0.1, g0=0.22, sigma=math.pi / 20)
        with pytest.warns(AccuracyWarning, match="sigma"):
            evolve_cell(0.0, np.ones(64, complex), spec, dt=1e-3, t_final=0.01,
                        sample_every=10)

    def test_fine_grid_is_quiet(self):
        spec = LatticeSpec(v0=0.1, g0=0.22, sigma=math.pi / 20)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            evolve_cell(0.0, np.ones(1024, complex), spec, dt=1e-3, t_final=0.01,
                        sample_every=10)

    def test_coarse_dt_warns(self):
        rng = np.random.default_rng(3)
        u0 = rng.normal(size=128) + 1j * rng.normal(size=128)
        with pytest.warns(AccuracyWarning, match="phase"):
            evolve_cell(0.0, u0, LATTICE, dt=0.1, t_final=0.1)

    def test_escaping_pulse_warns_about_the_box_edge(self):
        free = LatticeSpec(v0=0.0, g0=0.0, sigma=math.pi / 20)
        lg = line_grid(cells=4, points=2 ** 9)
        u0 = sech_pulse(lg, 0.4, 0.5, 1.0)
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            evolve_line(u0, free, dt=1e-3, t_final=40.0, sample_every=2000)
        hits = [w for w in rec if issubclass(w.category, BoundaryContaminationWarning)]
        assert len(hits) == 1  # raised once, not per sample


class TestDiagnostics:
    def test_decay_rate_recovers_an_exponential(self):
        t = np.linspace(0.0, 50.0, 201)
        norms = 0.7 * np.exp(-0.02 * t)
        assert fit_decay_rate(t, norms, 10.0, 40.0) == pytest.approx(0.02, rel=1e-10)

    def test_decay_rate_needs_samples_and_positive_norms(self):
        t = np.linspace(0.0, 50.0, 201)
        with pytest.raises(ValueError):
            fit_decay_rate(t, np.exp(-t * 0.1), 49.9, 49.95)
        with pytest.raises(ValueError):
            fit_decay_rate(t, np.zeros_like(t), 10.0, 40.0)

    def test_mean_position_slope(self):
        t = np.linspace(0.0, 100.0, 401)
        x = 1.0 + 0.25 * t
        assert mean_position_slope(t, x) == pytest.approx(0.25, rel=1e-10)
        # only the tail is fitted
        bent = np.where(t < 80.0, 3.0 * t, 240.0)
        assert mean_position_slope(t, bent, fraction=0.1) == pytest.approx(0.0, abs=1e-12)

    def test_spectrum_peaks_locates_two_carriers(self):
        g = line_grid(cells=32, points=2 ** 11)
        dk = 2 * math.pi / g.length
        k_a, k_b = 10 * dk, -13 * dk
        psi = np.exp(1j * k_a * g.x) + 0.5 * np.exp(1j * k_b * g.x)
        f = WaveField(grid=g, values=psi, time=0.0)
        peaks = spectrum_peaks(f, count=4)
        assert len(peaks) == 2
        (k1, a1), (k2, a2) = sorted(peaks, key=lambda p: -p[1])
        assert abs(k1 - k_a) < 0.2 * dk
        assert abs(k2 - k_b) < 0.2 * dk
        assert a1 / a2 == pytest.approx(2.0, rel=0.05)

    def test_peak_location_beats_the_grid_by_interpolation(self):
        # smooth envelope between bins: the refined peak lands much closer
        # than one spectral cell
        g = line_grid(cells=32, points=2 ** 11)
        dk = 2 * math.pi / g.length
        k0 = 10.37 * dk
        f = sech_pulse(g, k0, 0.2, 1.0)
        peaks = spectrum_peaks(f, count=1)
        assert abs(peaks[0][0] - k0) < 0.2 * dk

    def test_spectrum_peak_floor_silences_noise(self):
        g = line_grid(cells=8, points=2 ** 9)
        rng = np.random.default_rng(11)
        psi = np.exp(1j * 0.25 * g.x) + 1e-8 * rng.normal(size=g.points)
        f = WaveField(grid=g, values=psi, time=0.0)
        peaks = spectrum_peaks(f, count=6, floor=1e-6)
        assert len(peaks) == 1

    def test_carrier_envelope_of_one_sided_field(self):
        # spectrum must clear kappa = 0 for the split to be exact, and the
        # tails must clear the box seam: width 0.13 under carrier 2 does both
        g = line_grid(cells=64, points=2 ** 12)
        env = 1.0 / np.cosh(0.13 * g.x)
        f = WaveField(grid=g, values=env * np.exp(2j * g.x), time=0.0)
        assert np.allclose(carrier_envelope(f), env, atol=1e-9)

    def test_sech_envelope_fit_on_a_standing_wave(self):
        g = line_grid(cells=32, points=2 ** 11)
        a = 0.15
        env = a * math.sqrt(2.0) / np.cosh(a * (g.x - 3.0))
        f = WaveField(grid=g, values=(env * np.cos(0.5 * g.x + 0.3)).astype(complex),
                      time=0.0)
        fit = sech_envelope_fit(f, FOCUSING)
        assert fit.width_param == pytest.approx(a, rel=0.02)
        assert fit.center == pytest.approx(3.0, abs=0.1)
        assert fit.misfit < 0.05

    def test_sech_envelope_fit_needs_focusing(self):
        g = line_grid(cells=4, points=64)
        f = WaveField(grid=g, values=np.ones(64, complex), time=0.0)
        with pytest.raises(ConfigurationError):
            sech_envelope_fit(f, LATTICE)
