import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from resetwalk.analytic import mfpt_pure_drift_unconditional
from resetwalk.inversion import survival_closed_form_unconditional
from resetwalk.model import DeterministicJumps, Direction, ExponentialJumps, ModelParams, ParameterError
from resetwalk.simulate import (
    BLOCK_SIZE,
    CAP_FACTOR,
    DEFAULT_CAP,
    CensoredSamplesError,
    check_path,
    default_cap,
    derive_seed,
    estimate_char_function,
    estimate_mfpt,
    estimate_stationary,
    estimate_survival,
    first_passage_times,
    positions,
    sample_first_passage,
    sample_position,
    simulate_path,
    worker_count,
)

PLUS, MINUS = Direction.PLUS, Direction.MINUS


def rng(seed=0):
    return np.random.default_rng(seed)


def ballistic(speed=2.0):
    return ModelParams(0.0, 1.0, speed_plus=speed)


def drift(rate, rho, speed=1.0):
    return ModelParams(rate, rho, speed_plus=speed, speed_minus=1.0)


def exp_jumps(rate, rho, gamma, jump_rate=1.0):
    return ModelParams(rate, rho, speed_minus=1.0, jump_rate_plus=jump_rate, jump_law_plus=ExponentialJumps(gamma))


EVERYTHING = ModelParams(
    0.9, 0.45, speed_plus=0.7, speed_minus=1.1, jump_rate_plus=0.8, jump_rate_minus=0.5,
    jump_law_plus=ExponentialJumps(2.0), jump_law_minus=DeterministicJumps(0.4),
)


class TestSimulatePath:
    def test_ballistic(self):
        path = simulate_path(ModelParams(0.0, 1.0, speed_plus=1.0), 5.0, rng(), (0.0, PLUS))
        assert path.events == ()
        assert path.final_position == 5.0

    def test_reset_count_is_poisson(self):
        p = drift(1e3, 0.5)
        counts = [len(simulate_path(p, 1.0, rng(i)).events) for i in range(100)]
        assert abs(np.mean(counts) - 1e3) <= 4 * math.sqrt(1e3)

    def test_always_rightward_after_reset(self):
        path = simulate_path(ModelParams(2.0, 1.0, speed_plus=1.0, speed_minus=1.0), 50.0, rng(3))
        resets = [e for e in path.events if e.kind == "reset"]
        assert resets and all(e.direction is PLUS for e in resets)

    @pytest.mark.parametrize(
        "p",
        [EVERYTHING, drift(1.5, 0.3), exp_jumps(0.7, 0.8, 1.5)],
        ids=["everything", "drift", "exp-jumps"],
    )
    def test_paths_satisfy_invariants(self, p):
        g = rng(11)
        for i in range(1000):
            path = simulate_path(p, 10.0, g)
            assert check_path(path, p) == [], i

    def test_position_at(self):
        path = simulate_path(EVERYTHING, 8.0, rng(2))
        assert path.position_at(8.0, EVERYTHING) == pytest.approx(path.final_position, abs=1e-12)
        for ev in path.events:
            assert path.position_at(ev.time, EVERYTHING) == ev.position

    def test_check_path_detects_corruption(self):
        from dataclasses import replace

        path = simulate_path(EVERYTHING, 20.0, rng(4))
        resets = [i for i, e in enumerate(path.events) if e.kind == "reset"]
        events = list(path.events)
        events[resets[0]] = replace(events[resets[0]], position=0.5 * events[resets[0]].direction.sign)
        assert check_path(replace(path, events=tuple(events)), EVERYTHING)

    def test_errors(self):
        with pytest.raises(ValueError):
            simulate_path(EVERYTHING, 0.0, rng())
        with pytest.raises(ValueError):
            simulate_path(EVERYTHING, 1.0, rng(), (0.5, MINUS))
        with pytest.raises(ParameterError):
            simulate_path(ModelParams(1.0, 0.5, speed_minus=1.0), 1.0, rng())

    def test_inter_reset_times_exponential(self):
        rate = 1.3
        p = drift(rate, 0.5)
        g = rng(21)
        gaps = []
        for _ in range(10_000):
            # the start is a renewal point; keep the first three complete gaps
            path = simulate_path(p, 40.0, g)
            times = [0.0] + [e.time for e in path.events if e.kind == "reset"][:3]
            assert len(times) == 4
            gaps.extend(np.diff(times))
        result = stats.kstest(gaps, "expon", args=(0, 1 / rate))
        assert result.pvalue > 1e-3


class TestPositions:
    def test_time_zero(self):
        assert sample_position(EVERYTHING, 0.0, rng()) == 0.0

    def test_ballistic(self):
        assert sample_position(ballistic(2.0), 1.5, rng()) == 3.0

    def test_rightward_support(self):
        p = ModelParams(1.0, 1.0, jump_rate_plus=1.0, jump_law_plus=ExponentialJumps(1.0))
        x, _ = positions(p, 20.0, 20_000, seed=1)
        assert x.min() >= 0

    def test_atom_flag(self):
        x, at_origin = positions(exp_jumps(1.0, 0.5, 1.0), 20.0, 20_000, seed=2)
        assert np.all(x[at_origin] == 0)


class TestFirstPassage:
    def test_ballistic_crossing(self):
        s = sample_first_passage(ballistic(2.0), 3.0, 100.0, rng())
        assert s.crossed and s.time == 1.5

    def test_never_crosses(self):
        p = ModelParams(0.0, 0.0, speed_minus=1.0)
        s = sample_first_passage(p, 1.0, 50.0, rng())
        assert not s.crossed and s.time == 50.0

    def test_crossing_time_positive(self):
        times, crossed = first_passage_times(EVERYTHING, 1.0, 5000, 1e4, seed=3)
        assert np.all(times[crossed] > 0)

    def test_errors(self):
        with pytest.raises(ValueError):
            sample_first_passage(EVERYTHING, 0.0, 1.0, rng())
        with pytest.raises(ValueError):
            sample_first_passage(EVERYTHING, 1.0, 0.0, rng())

    def test_ballistic_estimate(self):
        est = estimate_mfpt(ballistic(2.0), 3.0, 1000)
        assert est.mean == 1.5 and est.stderr == 0.0 and est.censored == 0

    def test_pure_drift_always_right(self):
        est = estimate_mfpt(drift(1.0, 1.0), 1.0, 100_000, seed=5)
        assert est.within(math.e - 1, k=4)

    def test_pure_drift_unit(self):
        est = estimate_mfpt(drift(1.0, 0.5), 1.0, 1_000_000, seed=6)
        assert est.within(2 * math.e - 1, k=4)

    def test_exp_jumps_equal_rates(self):
        est = estimate_mfpt(exp_jumps(1.0, 1.0, 4.0), 1.0, 1_000_000, seed=7)
        assert est.within(2 * math.e**2 - 1, k=4)

    def test_censoring_reported_and_enforced(self):
        p = drift(0.1, 0.2)
        est = estimate_mfpt(p, 1.0, 2000, cap=1.0, seed=1)
        assert est.censored > 0 and est.n == 2000
        with pytest.raises(CensoredSamplesError):
            estimate_mfpt(p, 1.0, 2000, cap=1.0, seed=1, require_uncensored=True)

    def test_default_cap(self):
        p = drift(0.5, 0.7)
        from resetwalk.analytic import mfpt_pure_drift

        minus = mfpt_pure_drift(0.0, MINUS, 0.5, 1.0, 0.7, 1.0)
        assert default_cap(p, 1.0) == pytest.approx(CAP_FACTOR * minus)
        assert default_cap(ModelParams(0.0, 0.5, speed_plus=1.0, speed_minus=1.0), 1.0) == DEFAULT_CAP


class TestDeterminism:
    def test_bit_identical_across_workers_and_runs(self):
        n = 2 * BLOCK_SIZE + 123
        a = first_passage_times(EVERYTHING, 1.0, n, 1e3, seed=42, workers=1)
        b = first_passage_times(EVERYTHING, 1.0, n, 1e3, seed=42, workers=4)
        c = first_passage_times(EVERYTHING, 1.0, n, 1e3, seed=42, workers=3)
        for x, y in ((a, b), (a, c)):
            assert np.array_equal(x[0], y[0]) and np.array_equal(x[1], y[1])

    def test_positions_identical_across_workers(self):
        n = BLOCK_SIZE + 7
        a = positions(EVERYTHING, 3.0, n, seed=9, workers=1)
        b = positions(EVERYTHING, 3.0, n, seed=9, workers=2)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_seeds_differ(self):
        a, _ = first_passage_times(EVERYTHING, 1.0, 100, 1e3, seed=1)
        b, _ = first_passage_times(EVERYTHING, 1.0, 100, 1e3, seed=2)
        assert not np.array_equal(a, b)

    def test_derived_seeds_are_independent_streams(self):
        a = np.random.default_rng(derive_seed(5, 0)).random(4)
        b = np.random.default_rng(derive_seed(5, 1)).random(4)
        assert not np.array_equal(a, b)

    def test_worker_cap(self, monkeypatch):
        monkeypatch.setenv("RESETWALK_THREADS", "2")
        assert worker_count(8) == 2
        monkeypatch.setenv("RESETWALK_THREADS", "0")
        assert worker_count(8) == 8


class TestSurvival:
    def test_time_zero_and_ballistic(self):
        out = estimate_survival(ballistic(2.0), 3.0, [0.0, 1.0, 1.49, 1.51, 3.0], 500)
        assert [e.mean for _, e in out] == [1.0, 1.0, 1.0, 0.0, 0.0]

    def test_bounds_and_monotone(self):
        grid = np.linspace(0, 10, 30)
        out = estimate_survival(EVERYTHING, 1.0, grid, 20_000, seed=3)
        means = np.array([e.mean for _, e in out])
        errs = np.array([e.stderr for _, e in out])
        assert np.all((means >= 0) & (means <= 1))
        assert np.all(np.diff(means) <= 4 * errs[1:] + 1e-15)

    def test_matches_inversion(self):
        p = drift(1.0, 0.5)
        # avoid the ballistic instant t = 1 where the curve jumps
        grid = [t for t in np.linspace(0.1, 6.0, 21) if abs(t - 1.0) > 0.05][:20]
        out = estimate_survival(p, 1.0, grid, 100_000, seed=8)
        for t, est in out:
            assert est.within(survival_closed_form_unconditional(p, 1.0, t), k=4) or est.stderr == 0 and est.mean == 1.0

    def test_grid_must_be_sorted(self):
        with pytest.raises(ValueError):
            estimate_survival(EVERYTHING, 1.0, [1.0, 0.5], 10)


class TestStationary:
    def test_errors(self):
        with pytest.raises(ValueError):
            estimate_stationary(ModelParams(0.0, 0.5, speed_plus=1.0, speed_minus=1.0), 100)
        with pytest.raises(ValueError):
            estimate_stationary(exp_jumps(1.0, 0.5, 1.0), 100, t_snapshot=5.0)

    def test_default_snapshot(self):
        est = estimate_stationary(exp_jumps(2.0, 0.5, 1.0), 1000)
        assert est.t_snapshot == 10.0

    def test_density_normalisation(self):
        est = estimate_stationary(exp_jumps(1.0, 0.5, 1.0), 50_000, seed=3)
        mass = float(np.sum(est.density * np.diff(est.edges)))
        assert mass + est.atom.mean + est.outside == pytest.approx(1.0, abs=1e-12)


class TestCharFunction:
    def test_zero_frequency_exact(self):
        est = estimate_char_function(EVERYTHING, 0.0, 2.0, 1000)
        assert est.mean == 1.0 and est.stderr == 0.0

    def test_ballistic(self):
        est = estimate_char_function(ballistic(1.5), 0.8, 2.0, 100)
        assert est.mean == pytest.approx(np.exp(1j * 0.8 * 3.0), abs=1e-12)

    def test_modulus(self):
        est = estimate_char_function(EVERYTHING, 1.3, 2.0, 10_000, seed=4)
        assert abs(est.mean) <= 1 + 4 * est.stderr


@given(
    st.floats(0.0, 3.0), st.floats(0.0, 1.0), st.floats(0.1, 2.0), st.floats(0.1, 2.0),
    st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 2**32 - 1),
)
def test_random_paths_are_consistent(rate, rho, vp, vm, jp, jm, seed):
    p = ModelParams(rate, rho, vp, vm, jp, jm, ExponentialJumps(1.5), DeterministicJumps(0.3))
    g = rng(seed)
    for _ in range(5):
        assert check_path(simulate_path(p, 5.0, g), p) == []


@given(st.floats(0.2, 3.0), st.floats(0.2, 1.0))
def test_mfpt_estimate_is_sane(rate, rho):
    p = drift(rate, rho)
    est = estimate_mfpt(p, 1.0, 2000, seed=1)
    assert est.censored == 0
    assert est.mean >= 1.0  # nothing crosses before the ballistic time
    # generous: the estimator has a finite-sample spread, not a bias
    assert est.within(mfpt_pure_drift_unconditional(rate, 1.0, rho, 1.0), k=8)
