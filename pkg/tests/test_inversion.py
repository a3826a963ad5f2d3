import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from resetwalk.analytic import mfpt_exp_jumps, mfpt_pure_drift, mfpt_pure_drift_unconditional, stationary_cf
from resetwalk.inversion import (
    EULER,
    STEHFEST,
    TALBOT,
    InversionConfig,
    InversionError,
    char_function_t,
    char_function_t_unconditional,
    first_passage_kernel,
    kernel_config,
    laplace_invert,
    mfpt_general,
    mfpt_general_unconditional,
    stehfest_weights,
    survival_closed_form,
    survival_closed_form_unconditional,
    survival_general,
    survival_general_unconditional,
)
from resetwalk.model import DeterministicJumps, Direction, ExponentialJumps, ModelParams, ParameterError, ZeroJumps
from resetwalk.simulate import estimate_char_function

PLUS, MINUS = Direction.PLUS, Direction.MINUS

# Delay-ODE solutions of the backward equation for drift plus fixed jumps (tests/oracles.py).
# (reset_rate, speed, jump_rate, size, rho, level) -> (T(0,+), T(0,-), T)
FIXED_JUMP_ODE = {
    (0.7, 0.5, 0.8, 0.3, 0.6, 1.0): (3.785008878435619, 6.165961259388001, 4.737389830816571),
    (1.2, 1.0, 0.6, 0.37, 0.5, 1.5): (5.51097700080858, 7.177643667475247, 6.344310334141914),
}
# Unconditional survival by 30-digit de Hoog inversion (tests/oracles.py).
PURE_DRIFT_SURVIVAL = {0.5: 1.0, 1.5: 0.6462843960255693, 3.0: 0.39462043627490234, 6.0: 0.16258650151182977}
EXP_JUMPS_SURVIVAL = {0.5: 0.9906878331951121, 2.0: 0.9336034156391851, 10.0: 0.6116309995212668}


def drift(rate, rho, speed=1.0):
    return ModelParams(rate, rho, speed_plus=speed, speed_minus=1.0)


def exp_jumps(rate, rho, gamma, jump_rate=1.0):
    return ModelParams(rate, rho, speed_minus=1.0, jump_rate_plus=jump_rate, jump_law_plus=ExponentialJumps(gamma))


def fixed_jumps(rate, speed, jump_rate, size, rho):
    return ModelParams(rate, rho, speed_plus=speed, speed_minus=1.0, jump_rate_plus=jump_rate, jump_law_plus=DeterministicJumps(size))


class TestLaplaceInvert:
    A = 0.5
    PAIRS = {
        "constant": (lambda s: 1 / s, lambda t: 1.0),
        "exponential": (lambda s: 1 / (s + 0.5), lambda t: math.exp(-0.5 * t)),
        "ramp": (lambda s: 1 / s**2, lambda t: t),
        "t exp": (lambda s: 1 / (s + 0.5) ** 2, lambda t: t * math.exp(-0.5 * t)),
        "saturating": (lambda s: 1 / (s * (s + 0.5)), lambda t: (1 - math.exp(-0.5 * t)) / 0.5),
    }

    @pytest.mark.parametrize("name", sorted(PAIRS))
    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_pairs_default(self, name, t):
        fhat, f = self.PAIRS[name]
        assert laplace_invert(fhat, t) == pytest.approx(f(t), rel=1e-7)

    def test_examples(self):
        for cfg in (STEHFEST, TALBOT):
            assert laplace_invert(lambda r: 1 / r, 3.3, cfg) == pytest.approx(1.0, abs=1e-8)
        # Euler's discretisation error is exp(-shift) ~ 1e-8
        assert laplace_invert(lambda r: 1 / r, 3.3, EULER) == pytest.approx(1.0, abs=5e-8)
        assert laplace_invert(lambda r: 1 / (r + 1), 1.0) == pytest.approx(math.exp(-1), abs=1e-8)
        assert laplace_invert(lambda r: 1 / r**2, 2.0) == pytest.approx(2.0, abs=1e-7)

    def test_stehfest_smooth_pair(self):
        assert laplace_invert(lambda r: 1 / (r + 1), 1.0, STEHFEST) == pytest.approx(math.exp(-1), rel=1e-5)

    def test_complex_valued(self):
        # exp(i t) <-> 1/(s - i)
        assert laplace_invert(lambda s: 1 / (s - 1j), 2.0, complex_valued=True) == pytest.approx(np.exp(2j), abs=1e-8)

    def test_config_validation(self):
        for order in (3, 22, 2):
            with pytest.raises(ValueError):
                InversionConfig(method="stehfest", order=order)
        with pytest.raises(ValueError):
            InversionConfig(method="bogus")
        with pytest.raises(ValueError):
            laplace_invert(lambda s: 1 / s, 0.0)

    def test_stehfest_weights_sum_to_zero(self):
        for order in range(4, 21, 2):
            assert abs(sum(stehfest_weights(order))) < 1e-6 * max(abs(w) for w in stehfest_weights(order))


class TestMfptGeneral:
    def test_pure_drift_grid(self):
        for rate in np.linspace(0.2, 3.0, 5):
            for rho in (0.3, 0.8):
                exact = mfpt_pure_drift_unconditional(rate, 1.0, rho, 1.0)
                assert mfpt_general_unconditional(drift(rate, rho), 1.0) == pytest.approx(exact, rel=1e-6)

    def test_exp_jumps_grid(self):
        for rate in np.linspace(0.2, 3.0, 5):
            for rho in (0.3, 0.8):
                exact = mfpt_exp_jumps(rate, 1.0, 4.0, rho, 1.0)[2]
                assert mfpt_general_unconditional(exp_jumps(rate, rho, 4.0), 1.0) == pytest.approx(exact, rel=1e-6)

    def test_general_start(self):
        p = drift(0.9, 0.4, speed=1.3)
        for x in (0.0, 0.3, 1.1):
            assert mfpt_general(p, 1.5, x, PLUS) == pytest.approx(mfpt_pure_drift(x, PLUS, 0.9, 1.3, 0.4, 1.5), rel=1e-6)

    @pytest.mark.parametrize("key", sorted(FIXED_JUMP_ODE))
    def test_fixed_jumps_match_delay_ode(self, key):
        rate, speed, lam, size, rho, level = key
        p = fixed_jumps(rate, speed, lam, size, rho)
        plus, minus, unc = FIXED_JUMP_ODE[key]
        assert mfpt_general(p, level, 0.0, PLUS) == pytest.approx(plus, rel=1e-6)
        assert mfpt_general(p, level, 0.0, MINUS) == pytest.approx(minus, rel=1e-6)
        assert mfpt_general_unconditional(p, level) == pytest.approx(unc, rel=1e-6)

    def test_small_fixed_jumps_act_as_extra_drift(self):
        speed, lam, rate, rho, level = 1.0, 2.0, 0.8, 0.6, 1.0
        a = 1e-3 * level
        p = fixed_jumps(rate, speed, lam, a, rho)
        approx = mfpt_pure_drift_unconditional(rate, speed + lam * a, rho, level)
        assert mfpt_general_unconditional(p, level) == pytest.approx(approx, rel=1e-2)

    def test_minus_start_independent_of_position(self):
        for p in (drift(0.8, 0.5), exp_jumps(0.8, 0.5, 2.0), fixed_jumps(0.8, 1.0, 0.5, 0.3, 0.5)):
            values = [mfpt_general(p, 1.0, x, MINUS) for x in np.linspace(-1.0, 0.0, 6)]
            assert max(values) - min(values) <= 1e-10 * max(values)

    def test_sentinels_and_errors(self):
        assert mfpt_general(drift(1.0, 0.0), 1.0, 0.0, PLUS) == math.inf
        assert mfpt_general(drift(0.0, 0.5), 1.0, 0.0, MINUS) == math.inf
        assert mfpt_general(drift(0.0, 1.0, speed=2.0), 1.0) == pytest.approx(0.5, rel=1e-8)
        with pytest.raises(ValueError):
            mfpt_general(drift(1.0, 0.5), 1.0, 0.5, MINUS)
        with pytest.raises(ParameterError):
            mfpt_general(ModelParams(1.0, 0.0, speed_minus=1.0), 1.0)

    def test_talbot_refuses_atomic_laws(self):
        p = fixed_jumps(0.8, 1.0, 0.6, 0.37, 0.5)
        assert kernel_config(p) is EULER
        with pytest.raises(InversionError):
            first_passage_kernel(p, 0.5, TALBOT)
        assert kernel_config(drift(1.0, 0.5)) is TALBOT


KERNEL_Z = np.linspace(0.05, 2.0, 25)


@pytest.mark.parametrize(
    "law,speed",
    [(ExponentialJumps(2.0), 1.0), (ExponentialJumps(2.0), 0.0), (ZeroJumps(), 1.0), (DeterministicJumps(0.0), 1.0)],
    ids=["exp-drift", "exp-only", "zero", "fixed-size-zero"],
)
def test_stehfest_and_talbot_agree_on_kernel(law, speed):
    p = ModelParams(0.8, 0.5, speed_plus=speed, speed_minus=1.0, jump_rate_plus=0.6, jump_law_plus=law)
    worst = max(abs(first_passage_kernel(p, z, STEHFEST) - first_passage_kernel(p, z, TALBOT)) for z in KERNEL_Z)
    assert worst <= 1e-5


@pytest.mark.xfail(
    strict=True,
    reason="Gaver-Stehfest cannot resolve the kinks of the fixed-jump kernel to 1e-5 in double precision; "
    "Talbot overflows on this transform, so the Euler inverter is the reference",
)
@pytest.mark.parametrize("speed", [1.0, 0.0], ids=["with-drift", "jumps-only"])
def test_stehfest_matches_reference_on_fixed_jump_kernel(speed):
    p = ModelParams(0.8, 0.5, speed_plus=speed, speed_minus=1.0, jump_rate_plus=0.6, jump_law_plus=DeterministicJumps(0.37))
    worst = max(abs(first_passage_kernel(p, z, STEHFEST) - first_passage_kernel(p, z, EULER)) for z in KERNEL_Z)
    assert worst <= 1e-5


def test_fixed_jump_kernel_euler_matches_stehfest_loosely():
    # the Gaver-Stehfest error on this kernel stays bounded at a few 1e-4
    p = ModelParams(0.8, 0.5, speed_plus=1.0, speed_minus=1.0, jump_rate_plus=0.6, jump_law_plus=DeterministicJumps(0.37))
    worst = max(abs(first_passage_kernel(p, z, STEHFEST) - first_passage_kernel(p, z, EULER)) for z in KERNEL_Z)
    assert worst <= 5e-4


@given(st.floats(0.1, 3.0), st.floats(0.1, 1.0), st.sampled_from(["drift", "exp", "fixed"]))
def test_mfpt_general_nondecreasing_in_level(rate, rho, kind):
    p = {"drift": drift(rate, rho), "exp": exp_jumps(rate, rho, 2.0), "fixed": fixed_jumps(rate, 0.8, 0.6, 0.3, rho)}[kind]
    values = [mfpt_general_unconditional(p, lv) for lv in np.linspace(0.2, 2.0, 8)]
    assert np.all(np.diff(values) >= 0)


class TestSurvival:
    @pytest.mark.parametrize("t", sorted(PURE_DRIFT_SURVIVAL))
    def test_pure_drift_against_high_precision(self, t):
        p = drift(0.9, 0.6)
        assert survival_closed_form_unconditional(p, 1.0, t) == pytest.approx(PURE_DRIFT_SURVIVAL[t], abs=1e-6)
        assert survival_general_unconditional(p, 1.0, t) == pytest.approx(PURE_DRIFT_SURVIVAL[t], abs=1e-6)

    @pytest.mark.parametrize("t", sorted(EXP_JUMPS_SURVIVAL))
    def test_exp_jumps_against_high_precision(self, t):
        p = exp_jumps(0.7, 0.6, 4.0)
        assert survival_closed_form_unconditional(p, 1.0, t) == pytest.approx(EXP_JUMPS_SURVIVAL[t], abs=1e-6)
        assert survival_general_unconditional(p, 1.0, t) == pytest.approx(EXP_JUMPS_SURVIVAL[t], abs=1e-6)

    def test_short_time_is_one(self):
        p = drift(1.0, 0.5)
        assert survival_general(p, 1.0, 0.3, PLUS, 1e-6 * 1.0) == pytest.approx(1.0, abs=1e-3)
        p = fixed_jumps(0.8, 1.0, 0.6, 0.37, 0.5)
        assert survival_general(p, 1.0, 0.0, PLUS, 1e-6) == pytest.approx(1.0, abs=1e-3)

    def test_general_matches_closed_form_single_inversion(self):
        p = drift(1.3, 0.45)
        for x, d in ((0.0, PLUS), (0.4, PLUS), (-0.3, MINUS)):
            for t in (0.3, 0.9, 2.0, 5.0):
                a = survival_general(p, 1.0, x, d, t)
                b = survival_closed_form(p, 1.0, t, x, d)
                assert a == pytest.approx(b, abs=1e-4)

    def test_boundary_start_with_drift(self):
        assert survival_general(drift(1.0, 0.5), 1.0, 1.0, PLUS, 0.5) == 0.0

    def test_needs_euler(self):
        with pytest.raises(ValueError):
            survival_general(drift(1.0, 0.5), 1.0, 0.0, PLUS, 1.0, STEHFEST)

    def test_integral_is_mfpt_for_fixed_jumps(self):
        # no closed form here: integrate the double inversion with Gauss-Legendre panels
        rate, speed, lam, size, rho, level = 0.7, 0.5, 0.8, 0.3, 0.6, 1.0
        p = fixed_jumps(rate, speed, lam, size, rho)
        mfpt = mfpt_general_unconditional(p, level)
        tau = level / speed
        # panel edges on the kinks where one, two, ... jumps first suffice to cross
        kinks = sorted(t for t in ((level - j * size) / speed for j in range(4)) if t > 0)
        edges = np.concatenate([[0.0], kinks, tau + np.geomspace(0.5, 50 * mfpt, 9)])
        nodes, weights = np.polynomial.legendre.leggauss(10)
        area = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            ts = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            area += 0.5 * (b - a) * sum(w * survival_general_unconditional(p, level, t) for w, t in zip(weights, ts))
        assert area == pytest.approx(mfpt, rel=1e-3)


class TestCharFunction:
    P = ModelParams(1.0, 0.4, 0.7, 1.2, 0.5, 0.3, ExponentialJumps(2.0), ExponentialJumps(1.0))

    def test_zero_frequency(self):
        assert char_function_t_unconditional(self.P, 0.0, 2.0) == pytest.approx(1.0, abs=1e-8)
        assert char_function_t(self.P, 0.0, 2.0, -0.3, MINUS) == pytest.approx(1.0, abs=1e-8)

    def test_ballistic(self):
        p = ModelParams(0.0, 1.0, speed_plus=1.5)
        assert char_function_t(p, 0.8, 2.0) == pytest.approx(np.exp(1j * 0.8 * 1.5 * 2.0), abs=1e-8)

    @pytest.mark.parametrize("omega", [0.3, 1.0, 2.0])
    def test_stationary_limit(self, omega):
        t = 40.0 / self.P.reset_rate
        assert abs(char_function_t_unconditional(self.P, omega, t) - stationary_cf(self.P, omega)) <= 1e-3

    @pytest.mark.parametrize("omega,t", [(0.5, 0.7), (1.3, 2.0), (3.0, 1.0)])
    def test_modulus_bounded(self, omega, t):
        assert abs(char_function_t_unconditional(self.P, omega, t)) <= 1 + 1e-6

    @pytest.mark.parametrize("omega,t", [(0.8, 1.5), (2.0, 0.6)])
    def test_matches_monte_carlo(self, omega, t):
        est = estimate_char_function(self.P, omega, t, 100_000, seed=17)
        assert est.within(char_function_t_unconditional(self.P, omega, t), k=4)
