"""Invariant batteries behind ``resetwalk validate``.

Each suite returns a list of :class:`Check` results. The Monte Carlo suite
uses 4-stderr bands at its default size and 5-stderr bands in fast mode
(10**4 paths), where the noisier estimates would otherwise trip too often.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .analytic import (
    monotonic_propagator_laplace,
    mfpt_exp_jumps,
    mfpt_pure_drift,
    mfpt_pure_drift_unconditional,
    mfpt_rational,
    propagator_fl,
    sp_laplace_exp_jumps,
    sp_laplace_pure_drift,
    stationary_cf,
    stationary_density_exp_drift,
)
from .inversion import (
    EULER,
    STEHFEST,
    TALBOT,
    char_function_t_unconditional,
    first_passage_kernel,
    laplace_invert,
    mfpt_general_unconditional,
    survival_closed_form_unconditional,
)
from .model import DeterministicJumps, Direction, ExponentialJumps, ModelParams, ZeroJumps
from .optimize import (
    Regime,
    minimize_mfpt_numeric,
    optimal_rate_exp_jumps,
    optimal_rate_pure_drift,
    xi_residual,
    xi_root,
)
from .simulate import derive_seed, estimate_mfpt, estimate_stationary, estimate_survival

SUITES = ("transforms", "closed-forms", "mc-vs-analytic", "inversion", "optimize")
DEFAULT_PATHS = 100_000
FAST_PATHS = 10_000


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    known_failure: bool = False  # a documented numerical limit; reported but not counted

    @property
    def status(self) -> str:
        if self.known_failure:
            return "XPASS" if self.passed else "XFAIL"
        return "PASS" if self.passed else "FAIL"

    @property
    def counts_as_failure(self) -> bool:
        return not self.passed and not self.known_failure

    def line(self) -> str:
        return f"{self.status:5s}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def pure_drift_params(rate: float, rho: float, speed: float = 1.0) -> ModelParams:
    return ModelParams(rate, rho, speed_plus=speed, speed_minus=speed)


def exp_jump_params(rate: float, rho: float, gamma: float, jump_rate: float = 1.0) -> ModelParams:
    law = ExponentialJumps(gamma)
    return ModelParams(rate, rho, jump_rate_plus=jump_rate, jump_rate_minus=jump_rate, jump_law_plus=law, jump_law_minus=law)


def mixed_params(rate=1.0, jump_rate=1.0, gamma=1.0, speed=1.0, rho=0.5) -> ModelParams:
    """Rightward exponential jumps only, leftward drift only: the case with a closed-form stationary law."""
    return ModelParams(rate, rho, speed_minus=speed, jump_rate_plus=jump_rate, jump_law_plus=ExponentialJumps(gamma))


# ---------------------------------------------------------------------------


def suite_transforms(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []

    worst = 0.0
    for _ in range(100):
        lam, jr, speed, gamma = rng.uniform(0.1, 3.0, 4)
        omega, s, x0 = rng.uniform(-5, 5), complex(rng.uniform(0.05, 5), rng.uniform(-3, 3)), rng.uniform(0, 2)
        law = ExponentialJumps(gamma)
        p = ModelParams(lam, 1.0, speed_plus=speed, jump_rate_plus=jr, jump_law_plus=law)
        a = propagator_fl(p, omega, s, x0, Direction.PLUS)
        b = monotonic_propagator_laplace(-1j * omega, s, x0, lam, jr, speed, law)
        worst = max(worst, abs(a - b) / abs(b))
    checks.append(Check("rho=1 propagator equals monotonic solution at 100 random points", worst <= 1e-12, f"max rel {worst:.2e}"))

    p = ModelParams(0.8, 0.4, 0.7, 1.3, 1.1, 0.6, ExponentialJumps(2.0), DeterministicJumps(0.3))
    v = stationary_cf(p, 0.0)
    checks.append(Check("stationary characteristic function is 1 at omega=0", v == 1.0, f"{v}"))

    worst = 0.0
    for omega in rng.uniform(-5, 5, 50):
        s = 1e-8
        unc = p.direction_prob * propagator_fl(p, omega, s, 0.0, "+") + (1 - p.direction_prob) * propagator_fl(p, omega, s, 0.0, "-")
        worst = max(worst, abs(s * unc - stationary_cf(p, omega)))
    checks.append(Check("s * propagator tends to the stationary characteristic function", worst <= 1e-6, f"max abs {worst:.2e}"))

    m = mixed_params(rate=1.3, jump_rate=0.7, gamma=1.5, speed=0.9, rho=0.35)
    worst = 0.0
    for omega in (0.3, 1.0, 2.5):
        dens = lambda x: stationary_density_exp_drift(1.3, 0.7, 1.5, 0.9, 0.35, x)[0]  # noqa: E731
        atom = stationary_density_exp_drift(1.3, 0.7, 1.5, 0.9, 0.35, 0.0)[1]
        re = quad(lambda x: dens(x) * math.cos(omega * x), -np.inf, 0, epsabs=1e-13)[0]
        re += quad(lambda x: dens(x) * math.cos(omega * x), 0, np.inf, epsabs=1e-13)[0]
        im = quad(lambda x: dens(x) * math.sin(omega * x), -np.inf, 0, epsabs=1e-13)[0]
        im += quad(lambda x: dens(x) * math.sin(omega * x), 0, np.inf, epsabs=1e-13)[0]
        worst = max(worst, abs(atom + re + 1j * im - stationary_cf(m, omega)))
    checks.append(Check("Fourier transform of the stationary density matches the characteristic function",
                        worst <= 1e-8, f"max abs {worst:.2e}"))
    return checks


def suite_closed_forms() -> list[Check]:
    checks = []
    worst = 0.0
    for lam in (0.3, 1.0, 2.5):
        for rho in (0.2, 0.7):
            for x in (0.0, 0.4):
                sp = sp_laplace_pure_drift(0.0, x, "+", lam, 1.3, rho, 1.5)
                worst = max(worst, _rel(sp, mfpt_pure_drift(x, "+", lam, 1.3, rho, 1.5)))
                sp = sp_laplace_pure_drift(0.0, -x, "-", lam, 1.3, rho, 1.5)
                worst = max(worst, _rel(sp, mfpt_pure_drift(-x, "-", lam, 1.3, rho, 1.5)))
    checks.append(Check("pure drift: survival transform at s=0 gives the MFPT", worst <= 1e-12, f"max rel {worst:.2e}"))

    worst = 0.0
    for lam in (0.3, 1.0, 2.5):
        for rho in (0.2, 0.7):
            plus, minus, _ = mfpt_exp_jumps(lam, 1.2, 3.0, rho, 1.0)
            worst = max(worst, _rel(sp_laplace_exp_jumps(0.0, 0.0, "+", lam, 1.2, 3.0, rho, 1.0), plus))
            worst = max(worst, _rel(sp_laplace_exp_jumps(0.0, 0.0, "-", lam, 1.2, 3.0, rho, 1.0), minus))
    checks.append(Check("exp jumps: survival transform at s=0 gives the MFPT", worst <= 1e-12, f"max rel {worst:.2e}"))

    big = mfpt_exp_jumps(1e7, 1.0, 4.0, 0.5, 1.0)[2]
    checks.append(Check("exp jumps: MFPT tends to exp(gamma*level)/(jump_rate*rho) as the reset rate grows",
                        _rel(big, math.exp(4.0) / 0.5) < 1e-5, f"{big:.8g}"))
    small = mfpt_exp_jumps(1e-9, 1.0, 4.0, 1.0, 1.0)[2]
    checks.append(Check("exp jumps, rho=1: MFPT tends to (1+gamma*level)/jump_rate without resets",
                        _rel(small, 5.0) < 1e-6, f"{small:.8g}"))

    ok = all(
        optimal_rate_pure_drift(1.0, 1.0, rho).mfpt_star >= mfpt_rational(1.0, 1.0, rho) for rho in np.linspace(0.02, 1.0, 50)
    )
    checks.append(Check("optimal pure-drift MFPT never beats the rational strategy", ok))

    for family, p in (("pure drift", pure_drift_params(0.9, 0.6)), ("exp jumps", exp_jump_params(0.7, 0.6, 4.0))):
        mfpt = (mfpt_pure_drift_unconditional(0.9, 1.0, 0.6, 1.0) if family == "pure drift"
                else mfpt_exp_jumps(0.7, 1.0, 4.0, 0.6, 1.0)[2])
        horizon = 40.0 * mfpt
        points = [1.0] if family == "pure drift" else None
        area = quad(lambda t: survival_closed_form_unconditional(p, 1.0, t) if t > 0 else 1.0, 0.0, horizon,
                    points=points, limit=400, epsabs=1e-10)[0]
        checks.append(Check(f"{family}: integral of the survival curve equals the MFPT", _rel(area, mfpt) <= 1e-3,
                            f"rel {_rel(area, mfpt):.2e}"))

    grid = np.linspace(0.5, 3.0, 10)
    values = [mfpt_pure_drift_unconditional(1.0, 1.0, 0.5, lvl) for lvl in grid]
    checks.append(Check("pure-drift MFPT increases with the level", bool(np.all(np.diff(values) > 0))))
    return checks


def suite_inversion() -> list[Check]:
    checks = []
    a = 0.5
    pairs = {
        "constant": (lambda s: 1 / s, lambda t: 1.0),
        "exponential": (lambda s: 1 / (s + a), lambda t: math.exp(-a * t)),
        "ramp": (lambda s: 1 / s**2, lambda t: t),
        "t*exp(-a t)": (lambda s: 1 / (s + a) ** 2, lambda t: t * math.exp(-a * t)),
        "(1-exp(-a t))/a": (lambda s: 1 / (s * (s + a)), lambda t: (1 - math.exp(-a * t)) / a),
    }
    for name, (fhat, f) in pairs.items():
        worst = max(_rel(laplace_invert(fhat, t), f(t)) for t in (0.1, 1.0, 10.0))
        checks.append(Check(f"transform pair {name}", worst <= 1e-7, f"max rel {worst:.2e}"))

    worst = 0.0
    for rate in np.linspace(0.2, 3.0, 10):
        p = pure_drift_params(rate, 0.6)
        worst = max(worst, _rel(mfpt_general_unconditional(p, 1.0), mfpt_pure_drift_unconditional(rate, 1.0, 0.6, 1.0)))
    checks.append(Check("general MFPT matches the pure-drift closed form", worst <= 1e-6, f"max rel {worst:.2e}"))
    worst = 0.0
    for rate in np.linspace(0.2, 3.0, 10):
        p = exp_jump_params(rate, 0.6, 4.0)
        worst = max(worst, _rel(mfpt_general_unconditional(p, 1.0), mfpt_exp_jumps(rate, 1.0, 4.0, 0.6, 1.0)[2]))
    checks.append(Check("general MFPT matches the exp-jumps closed form", worst <= 1e-6, f"max rel {worst:.2e}"))

    worst = 0.0
    for law in (ExponentialJumps(2.0), ZeroJumps()):
        for speed in (1.0, 0.0):
            if speed == 0 and not law.mean() > 0:
                continue
            p = ModelParams(0.8, 0.5, speed_plus=speed, speed_minus=1.0, jump_rate_plus=0.6, jump_law_plus=law)
            for z in np.linspace(0.1, 2.0, 20):
                worst = max(worst, abs(first_passage_kernel(p, z, STEHFEST) - first_passage_kernel(p, z, TALBOT)))
    checks.append(Check("Gaver-Stehfest and Talbot agree on the kernel (exp and zero jumps)", worst <= 1e-5, f"max abs {worst:.2e}"))

    # Talbot cannot evaluate transforms of atomic laws; the Euler inverter is the reference there
    p = ModelParams(0.8, 0.5, speed_plus=1.0, speed_minus=1.0, jump_rate_plus=0.6, jump_law_plus=DeterministicJumps(0.37))
    worst = max(abs(first_passage_kernel(p, z, STEHFEST) - first_passage_kernel(p, z, EULER)) for z in np.linspace(0.1, 2.0, 20))
    checks.append(Check("Gaver-Stehfest agrees with the reference on the fixed-jump kernel", worst <= 1e-5,
                        f"max abs {worst:.2e}; kernel kinks at multiples of the jump size", known_failure=True))

    p = ModelParams(1.0, 0.4, 0.7, 1.2, 0.5, 0.3, ExponentialJumps(2.0), ExponentialJumps(1.0))
    worst = max(abs(char_function_t_unconditional(p, w, 40.0) - stationary_cf(p, w)) for w in (0.3, 1.0, 2.0))
    checks.append(Check("characteristic function at t=40/reset_rate is stationary", worst <= 1e-3, f"max abs {worst:.2e}"))

    law = DeterministicJumps(0.3)
    p = ModelParams(0.5, 0.7, speed_plus=0.8, speed_minus=1.0, jump_rate_plus=0.6, jump_law_plus=law)
    values = [mfpt_general_unconditional(p, lvl) for lvl in np.linspace(0.2, 2.0, 10)]
    checks.append(Check("general MFPT is nondecreasing in the level", bool(np.all(np.diff(values) >= 0))))
    return checks


def suite_optimize() -> list[Check]:
    checks = []
    rhos = np.linspace(0.0, 1.0, 100)
    worst = max(xi_residual(r) for r in rhos)
    checks.append(Check("xi root residual on 100 direction probabilities", worst <= 1e-12, f"max {worst:.1e}"))
    xs = [xi_root(r) for r in rhos]
    checks.append(Check("xi root decreases from 1 to 0", xs[0] == 1.0 and xs[-1] == 0.0 and bool(np.all(np.diff(xs) < 0))))

    for rho in (0.5, 0.9):
        closed = optimal_rate_exp_jumps(1.0, 4.0, 1.0, rho)
        numeric = minimize_mfpt_numeric(exp_jump_params(1.0, rho, 4.0), 1.0)
        err = _rel(numeric.lambda_star, closed.lambda_star)
        checks.append(Check(f"exp jumps gamma*level=4, rho={rho}: numeric optimum matches closed form", err <= 1e-4, f"rel {err:.1e}"))
    closed = optimal_rate_pure_drift(1.0, 1.0, 0.5)
    numeric = minimize_mfpt_numeric(pure_drift_params(1.0, 0.5), 1.0)
    err = _rel(numeric.lambda_star, closed.lambda_star)
    checks.append(Check("pure drift rho=0.5: numeric optimum matches closed form", err <= 1e-4, f"rel {err:.1e}"))

    grid = np.round(np.arange(0.800, 0.8501, 0.001), 3)
    regimes = [optimal_rate_exp_jumps(1.0, 0.5, 1.0, r).regime for r in grid]
    flips = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1) if regimes[i] is not regimes[i + 1]]
    ok = len(flips) == 1 and flips[0] == (0.824, 0.825) and regimes[-1] is Regime.INTERIOR_MINIMUM
    checks.append(Check("gamma*level=0.5: regime flips once, between rho=0.824 and 0.825", ok, f"flips at {flips}"))
    numeric = minimize_mfpt_numeric(exp_jump_params(1.0, 0.5, 0.5), 1.0)
    checks.append(Check("gamma*level=0.5, rho=0.5: numeric minimizer reports a decreasing curve",
                        numeric.regime is Regime.MONOTONE_DECREASING, numeric.regime.value))
    return checks


def suite_mc_vs_analytic(n_paths: int = DEFAULT_PATHS, fast: bool = False, seed: int = 0) -> list[Check]:
    if fast:
        n_paths = min(n_paths, FAST_PATHS)
    k = 5.0 if fast else 4.0
    checks = []

    def mfpt_check(name, p, exact, key):
        est = estimate_mfpt(p, 1.0, n_paths, seed=derive_seed(seed, *key))
        ok = est.censored == 0 and abs(est.mean - exact) <= k * est.stderr
        checks.append(Check(name, ok, f"mc {est.mean:.5g} +- {est.stderr:.2g}, exact {exact:.5g}, censored {est.censored}"))

    for i, (rate, rho) in enumerate(((0.5, 0.5), (1.5, 0.75), (1.0, 1.0))):
        mfpt_check(f"pure drift MFPT, rate={rate}, rho={rho}", pure_drift_params(rate, rho),
                   mfpt_pure_drift_unconditional(rate, 1.0, rho, 1.0), (0, i))
    for i, (rate, rho) in enumerate(((0.5, 0.5), (1.0, 0.75))):
        mfpt_check(f"exp jumps MFPT, rate={rate}, rho={rho}", exp_jump_params(rate, rho, 4.0),
                   mfpt_exp_jumps(rate, 1.0, 4.0, rho, 1.0)[2], (1, i))
    law = DeterministicJumps(0.3)
    p = ModelParams(0.7, 0.6, speed_plus=0.5, speed_minus=1.0, jump_rate_plus=0.8, jump_law_plus=law)
    mfpt_check("drift plus fixed jumps MFPT against inversion", p, mfpt_general_unconditional(p, 1.0), (2, 0))

    m = mixed_params()
    st = estimate_stationary(m, n_paths, seed=derive_seed(seed, 3))
    centers = 0.5 * (st.edges[1:] + st.edges[:-1])
    dens, atom = stationary_density_exp_drift(1.0, 1.0, 1.0, 1.0, 0.5, centers)
    checks.append(Check("stationary atom at zero", st.atom.within(atom, k), f"{st.atom.mean:.4f} +- {st.atom.stderr:.1e} vs {atom}"))
    l1 = float(np.sum(np.abs(st.density - dens) * np.diff(st.edges)))
    # the histogram's own noise scales like 1/sqrt(n); 0.02 is calibrated at 10**6 samples
    bound = 0.02 * max(1.0, math.sqrt(1e6 / n_paths))
    checks.append(Check("stationary density L1 distance", l1 < bound, f"L1 {l1:.4f} < {bound:.3f}"))

    p = exp_jump_params(0.7, 0.6, 4.0)
    grid = np.linspace(1.0, 40.0, 20)
    est = estimate_survival(p, 1.0, grid, n_paths, seed=derive_seed(seed, 4))
    bad = [t for t, e in est if abs(e.mean - survival_closed_form_unconditional(p, 1.0, t)) > k * e.stderr]
    checks.append(Check("exp jumps survival curve on 20 times", not bad, f"outside band at {bad}" if bad else ""))
    return checks


def run_suite(name: str, n_paths: int | None = None, fast: bool = False, seed: int = 0) -> list[Check]:
    suites: dict[str, Callable[[], list[Check]]] = {
        "transforms": lambda: suite_transforms(seed),
        "closed-forms": suite_closed_forms,
        "inversion": suite_inversion,
        "optimize": suite_optimize,
        "mc-vs-analytic": lambda: suite_mc_vs_analytic(n_paths or DEFAULT_PATHS, fast, seed),
    }
    if name not in suites:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return suites[name]()
