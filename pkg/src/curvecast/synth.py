"""Synthetic learning-curve generation and executable convergence checks.

The generator samples an ideal curve on a kernel + constant-step schedule,
optionally distorted by seeded Gaussian noise or by deterministic
concavity-breaking bumps on the earliest observations. The check suite
turns the convergence guarantees of the construction into pass/fail
properties evaluated against the known true curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .anchoring import AnchorPolicy, next_canonical_anchor
from .fitting import DEFAULT_CONFIG, FitConfig
from .levels import LevelParams, working_level
from .model import Observation, ObservationSeries, PowerLawParams, eval_pattern
from .trace import (
    LearningTrace,
    convergence_layer,
    extend_trace,
    trend_intersection,
)

_MIN_ACCURACY = 1e-9


@dataclass(frozen=True)
class NoiseSpec:
    """Distortion applied to the ideal curve samples.

    ``gaussian`` adds seeded N(0, sigma) noise; ``bumps`` adds
    ``magnitude``-sized deviations of alternating sign to the first
    ``count`` observations located at or below ``max_position``.
    """

    kind: str = "none"
    sigma: float = 0.0
    magnitude: float = 0.0
    count: int = 0
    max_position: int = 100_000

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "bumps"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind == "bumps" and (self.magnitude <= 0 or self.count < 1):
            raise ValueError("bumps need a positive magnitude and count")


@dataclass(frozen=True)
class SynthSpec:
    true_params: PowerLawParams
    kernel: int = 5000
    step: int = 5000
    count: int = 60
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0


def generate_series(spec: SynthSpec) -> ObservationSeries:
    """Deterministic series for the spec; same seed, same series."""
    positions = [spec.kernel + spec.step * i for i in range(spec.count)]
    values = np.array([eval_pattern(spec.true_params, x) for x in positions])
    if spec.noise.kind == "gaussian" and spec.noise.sigma > 0:
        rng = np.random.default_rng(spec.seed)
        values = values + rng.normal(0.0, spec.noise.sigma, size=spec.count)
    elif spec.noise.kind == "bumps":
        eligible = [i for i, x in enumerate(positions) if x <= spec.noise.max_position]
        for k, i in enumerate(eligible[: spec.noise.count]):
            values[i] += spec.noise.magnitude * (1 if k % 2 == 0 else -1)
    values = np.clip(values, _MIN_ACCURACY, 100.0)
    points = tuple(
        Observation(x, float(y)) for x, y in zip(positions, values)
    )
    return ObservationSeries(points, kernel_size=spec.kernel, step=spec.step)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    violations: int
    checks: int
    detail: str = ""

    @property
    def violation_rate(self) -> float:
        return self.violations / self.checks if self.checks else 0.0


@dataclass(frozen=True)
class TheoremReport:
    results: dict[str, CheckResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def summary_lines(self) -> list[str]:
        lines = []
        for name, res in self.results.items():
            status = "PASS" if res.passed else "FAIL"
            lines.append(f"{status} {name}: {res.violations}/{res.checks} violations {res.detail}")
        return lines


@dataclass(frozen=True)
class TheoremSuiteConfig:
    """True curve plus tolerances for the convergence checks.

    ``violation_budget`` is the fraction of monotonicity steps allowed to
    fail on distorted data; ``monotone_tolerance`` is the absolute backbone
    fluctuation treated as absorbed rather than as a direction violation
    (the verticality limit times the step is the natural scale). Keep both
    at 0 for ideal input.
    """

    true_params: PowerLawParams
    level_params: LevelParams = field(default_factory=LevelParams)
    anchor_policy: AnchorPolicy = field(default_factory=lambda: AnchorPolicy(mode="canonical"))
    fit_config: FitConfig = DEFAULT_CONFIG
    tolerance: float = 1e-6
    violation_budget: float = 0.0
    monotone_tolerance: float = 0.0

    @property
    def equal_tol(self) -> float:
        # comparisons between quantities that may coincide exactly
        return 1e-9 + self.tolerance

    @property
    def direction_tol(self) -> float:
        return max(self.equal_tol, self.monotone_tolerance)


def build_traces(
    series: ObservationSeries,
    level_params: LevelParams,
    policy: AnchorPolicy,
    fit_config: FitConfig = DEFAULT_CONFIG,
) -> tuple[LearningTrace, int | None, LearningTrace | None]:
    """Reference (unanchored) trace over the whole series, the working
    level found on it, and the canonically anchored trace past that level
    (None when no working level emerged or anchoring is off)."""
    reference = LearningTrace(anchored=False)
    for level in range(3, len(series) + 1):
        extend_trace(reference, series, level, config=fit_config)
    levels, alphas, positions = reference.converged_view()
    omega = working_level(alphas, positions, level_params, levels=levels)
    anchored = None
    if omega is not None and policy.mode == "canonical":
        anchored = LearningTrace(anchored=True)
        for level in reference.levels():
            if level <= omega:
                anchored.trends[level] = reference.trends[level]
                anchored.backbone.append(reference.backbone[level - reference.start_level])
            else:
                anchor = next_canonical_anchor(anchored, omega)
                extend_trace(anchored, series, level, anchor=anchor, policy=policy,
                             config=fit_config)
    return reference, omega, anchored


def _monotone_violations(values, *, direction=None, tol=0.0):
    """(violations, steps, direction): direction inferred from the first
    and last value when not forced; +1 means non-decreasing expected."""
    steps = len(values) - 1
    if steps < 1:
        return 0, max(steps, 0), direction or -1
    if direction is None:
        direction = 1 if values[-1] > values[0] else -1
    bad = 0
    for prev, cur in zip(values, values[1:]):
        delta = (cur - prev) * direction
        if delta < -tol:
            bad += 1
    return bad, steps, direction


def theorem_suite(series: ObservationSeries, config: TheoremSuiteConfig) -> TheoremReport:
    """Evaluate the convergence and anchoring guarantees on one series."""
    c_true = config.true_params.c
    budget = config.violation_budget
    tol = config.tolerance
    reference, omega, anchored = build_traces(
        series, config.level_params, config.anchor_policy, config.fit_config
    )
    results: dict[str, CheckResult] = {}

    def record(name, violations, checks, detail=""):
        allowed = math.floor(budget * checks)
        results[name] = CheckResult(name, violations <= allowed, violations, checks, detail)

    ref_levels, ref_alphas, _ = reference.converged_view()
    post = [a for lv, a in zip(ref_levels, ref_alphas) if omega is not None and lv >= omega]

    # Backbone monotone past the working level, approaching the true
    # asymptote.
    bad_mono, steps_mono, direction = _monotone_violations(post, tol=config.direction_tol)
    gaps = [abs(a - c_true) for a in post]
    bad_gap, steps_gap, _ = _monotone_violations(gaps, direction=-1, tol=config.direction_tol)
    record("backbone_monotone_after_working_level", bad_mono, steps_mono,
           f"omega={omega}")
    record("backbone_approaches_true_asymptote", bad_gap, steps_gap)

    # Correctness bound decreasing on locally decreasing stretches.
    eps_values = _epsilon_sequence(reference)
    bad_eps, steps_eps, _ = _monotone_violations(eps_values, direction=-1,
                                                 tol=config.direction_tol)
    record("correctness_bound_decreasing", bad_eps, steps_eps,
           f"defined={len(eps_values)}")

    # Oracle variant against the known true curve: the gap between the last
    # crossing and the true asymptote shrinks overall. The last crossing
    # moves discontinuously under distortion, so this is a trend check on
    # medians rather than a stepwise one.
    oracle_gaps = _true_curve_crossing_gaps(reference, config.true_params)
    if len(oracle_gaps) >= 4:
        third = max(len(oracle_gaps) // 3, 1)
        m_first = sorted(oracle_gaps[:third])[third // 2]
        late = sorted(oracle_gaps[-third:])
        m_last = late[len(late) // 2]
        shrunk = m_last <= m_first + config.direction_tol
        record("correctness_bound_true_curve_oracle", 0 if shrunk else 1, 1,
               f"median first/last thirds {m_first:.3g}/{m_last:.3g}")
    else:
        record("correctness_bound_true_curve_oracle", 0, 0,
               f"defined={len(oracle_gaps)}")

    # Layers cross any threshold exactly once (equivalently: decreasing).
    layers = [convergence_layer(reference.trends[lv]) for lv in ref_levels
              if omega is None or lv >= omega]
    bad_lay, steps_lay, _ = _monotone_violations(layers, direction=-1,
                                                 tol=config.direction_tol)
    record("layer_single_threshold_crossing",
           bad_lay + _threshold_defects(layers, config.direction_tol),
           steps_lay + max(len(layers) - 1, 0))

    # Anchored-trace checks.
    if anchored is None:
        for name in ("anchored_residual_balance", "anchor_residual_vanishes",
                     "anchor_correction_inequality", "canonical_anchor_ordering"):
            record(name, 0, 0, "no working level / anchoring disabled")
    else:
        _anchored_checks(results, record, reference, anchored, omega, config)

    return TheoremReport(results=results)


def _epsilon_sequence(trace: LearningTrace) -> list[float]:
    from .trace import epsilon_bound  # local import keeps module load light

    values = []
    last = trace.last_level or 3
    for level in range(4, last + 1):
        eps = epsilon_bound(trace, level)
        if eps is not None:
            values.append(eps)
    return values


def _true_curve_crossing_gaps(trace: LearningTrace, true_params: PowerLawParams) -> list[float]:
    gaps = []
    for level in trace.levels():
        trend = trace.trends[level]
        if not trend.converged or trend.params == true_params:
            continue
        if (abs(trend.params.a - true_params.a) <= 1e-9
                and abs(trend.params.b - true_params.b) <= 1e-9
                and abs(trend.params.c - true_params.c) <= 1e-9):
            continue
        crossing = trend_intersection(trend.params, true_params)
        if crossing.last is not None:
            gaps.append(abs(crossing.last[1] - true_params.c))
    return gaps


def _threshold_defects(layers: list[float], band: float = 0.0) -> int:
    """Extra defects from explicit threshold sweeps: for a few thresholds,
    the indicator [layer <= eps] must flip from false to true once. Layers
    within ``band`` of the threshold are indecisive and not counted."""
    if len(layers) < 2:
        return 0
    lo, hi = min(layers), max(layers)
    if hi <= lo:
        return 0
    defects = 0
    for frac in (0.25, 0.5, 0.75):
        eps = lo + (hi - lo) * frac
        flags = [layer <= eps for layer in layers]
        first = flags.index(True) if True in flags else len(flags)
        defects += sum(
            1 for i, (f, layer) in enumerate(zip(flags, layers))
            if f != (i >= first) and abs(layer - eps) > band
        )
    return defects


def _anchored_checks(results, record, reference, anchored, omega, config):
    tol = config.equal_tol
    anchored_levels = [lv for lv in anchored.levels() if lv > omega
                       and anchored.trends[lv].converged]

    # Residual balance: anchor residual cancels the observation residuals.
    bad_balance = 0
    for lv in anchored_levels:
        trend = anchored.trends[lv]
        total = sum(trend.residuals) + trend.anchor_residual
        if abs(total) > 1e-6 * lv:
            bad_balance += 1
    record("anchored_residual_balance", bad_balance, len(anchored_levels))

    # The anchor residual dies out as levels grow (within the absorbed
    # fluctuation band on distorted data).
    residuals = [abs(anchored.trends[lv].anchor_residual) for lv in anchored_levels]
    if len(residuals) >= 2:
        ok = residuals[-1] <= max(residuals[0] + tol, config.monotone_tolerance)
        record("anchor_residual_vanishes", 0 if ok else 1, 1,
               f"first={residuals[0]:.2e} last={residuals[-1]:.2e}")
    else:
        record("anchor_residual_vanishes", 0, 0)

    # Step-wise correction inequality, direction per local monotony.
    bad_corr = checks_corr = 0
    for prev, cur in zip(anchored_levels, anchored_levels[1:]):
        if cur != prev + 1:
            continue
        checks_corr += 1
        t_prev, t_cur = anchored.trends[prev], anchored.trends[cur]
        anchor_value = t_cur.params.c + t_cur.anchor_residual
        bound = t_prev.params.c - sum(t_cur.residuals) - t_cur.anchor_residual
        decreasing = t_cur.params.c <= t_prev.params.c + tol
        if decreasing and anchor_value > bound + tol:
            bad_corr += 1
        elif not decreasing and anchor_value < bound - tol:
            bad_corr += 1
    record("anchor_correction_inequality", bad_corr, checks_corr)

    # Canonical ordering of plain vs anchored asymptotes past the working
    # level, direction per the reference backbone monotony.
    ref_post = [reference.alpha(lv) for lv in anchored_levels]
    anch_post = [anchored.alpha(lv) for lv in anchored_levels]
    if ref_post:
        direction = 1 if ref_post[-1] > ref_post[0] else -1
        order_tol = config.direction_tol
        bad_ord = 0
        for plain, hat in zip(ref_post, anch_post):
            if direction < 0 and plain > hat + order_tol:
                bad_ord += 1
            elif direction > 0 and plain < hat - order_tol:
                bad_ord += 1
        record("canonical_anchor_ordering", bad_ord, len(ref_post))
    else:
        record("canonical_anchor_ordering", 0, 0)
