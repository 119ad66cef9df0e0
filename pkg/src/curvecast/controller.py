"""Run lifecycle: consume observations, maintain the trace, detect the
working/prediction/convergence levels and answer prediction queries.

Level milestones are one-time events: once declared they are never
retracted, which gives downstream consumers a stable reference frame. With
canonical anchoring, the levels between the working level and the moment it
became verifiable are refitted with anchors on declaration, so the stored
trace always matches the canonical chain regardless of arrival timing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .anchoring import AnchorPolicy, next_canonical_anchor
from .errors import NotStoppedError, SequencingError
from .fitting import DEFAULT_CONFIG, FitConfig
from .levels import LevelParams, prediction_level, working_level
from .model import LearningTrend, Observation, ObservationSeries, eval_pattern
from .trace import LearningTrace, convergence_layer, convergence_layer_bounded, extend_trace

FIRST_LEVEL = 3


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one run: level detection knobs, the convergence
    threshold tau, anchoring policy and an optional finite horizon."""

    tau: float
    level_params: LevelParams = field(default_factory=LevelParams)
    anchor_policy: AnchorPolicy = field(default_factory=AnchorPolicy)
    end_position: int | None = None
    fit_config: FitConfig = DEFAULT_CONFIG
    min_level: int = FIRST_LEVEL

    def __post_init__(self):
        # tau == 0 is allowed and means "never stop": layers are strictly
        # positive, so the threshold is unreachable.
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.min_level != FIRST_LEVEL:
            raise ValueError("runs start at the first operative level (3)")


@dataclass
class RunState:
    """Mutable state of one run; equality is exact field-by-field, which is
    what the determinism guarantees are stated against."""

    config: RunConfig
    series: ObservationSeries
    trace: LearningTrace
    wlevel: int | None = None
    wposition: int | None = None
    plevel: int | None = None
    pposition: int | None = None
    clevel: int | None = None
    cposition: int | None = None
    stopped: bool = False
    ignored_after_stop: int = 0

    @property
    def selected_trend(self) -> LearningTrend | None:
        if self.clevel is None:
            return None
        return self.trace.trends[self.clevel]


def new_run(config: RunConfig) -> RunState:
    anchored = config.anchor_policy.mode == "canonical"
    return RunState(
        config=config,
        series=ObservationSeries.from_points(()),
        trace=LearningTrace(anchored=anchored, end_position=config.end_position),
    )


def stopping_layer(trend: LearningTrend, end_position: int | None) -> float:
    """Layer checked against tau: horizon-bounded when a horizon is set and
    still ahead of the trend, plain otherwise."""
    if end_position is not None and end_position > trend.position:
        return convergence_layer_bounded(trend, end_position)
    return convergence_layer(trend)


def ingest(state: RunState, observation: Observation) -> RunState:
    """Feed one observation; updates the trace and level milestones.

    After the run has stopped further observations are ignored (counted in
    ``ignored_after_stop``). Out-of-order positions raise.
    """
    if state.stopped:
        state.ignored_after_stop += 1
        return state
    points = state.series.points
    if points and observation.position <= points[-1].position:
        raise SequencingError(
            f"position {observation.position} is not past {points[-1].position}"
        )
    state.series = state.series.with_point(observation)
    level = len(state.series)
    if level < FIRST_LEVEL:
        return state

    policy = state.config.anchor_policy
    use_anchor = (
        policy.mode == "canonical" and state.wlevel is not None and level > state.wlevel
    )
    anchor = next_canonical_anchor(state.trace, state.wlevel) if use_anchor else None
    extend_trace(
        state.trace,
        state.series,
        level,
        anchor=anchor,
        policy=policy if use_anchor else None,
        config=state.config.fit_config,
    )
    _update_milestones(state)
    return state


def _update_milestones(state: RunState) -> None:
    trace = state.trace
    levels, alphas, positions = trace.converged_view()

    if state.wlevel is None:
        omega = working_level(alphas, positions, state.config.level_params, levels=levels)
        if omega is not None:
            state.wlevel = omega
            state.wposition = trace.trends[omega].position
            if state.config.anchor_policy.mode == "canonical":
                _rebuild_with_anchors(state)
                levels, alphas, positions = state.trace.converged_view()
                trace = state.trace

    if state.wlevel is not None and state.plevel is None:
        rho = prediction_level(alphas, state.wlevel, levels=levels)
        if rho is not None:
            state.plevel = rho
            state.pposition = trace.trends[rho].position

    if state.plevel is not None and state.clevel is None:
        for level in levels:
            if level < state.plevel:
                continue
            trend = trace.trends[level]
            if stopping_layer(trend, state.config.end_position) <= state.config.tau:
                state.clevel = level
                state.cposition = trend.position
                state.stopped = True
                break


def _rebuild_with_anchors(state: RunState) -> None:
    """Refit every level past the working level with the canonical anchor
    chain; levels up to the working level are kept as fitted."""
    old = state.trace
    rebuilt = LearningTrace(anchored=True, end_position=old.end_position)
    for level in old.levels():
        if level <= state.wlevel:
            rebuilt.trends[level] = old.trends[level]
            rebuilt.backbone.append(old.backbone[level - old.start_level])
        else:
            anchor = next_canonical_anchor(rebuilt, state.wlevel)
            extend_trace(
                rebuilt,
                state.series,
                level,
                anchor=anchor,
                policy=state.config.anchor_policy,
                config=state.config.fit_config,
            )
    state.trace = rebuilt


def predict(state: RunState, position: float) -> float:
    """Accuracy estimate at ``position`` from the selected trend."""
    if not state.stopped or state.selected_trend is None:
        raise NotStoppedError("no prediction before the convergence level is reached")
    return eval_pattern(state.selected_trend.params, position)


def run_stream(config: RunConfig, observations) -> RunState:
    """Online path: fold ``ingest`` over the observations."""
    state = new_run(config)
    for obs in observations:
        ingest(state, obs)
    return state


def run_batch(config: RunConfig, observations) -> RunState:
    """Offline path: build the whole trace first, then scan for milestones.

    Produces a state identical to :func:`run_stream` on the same input; the
    scan replays the chronology so freezing semantics match exactly.
    """
    all_points = tuple(observations)
    full_series = ObservationSeries.from_points(all_points)
    n = len(full_series)

    # Phase 1: unanchored trends, watching for the working level.
    reference = LearningTrace(anchored=False, end_position=config.end_position)
    omega = None
    declared_at = None
    for level in range(FIRST_LEVEL, n + 1):
        extend_trace(reference, full_series, level, config=config.fit_config)
        if omega is None:
            levels, alphas, positions = reference.converged_view()
            omega = working_level(alphas, positions, config.level_params, levels=levels)
            if omega is not None:
                declared_at = level

    # Phase 2: anchored chain past the working level, when requested.
    trace = reference
    if omega is not None and config.anchor_policy.mode == "canonical":
        trace = LearningTrace(anchored=True, end_position=config.end_position)
        for level in reference.levels():
            if level <= omega:
                trace.trends[level] = reference.trends[level]
                trace.backbone.append(reference.backbone[level - reference.start_level])
            else:
                anchor = next_canonical_anchor(trace, omega)
                extend_trace(
                    trace, full_series, level,
                    anchor=anchor, policy=config.anchor_policy, config=config.fit_config,
                )

    # Phase 3: replay the milestone chronology to find the stopping ingest.
    state = RunState(config=config, series=full_series, trace=trace)
    levels, alphas, positions = trace.converged_view()
    if omega is not None:
        state.wlevel = omega
        state.wposition = trace.trends[omega].position
        rho = prediction_level(alphas, omega, levels=levels)
        if rho is not None:
            state.plevel = rho
            state.pposition = trace.trends[rho].position
            for level in levels:
                if level < rho:
                    continue
                trend = trace.trends[level]
                if stopping_layer(trend, config.end_position) <= config.tau:
                    state.clevel = level
                    state.cposition = trend.position
                    state.stopped = True
                    break

    if state.clevel is not None:
        # The online run stops consuming at the ingest where the milestone
        # chain completed; trim to that moment.
        stop_ingest = max(declared_at, state.plevel, state.clevel)
        state.ignored_after_stop = n - stop_ingest
        if stop_ingest < n:
            state.series = ObservationSeries.from_points(all_points[:stop_ingest])
            trimmed = LearningTrace(anchored=trace.anchored, end_position=trace.end_position)
            for level in trace.levels():
                if level > stop_ingest:
                    break
                trimmed.trends[level] = trace.trends[level]
                trimmed.backbone.append(trace.backbone[level - trace.start_level])
            state.trace = trimmed
    return state


def backbone_segment(state: RunState, from_level: int, to_level: int) -> list[float]:
    """Asymptote values of converged trends with levels in [from_level,
    to_level]; the robustness-rate input for a finished run."""
    levels, alphas, _ = state.trace.converged_view()
    return [alpha for level, alpha in zip(levels, alphas) if from_level <= level <= to_level]
