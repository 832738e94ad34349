"""Closed-loop rolling-horizon engine.

Every 15 minutes: build the controller problem for the chosen strategy,
solve it, apply only the first action to the high-fidelity simulator, and
feed the resulting state back. At 09:00 the horizon additionally spans the
next day and the resulting 24 hourly day-ahead quantities are frozen into
an immutable commitment. The very first step of a run performs a
bootstrap solve with free day-ahead variables for its own day, since no
earlier 09:00 solve exists to have committed it.

Whatever model the controller used, the simulator always runs the
high-fidelity physics, and the cost ledger always accounts membrane wear
from simulated thinning, so strategies are compared on true degradation.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from . import electrolyzer, ocp, units
from .market import settle
from .params import ControlAction, CostLedger, DamCommitment, PlantParams, PlantState, PriceSeries
from .solver import SolverConfig, solve

TRAJECTORY_CSV_HEADER = (
    "timestamp,strategy,p_dam_mw,p_rtm_mw,temperature_k,current_a,"
    "h2_el_to_plant_kmolhr,h2_to_storage_kmolhr,h2_from_storage_kmolhr,"
    "membrane_um,storage_kmol,dam_price,rtm_price,elec_cost_usd,mem_cost_usd,"
    "cum_elec_usd,cum_mem_usd,cum_h2_ton"
)


class RolloutError(RuntimeError):
    pass


@dataclass
class TrajectoryLog:
    """Time-indexed record of one closed-loop run."""

    strategy: str
    timestamps: list[datetime] = field(default_factory=list)
    actions: list[ControlAction] = field(default_factory=list)
    states: list[PlantState] = field(default_factory=list)  # post-step
    dam_price: list[float] = field(default_factory=list)
    rtm_price: list[float] = field(default_factory=list)
    elec_cost: list[float] = field(default_factory=list)
    mem_cost: list[float] = field(default_factory=list)
    h2_ton: list[float] = field(default_factory=list)
    flagged: list[bool] = field(default_factory=list)
    solver_iterations: list[int] = field(default_factory=list)
    warm_started: list[bool] = field(default_factory=list)
    power_residual_mwh: list[float] = field(default_factory=list)
    commitments: dict[date, DamCommitment] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.timestamps)

    # cumulative columns (compensated prefix sums) ----------------------
    def cum_elec(self) -> list[float]:
        return _prefix_fsum(self.elec_cost)

    def cum_mem(self) -> list[float]:
        return _prefix_fsum(self.mem_cost)

    def cum_h2(self) -> list[float]:
        return _prefix_fsum(self.h2_ton)

    def ledger(self) -> CostLedger:
        return CostLedger(
            electricity_usd=math.fsum(self.elec_cost),
            membrane_usd=math.fsum(self.mem_cost),
            h2_ton=math.fsum(self.h2_ton),
        )

    def to_csv(self, path: str | Path) -> None:
        ce, cm, ch = self.cum_elec(), self.cum_mem(), self.cum_h2()
        lines = [TRAJECTORY_CSV_HEADER]
        for i, ts in enumerate(self.timestamps):
            a = self.actions[i]
            s = self.states[i]
            cells = [
                ts.isoformat(),
                self.strategy,
                repr(a.p_dam_mw),
                repr(a.p_rtm_mw),
                repr(a.temperature_k),
                repr(a.current_a),
                repr(a.h2_el_to_plant_kmolhr),
                repr(a.h2_to_storage_kmolhr),
                repr(a.h2_from_storage_kmolhr),
                repr(s.membrane_um),
                repr(s.storage_kmol),
                repr(self.dam_price[i]),
                repr(self.rtm_price[i]),
                repr(self.elec_cost[i]),
                repr(self.mem_cost[i]),
                repr(ce[i]),
                repr(cm[i]),
                repr(ch[i]),
            ]
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "TrajectoryLog":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if ",".join(header) != TRAJECTORY_CSV_HEADER:
                raise ValueError(f"{path}: unexpected trajectory header")
            log = None
            prev_cum_h2 = 0.0
            for row in reader:
                ts = datetime.fromisoformat(row[0])
                if log is None:
                    log = cls(strategy=row[1])
                vals = [float(v) for v in row[2:]]
                log.timestamps.append(ts)
                log.actions.append(ControlAction(*vals[0:7]))
                log.states.append(
                    PlantState(
                        membrane_um=vals[7],
                        storage_kmol=vals[8],
                        clock=ts + timedelta(minutes=units.STEP_MINUTES),
                    )
                )
                log.dam_price.append(vals[9])
                log.rtm_price.append(vals[10])
                log.elec_cost.append(vals[11])
                log.mem_cost.append(vals[12])
                log.h2_ton.append(vals[15] - prev_cum_h2)
                prev_cum_h2 = vals[15]
        if log is None:
            raise ValueError(f"{path}: empty trajectory")
        return log


def _prefix_fsum(values: list[float]) -> list[float]:
    return [math.fsum(values[: i + 1]) for i in range(len(values))]


@dataclass(frozen=True)
class RolloutConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    pressure_mode: str = "configured"
    warm_start: bool = True
    # CO misses the supply setpoint by 0.014% by construction; optimizing
    # strategies carry the equality in their model and must hit it tightly
    setpoint_tol_kmolhr: float | None = None
    # recourse headroom the commitment solves keep against the storage
    # box (0.5% of capacity); without it a frozen schedule can plan the
    # plant exactly onto the cap and drift strands it there
    commitment_storage_margin_kmol: float = 35.0


def run(
    strategy: ocp.StrategyKind,
    initial_state: PlantState,
    dam_series: PriceSeries,
    rtm_series: PriceSeries,
    start_day: date,
    end_day: date,
    p: PlantParams,
    cfg: RolloutConfig | None = None,
) -> TrajectoryLog:
    """Roll the closed loop from start_day 00:00 through end_day 23:45."""
    cfg = cfg or RolloutConfig()
    if end_day < start_day:
        raise RolloutError("end day precedes start day")
    start_ts = datetime(start_day.year, start_day.month, start_day.day)
    if initial_state.clock != start_ts:
        raise RolloutError(
            f"initial state clock {initial_state.clock} must sit at {start_ts}"
        )
    initial_state.validate(p)
    n_days = (end_day - start_day).days + 1
    n_steps = n_days * units.STEPS_PER_DAY
    _check_price_cover(dam_series, start_ts, n_steps + units.STEPS_PER_DAY, "DAM")
    _check_price_cover(rtm_series, start_ts, n_steps + units.STEPS_PER_DAY, "RTM")

    log = TrajectoryLog(strategy=strategy.value)
    state = initial_state
    commitments: dict[date, DamCommitment] = {}
    prev_prob: ocp.OcpProblem | None = None
    prev_x: np.ndarray | None = None
    prev_action: ControlAction | None = None

    setpoint_tol = cfg.setpoint_tol_kmolhr
    if setpoint_tol is None:
        setpoint_tol = 1e-3 * p.h2_setpoint if strategy is ocp.StrategyKind.CO else 1e-4

    for k in range(n_steps):
        ts = start_ts + timedelta(minutes=k * units.STEP_MINUTES)
        day = ts.date()
        sid = ts.hour * units.STEPS_PER_HOUR + ts.minute // 15

        bootstrap = sid == 0 and day not in commitments
        if sid == units.COMMITMENT_STEP:
            horizon = (units.STEPS_PER_DAY - sid) + units.STEPS_PER_DAY
        else:
            horizon = units.STEPS_PER_DAY - sid

        dam_fixed: list[float | None] = []
        for t in range(horizon):
            ts_t = ts + timedelta(minutes=t * units.STEP_MINUTES)
            day_t = ts_t.date()
            sid_t = ts_t.hour * units.STEPS_PER_HOUR + ts_t.minute // 15
            com = commitments.get(day_t)
            if com is not None:
                dam_fixed.append(com.mw_at_step(sid_t))
            elif bootstrap or (sid == units.COMMITMENT_STEP and day_t > day):
                dam_fixed.append(None)
            else:
                raise RolloutError(f"no commitment covers {ts_t}; bidding cycle broken")

        prob = ocp.build(
            strategy,
            state,
            dam_fixed,
            dam_series.window(ts, horizon),
            rtm_series.window(ts, horizon),
            step_in_day0=sid,
            p=p,
            abs_step0=k,
            commitment_storage_margin_kmol=cfg.commitment_storage_margin_kmol,
        )

        # a warm start only makes sense when this problem is the previous
        # one shifted by one step; horizon jumps (the 09:00 commitment
        # solve and midnight) change the problem structure and warm points
        # wedge the barrier method instead of helping it
        warm = (
            cfg.warm_start
            and prev_prob is not None
            and prev_x is not None
            and prev_prob.horizon == prob.horizon + 1
        )
        if warm:
            x0 = ocp.warm_start_from(prob, prev_prob, prev_x)
            warm_cfg = replace(
                cfg.solver,
                initialization="warm",
                max_iterations=min(cfg.solver.max_iterations, 400),
            )
            sol = solve(prob, x0, warm_cfg)
        if not warm or not sol.ok:
            sol = solve(prob, ocp.cold_start(prob), replace(cfg.solver, initialization="cold"))

        # an iteration-capped solve that is nonetheless feasible still
        # carries a usable plan; only infeasible failures fall back to
        # holding the previous action
        flagged = not sol.ok
        usable = sol.ok or (
            sol.status == "max_iterations" and sol.feasibility <= 1.0e-6
        )
        if not usable and prev_action is None:
            raise RolloutError(
                f"solver failed at the first step ({sol.status}); nothing to hold"
            )
        action = sol.actions[0] if usable else prev_action

        if sid == units.COMMITMENT_STEP:
            tomorrow = day + timedelta(days=1)
            block = [
                float(sol.x[prob.idx["p_dam"][60 + 4 * h]]) for h in range(24)
            ]
            commitments[tomorrow] = DamCommitment(day=tomorrow, hourly_mw=tuple(block))
        if bootstrap:
            block = [float(sol.x[prob.idx["p_dam"][4 * h]]) for h in range(24)]
            commitments[day] = DamCommitment(day=day, hourly_mw=tuple(block))

        try:
            result = electrolyzer.step(
                state,
                action,
                units.STEP_MINUTES,
                p,
                pressure_mode=cfg.pressure_mode,
                setpoint_tol_kmolhr=setpoint_tol,
            )
        except electrolyzer.StepViolation as exc:
            raise RolloutError(f"simulator rejected the applied action at {ts}: {exc}") from exc

        c_dam = dam_series.window(ts, 1)[0]
        c_rtm = rtm_series.window(ts, 1)[0]
        elec = units.STEP_HOURS * (c_dam * action.p_dam_mw + c_rtm * action.p_rtm_mw)

        log.timestamps.append(ts)
        log.actions.append(action)
        log.states.append(result.state)
        log.dam_price.append(c_dam)
        log.rtm_price.append(c_rtm)
        log.elec_cost.append(elec)
        log.mem_cost.append(result.membrane_cost_usd)
        log.h2_ton.append(result.h2_produced_ton)
        log.flagged.append(flagged)
        log.solver_iterations.append(sol.iterations)
        log.warm_started.append(warm)
        log.power_residual_mwh.append(result.power_balance_residual_mwh)

        state = result.state
        if usable:
            prev_prob, prev_x = prob, sol.x
            prev_action = action

    log.commitments = commitments
    _verify_ledger(log)
    return log


def _check_price_cover(series: PriceSeries, start_ts: datetime, n_steps: int, label: str) -> None:
    try:
        series.window(start_ts, n_steps)
    except ValueError as exc:
        raise RolloutError(f"{label} prices do not cover the run plus one lookahead day: {exc}") from exc


def _verify_ledger(log: TrajectoryLog) -> None:
    """Cross-check the electricity ledger against market settlement."""
    total = settle(log.actions, log.dam_price, log.rtm_price)
    ledger = log.ledger().electricity_usd
    if abs(total - ledger) > 1e-6:
        raise RolloutError(
            f"ledger electricity {ledger} disagrees with settlement {total}"
        )


def _run_one(args) -> TrajectoryLog:
    strategy, initial_state, dam, rtm, start_day, end_day, p, cfg = args
    return run(ocp.StrategyKind(strategy), initial_state, dam, rtm, start_day, end_day, p, cfg)


def compare(
    strategies: list[ocp.StrategyKind],
    initial_state: PlantState,
    dam_series: PriceSeries,
    rtm_series: PriceSeries,
    start_day: date,
    end_day: date,
    p: PlantParams,
    cfg: RolloutConfig | None = None,
) -> dict[str, TrajectoryLog]:
    """Run several strategies on identical inputs, step-aligned.

    Honors H2MPC_THREADS for one worker per strategy; output does not
    depend on the worker count.
    """
    workers = int(os.environ.get("H2MPC_THREADS", "1"))
    jobs = [
        (s.value, initial_state, dam_series, rtm_series, start_day, end_day, p, cfg)
        for s in strategies
    ]
    if workers > 1 and len(strategies) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(strategies))) as pool:
            logs = list(pool.map(_run_one, jobs))
    else:
        logs = [_run_one(j) for j in jobs]
    out = {s.value: log for s, log in zip(strategies, logs)}
    stamps = [log.timestamps for log in out.values()]
    if any(st != stamps[0] for st in stamps[1:]):
        raise RolloutError("strategy logs are not step-aligned")
    return out
