"""Multilevel guillotine partitioning with a +/-1 reward signal.

Each iteration slices one tile per device off the remaining image, scores
the resulting scheme with the min-max latency objective and keeps the best
one. The reward of the last comparison drives an adaptive perturbation: an
improvement re-centres the cut parameters on the improving scheme and resets
the noise scale, a miss widens it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cost import INFEASIBLE, CostBreakdown, evaluate
from .partition import (HORIZONTAL, VERTICAL, CutStep, EmptyRemaining,
                        PartitionScheme, Rect, guillotine_apply,
                        guillotine_scheme)
from .scenario import MpaConfig, Scenario


class NoFeasibleScheme(RuntimeError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class MpaState:
    max_iterations: int
    base_vector: list[tuple[str, float]]
    rng_seed: int
    config: MpaConfig = field(default_factory=MpaConfig)
    iteration: int = 0
    reward: int = 1
    best_scheme: PartitionScheme | None = None
    best_makespan: float = INFEASIBLE
    sigma: float = 0.0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.rng_seed)
        if not self.sigma:
            self.sigma = self.config.sigma_init

    @property
    def perturb(self):
        # the first iteration scores the unperturbed base vector
        return self.iteration > 0


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    makespan_s: float
    reward: int
    sigma: float


@dataclass
class MpaResult:
    scheme: PartitionScheme
    breakdown: CostBreakdown
    trace: list[TraceEntry]

    @property
    def makespan_s(self):
        return self.breakdown.makespan_s

    def trace_csv(self) -> str:
        lines = ["iteration,makespan_s,reward,sigma"]
        for t in self.trace:
            lines.append(f"{t.iteration},{t.makespan_s!r},{t.reward},{t.sigma!r}")
        return "\n".join(lines) + "\n"


def initial_base_vector(devices) -> list[tuple[str, float]]:
    """Alternate h/v cuts; each device takes its throughput share of what remains."""
    fs = [d.f for d in devices]
    vec = []
    for i in range(len(fs) - 1):
        dim = HORIZONTAL if i % 2 == 0 else VERTICAL
        vec.append((dim, fs[i] / sum(fs[i:])))
    return vec


def select_location(remaining: Rect, state: MpaState, position: int) -> CutStep:
    """Cut parameters for the device at `position` in the assignment order."""
    if remaining.w < 1 or remaining.h < 1:
        raise EmptyRemaining(f"nothing left to cut at position {position}")
    if position >= len(state.base_vector):
        return CutStep(state.base_vector[-1][0] if state.base_vector
                       else HORIZONTAL, 1.0)
    dim, frac = state.base_vector[position]
    if not state.perturb:
        return CutStep(dim, frac)
    cfg = state.config
    flip = state.rng.random() < cfg.p_flip
    noise = state.rng.standard_normal()
    if flip:
        dim = VERTICAL if dim == HORIZONTAL else HORIZONTAL
    if state.sigma > 0:
        frac = min(max(frac + state.sigma * noise, cfg.fraction_min),
                   cfg.fraction_max)
    return CutStep(dim, frac)


def generate_scheme(scenario: Scenario, state: MpaState) -> PartitionScheme:
    """One pass of cuts over the devices in scenario order.

    Should an early cut consume the whole remainder, the later devices get
    empty tiles; the evaluator scores that scheme as infeasible.
    """
    devices = scenario.devices
    remaining = Rect(0, 0, scenario.image_w, scenario.image_h)
    assignments, cuts = [], []
    for pos, dev in enumerate(devices):
        if pos == len(devices) - 1:
            assignments.append((dev.id, remaining))
            break
        if remaining.area == 0:
            dim, frac = state.base_vector[pos]
            cuts.append(CutStep(dim, frac))
            assignments.append((dev.id, Rect(remaining.x, remaining.y, 0, 0)))
            continue
        cut = select_location(remaining, state, pos)
        tile, remaining = guillotine_apply(remaining, cut)
        cuts.append(cut)
        assignments.append((dev.id, tile))
    return PartitionScheme(scenario.image_h, scenario.image_w,
                           tuple(assignments), tuple(cuts))


def mpa_optimize(scenario: Scenario, iterations: int = 1000,
                 seed: int | None = None, callback=None) -> MpaResult:
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not scenario.devices:
        raise ValueError("scenario has no devices")
    cfg = scenario.mpa
    state = MpaState(
        max_iterations=iterations,
        base_vector=initial_base_vector(scenario.devices),
        rng_seed=scenario.seed if seed is None else seed,
        config=cfg,
    )
    net, devices, comm = scenario.network, scenario.devices, scenario.comm
    best_breakdown = None
    trace = []
    for it in range(iterations):
        state.iteration = it
        sigma_used = state.sigma
        scheme = generate_scheme(scenario, state)
        breakdown = evaluate(scheme, net, devices, comm, check_tiling=False)
        t = breakdown.makespan_s
        if callback is not None:
            callback(it + 1, scheme, breakdown)
        if t < state.best_makespan:
            state.best_makespan = t
            state.best_scheme = scheme
            best_breakdown = breakdown
            state.reward = 1
            state.base_vector = [(c.dim, c.fraction) for c in scheme.cuts]
            state.sigma = cfg.sigma_init
        else:
            state.reward = -1
            state.sigma = min(max(state.sigma * cfg.growth_factor, cfg.sigma_min),
                              cfg.sigma_max)
        trace.append(TraceEntry(it + 1, t, state.reward, sigma_used))
    if state.best_scheme is None:
        raise NoFeasibleScheme(
            f"no feasible scheme in {iterations} iterations")
    return MpaResult(state.best_scheme, best_breakdown, trace)


def default_grid(size: int = 16) -> list[float]:
    return [i / size for i in range(1, size + 1)]


def count_candidates(n_devices: int, grid_size: int, all_orders: bool) -> int:
    n = (2 * grid_size) ** max(n_devices - 1, 0)
    return n * math.factorial(n_devices) if all_orders else n


def enumerate_guillotine(image_h, image_w, device_ids, fraction_grid,
                         try_all_device_orders=False):
    """Yield every distinct guillotine scheme reachable on the grid."""
    device_ids = list(device_ids)
    orders = (itertools.permutations(device_ids) if try_all_device_orders
              else [tuple(device_ids)])
    steps = [CutStep(d, f) for d in (HORIZONTAL, VERTICAL) for f in fraction_grid]
    seen = set()
    for order in orders:
        for combo in itertools.product(steps, repeat=len(order) - 1):
            try:
                scheme = guillotine_scheme(image_h, image_w, order, combo)
            except EmptyRemaining:
                continue
            key = scheme.assignments
            if key in seen:
                continue
            seen.add(key)
            yield scheme


def _encoding(scheme):
    return tuple((d, r.x, r.y, r.w, r.h) for d, r in scheme.assignments)


@dataclass
class OracleResult:
    scheme: PartitionScheme
    makespan_s: float
    breakdown: CostBreakdown
    n_candidates: int


def brute_force_search(scenario: Scenario, fraction_grid=None,
                       try_all_device_orders: bool = False,
                       max_candidates: int = 200_000) -> OracleResult:
    """Exhaustive minimum of the makespan over guillotine schemes on a fraction grid.

    Ties go to the lexicographically smallest tile encoding, so the answer
    does not depend on enumeration order.
    """
    grid = list(fraction_grid) if fraction_grid is not None else default_grid()
    ids = [d.id for d in scenario.devices]
    n = count_candidates(len(ids), len(grid), try_all_device_orders)
    if n > max_candidates:
        raise BudgetExceeded(
            f"{n} candidate schemes exceed the cap of {max_candidates}")
    best = None
    best_key = None
    seen = 0
    for scheme in enumerate_guillotine(scenario.image_h, scenario.image_w, ids,
                                       grid, try_all_device_orders):
        seen += 1
        bd = evaluate(scheme, scenario.network, scenario.devices,
                      scenario.comm, check_tiling=False)
        key = (bd.makespan_s, _encoding(scheme))
        if best_key is None or key < best_key:
            best_key = key
            best = (scheme, bd)
    if best is None or math.isinf(best_key[0]):
        raise NoFeasibleScheme("no feasible scheme on the grid")
    return OracleResult(best[0], best_key[0], best[1], seen)
