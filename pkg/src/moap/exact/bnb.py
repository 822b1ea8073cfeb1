"""Best-first branch-and-bound for :class:`IlpModel`.

Two bound rules are available:

``lp``
    Linear relaxation solved by HiGHS, warm-started from the parent basis.
    Formulation-sensitive, so clique rows give tighter bounds than edge rows.
``mincost``
    Sum over open demands of the cheapest still-selectable offer.  No LP,
    cheap, and identical for both formulations.

Both use the same fixing propagation: a variable set to one zeroes every
variable sharing a saturated row, and an assignment row with a single
candidate left forces it.

Incumbents come from integral nodes and from a rounding pass that takes
variables by decreasing relaxation value (then cost) while every row they
touch has room.  It runs at the root and then every ``ROUND_EVERY`` nodes.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass

import highspy
import numpy as np

from ..core import UNASSIGNED, Solution
from .model import IlpModel

INT_TOL = 1e-6
ROUND_EVERY = 20


@dataclass
class BranchAndBoundConfig:
    time_limit: float | None = 60.0
    node_limit: int | None = None
    incumbent: Solution | None = None
    branching: str | None = None  # "fractional" (lp default) or "gap" (mincost default)
    bound: str = "lp"

    def __post_init__(self):
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.bound not in ("lp", "mincost"):
            raise ValueError(f"unknown bound rule {self.bound!r}")
        if self.branching is None:
            self.branching = "fractional" if self.bound == "lp" else "gap"
        if self.branching not in ("fractional", "gap"):
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.branching == "fractional" and self.bound != "lp":
            raise ValueError("fractional branching needs the lp bound")


@dataclass
class BnbResult:
    status: str  # "optimal", "infeasible", "feasible", "unknown"
    solution: Solution | None
    bound: float
    optimal: bool
    nodes: int
    root_bound: float
    runtime: float
    lp_iterations: int = 0
    values: np.ndarray | None = None

    @property
    def objective(self) -> float:
        return math.inf if self.solution is None else self.solution.objective

    @property
    def gap(self) -> float | None:
        if self.solution is None or not math.isfinite(self.bound):
            return None
        if self.objective == 0:
            return 0.0
        return max(0.0, (self.objective - self.bound) / abs(self.objective))


class _Rows:
    """Row data shared by propagation and the combinatorial bound."""

    def __init__(self, model: IlpModel):
        self.rows = [(list(r), 1, True) for r in model.eq_rows]
        self.rows += [(list(r), rhs, False) for r, rhs in model.cap_rows]
        self.var_rows: list[list[int]] = [[] for _ in range(model.num_vars)]
        for i, (vars_, _, _) in enumerate(self.rows):
            for v in vars_:
                self.var_rows[v].append(i)
        self.num_eq = len(model.eq_rows)
        self.rhs = np.array([rhs for _, rhs, _ in self.rows], dtype=np.int64)

    def round(self, costs, lb: bytearray, ub: bytearray, score) -> np.ndarray | None:
        """Greedy 0/1 point within ``lb``/``ub`` preferring high ``score``; None if some demand stays open."""
        n = len(costs)
        x = np.zeros(n, dtype=np.int8)
        fill = np.zeros(len(self.rows), dtype=np.int64)
        var_rows, rhs = self.var_rows, self.rhs
        fixed = np.flatnonzero(np.frombuffer(bytes(lb), dtype=np.uint8))
        for v in fixed:
            x[v] = 1
            for r in var_rows[v]:
                fill[r] += 1
        free = np.flatnonzero(np.frombuffer(bytes(ub), dtype=np.uint8) & ~np.frombuffer(bytes(lb), dtype=np.uint8))
        for v in free[np.lexsort((costs[free], -score[free]))]:
            rs = var_rows[v]
            if all(fill[r] < rhs[r] for r in rs):
                x[v] = 1
                for r in rs:
                    fill[r] += 1
        if (fill[:self.num_eq] != 1).any() or (fill > rhs).any():
            return None
        return x

    def propagate(self, lb: bytearray, ub: bytearray, queue) -> bool:
        rows, var_rows = self.rows, self.var_rows
        inq = set(queue)
        queue = deque(queue)
        while queue:
            r = queue.popleft()
            inq.discard(r)
            vars_, rhs, eq = rows[r]
            ones = 0
            for v in vars_:
                ones += lb[v]
            if ones > rhs:
                return False
            if ones == rhs:
                for v in vars_:
                    if ub[v] and not lb[v]:
                        ub[v] = 0
                        for q in var_rows[v]:
                            if q not in inq:
                                inq.add(q)
                                queue.append(q)
            elif eq:
                free = [v for v in vars_ if ub[v]]
                if not free:
                    return False
                if len(free) == 1:
                    v = free[0]
                    lb[v] = 1
                    for q in var_rows[v]:
                        if q not in inq:
                            inq.add(q)
                            queue.append(q)
        return True


def _mincost(model: IlpModel, rows: _Rows, lb, ub):
    """Cheapest available variable per assignment row and the resulting bound."""
    costs = model.costs
    total = model.offset
    pick = []
    for r in range(rows.num_eq):
        best, second, arg = math.inf, math.inf, -1
        for v in rows.rows[r][0]:
            if lb[v]:
                best, second, arg = costs[v], math.inf, v
                break
            if ub[v]:
                c = costs[v]
                if c < best or (c == best and v < arg):
                    best, second, arg = c, best, v
                elif c < second:
                    second = c
        total += best
        pick.append((arg, second - best))
    return total, pick


def solve_bnb(model: IlpModel, cfg: BranchAndBoundConfig | None = None) -> BnbResult:
    """Solve ``model`` to optimality or until a limit is hit.

    The returned ``bound`` is always a valid lower bound on the optimum; when
    ``optimal`` is true the solution attains it (or infeasibility is proven).
    """
    cfg = cfg or BranchAndBoundConfig()
    t0 = time.perf_counter()
    deadline = None if cfg.time_limit is None else t0 + cfg.time_limit
    n = model.num_vars
    instance = model.instance

    def finish(status, values, bound, optimal, nodes, root_bound, iters=0):
        sol = None
        if values is not None:
            sel = [UNASSIGNED] * instance.num_demands
            for o in model.fixed_offers:
                sel[instance.offer_demand[o]] = int(o)
            for v in np.flatnonzero(values > 0.5):
                o = int(model.var_offer[v])
                sel[instance.offer_demand[o]] = o
            sol = Solution.from_selection(instance, sel)
        return BnbResult(status, sol, bound, optimal, nodes, root_bound,
                         time.perf_counter() - t0, iters, values)

    if model.infeasible:
        return finish("infeasible", None, math.inf, True, 0, math.inf)

    rows = _Rows(model)
    root_lb = bytearray(n)
    root_ub = bytearray([1]) * n
    if not rows.propagate(root_lb, root_ub, range(len(rows.rows))):
        return finish("infeasible", None, math.inf, True, 1, math.inf)

    inc_val = math.inf
    inc_x = None
    if cfg.incumbent is not None and cfg.incumbent.complete:
        x = np.zeros(n, dtype=np.int8)
        owned = model.var_of_offer()
        fixed = set(model.fixed_offers)
        ok = True
        for o in cfg.incumbent.selection:
            if o in owned:
                x[owned[o]] = 1
            elif o not in fixed:
                ok = False
        if ok and model.is_feasible(x):
            inc_x = x
            inc_val = model.offset + float(model.costs @ x)

    lp = None
    if cfg.bound == "lp" and n:
        lp = _LpRelaxation(model)

    def tol(v):
        return 1e-9 * max(1.0, abs(v)) if math.isfinite(v) else 0.0

    counter = 0
    heap = [(-math.inf, 0, -1, counter, ())]
    nodes = 0
    root_bound = None
    iters = 0
    hit_limit = False
    while heap:
        if deadline is not None and time.perf_counter() > deadline:
            hit_limit = True
            break
        if cfg.node_limit is not None and nodes >= cfg.node_limit:
            hit_limit = True
            break
        parent_bound, _, _, _, path = heapq.heappop(heap)
        if parent_bound >= inc_val - tol(inc_val):
            continue
        nodes += 1
        lb = bytearray(root_lb)
        ub = bytearray(root_ub)
        touched = []
        for v, val in path:
            if val:
                lb[v] = 1
            else:
                ub[v] = 0
            touched.extend(rows.var_rows[v])
        if not rows.propagate(lb, ub, touched):
            if root_bound is None:
                root_bound = math.inf
            continue

        if lp is not None:
            res = lp.solve(lb, ub)
            iters += res[2]
            if res[0] is None:
                if root_bound is None:
                    root_bound = math.inf
                continue
            bound, x = res[0] + model.offset, res[1]
        else:
            bound, pick = _mincost(model, rows, lb, ub)
            x = None
        if root_bound is None:
            root_bound = bound
        if bound >= inc_val - tol(inc_val):
            continue
        if nodes % ROUND_EVERY == 1:
            if x is not None:
                score = x
            else:
                score = np.zeros(n)
                score[[v for v, _ in pick if v >= 0]] = 1.0
            guess = rows.round(model.costs, lb, ub, score)
            if guess is not None:
                val = model.offset + float(model.costs @ guess)
                if val < inc_val - tol(inc_val):
                    inc_val, inc_x = val, guess

        depth = len(path)
        if lp is not None:
            frac = (x > INT_TOL) & (x < 1 - INT_TOL)
            if not frac.any():
                inc_val, inc_x = bound, (x > 0.5).astype(np.int8)
                continue
            # row with the largest fractional value; branch on that variable
            best_v, best_val, best_row = -1, -1.0, -1
            for r in range(rows.num_eq):
                for v in rows.rows[r][0]:
                    if frac[v] and x[v] > best_val:
                        best_v, best_val, best_row = v, x[v], r
            if best_v < 0:  # only capacity-row fractionality left
                cand = np.flatnonzero(frac)
                best_v = int(cand[np.argmax(x[cand])])
                best_row = rows.var_rows[best_v][0]
            branch_v, branch_row = best_v, best_row
        else:
            cand = np.zeros(n, dtype=np.int8)
            for v, _ in pick:
                cand[v] = 1
            violated = [r for r in range(rows.num_eq, len(rows.rows))
                        if sum(cand[v] for v in rows.rows[r][0]) > rows.rows[r][1]]
            if not violated:
                inc_val, inc_x = bound, cand
                continue
            in_conflict = set()
            for r in violated:
                in_conflict.update(v for v in rows.rows[r][0] if cand[v])
            branch_v, branch_row, best_gap = -1, -1, -1.0
            for r, (v, gap) in enumerate(pick):
                if v in in_conflict and not lb[v] and gap > best_gap:
                    branch_v, branch_row, best_gap = v, r, gap
        demand = model.eq_demand[branch_row] if branch_row < rows.num_eq else n
        for val in (1, 0):
            counter += 1
            heapq.heappush(heap, (bound, -(depth + 1), demand, counter, path + ((branch_v, val),)))

    if hit_limit:
        open_bound = min((b for b, *_ in heap), default=math.inf)
        bound = min(open_bound, inc_val)
        if root_bound is None:
            root_bound = bound
        status = "feasible" if inc_x is not None else "unknown"
        return finish(status, inc_x, bound, False, nodes, root_bound, iters)
    if root_bound is None:
        root_bound = inc_val
    if inc_x is None:
        return finish("infeasible", None, math.inf, True, nodes, root_bound, iters)
    return finish("optimal", inc_x, inc_val, True, nodes, root_bound, iters)


class _LpRelaxation:
    """HiGHS LP kept alive across nodes; only changed column bounds are resent."""

    def __init__(self, model: IlpModel):
        n = model.num_vars
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("random_seed", 0)
        h.setOptionValue("threads", 1)
        h.addVars(n, np.zeros(n), np.ones(n))
        h.changeColsCost(n, np.arange(n, dtype=np.int32), np.asarray(model.costs, dtype=np.float64))
        rows = [(r, 1.0, 1.0) for r in model.eq_rows]
        rows += [(r, -highspy.kHighsInf, float(rhs)) for r, rhs in model.cap_rows]
        if rows:
            starts, index = [], []
            for r, _, _ in rows:
                starts.append(len(index))
                index.extend(r)
            h.addRows(len(rows), np.array([lo for _, lo, _ in rows]), np.array([hi for _, _, hi in rows]),
                      len(index), np.array(starts, dtype=np.int32), np.array(index, dtype=np.int32),
                      np.ones(len(index)))
        self.h = h
        self.n = n
        self.lb = np.zeros(n)
        self.ub = np.ones(n)
        self.first = True

    def solve(self, lb: bytearray, ub: bytearray):
        new_lb = np.frombuffer(bytes(lb), dtype=np.uint8).astype(np.float64)
        new_ub = np.frombuffer(bytes(ub), dtype=np.uint8).astype(np.float64)
        changed = np.flatnonzero((new_lb != self.lb) | (new_ub != self.ub)).astype(np.int32)
        h = self.h
        if len(changed):
            h.changeColsBounds(len(changed), changed, new_lb[changed], new_ub[changed])
            self.lb, self.ub = new_lb, new_ub
        h.run()
        if self.first:
            h.setOptionValue("presolve", "off")
            self.first = False
        status = h.getModelStatus()
        iters = h.getInfo().simplex_iteration_count
        if status == highspy.HighsModelStatus.kInfeasible:
            return None, None, iters
        if status != highspy.HighsModelStatus.kOptimal:
            # fall back to a cold solve once before giving up on the node
            h.clearSolver()
            h.run()
            status = h.getModelStatus()
            if status == highspy.HighsModelStatus.kInfeasible:
                return None, None, iters
            if status != highspy.HighsModelStatus.kOptimal:
                raise RuntimeError(f"LP relaxation failed with status {status}")
        x = np.asarray(h.getSolution().col_value)
        return h.getInfo().objective_function_value, x, iters
