"""Per-slot beamforming and energy exchange for a fixed rate fraction, and the
one-dimensional search over that fraction.

For a fixed ``phi`` every active UE must reach SINR ``exp(q_A * phi) - 1``.
The resulting problem is a second-order cone program in the beams and the
per-line exchange flows; the grid cost terms ``max(delta, beta*delta)`` and
``(x)^+`` enter through epigraph variables.  All cone data is expressed in
normalized units (powers over ``P0 = max P^max``, channels over the receiver
noise amplitude) so entries are O(1).

After the interior-point solve the beam directions are kept and the powers are
recomputed from the SINR equalities, which makes every SINR constraint hold
with equality to machine precision and can only lower the cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .conic import ConeProgram
from .energy import ExchangePlan, endpoint_flows, grid_expenditure
from .errors import InfeasibleError, SolverError
from .model import ChannelRealization, bst_powers

PHI_TOL = 1e-4
COARSE_POINTS = 16
FINE_POINTS = 256
# the cost program caps power at (1 - POWER_TOL) * P^max so solver error stays
# below the limit; margin problems keep a further POWER_TOL of headroom
POWER_TOL = 1e-6
MARGIN_TARGET = 1.0 - 2 * POWER_TOL


def f_phi(q_access, phi):
    """SINR amplitude target ``sqrt(exp(q_A * phi) - 1)``; ``inf`` on overflow."""
    x = np.asarray(q_access, dtype=float) * float(phi)
    with np.errstate(over="ignore"):
        out = np.sqrt(np.expm1(x))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PerSlotProblem:
    """Inputs of one slot decision.

    ``q_access`` is the current access backlog ``q_A(t)``; ``q_access_frame`` and
    ``q_processing_frame`` are the frame-start snapshots that weight the rates.
    ``harvest`` is the per-slot renewable share ``E_HAV / T`` for every BST.
    """

    topology: object
    channel: object
    schedule: object
    q_access: np.ndarray
    q_access_frame: np.ndarray
    q_processing_frame: np.ndarray
    harvest: np.ndarray
    prices: object
    V: float
    allow_exchange: bool = True

    def __post_init__(self):
        for name in ("q_access", "q_access_frame", "q_processing_frame", "harvest"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if isinstance(self.channel, ChannelRealization):
            object.__setattr__(self, "channel", self.channel.h)
        object.__setattr__(self, "channel", np.asarray(self.channel, dtype=complex))

    @property
    def scheduled(self):
        return np.asarray(self.schedule.indicator, dtype=bool)

    @property
    def active(self):
        """Scheduled UEs that actually need a beam (positive access backlog)."""
        return self.scheduled & (self.q_access > 0)

    @property
    def weights(self):
        return self.q_processing_frame - self.q_access_frame

    @property
    def slope(self):
        """Derivative of the rate term of the objective with respect to phi."""
        s = self.scheduled
        return float(np.sum(self.weights[s] * self.q_access[s]))

    def with_exchange(self, allow):
        return PerSlotProblem(
            self.topology, self.channel, self.schedule, self.q_access, self.q_access_frame,
            self.q_processing_frame, self.harvest, self.prices, self.V, allow,
        )


@dataclass
class SlotDecision:
    beams: np.ndarray  # (K, L), zero rows for UEs without a beam
    exchange: ExchangePlan
    phi: float
    rates: np.ndarray
    objective: float
    grid_cost: np.ndarray
    bst_power: np.ndarray
    flags: tuple = ()
    solves: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def total_cost(self):
        return float(np.sum(self.grid_cost))


# ---------------------------------------------------------------------------
# exchange-only subproblem


def _total_cost(base, flows, prices):
    x = base + flows
    return (prices.buy - prices.sell) * np.maximum(x, 0.0) + prices.sell * x


def optimal_exchange(topology, bst_power, harvest, prices):
    """Exchange plan minimizing total grid cost for fixed BST consumption."""
    E = len(topology.edges)
    if E == 0:
        return ExchangePlan(np.zeros(0))
    base = np.asarray(bst_power, float) - np.asarray(harvest, float)
    if E == 1:
        return ExchangePlan(np.array([_single_line(topology, base, prices)]))
    return ExchangePlan(_exchange_lp(topology, base, prices))


def _single_line(topology, base, prices):
    (m, l), beta = topology.edges[0], float(topology.line_efficiency[0])
    cands = [0.0]
    for node, sign in ((m, 1.0), (l, -1.0)):
        b = base[node]
        d = -b if b < 0 else -b / beta  # endpoint flow that zeroes the node's need
        cands.append(sign * d)
    cands = np.array(sorted(set(cands), key=lambda x: (abs(x), x)))
    costs = np.array([
        np.sum(_total_cost(base, endpoint_flows(np.array([c]), topology), prices)) for c in cands
    ])
    best = costs.min()
    scale = max(abs(best), prices.buy * np.max(np.abs(base)), 1e-300)
    return float(cands[np.flatnonzero(costs <= best + 1e-12 * scale)[0]])


def _exchange_lp(topology, base, prices):
    M, E = topology.num_bsts, len(topology.edges)
    a = prices.sell / prices.buy
    # variables: flow (E), endpoint output (2E), positive part (M)
    n = 3 * E + M
    c = np.concatenate([np.zeros(E), np.zeros(2 * E), np.full(M, 1 - a)])
    rows, rhs = [], []
    for e, (m, l) in enumerate(topology.edges):
        beta = topology.line_efficiency[e]
        for k, (node, sign) in enumerate(((m, 1.0), (l, -1.0))):
            col = E + 2 * e + k
            c[col] += a
            for coef in (1.0, beta):
                r = np.zeros(n)
                r[e] = sign * coef
                r[col] = -1.0
                rows.append(r)
                rhs.append(0.0)
    for node in range(M):
        r = np.zeros(n)
        r[3 * E + node] = -1.0
        for e, (m, l) in enumerate(topology.edges):
            if node in (m, l):
                r[E + 2 * e + (0 if node == m else 1)] = 1.0
        rows.append(r)
        rhs.append(-base[node])
    bounds = [(None, None)] * (3 * E) + [(0, None)] * M
    scale = max(1.0, float(np.max(np.abs(base))))
    res = linprog(
        c, A_ub=np.array(rows), b_ub=np.array(rhs) / scale, bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise SolverError(f"exchange LP failed: {res.message}")
    return res.x[:E] * scale


def _exchange_decision(problem, beams, phi, flags=(), solves=0, meta=None):
    topo = problem.topology
    power = bst_powers(beams, topo)
    if problem.allow_exchange:
        plan = optimal_exchange(topo, power, problem.harvest, problem.prices)
    else:
        plan = ExchangePlan.zero(topo)
    flows = endpoint_flows(plan, topo)
    cost = np.atleast_1d(grid_expenditure(power, flows, problem.harvest, problem.prices))
    rates = np.where(problem.scheduled, problem.q_access * phi, 0.0)
    objective = problem.V * float(cost.sum()) + float(np.sum(problem.weights * rates))
    return SlotDecision(
        beams=beams, exchange=plan, phi=float(phi), rates=rates, objective=objective,
        grid_cost=cost, bst_power=power, flags=tuple(flags), solves=solves, meta=meta or {},
    )


def exchange_only(problem):
    """Best exchange plan when no UE is served (only circuit power is consumed)."""
    topo = problem.topology
    if not problem.allow_exchange:
        return ExchangePlan.zero(topo)
    return optimal_exchange(topo, topo.circuit_power, problem.harvest, problem.prices)


def _idle_decision(problem, flags=()):
    beams = np.zeros((problem.topology.num_ues, problem.topology.antennas), dtype=complex)
    return _exchange_decision(problem, beams, 0.0, flags=flags)


# ---------------------------------------------------------------------------
# cone program templates


@lru_cache(maxsize=256)
def _template(layout, L, M, edges, betas, eta, pmax, mode):
    """Sparsity pattern and constant entries of a fixed-phi program.

    ``layout`` is the tuple of serving-BST indices of the active UEs; ``edges``
    is empty when exchange is disabled and ``pmax`` holds ``P^max / P0``.
    Entries that depend on the channel or targets are marked by their position
    in the vector built by :func:`_dynamic_values`.
    """
    Ka = len(layout)
    tx = sorted(set(layout))
    E = len(edges)
    nv = 2 * L * Ka
    t0 = nv
    tix = {m: t0 + k for k, m in enumerate(tx)}
    u0 = t0 + len(tx)
    d0 = u0 + M
    e0 = d0 + E
    n = e0 + 2 * E if mode == "cost" else u0 + 1
    s_col = u0  # margin mode only

    rows, cols, const, dyn = [], [], [], []
    b_const, b_role = [], []
    cones = []
    r = 0
    dpos = 0

    def beam_cols(i):
        return range(2 * L * i, 2 * L * (i + 1))

    def emit_dyn(row, cs):
        nonlocal dpos
        for c in cs:
            rows.append(row)
            cols.append(c)
            const.append(0.0)
            dyn.append(dpos)
            dpos += 1

    def emit(row, c, v):
        rows.append(row)
        cols.append(c)
        const.append(v)
        dyn.append(-1)

    def close_rows(count, b=0.0, role=None):
        nonlocal r
        for _ in range(count):
            b_const.append(b)
            b_role.append(role)
        r += count

    # zero cone: imaginary part of the own-channel response
    for i in range(Ka):
        emit_dyn(r, beam_cols(i))
        close_rows(1)
    cones.append(("zero", Ka))

    n_pos = r
    if mode == "cost":
        for m in tx:  # t_m <= (1 - tol) Pmax_m / P0
            emit(r, tix[m], 1.0)
            close_rows(1, pmax[m] * (1 - POWER_TOL))
        for m in range(M):  # u_m >= 0
            emit(r, u0 + m, -1.0)
            close_rows(1)
        for m in range(M):  # u_m >= t_m / eta + sum of endpoint outputs + k_m
            emit(r, u0 + m, -1.0)
            if m in tix:
                emit(r, tix[m], 1.0 / eta)
            for e, (a_, b_) in enumerate(edges):
                if m in (a_, b_):
                    emit(r, e0 + 2 * e + (0 if m == a_ else 1), 1.0)
            close_rows(1, 0.0, ("k", m))
        for e in range(E):  # endpoint output >= sign*flow and >= beta*sign*flow
            for k, sign in ((0, 1.0), (1, -1.0)):
                for coef in (1.0, betas[e]):
                    emit(r, e0 + 2 * e + k, -1.0)
                    emit(r, d0 + e, sign * coef)
                    close_rows(1)
    else:
        for m in tx:  # t_m <= s * Pmax_m / P0
            emit(r, tix[m], 1.0)
            emit(r, s_col, -pmax[m])
            close_rows(1)
    cones.append(("nonneg", r - n_pos))

    # SINR cones, one per active UE
    for i in range(Ka):
        start = r
        emit_dyn(r, beam_cols(i))  # signal row
        close_rows(1)
        for j in range(Ka):
            if j != i:
                emit_dyn(r, beam_cols(j))
                emit_dyn(r + 1, beam_cols(j))
                close_rows(2)
        close_rows(1, 0.0, ("f", i))
        cones.append(("soc", r - start))

    # transmit power ||v_m||^2 <= t_m as a rotated cone
    for m in tx:
        start = r
        emit(r, tix[m], -1.0)
        emit(r + 1, tix[m], -1.0)
        close_rows(1, 1.0)
        close_rows(1, -1.0)
        for i in range(Ka):
            if layout[i] == m:
                for c in beam_cols(i):
                    emit(r, c, -2.0)
                    close_rows(1)
        cones.append(("soc", r - start))

    rows = np.array(rows, dtype=int)
    cols = np.array(cols, dtype=int)
    dyn = np.array(dyn, dtype=np.int64)
    order = np.lexsort((rows, cols))
    indptr = np.concatenate([[0], np.cumsum(np.bincount(cols, minlength=n))])
    f_rows = np.array([k for k, role in enumerate(b_role) if role and role[0] == "f"], int)
    k_rows = [(k, role[1]) for k, role in enumerate(b_role) if role and role[0] == "k"]
    return {
        "n": n, "m": r, "const": np.array(const, float), "dyn_mask": dyn >= 0,
        "dyn": dyn[dyn >= 0], "order": order, "indices": rows[order], "indptr": indptr,
        "b_const": np.array(b_const, float), "f_rows": f_rows,
        "k_rows": np.array([k for k, _ in k_rows], int), "k_bst": np.array([m for _, m in k_rows], int),
        "cones": tuple(cones), "tx": tuple(tx), "M": M, "E": E, "t0": t0, "u0": u0, "e0": e0,
    }


def _dynamic_values(C, f):
    """Dynamic matrix entries in template order.

    ``C[j, i]`` is the normalized channel from active UE ``j``'s BST to active
    UE ``i``; ``f`` the SINR amplitude targets.
    """
    Ka = C.shape[0]
    Cr, Ci = C.real, C.imag
    idx = np.arange(Ka)
    own_r, own_i = Cr[idx, idx], Ci[idx, idx]
    zero_rows = np.concatenate([-own_i, own_r], axis=1)  # Im = cr.vi - ci.vr
    parts = [zero_rows.ravel()]
    for i in range(Ka):
        parts.append(np.concatenate([-own_r[i], -own_i[i]]))
        others = np.delete(idx, i)
        cr, ci = Cr[others, i], Ci[others, i]
        blk = np.concatenate([-cr, -ci, ci, -cr], axis=1) * f[i]
        parts.append(blk.ravel())
    return np.concatenate(parts)


class _SlotModel:
    """Normalized data of one slot for a fixed active set."""

    def __init__(self, problem):
        topo = problem.topology
        self.problem = problem
        self.topology = topo
        self.active = np.flatnonzero(problem.active)
        self.layout = tuple(int(b) for b in topo.ue_bst[self.active])
        self.P0 = float(np.max(topo.max_tx_power))
        sigma = np.sqrt(topo.noise_power[self.active])
        h = problem.channel
        # C[j, i] = h[bst(j), i] * sqrt(P0) / sigma_i over active UEs
        self.C = h[np.asarray(self.layout, int)][:, self.active, :] * (np.sqrt(self.P0) / sigma)[None, :, None]
        self.q = problem.q_access[self.active]
        self.edges = topo.edges if problem.allow_exchange else ()
        self.solves = 0

    # -- building --------------------------------------------------------

    def _program(self, phi, mode):
        topo = self.topology
        P0 = self.P0
        tpl = _template(
            self.layout, topo.antennas, topo.num_bsts, tuple(self.edges),
            tuple(float(x) for x in topo.line_efficiency[: len(self.edges)]),
            float(topo.pa_efficiency), tuple(float(x) for x in topo.max_tx_power / P0), mode,
        )
        f = np.asarray(f_phi(self.q, phi), float)
        vals = tpl["const"].copy()
        if len(self.layout):
            vals[tpl["dyn_mask"]] = _dynamic_values(self.C, f)[tpl["dyn"]]
        A = sp.csc_matrix((vals[tpl["order"]], tpl["indices"], tpl["indptr"]), shape=(tpl["m"], tpl["n"]))
        b = tpl["b_const"].copy()
        b[tpl["f_rows"]] = f
        k = (topo.circuit_power - self.problem.harvest) / P0
        b[tpl["k_rows"]] = -k[tpl["k_bst"]]
        q = np.zeros(tpl["n"])
        if mode == "cost":
            prices = self.problem.prices
            a = prices.sell / prices.buy
            q[tpl["u0"]:tpl["u0"] + tpl["M"]] = 1.0 - a
            q[tpl["t0"]:tpl["t0"] + len(tpl["tx"])] = a / topo.pa_efficiency
            q[tpl["e0"]:tpl["e0"] + 2 * tpl["E"]] = a
        else:
            q[-1] = 1.0
        return ConeProgram(q=q, A=A, b=b, cones=list(tpl["cones"])), tpl, f

    def program(self, phi, mode="cost"):
        return self._program(phi, mode)[0]

    # -- solving ---------------------------------------------------------

    def margin(self, phi):
        """Smallest achievable ``max_m P_m / P^max_m`` at rate fraction ``phi``."""
        f = np.asarray(f_phi(self.q, phi), float)
        if not np.all(np.isfinite(f)):
            return math.inf
        prog, _, _ = self._program(phi, "margin")
        self.solves += 1
        sol = prog.solve()
        if sol.infeasible:
            return math.inf
        return max(float(sol.x[-1]), 0.0)

    def solve(self, phi):
        """Beams at rate fraction ``phi``; raises :class:`InfeasibleError`."""
        f = np.asarray(f_phi(self.q, phi), float)
        if not np.all(np.isfinite(f)):
            raise InfeasibleError(f"SINR target overflow at phi={phi}")
        if phi > single_user_bound(self.problem) * (1 + 1e-12):
            raise InfeasibleError(f"SINR target above the single-user limit at phi={phi}")
        prog, tpl, f = self._program(phi, "cost")
        self.solves += 1
        try:
            sol = prog.solve()
        except SolverError:
            # badly scaled near-infeasible instances: settle it with the margin program
            if not self.margin(phi) <= 1.0:
                raise InfeasibleError(f"SINR targets infeasible at phi={phi}") from None
            raise
        if sol.infeasible:
            raise InfeasibleError(f"SINR targets infeasible at phi={phi}")
        L = self.topology.antennas
        x = sol.x[: 2 * L * len(self.layout)].reshape(len(self.layout), 2, L)
        w = np.sqrt(self.P0) * (x[:, 0] + 1j * x[:, 1])
        return self._finish(w, phi, f, sol)

    def _finish(self, w_active, phi, f, sol=None):
        topo = self.topology
        flags = []
        polished = polish_powers(self.problem, self.active, w_active, f**2)
        if polished is None:
            flags.append("unpolished")
            polished = _rotate(self.problem, self.active, w_active)
        beams = np.zeros((topo.num_ues, topo.antennas), dtype=complex)
        beams[self.active] = polished
        meta = {"residuals": sol.residuals} if sol is not None else {}
        return _exchange_decision(self.problem, beams, phi, flags, self.solves, meta)


def _rotate(problem, active, w):
    h_own = problem.channel[problem.topology.ue_bst[active], active]
    resp = np.einsum("il,il->i", h_own.conj(), w)
    phase = np.where(np.abs(resp) > 0, np.conj(resp) / np.maximum(np.abs(resp), 1e-300), 1.0)
    return w * phase[:, None]


def polish_powers(problem, active, w_active, gamma):
    """Keep the beam directions and set powers so every SINR target is met with equality.

    Returns ``None`` when the resulting powers are not positive or break a
    per-BST power limit.
    """
    topo = problem.topology
    norms = np.linalg.norm(w_active, axis=1)
    if np.any(norms <= 0):
        return None
    u = w_active / norms[:, None]
    bst = topo.ue_bst[active]
    hb = problem.channel[bst][:, active, :]  # (j, i, L): from UE j's BST to UE i
    G = np.abs(np.einsum("jil,jl->ij", hb.conj(), u)) ** 2
    gamma = np.asarray(gamma, float)
    D = -G.copy()
    np.fill_diagonal(D, np.diag(G) / gamma)
    try:
        p = np.linalg.solve(D, topo.noise_power[active])
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        return None
    per_bst = np.bincount(bst, weights=p, minlength=topo.num_bsts)
    if np.any(per_bst > topo.max_tx_power):
        return None
    return _rotate(problem, active, u * np.sqrt(p)[:, None])


# ---------------------------------------------------------------------------
# rate-fraction search


class _Evaluator:
    """Strategy hooks used by :func:`search_phi`."""

    def __init__(self, problem):
        self.problem = problem

    def upper_bound(self):
        raise NotImplementedError

    def lower_bound(self):
        return 0.0

    def margin(self, phi):
        raise NotImplementedError

    def solve(self, phi):
        raise NotImplementedError

    @property
    def solves(self):
        return 0


def single_user_bound(problem):
    """Largest phi any active UE could reach alone at full power, capped at 1."""
    topo = problem.topology
    act = np.flatnonzero(problem.active)
    bst = topo.ue_bst[act]
    g = np.sum(np.abs(problem.channel[bst, act]) ** 2, axis=1)
    snr = topo.max_tx_power[bst] * g / topo.noise_power[act]
    return float(min(1.0, np.min(np.log1p(snr) / problem.q_access[act])))


class ConicEvaluator(_Evaluator):
    def __init__(self, problem):
        super().__init__(problem)
        self.model = _SlotModel(problem)

    def upper_bound(self):
        return single_user_bound(self.problem)

    def lower_bound(self):
        # zero-forcing beams are feasible here, so their limit is a valid lower bound
        from .baselines import zf_directions, zf_margin

        p = self.problem
        act = p.active
        if np.count_nonzero(act) > p.topology.antennas:
            return 0.0
        try:
            zf = zf_directions(p.channel, act, p.topology)
        except ValueError:
            return 0.0
        return _largest_feasible(lambda x: zf_margin(p, zf, x), 0.0, 1.0)[0]

    def margin(self, phi):
        return self.model.margin(phi)

    def solve(self, phi):
        return self.model.solve(phi)

    @property
    def solves(self):
        return self.model.solves


def _largest_feasible(margin, lo, hi, tol=PHI_TOL, target=MARGIN_TARGET, q_max=1.0):
    """Bracket the largest phi in ``[lo, hi]`` with ``margin(phi) <= target``.

    ``margin`` must be nondecreasing; ``lo`` must be feasible.  Uses regula
    falsi (Illinois variant) on ``log margin`` with bisection whenever a trial
    point has no finite margin.  Returns ``(lo, hi)`` with ``hi - lo <= tol``
    unless ``hi`` itself is feasible, in which case ``(hi, hi)``.
    """
    log_t = math.log(target)
    m_hi = margin(hi)
    if m_hi <= target:
        return hi, hi
    g_hi = math.log(m_hi) - log_t if math.isfinite(m_hi) else math.inf
    g_lo = -math.inf
    side = 0
    while hi - lo > tol:
        if math.isfinite(g_lo) and math.isfinite(g_hi):
            x = hi - g_hi * (hi - lo) / (g_hi - g_lo)
        elif math.isfinite(g_hi) or math.isfinite(g_lo):
            # exponential model margin ~ A * (exp(q phi) - 1) through the known point
            x0, g0 = (hi, g_hi) if math.isfinite(g_hi) else (lo, g_lo)
            A = math.exp(g0 + log_t) / max(math.expm1(q_max * x0), 1e-300)
            x = math.log1p(target / A) / q_max if A > 0 else 0.5 * (lo + hi)
        else:
            x = 0.5 * (lo + hi)
        if not math.isfinite(x):
            x = 0.5 * (lo + hi)
        # nudge toward the side that has not moved recently so the bracket closes
        x += 0.4 * tol if side <= -2 else (-0.4 * tol if side >= 2 else 0.0)
        x = min(max(x, lo + 0.5 * tol), hi - 0.5 * tol)
        val = margin(x)
        g = math.log(val) - log_t if (math.isfinite(val) and val > 0) else (-math.inf if val == 0 else math.inf)
        if val <= target:
            lo, g_lo = x, g
            side = min(side, 0) - 1
            if side <= -2 and math.isfinite(g_hi):
                g_hi *= 0.5
        else:
            hi, g_hi = x, g
            side = max(side, 0) + 1
            if side >= 2 and math.isfinite(g_lo):
                g_lo *= 0.5
    return lo, hi


def _golden(fun, a, b, tol, cache):
    inv = (math.sqrt(5) - 1) / 2
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fun(c, cache), fun(d, cache)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fun(c, cache)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fun(d, cache)


def _unimodal(values):
    v = np.asarray(values)
    k = int(np.argmin(v))
    eps = 1e-12 * max(1.0, float(np.max(np.abs(v))))
    return bool(np.all(np.diff(v[: k + 1]) <= eps) and np.all(np.diff(v[k:]) >= -eps))


def search_phi(problem, evaluator=None, tol=PHI_TOL, coarse=COARSE_POINTS, fine=FINE_POINTS):
    """Best slot decision over the rate fraction ``phi`` in ``[0, 1]``.

    The largest feasible ``phi`` is bracketed first.  The optimal value as a
    function of ``phi`` is then minimized over ``[0, phi_hi]`` by a coarse grid
    followed by golden-section refinement, falling back to a fine grid when the
    coarse values are not unimodal.  Sub-intervals on which the objective
    provably exceeds its value at ``phi_hi`` are skipped.
    """
    if not np.any(problem.active):
        return _idle_decision(problem)
    ev = evaluator if evaluator is not None else ConicEvaluator(problem)
    flags = []
    ub = ev.upper_bound()
    lb = min(ev.lower_bound(), ub)
    q_max = float(np.max(problem.q_access[problem.active]))
    idle = _idle_decision(problem)
    slope = problem.slope
    if slope >= 0:
        # the cost never decreases with phi, so serving nothing is optimal
        idle.solves = ev.solves
        return idle

    hi_dec = None
    if ub >= 1.0:
        try:
            hi_dec = ev.solve(1.0)
            phi_hi = 1.0
        except InfeasibleError:
            ub = 1.0 - 0.5 * tol
    if hi_dec is None:
        phi_hi, _ = _largest_feasible(ev.margin, lb, ub, tol=tol, q_max=q_max)
        if phi_hi <= 0:
            idle.solves = ev.solves
            return idle
        try:
            hi_dec = ev.solve(phi_hi)
        except InfeasibleError:
            # margin and cost programs disagree at the boundary; step inside
            phi_hi = max(lb, phi_hi - tol)
            hi_dec = ev.solve(phi_hi) if phi_hi > 0 else idle

    # J(phi) >= V*C0 + slope*phi, which beats J(phi_hi) only above this point
    c0 = idle.total_cost
    window_lo = max(0.0, phi_hi - problem.V * (hi_dec.total_cost - c0) / abs(slope))
    best = min((hi_dec, idle), key=lambda d: d.objective)
    if phi_hi - window_lo <= tol:
        best = hi_dec if hi_dec.objective <= idle.objective else idle
        best.solves = ev.solves
        best.flags = tuple(best.flags) + tuple(flags)
        return best

    cache = {}

    def value(phi, cache):
        if phi in cache:
            return cache[phi].objective
        d = idle if phi == 0 else ev.solve(phi)
        cache[phi] = d
        return d.objective

    cache[phi_hi] = hi_dec
    grid = np.linspace(window_lo, phi_hi, coarse)
    vals = [value(float(x), cache) for x in grid]
    if _unimodal(vals):
        k = int(np.argmin(vals))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, coarse - 1)]
        _golden(value, float(a), float(b), tol, cache)
    else:
        flags.append("fine_grid")
        for x in np.linspace(window_lo, phi_hi, fine):
            value(float(x), cache)
    cands = list(cache.values()) + [idle]
    best = min(cands, key=lambda d: d.objective)
    best.solves = ev.solves
    best.flags = tuple(best.flags) + tuple(flags)
    return best


def solve_fixed_phi(problem, phi):
    """Optimal beams and exchange for rate fraction ``phi``.

    Raises :class:`InfeasibleError` when the SINR targets cannot be met.
    """
    if not 0.0 <= phi <= 1.0:
        raise ValueError("phi must lie in [0, 1]")
    if phi == 0 or not np.any(problem.active):
        return _exchange_decision(
            problem, np.zeros((problem.topology.num_ues, problem.topology.antennas), complex), phi
        )
    return _SlotModel(problem).solve(phi)


def tsube_slot(problem):
    """Slot decision of the two-scale algorithm (beams, exchange and phi)."""
    if not problem.scheduled.any():
        return _idle_decision(problem)
    return search_phi(problem)


def cone_program(problem, phi, mode="cost"):
    """The cone program solved for ``phi`` (for dumps and external cross-checks)."""
    return _SlotModel(problem).program(phi, mode)
