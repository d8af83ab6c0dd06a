"""Reference linear-programming core.

A dense two-phase primal simplex over problems of the form

    max/min  c @ x
    s.t.     A[i] @ x  (<= | = | >=)  b[i]      for every row i
             lb <= x <= ub                      (entries may be infinite)

Variable bounds are handled implicitly (bounded-variable simplex), so
upper bounds never become extra rows.  Pricing is Dantzig's rule with a
permanent switch to Bland's rule after a long run of degenerate pivots.
Everything is deterministic: identical inputs produce identical pivots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-7
BOUND_TOL = 1e-9
_PIVOT_TOL = 1e-9
_DEGENERATE_STEP = 1e-10
_BLAND_TRIGGER = 1000
_MAX_ITER = 200_000
_REFRESH_EVERY = 512


@dataclass
class LinearProgram:
    """Dense statement of a linear program.

    ``rel`` holds one of ``'<='``, ``'='``, ``'>='`` per row.  Bounds
    default to ``x >= 0`` when not given.
    """

    sense: str
    c: np.ndarray
    A: np.ndarray
    rel: list[str]
    b: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        if self.A.ndim != 2:
            if self.A.size == 0:
                self.A = self.A.reshape(0, self.c.size)
            else:
                self.A = self.A.reshape(1, -1)
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        self.rel = list(self.rel)
        n = self.c.size
        if self.lb is None:
            self.lb = np.zeros(n)
        if self.ub is None:
            self.ub = np.full(n, np.inf)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.validate()

    def validate(self) -> None:
        n = self.c.size
        m = self.b.size
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if self.A.shape != (m, n):
            raise ValueError(f"A has shape {self.A.shape}, expected ({m}, {n})")
        if len(self.rel) != m:
            raise ValueError("rel length does not match row count")
        for r in self.rel:
            if r not in ("<=", "=", ">="):
                raise ValueError(f"unknown relation {r!r}")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bound vectors must have one entry per variable")
        for arr in (self.c, self.A, self.b):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError("c, A and b must be finite (no NaN/inf)")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ValueError("bounds may be infinite but not NaN")
        if np.any(self.lb > self.ub + BOUND_TOL):
            raise ValueError("lb exceeds ub for some variable")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    def dump(self) -> str:
        """Plain-text rendering (LP-file style) for external cross-checks."""
        lines = ["Minimize" if self.sense == "min" else "Maximize"]
        obj = " + ".join(f"{self.c[j]:.12g} x{j}" for j in range(self.n_vars))
        lines.append(f" obj: {obj}")
        lines.append("Subject To")
        for i in range(self.n_rows):
            terms = " + ".join(
                f"{self.A[i, j]:.12g} x{j}"
                for j in range(self.n_vars)
                if self.A[i, j] != 0.0
            )
            lines.append(f" r{i}: {terms or '0 x0'} {self.rel[i]} {self.b[i]:.12g}")
        lines.append("Bounds")
        for j in range(self.n_vars):
            lines.append(f" {self.lb[j]:.12g} <= x{j} <= {self.ub[j]:.12g}")
        lines.append("End")
        return "\n".join(lines)


@dataclass
class LPOutcome:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    ray: np.ndarray | None = None


@dataclass
class _StandardForm:
    """min csᵀ xs, As xs = bs, 0 <= xs <= us, plus the map back to x."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    u: np.ndarray
    basis_col_of_row: np.ndarray  # ready-made basic column per row, -1 if none
    # per original variable: ("shift", lb, col) | ("mirror", ub, col) | ("free", colp, colm)
    var_map: list[tuple] = field(default_factory=list)


def _to_standard_form(lp: LinearProgram) -> _StandardForm:
    n = lp.n_vars
    m = lp.n_rows
    cols: list[np.ndarray] = []
    c_std: list[float] = []
    u_std: list[float] = []
    var_map: list[tuple] = []
    b = lp.b.copy()
    c = lp.c if lp.sense == "min" else -lp.c

    for j in range(n):
        lo, hi = lp.lb[j], lp.ub[j]
        col = lp.A[:, j] if m else np.zeros(0)
        if np.isfinite(lo):
            # x = lo + x', 0 <= x' <= hi - lo
            b -= col * lo
            cols.append(col)
            c_std.append(c[j])
            u_std.append(hi - lo)
            var_map.append(("shift", lo, len(cols) - 1))
        elif np.isfinite(hi):
            # x = hi - x', x' >= 0
            b -= col * hi
            cols.append(-col)
            c_std.append(-c[j])
            u_std.append(np.inf)
            var_map.append(("mirror", hi, len(cols) - 1))
        else:
            cols.append(col)
            c_std.append(c[j])
            u_std.append(np.inf)
            cols.append(-col)
            c_std.append(-c[j])
            u_std.append(np.inf)
            var_map.append(("free", len(cols) - 2, len(cols) - 1))

    A_vars = np.column_stack(cols) if cols else np.zeros((m, 0))

    # one slack / surplus column per inequality row, assembled in one block
    ineq_rows = [i for i in range(m) if lp.rel[i] != "="]
    slack_block = np.zeros((m, len(ineq_rows)))
    slack_col_of_row = np.full(m, -1, dtype=int)
    slack_sign = np.zeros(m)
    n_var_cols = A_vars.shape[1]
    for k, i in enumerate(ineq_rows):
        sign = 1.0 if lp.rel[i] == "<=" else -1.0
        slack_block[i, k] = sign
        c_std.append(0.0)
        u_std.append(np.inf)
        slack_col_of_row[i] = n_var_cols + k
        slack_sign[i] = sign
    A = np.hstack([A_vars, slack_block]) if ineq_rows else A_vars

    # normalize rhs signs (flips slack signs too)
    neg = b < 0
    if np.any(neg):
        A[neg] *= -1.0
        b = np.where(neg, -b, b)
        slack_sign[neg] *= -1.0

    basis_col_of_row = np.where(slack_sign > 0, slack_col_of_row, -1)

    return _StandardForm(
        A=A,
        b=b,
        c=np.asarray(c_std),
        u=np.asarray(u_std),
        basis_col_of_row=basis_col_of_row,
        var_map=var_map,
    )


class _Simplex:
    """Bounded-variable primal simplex on an equality-form tableau."""

    def __init__(self, sf: _StandardForm):
        A, b, u = sf.A, sf.b, sf.u
        m, n = A.shape
        self.m = m
        art_rows = [i for i in range(m) if sf.basis_col_of_row[i] < 0]
        n_art = len(art_rows)
        art_block = np.zeros((m, n_art))
        for k, i in enumerate(art_rows):
            art_block[i, k] = 1.0
        self.A0 = np.hstack([A, art_block]) if n_art else A.copy()
        self.b0 = b.copy()
        # the rhs rides along as the tableau's last column so every pivot
        # updates basic values in the same vectorized pass
        self.T = np.hstack([self.A0, b.reshape(-1, 1)])
        self.xB = self.T[:, -1]
        self.u = np.concatenate([u, np.full(n_art, np.inf)])
        self.n_real = n
        self.n_total = n + n_art
        self.art_cols = np.arange(n, self.n_total)
        self.at_upper = np.zeros(self.n_total, dtype=bool)
        self.basis = np.empty(m, dtype=int)
        self.is_basic = np.zeros(self.n_total, dtype=bool)
        for k, i in enumerate(art_rows):
            self.basis[i] = n + k
        for i in range(m):
            if sf.basis_col_of_row[i] >= 0:
                self.basis[i] = sf.basis_col_of_row[i]
        self.is_basic[self.basis] = True
        self.degenerate_run = 0
        self.bland = False
        self.iterations = 0
        self._scratch = np.empty_like(self.T)

    def _reduced_costs(self, c: np.ndarray) -> np.ndarray:
        cred = c - self.T[:, : self.n_total].T @ c[self.basis]
        cred[self.basis] = 0.0
        return cred

    def run(self, c: np.ndarray, allow: np.ndarray) -> str:
        """Pivot to optimality of min cᵀx; returns 'optimal' or 'unbounded'."""
        cred = self._reduced_costs(c)
        movable = allow & (self.u > 0)
        while True:
            self.iterations += 1
            if self.iterations > _MAX_ITER:
                raise RuntimeError("simplex iteration limit exceeded")
            eligible = ~self.is_basic & movable
            enter_low = eligible & ~self.at_upper & (cred < -_PIVOT_TOL)
            enter_up = eligible & self.at_upper & (cred > _PIVOT_TOL)
            cand = np.where(enter_low | enter_up)[0]
            if cand.size == 0:
                return OPTIMAL
            if self.bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(cred[cand]))])
            direction = -1.0 if self.at_upper[j] else 1.0
            d = self.T[:, j] * direction
            # ratio test: basic variables stay inside [0, u_basis];
            # the entering variable may also stop at its own far bound.
            limit = np.inf
            leave_row = -1
            leave_to_upper = False
            pos = d > _PIVOT_TOL
            if np.any(pos):
                rows = np.where(pos)[0]
                ratios = self.xB[rows] / d[rows]
                best = float(np.min(ratios))
                ties = rows[ratios <= best + 1e-12]
                r = ties[np.argmin(self.basis[ties])]
                limit, leave_row, leave_to_upper = best, int(r), False
            u_bas = self.u[self.basis]
            neg = (d < -_PIVOT_TOL) & np.isfinite(u_bas)
            if np.any(neg):
                rows = np.where(neg)[0]
                ratios = (u_bas[rows] - self.xB[rows]) / (-d[rows])
                best = float(np.min(ratios))
                if best < limit - 1e-12:
                    ties = rows[ratios <= best + 1e-12]
                    r = ties[np.argmin(self.basis[ties])]
                    limit, leave_row, leave_to_upper = best, int(r), True
            own = self.u[j]
            if np.isfinite(own) and own < limit - 1e-12:
                # bound flip: entering variable crosses its whole range
                self.xB -= self.T[:, j] * (own * direction)
                self.at_upper[j] = not self.at_upper[j]
                self.degenerate_run = 0
                continue
            if leave_row < 0:
                self._ray_col = j
                self._ray_dir = direction
                return UNBOUNDED
            if max(limit, 0.0) <= _DEGENERATE_STEP:
                self.degenerate_run += 1
                if self.degenerate_run >= _BLAND_TRIGGER:
                    self.bland = True
            else:
                self.degenerate_run = 0
            self._pivot(leave_row, j, leave_to_upper)
            if self.iterations % _REFRESH_EVERY == 0:
                cred = self._reduced_costs(c)  # guard against drift
            else:
                cred = cred - cred[j] * self.T[leave_row, : self.n_total]
                cred[self.basis[leave_row]] = 0.0

    def _pivot(self, r: int, j: int, leave_to_upper: bool) -> None:
        out = self.basis[r]
        if self.at_upper[j]:
            # re-express the entering variable relative to its lower bound
            self.xB += self.T[:, j] * self.u[j]
            self.at_upper[j] = False
        piv = self.T[r, j]
        self.T[r] /= piv
        factors = self.T[:, j].copy()
        factors[r] = 0.0
        # rank-1 elimination through a reused scratch buffer (no fresh
        # allocation per pivot); the rhs column is swept along
        scratch = self._scratch
        np.multiply(factors[:, None], self.T[r][None, :], out=scratch)
        self.T -= scratch
        self.T[:, j] = 0.0
        self.T[r, j] = 1.0
        self.basis[r] = j
        self.is_basic[j] = True
        self.is_basic[out] = False
        if leave_to_upper:
            self.at_upper[out] = True
            self.xB -= self.T[:, out] * self.u[out]

    def polish(self) -> None:
        """Re-solve the basic system exactly to shed accumulated drift."""
        if self.m == 0:
            return
        up = np.where(self.at_upper & ~self.is_basic)[0]
        rhs = self.b0 - (self.A0[:, up] @ self.u[up] if up.size else 0.0)
        B = self.A0[:, self.basis]
        try:
            self.xB[:] = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError:  # pragma: no cover - singular basis
            pass

    def solution(self) -> np.ndarray:
        x = np.where(self.at_upper[: self.n_real], self.u[: self.n_real], 0.0)
        for i in range(self.m):
            if self.basis[i] < self.n_real:
                x[self.basis[i]] = self.xB[i]
        return x

    def ray(self) -> np.ndarray:
        """Improving ray in standard-form space after an UNBOUNDED verdict."""
        ray = np.zeros(self.n_real)
        j, direction = self._ray_col, self._ray_dir
        if j < self.n_real:
            ray[j] = direction
        d = self.T[:, j] * direction
        for i in range(self.m):
            if self.basis[i] < self.n_real:
                ray[self.basis[i]] = -d[i]
        return ray


def _recover(x_std: np.ndarray, sf: _StandardForm, n: int, linear: bool = False) -> np.ndarray:
    x = np.zeros(n)
    for j, entry in enumerate(sf.var_map):
        if entry[0] == "shift":
            _, lo, col = entry
            x[j] = (0.0 if linear else lo) + x_std[col]
        elif entry[0] == "mirror":
            _, hi, col = entry
            x[j] = (0.0 if linear else hi) - x_std[col]
        else:
            _, cp, cm = entry
            x[j] = x_std[cp] - x_std[cm]
    return x


def _audit(lp: LinearProgram, x: np.ndarray) -> None:
    if lp.n_rows:
        resid = lp.A @ x - lp.b
        for i in range(lp.n_rows):
            if lp.rel[i] == "<=" and resid[i] > FEAS_TOL:
                raise RuntimeError(f"solver audit: row {i} violated by {resid[i]:.3e}")
            if lp.rel[i] == ">=" and resid[i] < -FEAS_TOL:
                raise RuntimeError(f"solver audit: row {i} violated by {-resid[i]:.3e}")
            if lp.rel[i] == "=" and abs(resid[i]) > FEAS_TOL:
                raise RuntimeError(f"solver audit: row {i} off by {resid[i]:.3e}")
    lo_ok = np.where(np.isfinite(lp.lb), x >= lp.lb - BOUND_TOL, True)
    hi_ok = np.where(np.isfinite(lp.ub), x <= lp.ub + BOUND_TOL, True)
    if not (np.all(lo_ok) and np.all(hi_ok)):
        raise RuntimeError("solver audit: variable bound violated")


def solve_lp(lp: LinearProgram) -> LPOutcome:
    """Solve a linear program with the reference two-phase simplex.

    Returns
    -------
    LPOutcome
        ``status`` is ``'optimal'`` (with ``x`` and ``objective``),
        ``'infeasible'``, or ``'unbounded'`` (with an improving ``ray``).
    """
    lp.validate()
    sf = _to_standard_form(lp)
    sim = _Simplex(sf)

    # phase 1: minimize the total artificial infeasibility
    if sim.art_cols.size:
        c1 = np.zeros(sim.n_total)
        c1[sim.art_cols] = 1.0
        status = sim.run(c1, np.ones(sim.n_total, dtype=bool))
        if status != OPTIMAL:  # pragma: no cover - phase 1 is always bounded
            raise RuntimeError("phase 1 reported unbounded")
        infeas = float(c1[sim.basis] @ sim.xB)
        if infeas > FEAS_TOL:
            return LPOutcome(status=INFEASIBLE)
        sim.u[sim.art_cols] = 0.0

    # phase 2: the real objective; artificials may not re-enter
    c2 = np.zeros(sim.n_total)
    c2[: sf.c.size] = sf.c
    allow = np.ones(sim.n_total, dtype=bool)
    allow[sim.art_cols] = False
    status = sim.run(c2, allow)
    if status == UNBOUNDED:
        ray_std = sim.ray()[: sf.c.size]
        ray = _recover(ray_std, sf, lp.n_vars, linear=True)
        return LPOutcome(status=UNBOUNDED, ray=ray)

    sim.polish()
    x_std = sim.solution()[: sf.c.size]
    x = _recover(x_std, sf, lp.n_vars)
    _audit(lp, x)
    obj = float(lp.c @ x)
    return LPOutcome(status=OPTIMAL, x=x, objective=obj)
