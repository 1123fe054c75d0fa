"""Numerical experiments: AKS flows on polynomial loop matrices, and sinh-Gordon checks.

A state is a twisted loop matrix supported in degrees ``1..D``.  That subspace is
invariant under every flow ``dY/dt = -[(lambda^(-2m-2) Y / 2i)_{<=-1}, Y]`` when
``D >= 2m+2`` (the bracket lands in degrees ``1..D-1``), so no truncation error
enters and every coefficient of ``det Y`` is a conserved quantity.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np

from .hierarchy import _split_leak, _u_from_Y
from .killing import KillingTower, assemble_Y, build
from .loopalg import NUMERIC, LoopMatrix, WindowError, bracket, det_series, hamiltonian

__all__ = [
    "NumericLoopState",
    "FlowLog",
    "random_state",
    "tower_state",
    "integrate_flow",
    "convergence_study",
    "commute_test",
    "sinh_gordon_residual",
    "vacuum_profile",
    "ode_profile",
]


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class NumericLoopState:
    Y: LoopMatrix
    D: int
    m: int = 0
    t: float = 0.0
    dt: float = 0.0

    def copy_with(self, Y: LoopMatrix, t: float) -> "NumericLoopState":
        return NumericLoopState(Y, self.D, self.m, t, self.dt)

    def as_array(self) -> np.ndarray:
        """``(D, 3)`` array of the triples ``(x, y, z)`` for degrees ``1..D``."""
        out = np.zeros((self.D, 3), dtype=complex)
        for d, m in self.Y.coeffs.items():
            if 1 <= d <= self.D:
                out[d - 1] = m
        return out


def _state_from_array(arr: np.ndarray, check: bool = True) -> LoopMatrix:
    coeffs = {d + 1: tuple(complex(v) for v in arr[d]) for d in range(arr.shape[0])}
    return LoopMatrix(coeffs, None, None, twisted=True, ring=NUMERIC, check=check)


def random_state(D: int, seed: int, scale: float = 1.0) -> NumericLoopState:
    """i.i.d. complex Gaussian coefficients, parity-projected (traceless by construction)."""
    if D < 1:
        raise ValueError("degree must be positive")
    rng = np.random.default_rng(seed)
    raw = (rng.standard_normal((D, 3)) + 1j * rng.standard_normal((D, 3))) * (scale / math.sqrt(2))
    for d in range(1, D + 1):
        if d % 2:
            raw[d - 1, 0] = 0
        else:
            raw[d - 1, 1:] = 0
    return NumericLoopState(_state_from_array(raw), D)


def tower_state(D: int, z: Mapping[int, complex], gamma: float = 1.0, h2_half: complex = 1.0,
                tower: Optional[KillingTower] = None) -> NumericLoopState:
    """Canonical ``Y`` evaluated at balanced coordinates and truncated to degrees ``1..D``."""
    N = max(0, (D - 1) // 2)
    t = tower if tower is not None else build(N)
    Y = assemble_Y(t)
    if Y.hi < D:
        raise WindowError(f"tower of order {t.order} does not reach degree {D}")
    coeffs = {}
    for d in range(1, D + 1):
        coeffs[d] = tuple(v.evaluate_balanced(gamma, z, h2_half=h2_half) for v in Y[d])
    return NumericLoopState(LoopMatrix(coeffs, None, None, twisted=True, ring=NUMERIC), D)


# ---------------------------------------------------------------------------
# flows

def _rhs(Y: LoopMatrix, m: int):
    A, _ = _u_from_Y(Y, m)
    R = -bracket(A, Y)
    kept, leak = _split_leak(R, 1)
    leak_norm = max((abs(v) for mm in leak.values() for v in mm), default=0.0)
    return LoopMatrix(kept, None, None, twisted=True, ring=NUMERIC, check=False), leak_norm


def _rk4_step(Y: LoopMatrix, m: int, dt: float):
    k1, l1 = _rhs(Y, m)
    k2, l2 = _rhs(Y + k1.scale(dt / 2), m)
    k3, l3 = _rhs(Y + k2.scale(dt / 2), m)
    k4, l4 = _rhs(Y + k3.scale(dt), m)
    inc = (k1 + k2.scale(2) + k3.scale(2) + k4).scale(dt / 6)
    return Y + inc, max(l1, l2, l3, l4)


def _parity_violation(Y: LoopMatrix) -> float:
    worst = 0.0
    for d, (x, y, z) in Y.coeffs.items():
        vals = (y, z) if d % 2 == 0 else (x,)
        worst = max(worst, *(abs(v) for v in vals))
    return worst


def _norm(Y: LoopMatrix) -> float:
    return max((abs(v) for mm in Y.coeffs.values() for v in mm), default=0.0)


@dataclass
class FlowLog:
    """Per-step invariants of a trajectory."""

    m: int
    D: int
    dt: float
    steps: int
    det_degrees: List[int]
    ham_indices: List[int]
    times: List[float] = field(default_factory=list)
    det: List[List[complex]] = field(default_factory=list)
    ham: List[List[complex]] = field(default_factory=list)
    parity: List[float] = field(default_factory=list)
    leakage: List[float] = field(default_factory=list)
    params: Dict[str, object] = field(default_factory=dict)
    final: Optional[NumericLoopState] = None

    @staticmethod
    def _scales(base: List[complex]) -> List[float]:
        # coefficients that vanish initially are measured against the largest one
        ref = max((abs(v) for v in base), default=0.0) or 1.0
        return [abs(v) if abs(v) > 1e-8 * ref else ref for v in base]

    def _drifts(self, rows: List[List[complex]]) -> List[float]:
        base = rows[0]
        scales = self._scales(base)
        return [max(abs(r[k] - v0) for r in rows) / scales[k] for k, v0 in enumerate(base)]

    def det_drifts(self) -> Dict[int, float]:
        return dict(zip(self.det_degrees, self._drifts(self.det)))

    def ham_drifts(self) -> Dict[int, float]:
        return dict(zip(self.ham_indices, self._drifts(self.ham)))

    def summary(self) -> dict:
        det = self.det_drifts()
        ham = self.ham_drifts()
        return {
            "params": dict(sorted(self.params.items())),
            "max_det_drift": max(det.values()),
            "max_ham_drift": max(ham.values()) if ham else 0.0,
            "det_drift": {str(k): v for k, v in det.items()},
            "ham_drift": {str(k): v for k, v in ham.items()},
            "max_parity_violation": max(self.parity),
            "max_subdegree_leakage": max(self.leakage),
            "relative_subdegree_leakage": max(self.leakage) / max(_norm(self.final.Y), 1e-300)
            if self.final else None,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for k, v in sorted(self.params.items()):
            buf.write(f"# {k}={v}\n")
        head = ["step", "time"]
        head += [f"det{d}_re" for d in self.det_degrees] + [f"det{d}_im" for d in self.det_degrees]
        head += [f"H{k}_re" for k in self.ham_indices] + [f"H{k}_im" for k in self.ham_indices]
        head += ["max_det_drift", "parity", "leakage"]
        w.writerow(head)
        base = self.det[0]
        scales = self._scales(base)
        for i, t in enumerate(self.times):
            drift = max((abs(a - b) / c for a, b, c in zip(self.det[i], base, scales)), default=0.0)
            row = [i, repr(t)]
            row += [repr(v.real) for v in self.det[i]] + [repr(v.imag) for v in self.det[i]]
            row += [repr(v.real) for v in self.ham[i]] + [repr(v.imag) for v in self.ham[i]]
            row += [repr(drift), repr(self.parity[i]), repr(self.leakage[i])]
            w.writerow(row)
        return buf.getvalue()


def _invariants(Y: LoopMatrix, det_degrees, ham_indices):
    s = det_series(Y)
    det = [complex(s[d]) for d in det_degrees]
    ham = [complex(hamiltonian(Y, k)) for k in ham_indices]
    return det, ham


def integrate_flow(Y0: NumericLoopState, m: int, dt: float, steps: int, method: str = "RK4",
                   log_every: int = 1) -> FlowLog:
    """Fixed-step RK4 along the ``t_m`` flow with per-step invariant logging."""
    if method.upper() != "RK4":
        raise ValueError(f"unsupported method {method!r}")
    if dt <= 0 or steps < 0:
        raise ValueError("dt must be positive and steps nonnegative")
    if m < 0:
        raise ValueError("flow index must be nonnegative")
    D = Y0.D
    if D < 2 * m + 2:
        raise WindowError(f"degree {D} too small for flow {m} (needs >= {2 * m + 2})")
    if not Y0.Y.twisted or Y0.Y.parity_violations():
        raise ValueError("initial data must be twisted")
    if any(d < 1 or d > D for d in Y0.Y.coeffs):
        raise ValueError(f"initial data must be supported in degrees 1..{D}")
    det_degrees = list(range(2, 2 * D + 1))
    ham_indices = list(range(0, (D - 2) // 2 + 1))
    log = FlowLog(m, D, dt, steps, det_degrees, ham_indices,
                  params={"m": m, "D": D, "dt": dt, "steps": steps, "method": "RK4"})
    Y, t = Y0.Y, Y0.t
    leak = 0.0

    def record():
        det, ham = _invariants(Y, det_degrees, ham_indices)
        if not all(np.isfinite([v.real for v in det] + [v.imag for v in det])):
            raise NonFiniteError(f"nonfinite invariants at t={t}")
        log.times.append(t)
        log.det.append(det)
        log.ham.append(ham)
        log.parity.append(_parity_violation(Y))
        log.leakage.append(leak)

    record()
    for i in range(steps):
        Y, leak = _rk4_step(Y, m, dt)
        t = Y0.t + (i + 1) * dt
        if not math.isfinite(_norm(Y)):
            raise NonFiniteError(f"state blew up at step {i + 1}")
        if (i + 1) % log_every == 0 or i + 1 == steps:
            record()
    log.final = Y0.copy_with(Y, t)
    return log


def _advance(state: NumericLoopState, m: int, T: float, dt: float) -> NumericLoopState:
    steps = int(round(T / dt))
    if steps == 0:
        return state
    if abs(steps * dt - T) > 1e-12 * max(1.0, T):
        raise ValueError(f"time {T} is not a multiple of dt={dt}")
    if state.D < 2 * m + 2:
        raise WindowError(f"degree {state.D} too small for flow {m}")
    Y = state.Y
    for _ in range(steps):
        Y, _leak = _rk4_step(Y, m, dt)
    return state.copy_with(Y, state.t + T)


def commute_test(Y0: NumericLoopState, m: int, l: int, s: float, t: float, dt: float = 1e-3) -> float:
    """Max coefficient discrepancy between (t_m for s, then t_l for t) and the reverse order."""
    A = _advance(_advance(Y0, m, s, dt), l, t, dt).as_array()
    B = _advance(_advance(Y0, l, t, dt), m, s, dt).as_array()
    return float(np.max(np.abs(A - B)))


def convergence_study(Y0: NumericLoopState, m: int, T: float, dts) -> List[dict]:
    """Max relative det drift at time ``T`` for each step size."""
    out = []
    for dt in dts:
        steps = int(round(T / dt))
        log = integrate_flow(Y0, m, dt, steps, log_every=steps)
        out.append({"dt": dt, "steps": steps, "max_det_drift": max(log.det_drifts().values())})
    return out


# ---------------------------------------------------------------------------
# sinh-Gordon

def _check_gamma(gamma: float):
    if not (isinstance(gamma, (int, float)) and math.isfinite(gamma) and gamma > 0):
        raise ValueError("gamma must be a positive real number")


def _nonlinearity(u: np.ndarray, gamma: float) -> np.ndarray:
    L = math.log(gamma * gamma)
    with np.errstate(over="raise", invalid="raise"):
        try:
            return np.exp(2 * u + L) - np.exp(-2 * u)
        except FloatingPointError as exc:
            raise NonFiniteError(str(exc)) from None


def vacuum_profile(gamma: float, shape=(16, 16)) -> np.ndarray:
    """Constant solution ``u = -(1/4) ln gamma^2``."""
    _check_gamma(gamma)
    return np.full(shape, -0.25 * math.log(gamma * gamma))


def sinh_gordon_residual(u: np.ndarray, gamma: float, hx: float = 1.0, hy: float = 1.0) -> np.ndarray:
    """``u_{z zbar} + (gamma^2 e^{2u} - e^{-2u}) / 4`` on interior grid points.

    ``u_{z zbar} = (u_xx + u_yy) / 4`` with the centred second-order stencil.
    """
    _check_gamma(gamma)
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or min(u.shape) < 3:
        raise ValueError("need a 2-D grid with at least 3 points per axis")
    uxx = (u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / (hx * hx)
    uyy = (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / (hy * hy)
    res = 0.25 * (uxx + uyy) + 0.25 * _nonlinearity(u[1:-1, 1:-1], gamma)
    if not np.all(np.isfinite(res)):
        raise NonFiniteError("nonfinite residual")
    return res


@dataclass
class OdeLog:
    gamma: float
    dt: float
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    energy: np.ndarray

    def max_relative_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])) / abs(self.energy[0]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# gamma={self.gamma}\n# dt={self.dt}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "time", "u", "u_x", "E", "rel_drift"])
        E0 = self.energy[0]
        for i in range(len(self.times)):
            w.writerow([i, repr(float(self.times[i])), repr(float(self.u[i])), repr(float(self.v[i])),
                        repr(float(self.energy[i])), repr(float(abs(self.energy[i] - E0) / abs(E0)))])
        return buf.getvalue()


def first_integral(u, v, gamma: float):
    """``E = v^2/2 + (gamma^2 e^{2u} + e^{-2u}) / 2``, conserved by ``u'' = -(gamma^2 e^{2u} - e^{-2u})``."""
    return 0.5 * v * v + 0.5 * (gamma * gamma * np.exp(2 * u) + np.exp(-2 * u))


def ode_profile(gamma: float, u0: float, v0: float, T: float, dt: float, log_every: int = 1) -> OdeLog:
    """RK4 for the x-only reduction ``u_xx = -(gamma^2 e^{2u} - e^{-2u})``."""
    _check_gamma(gamma)
    if dt <= 0 or T < 0:
        raise ValueError("dt must be positive and T nonnegative")
    g2 = gamma * gamma
    steps = int(round(T / dt))

    def f(u, v):
        return v, -(g2 * math.exp(2 * u) - math.exp(-2 * u))

    ts, us, vs = [0.0], [u0], [v0]
    u, v = float(u0), float(v0)
    for i in range(steps):
        k1u, k1v = f(u, v)
        k2u, k2v = f(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v)
        k3u, k3v = f(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v)
        k4u, k4v = f(u + dt * k3u, v + dt * k3v)
        u += dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (math.isfinite(u) and math.isfinite(v)):
            raise NonFiniteError(f"ODE blew up at step {i + 1}")
        if (i + 1) % log_every == 0 or i + 1 == steps:
            ts.append((i + 1) * dt)
            us.append(u)
            vs.append(v)
    ts, us, vs = np.array(ts), np.array(us), np.array(vs)
    return OdeLog(gamma, dt, ts, us, vs, first_integral(us, vs, gamma))
