"""Variable-step, variable-order Adams-Bashforth-Moulton PECE integrator.

One step does predict / evaluate / correct / evaluate: an explicit Adams
predictor extrapolates the interpolating polynomial of the stored
derivative history, the derivative is evaluated at the prediction, one
implicit Adams correction is applied through an extra Newton term, and the
derivative at the corrected value refreshes the history.  All formulas are
generated on the fly from divided differences over the (generally
nonuniform) history times, so step size and order can change freely; the
corrector polynomial doubles as dense output for event location.

Orders run from 1 to 13 (corrector node count).  The error estimate is the
scaled predictor-corrector gap; the accepted value is the corrector, one
order above the estimate (local extrapolation).  A fixed-step, fixed-order
mode is available for convergence studies; it self-starts on a ramp of
shrinking low-order steps sized so the startup error stays below the
asymptotic one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = ["AdamsOptions", "Event", "EventRecord", "StepUnderflow", "AdamsResult", "adams_integrate"]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)  # exact to degree 15


class StepUnderflow(RuntimeError):
    """Step size shrank below the resolution of the time variable."""


@dataclass
class AdamsOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_order: int = 12
    max_steps: int = 2_000_000
    h_max: float = np.inf
    first_step: Optional[float] = None
    fixed_step: Optional[float] = None
    fixed_order: Optional[int] = None
    blowup_limit: Optional[float] = None
    post_accept: Optional[Callable[[float, "np.ndarray"], "np.ndarray"]] = None

    def __post_init__(self):
        if not (1 <= self.max_order <= 13):
            raise ValueError("max_order must lie in 1..13")
        if self.fixed_order is not None and not (1 <= self.fixed_order <= 13):
            raise ValueError("fixed_order must lie in 1..13")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class Event:
    """Scalar event g(t, y); a sign change of g inside a step is located on
    dense output.  direction +1 detects -..+ crossings, -1 the reverse,
    0 both.  Terminal events stop the integration at the crossing."""

    name: str
    fn: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: bool = False


@dataclass
class EventRecord:
    name: str
    t: float
    y: np.ndarray


@dataclass
class AdamsResult:
    t: np.ndarray
    y: np.ndarray
    events: list[EventRecord]
    n_accepted: int
    n_rejected: int
    n_fevals: int
    orders: np.ndarray
    steps: np.ndarray
    status: str  # "finished" | "terminal_event" | "blowup"


def _divided_differences(times: Sequence[float], values: Sequence[np.ndarray]):
    """Newton coefficients c_j = f[tau_0 .. tau_j] for the given node order."""
    n = len(times)
    table = [np.array(v, dtype=float) for v in values]
    coeffs = [table[0]]
    for level in range(1, n):
        for i in range(n - level):
            table[i] = (table[i + 1] - table[i]) / (times[i + level] - times[i])
        coeffs.append(table[0])
    return coeffs


def _basis_integrals(deltas: Sequence[float], h: float, upto: float = 1.0):
    """Integrals of the Newton basis over sigma in [0, upto], scaled by h.

    Basis j is prod_{i<j}(sigma + delta_i) with delta_i = (t_n - tau_i)/h;
    returns g_j = h^{j+1} * int_0^upto basis_j(sigma) d sigma for all j.
    """
    n = len(deltas) + 1
    out = np.empty(n)
    poly = np.zeros(n + 1)
    poly[0] = 1.0  # coefficients in sigma, ascending degree
    hp = h
    for j in range(n):
        acc = 0.0
        pw = upto
        for k in range(j + 1):
            acc += poly[k] * pw / (k + 1)
            pw *= upto
        out[j] = hp * acc
        if j < n - 1:
            d = deltas[j]
            newpoly = np.zeros(n + 1)
            newpoly[1 : j + 2] = poly[: j + 1]
            newpoly[: j + 1] += d * poly[: j + 1]
            poly = newpoly
            hp *= h
    return out


class _DenseStep:
    """Corrector polynomial of one accepted step, integrable on demand."""

    __slots__ = ("t0", "t1", "y0", "times", "coeffs")

    def __init__(self, t0, t1, y0, times, coeffs):
        self.t0, self.t1, self.y0 = t0, t1, y0
        self.times, self.coeffs = times, coeffs

    def _poly(self, s: float) -> np.ndarray:
        acc = np.zeros_like(self.y0)
        w = 1.0
        for tau, c in zip(self.times, self.coeffs):
            acc = acc + w * c
            w *= s - tau
        return acc

    def __call__(self, t: float) -> np.ndarray:
        half = 0.5 * (t - self.t0)
        mid = self.t0 + half
        acc = np.zeros_like(self.y0)
        for x, w in zip(_GL_NODES, _GL_WEIGHTS):
            acc = acc + w * self._poly(mid + half * x)
        return self.y0 + half * acc


def _locate_event(ev: Event, dense: _DenseStep, t_lo, g_lo, t_hi, g_hi, tol=1e-12):
    """Bisection + secant refinement of a bracketed sign change."""
    for _ in range(200):
        if t_hi - t_lo <= tol * max(1.0, abs(t_hi)):
            break
        # secant guess, guarded to the middle half of the bracket
        if g_hi != g_lo:
            t_mid = t_lo - g_lo * (t_hi - t_lo) / (g_hi - g_lo)
            lo_guard = t_lo + 0.25 * (t_hi - t_lo)
            hi_guard = t_hi - 0.25 * (t_hi - t_lo)
            t_mid = min(max(t_mid, lo_guard), hi_guard)
        else:
            t_mid = 0.5 * (t_lo + t_hi)
        g_mid = ev.fn(t_mid, dense(t_mid))
        if g_lo * g_mid <= 0.0:
            t_hi, g_hi = t_mid, g_mid
        else:
            t_lo, g_lo = t_mid, g_mid
    return t_hi, dense(t_hi)


def adams_integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: Sequence[float],
    opts: Optional[AdamsOptions] = None,
    events: Sequence[Event] = (),
) -> AdamsResult:
    """Integrate y' = f(t, y) from t_span[0] to t_span[1] (t increasing)."""
    opts = opts or AdamsOptions()
    t0, t_end = map(float, t_span)
    if t_end <= t0:
        raise ValueError("t_span must be increasing; wrap f for reverse time")
    y = np.asarray(y0, dtype=float).copy()
    t = t0
    fevals = 0

    def feval(tt, yy):
        nonlocal fevals
        fevals += 1
        return np.asarray(f(tt, yy), dtype=float)

    f0 = feval(t, y)
    hist_t = [t]
    hist_f = [f0]

    fixed = opts.fixed_step is not None
    if fixed:
        k_target = opts.fixed_order or min(opts.max_order, 12)
        h_nom = float(opts.fixed_step)
    else:
        k_target, h_nom = None, None

    scale0 = opts.abs_tol + opts.rel_tol * np.abs(y)
    if opts.first_step is not None:
        h = float(opts.first_step)
    elif fixed:
        h = min(h_nom, h_nom ** ((k_target + 1) / 3.0)) if h_nom < 1.0 else h_nom
    else:
        d0 = float(np.max(np.abs(y) / scale0))
        d1 = float(np.max(np.abs(f0) / scale0))
        h = 0.01 * max(d0, 1.0) / max(d1, 1e-8)
        h = min(opts.h_max, h, (t_end - t0) * 0.1)
        h = max(h, 1e-12 * max(1.0, abs(t0)))

    ts, ys, orders, steps = [t], [y.copy()], [0], [0.0]
    ev_vals = [ev.fn(t, y) for ev in events]
    event_log: list[EventRecord] = []
    n_acc = n_rej = 0
    consecutive_rej = 0
    status = "finished"
    m = 1  # past nodes used by the predictor

    while t < t_end:
        rem = t_end - t
        if rem <= 1e-12 * max(1.0, abs(t_end)):
            break
        if n_acc + n_rej > opts.max_steps:
            raise RuntimeError("max_steps exceeded")
        m = min(m, len(hist_t), opts.max_order - 1 if opts.max_order > 1 else 1)
        m = max(m, 1)
        if fixed:
            # ramp the startup sizes so low-order steps stay below the
            # asymptotic error of the target order
            if len(hist_t) < k_target - 1 and h_nom < 1.0:
                h = h_nom ** ((k_target + 1.0) / (m + 2.0))
            else:
                h = h_nom
            m = min(m, k_target - 1) if k_target > 1 else 1
        h = min(h, opts.h_max)
        if fixed and rem < 1.75 * h:
            h = rem  # absorb the leftover into one final step
        elif h > rem:
            h = rem
        if h <= 1e-14 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size underflow at t = {t}")

        past_t = hist_t[-m:][::-1]  # tau_0 = t_n, tau_1 = t_{n-1}, ...
        past_f = hist_f[-m:][::-1]
        # one older node, appended after the new one, supplies the
        # order-raising error estimate without disturbing the partial sums
        extra = len(hist_t) > m
        extra_t = hist_t[-m - 1] if extra else None
        t_new = t + h
        nodes_t = past_t + [t_new] + ([extra_t] if extra else [])
        g = _basis_integrals([(t - tau) / h for tau in nodes_t], h)[: m + 2]
        coeffs = _divided_differences(past_t, past_f)
        y_pred = y.copy()
        for j in range(m):
            y_pred = y_pred + g[j] * coeffs[j]
        f_pred = feval(t_new, y_pred)
        nodes_f = past_f + [f_pred] + ([hist_f[-m - 1]] if extra else [])
        coeffs_full = _divided_differences(nodes_t, nodes_f)
        y_corr = y_pred + g[m] * coeffs_full[m]

        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_corr))
        err = float(np.max(np.abs(y_corr - y_pred) / scale))

        if not fixed and err > 1.0:
            n_rej += 1
            consecutive_rej += 1
            h *= max(0.1, min(0.7, 0.9 * err ** (-1.0 / (m + 1))))
            if consecutive_rej >= 3 and m > 1:
                m -= 1
                consecutive_rej = 0
            continue
        consecutive_rej = 0

        # accept
        if opts.post_accept is not None:
            y_corr = np.asarray(opts.post_accept(t_new, y_corr), dtype=float)
        f_corr = feval(t_new, y_corr)
        dense_coeffs = _divided_differences(past_t + [t_new], past_f + [f_corr])
        dense = _DenseStep(t, t_new, y, past_t + [t_new], dense_coeffs)

        hist_t.append(t_new)
        hist_f.append(f_corr)
        keep = opts.max_order + 1
        if len(hist_t) > keep:
            hist_t = hist_t[-keep:]
            hist_f = hist_f[-keep:]

        t_stop, y_stop, stop = t_new, y_corr, False
        for idx, ev in enumerate(events):
            g_new = ev.fn(t_new, y_corr)
            g_old = ev_vals[idx]
            crossed = (g_old < 0.0 <= g_new and ev.direction >= 0) or (
                g_old > 0.0 >= g_new and ev.direction <= 0
            )
            if crossed:
                t_e, y_e = _locate_event(ev, dense, t, g_old, t_new, g_new)
                event_log.append(EventRecord(ev.name, t_e, y_e))
                if ev.terminal and t_e < t_stop:
                    t_stop, y_stop, stop = t_e, y_e, True
            ev_vals[idx] = g_new
        if stop:
            status = "terminal_event"
            ts.append(t_stop)
            ys.append(y_stop)
            orders.append(m + 1)
            steps.append(t_stop - t)
            n_acc += 1
            break

        t, y = t_new, y_corr
        ts.append(t)
        ys.append(y.copy())
        orders.append(m + 1)
        steps.append(h)
        n_acc += 1

        if opts.blowup_limit is not None and float(np.max(np.abs(y))) > opts.blowup_limit:
            status = "blowup"
            break

        if not fixed:
            # step-size controller with modest growth
            factor = 0.9 * (err + 1e-16) ** (-1.0 / (m + 1))
            h = h * min(2.0, max(0.5, factor))
            # order selection on the decay of the Newton correction terms,
            # with hysteresis so the order stays quasi-constant
            e_low = float(np.max(np.abs(g[m - 1] * coeffs[m - 1]) / scale)) if m >= 1 else np.inf
            e_cur = err
            e_high = (
                float(np.max(np.abs(g[m + 1] * coeffs_full[m + 1]) / scale))
                if len(coeffs_full) > m + 1
                else np.inf
            )
            if m > 1 and e_low < 2.0 * e_cur:
                m -= 1
            elif m + 1 < opts.max_order and e_high < 0.5 * e_cur and e_cur < 0.5 * e_low:
                m += 1
        else:
            m = min(m + 1, (k_target - 1) if k_target > 1 else 1, len(hist_t) - 0)

    return AdamsResult(
        t=np.array(ts),
        y=np.array(ys),
        events=event_log,
        n_accepted=n_acc,
        n_rejected=n_rej,
        n_fevals=fevals,
        orders=np.array(orders),
        steps=np.array(steps),
        status=status,
    )
