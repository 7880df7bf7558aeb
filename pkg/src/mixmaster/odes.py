"""Constrained ODE systems, seeding, integration and shadowing analysis.

Two first-order systems are provided with analytic Jacobians and constraint
monitors: the five-variable class-A system (N1, N2, N3, Sigma+, Sigma-) and
the six-variable class-B system (Sigma+, Sigma-, Sigma_x, Sigma_2, N_-, A).
Both are written in forward time; runs toward the singularity integrate the
negated field over an increasing internal time variable.

Shadowing works on close approaches to the Kasner circle: whenever all
transition variables drop below a threshold the nearest circle point is
identified through the exponent formulas, giving the visited sector and a
measured Kasner parameter to compare against a prescribed chain.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import adams
from .adams import AdamsOptions, Event
from .chains import HeteroclinicChain
from .kasner import BasePoint, Sector, Var, base_point, kasner_map
from .surd import QuadraticSurd

__all__ = [
    "VARS_A",
    "VARS_B",
    "IntegratorConfig",
    "Trajectory",
    "Visit",
    "ShadowReport",
    "rhs_bianchi_a",
    "jac_bianchi_a",
    "rhs_bianchi_b",
    "jac_bianchi_b",
    "omega_residual_a",
    "residuals_b",
    "integrate",
    "integrate_a",
    "integrate_b",
    "find_visits",
    "kasner_state_a",
    "kasner_state_b",
    "seed_near_chain",
    "project_constraints_b",
    "heteroclinic_endpoint_check",
    "shadow_analysis",
    "measure_u",
]

SQRT3 = math.sqrt(3.0)

VARS_A = ("N1", "N2", "N3", "Sigma_plus", "Sigma_minus")
VARS_B = ("Sigma_plus", "Sigma_minus", "Sigma_cross", "Sigma_two", "N_minus", "A")

_B_INDEX = {Var.SIGMA_CROSS: 2, Var.SIGMA2: 3, Var.N_MINUS: 4}


# -- right-hand sides ------------------------------------------------------


def rhs_bianchi_a(y, gamma: float = 1.0) -> np.ndarray:
    """Forward-time field of the class-A system (vacuum term through the
    constraint-derived density)."""
    n1, n2, n3, sp, sm = y
    k = 0.75 * (n1 * n1 + n2 * n2 + n3 * n3 - 2.0 * (n1 * n2 + n2 * n3 + n3 * n1))
    omega = 1.0 - sp * sp - sm * sm - k
    q = 2.0 * (sp * sp + sm * sm) + 0.5 * (3.0 * gamma - 2.0) * omega
    s_plus = 0.5 * ((n2 - n3) ** 2 - n1 * (2.0 * n1 - n2 - n3))
    s_minus = 0.5 * SQRT3 * (n3 - n2) * (n1 - n2 - n3)
    return np.array(
        [
            (q - 4.0 * sp) * n1,
            (q + 2.0 * sp + 2.0 * SQRT3 * sm) * n2,
            (q + 2.0 * sp - 2.0 * SQRT3 * sm) * n3,
            (q - 2.0) * sp - 3.0 * s_plus,
            (q - 2.0) * sm - 3.0 * s_minus,
        ]
    )


def jac_bianchi_a(y, gamma: float = 1.0) -> np.ndarray:
    n1, n2, n3, sp, sm = y
    w = 0.5 * (3.0 * gamma - 2.0)
    k = 0.75 * (n1 * n1 + n2 * n2 + n3 * n3 - 2.0 * (n1 * n2 + n2 * n3 + n3 * n1))
    omega = 1.0 - sp * sp - sm * sm - k
    q = 2.0 * (sp * sp + sm * sm) + w * omega
    dk = np.array(
        [1.5 * (n1 - n2 - n3), 1.5 * (n2 - n1 - n3), 1.5 * (n3 - n1 - n2), 0.0, 0.0]
    )
    dq = -w * dk
    dq[3] += (4.0 - 2.0 * w) * sp
    dq[4] += (4.0 - 2.0 * w) * sm
    dsp_ = np.array(
        [-0.5 * (4.0 * n1 - n2 - n3), n2 - n3 + 0.5 * n1, -(n2 - n3) + 0.5 * n1, 0.0, 0.0]
    )
    dsm_ = np.array(
        [
            0.5 * SQRT3 * (n3 - n2),
            0.5 * SQRT3 * (2.0 * n2 - n1),
            0.5 * SQRT3 * (n1 - 2.0 * n3),
            0.0,
            0.0,
        ]
    )
    jac = np.zeros((5, 5))
    coeffs = (
        q - 4.0 * sp,
        q + 2.0 * sp + 2.0 * SQRT3 * sm,
        q + 2.0 * sp - 2.0 * SQRT3 * sm,
    )
    nvals = (n1, n2, n3)
    dcoef = (
        np.array([0.0, 0.0, 0.0, -4.0, 0.0]),
        np.array([0.0, 0.0, 0.0, 2.0, 2.0 * SQRT3]),
        np.array([0.0, 0.0, 0.0, 2.0, -2.0 * SQRT3]),
    )
    for i in range(3):
        jac[i] = (dq + dcoef[i]) * nvals[i]
        jac[i, i] += coeffs[i]
    jac[3] = dq * sp - 3.0 * dsp_
    jac[3, 3] += q - 2.0
    jac[4] = dq * sm - 3.0 * dsm_
    jac[4, 4] += q - 2.0
    return jac


def omega_residual_a(y, gamma: float = 1.0) -> float:
    n1, n2, n3, sp, sm = y
    k = 0.75 * (n1 * n1 + n2 * n2 + n3 * n3 - 2.0 * (n1 * n2 + n2 * n3 + n3 * n1))
    return 1.0 - sp * sp - sm * sm - k


def rhs_bianchi_b(y, gamma: float = 1.0) -> np.ndarray:
    """Forward-time field of the class-B system."""
    sp, sm, sx, s2, nm, a = y
    sigma2 = sp * sp + sm * sm + sx * sx + s2 * s2
    omega = 1.0 - sigma2 - nm * nm - 4.0 * a * a
    q = 2.0 * sigma2 + 0.5 * (3.0 * gamma - 2.0) * omega
    return np.array(
        [
            (q - 2.0) * sp + 3.0 * s2 * s2 - 2.0 * nm * nm - 6.0 * a * a,
            (q - 2.0) * sm
            - SQRT3 * s2 * s2
            + 2.0 * SQRT3 * sx * sx
            - 2.0 * SQRT3 * nm * nm
            + 2.0 * SQRT3 * a * a,
            (q - 2.0 - 2.0 * SQRT3 * sm) * sx - 8.0 * nm * a,
            (q - 2.0 - 3.0 * sp + SQRT3 * sm) * s2,
            (q + 2.0 * sp + 2.0 * SQRT3 * sm) * nm + 6.0 * sx * a,
            (q + 2.0 * sp) * a,
        ]
    )


def jac_bianchi_b(y, gamma: float = 1.0) -> np.ndarray:
    sp, sm, sx, s2, nm, a = y
    w = 0.5 * (3.0 * gamma - 2.0)
    sigma2 = sp * sp + sm * sm + sx * sx + s2 * s2
    omega = 1.0 - sigma2 - nm * nm - 4.0 * a * a
    q = 2.0 * sigma2 + w * omega
    c = 4.0 - 2.0 * w
    dq = np.array([c * sp, c * sm, c * sx, c * s2, -2.0 * w * nm, -8.0 * w * a])
    jac = np.zeros((6, 6))
    jac[0] = dq * sp
    jac[0, 0] += q - 2.0
    jac[0, 3] += 6.0 * s2
    jac[0, 4] += -4.0 * nm
    jac[0, 5] += -12.0 * a
    jac[1] = dq * sm
    jac[1, 1] += q - 2.0
    jac[1, 2] += 4.0 * SQRT3 * sx
    jac[1, 3] += -2.0 * SQRT3 * s2
    jac[1, 4] += -4.0 * SQRT3 * nm
    jac[1, 5] += 4.0 * SQRT3 * a
    jac[2] = dq * sx
    jac[2, 1] += -2.0 * SQRT3 * sx
    jac[2, 2] += q - 2.0 - 2.0 * SQRT3 * sm
    jac[2, 4] += -8.0 * a
    jac[2, 5] += -8.0 * nm
    jac[3] = dq * s2
    jac[3, 0] += -3.0 * s2
    jac[3, 1] += SQRT3 * s2
    jac[3, 3] += q - 2.0 - 3.0 * sp + SQRT3 * sm
    jac[4] = dq * nm
    jac[4, 0] += 2.0 * nm
    jac[4, 1] += 2.0 * SQRT3 * nm
    jac[4, 2] += 6.0 * a
    jac[4, 4] += q + 2.0 * sp + 2.0 * SQRT3 * sm
    jac[4, 5] += 6.0 * sx
    jac[5] = dq * a
    jac[5, 0] += 2.0 * a
    jac[5, 5] += q + 2.0 * sp
    return jac


def residuals_b(y, gamma: float = 1.0) -> tuple[float, float]:
    """(density constraint, momentum-type constraint g) residuals."""
    sp, sm, sx, s2, nm, a = y
    sigma2 = sp * sp + sm * sm + sx * sx + s2 * s2
    omega = 1.0 - sigma2 - nm * nm - 4.0 * a * a
    g = (sp + SQRT3 * sm) * a - sx * nm
    return omega, g


# -- configuration and trajectories ---------------------------------------


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_order: int = 12
    direction: str = "toward_singularity"  # or "forward"
    max_steps: int = 2_000_000
    h_max: float = np.inf
    first_step: Optional[float] = None
    fixed_step: Optional[float] = None
    fixed_order: Optional[int] = None
    blowup_limit: Optional[float] = 1e3
    gamma: float = 1.0
    project_constraints: bool = False  # per-step projection (class B only)
    events: Sequence[Event] = field(default_factory=tuple)

    def adams_options(self) -> AdamsOptions:
        return AdamsOptions(
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_order=self.max_order,
            max_steps=self.max_steps,
            h_max=self.h_max,
            first_step=self.first_step,
            fixed_step=self.fixed_step,
            fixed_order=self.fixed_order,
            blowup_limit=self.blowup_limit,
        )


@dataclass
class Visit:
    """One close approach to the Kasner circle."""

    t: float
    sector: int
    u: float
    max_var: float
    state: np.ndarray


@dataclass
class Trajectory:
    """Samples of one integration with constraint residuals and events.

    t is the internal, strictly increasing integration time; for runs
    toward the singularity it measures time-to-the-past from the start.
    """

    t: np.ndarray
    y: np.ndarray
    residuals: np.ndarray  # one column per monitored constraint
    residual_names: tuple[str, ...]
    events: list
    n_accepted: int
    n_rejected: int
    orders: np.ndarray
    steps: np.ndarray
    direction: str
    status: str
    var_names: tuple[str, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["t", *self.var_names, *(f"{n}_residual" for n in self.residual_names),
             "step_size", "order"]
        )
        for i in range(len(self.t)):
            w.writerow(
                [repr(float(self.t[i]))]
                + [repr(float(v)) for v in self.y[i]]
                + [repr(float(r)) for r in self.residuals[i]]
                + [repr(float(self.steps[i])), int(self.orders[i])]
            )
        return buf.getvalue()

    def events_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "section_id", *self.var_names])
        for ev in self.events:
            w.writerow([repr(float(ev.t)), ev.name] + [repr(float(v)) for v in ev.y])
        return buf.getvalue()


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: Sequence[float],
    cfg: IntegratorConfig,
    t_span: float = 100.0,
    residual_fn: Optional[Callable[[np.ndarray], tuple]] = None,
    residual_names: tuple[str, ...] = (),
    var_names: Optional[tuple[str, ...]] = None,
    post_accept=None,
) -> Trajectory:
    """Integrate rhs over [0, t_span] in the configured time direction.

    rhs takes the state only (autonomous systems); the configured field is
    negated for direction="toward_singularity".
    """
    sign = -1.0 if cfg.direction == "toward_singularity" else 1.0

    def f(t, y):
        return sign * rhs(y)

    opts = cfg.adams_options()
    opts.post_accept = post_accept
    res = adams.adams_integrate(f, (0.0, float(t_span)), y0, opts, cfg.events)
    if residual_fn is not None:
        residuals = np.array([residual_fn(yy) for yy in res.y], dtype=float)
        if residuals.ndim == 1:
            residuals = residuals[:, None]
    else:
        residuals = np.zeros((len(res.t), 0))
    n = len(y0)
    names = var_names or tuple(f"y{i}" for i in range(n))
    return Trajectory(
        t=res.t,
        y=res.y,
        residuals=residuals,
        residual_names=residual_names,
        events=res.events,
        n_accepted=res.n_accepted,
        n_rejected=res.n_rejected,
        orders=res.orders,
        steps=res.steps,
        direction=cfg.direction,
        status=res.status,
        var_names=names,
    )


def integrate_b(y0, cfg: IntegratorConfig, t_span: float) -> Trajectory:
    """Class-B run with both constraint residual columns recorded."""
    gamma = cfg.gamma
    rhs = lambda y: rhs_bianchi_b(y, gamma)
    return integrate(
        rhs,
        y0,
        cfg,
        t_span,
        residual_fn=lambda y: residuals_b(y, gamma),
        residual_names=("Omega", "g"),
        var_names=VARS_B,
        post_accept=(lambda t, y: project_constraints_b(y)) if cfg.project_constraints else None,
    )


def integrate_a(y0, cfg: IntegratorConfig, t_span: float) -> Trajectory:
    gamma = cfg.gamma
    rhs = lambda y: rhs_bianchi_a(y, gamma)
    return integrate(
        rhs,
        y0,
        cfg,
        t_span,
        residual_fn=lambda y: (omega_residual_a(y, gamma),),
        residual_names=("Omega",),
        var_names=VARS_A,
    )


# -- seeding ----------------------------------------------------------------


def kasner_state_b(b: BasePoint) -> np.ndarray:
    """Exact class-B equilibrium for a circle point."""
    return np.array(
        [float(b.sigma_plus), b.sigma_minus_float, 0.0, 0.0, 0.0, 0.0]
    )


def kasner_state_a(b: BasePoint) -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, float(b.sigma_plus), b.sigma_minus_float])


def project_constraints_b(y: np.ndarray, tol: float = 1e-15, max_iter: int = 50) -> np.ndarray:
    """Restore both class-B constraints by a 2-variable Newton iteration.

    The shear angle is held fixed: the (Sigma+, Sigma-) pair is scaled by a
    common factor closing the density constraint while A absorbs the
    momentum-type constraint.
    """
    out = y.astype(float).copy()
    sp0, sm0 = out[0], out[1]
    norm = math.hypot(sp0, sm0)
    if norm == 0.0:
        raise ValueError("cannot project a state with vanishing shear")
    cp, cm = sp0 / norm, sm0 / norm
    sx, s2, nm = out[2], out[3], out[4]
    rho, a = norm, out[5]
    for _ in range(max_iter):
        f1 = 1.0 - rho * rho - sx * sx - s2 * s2 - nm * nm - 4.0 * a * a
        f2 = rho * (cp + SQRT3 * cm) * a - sx * nm
        if abs(f1) < tol and abs(f2) < tol:
            break
        j11, j12 = -2.0 * rho, -8.0 * a
        j21, j22 = (cp + SQRT3 * cm) * a, rho * (cp + SQRT3 * cm)
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            raise ValueError("constraint projection hit a singular Jacobian")
        rho -= (f1 * j22 - f2 * j12) / det
        a -= (j11 * f2 - j21 * f1) / det
    else:
        raise ValueError("constraint projection failed to converge")
    out[0], out[1], out[5] = rho * cp, rho * cm, a
    return out


def seed_near_chain(
    b: BasePoint,
    eps: float,
    exit: Optional[Var] = None,
    transverse: Union[float, dict, None] = None,
) -> np.ndarray:
    """Class-B state near base point b, displaced eps along the chain's next
    unstable variable and constraint-corrected to residuals <= 1e-14.

    transverse sets the remaining transition variables (float applied to
    both, or a {Var: value} mapping); by default they stay zero, which
    confines the orbit to the exit variable's cap.
    """
    if not 0.0 <= eps <= 1e-3:
        raise ValueError("eps must lie in [0, 1e-3]")
    ev = b.eigenvalues
    if exit is None:
        unstable = [v for v in (Var.SIGMA_CROSS, Var.SIGMA2, Var.N_MINUS) if ev.for_var(v) < 0]
        if len(unstable) != 1:
            raise ValueError(
                "exit variable is ambiguous at this sector; pass exit= explicitly"
            )
        exit = unstable[0]
    elif not (ev.for_var(exit) < 0):
        raise ValueError(f"{exit.value} is not unstable at sector {int(b.sector)}")
    y = kasner_state_b(b)
    y[_B_INDEX[exit]] = eps
    if transverse is not None:
        tmap = (
            transverse
            if isinstance(transverse, dict)
            else {v: transverse for v in _B_INDEX if v != exit}
        )
        for v, val in tmap.items():
            if v != exit:
                y[_B_INDEX[v]] = val
    out = project_constraints_b(y)
    om, g = residuals_b(out)
    if abs(om) > 1e-14 or abs(g) > 1e-14:
        raise ValueError("constraint correction did not reach 1e-14")
    return out


# -- Kasner-parameter measurement and shadowing -----------------------------

_TAG_TO_SECTOR = {
    (1, 2, 3): 1,
    (2, 1, 3): 2,
    (2, 3, 1): 3,
    (3, 2, 1): 4,
    (3, 1, 2): 5,
    (1, 3, 2): 6,
}


def measure_u(sigma_plus: float, sigma_minus: float) -> tuple[float, int]:
    """Kasner parameter and sector of a point on (or near) the circle."""
    p1 = (1.0 - 2.0 * sigma_plus) / 3.0
    p2 = (1.0 + sigma_plus - SQRT3 * sigma_minus) / 3.0
    p3 = (1.0 + sigma_plus + SQRT3 * sigma_minus) / 3.0
    ps = (p1, p2, p3)
    order = sorted(range(3), key=lambda i: ps[i])  # slots ascending
    tag = tuple(o + 1 for o in order)
    sector = _TAG_TO_SECTOR.get(tag, 0)
    pmin, pmid, pmax = sorted(ps)
    u = pmax / pmid if pmid != 0 else math.inf
    return u, sector


@dataclass
class ShadowReport:
    visits: list[Visit]
    expected_sectors: list[int]
    matched: int
    sequence_matches: bool

    def json_record(self) -> dict:
        return {
            "visits": [
                {
                    "t": v.t,
                    "sector": v.sector,
                    "u": v.u,
                    "max_transition_var": v.max_var,
                }
                for v in self.visits
            ],
            "expected_sectors": self.expected_sectors,
            "visited_sectors": [v.sector for v in self.visits],
            "matched": self.matched,
            "sequence_matches": self.sequence_matches,
        }


def _transition_columns(var_names: Sequence[str]) -> list[int]:
    if "N1" in var_names:
        return [var_names.index(n) for n in ("N1", "N2", "N3")]
    return [var_names.index(n) for n in ("Sigma_cross", "Sigma_two", "N_minus")]


def find_visits(traj: Trajectory, delta: float = 1e-2, rearm: float = 0.1) -> list[Visit]:
    """Close approaches to the Kasner circle along a trajectory.

    A visit opens when max |transition variable| falls below delta and
    closes (re-arming the detector) when it exceeds the rearm level; the
    recorded state is the sample minimizing the criterion inside the window.
    """
    cols = _transition_columns(traj.var_names)
    isp = traj.var_names.index("Sigma_plus")
    ism = traj.var_names.index("Sigma_minus")
    visits: list[Visit] = []
    inside = False
    best = None
    for i in range(len(traj.t)):
        m = float(np.max(np.abs(traj.y[i, cols])))
        if not inside:
            if m < delta:
                inside = True
                best = i
        else:
            if m < float(np.max(np.abs(traj.y[best, cols]))):
                best = i
            if m > rearm:
                inside = False
                y = traj.y[best]
                u, sector = measure_u(float(y[isp]), float(y[ism]))
                visits.append(
                    Visit(float(traj.t[best]), sector, u,
                          float(np.max(np.abs(y[cols]))), y.copy())
                )
                best = None
    if inside and best is not None:
        y = traj.y[best]
        u, sector = measure_u(float(y[isp]), float(y[ism]))
        visits.append(
            Visit(float(traj.t[best]), sector, u,
                  float(np.max(np.abs(y[cols]))), y.copy())
        )
    return visits


def shadow_analysis(
    traj: Trajectory,
    chain: HeteroclinicChain,
    delta: float = 1e-2,
    rearm: float = 0.1,
) -> ShadowReport:
    """Match a trajectory's circle visits against a chain's sector sequence.

    The expected sequence starts at the chain's first node and wraps around
    closed cycles as often as the trajectory keeps visiting.
    """
    visits = find_visits(traj, delta, rearm)
    if not visits:
        raise ValueError("trajectory never approaches the Kasner circle")
    n = len(visits)
    sectors = chain.sector_sequence()
    if chain.closed:
        expected = [sectors[i % len(sectors)] for i in range(n)]
    else:
        expected = sectors[:n]
    matched = 0
    for v, s in zip(visits, expected):
        if v.sector != s:
            break
        matched += 1
    return ShadowReport(
        visits=visits,
        expected_sectors=expected,
        matched=matched,
        sequence_matches=matched >= min(n, len(expected)) and n >= len(sectors),
    )


# -- class-A cap runs --------------------------------------------------------


def heteroclinic_endpoint_check(
    u: QuadraticSurd,
    cfg: Optional[IntegratorConfig] = None,
    eps: float = 1e-6,
    arrival: float = 1e-8,
    t_span: float = 400.0,
) -> tuple[float, float]:
    """Integrate one cap orbit toward the singularity and compare its
    arrival Kasner parameter with the one-step Kasner map.

    Seeds sit eps away from the circle along the single unstable N
    direction of a sector-5 start; returns (measured u, |error|)."""
    if cfg is None:
        cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13, h_max=1.0)
    b = base_point(u, Sector.S5)
    y = kasner_state_a(b)
    # sector 5 has the smallest exponent in slot 3; that slot's eigenvalue
    # drives N2, the lone unstable cap direction there
    y[1] = eps
    scale = math.sqrt(max(0.0, 1.0 - 0.75 * eps * eps))
    y[3] *= scale
    y[4] *= scale

    armed = {"flag": False}

    def arrival_event(t, yy):
        n2 = abs(yy[1])
        if n2 > 0.05:
            armed["flag"] = True
        return n2 - arrival if armed["flag"] else 1.0

    ev = Event("cap_arrival", arrival_event, direction=-1, terminal=True)
    cfg_run = IntegratorConfig(
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        max_order=cfg.max_order,
        direction="toward_singularity",
        h_max=cfg.h_max,
        gamma=cfg.gamma,
        events=(ev,),
    )
    traj = integrate_a(y, cfg_run, t_span)
    if traj.status != "terminal_event":
        raise RuntimeError("cap orbit never returned to the circle")
    yf = traj.events[-1].y
    u_arr, _ = measure_u(float(yf[3]), float(yf[4]))
    image = kasner_map(u)
    if not isinstance(image, QuadraticSurd):
        raise ValueError("Kasner-map image is the Taub limit")
    return u_arr, abs(u_arr - float(image))
