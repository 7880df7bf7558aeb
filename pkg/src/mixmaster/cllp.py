"""Combined linear local passages along heteroclinic cycles.

Near a base point the linearized flow maps a section {incoming variable = 1}
to a section {exit variable = 1}; in logarithmic coordinates of the two
remaining transition variables this is a 2x2 linear map whose entries are
the eigenvalue ratios r_v = -lambda_v / lambda_exit.  Composing these local
factors around a closed chain gives the combined linear local passage
matrix, whose action on the negative cone (log a, log b << 0) decides
contraction toward the cycle.

Two section conventions appear in the source material and both are
supported: compose(..., section="in") starts on the in-section of the
chain's first node (the 3-cycle template, state = the two non-incoming
variables); section="pre_curvature" starts on the {N_- = 1} section crossed
by the chain's first curvature transition (the 18-cycle log convention,
state = (log Sigma_x, log Sigma_2)).  The two results are conjugate, so the
eigenvalues agree; the matrix entries do not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .chains import HeteroclinicChain, TransitionKind
from .kasner import BasePoint, Var
from .surd import QuadraticSurd

__all__ = [
    "VAR_ORDER",
    "LocalPassage",
    "CLLPMatrix",
    "PassageFactor",
    "local_passage",
    "factor_matrix",
    "mat_mult",
    "eig_2x2",
    "compose",
    "per_passage_factors",
    "contraction_verdict",
    "cllp_report",
]

VAR_ORDER = (Var.SIGMA_CROSS, Var.SIGMA2, Var.N_MINUS)


@dataclass(frozen=True)
class LocalPassage:
    """Linearized passage at a base point: tracked-variable exponent ratios."""

    base: BasePoint
    incoming: Var
    exit: Var
    ratios: dict[Var, QuadraticSurd]  # keyed by the two non-exit variables

    def ratio_floats(self) -> dict[Var, float]:
        return {v: float(r) for v, r in self.ratios.items()}


def local_passage(b: BasePoint, incoming: Var, exit: Var) -> LocalPassage:
    """Exponent ratios r = -lambda_var / lambda_exit at base point b.

    The exit variable must be unstable toward the singularity (negative
    stored eigenvalue) and distinct from the incoming one.
    """
    if incoming == exit:
        raise ValueError("incoming and exit variables must differ")
    ev = b.eigenvalues
    lam_exit = ev.for_var(exit)
    if not (lam_exit < 0):
        raise ValueError(
            f"exit variable {exit.value} is stable at sector {int(b.sector)}"
        )
    ratios = {v: -ev.for_var(v) / lam_exit for v in VAR_ORDER if v != exit}
    return LocalPassage(b, incoming, exit, ratios)


def factor_matrix(incoming: Var, exit: Var, ratios: dict[Var, object]):
    """2x2 log-linear factor of one local passage.

    Rows are ordered by the next section's tracked pair (VAR_ORDER minus the
    exit variable), columns by the current pair (VAR_ORDER minus the
    incoming).  Entries may be floats, surds, or symbols; only + and * are
    used, so the same machinery serves numeric and structural work.
    """
    cur = [v for v in VAR_ORDER if v != incoming]
    nxt = [v for v in VAR_ORDER if v != exit]
    out = []
    for v in nxt:
        row = []
        for w in cur:
            entry = ratios[v] if w == exit else 0
            if w == v:
                entry = entry + 1 if entry != 0 else 1
            row.append(entry)
        out.append(row)
    return out


def mat_mult(a, b):
    """2x2 product usable for floats, exact surds, and symbolic entries."""
    return [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]


def eig_2x2(m: Sequence[Sequence[float]]):
    """Closed-form eigenvalues and eigenvectors of a real 2x2 matrix.

    Eigenvalues are returned in descending order; each eigenvector is
    normalized to (x, 1) when possible, matching the published logs, else
    (1, 0).  Complex pairs raise ValueError (no cycle studied here has any).
    """
    (a, b), (c, d) = m
    tr, det = a + d, a * d - b * c
    disc = tr * tr - 4.0 * det
    if disc < 0:
        raise ValueError("complex eigenvalue pair")
    root = disc ** 0.5
    mus = sorted(((tr + root) / 2.0, (tr - root) / 2.0), reverse=True)
    vecs = []
    scale = max(abs(a), abs(b), abs(c), abs(d), 1.0)
    for mu in mus:
        # rows of (M - mu I) are proportional; use the better-conditioned one
        if abs(c) >= abs(mu - a) * 1e-14 and abs(c) > 1e-300:
            x, y = mu - d, c
        elif abs(b) > 1e-300:
            x, y = b, mu - a
        else:  # diagonal matrix
            x, y = (1.0, 0.0) if abs(mu - a) <= abs(mu - d) else (0.0, 1.0)
        if abs(y) > 1e-12 * scale:
            vecs.append((x / y, 1.0))
        else:
            vecs.append((1.0, 0.0))
    return tuple(mus), tuple(vecs)


@dataclass(frozen=True)
class CLLPMatrix:
    """Composed 2x2 log-linear map with its eigen-data and verdict."""

    m: tuple[tuple[float, float], tuple[float, float]]
    eigenvalues: tuple[float, float]
    eigenvectors: tuple[tuple[float, float], tuple[float, float]]
    contraction: bool
    boundary: bool
    witness: dict

    @property
    def trace(self) -> float:
        return self.m[0][0] + self.m[1][1]

    @property
    def det(self) -> float:
        return self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]

    @staticmethod
    def from_entries(m) -> "CLLPMatrix":
        mf = tuple(tuple(float(x) for x in row) for row in m)
        mus, vecs = eig_2x2(mf)
        contraction, boundary, witness = contraction_verdict(mf)
        return CLLPMatrix(mf, mus, vecs, contraction, boundary, witness)

    def json_record(self) -> dict:
        return {
            "matrix": [list(r) for r in self.m],
            "eigenvalues": list(self.eigenvalues),
            "eigenvectors": [list(v) for v in self.eigenvectors],
            "trace": self.trace,
            "det": self.det,
            "contraction": self.contraction,
            "boundary": self.boundary,
        }


@dataclass(frozen=True)
class PassageFactor:
    """One passage's 2x2 factor with its eigen-data."""

    label: str
    start_sector: int
    start_u: float
    matrix: tuple[tuple[float, float], tuple[float, float]]
    eigenvalues: tuple[float, float]
    eigenvectors: tuple[tuple[float, float], tuple[float, float]]

    def json_record(self) -> dict:
        return {
            "passage": self.label,
            "start_sector": self.start_sector,
            "start_u": self.start_u,
            "matrix": [list(r) for r in self.matrix],
            "eigenvalues": list(self.eigenvalues),
            "eigenvectors": [list(v) for v in self.eigenvectors],
        }


def _local_factors(chain: HeteroclinicChain, numeric: bool = True):
    """Per-node 2x2 factors (floats by default, exact surds otherwise)."""
    if not chain.closed:
        raise ValueError("combined local passage needs a closed cycle")
    factors = []
    for i, node in enumerate(chain.nodes):
        lp = local_passage(node.point, chain.incoming_variable(i), chain.exit_variable(i))
        ratios = lp.ratio_floats() if numeric else lp.ratios
        factors.append(factor_matrix(lp.incoming, lp.exit, ratios))
    return factors


def _first_curvature_index(chain: HeteroclinicChain) -> int:
    for i, t in enumerate(chain.transitions):
        if t.kind is TransitionKind.CURVATURE_N_MINUS:
            return i
    raise ValueError("cycle has no curvature transition")


def compose(chain: HeteroclinicChain, section: str = "in") -> CLLPMatrix:
    """Combined linear local passage matrix of a closed chain.

    section="in": composition starts on the in-section of nodes[0] (state =
    the two non-incoming variables in (Sigma_x, Sigma_2, N_-) order).
    section="pre_curvature": starts on the {N_-=1} section of the first
    curvature transition, i.e. the in-section of its landing node, with
    state (log Sigma_x, log Sigma_2).
    """
    if section == "pre_curvature":
        start = (_first_curvature_index(chain) + 1) % len(chain.nodes)
        return compose(chain.rotated(start), section="in")
    if section != "in":
        raise ValueError("section must be 'in' or 'pre_curvature'")
    factors = _local_factors(chain)
    m = [[1.0, 0.0], [0.0, 1.0]]
    for f in factors:
        m = mat_mult(f, m)
    return CLLPMatrix.from_entries(m)


def passage_product(chain: HeteroclinicChain, order: str = "visit") -> CLLPMatrix:
    """Product of the per-passage factors of a closed cycle.

    order="flow" composes them as maps (later passage factors multiply on
    the left); the result equals compose(chain, "pre_curvature") and is the
    genuine section-return map of the linearized dynamics.  order="visit"
    appends each passage factor on the right instead, the accumulation
    convention of the reference log this module is validated against; the
    two products share their determinant but not their spectrum.
    """
    if order not in ("visit", "flow"):
        raise ValueError("order must be 'visit' or 'flow'")
    m = [[1.0, 0.0], [0.0, 1.0]]
    for f in per_passage_factors(chain):
        fm = [list(r) for r in f.matrix]
        m = mat_mult(m, fm) if order == "visit" else mat_mult(fm, m)
    return CLLPMatrix.from_entries(m)


def per_passage_factors(chain: HeteroclinicChain) -> list[PassageFactor]:
    """Per-passage factors of a closed cycle in chain order.

    Each passage starting at node b (leaving via its curvature transition)
    composes the local passages at the nodes it lands on; the product of
    all returned factors equals compose(chain, "pre_curvature").
    """
    if not chain.closed:
        raise ValueError("combined local passage needs a closed cycle")
    passages = chain.passages
    if passages and passages[0].start != 0:
        raise ValueError("cycle must start at a passage boundary")
    factors = _local_factors(chain)
    n = len(chain.nodes)
    out = []
    for p in passages:
        span = len(p.sector_path) - 1
        m = [[1.0, 0.0], [0.0, 1.0]]
        for j in range(1, span + 1):
            m = mat_mult(factors[(p.start + j) % n], m)
        mus, vecs = eig_2x2(m)
        start_node = chain.nodes[p.start]
        out.append(
            PassageFactor(
                label=p.label,
                start_sector=int(start_node.sector),
                start_u=float(start_node.u),
                matrix=tuple(tuple(row) for row in m),
                eigenvalues=mus,
                eigenvectors=vecs,
            )
        )
    return out


def contraction_verdict(
    m: Sequence[Sequence[float]],
    starts: Optional[Sequence[tuple[float, float]]] = None,
    iterations: int = 10,
    boundary_tol: float = 1e-9,
) -> tuple[bool, bool, dict]:
    """Decide contraction on the negative cone by iterating the log map.

    True iff from every test start with log a, log b << 0 the iterates stay
    in the negative cone with max(log a, log b) strictly decreasing, and no
    eigenvalue modulus sits on the unit circle (within boundary_tol).  An
    expanding eigenvalue whose eigenvector points into the cone drives the
    iterates deeper and is compatible with contraction in this sense.
    Returns (verdict, boundary_flag, witness).
    """
    (a, b), (c, d) = m
    tr, det = a + d, a * d - b * c
    disc = tr * tr - 4.0 * det
    if disc >= 0:
        root = disc ** 0.5
        moduli = [abs((tr + root) / 2.0), abs((tr - root) / 2.0)]
    else:
        moduli = [abs(det) ** 0.5] * 2
    boundary = any(abs(mod - 1.0) <= boundary_tol for mod in moduli)

    if starts is None:
        starts = ((-1.0, -1.0), (-1.0, -3.0), (-3.0, -1.0), (-2.0, -5.0))
    trajectories = []
    decreasing = True
    for x0 in starts:
        x, y = x0
        path = [(x, y)]
        for _ in range(iterations):
            x, y = a * x + b * y, c * x + d * y
            path.append((x, y))
            if x >= 0 or y >= 0 or max(x, y) >= max(path[-2]):
                decreasing = False
        trajectories.append(path)
    verdict = decreasing and not boundary
    witness = {
        "trajectories": trajectories,
        "eigen_moduli": moduli,
        "boundary": boundary,
        "strictly_decreasing": decreasing,
    }
    return verdict, boundary, witness


def cllp_report(chain: HeteroclinicChain) -> dict:
    """JSON-ready report on the pre-curvature section convention.

    Contains each passage's factor with eigen-data, the cumulative
    visit-order products after each passage, the final visit-order matrix
    ("final", the quantity the bundled reference log quotes) and the
    flow-order return map ("final_flow"), each with its contraction
    verdict."""
    factors = per_passage_factors(chain)
    cumulative = []
    m = [[1.0, 0.0], [0.0, 1.0]]
    for f in factors:
        m = mat_mult(m, [list(r) for r in f.matrix])
        cumulative.append([list(r) for r in m])
    final = CLLPMatrix.from_entries(m)
    flow = passage_product(chain, order="flow")
    return {
        "passages": [f.json_record() for f in factors],
        "cumulative": cumulative,
        "final": final.json_record(),
        "final_flow": flow.json_record(),
    }
