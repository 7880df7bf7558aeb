"""Sternberg non-resonance checks for heteroclinic chains.

At a base point the three transition eigenvalues are quotients of integer
quadratics in u over the common denominator 1+u+u^2.  Dropping the
denominator, the numerator coefficients form a 3x3 integer matrix M per
sector (columns = lambda_2, lambda_x, lambda_-; rows = the {1, u, u^2}
basis).  An integer relation k1*lambda_2 + k2*lambda_x + k3*lambda_- = 0
then reads M k = z * c where c is the (primitive, c2 > 0) minimal
polynomial coefficient vector of u and z a positive integer scale; the
smallest admissible z yields the earliest possible resonance.

Whether Takens linearization is available is decided against the
bundled reference tables of required orders alpha: the condition is
sum(|k_i|) > alpha at every base point of the chain.  alpha and beta are
pure fixture data; their derivation is outside this artifact.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from math import gcd
from pathlib import Path
from typing import Optional, Sequence

from .chains import HeteroclinicChain
from .kasner import Sector, eigenvalues_b6
from .surd import QuadraticSurd, minimal_polynomial

__all__ = [
    "CoeffMatrix",
    "ResonanceReport",
    "AlphaTable",
    "coeff_matrix",
    "solve_resonance",
    "search_resonances",
    "takens_check",
    "relation_residual",
    "default_fixture_path",
]

_FIXTURE_DIR = Path(__file__).parent / "fixtures"

# exponent formulas over d = 1+u+u^2 as {1, u, u^2} coefficient vectors,
# in ascending value order (-u, 1+u, u(1+u))
_VALUE_COEFFS = ((0, -1, 0), (1, 1, 0), (0, 1, 1))


def _slot_coeffs(s: Sector) -> dict[int, tuple[int, int, int]]:
    a, b, c = Sector(s).permutation
    return {a: _VALUE_COEFFS[0], b: _VALUE_COEFFS[1], c: _VALUE_COEFFS[2]}


@dataclass(frozen=True)
class CoeffMatrix:
    """Numerator coefficients of (lambda_2, lambda_x, lambda_-) at a sector.

    rows[i][j] is the u^i coefficient of the j-th eigenvalue's numerator,
    i.e. the columns are eigenvalue coefficient vectors."""

    sector: Sector
    rows: tuple[tuple[int, int, int], ...]

    def column(self, j: int) -> tuple[int, int, int]:
        return tuple(self.rows[i][j] for i in range(3))

    def det(self) -> int:
        (a, b, c), (d, e, f), (g, h, i) = self.rows
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def coeff_matrix(s: Sector) -> CoeffMatrix:
    """Integer coefficient matrix for sector s (M_B1/M_B2/M_B3 for sectors
    5/1/2, M_S3/M_S4/M_S6 for 3/4/6)."""
    slots = _slot_coeffs(s)
    p1, p2, p3 = slots[1], slots[2], slots[3]
    lam2 = tuple(3 * (p1[i] - p2[i]) for i in range(3))
    lamx = tuple(3 * (p2[i] - p3[i]) for i in range(3))
    lamn = tuple(6 * p3[i] for i in range(3))
    rows = tuple((lam2[i], lamx[i], lamn[i]) for i in range(3))
    return CoeffMatrix(Sector(s), rows)


def _adjugate(rows) -> list[list[int]]:
    (a, b, c), (d, e, f), (g, h, i) = rows
    return [
        [e * i - f * h, c * h - b * i, b * f - c * e],
        [f * g - d * i, a * i - c * g, c * d - a * f],
        [d * h - e * g, b * g - a * h, a * e - b * d],
    ]


def solve_resonance(
    M: CoeffMatrix, minpoly: Sequence[int]
) -> tuple[int, tuple[int, int, int]]:
    """Smallest z > 0 with k = M^-1 (z * minpoly) integral, and that k.

    The sign of k follows the sign of the supplied minpoly vector; the
    normalized (c2 > 0) convention reproduces the bundled reference tables, the
    flipped one the main-text vectors."""
    det = M.det()
    if det == 0:
        raise ValueError(f"coefficient matrix for sector {int(M.sector)} is singular")
    c0, c1, c2 = minpoly
    adj = _adjugate(M.rows)
    v = [adj[i][0] * c0 + adj[i][1] * c1 + adj[i][2] * c2 for i in range(3)]
    g = gcd(gcd(abs(v[0]), abs(v[1])), abs(v[2]))
    z = abs(det) // gcd(abs(det), g)
    k = tuple(vi * z // det for vi in v)
    return z, k  # type: ignore[return-value]


def relation_residual(
    k: Sequence[int], u: QuadraticSurd, s: Sector
) -> QuadraticSurd:
    """Exact value of k1*lambda_2 + k2*lambda_x + k3*lambda_- at (u, s)."""
    ev = eigenvalues_b6(u, s)
    return k[0] * ev.lambda_two + k[1] * ev.lambda_cross + k[2] * ev.lambda_minus


def _integer_pair(u: QuadraticSurd, coeffs: tuple[int, int, int]) -> tuple[int, int]:
    """Numerator a + b*u + c*u^2 over the (1, sqrt(D)) basis, cleared of
    denominators: returns integer (rational part, sqrt coefficient)."""
    a, b, c = coeffs
    p, q, r, d = u.p, u.q, u.r, u.d
    rat = a * r * r + b * p * r + c * (p * p + q * q * d)
    irr = b * q * r + 2 * c * p * q
    return rat, irr


def search_resonances(
    u: QuadraticSurd, s: Sector, max_order: int
) -> list[tuple[int, int, int]]:
    """All primitive integer relations k with sum|k_i| <= max_order and
    k . (lambda_2, lambda_x, lambda_-) = 0 exactly, up to sign (first
    nonzero entry positive)."""
    if max_order > 30:
        raise ValueError("max_order is capped at 30")
    M = coeff_matrix(s)
    rows = [_integer_pair(u, M.column(j)) for j in range(3)]
    row_a = tuple(r[0] for r in rows)
    row_b = tuple(r[1] for r in rows)

    def normalize(k):
        g = gcd(gcd(abs(k[0]), abs(k[1])), abs(k[2]))
        if g == 0:
            return None
        k = tuple(x // g for x in k)
        for x in k:
            if x:
                return k if x > 0 else tuple(-y for y in k)
        return None

    out: set[tuple[int, int, int]] = set()
    cross = (
        row_a[1] * row_b[2] - row_a[2] * row_b[1],
        row_a[2] * row_b[0] - row_a[0] * row_b[2],
        row_a[0] * row_b[1] - row_a[1] * row_b[0],
    )
    if any(cross):
        # generic case: the relation lattice has rank one
        k = normalize(cross)
        if k and sum(abs(x) for x in k) <= max_order:
            out.add(k)
    else:
        # dependent conditions (e.g. rational u): brute-force the cube
        for k1 in range(-max_order, max_order + 1):
            for k2 in range(-max_order, max_order + 1):
                rem = max_order - abs(k1) - abs(k2)
                if rem < 0:
                    continue
                for k3 in range(-rem, rem + 1):
                    k = (k1, k2, k3)
                    if k == (0, 0, 0):
                        continue
                    if (
                        row_a[0] * k1 + row_a[1] * k2 + row_a[2] * k3 == 0
                        and row_b[0] * k1 + row_b[1] * k2 + row_b[2] * k3 == 0
                    ):
                        kn = normalize(k)
                        if kn == k:
                            out.add(k)
    return sorted(out)


@dataclass(frozen=True)
class ResonanceReport:
    """Resonance data for one base point of a chain."""

    node: int
    sector: Sector
    pattern: tuple[int, ...]
    m: int
    z: int
    k: tuple[int, int, int]
    alpha: int
    beta: int
    k_fixture: tuple[int, int, int]
    k_matches_fixture: bool
    passes_takens: bool

    def json_record(self) -> dict:
        return {
            "node": self.node,
            "sector": int(self.sector),
            "pattern": ",".join(str(a) for a in self.pattern),
            "m": self.m,
            "z": self.z,
            "k": list(self.k),
            "alpha": self.alpha,
            "beta": self.beta,
            "k_fixture": list(self.k_fixture),
            "k_matches_fixture": self.k_matches_fixture,
            "sum_abs_k": sum(abs(x) for x in self.k),
            "passes_takens": self.passes_takens,
        }


class AlphaTable:
    """Required Takens orders keyed by (CF tail pattern, m, sector)."""

    def __init__(self, rows: dict[tuple[tuple[int, ...], int, int], tuple[int, int, tuple[int, int, int]]]):
        self._rows = rows

    @staticmethod
    def load(path: Optional[os.PathLike] = None) -> "AlphaTable":
        if path is None:
            path = default_fixture_path("takens_orders.csv")
        rows = {}
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                pattern = tuple(int(a) for a in rec["pattern"].split(","))
                key = (pattern, int(rec["m"]), int(rec["sector"]))
                rows[key] = (
                    int(rec["alpha"]),
                    int(rec["beta"]),
                    (int(rec["k1"]), int(rec["k2"]), int(rec["k3"])),
                )
        return AlphaTable(rows)

    def lookup(self, pattern: tuple[int, ...], m: int, sector: int):
        try:
            return self._rows[(pattern, m, int(sector))]
        except KeyError:
            raise KeyError(
                f"no alpha fixture for pattern {pattern}, m={m}, sector {int(sector)}"
            ) from None

    def __len__(self):
        return len(self._rows)

    def items(self):
        return self._rows.items()


def default_fixture_path(name: str) -> Path:
    """Packaged fixture file, overridable via MIXMASTER_FIXTURES."""
    override = os.environ.get("MIXMASTER_FIXTURES")
    if override:
        cand = Path(override) / name
        if cand.exists():
            return cand
    return _FIXTURE_DIR / name


def takens_check(
    chain: HeteroclinicChain, fixtures: Optional[AlphaTable] = None
) -> list[ResonanceReport]:
    """Resonance reports for every base point of a chain.

    For each node the minimal polynomial of its (irrational) u value feeds
    solve_resonance; the returned k is verified to annihilate the exact
    eigenvalue triple, compared against the reference k vector (up to an
    overall sign at most), and the
    criterion sum|k| > alpha decides passes_takens.
    """
    if fixtures is None:
        fixtures = AlphaTable.load()
    reports = []
    for i, node in enumerate(chain.nodes):
        m, pattern = node.fixture_key()
        alpha, beta, k_fix = fixtures.lookup(pattern, m, node.sector)
        z, k = solve_resonance(coeff_matrix(node.sector), minimal_polynomial(node.u))
        if relation_residual(k, node.u, node.sector) != 0:
            raise AssertionError("computed k does not annihilate the eigenvalues")
        matches = k == k_fix or k == tuple(-x for x in k_fix)
        reports.append(
            ResonanceReport(
                node=i,
                sector=node.sector,
                pattern=pattern,
                m=m,
                z=z,
                k=k,
                alpha=alpha,
                beta=beta,
                k_fixture=k_fix,
                k_matches_fixture=matches,
                passes_takens=sum(abs(x) for x in k) > alpha,
            )
        )
    return reports
