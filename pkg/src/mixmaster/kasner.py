"""Kasner-circle geometry and sector-dependent eigenvalue formulas.

The Kasner circle is parametrized by u in [1, inf]; each u labels an
equivalence class of six circle points, one per sector.  A sector carries a
permutation tag (abc) meaning p_a < p_b < p_c, which pins the assignment of
the three exponent formulas -u/D, (1+u)/D, u(1+u)/D (D = 1+u+u^2) to the
slots p1, p2, p3.  Everything downstream (Sigma+-coordinates, the Bianchi IX
N-eigenvalues, and the Bianchi VI*(-1/9) transition eigenvalues) is an exact
rational expression in the slot exponents, so all values here live in the
same quadratic field as u.

Convention: sqrt(3) factors never survive in any eigenvalue, so Sigma- is
stored internally scaled as sigma_minus_s = Sigma-/sqrt(3); the true Sigma-
is reconstituted only on floating-point export.  All eigenvalues are stored
for the forward-time field; "unstable toward the big bang" therefore means
a negative stored value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .surd import QuadraticSurd, cf_to_surd, PeriodicCF, sqrt_surd, surd

__all__ = [
    "Sector",
    "Var",
    "TAUB",
    "KasnerExponents",
    "BasePoint",
    "EigenvalueSet",
    "kasner_map",
    "exponents_for",
    "base_point",
    "eigenvalues_b9",
    "eigenvalues_b6",
    "golden_mean",
]


class _TaubLimit:
    """Distinguished marker for the u = infinity Taub limit."""

    def __repr__(self):
        return "TAUB"


TAUB = _TaubLimit()


class Sector(enum.IntEnum):
    """The six Kasner-circle sectors, labelled counter-clockwise from the
    positive quadrant.  The tag (abc) means p_a < p_b < p_c."""

    S1 = 1  # (123)
    S2 = 2  # (213)
    S3 = 3  # (231)
    S4 = 4  # (321)
    S5 = 5  # (312)
    S6 = 6  # (132)

    @property
    def permutation(self) -> tuple[int, int, int]:
        return _PERMUTATION[self]


# sector index -> (a, b, c) with p_a < p_b < p_c
_PERMUTATION: dict[int, tuple[int, int, int]] = {
    1: (1, 2, 3),
    2: (2, 1, 3),
    3: (2, 3, 1),
    4: (3, 2, 1),
    5: (3, 1, 2),
    6: (1, 3, 2),
}


class Var(enum.Enum):
    """Transition variables of the Bianchi VI*(-1/9) system."""

    SIGMA_CROSS = "sigma_cross"
    SIGMA2 = "sigma2"
    N_MINUS = "n_minus"

    def __repr__(self):
        return self.value


def golden_mean() -> QuadraticSurd:
    return cf_to_surd(PeriodicCF((), (1,)))


def kasner_map(u: QuadraticSurd):
    """One step of the Kasner map: u-1 for u >= 2, 1/(u-1) for 1 < u < 2.

    u = 1 has no finite image (the heteroclinic orbit runs into a Taub
    point); the distinguished TAUB marker is returned instead of a number.
    """
    if u < 1:
        raise ValueError("Kasner parameter must satisfy u >= 1")
    if u == 1:
        return TAUB
    if u >= 2:
        return u - 1
    return 1 / (u - 1)


@dataclass(frozen=True)
class KasnerExponents:
    """Slot exponents (p1, p2, p3) with p1+p2+p3 = p1^2+p2^2+p3^2 = 1."""

    p1: QuadraticSurd
    p2: QuadraticSurd
    p3: QuadraticSurd

    def as_tuple(self) -> tuple[QuadraticSurd, QuadraticSurd, QuadraticSurd]:
        return (self.p1, self.p2, self.p3)


def exponents_for(u: QuadraticSurd, s: Sector) -> KasnerExponents:
    """Kasner exponents at parameter u in sector s.

    The value multiset {-u, 1+u, u(1+u)}/(1+u+u^2) is distributed to the
    slots according to the sector's permutation tag.
    """
    if u < 1:
        raise ValueError("Kasner parameter must satisfy u >= 1")
    den = 1 + u + u * u
    values = (-u / den, (1 + u) / den, (u * (1 + u)) / den)  # ascending
    a, b, c = Sector(s).permutation
    slots: dict[int, QuadraticSurd] = {a: values[0], b: values[1], c: values[2]}
    return KasnerExponents(slots[1], slots[2], slots[3])


@dataclass(frozen=True)
class EigenvalueSet:
    """Eigenvalues of the linearized flow at a Kasner-circle point.

    lambda_cross, lambda_two, lambda_minus drive the Sigma_x, Sigma_2, N_-
    transition variables of Bianchi VI*(-1/9); lambda_a is the coefficient
    of the A equation on the circle.  mu1, mu2, mu3 are the Bianchi IX
    N_1, N_2, N_3 eigenvalues at the same point.
    """

    lambda_cross: QuadraticSurd
    lambda_two: QuadraticSurd
    lambda_minus: QuadraticSurd
    lambda_a: QuadraticSurd
    mu1: QuadraticSurd
    mu2: QuadraticSurd
    mu3: QuadraticSurd

    def for_var(self, v: Var) -> QuadraticSurd:
        return {
            Var.SIGMA_CROSS: self.lambda_cross,
            Var.SIGMA2: self.lambda_two,
            Var.N_MINUS: self.lambda_minus,
        }[v]


@dataclass(frozen=True)
class BasePoint:
    """A Kasner-circle equilibrium: sector, parameter and coordinates.

    sigma_minus_s is Sigma-/sqrt(3); use sigma_minus_float for the true
    coordinate.  Sigma+^2 + Sigma-^2 = 1 holds exactly.
    """

    sector: Sector
    u: QuadraticSurd
    sigma_plus: QuadraticSurd
    sigma_minus_s: QuadraticSurd
    exponents: KasnerExponents

    @property
    def sigma_minus_float(self) -> float:
        if self.sigma_minus_s.is_rational:
            return float(self.sigma_minus_s * sqrt_surd(3))
        return float(self.sigma_minus_s) * 3 ** 0.5

    @property
    def eigenvalues(self) -> EigenvalueSet:
        return eigenvalues_b6(self.u, self.sector)

    def json_record(self) -> dict:
        ev = self.eigenvalues
        return {
            "sector": int(self.sector),
            "u_exact": str(self.u),
            "u_float": float(self.u),
            "sigma_plus": float(self.sigma_plus),
            "sigma_minus": self.sigma_minus_float,
            "eigenvalues": {
                "cross": float(ev.lambda_cross),
                "two": float(ev.lambda_two),
                "minus": float(ev.lambda_minus),
                "A": float(ev.lambda_a),
            },
        }


def base_point(u: QuadraticSurd, s: Sector) -> BasePoint:
    """Circle point for (u, s), with Sigma+- derived from the exponents."""
    ex = exponents_for(u, s)
    sigma_plus = surd(1, 0, 2) - ex.p1 * surd(3, 0, 2)
    # Sigma- = -(sqrt(3)/2)(p1 + 2 p2 - 1); store the /sqrt(3) scaling
    sigma_minus_s = -(ex.p1 + 2 * ex.p2 - 1) / 2
    assert sigma_plus * sigma_plus + 3 * sigma_minus_s * sigma_minus_s == 1
    return BasePoint(Sector(s), u, sigma_plus, sigma_minus_s, ex)


def eigenvalues_b9(u: QuadraticSurd) -> tuple[QuadraticSurd, QuadraticSurd, QuadraticSurd]:
    """Bianchi IX N-eigenvalues (-6u, 6(1+u), 6u(1+u)) / (1+u+u^2)."""
    den = 1 + u + u * u
    return (-6 * u / den, 6 * (1 + u) / den, 6 * u * (1 + u) / den)


def eigenvalues_b6(u: QuadraticSurd, s: Sector) -> EigenvalueSet:
    """Bianchi VI*(-1/9) transition eigenvalues at (u, s).

    With slot exponents p1, p2, p3 these are exactly
        lambda_x = 3(p2 - p3),  lambda_2 = 3(p1 - p2),
        lambda_- = 6 p3,        lambda_A = 3(p2 + p3),
    equivalent to the Sigma+- forms -2 sqrt(3) Sigma-, -3 Sigma+ + sqrt(3)
    Sigma-, 2 + 2 Sigma+ + 2 sqrt(3) Sigma-, and 2 + 2 Sigma+.
    """
    ex = exponents_for(u, s)
    p1, p2, p3 = ex.as_tuple()
    return EigenvalueSet(
        lambda_cross=3 * (p2 - p3),
        lambda_two=3 * (p1 - p2),
        lambda_minus=6 * p3,
        lambda_a=3 * (p2 + p3),
        mu1=6 * p1,
        mu2=6 * p3,
        mu3=6 * p2,
    )
