"""Heteroclinic chains in Bianchi VI*(-1/9).

A chain is a sequence of Kasner-circle base points joined by curvature
transitions (in the N_- cap, which move u by the Kasner map) and frame
transitions (in the Sigma_x or Sigma_2 caps, which change the sector but
not u).  Which moves are admissible at a base point is decided by the sign
of the matching eigenvalue: negative (unstable toward the big bang) means
the transition can be taken.

The sector-to-sector wiring is not a formula anywhere; it is reconstructed
here from eigenvalue-sign admissibility plus the exponent swaps each cap
performs (Sigma_x swaps the p2/p3 slots, Sigma_2 swaps p1/p2), frozen as
explicit tables, and pinned by tests against the published 18-cycle
itineraries.  Sectors 5 and 1 have two unstable directions, so chain
generation consumes Left/Right decisions from a BranchPolicy there.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .kasner import BasePoint, Sector, Var, base_point, eigenvalues_b6, kasner_map, TAUB
from .surd import PeriodicCF, QuadraticSurd, cf_to_surd

__all__ = [
    "TransitionKind",
    "Transition",
    "BranchPolicy",
    "PolicyExhausted",
    "BoundaryError",
    "UnsegmentableChain",
    "PassageType",
    "PASSAGE_TEMPLATES",
    "ChainNode",
    "HeteroclinicChain",
    "admissible_transitions",
    "generate_chain",
    "decompose_passages",
    "detect_cycle",
    "classic_18_cycle",
    "advanced_18_cycle",
    "three_cycle",
]


class BoundaryError(ValueError):
    """Raised when a chain runs into a sector-boundary or Taub point."""


class PolicyExhausted(ValueError):
    """Raised when a BranchPolicy has no decision left at a choice point."""


class UnsegmentableChain(ValueError):
    """Raised when a sector sequence fits no passage template."""


class TransitionKind(enum.Enum):
    CURVATURE_N_MINUS = "curvature_n_minus"
    FRAME_SIGMA_CROSS = "frame_sigma_cross"
    FRAME_SIGMA2 = "frame_sigma2"

    @property
    def variable(self) -> Var:
        return {
            TransitionKind.CURVATURE_N_MINUS: Var.N_MINUS,
            TransitionKind.FRAME_SIGMA_CROSS: Var.SIGMA_CROSS,
            TransitionKind.FRAME_SIGMA2: Var.SIGMA2,
        }[self]

    @property
    def changes_u(self) -> bool:
        return self is TransitionKind.CURVATURE_N_MINUS


# frame caps connect the two sectors whose tags differ by one slot swap;
# the arrow runs from the sector where the matching eigenvalue is negative
_FRAME_CROSS_TARGET = {Sector.S1: Sector.S6, Sector.S2: Sector.S5, Sector.S3: Sector.S4}
_FRAME_TWO_TARGET = {Sector.S1: Sector.S2, Sector.S5: Sector.S4, Sector.S6: Sector.S3}
# curvature leaves only sectors 4 and 5 (the tags with p3 smallest);
# the landing sector depends on the Kasner-map branch
_CURVATURE_TARGET = {
    Sector.S4: (Sector.S3, Sector.S2),  # (u >= 2, u < 2)
    Sector.S5: (Sector.S6, Sector.S1),
}


@dataclass(frozen=True)
class Transition:
    kind: TransitionKind
    next_sector: Sector
    next_u: QuadraticSurd


def _cf_step(cf: PeriodicCF) -> PeriodicCF:
    """Digit bookkeeping of the Kasner map: decrement the leading digit,
    era-switching (dropping it) when it is 1."""
    if cf.prefix:
        lead, rest, period = cf.prefix[0], cf.prefix[1:], cf.period
    else:
        lead, rest, period = cf.period[0], (), cf.period[1:] + cf.period[:1]
    if lead >= 2:
        return PeriodicCF((lead - 1,) + rest, period)
    if rest:
        return PeriodicCF(rest, period)
    return PeriodicCF((), period)


def _cf_fixture_key(cf: PeriodicCF) -> tuple[int, tuple[int, ...]]:
    """(leading digit m, repeating tail block) keying the reference tables."""
    if cf.prefix:
        if len(cf.prefix) != 1:
            raise ValueError("fixture key needs a [m; period] form")
        return cf.prefix[0], cf.period
    return cf.period[0], cf.period[1:] + cf.period[:1]


@dataclass
class BranchPolicy:
    """Ordered Left/Right decisions consumed at multi-unstable sectors.

    Left always denotes the Sigma_2 frame option (to sector 4 from sector 5,
    to sector 2 from sector 1); Right is the other admissible move
    (curvature from sector 5, the Sigma_x frame from sector 1).  With
    cycle=True the decision list repeats.
    """

    decisions: tuple[str, ...]
    cycle: bool = False
    _pos: int = field(default=0, repr=False)

    def __post_init__(self):
        self.decisions = tuple(d.upper()[0] for d in self.decisions)
        if any(d not in ("L", "R") for d in self.decisions):
            raise ValueError("decisions must be 'L' or 'R'")

    def next_choice(self) -> str:
        if self._pos >= len(self.decisions):
            if not self.cycle or not self.decisions:
                raise PolicyExhausted("branch policy exhausted at a choice point")
            self._pos = 0
        d = self.decisions[self._pos]
        self._pos += 1
        return d

    @staticmethod
    def always_left() -> "BranchPolicy":
        return BranchPolicy(("L",), cycle=True)

    @staticmethod
    def always_right() -> "BranchPolicy":
        return BranchPolicy(("R",), cycle=True)

    @staticmethod
    def parse(text: str) -> "BranchPolicy":
        t = text.strip().lower()
        if t in ("left", "l"):
            return BranchPolicy.always_left()
        if t in ("right", "r"):
            return BranchPolicy.always_right()
        return BranchPolicy(tuple(t.split(",")), cycle=True)


def admissible_transitions(b: BasePoint) -> list[Transition]:
    """Admissible moves out of base point b, ordered [Left, Right] where a
    choice exists.  Each option's eigenvalue is negative (unstable toward
    the singularity) at b."""
    if b.u <= 1:
        raise BoundaryError("base point sits on a sector boundary (u = 1)")
    ev = b.eigenvalues
    out: list[Transition] = []
    if ev.lambda_two < 0 and b.sector in _FRAME_TWO_TARGET:
        out.append(Transition(TransitionKind.FRAME_SIGMA2, _FRAME_TWO_TARGET[b.sector], b.u))
    if ev.lambda_cross < 0 and b.sector in _FRAME_CROSS_TARGET:
        out.append(
            Transition(TransitionKind.FRAME_SIGMA_CROSS, _FRAME_CROSS_TARGET[b.sector], b.u)
        )
    if ev.lambda_minus < 0 and b.sector in _CURVATURE_TARGET:
        image = kasner_map(b.u)
        if image is TAUB:
            raise BoundaryError("curvature image is the Taub limit")
        hi, lo = _CURVATURE_TARGET[b.sector]
        out.append(
            Transition(TransitionKind.CURVATURE_N_MINUS, hi if b.u >= 2 else lo, image)
        )
    return out


@dataclass(frozen=True)
class ChainNode:
    point: BasePoint
    cf: Optional[PeriodicCF] = None

    @property
    def sector(self) -> Sector:
        return self.point.sector

    @property
    def u(self) -> QuadraticSurd:
        return self.point.u

    def same_state(self, other: "ChainNode") -> bool:
        return self.sector == other.sector and self.u == other.u

    def u_label(self) -> str:
        """Two-digit table label like "[3,5,...]"."""
        if self.cf is None:
            return f"{float(self.u):.6g}"
        d = self.cf.leading(2)
        return "[" + ",".join(str(a) for a in d) + ",...]"

    def fixture_key(self) -> tuple[int, tuple[int, ...]]:
        if self.cf is None:
            raise ValueError("node carries no continued-fraction bookkeeping")
        return _cf_fixture_key(self.cf)


@dataclass(frozen=True)
class PassageType:
    label: str
    sector_path: tuple[int, ...]
    start: int = 0  # node index in the owning chain

    def __str__(self):
        return self.label


# label -> (sector path, transition kinds)
_K = TransitionKind
PASSAGE_TEMPLATES: dict[str, tuple[tuple[int, ...], tuple[TransitionKind, ...]]] = {
    "A": ((4, 3, 4), (_K.CURVATURE_N_MINUS, _K.FRAME_SIGMA_CROSS)),
    "B1": ((4, 2, 5), (_K.CURVATURE_N_MINUS, _K.FRAME_SIGMA_CROSS)),
    "B2": ((4, 2, 5, 4), (_K.CURVATURE_N_MINUS, _K.FRAME_SIGMA_CROSS, _K.FRAME_SIGMA2)),
    "C1": ((5, 1, 2, 5), (_K.CURVATURE_N_MINUS, _K.FRAME_SIGMA2, _K.FRAME_SIGMA_CROSS)),
    "C2": (
        (5, 1, 2, 5, 4),
        (_K.CURVATURE_N_MINUS, _K.FRAME_SIGMA2, _K.FRAME_SIGMA_CROSS, _K.FRAME_SIGMA2),
    ),
    "D": ((5, 6, 3, 4), (_K.CURVATURE_N_MINUS, _K.FRAME_SIGMA2, _K.FRAME_SIGMA_CROSS)),
    "E": (
        (5, 1, 6, 3, 4),
        (
            _K.CURVATURE_N_MINUS,
            _K.FRAME_SIGMA_CROSS,
            _K.FRAME_SIGMA2,
            _K.FRAME_SIGMA_CROSS,
        ),
    ),
}


@dataclass
class HeteroclinicChain:
    """Ordered base points plus the transitions connecting them.

    For an open chain len(transitions) = len(nodes) - 1; a closed cycle has
    len(transitions) = len(nodes), the last transition returning to nodes[0].
    """

    nodes: list[ChainNode]
    transitions: list[Transition]
    closed: bool = False

    def __post_init__(self):
        expected = len(self.nodes) if self.closed else len(self.nodes) - 1
        if len(self.transitions) != expected:
            raise ValueError("node/transition count mismatch")

    def sector_sequence(self) -> list[int]:
        return [int(n.sector) for n in self.nodes]

    def u_labels(self) -> list[str]:
        return [n.u_label() for n in self.nodes]

    def incoming_variable(self, i: int) -> Var:
        """Variable along which node i is approached (previous transition)."""
        if i == 0:
            if not self.closed:
                raise ValueError("open chain: first node has no incoming transition")
            return self.transitions[-1].kind.variable
        return self.transitions[i - 1].kind.variable

    def exit_variable(self, i: int) -> Var:
        if i >= len(self.transitions):
            raise ValueError("last node of an open chain has no exit transition")
        return self.transitions[i].kind.variable

    @property
    def passages(self) -> list[PassageType]:
        return decompose_passages(self)

    def period(self) -> Optional[int]:
        return detect_cycle(self)

    def rotated(self, k: int) -> "HeteroclinicChain":
        """Cyclic rotation starting at node k (closed chains only)."""
        if not self.closed:
            raise ValueError("can only rotate a closed cycle")
        n = len(self.nodes)
        k %= n
        return HeteroclinicChain(
            self.nodes[k:] + self.nodes[:k],
            self.transitions[k:] + self.transitions[:k],
            closed=True,
        )

    def json_record(self) -> dict:
        rec = {
            "closed": self.closed,
            "period": self.period(),
            "nodes": [
                dict(n.point.json_record(), u_cf=str(n.cf) if n.cf else None)
                for n in self.nodes
            ],
            "transitions": [
                {
                    "kind": t.kind.value,
                    "from_sector": int(self.nodes[i].sector),
                    "to_sector": int(t.next_sector),
                }
                for i, t in enumerate(self.transitions)
            ],
        }
        try:
            rec["passages"] = [p.label for p in self.passages]
        except UnsegmentableChain:
            rec["passages"] = None
        return rec

    def sectors_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "sector", "u_float", "u_label"])
        for i, n in enumerate(self.nodes):
            w.writerow([i, int(n.sector), f"{float(n.u):.12g}", n.u_label()])
        return buf.getvalue()


def generate_chain(
    u0: Union[PeriodicCF, QuadraticSurd],
    s0: Sector,
    policy: BranchPolicy,
    steps: int,
) -> HeteroclinicChain:
    """Follow `steps` transitions from (u0, s0), consuming Left/Right
    decisions at choice points.  If the walk returns exactly to its start
    the result is marked as a closed cycle."""
    if isinstance(u0, PeriodicCF):
        cf: Optional[PeriodicCF] = u0
        u = cf_to_surd(u0)
    else:
        cf, u = None, u0
    nodes = [ChainNode(base_point(u, Sector(s0)), cf)]
    transitions: list[Transition] = []
    for _ in range(steps):
        cur = nodes[-1]
        options = admissible_transitions(cur.point)
        if not options:
            raise BoundaryError("no admissible transition (degenerate point)")
        if len(options) == 1:
            chosen = options[0]
        else:
            chosen = options[0] if policy.next_choice() == "L" else options[1]
        if chosen.kind.changes_u and cur.cf is not None:
            cf = _cf_step(cur.cf)
        else:
            cf = cur.cf
        transitions.append(chosen)
        nodes.append(ChainNode(base_point(chosen.next_u, chosen.next_sector), cf))
    if len(nodes) > 1 and nodes[-1].same_state(nodes[0]):
        return HeteroclinicChain(nodes[:-1], transitions, closed=True)
    return HeteroclinicChain(nodes, transitions, closed=False)


def decompose_passages(chain: HeteroclinicChain) -> list[PassageType]:
    """Greedy segmentation of a chain into the seven passage templates.

    Every template starts with a curvature transition out of sector 4 or 5,
    so the chain must start at such a node.  The longer variants (B2 over
    B1, C2 over C1) absorb a trailing 5->4 frame transition whenever it is
    present."""
    n_trans = len(chain.transitions)
    if n_trans == 0:
        return []

    def kind_at(j: int) -> TransitionKind:
        return chain.transitions[j % n_trans].kind if chain.closed or j < n_trans else None

    def sector_at(j: int) -> int:
        if chain.closed:
            return int(chain.nodes[j % len(chain.nodes)].sector)
        return int(chain.nodes[j].sector)

    out: list[PassageType] = []
    i = 0
    while i < n_trans:
        matched = None
        for label in ("E", "C2", "C1", "D", "B2", "B1", "A"):  # longest first
            path, kinds = PASSAGE_TEMPLATES[label]
            ln = len(kinds)
            if i + ln > n_trans:
                continue
            ok = sector_at(i) == path[0]
            for j in range(ln):
                if not ok:
                    break
                if kind_at(i + j) is not kinds[j] or sector_at(i + j + 1) != path[j + 1]:
                    ok = False
            if ok:
                matched = PassageType(label, path, start=i)
                break
        if matched is None:
            raise UnsegmentableChain(
                f"no passage template matches at node {i} "
                f"(sector {sector_at(i)})"
            )
        out.append(matched)
        i += len(matched.sector_path) - 1
    if i != n_trans:
        raise UnsegmentableChain("passage segmentation overruns the chain")
    return out


def detect_cycle(chain: HeteroclinicChain) -> Optional[int]:
    """Smallest period of the node sequence under exact (sector, u)
    equality, or None."""
    nodes = chain.nodes
    n = len(nodes)
    if n < 2:
        return None
    if chain.closed:
        for p in range(1, n + 1):
            if n % p == 0 and all(nodes[i].same_state(nodes[(i + p) % n]) for i in range(n)):
                return p
        return n
    for p in range(1, n // 2 + 1):
        if all(nodes[i].same_state(nodes[i + p]) for i in range(n - p)):
            return p
    return None


def classic_18_cycle() -> HeteroclinicChain:
    """u = [3,5,3,5,...] from sector 4, always Left: passages A A B2 A A A A B2."""
    chain = generate_chain(
        PeriodicCF((), (3, 5)), Sector.S4, BranchPolicy.always_left(), 18
    )
    assert chain.closed
    return chain


def advanced_18_cycle() -> HeteroclinicChain:
    """u = [3,5,3,5,...] from sector 5, Right then Left: passages D A B2 A A A A B1."""
    chain = generate_chain(
        PeriodicCF((), (3, 5)), Sector.S5, BranchPolicy(("R", "L"), cycle=True), 18
    )
    assert chain.closed
    return chain


def three_cycle() -> HeteroclinicChain:
    """Golden-mean cycle through sectors 5-1-2 (passage C1)."""
    chain = generate_chain(
        PeriodicCF((), (1,)), Sector.S5, BranchPolicy(("R", "L"), cycle=True), 3
    )
    assert chain.closed
    return chain
