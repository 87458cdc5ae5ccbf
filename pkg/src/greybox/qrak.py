"""Four-letter constraint classification after Le Digabel and Wild.

Each side constraint of an optimization problem is coded by four letters:
quantifiable (Q) or nonquantifiable (N), relaxable (R) or unrelaxable (U),
a priori (A) or simulation-based (S), known (K) or hidden (H).  A hidden
constraint is necessarily nonquantifiable, unrelaxable, and simulation-based,
so the only code ending in H is "NUSH".
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Ternary(str, Enum):
    """Three-valued answer; not knowing is distinct from a negative."""

    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class QrakError(ValueError):
    pass


class InconsistentFlags(QrakError):
    """A hidden constraint was given a positive quantifiable/relaxable/a-priori flag."""


class Unclassifiable(QrakError):
    """A known constraint cannot be coded while any of its flags is unknown."""


@dataclass(frozen=True)
class QrakCode:
    quantifiable: bool
    relaxable: bool
    a_priori: bool
    known: bool

    def __post_init__(self):
        if not self.known and (self.quantifiable or self.relaxable or self.a_priori):
            raise InconsistentFlags(
                "a hidden constraint is necessarily nonquantifiable, unrelaxable, "
                "and simulation-based"
            )

    @property
    def rendered(self) -> str:
        return (
            ("Q" if self.quantifiable else "N")
            + ("R" if self.relaxable else "U")
            + ("A" if self.a_priori else "S")
            + ("K" if self.known else "H")
        )

    @classmethod
    def from_rendered(cls, code: str) -> "QrakCode":
        if len(code) != 4 or any(
            c not in allowed for c, allowed in zip(code, ("QN", "RU", "AS", "KH"))
        ):
            raise QrakError(f"not a valid constraint code: {code!r}")
        return cls(code[0] == "Q", code[1] == "R", code[2] == "A", code[3] == "K")

    def __str__(self) -> str:
        return self.rendered


NUSH = QrakCode(quantifiable=False, relaxable=False, a_priori=False, known=False)


def _as_ternary(value: Ternary | str) -> Ternary:
    return value if isinstance(value, Ternary) else Ternary(value)


def classify(
    known: bool,
    a_priori: Ternary | str = Ternary.UNKNOWN,
    relaxable: Ternary | str = Ternary.UNKNOWN,
    quantifiable: Ternary | str = Ternary.UNKNOWN,
) -> QrakCode:
    """Derive the four-letter code from elicited constraint flags.

    A hidden constraint (known=False) is always "NUSH"; its other flags may
    be "no" or "unknown" but never "yes".  A known constraint requires all
    three remaining flags to be answered yes or no.
    """
    flags = {
        "a_priori": _as_ternary(a_priori),
        "relaxable": _as_ternary(relaxable),
        "quantifiable": _as_ternary(quantifiable),
    }
    if not known:
        positive = sorted(name for name, v in flags.items() if v is Ternary.YES)
        if positive:
            raise InconsistentFlags(
                f"hidden constraint cannot be {', '.join(positive)}; hidden implies NUSH"
            )
        return NUSH
    unanswered = sorted(name for name, v in flags.items() if v is Ternary.UNKNOWN)
    if unanswered:
        raise Unclassifiable(
            f"known constraint cannot be coded while {', '.join(unanswered)} is unknown"
        )
    return QrakCode(
        quantifiable=flags["quantifiable"] is Ternary.YES,
        relaxable=flags["relaxable"] is Ternary.YES,
        a_priori=flags["a_priori"] is Ternary.YES,
        known=True,
    )


def enumerate_known_classes() -> list[QrakCode]:
    """All eight codes a known constraint can take, sorted by rendered string."""
    codes = [
        QrakCode(quantifiable=q, relaxable=r, a_priori=a, known=True)
        for q in (True, False)
        for r in (True, False)
        for a in (True, False)
    ]
    return sorted(codes, key=lambda c: c.rendered)


class HintCategory(str, Enum):
    A_PRIORI_STANDARD = "a_priori_standard"
    SIMULATION_EXPENSIVE = "simulation_expensive"
    FAULTY_SOFTWARE = "faulty_software"


@dataclass(frozen=True)
class Hint:
    category: HintCategory
    text: str


# Treatment directions per code.  This is versioned advisory data, not logic:
# the wording is an editorial extension of the taxonomy and may evolve
# without code changes.
HINT_TABLE_VERSION = 1

_A = "standard constrained-programming approaches (e.g., linear or nonlinear) usually apply"
_S = "expensive simulation call; budget it"
_U = "never evaluate infeasible points"
_RQ = "penalty/violation-based handling possible"
_H = "faulty-software regime; defensive evaluation wrapper required"

HINT_TABLE: dict[str, Hint] = {
    "QRAK": Hint(HintCategory.A_PRIORI_STANDARD, f"{_A}; {_RQ}"),
    "QUAK": Hint(HintCategory.A_PRIORI_STANDARD, f"{_A}; {_U}"),
    "NRAK": Hint(HintCategory.A_PRIORI_STANDARD, _A),
    "NUAK": Hint(HintCategory.A_PRIORI_STANDARD, f"{_A}; {_U}"),
    "QRSK": Hint(HintCategory.SIMULATION_EXPENSIVE, f"{_S}; {_RQ}"),
    "QUSK": Hint(HintCategory.SIMULATION_EXPENSIVE, f"{_S}; {_U}"),
    "NRSK": Hint(HintCategory.SIMULATION_EXPENSIVE, _S),
    "NUSK": Hint(HintCategory.SIMULATION_EXPENSIVE, f"{_S}; {_U}"),
    "NUSH": Hint(HintCategory.FAULTY_SOFTWARE, _H),
}


def treatment_hint(code: QrakCode) -> Hint:
    """Advisory direction for handling a constraint of the given class."""
    return HINT_TABLE[code.rendered]
