"""Chemical element table: symbols, valence variants and integer mass surrogates.

An element is identified by (symbol, valence).  Multi-valence atoms such as
sulfur are modelled as distinct elements S(2), S(4), S(6); the bare token
"S" resolves to the default (lowest) valence.  The mass surrogate is
floor(10 * atomic mass), kept as an exact integer.
"""

from __future__ import annotations

from dataclasses import dataclass


class UnknownElementError(ValueError):
    """Raised for element tokens outside the supported table."""


@dataclass(frozen=True, order=True)
class ElementSpec:
    """One chemical element variant: symbol, valence and mass surrogate."""

    symbol: str
    valence: int
    mass_star: int

    def __post_init__(self) -> None:
        if not 1 <= self.valence <= 6:
            raise ValueError(f"valence {self.valence} outside [1,6] for {self.symbol}")
        if self.mass_star <= 0:
            raise ValueError(f"mass_star must be positive, got {self.mass_star}")

    @property
    def token(self) -> str:
        """Printable token; explicit valence for non-default variants."""
        if DEFAULT_VALENCE.get(self.symbol) == self.valence:
            return self.symbol
        return f"{self.symbol}({self.valence})"

    @property
    def is_hydrogen(self) -> bool:
        return self.symbol == "H"

    def sort_key(self) -> tuple[str, int]:
        return (self.symbol, self.valence)

    def __str__(self) -> str:
        return self.token


# floor(10 * standard atomic weight)
_MASS10 = {
    "H": 10,
    "B": 108,
    "C": 120,
    "N": 140,
    "O": 159,
    "F": 189,
    "Si": 280,
    "P": 309,
    "S": 320,
    "Cl": 354,
    "Br": 799,
    "I": 1269,
}

# valences allowed per symbol, default (first) used for bare tokens
_VALENCES = {
    "H": (1,),
    "B": (3,),
    "C": (4, 2, 3, 5),
    "N": (3, 1, 2, 4, 5),
    "O": (2,),
    "F": (1,),
    "Si": (4,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

DEFAULT_VALENCE = {sym: vals[0] for sym, vals in _VALENCES.items()}

HYDROGEN = ElementSpec("H", 1, _MASS10["H"])


def make_element(symbol: str, valence: int | None = None) -> ElementSpec:
    """Build an ElementSpec from a symbol and optional explicit valence."""
    if symbol not in _MASS10:
        raise UnknownElementError(f"unknown element symbol {symbol!r}")
    if valence is None:
        valence = DEFAULT_VALENCE[symbol]
    return ElementSpec(symbol, valence, _MASS10[symbol])


def parse_element(token: str) -> ElementSpec:
    """Parse a token like "C" or "S(6)" into an ElementSpec."""
    token = token.strip()
    if token.endswith(")") and "(" in token:
        sym, _, rest = token.partition("(")
        try:
            valence = int(rest[:-1])
        except ValueError as exc:
            raise UnknownElementError(f"bad element token {token!r}") from exc
        return make_element(sym, valence)
    return make_element(token)


def allowed_valences(symbol: str) -> tuple[int, ...]:
    """Valence variants supported for a symbol, smallest first."""
    if symbol not in _VALENCES:
        raise UnknownElementError(f"unknown element symbol {symbol!r}")
    return tuple(sorted(_VALENCES[symbol]))
