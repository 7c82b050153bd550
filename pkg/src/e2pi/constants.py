"""Reference constants used as independent test baselines."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from gmpy2 import mpq

from ._digits import E_DIGITS, E_PROVENANCE, PI_DIGITS, PI_PROVENANCE
from .numeric import HPReal, rat_to_hp


@dataclass(frozen=True)
class Constant:
    name: str
    decimal_digits: str
    provenance: str

    @cached_property
    def _lower(self):
        whole, _, frac = self.decimal_digits.partition(".")
        return mpq(int(whole + frac), 10 ** len(frac))

    @property
    def places(self) -> int:
        return len(self.decimal_digits.partition(".")[2])

    def to_rational(self):
        """The literal itself (a lower bound: the digits are truncated)."""
        return self._lower

    def bracket(self):
        """Exact rationals ``(lo, hi)`` with ``lo <= value < hi``."""
        return self._lower, self._lower + mpq(1, 10 ** self.places)

    def to_hp(self, p) -> HPReal:
        return rat_to_hp(self._lower, p)


_PI = Constant("pi", PI_DIGITS, PI_PROVENANCE)
_E = Constant("e", E_DIGITS, E_PROVENANCE)


def constant_pi() -> Constant:
    return _PI


def constant_e() -> Constant:
    return _E
