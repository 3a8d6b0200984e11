"""Phoneme inventory: symbol set, reserved blank column, per-phone duration priors.

The blank is not a symbol.  Posteriorgram columns number ``len(symbols) + 1``;
``blank_index`` says which column the blank occupies, the remaining columns
follow symbol order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import BadInventory, UnknownPhone


@dataclass(frozen=True)
class DurationStats:
    mean_ms: float
    std_ms: float


@dataclass
class PhonemeInventory:
    symbols: list[str]
    blank_index: int
    duration: dict[str, DurationStats]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise BadInventory("empty symbol list")
        if len(set(self.symbols)) != len(self.symbols):
            raise BadInventory("duplicate symbols")
        if not 0 <= self.blank_index <= len(self.symbols):
            raise BadInventory(f"blank_index {self.blank_index} out of range")
        for sym in self.symbols:
            if sym not in self.duration:
                raise BadInventory(f"no duration stats for {sym!r}")
            st = self.duration[sym]
            if st.mean_ms <= 0 or st.std_ms <= 0:
                raise BadInventory(f"non-positive duration stats for {sym!r}")

    @property
    def n_columns(self) -> int:
        """Posteriorgram width: one column per symbol plus the blank."""
        return len(self.symbols) + 1

    def column(self, symbol: str) -> int:
        """Posteriorgram column of a symbol, skipping the blank column."""
        try:
            i = self.symbols.index(symbol)
        except ValueError:
            raise UnknownPhone(f"symbol {symbol!r} not in inventory") from None
        return i if i < self.blank_index else i + 1

    def symbol_at(self, column: int) -> str | None:
        """Inverse of column(); None for the blank column."""
        if column == self.blank_index:
            return None
        return self.symbols[column if column < self.blank_index else column - 1]

    def duration_z(self, symbol: str, duration_ms: float) -> float:
        st = self.duration[symbol]
        return (duration_ms - st.mean_ms) / st.std_ms


def load_inventory(path: str) -> PhonemeInventory:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadInventory(f"not valid JSON: {exc}") from None
    return inventory_from_dict(raw)


def inventory_from_dict(raw: dict) -> PhonemeInventory:
    try:
        symbols = [str(s) for s in raw["symbols"]]
        blank_index = int(raw["blank_index"])
        duration = {
            sym: DurationStats(float(st["mean_ms"]), float(st["std_ms"]))
            for sym, st in raw.get("duration", {}).items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise BadInventory(f"bad inventory structure: {exc}") from None
    return PhonemeInventory(symbols, blank_index, duration)


def inventory_to_dict(inv: PhonemeInventory) -> dict:
    return {
        "symbols": inv.symbols,
        "blank_index": inv.blank_index,
        "duration": {
            sym: {"mean_ms": st.mean_ms, "std_ms": st.std_ms} for sym, st in inv.duration.items()
        },
    }
