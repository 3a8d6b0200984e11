import json

import pytest

from dysfluent.errors import BadInventory, UnknownPhone
from dysfluent.inventory import (
    DurationStats,
    PhonemeInventory,
    inventory_from_dict,
    inventory_to_dict,
    load_inventory,
)

STATS = {"a": DurationStats(100.0, 30.0), "b": DurationStats(150.0, 40.0)}


def test_column_skips_blank_slot():
    inv = PhonemeInventory(["a", "b"], 1, STATS)
    assert inv.n_columns == 3
    assert inv.column("a") == 0
    assert inv.column("b") == 2
    assert inv.symbol_at(0) == "a"
    assert inv.symbol_at(1) is None
    assert inv.symbol_at(2) == "b"


def test_column_round_trip_everywhere():
    for blank in range(3):
        inv = PhonemeInventory(["a", "b"], blank, STATS)
        for sym in inv.symbols:
            assert inv.symbol_at(inv.column(sym)) == sym
        assert inv.symbol_at(inv.blank_index) is None


def test_unknown_symbol():
    inv = PhonemeInventory(["a", "b"], 0, STATS)
    with pytest.raises(UnknownPhone):
        inv.column("zz")


def test_duration_z():
    inv = PhonemeInventory(["a", "b"], 0, STATS)
    assert inv.duration_z("a", 160.0) == pytest.approx(2.0)


@pytest.mark.parametrize(
    "symbols,blank,duration",
    [
        ([], 0, {}),
        (["a", "a"], 0, STATS),
        (["a"], 5, {"a": STATS["a"]}),
        (["a"], 0, {}),
        (["a"], 0, {"a": DurationStats(0.0, 30.0)}),
        (["a"], 0, {"a": DurationStats(100.0, -1.0)}),
    ],
)
def test_invalid_inventories_rejected(symbols, blank, duration):
    with pytest.raises(BadInventory):
        PhonemeInventory(symbols, blank, duration)


def test_dict_round_trip():
    inv = PhonemeInventory(["a", "b"], 1, STATS)
    assert inventory_from_dict(inventory_to_dict(inv)) == inv


def test_load_inventory_rejects_bad_json(tmp_path):
    path = tmp_path / "inv.json"
    path.write_text("{nope")
    with pytest.raises(BadInventory):
        load_inventory(str(path))


def test_load_inventory_rejects_missing_fields(tmp_path):
    path = tmp_path / "inv.json"
    path.write_text(json.dumps({"symbols": ["a"]}))
    with pytest.raises(BadInventory):
        load_inventory(str(path))


def test_shipped_inventories_are_valid():
    import os

    import dysfluent

    data_dir = os.path.join(os.path.dirname(dysfluent.__file__), "data")
    for name in ("demo_inventory.json", "mandarin_inventory.json"):
        inv = load_inventory(os.path.join(data_dir, name))
        assert len(inv.symbols) >= 2
