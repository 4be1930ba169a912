"""Byte-size constants and parsing. Decimal units unless asked otherwise."""

from __future__ import annotations

import re

KB, MB, GB, TB = 10**3, 10**6, 10**9, 10**12
KiB, MiB, GiB, TiB = 2**10, 2**20, 2**30, 2**40

_DECIMAL = {"": 1, "B": 1, "KB": KB, "MB": MB, "GB": GB, "TB": TB}
_BINARY = {"KIB": KiB, "MIB": MiB, "GIB": GiB, "TIB": TiB}
_SIZE_RE = re.compile(r"^\s*(\d+)\s*([A-Za-z]*)\s*$")


def parse_size(value, binary_units: bool = False) -> int:
    """Parse ``"100MB"``, ``"64MiB"`` or a plain integer into bytes.

    With ``binary_units`` the bare decimal suffixes (KB, MB, GB, TB) are read
    as their power-of-two counterparts. Explicit KiB/MiB/GiB/TiB are always
    binary. Fractional sizes are rejected so byte counts stay exact.
    """
    if isinstance(value, bool):
        raise ValueError(f"invalid size {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ValueError(f"size must be >= 0, got {value}")
        return value
    if not isinstance(value, str):
        raise ValueError(f"invalid size {value!r}: expected integer bytes or a string like '64MB'")
    m = _SIZE_RE.match(value)
    if not m:
        raise ValueError(f"invalid size {value!r}: expected an integer with optional unit suffix")
    number, unit = int(m.group(1)), m.group(2).upper()
    if unit in _BINARY:
        return number * _BINARY[unit]
    if unit not in _DECIMAL:
        raise ValueError(f"invalid size {value!r}: unknown unit {m.group(2)!r}")
    if binary_units and unit in ("KB", "MB", "GB", "TB"):
        return number * _BINARY[unit[0] + "IB"]
    return number * _DECIMAL[unit]
