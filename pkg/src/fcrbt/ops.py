"""Shared operation vocabulary: the three map operations and their wire tuple."""

from __future__ import annotations

import enum
from typing import Optional, Tuple


class OpKind(enum.IntEnum):
    GET = 0
    INSERT = 1
    DELETE = 2


# (kind, key, value); value is meaningful for INSERT only.
Op = Tuple[OpKind, int, int]

# get -> value or None, insert/delete -> "logical map changed"
OpResult = Optional[int]
