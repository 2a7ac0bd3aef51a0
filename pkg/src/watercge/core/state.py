"""Variable layout and the solution vector."""

from __future__ import annotations

import csv

import numpy as np

from ..errors import ContractError

QUANTITY_BLOCKS = frozenset(
    {"QA", "QVA", "QINTA", "QCW", "QF", "QINT", "QXAC", "QX", "QD", "QE", "QM", "QQ",
     "QMG", "QCONS", "QINV"}
)
PRICE_BLOCKS = frozenset(
    {"PA", "PVA", "PINTA", "PCW", "WFM", "WFS", "PXAC", "PX", "PDS", "PDD", "PE", "PM",
     "PQ", "PMG", "PINV", "EXR", "CPI"}
)
VALUE_BLOCKS = frozenset(
    {"YF", "TAXR", "Y", "EXP", "SAV", "KINC", "LEND", "BORR", "TOTBORR", "WALRAS"}
)
POSITIVE_FLOOR = 1e-9
_NONNEG_VALUES = frozenset({"EXP", "YF"})


def block_of(key) -> str:
    return key[0]


def is_nominal(key) -> bool:
    return key[0] not in QUANTITY_BLOCKS


class Layout:
    """Ordered variable keys such as ``("QF", "LAB", "CROPI")``."""

    def __init__(self, keys):
        self.keys = tuple(keys)
        self._index = {k: n for n, k in enumerate(self.keys)}
        if len(self._index) != len(self.keys):
            raise ContractError("duplicate variable keys")
        for k in self.keys:
            if k[0] not in QUANTITY_BLOCKS | PRICE_BLOCKS | VALUE_BLOCKS:
                raise ContractError(f"unknown variable block {k[0]!r}")

    def __len__(self):
        return len(self.keys)

    def __contains__(self, key):
        return key in self._index

    def __eq__(self, other):
        return isinstance(other, Layout) and self.keys == other.keys

    def index(self, key) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"no variable {key!r} in this model") from None

    def x_min(self) -> np.ndarray:
        lo = np.empty(len(self.keys))
        for n, k in enumerate(self.keys):
            if k[0] in VALUE_BLOCKS and k[0] not in _NONNEG_VALUES:
                lo[n] = -np.inf
            elif k[0] in _NONNEG_VALUES:
                lo[n] = 0.0
            else:
                lo[n] = POSITIVE_FLOOR
        return lo

    def nominal_mask(self) -> np.ndarray:
        return np.array([is_nominal(k) for k in self.keys])

    def block_indices(self, name) -> list[int]:
        return [n for n, k in enumerate(self.keys) if k[0] == name]


class SolutionState:
    """Values of every endogenous variable, addressed by key."""

    def __init__(self, layout: Layout, values):
        values = np.array(values, dtype=float)
        if values.shape != (len(layout),):
            raise ContractError(f"state has {values.size} values for {len(layout)} variables")
        values.setflags(write=False)
        self.layout = layout
        self.x = values

    def __getitem__(self, key) -> float:
        return float(self.x[self.layout.index(key)])

    def get(self, key, default=0.0) -> float:
        return self[key] if key in self.layout else default

    def __contains__(self, key):
        return key in self.layout

    def block(self, name) -> dict:
        return {k[1:] if len(k) > 2 else (k[1] if len(k) == 2 else None): float(self.x[n])
                for n, k in enumerate(self.layout.keys) if k[0] == name}

    def with_values(self, values) -> "SolutionState":
        return SolutionState(self.layout, values)

    def replace(self, updates: dict) -> "SolutionState":
        x = self.x.copy()
        for k, v in updates.items():
            x[self.layout.index(k)] = v
        return SolutionState(self.layout, x)

    def x_min(self) -> np.ndarray:
        return self.layout.x_min()

    def rows(self):
        for k, v in zip(self.layout.keys, self.x):
            yield k[0], ".".join(k[1:]), float(v)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["variable", "index", "value"])
            for name, idx, v in self.rows():
                w.writerow([name, idx, repr(v)])
