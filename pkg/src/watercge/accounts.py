"""Social accounting matrix: data model, file I/O, validation, aggregation.

Orientation: ``flows[r, c]`` is the payment from column account ``c`` to row
account ``r``; an account is balanced when its row sum (receipts) equals its
column sum (outlays).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractError, SamFormatError

MACROS = ("C", "M", "I", "T", "F", "A", "CAP", "FF", "ROW")
SIGNED_MACROS = frozenset({"T"})
BALANCE_TOL = 1e-5


@dataclass(frozen=True)
class AccountId:
    code: str
    label: str
    macro: str

    def __post_init__(self):
        if self.macro not in MACROS:
            raise ContractError(f"account {self.code!r}: unknown macro set {self.macro!r}")


def _order_key(acc: AccountId):
    return (MACROS.index(acc.macro), acc.code)


@dataclass(frozen=True, eq=False)
class Sam:
    """Immutable labelled square flow matrix.

    Accounts are stored in canonical order (macro set order, then code), so two
    SAMs built from the same data compare equal regardless of input order.
    """

    accounts: tuple
    flows: np.ndarray
    year: int = 2018
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        accounts = tuple(self.accounts)
        flows = np.array(self.flows, dtype=float)
        n = len(accounts)
        if flows.ndim != 2 or flows.shape[0] != flows.shape[1]:
            raise ContractError(f"flow matrix must be square, got shape {flows.shape}")
        if flows.shape[0] != n:
            raise ContractError(f"{n} accounts but flow matrix is {flows.shape[0]}x{flows.shape[1]}")
        codes = [a.code for a in accounts]
        if len(set(codes)) != n:
            dup = sorted({c for c in codes if codes.count(c) > 1})
            raise ContractError(f"duplicate account codes: {dup}")
        if not np.all(np.isfinite(flows)):
            raise ContractError("flow matrix contains non-finite values")

        order = sorted(range(n), key=lambda k: _order_key(accounts[k]))
        accounts = tuple(accounts[k] for k in order)
        flows = flows[np.ix_(order, order)]

        signed = np.array([a.macro in SIGNED_MACROS for a in accounts])
        allowed = signed[:, None] | signed[None, :]
        bad = np.argwhere((flows < 0) & ~allowed)
        if len(bad):
            r, c = bad[0]
            raise ContractError(
                f"negative flow {flows[r, c]!r} at ({accounts[r].code}, {accounts[c].code}); "
                "only net-tax accounts may carry signed cells"
            )
        flows.setflags(write=False)
        object.__setattr__(self, "accounts", accounts)
        object.__setattr__(self, "flows", flows)
        object.__setattr__(self, "_index", {a.code: k for k, a in enumerate(accounts)})

    # -- lookups -----------------------------------------------------------
    @property
    def codes(self) -> list[str]:
        return [a.code for a in self.accounts]

    def __len__(self):
        return len(self.accounts)

    def __contains__(self, code):
        return code in self._index

    def index(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise ContractError(f"unknown account {code!r}") from None

    def account(self, code: str) -> AccountId:
        return self.accounts[self.index(code)]

    def macro(self, code: str) -> str:
        return self.account(code).macro

    def members(self, macro: str) -> list[str]:
        return [a.code for a in self.accounts if a.macro == macro]

    def cell(self, row: str, col: str) -> float:
        return float(self.flows[self.index(row), self.index(col)])

    def signed_mask(self) -> np.ndarray:
        signed = np.array([a.macro in SIGNED_MACROS for a in self.accounts])
        return signed[:, None] | signed[None, :]

    # -- totals ------------------------------------------------------------
    def row_sums(self) -> np.ndarray:
        return np.array([math.fsum(row) for row in self.flows])

    def col_sums(self) -> np.ndarray:
        return np.array([math.fsum(col) for col in self.flows.T])

    def row_sum(self, code: str) -> float:
        return math.fsum(self.flows[self.index(code)])

    def col_sum(self, code: str) -> float:
        return math.fsum(self.flows[:, self.index(code)])

    def grand_total(self) -> float:
        return math.fsum(self.flows.ravel())

    # -- derivation --------------------------------------------------------
    def with_flows(self, flows) -> "Sam":
        return Sam(self.accounts, flows, self.year)

    def with_cells(self, updates: Mapping[tuple, float]) -> "Sam":
        """Copy with the given ``{(row, col): value}`` cells replaced."""
        flows = self.flows.copy()
        for (r, c), v in updates.items():
            flows[self.index(r), self.index(c)] = v
        return self.with_flows(flows)

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame(self.flows, index=self.codes, columns=self.codes)

    def __eq__(self, other):
        if not isinstance(other, Sam):
            return NotImplemented
        return (
            self.accounts == other.accounts
            and self.year == other.year
            and np.array_equal(self.flows, other.flows)
        )

    __hash__ = None


# -- ingestion --------------------------------------------------------------

def _sniff_delimiter(path: Path) -> str:
    with open(path, newline="") as fh:
        first = fh.readline()
    for d in (",", ";", "\t", "|"):
        if d in first:
            return d
    return ","


def _read_rows(path: Path, delimiter: str | None):
    if not path.exists():
        raise SamFormatError("file not found", path)
    delim = delimiter or _sniff_delimiter(path)
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh, delimiter=delim)]


def load_account_metadata(path) -> list[AccountId]:
    """Read a ``code,label,macro`` table."""
    path = Path(path)
    rows = _read_rows(path, None)
    if not rows:
        raise SamFormatError("empty metadata file", path)
    header = [h.strip().lower() for h in rows[0]]
    try:
        ic, il, im = header.index("code"), header.index("label"), header.index("macro")
    except ValueError:
        raise SamFormatError("metadata header must contain code, label, macro", path, 1) from None
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        try:
            out.append(AccountId(row[ic].strip(), row[il].strip(), row[im].strip().upper()))
        except IndexError:
            raise SamFormatError("short metadata row", path, lineno) from None
        except ContractError as exc:
            raise SamFormatError(str(exc), path, lineno) from None
    return out


def save_account_metadata(accounts: Iterable[AccountId], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "label", "macro"])
        for a in accounts:
            w.writerow([a.code, a.label, a.macro])


def default_metadata_path(sam_path) -> Path:
    p = Path(sam_path)
    return p.with_name(p.stem + ".accounts.csv")


def load_sam(path, accounts=None, *, delimiter: str | None = None, year: int = 2018) -> Sam:
    """Load a SAM from delimiter-separated text.

    ``accounts`` is a metadata file path, a sequence of :class:`AccountId`, or
    ``None`` to use the sibling ``<stem>.accounts.csv``. Empty cells read as zero.
    """
    path = Path(path)
    if accounts is None:
        accounts = default_metadata_path(path)
    if isinstance(accounts, (str, Path)):
        accounts = load_account_metadata(accounts)
    meta = {}
    for a in accounts:
        if a.code in meta:
            raise SamFormatError(f"duplicate account code {a.code!r} in metadata")
        meta[a.code] = a

    rows = _read_rows(path, delimiter)
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise SamFormatError("empty SAM file", path)
    header = [h.strip() for h in rows[0][1:]]
    while header and header[-1] == "":
        header.pop()
    if len(set(header)) != len(header):
        dup = sorted({c for c in header if header.count(c) > 1})
        raise SamFormatError(f"duplicate account code(s) in header: {dup}", path, 1)
    body = rows[1:]
    if len(body) != len(header):
        raise SamFormatError(
            f"non-square layout: {len(header)} columns but {len(body)} rows", path
        )
    n = len(header)
    col_pos = {c: k for k, c in enumerate(header)}
    flows = np.zeros((n, n))
    seen = set()
    for lineno, row in enumerate(body, start=2):
        code = row[0].strip()
        if code in seen:
            raise SamFormatError(f"duplicate account code {code!r}", path, lineno)
        seen.add(code)
        if code not in col_pos:
            raise SamFormatError(f"row account {code!r} missing from header", path, lineno)
        cells = row[1:]
        if len(cells) > n and any(c.strip() for c in cells[n:]):
            raise SamFormatError(f"row {code!r} has more cells than header columns", path, lineno)
        for k, text in enumerate(cells[:n]):
            text = text.strip()
            if not text:
                continue
            try:
                flows[col_pos[code], k] = float(text)
            except ValueError:
                raise SamFormatError(
                    f"non-numeric cell {text!r} at ({code}, {header[k]})", path, lineno
                ) from None
    missing = [c for c in header if c not in meta]
    if missing:
        raise SamFormatError(f"no macro tag for account(s) {missing}", path)
    try:
        return Sam(tuple(meta[c] for c in header), flows, year)
    except SamFormatError:
        raise
    except ContractError as exc:
        raise SamFormatError(str(exc), path) from None


def save_sam(sam: Sam, path, *, metadata_path=None, delimiter: str = ",") -> None:
    """Write flows with shortest round-trip float text; also writes metadata."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow([""] + sam.codes)
        for code, row in zip(sam.codes, sam.flows):
            w.writerow([code] + [repr(float(v)) for v in row])
    save_account_metadata(sam.accounts, metadata_path or default_metadata_path(path))


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class Discrepancy:
    account: str
    row_sum: float
    col_sum: float

    @property
    def gap(self) -> float:
        return self.row_sum - self.col_sum


def gaps(sam: Sam) -> dict[str, float]:
    """Row sum minus column sum for every account."""
    rs, cs = sam.row_sums(), sam.col_sums()
    return {code: float(r - c) for code, r, c in zip(sam.codes, rs, cs)}


def validate(sam: Sam, tol: float = BALANCE_TOL) -> list[Discrepancy]:
    rs, cs = sam.row_sums(), sam.col_sums()
    return [
        Discrepancy(code, float(r), float(c))
        for code, r, c in zip(sam.codes, rs, cs)
        if abs(r - c) > tol
    ]


# -- aggregation -------------------------------------------------------------

@dataclass(frozen=True)
class AggregationMap:
    entries: Mapping[str, str]
    preserved: frozenset = frozenset()
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "preserved", frozenset(self.preserved))
        targets = {}
        for d, m in self.entries.items():
            targets.setdefault(m, []).append(d)
        for d in self.preserved:
            if d not in self.entries:
                raise ContractError(f"preserved account {d!r} is not mapped")
            group = targets[self.entries[d]]
            if len(group) > 1:
                raise ContractError(
                    f"preserved account {d!r} is merged with {sorted(set(group) - {d})}"
                )

    @classmethod
    def identity(cls, sam: Sam) -> "AggregationMap":
        return cls({c: c for c in sam.codes})

    def require_preserved(self, codes: Iterable[str]) -> None:
        missing = sorted(set(codes) - self.preserved)
        if missing:
            raise ContractError(f"accounts must be preserved by the aggregation: {missing}")


def load_aggregation_map(path) -> AggregationMap:
    path = Path(path)
    rows = _read_rows(path, None)
    header = [h.strip().lower() for h in rows[0]]
    try:
        idet, imod = header.index("detailed_code"), header.index("model_code")
    except ValueError:
        raise SamFormatError("map header must contain detailed_code, model_code", path, 1) from None
    ipres = header.index("preserved_flag") if "preserved_flag" in header else None
    ilab = header.index("model_label") if "model_label" in header else None
    entries, preserved, labels = {}, set(), {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        d, m = row[idet].strip(), row[imod].strip()
        if d in entries:
            raise SamFormatError(f"detailed account {d!r} mapped twice", path, lineno)
        entries[d] = m
        if ipres is not None and row[ipres].strip().lower() in {"1", "true", "yes", "y"}:
            preserved.add(d)
        if ilab is not None and ilab < len(row) and row[ilab].strip():
            labels[m] = row[ilab].strip()
    return AggregationMap(entries, frozenset(preserved), labels)


def aggregate(sam: Sam, amap: AggregationMap) -> Sam:
    """Merge detailed accounts into model accounts by summing their cells."""
    unmapped = [c for c in sam.codes if c not in amap.entries]
    if unmapped:
        raise ContractError(f"unmapped account(s): {unmapped}")

    groups: dict[str, list[str]] = {}
    for code in sam.codes:
        groups.setdefault(amap.entries[code], []).append(code)

    new_accounts = []
    for model_code, members in groups.items():
        macros = {sam.macro(m) for m in members}
        if len(macros) != 1:
            raise ContractError(
                f"model account {model_code!r} merges different macro sets {sorted(macros)}"
            )
        if model_code in amap.labels:
            label = amap.labels[model_code]
        elif len(members) == 1:
            label = sam.account(members[0]).label
        else:
            label = model_code
        new_accounts.append(AccountId(model_code, label, macros.pop()))

    pos = {a.code: k for k, a in enumerate(new_accounts)}
    n = len(new_accounts)
    # collect constituent cells then fsum, so integer-valued SAMs aggregate exactly
    buckets = [[[] for _ in range(n)] for _ in range(n)]
    target = [pos[amap.entries[c]] for c in sam.codes]
    flows = sam.flows
    for i, ti in enumerate(target):
        row = flows[i]
        for j, tj in enumerate(target):
            if row[j] != 0.0:
                buckets[ti][tj].append(row[j])
    out = np.array([[math.fsum(b) for b in brow] for brow in buckets]) if n else np.zeros((0, 0))
    return Sam(tuple(new_accounts), out, sam.year)
