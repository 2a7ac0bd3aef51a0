"""Generate the bundled synthetic SAM fixtures.

The model SAM is assembled so that every account balances by construction:
industry columns close on factor payments, commodity rows close on final
demand, agents close on savings, capital accounts close on borrowing and the
RoW account closes on RoW lending. Run from the repository root:

    python tools/build_fixtures.py
"""

from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from watercge.accounts import AccountId, Sam, save_sam, validate  # noqa: E402

DATA = ROOT / "src" / "watercge" / "data"

COMMODITIES = {
    "CROPS": "Crops", "ANIMAL": "Animal products", "MINERALS": "Minerals and fuels",
    "ELEC": "Electricity", "WATERDEL": "Water delivery", "SEWAGE": "Sewage services",
    "PAPERP": "Paper products", "METALP": "Metal products", "FOODP": "Food products",
    "CONST": "Construction", "TRADESRV": "Trade services", "TRANSPORT": "Transport services",
    "BUSSRV": "Business services", "PUBSERV": "Public services", "OTHMFG": "Other manufactures",
}
# industry: (label, gross output, make shares, intermediate share, production tax, labour share of VA)
INDUSTRIES = {
    "CROP": ("Crop production", 4000.0, {"CROPS": 1.0}, 0.45, 0.01, 0.27),
    "LIVE": ("Animal production", 2500.0, {"ANIMAL": 1.0}, 0.60, 0.01, 0.40),
    "MINE": ("Mining and quarrying", 5000.0, {"MINERALS": 1.0}, 0.35, 0.01, 0.30),
    "POWER": ("Power generation", 3000.0, {"ELEC": 1.0}, 0.35, 0.01, 0.30),
    "WATER": ("Water sectors", 800.0, {"WATERDEL": 0.6, "SEWAGE": 0.4}, 0.40, 0.01, 0.45),
    "PAPER": ("Paper manufacturing", 5000.0, {"PAPERP": 0.9, "OTHMFG": 0.1}, 0.55, 0.01, 0.30),
    "METAL": ("Primary metals", 4000.0, {"METALP": 0.85, "OTHMFG": 0.15}, 0.60, 0.01, 0.50),
    "FOOD": ("Food manufacturing", 5000.0, {"FOODP": 0.95, "ANIMAL": 0.05}, 0.70, 0.02, 0.55),
    "CONSTR": ("Construction", 6000.0, {"CONST": 1.0}, 0.55, 0.01, 0.65),
    "TRADE": ("Trade and transport", 7000.0, {"TRADESRV": 0.7, "TRANSPORT": 0.3}, 0.35, 0.01, 0.65),
    "SERV": ("Services", 20000.0, {"BUSSRV": 0.8, "PUBSERV": 0.2}, 0.35, 0.01, 0.65),
}
BASE_USE = {
    "ELEC": 0.06, "WATERDEL": 0.01, "SEWAGE": 0.01, "TRADESRV": 0.08, "TRANSPORT": 0.08, "BUSSRV": 0.30,
    "OTHMFG": 0.10, "METALP": 0.06, "PAPERP": 0.04, "MINERALS": 0.04, "CONST": 0.02,
    "FOODP": 0.02, "PUBSERV": 0.02,
}
EXTRA_USE = {
    "CROP": {"CROPS": 0.15, "MINERALS": 0.05},
    "LIVE": {"CROPS": 0.35, "ANIMAL": 0.05},
    "FOOD": {"CROPS": 0.25, "ANIMAL": 0.30},
    "PAPER": {"PAPERP": 0.20},
    "METAL": {"MINERALS": 0.30, "METALP": 0.15},
    "POWER": {"MINERALS": 0.20},
    "CONSTR": {"METALP": 0.20, "CONST": 0.05, "OTHMFG": 0.10, "MINERALS": 0.10},
    "SERV": {"BUSSRV": 0.20},
    "TRADE": {"TRANSPORT": 0.10},
}
EXPORT_SHARE = {"CROPS": 0.30, "ANIMAL": 0.20, "MINERALS": 0.50, "ELEC": 0.10, "PAPERP": 0.30,
                "METALP": 0.50, "FOODP": 0.25, "TRADESRV": 0.02, "TRANSPORT": 0.10, "BUSSRV": 0.08,
                "OTHMFG": 0.30}
IMPORT_SHARE = {"CROPS": 0.15, "ANIMAL": 0.10, "MINERALS": 0.30, "ELEC": 0.03, "PAPERP": 0.20,
                "METALP": 0.60, "FOODP": 0.25, "TRANSPORT": 0.10, "BUSSRV": 0.10, "OTHMFG": 1.50}
TAX_RATE = {"CROPS": 0.02, "ANIMAL": 0.02, "MINERALS": 0.03, "ELEC": 0.03, "WATERDEL": 0.01,
            "PAPERP": 0.03, "METALP": 0.03, "FOODP": 0.05, "TRADESRV": 0.02, "TRANSPORT": 0.03,
            "BUSSRV": 0.04, "OTHMFG": 0.04, "CONST": 0.02}
MARGIN_RATE = {"CROPS": 0.12, "ANIMAL": 0.10, "MINERALS": 0.05, "PAPERP": 0.08, "METALP": 0.08,
               "FOODP": 0.15, "OTHMFG": 0.15}
MARGIN_SERVICES = {"TRADESRV": 0.8, "TRANSPORT": 0.2}
GFCF_SHARE = {"CONST": 0.85, "METALP": 0.30, "OTHMFG": 0.25, "BUSSRV": 0.05, "TRADESRV": 0.05}
INVT_SHARE = {"CROPS": 0.02, "METALP": 0.02, "OTHMFG": 0.02, "FOODP": 0.02}
CONS_SPLIT = {
    "PUBSERV": {"GOV": 0.9, "NPSH": 0.1},
    "BUSSRV": {"HH": 0.75, "GOV": 0.15, "NPSH": 0.10},
    "TRANSPORT": {"HH": 0.9, "GOV": 0.1},
    "ELEC": {"HH": 0.9, "GOV": 0.05, "NPSH": 0.05},
}
KAP_SPLIT = {"HH": 0.25, "CORP": 0.60, "GOV": 0.10, "NPSH": 0.05}
GFCF_FUNDING = {"HH": 0.35, "CORP": 0.45, "GOV": 0.15, "NPSH": 0.05}
LEND_RATE = {"HH": 0.5, "CORP": 0.2, "NPSH": 0.1, "GOV": 0.1}
SAVINGS_TARGET = {"NPSH": 0.05, "GOV": 0.03}
AGENTS = {"HH": "Households", "NPSH": "Non-profits serving households", "CORP": "Corporations",
          "GOV": "Government"}
CAPITAL = {"K_HH": "HH capital", "K_NPSH": "NPSH capital", "K_CORP": "CORP capital",
           "K_GOV": "GOV capital", "GFCF": "Gross fixed capital formation", "INVT": "Inventory change"}


class Builder:
    def __init__(self, accounts):
        self.accounts = accounts
        self.idx = {a.code: k for k, a in enumerate(accounts)}
        self.F = np.zeros((len(accounts), len(accounts)))

    def add(self, r, c, v):
        self.F[self.idx[r], self.idx[c]] += v

    def get(self, r, c):
        return self.F[self.idx[r], self.idx[c]]

    def row(self, r):
        return math.fsum(self.F[self.idx[r]])

    def col(self, c):
        return math.fsum(self.F[:, self.idx[c]])


def model_sam() -> Sam:
    acc = [AccountId(c, l, "C") for c, l in COMMODITIES.items()]
    acc += [AccountId("MGD", "Trade and transport margins", "M")]
    acc += [AccountId(i, v[0], "I") for i, v in INDUSTRIES.items()]
    acc += [AccountId("TXD", "Net commodity taxes", "T"), AccountId("TXP", "Net industry taxes", "T")]
    acc += [AccountId("LAB", "Labour", "F"), AccountId("KAP", "Capital", "F")]
    acc += [AccountId(a, l, "A") for a, l in AGENTS.items()]
    acc += [AccountId(k, l, "CAP") for k, l in CAPITAL.items()]
    acc += [AccountId("FF", "Financial flows", "FF"), AccountId("ROW", "Rest of the world", "ROW")]
    b = Builder(acc)
    C = list(COMMODITIES)

    # industries: make matrix, intermediates, production tax, factors
    for i, (_, x, make, ishare, tp, lab) in INDUSTRIES.items():
        for c, s in make.items():
            b.add(i, c, x * s)
        w = dict(BASE_USE)
        for c, s in EXTRA_USE.get(i, {}).items():
            w[c] = w.get(c, 0.0) + s
        tot = math.fsum(w.values())
        for c, s in w.items():
            b.add(c, i, x * ishare * s / tot)
        b.add("TXP", i, x * tp)
        va = x * (1 - ishare - tp)
        b.add("LAB", i, va * lab)
        b.add("KAP", i, va * (1 - lab))

    # commodities: trade, taxes, margins, final demand. Margin services are
    # themselves commodity uses, so iterate the margin total to a fixed point.
    base_uses = {c: b.row(c) for c in C}
    services = {c: 0.0 for c in C}
    for _ in range(100):
        trade = {}
        for c in C:
            qx = b.col(c)
            qe = qx * EXPORT_SHARE.get(c, 0.0)
            qd = qx - qe
            qm = qx * IMPORT_SHARE.get(c, 0.0)
            t, m = TAX_RATE.get(c, 0.0), MARGIN_RATE.get(c, 0.0)
            uses = base_uses[c] + services[c]
            # raise imports until final demand is at least 5% of total supply
            need = 0.05 * (1 + t + m) * (qd + qm) + uses - (1 + t + m) * (qd + qm)
            if need > 0:
                qm += need / (0.95 * (1 + t + m))
            trade[c] = (qe, qd, qm, t, m)
        mgd = math.fsum(m * (qd + qm) for qe, qd, qm, t, m in trade.values())
        new = {c: mgd * MARGIN_SERVICES.get(c, 0.0) for c in C}
        if max(abs(new[c] - services[c]) for c in C) < 1e-12:
            break
        services = new
    fd = {}
    for c in C:
        qe, qd, qm, t, m = trade[c]
        b.add(c, "ROW", qe)
        b.add("ROW", c, qm)
        b.add("TXD", c, t * (qd + qm))
        b.add("MGD", c, m * (qd + qm))
        if services[c]:
            b.add(c, "MGD", services[c])
        fd[c] = (1 + t + m) * (qd + qm) - base_uses[c] - services[c]
    for c in C:
        if fd[c] <= 0:
            raise SystemExit(f"negative final demand for {c}: {fd[c]}")
        inv = fd[c] * GFCF_SHARE.get(c, 0.0)
        invt = fd[c] * INVT_SHARE.get(c, 0.0)
        b.add(c, "GFCF", inv)
        b.add(c, "INVT", invt)
        pool = fd[c] - inv - invt
        for a, s in CONS_SPLIT.get(c, {"HH": 1.0}).items():
            b.add(c, a, pool * s)

    # factor and tax income
    b.add("HH", "LAB", b.row("LAB"))
    kap = b.row("KAP")
    for a, s in KAP_SPLIT.items():
        b.add(a, "KAP", kap * s)
    b.add("GOV", "TXD", b.row("TXD"))
    b.add("GOV", "TXP", b.row("TXP"))

    # transfers
    b.add("HH", "ROW", 100.0)
    b.add("GOV", "ROW", 50.0)
    y_corp = b.row("CORP")
    b.add("HH", "CORP", 0.5 * y_corp)
    b.add("GOV", "CORP", 0.2 * y_corp)
    b.add("ROW", "CORP", 0.05 * y_corp)
    b.add("HH", "GOV", 0.1 * b.row("LAB"))
    b.add("ROW", "GOV", 30.0)
    cons = {a: math.fsum(b.get(c, a) for c in C) for a in AGENTS}
    y_npsh = cons["NPSH"] / (1 - SAVINGS_TARGET["NPSH"])
    b.add("ROW", "HH", 0.005 * (b.row("HH")))
    b.add("NPSH", "HH", 0.01 * b.row("HH"))
    b.add("NPSH", "GOV", y_npsh - b.row("NPSH"))
    gov_out = b.col("GOV")
    y_gov = gov_out / (1 - SAVINGS_TARGET["GOV"])
    b.add("GOV", "HH", y_gov - b.row("GOV"))
    for a in AGENTS:
        sav = b.row(a) - b.col(a)
        if sav <= 0:
            raise SystemExit(f"agent {a} dissaves: {sav}")
        b.add(f"K_{a}", a, sav)

    # capital accounts
    b.add("K_CORP", "K_GOV", 40.0)
    b.add("K_HH", "K_GOV", 20.0)
    b.add("K_GOV", "ROW", 10.0)
    b.add("ROW", "K_CORP", 15.0)
    for a, s in GFCF_FUNDING.items():
        b.add("GFCF", f"K_{a}", b.col("GFCF") * s)
    b.add("INVT", "K_CORP", b.col("INVT"))
    for a in AGENTS:
        k = f"K_{a}"
        lend = LEND_RATE[a] * b.get(k, a)
        need = b.col(k) + lend - b.row(k)
        floor = 0.05 * b.get(k, a)
        if need < floor:
            lend += floor - need
            need = floor
        b.add("FF", k, lend)
        b.add(k, "FF", need)
    b.add("ROW", "FF", 40.0)
    rowlend = b.row("ROW") - b.col("ROW")
    if rowlend <= 0:
        raise SystemExit(f"RoW lending must be positive, got {rowlend}")
    b.add("FF", "ROW", rowlend)
    sam = Sam(tuple(acc), b.F)
    bad = validate(sam)
    if bad:
        raise SystemExit(f"fixture does not balance: {bad}")
    return sam


# -- 20-account accounting fixture ------------------------------------------------

MINI_ACCOUNTS = [
    ("C_AGR", "Agricultural goods", "C"), ("C_WAT", "Water delivery", "C"), ("C_FOOD", "Food", "C"),
    ("C_MFG1", "Light manufactures", "C"), ("C_MFG2", "Heavy manufactures", "C"),
    ("C_SRV1", "Private services", "C"), ("C_SRV2", "Public services", "C"),
    ("I_AGR", "Agriculture", "I"), ("I_WAT", "Water utilities", "I"), ("I_FOOD", "Food processing", "I"),
    ("I_MFG1", "Light manufacturing", "I"), ("I_MFG2", "Heavy manufacturing", "I"),
    ("I_SRV1", "Private service industries", "I"), ("I_SRV2", "Public service industries", "I"),
    ("LAB", "Labour", "F"), ("KAP", "Capital", "F"),
    ("HH", "Households", "A"), ("GOV", "Government", "A"),
    ("K_HH", "Household capital", "CAP"), ("ROW", "Rest of the world", "ROW"),
]
# closed payment loops with integer amounts: each loop keeps every account balanced
MINI_LOOPS = [
    (["I_AGR", "C_AGR", "HH", "LAB"], 40), (["I_AGR", "C_AGR", "I_FOOD", "C_FOOD", "HH", "KAP"], 25),
    (["I_WAT", "C_WAT", "HH", "LAB"], 6), (["I_WAT", "C_WAT", "I_AGR", "C_AGR", "HH", "KAP"], 3),
    (["I_FOOD", "C_FOOD", "HH", "LAB"], 30), (["I_MFG1", "C_MFG1", "HH", "LAB"], 35),
    (["I_MFG2", "C_MFG2", "I_MFG1", "C_MFG1", "HH", "KAP"], 20), (["I_MFG2", "C_MFG2", "ROW", "C_MFG1", "HH", "LAB"], 12),
    (["I_SRV1", "C_SRV1", "HH", "LAB"], 60), (["I_SRV1", "C_SRV1", "I_MFG2", "C_MFG2", "HH", "KAP"], 9),
    (["I_SRV2", "C_SRV2", "GOV", "HH", "LAB"], 28), (["I_SRV2", "C_SRV2", "GOV", "HH", "KAP"], 7),
    (["I_MFG2", "C_MFG2", "K_HH", "HH", "KAP"], 15), (["I_SRV1", "C_SRV1", "K_HH", "GOV", "HH", "LAB"], 8),
    (["I_AGR", "C_AGR", "ROW", "C_FOOD", "HH", "LAB"], 5), (["K_HH", "ROW", "C_MFG2", "I_MFG2", "C_MFG1", "HH", "KAP"], 0),
    (["I_WAT", "C_WAT", "I_SRV1", "C_SRV1", "HH", "LAB"], 2), (["I_WAT", "C_WAT", "GOV", "HH", "KAP"], 1),
    (["ROW", "HH", "LAB", "I_SRV1", "C_SRV1"], 4),
]


def mini_sam() -> Sam:
    acc = tuple(AccountId(c, l, m) for c, l, m in MINI_ACCOUNTS)
    idx = {a.code: k for k, a in enumerate(acc)}
    F = np.zeros((len(acc), len(acc)))
    for loop, amount in MINI_LOOPS:
        # money travels from each account to the previous one: the next account pays the current
        for k, payee in enumerate(loop):
            payer = loop[(k + 1) % len(loop)]
            F[idx[payee], idx[payer]] += amount
    return Sam(acc, F)


def mini_unbalanced(sam: Sam) -> Sam:
    # statistical discrepancies on agent and capital accounts only
    return sam.with_cells({("K_HH", "HH"): sam.cell("K_HH", "HH") + 4.0,
                           ("HH", "GOV"): sam.cell("HH", "GOV") + 2.0})


MINI_MAP = {
    "C_AGR": "C_AGF", "C_FOOD": "C_AGF", "C_WAT": "C_WAT", "C_MFG1": "C_MFG", "C_MFG2": "C_MFG",
    "C_SRV1": "C_SRV", "C_SRV2": "C_SRV", "I_AGR": "I_AGF", "I_FOOD": "I_AGF", "I_WAT": "I_WAT",
    "I_MFG1": "I_MFG", "I_MFG2": "I_MFG", "I_SRV1": "I_SRV", "I_SRV2": "I_SRV", "LAB": "VA",
    "KAP": "VA", "HH": "DOM", "GOV": "DOM", "K_HH": "K_HH", "ROW": "ROW",
}
MINI_LABELS = {"C_AGF": "Agri-food goods", "C_MFG": "Manufactures", "C_SRV": "Services",
               "I_AGF": "Agri-food industries", "I_MFG": "Manufacturing", "I_SRV": "Service industries",
               "VA": "Value added", "DOM": "Domestic institutions"}


def write_map(path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["detailed_code", "model_code", "preserved_flag", "model_label"])
        for d, m in MINI_MAP.items():
            w.writerow([d, m, int(d in ("C_WAT", "I_WAT")), MINI_LABELS.get(m, "")])


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    sam = model_sam()
    save_sam(sam, DATA / "model_sam.csv")
    mini = mini_sam()
    if validate(mini):
        raise SystemExit("mini fixture does not balance")
    save_sam(mini, DATA / "mini_sam.csv")
    save_sam(mini_unbalanced(mini), DATA / "mini_sam_unbalanced.csv")
    write_map(DATA / "mini_map.csv")
    print(f"model SAM: {len(sam)} accounts, grand total {sam.grand_total()!r}")
    print(f"mini SAM: {len(mini)} accounts, grand total {mini.grand_total()!r}")
    for a in ("HH", "NPSH", "CORP", "GOV"):
        print(f"  {a}: income {sam.row_sum(a):.1f} savings {sam.cell('K_' + a, a):.1f}")
    print(f"  RoW lending {sam.cell('FF', 'ROW'):.1f}")


if __name__ == "__main__":
    main()
