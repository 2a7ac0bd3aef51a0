"""Sparse equation systems built from signed monomial terms.

Each equation is ``sum_t coef_t * prod_k x[v_tk] ** p_tk``. Every block of the
model (CES aggregators in power form, first-order conditions, zero-profit and
market-clearing identities) fits this shape, so residuals and exact Jacobians
come from one vectorised evaluator.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..errors import InvariantError


class SystemBuilder:
    def __init__(self, layout):
        self.layout = layout
        self._eqs: "OrderedDict[tuple, list]" = OrderedDict()

    def equation(self, name: tuple, terms) -> None:
        """``terms``: iterable of ``(coef, {var_key: power, ...})``; an empty dict is a constant."""
        if name in self._eqs:
            raise InvariantError(f"duplicate equation {name}")
        compiled = []
        for coef, factors in terms:
            if coef == 0.0:
                continue
            merged = {}
            for key, power in factors.items():
                idx = self.layout.index(key)
                merged[idx] = merged.get(idx, 0.0) + power
            merged = {k: p for k, p in merged.items() if p != 0.0}
            compiled.append((float(coef), merged))
        self._eqs[name] = compiled

    def build(self, reference=None) -> "CompiledSystem":
        return CompiledSystem(self.layout, list(self._eqs.keys()), list(self._eqs.values()), reference)


class CompiledSystem:
    def __init__(self, layout, names, equations, reference=None):
        self.layout = layout
        self.names = names
        self.n = len(layout)
        self.m = len(names)
        nterm = sum(len(e) for e in equations)
        width = max((len(f) for e in equations for _, f in e), default=1) or 1
        pad = self.n  # index of a constant 1.0 appended to x
        eq_of = np.empty(nterm, dtype=np.int64)
        coef = np.empty(nterm)
        var = np.full((nterm, width), pad, dtype=np.int64)
        power = np.zeros((nterm, width))
        t = 0
        for e, terms in enumerate(equations):
            for c, factors in terms:
                eq_of[t] = e
                coef[t] = c
                for k, (v, p) in enumerate(sorted(factors.items())):
                    var[t, k] = v
                    power[t, k] = p
                t += 1
        self._eq = eq_of
        self._coef = coef
        self._var = var
        self._pow = power
        self._real = var != pad
        self._int_pow = np.all(power == np.round(power), axis=None)
        self.scale = np.ones(self.m)
        if reference is not None:
            self.scale = self.term_scale(reference)

    # structural information ------------------------------------------------
    def incidence(self) -> list[set]:
        """Variables appearing in each equation."""
        out = [set() for _ in range(self.m)]
        for e, row, mask in zip(self._eq, self._var, self._real):
            out[e].update(int(v) for v in row[mask])
        return out

    def incidence_matrix(self) -> np.ndarray:
        s = np.zeros((self.m, self.n), dtype=bool)
        for e, vs in enumerate(self.incidence()):
            s[e, list(vs)] = True
        return s

    def term_scale(self, x) -> np.ndarray:
        vals = np.abs(self._terms(x))
        scale = np.zeros(self.m)
        np.maximum.at(scale, self._eq, vals)
        return np.where(scale > 1e-300, scale, 1.0)

    # evaluation --------------------------------------------------------------
    def _powers(self, x):
        xe = np.append(np.asarray(x, dtype=float), 1.0)
        base = xe[self._var]
        with np.errstate(invalid="ignore", divide="ignore"):
            return base, np.power(base, self._pow)

    def _terms(self, x):
        _, pw = self._powers(x)
        return self._coef * np.prod(pw, axis=1)

    def residual(self, x) -> np.ndarray:
        r = np.bincount(self._eq, weights=self._terms(x), minlength=self.m)
        return r / self.scale

    def jacobian(self, x) -> np.ndarray:
        base, pw = self._powers(x)
        nterm, width = pw.shape
        rows, cols, vals = [], [], []
        for k in range(width):
            mask = self._real[:, k]
            if not mask.any():
                continue
            others = np.ones(nterm)
            for j in range(width):
                if j != k:
                    others = others * pw[:, j]
            p = self._pow[:, k]
            with np.errstate(invalid="ignore", divide="ignore"):
                dk = np.where(p == 1.0, 1.0, p * np.power(base[:, k], p - 1.0))
            d = self._coef * dk * others
            rows.append(self._eq[mask])
            cols.append(self._var[mask, k])
            vals.append(d[mask])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        J = np.bincount(rows * self.n + cols, weights=vals, minlength=self.m * self.n)
        return J.reshape(self.m, self.n) / self.scale[:, None]
