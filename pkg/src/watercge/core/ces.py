"""Closed-form CES / CET / LES building blocks used by calibration and tests."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError


def ces_rho(sigma: float) -> float:
    """CES exponent from an elasticity of substitution (sigma = 1 / (1 + rho))."""
    if sigma <= 0 or sigma == 1:
        raise ContractError(f"CES elasticity must be positive and != 1, got {sigma}")
    return 1.0 / sigma - 1.0


def cet_rho(sigma: float) -> float:
    """CET exponent from an elasticity of transformation (sigma = 1 / (rho - 1))."""
    if sigma <= 0:
        raise ContractError(f"CET elasticity must be positive, got {sigma}")
    return 1.0 / sigma + 1.0


def _check_rho(rho):
    if rho <= -1 or rho == 0:
        raise ContractError(f"CES exponent must lie in (-1, inf) \\ {{0}}, got {rho}")


def eval_ces(alpha, delta, rho, inputs):
    """``alpha * (sum delta_k x_k^-rho)^(-1/rho)``."""
    _check_rho(rho)
    delta = np.asarray(delta, dtype=float)
    x = np.asarray(inputs, dtype=float)
    if np.any(x < 0):
        raise ContractError("CES inputs must be non-negative")
    if np.any(x == 0):
        if rho > 0:
            # complementary inputs: a missing input shuts the nest down
            raise ContractError("zero input in a CES nest with rho > 0 drives the aggregate to zero")
        x = np.where(x == 0, np.finfo(float).tiny, x)
    return float(alpha * np.sum(delta * x ** (-rho)) ** (-1.0 / rho))


def eval_cet(alpha, delta, rho, qe, qd):
    """``alpha * (delta QE^rho + (1 - delta) QD^rho)^(1/rho)`` with rho > 1."""
    if rho <= 1:
        raise ContractError(f"CET exponent must exceed 1, got {rho}")
    if qe < 0 or qd < 0:
        raise ContractError("CET arguments must be non-negative")
    return float(alpha * (delta * qe**rho + (1 - delta) * qd**rho) ** (1.0 / rho))


def ces_calibrate(prices, quantities, rho, output=None):
    """Share and scale parameters reproducing a benchmark through the FOCs.

    Returns ``(alpha, delta)``; ``delta`` sums to one. When ``output`` is None the
    aggregate is taken as the benchmark cost at unit output price.
    """
    _check_rho(rho)
    p = np.asarray(prices, dtype=float)
    q = np.asarray(quantities, dtype=float)
    w = p * q ** (1 + rho)
    delta = w / w.sum()
    if output is None:
        output = float(p @ q)
    alpha = output / np.sum(delta * q ** (-rho)) ** (-1.0 / rho)
    return float(alpha), delta


def cet_calibrate(pe, qe, pd, qd, rho, output=None):
    """(alpha, delta) of the export/domestic CET at the benchmark."""
    a = pe * qe ** (1 - rho)
    b = pd * qd ** (1 - rho)
    delta = a / (a + b)
    if output is None:
        output = pe * qe + pd * qd
    alpha = output / (delta * qe**rho + (1 - delta) * qd**rho) ** (1.0 / rho)
    return float(alpha), float(delta)


def ces_input_ratio(delta1, delta2, rho, price1, price2):
    """Cost-minimising x1/x2 for a two-input CES nest."""
    return ((delta1 * price2) / (delta2 * price1)) ** (1.0 / (1.0 + rho))


def household_demand(disposable, prices, gamma, beta):
    """Linear expenditure system: subsistence plus marginal budget shares."""
    p = np.asarray(prices, dtype=float)
    g = np.asarray(gamma, dtype=float)
    b = np.asarray(beta, dtype=float)
    subsistence = float(p @ g)
    if disposable < subsistence - 1e-12:
        raise ContractError(
            f"subsistence spending {subsistence:.6g} exceeds disposable income {disposable:.6g}"
        )
    return g + b * (disposable - subsistence) / p
