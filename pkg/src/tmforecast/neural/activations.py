"""Squashing functions: gate f = sigmoid, cell input g in (-2, 2), cell output h in (-1, 1)."""

from __future__ import annotations

import numpy as np


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # exp(-log(1 + e^-x)) never overflows
    return np.exp(-np.logaddexp(0.0, -x))


def f(x):
    return sigmoid(x)


def g(x):
    return 4.0 * sigmoid(x) - 2.0


def h(x):
    return 2.0 * sigmoid(x) - 1.0


def f_prime(x):
    s = sigmoid(x)
    return s * (1.0 - s)


def g_prime(x):
    s = sigmoid(x)
    return 4.0 * s * (1.0 - s)


def h_prime(x):
    s = sigmoid(x)
    return 2.0 * s * (1.0 - s)
