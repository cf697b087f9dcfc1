import math

import numpy as np
from sklearn.utils import check_array


def check_counts(X, n_probes):
    """Excitation counts as a 1-D int array; accepts shape (n,) or (n, 1)."""
    X = check_array(X, ensure_2d=False, dtype=None, ensure_all_finite=True)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of counts, got shape {X.shape}")
        X = X[:, 0]
    if X.ndim != 1:
        raise ValueError(f"expected 1-D counts, got shape {X.shape}")
    if not np.all(X == np.round(X)):
        raise ValueError("counts must be integers")
    X = X.astype(int)
    if np.any((X < 0) | (X > n_probes)):
        raise ValueError(f"counts must lie in [0, {n_probes}]")
    return X


def check_temperatures(y):
    y = check_array(y, ensure_2d=False, ensure_all_finite=True).ravel()
    if np.any(y <= 0):
        raise ValueError("temperatures must be positive")
    return y


def parse_gamma_tau(value):
    """``'inf'``/``'eq'``/``'equilibrium'`` or a nonnegative number."""
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("inf", "infinity", "eq", "equilibrium"):
            return math.inf
        value = float(v)
    value = float(value)
    if math.isnan(value) or value < 0:
        raise ValueError(f"gamma_tau must be >= 0 or inf, got {value}")
    return value
