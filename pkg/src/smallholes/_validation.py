"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array


def check_points(X, dim=None, *, name="X"):
    """Return ``X`` as a float ``(n, dim)`` array.

    A single point given as a 1-D sequence is promoted to shape ``(1, dim)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    X = check_array(X, dtype=float, ensure_2d=True, ensure_min_samples=1,
                    input_name=name)
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"{name} has {X.shape[1]} coordinates, expected {dim}")
    return X


def check_exponent(p, *, name="p"):
    p = float(p)
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"{name} must lie in (1, inf), got {p}")
    return p


def conjugate_exponent(p):
    p = check_exponent(p)
    return p / (p - 1.0)
