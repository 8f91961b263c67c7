"""Representations of an aggregated curve as a vertical hierarchy.

A curve ``a = (a_1, ..., a_n)`` is the cumulative sum of its marginal
(bottom) values ``b``.  The hierarchy vector stacks the aggregates in
reverse order over the bottom values::

    y = (a_n, ..., a_2, b_1, ..., b_n)

so that ``y = S b``; ``a_1 == b_1`` is the node both sides share and is
stored once, at position ``n`` (1-based).

Documentation uses 1-based indices ``i, j, k`` as in the usual notation for
curves; arrays are 0-based, so element ``i`` lives at ``values[i - 1]``.
The representation index ``k`` is always 1-based.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidDimensionError


def _frozen(x):
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Curve:
    """Cumulative values ``a_1..a_n`` of an aggregated curve."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size < 2:
            raise InvalidDimensionError(f"a curve needs at least 2 points, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("curve values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class BottomSeries:
    """Marginal values ``b_[k],1..b_[k],n``; ``origin_k=1`` is the canonical case."""

    values: np.ndarray
    origin_k: int = 1

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size < 2:
            raise InvalidDimensionError(f"bottom series needs at least 2 values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("bottom values must be finite")
        _check_k(v.size, self.origin_k)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class HierarchyVector:
    """The ``2n-1`` stacked values ``(a_[-k]; b_[k])`` of representation ``k``."""

    values: np.ndarray
    k: int = 1

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size < 3 or v.size % 2 == 0:
            raise InvalidDimensionError(f"hierarchy vector length must be odd and >= 3, got {v.size}")
        _check_k((v.size + 1) // 2, self.k)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return (self.values.size + 1) // 2

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class StructureMatrices:
    """All matrices relating representation ``k`` to the canonical one.

    ``S == B_k @ S_k @ A_k @ D_inv`` holds for every ``k``.
    """

    n: int
    k: int
    S: np.ndarray
    S_k: np.ndarray
    D_n: np.ndarray
    A_k: np.ndarray
    B_k: np.ndarray
    D_inv: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for name in ("S", "S_k", "D_n", "A_k", "B_k"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.D_inv is None:
            object.__setattr__(self, "D_inv", _frozen(np.tril(np.ones((self.n, self.n)))))


def _check_n(n):
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"n must be an integer >= 2, got {n!r}")
    return int(n)


def _check_k(n, k):
    if int(k) != k or not 1 <= k <= n:
        raise InvalidArgumentError(f"k must be an integer in [1, {n}], got {k!r}")
    return int(k)


def _vector(x, name):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise InvalidDimensionError(f"{name} must be a vector of length >= 2, got shape {v.shape}")
    return v


def aggregate_bottom(b):
    """Cumulative sums ``a_i = b_1 + ... + b_i`` of canonical bottom values."""
    if isinstance(b, BottomSeries) and b.origin_k != 1:
        raise InvalidArgumentError("aggregate_bottom expects canonical (origin_k=1) bottom values")
    return Curve(np.cumsum(_vector(b, "b")))


def disaggregate(a, k=1):
    """Bottom values of representation ``k`` (1-based).

    ``b_[k],i = a_i - a_{i-1}`` for ``i > k``, ``a_i - a_{i+1}`` for ``i < k``
    and ``b_[k],k = a_k``.
    """
    a = _vector(a, "a")
    n = a.size
    k = _check_k(n, k)
    b = np.empty(n)
    kk = k - 1
    b[kk] = a[kk]
    b[kk + 1:] = a[kk + 1:] - a[kk:-1]
    b[:kk] = a[:kk] - a[1:kk + 1]
    return BottomSeries(b, origin_k=k)


def reversed_without(a, k):
    """``a_[-k] = (a_n, ..., a_{k+1}, a_{k-1}, ..., a_1)``."""
    a = _vector(a, "a")
    k = _check_k(a.size, k)
    return np.delete(a, k - 1)[::-1]


def build_hierarchy_vector(a, k=1):
    """Stack ``(a_[-k]; b_[k])`` into a vector of length ``2n - 1``."""
    a = _vector(a, "a")
    k = _check_k(a.size, k)
    return HierarchyVector(np.concatenate([reversed_without(a, k), disaggregate(a, k).values]), k=k)


def split_hierarchy(y):
    """Return ``(a, b)`` from canonical hierarchy values along the last axis.

    Works on a single vector or on a ``T x (2n-1)`` panel.  ``a[..., 0]`` is
    ``a_1``, which equals ``b_1``.
    """
    y = np.asarray(y, dtype=float)
    m = y.shape[-1]
    if m < 3 or m % 2 == 0:
        raise InvalidDimensionError(f"hierarchy length must be odd and >= 3, got {m}")
    n = (m + 1) // 2
    b = y[..., n - 1:]
    a = y[..., n - 1::-1]
    return a, b


def difference_matrix(n):
    """``D_n``: ones on the diagonal, minus ones on the subdiagonal (``b = D_n a``)."""
    n = _check_n(n)
    return np.eye(n) - np.eye(n, k=-1)


def summation_matrix(n, k=1):
    """``S_[k]`` of shape ``(2n-1, n)`` with ``y_[k] = S_[k] b_[k]``.

    Rows follow ``a_[-k]``: ``a_i`` with ``i > k`` sums ``b_[k],k..i`` and
    ``a_i`` with ``i < k`` sums ``b_[k],i..k``.  The identity block closes the
    bottom.  ``k=1`` gives the canonical ``[1 : U ; I]`` layout.
    """
    n = _check_n(n)
    k = _check_k(n, k)
    top = np.zeros((n - 1, n))
    row = 0
    for i in range(n, k, -1):
        top[row, k - 1:i] = 1.0
        row += 1
    for i in range(k - 1, 0, -1):
        top[row, i - 1:k] = 1.0
        row += 1
    return np.vstack([top, np.eye(n)])


def disaggregation_matrix(n, k=1):
    """``A_[k]`` with ``b_[k] = A_[k] a``; ``A_[1] == D_n``."""
    n = _check_n(n)
    k = _check_k(n, k)
    A = np.eye(n)
    for i in range(k + 1, n + 1):
        A[i - 1, i - 2] = -1.0
    for i in range(1, k):
        A[i - 1, i] = -1.0
    return A


def representation_matrix(n, k=1):
    """``B_[k]``, the signed permutation with ``y = B_[k] y_[k]``.

    The ``a`` entries keep their values, ``a_k`` moves from the bottom block
    up to its canonical slot, and ``b_2..b_k`` are the negated
    ``b_[k],1..b_[k],k-1``.
    """
    n = _check_n(n)
    k = _check_k(n, k)
    m = 2 * n - 1
    B = np.zeros((m, m))
    # canonical slot of a_i (i >= 2) is n - i (0-based); a_1 sits at n - 1
    src_a = {}
    pos = 0
    for i in range(n, k, -1):
        src_a[i] = pos
        pos += 1
    for i in range(k - 1, 0, -1):
        src_a[i] = pos
        pos += 1
    bk = n - 1  # start of b_[k] block in y_[k]
    for i in range(2, n + 1):
        if i == k:
            B[n - i, bk + k - 1] = 1.0
        else:
            B[n - i, src_a[i]] = 1.0
    if k == 1:
        B[n - 1, bk] = 1.0
    else:
        B[n - 1, src_a[1]] = 1.0
    for i in range(2, n + 1):
        if i <= k:
            B[n - 2 + i, bk + i - 2] = -1.0
        else:
            B[n - 2 + i, bk + i - 1] = 1.0
    return B


def structure_matrices(n, k=1):
    """Build ``S``, ``S_[k]``, ``D_n``, ``A_[k]`` and ``B_[k]`` together."""
    n = _check_n(n)
    k = _check_k(n, k)
    return StructureMatrices(
        n=n,
        k=k,
        S=summation_matrix(n, 1),
        S_k=summation_matrix(n, k),
        D_n=difference_matrix(n),
        A_k=disaggregation_matrix(n, k),
        B_k=representation_matrix(n, k),
    )
