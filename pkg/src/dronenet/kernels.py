"""Covariance kernels for the GP surrogates.

Five variants: Gaussian, Matern 5/2, periodic, and separable sum/product
composites. Each base kernel carries per-dimension scale parameters and a
variance; composites route their children onto (possibly overlapping)
subsets of the input dimensions via ``active_dims``.

Stationary closed forms, with t the scaled distance:

    gaussian:  v * exp(-sum((x_d - x'_d)^2 / (2 s_d^2)))
    matern52:  v * (1 + sqrt(5) t + 5 t^2 / 3) * exp(-sqrt(5) t),
               t = sqrt(sum((x_d - x'_d)^2 / s_d^2))
    periodic:  v * exp(-sum((2 / s_d^2) sin^2(pi (x_d - x'_d) / p_d)))

All positive parameters are free hyperparameters by default; a kernel's
``fixed`` set can pin any of {"scales", "variance", "periods"}. Free
parameters are packed in log space for optimization.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .exceptions import DimensionMismatch

__all__ = [
    "Kernel",
    "GaussianKernel",
    "Matern52Kernel",
    "PeriodicKernel",
    "SumKernel",
    "ProductKernel",
    "kernel_eval",
    "kernel_from_dict",
]

SQRT5 = np.sqrt(5.0)


def _as_2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DimensionMismatch(f"expected point array of ndim 1 or 2, got ndim {x.ndim}")
    return x


class Kernel:
    """Base class; subclasses implement cross() and the param protocol."""

    def __call__(self, x, x2) -> float:
        return float(self.cross(_as_2d(x), _as_2d(x2))[0, 0])

    def cross(self, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gram(self, X: np.ndarray) -> np.ndarray:
        X = _as_2d(X)
        return self.cross(X, X)

    def diag_value(self) -> float:
        """k(x, x), constant for these stationary forms."""
        raise NotImplementedError

    # -- hyperparameter packing (log space) ---------------------------------

    def pack(self) -> np.ndarray:
        return np.array(list(self._iter_free()), dtype=float)

    def unpack(self, packed: Sequence[float]) -> "Kernel":
        it = iter(np.asarray(packed, dtype=float))
        out = self._consume(it)
        rest = list(it)
        if rest:
            raise DimensionMismatch(f"{len(rest)} unused packed hyperparameters")
        return out

    def n_free(self) -> int:
        return len(self.pack())

    def base_log(self, X: np.ndarray) -> np.ndarray:
        """Data-scale centres (log space) for multi-start sampling."""
        return np.array(list(self._iter_base(_as_2d(X))), dtype=float)

    def _iter_free(self) -> Iterator[float]:
        raise NotImplementedError

    def _consume(self, it: Iterator[float]) -> "Kernel":
        raise NotImplementedError

    def _iter_base(self, X: np.ndarray) -> Iterator[float]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_dims(scales: tuple, active_dims, name: str):
    if active_dims is not None and len(active_dims) != len(scales):
        raise DimensionMismatch(
            f"{name}: {len(scales)} scales for {len(active_dims)} active dims"
        )


def _select(X: np.ndarray, active_dims) -> np.ndarray:
    if active_dims is None:
        return X
    idx = np.asarray(active_dims, dtype=int)
    if idx.size and idx.max() >= X.shape[1]:
        raise DimensionMismatch(f"active dim {idx.max()} out of range for d={X.shape[1]}")
    return X[:, idx]


def _dim_std(X: np.ndarray) -> np.ndarray:
    s = X.std(axis=0)
    return np.where(s > 0.0, s, 1.0)


def _dim_range(X: np.ndarray) -> np.ndarray:
    r = X.max(axis=0) - X.min(axis=0)
    return np.where(r > 0.0, r, 1.0)


@dataclass(frozen=True)
class _StationaryKernel(Kernel):
    scales: tuple = (1.0,)
    variance: float = 1.0
    active_dims: tuple | None = None
    fixed: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if self.active_dims is not None:
            object.__setattr__(self, "active_dims", tuple(int(i) for i in self.active_dims))
        object.__setattr__(self, "fixed", frozenset(self.fixed))
        if any(s <= 0.0 for s in self.scales):
            raise ValueError(f"{type(self).__name__}: scales must be > 0, got {self.scales}")
        if self.variance <= 0.0:
            raise ValueError(f"{type(self).__name__}: variance must be > 0")
        _check_dims(self.scales, self.active_dims, type(self).__name__)

    def diag_value(self) -> float:
        return self.variance

    def _scaled_sq(self, X1, X2) -> np.ndarray:
        """sum_d ((x_d - x'_d) / s_d)^2, shape (n1, n2)."""
        A = _select(X1, self.active_dims)
        B = _select(X2, self.active_dims)
        if A.shape[1] != len(self.scales):
            raise DimensionMismatch(
                f"{type(self).__name__}: {len(self.scales)} scales for input dim {A.shape[1]}"
            )
        s = np.asarray(self.scales)
        d = A[:, None, :] / s - B[None, :, :] / s
        return np.einsum("ijk,ijk->ij", d, d)

    def _iter_free(self):
        if "scales" not in self.fixed:
            yield from np.log(self.scales)
        if "variance" not in self.fixed:
            yield np.log(self.variance)

    def _consume(self, it):
        kw = {}
        if "scales" not in self.fixed:
            kw["scales"] = tuple(float(np.exp(next(it))) for _ in self.scales)
        if "variance" not in self.fixed:
            kw["variance"] = float(np.exp(next(it)))
        return replace(self, **kw)

    def _iter_base(self, X):
        A = _select(X, self.active_dims)
        if "scales" not in self.fixed:
            yield from np.log(_dim_std(A))
        if "variance" not in self.fixed:
            yield 0.0

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "scales": list(self.scales),
            "variance": self.variance,
        }
        if self.active_dims is not None:
            d["active_dims"] = list(self.active_dims)
        if self.fixed:
            d["fixed"] = sorted(self.fixed)
        return d


@dataclass(frozen=True)
class GaussianKernel(_StationaryKernel):
    kind = "gaussian"

    def cross(self, X1, X2):
        return self.variance * np.exp(-0.5 * self._scaled_sq(_as_2d(X1), _as_2d(X2)))


@dataclass(frozen=True)
class Matern52Kernel(_StationaryKernel):
    kind = "matern52"

    def cross(self, X1, X2):
        t = np.sqrt(self._scaled_sq(_as_2d(X1), _as_2d(X2)))
        return self.variance * (1.0 + SQRT5 * t + 5.0 * t * t / 3.0) * np.exp(-SQRT5 * t)


@dataclass(frozen=True)
class PeriodicKernel(_StationaryKernel):
    kind = "periodic"
    periods: tuple = (1.0,)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        if any(p <= 0.0 for p in self.periods):
            raise ValueError("PeriodicKernel: periods must be > 0")
        if len(self.periods) != len(self.scales):
            raise DimensionMismatch(
                f"PeriodicKernel: {len(self.periods)} periods for {len(self.scales)} scales"
            )

    def cross(self, X1, X2):
        A = _select(_as_2d(X1), self.active_dims)
        B = _select(_as_2d(X2), self.active_dims)
        if A.shape[1] != len(self.scales):
            raise DimensionMismatch(
                f"PeriodicKernel: {len(self.scales)} scales for input dim {A.shape[1]}"
            )
        p = np.asarray(self.periods)
        s = np.asarray(self.scales)
        d = A[:, None, :] - B[None, :, :]
        arg = np.sin(np.pi * d / p) ** 2 * (2.0 / s**2)
        return self.variance * np.exp(-arg.sum(axis=2))

    def _iter_free(self):
        yield from super()._iter_free()
        if "periods" not in self.fixed:
            yield from np.log(self.periods)

    def _consume(self, it):
        out = super()._consume(it)
        if "periods" not in self.fixed:
            periods = tuple(float(np.exp(next(it))) for _ in self.periods)
            out = replace(out, periods=periods)
        return out

    def _iter_base(self, X):
        yield from super()._iter_base(X)
        if "periods" not in self.fixed:
            A = _select(_as_2d(X), self.active_dims)
            yield from np.log(_dim_range(A))

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["periods"] = list(self.periods)
        return d


@dataclass(frozen=True)
class _CompositeKernel(Kernel):
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError(f"{type(self).__name__} needs at least one child")

    def _iter_free(self):
        for c in self.children:
            yield from c._iter_free()

    def _consume(self, it):
        return replace(self, children=tuple(c._consume(it) for c in self.children))

    def _iter_base(self, X):
        for c in self.children:
            yield from c._iter_base(X)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "children": [c.to_dict() for c in self.children]}


@dataclass(frozen=True)
class SumKernel(_CompositeKernel):
    kind = "sum"

    def cross(self, X1, X2):
        X1, X2 = _as_2d(X1), _as_2d(X2)
        out = self.children[0].cross(X1, X2)
        for c in self.children[1:]:
            out = out + c.cross(X1, X2)
        return out

    def diag_value(self) -> float:
        return sum(c.diag_value() for c in self.children)


@dataclass(frozen=True)
class ProductKernel(_CompositeKernel):
    kind = "product"

    def cross(self, X1, X2):
        X1, X2 = _as_2d(X1), _as_2d(X2)
        out = self.children[0].cross(X1, X2)
        for c in self.children[1:]:
            out = out * c.cross(X1, X2)
        return out

    def diag_value(self) -> float:
        out = 1.0
        for c in self.children:
            out *= c.diag_value()
        return out


def kernel_eval(spec: Kernel, x, x2) -> float:
    """Covariance k(x, x') under ``spec``."""
    return spec(x, x2)


_BASE_KINDS = {
    "gaussian": GaussianKernel,
    "matern52": Matern52Kernel,
    "periodic": PeriodicKernel,
}


def kernel_from_dict(d: dict) -> Kernel:
    kind = d["kind"]
    if kind == "sum":
        return SumKernel(children=tuple(kernel_from_dict(c) for c in d["children"]))
    if kind == "product":
        return ProductKernel(children=tuple(kernel_from_dict(c) for c in d["children"]))
    if kind not in _BASE_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}")
    kw = {
        "scales": tuple(d["scales"]),
        "variance": float(d["variance"]),
        "active_dims": tuple(d["active_dims"]) if d.get("active_dims") is not None else None,
        "fixed": frozenset(d.get("fixed", ())),
    }
    if kind == "periodic":
        kw["periods"] = tuple(d["periods"])
    return _BASE_KINDS[kind](**kw)
