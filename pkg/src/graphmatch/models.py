"""
Correlation models for pairs of graphs and seeded instance generation.

A model fixes the joint law of one matched edge pair ``(A^pi[e], B[e])``;
all ``C(n, 2)`` pairs are drawn independently. Binary models expose their law
as a 2x2 table ``pmf[x, y] = P(A^pi[e] = x, B[e] = y)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import ConfigError, DegenerateModelError, DimensionError
from .perm import Permutation, edge_count, edge_image, edge_pairs
from .rng import Stream

PMF_TOL = 1e-12


def _require(cond, field, msg):
    if not cond:
        raise ConfigError(field, msg)


@dataclass(frozen=True)
class Gaussian:
    rho: float

    variant = "gaussian"

    def __post_init__(self):
        _require(math.isfinite(self.rho) and -1.0 <= self.rho <= 1.0,
                 "rho", f"must lie in [-1, 1], got {self.rho}")

    @property
    def params(self) -> dict:
        return {"rho": self.rho}


@dataclass(frozen=True)
class SubsampledER:
    """Parent G(n, p), each child keeps every parent edge with probability s."""

    p: float
    s: float

    variant = "subsampled_er"

    def __post_init__(self):
        _require(0.0 < self.p <= 1.0, "p", f"must lie in (0, 1], got {self.p}")
        _require(0.0 < self.s <= 1.0, "s", f"must lie in (0, 1], got {self.s}")

    @property
    def params(self) -> dict:
        return {"p": self.p, "s": self.s}

    @property
    def q(self) -> float:
        return self.p * self.s

    @property
    def eta(self) -> float:
        q = self.q
        return q * (1 - self.s) / (1 - q)

    @property
    def rho(self) -> float:
        """Pearson correlation of a matched edge pair."""
        return self.s * (1 - self.p) / (1 - self.q)

    def to_general(self) -> "GeneralER":
        p, s = self.p, self.s
        return GeneralER(p00=1 - 2 * p * s + p * s * s, p01=p * s * (1 - s),
                         p10=p * s * (1 - s), p11=p * s * s)


@dataclass(frozen=True)
class GeneralER:
    p00: float
    p01: float
    p10: float
    p11: float

    variant = "general_er"

    def __post_init__(self):
        for name in ("p00", "p01", "p10", "p11"):
            v = getattr(self, name)
            _require(math.isfinite(v) and v >= 0.0, name, f"must be >= 0, got {v}")
        total = self.p00 + self.p01 + self.p10 + self.p11
        _require(abs(total - 1.0) <= PMF_TOL, "p00+p01+p10+p11",
                 f"must sum to 1, got {total!r}")

    @property
    def params(self) -> dict:
        return {"p00": self.p00, "p01": self.p01, "p10": self.p10, "p11": self.p11}


CorrelationModel = Union[Gaussian, SubsampledER, GeneralER]
_VARIANTS = {cls.variant: cls for cls in (Gaussian, SubsampledER, GeneralER)}


def model_from_dict(d: dict) -> CorrelationModel:
    """Inverse of :func:`model_to_dict`."""
    variant = d.get("variant")
    if variant not in _VARIANTS:
        raise ConfigError("model.variant", f"unknown variant {variant!r}")
    try:
        return _VARIANTS[variant](**{k: float(v) for k, v in d.get("params", {}).items()})
    except TypeError as exc:
        raise ConfigError("model.params", str(exc)) from None


def model_to_dict(model: CorrelationModel) -> dict:
    return {"variant": model.variant, "params": dict(model.params)}


def is_binary(model: CorrelationModel) -> bool:
    return isinstance(model, (SubsampledER, GeneralER))


def joint_pmf(model: CorrelationModel) -> np.ndarray:
    """2x2 table ``[x, y]`` of the matched-pair law of a binary model."""
    if isinstance(model, SubsampledER):
        model = model.to_general()
    if not isinstance(model, GeneralER):
        raise TypeError(f"{model.variant} has no four-cell pmf")
    return np.array([[model.p00, model.p01], [model.p10, model.p11]])


def flip_model(p: float, s: float) -> tuple[float, float]:
    """Parameters of the subsampling model seen after swapping 0 and 1.

    The product of the new pair is ``1 - p*s``.
    """
    q = p * s
    if not 0.0 < q < 1.0:
        raise DegenerateModelError(f"flip needs 0 < p*s < 1, got p*s = {q}")
    mid = 1 - 2 * q + q * s
    return (1 - q) ** 2 / mid, mid / (1 - q)


def correlation_sign(model: CorrelationModel) -> str:
    """``"positive"``, ``"negative"`` or ``"zero"``."""
    if isinstance(model, Gaussian):
        v = model.rho
    else:
        t = joint_pmf(model)
        same, cross = t[1, 1] * t[0, 0], t[0, 1] * t[1, 0]
        v = same - cross
        if abs(v) <= 1e-12 * max(same, cross):  # rounding in a product pmf
            v = 0.0
    if v > 0:
        return "positive"
    if v < 0:
        return "negative"
    return "zero"


@dataclass(frozen=True, eq=False)
class MatchInstance:
    """Two weighted graphs on ``n`` vertices and the hidden matching.

    ``A`` and ``B`` are edge-slot vectors; ``(A[pi(e)], B[e])`` is one draw from
    the model for every slot ``e``.
    """

    n: int
    A: np.ndarray
    B: np.ndarray
    pi_true: Permutation | None
    model: CorrelationModel | None = None
    seed: int | None = None

    def __post_init__(self):
        m = edge_count(self.n)
        A = np.array(self.A, dtype=np.float64)
        B = np.array(self.B, dtype=np.float64)
        if A.shape != (m,) or B.shape != (m,):
            raise DimensionError(f"n={self.n} needs {m} edge weights, got {A.shape} and {B.shape}")
        if self.pi_true is not None and self.pi_true.n != self.n:
            raise DimensionError("pi_true has the wrong vertex count")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @cached_property
    def amat(self) -> np.ndarray:
        return _dense(self.A, self.n)

    @cached_property
    def bmat(self) -> np.ndarray:
        return _dense(self.B, self.n)

    def relabeled_a(self, pi: Permutation | np.ndarray | None = None) -> np.ndarray:
        """``A^pi`` as an edge vector (defaults to the true permutation)."""
        p = self.pi_true.image if pi is None else getattr(pi, "image", pi)
        return self.A[edge_image(p)]

    def complement(self) -> "MatchInstance":
        return MatchInstance(self.n, 1.0 - self.A, 1.0 - self.B, self.pi_true, None, self.seed)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "model": None if self.model is None else model_to_dict(self.model),
            "seed": self.seed,
            "pi_true": None if self.pi_true is None else list(self.pi_true.image),
            "A": [float(x) for x in self.A],
            "B": [float(x) for x in self.B],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MatchInstance":
        model = d.get("model")
        pi = d.get("pi_true")
        return cls(
            n=int(d["n"]),
            A=np.asarray(d["A"], dtype=np.float64),
            B=np.asarray(d["B"], dtype=np.float64),
            pi_true=None if pi is None else Permutation(tuple(pi)),
            model=None if model is None else model_from_dict(model),
            seed=d.get("seed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "MatchInstance":
        return cls.from_dict(json.loads(text))


def _dense(vec: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    i, j = edge_pairs(n)
    m[i, j] = vec
    m[j, i] = vec
    m.setflags(write=False)
    return m


def sample_instance(model: CorrelationModel, n: int, pi_mode="uniform", seed: int = 0) -> MatchInstance:
    """Draw ``(A, B, pi)``; a pure function of its arguments.

    ``pi_mode`` is ``"uniform"``, ``"identity"`` or a :class:`Permutation`.
    """
    if n < 2:
        raise ConfigError("n", f"must be >= 2, got {n}")
    root = Stream(seed)
    if isinstance(pi_mode, Permutation):
        if pi_mode.n != n:
            raise DimensionError("given permutation has the wrong vertex count")
        pi = pi_mode
    elif pi_mode == "identity":
        pi = Permutation.identity(n)
    elif pi_mode == "uniform":
        pi = Permutation(tuple(root.spawn(1).permutation(n).tolist()))
    else:
        raise ConfigError("pi_mode", f"unknown mode {pi_mode!r}")

    m = edge_count(n)
    img = edge_image(pi.image)
    A = np.empty(m)
    if isinstance(model, Gaussian):
        A[:] = root.spawn(2).normal(m)
        z = root.spawn(3).normal(m)
        rho = model.rho
        B = rho * A[img] + math.sqrt(max(0.0, 1 - rho * rho)) * z
    else:
        cum = np.cumsum(joint_pmf(model).ravel())
        cell = np.minimum(np.searchsorted(cum, root.spawn(2).uniform(m), side="right"), 3)
        A[img] = cell >> 1
        B = (cell & 1).astype(np.float64)
    return MatchInstance(n=n, A=A, B=B, pi_true=pi, model=model, seed=seed)
