"""
Exact Bayesian computations over S_n for very small n.

Everything is accumulated in the log domain; posteriors are normalised with
log-sum-exp before exponentiation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, ConfigError, UnsupportedModelError
from .estimators import _perm_array, edge_images
from .models import (CorrelationModel, Gaussian, GeneralER, MatchInstance,
                     is_binary, joint_pmf, sample_instance)
from .perm import Permutation, edge_count
from .rng import Stream

POSTERIOR_CAP = 7
MI_CAP = 4
MMSE_CAP = 5


def _log_pmf(model) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(joint_pmf(model)).ravel()


def _binary_loglik(AE: np.ndarray, B: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """Log-likelihood per row of ``AE`` from the four cell counts.

    Counting first keeps equal-count permutations bit-identical.
    """
    cell = 2 * AE.astype(np.int64) + B.astype(np.int64)
    counts = np.stack([(cell == c).sum(axis=-1) for c in range(4)], axis=-1)
    terms = np.where(counts > 0, counts * np.where(np.isinf(logp), 0.0, logp), 0.0)
    ll = terms.sum(axis=-1)
    impossible = ((counts > 0) & np.isinf(logp)).any(axis=-1)
    return np.where(impossible, -np.inf, ll)


def _gaussian_loglik(AE: np.ndarray, B: np.ndarray, rho: float) -> np.ndarray:
    v = 1 - rho * rho
    if v <= 0:
        raise UnsupportedModelError("Gaussian likelihood needs |rho| < 1")
    quad = (AE * AE - 2 * rho * AE * B + B * B).sum(axis=-1)
    m = AE.shape[-1]
    return -m * (math.log(2 * math.pi) + 0.5 * math.log(v)) - quad / (2 * v)


def _loglik_table(instance: MatchInstance, model, perms: np.ndarray):
    AE = instance.A[edge_images(perms)]
    if isinstance(model, Gaussian):
        return _gaussian_loglik(AE, instance.B, model.rho), AE
    if not is_binary(model):
        raise UnsupportedModelError(f"no likelihood for {model!r}")
    return _binary_loglik(AE, instance.B, _log_pmf(model)), AE


@dataclass
class PosteriorTable:
    n: int
    perms: np.ndarray  # lexicographic order
    loglik: np.ndarray
    weights: np.ndarray

    def mode_set(self, rel_tol: float = 1e-9) -> list[Permutation]:
        top = self.loglik.max()
        keep = self.loglik >= top - rel_tol * max(1.0, abs(top))
        return [Permutation(tuple(r)) for r in self.perms[keep].tolist()]

    def mass(self, pi: Permutation) -> float:
        idx = np.flatnonzero((self.perms == np.asarray(pi.image)).all(axis=1))
        return float(self.weights[idx[0]])


def exact_posterior(instance: MatchInstance, model: CorrelationModel | None = None) -> PosteriorTable:
    """Posterior over all n! permutations under a uniform prior."""
    model = model or instance.model
    if model is None:
        raise ConfigError("model", "instance has no model; pass one explicitly")
    if instance.n > POSTERIOR_CAP:
        raise CapacityError(f"exact posterior is capped at n = {POSTERIOR_CAP}")
    perms = _perm_array(instance.n)
    ll, _ = _loglik_table(instance, model, perms)
    w = np.exp(ll - logsumexp(ll))
    return PosteriorTable(instance.n, perms, ll, w)


@dataclass(frozen=True)
class InterpolatedModel:
    """One-parameter family sliding from independent graphs to the planted model.

    ER: cells ``11 -> q*theta``, ``01, 10 -> q(1-theta)``, ``00 -> 1-(2-theta)q``
    with ``theta`` in ``[q, s]``.  Gaussian: ``B = sqrt(theta) A^pi +
    sqrt(1-theta) Z`` with ``theta`` in ``[0, 1]``.
    """

    base: str
    theta: float
    q: float | None = None
    s: float | None = None

    def __post_init__(self):
        if self.base == "er":
            if self.q is None or self.s is None:
                raise ConfigError("q", "ER interpolation needs q and s")
            if not self.q - 1e-12 <= self.theta <= self.s + 1e-12:
                raise ConfigError("theta", f"must lie in [q, s] = [{self.q}, {self.s}], got {self.theta}")
        elif self.base == "gaussian":
            if not 0.0 <= self.theta <= 1.0:
                raise ConfigError("theta", f"must lie in [0, 1], got {self.theta}")
        else:
            raise ConfigError("base", f"unknown base {self.base!r}")

    @classmethod
    def er(cls, p: float, s: float, theta: float) -> "InterpolatedModel":
        return cls("er", theta, p * s, s)

    @classmethod
    def gaussian(cls, theta: float) -> "InterpolatedModel":
        return cls("gaussian", theta)

    def pmf(self) -> np.ndarray:
        q, t = self.q, self.theta
        return np.array([[1 - (2 - t) * q, q * (1 - t)], [q * (1 - t), q * t]])

    def channel(self) -> np.ndarray:
        """``[x, y] -> p(y | x)``."""
        q, t = self.q, self.theta
        eta = q * (1 - t) / (1 - q)
        return np.array([[1 - eta, eta], [1 - t, t]])

    def as_model(self) -> CorrelationModel:
        if self.base == "gaussian":
            return Gaussian(math.sqrt(self.theta))
        c = self.pmf()
        return GeneralER(p00=c[0, 0], p01=c[0, 1], p10=c[1, 0], p11=c[1, 1])

    def prior_variance(self) -> float:
        """Per-edge variance of ``A^pi`` (the trivial estimator's error)."""
        return 1.0 if self.base == "gaussian" else self.q * (1 - self.q)


@dataclass
class MmseEstimate:
    value: float
    stderr: float
    n: int
    num_outer: int
    trivial_error: float  # C(n,2) times the per-edge prior variance


def mmse_of_relabeled_graph(model_theta: InterpolatedModel, n: int, num_outer: int,
                            seed: int = 0) -> MmseEstimate:
    """Monte Carlo over instances of the exact squared error of ``E[A^pi | A, B]``.

    Instance ``r`` is generated from ``Stream(seed).spawn(r)``; the inner
    conditional mean is the posterior-weighted average over all of S_n.
    """
    if n > MMSE_CAP:
        raise CapacityError(f"mmse enumeration is capped at n = {MMSE_CAP}")
    if num_outer < 2:
        raise ConfigError("num_outer", "need at least two outer samples")
    model = model_theta.as_model()
    perms = _perm_array(n)
    root = Stream(seed)
    errs = np.empty(num_outer)
    for r in range(num_outer):
        inst = sample_instance(model, n, "uniform", root.spawn(r).seed)
        ll, AE = _loglik_table(inst, model, perms)
        w = np.exp(ll - logsumexp(ll))
        est = w @ AE
        truth = inst.relabeled_a()
        errs[r] = float(np.sum((truth - est) ** 2))
    return MmseEstimate(
        value=float(errs.mean()),
        stderr=float(errs.std(ddof=1) / math.sqrt(num_outer)),
        n=n,
        num_outer=num_outer,
        trivial_error=edge_count(n) * model_theta.prior_variance(),
    )


def exact_mutual_information(model: CorrelationModel, n: int) -> float:
    """``I(pi; A, B)`` in nats for a binary model, by full enumeration.

    Computed as the average over pi of ``KL(P(A,B | pi) || P(A,B))`` where the
    marginal is the uniform mixture over S_n.
    """
    if not is_binary(model):
        raise UnsupportedModelError("exact mutual information needs a binary model")
    if n > MI_CAP:
        raise CapacityError(f"exact mutual information is capped at n = {MI_CAP}")
    m = edge_count(n)
    if n < 3:
        return 0.0
    logp = _log_pmf(model)
    configs = ((np.arange(2 ** m)[:, None] >> np.arange(m)) & 1).astype(np.int64)
    perms = _perm_array(n)
    E = edge_images(perms)
    # cond[pi, a, b] = log P(A = configs[a], B = configs[b] | pi)
    cond = np.stack([
        _binary_loglik(configs[:, E[r]][:, None, :], configs[None, :, :], logp)
        for r in range(len(perms))
    ])
    log_mix = logsumexp(cond, axis=0) - math.log(len(perms))
    prob = np.exp(cond)
    with np.errstate(invalid="ignore"):
        terms = np.where(prob > 0, prob * (cond - log_mix[None]), 0.0)
    return float(terms.sum() / len(perms))
