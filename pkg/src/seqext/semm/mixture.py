"""Log-normal mixture density, its tape version, and sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..seqcore import SeqError, as_rng

__all__ = ["MixtureParams", "mixture_logpdf", "mixture_pdf", "mixture_mean",
           "mixture_logpdf_tensor", "sample_next", "gumbel_softmax_sample"]

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class MixtureParams:
    """Weights ``W``, log-space means ``M`` and log-space scales ``Sigma`` of K log-normals."""

    W: np.ndarray
    M: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float).ravel()
        M = np.array(self.M, dtype=float).ravel()
        S = np.array(self.Sigma, dtype=float).ravel()
        if not (W.size == M.size == S.size) or W.size == 0:
            raise SeqError("W, M and Sigma must have the same positive length")
        if np.any(W < 0) or abs(W.sum() - 1.0) >= 1e-9:
            raise SeqError("mixture weights must be non-negative and sum to 1")
        if np.any(S <= 0):
            raise SeqError("Sigma must be positive")
        for name, v in (("W", W), ("M", M), ("Sigma", S)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def K(self) -> int:
        return self.W.size


def mixture_logpdf(tau: float, p: MixtureParams) -> float:
    """Log density of the log-normal mixture at ``tau > 0``, via log-sum-exp."""
    if not tau > 0:
        raise SeqError(f"tau must be positive, got {tau}")
    lt = math.log(tau)
    with np.errstate(divide="ignore"):
        logw = np.log(p.W)
    terms = (logw - lt - np.log(p.Sigma) - HALF_LOG_2PI
             - 0.5 * ((lt - p.M) / p.Sigma) ** 2)
    m = np.max(terms)
    return float(m + np.log(np.sum(np.exp(terms - m))))


def mixture_pdf(tau, p: MixtureParams) -> np.ndarray:
    """Vectorized density (zero for ``tau <= 0``)."""
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.zeros_like(t)
    pos = t > 0
    lt = np.log(t[pos])[:, None]
    comp = p.W / (np.sqrt(2 * np.pi) * p.Sigma * np.exp(lt)) * np.exp(-0.5 * ((lt - p.M) / p.Sigma) ** 2)
    out[pos] = comp.sum(axis=1)
    return out


def mixture_mean(p: MixtureParams) -> float:
    return float(np.sum(p.W * np.exp(p.M + 0.5 * p.Sigma ** 2)))


def mixture_logpdf_tensor(log_tau: np.ndarray, logits: ad.Tensor, M: ad.Tensor,
                          log_sigma: ad.Tensor) -> ad.Tensor:
    """Row-wise log density on the tape.

    ``log_tau`` has shape (R,); ``logits``, ``M`` and ``log_sigma`` have
    shape (R, K). Returns a tensor of shape (R,).
    """
    lt = np.asarray(log_tau, dtype=float)[:, None]
    z = ad.mul(ad.sub(lt, M), ad.exp(ad.neg(log_sigma)))
    terms = ad.sub(ad.log_softmax(logits),
                   ad.add(ad.add(log_sigma, ad.scale(ad.square(z), 0.5)), lt + HALF_LOG_2PI))
    return ad.logsumexp(terms)


def gumbel_softmax_sample(logits: ad.Tensor, M: ad.Tensor, Sigma: ad.Tensor,
                          gumbel: np.ndarray, eps: float, temperature: float) -> ad.Tensor:
    """Relaxed draw ``exp(Sigma . z * eps + M . z)`` with ``z`` a Gumbel-softmax vector.

    Differentiable in ``logits``, ``M`` and ``Sigma`` given the noise.
    """
    if not temperature > 0:
        raise SeqError("temperature must be positive")
    z = ad.softmax(ad.scale(ad.add(ad.log_softmax(logits), gumbel), 1.0 / temperature))
    s = ad.sum_(ad.mul(Sigma, z))
    m = ad.sum_(ad.mul(M, z))
    return ad.exp(ad.add(ad.scale(s, eps), m))


def sample_next(p: MixtureParams, seed, mode: str = "categorical",
                temperature: float = 1.0, eps: float | None = None) -> float:
    """Draw one gap from the mixture.

    ``categorical``: pick component k ~ W, then ``tau = exp(Sigma_k * e + M_k)``
    with ``e ~ N(0, 1)``. ``gumbel``: replace the one-hot choice by a
    Gumbel-softmax vector at ``temperature``. ``eps`` pins the normal draw
    (test hook).
    """
    rng = as_rng(seed)
    if mode == "categorical":
        k = int(rng.choice(p.K, p=p.W)) if p.K > 1 else 0
        e = rng.standard_normal() if eps is None else eps
        return float(math.exp(p.Sigma[k] * e + p.M[k]))
    if mode == "gumbel":
        if not temperature > 0:
            raise SeqError("temperature must be positive")
        g = rng.gumbel(size=p.K)
        e = rng.standard_normal() if eps is None else eps
        with np.errstate(divide="ignore"):
            logw = np.log(p.W)
        y = (logw + g) / temperature
        z = np.exp(y - y.max())
        z /= z.sum()
        return float(math.exp(float(p.Sigma @ z) * e + float(p.M @ z)))
    raise SeqError(f"unknown sampling mode {mode!r}")
