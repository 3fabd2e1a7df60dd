"""Samplers for the point-process families used in the experiments.

Four families are covered: homogeneous and linearly non-stationary Poisson
processes, unfolded CUE eigenphases, a locally attractive Gibbs process
sampled by Metropolis MCMC, and unfolded blocks of Riemann zeta zeros read
from a table on disk.
"""
from __future__ import annotations

import gzip
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numba
import numpy as np

from .seqcore import PointSequence, SeqError, as_rng, normalize_unit_density

log = logging.getLogger(__name__)

__all__ = [
    "PoissonConfig",
    "CueConfig",
    "GibbsConfig",
    "ZetaSource",
    "gen_poisson",
    "gen_poisson_nonstationary",
    "gen_cue",
    "haar_unitary",
    "unfold_eigenphases",
    "pair_potential_h",
    "gen_gibbs_attractive",
    "load_zeta_zeros",
    "unfold_zeta",
]


@dataclass(frozen=True)
class PoissonConfig:
    mu: float = 1.0
    window_T: float = 500.0
    rate_slope: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise SeqError(f"mu must be positive, got {self.mu}")
        if not self.window_T > 0:
            raise SeqError(f"window_T must be positive, got {self.window_T}")
        if not self.mu + self.rate_slope * self.window_T > 0:
            raise SeqError("rate mu + rate_slope*t must stay positive on [0, window_T]")


@dataclass(frozen=True)
class CueConfig:
    matrix_N: int = 128
    method: str = "eig"  # "eig" or "mcmc"
    mcmc_sweeps: int = 400

    def __post_init__(self):
        if int(self.matrix_N) != self.matrix_N or self.matrix_N < 2:
            raise SeqError(f"matrix_N must be an integer >= 2, got {self.matrix_N}")
        if self.method not in ("eig", "mcmc"):
            raise SeqError(f"unknown CUE method {self.method!r}")


@dataclass(frozen=True)
class GibbsConfig:
    mu: float = 3.5
    window_T: float = 500.0
    mcmc_sweeps: int = 200
    proposal_sigma: float = 0.5
    cutoff: float = 5.0

    def __post_init__(self):
        if not (self.mu > 0 and self.window_T > 0):
            raise SeqError("mu and window_T must be positive")
        if int(self.mcmc_sweeps) != self.mcmc_sweeps or self.mcmc_sweeps < 1:
            raise SeqError("mcmc_sweeps must be a positive integer")
        if not self.proposal_sigma > 0:
            raise SeqError("proposal_sigma must be positive")
        if not self.cutoff > 0:
            raise SeqError("cutoff must be positive")


@dataclass(frozen=True)
class ZetaSource:
    path: Path
    block_length: int = 500

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        if int(self.block_length) != self.block_length or self.block_length < 2:
            raise SeqError("block_length must be an integer >= 2")


# --- Poisson ----------------------------------------------------------------

def gen_poisson(cfg: PoissonConfig, seed) -> PointSequence:
    """Homogeneous Poisson process on ``[0, T]`` built from iid Exp(mu) gaps.

    Gaps are accumulated from zero until the window is exceeded; the last
    (overshooting) point is discarded.
    """
    if cfg.rate_slope != 0:
        raise SeqError("gen_poisson needs rate_slope == 0; use gen_poisson_nonstationary")
    rng = as_rng(seed)
    expected = cfg.mu * cfg.window_T
    chunk = int(expected + 6 * math.sqrt(expected) + 16)
    pts = np.cumsum(rng.exponential(1.0 / cfg.mu, size=chunk))
    while pts[-1] <= cfg.window_T:
        more = pts[-1] + np.cumsum(rng.exponential(1.0 / cfg.mu, size=chunk))
        pts = np.concatenate([pts, more])
    pts = pts[pts <= cfg.window_T]
    return PointSequence(pts, cfg.window_T)


def gen_poisson_nonstationary(cfg: PoissonConfig, seed) -> PointSequence:
    """Poisson process with linear rate ``mu + rate_slope * t``, by thinning.

    A zero slope is allowed and gives the homogeneous process.
    """
    rate = lambda t: cfg.mu + cfg.rate_slope * t  # noqa: E731
    lam_max = max(rate(0.0), rate(cfg.window_T))
    rng = as_rng(seed)
    candidates = gen_poisson(PoissonConfig(lam_max, cfg.window_T), rng).points
    keep = rng.random(candidates.size) * lam_max < rate(candidates)
    return PointSequence(candidates[keep], cfg.window_T)


# --- CUE --------------------------------------------------------------------

def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``n x n`` unitary matrix (Mezzadri's QR recipe)."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def unfold_eigenphases(theta, n: int) -> np.ndarray:
    """Map eigen-angles to ``[0, n)`` via ``phi = (theta mod 2pi) * n / (2 pi)``, sorted."""
    theta = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
    return np.sort(theta * n / (2 * np.pi))


@numba.njit(cache=True)
def _cue_log_weight_change(theta, j, new):
    # change of sum_k 2 log|2 sin((theta_j - theta_k)/2)| when theta_j -> new
    d = 0.0
    for k in range(theta.size):
        if k == j:
            continue
        d += 2.0 * (math.log(abs(math.sin(0.5 * (new - theta[k]))))
                    - math.log(abs(math.sin(0.5 * (theta[j] - theta[k])))))
    return d


@numba.njit(cache=True)
def _cue_mcmc(theta, sweeps, step, normals, uniforms):
    n = theta.size
    accepted = 0
    t = 0
    for _ in range(sweeps):
        for j in range(n):
            new = theta[j] + step * normals[t]
            new = new - 2.0 * math.pi * math.floor(new / (2.0 * math.pi))
            dlw = _cue_log_weight_change(theta, j, new)
            if math.log(uniforms[t]) < dlw:
                theta[j] = new
                accepted += 1
            t += 1
    return accepted


def _cue_angles_mcmc(n: int, sweeps: int, rng: np.random.Generator) -> np.ndarray:
    # start from a jittered lattice, which already sits near the CUE bulk
    theta = (np.arange(n) + rng.uniform(-0.25, 0.25, n)) * 2 * np.pi / n
    step = 2 * np.pi / n
    normals = rng.standard_normal(sweeps * n)
    uniforms = rng.random(sweeps * n)
    acc = _cue_mcmc(theta, sweeps, step, normals, uniforms)
    log.debug("CUE MCMC acceptance rate %.3f", acc / (sweeps * n))
    return theta


def gen_cue(cfg: CueConfig, seed) -> PointSequence:
    """Unfolded eigenphases of a Haar-random unitary matrix.

    With ``cfg.method == "mcmc"`` the eigen-angles are instead drawn by
    Metropolis sampling of the joint CUE angle density, which needs no
    eigensolver.
    """
    rng = as_rng(seed)
    n = cfg.matrix_N
    if cfg.method == "mcmc":
        theta = _cue_angles_mcmc(n, cfg.mcmc_sweeps, rng)
    else:
        u = haar_unitary(n, rng)
        try:
            eig = np.linalg.eigvals(u)
        except np.linalg.LinAlgError as exc:
            raise SeqError("eigendecomposition did not converge") from exc
        theta = np.angle(eig)
    return PointSequence(unfold_eigenphases(theta, n), float(n))


# --- Gibbs ------------------------------------------------------------------

_H_SCALE = 0.85 ** 4


def pair_potential_h(r):
    """Pair potential of the locally attractive process.

    ``r**4`` below 0.85, ``min(0.85**4, exp(1.4 - 1.4 r))`` above. Works on
    scalars and arrays.
    """
    r = np.asarray(r, dtype=float)
    out = np.where(r < 0.85, r ** 4, np.minimum(_H_SCALE, np.exp(1.4 - 1.4 * r)))
    return out if out.ndim else float(out)


@numba.njit(cache=True)
def _h_default(r):
    if r < 0.85:
        return r ** 4
    return min(0.52200625, math.exp(1.4 - 1.4 * r))


@numba.njit(cache=True)
def _h_table(r, table, dr):
    # linear interpolation of a tabulated potential on [0, cutoff]
    x = r / dr
    i = int(x)
    if i >= table.size - 1:
        return table[table.size - 1]
    f = x - i
    return table[i] * (1.0 - f) + table[i + 1] * f


@numba.njit(cache=True)
def _local_energy(x, j, pos, cutoff, use_table, table, dr):
    e = 0.0
    for k in range(x.size):
        if k == j:
            continue
        r = abs(pos - x[k])
        if r < cutoff:
            e += _h_table(r, table, dr) if use_table else _h_default(r)
    return e


@numba.njit(cache=True)
def _reflect(v, T):
    # fold onto [0, T] by reflection at both ends
    period = 2.0 * T
    v = v - period * math.floor(v / period)
    if v > T:
        v = period - v
    return v


@numba.njit(cache=True)
def _gibbs_mcmc(x, T, sweeps, sigma, cutoff, use_table, table, dr, normals, uniforms):
    n = x.size
    accepted = 0
    t = 0
    for _ in range(sweeps):
        for j in range(n):
            new = _reflect(x[j] + sigma * normals[t], T)
            de = (_local_energy(x, j, new, cutoff, use_table, table, dr)
                  - _local_energy(x, j, x[j], cutoff, use_table, table, dr))
            if de <= 0.0 or uniforms[t] < math.exp(-de):
                x[j] = new
                accepted += 1
            t += 1
    return accepted


def gibbs_chain(x0, window_T: float, sweeps: int, sigma: float, rng: np.random.Generator,
                potential: Callable | None = None, cutoff: float = 5.0,
                table_size: int = 20001) -> tuple[np.ndarray, float]:
    """Run the fixed-count Metropolis chain from ``x0`` and return (state, acceptance).

    The target is ``exp(-sum_{i<j} h(|x_i - x_j|))`` with ``h`` cut to zero at
    ``cutoff``. Custom potentials are tabulated on ``[0, cutoff]`` and
    interpolated linearly inside the compiled kernel.
    """
    x = np.array(x0, dtype=float)
    if potential is None:
        use_table, table, dr = False, np.zeros(2), 1.0
    else:
        grid = np.linspace(0.0, cutoff, table_size)
        table = np.asarray(potential(grid), dtype=float) * np.ones_like(grid)
        use_table, dr = True, grid[1] - grid[0]
    normals = rng.standard_normal(sweeps * x.size)
    uniforms = rng.random(sweeps * x.size)
    acc = _gibbs_mcmc(x, float(window_T), int(sweeps), float(sigma), float(cutoff),
                      use_table, table, dr, normals, uniforms)
    return x, acc / max(1, sweeps * x.size)


def gen_gibbs_attractive(cfg: GibbsConfig, seed, potential: Callable | None = None,
                         return_acceptance: bool = False):
    """Locally attractive Gibbs process with ``round(mu*T)`` points, unit-density output.

    ``potential`` overrides the default pair potential (pass ``lambda r: 0*r``
    for the binomial process).
    """
    rng = as_rng(seed)
    n = int(round(cfg.mu * cfg.window_T))
    if n < 2:
        raise SeqError("Gibbs configuration yields fewer than 2 points")
    x0 = rng.uniform(0.0, cfg.window_T, n)
    x, acc = gibbs_chain(x0, cfg.window_T, cfg.mcmc_sweeps, cfg.proposal_sigma, rng,
                         potential=potential, cutoff=cfg.cutoff)
    log.info("Gibbs MCMC acceptance rate %.3f", acc)
    x = np.sort(x)
    if np.any(np.diff(x) <= 0):
        # ties have probability zero; nudge rather than fail on the measure-zero event
        x = np.unique(x)
    seq = normalize_unit_density(PointSequence(x, cfg.window_T))
    return (seq, acc) if return_acceptance else seq


# --- zeta zeros -------------------------------------------------------------

def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path)


def load_zeta_zeros(src: ZetaSource | str | Path) -> np.ndarray:
    """Parse a zero table: one ordinate per line, ``#`` comment lines skipped.

    Files ending in ``.gz`` are decompressed transparently.
    """
    path = src.path if isinstance(src, ZetaSource) else Path(src)
    zeros = []
    prev = 0.0
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                v = float(s.split()[-1])
            except ValueError:
                raise SeqError(f"{path}:{lineno}: cannot parse {s!r}") from None
            if not math.isfinite(v) or v <= prev:
                raise SeqError(f"{path}:{lineno}: zero {s!r} is not strictly ascending and positive")
            zeros.append(v)
            prev = v
    if not zeros:
        raise SeqError(f"no zeros in {path}")
    return np.array(zeros)


def _unfold_smooth(g):
    # main term of the Riemann-von Mangoldt count: (g/2pi) log(g/(2pi e))
    return g / (2 * np.pi) * (np.log(g / (2 * np.pi)) - 1.0)


def _unfold_plain(g):
    return g * np.log(g / (2 * np.pi)) / (2 * np.pi)


def unfold_zeta(zeros, block_length: int, counting: str = "smooth") -> list[PointSequence]:
    """Split zeros into consecutive blocks and unfold each to unit mean density.

    ``counting="smooth"`` maps ``g -> (g/2pi) log(g/(2pi e))``, the smooth part
    of the zero-counting function, so unfolded gaps average one.
    ``counting="plain"`` uses ``g log(g/2pi) / 2pi``, which omits the
    ``-g/2pi`` term and therefore yields mean gaps of roughly
    ``1 + 1/log(g/2pi)``. Each block is shifted to start at zero; a trailing
    partial block is dropped.
    """
    z = np.asarray(zeros, dtype=float)
    if block_length < 2:
        raise SeqError("block_length must be >= 2")
    if z.size < block_length:
        raise SeqError(f"need at least {block_length} zeros, got {z.size}")
    if np.any(z <= 2 * np.pi):
        raise SeqError("zeros at or below 2*pi cannot be unfolded (non-finite log density)")
    fn = {"smooth": _unfold_smooth, "plain": _unfold_plain}[counting]
    u = fn(z)
    if not np.all(np.isfinite(u)) or np.any(np.diff(u) <= 0):
        raise SeqError("unfolding produced non-finite or non-increasing values")
    blocks = []
    for start in range(0, z.size - block_length + 1, block_length):
        b = u[start:start + block_length]
        b = b - b[0]
        blocks.append(PointSequence(b, b[-1]))
    return blocks
