"""Entangling-cloner propagation and heterodyne statistics.

Eve dilates the thermal-loss channel: a TMSV on modes (E, e), with E mixed
into Alice's mode A on a beam splitter of transmissivity ``tau``. Outputs are
kept as pure vectors over modes ``(B, E', e)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .constellation import Constellation
from .fock import (
    CutoffError,
    DensityMatrix,
    FockCutoff,
    StateVector,
    apply_beam_splitter,
    batched_entropy,
    beam_splitter_angle,
    choose_cutoff,
    coherent_amplitudes,
    coherent_vector,
    entropy_from_eigenvalues,
    partial_trace,
    required_dim,
    squeezing_lambda,
    tmsv_vector,
)

MODES = ("B", "E'", "e")
EXACT = "exact"
STRICT_PAPER = "strict-paper"
CONDITIONING_MODES = (EXACT, STRICT_PAPER)


def db_to_tau(db: float) -> float:
    return 10.0 ** (-db / 10.0)


def tau_to_db(tau: float) -> float:
    return -10.0 * math.log10(tau)


def epsilon_to_nbar(epsilon: float, tau: float, convention: str = "input") -> float:
    """Thermal photons of the cloner producing excess noise ``epsilon`` (SNU).

    ``input``: ``epsilon`` is referred to the channel input, so the output
    excess noise is ``tau * epsilon``. ``output``: ``epsilon`` is the output
    excess noise itself. A lossless channel cannot carry cloner noise, so
    ``tau == 1`` maps to ``nbar = 0``.
    """
    if epsilon < 0:
        raise ValueError(f"excess noise must be >= 0, got {epsilon}")
    if convention not in ("input", "output"):
        raise ValueError(f"unknown excess-noise convention {convention!r}")
    if tau >= 1.0 or epsilon == 0:
        return 0.0
    referred = tau * epsilon if convention == "input" else epsilon
    return referred / (2.0 * (1.0 - tau))


@dataclass(frozen=True)
class ChannelParams:
    tau: float
    nbar: float = 0.0

    def __post_init__(self):
        beam_splitter_angle(self.tau)
        if not self.nbar >= 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")

    @classmethod
    def from_db(cls, db: float, nbar: float = 0.0) -> "ChannelParams":
        return cls(db_to_tau(db), nbar)

    @classmethod
    def from_epsilon(cls, tau: float, epsilon: float, convention: str = "input") -> "ChannelParams":
        return cls(tau, epsilon_to_nbar(epsilon, tau, convention))

    @property
    def omega(self) -> float:
        return 2 * self.nbar + 1

    @property
    def lam(self) -> float:
        return squeezing_lambda(self.nbar)

    @property
    def theta(self) -> float:
        return beam_splitter_angle(self.tau)

    @property
    def is_pure_loss(self) -> bool:
        return self.nbar == 0

    @property
    def output_noise(self) -> float:
        """Variance of the added thermal photons seen by Bob, ``(1-tau) nbar``."""
        return (1 - self.tau) * self.nbar

    @property
    def db(self) -> float:
        return tau_to_db(self.tau)


def default_cutoff(c: Constellation, ch: ChannelParams, tail_tolerance: float | None = None) -> FockCutoff:
    kwargs = {} if tail_tolerance is None else {"tail_tolerance": tail_tolerance}
    return choose_cutoff(c.z**2, ch.nbar, **kwargs)


@dataclass(frozen=True)
class TripartiteOutput:
    k: int
    state: StateVector


def propagate(c: Constellation, k: int, ch: ChannelParams,
              cutoff: FockCutoff | None = None) -> TripartiteOutput:
    """``(U(theta) x I_e)(|a_k>_A |TMSV>_Ee)`` with modes ordered ``(B, E', e)``."""
    if not 0 <= k < c.n:
        raise IndexError(f"letter {k} outside 0..{c.n - 1}")
    if cutoff is None:
        cutoff = default_cutoff(c, ch)
    d = cutoff.dim
    signal = coherent_vector(c.amplitudes[k], cutoff).amplitudes
    tmsv = tmsv_vector(ch.nbar, cutoff).tensor()
    psi = signal[:, None, None] * tmsv[None, :, :]
    out = apply_beam_splitter(psi, ch.tau, d)
    norm2 = float(np.sum(np.abs(out) ** 2))
    lost = 1.0 - norm2
    if lost > cutoff.tail_tolerance:
        raise CutoffError(f"output modes lose {lost:.3g} at dim={d}",
                          max(d + 1, required_dim(c.z**2, ch.nbar, cutoff.tail_tolerance)))
    out /= math.sqrt(norm2)
    return TripartiteOutput(k, StateVector((d, d, d), out.ravel(), raw_norm=math.sqrt(norm2)))


def eve_conditional_state(out: TripartiteOutput) -> DensityMatrix:
    return partial_trace(out.state, keep=[1, 2])


def eve_average_state(c: Constellation, ch: ChannelParams,
                      cutoff: FockCutoff | None = None) -> DensityMatrix:
    states = [eve_conditional_state(propagate(c, k, ch, cutoff)).entries for k in range(c.n)]
    rho = sum(states) / c.n
    d = int(math.isqrt(rho.shape[0]))
    return DensityMatrix((d, d), rho)


def heterodyne_likelihood(b, a_k, ch: ChannelParams):
    """Density of heterodyne outcome ``b`` for input ``|a_k>``; normalized over d^2 b."""
    var = 1.0 + ch.output_noise
    dist2 = np.abs(np.asarray(b) - math.sqrt(ch.tau) * np.asarray(a_k)) ** 2
    return np.exp(-dist2 / var) / (math.pi * var)


def likelihoods(b, c: Constellation, ch: ChannelParams) -> np.ndarray:
    """``p(b | a_k)`` for every letter, shape ``b.shape + (N,)``."""
    b = np.asarray(b, dtype=complex)
    return heterodyne_likelihood(b[..., None], c.amplitudes, ch)


def outcome_density(b, c: Constellation, ch: ChannelParams):
    return likelihoods(b, c, ch).mean(axis=-1)


def posterior(b, c: Constellation, ch: ChannelParams) -> np.ndarray:
    """Bayes posterior ``p(a_k | b)`` over letters, shape ``b.shape + (N,)``."""
    b = np.asarray(b, dtype=complex)
    var = 1.0 + ch.output_noise
    # log-domain so far-out nodes do not underflow to 0/0
    logl = -np.abs(b[..., None] - math.sqrt(ch.tau) * c.amplitudes) ** 2 / var
    logl -= logl.max(axis=-1, keepdims=True)
    w = np.exp(logl)
    return w / w.sum(axis=-1, keepdims=True)


def bra_coherent(b: complex, dim: int) -> np.ndarray:
    """Components ``<b|n>`` of the (unnormalized-by-truncation) coherent bra."""
    return coherent_amplitudes(b, dim).conj()


def _coherent_bras(b: np.ndarray, dim: int) -> np.ndarray:
    n = np.arange(dim)
    log_norm = -0.5 * np.abs(b)[:, None] ** 2 - 0.5 * gammaln(n + 1)[None, :]
    return np.exp(log_norm) * np.conj(b)[:, None] ** n[None, :]


def project_bob(out: TripartiteOutput, b: complex) -> np.ndarray:
    """Unnormalized Eve vector ``<b|_B |Psi_k>`` on ``(E', e)``; squared norm / pi is p(b|a_k)."""
    psi = out.state.tensor()
    return np.tensordot(bra_coherent(b, psi.shape[0]), psi, axes=(0, 0))


def fock_heterodyne_likelihood(b: complex, out: TripartiteOutput) -> float:
    """``Tr[|b><b|/pi rho_B]`` evaluated in the truncated Fock space."""
    u = project_bob(out, b)
    return float(np.sum(np.abs(u) ** 2) / math.pi)


def eve_state_given_outcome(b: complex, c: Constellation, ch: ChannelParams,
                            cutoff: FockCutoff | None = None,
                            mode: str = EXACT) -> DensityMatrix:
    """Eve's state on ``(E', e)`` conditioned on Bob's heterodyne outcome ``b``.

    ``exact`` projects mode B of each ``|Psi_k>`` onto ``<b|`` before mixing;
    ``strict-paper`` mixes the unconditioned ``rho_Eve|k`` with the posterior.
    """
    _check_mode(mode)
    outs = [propagate(c, k, ch, cutoff) for k in range(c.n)]
    d = outs[0].state.mode_dims[0]
    if mode == EXACT:
        us = np.stack([project_bob(o, b).ravel() for o in outs])
        rho = us.T @ us.conj()
        rho /= np.trace(rho).real
    else:
        w = posterior(b, c, ch)
        rho = sum(w[k] * eve_conditional_state(o).entries for k, o in enumerate(outs))
    return DensityMatrix((d, d), rho)


def _check_mode(mode: str):
    if mode not in CONDITIONING_MODES:
        raise ValueError(f"mode must be one of {CONDITIONING_MODES}, got {mode!r}")


class EveEnsemble:
    """All letters of one protocol point, propagated once.

    Spectra are computed on the small side of each Schmidt decomposition: the
    cross tensor ``T[k,n,l,m] = sum_x Psi_k[n,x] conj(Psi_l[m,x])`` (x runs
    over Eve's modes) carries everything needed for Eve's average,
    letter-conditioned and outcome-conditioned entropies, without forming
    any matrix on Eve's two-mode space.
    """

    def __init__(self, c: Constellation, ch: ChannelParams, cutoff: FockCutoff | None = None):
        c._require_finite()
        self.constellation = c
        self.channel = ch
        self.cutoff = cutoff if cutoff is not None else default_cutoff(c, ch)
        self.outputs = [propagate(c, k, ch, self.cutoff) for k in range(c.n)]
        d = self.cutoff.dim
        flat = np.stack([o.state.amplitudes.reshape(d, d * d) for o in self.outputs])
        self.cross = np.einsum("kna,lma->knlm", flat, flat.conj(), optimize=True)

    @property
    def dim(self) -> int:
        return self.cutoff.dim

    def average_entropy(self) -> float:
        n, d = self.constellation.n, self.dim
        bk = self.cross.reshape(n * d, n * d) / n
        return entropy_from_eigenvalues(np.linalg.eigvalsh(0.5 * (bk + bk.conj().T)))

    def conditional_entropy(self, k: int) -> float:
        blk = self.cross[k, :, k, :]
        return entropy_from_eigenvalues(np.linalg.eigvalsh(0.5 * (blk + blk.conj().T)))

    def conditional_entropies(self) -> np.ndarray:
        return np.array([self.conditional_entropy(k) for k in range(self.constellation.n)])

    def outcome_gram(self, b) -> np.ndarray:
        """``X[x,k,l] = <u_l(b_x)|u_k(b_x)>`` for projected Eve vectors ``u``."""
        b = np.atleast_1d(np.asarray(b, dtype=complex))
        bras = _coherent_bras(b.ravel(), self.dim)
        return np.einsum("xn,knlm,xm->xkl", bras, self.cross, bras.conj(), optimize=True)

    def fock_likelihoods(self, b) -> np.ndarray:
        x = self.outcome_gram(b)
        return np.real(np.diagonal(x, axis1=1, axis2=2)) / math.pi

    def outcome_conditioned_entropies(self, b, mode: str = EXACT, chunk: int = 256) -> np.ndarray:
        """``S(rho_E'e|b)`` at every node of ``b``."""
        _check_mode(mode)
        b = np.atleast_1d(np.asarray(b, dtype=complex)).ravel()
        out = np.empty(b.size)
        for start in range(0, b.size, chunk):
            sl = slice(start, start + chunk)
            out[sl] = self._entropies(b[sl], mode)
        return out

    def _entropies(self, b: np.ndarray, mode: str) -> np.ndarray:
        if mode == EXACT:
            x = self.outcome_gram(b)
            tr = np.real(np.trace(x, axis1=1, axis2=2))
            x = x / tr[:, None, None]
        else:
            n, d = self.constellation.n, self.dim
            sw = np.sqrt(posterior(b, self.constellation, self.channel))
            x = (sw[:, :, None, None, None] * self.cross[None]
                 * sw[:, None, None, :, None]).reshape(b.size, n * d, n * d)
        x = 0.5 * (x + np.conj(np.swapaxes(x, 1, 2)))
        return batched_entropy(np.linalg.eigvalsh(x))
