"""Truncated Fock-space kernel.

States live on a product of truncated bosonic modes, levels ``0..dim-1`` per
mode, stored row-major over modes. Everything here is a pure function of its
inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln

DEFAULT_TAIL_TOLERANCE = 1e-10

# eigenvalue clamp window for entropies
NEGATIVE_EIGENVALUE_FLOOR = -1e-10
ZERO_EIGENVALUE_CEILING = 1e-12
HERMITIAN_TOLERANCE = 1e-12


class CutoffError(ValueError):
    """The truncation discards more probability mass than allowed."""

    def __init__(self, message: str, required_dim: int):
        super().__init__(f"{message} (required dim >= {required_dim})")
        self.required_dim = required_dim


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class FockCutoff:
    dim: int
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"cutoff dim must be an integer >= 2, got {self.dim}")
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")

    def enlarged(self, extra: int) -> "FockCutoff":
        return FockCutoff(self.dim + extra, self.tail_tolerance)


@dataclass(frozen=True)
class StateVector:
    mode_dims: tuple[int, ...]
    amplitudes: np.ndarray
    raw_norm: float = 1.0

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.mode_dims)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    mode_dims: tuple[int, ...]
    entries: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(_hermitian_part(self.entries))


@dataclass(frozen=True)
class UnitaryMatrix:
    mode_dims: tuple[int, int]
    entries: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# cutoff selection


def poisson_pmf(mean: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    if mean == 0:
        out = np.zeros(dim)
        out[0] = 1.0
        return out
    return np.exp(-mean + n * math.log(mean) - gammaln(n + 1))


def thermal_pmf(nbar: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    q = nbar / (nbar + 1.0)
    return (1.0 - q) * q**n


def _tail(pmf: np.ndarray) -> np.ndarray:
    """tail[d] = mass at levels >= d, computed without cancellation."""
    return np.concatenate([np.cumsum(pmf[::-1])[::-1], [0.0]])


def required_dim(mean_photons: float, nbar: float = 0.0,
                 tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> int:
    """Smallest per-mode dim such that a coherent input of ``mean_photons``
    combined with a thermal mode of ``nbar`` loses at most ``tail_tolerance``.

    The total photon number of the two inputs is conserved by a beam splitter,
    so bounding its tail bounds the loss in every output mode.
    """
    span = int(mean_photons + 40 * math.sqrt(mean_photons + 1) + 60 * (nbar + 1)) + 20
    total = np.convolve(poisson_pmf(mean_photons, span), thermal_pmf(nbar, span))[:span]
    tail = _tail(total)
    ok = np.nonzero(tail[:span] <= tail_tolerance)[0]
    return max(int(ok[0]) if ok.size else span, 2)


def choose_cutoff(mean_photons: float, nbar: float = 0.0,
                  tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> FockCutoff:
    """Default cutoff: the ``2|a|^2`` heuristic with margins, raised until the
    discarded tail is below ``tail_tolerance``."""
    heuristic = max(math.ceil(2 * mean_photons) + 6, math.ceil(10 * (nbar + 1)), 10)
    dim = max(heuristic, required_dim(mean_photons, nbar, tail_tolerance))
    return FockCutoff(dim, tail_tolerance)


# ---------------------------------------------------------------------------
# states


def coherent_amplitudes(a: complex, dim: int) -> np.ndarray:
    """Unnormalized Fock components ``exp(-|a|^2/2) a^n / sqrt(n!)``."""
    n = np.arange(dim)
    if a == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    r, phi = abs(a), np.angle(a)
    mag = np.exp(-0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1))
    return mag * np.exp(1j * phi * n)


def coherent_vector(a: complex, cutoff: FockCutoff) -> StateVector:
    vec = coherent_amplitudes(a, cutoff.dim)
    norm = float(np.linalg.norm(vec))
    lost = max(0.0, 1.0 - norm**2)
    if lost > cutoff.tail_tolerance:
        need = required_dim(abs(a) ** 2, 0.0, cutoff.tail_tolerance)
        raise CutoffError(
            f"coherent state |a|^2={abs(a)**2:.4g} loses {lost:.3g} at dim={cutoff.dim}", need)
    return StateVector((cutoff.dim,), vec / norm, raw_norm=norm)


def squeezing_lambda(nbar: float) -> float:
    return math.tanh(0.5 * math.acosh(2 * nbar + 1))


def tmsv_vector(nbar: float, cutoff: FockCutoff) -> StateVector:
    """Two-mode squeezed vacuum purifying a thermal state of ``nbar`` photons.

    Uses the ``+lambda`` phase convention; entropies do not depend on it.
    """
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    d = cutoff.dim
    lam = squeezing_lambda(nbar)
    diag = math.sqrt(1 - lam**2) * lam ** np.arange(d)
    norm = float(np.linalg.norm(diag))
    lost = max(0.0, 1.0 - norm**2)
    if lost > cutoff.tail_tolerance:
        raise CutoffError(f"TMSV nbar={nbar:.4g} loses {lost:.3g} at dim={d}",
                          required_dim(0.0, nbar, cutoff.tail_tolerance))
    psi = np.zeros((d, d), dtype=complex)
    psi[np.arange(d), np.arange(d)] = diag / norm
    return StateVector((d, d), psi.ravel(), raw_norm=norm)


def product_state(*states: StateVector) -> StateVector:
    amps = states[0].amplitudes
    dims = tuple(states[0].mode_dims)
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        dims += tuple(s.mode_dims)
    return StateVector(dims, amps)


# ---------------------------------------------------------------------------
# beam splitter


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def beam_splitter_angle(tau: float) -> float:
    if not 0 < tau <= 1:
        raise ValueError(f"transmissivity must lie in (0, 1], got {tau}")
    return math.acos(math.sqrt(tau))


def _expm_antihermitian(gen: np.ndarray) -> np.ndarray:
    # i*gen is Hermitian, so exp(gen) = V exp(-i w) V^dag
    w, v = np.linalg.eigh(1j * gen)
    return (v * np.exp(-1j * w)) @ v.conj().T


def beam_splitter_unitary(tau: float, cutoff: FockCutoff) -> UnitaryMatrix:
    """``exp[theta (a_A^dag a_E - a_A a_E^dag)]`` on the truncated two-mode space.

    Exact on every total-photon-number block below ``cutoff.dim``; with this
    sign the input ``|a>|0>`` leaves as ``|sqrt(tau) a>|-sqrt(1-tau) a>``.
    """
    theta = beam_splitter_angle(tau)
    d = cutoff.dim
    a = annihilation(d)
    eye = np.eye(d)
    a_A, a_E = np.kron(a, eye), np.kron(eye, a)
    gen = theta * (a_A.conj().T @ a_E - a_A @ a_E.conj().T)
    return UnitaryMatrix((d, d), _expm_antihermitian(gen))


@lru_cache(maxsize=64)
def _block_unitary(theta: float, n: int) -> np.ndarray:
    """Beam splitter restricted to total photon number ``n``.

    Basis ``|i, n-i>`` for ``i = 0..n``.
    """
    i = np.arange(n)
    # a_A^dag a_E |i, n-i> = sqrt(i+1) sqrt(n-i) |i+1, n-i-1>
    up = np.sqrt((i + 1.0) * (n - i))
    gen = np.zeros((n + 1, n + 1))
    gen[i + 1, i] = up
    gen -= gen.T
    u = _expm_antihermitian(theta * gen.astype(complex))
    u.setflags(write=False)
    return u


def apply_beam_splitter(psi: np.ndarray, tau: float, out_dim: int) -> np.ndarray:
    """Apply the beam splitter to the first two axes of ``psi`` exactly.

    Every photon-number block of the input is treated in full, so no error is
    made beyond discarding output levels ``>= out_dim``.
    """
    theta = beam_splitter_angle(tau)
    d_a, d_e = psi.shape[:2]
    rest = psi.shape[2:]
    flat = psi.reshape(d_a, d_e, -1)
    full = d_a + d_e - 1
    out = np.zeros((full, full, flat.shape[2]), dtype=complex)
    for n in range(d_a + d_e - 1):
        i = np.arange(n + 1)
        j = n - i
        block_in = np.zeros((n + 1, flat.shape[2]), dtype=complex)
        valid = (i < d_a) & (j < d_e)
        block_in[valid] = flat[i[valid], j[valid]]
        out[i, j] = _block_unitary(theta, n) @ block_in
    return out[:out_dim, :out_dim].reshape((out_dim, out_dim) + rest)


# ---------------------------------------------------------------------------
# reductions and entropy


def _hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def partial_trace(state: StateVector | DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    dims = tuple(state.mode_dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or len(keep) == len(dims) or keep[0] < 0 or keep[-1] >= len(dims):
        raise ValueError(f"keep must be a nonempty proper subset of modes 0..{len(dims) - 1}")
    drop = [m for m in range(len(dims)) if m not in keep]
    dk = int(np.prod([dims[m] for m in keep]))
    if isinstance(state, StateVector):
        psi = np.transpose(state.tensor(), keep + drop).reshape(dk, -1)
        return DensityMatrix(tuple(dims[m] for m in keep), psi @ psi.conj().T)
    nm = len(dims)
    rho = state.entries.reshape(dims + dims)
    row = list(range(nm))
    col = [m + nm if m in keep else m for m in range(nm)]
    out = [m for m in keep] + [m + nm for m in keep]
    red = np.einsum(rho, row + col, out)
    return DensityMatrix(tuple(dims[m] for m in keep), red.reshape(dk, dk))


def entropy_from_eigenvalues(eigs: np.ndarray) -> float:
    """Shannon entropy in bits of a spectrum, with the clamp convention."""
    eigs = np.real(np.asarray(eigs, dtype=complex))
    if eigs.size and eigs.min() < NEGATIVE_EIGENVALUE_FLOOR:
        raise InvalidStateError(f"eigenvalue {eigs.min():.3g} below {NEGATIVE_EIGENVALUE_FLOOR}")
    p = eigs[eigs > ZERO_EIGENVALUE_CEILING]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def batched_entropy(eigs: np.ndarray) -> np.ndarray:
    """Row-wise version of :func:`entropy_from_eigenvalues` for ``(..., k)`` arrays."""
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size and eigs.min() < NEGATIVE_EIGENVALUE_FLOOR:
        raise InvalidStateError(f"eigenvalue {eigs.min():.3g} below {NEGATIVE_EIGENVALUE_FLOOR}")
    p = np.where(eigs > ZERO_EIGENVALUE_CEILING, eigs, 1.0)
    return np.maximum(0.0, -np.sum(np.where(eigs > ZERO_EIGENVALUE_CEILING, p * np.log2(p), 0.0), axis=-1))


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > HERMITIAN_TOLERANCE:
        raise InvalidStateError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return entropy_from_eigenvalues(np.linalg.eigvalsh(_hermitian_part(m)))


def thermal_entropy(nbar):
    """Bosonic entropy g(x) = (x+1) log2(x+1) - x log2 x, in bits."""
    x = np.asarray(nbar, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    out = np.where(x > 0, ((safe + 1) * np.log1p(safe) - safe * np.log(safe)) / np.log(2), 0.0)
    return float(out) if out.ndim == 0 else out


def mean_photon_number(rho: DensityMatrix) -> float:
    if len(rho.mode_dims) != 1:
        raise ValueError("mean_photon_number expects a single-mode state")
    return float(np.real(np.sum(np.arange(rho.mode_dims[0]) * np.diag(rho.entries))))
