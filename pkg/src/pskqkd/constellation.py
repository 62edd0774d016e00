"""Phase-encoded coherent-state alphabets and their average states."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .fock import (
    DEFAULT_TAIL_TOLERANCE,
    CutoffError,
    DensityMatrix,
    FockCutoff,
    choose_cutoff,
    coherent_amplitudes,
    entropy_from_eigenvalues,
    poisson_pmf,
    required_dim,
    von_neumann_entropy,
)

# Below this squared Gram-Schmidt pivot the recursion is abandoned for the
# Fock-basis route.
SINGULAR_PIVOT = 1e-14
INCONSISTENT_PIVOT = -1e-10


class _Infinite(enum.Enum):
    INFINITE = "inf"

    def __str__(self):
        return "inf"


INFINITE = _Infinite.INFINITE
AlphabetSize = Union[int, _Infinite]


class InconsistentGramError(ValueError):
    pass


class SingularGramError(ArithmeticError):
    """Gram-Schmidt pivot too small for the recursion to be trusted."""


def parse_alphabet_size(value) -> AlphabetSize:
    if value is INFINITE:
        return INFINITE
    if isinstance(value, str) and value.strip().lower() in {"inf", "infinite", "infinity", "∞"}:
        return INFINITE
    n = int(value)
    if n != float(value):
        raise ValueError(f"alphabet size must be an integer, got {value!r}")
    return n


@dataclass(frozen=True)
class Constellation:
    z: float
    n: AlphabetSize

    @property
    def is_finite(self) -> bool:
        return self.n is not INFINITE

    @property
    def amplitudes(self) -> np.ndarray:
        self._require_finite()
        return self.z * np.exp(2j * np.pi * np.arange(self.n) / self.n)

    @property
    def priors(self) -> np.ndarray:
        self._require_finite()
        return np.full(self.n, 1.0 / self.n)

    def scaled(self, s: float) -> "Constellation":
        return Constellation(self.z * s, self.n)

    def _require_finite(self):
        if not self.is_finite:
            raise ValueError("operation undefined for the infinite alphabet; "
                             "use continuous_limit_state")


def build_constellation(z: float, n) -> Constellation:
    n = parse_alphabet_size(n)
    if not z >= 0:
        raise ValueError(f"radius must be >= 0, got {z}")
    if n is not INFINITE and n < 1:
        raise ValueError(f"alphabet size must be >= 1, got {n}")
    return Constellation(float(z), n)


def overlap_matrix(c: Constellation, scale: float = 1.0) -> np.ndarray:
    """Gram matrix ``V_ij = <s a_i | s a_j>`` of the scaled constellation."""
    c._require_finite()
    n = c.n
    k = np.arange(n)
    diff = k[None, :] - k[:, None]
    return np.exp((scale * c.z) ** 2 * (np.exp(2j * np.pi * diff / n) - 1.0))


def gram_schmidt_coefficients(v: np.ndarray) -> np.ndarray:
    """Lower-triangular ``M`` with ``|a_k> = sum_i M_ki |i>`` in the Gram-Schmidt basis.

    Follows the row recursion ``M_k0 = V_0k``,
    ``M_ki = (V_ik - sum_{j<i} M*_ij M_kj) / M_ii`` and
    ``M_kk = sqrt(1 - sum_{i<k} |M_ki|^2)``, so that ``conj(M) @ M.T == V``.

    Raises SingularGramError when a pivot drops below ``SINGULAR_PIVOT``.
    """
    v = np.asarray(v, dtype=complex)
    n = v.shape[0]
    m = np.zeros((n, n), dtype=complex)
    for k in range(n):
        m[k, 0] = v[0, k]
        for i in range(1, k):
            m[k, i] = (v[i, k] - np.dot(m[i, :i].conj(), m[k, :i])) / m[i, i].real
        if k == 0:
            continue
        pivot = 1.0 - float(np.sum(np.abs(m[k, :k]) ** 2))
        if pivot < INCONSISTENT_PIVOT:
            raise InconsistentGramError(f"row {k}: 1 - sum|M|^2 = {pivot:.3g}")
        if pivot < SINGULAR_PIVOT and k < n - 1:
            raise SingularGramError(f"row {k}: pivot {pivot:.3g}")
        m[k, k] = math.sqrt(max(pivot, 0.0))
    return m


def fock_average_state(c: Constellation, scale: float = 1.0,
                       cutoff: FockCutoff | None = None) -> DensityMatrix:
    """Average state of the scaled constellation in the truncated Fock basis.

    Only entries with ``n = m (mod N)`` survive the phase average.
    """
    c._require_finite()
    z = c.z * scale
    if cutoff is None:
        cutoff = choose_cutoff(z * z)
    d = cutoff.dim
    base = coherent_amplitudes(z, d)
    lost = max(0.0, 1.0 - float(np.sum(np.abs(base) ** 2)))
    if lost > cutoff.tail_tolerance:
        raise CutoffError(f"constellation z={z:.4g} loses {lost:.3g} at dim={d}",
                          required_dim(z * z, 0.0, cutoff.tail_tolerance))
    n = np.arange(d)
    selection = ((n[:, None] - n[None, :]) % c.n) == 0
    rho = np.where(selection, np.outer(base, base.conj()), 0.0)
    rho /= np.trace(rho).real
    return DensityMatrix((d,), rho)


def average_state(c: Constellation, scale: float = 1.0) -> DensityMatrix:
    """``(1/N) sum_k |s a_k><s a_k|`` in the Gram-Schmidt basis (order N).

    Falls back to the Fock basis when the Gram matrix is numerically singular.
    """
    c._require_finite()
    try:
        m = gram_schmidt_coefficients(overlap_matrix(c, scale))
    except SingularGramError:
        return fock_average_state(c, scale)
    rho = m.T @ m.conj() / c.n
    return DensityMatrix((c.n,), 0.5 * (rho + rho.conj().T))


def continuous_limit_state(z: float, cutoff: FockCutoff | None = None) -> DensityMatrix:
    """Phase-averaged coherent state: diagonal Poisson(z^2) weights."""
    if not z >= 0:
        raise ValueError(f"radius must be >= 0, got {z}")
    mean = z * z
    if cutoff is None:
        cutoff = FockCutoff(required_dim(mean, 0.0, DEFAULT_TAIL_TOLERANCE))
    p = poisson_pmf(mean, cutoff.dim)
    lost = max(0.0, 1.0 - p.sum())
    if lost > cutoff.tail_tolerance:
        raise CutoffError(f"Poisson({mean:.4g}) loses {lost:.3g} at dim={cutoff.dim}",
                          required_dim(mean, 0.0, cutoff.tail_tolerance))
    return DensityMatrix((cutoff.dim,), np.diag(p / p.sum()).astype(complex))


# Above this mean the asymptotic series beats the direct sum, whose log-pmf
# loses digits to cancellation.
POISSON_ASYMPTOTIC_MEAN = 1e3


def poisson_entropy(mean: float) -> float:
    """Shannon entropy of Poisson(mean), bits; the infinite-alphabet source entropy."""
    if mean > POISSON_ASYMPTOTIC_MEAN:
        nats = (0.5 * math.log(2 * math.pi * math.e * mean) - 1 / (12 * mean)
                - 1 / (24 * mean**2) - 19 / (360 * mean**3))
        return nats / math.log(2)
    p = poisson_pmf(mean, required_dim(mean, 0.0, 1e-15))
    return entropy_from_eigenvalues(p)


def source_entropy(z: float, n) -> float:
    """Von Neumann entropy of the average source state, bits."""
    c = build_constellation(z, n)
    if not c.is_finite:
        return poisson_entropy(c.z * c.z)
    return von_neumann_entropy(average_state(c))

