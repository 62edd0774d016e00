"""Key-rate assembly for phase-encoded coherent-state protocols.

Direct (DR) and reverse (RR) reconciliation with heterodyne detection, the
pure-loss quantum-memory upper bound for DR, and the Gaussian-modulation
baseline used for comparison.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import (
    EXACT,
    ChannelParams,
    EveEnsemble,
    _check_mode,
    default_cutoff,
    outcome_density,
    posterior,
)
from .constellation import (
    INFINITE,
    Constellation,
    average_state,
    build_constellation,
    overlap_matrix,
    poisson_entropy,
)
from .fock import FockCutoff, batched_entropy, thermal_entropy, von_neumann_entropy

CONVERGENCE_TOLERANCE = 1e-5
NORMALIZATION_TOLERANCE = 1e-6
DEFAULT_RADIAL = 80
DEFAULT_ANGULAR = 32
CUTOFF_GUARD_EXTRA = 4

METHODS = ("auto", "gram", "fock")


@dataclass(frozen=True)
class QuadratureGrid:
    """Polar product rule over one ``2 pi / N`` wedge of the outcome plane.

    Gauss-Legendre in the radius on ``[0, r_max]``, midpoint rule in the
    angle. ``weights`` already include the Jacobian ``r`` and the wedge
    multiplicity, so integrands invariant under rotation by ``2 pi / N``
    integrate over the full plane as ``sum(weights * f(points))``.
    """

    radii: np.ndarray
    radial_weights: np.ndarray
    angles: np.ndarray
    wedge_multiplicity: int
    r_max: float

    @property
    def n_radial(self) -> int:
        return self.radii.size

    @property
    def n_angular(self) -> int:
        return self.angles.size

    @property
    def points(self) -> np.ndarray:
        return (self.radii[:, None] * np.exp(1j * self.angles[None, :])).ravel()

    @property
    def weights(self) -> np.ndarray:
        dphi = 2 * np.pi / self.wedge_multiplicity / self.n_angular
        w = (self.radial_weights * self.radii)[:, None] * dphi * np.ones(self.n_angular)
        return (w * self.wedge_multiplicity).ravel()

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def refined(self) -> "QuadratureGrid":
        return make_grid_raw(self.r_max, self.wedge_multiplicity,
                             2 * self.n_radial, 2 * self.n_angular)


def make_grid_raw(r_max: float, wedges: int, n_radial: int, n_angular: int) -> QuadratureGrid:
    x, w = np.polynomial.legendre.leggauss(n_radial)
    radii = 0.5 * r_max * (x + 1)
    angles = (np.arange(n_angular) + 0.5) * (2 * np.pi / wedges) / n_angular
    return QuadratureGrid(radii, 0.5 * r_max * w, angles, wedges, r_max)


def make_grid(c: Constellation, ch: ChannelParams, n_radial: int = DEFAULT_RADIAL,
              n_angular: int = DEFAULT_ANGULAR) -> QuadratureGrid:
    r_max = math.sqrt(ch.tau) * c.z + 6 * math.sqrt(1 + ch.output_noise)
    return make_grid_raw(r_max, c.n, n_radial, n_angular)


@dataclass
class RatePoint:
    z: float
    n: object
    tau: float
    nbar: float
    direction: str
    i_ab: float
    holevo: float
    rate: float
    mode: str = EXACT
    beta: float = 1.0
    cutoff_dim: int | None = None
    n_radial: int | None = None
    n_angular: int | None = None
    diagnostics: dict = field(default_factory=dict)
    converged: bool = True

    def as_dict(self) -> dict:
        out = asdict(self)
        out["n"] = str(self.n)
        return out


def shannon_entropy(p: np.ndarray) -> np.ndarray:
    """Row-wise Shannon entropy (bits) of probability vectors."""
    safe = np.where(p > 0, p, 1.0)
    return -np.sum(np.where(p > 0, p * np.log2(safe), 0.0), axis=-1)


def _resolve_method(method: str, ch: ChannelParams) -> str:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if method == "auto":
        return "gram" if ch.is_pure_loss else "fock"
    if method == "gram" and not ch.is_pure_loss:
        raise ValueError("the Gram-matrix route is only valid for a pure-loss channel")
    return method


def _require_finite(c: Constellation):
    if not c.is_finite:
        raise ValueError("realistic rates need a finite alphabet")


# ---------------------------------------------------------------------------
# Alice-Bob


def mutual_information(c: Constellation, ch: ChannelParams,
                       grid: QuadratureGrid | None = None) -> float:
    """Shannon information between the letter and Bob's heterodyne outcome, bits."""
    _require_finite(c)
    grid = grid or make_grid(c, ch)
    b = grid.points
    cond = grid.integrate(outcome_density(b, c, ch) * shannon_entropy(posterior(b, c, ch)))
    return float(np.clip(math.log2(c.n) - cond, 0.0, math.log2(c.n)))


def outcome_normalization(c: Constellation, ch: ChannelParams, grid: QuadratureGrid) -> float:
    return grid.integrate(outcome_density(grid.points, c, ch))


# ---------------------------------------------------------------------------
# Eve


def holevo_dr(c: Constellation, ch: ChannelParams, cutoff: FockCutoff | None = None,
              method: str = "auto") -> float:
    """Eve's Holevo information on Alice's letter, bits."""
    _require_finite(c)
    method = _resolve_method(method, ch)
    if method == "gram":
        return von_neumann_entropy(average_state(c, math.sqrt(1 - ch.tau)))
    ens = EveEnsemble(c, ch, cutoff)
    return max(0.0, ens.average_entropy() - ens.conditional_entropy(0))


def _gram_conditional_entropies(c: Constellation, ch: ChannelParams, b: np.ndarray) -> np.ndarray:
    """``S(sum_k p(a_k|b) |sqrt(1-tau) a_k><.|)`` per node, from Eve's Gram matrix."""
    v = overlap_matrix(c, math.sqrt(1 - ch.tau))
    sw = np.sqrt(posterior(b, c, ch))
    g = sw[:, :, None] * v[None] * sw[:, None, :]
    g = 0.5 * (g + np.conj(np.swapaxes(g, 1, 2)))
    return batched_entropy(np.linalg.eigvalsh(g))


def holevo_rr(c: Constellation, ch: ChannelParams, grid: QuadratureGrid | None = None,
              cutoff: FockCutoff | None = None, mode: str = EXACT,
              method: str = "auto") -> float:
    """Eve's Holevo information on Bob's outcome, ``S(rho_E) - int p(b) S(rho_E|b)``."""
    _require_finite(c)
    _check_mode(mode)
    method = _resolve_method(method, ch)
    grid = grid or make_grid(c, ch)
    b = grid.points
    pb = outcome_density(b, c, ch)
    if method == "gram":
        total = von_neumann_entropy(average_state(c, math.sqrt(1 - ch.tau)))
        cond = _gram_conditional_entropies(c, ch, b)
    else:
        ens = EveEnsemble(c, ch, cutoff)
        total = ens.average_entropy()
        cond = ens.outcome_conditioned_entropies(b, mode)
    return total - grid.integrate(pb * cond)


# ---------------------------------------------------------------------------
# rates


def rate_dr_upper(z: float, n, tau: float) -> float:
    """Pure-loss DR rate with a quantum memory at Bob: ``S(rho_B) - S(rho_E')``."""
    ch = ChannelParams(tau)
    c = build_constellation(z, n)
    if c.n is INFINITE:
        return poisson_entropy(tau * z * z) - poisson_entropy((1 - tau) * z * z)
    s_b = von_neumann_entropy(average_state(c, math.sqrt(ch.tau)))
    s_e = von_neumann_entropy(average_state(c, math.sqrt(1 - ch.tau)))
    return s_b - s_e


def upper_bound_terms(z: float, n, tau: float) -> tuple[float, float]:
    c = build_constellation(z, n)
    if c.n is INFINITE:
        return poisson_entropy(tau * z * z), poisson_entropy((1 - tau) * z * z)
    return (von_neumann_entropy(average_state(c, math.sqrt(tau))),
            von_neumann_entropy(average_state(c, math.sqrt(1 - tau))))


def _terms(direction, c, ch, grid, cutoff, mode, method):
    i_ab = mutual_information(c, ch, grid)
    if direction == "dr":
        chi = holevo_dr(c, ch, cutoff, method)
    else:
        chi = holevo_rr(c, ch, grid, cutoff, mode, method)
    return i_ab, chi


def _rate_point(direction, c, ch, grid, cutoff, mode, method, beta, check_convergence) -> RatePoint:
    _require_finite(c)
    _check_mode(mode)
    method = _resolve_method(method, ch)
    grid = grid or make_grid(c, ch)
    uses_fock = method == "fock"
    if uses_fock and cutoff is None:
        cutoff = default_cutoff(c, ch)
    i_ab, chi = _terms(direction, c, ch, grid, cutoff, mode, method)
    norm_error = abs(outcome_normalization(c, ch, grid) - 1.0)
    diagnostics = {"normalization_error": norm_error}
    converged = norm_error <= NORMALIZATION_TOLERANCE
    if check_convergence:
        fine = grid.refined()
        i_f, chi_f = _terms(direction, c, ch, fine, cutoff, mode, method)
        diagnostics["grid_delta"] = abs((beta * i_f - chi_f) - (beta * i_ab - chi))
        converged &= diagnostics["grid_delta"] < CONVERGENCE_TOLERANCE
        if uses_fock:
            chi_c = _terms(direction, c, ch, grid, cutoff.enlarged(CUTOFF_GUARD_EXTRA),
                           mode, method)[1]
            diagnostics["cutoff_delta"] = abs(chi_c - chi)
            converged &= diagnostics["cutoff_delta"] < CONVERGENCE_TOLERANCE
    return RatePoint(
        z=c.z, n=c.n, tau=ch.tau, nbar=ch.nbar, direction=direction,
        i_ab=i_ab, holevo=chi, rate=beta * i_ab - chi, mode=mode, beta=beta,
        cutoff_dim=cutoff.dim if uses_fock else None,
        n_radial=grid.n_radial, n_angular=grid.n_angular,
        diagnostics=diagnostics, converged=bool(converged),
    )


def rate_dr(c: Constellation, ch: ChannelParams, grid: QuadratureGrid | None = None,
            cutoff: FockCutoff | None = None, beta: float = 1.0, method: str = "auto",
            check_convergence: bool = True) -> RatePoint:
    """Realistic DR rate with heterodyne detection: ``beta I(A:B) - chi(Eve:A)``."""
    return _rate_point("dr", c, ch, grid, cutoff, EXACT, method, beta, check_convergence)


def rate_rr(c: Constellation, ch: ChannelParams, grid: QuadratureGrid | None = None,
            cutoff: FockCutoff | None = None, mode: str = EXACT, beta: float = 1.0,
            method: str = "auto", check_convergence: bool = True) -> RatePoint:
    """Realistic RR rate: ``beta I(A:B) - S(rho_E) + int p(b) S(rho_E|b) d^2b``."""
    return _rate_point("rr", c, ch, grid, cutoff, mode, method, beta, check_convergence)


# ---------------------------------------------------------------------------
# Gaussian-modulation baseline


def _h(nu: float) -> float:
    # entropy of a mode with symplectic eigenvalue nu (vacuum = 1)
    return thermal_entropy(max(nu - 1.0, 0.0) / 2.0)


def gaussian_rr_terms(v_m: float, ch: ChannelParams) -> tuple[float, float]:
    """(I_AB, chi_BE) for Gaussian-modulated coherent states with heterodyne detection.

    Entanglement-based picture: Alice holds a TMSV of variance ``V = v_m + 1``
    and heterodynes one arm; the other crosses the entangling cloner.
    """
    if v_m < 0:
        raise ValueError(f"modulation variance must be >= 0, got {v_m}")
    v = v_m + 1.0
    w = ch.omega
    a = v
    b = ch.tau * v + (1 - ch.tau) * w
    c2 = ch.tau * (v * v - 1)
    b_given_a = ch.tau + (1 - ch.tau) * w
    i_ab = math.log2((b + 1) / (b_given_a + 1))

    delta = a * a + b * b - 2 * c2
    det = a * b - c2
    # delta^2 - 4 det^2 factors, which keeps nu2 accurate next to the vacuum
    disc = abs(a - b) * math.sqrt(max((a + b) ** 2 - 4 * c2, 0.0))
    nu1 = math.sqrt((delta + disc) / 2)
    nu2 = max(det / nu1, 1.0)
    nu3 = (det + a) / (b + 1)  # Alice conditioned on Bob's heterodyne
    chi = _h(nu1) + _h(nu2) - _h(nu3)
    return i_ab, chi


def gaussian_rr_rate(v_m: float, ch: ChannelParams, beta: float = 1.0) -> float:
    i_ab, chi = gaussian_rr_terms(v_m, ch)
    return beta * i_ab - chi
