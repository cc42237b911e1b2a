"""
services/entanglement.py

Mode-entanglement measures.

  entropy_of_entanglement   pure states, any partition, straight from the fermionic trace
  negativity / concurrence  qubit measures; they take a QubitImage, never a raw
                            Fock matrix, so a consistent mapping must exist first
  eof_ssr_minimize          upper bound on the SSR-restricted entanglement of
                            formation by optimizing over sector-respecting ensembles

Bound chain checked by build_report: 2N ≤ C and EoF ≤ EoF_ssr.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.optimize import minimize

from app.core.config import settings
from app.core.errors import DimensionMismatch, NoMappingWitness, NotNormalized, NotPure, SsrViolation
from app.core.logger import get_logger
from app.models.domain import ChargePattern, ModePartition
from app.models.response import EntanglementReport
from app.services.mapping import QubitImage, consistent_mapping_search, map_to_qubits, pattern_of
from app.services.numerics import binary_entropy, entropy_of_spectrum, von_neumann_entropy
from app.services.partial_trace import inside_out_partial_trace, inside_out_signs, kept_first_order
from app.services.states import DensityOperator, charge_sectors, check_ssr

logger = get_logger(__name__)

_SIGMA_Y2 = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


# ─────────────────────────────────────────────────────────────────────────────
# Pure states
# ─────────────────────────────────────────────────────────────────────────────

def entropy_of_entanglement(psi: DensityOperator, p: ModePartition, tol: Optional[float] = None) -> float:
    tol = settings.EIGEN_TOL if tol is None else tol
    if not psi.is_pure(tol):
        raise NotPure(f"largest eigenvalue {psi.spectrum().max:.12g}, expected 1")
    return von_neumann_entropy(inside_out_partial_trace(psi, p).matrix, tol)


def schmidt_coefficients(vector, p: ModePartition) -> np.ndarray:
    """Squared Schmidt coefficients of a Fock vector across the mode partition."""
    vec = np.asarray(vector, dtype=np.complex128).reshape(-1)
    if vec.size != 2 ** p.n_modes:
        raise DimensionMismatch(f"vector of length {vec.size} for {p.n_modes} modes")
    signed = vec * inside_out_signs(p.n_modes, p.kept)
    block = signed[kept_first_order(p.n_modes, p.kept)].reshape(2 ** len(p.kept), 2 ** len(p.traced))
    return linalg.svd(block, compute_uv=False) ** 2


def pure_state_entanglement(vector, p: ModePartition, tol: Optional[float] = None) -> float:
    """Entropy of entanglement of a normalized vector, without forming ρ."""
    tol = settings.EIGEN_TOL if tol is None else tol
    weights = schmidt_coefficients(vector, p)
    if abs(weights.sum() - 1.0) > tol:
        raise NotNormalized(f"vector norm² is {weights.sum():.12g}")
    return entropy_of_spectrum(weights, tol)


# ─────────────────────────────────────────────────────────────────────────────
# Qubit measures
# ─────────────────────────────────────────────────────────────────────────────

def _require_image(image) -> QubitImage:
    if not isinstance(image, QubitImage):
        raise NoMappingWitness("qubit measures need a QubitImage from map_to_qubits, not a raw Fock matrix")
    DensityOperator.from_matrix(image.matrix)     # NotAState on bad input
    return image


def partial_transpose(m, dims: tuple[int, int], factor: int = 1) -> np.ndarray:
    """Transpose on factor 0 or 1 of a two-factor space."""
    d_a, d_b = dims
    t = np.asarray(m).reshape(d_a, d_b, d_a, d_b)
    t = t.transpose(0, 3, 2, 1) if factor == 1 else t.transpose(2, 1, 0, 3)
    return t.reshape(d_a * d_b, d_a * d_b)


def negativity(image: QubitImage, cut: int = 1, factor: int = 1) -> float:
    """|Σ of negative eigenvalues| of the partial transpose; the first `cut` qubits form party A."""
    image = _require_image(image)
    if not 1 <= cut < len(image.dims):
        raise DimensionMismatch(f"cut {cut} does not split {len(image.dims)} factors")
    dims = (int(np.prod(image.dims[:cut])), int(np.prod(image.dims[cut:])))
    eigenvalues = np.linalg.eigvalsh(partial_transpose(image.matrix, dims, factor))
    return float(abs(eigenvalues[eigenvalues < 0].sum()))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = linalg.eigh((m + m.conj().T) / 2)
    w = np.where(w > settings.EXACT_TOL, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def concurrence_two_qubit(image: QubitImage) -> float:
    """Wootters concurrence from the singular values of √ρ·√ρ̃, ρ̃ = (σy⊗σy) ρ* (σy⊗σy).

    Those singular values are the square roots of the eigenvalues of √ρ ρ̃ √ρ;
    the SVD keeps the zero ones at round-off instead of √round-off.
    """
    image = _require_image(image)
    if image.dims != (2, 2):
        raise DimensionMismatch(f"concurrence needs a two-qubit image, got dims {image.dims}")
    root = _psd_sqrt(image.matrix)
    root_tilde = _SIGMA_Y2 @ root.conj() @ _SIGMA_Y2
    lam = linalg.svd(root @ root_tilde, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def eof_from_concurrence(c: float) -> float:
    return binary_entropy((1 + np.sqrt(max(0.0, 1 - c * c))) / 2)


def eof_wootters(image: QubitImage) -> float:
    return eof_from_concurrence(concurrence_two_qubit(image))


# ─────────────────────────────────────────────────────────────────────────────
# SSR-restricted entanglement of formation
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SsrEofEstimate:
    value: float
    weights: tuple[float, ...]
    members: tuple[np.ndarray, ...] = field(repr=False)
    restarts: int = 0
    status: str = "upper_bound"


@dataclass(frozen=True, eq=False)
class _Sector:
    """Scaled eigenvectors √w_i·u_i of ρ inside one charge sector, as columns."""

    columns: np.ndarray      # (dim, rank)
    outside: np.ndarray      # basis indices of every other sector

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    @property
    def size(self) -> int:
        """Ensemble members drawn from this sector."""
        return self.rank * self.rank

    def baseline(self) -> np.ndarray:
        """Parameters whose isometry is the first `rank` columns of the identity: the eigen-ensemble."""
        return np.concatenate([np.eye(self.size, self.rank).reshape(-1), np.zeros(self.size * self.rank)])

    def members(self, params: np.ndarray) -> np.ndarray:
        """(size, dim) unnormalized members; their projectors sum to this sector's block of ρ."""
        n = self.size * self.rank
        g = params[:n].reshape(self.size, self.rank) + 1j * params[n:].reshape(self.size, self.rank)
        u, _ = linalg.qr(g, mode="economic")
        return u @ self.columns.T


def _sectors(rho: DensityOperator, charges: ChargePattern) -> list[_Sector]:
    out = []
    for indices in charge_sectors(charges).values():
        block = rho.matrix[np.ix_(indices, indices)]
        if np.max(np.abs(block - np.diag(np.diag(block)))) <= settings.EXACT_TOL:
            w, u = np.real(np.diag(block)), np.eye(len(indices))
        else:
            w, u = linalg.eigh(block)
        keep = w > settings.EXACT_TOL
        if not keep.any():
            continue
        columns = np.zeros((rho.dim, int(keep.sum())), dtype=np.complex128)
        columns[indices, :] = u[:, keep] * np.sqrt(w[keep])
        out.append(_Sector(columns=columns, outside=np.setdiff1d(np.arange(rho.dim), indices)))
    return out


class _SchmidtSplitter:
    """Batched squared Schmidt coefficients across one partition."""

    def __init__(self, p: ModePartition):
        self.signs = inside_out_signs(p.n_modes, p.kept)
        self.order = kept_first_order(p.n_modes, p.kept)
        self.shape = (2 ** len(p.kept), 2 ** len(p.traced))

    def __call__(self, members: np.ndarray) -> np.ndarray:
        blocks = (members * self.signs)[:, self.order].reshape(-1, *self.shape)
        return np.linalg.svd(blocks, compute_uv=False) ** 2


def _average_entanglement(members: np.ndarray, split: _SchmidtSplitter, outside: np.ndarray) -> float:
    """Σ_i p_i E(ψ_i) over unnormalized members; +∞ if any member leaves its charge sector."""
    if outside.size and np.max(np.abs(members[:, outside])) > settings.EXACT_TOL:
        return np.inf
    s = split(members)
    w = s.sum(axis=1)
    live = w > settings.EXACT_TOL
    lam = s[live] / w[live, None]
    terms = np.where(lam > settings.EIGEN_TOL, lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    return float(max(0.0, -np.sum(w[live] * terms.sum(axis=1))))


def _minimize_sector(
    sector: _Sector,
    split: _SchmidtSplitter,
    restarts: int,
    iterations: int,
    rng: np.random.Generator,
) -> tuple[float, np.ndarray, int]:
    def objective(params: np.ndarray) -> float:
        return _average_entanglement(sector.members(params), split, sector.outside)

    best_params = sector.baseline()
    best = objective(best_params)
    # one member per sector cannot be mixed, and zero cannot be undercut
    if sector.rank == 1 or best <= settings.EIGEN_TOL:
        return best, sector.members(best_params), 0

    used, stale = 0, 0
    for _ in range(restarts):
        used += 1
        result = minimize(
            objective,
            rng.normal(size=best_params.size),
            method="L-BFGS-B",
            options={"maxiter": iterations, "ftol": settings.SSR_EOF_FTOL, "gtol": settings.SSR_EOF_GTOL},
        )
        improved = result.fun < best - settings.EIGEN_TOL
        if result.fun < best:
            best, best_params = float(result.fun), result.x
        stale = 0 if improved else stale + 1
        if best <= settings.EIGEN_TOL or stale >= settings.SSR_EOF_PATIENCE:
            break
    return best, sector.members(best_params), used


def eof_ssr_minimize(
    rho: DensityOperator,
    charges: Optional[ChargePattern] = None,
    partition: Optional[ModePartition] = None,
    restarts: Optional[int] = None,
    iterations: Optional[int] = None,
    seed: Optional[int] = None,
) -> SsrEofEstimate:
    """
    Best SSR-respecting pure-state ensemble found for ρ; an upper bound, never the exact minimum.

    The average entanglement splits into one term per charge sector, so each
    sector is searched on its own. Restarts for a sector stop early once
    SSR_EOF_PATIENCE consecutive runs fail to improve on the best value.
    """
    charges = ChargePattern.uniform(rho.n_modes) if charges is None else charges
    partition = ModePartition.keep(rho.n_modes, (1,)) if partition is None else partition
    restarts = settings.SSR_EOF_RESTARTS if restarts is None else restarts
    iterations = settings.SSR_EOF_ITERATIONS if iterations is None else iterations
    if not check_ssr(rho, charges):
        raise SsrViolation("state has coherences between different charge sectors")

    split = _SchmidtSplitter(partition)
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    total, members, used = 0.0, [], 0
    for sector in _sectors(rho, charges):
        value, sector_members, runs = _minimize_sector(sector, split, restarts, iterations, rng)
        total += value
        members.extend(sector_members)
        used += runs

    weights = [float(np.vdot(m, m).real) for m in members]
    kept = [(w, m / np.sqrt(w)) for w, m in zip(weights, members) if w > settings.EXACT_TOL]
    logger.debug(f"SSR EoF estimate | value={total:.6g} members={len(kept)} restarts={used}")
    return SsrEofEstimate(
        value=float(max(0.0, total)),
        weights=tuple(w for w, _ in kept),
        members=tuple(m for _, m in kept),
        restarts=used,
    )


# ─────────────────────────────────────────────────────────────────────────────
# Report
# ─────────────────────────────────────────────────────────────────────────────

def build_report(
    rho: DensityOperator,
    partition: ModePartition,
    charges: Optional[ChargePattern] = None,
    ssr_eof: bool = False,
    restarts: Optional[int] = None,
    iterations: Optional[int] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
) -> EntanglementReport:
    notes: list[str] = []
    report: dict = {"partition": partition}

    if rho.is_pure():
        report["entropy_of_entanglement"] = entropy_of_entanglement(rho, partition)
    else:
        notes.append("state is mixed; entropy of entanglement omitted")

    if rho.n_modes == 2:
        verdict = consistent_mapping_search(2, pattern_of(rho), jobs=jobs)
        try:
            image = map_to_qubits(rho, verdict)
        except NoMappingWitness as e:
            notes.append(f"no qubit measures: {e}")
        else:
            report["negativity"] = negativity(image)
            report["concurrence"] = concurrence_two_qubit(image)
            report["eof_wootters"] = eof_from_concurrence(report["concurrence"])
            report["witness"] = image.witness
    else:
        notes.append("negativity and concurrence are only defined here for two modes with a mapping witness")

    if ssr_eof:
        charges = ChargePattern.uniform(rho.n_modes) if charges is None else charges
        try:
            estimate = eof_ssr_minimize(rho, charges, partition, restarts, iterations, seed)
        except SsrViolation as e:
            notes.append(f"SSR-restricted EoF skipped: {e}")
        else:
            report["eof_ssr_estimate"] = estimate.value

    ok = True
    if "negativity" in report:
        ok &= 2 * report["negativity"] <= report["concurrence"] + 1e-9
    if "eof_wootters" in report and "eof_ssr_estimate" in report:
        ok &= report["eof_wootters"] <= report["eof_ssr_estimate"] + 1e-6
    if not ok:
        logger.error(f"Bound chain violated | partition={partition.label} report={report}")

    return EntanglementReport(**report, bound_chain_ok=bool(ok), notes=notes)
