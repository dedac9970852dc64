"""Dense state vectors over a sector basis: projector expectation, Born-rule
measurement collapse, Pauli application, energy and fidelity.

The projector kernel never materializes global matrices: per term it gathers
the 2^|support| amplitudes of each complementary-configuration group, applies
the dense local operator, and scatters back.  Group traversal order is fixed
(ascending basis ordinal of the group representative) for bit-exact replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import SectorBasis, site_mask
from .errors import BasisMismatchError, DegenerateCollapseError, SectorEscapeError
from .models import LayeredModel, PauliString, ProjectorTerm

NORM_TOL = 1e-10
COLLAPSE_FLOOR = 1e-14


@dataclass
class State:
    """Unit-norm complex amplitudes over a SectorBasis."""

    amps: np.ndarray
    basis: SectorBasis

    def __post_init__(self):
        self.amps = np.ascontiguousarray(self.amps, dtype=complex)
        if self.amps.shape != (self.basis.size,):
            raise BasisMismatchError("amplitude length does not match basis size")

    def copy(self) -> "State":
        return State(self.amps.copy(), self.basis)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def check_norm(self) -> None:
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {self.norm()} deviates from 1")


@dataclass
class MeasurementOutcome:
    term_index: int
    outcome: int
    pre_probability_of_1: float


class TermKernel:
    """Precomputed gather/scatter structure for one projector term on one basis.

    order : basis ordinals sorted by (complement bits, local code)
    loc   : local code of each ordered entry
    starts: start offset of each complement group within ``order``
    """

    def __init__(self, basis: SectorBasis, term: ProjectorTerm, term_index: int = -1):
        self.term = term
        self.term_index = term_index
        n = basis.n_sites
        mask = 0
        for s in term.support:
            mask |= site_mask(s, n)
        loc = np.zeros(basis.size, dtype=np.int64)
        for s in term.support:
            loc = (loc << 1) | basis.site_bit(s)
        rest = basis.configs & np.uint64(~mask & ((1 << n) - 1))
        order = np.lexsort((loc, rest))
        rest_sorted = rest[order]
        starts = np.flatnonzero(
            np.concatenate(([True], rest_sorted[1:] != rest_sorted[:-1]))
        )
        self.order = order
        self.loc = loc[order]
        self.starts = starts
        gid = np.zeros(basis.size, dtype=np.int64)
        gid[starts[1:]] = 1
        self.gid = np.cumsum(gid)
        self.n_groups = int(starts.size)
        V = term.vectors  # (r, M)
        self.V = V
        self.Vc_loc = V.conj().T[self.loc, :]   # (n, r): conj(V[r, loc_i])
        self.V_loc = V.T[self.loc, :]           # (n, r): V[r, loc_i]

    def coefficients(self, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Group-wise overlap coefficients c[g, r] = <v_r | psi_g> and gathered amps."""
        y = amps[self.order]
        contrib = y[:, None] * self.Vc_loc
        c = np.add.reduceat(contrib, self.starts, axis=0)
        return c, y

    def expectation(self, amps: np.ndarray) -> float:
        c, _ = self.coefficients(amps)
        return float(np.sum(np.abs(c) ** 2))

    def project(self, amps: np.ndarray) -> np.ndarray:
        """Return P|psi> as a new amplitude array."""
        c, _ = self.coefficients(amps)
        proj = np.einsum("ir,ir->i", c[self.gid, :], self.V_loc)
        out = np.zeros_like(amps)
        out[self.order] = proj
        return out

    def collapse(self, amps: np.ndarray, outcome: int) -> tuple[np.ndarray, float]:
        """In-place collapse onto the outcome branch; returns (amps, p1)."""
        c, y = self.coefficients(amps)
        p1 = float(np.sum(np.abs(c) ** 2))
        proj = np.einsum("ir,ir->i", c[self.gid, :], self.V_loc)
        if outcome == 1:
            if p1 < COLLAPSE_FLOOR:
                raise DegenerateCollapseError(
                    f"outcome-1 branch of term {self.term_index} has norm^2 {p1}"
                )
            amps[self.order] = proj / np.sqrt(p1)
        else:
            p0 = 1.0 - p1
            if p0 < COLLAPSE_FLOOR:
                raise DegenerateCollapseError(
                    f"outcome-0 branch of term {self.term_index} has norm^2 {p0}"
                )
            amps[self.order] = (y - proj) / np.sqrt(p0)
        return amps, p1

    def apply_one_minus_p(self, amps: np.ndarray) -> np.ndarray:
        """In-place (1 - P)|psi> without renormalization."""
        c, y = self.coefficients(amps)
        proj = np.einsum("ir,ir->i", c[self.gid, :], self.V_loc)
        amps[self.order] = y - proj
        return amps


def kernels_for(model: LayeredModel) -> list[TermKernel]:
    """Kernels cached on the model instance (immutable after construction)."""
    cached = getattr(model, "_kernels", None)
    if cached is None:
        cached = [TermKernel(model.basis, t, i) for i, t in enumerate(model.terms)]
        model._kernels = cached
    return cached


# ---------------------------------------------------------------------------
# public operations

def term_expectation(state: State, term: ProjectorTerm) -> float:
    """||P psi||^2 for the local projector term."""
    state.check_norm()
    kern = TermKernel(state.basis, term)
    return kern.expectation(state.amps)


def measure_term(
    state: State, term: ProjectorTerm, rng: np.random.Generator
) -> tuple[MeasurementOutcome, State]:
    """Born-rule projective measurement of one term; one random draw consumed."""
    kern = TermKernel(state.basis, term)
    p1 = kern.expectation(state.amps)
    outcome = 1 if rng.random() < p1 else 0
    out = state.copy()
    kern.collapse(out.amps, outcome)
    return MeasurementOutcome(-1, outcome, p1), out


def pauli_phases(basis: SectorBasis, pauli: PauliString) -> np.ndarray:
    bits = basis.bits()
    sites = [s for s in range(basis.n_sites) if pauli.phase_mask & site_mask(s, basis.n_sites)]
    if not sites:
        return np.full(basis.size, pauli.global_phase)
    par = bits[:, sites].sum(axis=1) % 2
    return pauli.global_phase * np.where(par, -1.0, 1.0)


def apply_pauli(state: State, pauli: PauliString) -> State:
    """Apply a Pauli string: amplitude permutation (X|Y) and phases (Z|Y)."""
    basis = state.basis
    phases = pauli_phases(basis, pauli)
    if pauli.flip_mask == 0:
        return State(state.amps * phases, basis)
    flipped = basis.xor(pauli.flip_mask)
    pos = basis.ordinals(flipped)
    if np.any(pos >= basis.size) or np.any(basis.configs[np.minimum(pos, basis.size - 1)] != flipped):
        raise SectorEscapeError("Pauli X factor maps a configuration outside the sector")
    out = np.zeros_like(state.amps)
    out[pos] = phases * state.amps
    return State(out, basis)


def energy(state: State, model: LayeredModel) -> float:
    """<psi| sum_i P_i |psi> as a sum of term expectations."""
    if state.basis is not model.basis:
        raise BasisMismatchError("state and model refer to different bases")
    return float(sum(k.expectation(state.amps) for k in kernels_for(model)))


def fidelity(state: State, reference: State) -> float:
    if state.basis is not reference.basis:
        raise BasisMismatchError("states live on different bases")
    return float(np.abs(np.vdot(reference.amps, state.amps)) ** 2)
