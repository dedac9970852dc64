"""The five frustration-free layered models: projector terms, layer schedules,
corrections, initial states, and exact ground states where known.

Site indexing is row-major for 2D lattices: site (x, y) -> y*lx + x.
Dimer degrees of freedom live on links, horizontal links first (row-major),
then vertical links.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Callable, Sequence

import numpy as np

from .basis import (
    DEFAULT_BASIS_BUDGET,
    LocalMove,
    SectorBasis,
    enumerate_full_space,
    enumerate_magnetization_sector,
    enumerate_reachable_sector,
    site_mask,
)
from .errors import CapacityError

ORTHO_TOL = 1e-12

# local Pauli matrices, |0> = Z eigenvalue +1
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class PauliString:
    """Signed product of single-site Pauli factors on an n_sites register.

    Stored as bit masks over sites (Y = X and Z on the same site).  Applying
    to a basis configuration flips the X|Y sites and multiplies by
    ``global_phase * (-1)^popcount((z|y) & config)``.
    """

    n_sites: int
    x_mask: int = 0
    z_mask: int = 0
    y_mask: int = 0

    @staticmethod
    def from_factors(n_sites: int, factors: dict[int, str]) -> "PauliString":
        x = z = y = 0
        for site, op in factors.items():
            m = site_mask(site, n_sites)
            if op == "X":
                x |= m
            elif op == "Z":
                z |= m
            elif op == "Y":
                y |= m
            else:
                raise ValueError(f"unknown Pauli factor {op!r}")
        return PauliString(n_sites, x, z, y)

    @property
    def flip_mask(self) -> int:
        return self.x_mask | self.y_mask

    @property
    def phase_mask(self) -> int:
        return self.z_mask | self.y_mask

    @property
    def global_phase(self) -> complex:
        return 1j ** (bin(self.y_mask).count("1"))

    def factors(self) -> dict[int, str]:
        out = {}
        for site in range(self.n_sites):
            m = site_mask(site, self.n_sites)
            if self.y_mask & m:
                out[site] = "Y"
            elif self.x_mask & m:
                out[site] = "X"
            elif self.z_mask & m:
                out[site] = "Z"
        return out

    def dense(self, support: Sequence[int]) -> np.ndarray:
        """Matrix of the string restricted to ``support`` (must cover it)."""
        _Y = 1j * (_X @ _Z)
        lookup = {"X": _X, "Z": _Z, "Y": _Y}
        fac = self.factors()
        m = np.array([[1.0]], dtype=complex)
        for site in support:
            m = np.kron(m, lookup.get(fac.get(site), _I2))
        return m


@dataclass
class ProjectorTerm:
    """Local projector P = sum_r |v_r><v_r| on ``support`` plus its correction."""

    support: tuple[int, ...]          # ascending site indices
    vectors: np.ndarray               # (rank, 2^|support|) orthonormal rows
    correction: PauliString

    def __post_init__(self):
        self.support = tuple(self.support)
        if list(self.support) != sorted(self.support):
            raise ValueError("support must be ascending")
        v = np.asarray(self.vectors, dtype=complex)
        g = v @ v.conj().T
        if not np.allclose(g, np.eye(v.shape[0]), atol=ORTHO_TOL * 10):
            raise ValueError("local vectors are not orthonormal")
        self.vectors = v

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense 2^m x 2^m local projector, sum_r |v_r><v_r|."""
        return self.vectors.T @ self.vectors.conj()

    def local_dim(self) -> int:
        return 1 << len(self.support)


@dataclass
class LayeredModel:
    name: str
    params: dict
    basis: SectorBasis
    terms: list[ProjectorTerm]
    layers: list[list[int]]           # term indices per layer, disjoint cover
    ground_state: np.ndarray | None = None
    initial_state: np.ndarray | None = None
    initial_label: str = ""
    dispersion: Callable[[np.ndarray], np.ndarray] | None = None
    moves: list[LocalMove] = field(default_factory=list)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_sites(self) -> int:
        return self.basis.n_sites

    def label(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}@{inner}"

    def validate(self) -> None:
        seen = sorted(i for layer in self.layers for i in layer)
        if seen != list(range(len(self.terms))):
            raise ValueError("layers must partition the term indices")
        for layer in self.layers:
            for a in range(len(layer)):
                for b in range(a + 1, len(layer)):
                    ta, tb = self.terms[layer[a]], self.terms[layer[b]]
                    shared = set(ta.support) & set(tb.support)
                    if shared and not _terms_commute(ta, tb):
                        raise ValueError(
                            f"terms {layer[a]},{layer[b]} overlap on {shared} and do not commute"
                        )
        if self.ground_state is not None:
            if abs(np.linalg.norm(self.ground_state) - 1.0) > 1e-10:
                raise ValueError("ground state is not normalized")


def _terms_commute(ta: ProjectorTerm, tb: ProjectorTerm, tol: float = 1e-12) -> bool:
    """Commutator of the two local projectors embedded in their joint support."""
    joint = sorted(set(ta.support) | set(tb.support))
    A = _embed(ta, joint)
    B = _embed(tb, joint)
    return bool(np.max(np.abs(A @ B - B @ A)) < tol)


def _embed(term: ProjectorTerm, joint: Sequence[int]) -> np.ndarray:
    """Embed the local projector into the 2^|joint| space (joint ascending)."""
    pos = {s: i for i, s in enumerate(joint)}
    nj = len(joint)
    dim = 1 << nj
    M = term.matrix
    m = len(term.support)
    out = np.zeros((dim, dim), dtype=complex)
    # local index of a joint basis state restricted to term.support
    for a in range(dim):
        la = 0
        for s in term.support:
            la = (la << 1) | ((a >> (nj - 1 - pos[s])) & 1)
        for b in range(dim):
            if (a & ~_support_bits(term.support, pos, nj)) != (b & ~_support_bits(term.support, pos, nj)):
                continue
            lb = 0
            for s in term.support:
                lb = (lb << 1) | ((b >> (nj - 1 - pos[s])) & 1)
            out[a, b] = M[la, lb]
    return out


def _support_bits(support: Sequence[int], pos: dict[int, int], nj: int) -> int:
    mask = 0
    for s in support:
        mask |= 1 << (nj - 1 - pos[s])
    return mask


# ---------------------------------------------------------------------------
# shared building blocks

SINGLET = np.zeros(4, dtype=complex)
SINGLET[0b01] = 1 / np.sqrt(2)
SINGLET[0b10] = -1 / np.sqrt(2)


def _singlet_term(i: int, j: int, n_sites: int) -> ProjectorTerm:
    """Rank-1 singlet projector on bond (i, j) with Z-correction on min(i, j)."""
    lo, hi = min(i, j), max(i, j)
    corr = PauliString.from_factors(n_sites, {lo: "Z"})
    return ProjectorTerm(support=(lo, hi), vectors=SINGLET[None, :], correction=corr)


def _swap_move(i: int, j: int, n_sites: int) -> LocalMove:
    mi, mj = site_mask(i, n_sites), site_mask(j, n_sites)
    return LocalMove(mask=mi | mj, pattern_a=mi, pattern_b=mj)


def _dicke_state(basis: SectorBasis) -> np.ndarray:
    return np.full(basis.size, 1 / np.sqrt(basis.size))


def _neel_config(n_sites: int) -> int:
    return int("01" * (n_sites // 2), 2)


# ---------------------------------------------------------------------------
# Heisenberg chain (many-body sector)

def build_heisenberg_chain(
    n_sites: int, periodic: bool = True, n_up: int | None = None,
    budget: int = DEFAULT_BASIS_BUDGET,
) -> LayeredModel:
    if n_sites < 4 or n_sites % 2:
        raise ValueError("n_sites must be even and >= 4")
    if n_up is None:
        n_up = n_sites // 2
    basis = enumerate_magnetization_sector(n_sites, n_up, budget)
    bonds = [(i, (i + 1) % n_sites) for i in range(n_sites if periodic else n_sites - 1)]
    terms = [_singlet_term(i, j, n_sites) for (i, j) in bonds]
    layers = [
        [k for k, (i, _) in enumerate(bonds) if i % 2 == 0],
        [k for k, (i, _) in enumerate(bonds) if i % 2 == 1],
    ]
    if n_up == n_sites // 2:
        start, start_label = _neel_config(n_sites), "neel"
    else:
        start, start_label = int(basis.configs[0]), "product"
    init = np.zeros(basis.size)
    init[basis.ordinal(start)] = 1.0
    model = LayeredModel(
        name="heisenberg_chain",
        params={"n_sites": n_sites, "periodic": periodic, "n_up": n_up},
        basis=basis,
        terms=terms,
        layers=layers,
        ground_state=_dicke_state(basis),
        initial_state=init,
        initial_label=start_label,
        moves=[_swap_move(i, j, n_sites) for (i, j) in bonds],
    )
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Heisenberg single-particle sector (d = 1, 2, 3)

def build_heisenberg_single_particle(
    dim: int, length: int, budget: int = DEFAULT_BASIS_BUDGET
) -> LayeredModel:
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    if length % 2 or length < 4:
        raise ValueError("length must be even and >= 4 (layer partition)")
    n_sites = length**dim
    if n_sites > budget:
        raise CapacityError(f"single-particle basis {n_sites} exceeds budget {budget}")
    # basis: exactly one up spin; config with bit at site s
    configs = sorted(site_mask(s, n_sites) for s in range(n_sites))
    basis = SectorBasis(n_sites, np.array(configs, dtype=np.uint64), "single-particle")

    def site_id(coords):
        s = 0
        for c in reversed(coords):  # row-major: x fastest
            s = s * length + c
        return s

    terms: list[ProjectorTerm] = []
    layers: list[list[int]] = []
    import itertools

    for axis in range(dim):
        for parity in (0, 1):
            layer = []
            for coords in itertools.product(range(length), repeat=dim):
                if coords[axis] % 2 != parity:
                    continue
                nbr = list(coords)
                nbr[axis] = (coords[axis] + 1) % length
                i, j = site_id(coords), site_id(tuple(nbr))
                layer.append(len(terms))
                terms.append(_singlet_term(i, j, n_sites))
            layers.append(layer)

    ground = np.full(n_sites, 1 / np.sqrt(n_sites))
    # canonical two-site triplet on the x-bond (0, 1)
    init = np.zeros(n_sites)
    init[basis.ordinal(site_mask(site_id((0,) * dim), n_sites))] = 1 / np.sqrt(2)
    first = [0] * dim
    first[0] = 1
    init[basis.ordinal(site_mask(site_id(tuple(first)), n_sites))] = 1 / np.sqrt(2)

    def dispersion(k: np.ndarray) -> np.ndarray:
        k = np.atleast_2d(k)
        return np.sum(1 - np.cos(k), axis=-1)

    bonds = [t.support for t in terms]
    model = LayeredModel(
        name="heisenberg_single_particle",
        params={"dim": dim, "length": length},
        basis=basis,
        terms=terms,
        layers=layers,
        ground_state=ground,
        initial_state=init,
        initial_label="two-site-triplet",
        dispersion=dispersion,
        moves=[_swap_move(i, j, n_sites) for (i, j) in bonds],
    )
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Heisenberg 2D (many-body sector, open boundaries)

def build_heisenberg_2d(
    lx: int, ly: int, open_boundaries: bool = True, n_up: int | None = None,
    budget: int = DEFAULT_BASIS_BUDGET,
) -> LayeredModel:
    if not open_boundaries:
        raise ValueError("only open boundaries are supported (as simulated in 2D)")
    n_sites = lx * ly
    if n_up is None:
        n_up = n_sites // 2
    if comb(n_sites, n_up) > budget:
        raise CapacityError(
            f"2D sector dim {comb(n_sites, n_up)} exceeds budget {budget}"
        )
    basis = enumerate_magnetization_sector(n_sites, n_up, budget)

    def sid(x, y):
        return y * lx + x

    terms: list[ProjectorTerm] = []
    layers: list[list[int]] = [[], [], [], []]
    for y in range(ly):                       # horizontal bonds, layer by x parity
        for x in range(lx - 1):
            layers[x % 2].append(len(terms))
            terms.append(_singlet_term(sid(x, y), sid(x + 1, y), n_sites))
    for y in range(ly - 1):                   # vertical bonds, layer by y parity
        for x in range(lx):
            layers[2 + y % 2].append(len(terms))
            terms.append(_singlet_term(sid(x, y), sid(x, y + 1), n_sites))

    neel = 0
    for y in range(ly):
        for x in range(lx):
            if (x + y) % 2:
                neel |= site_mask(sid(x, y), n_sites)
    init = np.zeros(basis.size)
    init[basis.ordinal(neel)] = 1.0
    model = LayeredModel(
        name="heisenberg_2d",
        params={"lx": lx, "ly": ly, "n_up": n_up},
        basis=basis,
        terms=terms,
        layers=layers,
        ground_state=_dicke_state(basis),
        initial_state=init,
        initial_label="neel",
        moves=[_swap_move(*t.support, n_sites) for t in terms],
    )
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Fredkin chain

def _fredkin_term(b: int, n_sites: int) -> ProjectorTerm:
    """Singlet on (b, b+1) conditioned on (b-1, b+2) orthogonal to |10>.

    Fixed boundary spins Z_left = +1 (|0>) and Z_right = -1 (|1>) sit outside
    the register; conditioning on them reduces the end terms to plain 2-site
    singlet projectors.
    """
    left_in = b - 1 >= 0
    right_in = b + 2 <= n_sites - 1
    if not left_in and not right_in:
        raise ValueError("chain too short for a Fredkin term")
    if not left_in or not right_in:
        # |10><10| on (boundary, j) or (j, boundary) annihilates against the
        # fixed boundary value, so the conditioning factor is the identity
        return _singlet_term(b, b + 1, n_sites)
    support = (b - 1, b, b + 1, b + 2)
    # order within the 16-dim local space: (b-1, b, b+1, b+2), site b-1 is MSB
    vecs = []
    for left in range(2):
        for right in range(2):
            if (left, right) == (1, 0):
                continue
            v = np.zeros(16, dtype=complex)
            for mid, amp in ((0b01, 1 / np.sqrt(2)), (0b10, -1 / np.sqrt(2))):
                v[(left << 3) | (mid << 1) | right] = amp
            vecs.append(v)
    corr = PauliString.from_factors(n_sites, {b: "Z"})
    return ProjectorTerm(support=support, vectors=np.array(vecs), correction=corr)


def fredkin_moves(n_sites: int) -> list[LocalMove]:
    moves = []
    for b in range(n_sites - 1):
        mi, mj = site_mask(b, n_sites), site_mask(b + 1, n_sites)
        left_in = b - 1 >= 0
        right_in = b + 2 <= n_sites - 1
        if not left_in or not right_in:
            moves.append(LocalMove(mask=mi | mj, pattern_a=mi, pattern_b=mj))
            continue
        ml, mr = site_mask(b - 1, n_sites), site_mask(b + 2, n_sites)
        for left in range(2):
            for right in range(2):
                if (left, right) == (1, 0):
                    continue
                ctx = (ml if left else 0) | (mr if right else 0)
                moves.append(
                    LocalMove(mask=mi | mj | ml | mr, pattern_a=ctx | mi, pattern_b=ctx | mj)
                )
    return moves


def build_fredkin(n_sites: int, budget: int = DEFAULT_BASIS_BUDGET) -> LayeredModel:
    if n_sites % 2 or n_sites < 4:
        raise ValueError("n_sites must be even and >= 4")
    moves = fredkin_moves(n_sites)
    basis = enumerate_reachable_sector(
        _neel_config(n_sites), moves, n_sites, budget, sector_label="dyck"
    )
    terms = [_fredkin_term(b, n_sites) for b in range(n_sites - 1)]
    layers = [[b for b in range(n_sites - 1) if b % 3 == a] for a in range(3)]
    init = np.zeros(basis.size)
    init[basis.ordinal(_neel_config(n_sites))] = 1.0
    model = LayeredModel(
        name="fredkin",
        params={"n_sites": n_sites},
        basis=basis,
        terms=terms,
        layers=layers,
        ground_state=_dicke_state(basis),   # equal superposition over Dyck paths
        initial_state=init,
        initial_label="neel",
        moves=moves,
    )
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Quantum dimer model (RK point, open boundaries)

def qdm_link_index(lx: int, ly: int):
    """Returns (n_links, h_index, v_index) with the documented link ordering."""
    nh = (lx - 1) * ly

    def h_index(x, y):
        return y * (lx - 1) + x

    def v_index(x, y):
        return nh + y * lx + x

    return nh + lx * (ly - 1), h_index, v_index


def build_qdm(lx_sites: int, ly_sites: int, budget: int = DEFAULT_BASIS_BUDGET) -> LayeredModel:
    if lx_sites < 2 or ly_sites < 2:
        raise ValueError("lattice must be at least 2x2 sites")
    if lx_sites % 2 and ly_sites % 2:
        raise ValueError("odd x odd site lattices admit no dimer covering")
    n_links, h_index, v_index = qdm_link_index(lx_sites, ly_sites)

    terms: list[ProjectorTerm] = []
    layers: list[list[int]] = [[], [], [], []]
    moves: list[LocalMove] = []
    for y in range(ly_sites - 1):
        for x in range(lx_sites - 1):
            # plaquette (x, y): bottom/top horizontal, left/right vertical links
            links = (h_index(x, y), h_index(x, y + 1), v_index(x, y), v_index(x + 1, y))
            support = tuple(sorted(links))
            # local index of a support pattern: site order = ascending link index
            def lcode(occupied):
                code = 0
                for li, link in enumerate(support):
                    if link in occupied:
                        code |= 1 << (len(support) - 1 - li)
                return code

            h_pair = lcode({links[0], links[1]})
            v_pair = lcode({links[2], links[3]})
            v = np.zeros(16, dtype=complex)
            v[h_pair] = 1 / np.sqrt(2)
            v[v_pair] = -1 / np.sqrt(2)
            corr = PauliString.from_factors(n_links, {links[0]: "Z"})  # bottom h-link
            layers[(x % 2) + 2 * (y % 2)].append(len(terms))
            terms.append(ProjectorTerm(support=support, vectors=v[None, :], correction=corr))
            hm = site_mask(links[0], n_links) | site_mask(links[1], n_links)
            vm = site_mask(links[2], n_links) | site_mask(links[3], n_links)
            moves.append(LocalMove(mask=hm | vm, pattern_a=hm, pattern_b=vm))
    layers = [l for l in layers if l]

    # columnar seed: vertical dimers on even rows if ly even, else horizontal columns
    seed = 0
    if ly_sites % 2 == 0:
        for y in range(0, ly_sites - 1, 2):
            for x in range(lx_sites):
                seed |= site_mask(v_index(x, y), n_links)
    else:
        for x in range(0, lx_sites - 1, 2):
            for y in range(ly_sites):
                seed |= site_mask(h_index(x, y), n_links)
    basis = enumerate_reachable_sector(seed, moves, n_links, budget, "dimer-krylov")
    init = np.zeros(basis.size)
    init[basis.ordinal(seed)] = 1.0
    model = LayeredModel(
        name="qdm",
        params={"lx": lx_sites, "ly": ly_sites},
        basis=basis,
        terms=terms,
        layers=layers,
        ground_state=_dicke_state(basis),   # RVB: equal superposition over the sector
        initial_state=init,
        initial_label="columnar",
        moves=moves,
    )
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Cluster-Ising chain at the critical point

def cluster_ising_local_matrix() -> np.ndarray:
    """P_i(g=0) on sites (i-1, i, i+1), 8x8, site i-1 the most significant."""
    ZXZ = np.kron(_Z, np.kron(_X, _Z))
    ZZI = np.kron(_Z, np.kron(_Z, _I2))
    IZZ = np.kron(_I2, np.kron(_Z, _Z))
    IXI = np.kron(_I2, np.kron(_X, _I2))
    return 0.5 * np.eye(8) + 0.25 * ZXZ - 0.25 * (ZZI + IZZ) - 0.25 * IXI


def build_cluster_ising(n_sites: int, budget: int = DEFAULT_BASIS_BUDGET) -> LayeredModel:
    if n_sites % 3:
        raise ValueError("n_sites must be divisible by 3 (three-layer schedule)")
    basis = enumerate_full_space(n_sites, budget)
    P = cluster_ising_local_matrix()
    w, v = np.linalg.eigh(P)
    image = v[:, w > 0.5].T  # orthonormal rows spanning the image (eigenvalue 1)
    terms = []
    for i in range(n_sites):
        support_sites = ((i - 1) % n_sites, i, (i + 1) % n_sites)
        order = np.argsort(support_sites)
        support = tuple(sorted(support_sites))
        # permute the 8-dim local space from (i-1, i, i+1) order to ascending order
        perm = _site_permutation(order)
        vecs = image[:, perm]
        corr = PauliString.from_factors(n_sites, {i: "X"})
        terms.append(ProjectorTerm(support=support, vectors=vecs, correction=corr))
    layers = [[i for i in range(n_sites) if i % 3 == a] for a in range(3)]
    ghz = np.zeros(basis.size)
    ghz[0] = ghz[-1] = 1 / np.sqrt(2)
    init = np.full(basis.size, 1 / np.sqrt(basis.size))  # |+...+>
    model = LayeredModel(
        name="cluster_ising",
        params={"n_sites": n_sites},
        basis=basis,
        terms=terms,
        layers=layers,
        ground_state=ghz,
        initial_state=init,
        initial_label="plus-product",
    )
    model.validate()
    return model


def _site_permutation(order: np.ndarray) -> np.ndarray:
    """Index permutation of the 2^m local space reordering sites by ``order``.

    ``order[j]`` = which original position lands at (sorted) position j.
    Entry perm[a] = original local index whose reordered bits equal a.
    """
    m = len(order)
    perm = np.empty(1 << m, dtype=np.int64)
    for a in range(1 << m):
        orig = 0
        for j in range(m):
            bit = (a >> (m - 1 - j)) & 1
            orig |= bit << (m - 1 - order[j])
        perm[a] = orig
    return perm


BUILDERS = {
    "heisenberg_chain": build_heisenberg_chain,
    "heisenberg_single_particle": build_heisenberg_single_particle,
    "heisenberg_2d": build_heisenberg_2d,
    "fredkin": build_fredkin,
    "qdm": build_qdm,
    "cluster_ising": build_cluster_ising,
}


def build_model(name: str, **params) -> LayeredModel:
    if name not in BUILDERS:
        raise ValueError(f"unknown model {name!r}; valid: {sorted(BUILDERS)}")
    return BUILDERS[name](**params)
