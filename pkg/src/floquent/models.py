"""Single-particle Hamiltonian factors of the four driven lattice models.

Basis conventions
-----------------
Flattened index = internal + n_internal * cell, cell-major.  Internal
ordering: ORDKR spin (up, down); PQL spin x sublattice (up-a, up-b,
down-a, down-b); PQGHM sublattice (a, b); KHM none.  For 2D lattices the
cell index runs fastest along the direction that stays periodic in the
sliced geometry, i.e. PQGHM cell = n1 + L1 * n2 (cut axis = direction 2)
and KHM cell = y + Ly * x (cut axis = x), so a half cut along the cut
axis is a contiguous block of flat indices.

All builders return exactly Hermitian matrices for real parameters; the
driving period is T = 1 and hbar = 1 throughout.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

MODEL_KINDS = ("ordkr", "pql", "pqghm", "khm")

N_INTERNAL = {"ordkr": 2, "pql": 4, "pqghm": 2, "khm": 1}

_REQUIRED_PARAMS = {
    "ordkr": ("K1", "K2"),
    "pql": ("Jx", "Jy", "Jd", "V"),
    "pqghm": ("t1", "t2", "t31", "t32", "phi1", "phi2", "T1", "T2"),
    "khm": ("J", "V", "p", "q"),
}

_DIMENSION = {"ordkr": 1, "pql": 1, "pqghm": 2, "khm": 2}


@dataclass(frozen=True)
class ModelSpec:
    """Which model, its physical parameters, lattice size(s) and boundaries.

    Parameters
    ----------
    kind : str
        One of "ordkr", "pql", "pqghm", "khm".
    params : dict
        Model parameters (see ``_REQUIRED_PARAMS``); unknown keys rejected.
    lengths : tuple of int
        (L,) for the 1D models, (L1, L2) / (Lx, Ly) for the 2D ones.
    boundaries : tuple of str
        "pbc" or "obc" per direction.
    """

    kind: str
    params: dict = field(default_factory=dict)
    lengths: tuple = ()
    boundaries: tuple = ()

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "lengths", tuple(int(x) for x in self.lengths))
        object.__setattr__(
            self, "boundaries", tuple(str(b).lower() for b in self.boundaries)
        )
        dim = _DIMENSION[self.kind]
        if len(self.lengths) != dim:
            raise ConfigError(
                f"{self.kind} needs {dim} lattice length(s), got {self.lengths}"
            )
        if any(length < 4 for length in self.lengths):
            raise ConfigError(f"all lattice lengths must be >= 4, got {self.lengths}")
        if len(self.boundaries) != dim:
            raise ConfigError(
                f"{self.kind} needs {dim} boundary condition(s), got {self.boundaries}"
            )
        if any(b not in ("pbc", "obc") for b in self.boundaries):
            raise ConfigError(f"boundaries must be 'pbc' or 'obc', got {self.boundaries}")
        required = _REQUIRED_PARAMS[self.kind]
        missing = [k for k in required if k not in self.params]
        unknown = [k for k in self.params if k not in required]
        if missing or unknown:
            raise ConfigError(
                f"{self.kind} parameters: missing {missing}, unknown {unknown}"
            )
        if self.kind == "khm":
            p, q = int(self.params["p"]), int(self.params["q"])
            if q < 1 or math.gcd(p, q) != 1:
                raise ConfigError(f"khm flux p/q = {p}/{q} must be coprime with q >= 1")
            if self.lengths[0] % q != 0:
                raise ConfigError(
                    f"khm Lx = {self.lengths[0]} must be divisible by q = {q}"
                )

    @property
    def n_internal(self) -> int:
        return N_INTERNAL[self.kind]

    def replace_params(self, **updates) -> "ModelSpec":
        params = dict(self.params)
        params.update(updates)
        return ModelSpec(self.kind, params, self.lengths, self.boundaries)


def chiral_internal(kind: str) -> np.ndarray:
    """Per-cell chiral symmetry operator of the symmetric time frames."""
    if kind == "ordkr":
        return SIGMA_Z.copy()
    if kind == "pql":
        return -np.kron(SIGMA_Z, SIGMA_Y)
    raise ConfigError(f"no chiral operator defined for model kind {kind!r}")


def _shift(length: int, periodic: bool) -> np.ndarray:
    """Forward shift S with S[n, n+1] = 1 (wraparound entry under PBC)."""
    s = np.eye(length, k=1, dtype=complex)
    if periodic:
        s[length - 1, 0] = 1.0
    return s


def _hop_chain(length, periodic, onsite, forward, internal_dim):
    """d * I + w * S + conj(w) * S^T in cell space, tensored with internals.

    ``onsite`` and ``forward`` are (internal_dim x internal_dim) blocks; the
    backward block is the Hermitian conjugate of ``forward``.
    """
    s = _shift(length, periodic)
    eye = np.eye(length, dtype=complex)
    h = np.kron(eye, onsite) + np.kron(s, forward) + np.kron(s.T, forward.conj().T)
    return h


def build_ordkr(spec: ModelSpec):
    """Kick generators (H1, H2) of the spin-1/2 double kicked rotor chain.

    H1 = (K1/2) sum_n (c_n^dag sx c_{n+1} + h.c.),
    H2 = (K2/2i) sum_n (c_n^dag sy c_{n+1} - h.c.), both 2L x 2L.
    """
    if spec.kind != "ordkr":
        raise ConfigError(f"build_ordkr got kind {spec.kind!r}")
    (length,) = spec.lengths
    periodic = spec.boundaries[0] == "pbc"
    k1, k2 = float(spec.params["K1"]), float(spec.params["K2"])
    zero = np.zeros((2, 2), dtype=complex)
    h1 = _hop_chain(length, periodic, zero, (k1 / 2) * SIGMA_X, 2)
    h2 = _hop_chain(length, periodic, zero, (k2 / 2j) * SIGMA_Y, 2)
    return h1, h2


def build_pql(spec: ModelSpec):
    """Quench generators (H1, H2) of the spin-1/2 periodically quenched ladder.

    H1 carries the rung hopping Jx (s0 x tz) and spin-orbit V (sy x t0)
    links; H2 carries the onsite Jy (s0 x tx) term and the diagonal
    i*Jd (sz x tx) hopping.  Both are 4L x 4L.
    """
    if spec.kind != "pql":
        raise ConfigError(f"build_pql got kind {spec.kind!r}")
    (length,) = spec.lengths
    periodic = spec.boundaries[0] == "pbc"
    jx = float(spec.params["Jx"])
    jy = float(spec.params["Jy"])
    jd = float(spec.params["Jd"])
    v = float(spec.params["V"])
    zero = np.zeros((4, 4), dtype=complex)
    s0tz = np.kron(SIGMA_0, SIGMA_Z)
    syt0 = np.kron(SIGMA_Y, SIGMA_0)
    s0tx = np.kron(SIGMA_0, SIGMA_X)
    sztx = np.kron(SIGMA_Z, SIGMA_X)
    h1 = _hop_chain(length, periodic, zero, jx * s0tz - 1j * v * syt0, 4)
    h2 = _hop_chain(length, periodic, jy * s0tx, 1j * jd * sztx, 4)
    return h1, h2


def ordkr_bloch(k1_strength, k2_strength, k):
    """2x2 momentum blocks (H1(k), H2(k)) = (K1 cos k sx, K2 sin k sy)."""
    return (
        k1_strength * np.cos(k) * SIGMA_X,
        k2_strength * np.sin(k) * SIGMA_Y,
    )


def pql_bloch(jx, jy, jd, v, k):
    """4x4 momentum blocks (H1(k), H2(k)) of the quenched ladder."""
    h1 = 2 * jx * np.cos(k) * np.kron(SIGMA_0, SIGMA_Z) + 2 * v * np.sin(k) * np.kron(
        SIGMA_Y, SIGMA_0
    )
    h2 = jy * np.kron(SIGMA_0, SIGMA_X) - 2 * jd * np.sin(k) * np.kron(
        SIGMA_Z, SIGMA_X
    )
    return h1, h2


def pqghm_bloch(t1, t2, t3, phi, k1, k2):
    """2x2 Bloch Hamiltonian of one quench episode of the generalized Haldane
    model with third-neighbor hopping."""
    hx = t1 * (1 + np.cos(k1) + np.cos(k2)) + t3 * (
        2 * np.cos(k1 - k2) + np.cos(k1 + k2)
    )
    hy = t1 * (np.sin(k1) + np.sin(k2)) + t3 * np.sin(k1 + k2)
    hz = 2 * t2 * np.sin(phi) * (np.sin(k1) - np.sin(k2) - np.sin(k1 - k2))
    return hx * SIGMA_X + hy * SIGMA_Y + hz * SIGMA_Z


def _pqghm_episode_params(spec: ModelSpec):
    p = spec.params
    ep1 = (float(p["t1"]), float(p["t2"]), float(p["t31"]), float(p["phi1"]))
    ep2 = (float(p["t1"]), float(p["t2"]), float(p["t32"]), float(p["phi2"]))
    return ep1, ep2


def _pqghm_slice_episode(t1, t2, t3, phi, k1, length, periodic):
    """One episode's 2L x 2L slice Hamiltonian at fixed k1 (chain along
    direction 2), built from the printed h^x, h^y, h^z chain operators."""
    c1, s1 = np.cos(k1), np.sin(k1)
    gamma = 2 * t2 * np.sin(phi)
    # (diagonal, forward-hopping) coefficients of each Pauli component
    dx = t1 * (1 + c1)
    wx = t1 / 2 + (3 * t3 / 2) * c1 - 1j * (t3 / 2) * s1
    dy = t1 * s1
    wy = -1j * t1 / 2 + (t3 / 2) * s1 - 1j * (t3 / 2) * c1
    dz = gamma * s1
    wz = (gamma / 2) * (1j - s1 - 1j * c1)
    h = np.zeros((2 * length, 2 * length), dtype=complex)
    for d, w, pauli in ((dx, wx, SIGMA_X), (dy, wy, SIGMA_Y), (dz, wz, SIGMA_Z)):
        h += _hop_chain(length, periodic, d * pauli, w * pauli, 2)
    return h


def build_pqghm_slice(spec: ModelSpec, k1: float):
    """Quench generators (H1(k1), H2(k1)) on the direction-2 chain at fixed k1."""
    if spec.kind != "pqghm":
        raise ConfigError(f"build_pqghm_slice got kind {spec.kind!r}")
    _, l2 = spec.lengths
    periodic = spec.boundaries[1] == "pbc"
    ep1, ep2 = _pqghm_episode_params(spec)
    h1 = _pqghm_slice_episode(*ep1, k1, l2, periodic)
    h2 = _pqghm_slice_episode(*ep2, k1, l2, periodic)
    return h1, h2


# Real-space hopping table of one quench episode: displacement (d1, d2) ->
# internal 2x2 block, matching pqghm_bloch via H(k) = sum_d exp(i k.d) M_d.
def _pqghm_hoppings(t1, t2, t3, phi):
    gamma = 2 * t2 * np.sin(phi)
    hops = {}

    def add(d, block):
        key = tuple(d)
        hops[key] = hops.get(key, np.zeros((2, 2), dtype=complex)) + block

    add((0, 0), t1 * SIGMA_X)
    for d, coeff in (((1, 0), t1), ((0, 1), t1), ((1, -1), 2 * t3), ((1, 1), t3)):
        add(d, (coeff / 2) * SIGMA_X)
        add((-d[0], -d[1]), (coeff / 2) * SIGMA_X)
    for d, coeff in (((1, 0), t1), ((0, 1), t1), ((1, 1), t3)):
        add(d, (-1j * coeff / 2) * SIGMA_Y)
        add((-d[0], -d[1]), (1j * coeff / 2) * SIGMA_Y)
    for d, coeff in (((1, 0), gamma), ((0, 1), -gamma), ((1, -1), -gamma)):
        add(d, (-1j * coeff / 2) * SIGMA_Z)
        add((-d[0], -d[1]), (1j * coeff / 2) * SIGMA_Z)
    return hops


def build_pqghm_realspace(spec: ModelSpec):
    """Quench generators (H1, H2) on the L1 x L2 lattice, 2*L1*L2 dimensional.

    Cell flat index = n1 + L1 * n2; block [r, r + d] = M_d from the Bloch
    hopping table, wrapped along periodic directions only.
    """
    if spec.kind != "pqghm":
        raise ConfigError(f"build_pqghm_realspace got kind {spec.kind!r}")
    l1, l2 = spec.lengths
    per1 = spec.boundaries[0] == "pbc"
    per2 = spec.boundaries[1] == "pbc"
    ep1, ep2 = _pqghm_episode_params(spec)
    out = []
    for t1, t2, t3, phi in (ep1, ep2):
        hops = _pqghm_hoppings(t1, t2, t3, phi)
        h = np.zeros((2 * l1 * l2, 2 * l1 * l2), dtype=complex)
        for (d1, d2), block in hops.items():
            for n2 in range(l2):
                m2 = n2 + d2
                if per2:
                    m2 %= l2
                elif not 0 <= m2 < l2:
                    continue
                for n1 in range(l1):
                    m1 = n1 + d1
                    if per1:
                        m1 %= l1
                    elif not 0 <= m1 < l1:
                        continue
                    r = n1 + l1 * n2
                    rp = m1 + l1 * m2
                    h[2 * r : 2 * r + 2, 2 * rp : 2 * rp + 2] += block
        out.append(h)
    return out[0], out[1]


def khm_lambda(spec: ModelSpec) -> float:
    return 2 * np.pi * int(spec.params["p"]) / int(spec.params["q"])


def build_khm(spec: ModelSpec, k_y: float | None = None):
    """(kick factor, hop factor) of the kicked Harper model.

    With ``k_y`` given: the 1D chain pair of length Lx, kick = V * diag
    cos(lambda*x - k_y), hop = (J/2) nearest-neighbor hopping, boundary
    condition along x from the spec.  Otherwise the full 2D pair on the
    Lx x Ly lattice (cell flat index = y + Ly * x).  Both factors enter
    the one-period product with weight 1, hop first in time.
    """
    if spec.kind != "khm":
        raise ConfigError(f"build_khm got kind {spec.kind!r}")
    lam = khm_lambda(spec)
    j = float(spec.params["J"])
    v = float(spec.params["V"])
    lx = spec.lengths[0]
    per_x = spec.boundaries[0] == "pbc"
    if k_y is not None:
        x = np.arange(lx)
        kick = np.diag(v * np.cos(lam * x - float(k_y))).astype(complex)
        s = _shift(lx, per_x)
        hop = (j / 2) * (s + s.T)
        return kick, hop
    ly = spec.lengths[1]
    per_y = spec.boundaries[1] == "pbc"
    n = lx * ly
    kick = np.zeros((n, n), dtype=complex)
    hop = np.zeros((n, n), dtype=complex)
    for x in range(lx):
        for y in range(ly):
            r = y + ly * x
            yp = y + 1
            if per_y or yp < ly:
                rp = (yp % ly) + ly * x
                amp = (v / 2) * np.exp(1j * lam * x)
                kick[rp, r] += amp
                kick[r, rp] += np.conj(amp)
            xp = x + 1
            if per_x or xp < lx:
                rp = y + ly * (xp % lx)
                hop[rp, r] += j / 2
                hop[r, rp] += j / 2
    return kick, hop
