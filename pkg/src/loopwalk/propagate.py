"""Single-photon transfer matrices and mode relabelling utilities.

Free evolution between coupler passes is diagonal in the normal-mode
basis, so the amplitude transfer matrix is assembled spectrally:
U(t) = V exp(-i lambda t) V^dagger.  Because the coupling matrix is real
symmetric, U(t) is symmetric as well as unitary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EigenSystem, Permutation, _readonly


@dataclass(frozen=True)
class TransferMatrix:
    """Unitary amplitude map over one or more transits; u[r-1, j-1] is the
    amplitude to reach guide r from guide j."""

    t: float
    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"transfer matrix must be square, got {u.shape}")
        object.__setattr__(self, "u", _readonly(u))

    @property
    def n(self) -> int:
        return self.u.shape[0]


def transfer_matrix(es: EigenSystem, t: float) -> TransferMatrix:
    """U(t) = V exp(-i lambda t) V^dagger from a precomputed eigensystem."""
    v = es.eigenvectors
    phases = np.exp(-1j * es.eigenvalues * float(t))
    u = (v * phases[None, :]) @ v.conj().T
    return TransferMatrix(float(t), u)


def compose(p: Permutation, n: int) -> Permutation:
    """p applied n times; negative n composes the inverse, n = 0 is identity."""
    base = p if n >= 0 else p.inverse()
    out = Permutation.identity(p.n)
    for _ in range(abs(int(n))):
        out = Permutation(tuple(base(out(j)) for j in range(1, p.n + 1)))
    return out


def permute_modes(m: np.ndarray, p: Permutation, side: str = "both") -> np.ndarray:
    """Relabel matrix indices by a permutation.

    With ``side="both"`` the result satisfies out[r-1, s-1] =
    m[pinv(r)-1, pinv(s)-1]: entry values travel from old labels to their
    images under p.  ``"rows"`` and ``"cols"`` relabel one axis only.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != p.n:
        raise ValueError(
            f"matrix shape {m.shape} does not match permutation on {p.n} modes"
        )
    inv = p.inverse().zero_based()
    if side == "both":
        return m[np.ix_(inv, inv)]
    if side == "rows":
        return m[inv, :]
    if side == "cols":
        return m[:, inv]
    raise ValueError(f"side must be 'both', 'rows' or 'cols', got {side!r}")
