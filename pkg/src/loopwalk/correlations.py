"""Two-photon correlation matrices observed at the tap guides.

A pair of indistinguishable photons injected into array guides j and k
produces, after n transits around the loop, a coincidence probability for
the detector pair (r, s) of

    cos(theta)^(4(n-1)) sin(theta)^4 / (1 + delta_rs)
        * | U[j, q(r)] U[k, q(s)] + U[j, q(s)] U[k, q(r)] |^2

where U = U(n tau) is the single-photon transfer matrix over n transits
and q is the inverse of the n-fold loop relabelling: detectors are wired
to fixed positions while the walk pattern is carried around the loop.
The classical (distinguishable) counterpart adds the two squared moduli
instead of the two amplitudes, so the difference between the matrices is
purely two-photon interference.

Every function takes 1-based guide indices and an explicit ``rescaled``
flag: rescaled output divides out the survival prefactor (the form used
for pattern comparison between transits), physical output keeps it (the
form that sums to the actual detection probability).  The n = 0 snapshot
is defined for rescaled output only, where it reduces to the input pair.
"""

from __future__ import annotations

import math

import numpy as np

from . import fock_oracle
from .model import (
    ConfigError,
    CorrelationMatrix,
    DeviceConfig,
    EigenSystem,
    Permutation,
    UnsupportedConfigError,
    permutation_for,
)
from .propagate import compose, transfer_matrix
from .spectra import eigensystem_for


def _uniform(theta) -> float:
    """Closed forms assume one angle across the coupler bank."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if not np.all(th == th[0]):
        raise UnsupportedConfigError(
            f"closed-form correlations require a uniform coupler angle, got {theta!r}"
        )
    return float(th[0])


def survival_prefactor(theta, n: int) -> float:
    """cos^(4(n-1)) sin^4: two photons surviving n-1 couplers, then exiting."""
    th = _uniform(theta)
    if n < 1:
        raise ConfigError(f"survival prefactor needs n >= 1, got n = {n}")
    return math.cos(th) ** (4 * (n - 1)) * math.sin(th) ** 4


def _check_inputs(n_modes: int, j: int, k: int):
    if not (1 <= j <= n_modes and 1 <= k <= n_modes):
        raise ConfigError(f"input guides ({j}, {k}) out of range 1..{n_modes}")


def _finish(amp_sq: np.ndarray, pref: float) -> np.ndarray:
    out = amp_sq.copy()
    out[np.diag_indices_from(out)] *= 0.5
    return pref * out


def gamma_simultaneous(
    es: EigenSystem,
    p: Permutation,
    theta,
    tau: float,
    n: int,
    j: int,
    k: int,
    *,
    rescaled: bool,
) -> CorrelationMatrix:
    """Coincidence matrix after n transits for photons injected together.

    ``n = 0`` is the input snapshot and is only defined rescaled (the
    physical prefactor counts coupler passes that have not happened yet).
    """
    _check_inputs(es.n, j, k)
    if n < 0:
        raise ConfigError(f"transit count must be >= 0, got {n}")
    if n == 0 and not rescaled:
        raise ConfigError("the n = 0 snapshot exists only as rescaled output")
    th = _uniform(theta)
    q = compose(p, n).inverse().zero_based()
    u = transfer_matrix(es, n * tau).u
    uj = u[j - 1, q]
    uk = u[k - 1, q]
    cross = np.outer(uj, uk)
    amp = cross + cross.T
    pref = 1.0 if rescaled else survival_prefactor(th, n)
    values = _finish(np.abs(amp) ** 2, pref)
    if j == k:
        values = values / 2.0  # doubly occupied input carries norm sqrt(2)
    return CorrelationMatrix(
        values=values, step=n, delay=0, inputs=(j, k), kind="quantum", rescaled=rescaled
    )


def gamma_one_step(
    es: EigenSystem, p: Permutation, theta, tau: float, j: int, k: int, *, rescaled: bool
) -> CorrelationMatrix:
    """Single-transit coincidences; exactly gamma_simultaneous with n = 1."""
    return gamma_simultaneous(es, p, theta, tau, 1, j, k, rescaled=rescaled)


def classical_p(
    es: EigenSystem,
    p: Permutation,
    theta,
    tau: float,
    n: int,
    j: int,
    k: int,
    *,
    rescaled: bool,
) -> CorrelationMatrix:
    """Distinguishable-photon coincidences: the same two propagation
    histories as the quantum case, summed in probability instead of
    amplitude."""
    _check_inputs(es.n, j, k)
    if n < 0:
        raise ConfigError(f"transit count must be >= 0, got {n}")
    if n == 0 and not rescaled:
        raise ConfigError("the n = 0 snapshot exists only as rescaled output")
    th = _uniform(theta)
    q = compose(p, n).inverse().zero_based()
    u = transfer_matrix(es, n * tau).u
    uj = u[j - 1, q]
    uk = u[k - 1, q]
    cross = np.abs(np.outer(uj, uk)) ** 2
    pref = 1.0 if rescaled else survival_prefactor(th, n)
    values = _finish(cross + cross.T, pref)
    return CorrelationMatrix(
        values=values, step=n, delay=0, inputs=(j, k), kind="classical", rescaled=rescaled
    )


def gamma_delayed(
    es: EigenSystem,
    p: Permutation,
    theta,
    tau: float,
    n: int,
    n_d: int,
    j: int,
    k: int,
    *,
    rescaled: bool,
) -> CorrelationMatrix:
    """Coincidences when photon two enters n_d transits after photon one.

    Photon one accumulates n + n_d transits of propagation and
    relabelling, photon two only n; the detector wiring follows each
    photon's own relabelling depth.  With n_d = 0 this reduces exactly to
    gamma_simultaneous.  The returned values keep the simultaneous-case
    prefactor convention; the overall scale of a delayed pattern is only
    meaningful relative to its own sum (the conditional state of photon
    one is not normalised by the closed form), so comparisons across
    conventions should normalise first.
    """
    _check_inputs(es.n, j, k)
    if n_d < 0:
        raise ConfigError(f"delay must be >= 0, got {n_d}")
    if n < 0:
        raise ConfigError(f"transit count must be >= 0, got {n}")
    if n == 0 and not rescaled:
        raise ConfigError("the n = 0 snapshot exists only as rescaled output")
    th = _uniform(theta)
    q_late = compose(p, n + n_d).inverse().zero_based()
    q_early = compose(p, n).inverse().zero_based()
    u_late = transfer_matrix(es, (n + n_d) * tau).u
    u_early = transfer_matrix(es, n * tau).u
    uj = u_late[j - 1, q_late]
    uk = u_early[k - 1, q_early]
    cross = np.outer(uj, uk)
    amp = cross + cross.T
    pref = 1.0 if rescaled else survival_prefactor(th, n)
    values = _finish(np.abs(amp) ** 2, pref)
    if j == k:
        # keeps the n_d = 0 limit identical to the simultaneous case; for
        # n_d > 0 the scale is shape-only anyway (see docstring)
        values = values / 2.0
    return CorrelationMatrix(
        values=values, step=n, delay=n_d, inputs=(j, k), kind="quantum", rescaled=rescaled
    )


def optimal_theta(n: int) -> float:
    """Coupler angle maximising the two-photon exit mass at transit n.

    Maximises cos^(4(n-1)) sin^4 over [0, pi/2]: arccos(sqrt((n-1)/n)).
    Larger n favours weaker taps, approaching theta ~ 1/sqrt(n).
    """
    if n < 1:
        raise ConfigError(f"transit count must be >= 1, got {n}")
    return math.acos(math.sqrt((n - 1) / n))


def symmetry_map(topology: str, n: int, n_modes: int, shift_c: int | None = None) -> Permutation:
    """Relabelling that carries a reference pattern onto a twisted one.

    After n transits the moebius pattern is the cylinder pattern with
    indices mirrored on odd n (and untouched on even n); a twisted circle
    is the untwisted ring shifted by n * c.  The returned permutation is
    meant for ``permute_modes(reference_matrix, perm, side="both")``.
    """
    if n < 0:
        raise ConfigError(f"transit count must be >= 0, got {n}")
    if topology == "moebius":
        return compose(Permutation.mirror(n_modes), n)
    if topology == "twisted_circle":
        if shift_c is None or not 0 <= shift_c < n_modes:
            raise ConfigError(
                f"twisted_circle needs shift_c in 0..{n_modes - 1}, got {shift_c!r}"
            )
        return Permutation.cyclic(n_modes, (n * shift_c) % n_modes)
    raise ConfigError(
        f"no transit symmetry map for topology {topology!r}; "
        "only moebius and twisted_circle have one"
    )


# ---- invariant normal modes -------------------------------------------------


class InvariantSubspace:
    """Modes of one (near-)degenerate eigenvalue and the part of their
    span left unchanged by the loop relabelling.

    ``mode_indices`` are 1-based positions into the eigensystem's column
    order.  ``basis`` holds an orthonormal set spanning the relabelling-
    invariant subspace; zero columns means no combination is preserved.
    """

    def __init__(self, eigenvalue: float, mode_indices: tuple, basis: np.ndarray):
        self.eigenvalue = float(eigenvalue)
        self.mode_indices = tuple(int(i) for i in mode_indices)
        basis = np.array(basis, dtype=complex)
        basis.setflags(write=False)
        self.basis = basis

    @property
    def dim(self) -> int:
        return len(self.mode_indices)

    @property
    def invariant_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_invariant(self) -> bool:
        return self.invariant_dim > 0

    def __repr__(self):
        return (
            f"InvariantSubspace(eigenvalue={self.eigenvalue!r}, "
            f"modes={self.mode_indices}, invariant_dim={self.invariant_dim})"
        )


def invariant_modes(
    es: EigenSystem,
    p: Permutation,
    tol: float = 1e-9,
    degeneracy_tol: float = 1e-9,
) -> list:
    """Group modes by eigenvalue and test invariance under the relabelling.

    A nondegenerate mode phi is invariant when phi[p^-1(m)] == phi[m] for
    every entry, i.e. the relabelling fixes it with eigenvalue exactly one
    (a sign flip or any other unit phase does not count: only a fixed mode
    keeps two-photon statistics frozen together with any other fixed
    mode).  For a degenerate cluster the invariant combinations are the
    null space of (P - 1) restricted to the cluster span, found by SVD.

    Eigenvalues within ``degeneracy_tol`` (relative to the spectral scale)
    of each other are treated as one cluster.
    """
    if es.n != p.n:
        raise ConfigError(f"eigensystem on {es.n} modes, permutation on {p.n}")
    lam = es.eigenvalues
    scale = max(1.0, float(np.max(np.abs(lam))))
    thr = degeneracy_tol * scale

    order = np.argsort(lam, kind="stable")
    clusters: list[list[int]] = []
    for idx in order:
        if clusters and lam[idx] - lam[clusters[-1][-1]] <= thr:
            clusters[-1].append(int(idx))
        else:
            clusters.append([int(idx)])

    pmat = p.matrix()
    out = []
    for cluster in clusters:
        cluster = sorted(cluster)
        block = es.eigenvectors[:, cluster]
        if len(cluster) == 1:
            phi = block[:, 0]
            moved = pmat @ phi
            basis = block if float(np.max(np.abs(moved - phi))) <= tol else block[:, :0]
        else:
            defect = pmat @ block - block
            _, sing, vh = np.linalg.svd(defect, full_matrices=True)
            sing = np.concatenate([sing, np.zeros(len(cluster) - len(sing))])
            null_cols = vh.conj().T[:, sing <= tol]
            basis = block @ null_cols
        out.append(
            InvariantSubspace(
                eigenvalue=float(np.mean(lam[cluster])),
                mode_indices=tuple(i + 1 for i in cluster),
                basis=basis,
            )
        )
    out.sort(key=lambda s: min(s.mode_indices))
    return out


def two_photon_invariant_check(
    es: EigenSystem,
    p: Permutation,
    theta,
    tau: float,
    phi_a,
    phi_b,
    *,
    n_steps: int = 4,
    tol: float = 1e-9,
    enforce_invariance: bool = True,
) -> bool:
    """Verify by direct simulation that a two-photon normal-mode state
    produces the same rescaled coincidence pattern at every transit.

    The symmetric product of ``phi_a`` and ``phi_b`` is placed in the
    array and observed for ``n_steps`` transits with the exact Fock
    simulator; the check passes when every rescaled pattern matches the
    first one entrywise within ``tol``.

    With ``enforce_invariance`` both wavefunctions must individually pass
    the relabelling-invariance condition first (as certified by
    :func:`invariant_modes`); passing uncertified vectors with the flag
    set raises ValueError.  Disable it to probe arbitrary states.
    """
    th = _uniform(theta)
    n = es.n
    pa = np.asarray(phi_a, dtype=complex)
    pb = np.asarray(phi_b, dtype=complex)
    if pa.shape != (n,) or pb.shape != (n,):
        raise ConfigError("mode vectors must each have one entry per array guide")
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")

    if enforce_invariance:
        pmat = p.matrix()
        for name, phi in (("first", pa), ("second", pb)):
            drift = float(np.max(np.abs(pmat @ phi - phi)))
            if drift > tol:
                raise ValueError(
                    f"{name} mode vector is not relabelling-invariant "
                    f"(max drift {drift:.3e}); pass enforce_invariance=False to probe it"
                )

    # the simulator needs the coupling matrix itself; rebuild it from the
    # eigensystem (exact symmetrisation kills roundoff skew)
    g = es.reconstruct().real
    g = (g + g.T) / 2.0
    cfg = DeviceConfig(
        topology="custom",
        n_modes=n,
        theta=th,
        tau=tau,
        custom_g=g,
        custom_perm=p.mapping,
    )
    state = fock_oracle.TwoPhotonState.from_mode_vectors(n, pa, pb)
    result = fock_oracle.state_run(cfg, state, n_steps)

    reference = None
    for step_n, rec in enumerate(result.transit_records, start=1):
        pattern = rec.coincidences / survival_prefactor(th, step_n)
        if reference is None:
            reference = pattern
        elif float(np.max(np.abs(pattern - reference))) > tol:
            return False
    return True


# ---- device-level convenience -----------------------------------------------


def device_correlation(
    cfg: DeviceConfig,
    n: int,
    j: int,
    k: int,
    *,
    n_d: int = 0,
    kind: str = "quantum",
    rescaled: bool,
) -> CorrelationMatrix:
    """One correlation matrix straight from a device description."""
    es = eigensystem_for(cfg)
    p = permutation_for(cfg)
    th = cfg.uniform_theta()
    if kind == "quantum":
        if n_d == 0:
            return gamma_simultaneous(es, p, th, cfg.tau, n, j, k, rescaled=rescaled)
        return gamma_delayed(es, p, th, cfg.tau, n, n_d, j, k, rescaled=rescaled)
    if kind == "classical":
        if n_d != 0:
            raise UnsupportedConfigError(
                "classical correlations are only defined for simultaneous input"
            )
        return classical_p(es, p, th, cfg.tau, n, j, k, rescaled=rescaled)
    raise ConfigError(f"kind must be quantum or classical, got {kind!r}")
