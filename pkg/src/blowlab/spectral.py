"""Fourier representation of periodic divergence-free fields on [0, 2pi]^3.

A field is stored as a centred coefficient cube ``coeffs[c, i, j, k]`` holding
component ``c`` of the coefficient at wavevector
``xi = (i - K, j - K, k - K)`` where ``K = grid.dealias_cutoff``. The whole
symmetric lattice is kept, so the reality condition
``conj(u_xi) == u_{-xi}`` can be checked directly. The physical field is

    u(x) = sum_xi u_xi exp(i xi . x)

Time stepping works on an FFT-ordered half lattice instead (see
:class:`FFTWorkspace`), which is what ``scipy.fft.rfftn`` produces.
"""
from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

__all__ = [
    "Grid",
    "SpectralField",
    "InvariantError",
    "FFTWorkspace",
    "project_divergence_free",
    "nonlinear_term",
    "taylor_green",
    "random_smooth",
    "inner_product",
]


class InvariantError(ValueError):
    """A field violates reality, zero-mean or incompressibility."""


def fft_workers() -> int:
    raw = os.environ.get("BLOWLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"BLOWLAB_THREADS must be an integer >= 1, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"BLOWLAB_THREADS must be an integer >= 1, got {raw!r}")
    return n


@dataclass(frozen=True)
class Grid:
    """Cubic periodic grid with ``n_modes`` points per direction."""

    n_modes: int

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 8 or self.n_modes % 2:
            raise ValueError(f"n_modes must be an even integer >= 8, got {self.n_modes}")

    @property
    def domain_length(self) -> float:
        return 2 * math.pi

    @property
    def dealias_cutoff(self) -> int:
        return self.n_modes // 3

    @property
    def cube_size(self) -> int:
        return 2 * self.dealias_cutoff + 1

    @property
    def fft_size(self) -> int:
        """Transform size used for products; exceeds 3K so no aliasing."""
        K = self.dealias_cutoff
        if 3 * K < self.n_modes:
            return self.n_modes
        return 3 * K + 1 + (3 * K + 1) % 2

    def wavevectors(self):
        """Broadcastable (kx, ky, kz) integer arrays over the centred cube."""
        return _cube_wavevectors(self.dealias_cutoff)

    def physical_coordinates(self, n: int | None = None):
        n = self.n_modes if n is None else n
        x = np.arange(n) * (2 * np.pi / n)
        return np.meshgrid(x, x, x, indexing="ij")


@functools.lru_cache(maxsize=None)
def _cube_wavevectors(K: int):
    k = np.arange(-K, K + 1)
    kx = k[:, None, None].astype(np.float64)
    ky = k[None, :, None].astype(np.float64)
    kz = k[None, None, :].astype(np.float64)
    for a in (kx, ky, kz):
        a.setflags(write=False)
    return kx, ky, kz


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable vector field given by its centred Fourier coefficient cube.

    The constructor only checks the shape. Use :meth:`check_invariants` or
    :func:`project_divergence_free` to enforce the physical constraints.
    """

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        M = self.grid.cube_size
        arr = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if arr.shape != (3, M, M, M):
            raise ValueError(f"coeffs must have shape {(3, M, M, M)}, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        M = grid.cube_size
        return cls(grid, np.zeros((3, M, M, M), dtype=np.complex128))

    @classmethod
    def from_modes(cls, grid: Grid, modes: dict) -> "SpectralField":
        """Build a real field from ``{xi: u_xi}``; the conjugate modes are filled in.

        Supplying both ``xi`` and ``-xi`` is allowed only if they are
        conjugate to each other.
        """
        K = grid.dealias_cutoff
        M = grid.cube_size
        arr = np.zeros((3, M, M, M), dtype=np.complex128)
        seen = set()
        for xi, vec in modes.items():
            xi = tuple(int(v) for v in xi)
            vec = np.asarray(vec, dtype=np.complex128)
            if vec.shape != (3,):
                raise ValueError(f"mode {xi} needs a 3-vector")
            if any(abs(v) > K for v in xi):
                raise ValueError(f"mode {xi} lies beyond the dealias cutoff {K}")
            if xi == (0, 0, 0):
                if np.any(vec != 0):
                    raise InvariantError("the zero mode must vanish")
                continue
            neg = tuple(-v for v in xi)
            idx = tuple(v + K for v in xi)
            nidx = tuple(v + K for v in neg)
            if neg in seen:
                if not np.allclose(arr[(slice(None),) + idx], vec, rtol=0, atol=1e-15):
                    raise InvariantError(f"modes {xi} and {neg} are not conjugate")
                continue
            seen.add(xi)
            arr[(slice(None),) + idx] = vec
            arr[(slice(None),) + nidx] = np.conj(vec)
        return cls(grid, arr)

    def mode(self, xi) -> np.ndarray:
        K = self.grid.dealias_cutoff
        return self.coeffs[(slice(None),) + tuple(int(v) + K for v in xi)].copy()

    def nonzero_modes(self):
        """List of ``(xi, u_xi)`` for every mode with a nonzero coefficient."""
        K = self.grid.dealias_cutoff
        idx = np.argwhere(np.any(self.coeffs != 0, axis=0))
        return [(tuple(int(v) - K for v in i), self.coeffs[:, i[0], i[1], i[2]].copy()) for i in idx]

    def __mul__(self, scale) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * float(scale))

    __rmul__ = __mul__

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + (-1.0) * other

    # -- transforms -------------------------------------------------------

    def to_physical(self, n: int | None = None) -> np.ndarray:
        """Real samples on an ``n^3`` grid, shape ``(3, n, n, n)``."""
        n = self.grid.n_modes if n is None else n
        if n <= 2 * self.grid.dealias_cutoff:
            raise ValueError("physical grid too coarse for the retained modes")
        full = _embed_full(self.coeffs, self.grid.dealias_cutoff, n)
        return scipy.fft.ifftn(full, axes=(1, 2, 3), norm="forward", workers=fft_workers()).real

    def physical_imag_residue(self) -> float:
        """max |Im u(x)| / max |u(x)| after a complex inverse transform."""
        n = self.grid.n_modes
        full = _embed_full(self.coeffs, self.grid.dealias_cutoff, n)
        u = scipy.fft.ifftn(full, axes=(1, 2, 3), norm="forward", workers=fft_workers())
        scale = np.abs(u).max()
        return 0.0 if scale == 0 else float(np.abs(u.imag).max() / scale)

    @classmethod
    def from_physical(cls, grid: Grid, u: np.ndarray) -> "SpectralField":
        """Truncate a real physical field to the retained modes (no projection)."""
        u = np.asarray(u, dtype=np.float64)
        n = u.shape[-1]
        if u.shape != (3, n, n, n):
            raise ValueError("expected a (3, n, n, n) array")
        uh = scipy.fft.fftn(u, axes=(1, 2, 3), norm="forward", workers=fft_workers())
        K = grid.dealias_cutoff
        ix = np.arange(-K, K + 1) % n
        cube = uh[np.ix_(range(3), ix, ix, ix)]
        cube[:, K, K, K] = 0
        # symmetrise away rounding so reality holds exactly
        cube = 0.5 * (cube + np.conj(cube[:, ::-1, ::-1, ::-1]))
        return cls(grid, cube)

    # -- invariants -------------------------------------------------------

    def divergence_residual(self) -> float:
        """max_xi |xi . u_xi| / (|xi| max|u|); zero for a solenoidal field."""
        kx, ky, kz = self.grid.wavevectors()
        c = self.coeffs
        scale = np.abs(c).max()
        if scale == 0:
            return 0.0
        kk = np.sqrt(kx**2 + ky**2 + kz**2)
        kk[kk == 0] = 1.0
        div = np.abs(kx * c[0] + ky * c[1] + kz * c[2]) / kk
        return float(div.max() / scale)

    def reality_residual(self) -> float:
        """max_xi |u_xi - conj(u_-xi)| / max|u|."""
        c = self.coeffs
        scale = np.abs(c).max()
        if scale == 0:
            return 0.0
        return float(np.abs(c - np.conj(c[:, ::-1, ::-1, ::-1])).max() / scale)

    def check_invariants(self, tol: float = 1e-12) -> None:
        K = self.grid.dealias_cutoff
        if np.any(self.coeffs[:, K, K, K] != 0):
            raise InvariantError("zero mode is not zero")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvariantError("non-finite coefficients")
        r = self.reality_residual()
        if r > tol:
            raise InvariantError(f"reality symmetry violated (residual {r:.3e})")
        d = self.divergence_residual()
        if d > tol:
            raise InvariantError(f"field is not divergence free (residual {d:.3e})")


def _embed_full(cube, K, n):
    """Place a centred cube into an FFT-ordered ``(3, n, n, n)`` array."""
    ix = np.arange(-K, K + 1) % n
    full = np.zeros((3, n, n, n), dtype=np.complex128)
    full[np.ix_(range(3), ix, ix, ix)] = cube
    return full


def inner_product(a: SpectralField, b: SpectralField) -> float:
    """Lattice L2 pairing sum_xi a_xi . conj(b_xi) (real for real fields)."""
    return float(np.vdot(b.coeffs, a.coeffs).real)


def project_divergence_free(f: SpectralField, tol: float = 1e-12) -> SpectralField:
    """Leray projection u_xi -> u_xi - xi (xi . u_xi) / |xi|^2.

    Raises :class:`InvariantError` for a nonzero mean mode or input that is
    not reality-symmetric.
    """
    K = f.grid.dealias_cutoff
    c = f.coeffs
    if np.any(c[:, K, K, K] != 0):
        raise InvariantError("input has a nonzero xi = 0 mode")
    if f.reality_residual() > tol:
        raise InvariantError("input coefficients are not reality-symmetric")
    kx, ky, kz = f.grid.wavevectors()
    k2 = kx**2 + ky**2 + kz**2
    k2[K, K, K] = 1.0
    div = (kx * c[0] + ky * c[1] + kz * c[2]) / k2
    out = np.stack([c[0] - kx * div, c[1] - ky * div, c[2] - kz * div])
    out[:, K, K, K] = 0
    return SpectralField(f.grid, out)


class FFTWorkspace:
    """Precomputed wavenumbers for the half-lattice layout used in time stepping.

    Arrays have shape ``(3, L, L, L//2 + 1)`` with ``L = grid.fft_size``;
    modes outside the dealias cube are kept at zero.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        L = self.size = grid.fft_size
        K = grid.dealias_cutoff
        k = np.fft.fftfreq(L, 1.0 / L)
        kz = np.arange(L // 2 + 1, dtype=np.float64)
        self.kx = k[:, None, None]
        self.ky = k[None, :, None]
        self.kz = kz[None, None, :]
        self.mask = (np.abs(self.kx) <= K) & (np.abs(self.ky) <= K) & (self.kz <= K)
        self.k2 = self.kx**2 + self.ky**2 + self.kz**2
        with np.errstate(divide="ignore"):
            self.inv_k2 = np.where(self.k2 > 0, 1.0 / self.k2, 0.0)
        # each half-lattice entry with kz > 0 stands for itself and its conjugate
        self.weight = np.where(self.kz > 0, 2.0, 1.0) * self.mask
        self._ix = np.arange(-K, K + 1) % L
        self._iz = np.arange(0, K + 1)
        self.workers = fft_workers()

    # layout conversion
    def from_field(self, f: SpectralField) -> np.ndarray:
        K = self.grid.dealias_cutoff
        L = self.size
        out = np.zeros((3, L, L, L // 2 + 1), dtype=np.complex128)
        out[np.ix_(range(3), self._ix, self._ix, self._iz)] = f.coeffs[:, :, :, K:]
        return out

    def to_field(self, uh: np.ndarray) -> SpectralField:
        K = self.grid.dealias_cutoff
        M = self.grid.cube_size
        cube = np.empty((3, M, M, M), dtype=np.complex128)
        cube[:, :, :, K:] = uh[np.ix_(range(3), self._ix, self._ix, self._iz)]
        cube[:, :, :, :K] = np.conj(cube[:, ::-1, ::-1, ::-1])[:, :, :, :K]
        # the kz = 0 plane carries its own conjugate pairs; make them exact
        cube = 0.5 * (cube + np.conj(cube[:, ::-1, ::-1, ::-1]))
        return SpectralField(self.grid, cube)

    def to_physical(self, uh: np.ndarray) -> np.ndarray:
        L = self.size
        return scipy.fft.irfftn(uh, s=(L, L, L), axes=(-3, -2, -1), norm="forward",
                                workers=self.workers)

    def to_spectral(self, u: np.ndarray) -> np.ndarray:
        uh = scipy.fft.rfftn(u, axes=(-3, -2, -1), norm="forward", workers=self.workers)
        uh *= self.mask
        return uh

    def project(self, uh: np.ndarray) -> np.ndarray:
        div = (self.kx * uh[0] + self.ky * uh[1] + self.kz * uh[2]) * self.inv_k2
        out = np.stack([uh[0] - self.kx * div, uh[1] - self.ky * div, uh[2] - self.kz * div])
        out[:, 0, 0, 0] = 0  # roundoff in the mean of a product
        return out

    def curl(self, uh: np.ndarray) -> np.ndarray:
        kx, ky, kz = self.kx, self.ky, self.kz
        return 1j * np.stack([
            ky * uh[2] - kz * uh[1],
            kz * uh[0] - kx * uh[2],
            kx * uh[1] - ky * uh[0],
        ])

    def convection(self, uh: np.ndarray) -> np.ndarray:
        """Projected, dealiased (u.grad)u in the half layout.

        Uses (u.grad)u = grad(|u|^2/2) - u x curl(u); the gradient part is
        removed by the projection.
        """
        return self.convection_and_speed(uh)[0]

    def convection_and_speed(self, uh: np.ndarray):
        """Like :meth:`convection`, also returning max |u(x)| on the transform grid."""
        phys = self.to_physical(np.concatenate([uh, self.curl(uh)]))
        u, w = phys[:3], phys[3:]
        cross = np.stack([
            u[1] * w[2] - u[2] * w[1],
            u[2] * w[0] - u[0] * w[2],
            u[0] * w[1] - u[1] * w[0],
        ])
        speed = float(np.sqrt((u * u).sum(axis=0)).max())
        return -self.project(self.to_spectral(cross)), speed

    def hs_norm_sq(self, uh: np.ndarray, s: float) -> float:
        amp = (uh.real**2 + uh.imag**2).sum(axis=0)
        if s == 0:
            return float((self.weight * amp).sum())
        return float((self.weight * self.k2**s * amp).sum())

    def pairing(self, ah: np.ndarray, bh: np.ndarray) -> float:
        """Lattice L2 pairing of two real fields given in half layout."""
        return float((self.weight * (ah * np.conj(bh)).real.sum(axis=0)).sum())


@functools.lru_cache(maxsize=8)
def workspace(grid: Grid) -> FFTWorkspace:
    return FFTWorkspace(grid)


def nonlinear_term(u: SpectralField) -> SpectralField:
    """P((u.grad)u), evaluated pseudo-spectrally with 2/3-rule dealiasing."""
    u.check_invariants()
    ws = workspace(u.grid)
    return ws.to_field(ws.convection(ws.from_field(u)))


def taylor_green(grid: Grid, amplitude: float) -> SpectralField:
    """amplitude * (sin x cos y cos z, -cos x sin y cos z, 0)."""
    amplitude = float(amplitude)
    if not math.isfinite(amplitude):
        raise ValueError("amplitude must be finite")
    modes = {}
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                modes[(sx, sy, sz)] = (-1j * amplitude * sx / 8, 1j * amplitude * sy / 8, 0.0)
    if amplitude == 0:
        return SpectralField.zeros(grid)
    return SpectralField.from_modes(grid, modes)


def random_smooth(grid: Grid, seed: int, decay_rate: float) -> SpectralField:
    """Seeded complex Gaussian modes damped by exp(-decay_rate |xi|^2), projected."""
    if not decay_rate > 0:
        raise ValueError("decay_rate must be positive")
    M = grid.cube_size
    K = grid.dealias_cutoff
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((3, M, M, M)) + 1j * rng.standard_normal((3, M, M, M))
    kx, ky, kz = grid.wavevectors()
    g *= np.exp(-decay_rate * (kx**2 + ky**2 + kz**2))
    g = 0.5 * (g + np.conj(g[:, ::-1, ::-1, ::-1]))
    g[:, K, K, K] = 0
    return project_divergence_free(SpectralField(grid, g))
