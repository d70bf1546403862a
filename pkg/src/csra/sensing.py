"""Measurement operator mapping the compound channel to window observations.

The operator A acts on h in C^{u_max * t_cp} (compound index u*t_cp + t) and
returns the m control-window samples of the superimposed pilot responses.
In plain mode its (f, (u,t)) entry is p_hat_u(f) * exp(-2i*pi*f*t/n); in
randomized mode a fixed pointwise time-domain multiplier xi is applied
before the FFT. Application is matrix-free via length-n FFTs batched over
users; a dense materialization is kept under a column cap as an oracle.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import SystemConfig, control_window, scenario_rng, MULTIPLIER_STREAM
from .model import PilotBook, build_pilot_book


def randomized_multiplier(cfg: SystemConfig) -> np.ndarray | None:
    """Unit-modulus random time-domain multipliers, fixed per scenario.
    Returns None in plain sensing mode."""
    if cfg.sensing_mode != "randomized":
        return None
    rng = scenario_rng(cfg, MULTIPLIER_STREAM)
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=cfg.n))


class SensingOperator:
    """Matrix-free compound measurement operator with exact adjoint."""

    def __init__(self, pilots: PilotBook, t_cp: int,
                 xi: np.ndarray | None = None, col_cap: int = 4096):
        self.pilots = pilots
        self.window = pilots.window
        self.n = pilots.n
        self.u_max = pilots.u_max
        self.t_cp = t_cp
        self.m = len(self.window)
        self.col_cap = col_cap
        # a trivial multiplier collapses to the plain path (bit-identical)
        if xi is not None and np.all(xi == 1):
            xi = None
        self.xi = xi
        self._pilot_time = None   # lazy, randomized-mode columns only

    @property
    def shape(self):
        return (self.m, self.u_max * self.t_cp)

    def _check_h(self, h):
        h = np.asarray(h, dtype=complex)
        if h.shape != (self.u_max * self.t_cp,):
            raise ValueError(f"expected compound vector of length "
                             f"{self.u_max * self.t_cp}, got shape {h.shape}")
        return h

    def apply(self, h: np.ndarray) -> np.ndarray:
        """A @ h, one length-n FFT per user (batched)."""
        h = self._check_h(h)
        taps = h.reshape(self.u_max, self.t_cp)
        spectra = np.fft.fft(taps, n=self.n, axis=1)   # sum_t h(t) e^{-2i pi f t/n}
        if self.xi is None:
            return np.einsum("uf,uf->f", spectra[:, self.window],
                             self.pilots.window_values)
        mixed = np.sum(spectra * (np.sqrt(self.n) * self.pilots.freq), axis=0)
        s_time = np.fft.ifft(mixed)
        return np.fft.fft(self.xi * s_time)[self.window] / np.sqrt(self.n)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """A* @ y; exact adjoint of apply."""
        y = np.asarray(y, dtype=complex)
        if y.shape != (self.m,):
            raise ValueError(f"expected window vector of length {self.m}, "
                             f"got shape {y.shape}")
        w = np.zeros(self.n, dtype=complex)
        w[self.window] = y
        if self.xi is None:
            per_user = np.conj(self.pilots.freq) * w
            out = self.n * np.fft.ifft(per_user, axis=1)[:, :self.t_cp]
        else:
            v_time = np.conj(self.xi) * (np.sqrt(self.n) * np.fft.ifft(w))
            v_freq = np.fft.fft(v_time)
            per_user = np.conj(self.pilots.freq) * v_freq
            out = np.sqrt(self.n) * np.fft.ifft(per_user, axis=1)[:, :self.t_cp]
        return out.reshape(-1)

    def columns(self, support) -> np.ndarray:
        """Dense m x |support| submatrix for the given compound indices."""
        support = np.asarray(support, dtype=int)
        if support.size == 0:
            return np.zeros((self.m, 0), dtype=complex)
        users, delays = np.divmod(support, self.t_cp)
        if self.xi is None:
            phase = np.exp(-2j * np.pi * np.outer(self.window, delays) / self.n)
            return self.pilots.window_values[users].T * phase
        if self._pilot_time is None:
            self._pilot_time = self.pilots.time()
        shifted = np.empty((support.size, self.n), dtype=complex)
        for i, (u, t) in enumerate(zip(users, delays)):
            shifted[i] = np.roll(self._pilot_time[u], t)
        specs = np.fft.fft(self.xi * shifted, axis=1)[:, self.window]
        return specs.T / np.sqrt(self.n)

    def materialize(self) -> np.ndarray:
        """Full dense matrix; toy-scale oracle only."""
        n_cols = self.u_max * self.t_cp
        if n_cols > self.col_cap:
            raise ValueError(f"materialize refused: {n_cols} columns exceeds "
                             f"cap {self.col_cap}")
        return self.columns(np.arange(n_cols))


class DenseOperator:
    """Same protocol as SensingOperator for an explicit matrix (tests, toys)."""

    def __init__(self, mat: np.ndarray, u_max: int = 1):
        self.mat = np.asarray(mat, dtype=complex)
        self.m, n_cols = self.mat.shape
        if n_cols % u_max:
            raise ValueError("column count must divide evenly into users")
        self.u_max = u_max
        self.t_cp = n_cols // u_max
        self.xi = None

    @property
    def shape(self):
        return self.mat.shape

    def apply(self, h):
        return self.mat @ np.asarray(h, dtype=complex)

    def adjoint(self, y):
        return self.mat.conj().T @ np.asarray(y, dtype=complex)

    def columns(self, support):
        return self.mat[:, np.asarray(support, dtype=int)]

    def materialize(self):
        return self.mat.copy()


def build_operator(cfg: SystemConfig, pilots: PilotBook | None = None,
                   window: np.ndarray | None = None,
                   xi: np.ndarray | None = None) -> SensingOperator:
    if window is None:
        window = control_window(cfg)
    if pilots is None:
        pilots = build_pilot_book(cfg, window=window)
    if xi is None:
        xi = randomized_multiplier(cfg)
    return SensingOperator(pilots, cfg.t_cp, xi=xi)


# ---------------------------------------------------------------------------
# Restricted least squares
# ---------------------------------------------------------------------------

def restricted_lstsq(op, y: np.ndarray, support) -> tuple[np.ndarray, bool]:
    """Least-squares fit of y on the columns in `support`, zero elsewhere.

    Returns (full-size solution, rank_deficient). A rank-deficient submatrix
    yields the minimum-norm solution and sets the flag.
    """
    support = np.asarray(support, dtype=int)
    if support.size > op.shape[0]:
        raise ValueError("support larger than the measurement dimension")
    full = np.zeros(op.shape[1], dtype=complex)
    if support.size == 0:
        return full, False
    sub = op.columns(support)
    z, _, rank, _ = np.linalg.lstsq(sub, np.asarray(y, dtype=complex), rcond=None)
    full[support] = z
    return full, bool(rank < support.size)


# ---------------------------------------------------------------------------
# Restricted isometry evaluation (exact, combinatorial; toy scale only)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RipReport:
    k: int
    delta_k: float
    support: tuple          # argmax column set
    scale: float            # global column scaling applied before evaluation

MAX_RIP_COLUMNS = 24
MAX_RIP_ORDER = 4


def rip_constant_exact(dense: np.ndarray, k: int) -> RipReport:
    """Exact RIP constant of a dense matrix by exhausting all k-supports.

    The matrix is first rescaled by a single global factor so the average
    column norm is 1 (the RIP inequality compares ||Ax||^2 against ||x||^2);
    the factor is reported. delta_k = max over supports of
    max(lambda_max - 1, 1 - lambda_min) of the submatrix Gram spectrum.
    """
    dense = np.asarray(dense, dtype=complex)
    n_cols = dense.shape[1]
    if n_cols > MAX_RIP_COLUMNS or k > MAX_RIP_ORDER:
        raise ValueError(f"exact RIP limited to {MAX_RIP_COLUMNS} columns "
                         f"and order {MAX_RIP_ORDER}")
    if not 1 <= k <= n_cols:
        raise ValueError("need 1 <= k <= number of columns")
    col_norms = np.linalg.norm(dense, axis=0)
    mean_norm = float(np.mean(col_norms))
    if mean_norm == 0.0:
        raise ValueError("zero matrix has no RIP constant")
    scaled = dense / mean_norm
    gram = scaled.conj().T @ scaled
    best = -np.inf
    best_support = None
    for support in combinations(range(n_cols), k):
        idx = np.array(support)
        eig = np.linalg.eigvalsh(gram[np.ix_(idx, idx)])
        dev = max(eig[-1] - 1.0, 1.0 - eig[0])
        if dev > best:
            best = dev
            best_support = support
    return RipReport(k=k, delta_k=float(best), support=best_support,
                     scale=1.0 / mean_norm)


def rip_sample_complexity(n: int, k: int, delta: float, mu: float,
                          c_prime: float) -> int:
    """Window size sufficient for RIP under uniform random sampling:
    ceil(c' * delta^-2 * mu^2 * k * log^5 n)."""
    if min(n, k) < 1 or delta <= 0 or delta > 1 or mu <= 0 or c_prime <= 0:
        raise ValueError("need n, k >= 1, delta in (0,1], mu > 0, c' > 0")
    return math.ceil(c_prime * delta ** -2 * mu ** 2 * k * math.log(n) ** 5)


def export_dense_csv(mat: np.ndarray, path) -> None:
    """Write a complex matrix row-major as CSV, each entry as a re,im pair
    of adjacent columns."""
    mat = np.asarray(mat)
    interleaved = np.empty((mat.shape[0], 2 * mat.shape[1]))
    interleaved[:, 0::2] = mat.real
    interleaved[:, 1::2] = mat.imag
    np.savetxt(path, interleaved, delimiter=",")
