"""Scenario constants, geometry and channel realizations.

All powers are in watts and all gains are linear power gains unless a name
ends in ``_db``/``_dbm``/``_dbi``.
"""

from dataclasses import dataclass, field, fields, replace

import numpy as np

__all__ = [
    "SPEED_OF_LIGHT",
    "SystemConfig",
    "Geometry",
    "ChannelRealization",
    "EstimatedCSI",
    "db_to_lin",
    "lin_to_db",
    "dbm_to_watt",
    "watt_to_dbm",
    "path_loss_db",
    "draw_geometry",
    "draw_realization",
    "uniform_ball",
]

SPEED_OF_LIGHT = 299_792_458.0


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(x):
    return 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float) / 1e-3)


def _per_user(value, n, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,))
    return tuple(float(v) for v in arr) if n else ()


@dataclass(frozen=True)
class SystemConfig:
    """Every scenario constant of one simulated system.

    Per-user quantities (``P_UL_max``, ``sigma2_DL``, ``gamma_DL``,
    ``gamma_UL``) accept a scalar and are broadcast to one entry per user.
    SINR targets are linear. Defaults reproduce the paper's system table
    with ``N_T = 6``.
    """

    K: int = 3
    J: int = 5
    R: int = 2
    N_T: int = 6
    P_DL_max: float = 1.0
    P_UL_max: tuple = 1e-2
    sigma2_DL: tuple = 1e-12
    sigma2_UL: float = 1e-12
    rho: float = 1e-8
    gamma_DL: tuple = 10.0
    gamma_UL: tuple = 10 ** 0.6
    kappa2: float = 0.05
    carrier_hz: float = 1.9e9
    bandwidth_hz: float = 200e3
    pathloss_exponent: float = 3.6
    antenna_gain_dbi: float = 10.0
    rician_factor_db: float = 5.0
    d_ref_m: float = 5.0
    d_max_m: float = 50.0
    pu_tx_distance_m: float = 100.0

    def __post_init__(self):
        for name in ("K", "J", "R", "N_T"):
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "P_UL_max", _per_user(self.P_UL_max, self.J, "P_UL_max"))
        object.__setattr__(self, "sigma2_DL", _per_user(self.sigma2_DL, self.K, "sigma2_DL"))
        object.__setattr__(self, "gamma_DL", _per_user(self.gamma_DL, self.K, "gamma_DL"))
        object.__setattr__(self, "gamma_UL", _per_user(self.gamma_UL, self.J, "gamma_UL"))
        self.validate()

    def validate(self):
        if self.K < 1 or self.J < 0 or self.R < 1:
            raise ValueError("need K >= 1, J >= 0, R >= 1")
        if self.N_T <= 1:
            raise ValueError("N_T must exceed 1")
        if self.N_T < self.J:
            raise ValueError("N_T must be at least J")
        if self.P_DL_max <= 0 or any(p <= 0 for p in self.P_UL_max):
            raise ValueError("power budgets must be positive")
        if self.sigma2_UL <= 0 or any(s <= 0 for s in self.sigma2_DL):
            raise ValueError("noise powers must be positive")
        if any(g <= 0 for g in self.gamma_DL + self.gamma_UL):
            raise ValueError("SINR targets must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 <= self.kappa2 < 1.0:
            raise ValueError("kappa2 must lie in [0, 1)")
        if not 0 < self.d_ref_m <= self.d_max_m:
            raise ValueError("need 0 < d_ref_m <= d_max_m")

    @property
    def kappa(self):
        return float(np.sqrt(self.kappa2))

    def with_(self, **changes):
        """Copy with fields replaced; per-user tuples are re-broadcast."""
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        counts = {"P_UL_max": "J", "gamma_UL": "J", "sigma2_DL": "K", "gamma_DL": "K"}
        for key, count in counts.items():
            if key not in changes and count in changes and changes[count] != current[count]:
                changes[key] = current[key][0] if current[key] else 0.0
        return replace(self, **changes)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Geometry:
    """Link distances in metres for one drop.

    ``pu_tx_m`` is the primary transmitter's distance from the BS. Primary
    receivers are dropped around that transmitter; set
    ``SystemConfig.pu_tx_distance_m = 0`` to drop them around the BS.
    """

    dl_m: np.ndarray  # (K,) BS -> DL user
    ul_m: np.ndarray  # (J,) UL user -> BS
    pu_m: np.ndarray  # (R,) BS -> primary receiver
    ul_dl_m: np.ndarray  # (J, K)
    ul_pu_m: np.ndarray  # (J, R)
    pu_tx_m: float = 100.0
    positions: dict = field(default_factory=dict, compare=False, repr=False)


def path_loss_db(d, cfg):
    """Log-distance path loss: free space up to ``d_ref_m`` then exponent
    ``cfg.pathloss_exponent``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < cfg.d_ref_m * (1 - 1e-12)):
        raise ValueError(f"distance below reference distance {cfg.d_ref_m} m")
    fspl = 20.0 * np.log10(4.0 * np.pi * cfg.d_ref_m * cfg.carrier_hz / SPEED_OF_LIGHT)
    return fspl + 10.0 * cfg.pathloss_exponent * np.log10(d / cfg.d_ref_m)


def _annulus_points(rng, n, r_in, r_out):
    radius = np.sqrt(rng.uniform(r_in ** 2, r_out ** 2, size=n))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return radius[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=1)


def _pairwise(a, b):
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def draw_geometry(cfg, rng):
    """Drop users uniformly (by area) in the ``[d_ref_m, d_max_m]`` annulus
    around the BS and primary receivers in the same annulus around the
    primary transmitter."""
    a, b = cfg.d_ref_m, cfg.d_max_m
    dl = _annulus_points(rng, cfg.K, a, b)
    ul = _annulus_points(rng, cfg.J, a, b)
    pu_tx = np.array([cfg.pu_tx_distance_m, 0.0])
    pu = pu_tx + _annulus_points(rng, cfg.R, a, b)
    origin = np.zeros((1, 2))
    # links that do not end at the BS may be shorter than d_ref
    floor = cfg.d_ref_m
    return Geometry(
        dl_m=np.maximum(_pairwise(origin, dl)[0], floor),
        ul_m=np.maximum(_pairwise(origin, ul)[0], floor),
        pu_m=np.maximum(_pairwise(origin, pu)[0], floor),
        ul_dl_m=np.maximum(_pairwise(ul, dl), floor),
        ul_pu_m=np.maximum(_pairwise(ul, pu), floor),
        pu_tx_m=float(cfg.pu_tx_distance_m),
        positions={"dl": dl, "ul": ul, "pu": pu, "pu_tx": pu_tx},
    )


def _cn(rng, shape):
    """Unit-variance circularly symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def uniform_ball(rng, n_dim, size=None):
    """Points uniform in the closed unit ball of ``C^n_dim`` (= ``R^(2 n_dim)``).

    Returns shape ``(n_dim,)`` or ``(size, n_dim)``.
    """
    shape = (n_dim,) if size is None else (size, n_dim)
    g = _cn(rng, shape)
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    u = rng.uniform(size=norm.shape) ** (1.0 / (2 * n_dim))
    return g / norm * u


@dataclass(frozen=True)
class EstimatedCSI:
    """What the resource allocator is allowed to see.

    Secondary-network channels are perfect; primary-network channels appear
    only as estimates plus error radii. ``eps_ul`` is the stacked radius
    ``sqrt(sum_j eps_ul_jr**2)`` per primary receiver.
    """

    h: np.ndarray  # (K, N_T); DL user k sees h[k]^H x
    g: np.ndarray  # (J, N_T)
    f: np.ndarray  # (J, K)
    H_SI: np.ndarray  # (N_T, N_T)
    l_hat: np.ndarray  # (R, N_T)
    e_hat: np.ndarray  # (J, R)
    eps_dl: np.ndarray  # (R,)
    eps_ul: np.ndarray  # (R,)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    g: np.ndarray
    f: np.ndarray
    H_SI: np.ndarray
    l_true: np.ndarray
    l_hat: np.ndarray
    e_true: np.ndarray
    e_hat: np.ndarray
    eps_dl: np.ndarray  # (R,)
    eps_ul_jr: np.ndarray  # (J, R)

    def estimated(self):
        return EstimatedCSI(
            h=self.h, g=self.g, f=self.f, H_SI=self.H_SI,
            l_hat=self.l_hat, e_hat=self.e_hat, eps_dl=self.eps_dl,
            eps_ul=np.sqrt(np.sum(self.eps_ul_jr ** 2, axis=0)),
        )


def draw_realization(cfg, geo, rng):
    """One small-scale fading draw on top of ``geo``.

    The draw order is fixed (fading first, estimation errors last) and the
    errors are unit-ball samples scaled by the radius afterwards, so the same
    ``rng`` state gives nested uncertainty balls across different
    ``kappa2`` values.
    """
    K, J, R, N = cfg.K, cfg.J, cfg.R, cfg.N_T
    bs_gain = db_to_lin(cfg.antenna_gain_dbi)

    def bs_link(d):
        return np.sqrt(bs_gain / db_to_lin(path_loss_db(d, cfg)))

    def user_link(d):
        return np.sqrt(1.0 / db_to_lin(path_loss_db(d, cfg)))

    h = bs_link(geo.dl_m)[:, None] * _cn(rng, (K, N))
    g = bs_link(geo.ul_m)[:, None] * _cn(rng, (J, N))
    f = user_link(geo.ul_dl_m) * _cn(rng, (J, K))
    k_r = db_to_lin(cfg.rician_factor_db)
    H_SI = np.sqrt(k_r / (k_r + 1.0)) * np.ones((N, N)) + np.sqrt(1.0 / (k_r + 1.0)) * _cn(rng, (N, N))
    l_true = bs_link(geo.pu_m)[:, None] * _cn(rng, (R, N))
    e_true = user_link(geo.ul_pu_m) * _cn(rng, (J, R))

    u_dl = uniform_ball(rng, N, size=R)
    u_ul = uniform_ball(rng, 1, size=J * R).reshape(J, R)
    eps_dl = cfg.kappa * np.linalg.norm(l_true, axis=1)
    eps_ul_jr = cfg.kappa * np.abs(e_true)
    return ChannelRealization(
        h=h, g=g, f=f, H_SI=H_SI,
        l_true=l_true, l_hat=l_true - eps_dl[:, None] * u_dl,
        e_true=e_true, e_hat=e_true - eps_ul_jr * u_ul,
        eps_dl=eps_dl, eps_ul_jr=eps_ul_jr,
    )
