"""Synthetic single-cell downlink instances and the SINR model."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MIN_USER_DISTANCE_M = 1.0


@dataclass(frozen=True)
class NetworkConfig:
    num_antennas_Nt: int = 4
    num_users_K: int = 8
    cell_radius_m: float = 300.0
    ref_distance_d0_m: float = 30.0
    pathloss_exp_rho: float = 3.0
    noise_sigma: float = 1.0
    snr_db: float = 10.0

    def __post_init__(self) -> None:
        if self.num_antennas_Nt < 1 or self.num_users_K < 1:
            raise ValueError("need at least one antenna and one user")
        if self.cell_radius_m <= MIN_USER_DISTANCE_M:
            raise ValueError(f"cell radius must exceed {MIN_USER_DISTANCE_M} m")
        if self.ref_distance_d0_m <= 0 or self.noise_sigma <= 0:
            raise ValueError("reference distance and noise sigma must be positive")

    @property
    def power_budget_P(self) -> float:
        # SNR is defined as P / sigma^2.
        return self.noise_sigma ** 2 * 10.0 ** (self.snr_db / 10.0)


def pathloss_factor(distance_m, d0: float = 30.0, rho: float = 3.0):
    """Large-scale power gain ``1 / (1 + (d/d0)^rho)``."""
    return 1.0 / (1.0 + (np.asarray(distance_m, dtype=float) / d0) ** rho)


@dataclass
class ChannelRealization:
    """One static channel draw.

    ``channels`` has shape (K, Nt); row k is h_k. ``normalized_channels``
    holds h_k / sigma_k and is what every SINR computation uses.
    """

    channels: np.ndarray
    distances_m: np.ndarray
    noise_sigmas: np.ndarray
    positions_m: np.ndarray | None = None
    config: NetworkConfig | None = None
    seed: int | None = None
    normalized_channels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.channels = np.atleast_2d(np.asarray(self.channels, dtype=complex))
        self.distances_m = np.asarray(self.distances_m, dtype=float)
        self.noise_sigmas = np.asarray(self.noise_sigmas, dtype=float)
        self.normalized_channels = self.channels / self.noise_sigmas[:, None]

    @property
    def num_users(self) -> int:
        return self.channels.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.channels.shape[1]

    @property
    def power_budget(self) -> float:
        if self.config is None:
            raise ValueError("realization carries no NetworkConfig")
        return self.config.power_budget_P

    def gains(self) -> np.ndarray:
        """Per-user ``||h_bar_k||^2``."""
        return np.sum(np.abs(self.normalized_channels) ** 2, axis=1)

    def subset(self, users: Sequence[int]) -> "ChannelRealization":
        idx = np.asarray(list(users), dtype=int)
        return ChannelRealization(
            channels=self.channels[idx],
            distances_m=self.distances_m[idx],
            noise_sigmas=self.noise_sigmas[idx],
            positions_m=None if self.positions_m is None else self.positions_m[idx],
            config=self.config,
            seed=self.seed,
        )

    @classmethod
    def from_normalized(cls, hbar, config: NetworkConfig | None = None) -> "ChannelRealization":
        """Wrap unit-noise channels directly (tests, hand-built instances)."""
        hbar = np.atleast_2d(np.asarray(hbar, dtype=complex))
        k = hbar.shape[0]
        return cls(channels=hbar, distances_m=np.ones(k), noise_sigmas=np.ones(k), config=config)

    # -- structured text dump --------------------------------------------

    def to_dict(self) -> dict:
        return {
            "config": None if self.config is None else asdict(self.config),
            "seed": self.seed,
            "positions_m": None if self.positions_m is None else self.positions_m.tolist(),
            "distances_m": self.distances_m.tolist(),
            "noise_sigmas": self.noise_sigmas.tolist(),
            "channels": [[[z.real, z.imag] for z in row] for row in self.channels],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelRealization":
        ch = np.array(data["channels"], dtype=float)
        pos = data.get("positions_m")
        cfg = data.get("config")
        return cls(
            channels=ch[..., 0] + 1j * ch[..., 1],
            distances_m=np.array(data["distances_m"], dtype=float),
            noise_sigmas=np.array(data["noise_sigmas"], dtype=float),
            positions_m=None if pos is None else np.array(pos, dtype=float),
            config=None if cfg is None else NetworkConfig(**cfg),
            seed=data.get("seed"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ChannelRealization":
        return cls.from_dict(json.loads(Path(path).read_text()))


def draw_channels(config: NetworkConfig, seed: int) -> ChannelRealization:
    """Drop K users uniformly in the cell and draw Rayleigh channels.

    User k's position and fading come from their own PCG64 stream keyed by
    ``(seed, k)``, so the first K users of a larger draw coincide with a
    draw of K users under the same seed.
    """
    K, Nt = config.num_users_K, config.num_antennas_Nt
    R, r0 = config.cell_radius_m, MIN_USER_DISTANCE_M
    positions = np.empty((K, 2))
    h_tilde = np.empty((K, Nt), dtype=complex)
    for k in range(K):
        rng = np.random.Generator(np.random.PCG64([int(seed) & (2**64 - 1), k]))
        u, angle = rng.random(2)
        radius = math.sqrt(r0 ** 2 + u * (R ** 2 - r0 ** 2))
        angle *= 2.0 * math.pi
        positions[k] = radius * math.cos(angle), radius * math.sin(angle)
        h_tilde[k] = (rng.standard_normal(Nt) + 1j * rng.standard_normal(Nt)) / math.sqrt(2.0)
    distances = np.hypot(positions[:, 0], positions[:, 1])
    scale = np.sqrt(pathloss_factor(distances, config.ref_distance_d0_m, config.pathloss_exp_rho))
    return ChannelRealization(
        channels=scale[:, None] * h_tilde,
        distances_m=distances,
        noise_sigmas=np.full(K, config.noise_sigma),
        positions_m=positions,
        config=config,
        seed=int(seed),
    )


def sinr(weights: np.ndarray, realization: ChannelRealization,
         active_set: Iterable[int], k: int) -> float:
    """SINR of user ``k`` when only ``active_set`` is being served."""
    active = set(int(a) for a in active_set)
    if k not in active:
        raise ValueError(f"user {k} is not in the active set")
    hbar = realization.normalized_channels[k]
    gains = np.abs(np.asarray(weights) @ hbar.conj()) ** 2
    interference = sum(gains[l] for l in active if l != k)
    return float(gains[k] / (interference + 1.0))


def sinr_all(weights: np.ndarray, hbar: np.ndarray) -> np.ndarray:
    """SINR of every row of ``hbar`` with every beam in ``weights`` active."""
    g = np.abs(hbar.conj() @ np.asarray(weights).T) ** 2  # g[k, l] = |h_k^H w_l|^2
    signal = np.diag(g).copy()
    return signal / (g.sum(axis=1) - signal + 1.0)
