"""System configuration, demand laws, and the key/value config file format."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import os

import numpy as np

from .errors import ConfigError
from .rng import RngStream


@dataclass(frozen=True)
class Uniform:
    """Every file equally likely."""

    def probs(self, n_files: int) -> np.ndarray:
        return np.full(n_files, 1.0 / n_files)

    def label(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class Zipf:
    """Rank law P(file = n) proportional to (n + 1) ** -alpha, zero-indexed."""

    alpha: float = 0.8

    def probs(self, n_files: int) -> np.ndarray:
        w = np.power(np.arange(1, n_files + 1, dtype=float), -self.alpha)
        return w / w.sum()

    def label(self) -> str:
        return f"zipf:{self.alpha:g}"


@dataclass(frozen=True)
class MandelbrotZipf:
    """Shifted rank law P(file = n) proportional to (n + q + 1) ** -alpha."""

    alpha: float = 1.4
    q: float = 2.0

    def probs(self, n_files: int) -> np.ndarray:
        w = np.power(np.arange(1, n_files + 1, dtype=float) + self.q, -self.alpha)
        return w / w.sum()

    def label(self) -> str:
        return f"mzipf:{self.alpha:g},{self.q:g}"


DemandLaw = Uniform | Zipf | MandelbrotZipf


def parse_demand_law(text: str) -> DemandLaw:
    t = text.strip().lower()
    if t == "uniform":
        return Uniform()
    if t.startswith("zipf:"):
        return Zipf(alpha=float(t.split(":", 1)[1]))
    if t == "zipf":
        return Zipf()
    if t.startswith("mzipf:"):
        parts = t.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ConfigError(f"mzipf takes alpha,q but got {text!r}")
        return MandelbrotZipf(alpha=float(parts[0]), q=float(parts[1]))
    if t == "mzipf":
        return MandelbrotZipf()
    raise ConfigError(f"unknown demand_law {text!r}")


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one simulated system.

    Defaults reproduce the benchmark's training domain (100 files of 10
    subfiles, 5 caches at 30% fill, queue depth 10, deadlines up to 20
    slots, 50-step episodes).
    """

    n_files: int = 100
    subfiles_per_file: int = 10
    n_caches: int = 5
    queue_depth: int = 10
    max_deadline: int = 20
    horizon: int = 50
    cache_fraction: float = 0.30
    demand_law: DemandLaw = field(default_factory=Uniform)
    erasure_prob: float = 0.0

    @property
    def n_packets(self) -> int:
        return self.n_files * self.subfiles_per_file

    @property
    def cache_size(self) -> int:
        return int(self.cache_fraction * self.n_packets)

    @property
    def max_pairs(self) -> int:
        return self.queue_depth * (self.queue_depth - 1) // 2

    @property
    def action_count(self) -> int:
        return 2 * self.max_pairs + 1

    @property
    def unicast_action(self) -> int:
        return 2 * self.max_pairs

    def validate(self) -> "SystemConfig":
        if self.n_files < 1 or self.subfiles_per_file < 1:
            raise ConfigError("n_files and subfiles_per_file must be positive")
        if self.n_caches < 1:
            raise ConfigError("n_caches must be positive")
        if not 0.0 < self.cache_fraction < 1.0:
            raise ConfigError("cache_fraction must lie strictly between 0 and 1")
        if self.cache_size < 1:
            raise ConfigError("cache_fraction * n_packets must be at least 1")
        if self.queue_depth < 2:
            raise ConfigError("queue_depth must be at least 2")
        if self.max_deadline < 1:
            raise ConfigError("max_deadline must be at least 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if not 0.0 <= self.erasure_prob < 1.0:
            raise ConfigError("erasure_prob must lie in [0, 1)")
        return self

    def file_probs(self) -> np.ndarray:
        return self.demand_law.probs(self.n_files)

    def sample_file(self, rng: RngStream) -> int:
        """One file index from the demand law (single draw event)."""
        if isinstance(self.demand_law, Uniform):
            return rng.integers(0, self.n_files)
        cdf = _law_cdf(self)
        return int(np.searchsorted(cdf, rng.random(), side="right"))

    def sample_files(self, rng: RngStream, size: int) -> np.ndarray:
        """Vectorized variant of :meth:`sample_file` (size draw events)."""
        if isinstance(self.demand_law, Uniform):
            u = rng.random(size)
            return (u * self.n_files).astype(np.int64)
        cdf = _law_cdf(self)
        return np.searchsorted(cdf, rng.random(size), side="right")


_CDF_CACHE: dict[tuple, np.ndarray] = {}


def _law_cdf(cfg: SystemConfig) -> np.ndarray:
    key = (cfg.demand_law, cfg.n_files)
    cdf = _CDF_CACHE.get(key)
    if cdf is None:
        cdf = np.cumsum(cfg.file_probs())
        cdf[-1] = 1.0
        _CDF_CACHE[key] = cdf
    return cdf


_CONFIG_FIELDS = {
    "n_files": int,
    "subfiles_per_file": int,
    "n_caches": int,
    "queue_depth": int,
    "max_deadline": int,
    "horizon": int,
    "cache_fraction": float,
    "demand_law": parse_demand_law,
    "erasure_prob": float,
}


def parse_config_text(text: str, source: str = "<config>") -> SystemConfig:
    """Parse ``key = value`` lines; all keys optional, unknown keys rejected."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_FIELDS[key](value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    return SystemConfig(**values).validate()


def load_config(path: str | None) -> SystemConfig:
    """Load a config file, falling back to MERGECAST_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get("MERGECAST_CONFIG")
    if path is None:
        return SystemConfig().validate()
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)


def config_summary(cfg: SystemConfig) -> str:
    return (
        f"n_files={cfg.n_files} subfiles_per_file={cfg.subfiles_per_file} "
        f"n_caches={cfg.n_caches} queue_depth={cfg.queue_depth} "
        f"max_deadline={cfg.max_deadline} horizon={cfg.horizon} "
        f"cache_fraction={cfg.cache_fraction!r} demand_law={cfg.demand_law.label()} "
        f"erasure_prob={cfg.erasure_prob!r}"
    )


# Named evaluation regimes. Uniform-demand battery plus the Zipf battery;
# each entry maps onto SystemConfig overrides applied to a base config.
REGIMES: dict[str, dict] = {
    "id-default": {},
    "file60": {"n_files": 60},
    "file120": {"n_files": 120},
    "file150": {"n_files": 150},
    "pcache0.20": {"cache_fraction": 0.20},
    "pcache0.40": {"cache_fraction": 0.40},
    "delay10": {"max_deadline": 10},
    "delay30": {"max_deadline": 30},
    "zipf-id": {"demand_law": Zipf(0.8)},
    "zipf-alpha0.6": {"demand_law": Zipf(0.6)},
    "zipf-alpha1.0": {"demand_law": Zipf(1.0)},
    "zipf-alpha1.2": {"demand_law": Zipf(1.2)},
    "zipf-mandelbrot": {"demand_law": MandelbrotZipf(1.4, 2.0)},
    "zipf-file60": {"demand_law": Zipf(0.8), "n_files": 60},
    "zipf-file120": {"demand_law": Zipf(0.8), "n_files": 120},
    "zipf-file150": {"demand_law": Zipf(0.8), "n_files": 150},
    "zipf-pcache0.20": {"demand_law": Zipf(0.8), "cache_fraction": 0.20},
    "zipf-pcache0.40": {"demand_law": Zipf(0.8), "cache_fraction": 0.40},
    "zipf-delay10": {"demand_law": Zipf(0.8), "max_deadline": 10},
    "zipf-delay30": {"demand_law": Zipf(0.8), "max_deadline": 30},
}


def regime_config(base: SystemConfig, name: str) -> SystemConfig:
    if name not in REGIMES:
        raise ConfigError(f"unknown regime {name!r}; known: {', '.join(sorted(REGIMES))}")
    return replace(base, **REGIMES[name]).validate()
