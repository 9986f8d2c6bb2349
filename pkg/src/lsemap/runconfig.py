"""Run configuration: flat key=value files (CLI) and JSON mappings (service)
resolve through the same builder, so both surfaces drive identical sessions.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import data as data_mod
from . import transfer
from .engine import SessionConfig, SessionState
from .errors import InvalidConfig
from .gp import KernelParams
from .grid import GridDomain

SCHEMA_VERSION = 1

# Fraction of the truth map's value range used as measurement noise when the
# config names neither noise_sd nor noise_frac.
DEFAULT_NOISE_FRAC = 0.01


class FlatConfig:
    """key = value lines with '#' comments; tracks line numbers for errors."""

    def __init__(self, entries: dict[str, tuple[str, int]], origin: str):
        self.entries = entries
        self.origin = origin

    @classmethod
    def load(cls, path) -> "FlatConfig":
        entries: dict[str, tuple[str, int]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidConfig(f"{path}:{lineno}: expected 'key = value'")
                key, value = line.split("=", 1)
                key = key.strip()
                if key in entries:
                    raise InvalidConfig(f"{path}:{lineno}: duplicate key {key!r}")
                entries[key] = (value.strip(), lineno)
        return cls(entries, str(path))

    def to_mapping(self) -> dict[str, str]:
        return {k: v for k, (v, _) in self.entries.items()}

    def where(self, key: str) -> str:
        if key in self.entries:
            return f"{self.origin}:{self.entries[key][1]}"
        return self.origin


_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


class _Mapping:
    """Typed, typo-checked access over a plain config mapping."""

    def __init__(self, mapping: dict, origin: str = "<config>",
                 lines: FlatConfig | None = None):
        self.mapping = dict(mapping)
        self.origin = origin
        self.lines = lines
        self.used: set[str] = set()

    def _where(self, key: str) -> str:
        if self.lines is not None:
            return self.lines.where(key)
        return self.origin

    def has(self, key: str) -> bool:
        return key in self.mapping

    def get_str(self, key: str, default=None):
        if key not in self.mapping:
            return default
        self.used.add(key)
        return str(self.mapping[key])

    def get_float(self, key: str, default=None):
        if key not in self.mapping:
            return default
        self.used.add(key)
        try:
            return float(self.mapping[key])
        except (TypeError, ValueError):
            raise InvalidConfig(f"{self._where(key)}: {key} must be a number, "
                                f"got {self.mapping[key]!r}") from None

    def get_int(self, key: str, default=None):
        if key not in self.mapping:
            return default
        self.used.add(key)
        try:
            value = self.mapping[key]
            as_float = float(value)
            as_int = int(as_float)
            if as_int != as_float:
                raise ValueError
            return as_int
        except (TypeError, ValueError):
            raise InvalidConfig(f"{self._where(key)}: {key} must be an integer, "
                                f"got {self.mapping[key]!r}") from None

    def get_bool(self, key: str, default=None):
        if key not in self.mapping:
            return default
        self.used.add(key)
        value = self.mapping[key]
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in _TRUE:
            return True
        if text in _FALSE:
            return False
        raise InvalidConfig(f"{self._where(key)}: {key} must be a boolean, got {value!r}")

    def get_int_list(self, key: str, default=()):
        if key not in self.mapping:
            return tuple(default)
        self.used.add(key)
        value = self.mapping[key]
        if isinstance(value, (list, tuple)):
            items = value
        else:
            items = [p for p in str(value).split(",") if p.strip()]
        try:
            return tuple(int(p) for p in items)
        except (TypeError, ValueError):
            raise InvalidConfig(f"{self._where(key)}: {key} must be a comma-separated "
                                f"list of integers, got {value!r}") from None

    def reject_unknown(self) -> None:
        unknown = sorted(set(self.mapping) - self.used)
        if unknown:
            locs = ", ".join(f"{k} ({self._where(k)})" for k in unknown)
            raise InvalidConfig(f"unknown config keys: {locs}")


@dataclass
class RunSpec:
    """Fully resolved run: domain, session config, optional truth + source."""

    domain: GridDomain
    session_config: SessionConfig
    truth: data_mod.GridMap | None
    source: transfer.SourceDataset | None
    source_path: str | None
    noise_sd: float
    oracle_seed: int
    budget: int | None
    snapshot_steps: tuple[int, ...]
    resolved: dict

    def new_session(self) -> SessionState:
        return SessionState(self.domain, self.session_config, source=self.source)

    def new_oracle(self) -> data_mod.NoisyOracle:
        if self.truth is None:
            raise InvalidConfig("no ground truth attached; batch mode needs one")
        return data_mod.NoisyOracle(self.truth, noise_sd=self.noise_sd,
                                    seed=self.oracle_seed)

    def effective_budget(self) -> int:
        remaining = self.domain.n_points
        return remaining if self.budget is None else min(self.budget, remaining)


def _build_domain(cfg: _Mapping) -> GridDomain:
    nx = cfg.get_int("nx")
    ny = cfg.get_int("ny")
    if nx is None or ny is None:
        raise InvalidConfig(f"{cfg.origin}: grid needs nx and ny (or a truth file)")
    spacing = cfg.get_float("spacing_mm", 2.0)
    origin_x = cfg.get_float("origin_x_mm", 0.0)
    origin_y = cfg.get_float("origin_y_mm", 0.0)
    return GridDomain(origin=(origin_x, origin_y), spacing=(spacing, spacing),
                      counts=(nx, ny))


_SYNTH_PARAM_KEYS = ("high", "low", "band_mm", "offset", "amplitude",
                     "period_x", "period_y", "length_scale", "mean")


def _build_truth(cfg: _Mapping) -> tuple[GridDomain, data_mod.GridMap | None]:
    truth_path = cfg.get_str("truth")
    synth_kind = cfg.get_str("synth")
    if truth_path and synth_kind:
        raise InvalidConfig(f"{cfg.origin}: give either 'truth' or 'synth', not both")
    if truth_path:
        grid_map = data_mod.load_grid_csv(truth_path)
        return grid_map.domain, grid_map
    if synth_kind:
        domain = _build_domain(cfg)
        params = {}
        for name in _SYNTH_PARAM_KEYS:
            value = cfg.get_float(f"synth_{name}")
            if value is not None:
                params[name] = value
        seed = cfg.get_int("synth_seed", 0)
        return domain, data_mod.synth_map(synth_kind, domain, params, seed=seed)
    if cfg.has("nx"):
        return _build_domain(cfg), None
    raise InvalidConfig(f"{cfg.origin}: config needs 'truth', 'synth', or explicit nx/ny")


def _build_kernel(cfg: _Mapping) -> KernelParams | None:
    keys = ("kernel_amplitude", "kernel_length_scale", "kernel_noise_variance")
    present = [k for k in keys if cfg.has(k)]
    if not present:
        return None
    if len(present) < 2:  # noise_variance may default to 0
        raise InvalidConfig(f"{cfg.origin}: fixed kernel needs kernel_amplitude "
                            f"and kernel_length_scale")
    return KernelParams(
        amplitude=cfg.get_float("kernel_amplitude"),
        length_scale=cfg.get_float("kernel_length_scale"),
        noise_variance=cfg.get_float("kernel_noise_variance", 0.0),
    )


def build_run_spec(mapping: dict, origin: str = "<config>",
                   lines: FlatConfig | None = None) -> RunSpec:
    """Resolve a config mapping into a RunSpec, validating every key."""
    cfg = _Mapping(mapping, origin=origin, lines=lines)

    domain, truth = _build_truth(cfg)
    seed = cfg.get_int("seed", 0)
    init_indices = cfg.get_int_list("init_indices") or None
    session_config = SessionConfig(
        theta=_require_float(cfg, "theta"),
        strategy=cfg.get_str("strategy", "al"),
        epsilon=cfg.get_float("epsilon", 0.0),
        max_iterations=cfg.get_int("max_iterations"),
        seed=seed,
        init_random_k=cfg.get_int("init_random_k"),
        init_indices=init_indices,
        kernel=_build_kernel(cfg),
        hyper_refit_every=cfg.get_int("hyper_refit_every", 10),
        sticky_classification=cfg.get_bool("sticky_classification", True),
        lss_base=cfg.get_str("lss_base", "shifted"),
    )

    source = None
    source_path = cfg.get_str("source")
    thin_every = cfg.get_int("source_thin_every", 1)
    if source_path:
        source_map = data_mod.load_grid_csv(source_path)
        source = transfer.SourceDataset.from_grid_map(source_map, thin_every=thin_every)
    elif session_config.strategy in ("atl", "lss-atl"):
        raise InvalidConfig(f"{cfg.origin}: strategy {session_config.strategy!r} "
                            f"requires a 'source' grid file")

    noise_sd = cfg.get_float("noise_sd")
    noise_frac = cfg.get_float("noise_frac")
    if noise_sd is not None and noise_frac is not None:
        raise InvalidConfig(f"{cfg.origin}: give either noise_sd or noise_frac, not both")
    if noise_sd is None:
        if noise_frac is None:
            noise_frac = DEFAULT_NOISE_FRAC
        noise_sd = noise_frac * truth.value_range() if truth is not None else 0.0

    oracle_seed = cfg.get_int("oracle_seed", seed)
    budget = cfg.get_int("budget")
    snapshot_steps = tuple(sorted(set(cfg.get_int_list("snapshot_steps"))))
    cfg.reject_unknown()

    resolved = {
        "schema_version": SCHEMA_VERSION,
        "strategy": session_config.strategy,
        "theta": session_config.theta,
        "epsilon": session_config.epsilon,
        "seed": session_config.seed,
        "oracle_seed": oracle_seed,
        "max_iterations": session_config.max_iterations,
        "init_random_k": session_config.effective_init_k(),
        "init_indices": list(init_indices) if init_indices else None,
        "kernel": None if session_config.kernel is None else {
            "amplitude": session_config.kernel.amplitude,
            "length_scale": session_config.kernel.length_scale,
            "noise_variance": session_config.kernel.noise_variance,
        },
        "hyper_refit_every": session_config.hyper_refit_every,
        "sticky_classification": session_config.sticky_classification,
        "lss_base": session_config.lss_base,
        "grid": {
            "nx": domain.counts[0], "ny": domain.counts[1],
            "spacing_mm": list(domain.spacing),
            "origin_mm": list(domain.origin),
            "n_points": domain.n_points,
        },
        "truth": cfg.get_str("truth"),
        "synth": cfg.get_str("synth"),
        "source": source_path,
        "source_thin_every": thin_every,
        "noise_sd": noise_sd,
        "budget": budget,
        "snapshot_steps": list(snapshot_steps),
    }
    return RunSpec(
        domain=domain,
        session_config=session_config,
        truth=truth,
        source=source,
        source_path=source_path,
        noise_sd=noise_sd,
        oracle_seed=oracle_seed,
        budget=budget,
        snapshot_steps=snapshot_steps,
        resolved=resolved,
    )


def _require_float(cfg: _Mapping, key: str) -> float:
    value = cfg.get_float(key)
    if value is None:
        raise InvalidConfig(f"{cfg.origin}: missing required key {key!r}")
    return value


def load_run_spec(path) -> RunSpec:
    """Load a flat key=value config file into a RunSpec."""
    flat = FlatConfig.load(path)
    return build_run_spec(flat.to_mapping(), origin=str(path), lines=flat)
