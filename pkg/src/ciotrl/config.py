"""Run configuration for the hybrid CIoT link simulator and its trainers.

Every tunable constant lives in one frozen dataclass, `SimConfig`, so a run is
fully described by (strategy id, config, seed).  Defaults reproduce the
reference scenario: a single secondary transmitter/receiver pair sharing a
licensed band with one primary pair, harvesting RF energy under a
time-switching split, and caching content from two equal-size libraries.

Units: powers in watts, distances in meters, slot duration in seconds, battery
charge in watt-seconds (powers and energies are interchangeable at tau = 1).
Rates are in bits per slot-bandwidth, delay in normalized content-size units.

Config files are flat ``key = value`` text.  Blank lines and ``#``/``;``
comments are ignored; ``[section]`` headers are tolerated and ignored so the
files stay INI-compatible.  Unknown keys and malformed lines are rejected with
their line number.  `dumps` writes the canonical form; load(dumps(cfg))
round-trips to an equal config.
"""

import dataclasses
import math
from dataclasses import dataclass

PU_PATTERN_MODES = ("random-per-episode", "fixed")


class ConfigError(ValueError):
    """Raised for unparseable config text or an invariant violation."""


@dataclass(frozen=True)
class SimConfig:
    # Channel and radio geometry
    sigma2: float = 1e-3
    alpha: float = 4.0
    d_sp: float = 1.8
    d_ps: float = 1.8
    d_ss: float = 1.5
    invert_pathloss: bool = False

    # Slot structure
    T: int = 30
    tau: float = 1.0
    L: int = 18

    # Power and interference
    P_p: float = 0.2
    I_th: float = 0.01
    P_max: float = 0.1

    # Energy harvesting and battery
    B0: float = 0.0
    B_max: float = 0.5
    E_max: float = 0.1
    mu: float = 0.9

    # Content libraries and caching
    M: int = 30
    N: int = 30
    C_s: int = 20
    zeta_p: float = 0.8
    zeta_s: float = 0.6
    lambda_p: int = 15
    lambda_s: int = 15

    # Rate and delay model
    k: float = 2.0
    u: float = 1.0
    R_bs: float = 1.0

    # Reward shaping
    w1: float = 0.4
    w2: float = 0.3
    w3: float = 0.3
    phi: float = 1.0

    # Training loop
    episodes: int = 2000
    buffer_size: int = 10000
    batch_size: int = 256
    hidden_size: int = 256
    lr: float = 3e-4
    gamma_disc: float = 0.99
    polyak: float = 0.005
    alpha_ee: float = 0.2
    delta: float = 0.01

    # Mid-level epsilon-greedy schedule (counted from the first learned episode)
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_episodes: int = 500

    # Deterministic-actor baselines (stds in half-range units of each dim)
    td3_policy_delay: int = 2
    td3_noise_std: float = 0.2
    td3_noise_clip: float = 0.5
    explore_noise_std: float = 0.1

    # Misc
    pu_pattern_mode: str = "random-per-episode"
    quantize_actions: bool = False
    seed: int = 0


FIELD_DOCS = {
    "sigma2": "noise power at the CIoT receiver (W)",
    "alpha": "path-loss exponent",
    "d_sp": "CIoT-Tx to PU-Rx distance (m), interference link",
    "d_ps": "PU-Tx to CIoT-Rx distance (m), incoming-interference link",
    "d_ss": "CIoT-Tx to CIoT-Rx distance (m), direct link",
    "invert_pathloss": "if true, mean channel gain is d^-alpha instead of d^alpha",
    "T": "time slots per episode",
    "tau": "slot duration (s)",
    "L": "PU-occupied slots per episode (L <= T)",
    "P_p": "primary transmit power (W)",
    "I_th": "interference ceiling at the PU receiver (W)",
    "P_max": "CIoT transmit power ceiling (W)",
    "B0": "initial battery charge (W*s)",
    "B_max": "battery capacity (W*s)",
    "E_max": "upper bound of the raw harvest draw (W)",
    "mu": "harvester conversion efficiency in [0, 1]",
    "M": "primary content library size",
    "N": "CIoT content library size",
    "C_s": "cache capacity in files (C_s <= M + N)",
    "zeta_p": "popularity skew of the primary library",
    "zeta_s": "popularity skew of the CIoT library",
    "lambda_p": "primary requests drawn per slot (distinct files)",
    "lambda_s": "CIoT requests drawn per slot (distinct files)",
    "k": "bandwidth-division factor of the overlay sub-band (k >= 1)",
    "u": "content size in rate units times seconds",
    "R_bs": "backhaul service rate used as the delay reference",
    "w1": "reward weight on throughput",
    "w2": "reward weight on cache hits",
    "w3": "reward weight on delay reduction",
    "phi": "penalty magnitude for infeasible actions",
    "episodes": "training episodes per run",
    "buffer_size": "replay capacity per agent (learning starts when full)",
    "batch_size": "minibatch size per gradient update",
    "hidden_size": "width of both hidden layers in every network",
    "lr": "Adam learning rate for all networks",
    "gamma_disc": "discount factor",
    "polyak": "target-network tracking rate per update",
    "alpha_ee": "SAC entropy weight (fixed, no auto-tuning)",
    "delta": "exponential moving-average factor for logged metrics",
    "eps_start": "initial epsilon of the mid-level greedy policy",
    "eps_end": "final epsilon of the mid-level greedy policy",
    "eps_decay_episodes": "episodes over which epsilon decays linearly",
    "td3_policy_delay": "critic updates per TD3 actor update",
    "td3_noise_std": "TD3 target-smoothing noise std (half-range units)",
    "td3_noise_clip": "TD3 target-smoothing noise clip (half-range units)",
    "explore_noise_std": "TD3/DDPG exploration noise std (half-range units)",
    "pu_pattern_mode": "PU occupancy placement: random-per-episode or fixed",
    "quantize_actions": "snap rho to the 0.1 grid and power to the 0.01 grid",
    "seed": "root RNG seed; env/agent/replay streams are split from it",
}

_FIELDS = {f.name: (f.type if isinstance(f.type, str) else f.type.__name__)
           for f in dataclasses.fields(SimConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELDS[key]
    raw = raw.strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def loads_config(text: str) -> "SimConfig":
    """Parse flat key = value text into a validated SimConfig."""
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            overrides[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    cfg = SimConfig(**overrides)
    validate(cfg)
    return cfg


def load_config(path) -> "SimConfig":
    with open(path, "r", encoding="utf-8") as fh:
        return loads_config(fh.read())


def parse_overrides(pairs: list[str]) -> dict:
    """Parse 'key=value' strings (CLI --set) into typed field overrides."""
    overrides = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"override {pair!r}: expected key=value")
        if key not in _FIELDS:
            raise ConfigError(f"override {pair!r}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"override {pair!r}: duplicate key {key!r}")
        try:
            overrides[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"override {pair!r}: {exc}") from None
    return overrides


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps_config(cfg: SimConfig) -> str:
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}"
             for f in dataclasses.fields(SimConfig)]
    return "\n".join(lines) + "\n"


def save_config(cfg: SimConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_config(cfg))


def make_config(**overrides) -> "SimConfig":
    """Defaults plus keyword overrides, validated."""
    cfg = SimConfig(**overrides)
    validate(cfg)
    return cfg


def with_updates(cfg: SimConfig, **overrides) -> "SimConfig":
    out = dataclasses.replace(cfg, **overrides)
    validate(out)
    return out


def validate(cfg: SimConfig) -> None:
    """Check every invariant; raise ConfigError naming the first violated field."""
    def fail(field, message):
        raise ConfigError(f"{field}: {message}")

    for field in ("sigma2", "alpha", "d_sp", "d_ps", "d_ss", "tau", "P_p",
                  "I_th", "P_max", "B_max", "u", "R_bs", "k", "lr"):
        value = getattr(cfg, field)
        if not (isinstance(value, (int, float)) and math.isfinite(value)) or value <= 0:
            fail(field, f"must be a positive finite number, got {value!r}")
    if cfg.k < 1:
        fail("k", f"bandwidth division needs k >= 1, got {cfg.k!r}")
    if not math.isfinite(cfg.E_max) or cfg.E_max < 0:
        fail("E_max", f"must be >= 0, got {cfg.E_max!r}")
    if not 0.0 <= cfg.mu <= 1.0:
        fail("mu", f"efficiency must lie in [0, 1], got {cfg.mu!r}")
    if not 0.0 <= cfg.B0 <= cfg.B_max:
        fail("B0", f"initial charge must lie in [0, B_max], got {cfg.B0!r}")
    for field in ("T", "M", "N", "episodes", "buffer_size", "batch_size",
                  "hidden_size", "eps_decay_episodes", "td3_policy_delay"):
        value = getattr(cfg, field)
        if value < 1:
            fail(field, f"must be >= 1, got {value!r}")
    if not 0 <= cfg.L <= cfg.T:
        fail("L", f"occupied slots must lie in [0, T={cfg.T}], got {cfg.L!r}")
    if not 0 <= cfg.C_s <= cfg.M + cfg.N:
        fail("C_s", f"cache capacity must lie in [0, M+N={cfg.M + cfg.N}], got {cfg.C_s!r}")
    if not 0 <= cfg.lambda_p <= cfg.M:
        fail("lambda_p", f"requests are distinct files, need 0 <= lambda_p <= M, got {cfg.lambda_p!r}")
    if not 0 <= cfg.lambda_s <= cfg.N:
        fail("lambda_s", f"requests are distinct files, need 0 <= lambda_s <= N, got {cfg.lambda_s!r}")
    if cfg.zeta_p < 0:
        fail("zeta_p", f"skew must be >= 0, got {cfg.zeta_p!r}")
    if cfg.zeta_s < 0:
        fail("zeta_s", f"skew must be >= 0, got {cfg.zeta_s!r}")
    for field in ("w1", "w2", "w3"):
        if getattr(cfg, field) < 0:
            fail(field, "objective weights must be >= 0")
    if abs(cfg.w1 + cfg.w2 + cfg.w3 - 1.0) > 1e-9:
        fail("w1", f"objective weights must sum to 1, got {cfg.w1 + cfg.w2 + cfg.w3!r}")
    if cfg.phi < 0:
        fail("phi", f"penalty must be >= 0, got {cfg.phi!r}")
    if not 0.0 < cfg.gamma_disc < 1.0:
        fail("gamma_disc", f"discount must lie in (0, 1), got {cfg.gamma_disc!r}")
    if not 0.0 < cfg.polyak <= 1.0:
        fail("polyak", f"tracking rate must lie in (0, 1], got {cfg.polyak!r}")
    if not 0.0 < cfg.delta <= 1.0:
        fail("delta", f"EMA factor must lie in (0, 1], got {cfg.delta!r}")
    if not 0.0 <= cfg.eps_end <= cfg.eps_start <= 1.0:
        fail("eps_start", "need 0 <= eps_end <= eps_start <= 1, "
                          f"got start={cfg.eps_start!r} end={cfg.eps_end!r}")
    if cfg.alpha_ee < 0:
        fail("alpha_ee", f"entropy weight must be >= 0, got {cfg.alpha_ee!r}")
    for field in ("td3_noise_std", "td3_noise_clip", "explore_noise_std"):
        if getattr(cfg, field) < 0:
            fail(field, "noise scale must be >= 0")
    if cfg.batch_size > cfg.buffer_size:
        fail("batch_size", f"cannot exceed buffer_size={cfg.buffer_size}")
    if cfg.pu_pattern_mode not in PU_PATTERN_MODES:
        fail("pu_pattern_mode", f"must be one of {PU_PATTERN_MODES}, got {cfg.pu_pattern_mode!r}")
    if cfg.seed < 0:
        fail("seed", f"must be >= 0, got {cfg.seed!r}")


def reference_table() -> str:
    """Markdown table documenting every config key, its type and default."""
    rows = ["| key | type | default | description |", "| --- | --- | --- | --- |"]
    for f in dataclasses.fields(SimConfig):
        rows.append(f"| `{f.name}` | {_FIELDS[f.name]} | `{_format_value(f.default)}` "
                    f"| {FIELD_DOCS[f.name]} |")
    return "\n".join(rows) + "\n"


if __name__ == "__main__":
    print(reference_table(), end="")
