"""
Simulation configuration and its defaults.

Every module reads its constants from a SimulationConfig so that a run is fully
described by one validated object (and by the flat ``key = value`` file it can
be loaded from).
"""

from dataclasses import dataclass, fields, asdict
from typing import Any, Dict, List, Optional

SCHEDULERS = ('poised', 'nearest', 'fcfs')


class ConfigError(ValueError):
    """Invalid configuration value; ``key`` names the offending setting."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class DistributionParams:
    """Curve-fit constants of one priority distribution."""
    alpha: float
    beta: float
    gamma: float
    mu: Optional[float] = None
    lambda_weight: float = 1.0


# Constants exactly as fitted; never refit.
RESIDUAL_PARAMS = DistributionParams(alpha=4.1997, beta=-3.16759, gamma=0.27897, lambda_weight=2.0)
DISTANCE_PARAMS = DistributionParams(alpha=1.83283, beta=-0.69354, gamma=-0.24143, mu=1.28078, lambda_weight=1.0)
DEGREE_PARAMS = DistributionParams(alpha=0.02098, beta=1.29332, gamma=-0.4591, mu=0.978, lambda_weight=1.0)
BETWEENNESS_PARAMS = DistributionParams(alpha=1.343494, beta=2.88956, gamma=0.57881, lambda_weight=1.0)

# Lower bounds on the lambda exponents per attribute
LAMBDA_MINIMUMS = {
    'residual_lambda': 2.0,
    'distance_lambda': 1.0,
    'degree_lambda': 1.0,
    'betweenness_lambda': 1.0,
}


@dataclass
class SimulationConfig:
    """All knobs of one simulation run (published deployment values by default)."""
    node_count: int = 100
    mcv_count: int = 4
    area_side: float = 400.0
    seed: int = 1
    horizon: float = 24 * 3600.0
    scheduler: str = 'poised'
    isac: bool = True

    # Sensor nodes
    node_capacity: float = 0.5
    request_threshold_ratio: float = 0.30
    comm_range: float = 50.0
    sensing_range: float = 25.0
    drain_rate_min: float = 5e-5
    drain_rate_max: float = 2e-4
    initial_residual_min_ratio: float = 0.5

    # Mobile charging vehicles
    mcv_capacity: float = 10_000.0
    mcv_speed: float = 5.0
    travel_cost: float = 5.0
    charge_rate: float = 0.05
    reserve_ratio: float = 0.10
    circum_radius: Optional[float] = None
    idle_roam: bool = False

    # Sink scheduling
    resort_interval: float = 60.0
    probe_interval: float = 1.0

    # ISAC ranging
    isac_sample_rate: float = 1e9
    isac_pulse_duration: float = 1e-6
    isac_f0: float = 1e7
    isac_f1: float = 1e8
    isac_snr_db: float = 10.0

    # Distribution exponents; the remaining constants stay frozen
    residual_lambda: float = RESIDUAL_PARAMS.lambda_weight
    distance_lambda: float = DISTANCE_PARAMS.lambda_weight
    degree_lambda: float = DEGREE_PARAMS.lambda_weight
    betweenness_lambda: float = BETWEENNESS_PARAMS.lambda_weight

    def __post_init__(self):
        self.validate()

    @property
    def request_threshold(self) -> float:
        return self.request_threshold_ratio * self.node_capacity

    @property
    def effective_circum_radius(self) -> float:
        """C_c: circumradius of the square area unless configured."""
        if self.circum_radius is not None:
            return self.circum_radius
        return self.area_side * 2 ** 0.5

    @property
    def min_working_threshold(self) -> float:
        """CE_th without the return-trip term."""
        return self.reserve_ratio * self.mcv_capacity

    def distribution_params(self) -> Dict[str, DistributionParams]:
        return {
            'residual': _with_lambda(RESIDUAL_PARAMS, self.residual_lambda),
            'distance': _with_lambda(DISTANCE_PARAMS, self.distance_lambda),
            'degree': _with_lambda(DEGREE_PARAMS, self.degree_lambda),
            'betweenness': _with_lambda(BETWEENNESS_PARAMS, self.betweenness_lambda),
        }

    def validate(self):
        if self.node_count < 1:
            raise ConfigError('node_count', 'at least one sensor node is required')
        if self.mcv_count < 1:
            raise ConfigError('mcv_count', 'at least one MCV is required')
        if self.scheduler not in SCHEDULERS:
            raise ConfigError('scheduler', f"expected one of {', '.join(SCHEDULERS)}, got {self.scheduler!r}")

        for key in ('area_side', 'horizon', 'node_capacity', 'comm_range', 'sensing_range',
                    'drain_rate_min', 'drain_rate_max', 'mcv_capacity', 'mcv_speed',
                    'travel_cost', 'charge_rate', 'resort_interval', 'probe_interval',
                    'isac_sample_rate', 'isac_pulse_duration'):
            if not getattr(self, key) > 0:
                raise ConfigError(key, f"must be positive, got {getattr(self, key)}")

        if self.circum_radius is not None and not self.circum_radius > 0:
            raise ConfigError('circum_radius', 'must be positive')
        if self.drain_rate_min > self.drain_rate_max:
            raise ConfigError('drain_rate_min', 'must not exceed drain_rate_max')
        for key in ('request_threshold_ratio', 'reserve_ratio', 'initial_residual_min_ratio'):
            value = getattr(self, key)
            if not 0 <= value <= 1:
                raise ConfigError(key, f"must lie in [0, 1], got {value}")
        if self.isac_f0 < 0 or self.isac_f1 < 0:
            raise ConfigError('isac_f0', 'chirp frequencies must be non-negative')
        if self.isac_sample_rate <= 2 * max(self.isac_f0, self.isac_f1):
            raise ConfigError('isac_sample_rate', 'must exceed twice the highest chirp frequency')
        for key, minimum in LAMBDA_MINIMUMS.items():
            if getattr(self, key) < minimum:
                raise ConfigError(key, f"must be >= {minimum}")

    @classmethod
    def from_mapping(cls, mapping: Dict[str, Any]) -> 'SimulationConfig':
        """Build a config from loosely typed values (file, JSON body, flags)."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise ConfigError(key, 'unknown configuration key')
            kwargs[key] = _coerce(key, raw, known[key].default)
        return cls(**kwargs)

    def replace(self, **changes) -> 'SimulationConfig':
        values = self.to_dict()
        values.update(changes)
        return SimulationConfig.from_mapping(values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _with_lambda(params: DistributionParams, lambda_weight: float) -> DistributionParams:
    return DistributionParams(params.alpha, params.beta, params.gamma, params.mu, lambda_weight)


def _coerce(key: str, raw: Any, default: Any) -> Any:
    """Coerce ``raw`` to the type of the field default."""
    if raw is None:
        return None
    try:
        if isinstance(default, bool):
            return parse_bool(raw)
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(f"{raw} is not an integer")
            return int(raw)
        if isinstance(default, float) or default is None:
            return float(raw)
        if isinstance(default, str):
            return str(raw).strip().lower()
    except (TypeError, ValueError) as e:
        raise ConfigError(key, f"cannot parse {raw!r}: {e}") from e
    return raw


def parse_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_value(text: str) -> Any:
    """Parse one ``key = value`` right-hand side into int, float, bool, list or str."""
    text = text.strip()
    if text.startswith('[') and text.endswith(']'):
        inner = text[1:-1].strip()
        return [parse_value(part) for part in inner.split(',')] if inner else []
    if ',' in text:
        return [parse_value(part) for part in text.split(',')]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    try:
        return parse_bool(text)
    except ValueError:
        return text.strip('"\'')


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a flat ``key = value`` config file; ``#`` starts a comment."""
    values: Dict[str, Any] = {}
    with open(path, 'r', encoding='utf-8') as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
            key, value = line.split('=', 1)
            values[key.strip()] = parse_value(value)
    return values


def list_of_ints(key: str, raw: Any) -> List[int]:
    """Accept ``[1, 2]``, ``"1,2"``, ``1`` or a list of strings."""
    if isinstance(raw, (list, tuple)):
        items = raw
    elif isinstance(raw, str):
        items = [part for part in raw.replace('[', '').replace(']', '').split(',') if part.strip()]
    else:
        items = [raw]
    try:
        return [int(str(item).strip()) for item in items]
    except ValueError as e:
        raise ConfigError(key, f"expected a list of integers, got {raw!r}") from e
