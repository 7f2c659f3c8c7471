"""
Run configuration: JSON documents merged over defaults and validated into a
frozen RunConfig, plus synthesis of trigonometric initial data.
"""
from dataclasses import asdict, dataclass, field
import json
import logging
import math
from typing import NamedTuple, Optional

import numpy as np

from errors import ConfigError
from model import Grid, KineticState, ModelParams, Scaling
from verification import EXPERIMENTS

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS = {
    'experiment': 'aligned_hyperbolic',
    'gamma': None,
    'epsilon': 1.0,
    'epsilons': [0.1, 0.05, 0.025, 0.0125],
    'scaling': 'hyperbolic',
    'k': 1,
    'n_cells': 256,
    'T': 1.0,
    'sample_every': None,
    'chi_floor': 1e-14,
    'tau_end': 30.0,
    'tol': 1e-8,
    'max_iter': 100,
    'cells_per_epsilon': 4.0,
    'max_cells': 4096,
    'rel_change': 0.1,
    'micro_cells': [64, 128, 256],
    'reference_cells': 2048,
    'output_dir': 'results',
    'deterministic': True,
    'initial_data': {
        'plus': {'mean': 1.0, 'modes': []},
        'minus': {'mean': 1.0, 'modes': []},
    },
}

COMPONENT_KEYS = ('mean', 'modes')
MODE_KEYS = ('wavenumber', 'amplitude', 'phase')


class Mode(NamedTuple):
    wavenumber: int
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class ComponentSpec:
    """F(x) = mean + sum amplitude * cos(2 pi m x + phase)."""
    mean: float
    modes: tuple = ()

    @property
    def floor(self):
        return self.mean - sum(abs(mode.amplitude) for mode in self.modes)

    def evaluate(self, x):
        values = np.full_like(np.asarray(x, dtype=float), self.mean)
        for mode in self.modes:
            values += mode.amplitude * np.cos(2 * np.pi * mode.wavenumber * x + mode.phase)
        return values

    def derivative(self, x):
        values = np.zeros_like(np.asarray(x, dtype=float))
        for mode in self.modes:
            values -= 2 * np.pi * mode.wavenumber * mode.amplitude * np.sin(2 * np.pi * mode.wavenumber * x + mode.phase)
        return values


@dataclass(frozen=True)
class InitialDataSpec:
    plus: ComponentSpec
    minus: ComponentSpec

    def component(self, j):
        return self.plus if int(j) == 1 else self.minus

    def derivative_sup(self, samples=8192):
        """sup_x |d_x F(+1)| + sup_x |d_x F(-1)|, evaluated on a fine grid."""
        x = (np.arange(samples) + 0.5) / samples
        return float(np.max(np.abs(self.plus.derivative(x))) + np.max(np.abs(self.minus.derivative(x))))


@dataclass(frozen=True)
class RunConfig:
    gamma: float
    initial_data: InitialDataSpec
    experiment: str = 'aligned_hyperbolic'
    epsilon: float = 1.0
    epsilons: tuple = (0.1, 0.05, 0.025, 0.0125)
    scaling: str = 'hyperbolic'
    k: int = 1
    n_cells: int = 256
    T: float = 1.0
    sample_every: Optional[int] = None
    chi_floor: float = 1e-14
    tau_end: float = 30.0
    tol: float = 1e-8
    max_iter: int = 100
    cells_per_epsilon: float = 4.0
    max_cells: int = 4096
    rel_change: float = 0.1
    micro_cells: tuple = (64, 128, 256)
    reference_cells: int = 2048
    output_dir: str = 'results'
    deterministic: bool = field(default=True)

    def model_params(self, epsilon=None):
        return ModelParams(self.gamma, self.epsilon if epsilon is None else epsilon, Scaling(self.scaling), self.chi_floor)

    def grid(self):
        return Grid(self.n_cells)

    def to_dict(self):
        data = asdict(self)
        data['epsilons'] = list(self.epsilons)
        data['micro_cells'] = list(self.micro_cells)
        data['initial_data'] = {
            name: {
                'mean': component.mean,
                'modes': [mode._asdict() for mode in component.modes],
            }
            for name, component in (('plus', self.initial_data.plus), ('minus', self.initial_data.minus))
        }
        return data


def _deep_merge(default, override):
    """Deep merge two dictionaries."""
    result = default.copy()
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = value
    return result


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(document, overrides):
    """
    Patch a settings document with 'dotted.key=value' strings.

    Values are read as JSON and fall back to plain strings.
    """
    document = json.loads(json.dumps(document))
    for item in overrides or ():
        if '=' not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value", key=item)
        path, _, raw = item.partition('=')
        keys = path.strip().split('.')
        if not all(keys):
            raise ConfigError(f"malformed override key {path!r}", key=path)
        target = document
        for key in keys[:-1]:
            if not isinstance(target.get(key), dict):
                target[key] = {}
            target = target[key]
        target[keys[-1]] = _parse_value(raw.strip())
        logger.debug(f"Override {path} = {target[keys[-1]]!r}")
    return document


def _check_keys(document, allowed, prefix=''):
    if not isinstance(document, dict):
        raise ConfigError(f"expected a table, got {type(document).__name__}", key=prefix.rstrip('.') or None)
    for key in document:
        if key not in allowed:
            raise ConfigError("unknown key", key=f"{prefix}{key}")


def _number(settings, key, low=None, high=None, inclusive_low=True, integer=False, name=None):
    name = name or key
    value = settings[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key=name)
    if integer:
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"expected an integer, got {value!r}", key=name)
            value = int(value)
    else:
        value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", key=name)
    if low is not None and (value < low or (value == low and not inclusive_low)):
        bound = '>=' if inclusive_low else '>'
        raise ConfigError(f"must be {bound} {low}, got {value!r}", key=name)
    if high is not None and value >= high:
        raise ConfigError(f"must be < {high}, got {value!r}", key=name)
    return value


def _parse_component(document, name):
    prefix = f"initial_data.{name}"
    _check_keys(document, COMPONENT_KEYS, prefix + '.')
    mean = _number(document, 'mean', low=0.0, name=f"{prefix}.mean")
    raw_modes = document.get('modes', [])
    if not isinstance(raw_modes, list):
        raise ConfigError("expected a list of modes", key=f"{prefix}.modes")
    modes = []
    for index, raw in enumerate(raw_modes):
        key = f"{prefix}.modes[{index}]"
        if isinstance(raw, list):
            if len(raw) not in (2, 3):
                raise ConfigError("a mode is [wavenumber, amplitude] or [wavenumber, amplitude, phase]", key=key)
            raw = dict(zip(MODE_KEYS, raw))
        _check_keys(raw, MODE_KEYS, key + '.')
        if 'wavenumber' not in raw or 'amplitude' not in raw:
            raise ConfigError("a mode needs a wavenumber and an amplitude", key=key)
        raw = {'phase': 0.0, **raw}
        modes.append(Mode(
            _number(raw, 'wavenumber', low=1, integer=True, name=f"{key}.wavenumber"),
            _number(raw, 'amplitude', name=f"{key}.amplitude"),
            _number(raw, 'phase', name=f"{key}.phase"),
        ))
    component = ComponentSpec(mean, tuple(modes))
    if component.floor < 0:
        raise ConfigError(
            f"mean {mean:g} minus total amplitude is {component.floor:g} < 0; data could turn negative",
            key=prefix,
        )
    return component


def _validate(settings):
    if settings['gamma'] is None:
        raise ConfigError("gamma is required", key='gamma')
    gamma = _number(settings, 'gamma', low=0.0, inclusive_low=False)
    if gamma == 1:
        raise ConfigError("gamma must differ from 1 (the interaction degenerates at gamma = 1)", key='gamma')

    experiment = settings['experiment']
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}", key='experiment')
    scaling = settings['scaling']
    if scaling not in [s.value for s in Scaling]:
        raise ConfigError(f"scaling must be 'hyperbolic' or 'parabolic', got {scaling!r}", key='scaling')
    if settings['k'] not in (1, -1) or isinstance(settings['k'], bool):
        raise ConfigError(f"k must be 1 or -1, got {settings['k']!r}", key='k')

    epsilons = settings['epsilons']
    if not isinstance(epsilons, list) or not epsilons:
        raise ConfigError("expected a non-empty list", key='epsilons')
    ladder = tuple(
        _number({'e': e}, 'e', low=0.0, inclusive_low=False, name=f"epsilons[{i}]") for i, e in enumerate(epsilons)
    )
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError(f"epsilon ladder must be strictly decreasing, got {list(ladder)}", key='epsilons')

    micro_cells = settings['micro_cells']
    if not isinstance(micro_cells, list) or not micro_cells:
        raise ConfigError("expected a non-empty list", key='micro_cells')
    micro = tuple(
        _number({'n': n}, 'n', low=1, integer=True, name=f"micro_cells[{i}]") for i, n in enumerate(micro_cells)
    )
    reference_cells = _number(settings, 'reference_cells', low=1, integer=True)
    if any(reference_cells % n for n in micro):
        raise ConfigError(f"must be a multiple of every micro grid {list(micro)}", key='reference_cells')

    if settings['deterministic'] is not True:
        raise ConfigError("runs are always deterministic; only true is accepted", key='deterministic')
    if not isinstance(settings['output_dir'], str) or not settings['output_dir']:
        raise ConfigError("expected a directory name", key='output_dir')

    initial = settings['initial_data']
    _check_keys(initial, ('plus', 'minus'), 'initial_data.')
    initial_data = InitialDataSpec(
        _parse_component(initial['plus'], 'plus'),
        _parse_component(initial['minus'], 'minus'),
    )

    epsilon = _number(settings, 'epsilon', low=0.0, inclusive_low=False)
    n_cells = _number(settings, 'n_cells', low=1, integer=True)
    T = _number(settings, 'T', low=0.0, inclusive_low=False)
    sample_every = settings['sample_every']
    if sample_every is None:
        dt = epsilon / n_cells if scaling == 'parabolic' else 1.0 / n_cells
        sample_every = max(1, round(T / dt) // 50)
    else:
        sample_every = _number(settings, 'sample_every', low=1, integer=True)

    return RunConfig(
        gamma=gamma,
        initial_data=initial_data,
        experiment=experiment,
        epsilon=epsilon,
        epsilons=ladder,
        scaling=scaling,
        k=int(settings['k']),
        n_cells=n_cells,
        T=T,
        sample_every=sample_every,
        chi_floor=_number(settings, 'chi_floor', low=0.0, high=1e-3),
        tau_end=_number(settings, 'tau_end', low=0.0, inclusive_low=False),
        tol=_number(settings, 'tol', low=0.0, inclusive_low=False),
        max_iter=_number(settings, 'max_iter', low=1, integer=True),
        cells_per_epsilon=_number(settings, 'cells_per_epsilon', low=0.0, inclusive_low=False),
        max_cells=_number(settings, 'max_cells', low=1, integer=True),
        rel_change=_number(settings, 'rel_change', low=0.0, high=1.0, inclusive_low=False),
        micro_cells=micro,
        reference_cells=reference_cells,
        output_dir=settings['output_dir'],
    )


def parse_config(text, overrides=()):
    """
    Parse and validate a JSON run configuration.

    Args:
        text: JSON document; missing keys take the defaults.
        overrides: Iterable of 'dotted.key=value' patches applied before validation.

    Returns:
        RunConfig

    Raises:
        ConfigError: On malformed JSON (with its line number), unknown keys or
            invalid values (with the offending key).
    """
    try:
        document = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, line=e.lineno) from e
    if not isinstance(document, dict):
        raise ConfigError("top level must be a JSON object", line=1)
    document = apply_overrides(document, overrides)
    _check_keys(document, DEFAULT_SETTINGS)
    return _validate(_deep_merge(DEFAULT_SETTINGS, document))


def emit_config(config):
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)


def load_config(path=None, overrides=()):
    """Read a configuration file (or only the defaults when path is None)."""
    if path is None:
        return parse_config('{}', overrides)
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    logger.info(f"Loaded configuration from {path}")
    return parse_config(text, overrides)


def synthesize_initial(spec, grid):
    """Sample the trigonometric initial data at the cell centres of grid."""
    x = grid.centers
    # the floor is nonnegative, so anything below zero here is round-off
    return KineticState(
        np.maximum(spec.plus.evaluate(x), 0.0),
        np.maximum(spec.minus.evaluate(x), 0.0),
    )
