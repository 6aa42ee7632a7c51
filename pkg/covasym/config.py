import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .repkit import SpaceSpec

__all__ = ['Tolerances', 'DEFAULT_TOLERANCES', 'ExperimentConfig', 'SUITES']

logger = logging.getLogger(__name__)

# order matters: the 'all' suite runs these in sequence
SUITES = ('rep-checks', 'locc-sim', 'monotonicity', 'finite-set',
          'counterexample-L', 'pinch-rules', 'abelian', 'conservation')


@dataclass(frozen=True)
class Tolerances:
    ''' Tolerance hierarchy shared by the library and the harness

        Each composition layer loses roughly one digit, so construction
        identities are checked tighter than end-to-end channel identities,
        which in turn are tighter than monotonicity comparisons.
    '''
    construction: float = 1e-12 # isometries, projectors, CG tables
    channel: float = 1e-10      # channel identities, covariance residuals
    monotone: float = 1e-9      # monotonicity comparisons
    clip: float = 1e-12         # eigenvalues in [-clip, 0) are float noise
    support: float = 1e-10      # support test inside relative entropy
    negative: float = 1e-10     # lowest eigenvalue accepted for a state

    def with_overrides(self, overrides:dict):
        '''returns a copy with the named tolerances replaced

        :param overrides: dict[str, float] - tolerance name to positive value
        '''
        names = {f.name for f in fields(self)}
        for name, value in overrides.items():
            if name not in names:
                raise ConfigError(f"Config Error: unknown tolerance '{name}', expected one of {sorted(names)}")
            if not float(value) > 0:
                raise ConfigError(f"Config Error: tolerance '{name}' must be positive, not {value}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class ExperimentConfig:
    ''' Everything needed to reproduce one harness run

        Values are read from a JSON document and then overridden by CLI flags.
        A missing `space` or `trials` means the suite uses its own default.
    '''
    suite: str = 'all'
    space: SpaceSpec = None
    trials: int = None
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    out_dir: Path = Path('reports')
    single_thread: bool = False
    workers: int = 4

    _keys = ('suite', 'space', 'trials', 'seed', 'tolerances', 'out', 'single_thread', 'workers')

    def __post_init__(self):
        self.validate()

    def validate(self):
        '''raises ConfigError for unknown suites, bad counts or bad tolerances'''
        if self.suite not in SUITES + ('all',):
            raise ConfigError(f"Config Error: unknown suite '{self.suite}', expected one of {list(SUITES) + ['all']}")
        if self.trials is not None and (not isinstance(self.trials, int) or self.trials < 1):
            raise ConfigError(f'Config Error: trials must be a positive integer, not {self.trials!r}')
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f'Config Error: seed must be a non-negative integer, not {self.seed!r}')
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f'Config Error: workers must be a positive integer, not {self.workers!r}')
        for name, value in self.tolerances.to_dict().items():
            if not value > 0:
                raise ConfigError(f"Config Error: tolerance '{name}' must be positive, not {value}")

    @classmethod
    def from_dict(cls, data:dict):
        '''builds a config from the parsed JSON document'''
        unknown = set(data) - set(cls._keys)
        if unknown:
            raise ConfigError(f'Config Error: unknown keys {sorted(unknown)}')
        try:
            space = SpaceSpec.from_dict(data['space']) if data.get('space') is not None else None
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f'Config Error: invalid space description: {err}') from err
        tolerances = Tolerances().with_overrides(data.get('tolerances', {}))
        return cls(suite=data.get('suite', 'all'), space=space, trials=data.get('trials'),
                   seed=data.get('seed', 0), tolerances=tolerances,
                   out_dir=Path(data.get('out', 'reports')),
                   single_thread=bool(data.get('single_thread', False)),
                   workers=data.get('workers', 4))

    @classmethod
    def from_file(cls, path):
        '''reads a JSON config file (UTF-8)'''
        try:
            data = json.loads(Path(path).read_text(encoding='utf-8'))
        except OSError as err:
            raise ConfigError(f'Config Error: cannot read config file {path}: {err}') from err
        except json.JSONDecodeError as err:
            raise ConfigError(f'Config Error: config file {path} is not valid JSON: {err}') from err
        if not isinstance(data, dict):
            raise ConfigError(f'Config Error: config file {path} must hold a JSON object')
        logger.info('loaded config from %s', path)
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {'suite': self.suite,
                'space': self.space.to_dict() if self.space is not None else None,
                'trials': self.trials, 'seed': self.seed,
                'tolerances': self.tolerances.to_dict(), 'out': str(self.out_dir),
                'single_thread': self.single_thread, 'workers': self.workers}
