from dataclasses import dataclass, fields, asdict
from importlib import resources
import logging

import yaml

from rmabm.errors import ConfigurationError


logger = logging.getLogger(__name__)


POLICY_MODES = ('shared', 'independent')
UPDATE_ORDERS = ('fixed', 'shuffled')

# model symbols accepted as override keys
SYMBOL_KEYS = {
    'N': 'experiment.num_rl_agents',
    'z_c': 'model.search_depth',
    'policy_mode': 'rl.policy_mode',
    'T_train': 'experiment.t_train',
    'T_test': 'experiment.t_test',
}


def _check(ok, key, message):
    if not ok:
        raise ConfigurationError(f'invalid {key}: {message}', key=key)


def _check_count(section, obj, *names):
    for name in names:
        value = getattr(obj, name)
        _check(isinstance(value, int) and not isinstance(value, bool) and value > 0,
               f'{section}.{name}', f'expected a positive integer, got {value!r}')


def _check_range(section, obj, name, lo, hi, *, lo_open=False, hi_open=False):
    value = getattr(obj, name)
    key = f'{section}.{name}'

    _check(isinstance(value, (int, float)) and not isinstance(value, bool), key, f'expected a number, got {value!r}')

    lo_ok = lo is None or (value > lo if lo_open else value >= lo)
    hi_ok = hi is None or (value < hi if hi_open else value <= hi)

    lo_br = '(' if lo_open else '['
    hi_br = ')' if hi_open else ']'
    _check(lo_ok and hi_ok, key, f'{value} not in {lo_br}{lo}, {hi}{hi_br}')


@dataclass(frozen=True)
class ModelParams:
    num_workers: int
    num_cfirms: int
    num_kfirms: int
    num_capitalists: int
    search_depth: int
    labour_productivity: float
    capital_productivity: float
    quantity_adjustment: float
    price_adjustment_max: float
    wage: float
    propensity_income: float
    propensity_wealth: float
    interest_rate: float
    dividend_rate: float
    capital_depreciation: float
    entrant_asset_fraction: float
    loan_duration: int
    capital_search_depth: int
    labour_search_depth: int
    initial_price: float
    initial_target_output: float
    initial_kfirm_target: float
    initial_cfirm_assets: float
    initial_kfirm_assets: float
    initial_deposits: float

    def __post_init__(self):
        _check_count('model', self,
            'num_workers', 'num_cfirms', 'num_kfirms', 'num_capitalists', 'search_depth',
            'loan_duration', 'capital_search_depth', 'labour_search_depth')

        _check(self.search_depth <= self.num_cfirms, 'model.search_depth',
               f'consumers cannot visit {self.search_depth} of {self.num_cfirms} C-firms')
        _check(self.capital_search_depth <= self.num_kfirms, 'model.capital_search_depth',
               f'C-firms cannot visit {self.capital_search_depth} of {self.num_kfirms} K-firms')

        for name in ('labour_productivity', 'capital_productivity', 'wage', 'initial_price',
                     'initial_target_output', 'initial_kfirm_target', 'initial_cfirm_assets',
                     'initial_kfirm_assets', 'initial_deposits'):
            _check_range('model', self, name, 0, None, lo_open=True)

        _check_range('model', self, 'quantity_adjustment', 0, 1, lo_open=True)
        _check_range('model', self, 'price_adjustment_max', 0, 1, lo_open=True, hi_open=True)
        _check_range('model', self, 'propensity_income', 0, 1, lo_open=True)
        _check_range('model', self, 'propensity_wealth', 0, 1, lo_open=True)
        _check_range('model', self, 'interest_rate', 0, 1)
        _check_range('model', self, 'dividend_rate', 0, 1)
        _check_range('model', self, 'capital_depreciation', 0, 1, hi_open=True)
        _check_range('model', self, 'entrant_asset_fraction', 0, 1, lo_open=True)


@dataclass(frozen=True)
class RLConfig:
    n_states: int
    obs_min: float
    obs_max: float
    n_actions: int
    act_min: float
    act_max: float
    discount: float
    learning_rate: float
    bankruptcy_penalty: float
    policy_mode: str
    quantity_floor: float
    update_order: str

    def __post_init__(self):
        _check_count('rl', self, 'n_states', 'n_actions')
        _check(self.n_states >= 2, 'rl.n_states', 'need at least 2 poles')
        _check(self.n_actions >= 2, 'rl.n_actions', 'need at least 2 actions')

        _check_range('rl', self, 'obs_min', None, None)
        _check_range('rl', self, 'obs_max', None, None)
        _check_range('rl', self, 'act_min', None, None)
        _check_range('rl', self, 'act_max', None, None)
        _check(self.obs_min < self.obs_max, 'rl.obs_max', 'obs_min must be below obs_max')
        _check(self.act_min < self.act_max, 'rl.act_max', 'act_min must be below act_max')

        _check_range('rl', self, 'discount', 0, 1, hi_open=True)
        _check_range('rl', self, 'learning_rate', 0, 1, lo_open=True)
        _check_range('rl', self, 'bankruptcy_penalty', None, None)
        _check_range('rl', self, 'quantity_floor', 0, None, lo_open=True)

        _check(self.policy_mode in POLICY_MODES, 'rl.policy_mode', f'expected one of {POLICY_MODES}, got {self.policy_mode!r}')
        _check(self.update_order in UPDATE_ORDERS, 'rl.update_order', f'expected one of {UPDATE_ORDERS}, got {self.update_order!r}')


@dataclass(frozen=True)
class AnalysisConfig:
    market_power_delta: float
    market_power_sales: float
    dumping_delta: float
    dumping_sales: float
    gdp_window: int

    def __post_init__(self):
        for name in ('market_power_delta', 'dumping_delta'):
            _check_range('analysis', self, name, None, None)

        _check_range('analysis', self, 'market_power_sales', 0, None, lo_open=True)
        _check_range('analysis', self, 'dumping_sales', 0, None, lo_open=True)
        _check_count('analysis', self, 'gdp_window')


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: ModelParams
    rl: RLConfig
    analysis: AnalysisConfig
    num_rl_agents: int
    t_train: int
    t_test: int
    t_sim: int
    t_burn_in: int
    base_seed: int
    fixed_seed: bool
    t_shock: int
    shock_size: float
    shock_duration: int
    irf_seeds: int

    def __post_init__(self):
        _check(isinstance(self.name, str) and self.name.replace('-', '').replace('_', '').isalnum(),
               'name', f'experiment names must be alphanumeric, got {self.name!r}')

        _check(isinstance(self.num_rl_agents, int) and 0 <= self.num_rl_agents <= self.model.num_cfirms,
               'experiment.num_rl_agents',
               f'{self.num_rl_agents} RL agents cannot control {self.model.num_cfirms} C-firms')

        _check_count('experiment', self, 't_train', 't_test', 't_sim', 't_burn_in', 'shock_duration', 'irf_seeds')
        _check(isinstance(self.base_seed, int) and self.base_seed >= 0, 'experiment.base_seed',
               f'expected a non-negative integer, got {self.base_seed!r}')
        _check(isinstance(self.fixed_seed, bool), 'experiment.fixed_seed', f'expected a boolean, got {self.fixed_seed!r}')
        _check_range('experiment', self, 'shock_size', -1, None, lo_open=True)
        _check(isinstance(self.t_shock, int), 'experiment.t_shock', f'expected an integer, got {self.t_shock!r}')

        if not 2 <= self.model.search_depth <= 10:
            logger.warning('ExperimentConfig: z_c=%d is outside the studied range 2..10', self.model.search_depth)


    @property
    def episode_length(self):
        return self.t_burn_in + self.t_sim


    def with_overrides(self, overrides):
        return config_from_dict(apply_overrides(config_to_dict(self), overrides))


SECTIONS = {
    'model': ModelParams,
    'rl': RLConfig,
    'analysis': AnalysisConfig,
}


def _section_from_dict(section, cls, data):
    if not isinstance(data, dict):
        raise ConfigurationError(f'section {section} must be a mapping', key=section)

    names = [f.name for f in fields(cls)]

    for name in names:
        if name not in data:
            raise ConfigurationError(f'missing required key: {section}.{name}', key=f'{section}.{name}')

    for name in data:
        if name not in names:
            raise ConfigurationError(f'unknown key: {section}.{name}', key=f'{section}.{name}')

    return cls(**{name: data[name] for name in names})


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigurationError('configuration must be a mapping')

    for key in ('name', 'model', 'rl', 'analysis', 'experiment'):
        if key not in data:
            raise ConfigurationError(f'missing required key: {key}', key=key)

    for key in data:
        if key not in ('name', 'model', 'rl', 'analysis', 'experiment'):
            raise ConfigurationError(f'unknown key: {key}', key=key)

    sections = {
        section: _section_from_dict(section, cls, data[section])
        for section, cls in SECTIONS.items()
    }

    experiment = data['experiment']
    scalar_names = [f.name for f in fields(ExperimentConfig) if f.name not in SECTIONS and f.name != 'name']

    if not isinstance(experiment, dict):
        raise ConfigurationError('section experiment must be a mapping', key='experiment')

    for name in scalar_names:
        if name not in experiment:
            raise ConfigurationError(f'missing required key: experiment.{name}', key=f'experiment.{name}')

    for name in experiment:
        if name not in scalar_names:
            raise ConfigurationError(f'unknown key: experiment.{name}', key=f'experiment.{name}')

    return ExperimentConfig(
        name=data['name'],
        **sections,
        **{name: experiment[name] for name in scalar_names})


def config_to_dict(cfg):
    data = {'name': cfg.name}

    for section in SECTIONS:
        data[section] = asdict(getattr(cfg, section))

    data['experiment'] = {
        f.name: getattr(cfg, f.name)
        for f in fields(ExperimentConfig)
        if f.name not in SECTIONS and f.name != 'name'
    }

    return data


def resolve_key(data, key):
    key = SYMBOL_KEYS.get(key, key)

    if '.' in key:
        section, name = key.split('.', 1)
        if section not in data or not isinstance(data[section], dict) or name not in data[section]:
            raise ConfigurationError(f'unknown override key: {key}', key=key)
        return section, name

    if key == 'name':
        return None, key

    matches = [section for section, values in data.items() if isinstance(values, dict) and key in values]

    if len(matches) != 1:
        raise ConfigurationError(f'override key {key} is unknown or ambiguous; use section.{key}', key=key)

    return matches[0], key


def parse_override(text):
    if '=' not in text:
        raise ConfigurationError(f'override must look like key=value, got {text!r}', key=text)

    key, raw = text.split('=', 1)
    return key.strip(), yaml.safe_load(raw)


def apply_overrides(data, overrides):
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}

    for override in overrides or ():
        key, value = parse_override(override) if isinstance(override, str) else override
        section, name = resolve_key(data, key)

        if section is None:
            data[name] = value
        else:
            data[section][name] = value

    return data


def read_config_dict(path):
    try:
        with open(path, 'r') as infile:
            data = yaml.safe_load(infile)
    except FileNotFoundError:
        raise ConfigurationError(f'config file {path} was not found', key='config') from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f'config file {path} is not valid YAML: {exc}', key='config') from None

    return data


def load_config(path=None, overrides=()):
    data = read_config_dict(path) if path is not None else default_config_dict()

    return config_from_dict(apply_overrides(data, overrides))


def default_config_dict():
    text = resources.files('rmabm.configs').joinpath('default.yaml').read_text()
    return yaml.safe_load(text)


def default_config(overrides=()):
    return load_config(None, overrides)


def write_config(path, cfg):
    with open(path, 'w') as outfile:
        yaml.safe_dump(config_to_dict(cfg), outfile, sort_keys=False)
