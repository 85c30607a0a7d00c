import hashlib
import json
import os

import attr

from .errors import ConfigError
from .nerve import VERDICT_EXACT, VERDICT_MODES
from .system import TAIL_KINDS, TAIL_PERIODIC, TAIL_TRUNCATE
from .utils import display_location, prod

DEFAULT_CELL_BUDGET = 5_000_000
CELL_BUDGET_ENV = "NERVE_CELL_BUDGET"

# Fields that change where results go, not what they are.
_PRESENTATION_FIELDS = {"out", "threads"}


def default_cell_budget():
    value = os.environ.get(CELL_BUDGET_ENV)
    if value is None:
        return DEFAULT_CELL_BUDGET
    try:
        budget = int(value)
    except ValueError:
        raise ConfigError(f"{CELL_BUDGET_ENV}={value!r} is not an integer")
    if budget < 1:
        raise ConfigError(f"{CELL_BUDGET_ENV} must be positive, got {budget}")
    return budget


def _positive(instance, attribute, value):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{attribute.name} must be a positive integer, got {value!r}")


@attr.s
class TrialConfig:
    d = attr.ib(default=2, validator=_positive)
    n = attr.ib(default=(2, 2), converter=lambda n: tuple(int(x) for x in n))
    r = attr.ib(default=1, validator=_positive)
    kmax = attr.ib(default=6, validator=_positive)
    trials = attr.ib(default=10, validator=_positive)
    seed = attr.ib(default=0)
    tail = attr.ib(default=TAIL_PERIODIC, validator=attr.validators.in_(TAIL_KINDS))
    verdict_mode = attr.ib(default=VERDICT_EXACT, validator=attr.validators.in_(VERDICT_MODES))
    cell_budget = attr.ib(factory=default_cell_budget, validator=_positive)
    max_tail_block = attr.ib(default=256, validator=_positive)
    out = attr.ib(default=None)
    threads = attr.ib(default=1, validator=_positive)
    # Recompute graph homology through SNF and fail on disagreement.
    check_homology = attr.ib(default=False, validator=attr.validators.instance_of(bool))

    @seed.validator
    def _check_seed(self, attribute, value):
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {value!r}")

    def __attrs_post_init__(self):
        if len(self.n) != self.d:
            raise ConfigError(f"d={self.d} does not match n={self.n}")
        if any(nk < 2 for nk in self.n):
            raise ConfigError(f"subdivision counts must be at least 2, got n={self.n}")
        if not self.r <= prod(self.n) - 1:
            raise ConfigError(f"r={self.r} out of range 1..{prod(self.n) - 1}")
        if self.kmax < 2:
            raise ConfigError(f"kmax must be at least 2, got {self.kmax}")
        if self.tail == TAIL_TRUNCATE and self.verdict_mode == VERDICT_EXACT:
            raise ConfigError("a truncate tail leaves contacts undecided, use the outer or inner verdict mode")

    def to_json(self):
        data = attr.asdict(self)
        data["n"] = list(self.n)
        return data

    def config_hash(self):
        data = {k: v for k, v in self.to_json().items() if k not in _PRESENTATION_FIELDS}
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()

    @classmethod
    def from_string(cls, text, filename=None):
        data = _load_json(text, filename)
        if not isinstance(data, dict):
            raise ConfigError(f"{filename or '<string>'}: a trial config must be a JSON object")
        unknown = set(data) - {a.name for a in attr.fields(cls)}
        if unknown:
            raise ConfigError(f"{filename or '<string>'}: unknown config keys {sorted(unknown)}")
        return merge_options(cls, None, data)

    @classmethod
    def from_file(cls, filename, encoding="utf-8"):
        with open(filename, "rb") as f:
            return cls.from_string(f.read().decode(encoding), filename=filename)


def _load_json(text, filename):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{display_location(filename, (e.lineno, e.colno))}: {e.msg}")


def merge_options(options_class, base, overrides):
    """
    Given an 'options_class', an optional 'base' object to copy from,
    and a dict of overrides, create a new options instance.

    Overrides set to None are ignored, so unset command line flags can be
    passed straight through.
    """
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if base is not None and not overrides:
        # We can safely re-use base, because we don't
        # mutate options objects outside this function.
        return base
    try:
        # evolve goes through the constructor, so validators run on the merged result.
        return attr.evolve(base if base is not None else options_class(), **overrides)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
