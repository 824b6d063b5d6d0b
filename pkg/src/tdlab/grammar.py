"""Pyparsing grammars for task names, parameter grids and sweep tables."""
from dataclasses import dataclass

from pyparsing import (Group, Keyword, Literal, MatchFirst, Optional,
                       ParseException, ParserElement, Regex, SkipTo,
                       StringEnd, Suppress, Word, ZeroOrMore, alphanums,
                       pyparsing_common)

from .core import ConfigurationError
from .envs import CANONICAL_TASKS

ParserElement.enable_packrat()

GRID_DECIMALS = 12

real = Regex(r'[+-]?(?:inf|nan|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)')
real.set_parse_action(lambda tokens: float(tokens[0]))
integer = pyparsing_common.integer

COMMA = Suppress(',')
COLON = Suppress(':')

mrp_task = (Keyword('mrp')('name') + Suppress('(') + integer('k') + COMMA +
            integer('b') + COMMA + real('sigma') + Suppress(')'))
canonical_name = MatchFirst([Literal(name) for name in
                             sorted(CANONICAL_TASKS, key=len, reverse=True)])
task = mrp_task | canonical_name('name')

log_range = Group(Keyword('log') + COLON + real + COLON + real + COLON + real)
linear_range = Group(real + COLON + real + COLON + real)
grid_item = log_range | linear_range | real
grid = grid_item + ZeroOrMore(COMMA + grid_item)

variant_name = Word(alphanums + '-')
variant_list = variant_name + ZeroOrMore(COMMA + variant_name)

manifest_line = Suppress('#') + Keyword('manifest') + Regex(r'\{.*\}')
csv_row = Group(variant_name + COMMA + real + COMMA + real + COMMA + real +
                COMMA + real + COMMA + integer + COMMA + integer)
csv_header = Literal('variant,alpha,lambda,metric_mean,metric_se,runs,'
                     'diverged')
sweep_csv = (Optional(Group(manifest_line)('manifest')) + csv_header +
             Group(ZeroOrMore(csv_row))('rows'))
table_csv = Group(manifest_line)('manifest') + SkipTo(StringEnd())('body')


@dataclass(frozen=True)
class TaskSpec:
    """A parsed task name: a generated MRP or a canonical example."""

    name: str
    k: int = None
    b: int = None
    sigma: float = None

    @property
    def generated(self):
        """Whether the task is drawn from the random MRP generator."""
        return self.name == 'mrp'

    def __str__(self):
        if self.generated:
            return 'mrp({},{},{})'.format(self.k, self.b, repr(self.sigma))
        return self.name


def parse_task(text):
    """Parse ``mrp(k,b,sigma)`` or a canonical task name."""
    try:
        result = task.parse_string(text.strip(), parse_all=True)
    except ParseException as error:
        raise ConfigurationError('unknown task {!r}: {}'.format(text, error))
    if result.name == 'mrp':
        return TaskSpec('mrp', int(result.k), int(result.b),
                        float(result.sigma))
    return TaskSpec(result.name)


def _expand(start, stop, step):
    if step <= 0 or stop < start:
        raise ConfigurationError('grid range needs start <= stop and a '
                                 'positive step')
    count = int(round((stop - start) / step))
    return [round(start + index * step, GRID_DECIMALS)
            for index in range(count + 1)]


def parse_grid(text):
    """Parse a grid spec into a sorted tuple of distinct values.

    Items are separated by commas; each is a number, an inclusive linear
    range ``start:stop:step`` or a logarithmic range ``log:lo:hi:step``
    standing for 10 ** lo, ..., 10 ** hi.

    """
    try:
        items = grid.parse_string(text.strip(), parse_all=True)
    except ParseException as error:
        raise ConfigurationError('bad grid {!r}: {}'.format(text, error))
    values = set()
    for item in items:
        if isinstance(item, float):
            values.add(item)
        elif item[0] == 'log':
            values.update(10.0 ** exponent for exponent in _expand(*item[1:]))
        else:
            values.update(_expand(*item))
    return tuple(sorted(values))


def parse_variants(text):
    """Parse a comma separated list of variant names."""
    try:
        return tuple(variant_list.parse_string(text.strip(), parse_all=True))
    except ParseException as error:
        raise ConfigurationError('bad variant list {!r}: {}'.format(text,
                                                                   error))
