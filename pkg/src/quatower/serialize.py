"""Scenario files, tower descriptors, and the small expression language
the command line speaks.

Everything here is plumbing: JSON in, exact tower elements out, reports
back to JSON.  Expressions are parsed by a plain recursive-descent
parser over + - * / ^ with integers, parentheses and generator names;
evaluation happens directly on tower elements (or quaternions, when the
environment provides the units), so there is no numeric stage anywhere.
"""

import json

from .fields import FieldTower, FieldElement
from .exceptions import ParseError, QuatowerError


# ----------------------------------------------------------------------
# expressions
# ----------------------------------------------------------------------

_OPS = set("+-*/^()")


def _tokenize(text):
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            out.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(('int', int(text[i:j]), i))
            i = j
            continue
        if ch.isalpha() or ch == '_':
            j = i
            while j < n and (text[j].isalnum() or text[j] == '_'):
                j += 1
            out.append(('name', text[i:j], i))
            i = j
            continue
        raise ParseError("unexpected character %r at position %d in %r"
                         % (ch, i, text))
    out.append(('end', None, n))
    return out


class _Parser:
    """expr := term (('+'|'-') term)*
    term := factor (('*'|'/') factor)*
    factor := ('+'|'-') factor | atom ('^' signed_int)?
    atom := int | name | '(' expr ')'
    """

    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None):
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError("expected %s, found %r at position %d in %r"
                             % (kind, tok[1], tok[2], self.text))
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek()[0] != 'end':
            tok = self.peek()
            raise ParseError("trailing %r at position %d in %r"
                             % (tok[1], tok[2], self.text))
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ('+', '-'):
            op = self.take()[0]
            rhs = self.term()
            node = (('add' if op == '+' else 'sub'), node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] in ('*', '/'):
            op = self.take()[0]
            rhs = self.factor()
            node = (('mul' if op == '*' else 'div'), node, rhs)
        return node

    def factor(self):
        kind = self.peek()[0]
        if kind in ('+', '-'):
            op = self.take()[0]
            node = self.factor()
            return node if op == '+' else ('neg', node)
        node = self.atom()
        if self.peek()[0] == '^':
            self.take()
            sign = 1
            if self.peek()[0] == '-':
                self.take()
                sign = -1
            e = self.take('int')[1]
            node = ('pow', node, sign * e)
        return node

    def atom(self):
        kind, val, pos = self.peek()
        if kind == 'int':
            self.take()
            return ('int', val)
        if kind == 'name':
            self.take()
            return ('ref', val)
        if kind == '(':
            self.take()
            node = self.expr()
            self.take(')')
            return node
        raise ParseError("expected a value, found %r at position %d in %r"
                         % (val, pos, self.text))


def parse_expression(text):
    if not isinstance(text, str):
        raise ParseError("expression must be a string, got %r" % (text,))
    return _Parser(text).parse()


def eval_expression(node, env, from_int):
    """Evaluate a parsed expression; names resolve through env, integers
    through from_int.  Arithmetic is whatever the values implement."""
    op = node[0]
    if op == 'int':
        return from_int(node[1])
    if op == 'ref':
        if node[1] not in env:
            raise ParseError("unknown name %r (have: %s)"
                             % (node[1], ", ".join(sorted(env))))
        return env[node[1]]
    if op == 'neg':
        return -eval_expression(node[1], env, from_int)
    if op == 'pow':
        base = eval_expression(node[1], env, from_int)
        return base ** node[2]
    a = eval_expression(node[1], env, from_int)
    b = eval_expression(node[2], env, from_int)
    if op == 'add':
        return a + b
    if op == 'sub':
        return a - b
    if op == 'mul':
        return a * b
    if op == 'div':
        return a / b
    raise ParseError("malformed expression node %r" % (node,))


# ----------------------------------------------------------------------
# towers and elements from descriptors
# ----------------------------------------------------------------------

def tower_from_descriptor(desc):
    """{"base": "Q" | "Fp:<p>", "layers": [{"kind": ..., "name": ...,
    "radicand": expr?}]} -> FieldTower.  Radicands of quadratic layers
    are parsed against the tower built so far."""
    if not isinstance(desc, dict):
        raise ParseError("tower descriptor must be an object")
    base = desc.get('base')
    if base == 'Q':
        T = FieldTower.rationals()
    elif isinstance(base, str) and base.startswith('Fp:'):
        try:
            p = int(base[3:])
        except ValueError:
            raise ParseError("bad base %r" % base)
        T = FieldTower.prime_field(p)
    else:
        raise ParseError("base must be 'Q' or 'Fp:<p>', got %r" % (base,))
    for layer in desc.get('layers', ()):
        if not isinstance(layer, dict) or 'kind' not in layer \
                or 'name' not in layer:
            raise ParseError("layer needs 'kind' and 'name': %r" % (layer,))
        kind, name = layer['kind'], layer['name']
        if not isinstance(name, str) or not name:
            raise ParseError("layer name must be a nonempty string")
        if kind == 'laurent':
            T = T.add_laurent(name)
        elif kind == 'ratfunc':
            T = T.add_ratfunc(name)
        elif kind == 'quadratic':
            if 'radicand' not in layer:
                raise ParseError("quadratic layer needs a radicand")
            rad = field_element(layer['radicand'], T)
            T = T.add_quadratic(rad, name)
        else:
            raise ParseError("unknown layer kind %r" % (kind,))
    return T


def generator_env(tower, level=None):
    if level is None:
        level = tower.height()
    return {l.name: tower.gen(i + 1).lift_to(level)
            for i, l in enumerate(tower.layers[:level])}


def field_element(text, tower, level=None):
    """Evaluate an expression string to a FieldElement of the tower."""
    if level is None:
        level = tower.height()
    node = parse_expression(text)

    def from_int(n):
        return tower.elt(n, level)

    val = eval_expression(node, generator_env(tower, level), from_int)
    if not isinstance(val, FieldElement):
        raise ParseError("expression %r is not a field element" % text)
    return val


def pure_element(text, Q):
    """Evaluate an expression string to a quaternion over Q; the units
    i, j, k name the standard pures."""
    node = parse_expression(text)
    lvl = Q.level
    env = generator_env(Q.tower, lvl)
    env.update({'i': Q.i(), 'j': Q.j(), 'k': Q.k()})

    def from_int(n):
        return Q.tower.elt(n, lvl)

    val = eval_expression(node, env, from_int)
    if isinstance(val, FieldElement):
        val = Q.elt(val)
    return val


# ----------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------

_CONSTRUCTIONS = ('form-ladder', 'custom-form', 'unitary-extension')


class Scenario:
    """Parsed scenario: a tower, one construction over it, the checks to
    run, bounds and a seed.  Field values stay as expression strings
    until the construction is actually built."""

    def __init__(self, data):
        if not isinstance(data, dict):
            raise ParseError("scenario must be a JSON object")
        try:
            self.tower = tower_from_descriptor(data['tower'])
        except KeyError:
            raise ParseError("scenario needs a 'tower' descriptor")
        self.construction = data.get('construction')
        if self.construction not in _CONSTRUCTIONS:
            raise ParseError("construction must be one of %s, got %r"
                             % (", ".join(_CONSTRUCTIONS),
                                self.construction))
        alg = data.get('algebra')
        if not isinstance(alg, dict) or 'a' not in alg or 'b' not in alg:
            raise ParseError("scenario needs algebra: {a: expr, b: expr}")
        self.algebra = (alg['a'], alg['b'])
        self.pures = data.get('pures')
        self.gram = data.get('gram')
        self.radicand = data.get('radicand')
        if self.construction == 'form-ladder' and not self.pures:
            raise ParseError("form-ladder needs a nonempty 'pures' list")
        if self.construction == 'custom-form' and not self.gram:
            raise ParseError("custom-form needs a nonempty 'gram' list")
        if self.construction == 'unitary-extension' and not self.radicand:
            raise ParseError("unitary-extension needs a 'radicand'")
        checks = data.get('checks')
        if not isinstance(checks, list) or not checks \
                or not all(isinstance(c, str) for c in checks):
            raise ParseError("scenario needs a nonempty 'checks' list")
        self.checks = checks
        bounds = data.get('bounds', {})
        if not isinstance(bounds, dict):
            raise ParseError("'bounds' must be an object")
        self.precision = bounds.get('precision', 4)
        self.height = bounds.get('height', 2)
        self.trials = bounds.get('trials', 20)
        for key in ('precision', 'height', 'trials'):
            v = getattr(self, key)
            if not isinstance(v, int) or v <= 0:
                raise ParseError("bound %s must be a positive integer" % key)
        self.seed = data.get('seed')
        if self.seed is None:
            raise ParseError("scenario needs an integer seed")
        if not isinstance(self.seed, int):
            raise ParseError("seed must be an integer")


def scenario_from_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError("cannot read scenario file: %s" % exc)
    except ValueError as exc:
        raise ParseError("scenario file is not valid JSON: %s" % exc)
    return Scenario(data)


# ----------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------

def to_jsonable(x):
    """Reports hold exact objects; turn them into strings/ints/bools.
    Anything with to_str serializes through it."""
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if hasattr(x, 'to_str'):
        return x.to_str()
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    return repr(x)


def dump_report(report, path):
    text = json.dumps(to_jsonable(report), indent=2, sort_keys=True)
    with open(path, 'w') as fh:
        fh.write(text + "\n")
    return path
