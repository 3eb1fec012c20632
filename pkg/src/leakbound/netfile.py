"""Network and PMF file handling (JSON, exact probabilities).

A network file looks like:

    {
      "format_version": 1,
      "source": "X",
      "nodes": [
        {"id": "X", "alphabet": 2, "parents": []},
        {"id": "Y", "alphabet": ["0", "1"], "parents": ["X"],
         "cpt": [["3/4", "1/4"], ["1/4", "3/4"]]}
      ]
    }

Probabilities are exact strings: "num/den" or decimal literals ("0.25"
parses to exactly 1/4). An integer alphabet n expands to "0".."n-1".
``write_network`` emits a canonical form (alphabets as explicit string
lists, probabilities via Fraction's shortest representation), and
parse-then-write is a fixed point on canonical files.

Sweep templates may additionally use arithmetic expressions over declared
parameters ("1 - d", "d/3"); these are evaluated exactly with
``eval_rational_expression`` before parsing.
"""

from __future__ import annotations

import ast
import json
from fractions import Fraction
from typing import Mapping

from .bayesnet import BayesNet, NodeSpec
from .errors import NetworkFormatError
from .measures import Pmf
from .simultaneous import JointPmf

FORMAT_VERSION = 1


def parse_probability(text) -> Fraction:
    """Exact parse of "3/4", "0.25", 1, etc.; floats are refused."""
    if isinstance(text, bool):
        raise NetworkFormatError(f"bad probability {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise NetworkFormatError(
            f"float probability {text!r}: quote it as a string to keep it exact"
        )
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as err:
        raise NetworkFormatError(f"bad probability {text!r}: {err}") from None


def eval_rational_expression(text: str, bindings: Mapping[str, Fraction]) -> Fraction:
    """Evaluate +, -, *, / over integers and bound parameter names, exactly."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.BinOp):
            ops = {
                ast.Add: lambda a, b: a + b,
                ast.Sub: lambda a, b: a - b,
                ast.Mult: lambda a, b: a * b,
                ast.Div: lambda a, b: a / b,
            }
            fn = ops.get(type(node.op))
            if fn is None:
                raise NetworkFormatError(f"operator not allowed in {text!r}")
            return fn(walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -walk(node.operand)
            if isinstance(node.op, ast.UAdd):
                return walk(node.operand)
            raise NetworkFormatError(f"operator not allowed in {text!r}")
        if isinstance(node, ast.Constant):
            if isinstance(node.value, int) and not isinstance(node.value, bool):
                return Fraction(node.value)
            raise NetworkFormatError(
                f"literal {node.value!r} in {text!r} is not an integer; "
                "write fractions as a/b"
            )
        if isinstance(node, ast.Name):
            if node.id in bindings:
                return bindings[node.id]
            raise NetworkFormatError(f"unknown parameter {node.id!r} in {text!r}")
        raise NetworkFormatError(f"unsupported syntax in {text!r}")

    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as err:
        raise NetworkFormatError(f"bad expression {text!r}: {err}") from None
    try:
        return walk(tree)
    except ZeroDivisionError:
        raise NetworkFormatError(f"division by zero in {text!r}") from None


def _parse_entry(value, bindings: Mapping[str, Fraction] | None) -> Fraction:
    if bindings is not None and isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            return eval_rational_expression(value, bindings)
    return parse_probability(value)


def parse_network(
    text: str, bindings: Mapping[str, Fraction] | None = None
) -> BayesNet:
    """Parse a network document; malformed structure raises
    ``NetworkFormatError`` while probabilistic defects (bad row sums,
    arity mismatches) are left for ``bayesnet.validate`` to report."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise NetworkFormatError(f"not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level must be an object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise NetworkFormatError(f"unsupported format_version {version!r}")
    if "nodes" not in doc or "source" not in doc:
        raise NetworkFormatError('missing "nodes" or "source"')

    nodes = []
    for raw in doc["nodes"]:
        if not isinstance(raw, dict) or "id" not in raw or "alphabet" not in raw:
            raise NetworkFormatError(f"bad node entry {raw!r}")
        alphabet = raw["alphabet"]
        if isinstance(alphabet, int):
            if alphabet < 1:
                raise NetworkFormatError(f"node {raw['id']}: empty alphabet")
            alphabet = [str(i) for i in range(alphabet)]
        elif isinstance(alphabet, list):
            alphabet = [str(a) for a in alphabet]
        else:
            raise NetworkFormatError(f"node {raw['id']}: bad alphabet")
        rows = None
        if "cpt" in raw and raw["cpt"] is not None:
            if not isinstance(raw["cpt"], list):
                raise NetworkFormatError(f"node {raw['id']}: cpt must be a list")
            rows = [
                [_parse_entry(v, bindings) for v in row] for row in raw["cpt"]
            ]
        nodes.append(
            NodeSpec.make(raw["id"], alphabet, raw.get("parents", []), rows)
        )
    try:
        return BayesNet(nodes, str(doc["source"]))
    except Exception as err:
        raise NetworkFormatError(str(err)) from None


def network_document(net: BayesNet) -> dict:
    nodes = []
    for node in net.nodes:
        entry: dict = {
            "id": node.node_id,
            "alphabet": list(node.alphabet),
            "parents": list(node.parents),
        }
        if node.rows is not None:
            entry["cpt"] = [[str(v) for v in row] for row in node.rows]
        nodes.append(entry)
    return {"format_version": FORMAT_VERSION, "source": net.source, "nodes": nodes}


def write_network(net: BayesNet) -> str:
    """Canonical textual form; parse(write(net)) round-trips exactly."""
    return json.dumps(network_document(net), indent=2) + "\n"


def parse_pmf_file(text: str):
    """PMF collections for the coupling commands.

    Either {"alphabet": [...], "pmfs": [[...], ...]} (a list of Pmf) or
    {"x_alphabet": [...], "y_alphabet": [...], "joints": [matrix, ...]}
    (a list of JointPmf, matrices indexed [x][y]).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise NetworkFormatError(f"not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level must be an object")

    if "pmfs" in doc:
        if "alphabet" not in doc:
            raise NetworkFormatError('missing "alphabet"')
        alphabet = [str(a) for a in doc["alphabet"]]
        out = []
        for row in doc["pmfs"]:
            values = [parse_probability(v) for v in row]
            try:
                out.append(Pmf.from_values(values, alphabet))
            except Exception as err:
                raise NetworkFormatError(str(err)) from None
        return out

    if "joints" in doc:
        for key in ("x_alphabet", "y_alphabet"):
            if key not in doc:
                raise NetworkFormatError(f'missing "{key}"')
        xs = [str(a) for a in doc["x_alphabet"]]
        ys = [str(a) for a in doc["y_alphabet"]]
        out = []
        for matrix in doc["joints"]:
            if len(matrix) != len(xs):
                raise NetworkFormatError("joint matrix has wrong row count")
            mass = {}
            for x, row in zip(xs, matrix):
                if len(row) != len(ys):
                    raise NetworkFormatError("joint matrix has wrong column count")
                for y, v in zip(ys, row):
                    mass[(x, y)] = parse_probability(v)
            try:
                out.append(JointPmf(xs, ys, mass))
            except Exception as err:
                raise NetworkFormatError(str(err)) from None
        return out

    raise NetworkFormatError('expected a "pmfs" or "joints" document')


def parse_range(text: str) -> list[Fraction]:
    """"start:stop:step" as inclusive exact values, e.g. "0:1/2:1/8"."""
    parts = text.split(":")
    if len(parts) != 3:
        raise NetworkFormatError(f"range {text!r} is not start:stop:step")
    try:
        start, stop, step = (Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError) as err:
        raise NetworkFormatError(f"bad range {text!r}: {err}") from None
    if step <= 0:
        raise NetworkFormatError("range step must be positive")
    values = []
    current = start
    while current <= stop:
        values.append(current)
        current += step
    if not values:
        raise NetworkFormatError(f"range {text!r} is empty")
    return values
