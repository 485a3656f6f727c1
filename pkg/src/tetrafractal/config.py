"""Default parameters and parameter-file loading."""

import copy
import json
from functools import lru_cache
from importlib import resources

import jsonschema
import yaml

from .errors import DomainError


@lru_cache(maxsize=None)
def _load_defaults():
    text = resources.files(__package__).joinpath("data/defaults.yaml").read_text()
    return yaml.safe_load(text)


def defaults(section=None):
    """Return a fresh copy of the shipped defaults (optionally one section)."""
    data = copy.deepcopy(_load_defaults())
    return data if section is None else data[section]


@lru_cache(maxsize=None)
def load_schema(name):
    text = resources.files(__package__).joinpath(f"schemas/{name}.schema.json").read_text()
    return json.loads(text)


def validate(instance, schema_name):
    """Validate ``instance`` against a shipped schema, raising DomainError."""
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for err in errors[:5]:
            field = "/".join(str(p) for p in err.absolute_path) or "<root>"
            msgs.append(f"field '{field}': {err.message}")
        if len(errors) > 5:
            msgs.append(f"... {len(errors) - 5} more")
        raise DomainError(f"{schema_name} validation failed: " + "; ".join(msgs))


def read_json(path, schema_name=None):
    """Read a JSON file with line/column diagnostics on malformed input."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise DomainError(f"{path}: {exc.strerror}") from exc
    if schema_name is not None:
        validate(data, schema_name)
    return data
