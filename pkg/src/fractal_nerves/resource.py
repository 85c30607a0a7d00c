import json

import attr

from .affine import AffineMap, AffineSystem
from .errors import ConfigError, InvalidSystemError
from .system import GridIFS, Tail, grid_ifs_new
from .utils import display_location, parse_fraction


@attr.s
class SystemResource:
    """
    Represents an (unparsed) JSON system descriptor (contents and optional filename)
    """

    text = attr.ib()
    filename = attr.ib(default=None)

    @classmethod
    def from_string(cls, text):
        return cls(text)

    @classmethod
    def from_file(cls, filename, encoding="utf-8"):
        with open(filename, "rb") as f:
            return cls(text=f.read().decode(encoding), filename=filename)

    def location(self):
        return self.filename if self.filename else "<string>"

    def load(self):
        """
        Parse into a GridIFS, or an AffineSystem for ``"kind": "affine"``.
        """
        try:
            data = json.loads(self.text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{display_location(self.filename, (e.lineno, e.colno))}: {e.msg}")
        try:
            if data.get("kind") == "affine":
                return _affine_from_json(data)
            return _grid_from_json(data)
        except (KeyError, TypeError, AttributeError) as e:
            raise ConfigError(f"{self.location()}: malformed system descriptor ({e!r})")
        except InvalidSystemError as e:
            raise ConfigError(f"{self.location()}: {e.args[0]}")


def _grid_from_json(data):
    tail_data = data.get("tail", {"kind": "full"})
    tail = Tail(tail_data["kind"], tail_data.get("period"))
    return grid_ifs_new(data["d"], data["n"], data["levels"], tail)


def _affine_from_json(data):
    levels = []
    for level in data["levels"]:
        levels.append({symbol: AffineMap(*(parse_fraction(x) for x in pair)) for symbol, pair in level.items()})
    return AffineSystem(levels)


def dumps(system):
    """
    JSON text for a GridIFS or AffineSystem, accepted back by SystemResource.
    """
    if not isinstance(system, (GridIFS, AffineSystem)):
        raise TypeError(f"cannot serialise {type(system).__name__}")
    return json.dumps(system.to_json(), indent=2, sort_keys=True) + "\n"
