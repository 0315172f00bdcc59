"""Model files, series files and deterministic CSV/JSON output.

Model files are TOML::

    name = "trig"
    dimension = 1
    omega = 1.0
    phi = "exp(cos(x))"        # whitelist grammar; omit (or omega = 0) for the free model

    [measure]                  # optional: atoms [xi, Re w, Im w]
    atoms = [[1.0, 0.5, 0.0], [-1.0, 0.5, 0.0]]

    [regularity]               # optional, needs [measure]
    a = 1.0
    R = 0.0
    kappa = 1.0

    [domain]                   # optional half-width of the domain box
    L = 12.0

Every output starts with the tool version and a SHA-256 digest of the
configuration (command parameters plus the bytes of the input files), so
identical runs give byte-identical files.
"""

import csv
import hashlib
import importlib.resources
import io as _io
import json
import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .exceptions import InputError
from .model import (SymmetricMeasure, build_free_model, build_ou_shifted_model,
                    regularity_certificate)

BUILTIN_MODELS = ("free", "ou", "mehler", "trig", "cosh")
JSON_SCHEMA = "borelheat.{kind}/1"


def _builtin_path(name):
    return importlib.resources.files("borelheat") / "data" / f"{name}.toml"


def read_model_bytes(source):
    """Raw bytes of a model file or of a bundled model (``free``, ``ou``, ...)."""
    if source in BUILTIN_MODELS:
        return _builtin_path(source).read_bytes()
    path = Path(source)
    if not path.is_file():
        raise InputError(f"model file {source!r} not found (built-ins: {', '.join(BUILTIN_MODELS)})")
    return path.read_bytes()


def parse_model(data, name=None):
    """Build a :class:`ModelSpec` from TOML text or bytes."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = tomllib.loads(data)
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"malformed model file: {exc}") from None
    known = {"name", "dimension", "omega", "phi", "measure", "regularity", "domain"}
    unknown = set(doc) - known
    if unknown:
        raise InputError(f"unknown model keys: {', '.join(sorted(unknown))}")
    d = doc.get("dimension", 1)
    if not isinstance(d, int) or d < 1:
        raise InputError("dimension must be a positive integer")
    omega = doc.get("omega", 0.0)
    if not isinstance(omega, (int, float)) or omega < 0:
        raise InputError("omega must be a nonnegative number")
    name = doc.get("name", name)
    L = doc.get("domain", {}).get("L")
    if L is not None and (not isinstance(L, (int, float)) or L <= 0):
        raise InputError("domain.L must be a positive number")

    mu = None
    if "measure" in doc:
        atoms = doc["measure"].get("atoms")
        if not isinstance(atoms, list) or not atoms:
            raise InputError("measure.atoms must be a non-empty list of [xi..., Re w, Im w]")
        parsed = []
        for atom in atoms:
            if not isinstance(atom, list) or len(atom) != d + 2:
                raise InputError(f"measure atom {atom!r} must have {d} location(s), Re w and Im w")
            loc = tuple(float(v) for v in atom[:d])
            parsed.append((loc if d > 1 else loc[0], complex(atom[d], atom[d + 1])))
        mu = SymmetricMeasure(tuple(parsed), dimension=d)

    cert = None
    if "regularity" in doc:
        if mu is None:
            raise InputError("[regularity] needs a [measure] section")
        reg = doc["regularity"]
        try:
            cert = regularity_certificate(mu, reg["a"], reg.get("R", 0.0), reg["kappa"])
        except KeyError as exc:
            raise InputError(f"regularity section is missing {exc}") from None

    if omega == 0 or "phi" not in doc:
        if omega != 0:
            raise InputError("phi is required when omega > 0")
        return build_free_model(d, L if L is not None else 10.0)
    phi = doc["phi"]
    if not isinstance(phi, str):
        raise InputError("phi must be an expression string")
    model = build_ou_shifted_model(phi, float(omega), d, mu, L=L, certificate=cert, name=name)
    return model


def load_model(source):
    """Model from a path or bundled name; returns ``(model, raw_bytes)``."""
    raw = read_model_bytes(source)
    stem = source if source in BUILTIN_MODELS else Path(source).stem
    return parse_model(raw, name=stem), raw


def read_series(path):
    """Coefficients from a text file of ``index value`` lines.

    Blank lines and ``#`` comments are skipped; missing indices are zero.
    Returns ``(coeffs, raw_bytes)``.
    """
    p = Path(path)
    if not p.is_file():
        raise InputError(f"series file {path!r} not found")
    raw = p.read_bytes()
    entries = {}
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected 'index value'")
        try:
            idx, val = int(parts[0]), float(parts[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if idx < 0 or idx in entries:
            raise InputError(f"{path}:{lineno}: index {idx} negative or repeated")
        if not math.isfinite(val):
            raise InputError(f"{path}:{lineno}: value is not finite")
        entries[idx] = val
    if not entries:
        raise InputError(f"series file {path!r} has no coefficients")
    coeffs = [0.0] * (max(entries) + 1)
    for idx, val in entries.items():
        coeffs[idx] = val
    return coeffs, raw


def write_series(path, coeffs):
    lines = [f"{r} {float(v)!r}" for r, v in enumerate(coeffs)]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
def config_digest(params, inputs=()):
    """SHA-256 over the canonical JSON of ``params`` and the input bytes."""
    h = hashlib.sha256()
    h.update(json.dumps(params, sort_keys=True, default=str).encode())
    for blob in inputs:
        h.update(hashlib.sha256(blob).digest())
    return h.hexdigest()


def _clean(value):
    # JSON has no inf/nan; complex numbers become [re, im]
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, complex):
        return [_clean(value.real), _clean(value.imag)]
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if hasattr(value, "item"):
        return _clean(value.item())
    return value


def render_json(kind, payload, digest):
    doc = {"schema": JSON_SCHEMA.format(kind=kind), "version": __version__,
           "config_digest": digest, **payload}
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def render_csv(columns, rows, digest, header_notes=()):
    buf = _io.StringIO()
    buf.write(f"# borelheat {__version__}\n")
    buf.write(f"# config_digest {digest}\n")
    for note in header_notes:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit(text, out=None):
    """Write ``text`` to ``out`` (a path) or return it for stdout."""
    if out is None or out == "-":
        return text
    Path(out).write_text(text)
    return None
