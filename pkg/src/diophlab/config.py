"""INI-style run configuration.

Sections are ``[problem]``, ``[sets]``, ``[psi]``, ``[scan]`` and
``[output]``; keys are lowercase, values are single lines, ``#`` and ``;``
start comment lines.  Parsing is strict: unknown sections, unknown keys and
duplicate keys are errors.  The full grammar with one worked example per
subcommand lives in ``docs/config.md``.
"""
from __future__ import annotations

import configparser
import hashlib
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Mat, make_approx_function, parse_psi, to_fraction
from .errors import DiophlabError, ParseError, ValidationError
from .sets import parse_generator

COMMANDS = (
    "check-uniform", "check-uniform-inhom", "dirichlet-margin", "build-witness",
    "density-scan", "total-density-probe", "logdense-test", "caratheodory",
    "ch-condition", "empty-box", "counterexample", "jacobian-probe", "project",
)

KEYS = {
    "problem": ("command", "m", "n", "k", "seed", "matrix", "b"),
    "sets": ("p", "q", "directions", "theta1", "theta2", "normal"),
    "psi": ("spec", "kind", "c", "exponent", "breakpoints"),
    "scan": ("window", "box", "region", "h", "bound", "anchor_p", "anchor_q", "min_cells",
             "eps", "phi", "c_min", "c_max", "grid_ratio", "avoid", "restrict", "mode",
             "gap", "audit_bound", "shrink", "trials", "step"),
    "output": ("dir", "format", "prefix"),
}

# keys each command needs (beyond m and n)
REQUIRED = {
    "check-uniform": (("problem", "matrix"), ("sets", "p"), ("sets", "q"), ("psi", None), ("scan", "window")),
    "check-uniform-inhom": (("problem", "matrix"), ("problem", "b"), ("sets", "p"), ("sets", "q"),
                            ("psi", None), ("scan", "window")),
    "dirichlet-margin": (("problem", "matrix"), ("sets", "p"), ("sets", "q"), ("scan", "window")),
    "build-witness": (("sets", "p"), ("sets", "q"), ("psi", None), ("scan", "window")),
    "density-scan": (("sets", "p"), ("sets", "q"), ("scan", "box"), ("scan", "h"), ("scan", "bound")),
    "total-density-probe": (("sets", "p"), ("sets", "q"), ("scan", "box"), ("scan", "h"),
                            ("scan", "bound"), ("scan", "anchor_p"), ("scan", "anchor_q")),
    "logdense-test": (("sets", "p"), ("scan", "phi"), ("scan", "eps"), ("scan", "c_min"), ("scan", "c_max")),
    "caratheodory": (("sets", "directions"),),
    "ch-condition": (("sets", "theta1"), ("sets", "theta2")),
    "empty-box": (("sets", "directions"), ("sets", "normal")),
    "counterexample": (("sets", "p"), ("scan", "gap")),
    "jacobian-probe": (("problem", "k"),),
    "project": (("scan", "anchor_p"), ("scan", "anchor_q")),
}

_KEY_RE = re.compile(r"^[a-z_][a-z0-9_]*$")


# ----------------------------------------------------------------------------
# value parsers
# ----------------------------------------------------------------------------

def parse_scalar(tok: str):
    """Integer, rational ``a/b`` or float literal."""
    tok = tok.strip()
    if re.fullmatch(r"[+-]?\d+", tok):
        return int(tok)
    if re.fullmatch(r"[+-]?\d+/\d+", tok):
        f = Fraction(tok)
        return f.numerator if f.denominator == 1 else f
    return float(tok)


def parse_vector(text: str) -> tuple:
    return tuple(parse_scalar(t) for t in re.split(r"[,\s]+", text.strip()) if t)


def parse_vectors(text: str) -> list:
    """``;``-separated vectors."""
    return [parse_vector(part) for part in text.split(";") if part.strip()]


def parse_intervals(text: str) -> list:
    """``lo:hi`` pairs separated by commas."""
    out = []
    for part in text.split(","):
        a, sep, b = part.strip().partition(":")
        if not sep:
            raise ValueError(f"interval {part.strip()!r} is not lo:hi")
        out.append((parse_scalar(a), parse_scalar(b)))
    return out


def fmt_scalar(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(x) if isinstance(x, float) else str(x)


# ----------------------------------------------------------------------------
# the config object
# ----------------------------------------------------------------------------

@dataclass
class RunConfig:
    """A validated run description; ``sections`` keeps the normalised text values."""

    command: str
    m: int
    n: int
    k: int
    seed: int
    sections: dict = field(default_factory=dict)
    base_dir: str = "."

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def has(self, section, key):
        return key in self.sections.get(section, {})

    # typed accessors
    def generator(self, key):
        return parse_generator(self.get("sets", key))

    def matrix(self) -> Mat:
        rows = parse_vectors(self.get("problem", "matrix"))
        return Mat.of(rows)

    def shift(self):
        return parse_vector(self.get("problem", "b"))

    def psi(self):
        return psi_from_section(self.sections.get("psi", {}))

    def window(self):
        a, b = parse_vector(self.get("scan", "window"))
        return a, b

    def box(self, key="box"):
        from .geometry import BoxRegion

        iv = parse_intervals(self.get("scan", key))
        if len(iv) == 1:
            iv = iv * (self.m * self.n)
        return BoxRegion.from_intervals(self.m, self.n, iv)

    def scalar(self, key, default=None):
        v = self.get("scan", key)
        return default if v is None else parse_scalar(v)

    def vector(self, section, key):
        return parse_vector(self.get(section, key))

    def directions(self, key="directions"):
        from .convex import DirectionSet

        text = self.get("sets", key)
        if text.startswith("@"):
            with open(self._path(text[1:]), encoding="utf-8") as fh:
                return DirectionSet.from_text(fh.read())
        vecs = parse_vectors(text) if text.strip() else []
        return DirectionSet.of(vecs) if vecs else DirectionSet((), "explicit")

    def _path(self, p):
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def output_dir(self):
        return self.get("output", "dir", "out")

    def formats(self):
        return [f.strip() for f in self.get("output", "format", "json").split(",") if f.strip()]

    def serialize(self) -> str:
        lines = []
        for sec in KEYS:
            vals = self.sections.get(sec)
            if not vals:
                continue
            lines.append(f"[{sec}]")
            for key in KEYS[sec]:
                if key in vals:
                    lines.append(f"{key} = {vals[key]}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        """SHA-256 of the serialised config (first 16 hex digits)."""
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.serialize() == other.serialize()


def psi_from_section(sec: dict):
    if "spec" in sec:
        if len(sec) > 1:
            raise ValidationError("[psi] takes either spec or kind/c/exponent/breakpoints")
        return parse_psi(sec["spec"])
    kind = sec.get("kind", "power")
    if kind == "power":
        return make_approx_function("power", (parse_scalar(sec.get("c", "1")),
                                              parse_scalar(sec.get("exponent", "1"))))
    if kind == "tabulated":
        pts = [tuple(parse_scalar(x) for x in pair.split(":")) for pair in sec.get("breakpoints", "").split(",")]
        return make_approx_function("tabulated", pts)
    raise ValidationError(f"unknown psi kind {kind!r}")


# ----------------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------------

def _key_lines(text):
    """``(section, key) -> line number`` for error messages."""
    where, current = {}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current and "=" in line and line[0] not in "#;":
            where.setdefault((current, line.partition("=")[0].strip().lower()), lineno)
    return where


def _raw_sections(text: str):
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=None, strict=True,
                                       empty_lines_in_values=False, interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateSectionError as e:
        raise ParseError(e.lineno, f"duplicate section [{e.section}]") from None
    except configparser.DuplicateOptionError as e:
        raise ParseError(e.lineno, f"duplicate key {e.option!r}") from None
    except configparser.MissingSectionHeaderError as e:
        raise ParseError(e.lineno, "key outside of a section") from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else 0
        raise ParseError(lineno, "expected key = value") from None
    where = _key_lines(text)
    headers = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("["):
            headers.setdefault(line.strip("[] "), lineno)
    sections = {}
    for name in parser.sections():
        if name not in KEYS:
            raise ParseError(headers.get(name, 0), f"unknown section [{name}]")
        sections[name] = {}
        for key, value in parser.items(name, raw=True):
            line = where.get((name, key.lower()), 0)
            if not _KEY_RE.match(key):
                raise ParseError(line, f"bad key {key!r} (keys are lowercase)")
            if key not in KEYS[name]:
                raise ParseError(line, f"unknown key {key!r} in [{name}]")
            value = " ".join(value.split())
            if not value:
                raise ParseError(line, f"empty value for {key!r}")
            sections[name][key] = value
    return sections, where


def parse_config(text: str, command: str | None = None, base_dir=".") -> RunConfig:
    """Parse and validate a configuration; ``command`` overrides ``[problem] command``."""
    sections, where = _raw_sections(text)
    prob = sections.get("problem", {})
    cmd = command or prob.get("command")
    if cmd is None:
        raise ValidationError("no command given")
    if cmd not in COMMANDS:
        raise ValidationError(f"unknown command {cmd!r}")
    if command is not None and prob.get("command", command) != command:
        raise ValidationError(f"config is for {prob['command']!r}, not {command!r}")

    def ival(key, default=None):
        if key not in prob:
            if default is None:
                raise ValidationError(f"[problem] {key} is required")
            return default
        try:
            v = int(prob[key])
        except ValueError:
            raise ParseError(where[("problem", key)], f"{key} must be an integer") from None
        return v

    m, n = ival("m"), ival("n")
    if m < 1 or n < 1:
        raise ValidationError("m and n must be positive")
    k, seed = ival("k", 0), ival("seed", 0)
    if not 0 <= seed < 2 ** 64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    sections.setdefault("problem", {})["command"] = cmd
    cfg = RunConfig(cmd, m, n, k, seed, sections, base_dir)
    for sec, key in REQUIRED[cmd]:
        if key is None:
            if not sections.get(sec):
                raise ValidationError(f"[{sec}] section is required for {cmd}")
        elif key not in sections.get(sec, {}):
            raise ValidationError(f"[{sec}] {key} is required for {cmd}")
    _validate(cfg, where)
    return cfg


def _validate(cfg: RunConfig, where):
    m, n = cfg.m, cfg.n

    def fail(sec, key, msg):
        raise ValidationError(f"[{sec}] {key}: {msg}")

    def guard(sec, key, fn):
        try:
            return fn()
        except (ValidationError, ParseError):
            raise
        except DiophlabError as e:
            fail(sec, key, f"{type(e).__name__}: {e}")
        except (ValueError, ZeroDivisionError, KeyError, TypeError) as e:
            raise ParseError(where.get((sec, key), 0), f"{key}: {e}") from None

    dims = {"p": m, "q": n}
    if cfg.command == "counterexample":
        dims = {"p": m}
    for key, d in dims.items():
        if cfg.has("sets", key):
            g = guard("sets", key, lambda: cfg.generator(key))
            if g.dim != d:
                fail("sets", key, f"dimension mismatch: generator has dimension {g.dim}, expected {d}")
    if cfg.has("problem", "matrix"):
        A = guard("problem", "matrix", cfg.matrix)
        if (A.rows, A.cols) != (m, n):
            fail("problem", "matrix", f"dimension mismatch: {A.rows}x{A.cols}, expected {m}x{n}")
    if cfg.has("problem", "b"):
        b = guard("problem", "b", cfg.shift)
        if len(b) != m:
            fail("problem", "b", f"dimension mismatch: length {len(b)}, expected {m}")
    if cfg.sections.get("psi"):
        guard("psi", "spec", cfg.psi)
    if cfg.has("scan", "window"):
        w = guard("scan", "window", cfg.window)
        if not 0 < w[0] < w[1]:
            fail("scan", "window", "need 0 < t0 < T")
    for key in ("box", "region"):
        if cfg.has("scan", key):
            iv = guard("scan", key, lambda: parse_intervals(cfg.get("scan", key)))
            if len(iv) not in (1, m * n):
                fail("scan", key, f"dimension mismatch: {len(iv)} intervals, expected {m * n}")
            if any(not a < b for a, b in iv):
                fail("scan", key, "each interval needs lo < hi")
    for key in ("h", "eps", "bound", "c_min", "c_max", "audit_bound", "shrink", "step"):
        if cfg.has("scan", key):
            v = guard("scan", key, lambda: parse_scalar(cfg.get("scan", key)))
            if not v > 0:
                fail("scan", key, "must be positive")
    for key in ("min_cells", "trials", "avoid"):
        if cfg.has("scan", key):
            v = guard("scan", key, lambda: parse_scalar(cfg.get("scan", key)))
            if not isinstance(v, int) or v < 0:
                fail("scan", key, "must be a nonnegative integer")
    if cfg.has("scan", "phi"):
        phi = guard("scan", "phi", lambda: cfg.vector("scan", "phi"))
        if len(phi) != m:
            fail("scan", "phi", f"dimension mismatch: length {len(phi)}, expected {m}")
    if cfg.has("scan", "anchor_p"):
        if len(guard("scan", "anchor_p", lambda: cfg.vector("scan", "anchor_p"))) != m:
            fail("scan", "anchor_p", f"dimension mismatch: expected length {m}")
    if cfg.has("scan", "anchor_q"):
        q = guard("scan", "anchor_q", lambda: cfg.vector("scan", "anchor_q"))
        if len(q) != n:
            fail("scan", "anchor_q", f"dimension mismatch: expected length {n}")
    if cfg.has("scan", "gap"):
        g = guard("scan", "gap", lambda: cfg.vector("scan", "gap"))
        if len(g) != 3:
            fail("scan", "gap", "expected B rho delta")
    if cfg.has("scan", "restrict"):
        toks = cfg.get("scan", "restrict").split()
        if not toks or toks[0] not in ("meets-axis", "meets-axis-closed") or len(toks) != 3:
            fail("scan", "restrict", "expected 'meets-axis a b' or 'meets-axis-closed a b'")
    if cfg.has("scan", "mode") and cfg.get("scan", "mode") not in ("plain", "generalized"):
        fail("scan", "mode", "expected plain or generalized")
    for key in ("directions", "theta1", "theta2"):
        if cfg.has("sets", key):
            text = cfg.get("sets", key)
            if text.startswith("@"):
                if not os.path.exists(cfg._path(text[1:])):
                    fail("sets", key, f"file {text[1:]!r} does not exist")
            else:
                S = guard("sets", key, lambda: cfg.directions(key))
                if len(S) and S.dim != n:
                    fail("sets", key, f"dimension mismatch: vectors of length {S.dim}, expected {n}")
    if cfg.has("sets", "normal"):
        if len(guard("sets", "normal", lambda: cfg.vector("sets", "normal"))) != m:
            fail("sets", "normal", f"dimension mismatch: expected length {m}")
    if cfg.command == "jacobian-probe" and not 1 <= cfg.k <= min(n - 1, m):
        fail("problem", "k", f"k={cfg.k} outside 1..min(n-1, m)")
    fmts = cfg.formats()
    if any(f not in ("json", "csv", "svg") for f in fmts):
        fail("output", "format", "formats are json, csv, svg")


def load_config(path, command=None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, command, os.path.dirname(os.path.abspath(path)))
