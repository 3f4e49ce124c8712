"""Frame ingestion, plain-text configuration and CSV emission.

Formats
-------
* a directory of binary PGM files ``frame_%06d.pgm`` (P5, maxval 255);
* a single ``.raw`` dump: ``width`` and ``height`` as little-endian u32,
  then ``T`` frames of ``width * height`` unsigned bytes;
* ``key = value`` configuration files with ``#`` comments;
* a response CSV with fixed header and 9 significant digits.
"""
from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .core import FrameSequence
from .errors import ConfigError, FormatError, InvalidInput, IoError
from .pipeline import DpcParams, EnhanceParams, MdeParams, OmjParams, ResponseRecord, UnitGrid
from .stimuli import StimulusSpec

FRAME_RE = re.compile(r"^frame_(\d{6})\.pgm$")
CSV_HEADER = "t,response_opplod,response_dlgmd,roi_x,roi_y,roi_w,roi_h,warm_up"
MODELS = ("opplod", "dlgmd", "both")


# --- frames -----------------------------------------------------------------

def _pgm_token(buf: bytes, pos: int):
    """Next whitespace-delimited header token, skipping ``#`` comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header", start)
    return buf[start:pos], start, pos


def parse_pgm(buf: bytes) -> np.ndarray:
    """Decode one P5 image to a ``uint8`` array of shape ``(h, w)``."""
    magic, off, pos = _pgm_token(buf, 0)
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (magic {magic!r})", off)
    vals = []
    for name in ("width", "height", "maxval"):
        tok, off, pos = _pgm_token(buf, pos)
        if not tok.isdigit():
            raise FormatError(f"bad PGM {name} {tok!r}", off)
        vals.append((int(tok), off))
    (w, w_off), (h, h_off), (maxval, m_off) = vals
    if w == 0 or h == 0:
        raise FormatError(f"zero-area PGM {w}x{h}", w_off if w == 0 else h_off)
    if maxval != 255:
        raise FormatError(f"PGM maxval must be 255, got {maxval}", m_off)
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after PGM header", pos)
    pos += 1
    need = w * h
    if len(buf) - pos < need:
        raise FormatError(f"PGM payload short: need {need} bytes, have {len(buf) - pos}", len(buf))
    return np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos).reshape(h, w)


def encode_pgm(img: np.ndarray) -> bytes:
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def parse_raw(buf: bytes) -> np.ndarray:
    """Decode a raw dump to ``uint8`` frames of shape ``(T, h, w)``."""
    if len(buf) < 8:
        raise FormatError("raw header needs 8 bytes", len(buf))
    w, h = struct.unpack_from("<II", buf, 0)
    if w == 0 or h == 0:
        raise FormatError(f"zero-area raw frames {w}x{h}", 0 if w == 0 else 4)
    size = w * h
    body = len(buf) - 8
    if body == 0:
        raise FormatError("raw file holds no frames", 8)
    if body % size:
        # offset of the truncated frame's first byte
        raise FormatError(f"short raw frame: {body % size} of {size} bytes", 8 + (body // size) * size)
    return np.frombuffer(buf, dtype=np.uint8, offset=8).reshape(body // size, h, w)


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from exc


def frame_files(directory) -> List[Path]:
    d = Path(directory)
    found = []
    for p in d.iterdir():
        m = FRAME_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    found.sort()
    return [p for _, p in found]


def load_sequence(path) -> FrameSequence:
    """Load a PGM directory or a ``.raw`` dump, scaled to [0, 1]."""
    p = Path(path)
    if p.is_dir():
        files = frame_files(p)
        if not files:
            raise InvalidInput(f"no frame_NNNNNN.pgm files in {p}")
        imgs = []
        for f in files:
            try:
                imgs.append(parse_pgm(_read_bytes(f)))
            except FormatError as exc:
                raise FormatError(f"{f.name}: {exc.args[0]}") from exc
        shapes = {im.shape for im in imgs}
        if len(shapes) != 1:
            raise InvalidInput(f"mixed frame dimensions in {p}: {sorted(shapes)}")
        raw = np.stack(imgs)
    elif p.is_file() and p.suffix == ".raw":
        raw = parse_raw(_read_bytes(p))
    elif p.exists():
        raise InvalidInput(f"{p} is neither a frame directory nor a .raw file")
    else:
        raise InvalidInput(f"input path does not exist: {p}")
    return FrameSequence(raw.astype(np.float64) / 255.0)


def quantize(data: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_sequence(seq: FrameSequence, path) -> None:
    """Write ``seq`` as a PGM directory, or a raw dump if ``path`` ends in ``.raw``."""
    p = Path(path)
    q = quantize(seq.data)
    try:
        if p.suffix == ".raw":
            t, h, w = q.shape
            p.write_bytes(struct.pack("<II", w, h) + q.tobytes())
            return
        p.mkdir(parents=True, exist_ok=True)
        for t, img in enumerate(q):
            (p / f"frame_{t:06d}.pgm").write_bytes(encode_pgm(img))
    except OSError as exc:
        raise IoError(f"cannot write {p}: {exc.strerror}") from exc


# --- CSV --------------------------------------------------------------------

def fmt_num(x: float) -> str:
    return np.format_float_positional(float(x), precision=9, unique=False, fractional=False, trim="-")


def csv_rows(records: Sequence[ResponseRecord], normalize: bool = False) -> List[str]:
    """Merge per-model records into one row per frame."""
    if not records:
        raise InvalidInput("no records to write")
    rows: Dict[int, dict] = {}
    for r in records:
        if r.model not in ("opplod", "dlgmd"):
            raise InvalidInput(f"unknown record model {r.model!r}")
        row = rows.setdefault(r.t, {"warm_up": False})
        row[r.model] = r.response
        row["warm_up"] = row["warm_up"] or r.warm_up
        if r.roi is not None:
            row["roi"] = r.roi
    scale = {"opplod": 1.0, "dlgmd": 1.0}
    if normalize:
        for m in scale:
            peak = max((row.get(m, 0.0) for row in rows.values()), default=0.0)
            if peak > 0:
                scale[m] = peak
    lines = [CSV_HEADER]
    for t in sorted(rows):
        row = rows[t]
        cells = [str(t)]
        for m in ("opplod", "dlgmd"):
            cells.append(fmt_num(row[m] / scale[m]) if m in row else "")
        roi = row.get("roi")
        cells.extend(str(v) for v in roi) if roi else cells.extend([""] * 4)
        cells.append("1" if row["warm_up"] else "0")
        lines.append(",".join(cells))
    return lines


def write_text(path, lines: Iterable[str]) -> None:
    try:
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror}") from exc


def save_csv(records: Sequence[ResponseRecord], path, normalize: bool = False) -> None:
    write_text(path, csv_rows(records, normalize))


def load_csv(path) -> List[dict]:
    """Parse a response CSV back to dicts; empty cells become ``None``."""
    text = _read_bytes(Path(path)).decode("ascii")
    lines = text.split("\n")
    if lines[0] != CSV_HEADER:
        raise FormatError(f"unexpected CSV header {lines[0]!r}", 0)
    keys = CSV_HEADER.split(",")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        row = {}
        for k, v in zip(keys, cells):
            if v == "":
                row[k] = None
            elif k.startswith("response"):
                row[k] = float(v)
            elif k == "warm_up":
                row[k] = v == "1"
            else:
                row[k] = int(v)
        out.append(row)
    return out


# --- configuration ------------------------------------------------------------

def parse_config(text: str, source: str = "<config>") -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; duplicate keys are rejected."""
    out: Dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{n}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config(path) -> Dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise InvalidInput(f"config file not found: {p}")
    try:
        text = _read_bytes(p).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{p} is not UTF-8 text", exc.start) from exc
    return parse_config(text, str(p))


def _parse_value(key, text, like):
    try:
        if isinstance(like, bool):
            if text.lower() not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return text.lower() in ("true", "1")
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            v = float(text)
            if not math.isfinite(v):
                raise ValueError(text)
            return v
        if isinstance(like, tuple):
            return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


_SECTIONS = (("dpc", DpcParams), ("mde", MdeParams), ("omj", OmjParams), ("enh", EnhanceParams))


@dataclass
class RunConfig:
    dpc: DpcParams = field(default_factory=DpcParams)
    mde: MdeParams = field(default_factory=MdeParams)
    omj: OmjParams = field(default_factory=OmjParams)
    enh: EnhanceParams = field(default_factory=EnhanceParams)
    grid_rows: int = 5
    grid_cols: int = 5
    grid_overlap: float = 0.0
    input: Optional[str] = None
    model: str = "both"
    output: Optional[str] = None

    _PLAIN = ("grid_rows", "grid_cols", "grid_overlap", "input", "model", "output")

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")

    def grid(self, height: int, width: int) -> UnitGrid:
        return UnitGrid.for_frame(height, width, self.grid_rows, self.grid_cols, self.grid_overlap)

    @classmethod
    def keys(cls):
        ks = [f.name for _, sec in _SECTIONS for f in fields(sec)]
        return ks + list(cls._PLAIN)

    @classmethod
    def from_mapping(cls, kv: Dict[str, str]) -> "RunConfig":
        unknown = sorted(set(kv) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        parts = {}
        for attr, sec in _SECTIONS:
            base = sec()
            vals = {f.name: _parse_value(f.name, kv[f.name], getattr(base, f.name))
                    for f in fields(sec) if f.name in kv}
            parts[attr] = replace(base, **vals)  # re-runs the type's own checks
        base = cls()
        for k in cls._PLAIN:
            if k in kv:
                like = getattr(base, k)
                parts[k] = _parse_value(k, kv[k], like) if like is not None else kv[k]
        return cls(**parts)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_mapping(read_config(path))

    def to_text(self) -> str:
        lines = []
        for attr, sec in _SECTIONS:
            obj = getattr(self, attr)
            lines.extend(f"{f.name} = {_format_value(getattr(obj, f.name))}" for f in fields(sec))
        for k in self._PLAIN:
            v = getattr(self, k)
            if v is not None:
                lines.append(f"{k} = {_format_value(v)}")
        return "\n".join(lines) + "\n"


def stimulus_from_mapping(kv: Dict[str, str]) -> StimulusSpec:
    names = {f.name for f in fields(StimulusSpec)}
    unknown = sorted(set(kv) - names)
    if unknown:
        raise ConfigError(f"unknown stimulus keys: {', '.join(unknown)}")
    base = StimulusSpec()
    vals = {}
    for k, text in kv.items():
        if k == "center":
            if text.lower() in ("", "none"):
                vals[k] = None
                continue
            xy = _parse_value(k, text, ())
            if len(xy) != 2:
                raise ConfigError(f"center needs 'x, y', got {text!r}")
            vals[k] = xy
        else:
            vals[k] = _parse_value(k, text, getattr(base, k))
    return StimulusSpec(**vals)


def load_stimulus(path) -> StimulusSpec:
    return stimulus_from_mapping(read_config(path))


def stimulus_to_text(spec: StimulusSpec) -> str:
    lines = []
    for f in fields(StimulusSpec):
        v = getattr(spec, f.name)
        lines.append(f"{f.name} = {'none' if v is None else _format_value(v)}")
    return "\n".join(lines) + "\n"


def load_pairs(path) -> np.ndarray:
    """Rows ``x1 y1 theta1 mag1 x2 y2 theta2 mag2`` with angles in degrees.

    Separators may be commas or whitespace; ``#`` starts a comment.
    Returns the rows with angles converted to radians.
    """
    p = Path(path)
    if not p.is_file():
        raise InvalidInput(f"pairs file not found: {p}")
    rows = []
    text = _read_bytes(p).decode("utf-8", errors="replace")
    offset = 0
    for n, raw in enumerate(text.splitlines(keepends=True), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            parts = line.replace(",", " ").split()
            try:
                vals = [float(s) for s in parts]
            except ValueError:
                raise FormatError(f"{p}:{n}: non-numeric field", offset) from None
            if len(vals) != 8 or not all(math.isfinite(v) for v in vals):
                raise FormatError(f"{p}:{n}: expected 8 finite fields, got {len(vals)}", offset)
            rows.append(vals)
        offset += len(raw.encode("utf-8"))
    if not rows:
        raise InvalidInput(f"no pairs in {p}")
    arr = np.array(rows)
    arr[:, [2, 6]] = np.deg2rad(arr[:, [2, 6]])
    return arr
