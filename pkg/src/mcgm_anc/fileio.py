"""On-disk formats: 16-bit mono PCM WAV, CSV tables, impulse-response CSV,
and flat ``key=value`` text artifacts."""

from __future__ import annotations

import csv
import io
import logging
import os
import struct
import wave
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .signals import IR_LABELS, ImpulseResponse, Signal

log = logging.getLogger(__name__)

PCM16_SCALE = 32768.0


def fmt_real(value: float) -> str:
    """17 significant digits: round-trips any float64."""
    return format(float(value), ".17g")


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------


def read_wav(path) -> Signal:
    """Read a RIFF/WAVE PCM 16-bit mono file into samples in [-1, 1)."""
    try:
        with wave.open(os.fspath(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            nframes = wf.getnframes()
            if channels != 1:
                raise FormatError(f"{path}: expected mono, found {channels} channels", "num_channels")
            if width != 2:
                raise FormatError(f"{path}: expected 16-bit samples, found {8 * width}-bit",
                                  "bits_per_sample")
            raw = wf.readframes(nframes)
    except wave.Error as exc:
        msg = str(exc)
        field = "audio_format" if "format" in msg else "riff_header"
        raise FormatError(f"{path}: {msg}", field) from exc
    except EOFError as exc:
        raise FormatError(f"{path}: truncated header", "riff_header") from exc
    if len(raw) != 2 * nframes:
        raise FormatError(
            f"{path}: data chunk declares {nframes} frames but holds {len(raw) // 2}", "data"
        )
    if rate <= 0:
        raise FormatError(f"{path}: invalid sample rate {rate}", "sample_rate")
    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    return Signal(pcm / PCM16_SCALE, float(rate))


def quantize_pcm16(samples: np.ndarray) -> tuple[np.ndarray, int]:
    """Round half away from zero onto the int16 grid; returns (pcm, clipped count)."""
    x = np.asarray(samples, dtype=np.float64)
    clipped = int(np.count_nonzero((x > 1.0) | (x < -1.0)))
    x = np.clip(x, -1.0, 1.0)
    scaled = x * PCM16_SCALE
    q = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    q = np.clip(q, -32768, 32767)
    return q.astype("<i2"), clipped


def _info_chunk(comment: str) -> bytes:
    text = comment.encode("ascii", "replace") + b"\x00"
    if len(text) % 2:
        text += b"\x00"
    icmt = b"ICMT" + struct.pack("<I", len(text)) + text
    body = b"INFO" + icmt
    return b"LIST" + struct.pack("<I", len(body)) + body


def write_wav(signal: Signal, path, comment: Optional[str] = None) -> None:
    """Write 16-bit mono PCM. Samples outside [-1, 1] are hard-clipped.

    ``comment`` goes into a trailing LIST/INFO ``ICMT`` chunk.
    """
    pcm, clipped = quantize_pcm16(signal.samples)
    if clipped:
        log.warning("write_wav %s: clipped %d samples outside [-1, 1]", path, clipped)
    rate = int(round(signal.sample_rate_hz))
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(pcm.tobytes())
    data = buf.getvalue()
    if comment:
        data = data + _info_chunk(comment)
        data = data[:4] + struct.pack("<I", len(data) - 8) + data[8:]
    with open(path, "wb") as fh:
        fh.write(data)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _comment_lines(comments: Optional[Mapping[str, object]]) -> str:
    if not comments:
        return ""
    return "".join(f"# {k}={v}\n" for k, v in comments.items())


def emit_csv(table: Mapping[str, Sequence[float]], path,
             comments: Optional[Mapping[str, object]] = None) -> None:
    """Write equal-length named columns of reals with LF line endings.

    Optional ``comments`` are written first as ``# key=value`` lines.
    """
    names = list(table)
    columns = [np.asarray(table[n], dtype=np.float64) for n in names]
    lengths = {c.shape[0] for c in columns}
    if len(lengths) > 1:
        raise InvalidArgumentError(f"ragged columns: lengths {sorted(lengths)}")
    out = io.StringIO()
    out.write(_comment_lines(comments))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(names)
    rows = lengths.pop() if lengths else 0
    for i in range(rows):
        writer.writerow([fmt_real(c[i]) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(out.getvalue())


def emit_rows(header: Sequence[str], rows: Sequence[Sequence[object]], path,
              comments: Optional[Mapping[str, object]] = None) -> None:
    """Mixed text/real rows; floats get 17 significant digits."""
    out = io.StringIO()
    out.write(_comment_lines(comments))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_real(v) if isinstance(v, (float, np.floating)) else v for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(out.getvalue())


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a numeric table written by :func:`emit_csv` (comment lines skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        names = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: missing header row", "header") from None
    cols: list[list[float]] = [[] for _ in names]
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(names):
            raise FormatError(f"{path}: row {lineno} has {len(row)} fields", "row")
        for c, v in zip(cols, row):
            c.append(float(v))
    return {n: np.array(c) for n, c in zip(names, cols)}


# ---------------------------------------------------------------------------
# Impulse responses: two header lines (label, length) then one tap per line.
# ---------------------------------------------------------------------------


def write_impulse_response(h: ImpulseResponse, path) -> None:
    lines = [f"label,{h.label}", f"length,{len(h)}"]
    lines += [fmt_real(v) for v in h.taps]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_impulse_response(path) -> ImpulseResponse:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise FormatError(f"{path}: missing label/length header", "header")
    key, _, label = lines[0].partition(",")
    if key != "label" or label not in IR_LABELS:
        raise FormatError(f"{path}: bad label line {lines[0]!r}", "label")
    key, _, length = lines[1].partition(",")
    if key != "length" or not length.isdigit():
        raise FormatError(f"{path}: bad length line {lines[1]!r}", "length")
    taps = [float(v) for v in lines[2:]]
    if len(taps) != int(length):
        raise FormatError(f"{path}: header says {length} taps, found {len(taps)}", "length")
    return ImpulseResponse(np.array(taps), label)


# ---------------------------------------------------------------------------
# key=value text
# ---------------------------------------------------------------------------


def parse_key_values(text: str, source: str = "<text>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; duplicates are errors."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise FormatError(f"{source}:{lineno}: expected key=value, got {raw!r}", "line")
        if key in out:
            raise FormatError(f"{source}:{lineno}: duplicate key {key!r}", key)
        out[key] = value
    return out


def read_key_values(path) -> dict[str, str]:
    with open(path) as fh:
        return parse_key_values(fh.read(), os.fspath(path))


def write_key_values(values: Mapping[str, object], path) -> None:
    lines = []
    for k, v in values.items():
        lines.append(f"{k}={fmt_real(v) if isinstance(v, (float, np.floating)) else v}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
