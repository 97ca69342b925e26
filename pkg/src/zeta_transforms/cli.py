"""Command-line front end.

Global options precede the subcommand; settings are layered as defaults,
then the ``--config`` file (``key = value`` lines), then the
``ZETA_TRANSFORMS_CACHE_DIR`` environment variable, then explicit flags.
Exit codes: 0 success, 1 computation failure or failed check, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import struct
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .errors import CacheCorrupt, ZetaTransformsError

CACHE_ENV = "ZETA_TRANSFORMS_CACHE_DIR"
CACHE_MAGIC = b"ZGR1"
PRODUCER_VERSION = f"zeta_transforms {__version__}"


class UsageError(Exception):
    """Bad flags or configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-8
    t_ceiling: float = 1e5
    cache_dir: Path = Path.home() / ".cache" / "zeta_transforms"
    threads: int = 1
    spectral_path: Optional[Path] = None
    output_format: str = "json"

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if not 0 < self.t_ceiling <= 1e6:
            raise UsageError("t_ceiling must lie in (0, 1e6]")
        if self.threads < 1:
            raise UsageError("threads must be at least 1")
        if self.output_format not in ("csv", "json"):
            raise UsageError("output_format must be csv or json")


_FIELD_TYPES = {"tol": float, "t_ceiling": float, "cache_dir": Path, "threads": int,
                "spectral_path": Path, "output_format": str}


def read_config_file(path: Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _FIELD_TYPES[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def build_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    values: dict[str, Any] = {}
    if args.config is not None:
        values.update(read_config_file(args.config))
    if environ.get(CACHE_ENV):
        values["cache_dir"] = Path(environ[CACHE_ENV])
    for key in _FIELD_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _FIELD_TYPES[key](flag)
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _flatten(row: dict) -> dict:
    flat = {}
    for key, val in row.items():
        if isinstance(val, complex):
            flat[f"{key}_re"], flat[f"{key}_im"] = val.real, val.imag
        elif isinstance(val, (list, tuple)):
            flat[key] = "; ".join(str(v) for v in val)
        else:
            flat[key] = val
    return flat


def _jsonable(val):
    if isinstance(val, complex):
        return {"re": val.real, "im": val.imag}
    if isinstance(val, (np.floating, np.integer)):
        return val.item()
    if isinstance(val, (list, tuple)):
        return [_jsonable(v) for v in val]
    if isinstance(val, dict):
        return {k: _jsonable(v) for k, v in val.items()}
    return val


def write_rows(rows, fmt: str, stream: TextIO) -> None:
    """CSV (header plus one row per record) or a JSON array of records.

    A single ``dict`` is written as one JSON object (or a one-row CSV).
    """
    if fmt == "json":
        payload = _jsonable(rows) if isinstance(rows, dict) else [_jsonable(r) for r in rows]
        json.dump(payload, stream, indent=2)
        stream.write("\n")
        return
    if isinstance(rows, dict):
        rows = [rows]
    flat = [_flatten(r) for r in rows]
    fields: list[str] = []
    for r in flat:
        for key in r:
            if key not in fields:
                fields.append(key)
    writer = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in flat:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


# ---------------------------------------------------------------------------
# Sample cache
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSamples:
    """``|zeta(1/2 + it)|^(2k)`` on an arithmetic grid, tagged with the producing version."""

    k: int
    t_values: np.ndarray
    values: np.ndarray
    version: str = PRODUCER_VERSION

    def __post_init__(self) -> None:
        if self.t_values.shape != self.values.shape:
            raise ValueError("t_values and values must have equal lengths")
        if np.any(np.diff(self.t_values) <= 0):
            raise ValueError("t_values must be ascending")
        if np.any(self.values < 0):
            raise ValueError("values must be non-negative")


def grid_points(t_lo: float, t_hi: float, step: float) -> np.ndarray:
    if not t_lo < t_hi or not step > 0:
        raise UsageError("need t_lo < t_hi and step > 0")
    n = int(math.floor((t_hi - t_lo) / step * (1 + 1e-12))) + 1
    return t_lo + step * np.arange(n, dtype=float)


def cache_path(cache_dir: Path, k: int, t_lo: float, t_hi: float, step: float,
               version: str = PRODUCER_VERSION) -> Path:
    key = f"{k}|{t_lo!r}|{t_hi!r}|{step!r}|{version}".encode()
    return Path(cache_dir) / f"{hashlib.sha256(key).hexdigest()[:32]}.zgr"


def encode_grid(samples: GridSamples) -> bytes:
    ver = samples.version.encode()
    n = samples.t_values.size
    body = b"".join([CACHE_MAGIC, struct.pack("<Q", len(ver)), ver, struct.pack("<QQ", samples.k, n),
                     samples.t_values.astype("<f8").tobytes(), samples.values.astype("<f8").tobytes()])
    return body + hashlib.sha256(body).digest()


def decode_grid(raw: bytes) -> GridSamples:
    """Inverse of :func:`encode_grid`; raises ``CacheCorrupt`` on any inconsistency."""
    if len(raw) < 4 + 8 + 16 + 32 or raw[:4] != CACHE_MAGIC:
        raise CacheCorrupt("not a ZGR1 record")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CacheCorrupt("checksum mismatch")
    (vlen,) = struct.unpack_from("<Q", body, 4)
    pos = 12 + vlen
    version = body[12:pos].decode()
    k, n = struct.unpack_from("<QQ", body, pos)
    pos += 16
    if len(body) != pos + 16 * n:
        raise CacheCorrupt("length mismatch")
    t = np.frombuffer(body, dtype="<f8", count=n, offset=pos).astype(float)
    v = np.frombuffer(body, dtype="<f8", count=n, offset=pos + 8 * n).astype(float)
    return GridSamples(int(k), t, v, version)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".zgr-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def compute_samples(k: int, t: np.ndarray, threads: int) -> np.ndarray:
    """Evaluate in fixed-size chunks; chunk results are placed by index, so the
    output does not depend on the thread count."""
    from .zeta_core import zeta_pow_modulus

    chunk = 2048
    pieces = [t[i:i + chunk] for i in range(0, t.size, chunk)]
    if threads == 1 or len(pieces) == 1:
        parts = [zeta_pow_modulus(p, k) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda p: zeta_pow_modulus(p, k), pieces))
    return np.concatenate(parts) if parts else np.zeros(0)


def cache_get_or_compute(k: int, t_lo: float, t_hi: float, step: float, cfg: RunConfig,
                         version: str = PRODUCER_VERSION) -> GridSamples:
    """Exact-match cache lookup on ``(k, t_lo, t_hi, step, version)``; compute and persist on a miss.

    A corrupt record triggers a warning and recomputation.
    """
    if k < 1:
        raise UsageError("k must be positive")
    t = grid_points(t_lo, t_hi, step)
    if t[-1] > cfg.t_ceiling:
        raise UsageError(f"t_hi exceeds the configured ceiling {cfg.t_ceiling:g}")
    path = cache_path(cfg.cache_dir, k, t_lo, t_hi, step, version)
    if path.exists():
        try:
            hit = decode_grid(path.read_bytes())
            if hit.version == version and hit.k == k and np.array_equal(hit.t_values, t):
                return hit
        except CacheCorrupt as exc:
            warnings.warn(f"discarding cache record {path.name}: {exc}", RuntimeWarning, stacklevel=2)
    samples = GridSamples(k, t, compute_samples(k, t, cfg.threads), version)
    _atomic_write(path, encode_grid(samples))
    return samples


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _ceiling(cfg: RunConfig, *heights: float) -> None:
    for h in heights:
        if abs(h) > cfg.t_ceiling:
            raise UsageError(f"height {h:g} exceeds the configured ceiling {cfg.t_ceiling:g}")


def cmd_zeta(args, cfg, out):
    from .zeta_core import zeta, zeta_half_line

    rows = []
    for t in args.t or []:
        _ceiling(cfg, t)
        z = zeta_half_line(t)
        rows.append({"t": t, "value": z, "modulus": abs(z)})
    for s in args.s or []:
        _ceiling(cfg, s.imag)
        z = zeta(s)
        rows.append({"s": s, "value": z, "modulus": abs(z)})
    if not rows:
        raise UsageError("give --t or --s")
    return rows


def cmd_moment(args, cfg, out):
    from .moments import moment_integral

    rows = []
    for T in args.T:
        _ceiling(cfg, T)
        m = moment_integral(args.k, T, cfg.tol * max(1.0, T))
        rows.append({"k": args.k, "T": T, "value": m.value, "err_est": m.err_est})
    return rows


def cmd_laplace(args, cfg, out):
    from .laplace import laplace_transform

    rows = []
    for s in args.s:
        v = laplace_transform(args.k, s, cfg.tol)
        rows.append({"k": args.k, "s": s, "value": complex(v.value), "err_est": v.err_est})
    return rows


def cmd_mellin(args, cfg, out):
    from .mellin import mellin_transform, z1_continued, z2_continued

    rows = []
    for s in args.s:
        if args.continued:
            if args.k not in (1, 2):
                raise UsageError("--continued is available for k = 1 and 2")
            v = (z1_continued if args.k == 1 else z2_continued)(s, tol=cfg.tol)
        else:
            v = mellin_transform(args.k, s, cfg.tol)
        rows.append({"k": args.k, "s": s, "value": complex(v.value), "err_est": v.err_est,
                     "method": "continued" if args.continued else "direct"})
    return rows


def cmd_verify(args, cfg, out):
    from .identities import REGISTRY

    builder = REGISTRY[args.name]
    kwargs = {}
    for key in ("k", "s", "T"):
        val = getattr(args, key, None)
        if val is not None:
            kwargs[key] = val
    try:
        report = builder(**kwargs)
    except TypeError as exc:
        raise UsageError(f"{args.name}: {exc}") from None
    return report.as_dict(), (0 if report.passed else 1)


def cmd_fit(args, cfg, out):
    from .moments import default_polynomial

    poly = default_polynomial(args.k, args.n_samples) if args.k == 2 else default_polynomial(args.k)
    return [{"k": args.k, "j": j, "coefficient": c, "provenance": p}
            for j, (c, p) in enumerate(zip(poly.coeffs, poly.provenance))]


def cmd_spectral(args, cfg, out):
    from . import spectral as sp

    table = sp.load_spectral_data(cfg.spectral_path) if cfg.spectral_path else sp.synthetic_table()
    if args.what == "r":
        return [{"y": y, "value": sp.big_r(y)} for y in args.x]
    if args.what == "l2":
        return [{"s": complex(s), "value": sp.spectral_sum_l2(s, table)} for s in args.x]
    if args.what == "itg":
        return [{"T": args.T, "G": args.G, "value": sp.i_tg_spectral(args.T, args.G, table)}]
    if args.what == "sm":
        return [{"m": table.m, "K": args.K, "K_prime": args.K_prime, "t": args.T,
                 "value": sp.s_m_sum(table.m, args.K, args.K_prime, args.T, table)}]
    return [{"T": args.T, "Delta": args.G, "value": sp.s_t_delta(args.T, args.G, table, cfg.tol),
             "excluded_bound": sp.s_t_delta_excluded(args.T, args.G, table)}]


def cmd_cache(args, cfg, out):
    if args.action == "grid":
        g = cache_get_or_compute(args.k, args.t_lo, args.t_hi, args.step, cfg)
        return [{"t": float(t), "value": float(v)} for t, v in zip(g.t_values, g.values)]
    if args.action == "path":
        return [{"cache_dir": str(cfg.cache_dir)}]
    removed = 0
    if cfg.cache_dir.exists():
        for p in cfg.cache_dir.glob("*.zgr"):
            p.unlink()
            removed += 1
    return [{"removed": removed}]


def build_parser() -> argparse.ArgumentParser:
    from .identities import REGISTRY

    p = argparse.ArgumentParser(prog="zeta-transforms", allow_abbrev=False,
                                description="Laplace and Mellin transforms of powers of |zeta| on the critical line.")
    p.add_argument("--config", type=Path)
    p.add_argument("--tol", type=float)
    p.add_argument("--t-ceiling", dest="t_ceiling", type=float)
    p.add_argument("--cache-dir", dest="cache_dir", type=Path)
    p.add_argument("--threads", type=int)
    p.add_argument("--spectral-path", dest="spectral_path", type=Path)
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))
    p.add_argument("--version", action="version", version=PRODUCER_VERSION)
    sub = p.add_subparsers(dest="command", required=True)

    z = sub.add_parser("zeta", allow_abbrev=False, help="zeta on the critical line (--t) or anywhere (--s)")
    z.add_argument("--t", type=float, action="append")
    z.add_argument("--s", type=_complex, action="append")
    z.set_defaults(func=cmd_zeta)

    m = sub.add_parser("moment", allow_abbrev=False, help="I_k(T)")
    m.add_argument("--k", type=int, default=1)
    m.add_argument("--T", type=float, action="append", required=True)
    m.set_defaults(func=cmd_moment)

    lp = sub.add_parser("laplace", allow_abbrev=False, help="L_k(s)")
    lp.add_argument("--k", type=int, default=1)
    lp.add_argument("--s", type=_complex, action="append", required=True)
    lp.set_defaults(func=cmd_laplace)

    me = sub.add_parser("mellin", allow_abbrev=False, help="Z_k(s)")
    me.add_argument("--k", type=int, default=1)
    me.add_argument("--s", type=_complex, action="append", required=True)
    me.add_argument("--continued", action="store_true", help="use the continuation through E_k")
    me.set_defaults(func=cmd_mellin)

    v = sub.add_parser("verify", allow_abbrev=False, help="run a named check and print its report")
    v.add_argument("name", choices=sorted(REGISTRY))
    v.add_argument("--k", type=int)
    v.add_argument("--s", type=_complex)
    v.add_argument("--T", type=float)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fit-coeffs", allow_abbrev=False, help="main-term polynomial coefficients")
    f.add_argument("--k", type=int, choices=(1, 2), default=2)
    f.add_argument("--n-samples", dest="n_samples", type=int, default=240)
    f.set_defaults(func=cmd_fit)

    sp = sub.add_parser("spectral", allow_abbrev=False, help="spectral kernels and sums over a table")
    sp.add_argument("what", choices=("r", "l2", "itg", "sm", "std"))
    sp.add_argument("--x", type=_complex, action="append", default=[], help="y for r, s for l2")
    sp.add_argument("--T", type=float, default=1000.0)
    sp.add_argument("--G", type=float, default=100.0, help="G for itg, Delta for std")
    sp.add_argument("--K", type=float, default=10.0)
    sp.add_argument("--K-prime", dest="K_prime", type=float, default=20.0)
    sp.set_defaults(func=cmd_spectral)

    c = sub.add_parser("cache", allow_abbrev=False, help="sample cache: compute a grid, show the directory, or clear it")
    c.add_argument("action", choices=("grid", "path", "clear"))
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--t-lo", dest="t_lo", type=float, default=10.0)
    c.add_argument("--t-hi", dest="t_hi", type=float, default=20.0)
    c.add_argument("--step", type=float, default=0.5)
    c.set_defaults(func=cmd_cache)
    return p


def run(argv: Optional[Sequence[str]] = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    """Parse ``argv`` and dispatch; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        old_err, sys.stderr = sys.stderr, stderr
        try:
            args = parser.parse_args(list(argv) if argv is not None else None)
        finally:
            sys.stderr = old_err
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        cfg = build_config(args)
        if args.command == "spectral" and args.what == "r":
            args.x = [float(x.real) for x in args.x]
        result = args.func(args, cfg, stdout)
        rows, code = result if isinstance(result, tuple) else (result, 0)
    except UsageError as exc:
        print(f"zeta-transforms: error: {exc}", file=stderr)
        parser.print_usage(stderr)
        return 2
    except (ZetaTransformsError, ArithmeticError, ValueError, RuntimeError, OSError) as exc:
        print(f"zeta-transforms: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    write_rows(rows, cfg.output_format, stdout)
    return code


def main() -> None:
    sys.exit(run())
