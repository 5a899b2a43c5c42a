"""Monte Carlo orchestration, channel caching and CSV/JSON emission.

Every realization depends only on ``(config, realization index)``; workers may
run in any order and results are reduced by index, so outputs do not depend on
the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import region
from .channel import ChannelDraw, generate_channels, perturb_csi, stream
from .config import ExperimentConfig
from .rates import to_bits

CACHE_MAGIC = b"RISC"
CACHE_VERSION = 1
CSI_LINK = 1 << 20  # stream id of the estimation error, clear of the fading links
REGION_COLUMNS = ("rho", "primary_bits_per_s_hz", "backscatter_bits_per_BB",
                  "backscatter_bits_per_PB", "n_realizations")


class NumericFailure(RuntimeError):
    """A solver produced a non-finite or negative rate."""


def _fmt(x) -> str:
    return repr(float(x))


def atomic_write(path, data) -> None:
    """Write ``data`` (str or bytes) to a temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _commit(files: dict) -> list:
    """Write every ``path -> content`` pair; content is fully built beforehand."""
    for path, data in files.items():
        atomic_write(path, data)
    return sorted(str(p) for p in files)


# --- channels ----------------------------------------------------------------

def realization_channels(cfg: ExperimentConfig, index: int) -> ChannelDraw:
    return generate_channels(cfg.geometry, cfg.fading, cfg.n_antennas, cfg.n_nodes,
                             cfg.seed, index)


def design_channels(cfg: ExperimentConfig, draw: ChannelDraw, index: int):
    """Imperfect cascaded-channel estimate, or None with perfect CSI."""
    if cfg.iota == 0 or draw.n_nodes == 0:
        return None
    est = perturb_csi(draw.h_c, cfg.iota, draw.cascade_loss[:, None],
                      stream(cfg.seed, index, CSI_LINK))
    return draw.with_cascade(est)


def _cache_header(cfg: ExperimentConfig) -> bytes:
    return (CACHE_MAGIC + struct.pack("<H", CACHE_VERSION) + bytes.fromhex(cfg.channel_hash())
            + struct.pack("<III", cfg.realizations, cfg.n_antennas, cfg.n_nodes))


def cache_channels(cfg: ExperimentConfig, path) -> Path:
    """Serialize all realizations: header, then per realization h_d, h_f, h_b, h_c
    as little-endian interleaved re/im f64 and the cascade losses as f64."""
    parts = [_cache_header(cfg)]
    for r in range(cfg.realizations):
        d = realization_channels(cfg, r)
        for arr in (d.h_d, d.h_f, d.h_b, d.h_c):
            parts.append(np.ascontiguousarray(arr, dtype="<c16").tobytes())
        parts.append(np.ascontiguousarray(d.cascade_loss, dtype="<f8").tobytes())
    atomic_write(path, b"".join(parts))
    return Path(path)


def load_channels(path, cfg: ExperimentConfig) -> list:
    """Read a channel cache; refuses files written for a different config."""
    blob = Path(path).read_bytes()
    head = 4 + 2 + 32 + 12
    if len(blob) < head or blob[:4] != CACHE_MAGIC:
        raise ValueError(f"{path} is not a channel cache")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != CACHE_VERSION:
        raise ValueError(f"unsupported cache version {version}")
    digest = blob[6:38].hex()
    if digest != cfg.channel_hash():
        raise ValueError(f"channel cache hash {digest[:12]} does not match the config "
                         f"({cfg.channel_hash()[:12]})")
    n_real, q, k = struct.unpack_from("<III", blob, 38)
    shapes = [((q,), "<c16"), ((k, q), "<c16"), ((k,), "<c16"), ((k, q), "<c16"), ((k,), "<f8")]
    draws, pos = [], head
    for _ in range(n_real):
        arrays = []
        for shape, dtype in shapes:
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=pos).reshape(shape)
            arrays.append(arr.astype(complex if dtype == "<c16" else float))
            pos += count * np.dtype(dtype).itemsize
        draws.append(ChannelDraw(*arrays))
    if pos != len(blob):
        raise ValueError(f"{path} has trailing or missing bytes")
    return draws


# --- realization workers -----------------------------------------------------

def _solve_region(job):
    cfg, index, draw = job
    draw = realization_channels(cfg, index) if draw is None else draw
    res = region.rate_region(draw, cfg, cfg.rhos, design_channels(cfg, draw, index))
    rates = np.array([[pt.primary, pt.backscatter] for pt in res.points])
    bench = {k: np.array(v, dtype=float) for k, v in res.benchmarks.items()}
    return rates, bench


def _map(func, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, jobs))


def _check(values, what):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values < -1e-12):
        raise NumericFailure(f"{what} contains non-finite or negative rates")


def _manifest(cfg: ExperimentConfig, command: str, extra=None) -> str:
    body = {"command": command, "seed": cfg.seed, "content_hash": cfg.content_hash(),
            "channel_hash": cfg.channel_hash(), "config": cfg.result_dict()}
    body.update(extra or {})
    return json.dumps(body, indent=2, sort_keys=True, default=list) + "\n"


def region_rows(cfg: ExperimentConfig, channels=None):
    """Realization-averaged region points (nats) and benchmark points."""
    draws = channels if channels is not None else [None] * cfg.realizations
    jobs = [(cfg, i, d) for i, d in enumerate(draws)]
    results = _map(_solve_region, jobs, cfg.threads)
    total = np.zeros((len(cfg.rhos), 2))
    bench: dict = {}
    for rates, b in results:  # realization order
        total += rates
        for k, v in b.items():
            bench[k] = bench.get(k, 0.0) + v
    n = len(results)
    return total / n, {k: v / n for k, v in bench.items()}, n


def run_region(cfg: ExperimentConfig, out_dir, channels=None) -> list:
    """``region.csv``, ``benchmarks.csv`` and ``manifest.json`` under ``out_dir``."""
    out = Path(out_dir)
    mean, bench, n = region_rows(cfg, channels)
    _check(mean, "region")
    rows = [(_fmt(rho), _fmt(to_bits(ip)), _fmt(to_bits(ib)),
             _fmt(to_bits(ib / cfg.spreading)), n)
            for rho, (ip, ib) in zip(cfg.rhos, mean)]
    axis = {"primary_axis": [float(to_bits(mean[:, 0].max())), 0.0],
            "backscatter_axis": [0.0, float(to_bits(mean[:, 1].max()))]}
    files = {
        out / "region.csv": _csv_text(REGION_COLUMNS, rows),
        out / "benchmarks.csv": _benchmark_text(cfg, bench, n),
        out / "manifest.json": _manifest(cfg, "region", {"axis_points_bits": axis}),
    }
    return _commit(files)


def _benchmark_text(cfg, bench, n) -> str:
    rows = [(name, _fmt(to_bits(ip)), _fmt(to_bits(ib)), _fmt(to_bits(ib / cfg.spreading)), n)
            for name, (ip, ib) in bench.items()]
    return _csv_text(("scheme",) + REGION_COLUMNS[1:], rows)


def _solve_benchmarks(job):
    cfg, index, draw = job
    draw = realization_channels(cfg, index) if draw is None else draw
    out = {k: np.array(v, dtype=float) for k, v in region.benchmarks(draw, cfg).items()}
    out["bbc_finite_n"] = np.array(region.benchmark_bbc(cfg, draw, finite=True))
    return out


def run_benchmark(cfg: ExperimentConfig, out_dir, channels=None) -> list:
    draws = channels if channels is not None else [None] * cfg.realizations
    results = _map(_solve_benchmarks, [(cfg, i, d) for i, d in enumerate(draws)], cfg.threads)
    bench: dict = {}
    for b in results:
        for k, v in b.items():
            bench[k] = bench.get(k, 0.0) + v
    bench = {k: v / len(results) for k, v in bench.items()}
    _check(list(bench.values()), "benchmarks")
    out = Path(out_dir)
    return _commit({out / "benchmarks.csv": _benchmark_text(cfg, bench, len(results)),
                    out / "manifest.json": _manifest(cfg, "benchmark")})


def run_convergence(cfg: ExperimentConfig, rho: float, out_dir, realization: int = 0) -> list:
    """Objective traces of one BCD run: KKT sweeps, PGA steps and outer iterations."""
    draw = realization_channels(cfg, realization)
    state = region.bcd_solve(draw, cfg, rho)
    kkt = [(i, j, _fmt(to_bits(ip)), _fmt(to_bits(ib)), _fmt(to_bits(obj)))
           for i, tr in enumerate(state.input_traces) for j, (ip, ib, obj) in enumerate(tr)]
    pga = [(i, j, _fmt(to_bits(obj)), _fmt(step))
           for i, tr in enumerate(state.beam_traces) for j, (obj, step) in enumerate(tr)]
    bcd = [(i, _fmt(to_bits(obj))) for i, obj in enumerate(state.trace)]
    out = Path(out_dir)
    return _commit({
        out / "kkt_trace.csv": _csv_text(("bcd_iteration", "iteration", "primary_bits",
                                          "backscatter_bits", "weighted_bits"), kkt),
        out / "pga_trace.csv": _csv_text(("bcd_iteration", "iteration", "weighted_bits",
                                          "step"), pga),
        out / "bcd_trace.csv": _csv_text(("iteration", "weighted_bits"), bcd),
        out / "manifest.json": _manifest(cfg, "converge", {
            "rho": rho, "realization": realization, "bcd_iterations": state.iterations,
            "converged": state.converged}),
    })


def run_distribution(cfg: ExperimentConfig, rhos, out_dir, realization: int = 0) -> list:
    """Per-rho converged reflection-state distributions of every node (warm-started sweep)."""
    draw = realization_channels(cfg, realization)
    res = region.rate_region(draw, cfg, rhos, design_channels(cfg, draw, realization))
    rows = []
    for pt in res.points:
        for k, p in enumerate(pt.state.dists):
            rows.append((_fmt(pt.rho), k) + tuple(_fmt(x) for x in p))
    header = ("rho", "node") + tuple(f"p{m}" for m in range(cfg.order))
    out = Path(out_dir)
    return _commit({out / "distribution.csv": _csv_text(header, rows),
                    out / "manifest.json": _manifest(cfg, "distribution",
                                                     {"rhos": list(map(float, rhos))})})


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
