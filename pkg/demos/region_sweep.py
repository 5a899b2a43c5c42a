"""Trace one rate region and compare it with the benchmark schemes.

A single node with four reflection states sits near the user.  Sweeping the
QoS weight rho from 0 to 1 moves the node from pure backscatter (uniform-ish
inputs, information on the reflection pattern) to pure channel shaping (one
fixed state, the RIS point).

    python demos/region_sweep.py [--config demos/small.toml]
"""
import argparse
from pathlib import Path

from riscatter.config import load_config
from riscatter.experiments import realization_channels
from riscatter.rates import to_bits
from riscatter.region import rate_region

parser = argparse.ArgumentParser()
parser.add_argument("--config", type=Path, default=Path(__file__).with_name("small.toml"))
cfg = load_config(parser.parse_args().config)

ch = realization_channels(cfg, 0)
res = rate_region(ch, cfg)

print(f"Q={cfg.n_antennas} K={cfg.n_nodes} M={cfg.order} N={cfg.spreading}, realization 0\n")
print(f"{'rho':>5}  {'primary b/s/Hz':>15}  {'backscatter b/BB':>17}")
for p in res.points:
    print(f"{p.rho:5.2f}  {to_bits(p.primary):15.4f}  {to_bits(p.backscatter):17.4f}")

print("\nbenchmarks")
for name, (ip, ib) in res.benchmarks.items():
    print(f"{name:>6}  {to_bits(ip):15.4f}  {to_bits(ib):17.4f}")

# the rho = 1 point uses the best fixed reflection state, i.e. the RIS benchmark
end = res.points[-1]
print(f"\nrho=1 primary minus RIS benchmark: {end.primary - res.benchmarks['ris'][0]:.2e} nats")
