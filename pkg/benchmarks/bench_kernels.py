"""Timing comparison of the compiled and pure-numpy kernel paths.

Run directly:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from skycell import kernels
from skycell.channel import PathLossParams, realize_network_channels
from skycell.radio import default_power_set, dft_codebook, noise_power_watts
from skycell.scenario import ScenarioConfig, build_layout, place_users


def _instance(num_cells=3, num_antennas=4, codebook_size=8, seed=1):
    cfg = ScenarioConfig(num_cells=num_cells)
    rng = np.random.default_rng(seed)
    scen = place_users(cfg, build_layout(cfg), rng)
    channels = realize_network_channels(scen, num_antennas, PathLossParams(), rng)
    codebook = dft_codebook(num_antennas, codebook_size)
    return channels, codebook


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    channels, codebook = _instance()
    powers = default_power_set()
    p_watts = powers.watts()
    noise = noise_power_watts(1e8, 9.0)
    gains = kernels.beam_gains_numpy(channels.h, codebook.codewords)
    beams = np.arange(channels.num_cells, dtype=np.int64) % codebook.size
    pv = np.full(channels.num_cells, p_watts[-1])

    cases = [
        ("beam_gains",
         lambda: kernels.beam_gains_numpy(channels.h, codebook.codewords),
         None if not kernels.NUMBA_ENABLED else
         (lambda: kernels.beam_gains_numba(channels.h, codebook.codewords)),
         200),
        ("rx_powers",
         lambda: kernels.rx_powers_numpy(gains, pv, beams),
         None if not kernels.NUMBA_ENABLED else
         (lambda: kernels.rx_powers_numba(gains, pv, beams)),
         2000),
        ("brute_force (512000 configs)",
         lambda: kernels.brute_force_numpy(gains, p_watts, noise),
         None if not kernels.NUMBA_ENABLED else
         (lambda: kernels.brute_force_numba(gains, p_watts, noise)),
         3),
    ]

    if kernels.NUMBA_ENABLED:
        kernels.warmup()
        print("numba path: enabled (set SKYCELL_NUMBA=0 to disable)")
    else:
        print("numba path: disabled, timing numpy only")

    print(f"{'kernel':34s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}")
    for name, np_fn, nb_fn, repeats in cases:
        t_np, out_np = _time(np_fn, repeats)
        if nb_fn is None:
            print(f"{name:34s} {t_np * 1e3:10.3f}ms {'-':>12s} {'-':>9s}")
            continue
        t_nb, out_nb = _time(nb_fn, repeats)
        a = out_np[0] if isinstance(out_np, tuple) else out_np
        b = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        assert np.allclose(a, b, rtol=1e-10), f"{name} paths disagree"
        print(f"{name:34s} {t_np * 1e3:10.3f}ms {t_nb * 1e3:10.3f}ms "
              f"{t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
