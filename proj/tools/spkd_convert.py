#!/usr/bin/env python3
"""Convert spike-sorted recordings into the SPKD container read by `dsnn`.

Input: one .npz file per recording day, in the order they should appear as
sessions. Each file holds

  spikes_<c>   spike times in seconds for channel c (c = 0..95)
  t_vel        timestamps of the velocity labels, 250 Hz
  vel          velocity labels, shape (len(t_vel), 2)

Mapping used by the decoder:
  * 96 channels, one bit per channel per 4 ms bin (1 if any spike fell in
    [t0 + 4k ms, t0 + 4(k+1) ms)). Multi-unit counts above one are clipped.
  * At 250 Hz there is exactly one label per bin; the label paired with bin k
    is the sample at the bin's end, i.e. the last one with t_vel <= bin end.
  * t0 is the first label timestamp; trailing partial bins are dropped.

Real exports differ (e.g. .mat or NWB); adapt `load_day` and keep the rest.
"""

import argparse
import struct
import sys

import numpy as np

N_CHANNELS = 96
BIN_US = 4000


def load_day(path):
    z = np.load(path)
    spikes = [np.asarray(z[f"spikes_{c}"], dtype=np.float64) for c in range(N_CHANNELS)]
    return spikes, np.asarray(z["t_vel"], dtype=np.float64), np.asarray(z["vel"], dtype=np.float32)


def bin_day(spikes, t_vel, vel):
    width = BIN_US * 1e-6
    t0 = t_vel[0]
    n_bins = int(np.floor((t_vel[-1] - t0) / width))
    bits = np.zeros((n_bins, N_CHANNELS), dtype=bool)
    for c, times in enumerate(spikes):
        k = np.floor((times - t0) / width).astype(np.int64)
        k = k[(k >= 0) & (k < n_bins)]
        bits[k, c] = True
    ends = t0 + width * np.arange(1, n_bins + 1)
    idx = np.searchsorted(t_vel, ends + 1e-9, side="right") - 1
    return bits, vel[np.clip(idx, 0, len(vel) - 1)]


def write_spkd(path, days):
    n_bins = sum(len(b) for b, _ in days)
    with open(path, "wb") as f:
        f.write(b"SPKD")
        f.write(struct.pack("<IIIQI", 1, N_CHANNELS, BIN_US, n_bins, len(days)))
        offset = 0
        for bits, _ in days:
            f.write(struct.pack("<Q", offset))
            offset += len(bits)
        for bits, labels in days:
            masks = np.packbits(bits, axis=1, bitorder="little")
            rows = np.concatenate([masks, labels.astype("<f4").view(np.uint8)], axis=1)
            f.write(rows.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("days", nargs="+", help="per-day .npz exports, in session order")
    ap.add_argument("-o", "--output", required=True, help="SPKD file to write")
    args = ap.parse_args()
    days = [bin_day(*load_day(p)) for p in args.days]
    write_spkd(args.output, days)
    for p, (bits, _) in zip(args.days, days):
        print(f"{p}: {len(bits)} bins, mean rate {bits.mean() / (BIN_US * 1e-6):.1f} Hz", file=sys.stderr)


if __name__ == "__main__":
    main()
