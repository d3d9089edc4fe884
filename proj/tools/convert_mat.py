#!/usr/bin/env python3
"""Convert a MATLAB hyperspectral scene and its ground truth into ENVI BSQ + PGM.

Example:
    convert_mat.py Indian_pines.mat Indian_pines_gt.mat out/indian_pines
writes out/indian_pines.hdr, out/indian_pines (float32 BSQ) and
out/indian_pines_gt.pgm.
"""

import argparse
import pathlib
import sys

import numpy as np
import scipy.io


def only_array(path, ndim):
    arrays = {k: v for k, v in scipy.io.loadmat(path).items()
              if not k.startswith("__") and isinstance(v, np.ndarray) and v.ndim == ndim}
    if len(arrays) != 1:
        sys.exit(f"{path}: expected exactly one {ndim}-D array, found {sorted(arrays)}")
    return next(iter(arrays.values()))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("cube_mat")
    ap.add_argument("truth_mat")
    ap.add_argument("out_stem")
    args = ap.parse_args()

    cube = only_array(args.cube_mat, 3)  # (lines, samples, bands)
    truth = only_array(args.truth_mat, 2)
    if truth.shape != cube.shape[:2]:
        sys.exit(f"shape mismatch: cube {cube.shape}, truth {truth.shape}")
    lines, samples, bands = cube.shape

    stem = pathlib.Path(args.out_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(np.moveaxis(cube, 2, 0), dtype="<f4").tofile(stem)
    stem.with_suffix(".hdr").write_text(
        "ENVI\n"
        f"samples = {samples}\nlines = {lines}\nbands = {bands}\n"
        "header offset = 0\ndata type = 4\ninterleave = bsq\nbyte order = 0\n")

    labels = truth.astype(np.int64)
    if labels.min() < 0 or labels.max() > 65535:
        sys.exit("labels must lie in 0..65535")
    depth = 255 if labels.max() <= 255 else 65535
    pgm = pathlib.Path(f"{stem}_gt.pgm")
    with open(pgm, "wb") as f:
        f.write(f"P5\n{samples} {lines}\n{depth}\n".encode())
        f.write(labels.astype(">u2" if depth > 255 else "u1").tobytes())
    print(f"wrote {stem.with_suffix('.hdr')}, {stem} and {pgm}")


if __name__ == "__main__":
    main()
