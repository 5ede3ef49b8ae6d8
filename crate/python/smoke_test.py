#!/usr/bin/env python3
"""Smoke test for the pdsplit_py extension module.

Builds the extension if needed, imports it from the cargo target directory
and exercises the main entry points end to end. Run from anywhere:

    python3 python/smoke_test.py
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build_and_import():
    lib = os.path.join(REPO_ROOT, "target", "debug", "libpdsplit_py.so")
    if not os.path.exists(lib):
        subprocess.run(
            ["cargo", "build", "-p", "pdsplit-python"],
            cwd=REPO_ROOT,
            check=True,
        )
    stage = tempfile.mkdtemp(prefix="pdsplit-py-")
    shutil.copy(lib, os.path.join(stage, "pdsplit_py.so"))
    sys.path.insert(0, stage)
    import pdsplit_py

    return pdsplit_py


def check(name, condition, detail=""):
    status = "PASS" if condition else "FAIL"
    print(f"{status} {name}{': ' + detail if detail else ''}")
    if not condition:
        sys.exit(1)


def main():
    pd = build_and_import()
    print(f"loaded pdsplit_py {pd.__version__}")

    rows = cols = 32
    clean = pd.synthetic_image(rows, cols)
    noisy = pd.add_noise(clean, 0.12, 42)

    # denoising improves the RMSE against the clean image
    restored, iters, objective = pd.denoise(noisy, rows, cols, 0.07, algorithm="alg2", iters=100)
    before = pd.rmse(noisy, clean)
    after = pd.rmse(restored, clean)
    check(
        "denoise improves rmse",
        after < before and iters == 100 and math.isfinite(objective),
        f"rmse {before:.4f} -> {after:.4f} in {iters} iterations",
    )

    # the two solvers of the strongly convex model agree
    restored2, _, _ = pd.denoise(noisy, rows, cols, 0.07, algorithm="pd2", iters=2000)
    restored3, _, _ = pd.denoise(noisy, rows, cols, 0.07, algorithm="alg2", iters=2000)
    check(
        "alg2 and pd2 agree",
        pd.rmse(restored2, restored3) < 1e-4,
        f"rmse {pd.rmse(restored2, restored3):.2e}",
    )

    # total variation: norm equivalence and zero on constants
    iso = pd.tv_iso(noisy, rows, cols)
    aniso = pd.tv_aniso(noisy, rows, cols)
    check(
        "tv norm equivalence",
        iso <= aniso <= math.sqrt(2.0) * iso and pd.tv_iso([0.5] * 16, 4, 4) == 0.0,
        f"iso {iso:.3f}, aniso {aniso:.3f}",
    )

    # gradient and its adjoint satisfy the inner-product identity
    import random

    rng = random.Random(1)
    x = [rng.random() for _ in range(rows * cols)]
    y = [rng.random() for _ in range(2 * rows * cols)]
    lhs = sum(a * b for a, b in zip(pd.grad_apply(x, rows, cols), y))
    rhs = sum(a * b for a, b in zip(x, pd.grad_adjoint(y, rows, cols)))
    check("gradient adjoint identity", abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs)))

    # operator norm estimate stays below the certified bound
    est = pd.gradient_norm_estimate(64, 64)
    check("gradient norm below sqrt(8)", 2.7 < est <= math.sqrt(8.0), f"estimate {est:.4f}")

    # step schedule: decreasing with n * rho * gamma_n -> 1
    seq = pd.gamma_schedule(0.5, 1.0, 100000)
    decreasing = all(b < a for a, b in zip(seq, seq[1:]))
    check(
        "gamma schedule asymptotics",
        decreasing and abs(100000 * seq[-1] - 1.0) < 0.05,
        f"n rho gamma_n = {100000 * seq[-1]:.4f}",
    )

    # deblur and inpaint round trips
    blurred = pd.blur(clean, rows, cols, 9, 4.0)
    restored_b, _, _ = pd.deblur(blurred, rows, cols, 9, 4.0, iters=200)
    check(
        "deblur sharpens",
        pd.rmse(restored_b, clean) < pd.rmse(blurred, clean),
        f"rmse {pd.rmse(blurred, clean):.4f} -> {pd.rmse(restored_b, clean):.4f}",
    )

    mask = pd.drop_mask(rows * cols, 0.8, 7)
    observed = [p * m for p, m in zip(clean, mask)]
    restored_i, _, _ = pd.inpaint(observed, mask, rows, cols, lam=0.05, iters=200)
    check(
        "inpaint recovers structure",
        pd.rmse(restored_i, clean) < 0.5 * pd.rmse(observed, clean),
        f"rmse {pd.rmse(observed, clean):.4f} -> {pd.rmse(restored_i, clean):.4f}",
    )

    # PGM round trip through a temp file
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "img.pgm")
        pd.save_pgm(path, clean, cols, rows)
        pixels, w, h = pd.load_pgm(path)
        err = max(abs(a - b) for a, b in zip(pixels, clean))
        check("pgm round trip", w == cols and h == rows and err <= 1 / (2 * 255) + 1e-12)

    # invalid input surfaces as ValueError
    try:
        pd.denoise([0.5] * 7, 2, 2, 0.1)
        check("shape validation raises", False)
    except ValueError:
        check("shape validation raises", True)

    # distance trace is monotone-ish and shrinks
    ref, _, _ = pd.denoise(noisy, rows, cols, 0.07, algorithm="alg2", iters=5000, rho=1.0)
    trace = pd.denoise_distance_trace(noisy, rows, cols, 0.07, ref, iters=500)
    check(
        "distance trace decays",
        trace[-1] < 1e-3 * trace[0],
        f"{trace[0]:.3e} -> {trace[-1]:.3e}",
    )

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
