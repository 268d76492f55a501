"""Regenerates the committed test fixtures.

Everything here is produced by numpy/Pillow, independently of the C++ code:
reference NPY files, seeded gradient-check cases, the tiny CNN weights with
golden outputs from a plain numpy forward pass, and small activation bundles.

    python3 tests/fixtures/generate_fixtures.py
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image

ROOT = Path(__file__).resolve().parent


def write_npy_refs():
    out = ROOT / "npy"
    out.mkdir(exist_ok=True)
    np.save(out / "f64_1d.npy", np.array([1.0, 2.0], dtype="<f8"))
    np.save(out / "f64_2x2.npy", np.array([[1, 2], [3, 4]], dtype="<f8"))
    np.save(out / "f32_2x3.npy", np.array([[0.5, -1.25, 3.0], [1e-3, 7.0, -2.5]], dtype="<f4"))
    np.save(out / "f64_3d.npy", np.arange(24, dtype="<f8").reshape(2, 3, 4) / 8.0)
    np.save(out / "f64_scalar.npy", np.array(2.5, dtype="<f8"))
    np.save(out / "be_f8.npy", np.array([1.0, 2.0], dtype=">f8"))
    np.save(out / "i4.npy", np.array([1, 2], dtype="<i4"))
    np.save(out / "fortran.npy", np.asfortranarray(np.array([[1.0, 2.0], [3.0, 4.0]])))


def write_gradient_cases():
    rng = np.random.default_rng(20240521)
    cases = []
    for n in range(20):
        cases.append(
            {
                "label": int(rng.integers(0, 10)),
                "scores": [float(v) for v in rng.normal(0.0, 3.0, size=10)],
                "perplexity": [9.0, 8.5, 8.9, 8.2][n % 4],
                "smoothing": [0.0, 0.1][(n // 4) % 2],
            }
        )
    (ROOT / "gradient_cases.json").write_text(json.dumps({"cases": cases}, indent=1) + "\n")


def conv2d(x, w, b):
    c, h, wd = x.shape
    f = w.shape[0]
    out = np.zeros((f, h - 2, wd - 2))
    for o in range(f):
        for r in range(h - 2):
            for col in range(wd - 2):
                out[o, r, col] = b[o] + float(np.sum(w[o] * x[:, r : r + 3, col : col + 3]))
    return out


def maxpool2(x):
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    return x[:, : 2 * h2, : 2 * w2].reshape(c, h2, 2, w2, 2).max(axis=(2, 4))


def write_tinycnn():
    out = ROOT / "tinycnn"
    out.mkdir(exist_ok=True)
    rng = np.random.default_rng(7)
    w0 = rng.normal(0.0, np.sqrt(2.0 / 9.0), size=(8, 1, 3, 3))
    b0 = rng.normal(0.0, 0.05, size=8)
    w1 = rng.normal(0.0, np.sqrt(2.0 / 72.0), size=(10, 8, 3, 3))
    b1 = rng.normal(0.0, 0.05, size=10)
    w2 = rng.normal(0.0, np.sqrt(1.0 / 360.0), size=(10, 360))
    b2 = rng.normal(0.0, 0.05, size=10)
    for name, arr in dict(w0=w0, b0=b0, w1=w1, b1=b1, w2=w2, b2=b2).items():
        np.save(out / f"{name}.npy", arr)

    manifest = {
        "input_shape": [1, 32, 32],
        "classes": 10,
        "feature_layer": 4,
        "layers": [
            {"type": "conv", "weights": "w0.npy", "bias": "b0.npy", "output_shape": [8, 30, 30]},
            {"type": "relu"},
            {"type": "maxpool", "output_shape": [8, 15, 15]},
            {"type": "conv", "weights": "w1.npy", "bias": "b1.npy", "output_shape": [10, 13, 13]},
            {"type": "relu"},
            {"type": "maxpool", "output_shape": [10, 6, 6]},
            {"type": "dense", "weights": "w2.npy", "bias": "b2.npy", "output_shape": [10]},
        ],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    yy, xx = np.mgrid[0:32, 0:32]
    img = 40 + 3 * xx + 2 * yy
    img[8:20, 14:26] = 250
    img = np.clip(img, 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(out / "image.png")
    Image.fromarray(np.zeros((16, 16), dtype=np.uint8), mode="L").save(out / "image_16.png")

    x = np.asarray(Image.open(out / "image.png"), dtype=np.float64)[None] / 255.0
    a = maxpool2(np.maximum(conv2d(x, w0, b0), 0.0))
    feats = np.maximum(conv2d(a, w1, b1), 0.0)
    logits = w2 @ maxpool2(feats).reshape(-1) + b2
    np.save(out / "golden_features.npy", feats)
    np.save(out / "golden_logits.npy", logits)


def gaussian_bundle(name, sigma, rng):
    out = ROOT / "bundles" / name
    out.mkdir(parents=True, exist_ok=True)
    yy, xx = np.mgrid[0:16, 0:16]
    bump = np.exp(-((yy - 7.5) ** 2 + (xx - 7.5) ** 2) / (2 * sigma**2))
    gains = rng.uniform(0.5, 1.5, size=10)
    feats = (gains[:, None, None] * bump[None]).astype(np.float32)
    logits = rng.normal(0.0, 3.0, size=10).astype(np.float32)
    np.save(out / "features.npy", feats)
    np.save(out / "logits.npy", logits)
    meta = {"network": name, "layer": "synthetic", "features_shape": list(feats.shape), "logits_shape": [10]}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def write_bundles():
    rng = np.random.default_rng(11)
    gaussian_bundle("peaked", 1.5, rng)
    gaussian_bundle("diffuse", 5.0, rng)

    # Exporter-style bundle: float32 on disk, M != K.
    out = ROOT / "bundles" / "f32_small"
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "features.npy", rng.uniform(0.0, 2.0, size=(3, 4, 4)).astype(np.float32))
    np.save(out / "logits.npy", rng.normal(0.0, 2.0, size=5).astype(np.float32))
    meta = {"network": "synthetic", "layer": "conv_last", "features_shape": [3, 4, 4], "logits_shape": [5]}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


if __name__ == "__main__":
    write_npy_refs()
    write_gradient_cases()
    write_tinycnn()
    write_bundles()
