"""Regenerates the image fixtures and frozen reference values.

Independent of the Rust code: pixels come from closed-form patterns, metric
references from scikit-image, resampling references from Pillow's float
bicubic filter. Run from this directory:  python3 make_fixtures.py
"""
import numpy as np
from PIL import Image
from skimage.metrics import structural_similarity

rng = np.random.default_rng(20240607)


def pattern(h, w):
    y, x = np.mgrid[0:h, 0:w]
    r = (x * 11 + y * 7) % 256
    g = (x * x + 3 * y) % 256
    b = (255 - 9 * x * y) % 256
    return np.stack([r, g, b], axis=-1).astype(np.uint8)


def natural(h, w):
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    base = 120 + 60 * np.sin(x / 5.0) * np.cos(y / 7.0)
    img = np.stack([base, base * 0.8 + 30 * np.sin(x / 3.0), 200 - base * 0.5], axis=-1)
    img[10:25, 8:30] += 50
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def luma(img):
    img = img.astype(np.float64)
    return 16.0 + (65.738 * img[..., 0] + 129.057 * img[..., 1] + 25.064 * img[..., 2]) / 256.0


Image.fromarray(pattern(17, 23)).save("pattern_23x17.ppm")
Image.fromarray(pattern(17, 23)).save("pattern_23x17.png")
Image.fromarray(pattern(17, 23)[..., 0]).save("gray_23x17.png")
Image.fromarray((np.arange(64, dtype=np.uint16).reshape(8, 8) * 1000)).save("deep16.png")

a = natural(48, 40)
noise = rng.integers(-12, 13, size=a.shape)
b = np.clip(a.astype(np.int64) + noise, 0, 255).astype(np.uint8)
Image.fromarray(a).save("natural_a.png")
Image.fromarray(b).save("natural_b.png")

shave = 2
ya = luma(a)[shave:-shave, shave:-shave]
yb = luma(b)[shave:-shave, shave:-shave]
mse = np.mean((ya - yb) ** 2)
psnr = 10 * np.log10(255.0 ** 2 / mse)
ssim = structural_similarity(
    yb, ya, gaussian_weights=True, sigma=1.5, use_sample_covariance=False, data_range=255.0
)

lines = [f"psnr_y_shave2 {float(psnr)!r}", f"ssim_y_shave2 {float(ssim)!r}"]


def pil_resize(img, h, w):
    planes = [
        np.asarray(Image.fromarray(img[..., c].astype(np.float32), mode="F").resize((w, h), Image.BICUBIC))
        for c in range(3)
    ]
    return np.stack(planes, axis=-1).astype(np.float64)


# Pillow renormalises at the borders instead of clamping, so only interior
# samples are frozen.
for name, (h, w), margin in [("down2", (24, 20), 3), ("up3", (144, 120), 6)]:
    out = pil_resize(a, h, w)
    for _ in range(12):
        yy = int(rng.integers(margin, h - margin))
        xx = int(rng.integers(margin, w - margin))
        c = int(rng.integers(0, 3))
        lines.append(f"{name} {yy} {xx} {c} {float(out[yy, xx, c])!r}")

with open("reference_values.txt", "w") as f:
    f.write("\n".join(lines) + "\n")
print("\n".join(lines))
