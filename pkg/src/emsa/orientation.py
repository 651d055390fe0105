"""Continuous orientation estimation with biternion targets.

Angles are degrees in [0, 360) around the gravitational axis; the biternion
representation (cos, sin) makes the wrap-around explicit and keeps regression
targets bounded.
"""

import numpy as np


def _wrap360(deg):
    # x % 360 can round up to exactly 360.0 for tiny negative x
    out = np.asarray(deg) % 360.0
    return np.where(out == 360.0, 0.0, out)


def encode_biternion(degrees):
    """Angle(s) in degrees -> (..., 2) array of (cos, sin) pairs."""
    rad = np.deg2rad(np.asarray(degrees, dtype=np.float64))
    return np.stack([np.cos(rad), np.sin(rad)], axis=-1)


def decode_biternion(biternion):
    """(..., 2) (cos, sin) pairs -> angle(s) in degrees in [0, 360).

    The input does not need unit norm; only the direction matters.
    """
    b = np.asarray(biternion, dtype=np.float64)
    if b.shape[-1] != 2:
        raise ValueError(f"biternion last extent must be 2, got {b.shape}")
    deg = _wrap360(np.rad2deg(np.arctan2(b[..., 1], b[..., 0])))
    return deg if deg.ndim else float(deg)


def angular_error(a, b):
    """Smallest absolute difference between two angles in degrees, in [0, 180]."""
    d = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) % 360.0
    err = np.minimum(d, 360.0 - d)
    return err if err.ndim else float(err)


def von_mises_loss(pred, target, kappa: float = 1.0) -> float:
    """Mean von Mises loss 1 - exp(kappa * (cos(dtheta) - 1)) over pairs.

    ``pred`` and ``target`` are (..., 2) biternions; both are normalized
    before the dot product, so magnitudes do not leak into the loss.  Zero
    at perfect agreement, approaching 1 - exp(-2 kappa) at 180 degrees.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    p = np.asarray(pred, dtype=np.float64).reshape(-1, 2)
    t = np.asarray(target, dtype=np.float64).reshape(-1, 2)
    if p.shape != t.shape:
        raise ValueError(f"pred shape {p.shape} does not match target {t.shape}")
    if p.shape[0] == 0:
        raise ValueError("von_mises_loss needs at least one pair")
    pn = np.linalg.norm(p, axis=1)
    tn = np.linalg.norm(t, axis=1)
    if np.any(pn == 0) or np.any(tn == 0):
        raise ValueError("zero-norm biternion has no direction")
    cos_delta = np.sum(p * t, axis=1) / (pn * tn)
    cos_delta = np.clip(cos_delta, -1.0, 1.0)
    return float(np.mean(1.0 - np.exp(kappa * (cos_delta - 1.0))))


def circular_mean(degrees, weights=None) -> float:
    """Circular mean of angles in degrees, in [0, 360).

    Computed through the summed unit vectors; an exactly zero resultant has
    no defined direction and maps to 0.0.
    """
    deg = np.asarray(degrees, dtype=np.float64).reshape(-1)
    if deg.size == 0:
        raise ValueError("circular_mean of no angles")
    rad = np.deg2rad(deg)
    if weights is None:
        s, c = np.sin(rad).sum(), np.cos(rad).sum()
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape != deg.shape:
            raise ValueError("weights shape does not match angles")
        s, c = (w * np.sin(rad)).sum(), (w * np.cos(rad)).sum()
    if s == 0.0 and c == 0.0:
        return 0.0
    return float(_wrap360(np.rad2deg(np.arctan2(s, c))))


def instance_orientation(field, pixels) -> float:
    """Aggregate a dense (2, H, W) biternion field over one instance.

    ``pixels`` is a (rows, cols) index pair.  Each pixel's vector is
    normalized before summing, which makes this the circular mean of the
    pixelwise angles; zero-norm pixels contribute nothing.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 3 or field.shape[0] != 2:
        raise ValueError(f"orientation field must be (2, H, W), got {field.shape}")
    rows, cols = pixels
    if len(rows) == 0:
        raise ValueError("instance_orientation over an empty pixel set")
    c = field[0][rows, cols]
    s = field[1][rows, cols]
    norm = np.hypot(c, s)
    ok = norm > 0
    if not np.any(ok):
        return 0.0
    cs, ss = (c[ok] / norm[ok]).sum(), (s[ok] / norm[ok]).sum()
    if cs == 0.0 and ss == 0.0:
        return 0.0
    return float(_wrap360(np.rad2deg(np.arctan2(ss, cs))))


def orientation_field(instance_map, orientations):
    """Dense biternion targets from per-instance angles.

    Returns ``(field, mask)``: a float64 (2, H, W) field holding each
    pixel's instance angle as (cos, sin), and the bool mask of pixels whose
    instance has an annotated orientation.  Everything else is zero.
    """
    inst = np.asarray(instance_map)
    if inst.ndim != 2:
        raise ValueError(f"instance map must be 2-D, got {inst.shape}")
    field = np.zeros((2,) + inst.shape, dtype=np.float64)
    mask = np.zeros(inst.shape, dtype=bool)
    present = set(np.unique(inst).tolist())
    for inst_id, deg in orientations.items():
        if inst_id <= 0:
            raise ValueError(f"orientation for non-positive instance id {inst_id}")
        if inst_id not in present:
            raise ValueError(f"orientation for absent instance id {inst_id}")
        sel = inst == inst_id
        rad = np.deg2rad(float(deg))
        field[0][sel] = np.cos(rad)
        field[1][sel] = np.sin(rad)
        mask |= sel
    return field, mask
