"""
A mass-weighted sky map from a survey catalog
==============================================

Survey rows carry positions (ra, dec), a redshift, and an apparent
magnitude.  A crude mass proxy built from magnitude and redshift, mapped
through the standard logarithmic-to-linear transform, gives every galaxy a
positive weight; the weighted field then emphasizes massive structure
rather than mere counts.
"""

import numpy as np

from gdfkit import (
    GdfModel,
    cluster,
    connectivity_pipeline,
    linear_mass_weight,
    load_sdss_extract,
    sdss_mass,
    silverman_bandwidth,
)
from gdfkit.data import bundled

sample = load_sdss_extract(bundled("sdss_extract.csv"))
print(f"{sample.size} galaxies, "
      f"ra {sample.points[:, 0].min():.1f}..{sample.points[:, 0].max():.1f}, "
      f"dec {sample.points[:, 1].min():.1f}..{sample.points[:, 1].max():.1f}")
print(f"weight range: {sample.weights.min():.3g}..{sample.weights.max():.3g}")

# the mass proxy itself: brighter (smaller r) and more distant (larger z)
# both push the proxy up before the linear mapping
for r, z in ((14.5, 0.11), (17.8, 0.11), (14.5, 0.115)):
    m = sdss_mass(np.asarray([r]), np.asarray([z]))[0]
    print(f"  r={r:.1f} z={z:.3f}: proxy={m:+.2f}  weight={linear_mass_weight(np.asarray([m]))[0]:.3g}")

# rule-of-thumb bandwidth tracks the global point spread; the uniform
# background calls for heavier smoothing so that only real clumps survive
h = silverman_bandwidth(sample)
print(f"\nsilverman bandwidth: {h:.3f} degrees; smoothing harder at 3.0")
model = GdfModel(sample, 3.0)

asg = cluster(model)
print(f"{len(asg.modes)} clumps (ra, dec, field value):")
for m, v in zip(asg.modes.modes, asg.modes.values):
    print(f"  ({m[0]:6.2f}, {m[1]:6.2f})  {v:.4f}")
print("galaxies per clump:", np.bincount(asg.labels[asg.labels >= 0]))

# the three populous clumps form a diagonal band; neighbors in the band
# link strongly while the band ends barely connect through the middle
_, result = connectivity_pipeline(model, asg)
print("\nclump connectivity:")
print(np.array_str(result.omega, precision=3, suppress_small=True))
band = np.argsort(-np.bincount(asg.labels[asg.labels >= 0]))[:3]
ordered = band[np.argsort(asg.modes.modes[band, 0])]
lo, mid, hi = ordered
print(f"\nband clumps by ra: {lo} -> {mid} -> {hi}")
print(f"  neighbor links: {result.omega[lo, mid]:.3f}, {result.omega[mid, hi]:.3f}")
print(f"  end-to-end:     {result.omega[lo, hi]:.3f}")
