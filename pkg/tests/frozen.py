"""Reference values produced by scripts/freeze_oracles.py (independent oracles)."""

# (N, m) of the profile through G(1/2) = key, D = 1
PROFILE_MOMENTS = {
    1.0: (2.393692552423324, 0.6535941093829262),
    2.4: (2.037002573073595, 1.133077628875465),
    4.0: (2.565936688327684, 1.6689533248603232),
}
# G(1/2) of the two k0 = 3 branches before normalization
K0_3_G_HALF = (0.5816748165036689, 4.987814337551673)
# continuum int phi / int x phi on [0, 1] for Gaussian(0.25, 0.2)
GAUSS_RATIO_025_02 = 3.4391411138697703
# (t, x, Gamma) for g(s, z) = hat(z) 1{z <= 1}, k0 = 3
FROZEN_FIELD_GAMMA = [
    (1.1, 0.2, 1.3364323382580352),
    (1.1, 0.6, 1.864794407596766),
    (1.25, 0.05, 0.39404477584122494),
    (1.25, 0.9, 0.40732513648603935),
]
