"""Pipeline defaults shared across modules.

These values are configuration, not physics: sampling profiles for the two
rendering modes, the height-band schedule used when refining the template,
the motion-texture resolution, and the per-stage loss weights.
"""

# samples per foreground ray
TRAINING_SAMPLES_PER_RAY = 64
INTERACTIVE_SAMPLES_PER_RAY = 20

# rays per optimization batch
RAY_BATCH_SIZE = 4096

# height band of the texture space (meters): wide before refinement,
# narrowed once the template hugs the field's zero set
D_MAX_SCHEDULE = (0.04, 0.02)

MOTION_TEXTURE_RESOLUTION = 256

# loss weights per training stage, in order of appearance
STAGE1_WEIGHTS = {
    "color": 1.0,
    "mask": 0.1,
    "eikonal": 0.1,
    "seam": 1.0,
}
STAGE2_WEIGHTS = {
    "sdf": 1.0,
    "laplacian_delta": 0.15,
    "laplacian_zero": 0.005,
    "normal_consistency": 0.005,
    "edge_variance": 5.0,
}
STAGE3_WEIGHTS = {
    "color": 1.0,
    "mask": 0.1,
    "eikonal": 0.1,
    "seam": 1.0,
    "laplacian_pyramid": 1.0,
    "perceptual": 0.5,  # retained slot; the perceptual term itself is not shipped
}

# seam sampling defaults
SEAM_EPSILON = 0.01
SEAM_HEIGHT_RANGE = (-0.05, 0.05)

# motion windows cover the preceding three frames at 25 fps capture
MOTION_WINDOW = 3
CAPTURE_FPS = 25.0
