"""Textured 2D Gaussian splatting: scenes, rendering, optimization and editing."""

from ._texgs import (
    Camera,
    IoError,
    NumericalError,
    Scene,
    Synthetic,
    ValidationError,
    View,
    circles,
    cli,
    make_synthetic,
    mean_psnr,
    optimize,
    psnr,
    render,
    ssim,
    stripes,
)

__all__ = [
    "Camera",
    "IoError",
    "NumericalError",
    "Scene",
    "Synthetic",
    "ValidationError",
    "View",
    "circles",
    "cli",
    "make_synthetic",
    "mean_psnr",
    "optimize",
    "psnr",
    "render",
    "ssim",
    "stripes",
]
