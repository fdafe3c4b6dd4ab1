#pragma once

#include "texgs/common.hpp"

namespace texgs {

// SSIM with an 11x11 Gaussian window (sigma 1.5), zero padding at the borders and
// C1 = 0.01^2, C2 = 0.03^2, averaged over every pixel and channel.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kPsnrCap = 100.0;

/// Mean SSIM of two images with identical shape (no quantization).
double structural_similarity(const Image& a, const Image& b);

/// Mean SSIM and its gradient with respect to every value of `a`.
double structural_similarity_with_gradient(const Image& a, const Image& b, Image& d_a);

double mean_squared_error(const Image& a, const Image& b);

/// Rounds to 8-bit levels and maps back to [0, 1] (values are clamped first).
Image quantize_8bit(const Image& image);

/// PSNR in dB after 8-bit quantization of both inputs; 100 for identical images.
double psnr(const Image& a, const Image& b);

/// PSNR over the pixels where mask > 0.5 (single-channel mask), after quantization.
double masked_psnr(const Image& a, const Image& b, const Image& mask);

/// SSIM after 8-bit quantization of both inputs.
double ssim(const Image& a, const Image& b);

} // namespace texgs
