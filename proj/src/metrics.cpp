#include "texgs/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace texgs {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    if (!a.same_shape(b) || a.empty()) {
        throw ValidationError("image dimensions differ (" + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                              std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                              std::to_string(b.channels) + ")");
    }
}

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (auto& v : w) {
        v /= sum;
    }
    return w;
}

// Separable zero-padded "same" Gaussian blur of one plane (w*h values). The kernel is
// symmetric, so this operator is its own adjoint.
std::vector<double> blur(const std::vector<double>& in, int w, int h) {
    static const auto kernel = gaussian_window();
    constexpr int r = kSsimWindow / 2;
    std::vector<double> tmp(in.size(), 0.0);
    std::vector<double> out(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* row = &in[static_cast<std::size_t>(y) * w];
        double* dst = &tmp[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            const int k0 = std::max(0, r - x);
            const int k1 = std::min(kSsimWindow - 1, w - 1 - x + r);
            for (int k = k0; k <= k1; ++k) {
                acc += kernel[k] * row[x + k - r];
            }
            dst[x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        const int k0 = std::max(0, r - y);
        const int k1 = std::min(kSsimWindow - 1, h - 1 - y + r);
        double* dst = &out[static_cast<std::size_t>(y) * w];
        for (int k = k0; k <= k1; ++k) {
            const double kw = kernel[k];
            const double* src = &tmp[static_cast<std::size_t>(y + k - r) * w];
            for (int x = 0; x < w; ++x) {
                dst[x] += kw * src[x];
            }
        }
    }
    return out;
}

std::vector<double> channel_plane(const Image& img, int c) {
    std::vector<double> plane(img.pixel_count());
    for (std::size_t i = 0; i < plane.size(); ++i) {
        plane[i] = img.data[i * img.channels + c];
    }
    return plane;
}

struct SsimMoments {
    std::vector<double> mu_a, mu_b, e_aa, e_bb, e_ab;
};

SsimMoments moments(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    return {blur(a, w, h), blur(b, w, h), blur(aa, w, h), blur(bb, w, h), blur(ab, w, h)};
}

double ssim_impl(const Image& a, const Image& b, Image* d_a) {
    require_same_shape(a, b);
    const int w = a.width;
    const int h = a.height;
    const double total = static_cast<double>(a.data.size());
    double sum = 0.0;
    if (d_a != nullptr) {
        *d_a = Image(w, h, a.channels);
    }
    for (int c = 0; c < a.channels; ++c) {
        const auto pa = channel_plane(a, c);
        const auto pb = channel_plane(b, c);
        const auto m = moments(pa, pb, w, h);
        const std::size_t n = pa.size();
        std::vector<double> g_mu(n), g_aa(n), g_ab(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double mu_a = m.mu_a[i];
            const double mu_b = m.mu_b[i];
            const double var_a = m.e_aa[i] - mu_a * mu_a;
            const double var_b = m.e_bb[i] - mu_b * mu_b;
            const double cov = m.e_ab[i] - mu_a * mu_b;
            const double n1 = 2.0 * mu_a * mu_b + kSsimC1;
            const double n2 = 2.0 * cov + kSsimC2;
            const double d1 = mu_a * mu_a + mu_b * mu_b + kSsimC1;
            const double d2 = var_a + var_b + kSsimC2;
            const double s = (n1 * n2) / (d1 * d2);
            sum += s;
            if (d_a != nullptr) {
                // Partials of s w.r.t. the blurred moments mu_a, E[a^2], E[ab], scaled
                // by d(mean)/d(s) = 1/total.
                const double dn1 = 2.0 * mu_b;
                const double dn2 = -2.0 * mu_b;
                const double dd1 = 2.0 * mu_a;
                const double dd2 = -2.0 * mu_a;
                const double den = d1 * d2;
                g_mu[i] = ((dn1 * n2 + n1 * dn2) - s * (dd1 * d2 + d1 * dd2)) / den / total;
                g_aa[i] = -s / d2 / total;
                g_ab[i] = 2.0 * n1 / den / total;
            }
        }
        if (d_a != nullptr) {
            const auto b_mu = blur(g_mu, w, h);
            const auto b_aa = blur(g_aa, w, h);
            const auto b_ab = blur(g_ab, w, h);
            for (std::size_t i = 0; i < n; ++i) {
                d_a->data[i * a.channels + c] = b_mu[i] + 2.0 * pa[i] * b_aa[i] + pb[i] * b_ab[i];
            }
        }
    }
    return sum / total;
}

} // namespace

double structural_similarity(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }

double structural_similarity_with_gradient(const Image& a, const Image& b, Image& d_a) {
    return ssim_impl(a, b, &d_a);
}

double mean_squared_error(const Image& a, const Image& b) {
    require_same_shape(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

Image quantize_8bit(const Image& image) {
    Image out = image;
    for (auto& v : out.data) {
        v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    }
    return out;
}

namespace {

double psnr_from_mse(double mse) {
    if (mse <= 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

} // namespace

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b);
    return psnr_from_mse(mean_squared_error(quantize_8bit(a), quantize_8bit(b)));
}

double masked_psnr(const Image& a, const Image& b, const Image& mask) {
    require_same_shape(a, b);
    if (mask.width != a.width || mask.height != a.height || mask.channels != 1) {
        throw ValidationError("mask must be single-channel with the image's dimensions");
    }
    const Image qa = quantize_8bit(a);
    const Image qb = quantize_8bit(b);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < a.pixel_count(); ++p) {
        if (mask.data[p] <= 0.5) {
            continue;
        }
        for (int c = 0; c < a.channels; ++c) {
            const double d = qa.data[p * a.channels + c] - qb.data[p * a.channels + c];
            sum += d * d;
            ++count;
        }
    }
    if (count == 0) {
        throw ValidationError("mask selects no pixels");
    }
    return psnr_from_mse(sum / static_cast<double>(count));
}

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b);
    return structural_similarity(quantize_8bit(a), quantize_8bit(b));
}

} // namespace texgs
