#pragma once

#include "texgs/renderer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace texgs {

inline constexpr double kDssimWeight = 0.2;

struct LossReport {
    double l1 = 0.0;
    double dssim = 0.0;
    double total = 0.0;
};

/// (1 - lambda) * L1 + lambda * (1 - SSIM) / 2, both terms averaged over all values.
LossReport loss(const Image& rendered, const Image& target, double lambda = kDssimWeight);

/// As loss(), also writing d(total)/d(rendered) into `d_rendered`.
LossReport loss_with_gradient(const Image& rendered, const Image& target, Image& d_rendered,
                              double lambda = kDssimWeight);

/// Gradient accumulators laid out like the optimizable parameters: atlas texels,
/// SH residuals (flattened, sh_stride values per primitive) and opacity logits.
/// Geometry is frozen and has no slot.
struct GradientBuffer {
    std::vector<double> d_texels;
    std::vector<double> d_sh;
    std::vector<double> d_opacity;
    int sh_stride = 0;

    static GradientBuffer like(const Scene& scene);
    void reset();
    GradientBuffer& operator+=(const GradientBuffer& other);
    [[nodiscard]] bool matches(const Scene& scene) const;
};

struct BackwardOptions {
    double lambda = kDssimWeight;
    int threads = 1;
};

/// Renders `camera`, scores it against `target` and adds the loss gradient to `grads`.
LossReport backward(const Scene& scene, const Camera& camera, const Image& target, GradientBuffer& grads,
                    const BackwardOptions& options = {});

struct AdamConfig {
    double lr_texels = 1e-3;
    double lr_sh = 2.5e-3 / 20.0;
    double lr_opacity = 5e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;

    void resize(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

struct AdamState {
    AdamMoments texels;
    AdamMoments sh;
    AdamMoments opacity;

    static AdamState like(const Scene& scene);
};

/// Bias-corrected Adam update of one parameter group. `step` is 1-based.
void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments, int step,
                 double lr, const AdamConfig& config);

/// One Adam step over every optimizable group of the scene.
void adam_step(Scene& scene, const GradientBuffer& grads, AdamState& state, int step,
               const AdamConfig& config = {});

struct View {
    Camera camera;
    Image image;
};

struct OptimizeConfig {
    int iterations = 0;
    int reinit_every = 100;
    int eval_every = 100;
    std::uint64_t seed = 0;
    double lambda = kDssimWeight;
    AdamConfig adam;
    int threads = 1;
    // Round optimized parameters to 32-bit floats after every step.
    bool float_storage = false;
    // Called after every re-initialization with the iteration and current scene.
    std::function<void(int, const Scene&)> on_checkpoint;
};

struct TrainingLogRow {
    int iteration = 0;
    LossReport loss;
    std::optional<double> heldout_psnr;
};

struct TrainingLog {
    std::vector<TrainingLogRow> rows;

    static constexpr const char* kCsvHeader = "iteration,l1,dssim,total,heldout_psnr";
    [[nodiscard]] std::string to_csv() const;
};

/// Mean quantized PSNR of renders against the views' images.
double mean_psnr(const Scene& scene, std::span<const View> views, int threads = 1);
double mean_ssim(const Scene& scene, std::span<const View> views, int threads = 1);

/// Texture/appearance optimization loop: render, loss, backward, Adam, with periodic
/// texture re-allocation. Geometry is never modified. Throws NumericalError on a
/// non-finite loss.
TrainingLog optimize(Scene& scene, std::span<const View> train, std::span<const View> heldout,
                     const OptimizeConfig& config);

} // namespace texgs
