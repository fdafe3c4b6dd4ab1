#pragma once

#include "texgs/synthetic.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace texgs {

/// Grid of independent optimizations over primitive counts and texel budgets. Each
/// cell builds its synthetic scene from the same seed, allocates `texels`, initializes
/// from the degree-0 SH and optimizes from scratch.
struct SweepConfig {
    SyntheticParams scene;
    std::vector<int> gaussians;
    std::vector<std::int64_t> texels;
    int iterations = 300;
    std::uint64_t seed = 0;
    int threads = 1;
    bool float_storage = false;
};

struct SweepRow {
    int gaussians = 0;
    std::int64_t texels = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double seconds = 0.0;
    // "ok", or the failure message of a cell that could not be run.
    std::string status = "ok";
};

/// Allocates `budget` texels and fills them from each primitive's degree-0 SH.
void prepare_textures(Scene& scene, std::int64_t budget);

/// Runs every (gaussians, texels) cell in row-major order. Failing cells are recorded
/// with their status and the sweep continues. `on_row` sees each row as it finishes.
std::vector<SweepRow> run_sweep(const SweepConfig& config,
                                const std::function<void(const SweepRow&)>& on_row = {});

/// CSV with header gaussians,texels,psnr,ssim,seconds,status. Without timings the
/// seconds column is left empty so reruns are byte-identical.
std::string sweep_csv(const std::vector<SweepRow>& rows, bool timings = true);

} // namespace texgs
