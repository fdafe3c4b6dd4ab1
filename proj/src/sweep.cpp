#include "texgs/sweep.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

namespace texgs {

void prepare_textures(Scene& scene, std::int64_t budget) {
    allocate_textures(scene, budget);
    init_from_sh0(scene);
}

std::vector<SweepRow> run_sweep(const SweepConfig& config, const std::function<void(const SweepRow&)>& on_row) {
    if (config.gaussians.empty() || config.texels.empty()) {
        throw ValidationError("sweep needs at least one primitive count and one texel budget");
    }
    std::vector<SweepRow> rows;
    for (const int n : config.gaussians) {
        for (const std::int64_t budget : config.texels) {
            SweepRow row;
            row.gaussians = n;
            row.texels = budget;
            const auto start = std::chrono::steady_clock::now();
            try {
                SyntheticParams params = config.scene;
                params.primitives = n;
                params.threads = config.threads;
                const auto synthetic = make_synthetic(params, config.seed);
                Scene scene = synthetic.initial;
                prepare_textures(scene, budget);

                OptimizeConfig opt;
                opt.iterations = config.iterations;
                opt.eval_every = 0;
                opt.seed = config.seed;
                opt.threads = config.threads;
                opt.float_storage = config.float_storage;
                optimize(scene, synthetic.dataset.train, {}, opt);

                row.psnr = mean_psnr(scene, synthetic.dataset.test, config.threads);
                row.ssim = mean_ssim(scene, synthetic.dataset.test, config.threads);
            } catch (const Error& e) {
                row.status = e.what();
            }
            row.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (on_row) {
                on_row(row);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, bool timings) {
    std::ostringstream out;
    out << "gaussians,texels,psnr,ssim,seconds,status\n";
    for (const auto& row : rows) {
        std::string status = row.status;
        for (char& c : status) {
            if (c == ',' || c == '\n') {
                c = ';';
            }
        }
        out << row.gaussians << ',' << row.texels << ',';
        if (row.status == "ok") {
            out << std::setprecision(10) << row.psnr << ',' << row.ssim;
        } else {
            out << ',';
        }
        out << ',';
        if (timings) {
            out << std::fixed << std::setprecision(3) << row.seconds << std::defaultfloat;
        }
        out << ',' << status << '\n';
    }
    return out.str();
}

} // namespace texgs
