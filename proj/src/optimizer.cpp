#include "texgs/optimizer.hpp"

#include "texgs/metrics.hpp"
#include "texgs/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace texgs {

LossReport loss(const Image& rendered, const Image& target, double lambda) {
    if (!rendered.same_shape(target) || rendered.empty()) {
        throw ValidationError("loss: rendered and target dimensions differ");
    }
    LossReport r;
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i) {
        sum += std::abs(rendered.data[i] - target.data[i]);
    }
    r.l1 = sum / static_cast<double>(rendered.data.size());
    r.dssim = std::max(0.0, 0.5 * (1.0 - structural_similarity(rendered, target)));
    r.total = (1.0 - lambda) * r.l1 + lambda * r.dssim;
    return r;
}

LossReport loss_with_gradient(const Image& rendered, const Image& target, Image& d_rendered, double lambda) {
    if (!rendered.same_shape(target) || rendered.empty()) {
        throw ValidationError("loss: rendered and target dimensions differ");
    }
    LossReport r;
    Image d_ssim;
    const double s = structural_similarity_with_gradient(rendered, target, d_ssim);
    const double n = static_cast<double>(rendered.data.size());
    d_rendered = Image(rendered.width, rendered.height, rendered.channels);
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i) {
        const double diff = rendered.data[i] - target.data[i];
        sum += std::abs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        d_rendered.data[i] = (1.0 - lambda) * sign / n - 0.5 * lambda * d_ssim.data[i];
    }
    r.l1 = sum / n;
    r.dssim = std::max(0.0, 0.5 * (1.0 - s));
    r.total = (1.0 - lambda) * r.l1 + lambda * r.dssim;
    return r;
}

GradientBuffer GradientBuffer::like(const Scene& scene) {
    GradientBuffer g;
    g.sh_stride = sh_residual_length(scene.sh_degree);
    g.d_texels.assign(scene.atlas.texels.size(), 0.0);
    g.d_sh.assign(scene.gaussians.size() * static_cast<std::size_t>(g.sh_stride), 0.0);
    g.d_opacity.assign(scene.gaussians.size(), 0.0);
    return g;
}

void GradientBuffer::reset() {
    std::fill(d_texels.begin(), d_texels.end(), 0.0);
    std::fill(d_sh.begin(), d_sh.end(), 0.0);
    std::fill(d_opacity.begin(), d_opacity.end(), 0.0);
}

GradientBuffer& GradientBuffer::operator+=(const GradientBuffer& other) {
    for (std::size_t i = 0; i < d_texels.size(); ++i) {
        d_texels[i] += other.d_texels[i];
    }
    for (std::size_t i = 0; i < d_sh.size(); ++i) {
        d_sh[i] += other.d_sh[i];
    }
    for (std::size_t i = 0; i < d_opacity.size(); ++i) {
        d_opacity[i] += other.d_opacity[i];
    }
    return *this;
}

bool GradientBuffer::matches(const Scene& scene) const {
    return d_texels.size() == scene.atlas.texels.size() && sh_stride == sh_residual_length(scene.sh_degree) &&
           d_sh.size() == scene.gaussians.size() * static_cast<std::size_t>(sh_stride) &&
           d_opacity.size() == scene.gaussians.size();
}

namespace {

struct HitShading {
    Rgb color;
    BilinearFootprint footprint;
    bool textured = false;
};

HitShading shade_hit(const Scene& scene, const RayHit& hit, const Vec3& dir) {
    const auto& g = scene.gaussians[hit.primitive];
    HitShading s;
    s.textured = g.textured();
    if (s.textured) {
        s.footprint = bilinear_footprint(g, world_to_uv(g, hit.point, scene.atlas.texel_size));
        s.color = sample_footprint(scene.atlas, s.footprint);
    } else {
        s.color = sh0_base_color(g);
    }
    s.color += eval_sh(g.sh_residual, dir);
    return s;
}

// Gradient contributions land either directly in a buffer or in an ordered log
// that is replayed later; both see the same sequence of additions.
struct DirectSink {
    GradientBuffer& grads;
    void texel(std::size_t i, double v) { grads.d_texels[i] += v; }
    void sh(std::size_t i, double v) { grads.d_sh[i] += v; }
    void opacity(std::size_t i, double v) { grads.d_opacity[i] += v; }
};

struct LogSink {
    enum Group : std::uint8_t { Texel, Sh, Opacity };
    struct Entry {
        std::size_t index;
        double value;
        Group group;
    };
    std::vector<Entry> entries;
    void texel(std::size_t i, double v) { entries.push_back({i, v, Texel}); }
    void sh(std::size_t i, double v) { entries.push_back({i, v, Sh}); }
    void opacity(std::size_t i, double v) { entries.push_back({i, v, Opacity}); }
    void replay(GradientBuffer& grads) const {
        for (const auto& e : entries) {
            auto& target = e.group == Texel ? grads.d_texels : (e.group == Sh ? grads.d_sh : grads.d_opacity);
            target[e.index] += e.value;
        }
    }
};

template <class Sink>
void backpropagate_pixel(const Scene& scene, const std::vector<RayHit>& hits, const Ray& ray,
                         const Rgb& d_color, std::size_t sh_stride, Sink& sink) {
    const int degree = scene.sh_degree;
    const auto basis = sh_basis_residual(degree, ray.direction);
    const int basis_count = sh_basis_count(degree) - 1;

    // behind = normalized radiance composited behind the current hit.
    Rgb behind = scene.background;
    for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
        const auto& g = scene.gaussians[it->primitive];
        const HitShading s = shade_hit(scene, *it, ray.direction);
        const double weight = it->transmittance * it->alpha;
        const Rgb d_c = weight * d_color;

        if (s.textured) {
            for (int k = 0; k < 4; ++k) {
                const std::size_t base = static_cast<std::size_t>(s.footprint.index[k]) * 3;
                const double w = s.footprint.weight[k];
                sink.texel(base, w * d_c.x());
                sink.texel(base + 1, w * d_c.y());
                sink.texel(base + 2, w * d_c.z());
            }
        }
        const std::size_t sh_base = static_cast<std::size_t>(it->primitive) * sh_stride;
        for (int b = 0; b < basis_count; ++b) {
            sink.sh(sh_base + 3 * b, basis[b] * d_c.x());
            sink.sh(sh_base + 3 * b + 1, basis[b] * d_c.y());
            sink.sh(sh_base + 3 * b + 2, basis[b] * d_c.z());
        }

        const double d_alpha = d_color.dot(it->transmittance * (s.color - behind));
        sink.opacity(it->primitive, d_alpha * it->alpha * (1.0 - g.opacity()));

        behind = it->alpha * s.color + (1.0 - it->alpha) * behind;
    }
}

} // namespace

LossReport backward(const Scene& scene, const Camera& camera, const Image& target, GradientBuffer& grads,
                    const BackwardOptions& options) {
    if (!grads.matches(scene)) {
        throw ValidationError("gradient buffer layout does not match the scene");
    }
    if (target.width != camera.width || target.height != camera.height || target.channels != 3) {
        throw ValidationError("target image does not match the camera");
    }
    const RenderOutput rendered = render(scene, camera, {options.threads});
    Image d_rendered;
    const LossReport report = loss_with_gradient(rendered.color, target, d_rendered, options.lambda);

    const ViewBinning binning(scene, camera);
    const auto sh_stride = static_cast<std::size_t>(grads.sh_stride);
    auto visit_rows = [&](int row_begin, int row_end, auto& sink) {
        std::vector<RayHit> hits;
        for (int y = row_begin; y < row_end; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                const Rgb d_color = d_rendered.rgb(x, y);
                if (d_color.isZero(0.0)) {
                    continue;
                }
                const Ray ray = camera.pixel_ray(x, y);
                trace_ray(scene, binning.candidates(x, y), ray, hits);
                backpropagate_pixel(scene, hits, ray, d_color, sh_stride, sink);
            }
        }
    };
    const int bands = band_count(camera.height, options.threads);
    if (bands == 1) {
        DirectSink sink{grads};
        visit_rows(0, camera.height, sink);
        return report;
    }
    // Replaying the per-band logs in band order reproduces the serial summation
    // exactly, so gradients do not depend on the thread count.
    std::vector<LogSink> logs(static_cast<std::size_t>(bands));
    parallel_bands(camera.height, options.threads, [&](int row_begin, int row_end, int band) {
        visit_rows(row_begin, row_end, logs[static_cast<std::size_t>(band)]);
    });
    for (const auto& log : logs) {
        log.replay(grads);
    }
    return report;
}

AdamState AdamState::like(const Scene& scene) {
    AdamState s;
    s.texels.resize(scene.atlas.texels.size());
    s.sh.resize(scene.gaussians.size() * static_cast<std::size_t>(sh_residual_length(scene.sh_degree)));
    s.opacity.resize(scene.gaussians.size());
    return s;
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments, int step,
                 double lr, const AdamConfig& config) {
    if (params.size() != grads.size() || moments.m.size() != params.size() || moments.v.size() != params.size()) {
        throw ValidationError("adam_update: parameter, gradient and state sizes differ");
    }
    if (step < 1) {
        throw ValidationError("adam_update: step is 1-based");
    }
    const double correction1 = 1.0 - std::pow(config.beta1, step);
    const double correction2 = 1.0 - std::pow(config.beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = moments.m[i];
        double& v = moments.v[i];
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

void adam_step(Scene& scene, const GradientBuffer& grads, AdamState& state, int step, const AdamConfig& config) {
    if (!grads.matches(scene)) {
        throw ValidationError("adam_step: gradient buffer layout does not match the scene");
    }
    adam_update(scene.atlas.texels, grads.d_texels, state.texels, step, config.lr_texels, config);

    std::vector<double> sh(grads.d_sh.size());
    std::vector<double> opacity(scene.gaussians.size());
    const auto stride = static_cast<std::size_t>(grads.sh_stride);
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        std::copy(scene.gaussians[i].sh_residual.begin(), scene.gaussians[i].sh_residual.end(),
                  sh.begin() + static_cast<std::ptrdiff_t>(i * stride));
        opacity[i] = scene.gaussians[i].opacity_logit;
    }
    adam_update(sh, grads.d_sh, state.sh, step, config.lr_sh, config);
    adam_update(opacity, grads.d_opacity, state.opacity, step, config.lr_opacity, config);
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        std::copy_n(sh.begin() + static_cast<std::ptrdiff_t>(i * stride), stride,
                    scene.gaussians[i].sh_residual.begin());
        scene.gaussians[i].opacity_logit = opacity[i];
    }
}

std::string TrainingLog::to_csv() const {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,", row.iteration, row.loss.l1, row.loss.dssim,
                      row.loss.total);
        out << buf;
        if (row.heldout_psnr) {
            std::snprintf(buf, sizeof(buf), "%.6f", *row.heldout_psnr);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

double mean_psnr(const Scene& scene, std::span<const View> views, int threads) {
    if (views.empty()) {
        throw ValidationError("mean_psnr needs at least one view");
    }
    double sum = 0.0;
    for (const auto& view : views) {
        sum += psnr(render(scene, view.camera, {threads}).color, view.image);
    }
    return sum / static_cast<double>(views.size());
}

double mean_ssim(const Scene& scene, std::span<const View> views, int threads) {
    if (views.empty()) {
        throw ValidationError("mean_ssim needs at least one view");
    }
    double sum = 0.0;
    for (const auto& view : views) {
        sum += ssim(render(scene, view.camera, {threads}).color, view.image);
    }
    return sum / static_cast<double>(views.size());
}

namespace {

void round_to_float(Scene& scene) {
    for (auto& v : scene.atlas.texels) {
        v = to_float_precision(v);
    }
    for (auto& g : scene.gaussians) {
        for (auto& c : g.sh_residual) {
            c = to_float_precision(c);
        }
        g.opacity_logit = to_float_precision(g.opacity_logit);
    }
}

// Moves texel moments of primitives that kept their maps; reallocated maps start at zero.
void remap_texel_moments(const Scene& before, const Scene& after, const std::vector<bool>& preserved,
                         AdamMoments& moments) {
    AdamMoments next;
    next.resize(after.atlas.texels.size());
    for (std::size_t i = 0; i < preserved.size(); ++i) {
        if (!preserved[i]) {
            continue;
        }
        const auto src = static_cast<std::ptrdiff_t>(before.gaussians[i].tex_offset * 3);
        const auto dst = static_cast<std::ptrdiff_t>(after.gaussians[i].tex_offset * 3);
        const auto len = static_cast<std::ptrdiff_t>(after.gaussians[i].texel_count() * 3);
        std::copy_n(moments.m.begin() + src, len, next.m.begin() + dst);
        std::copy_n(moments.v.begin() + src, len, next.v.begin() + dst);
    }
    moments = std::move(next);
}

} // namespace

TrainingLog optimize(Scene& scene, std::span<const View> train, std::span<const View> heldout,
                     const OptimizeConfig& config) {
    if (config.iterations < 0) {
        throw ValidationError("iteration count must be non-negative");
    }
    TrainingLog log;
    if (config.iterations == 0) {
        return log;
    }
    if (train.empty()) {
        throw ValidationError("optimize needs at least one training view");
    }
    check_consistency(scene);
    if (!scene.textured()) {
        throw ValidationError("optimize needs an allocated, initialized atlas");
    }

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    auto next_view = [&]() -> const View& {
        if (cursor == order.size()) {
            order.resize(train.size());
            for (std::size_t i = 0; i < order.size(); ++i) {
                order[i] = i;
            }
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[rng() % i]);
            }
            cursor = 0;
        }
        return train[order[cursor++]];
    };

    AdamState state = AdamState::like(scene);
    GradientBuffer grads = GradientBuffer::like(scene);
    const BackwardOptions backward_options{config.lambda, config.threads};

    for (int iteration = 1; iteration <= config.iterations; ++iteration) {
        const View& view = next_view();
        grads.reset();
        TrainingLogRow row;
        row.iteration = iteration;
        row.loss = backward(scene, view.camera, view.image, grads, backward_options);
        if (!std::isfinite(row.loss.total)) {
            std::ostringstream msg;
            msg << "non-finite loss at iteration " << iteration << " (l1=" << row.loss.l1
                << ", dssim=" << row.loss.dssim << ")";
            throw NumericalError(msg.str());
        }
        adam_step(scene, grads, state, iteration, config.adam);
        if (config.float_storage) {
            round_to_float(scene);
        }

        if (config.reinit_every > 0 && iteration % config.reinit_every == 0 && iteration < config.iterations) {
            const Scene before = scene;
            const auto preserved = reinit_resample_budget(scene);
            remap_texel_moments(before, scene, preserved, state.texels);
            grads = GradientBuffer::like(scene);
            if (config.on_checkpoint) {
                config.on_checkpoint(iteration, scene);
            }
        }

        const bool evaluate = !heldout.empty() && ((config.eval_every > 0 && iteration % config.eval_every == 0) ||
                                                   iteration == config.iterations);
        if (evaluate) {
            row.heldout_psnr = mean_psnr(scene, heldout, config.threads);
        }
        log.rows.push_back(row);
    }
    return log;
}

} // namespace texgs
