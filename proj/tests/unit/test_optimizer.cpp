#include "test_support.hpp"

#include "texgs/metrics.hpp"
#include "texgs/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace texgs;
using texgs::test::Rng;

namespace {

Image random_target(Rng& rng, int w, int h) {
    Image img(w, h, 3);
    for (auto& v : img.data) {
        v = rng.uniform();
    }
    return img;
}

bool same_geometry(const Scene& a, const Scene& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a.gaussians[i];
        const auto& y = b.gaussians[i];
        if (x.position != y.position || x.rotation != y.rotation || x.scale != y.scale) {
            return false;
        }
    }
    return true;
}

std::vector<View> synthetic_views(const Dataset& ds, bool train) {
    return train ? ds.train : ds.test;
}

} // namespace

TEST_CASE("loss: identical images and a constant offset") {
    Rng rng(61);
    const auto img = random_target(rng, 16, 16);
    const auto zero = loss(img, img);
    CHECK(zero.l1 == 0.0);
    CHECK(zero.dssim == doctest::Approx(0.0).epsilon(1e-12).scale(1e-12));
    CHECK(zero.total == doctest::Approx(0.0).epsilon(1e-12).scale(1e-12));

    Image low(16, 16, 3);
    for (std::size_t i = 0; i < low.data.size(); ++i) {
        low.data[i] = 0.8 * img.data[i];
    }
    auto high = low;
    for (auto& v : high.data) {
        v += 0.1;
    }
    const auto r = loss(low, high);
    CHECK(r.l1 == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.dssim >= 0.0);
    CHECK(std::abs(r.total - (0.8 * r.l1 + 0.2 * r.dssim)) <= 1e-12);
    CHECK_THROWS_AS(loss(Image(4, 4, 3), Image(5, 4, 3)), ValidationError);
}

TEST_CASE("loss_with_gradient: matches loss and central differences") {
    Rng rng(62);
    const auto a = random_target(rng, 12, 10);
    const auto b = random_target(rng, 12, 10);
    Image grad;
    const auto r = loss_with_gradient(a, b, grad);
    CHECK(r.total == doctest::Approx(loss(a, b).total).epsilon(1e-14));
    for (std::size_t i = 0; i < a.data.size(); i += 7) {
        auto plus = a;
        auto minus = a;
        plus.data[i] += 1e-6;
        minus.data[i] -= 1e-6;
        const double fd = (loss(plus, b).total - loss(minus, b).total) / 2e-6;
        CHECK(grad.data[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-4));
    }
}

TEST_CASE("backward: analytic gradients match central differences") {
    Rng rng(63);
    for (int trial = 0; trial < 2; ++trial) {
        const auto scene = test::random_scene(rng, 8, 400, 1);
        const auto cam = test::front_camera(32, 32);
        const auto check = test::gradient_check(scene, cam, random_target(rng, 32, 32));
        INFO(check.worst);
        CHECK(check.checked > 1000);
        CHECK(check.failed == 0);
    }
}

TEST_CASE("backward: single opaque pixel on a texel center under L1") {
    // 1x1 image whose only ray hits the center texel of a 5x5 map head-on.
    Scene scene;
    scene.sh_degree = 1;
    TexturedGaussian g;
    g.opacity_logit = 40.0;
    g.sh_residual.assign(sh_residual_length(1), 0.0);
    scene.gaussians.push_back(g);
    allocate_with_texel_size(scene, 1.2);
    REQUIRE(scene.atlas.texel_count() == 25);
    for (std::int64_t t = 0; t < 25; ++t) {
        scene.atlas.set_texel(t, Rgb(0.3, 0.3, 0.3));
    }
    const auto cam = Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3::UnitY(), 0.5, 1, 1);
    Image target(1, 1, 3);
    target.set_rgb(0, 0, Rgb(0.8, 0.1, 0.8));

    GradientBuffer grads = GradientBuffer::like(scene);
    backward(scene, cam, target, grads, {0.0, 1});
    // l1 averages over H * W * 3 values.
    const double n = 3.0;
    CHECK(grads.d_texels[12 * 3 + 0] == doctest::Approx(-1.0 / n).epsilon(1e-12));
    CHECK(grads.d_texels[12 * 3 + 1] == doctest::Approx(1.0 / n).epsilon(1e-12));
    CHECK(grads.d_texels[12 * 3 + 2] == doctest::Approx(-1.0 / n).epsilon(1e-12));
    for (std::size_t i = 0; i < grads.d_texels.size(); ++i) {
        if (i / 3 != 12) {
            CHECK(grads.d_texels[i] == 0.0);
        }
    }
}

TEST_CASE("backward: a fully transparent scene gets no texel gradient") {
    Rng rng(64);
    auto scene = test::random_scene(rng, 10, 500);
    for (auto& g : scene.gaussians) {
        g.opacity_logit = -30.0;
    }
    GradientBuffer grads = GradientBuffer::like(scene);
    backward(scene, test::front_camera(24, 24), random_target(rng, 24, 24), grads);
    for (const double d : grads.d_texels) {
        CHECK(d == 0.0);
    }
}

TEST_CASE("backward: accumulation over views is linear") {
    Rng rng(65);
    const auto scene = test::random_scene(rng, 12, 600);
    const auto cam_a = test::front_camera(24, 24);
    const auto cam_b = Camera::look_at(Vec3(-0.4, 0.3, 2.5), Vec3::Zero(), Vec3::UnitY(), 0.8, 24, 24, 0.1, 10);
    const auto ta = random_target(rng, 24, 24);
    const auto tb = random_target(rng, 24, 24);

    GradientBuffer both = GradientBuffer::like(scene);
    backward(scene, cam_a, ta, both);
    backward(scene, cam_b, tb, both);
    GradientBuffer ga = GradientBuffer::like(scene);
    GradientBuffer gb = GradientBuffer::like(scene);
    backward(scene, cam_a, ta, ga);
    backward(scene, cam_b, tb, gb);
    ga += gb;
    for (std::size_t i = 0; i < both.d_texels.size(); ++i) {
        CHECK(std::abs(both.d_texels[i] - ga.d_texels[i]) <= 1e-12);
    }
    for (std::size_t i = 0; i < both.d_sh.size(); ++i) {
        CHECK(std::abs(both.d_sh[i] - ga.d_sh[i]) <= 1e-12);
    }
    for (std::size_t i = 0; i < both.d_opacity.size(); ++i) {
        CHECK(std::abs(both.d_opacity[i] - ga.d_opacity[i]) <= 1e-12);
    }
}

TEST_CASE("backward: thread count does not change the gradients") {
    Rng rng(66);
    const auto scene = test::random_scene(rng, 20, 1000);
    const auto cam = test::front_camera(40, 40);
    const auto target = random_target(rng, 40, 40);
    GradientBuffer one = GradientBuffer::like(scene);
    GradientBuffer four = GradientBuffer::like(scene);
    backward(scene, cam, target, one, {kDssimWeight, 1});
    backward(scene, cam, target, four, {kDssimWeight, 4});
    CHECK(one.d_texels == four.d_texels);
    CHECK(one.d_sh == four.d_sh);
    CHECK(one.d_opacity == four.d_opacity);
}

TEST_CASE("adam: first step, zero gradient, asymptotics") {
    const AdamConfig cfg;
    std::vector<double> params{0.5, -1.0, 2.0, 0.0};
    const std::vector<double> g{0.3, -2e-3, 40.0, 1e-9};
    AdamMoments m;
    m.resize(params.size());
    auto p = params;
    adam_update(p, g, m, 1, 1e-3, cfg);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(std::abs((p[i] - params[i]) - (-1e-3 * g[i] / (std::abs(g[i]) + 1e-8))) <= 1e-9);
    }

    std::vector<double> q{0.25, -3.0};
    const std::vector<double> zero(2, 0.0);
    AdamMoments mz;
    mz.resize(2);
    for (int step = 1; step <= 10; ++step) {
        adam_update(q, zero, mz, step, 1e-3, cfg);
    }
    CHECK(q == std::vector<double>{0.25, -3.0});

    std::vector<double> r{0.0};
    const std::vector<double> constant{-0.7};
    AdamMoments mc;
    mc.resize(1);
    double last = 0.0;
    for (int step = 1; step <= 5000; ++step) {
        const double before = r[0];
        adam_update(r, constant, mc, step, 1e-2, cfg);
        last = r[0] - before;
    }
    CHECK(last == doctest::Approx(1e-2).epsilon(1e-6));
}

TEST_CASE("adam_step: per-group learning rates and layout checks") {
    Rng rng(67);
    auto scene = test::random_scene(rng, 3, 60);
    const auto before = scene;
    auto grads = GradientBuffer::like(scene);
    for (auto& v : grads.d_texels) {
        v = 1.0;
    }
    for (auto& v : grads.d_sh) {
        v = 1.0;
    }
    for (auto& v : grads.d_opacity) {
        v = 1.0;
    }
    auto state = AdamState::like(scene);
    adam_step(scene, grads, state, 1);
    const AdamConfig cfg;
    CHECK(scene.atlas.texels[0] - before.atlas.texels[0] == doctest::Approx(-cfg.lr_texels).epsilon(1e-6));
    CHECK(scene.gaussians[1].sh_residual[2] - before.gaussians[1].sh_residual[2] ==
          doctest::Approx(-cfg.lr_sh).epsilon(1e-6));
    CHECK(scene.gaussians[2].opacity_logit - before.gaussians[2].opacity_logit ==
          doctest::Approx(-cfg.lr_opacity).epsilon(1e-6));
    CHECK(same_geometry(scene, before));

    auto wrong = GradientBuffer::like(test::random_scene(rng, 4, 80));
    CHECK_THROWS_AS(adam_step(scene, wrong, state, 2), ValidationError);
}

TEST_CASE("optimize: zero iterations leave the scene alone") {
    Rng rng(68);
    auto scene = test::random_scene(rng, 5, 200);
    const auto before = scene;
    const std::vector<View> views{{test::front_camera(16, 16), random_target(rng, 16, 16)}};
    const auto log = optimize(scene, views, views, OptimizeConfig{});
    CHECK(log.rows.empty());
    CHECK(log.to_csv() == std::string(TrainingLog::kCsvHeader) + "\n");
    CHECK(scene.atlas.texels == before.atlas.texels);
    CHECK(same_geometry(scene, before));
}

TEST_CASE("optimize: geometry is frozen, losses fall, runs are deterministic") {
    SyntheticParams params;
    params.kind = SyntheticKind::Grid;
    params.primitives = 4;
    params.width = 48;
    params.height = 48;
    params.train_views = 4;
    params.test_views = 1;
    params.texture_resolution = 64;
    const auto synth = make_synthetic(params, 3);
    const auto train = synthetic_views(synth.dataset, true);
    const auto test_views = synthetic_views(synth.dataset, false);

    auto run = [&](int threads) {
        Scene scene = synth.initial;
        allocate_textures(scene, 2000);
        init_from_sh0(scene);
        OptimizeConfig cfg;
        cfg.iterations = 300;
        cfg.eval_every = 100;
        cfg.seed = 9;
        cfg.threads = threads;
        auto log = optimize(scene, train, test_views, cfg);
        return std::pair{scene, log};
    };
    const auto [scene, log] = run(1);
    CHECK(same_geometry(scene, synth.initial));
    REQUIRE(log.rows.size() == 300);

    std::vector<double> window(3, 0.0);
    for (const auto& row : log.rows) {
        window[static_cast<std::size_t>((row.iteration - 1) / 100)] += row.loss.total / 100.0;
    }
    CHECK(window[1] <= window[0]);
    CHECK(window[2] <= window[1]);

    int evaluated = 0;
    for (const auto& row : log.rows) {
        evaluated += row.heldout_psnr.has_value();
    }
    CHECK(evaluated == 3);
    CHECK(*log.rows.back().heldout_psnr > *log.rows[99].heldout_psnr);

    const auto [again, again_log] = run(3);
    CHECK(again.atlas.texels == scene.atlas.texels);
    CHECK(again_log.to_csv() == log.to_csv());
}

TEST_CASE("optimize: non-finite loss is reported") {
    Rng rng(69);
    auto scene = test::random_scene(rng, 4, 100);
    scene.atlas.texels[0] = std::nan("");
    std::vector<View> views{{test::front_camera(16, 16), random_target(rng, 16, 16)}};
    OptimizeConfig cfg;
    cfg.iterations = 3;
    // The poisoned texel may sit outside the view; poison the target instead.
    views[0].image.data[5] = std::nan("");
    CHECK_THROWS_AS(optimize(scene, views, {}, cfg), NumericalError);
}
