#include "test_support.hpp"

#include "texgs/editing.hpp"

#include <doctest.h>

#include <cmath>

using namespace texgs;
using texgs::test::Rng;

namespace {

const Rgb kRed(1, 0, 0);
const Rgb kGreen(0, 1, 0);

TexturedGaussian opaque_plane(const Vec3& mu, double scale) {
    TexturedGaussian g;
    g.position = mu;
    g.scale = Vec2(scale, scale);
    g.opacity_logit = 40.0;
    g.sh_residual.assign(sh_residual_length(1), 0.0);
    return g;
}

Scene red_plane_scene(double texel_size) {
    Scene scene;
    scene.sh_degree = 1;
    scene.gaussians.push_back(opaque_plane(Vec3::Zero(), 1.0));
    allocate_with_texel_size(scene, texel_size);
    for (std::int64_t t = 0; t < scene.atlas.texel_count(); ++t) {
        scene.atlas.set_texel(t, kRed);
    }
    return scene;
}

Camera edit_camera(int size) {
    return Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3::UnitY(), 0.7, size, size, 0.1, 10.0);
}

EditImage constant_edit(const Camera& cam, const Rgb& c, double a) {
    EditImage edit{Image(cam.width, cam.height, 4), cam};
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            edit.rgba.at(x, y, 0) = c.x();
            edit.rgba.at(x, y, 1) = c.y();
            edit.rgba.at(x, y, 2) = c.z();
            edit.rgba.at(x, y, 3) = a;
        }
    }
    return edit;
}

bool near(const Rgb& a, const Rgb& b, double tol) { return (a - b).cwiseAbs().maxCoeff() <= tol; }

} // namespace

TEST_CASE("paint: opaque green edit replaces every reached texel") {
    auto scene = red_plane_scene(0.25);
    const auto cam = edit_camera(64);
    paint(scene, constant_edit(cam, kGreen, 1.0));
    int green = 0;
    for (std::int64_t t = 0; t < scene.atlas.texel_count(); ++t) {
        const Rgb c = scene.atlas.texel(t);
        if (c == kRed) {
            continue;
        }
        CHECK(near(c, kGreen, 1e-12));
        ++green;
    }
    CHECK(green > scene.atlas.texel_count() / 10);
}

TEST_CASE("paint: zero coverage changes nothing") {
    auto scene = red_plane_scene(0.25);
    const auto before = scene.atlas.texels;
    paint(scene, constant_edit(edit_camera(48), kGreen, 0.0));
    CHECK(scene.atlas.texels == before);
}

TEST_CASE("paint: half coverage blends evenly over one opaque layer") {
    auto scene = red_plane_scene(0.25);
    paint(scene, constant_edit(edit_camera(96), kGreen, 0.5));
    int blended = 0;
    for (std::int64_t t = 0; t < scene.atlas.texel_count(); ++t) {
        const Rgb c = scene.atlas.texel(t);
        if (c == kRed) {
            continue;
        }
        CHECK(near(c, Rgb(0.5, 0.5, 0), 1e-9));
        ++blended;
    }
    CHECK(blended > 0);
}

TEST_CASE("paint: occluded primitive keeps its texels bit-exactly") {
    auto scene = red_plane_scene(0.25);
    scene.gaussians.push_back(opaque_plane(Vec3(0.1, -0.1, 0.5), 0.4));
    scene.gaussians.front().scale = Vec2(2.0, 2.0);
    allocate_with_texel_size(scene, 0.25);
    Rng rng(71);
    for (auto& v : scene.atlas.texels) {
        v = rng.uniform();
    }
    const auto hidden_begin = static_cast<std::size_t>(scene.atlas.prefix[1]) * 3;
    const std::vector<double> hidden(scene.atlas.texels.begin() + static_cast<std::ptrdiff_t>(hidden_begin),
                                     scene.atlas.texels.end());
    const auto front_before = std::vector<double>(scene.atlas.texels.begin(),
                                                  scene.atlas.texels.begin() + static_cast<std::ptrdiff_t>(hidden_begin));
    paint(scene, constant_edit(edit_camera(64), kGreen, 1.0));
    CHECK(std::equal(hidden.begin(), hidden.end(),
                     scene.atlas.texels.begin() + static_cast<std::ptrdiff_t>(hidden_begin)));
    CHECK_FALSE(std::equal(front_before.begin(), front_before.end(), scene.atlas.texels.begin()));
}

TEST_CASE("paint: convex, idempotent for opaque edits, texels only (property)") {
    Rng rng(72);
    for (int trial = 0; trial < 5; ++trial) {
        auto scene = test::random_scene(rng, 15, 1500);
        const auto cam = test::front_camera(40, 40);
        EditImage edit{Image(40, 40, 4), cam};
        double lo = 1.0;
        double hi = 0.0;
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 40; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double v = rng.uniform();
                    edit.rgba.at(x, y, c) = v;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                edit.rgba.at(x, y, 3) = rng.uniform();
            }
        }
        const auto before = scene;
        paint(scene, edit);
        for (std::size_t i = 0; i < scene.atlas.texels.size(); ++i) {
            const double orig = before.atlas.texels[i];
            CHECK(scene.atlas.texels[i] >= std::min(lo, orig) - 1e-12);
            CHECK(scene.atlas.texels[i] <= std::max(hi, orig) + 1e-12);
        }
        for (std::size_t g = 0; g < scene.size(); ++g) {
            const auto& a = scene.gaussians[g];
            const auto& b = before.gaussians[g];
            CHECK(a.position == b.position);
            CHECK(a.rotation == b.rotation);
            CHECK(a.scale == b.scale);
            CHECK(a.opacity_logit == b.opacity_logit);
            CHECK(a.sh_residual == b.sh_residual);
        }

        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 40; ++x) {
                edit.rgba.at(x, y, 3) = 1.0;
            }
        }
        auto once = before;
        paint(once, edit);
        auto twice = once;
        paint(twice, edit);
        for (std::size_t i = 0; i < once.atlas.texels.size(); ++i) {
            CHECK(std::abs(once.atlas.texels[i] - twice.atlas.texels[i]) <= 1e-9);
        }
    }
}

TEST_CASE("paint: thread count does not change the result") {
    Rng rng(73);
    auto a = test::random_scene(rng, 20, 2000);
    auto b = a;
    const auto cam = test::front_camera(48, 48);
    EditImage edit{Image(48, 48, 4), cam};
    for (auto& v : edit.rgba.data) {
        v = rng.uniform();
    }
    paint(a, edit, kPaintDepthTolerance, 1);
    paint(b, edit, kPaintDepthTolerance, 4);
    CHECK(a.atlas.texels == b.atlas.texels);
}

TEST_CASE("paint: edit and camera dimensions must agree") {
    auto scene = red_plane_scene(0.5);
    auto edit = constant_edit(edit_camera(32), kGreen, 1.0);
    edit.rgba = Image(31, 32, 4);
    CHECK_THROWS_AS(paint(scene, edit), ValidationError);
    edit.rgba = Image(32, 32, 3);
    CHECK_THROWS_AS(paint(scene, edit), ValidationError);
}

TEST_CASE("builtin_circles: lattice points, half-unit offset, R + B = 1") {
    CHECK(builtin_circles(Vec3(2, -1, 0)) == Rgb(0.5, 0, 0.5));
    const Rgb c = builtin_circles(Vec3(0.5, 0, 0));
    CHECK(c.x() == doctest::Approx(0.5 * (std::sin(0.5) + 1)).epsilon(1e-15));
    CHECK(c.x() == doctest::Approx(0.7397).epsilon(1e-4));
    CHECK(c.z() == doctest::Approx(0.2603).epsilon(1e-3));
    Rng rng(74);
    for (int i = 0; i < 10000; ++i) {
        const Rgb v = builtin_circles(Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)));
        CHECK(std::abs(v.x() + v.z() - 1.0) <= 1e-12);
        CHECK(v.y() == 0.0);
    }
}

TEST_CASE("builtin_stripes: origin and quarter period") {
    CHECK(builtin_stripes(Vec3::Zero()) == Rgb(0.5, 0.5, 0.5));
    const Rgb c = builtin_stripes(Vec3(std::numbers::pi / 2, 0, 0));
    CHECK(c.x() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.y() == 0.5);
    CHECK(c.z() == 0.5);
}

TEST_CASE("retexture: constant, texel centers, idempotence, SH flag") {
    Rng rng(75);
    auto scene = test::random_scene(rng, 6, 600);
    retexture(scene, [](const Vec3&) { return Rgb(1, 1, 1); });
    for (const double v : scene.atlas.texels) {
        CHECK(v == 1.0);
    }

    retexture(scene, builtin_stripes);
    const auto& g = scene.gaussians[2];
    const auto dims = allocate_dims(g.scale.x(), g.scale.y(), scene.atlas.texel_size);
    const std::int64_t t = scene.atlas.prefix[2] + 1 * dims.width + 2;
    CHECK(scene.atlas.texel(t) == builtin_stripes(uv_to_world(g, 2, 1, scene.atlas.texel_size)));

    auto again = scene;
    retexture(again, builtin_stripes);
    CHECK(again.atlas.texels == scene.atlas.texels);
    CHECK(again.gaussians[0].sh_residual == scene.gaussians[0].sh_residual);

    retexture(again, builtin_circles, true);
    for (const auto& p : again.gaussians) {
        for (const double c : p.sh_residual) {
            CHECK(c == 0.0);
        }
    }
}
