#include "commands.hpp"
#include "texgs/editing.hpp"
#include "texgs/metrics.hpp"
#include "texgs/renderer.hpp"
#include "texgs/scene_io.hpp"
#include "texgs/sweep.hpp"
#include "texgs/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace texgs;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Image& img) {
    Array out({img.height, img.width, img.channels});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

Image from_numpy(const Array& a) {
    if (a.ndim() != 3 && a.ndim() != 2) {
        throw ValidationError("expected an (H, W) or (H, W, C) array");
    }
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    Image img(w, h, c);
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

ProceduralTexture pattern(const py::object& p) {
    if (py::isinstance<py::str>(p)) {
        const auto name = p.cast<std::string>();
        if (name == "circles") {
            return builtin_circles;
        }
        if (name == "stripes") {
            return builtin_stripes;
        }
        throw ValidationError("unknown pattern '" + name + "'");
    }
    auto fn = p.cast<std::function<Rgb(const Vec3&)>>();
    return fn;
}

} // namespace

PYBIND11_MODULE(_texgs, m) {
    m.doc() = "Textured 2D Gaussian splatting";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<Camera>(m, "Camera")
        .def_static("look_at", &Camera::look_at, py::arg("eye"), py::arg("target"), py::arg("up"),
                    py::arg("fov_x"), py::arg("width"), py::arg("height"), py::arg("near") = 0.01,
                    py::arg("far") = 100.0)
        .def_static(
            "from_opengl",
            [](const Mat4& c2w, double fov_x, int w, int h, double near, double far) {
                return Camera::from_fov(opengl_to_internal(c2w), fov_x, w, h, near, far);
            },
            py::arg("camera_to_world"), py::arg("fov_x"), py::arg("width"), py::arg("height"),
            py::arg("near") = 0.01, py::arg("far") = 100.0)
        .def_readonly("width", &Camera::width)
        .def_readonly("height", &Camera::height)
        .def_readonly("fx", &Camera::fx)
        .def_readonly("fy", &Camera::fy)
        .def_property_readonly("center", &Camera::center)
        .def_readonly("camera_to_world", &Camera::camera_to_world);

    py::class_<Scene>(m, "Scene")
        .def(py::init<>())
        .def_static("load", &load_scene, py::arg("path"))
        .def_static("import_ply", &import_splat_ply, py::arg("path"))
        .def("save", [](const Scene& s, const std::filesystem::path& p) { save_scene(s, p); })
        .def("export_ply", [](const Scene& s, const std::filesystem::path& p) { export_splat_ply(s, p); })
        .def("to_bytes",
             [](const Scene& s) {
                 const auto b = encode_scene(s);
                 return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
             })
        .def_static("from_bytes",
                    [](const py::bytes& b) {
                        const std::string s = b;
                        return decode_scene(std::vector<std::uint8_t>(s.begin(), s.end()));
                    })
        .def("__len__", &Scene::size)
        .def_property_readonly("textured", &Scene::textured)
        .def_readwrite("sh_degree", &Scene::sh_degree)
        .def_readwrite("background", &Scene::background)
        .def_property_readonly("texel_count", [](const Scene& s) { return s.atlas.texel_count(); })
        .def_property_readonly("texel_size", [](const Scene& s) { return s.atlas.texel_size; })
        .def_property(
            "texels",
            [](const Scene& s) {
                Array out({static_cast<py::ssize_t>(s.atlas.texel_count()), py::ssize_t{3}});
                std::copy(s.atlas.texels.begin(), s.atlas.texels.end(), out.mutable_data());
                return out;
            },
            [](Scene& s, const Array& a) {
                if (static_cast<std::size_t>(a.size()) != s.atlas.texels.size()) {
                    throw ValidationError("texel array has " + std::to_string(a.size()) + " values, atlas has " +
                                          std::to_string(s.atlas.texels.size()));
                }
                std::copy(a.data(), a.data() + a.size(), s.atlas.texels.begin());
            })
        .def_property_readonly("positions",
                               [](const Scene& s) {
                                   Array out({static_cast<py::ssize_t>(s.size()), py::ssize_t{3}});
                                   auto* p = out.mutable_data();
                                   for (const auto& g : s.gaussians) {
                                       *p++ = g.position.x();
                                       *p++ = g.position.y();
                                       *p++ = g.position.z();
                                   }
                                   return out;
                               })
        .def_property_readonly("texture_dims",
                               [](const Scene& s) {
                                   std::vector<std::pair<int, int>> dims;
                                   for (const auto& g : s.gaussians) {
                                       dims.emplace_back(g.tex_width, g.tex_height);
                                   }
                                   return dims;
                               })
        .def("allocate_textures", [](Scene& s, std::int64_t budget) { allocate_textures(s, budget); },
             py::arg("budget"))
        .def("prepare_textures", [](Scene& s, std::int64_t budget) { prepare_textures(s, budget); },
             py::arg("budget"))
        .def("init_from_sh0", [](Scene& s) { init_from_sh0(s); })
        .def("reinit_resample", [](Scene& s, double texel_size) { return reinit_resample(s, texel_size); },
             py::arg("texel_size"))
        .def(
            "retexture", [](Scene& s, const py::object& p, bool zero_sh) { retexture(s, pattern(p), zero_sh); },
            py::arg("pattern"), py::arg("zero_sh") = false)
        .def(
            "paint",
            [](Scene& s, const Array& rgba, const Camera& cam, double tolerance, int threads) {
                paint(s, EditImage{from_numpy(rgba), cam}, tolerance, threads);
            },
            py::arg("rgba"), py::arg("camera"), py::arg("depth_tolerance") = kPaintDepthTolerance,
            py::arg("threads") = 1)
        .def("copy", [](const Scene& s) { return Scene(s); });

    py::class_<View>(m, "View")
        .def(py::init([](const Camera& c, const Array& img) { return View{c, from_numpy(img)}; }),
             py::arg("camera"), py::arg("image"))
        .def_readonly("camera", &View::camera)
        .def_property_readonly("image", [](const View& v) { return to_numpy(v.image); });

    py::class_<SyntheticScene>(m, "Synthetic")
        .def_readonly("ground_truth", &SyntheticScene::ground_truth)
        .def_readonly("initial", &SyntheticScene::initial)
        .def_property_readonly("train", [](const SyntheticScene& s) { return s.dataset.train; })
        .def_property_readonly("test", [](const SyntheticScene& s) { return s.dataset.test; })
        .def_readonly("fov_x", &SyntheticScene::fov_x);

    m.def(
        "make_synthetic",
        [](const std::string& kind, int primitives, int width, int height, int train_views, int test_views,
           int texture_resolution, std::uint64_t seed) {
            SyntheticParams p;
            p.kind = parse_synthetic_kind(kind);
            p.primitives = primitives;
            p.width = width;
            p.height = height;
            p.train_views = train_views;
            p.test_views = test_views;
            p.texture_resolution = texture_resolution;
            return make_synthetic(p, seed);
        },
        py::arg("kind") = "plane", py::arg("primitives") = 1, py::arg("width") = 128, py::arg("height") = 128,
        py::arg("train_views") = 8, py::arg("test_views") = 2, py::arg("texture_resolution") = 256,
        py::arg("seed") = 0);

    m.def(
        "render",
        [](const Scene& s, const Camera& cam, int threads) {
            RenderOptions opt;
            opt.threads = threads;
            RenderOutput out;
            {
                py::gil_scoped_release release;
                out = render(s, cam, opt);
            }
            py::dict d;
            d["color"] = to_numpy(out.color);
            d["alpha"] = to_numpy(out.alpha);
            d["depth"] = to_numpy(out.median_depth);
            return d;
        },
        py::arg("scene"), py::arg("camera"), py::arg("threads") = 1);

    m.def(
        "optimize",
        [](Scene& s, const std::vector<View>& train, const std::vector<View>& heldout, int iterations,
           int eval_every, std::uint64_t seed, int threads) {
            OptimizeConfig cfg;
            cfg.iterations = iterations;
            cfg.eval_every = eval_every;
            cfg.seed = seed;
            cfg.threads = threads;
            TrainingLog log;
            {
                py::gil_scoped_release release;
                log = optimize(s, train, heldout, cfg);
            }
            return log.to_csv();
        },
        py::arg("scene"), py::arg("train"), py::arg("heldout") = std::vector<View>{}, py::arg("iterations"),
        py::arg("eval_every") = 100, py::arg("seed") = 0, py::arg("threads") = 1,
        "Optimizes texels, SH residuals and opacities in place; returns the training log as CSV.");

    m.def("mean_psnr", [](const Scene& s, const std::vector<View>& v) { return mean_psnr(s, v); });
    m.def("psnr", [](const Array& a, const Array& b) { return psnr(from_numpy(a), from_numpy(b)); });
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(from_numpy(a), from_numpy(b)); });
    m.def("circles", &builtin_circles, py::arg("point"));
    m.def("stripes", &builtin_stripes, py::arg("point"));

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line interface in-process; returns (exit_code, stdout, stderr).");
}
