#include "commands.hpp"

#include "texgs/dataset.hpp"
#include "texgs/editing.hpp"
#include "texgs/image_io.hpp"
#include "texgs/metrics.hpp"
#include "texgs/scene_io.hpp"
#include "texgs/sweep.hpp"
#include "texgs/synthetic.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace texgs::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormats =
    "\nFile formats:\n"
    "  scene     native GSTX, version 1 (little-endian, 32-bit floats); .ply inputs are read as\n"
    "            binary_little_endian 1.0 splat PLY (x y z scale_* rot_* opacity f_dc_* f_rest_*)\n"
    "  images    8-bit PNG in and out; depth maps as 16-bit grayscale PNG\n"
    "  datasets  Blender-synthetic transforms JSON (camera_angle_x, frames[].file_path,\n"
    "            frames[].transform_matrix, OpenGL camera axes), directory or single file\n"
    "\nExit codes: 0 success, 2 invalid input or I/O failure, 3 numerical failure.\n";

struct Globals {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string precision = "f64";

    [[nodiscard]] bool float_storage() const { return precision == "f32"; }
};

Scene load_input_scene(const fs::path& path) {
    if (!fs::exists(path)) {
        throw IoError("scene not found: " + path.string());
    }
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".ply" ? import_splat_ply(path) : load_scene(path);
}

Image read_rgb(const fs::path& path) {
    return composite_over(read_png(path), Rgb::Ones());
}

const std::vector<View>& split_views(const Dataset& ds, const std::string& split) {
    const auto& views = split == "test" ? ds.test : ds.train;
    if (views.empty()) {
        throw ValidationError("dataset has no " + split + " views");
    }
    return views;
}

std::string indexed(const std::string& stem, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%03zu.png", i);
    return stem + buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
}

// ---------------------------------------------------------------------------

struct RenderArgs {
    std::string scene;
    std::string dataset;
    std::string split = "train";
    std::string background = "white";
    std::vector<int> views;
    std::string out = "renders";
    bool depth = false;
};

int cmd_render(const RenderArgs& a, const Globals& g, std::ostream& out) {
    const Scene scene = load_input_scene(a.scene);
    const Dataset ds = load_dataset(a.dataset, parse_background_policy(a.background));
    const auto& views = split_views(ds, a.split);
    std::vector<int> ids = a.views;
    if (ids.empty()) {
        for (std::size_t i = 0; i < views.size(); ++i) {
            ids.push_back(static_cast<int>(i));
        }
    }
    for (const int i : ids) {
        if (i < 0 || static_cast<std::size_t>(i) >= views.size()) {
            throw ValidationError("view index " + std::to_string(i) + " out of range (" +
                                  std::to_string(views.size()) + " views)");
        }
    }
    fs::create_directories(a.out);
    for (const int i : ids) {
        const auto& cam = views[static_cast<std::size_t>(i)].camera;
        const auto start = std::chrono::steady_clock::now();
        const RenderOutput r = render(scene, cam, {g.threads});
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        write_png(r.color, fs::path(a.out) / indexed("view", static_cast<std::size_t>(i)));
        if (a.depth) {
            write_depth_png16(r.median_depth, cam.near, cam.far,
                              fs::path(a.out) / indexed("depth", static_cast<std::size_t>(i)));
        }
        out << "view " << i << ": " << std::fixed << std::setprecision(1) << ms << " ms\n" << std::defaultfloat;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
    std::string scene;
    std::string dataset;
    std::string background = "white";
    std::int64_t texels = 10000;
    int iters = 500;
    int eval_every = 100;
    std::string out = "optimized";
};

int cmd_optimize(const OptimizeArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    Scene scene = load_input_scene(a.scene);
    const Dataset ds = load_dataset(a.dataset, parse_background_policy(a.background));
    if (ds.train.empty()) {
        throw ValidationError("dataset has no training views");
    }
    if (a.texels < 0 || a.iters < 0 || a.eval_every < 0) {
        throw ValidationError("--texels, --iters and --eval-every must be non-negative");
    }
    if (a.texels > 0 && !scene.gaussians.empty()) {
        std::vector<Vec2> scales;
        for (const auto& p : scene.gaussians) {
            scales.push_back(p.scale);
        }
        const auto solution = search_texel_size(scales, a.texels);
        if (!solution.within_tolerance) {
            err << "note: " << solution.diagnostic << "; using the nearest\n";
        }
    }
    prepare_textures(scene, a.texels);
    if (g.float_storage()) {
        round_to_storage_precision(scene);
    }

    const fs::path dir = a.out;
    fs::create_directories(dir);
    const fs::path checkpoint = dir / "checkpoint.gstx";
    save_scene(scene, checkpoint);

    const auto& heldout = ds.test;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
        write_png(render(scene, heldout[i].camera, {g.threads}).color, dir / indexed("before", i));
    }

    OptimizeConfig cfg;
    cfg.iterations = a.iters;
    cfg.eval_every = a.eval_every;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.float_storage = g.float_storage();
    cfg.on_checkpoint = [&](int, const Scene& s) { save_scene(s, checkpoint); };

    TrainingLog log;
    try {
        log = optimize(scene, ds.train, heldout, cfg);
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\nlast good checkpoint: " << checkpoint.string() << '\n';
        return kExitNumerical;
    }

    save_scene(scene, dir / "scene.gstx");
    write_text(dir / "log.csv", log.to_csv());
    for (std::size_t i = 0; i < heldout.size(); ++i) {
        write_png(render(scene, heldout[i].camera, {g.threads}).color, dir / indexed("after", i));
    }
    if (!heldout.empty()) {
        out << "held-out PSNR: " << std::fixed << std::setprecision(2) << mean_psnr(scene, heldout, g.threads)
            << " dB\n"
            << std::defaultfloat;
    }
    out << "wrote " << (dir / "scene.gstx").string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct PaintArgs {
    std::string scene;
    std::string edit;
    std::string dataset;
    std::string split = "train";
    int view = 0;
    double tolerance = kPaintDepthTolerance;
    std::string out = "painted.gstx";
    std::string render_path;
};

int cmd_paint(const PaintArgs& a, const Globals& g, std::ostream& out) {
    Scene scene = load_input_scene(a.scene);
    const Dataset ds = load_dataset(a.dataset);
    const auto& views = split_views(ds, a.split);
    if (a.view < 0 || static_cast<std::size_t>(a.view) >= views.size()) {
        throw ValidationError("view index " + std::to_string(a.view) + " out of range");
    }
    EditImage edit{read_png(a.edit), views[static_cast<std::size_t>(a.view)].camera};
    if (edit.rgba.width != edit.camera.width || edit.rgba.height != edit.camera.height) {
        throw ValidationError("edit image is " + std::to_string(edit.rgba.width) + "x" +
                              std::to_string(edit.rgba.height) + " but view " + std::to_string(a.view) + " is " +
                              std::to_string(edit.camera.width) + "x" + std::to_string(edit.camera.height));
    }
    paint(scene, edit, a.tolerance, g.threads);
    ensure_parent(a.out);
    save_scene(scene, a.out);

    fs::path preview = a.render_path;
    if (preview.empty()) {
        preview = fs::path(a.out).replace_extension().string() + "_view.png";
    }
    write_png(render(scene, edit.camera, {g.threads}).color, preview);
    out << "wrote " << a.out << " and " << preview.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct RetextureArgs {
    std::string scene;
    std::string pattern = "circles";
    std::string out = "retextured.gstx";
    std::int64_t texels = -1;
    bool zero_sh = false;
};

int cmd_retexture(const RetextureArgs& a, const Globals&, std::ostream& out) {
    Scene scene = load_input_scene(a.scene);
    ProceduralTexture f;
    if (a.pattern == "circles") {
        f = builtin_circles;
    } else if (a.pattern == "stripes") {
        f = builtin_stripes;
    } else {
        throw ValidationError("unknown pattern '" + a.pattern + "' (circles, stripes)");
    }
    if (!scene.textured()) {
        if (a.texels < 0) {
            throw ValidationError("scene has no texture atlas; pass --texels to allocate one");
        }
        allocate_textures(scene, a.texels);
    }
    retexture(scene, f, a.zero_sh);
    ensure_parent(a.out);
    save_scene(scene, a.out);
    out << "wrote " << a.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string kind = "plane";
    int primitives = 1;
    int train_views = 8;
    int test_views = 2;
    int width = 128;
    int height = 128;
    std::string texture;
    int texture_resolution = 256;
    int sh_degree = 1;
    std::string out = "synthetic";
};

SyntheticParams synth_params(const SynthArgs& a, const Globals& g) {
    SyntheticParams p;
    p.kind = parse_synthetic_kind(a.kind);
    p.primitives = a.primitives;
    p.train_views = a.train_views;
    p.test_views = a.test_views;
    p.width = a.width;
    p.height = a.height;
    p.texture_resolution = a.texture_resolution;
    p.sh_degree = a.sh_degree;
    p.threads = g.threads;
    if (!a.texture.empty()) {
        p.texture = read_rgb(a.texture);
    }
    return p;
}

int cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out) {
    const auto synthetic = make_synthetic(synth_params(a, g), g.seed);
    const fs::path dir = a.out;
    fs::create_directories(dir);
    save_scene(synthetic.ground_truth, dir / "ground_truth.gstx");
    save_scene(synthetic.initial, dir / "initial.gstx");
    write_dataset(synthetic.dataset, synthetic.fov_x, dir);
    out << "wrote " << synthetic.dataset.train.size() << " training and " << synthetic.dataset.test.size()
        << " held-out views to " << dir.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    SynthArgs scene;
    std::vector<int> gaussians{16, 64};
    std::vector<std::int64_t> texels{0, 1000, 10000};
    int iters = 300;
    std::string out = "sweep.csv";
    bool no_timings = false;
};

int cmd_sweep(const SweepArgs& a, const Globals& g, std::ostream& out) {
    SweepConfig cfg;
    cfg.scene = synth_params(a.scene, g);
    cfg.gaussians = a.gaussians;
    cfg.texels = a.texels;
    cfg.iterations = a.iters;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.float_storage = g.float_storage();
    const auto rows = run_sweep(cfg, [&](const SweepRow& row) {
        out << "gaussians=" << row.gaussians << " texels=" << row.texels;
        if (row.status == "ok") {
            out << " psnr=" << std::fixed << std::setprecision(2) << row.psnr << " ssim=" << std::setprecision(4)
                << row.ssim << std::defaultfloat;
        } else {
            out << " failed: " << row.status;
        }
        out << '\n';
    });
    ensure_parent(a.out);
    write_text(a.out, sweep_csv(rows, !a.no_timings));
    out << "wrote " << a.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string a;
    std::string b;
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
    const Image x = read_rgb(a.a);
    const Image y = read_rgb(a.b);
    if (!x.same_shape(y)) {
        throw ValidationError("images differ in size");
    }
    out << std::setprecision(10) << "psnr=" << psnr(x, y) << " ssim=" << ssim(x, y) << '\n';
    return kExitOk;
}

void add_synth_options(CLI::App* app, SynthArgs& a) {
    app->add_option("--kind", a.kind, "plane, grid or random")->capture_default_str();
    app->add_option("--primitives", a.primitives, "Primitive count (square for plane and grid)")
        ->capture_default_str();
    app->add_option("--train-views", a.train_views)->capture_default_str();
    app->add_option("--test-views", a.test_views)->capture_default_str();
    app->add_option("--width", a.width)->capture_default_str();
    app->add_option("--height", a.height)->capture_default_str();
    app->add_option("--texture", a.texture, "Ground-truth texture PNG (default: checkerboard with glyph)");
    app->add_option("--texture-resolution", a.texture_resolution, "Resolution of the default texture")
        ->capture_default_str();
    app->add_option("--sh-degree", a.sh_degree)->capture_default_str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Textured 2D Gaussian splatting: render, optimize and edit per-primitive texture maps."};
    app.footer(kFormats);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Seed for scene generation and view order")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--precision", g.precision, "In-memory parameter precision during optimization")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();

    RenderArgs render_args;
    auto* render_cmd = app.add_subcommand("render", "Render a scene from dataset cameras");
    render_cmd->add_option("--scene", render_args.scene, "Scene file (.gstx or .ply)")->required();
    render_cmd->add_option("--dataset", render_args.dataset, "Dataset directory or transforms JSON")->required();
    render_cmd->add_option("--split", render_args.split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    render_cmd->add_option("--background", render_args.background, "white, black or from-alpha")
        ->capture_default_str();
    render_cmd->add_option("--views", render_args.views, "Comma-separated view indices (default: all)")
        ->delimiter(',');
    render_cmd->add_option("--out", render_args.out, "Output directory")->capture_default_str();
    render_cmd->add_flag("--depth", render_args.depth, "Also write 16-bit median-depth PNGs");

    OptimizeArgs opt_args;
    auto* opt_cmd = app.add_subcommand("optimize", "Allocate textures, initialize from SH and optimize");
    opt_cmd->add_option("--scene", opt_args.scene, "Initial scene (.gstx or .ply)")->required();
    opt_cmd->add_option("--dataset", opt_args.dataset, "Dataset directory or transforms JSON")->required();
    opt_cmd->add_option("--background", opt_args.background, "white, black or from-alpha")->capture_default_str();
    opt_cmd->add_option("--texels", opt_args.texels, "Total texel budget (0: one texel per primitive)")
        ->capture_default_str();
    opt_cmd->add_option("--iters", opt_args.iters)->capture_default_str();
    opt_cmd->add_option("--eval-every", opt_args.eval_every, "Held-out PSNR interval (0: final only)")
        ->capture_default_str();
    opt_cmd->add_option("--out", opt_args.out, "Output directory")->capture_default_str();

    PaintArgs paint_args;
    auto* paint_cmd = app.add_subcommand("paint", "Project an edited RGBA image onto the texels");
    paint_cmd->add_option("--scene", paint_args.scene)->required();
    paint_cmd->add_option("--edit", paint_args.edit, "RGBA PNG, same size as the view")->required();
    paint_cmd->add_option("--dataset", paint_args.dataset, "Dataset supplying the edit camera")->required();
    paint_cmd->add_option("--split", paint_args.split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    paint_cmd->add_option("--view", paint_args.view)->capture_default_str();
    paint_cmd->add_option("--tolerance", paint_args.tolerance, "Normalized median-depth tolerance")
        ->capture_default_str();
    paint_cmd->add_option("--out", paint_args.out)->capture_default_str();
    paint_cmd->add_option("--render", paint_args.render_path, "Re-render path (default: <out>_view.png)");

    RetextureArgs retex_args;
    auto* retex_cmd = app.add_subcommand("retexture", "Replace every texture with a procedural pattern");
    retex_cmd->add_option("--scene", retex_args.scene)->required();
    retex_cmd->add_option("--pattern", retex_args.pattern)->check(CLI::IsMember({"circles", "stripes"}))
        ->capture_default_str();
    retex_cmd->add_option("--out", retex_args.out)->capture_default_str();
    retex_cmd->add_option("--texels", retex_args.texels, "Texel budget for scenes without an atlas");
    retex_cmd->add_flag("--zero-sh", retex_args.zero_sh, "Clear view-dependent SH residuals");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Held-out quality over primitive counts and texel budgets");
    add_synth_options(sweep_cmd, sweep_args.scene);
    sweep_cmd->add_option("--gaussians", sweep_args.gaussians)->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--texels", sweep_args.texels)->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--iters", sweep_args.iters)->capture_default_str();
    sweep_cmd->add_option("--out", sweep_args.out, "CSV path")->capture_default_str();
    sweep_cmd->add_flag("--no-timings", sweep_args.no_timings, "Leave the seconds column empty");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene and its rendered dataset");
    add_synth_options(synth_cmd, synth_args);
    synth_cmd->add_option("--out", synth_args.out, "Output directory")->capture_default_str();

    MetricsArgs metric_args;
    auto* metrics_cmd = app.add_subcommand("metrics", "PSNR and SSIM of two PNGs after 8-bit quantization");
    metrics_cmd->add_option("a", metric_args.a)->required();
    metrics_cmd->add_option("b", metric_args.b)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*render_cmd) {
            return cmd_render(render_args, g, out);
        }
        if (*opt_cmd) {
            return cmd_optimize(opt_args, g, out, err);
        }
        if (*paint_cmd) {
            return cmd_paint(paint_args, g, out);
        }
        if (*retex_cmd) {
            return cmd_retexture(retex_args, g, out);
        }
        if (*sweep_cmd) {
            return cmd_sweep(sweep_args, g, out);
        }
        if (*synth_cmd) {
            return cmd_synth(synth_args, g, out);
        }
        if (*metrics_cmd) {
            return cmd_metrics(metric_args, out);
        }
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace texgs::cli
