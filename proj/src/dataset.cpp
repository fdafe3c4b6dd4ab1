#include "texgs/dataset.hpp"

#include "texgs/image_io.hpp"

#include <json.hpp>

#include <fstream>

namespace texgs {

using nlohmann::json;

BackgroundPolicy parse_background_policy(const std::string& name) {
    if (name == "white") {
        return BackgroundPolicy::White;
    }
    if (name == "black") {
        return BackgroundPolicy::Black;
    }
    if (name == "from-alpha") {
        return BackgroundPolicy::FromAlpha;
    }
    throw ValidationError("unknown background policy '" + name + "' (white, black, from-alpha)");
}

DatasetManifest parse_manifest(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) {
        throw IoError("manifest not found: " + json_path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("cannot parse " + json_path.string() + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.camera_angle_x = doc.at("camera_angle_x").get<double>();
        m.near = doc.value("near", m.near);
        m.far = doc.value("far", m.far);
        const auto& frames = doc.at("frames");
        if (!frames.is_array() || frames.empty()) {
            throw IoError(json_path.string() + ": manifest has no frames");
        }
        for (const auto& f : frames) {
            ManifestFrame frame;
            frame.file_path = f.at("file_path").get<std::string>();
            const auto& rows = f.at("transform_matrix");
            if (rows.size() != 4) {
                throw IoError(json_path.string() + ": transform_matrix must be 4x4");
            }
            for (int r = 0; r < 4; ++r) {
                if (rows[r].size() != 4) {
                    throw IoError(json_path.string() + ": transform_matrix must be 4x4");
                }
                for (int c = 0; c < 4; ++c) {
                    frame.transform_matrix(r, c) = rows[r][c].get<double>();
                }
            }
            m.frames.push_back(std::move(frame));
        }
    } catch (const json::exception& e) {
        throw IoError(json_path.string() + ": " + e.what());
    }
    if (!(m.camera_angle_x > 0.0 && m.camera_angle_x < 3.14159)) {
        throw ValidationError(json_path.string() + ": camera_angle_x out of range");
    }
    return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& json_path) {
    json doc;
    doc["camera_angle_x"] = manifest.camera_angle_x;
    doc["near"] = manifest.near;
    doc["far"] = manifest.far;
    doc["frames"] = json::array();
    for (const auto& frame : manifest.frames) {
        json rows = json::array();
        for (int r = 0; r < 4; ++r) {
            rows.push_back({frame.transform_matrix(r, 0), frame.transform_matrix(r, 1), frame.transform_matrix(r, 2),
                            frame.transform_matrix(r, 3)});
        }
        doc["frames"].push_back({{"file_path", frame.file_path}, {"transform_matrix", rows}});
    }
    std::ofstream out(json_path);
    if (!out) {
        throw IoError("cannot write " + json_path.string());
    }
    out << doc.dump(2) << '\n';
}

Camera frame_camera(const DatasetManifest& manifest, const ManifestFrame& frame, int width, int height) {
    return Camera::from_fov(opengl_to_internal(frame.transform_matrix), manifest.camera_angle_x, width, height,
                            manifest.near, manifest.far);
}

namespace {

std::filesystem::path resolve_image(const std::filesystem::path& base, const std::string& file_path) {
    std::filesystem::path p = base / file_path;
    if (std::filesystem::exists(p)) {
        return p;
    }
    p += ".png";
    if (std::filesystem::exists(p)) {
        return p;
    }
    throw IoError("dataset image not found: " + (base / file_path).string());
}

std::vector<View> load_split(const std::filesystem::path& json_path, BackgroundPolicy policy, int& width,
                             int& height) {
    const auto manifest = parse_manifest(json_path);
    const auto base = json_path.parent_path();
    std::vector<View> views;
    for (const auto& frame : manifest.frames) {
        const Image rgba = read_png(resolve_image(base, frame.file_path));
        if (width == 0) {
            width = rgba.width;
            height = rgba.height;
        } else if (rgba.width != width || rgba.height != height) {
            throw ValidationError("dataset images differ in size (" + frame.file_path + ")");
        }
        View view;
        view.camera = frame_camera(manifest, frame, width, height);
        switch (policy) {
        case BackgroundPolicy::White: view.image = composite_over(rgba, Rgb::Ones()); break;
        case BackgroundPolicy::Black: view.image = composite_over(rgba, Rgb::Zero()); break;
        case BackgroundPolicy::FromAlpha:
            view.image = Image(rgba.width, rgba.height, 3);
            for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
                for (int c = 0; c < 3; ++c) {
                    view.image.data[p * 3 + c] = rgba.data[p * 4 + c];
                }
            }
            break;
        }
        views.push_back(std::move(view));
    }
    return views;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& path, BackgroundPolicy policy) {
    Dataset ds;
    int width = 0;
    int height = 0;
    if (std::filesystem::is_directory(path)) {
        const auto train = path / "transforms_train.json";
        if (!std::filesystem::exists(train)) {
            throw IoError("dataset has no transforms_train.json: " + path.string());
        }
        ds.train = load_split(train, policy, width, height);
        const auto test = path / "transforms_test.json";
        if (std::filesystem::exists(test)) {
            ds.test = load_split(test, policy, width, height);
        }
    } else {
        ds.train = load_split(path, policy, width, height);
    }
    return ds;
}

void write_dataset(const Dataset& dataset, double camera_angle_x, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write_split = [&](const std::vector<View>& views, const std::string& split) {
        if (views.empty()) {
            return;
        }
        DatasetManifest m;
        m.camera_angle_x = camera_angle_x;
        m.near = views.front().camera.near;
        m.far = views.front().camera.far;
        std::filesystem::create_directories(dir / split);
        for (std::size_t i = 0; i < views.size(); ++i) {
            const std::string rel = "./" + split + "/r_" + std::to_string(i);
            write_png(views[i].image, dir / (rel + ".png"));
            m.frames.push_back({rel, internal_to_opengl(views[i].camera.camera_to_world)});
        }
        write_manifest(m, dir / ("transforms_" + split + ".json"));
    };
    write_split(dataset.train, "train");
    write_split(dataset.test, "test");
}

} // namespace texgs
