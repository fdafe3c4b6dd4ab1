#pragma once

#include "texgs/optimizer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace texgs {

/// How RGBA dataset images lose their alpha channel.
enum class BackgroundPolicy {
    White,     // composite over white
    Black,     // composite over black
    FromAlpha, // keep the stored RGB, ignore alpha
};

BackgroundPolicy parse_background_policy(const std::string& name);

struct ManifestFrame {
    std::string file_path;
    Mat4 transform_matrix = Mat4::Identity(); // camera-to-world, OpenGL axes
};

/// Blender-synthetic transforms file: camera_angle_x plus frames with file_path and
/// transform_matrix. Optional "near"/"far" keys set the depth range.
struct DatasetManifest {
    double camera_angle_x = 0.0;
    double near = 0.01;
    double far = 100.0;
    std::vector<ManifestFrame> frames;
};

DatasetManifest parse_manifest(const std::filesystem::path& json_path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& json_path);

/// Camera for a frame: OpenGL pose converted to the internal convention,
/// fx = fy = 0.5 * width / tan(0.5 * camera_angle_x).
Camera frame_camera(const DatasetManifest& manifest, const ManifestFrame& frame, int width, int height);

struct Dataset {
    std::vector<View> train;
    std::vector<View> test;
};

/// Loads a dataset. `path` is either a directory holding transforms_train.json (and
/// optionally transforms_test.json) or a single transforms file (training frames only).
/// Frames keep manifest order; every image must exist and share one size.
Dataset load_dataset(const std::filesystem::path& path, BackgroundPolicy policy = BackgroundPolicy::White);

/// Writes views as PNGs plus transforms_train.json / transforms_test.json under `dir`.
/// Cameras must come from Camera::from_fov with a shared horizontal field of view.
void write_dataset(const Dataset& dataset, double camera_angle_x, const std::filesystem::path& dir);

} // namespace texgs
