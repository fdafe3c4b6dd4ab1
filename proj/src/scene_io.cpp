#include "texgs/scene_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace texgs {

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'S', 'T', 'X'};

class ByteWriter {
public:
    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }
    template <class T>
    void le(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        std::array<std::uint8_t, sizeof(T)> buf;
        std::memcpy(buf.data(), &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(buf.begin(), buf.end());
        }
        raw(buf.data(), buf.size());
    }
    void f32(double v) { le(static_cast<float>(v)); }

    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    void raw(void* out, std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw SceneFormatError("truncated scene file");
        }
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    template <class T>
    T le() {
        std::array<std::uint8_t, sizeof(T)> buf;
        raw(buf.data(), buf.size());
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(buf.begin(), buf.end());
        }
        T value;
        std::memcpy(&value, buf.data(), sizeof(T));
        return value;
    }
    double f32() { return static_cast<double>(le<float>()); }

    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace

std::vector<std::uint8_t> encode_scene(const Scene& scene) {
    check_consistency(scene);
    const auto stride = static_cast<std::size_t>(sh_residual_length(scene.sh_degree));
    ByteWriter w;
    w.raw(kMagic.data(), kMagic.size());
    w.le<std::uint32_t>(kSceneFileVersion);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(scene.gaussians.size()));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(scene.sh_degree));
    w.f32(scene.atlas.texel_size);
    for (int c = 0; c < 3; ++c) {
        w.f32(scene.background[c]);
    }
    w.le<std::uint64_t>(static_cast<std::uint64_t>(scene.atlas.budget));
    for (const auto& g : scene.gaussians) {
        if (g.sh_residual.size() != stride) {
            throw ValidationError("primitive SH residual length does not match the scene degree");
        }
        for (int c = 0; c < 3; ++c) {
            w.f32(g.position[c]);
        }
        // Near-unit quaternions are written verbatim so loaded scenes re-save bit-exactly.
        const Quat q = std::abs(g.orientation.norm() - 1.0) <= 1e-6 ? g.orientation : g.orientation.normalized();
        w.f32(q.w());
        w.f32(q.x());
        w.f32(q.y());
        w.f32(q.z());
        w.f32(g.scale.x());
        w.f32(g.scale.y());
        w.f32(g.opacity_logit);
        for (int c = 0; c < 3; ++c) {
            w.f32(g.sh_dc[c]);
        }
        for (const double v : g.sh_residual) {
            w.f32(v);
        }
        w.le<std::uint32_t>(static_cast<std::uint32_t>(g.tex_width));
        w.le<std::uint32_t>(static_cast<std::uint32_t>(g.tex_height));
    }
    w.le<std::uint64_t>(static_cast<std::uint64_t>(scene.atlas.texel_count()));
    for (const double v : scene.atlas.texels) {
        w.f32(v);
    }
    return w.take();
}

Scene decode_scene(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    std::array<char, 4> magic{};
    if (bytes.size() < magic.size()) {
        throw SceneFormatError("truncated scene file");
    }
    r.raw(magic.data(), magic.size());
    if (magic != kMagic) {
        throw SceneFormatError("not a GSTX scene file (bad magic)");
    }
    const auto version = r.le<std::uint32_t>();
    if (version != kSceneFileVersion) {
        throw SceneFormatError("unsupported scene file version " + std::to_string(version) + " (expected " +
                               std::to_string(kSceneFileVersion) + ")");
    }
    const auto n = r.le<std::uint32_t>();
    const auto degree = r.le<std::uint32_t>();
    if (degree > static_cast<std::uint32_t>(kMaxShDegree)) {
        throw SceneFormatError("unsupported SH degree " + std::to_string(degree));
    }
    Scene scene;
    scene.sh_degree = static_cast<int>(degree);
    scene.atlas.texel_size = r.f32();
    for (int c = 0; c < 3; ++c) {
        scene.background[c] = r.f32();
    }
    scene.atlas.budget = static_cast<std::int64_t>(r.le<std::uint64_t>());

    const auto stride = static_cast<std::size_t>(sh_residual_length(scene.sh_degree));
    // Each record is at least this many bytes; reject absurd counts before allocating.
    const std::size_t record_bytes = 4 * (3 + 4 + 2 + 1 + 3 + stride) + 8;
    if (static_cast<std::size_t>(n) > r.remaining() / record_bytes) {
        throw SceneFormatError("truncated scene file");
    }
    scene.gaussians.resize(n);
    std::int64_t declared_sum = 0;
    std::size_t textured_count = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        auto& g = scene.gaussians[i];
        for (int c = 0; c < 3; ++c) {
            g.position[c] = r.f32();
        }
        const double qw = r.f32();
        const double qx = r.f32();
        const double qy = r.f32();
        const double qz = r.f32();
        const Quat q(qw, qx, qy, qz);
        if (!(std::abs(q.norm() - 1.0) <= 1e-6)) {
            throw SceneFormatError("primitive " + std::to_string(i) + " has a non-unit quaternion");
        }
        g.set_orientation(q);
        g.scale.x() = r.f32();
        g.scale.y() = r.f32();
        g.opacity_logit = r.f32();
        for (int c = 0; c < 3; ++c) {
            g.sh_dc[c] = r.f32();
        }
        g.sh_residual.resize(stride);
        for (auto& v : g.sh_residual) {
            v = r.f32();
        }
        g.tex_width = static_cast<int>(r.le<std::uint32_t>());
        g.tex_height = static_cast<int>(r.le<std::uint32_t>());
        if ((g.tex_width == 0) != (g.tex_height == 0)) {
            throw SceneFormatError("inconsistent prefix sums: primitive " + std::to_string(i) +
                                   " has a zero-sized texture axis");
        }
        if (g.textured()) {
            ++textured_count;
        }
        g.tex_offset = declared_sum;
        declared_sum += g.texel_count();
    }
    if (textured_count != 0 && textured_count != n) {
        throw SceneFormatError("inconsistent prefix sums: scene mixes textured and untextured primitives");
    }
    const auto texel_total = static_cast<std::int64_t>(r.le<std::uint64_t>());
    if (texel_total != declared_sum) {
        throw SceneFormatError("texel count mismatch: header declares " + std::to_string(texel_total) +
                               " texels, primitives need " + std::to_string(declared_sum));
    }
    if (static_cast<std::size_t>(texel_total) > r.remaining() / 12) {
        throw SceneFormatError("truncated scene file");
    }
    scene.atlas.texels.resize(static_cast<std::size_t>(texel_total) * 3);
    for (auto& v : scene.atlas.texels) {
        v = r.f32();
    }
    if (r.remaining() != 0) {
        throw SceneFormatError("trailing bytes after texel block");
    }
    scene.atlas.prefix.assign(1, 0);
    if (textured_count != 0) {
        for (const auto& g : scene.gaussians) {
            scene.atlas.prefix.push_back(scene.atlas.prefix.back() + g.texel_count());
        }
    }
    return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) { write_file(path, encode_scene(scene)); }

Scene load_scene(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("scene not found: " + path.string());
    }
    return decode_scene(read_file(path));
}

void round_to_storage_precision(Scene& scene) {
    scene.atlas.texel_size = to_float_precision(scene.atlas.texel_size);
    for (int c = 0; c < 3; ++c) {
        scene.background[c] = to_float_precision(scene.background[c]);
    }
    for (auto& g : scene.gaussians) {
        for (int c = 0; c < 3; ++c) {
            g.position[c] = to_float_precision(g.position[c]);
            g.sh_dc[c] = to_float_precision(g.sh_dc[c]);
        }
        const Quat q = g.orientation.normalized();
        g.set_orientation(Quat(to_float_precision(q.w()), to_float_precision(q.x()), to_float_precision(q.y()),
                               to_float_precision(q.z())));
        g.scale = g.scale.unaryExpr([](double v) { return to_float_precision(v); });
        g.opacity_logit = to_float_precision(g.opacity_logit);
        for (auto& v : g.sh_residual) {
            v = to_float_precision(v);
        }
    }
    for (auto& v : scene.atlas.texels) {
        v = to_float_precision(v);
    }
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_ply_type(const std::string& name) {
    static const std::map<std::string, PlyType> kTypes = {
        {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
        {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
        {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
        {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
        {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
        {"float64", PlyType::Float64}};
    const auto it = kTypes.find(name);
    if (it == kTypes.end()) {
        throw IoError("unsupported PLY property type '" + name + "'");
    }
    return it->second;
}

std::size_t ply_type_size(PlyType t) {
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

template <class T>
T load_le(const std::uint8_t* p) {
    std::array<std::uint8_t, sizeof(T)> buf;
    std::memcpy(buf.data(), p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(buf.begin(), buf.end());
    }
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

double read_ply_value(const std::uint8_t* p, PlyType t) {
    switch (t) {
    case PlyType::Int8: return load_le<std::int8_t>(p);
    case PlyType::UInt8: return load_le<std::uint8_t>(p);
    case PlyType::Int16: return load_le<std::int16_t>(p);
    case PlyType::UInt16: return load_le<std::uint16_t>(p);
    case PlyType::Int32: return load_le<std::int32_t>(p);
    case PlyType::UInt32: return load_le<std::uint32_t>(p);
    case PlyType::Float32: return load_le<float>(p);
    case PlyType::Float64: return load_le<double>(p);
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type;
    std::size_t offset;
};

} // namespace

Scene import_splat_ply(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const std::string marker = "end_header\n";
    const std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                                               bytes.size(), 1 << 16)));
    const auto header_end = head.find(marker);
    if (head.rfind("ply", 0) != 0 || header_end == std::string::npos) {
        throw IoError(path.string() + ": not a PLY file");
    }

    std::istringstream header(head.substr(0, header_end));
    std::string line;
    std::size_t vertex_count = 0;
    bool in_vertex = false;
    bool seen_vertex = false;
    bool binary_le = false;
    std::vector<PlyProperty> props;
    std::size_t stride = 0;
    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream tok(line);
        std::string word;
        tok >> word;
        if (word == "format") {
            std::string fmt;
            tok >> fmt;
            binary_le = fmt == "binary_little_endian";
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            tok >> name >> count;
            if (name == "vertex") {
                if (seen_vertex) {
                    throw IoError(path.string() + ": duplicate vertex element");
                }
                in_vertex = true;
                seen_vertex = true;
                vertex_count = count;
            } else {
                if (!seen_vertex) {
                    throw IoError(path.string() + ": vertex must be the first PLY element");
                }
                in_vertex = false;
            }
        } else if (word == "property" && in_vertex) {
            std::string type;
            std::string name;
            tok >> type;
            if (type == "list") {
                throw IoError(path.string() + ": list properties are not supported on vertices");
            }
            tok >> name;
            const PlyType t = parse_ply_type(type);
            props.push_back({name, t, stride});
            stride += ply_type_size(t);
        }
    }
    if (!binary_le) {
        throw IoError(path.string() + ": only binary_little_endian PLY files are supported");
    }
    if (!seen_vertex) {
        throw IoError(path.string() + ": no vertex element");
    }

    std::map<std::string, const PlyProperty*> by_name;
    for (const auto& p : props) {
        by_name[p.name] = &p;
    }
    auto require = [&](const std::string& name) -> const PlyProperty& {
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw IoError(path.string() + ": missing PLY property '" + name + "'");
        }
        return *it->second;
    };
    const std::array<std::string, 13> required = {"x",     "y",     "z",     "scale_0", "scale_1",
                                                  "rot_0", "rot_1", "rot_2", "rot_3",   "opacity",
                                                  "f_dc_0", "f_dc_1", "f_dc_2"};
    for (const auto& name : required) {
        require(name);
    }
    std::size_t rest_count = 0;
    while (by_name.count("f_rest_" + std::to_string(rest_count)) != 0) {
        ++rest_count;
    }
    if (rest_count % 3 != 0) {
        throw IoError(path.string() + ": f_rest property count is not a multiple of 3");
    }
    const int degree = sh_degree_from_residual_length(rest_count);
    const std::size_t basis = rest_count / 3;

    const std::size_t data_begin = header_end + marker.size();
    if (bytes.size() < data_begin + vertex_count * stride) {
        throw IoError(path.string() + ": truncated PLY vertex data");
    }

    Scene scene;
    scene.sh_degree = degree;
    scene.gaussians.resize(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        const std::uint8_t* rec = bytes.data() + data_begin + i * stride;
        auto value = [&](const std::string& name) {
            const auto& p = require(name);
            const double v = read_ply_value(rec + p.offset, p.type);
            if (!std::isfinite(v)) {
                throw IoError(path.string() + ": non-finite value in property '" + name + "' of vertex " +
                              std::to_string(i));
            }
            return v;
        };
        auto& g = scene.gaussians[i];
        g.position = {value("x"), value("y"), value("z")};
        g.scale = {std::exp(value("scale_0")), std::exp(value("scale_1"))};
        const Quat q(value("rot_0"), value("rot_1"), value("rot_2"), value("rot_3"));
        if (!(q.norm() > 0.0)) {
            throw IoError(path.string() + ": zero quaternion (rot_0..rot_3) at vertex " + std::to_string(i));
        }
        g.set_orientation(q);
        g.opacity_logit = value("opacity");
        g.sh_dc = {value("f_dc_0"), value("f_dc_1"), value("f_dc_2")};
        g.sh_residual.assign(rest_count, 0.0);
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t k = 0; k < basis; ++k) {
                g.sh_residual[3 * k + c] = value("f_rest_" + std::to_string(c * basis + k));
            }
        }
    }
    return scene;
}

void export_splat_ply(const Scene& scene, const std::filesystem::path& path) {
    const auto rest = static_cast<std::size_t>(sh_residual_length(scene.sh_degree));
    const std::size_t basis = rest / 3;
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.gaussians.size() << '\n';
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
        header << "property float " << name << '\n';
    }
    for (std::size_t k = 0; k < rest; ++k) {
        header << "property float f_rest_" << k << '\n';
    }
    for (const char* name : {"opacity", "scale_0", "scale_1", "rot_0", "rot_1", "rot_2", "rot_3"}) {
        header << "property float " << name << '\n';
    }
    header << "end_header\n";

    ByteWriter w;
    const std::string h = header.str();
    w.raw(h.data(), h.size());
    for (const auto& g : scene.gaussians) {
        if (g.sh_residual.size() != rest) {
            throw ValidationError("primitive SH residual length does not match the scene degree");
        }
        for (int c = 0; c < 3; ++c) {
            w.f32(g.position[c]);
        }
        const Vec3 n = g.normal();
        for (int c = 0; c < 3; ++c) {
            w.f32(n[c]);
        }
        for (int c = 0; c < 3; ++c) {
            w.f32(g.sh_dc[c]);
        }
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t k = 0; k < basis; ++k) {
                w.f32(g.sh_residual[3 * k + c]);
            }
        }
        w.f32(g.opacity_logit);
        w.f32(std::log(g.scale.x()));
        w.f32(std::log(g.scale.y()));
        w.f32(g.orientation.w());
        w.f32(g.orientation.x());
        w.f32(g.orientation.y());
        w.f32(g.orientation.z());
    }
    write_file(path, w.take());
}

} // namespace texgs
