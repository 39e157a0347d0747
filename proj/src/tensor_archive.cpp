#include "gapscore/tensor_archive.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gapscore {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

float float_from_le(const unsigned char* b) {
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return std::bit_cast<float>(bits);
}

void float_to_le(float v, unsigned char* b) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    b[0] = static_cast<unsigned char>(bits & 0xFF);
    b[1] = static_cast<unsigned char>((bits >> 8) & 0xFF);
    b[2] = static_cast<unsigned char>((bits >> 16) & 0xFF);
    b[3] = static_cast<unsigned char>((bits >> 24) & 0xFF);
}

std::vector<unsigned char> read_all_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArchiveError("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

} // namespace

LayerKind layer_kind_from_string(std::string_view s) {
    if (s == "dense") return LayerKind::Dense;
    if (s == "conv") return LayerKind::Conv;
    if (s == "bias") return LayerKind::Bias;
    if (s == "other") return LayerKind::Other;
    throw ArchiveError("unknown layer kind '" + std::string(s) + "'");
}

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv: return "conv";
        case LayerKind::Bias: return "bias";
        case LayerKind::Other: return "other";
    }
    throw ArchiveError("invalid layer kind");
}

TensorArchive read_tensor_archive(const std::string& dir) {
    const fs::path root(dir);
    const fs::path manifest_path = root / "manifest.json";
    if (!fs::exists(manifest_path)) throw ArchiveError("missing manifest.json in '" + dir + "'");

    json doc;
    try {
        std::ifstream in(manifest_path);
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ArchiveError("archive manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array())
        throw ArchiveError("archive manifest must be an object with a 'layers' array");

    TensorArchive arch;
    for (const auto& l : doc["layers"]) {
        if (!l.is_object()) throw ArchiveError("layer entries must be objects");
        for (const char* field : {"name", "kind", "shape", "file"})
            if (!l.contains(field)) throw ArchiveError("layer entry missing '" + std::string(field) + "'");
        TensorLayer layer;
        if (!l["name"].is_string()) throw ArchiveError("layer name must be a string");
        layer.name = l["name"].get<std::string>();
        if (!l["kind"].is_string()) throw ArchiveError("layer '" + layer.name + "': kind must be a string");
        layer.kind = layer_kind_from_string(l["kind"].get<std::string>());
        if (!l["shape"].is_array() || l["shape"].empty())
            throw ArchiveError("layer '" + layer.name + "': shape must be a non-empty array");
        std::int64_t count = 1;
        for (const auto& d : l["shape"]) {
            if (!d.is_number_integer() || d.get<std::int64_t>() < 1)
                throw ArchiveError("layer '" + layer.name + "': shape entries must be positive integers");
            layer.shape.push_back(d.get<std::int64_t>());
            count *= layer.shape.back();
            if (count > (std::int64_t(1) << 31))
                throw ArchiveError("layer '" + layer.name + "': too many elements");
        }
        if (!l["file"].is_string()) throw ArchiveError("layer '" + layer.name + "': file must be a string");
        const fs::path bin = root / l["file"].get<std::string>();
        if (!fs::exists(bin)) throw ArchiveError("layer '" + layer.name + "': missing file '" + bin.string() + "'");

        const auto bytes = read_all_bytes(bin);
        if (static_cast<std::int64_t>(bytes.size()) != 4 * count) {
            std::ostringstream msg;
            msg << "layer '" << layer.name << "': file '" << bin.string() << "' holds " << bytes.size()
                << " bytes, expected " << 4 * count << " for shape";
            throw ArchiveError(msg.str());
        }
        layer.data.resize(static_cast<std::size_t>(count));
        for (std::int64_t i = 0; i < count; ++i) {
            const float v = float_from_le(bytes.data() + 4 * i);
            if (!std::isfinite(v))
                throw ArchiveError("layer '" + layer.name + "': non-finite value at index " + std::to_string(i));
            layer.data[static_cast<std::size_t>(i)] = v;
        }
        arch.layers.push_back(std::move(layer));
    }
    return arch;
}

void write_tensor_archive(const std::string& dir, const TensorArchive& arch) {
    const fs::path root(dir);
    fs::create_directories(root);

    ordered_json doc;
    doc["layers"] = ordered_json::array();
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const auto& layer = arch.layers[i];
        std::int64_t count = 1;
        for (auto d : layer.shape) count *= d;
        if (count != static_cast<std::int64_t>(layer.data.size()))
            throw ArchiveError("layer '" + layer.name + "': data length does not match shape");

        const std::string file = "layer_" + std::to_string(i) + ".bin";
        std::vector<unsigned char> bytes(layer.data.size() * 4);
        for (std::size_t k = 0; k < layer.data.size(); ++k) float_to_le(layer.data[k], bytes.data() + 4 * k);
        std::ofstream out(root / file, std::ios::binary | std::ios::trunc);
        if (!out) throw ArchiveError("cannot write '" + (root / file).string() + "'");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ArchiveError("short write to '" + (root / file).string() + "'");

        ordered_json entry;
        entry["name"] = layer.name;
        entry["kind"] = to_string(layer.kind);
        entry["shape"] = layer.shape;
        entry["file"] = file;
        doc["layers"].push_back(std::move(entry));
    }
    std::ofstream out(root / "manifest.json", std::ios::trunc);
    out << doc.dump(2) << "\n";
    if (!out) throw ArchiveError("cannot write archive manifest in '" + dir + "'");
}

} // namespace gapscore
