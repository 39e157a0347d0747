#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gapscore/errors.hpp"

namespace gapscore {

enum class LayerKind { Dense, Conv, Bias, Other };

LayerKind layer_kind_from_string(std::string_view s); // ArchiveError on unknown kind
std::string to_string(LayerKind kind);

struct TensorLayer {
    std::string name;
    LayerKind kind = LayerKind::Other;
    std::vector<std::int64_t> shape;
    std::vector<float> data; // row-major
};

struct TensorArchive {
    std::vector<TensorLayer> layers; // manifest order
};

// Directory layout: manifest.json = {"layers":[{"name","kind","shape","file"},...]}
// plus one raw .bin per layer (row-major little-endian float32, no header,
// byte length 4 * product(shape)). Validation failures throw ArchiveError
// naming the layer.
TensorArchive read_tensor_archive(const std::string& dir);
void write_tensor_archive(const std::string& dir, const TensorArchive& arch);

} // namespace gapscore
