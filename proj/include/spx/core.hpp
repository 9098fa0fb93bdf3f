#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Shared domain types for the superpixel refinement engine. All containers
// are plain value types, immutable by convention after construction; nothing
// here mutates shared state, so concurrent readers are safe.

namespace spx {

/// Rank-3 real tensor, channels x rows x cols, row-major in (k, r, c) order.
/// Arithmetic is carried in 64-bit floats; the on-disk format narrows to 32.
class Tensor {
public:
    Tensor() = default;
    Tensor(int channels, int rows, int cols, double fill = 0.0)
        : channels_(channels), rows_(rows), cols_(cols),
          data_(static_cast<size_t>(check_shape(channels, rows, cols)), fill) {}

    int channels() const { return channels_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }

    double& at(int k, int r, int c) { return data_[index(k, r, c)]; }
    double at(int k, int r, int c) const { return data_[index(k, r, c)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;

private:
    static long long check_shape(int channels, int rows, int cols);
    size_t index(int k, int r, int c) const {
        return (static_cast<size_t>(k) * rows_ + r) * cols_ + c;
    }

    int channels_ = 0, rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Dense rows x cols matrix of doubles, row-major. Used for unary tables,
/// beliefs, pooled features and similarity matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(checked_count(rows, cols), fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;

private:
    static size_t checked_count(int rows, int cols);
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// 8-bit RGB raster, rows x cols, interleaved r,g,b per pixel.
struct Image {
    int rows = 0, cols = 0;
    std::vector<uint8_t> rgb;  // size rows*cols*3

    Image() = default;
    Image(int r, int c) : rows(r), cols(c), rgb(static_cast<size_t>(r) * c * 3, 0) {}

    uint8_t& at(int r, int c, int ch) { return rgb[(static_cast<size_t>(r) * cols + c) * 3 + ch]; }
    uint8_t at(int r, int c, int ch) const { return rgb[(static_cast<size_t>(r) * cols + c) * 3 + ch]; }
};

/// Per-pixel superpixel id over an M x N grid. A valid map is a total
/// partition into 4-connected regions with contiguous ids 0..count-1.
struct SuperpixelMap {
    int rows = 0, cols = 0;
    int count = 0;
    std::vector<int32_t> ids;  // size rows*cols, row-major

    SuperpixelMap() = default;
    SuperpixelMap(int r, int c, int n)
        : rows(r), cols(c), count(n), ids(static_cast<size_t>(r) * c, 0) {}

    int32_t& at(int r, int c) { return ids[static_cast<size_t>(r) * cols + c]; }
    int32_t at(int r, int c) const { return ids[static_cast<size_t>(r) * cols + c]; }
};

/// Per-superpixel pooled feature vectors plus centroids and pixel counts.
/// Image shape is kept so downstream consumers can normalize positions.
struct SuperpixelFeatures {
    int count = 0;      // number of superpixels
    int dim = 0;        // feature dimension (tensor channels)
    int rows = 0, cols = 0;  // source image shape
    Matrix features;                             // count x dim
    std::vector<std::array<double, 2>> positions;  // (row, col) centroids
    std::vector<int> sizes;                      // pixel counts, sum to rows*cols
};

/// Per-pixel labels in {0..label_count-1}.
struct LabelMap {
    int rows = 0, cols = 0;
    std::vector<int32_t> labels;

    LabelMap() = default;
    LabelMap(int r, int c, int32_t fill = 0)
        : rows(r), cols(c), labels(static_cast<size_t>(r) * c, fill) {}

    int32_t& at(int r, int c) { return labels[static_cast<size_t>(r) * cols + c]; }
    int32_t at(int r, int c) const { return labels[static_cast<size_t>(r) * cols + c]; }
};

/// One scored instance mask. The mask uses labels {0,1} and must contain at
/// least one set pixel.
struct Instance {
    LabelMap mask;
    int class_id = 0;
    double score = 0.0;  // confidence in [0,1]
};

using InstanceSet = std::vector<Instance>;

/// Throws std::invalid_argument unless all labels are strictly below
/// label_count.
void check_labels(const LabelMap& map, int label_count);

struct PartitionCheck {
    bool ok = true;
    std::vector<std::string> diagnostics;  // first entry names the first violation
};

/// Checks the SuperpixelMap invariants: total partition with ids in range,
/// every id 0..count-1 non-empty, and each id a single 4-connected component.
/// Reports violations instead of throwing.
PartitionCheck validate_partition(const SuperpixelMap& sp);

/// Centroids, sizes and (optionally) per-superpixel bounding boxes.
struct SuperpixelStats {
    std::vector<std::array<double, 2>> centroids;  // (row, col)
    std::vector<int> sizes;
    std::vector<std::array<int, 4>> bboxes;  // (rmin, cmin, rmax, cmax)
};

SuperpixelStats superpixel_stats(const SuperpixelMap& sp);

}  // namespace spx
