#pragma once

#include <map>
#include <string>
#include <vector>

#include "spx/core.hpp"

// File formats:
//
//  SPT tensor container (binary, little-endian):
//    magic "SPT1" | dtype u8 (1 = float32, 2 = uint32) | rank u8 | 2 pad
//    bytes | rank x u64 dims | payload, row-major.
//    Round trips are bit-exact; float tensors narrow to 32-bit on write.
//
//  Rasters are binary PNM: P6 (8-bit RGB) for images, P5 for label maps
//  (maxval 255, or 65535 big-endian when labels exceed 255).
//
//  Edge lists, pooled features, instance sets, palettes and metric reports
//  are JSON documents; see the read_*/write_* pairs below for the schema.

namespace spx {

// ---- SPT tensors ----------------------------------------------------------

Tensor read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor& t);

/// Rank-2 uint32 container used for superpixel id maps.
SuperpixelMap read_id_map(const std::string& path);
void write_id_map(const std::string& path, const SuperpixelMap& sp);

// ---- PNM rasters ----------------------------------------------------------

Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& img);

LabelMap read_pgm(const std::string& path);
void write_pgm(const std::string& path, const LabelMap& map);

// ---- JSON documents -------------------------------------------------------

struct Edge {
    int i = 0, j = 0;   // i < j
    double weight = 0.0;
};

enum class WeightKind { Similarity, Dissimilarity };

struct EdgeList {
    WeightKind kind = WeightKind::Similarity;
    std::vector<Edge> edges;
};

EdgeList read_edges(const std::string& path);
void write_edges(const std::string& path, const EdgeList& el);

SuperpixelFeatures read_features(const std::string& path);
void write_features(const std::string& path, const SuperpixelFeatures& spf);

InstanceSet read_instances(const std::string& path);
void write_instances(const std::string& path, const InstanceSet& set);

std::vector<std::array<uint8_t, 3>> read_palette(const std::string& path);
void write_palette(const std::string& path, const std::vector<std::array<uint8_t, 3>>& palette);

struct MetricReport {
    std::vector<double> per_class_iou;    // -1 marks classes absent from both maps
    double mean_iou = 0.0;
    double pixel_accuracy = 0.0;
    std::map<double, double> ap_r;        // IoU threshold -> mean AP
};

void write_metrics(const std::string& path, const MetricReport& report,
                   const std::map<std::string, std::vector<double>>& extra_series = {},
                   const std::map<std::string, double>& extra_scalars = {});

}  // namespace spx
