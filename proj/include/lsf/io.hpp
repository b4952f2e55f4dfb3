#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsf/beam_ops.hpp"
#include "lsf/geometry.hpp"

namespace lsf {

/// Shortest round-trip decimal formatting, locale-independent.
std::string fmt_double(double v);

/// KITTI-convention interchange: little-endian float32 quadruples
/// (x, y, z, intensity), no header. Throws when the byte count is not a
/// multiple of 16.
PointCloud read_bin(const std::filesystem::path& path);
void write_bin(const std::filesystem::path& path, const PointCloud& cloud);

/// CSV label rows: cx,cy,cz,l,w,h,yaw[,confidence].
std::vector<Detection> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<Detection>& dets);
void write_labels(const std::filesystem::path& path, const std::vector<Box3D>& boxes);
std::vector<Box3D> read_label_boxes(const std::filesystem::path& path);

/// Versioned parameter file: magic "LSF1", FNV-1a hash of the config
/// string, count, then little-endian float64 values. Loading verifies the
/// magic and the hash against the expected config string.
void write_param_file(const std::filesystem::path& path, const std::string& config_string,
                      const std::vector<double>& params);
std::vector<double> read_param_file(const std::filesystem::path& path,
                                    const std::string& config_string);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lsf
