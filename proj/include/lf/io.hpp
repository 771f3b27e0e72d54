#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lf/image.hpp"

namespace lf {

// PFM: header PF (3ch) / Pf (1ch), "W H", negative scale = little-endian,
// rows stored bottom to top, 4-byte floats.
void write_pfm(const std::string& path, const double* data, int h, int w, int c);
void read_pfm(const std::string& path, std::vector<double>& data, int& h, int& w, int& c);

void write_pfm(const std::string& path, const Image& img);
void write_pfm(const std::string& path, const DisparityMap& d);
Image read_pfm_image(const std::string& path);
DisparityMap read_pfm_disparity(const std::string& path);

// 16-bit PNG, values quantized from [0,1]; out-of-range input is clamped.
void write_png16(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// LF container: directory with manifest.json + one image file per view,
// optional per-view disparity files and global disparity range.
struct LfContainer {
    LightField3D lf;
    std::vector<DisparityMap> disparities;  // indexed by u, empty map if absent
    std::vector<bool> hasDisparity;
    std::optional<double> dmax;
    std::vector<std::string> viewFiles;
};

void save_container(const LfContainer& c, const std::string& dir, bool png = false);
LfContainer load_container(const std::string& dir);

LightField3D load_lf(const std::string& dir);
void save_lf(const LightField3D& lf, const std::string& dir, bool png = false);

}  // namespace lf
