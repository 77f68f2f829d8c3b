#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rsfusion/core.hpp"

namespace rsfusion {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8/16-bit grey or colour PGM/PNG (anything OpenCV decodes). Colour input keeps its planes.
GrayImage load_image(const std::string& path);
/// `bits` is 8 or 16.
void save_gray_png(const std::string& path, const Image<float>& img, int bits = 8);

/// PFM, single channel, little-endian (scale -1). Invalid pixels are written as +inf.
void write_pfm(std::ostream& os, const DisparityField& field);
void write_pfm(const std::string& path, const DisparityField& field);
/// Non-finite samples read back as invalid.
DisparityField read_pfm(std::istream& is);
DisparityField read_pfm(const std::string& path);

/// Linear grey ramp over [d_min, d_max] in 1..254; invalid = 255, depth-occluded = 0.
void write_disparity_png(const std::string& path, const DisparityField& field, double d_min, double d_max,
                         const Mask* depth_occ = nullptr);

/// Non-zero pixels are set.
Mask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const Mask& mask);

/// Left image in grey with stereo occlusions in red and depth occlusions in blue.
void write_masks_overlay_png(const std::string& path, const Image<float>& left, const OcclusionMasks& masks);

/// `x,y,d` per line; blank lines, `#` comments and a non-numeric header line are skipped.
SparsePrior read_sparse_csv(std::istream& is);
void write_sparse_csv(std::ostream& os, const SparsePrior& prior);
/// CSV, or a PFM sparse map when the extension is .pfm.
SparsePrior read_sparse_prior(const std::string& path);
void write_sparse_prior(const std::string& path, const SparsePrior& prior);

}  // namespace rsfusion
