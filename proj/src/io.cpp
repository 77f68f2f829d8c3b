#include "rsfusion/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace rsfusion {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                      [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == b; });
}

float swap_bytes(float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, sizeof u);
    u = ((u & 0xFF) << 24) | ((u & 0xFF00) << 8) | ((u >> 8) & 0xFF00) | (u >> 24);
    std::memcpy(&v, &u, sizeof v);
    return v;
}

void write_png(const std::string& path, const cv::Mat& m) {
    bool ok = false;
    try {
        ok = cv::imwrite(path, m);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write " + path + ": " + e.what());
    }
    if (!ok) throw IoError("cannot write " + path);
}

}  // namespace

GrayImage load_image(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("cannot read image " + path);
    double scale = 1.0;
    switch (m.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        case CV_32F: scale = 1.0; break;
        default: throw IoError(path + ": unsupported sample depth");
    }
    cv::Mat f;
    m.convertTo(f, CV_32F, scale);

    const int w = f.cols, h = f.rows;
    GrayImage out(Image<float>(w, h));
    if (f.channels() == 1) {
        for (int y = 0; y < h; ++y) {
            const float* src = f.ptr<float>(y);
            std::copy(src, src + w, out.luma.row(y).begin());
        }
        return out;
    }
    if (f.channels() != 3 && f.channels() != 4) throw IoError(path + ": unsupported channel count");
    std::vector<Image<float>> planes(3, Image<float>(w, h));
    const int ch = f.channels();
    for (int y = 0; y < h; ++y) {
        const float* src = f.ptr<float>(y);
        for (int x = 0; x < w; ++x) {
            // OpenCV order is B, G, R.
            const float b = src[x * ch], g = src[x * ch + 1], r = src[x * ch + 2];
            planes[0](x, y) = r;
            planes[1](x, y) = g;
            planes[2](x, y) = b;
            out.luma(x, y) = 0.299f * r + 0.587f * g + 0.114f * b;
        }
    }
    out.color = std::move(planes);
    return out;
}

void save_gray_png(const std::string& path, const Image<float>& img, int bits) {
    if (bits != 8 && bits != 16) throw std::invalid_argument("PNG bit depth must be 8 or 16");
    const double full = bits == 8 ? 255.0 : 65535.0;
    cv::Mat m(img.height(), img.width(), bits == 8 ? CV_8UC1 : CV_16UC1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const long v = std::lround(std::clamp(static_cast<double>(img(x, y)), 0.0, 1.0) * full);
            if (bits == 8) {
                m.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(v);
            } else {
                m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(v);
            }
        }
    }
    write_png(path, m);
}

void write_pfm(std::ostream& os, const DisparityField& field) {
    os << "Pf\n" << field.width() << ' ' << field.height() << "\n-1.0\n";
    const bool big = std::endian::native == std::endian::big;
    std::vector<float> row(static_cast<std::size_t>(field.width()));
    for (int y = field.height() - 1; y >= 0; --y) {
        for (int x = 0; x < field.width(); ++x) {
            float v = field.valid(x, y) ? field.value(x, y) : std::numeric_limits<float>::infinity();
            row[static_cast<std::size_t>(x)] = big ? swap_bytes(v) : v;
        }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!os) throw IoError("failed writing PFM data");
}

void write_pfm(const std::string& path, const DisparityField& field) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_pfm(os, field);
}

DisparityField read_pfm(std::istream& is) {
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    is >> magic >> w >> h >> scale;
    if (!is || (magic != "Pf" && magic != "PF") || w <= 0 || h <= 0 || scale == 0.0) {
        throw IoError("malformed PFM header");
    }
    is.get();  // single whitespace before the raster
    const int channels = magic == "PF" ? 3 : 1;
    const bool file_little = scale < 0.0;
    const bool swap = file_little != (std::endian::native == std::endian::little);
    DisparityField out(w, h);
    std::vector<float> row(static_cast<std::size_t>(w) * channels);
    for (int y = h - 1; y >= 0; --y) {
        is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!is) throw IoError("truncated PFM raster");
        for (int x = 0; x < w; ++x) {
            float v = row[static_cast<std::size_t>(x) * channels];
            if (swap) v = swap_bytes(v);
            if (std::isfinite(v)) out.set(x, y, v);
        }
    }
    return out;
}

DisparityField read_pfm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    try {
        return read_pfm(is);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

void write_disparity_png(const std::string& path, const DisparityField& field, double d_min, double d_max,
                         const Mask* depth_occ) {
    cv::Mat m(field.height(), field.width(), CV_8UC1);
    const double span = d_max > d_min ? d_max - d_min : 1.0;
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            std::uint8_t v = 255;
            if (depth_occ && (*depth_occ)(x, y)) {
                v = 0;
            } else if (field.valid(x, y)) {
                const double s = std::clamp((field.value(x, y) - d_min) / span, 0.0, 1.0);
                v = static_cast<std::uint8_t>(1 + std::lround(s * 253.0));
            }
            m.at<std::uint8_t>(y, x) = v;
        }
    }
    write_png(path, m);
}

Mask read_mask_png(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw IoError("cannot read mask " + path);
    Mask out(m.cols, m.rows, 0);
    for (int y = 0; y < m.rows; ++y) {
        for (int x = 0; x < m.cols; ++x) out(x, y) = m.at<std::uint8_t>(y, x) != 0 ? 1 : 0;
    }
    return out;
}

void write_mask_png(const std::string& path, const Mask& mask) {
    cv::Mat m(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) m.at<std::uint8_t>(y, x) = mask(x, y) ? 255 : 0;
    }
    write_png(path, m);
}

void write_masks_overlay_png(const std::string& path, const Image<float>& left, const OcclusionMasks& masks) {
    cv::Mat m(left.height(), left.width(), CV_8UC3);
    for (int y = 0; y < left.height(); ++y) {
        for (int x = 0; x < left.width(); ++x) {
            const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(left(x, y), 0.0f, 1.0f) * 160.0f));
            cv::Vec3b px(g, g, g);  // B, G, R
            if (masks.stereo_occ(x, y)) px[2] = 255;
            if (masks.depth_occ(x, y)) px[0] = 255;
            if (masks.stereo_occ(x, y) || masks.depth_occ(x, y)) px[1] = 0;
            m.at<cv::Vec3b>(y, x) = px;
        }
    }
    write_png(path, m);
}

SparsePrior read_sparse_csv(std::istream& is) {
    SparsePrior out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x = 0, y = 0, d = 0;
        if (!(ls >> x >> y >> d)) {
            if (out.empty() && lineno == 1) continue;  // header
            throw IoError("sparse prior line " + std::to_string(lineno) + ": expected x,y,d");
        }
        if (x != std::floor(x) || y != std::floor(y)) {
            throw IoError("sparse prior line " + std::to_string(lineno) + ": pixel coordinates must be integers");
        }
        out.entries.push_back({{static_cast<int>(x), static_cast<int>(y)}, d});
    }
    return out;
}

void write_sparse_csv(std::ostream& os, const SparsePrior& prior) {
    os << "x,y,d\n";
    char buf[64];
    for (const auto& e : prior.entries) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.9g\n", e.pos.x, e.pos.y, e.disparity);
        os << buf;
    }
}

SparsePrior read_sparse_prior(const std::string& path) {
    if (ends_with(path, ".pfm")) {
        const DisparityField f = read_pfm(path);
        SparsePrior out;
        for (int y = 0; y < f.height(); ++y) {
            for (int x = 0; x < f.width(); ++x) {
                if (f.valid(x, y)) out.entries.push_back({{x, y}, f.value(x, y)});
            }
        }
        return out;
    }
    std::ifstream is(path);
    if (!is) throw IoError("cannot open sparse prior " + path);
    try {
        return read_sparse_csv(is);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

void write_sparse_prior(const std::string& path, const SparsePrior& prior) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_sparse_csv(os, prior);
}

}  // namespace rsfusion
