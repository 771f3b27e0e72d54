#include "lf/io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lf {

void write_pfm(const std::string& path, const double* data, int h, int w, int c) {
    if (c != 1 && c != 3) throw std::invalid_argument("write_pfm: channels must be 1 or 3");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pfm: cannot open " + path);
    f << (c == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n" << "-1.0" << "\n";
    std::vector<float> row(static_cast<std::size_t>(w) * c);
    for (int y = h - 1; y >= 0; --y) {
        const double* src = data + static_cast<std::size_t>(y) * w * c;
        for (int i = 0; i < w * c; ++i) row[i] = static_cast<float>(src[i]);
        f.write(reinterpret_cast<const char*>(row.data()), sizeof(float) * row.size());
    }
    if (!f) throw std::runtime_error("write_pfm: write failed for " + path);
}

void read_pfm(const std::string& path, std::vector<double>& data, int& h, int& w, int& c) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_pfm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic == "PF") c = 3;
    else if (magic == "Pf") c = 1;
    else throw std::runtime_error("read_pfm: bad magic in " + path);
    double scale;
    f >> w >> h >> scale;
    if (!f || w <= 0 || h <= 0) throw std::runtime_error("read_pfm: bad header in " + path);
    f.get();  // single whitespace after scale
    const bool littleEndian = scale < 0;
    std::vector<float> row(static_cast<std::size_t>(w) * c);
    data.resize(static_cast<std::size_t>(h) * w * c);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), sizeof(float) * row.size());
        if (!f) throw std::runtime_error("read_pfm: truncated data in " + path);
        double* dst = data.data() + static_cast<std::size_t>(y) * w * c;
        for (int i = 0; i < w * c; ++i) {
            float v = row[i];
            if (!littleEndian) {
                unsigned char* b = reinterpret_cast<unsigned char*>(&v);
                std::swap(b[0], b[3]);
                std::swap(b[1], b[2]);
            }
            dst[i] = v;
        }
    }
}

void write_pfm(const std::string& path, const Image& img) {
    write_pfm(path, img.data.data(), img.h, img.w, img.c);
}
void write_pfm(const std::string& path, const DisparityMap& d) {
    write_pfm(path, d.data.data(), d.h, d.w, 1);
}

Image read_pfm_image(const std::string& path) {
    std::vector<double> data;
    int h, w, c;
    read_pfm(path, data, h, w, c);
    Image img(h, w, c);
    img.data = std::move(data);
    return img;
}

DisparityMap read_pfm_disparity(const std::string& path) {
    std::vector<double> data;
    int h, w, c;
    read_pfm(path, data, h, w, c);
    if (c != 1) throw std::runtime_error("read_pfm_disparity: expected 1 channel in " + path);
    DisparityMap d(h, w);
    d.data = std::move(data);
    return d;
}

namespace {

struct PngCloser {
    FILE* f = nullptr;
    ~PngCloser() { if (f) std::fclose(f); }
};

}  // namespace

void write_png16(const std::string& path, const Image& img) {
    PngCloser fc;
    fc.f = std::fopen(path.c_str(), "wb");
    if (!fc.f) throw std::runtime_error("write_png16: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("write_png16: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png16: libpng error writing " + path);
    }
    png_init_io(png, fc.f);
    png_set_IHDR(png, info, img.w, img.h, 16,
                 img.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<std::size_t>(img.w) * img.c * 2);
    for (int y = 0; y < img.h; ++y) {
        for (int i = 0; i < img.w * img.c; ++i) {
            double v = img.data[static_cast<std::size_t>(y) * img.w * img.c + i];
            v = std::clamp(v, 0.0, 1.0);
            unsigned q = static_cast<unsigned>(std::lround(v * 65535.0));
            row[2 * i] = static_cast<unsigned char>(q >> 8);
            row[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
    PngCloser fc;
    fc.f = std::fopen(path.c_str(), "rb");
    if (!fc.f) throw std::runtime_error("read_png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("read_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: libpng error reading " + path);
    }
    png_init_io(png, fc.f);
    png_read_info(png, info);
    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bitDepth = png_get_bit_depth(png, info);
    int colorType = png_get_color_type(png, info);
    if (colorType == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (colorType == PNG_COLOR_TYPE_GRAY && bitDepth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (colorType & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    bitDepth = png_get_bit_depth(png, info);
    colorType = png_get_color_type(png, info);
    const int c = (colorType == PNG_COLOR_TYPE_RGB) ? 3 : 1;
    const double denom = bitDepth == 16 ? 65535.0 : 255.0;
    Image img(static_cast<int>(h), static_cast<int>(w), c);
    std::vector<unsigned char> row(png_get_rowbytes(png, info));
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 i = 0; i < w * static_cast<png_uint_32>(c); ++i) {
            unsigned q = bitDepth == 16 ? (static_cast<unsigned>(row[2 * i]) << 8) | row[2 * i + 1]
                                        : row[i];
            img.data[static_cast<std::size_t>(y) * w * c + i] = q / denom;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

namespace {

Image load_view_file(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".png") return read_png(path);
    return read_pfm_image(path);
}

}  // namespace

void save_container(const LfContainer& c, const std::string& dir, bool png) {
    c.lf.validate();
    fs::create_directories(dir);
    json m;
    m["U"] = c.lf.U();
    m["H"] = c.lf.H();
    m["W"] = c.lf.W();
    m["C"] = c.lf.C();
    m["dmax"] = c.dmax ? json(*c.dmax) : json(nullptr);
    m["views"] = json::array();
    const std::string ext = png ? ".png" : ".pfm";
    for (int u = 0; u < c.lf.U(); ++u) {
        char name[64];
        std::snprintf(name, sizeof(name), "view_%03d%s", u, ext.c_str());
        if (png) write_png16(dir + "/" + name, c.lf.views[u]);
        else write_pfm(dir + "/" + name, c.lf.views[u]);
        json v;
        v["u"] = u;
        v["image"] = name;
        if (u < static_cast<int>(c.hasDisparity.size()) && c.hasDisparity[u]) {
            char dname[64];
            std::snprintf(dname, sizeof(dname), "gt_disparity_%03d.pfm", u);
            write_pfm(dir + "/" + dname, c.disparities[u]);
            v["disparity"] = dname;
        } else {
            v["disparity"] = nullptr;
        }
        m["views"].push_back(v);
    }
    std::ofstream f(dir + "/manifest.json");
    if (!f) throw std::runtime_error("save_container: cannot write manifest in " + dir);
    f << m.dump(2) << "\n";
}

LfContainer load_container(const std::string& dir) {
    const std::string mpath = dir + "/manifest.json";
    std::ifstream f(mpath);
    if (!f) throw std::runtime_error("load_container: missing manifest " + mpath);
    json m;
    try {
        f >> m;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_container: malformed manifest " + mpath + ": " + e.what());
    }
    for (const char* key : {"U", "H", "W", "C", "views"})
        if (!m.contains(key))
            throw std::runtime_error("load_container: manifest missing key '" + std::string(key) + "'");
    const int U = m["U"].get<int>();
    const int H = m["H"].get<int>();
    const int W = m["W"].get<int>();
    const int C = m["C"].get<int>();
    if (U < 1 || H < 1 || W < 1 || (C != 1 && C != 3))
        throw std::runtime_error("load_container: manifest dimensions invalid");
    if (static_cast<int>(m["views"].size()) != U)
        throw std::runtime_error("load_container: manifest declares U=" + std::to_string(U) +
                                 " but lists " + std::to_string(m["views"].size()) + " views");
    LfContainer c;
    c.lf.views.resize(U);
    c.disparities.resize(U);
    c.hasDisparity.assign(U, false);
    c.viewFiles.resize(U);
    if (m.contains("dmax") && !m["dmax"].is_null()) c.dmax = m["dmax"].get<double>();
    std::vector<bool> seen(U, false);
    for (const auto& v : m["views"]) {
        const int u = v.at("u").get<int>();
        if (u < 0 || u >= U || seen[u])
            throw std::runtime_error("load_container: bad or duplicate view index " + std::to_string(u));
        seen[u] = true;
        const std::string img = v.at("image").get<std::string>();
        const std::string ipath = dir + "/" + img;
        if (!fs::exists(ipath))
            throw std::runtime_error("load_container: view " + std::to_string(u) +
                                     ": missing image file " + ipath);
        c.lf.views[u] = load_view_file(ipath);
        c.viewFiles[u] = img;
        if (c.lf.views[u].h != H || c.lf.views[u].w != W || c.lf.views[u].c != C)
            throw std::runtime_error("load_container: view " + std::to_string(u) +
                                     ": dimensions disagree with manifest");
        clamp01(c.lf.views[u]);
        if (v.contains("disparity") && !v["disparity"].is_null()) {
            const std::string dpath = dir + "/" + v["disparity"].get<std::string>();
            if (!fs::exists(dpath))
                throw std::runtime_error("load_container: view " + std::to_string(u) +
                                         ": missing disparity file " + dpath);
            c.disparities[u] = read_pfm_disparity(dpath);
            if (c.disparities[u].h != H || c.disparities[u].w != W)
                throw std::runtime_error("load_container: view " + std::to_string(u) +
                                         ": disparity dimensions disagree with manifest");
            c.hasDisparity[u] = true;
        }
    }
    for (int u = 0; u < U; ++u)
        if (!seen[u])
            throw std::runtime_error("load_container: view " + std::to_string(u) + " absent from manifest");
    return c;
}

LightField3D load_lf(const std::string& dir) { return load_container(dir).lf; }

void save_lf(const LightField3D& lf, const std::string& dir, bool png) {
    LfContainer c;
    c.lf = lf;
    c.hasDisparity.assign(lf.U(), false);
    c.disparities.resize(lf.U());
    save_container(c, dir, png);
}

}  // namespace lf
