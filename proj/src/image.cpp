#include "wavexp/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "wavexp/common.hpp"

namespace wavexp {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t to_byte(float v) {
    const float c = std::min(1.0f, std::max(0.0f, v));
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
    check(img.c == 1 || img.c == 3, "write_png: need 1 or 3 channels, got ", img.c);
    check(img.h > 0 && img.w > 0, "write_png: empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    check(fp != nullptr, "write_png: cannot open ", path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    check(png != nullptr, "write_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("write_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("write_png: libpng error while writing ", path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.w),
                 static_cast<png_uint_32>(img.h), 8,
                 img.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.w * img.c));
    for (int64_t y = 0; y < img.h; ++y) {
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t ch = 0; ch < img.c; ++ch)
                row[static_cast<size_t>(x * img.c + ch)] = to_byte(img.at(ch, y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    check(fp != nullptr, "read_png: cannot open ", path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    check(png != nullptr, "read_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("read_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("read_png: libpng error while reading ", path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // normalize everything to 8-bit RGB
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int64_t w = png_get_image_width(png, info);
    const int64_t h = png_get_image_height(png, info);
    check(png_get_channels(png, info) == 3, "read_png: unexpected channel count");

    Image img(3, h, w);
    std::vector<uint8_t> row(static_cast<size_t>(w * 3));
    for (int64_t y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int64_t x = 0; x < w; ++x)
            for (int64_t ch = 0; ch < 3; ++ch)
                img.at(ch, y, x) =
                    static_cast<float>(row[static_cast<size_t>(x * 3 + ch)]) / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Tensor image_to_tensor(const Image& img) {
    check(img.c > 0 && img.h > 0 && img.w > 0, "image_to_tensor: empty image");
    std::vector<float> v(img.data.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = img.data[i] * 2.0f - 1.0f;
    return Tensor::from_data({1, img.c, img.h, img.w}, std::move(v));
}

Image tensor_to_image(const Tensor& t, int64_t batch_index) {
    check(t.defined() && t.rank() == 4, "tensor_to_image: need [N,C,H,W]");
    check(batch_index >= 0 && batch_index < t.dim(0),
          "tensor_to_image: batch index ", batch_index, " out of range");
    Image img(t.dim(1), t.dim(2), t.dim(3));
    const int64_t plane = t.dim(1) * t.dim(2) * t.dim(3);
    const float* src = t.data() + batch_index * plane;
    for (int64_t i = 0; i < plane; ++i)
        img.data[static_cast<size_t>(i)] =
            std::min(1.0f, std::max(0.0f, (src[i] + 1.0f) * 0.5f));
    return img;
}

Image make_grid(const std::vector<Image>& tiles, int64_t cols, int64_t pad) {
    check(!tiles.empty(), "make_grid: no tiles");
    check(cols >= 1, "make_grid: cols must be positive");
    const int64_t c = tiles[0].c, th = tiles[0].h, tw = tiles[0].w;
    for (const Image& t : tiles)
        check(t.c == c && t.h == th && t.w == tw, "make_grid: mixed tile sizes");
    const int64_t n = static_cast<int64_t>(tiles.size());
    const int64_t rows = (n + cols - 1) / cols;
    Image out(c, rows * th + (rows + 1) * pad, cols * tw + (cols + 1) * pad);
    for (int64_t i = 0; i < n; ++i) {
        const int64_t r = i / cols, col = i % cols;
        const int64_t y0 = pad + r * (th + pad), x0 = pad + col * (tw + pad);
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t y = 0; y < th; ++y)
                for (int64_t x = 0; x < tw; ++x)
                    out.at(ch, y0 + y, x0 + x) = tiles[static_cast<size_t>(i)].at(ch, y, x);
    }
    return out;
}

}  // namespace wavexp
