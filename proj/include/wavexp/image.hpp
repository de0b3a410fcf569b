#pragma once

#include <string>
#include <vector>

#include "wavexp/tensor.hpp"

namespace wavexp {

// Planar CHW float image, values in [0,1].
struct Image {
    int64_t c = 0, h = 0, w = 0;
    std::vector<float> data;

    Image() = default;
    Image(int64_t c_, int64_t h_, int64_t w_)
        : c(c_), h(h_), w(w_), data(static_cast<size_t>(c_ * h_ * w_), 0.0f) {}

    float& at(int64_t ch, int64_t y, int64_t x) {
        return data[static_cast<size_t>((ch * h + y) * w + x)];
    }
    float at(int64_t ch, int64_t y, int64_t x) const {
        return data[static_cast<size_t>((ch * h + y) * w + x)];
    }
};

// 8-bit RGB (grayscale and alpha inputs are expanded / composited on read).
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// [0,1] image <-> [-1,1] network tensor ([1,C,H,W] or [N,C,H,W] batches)
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, int64_t batch_index = 0);

// Horizontal/vertical tiling with a uniform gap, black background.
Image make_grid(const std::vector<Image>& tiles, int64_t cols, int64_t pad = 2);

}  // namespace wavexp
