#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cylrev {

template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int h, int w, T fill = T{}) : width(w), height(h), data(size_t(w) * h, fill) {}

    T& at(int row, int col) { return data[size_t(row) * width + col]; }
    const T& at(int row, int col) const { return data[size_t(row) * width + col]; }
    bool in_bounds(int row, int col) const {
        return row >= 0 && row < height && col >= 0 && col < width;
    }
    bool operator==(const Image&) const = default;
};

using LabelImage = Image<uint8_t>;
using DepthImage = Image<float>;

// 8-bit single-channel PNG; label value stored directly as the pixel value.
void save_png_gray(const LabelImage& img, const std::string& path);
LabelImage load_png_gray(const std::string& path);

}  // namespace cylrev
