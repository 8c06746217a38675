#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cva::net {

/// Batch of (height, width, depth, channels) activations, channels fastest.
struct Shape {
    int batch = 1;
    int height = 1;
    int width = 1;
    int depth = 1;
    int channels = 1;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(batch) * height * width * depth * channels;
    }
    /// Elements per sample.
    std::size_t sample_size() const noexcept { return static_cast<std::size_t>(height) * width * depth * channels; }
    bool operator==(const Shape&) const = default;
};

template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{}) : shape_(shape) {
        if (shape.batch < 1 || shape.height < 1 || shape.width < 1 || shape.depth < 1 || shape.channels < 1)
            throw std::invalid_argument("Tensor: every dimension must be >= 1");
        data_.assign(shape.size(), fill);
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t offset(int n, int h, int w, int d, int c) const noexcept {
        return (((static_cast<std::size_t>(n) * shape_.height + h) * shape_.width + w) * shape_.depth + d) *
                   shape_.channels +
               c;
    }

    T& operator()(int n, int h, int w, int d, int c) { return data_[offset(n, h, w, d, c)]; }
    const T& operator()(int n, int h, int w, int d, int c) const { return data_[offset(n, h, w, d, c)]; }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

private:
    Shape shape_{};
    std::vector<T> data_;
};

}  // namespace cva::net
