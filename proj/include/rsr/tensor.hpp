#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rsr {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Row-major float32 array with an explicit shape. Carries image features,
/// depth distributions, voxel volumes and elevation maps.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, float value) { return Tensor(std::move(shape), value); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float* data() noexcept { return data_.data(); }
    const float* data() const noexcept { return data_.data(); }
    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }
    const std::vector<float>& buffer() const noexcept { return data_; }

    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    // Multi-index access; the index count must equal the rank.
    float& at(std::initializer_list<std::size_t> index);
    float at(std::initializer_list<std::size_t> index) const;
    std::size_t offset(std::initializer_list<std::size_t> index) const;

    // Same buffer under a new shape with an equal element count.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    bool all_finite() const noexcept;

private:
    Shape shape_;
    std::vector<float> data_;
};

float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rsr
