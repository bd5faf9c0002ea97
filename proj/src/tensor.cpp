#include "rsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rsr/errors.hpp"

namespace rsr {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

static void check_shape(const Shape& shape) {
    if (shape.empty()) throw ArgumentError("tensor shape must have at least one axis");
    for (auto d : shape) {
        if (d == 0) throw ArgumentError("tensor shape " + shape_to_string(shape) + " has a zero extent");
    }
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_size(shape_)) {
        throw ArgumentError("tensor of shape " + shape_to_string(shape_) + " needs " +
                            std::to_string(shape_size(shape_)) + " values, got " +
                            std::to_string(data_.size()));
    }
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ArgumentError("axis " + std::to_string(axis) + " out of range for rank " +
                            std::to_string(shape_.size()));
    }
    return shape_[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) throw ArgumentError("index rank does not match tensor rank");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= shape_[axis]) throw ArgumentError("index out of range on axis " + std::to_string(axis));
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

float& Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
float Tensor::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

Tensor Tensor::reshaped(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
    check_shape(shape);
    if (shape_size(shape) != data_.size()) {
        throw ArgumentError("cannot reshape " + shape_to_string(shape_) + " into " + shape_to_string(shape));
    }
    shape_ = std::move(shape);
    return std::move(*this);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ArgumentError("shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
    float m = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace rsr
