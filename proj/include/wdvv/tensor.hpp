#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace wdvv {

/// Dense row-major grid with a runtime shape. Used for residual tensors
/// (four-index WDVV grids, Gauss/Ricci grids, relation residuals).
template <class T>
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, const T& fill)
        : shape_(std::move(shape)),
          data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>{}), fill) {}

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    template <class... I>
    T& operator()(I... idx) {
        return data_[flat({static_cast<std::size_t>(idx)...})];
    }
    template <class... I>
    const T& operator()(I... idx) const {
        return data_[flat({static_cast<std::size_t>(idx)...})];
    }

    T& at(std::span<const std::size_t> idx) { return data_[flat(idx)]; }
    const T& at(std::span<const std::size_t> idx) const { return data_[flat(idx)]; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    /// Multi-index of the flat position `pos`.
    std::vector<std::size_t> index_of(std::size_t pos) const {
        std::vector<std::size_t> idx(shape_.size());
        for (std::size_t d = shape_.size(); d-- > 0;) {
            idx[d] = pos % shape_[d];
            pos /= shape_[d];
        }
        return idx;
    }

private:
    std::size_t flat(std::initializer_list<std::size_t> idx) const {
        return flat(std::span<const std::size_t>(idx.begin(), idx.size()));
    }
    std::size_t flat(std::span<const std::size_t> idx) const {
        if (idx.size() != shape_.size()) throw std::out_of_range("tensor rank mismatch");
        std::size_t pos = 0;
        for (std::size_t d = 0; d < idx.size(); ++d) {
            if (idx[d] >= shape_[d]) throw std::out_of_range("tensor index out of range");
            pos = pos * shape_[d] + idx[d];
        }
        return pos;
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

}  // namespace wdvv
