#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "meltcast/date.hpp"

namespace meltcast {

/// Dense row-major matrix of feature values.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    void append_row(std::span<const double> values);

    /// Returns a copy containing only `indices`, in that order.
    [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const;

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Time-indexed supervised data: one response per date plus its features.
struct Dataset {
    std::vector<Date> dates;
    std::vector<std::string> feature_names;
    Matrix features;
    std::vector<double> response;

    [[nodiscard]] std::size_t size() const noexcept { return response.size(); }
    /// Throws ConfigError when the parts disagree in length or width.
    void validate() const;
};

}  // namespace meltcast
