#include "meltcast/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "meltcast/dataset.hpp"
#include "meltcast/errors.hpp"

namespace meltcast {

std::size_t lower_quantile_rank(double p, std::size_t n) {
    if (n == 0) throw DomainError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    double scaled = p * static_cast<double>(n);
    const double nearest = std::round(scaled);
    if (std::abs(scaled - nearest) < 1e-9) scaled = nearest;
    auto k = static_cast<std::size_t>(std::ceil(scaled));
    return std::clamp<std::size_t>(k, 1, n);
}

double lower_quantile_inplace(std::span<double> scratch, double p) {
    const std::size_t k = lower_quantile_rank(p, scratch.size());
    auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(scratch.begin(), nth, scratch.end());
    return *nth;
}

double lower_quantile(std::span<const double> values, double p) {
    std::vector<double> copy(values.begin(), values.end());
    return lower_quantile_inplace(copy, p);
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw ConfigError("row width does not match matrix width");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = row(indices[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

void Dataset::validate() const {
    if (features.rows() != response.size() || dates.size() != response.size())
        throw ConfigError("dataset parts have inconsistent lengths");
    if (!response.empty() && features.cols() != feature_names.size())
        throw ConfigError("dataset feature names do not match feature width");
}

}  // namespace meltcast
