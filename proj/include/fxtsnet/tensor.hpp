#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace fxtsnet {

// Dense row-major f64 array. Rank is 1 (vector, cols == 1) or 2 (matrix);
// scalars travel as length-1 vectors.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::initializer_list<double> values)
        : rows_(values.size()), cols_(1), data_(values) {}

    static Tensor zeros(std::size_t n) { return Tensor(n, 1); }

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data_[0] = v;
        return t;
    }

    static Tensor vector(std::vector<double> values) {
        Tensor t;
        t.rows_ = values.size();
        t.cols_ = 1;
        t.data_ = std::move(values);
        return t;
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
        if (values.size() != rows * cols)
            throw std::invalid_argument("Tensor::matrix: data length " +
                                        std::to_string(values.size()) + " != " +
                                        std::to_string(rows) + "x" + std::to_string(cols));
        Tensor t;
        t.rows_ = rows;
        t.cols_ = cols;
        t.data_ = std::move(values);
        return t;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_matrix() const { return cols_ > 1; }
    bool is_scalar() const { return data_.size() == 1; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        if (cols_ == 1) return "[" + std::to_string(rows_) + "]";
        return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
    }

private:
    Tensor(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows_ = 0;
    std::size_t cols_ = 1;
    std::vector<double> data_;
};

}  // namespace fxtsnet
