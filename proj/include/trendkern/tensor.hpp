#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace trendkern::num {

/// Dense row-major tensor of 64-bit floats. Scalars are shape {1}.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros(const std::vector<int>& shape);
    static Tensor full(const std::vector<int>& shape, double value);
    static Tensor scalar(double value);
    static Tensor row(std::vector<double> values);                        // shape {n}
    static Tensor matrix(int rows, int cols, std::vector<double> data);   // shape {rows, cols}

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& at(int i) { return data_[static_cast<size_t>(i)]; }
    double at(int i) const { return data_[static_cast<size_t>(i)]; }
    double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<int>& shape);

/// Deterministic random source. The engine is std::mt19937_64 (fully
/// specified by the standard); the transforms below are hand-rolled so a
/// given seed yields the same stream on every platform. Distribution
/// classes from <random> are deliberately not used: their output is
/// implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal(double mean = 0.0, double stddev = 1.0);
    int uniform_int(int lo, int hi);        // inclusive on both ends

    /// Derives an independent stream seed, e.g. per (epoch, anchor).
    static uint64_t derive(uint64_t seed, uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace trendkern::num
