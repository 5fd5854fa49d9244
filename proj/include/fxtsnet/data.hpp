#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxtsnet/tensor.hpp"

// Synthetic 2-D classification sets (moons, circles, blobs), IDX image
// files, deterministic splits/batching, and per-feature standardization
// (train stats applied to test).

namespace fxtsnet::data {

struct Dataset {
    std::string name;
    Tensor X;  // n x d matrix
    std::vector<int> y;
    // image geometry for IDX round-trips; 0 for synthetic data
    int img_rows = 0;
    int img_cols = 0;
    // per-feature normalization stats (empty until normalization is applied)
    Tensor feat_mean;
    Tensor feat_std;

    std::size_t size() const { return y.size(); }
    std::size_t dim() const { return X.cols(); }
    int n_classes() const;
    Tensor sample(std::size_t i) const;  // one row as a vector
};

Dataset make_moons(int n, double noise, std::uint64_t seed);
Dataset make_circles(int n, double noise, std::uint64_t seed, double factor = 0.5);
Dataset make_blobs(int n, int centers, double noise, std::uint64_t seed);

// IDX: big-endian magic 0x00000803 (images) / 0x00000801 (labels); pixels
// are scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void write_idx(const std::string& images_path, const std::string& labels_path, const Dataset& ds);

// CSV with header x0,...,x{d-1},label.
void export_csv(const std::string& path, const Dataset& ds);

struct Split {
    Dataset train;
    Dataset test;
};

// Shuffled, disjoint, exhaustive.
Split split(const Dataset& ds, double train_frac, std::uint64_t seed);

// Standardize features with train-set stats; applied to both halves.
void normalize_standard(Split& s);

// Deterministic batch order per (seed, epoch); the last short batch is kept.
class Batcher {
public:
    Batcher(std::size_t n, int batch, std::uint64_t seed);
    std::vector<std::vector<std::size_t>> epoch(int e) const;

private:
    std::size_t n_;
    int batch_;
    std::uint64_t seed_;
};

}  // namespace fxtsnet::data
