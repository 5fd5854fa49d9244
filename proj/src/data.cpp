#include "fxtsnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "fxtsnet/rng.hpp"

namespace fxtsnet::data {

namespace {
constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("data: " + msg); }
}  // namespace

int Dataset::n_classes() const {
    int c = 0;
    for (int label : y) c = std::max(c, label + 1);
    return c;
}

Tensor Dataset::sample(std::size_t i) const {
    const std::size_t d = dim();
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = X.at(i, j);
    return Tensor::vector(std::move(row));
}

Dataset make_moons(int n, double noise, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("make_moons: n must be even and >= 2");
    if (noise < 0.0) throw std::invalid_argument("make_moons: noise must be >= 0");
    const int half = n / 2;
    Rng rng = Rng::derive(seed, "data");
    std::vector<double> xs(static_cast<std::size_t>(n) * 2);
    std::vector<int> ys(static_cast<std::size_t>(n));
    for (int k = 0; k < half; ++k) {
        const double t = half > 1 ? kPi * k / (half - 1) : 0.0;
        xs[2 * static_cast<std::size_t>(k)] = std::cos(t);
        xs[2 * static_cast<std::size_t>(k) + 1] = std::sin(t);
        ys[static_cast<std::size_t>(k)] = 0;
        const auto j = static_cast<std::size_t>(half + k);
        xs[2 * j] = 1.0 - std::cos(t);
        xs[2 * j + 1] = 0.5 - std::sin(t);
        ys[j] = 1;
    }
    if (noise > 0.0)
        for (auto& v : xs) v += noise * rng.normal();
    Dataset ds;
    ds.name = "moons";
    ds.X = Tensor::matrix(static_cast<std::size_t>(n), 2, std::move(xs));
    ds.y = std::move(ys);
    return ds;
}

Dataset make_circles(int n, double noise, std::uint64_t seed, double factor) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("make_circles: n must be even and >= 2");
    if (noise < 0.0) throw std::invalid_argument("make_circles: noise must be >= 0");
    if (!(factor > 0.0 && factor < 1.0))
        throw std::invalid_argument("make_circles: factor must be in (0, 1)");
    const int half = n / 2;
    Rng rng = Rng::derive(seed, "data");
    std::vector<double> xs(static_cast<std::size_t>(n) * 2);
    std::vector<int> ys(static_cast<std::size_t>(n));
    for (int k = 0; k < half; ++k) {
        const double t = 2.0 * kPi * k / half;
        xs[2 * static_cast<std::size_t>(k)] = std::cos(t);
        xs[2 * static_cast<std::size_t>(k) + 1] = std::sin(t);
        ys[static_cast<std::size_t>(k)] = 0;
        const auto j = static_cast<std::size_t>(half + k);
        xs[2 * j] = factor * std::cos(t);
        xs[2 * j + 1] = factor * std::sin(t);
        ys[j] = 1;
    }
    if (noise > 0.0)
        for (auto& v : xs) v += noise * rng.normal();
    Dataset ds;
    ds.name = "circles";
    ds.X = Tensor::matrix(static_cast<std::size_t>(n), 2, std::move(xs));
    ds.y = std::move(ys);
    return ds;
}

Dataset make_blobs(int n, int centers, double noise, std::uint64_t seed) {
    if (n < centers || centers < 2) throw std::invalid_argument("make_blobs: need n >= centers >= 2");
    if (noise < 0.0) throw std::invalid_argument("make_blobs: noise must be >= 0");
    Rng rng = Rng::derive(seed, "data");
    std::vector<double> cx(static_cast<std::size_t>(centers)), cy(cx.size());
    for (int c = 0; c < centers; ++c) {
        cx[static_cast<std::size_t>(c)] = rng.uniform(-2.0, 2.0);
        cy[static_cast<std::size_t>(c)] = rng.uniform(-2.0, 2.0);
    }
    std::vector<double> xs(static_cast<std::size_t>(n) * 2);
    std::vector<int> ys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int c = i % centers;
        xs[2 * static_cast<std::size_t>(i)] = cx[static_cast<std::size_t>(c)] + noise * rng.normal();
        xs[2 * static_cast<std::size_t>(i) + 1] =
            cy[static_cast<std::size_t>(c)] + noise * rng.normal();
        ys[static_cast<std::size_t>(i)] = c;
    }
    Dataset ds;
    ds.name = "blobs";
    ds.X = Tensor::matrix(static_cast<std::size_t>(n), 2, std::move(xs));
    ds.y = std::move(ys);
    return ds;
}

// ---- IDX ------------------------------------------------------------------------

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) fail("truncated file reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) fail("cannot open images file '" + images_path + "'");
    if (read_u32_be(img, "images magic") != 0x00000803u)
        fail("bad magic in images file '" + images_path + "'");
    const std::uint32_t count = read_u32_be(img, "image count");
    const std::uint32_t rows = read_u32_be(img, "image rows");
    const std::uint32_t cols = read_u32_be(img, "image cols");
    const std::size_t d = std::size_t(rows) * cols;
    std::vector<unsigned char> raw(std::size_t(count) * d);
    if (!img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        fail("truncated images file '" + images_path + "'");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) fail("cannot open labels file '" + labels_path + "'");
    if (read_u32_be(lab, "labels magic") != 0x00000801u)
        fail("bad magic in labels file '" + labels_path + "'");
    const std::uint32_t lcount = read_u32_be(lab, "label count");
    if (lcount != count) fail("image/label count mismatch");
    std::vector<unsigned char> labels(lcount);
    if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(lcount)))
        fail("truncated labels file '" + labels_path + "'");

    std::vector<double> xs(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) xs[i] = raw[i] / 255.0;
    Dataset ds;
    ds.name = "idx";
    ds.X = Tensor::matrix(count, d, std::move(xs));
    ds.y.assign(labels.begin(), labels.end());
    ds.img_rows = static_cast<int>(rows);
    ds.img_cols = static_cast<int>(cols);
    return ds;
}

void write_idx(const std::string& images_path, const std::string& labels_path, const Dataset& ds) {
    if (ds.img_rows <= 0 || ds.img_cols <= 0) fail("write_idx: dataset has no image geometry");
    if (std::size_t(ds.img_rows) * std::size_t(ds.img_cols) != ds.dim())
        fail("write_idx: geometry does not match feature dim");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) fail("cannot open '" + images_path + "' for writing");
    write_u32_be(img, 0x00000803u);
    write_u32_be(img, static_cast<std::uint32_t>(ds.size()));
    write_u32_be(img, static_cast<std::uint32_t>(ds.img_rows));
    write_u32_be(img, static_cast<std::uint32_t>(ds.img_cols));
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            const long b = std::lround(ds.X.at(i, j) * 255.0);
            const auto byte = static_cast<unsigned char>(std::clamp(b, 0L, 255L));
            img.write(reinterpret_cast<const char*>(&byte), 1);
        }
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) fail("cannot open '" + labels_path + "' for writing");
    write_u32_be(lab, 0x00000801u);
    write_u32_be(lab, static_cast<std::uint32_t>(ds.size()));
    for (int label : ds.y) {
        const auto byte = static_cast<unsigned char>(label);
        lab.write(reinterpret_cast<const char*>(&byte), 1);
    }
}

void export_csv(const std::string& path, const Dataset& ds) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) fail("cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < ds.dim(); ++j) std::fprintf(f, "x%zu,", j);
    std::fprintf(f, "label\n");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) std::fprintf(f, "%.17g,", ds.X.at(i, j));
        std::fprintf(f, "%d\n", ds.y[i]);
    }
    std::fclose(f);
}

// ---- split / normalize / batch ---------------------------------------------------

namespace {

Dataset take(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.name = ds.name;
    out.img_rows = ds.img_rows;
    out.img_cols = ds.img_cols;
    const std::size_t d = ds.dim();
    std::vector<double> xs(idx.size() * d);
    out.y.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) xs[i * d + j] = ds.X.at(idx[i], j);
        out.y.push_back(ds.y[idx[i]]);
    }
    out.X = Tensor::matrix(idx.size(), d, std::move(xs));
    return out;
}

}  // namespace

Split split(const Dataset& ds, double train_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::invalid_argument("split: train_frac must be in (0, 1)");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = Rng::derive(seed, "split");
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * double(ds.size())));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<long>(n_train));
    std::vector<std::size_t> test_idx(idx.begin() + static_cast<long>(n_train), idx.end());
    return {take(ds, train_idx), take(ds, test_idx)};
}

void normalize_standard(Split& s) {
    const std::size_t d = s.train.dim();
    const std::size_t n = s.train.size();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += s.train.X.at(i, j);
    for (std::size_t j = 0; j < d; ++j) mean[j] /= double(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = s.train.X.at(i, j) - mean[j];
            sd[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        sd[j] = std::sqrt(sd[j] / double(n));
        if (sd[j] < 1e-12) sd[j] = 1.0;  // constant feature
    }
    auto apply = [&](Dataset& ds) {
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::size_t j = 0; j < d; ++j)
                ds.X.at(i, j) = (ds.X.at(i, j) - mean[j]) / sd[j];
        ds.feat_mean = Tensor::vector(std::vector<double>(mean));
        ds.feat_std = Tensor::vector(std::vector<double>(sd));
    };
    apply(s.train);
    apply(s.test);
}

Batcher::Batcher(std::size_t n, int batch, std::uint64_t seed) : n_(n), batch_(batch), seed_(seed) {
    if (batch < 1) throw std::invalid_argument("batcher: batch must be >= 1");
}

std::vector<std::vector<std::size_t>> Batcher::epoch(int e) const {
    std::vector<std::size_t> idx(n_);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = Rng::derive(seed_ + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(e + 1),
                          "batch");
    rng.shuffle(idx);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t at = 0; at < n_; at += static_cast<std::size_t>(batch_)) {
        const std::size_t end = std::min(n_, at + static_cast<std::size_t>(batch_));
        batches.emplace_back(idx.begin() + static_cast<long>(at),
                             idx.begin() + static_cast<long>(end));
    }
    return batches;
}

}  // namespace fxtsnet::data
