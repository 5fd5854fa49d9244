#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fxtsnet/train.hpp"

// Flat key-value run configuration with section prefixes (model.*, solver.*,
// fxts.*, train.*, data.*, attack.*, output.*, sweep.*). Sources in
// increasing precedence: config file, FXTSNET_<SECTION>_<KEY> environment
// variables, --set key=value flags. Unknown keys are rejected.

namespace fxtsnet::config {

struct RunConfig {
    // data
    std::string data_kind = "moons";  // moons|circles|blobs|idx
    int data_n = 2000;
    double data_noise = 0.1;
    int data_centers = 3;
    double train_frac = 0.75;
    std::string data_images;  // idx paths
    std::string data_labels;
    std::string normalize = "standard";  // standard|none (idx data is never standardized)

    // model dims; d_x and classes <= 0 mean "derive from the dataset"
    int d_x = 0;
    int d_c = 16;
    int d_h = 16;
    int hidden = 32;
    int classes = 0;

    // solver
    int knots = 5;
    int substeps = 4;

    // fxts
    double alpha1 = 10.0;
    double alpha2 = 1.0;
    double mu = 2.0;
    double lambda = 1.0;
    int n_delta = 16;
    double varsigma_max = 1.2;

    // train
    double lr = 0.01;
    int epochs = 50;
    double anchor_box = 1.0;  // projection box half-width for the inner loop
    double inner_lr = 2.0;
    int inner_iters = 3;
    int batch = 64;
    std::uint64_t seed = 1;
    std::string mode = "fxts";  // fxts|baseline

    // attack / eval
    std::vector<std::string> attack_kinds = {"fgsm"};
    std::vector<double> attack_magnitudes = {0.05, 0.1, 0.2};
    int attack_steps = 10;
    double attack_step_size = 0.0;  // 0 -> epsilon/4

    // output
    std::string out_dir = "out";

    // sweep
    int sweep_max_cells = 64;
    std::map<std::string, std::vector<std::string>> sweep_grid;  // base key -> values

    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Applies file (optional), then environment, then --set overrides.
RunConfig load(const std::string& file_path, const std::vector<std::string>& overrides);

// Sets one key on an existing config (used by the sweep expansion).
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical "key=value\n" dump over all schema keys (sweep dedup hashes it).
std::string canonical_string(const RunConfig& cfg);

// Helpers shared with the CLI.
train::TrainConfig to_train_config(const RunConfig& cfg, int d_x, int classes);

}  // namespace fxtsnet::config
