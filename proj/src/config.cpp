#include "fxtsnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace fxtsnet::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_num(const std::string& key, const std::string& value);

template <>
double parse_num<double>(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    }
    if (pos != value.size())
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    return v;
}

template <>
int parse_num<int>(const std::string& key, const std::string& value) {
    const double v = parse_num<double>(key, value);
    const int i = static_cast<int>(v);
    if (double(i) != v)
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    return i;
}

template <>
std::uint64_t parse_num<std::uint64_t>(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + value +
                          "'");
    }
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

std::string join(const std::vector<double>& v) {
    char buf[64];
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        out += (i ? "," : "") + std::string(buf);
    }
    return out;
}

const std::map<std::string, Field>& schema() {
    static const std::map<std::string, Field> s = [] {
        std::map<std::string, Field> m;
        auto num = [&m](const std::string& key, auto getter) {
            using T = std::remove_reference_t<decltype(std::declval<RunConfig&>().*getter)>;
            m[key] = Field{[getter, key](RunConfig& c, const std::string&, const std::string& v) {
                               c.*getter = parse_num<T>(key, v);
                           },
                           [getter](const RunConfig& c) {
                               char buf[64];
                               if constexpr (std::is_same_v<T, double>)
                                   std::snprintf(buf, sizeof buf, "%.17g", c.*getter);
                               else
                                   std::snprintf(buf, sizeof buf, "%llu",
                                                 static_cast<unsigned long long>(c.*getter));
                               return std::string(buf);
                           }};
        };
        auto str = [&m](const std::string& key, auto getter) {
            m[key] = Field{[getter](RunConfig& c, const std::string&, const std::string& v) {
                               c.*getter = v;
                           },
                           [getter](const RunConfig& c) { return c.*getter; }};
        };

        str("data.kind", &RunConfig::data_kind);
        num("data.n", &RunConfig::data_n);
        num("data.noise", &RunConfig::data_noise);
        num("data.centers", &RunConfig::data_centers);
        num("data.train_frac", &RunConfig::train_frac);
        str("data.images", &RunConfig::data_images);
        str("data.labels", &RunConfig::data_labels);
        str("data.normalize", &RunConfig::normalize);

        num("model.d_x", &RunConfig::d_x);
        num("model.d_c", &RunConfig::d_c);
        num("model.d_h", &RunConfig::d_h);
        num("model.hidden", &RunConfig::hidden);
        num("model.classes", &RunConfig::classes);

        num("solver.knots", &RunConfig::knots);
        num("solver.substeps", &RunConfig::substeps);

        num("fxts.alpha1", &RunConfig::alpha1);
        num("fxts.alpha2", &RunConfig::alpha2);
        num("fxts.mu", &RunConfig::mu);
        num("fxts.lambda", &RunConfig::lambda);
        num("fxts.n_delta", &RunConfig::n_delta);
        num("fxts.varsigma_max", &RunConfig::varsigma_max);

        num("train.lr", &RunConfig::lr);
        num("train.anchor_box", &RunConfig::anchor_box);
        num("train.epochs", &RunConfig::epochs);
        num("train.inner_lr", &RunConfig::inner_lr);
        num("train.inner_iters", &RunConfig::inner_iters);
        num("train.batch", &RunConfig::batch);
        num("train.seed", &RunConfig::seed);
        str("train.mode", &RunConfig::mode);

        m["attack.kinds"] = Field{
            [](RunConfig& c, const std::string&, const std::string& v) {
                c.attack_kinds = split_list(v);
            },
            [](const RunConfig& c) { return join(c.attack_kinds); }};
        m["attack.magnitudes"] = Field{
            [](RunConfig& c, const std::string& key, const std::string& v) {
                c.attack_magnitudes.clear();
                for (const auto& item : split_list(v))
                    c.attack_magnitudes.push_back(parse_num<double>(key, item));
            },
            [](const RunConfig& c) { return join(c.attack_magnitudes); }};
        num("attack.steps", &RunConfig::attack_steps);
        num("attack.step_size", &RunConfig::attack_step_size);

        str("output.dir", &RunConfig::out_dir);

        num("sweep.max_cells", &RunConfig::sweep_max_cells);
        return m;
    }();
    return s;
}

}  // namespace

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key.rfind("sweep.grid.", 0) == 0) {
        const std::string base = key.substr(std::string("sweep.grid.").size());
        if (schema().find(base) == schema().end())
            throw ConfigError("config: unknown key '" + base + "' in sweep grid");
        if (base.rfind("sweep.", 0) == 0)
            throw ConfigError("config: cannot sweep over '" + base + "'");
        cfg.sweep_grid[base] = split_list(value);
        if (cfg.sweep_grid[base].empty())
            throw ConfigError("config: empty value list for '" + key + "'");
        return;
    }
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second.set(cfg, key, value);
}

namespace {

void apply_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        apply_key(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void apply_env(RunConfig& cfg) {
    for (const auto& [key, field] : schema()) {
        std::string env = "FXTSNET_";
        for (char c : key) env += (c == '.') ? '_' : static_cast<char>(std::toupper(c));
        if (const char* v = std::getenv(env.c_str())) field.set(cfg, key, v);
    }
}

}  // namespace

RunConfig load(const std::string& file_path, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!file_path.empty()) apply_file(cfg, file_path);
    apply_env(cfg);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: --set expects key=value, got '" + kv + "'");
        apply_key(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (data_kind != "moons" && data_kind != "circles" && data_kind != "blobs" &&
        data_kind != "idx")
        throw ConfigError("config: data.kind must be moons|circles|blobs|idx");
    if (data_kind == "idx") {
        if (data_images.empty()) throw ConfigError("config: missing key data.images");
        if (data_labels.empty()) throw ConfigError("config: missing key data.labels");
    }
    if (normalize != "standard" && normalize != "none")
        throw ConfigError("config: data.normalize must be standard|none");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw ConfigError("config: data.train_frac must be in (0, 1)");
    if (mode != "fxts" && mode != "baseline")
        throw ConfigError("config: train.mode must be fxts|baseline");
    for (const auto& kind : attack_kinds)
        if (kind != "fgsm" && kind != "bim" && kind != "pgd" && kind != "gaussian" &&
            kind != "impulse")
            throw ConfigError("config: unknown attack kind '" + kind + "'");
    if (sweep_max_cells < 1) throw ConfigError("config: sweep.max_cells must be >= 1");
}

std::string canonical_string(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, field] : schema()) out += key + "=" + field.get(cfg) + "\n";
    return out;
}

train::TrainConfig to_train_config(const RunConfig& cfg, int d_x, int classes) {
    train::TrainConfig tc;
    tc.dims.d_x = cfg.d_x > 0 ? cfg.d_x : d_x;
    tc.dims.d_c = cfg.d_c;
    tc.dims.d_h = cfg.d_h;
    tc.dims.hidden = cfg.hidden;
    tc.dims.classes = cfg.classes > 0 ? cfg.classes : classes;
    tc.solver.knots = cfg.knots;
    tc.solver.substeps = cfg.substeps;
    tc.fxts_params = fxts::FxtsParams(cfg.alpha1, cfg.alpha2, cfg.mu);
    tc.perturb.n_delta = cfg.n_delta;
    tc.perturb.varsigma_max = cfg.varsigma_max;
    tc.perturb.dim = tc.dims.d_c;
    tc.lr = cfg.lr;
    tc.anchor_box = cfg.anchor_box;
    tc.epochs = cfg.epochs;
    tc.inner_lr = cfg.inner_lr;
    tc.inner_iters = cfg.inner_iters;
    tc.lambda = cfg.lambda;
    tc.batch = cfg.batch;
    tc.seed = cfg.seed;
    return tc;
}

}  // namespace fxtsnet::config
