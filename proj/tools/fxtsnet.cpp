// fxtsnet command-line driver: train, eval, bounds, trace, sweep, data.
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "fxtsnet/attacks.hpp"
#include "fxtsnet/bounds.hpp"
#include "fxtsnet/config.hpp"
#include "fxtsnet/data.hpp"
#include "fxtsnet/fxts.hpp"
#include "fxtsnet/lyapunov.hpp"
#include "fxtsnet/model.hpp"
#include "fxtsnet/train.hpp"

namespace fs = std::filesystem;
using namespace fxtsnet;

namespace {

struct CommonArgs {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_file, "key = value config file");
    cmd->add_option("--set", args.sets, "override: key=value (repeatable)");
    cmd->add_option("--out", args.out_dir, "output directory (default: output.dir)");
}

config::RunConfig load_config(const CommonArgs& args) {
    config::RunConfig cfg = config::load(args.config_file, args.sets);
    return cfg;
}

std::string out_dir_for(const CommonArgs& args, const config::RunConfig& cfg) {
    const std::string dir = args.out_dir.empty() ? cfg.out_dir : args.out_dir;
    fs::create_directories(dir);
    return dir;
}

data::Dataset build_raw_dataset(const config::RunConfig& cfg) {
    if (cfg.data_kind == "moons") return data::make_moons(cfg.data_n, cfg.data_noise, cfg.seed);
    if (cfg.data_kind == "circles")
        return data::make_circles(cfg.data_n, cfg.data_noise, cfg.seed);
    if (cfg.data_kind == "blobs")
        return data::make_blobs(cfg.data_n, cfg.data_centers, cfg.data_noise, cfg.seed);
    return data::load_idx(cfg.data_images, cfg.data_labels);
}

data::Split build_split(const config::RunConfig& cfg) {
    const data::Dataset ds = build_raw_dataset(cfg);
    data::Split s = data::split(ds, cfg.train_frac, cfg.seed);
    if (cfg.normalize == "standard" && cfg.data_kind != "idx") data::normalize_standard(s);
    return s;
}

attacks::Domain domain_for(const config::RunConfig& cfg) {
    return cfg.data_kind == "idx" ? attacks::kImageDomain : attacks::kSyntheticDomain;
}

void check_checkpoint_dims(const model::ModelParams& params, const data::Dataset& ds) {
    if (params.dims.d_x != static_cast<int>(ds.dim()))
        throw std::runtime_error("checkpoint/dims mismatch: checkpoint d_x=" +
                                 std::to_string(params.dims.d_x) + ", dataset dim=" +
                                 std::to_string(ds.dim()));
}

// psi(h) and cross-entropy without building a graph (trace helper).
Tensor logits_of(const model::ModelParams& p, const Tensor& h) {
    const auto& ops = kernels::active();
    Tensor out = Tensor::zeros(p.psi_w.rows());
    ops.matvec(p.psi_w.data(), h.data(), out.data(), p.psi_w.rows(), p.psi_w.cols());
    ops.axpy(1.0, p.psi_b.data(), out.data(), out.size());
    return out;
}

double ce_loss(const Tensor& logits, int label) {
    double m = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) m = std::max(m, logits[i]);
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) acc += std::exp(logits[i] - m);
    return m + std::log(acc) - logits[static_cast<std::size_t>(label)];
}

// ---- train ------------------------------------------------------------------

int cmd_train(const CommonArgs& args) {
    const config::RunConfig cfg = load_config(args);
    const std::string dir = out_dir_for(args, cfg);
    const data::Split split = build_split(cfg);
    const train::TrainConfig tc = config::to_train_config(
        cfg, static_cast<int>(split.train.dim()), split.train.n_classes());

    const train::TrainResult res = cfg.mode == "baseline"
                                       ? train::train_baseline(tc, split.train, split.test)
                                       : train::train_fxts(tc, split.train, split.test);

    model::save_checkpoint(dir + "/checkpoint.json", res.params);
    train::write_report_csv(dir + "/report.csv", res.report);
    const auto& fin = res.report.final();
    std::printf("mode=%s epochs=%d final train_err=%.17g test_err=%.17g\n", cfg.mode.c_str(),
                fin.epoch, fin.train_err, fin.test_err);
    return 0;
}

// ---- eval ---------------------------------------------------------------------

int cmd_eval(const CommonArgs& args, const std::string& checkpoint) {
    const config::RunConfig cfg = load_config(args);
    const std::string dir = out_dir_for(args, cfg);
    const model::ModelParams params = model::load_checkpoint(checkpoint);
    const data::Split split = build_split(cfg);
    check_checkpoint_dims(params, split.test);
    const ode::SolverConfig solver{cfg.knots, cfg.substeps};
    const attacks::Domain domain = domain_for(cfg);

    std::FILE* f = std::fopen((dir + "/metrics.csv").c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("eval: cannot open metrics.csv");
    std::fprintf(f, "# fxtsnet.metrics.v1\n");
    std::fprintf(f, "kind,magnitude,error_rate\n");

    const double clean = train::error_rate(params, split.test, solver);
    std::fprintf(f, "clean,0,%.17g\n", clean);
    std::printf("clean error: %.17g\n", clean);

    for (const auto& kind : cfg.attack_kinds) {
        for (const double mag : cfg.attack_magnitudes) {
            char tag[64];
            std::snprintf(tag, sizeof tag, "%s@%.17g", kind.c_str(), mag);
            Rng rng = Rng::derive(cfg.seed, std::string("attack:") + tag);
            std::size_t wrong = 0;
            for (std::size_t i = 0; i < split.test.size(); ++i) {
                const Tensor x = split.test.sample(i);
                const int y = split.test.y[i];
                Tensor xt = x;
                if (kind == "fgsm") {
                    xt = attacks::fgsm(params, solver, x, y, mag, domain);
                } else if (kind == "bim" || kind == "pgd") {
                    attacks::AttackConfig ac;
                    ac.epsilon = mag;
                    ac.steps = cfg.attack_steps;
                    ac.step_size = cfg.attack_step_size;
                    ac.random_start = (kind == "pgd");
                    xt = attacks::pgd(params, solver, x, y, ac, domain, rng);
                } else if (kind == "gaussian") {
                    xt = attacks::corrupt_gaussian(x, mag, rng);
                } else {  // impulse
                    xt = attacks::corrupt_impulse(x, mag, domain, rng);
                }
                const auto fwd = model::forward(xt, params, solver);
                if (model::argmax(fwd.logits) != y) ++wrong;
            }
            const double err = double(wrong) / double(split.test.size());
            std::fprintf(f, "%s,%.17g,%.17g\n", kind.c_str(), mag, err);
            std::printf("%s@%g error: %.17g\n", kind.c_str(), mag, err);
        }
    }
    std::fclose(f);
    return 0;
}

// ---- bounds ---------------------------------------------------------------------

void write_bounds_row(std::FILE* f, const bounds::BoundQuery& q, bool strict, bool& any_error) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,", q.V0, q.alpha1, q.alpha2, q.delta,
                 q.mu, q.gamma);
    try {
        const bounds::BoundResult r = bounds::bound_I(q);
        const double quad = bounds::quadrature_I(q);
        bounds::RobustnessQuery rq;
        rq.rho = 1.0;
        rq.L = q.delta;  // T depends on delta = L*rho only
        rq.gamma = q.gamma;
        rq.alpha1 = q.alpha1;
        rq.alpha2 = q.alpha2;
        rq.mu = q.mu;
        rq.L_psi = 1.0;
        const double T = bounds::robustness_time(rq).T;
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,ok\n", r.v, r.V_bar, r.I_bound, quad, T);
    } catch (const std::invalid_argument& e) {
        any_error = true;
        std::fprintf(f, "nan,nan,nan,nan,nan,invalid:%s\n", e.what());
        if (strict) throw;
    }
}

int cmd_bounds(const CommonArgs& args, const bounds::BoundQuery& q, const std::string& queries,
               bool curves, bool strict, double vmin, double vmax, int points) {
    const config::RunConfig cfg = load_config(args);
    const std::string dir = out_dir_for(args, cfg);

    if (curves) {
        if (!(vmin > 0.0) || vmax < vmin || points < 2)
            throw config::ConfigError("bounds: need 0 < vmin <= vmax and points >= 2");
        std::vector<double> grid(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i)
            grid[static_cast<std::size_t>(i)] =
                vmin * std::pow(vmax / vmin, double(i) / double(points - 1));
        const auto rows = bounds::scale_curves(q.mu, q.alpha1, q.alpha2, q.delta, grid);
        std::FILE* f = std::fopen((dir + "/curves.csv").c_str(), "wb");
        if (f == nullptr) throw std::runtime_error("bounds: cannot open curves.csv");
        std::fprintf(f, "# fxtsnet.curves.v1\n");
        std::fprintf(f, "V,err_free,v_scale,ours1,ours2,ours3\n");
        for (const auto& r : rows)
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.V, r.err_free, r.v_scale,
                         r.ours1, r.ours2, r.ours3);
        std::fclose(f);
        std::printf("wrote %s/curves.csv (%zu rows)\n", dir.c_str(), rows.size());
        return 0;
    }

    std::vector<bounds::BoundQuery> qs;
    if (!queries.empty()) {
        std::ifstream in(queries);
        if (!in) throw config::ConfigError("bounds: cannot open queries file '" + queries + "'");
        std::string line;
        bool header = true;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (header) {  // header row: V0,alpha1,alpha2,delta,mu,gamma
                header = false;
                continue;
            }
            bounds::BoundQuery row;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &row.V0, &row.alpha1,
                            &row.alpha2, &row.delta, &row.mu, &row.gamma) != 6)
                throw config::ConfigError("bounds: bad query row '" + line + "'");
            qs.push_back(row);
        }
    } else {
        qs.push_back(q);
    }

    std::FILE* f = std::fopen((dir + "/bounds.csv").c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("bounds: cannot open bounds.csv");
    std::fprintf(f, "# fxtsnet.bounds.v1\n");
    std::fprintf(f, "V0,alpha1,alpha2,delta,mu,gamma,v,V_bar,I_bound,I_quadrature,T_robust,status\n");
    bool any_error = false;
    try {
        for (const auto& row : qs) write_bounds_row(f, row, strict, any_error);
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    std::printf("wrote %s/bounds.csv (%zu rows)%s\n", dir.c_str(), qs.size(),
                any_error ? " with invalid rows" : "");
    return 0;
}

// ---- trace -----------------------------------------------------------------------

int cmd_trace(const CommonArgs& args, const std::string& checkpoint, int samples) {
    const config::RunConfig cfg = load_config(args);
    const std::string dir = out_dir_for(args, cfg);
    const model::ModelParams params = model::load_checkpoint(checkpoint);
    const data::Split split = build_split(cfg);
    check_checkpoint_dims(params, split.test);
    const ode::SolverConfig solver{cfg.knots, cfg.substeps};
    const lyapunov::InnerConfig inner{cfg.inner_lr, cfg.inner_iters, 1e3};

    const std::size_t n = std::min<std::size_t>(split.test.size(),
                                                samples > 0 ? std::size_t(samples) : 8);
    std::FILE* f = std::fopen((dir + "/trace.csv").c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("trace: cannot open trace.csv");
    std::fprintf(f, "# fxtsnet.trace.v1\n");
    std::fprintf(f, "sample,t,V,cls_loss\n");
    for (std::size_t i = 0; i < n; ++i) {
        const auto fwd = model::forward(split.test.sample(i), params, solver);
        const auto anchor = lyapunov::optimal_state(fwd.traj.states.back(), split.test.y[i],
                                                    params, inner);
        for (std::size_t k = 0; k < fwd.traj.states.size(); ++k) {
            const double V = lyapunov::lyapunov_value(fwd.traj.states[k], anchor);
            const double loss = ce_loss(logits_of(params, fwd.traj.states[k]), split.test.y[i]);
            std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", i, fwd.traj.times[k], V, loss);
        }
    }
    std::fclose(f);
    std::printf("wrote %s/trace.csv (%zu samples x %d knots)\n", dir.c_str(), n, cfg.knots + 1);
    return 0;
}

// ---- sweep ------------------------------------------------------------------------

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

int cmd_sweep(const CommonArgs& args) {
    const config::RunConfig base = load_config(args);
    const std::string dir = out_dir_for(args, base);
    if (base.sweep_grid.empty())
        throw config::ConfigError("sweep: no sweep.grid.* keys configured");

    std::vector<std::string> keys;
    std::size_t cells = 1;
    for (const auto& [key, values] : base.sweep_grid) {
        keys.push_back(key);
        cells *= values.size();
    }
    if (cells > std::size_t(base.sweep_max_cells))
        throw config::ConfigError("sweep: grid has " + std::to_string(cells) +
                                  " cells, cap is " + std::to_string(base.sweep_max_cells));

    std::FILE* f = std::fopen((dir + "/sweep.csv").c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("sweep: cannot open sweep.csv");
    std::fprintf(f, "# fxtsnet.sweep.v1\n");
    for (const auto& key : keys) std::fprintf(f, "%s,", key.c_str());
    std::fprintf(f, "seed,cls_loss,fxts_loss,train_err,test_err,violation_rate\n");

    std::set<std::uint64_t> seen;
    std::vector<std::size_t> at(keys.size(), 0);
    std::size_t emitted = 0;
    while (true) {
        config::RunConfig cell = base;
        cell.sweep_grid.clear();
        for (std::size_t k = 0; k < keys.size(); ++k)
            config::apply_key(cell, keys[k], base.sweep_grid.at(keys[k])[at[k]]);
        const std::uint64_t h = fnv1a(config::canonical_string(cell));
        if (seen.insert(h).second) {
            // cells keep the master seed: a 1x1 grid reproduces a plain
            // train run exactly; isolation comes from the config itself
            const data::Split split = build_split(cell);
            const train::TrainConfig tc = config::to_train_config(
                cell, static_cast<int>(split.train.dim()), split.train.n_classes());
            const train::TrainResult res = cell.mode == "baseline"
                                               ? train::train_baseline(tc, split.train, split.test)
                                               : train::train_fxts(tc, split.train, split.test);
            const auto& fin = res.report.final();
            for (std::size_t k = 0; k < keys.size(); ++k)
                std::fprintf(f, "%s,", base.sweep_grid.at(keys[k])[at[k]].c_str());
            std::fprintf(f, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                         static_cast<unsigned long long>(cell.seed), fin.cls_loss, fin.fxts_loss,
                         fin.train_err, fin.test_err, fin.violation_rate);
            ++emitted;
        }
        // advance the mixed-radix counter
        std::size_t k = 0;
        while (k < keys.size()) {
            if (++at[k] < base.sweep_grid.at(keys[k]).size()) break;
            at[k] = 0;
            ++k;
        }
        if (k == keys.size()) break;
    }
    std::fclose(f);
    std::printf("wrote %s/sweep.csv (%zu rows)\n", dir.c_str(), emitted);
    return 0;
}

// ---- data --------------------------------------------------------------------------

int cmd_data(const CommonArgs& args) {
    const config::RunConfig cfg = load_config(args);
    const std::string dir = out_dir_for(args, cfg);
    const data::Dataset ds = build_raw_dataset(cfg);
    data::export_csv(dir + "/dataset.csv", ds);
    std::printf("wrote %s/dataset.csv (%zu samples, %zu features)\n", dir.c_str(), ds.size(),
                ds.dim());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FxTS-stable Neural ODE training and bound verification"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, bounds_args, trace_args, sweep_args, data_args;
    std::string eval_checkpoint, trace_checkpoint, bounds_queries;
    bounds::BoundQuery q;
    bool curves = false, strict = false;
    double vmin = 1.0, vmax = 100.0;
    int points = 50, trace_samples = 8;

    CLI::App* c_train = app.add_subcommand("train", "train a model, write checkpoint + report");
    add_common(c_train, train_args);

    CLI::App* c_eval = app.add_subcommand("eval", "evaluate clean/attack/noise error rates");
    add_common(c_eval, eval_args);
    c_eval->add_option("--checkpoint", eval_checkpoint, "checkpoint.json path")->required();

    CLI::App* c_bounds = app.add_subcommand("bounds", "settling/robustness bound calculus");
    add_common(c_bounds, bounds_args);
    c_bounds->add_option("--v0", q.V0, "initial Lyapunov value");
    c_bounds->add_option("--alpha1", q.alpha1, "alpha1");
    c_bounds->add_option("--alpha2", q.alpha2, "alpha2");
    c_bounds->add_option("--delta", q.delta, "perturbation constant");
    c_bounds->add_option("--mu", q.mu, "mu > 1");
    c_bounds->add_option("--gamma", q.gamma, "boundary multiplier > 1");
    c_bounds->add_option("--queries", bounds_queries, "CSV of V0,alpha1,alpha2,delta,mu,gamma");
    c_bounds->add_flag("--curves", curves, "emit the scale-function curve table");
    c_bounds->add_flag("--strict", strict, "invalid query rows become a nonzero exit");
    c_bounds->add_option("--vmin", vmin, "curves: grid start");
    c_bounds->add_option("--vmax", vmax, "curves: grid end");
    c_bounds->add_option("--points", points, "curves: grid size");

    CLI::App* c_trace = app.add_subcommand("trace", "per-knot V and loss along trajectories");
    add_common(c_trace, trace_args);
    c_trace->add_option("--checkpoint", trace_checkpoint, "checkpoint.json path")->required();
    c_trace->add_option("--samples", trace_samples, "number of test samples");

    CLI::App* c_sweep = app.add_subcommand("sweep", "grid of train+eval runs");
    add_common(c_sweep, sweep_args);

    CLI::App* c_data = app.add_subcommand("data", "generate a dataset and export CSV");
    add_common(c_data, data_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_train->parsed()) return cmd_train(train_args);
        if (c_eval->parsed()) return cmd_eval(eval_args, eval_checkpoint);
        if (c_bounds->parsed())
            return cmd_bounds(bounds_args, q, bounds_queries, curves, strict, vmin, vmax, points);
        if (c_trace->parsed()) return cmd_trace(trace_args, trace_checkpoint, trace_samples);
        if (c_sweep->parsed()) return cmd_sweep(sweep_args);
        if (c_data->parsed()) return cmd_data(data_args);
    } catch (const config::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
