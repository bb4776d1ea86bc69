#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sparkle/common.hpp"
#include "sparkle/config.hpp"
#include "sparkle/csv.hpp"
#include "sparkle/policy.hpp"
#include "sparkle/stats.hpp"
#include "sparkle/svg.hpp"

namespace sparkle {

struct RegretRecord {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<std::pair<long long, double>> curve; // (t, cumulative regret)

    double final_regret() const { return curve.empty() ? 0.0 : curve.back().second; }
};

struct ExponentFit {
    std::string axis; // "T", "s", or "d"
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double std_error = 0.0;
    double p_value = 1.0;
    int n_points = 0;
};

struct RunManifest {
    int schema_version = 1;
    std::string config_hash;
    std::string git_revision = "unknown";
    std::map<std::string, std::vector<std::uint64_t>> seeds;
    std::vector<std::string> outputs;
    double wall_time_seconds = 0.0;
    json config;

    json to_json() const {
        return json{{"schema_version", schema_version},
                    {"config_hash", config_hash},
                    {"git_revision", git_revision},
                    {"seeds", seeds},
                    {"outputs", outputs},
                    {"wall_time_seconds", wall_time_seconds},
                    {"config", config}};
    }
};

inline void write_trace_csv(const PolicyTrace& trace, const std::string& path) {
    CsvWriter out(path);
    out.row({"t", "epoch", "x", "candidate_size", "arm", "reward", "regret",
             "cum_regret"});
    for (const auto& s : trace.steps) {
        std::string x;
        for (int j = 0; j < s.x.size(); ++j) {
            if (j) x += ';';
            x += format_double(s.x[j]);
        }
        out.row({std::to_string(s.t), std::to_string(s.epoch), x,
                 std::to_string(s.candidate_size), std::to_string(s.arm + 1),
                 format_double(s.reward), format_double(s.regret),
                 format_double(s.cum_regret)});
    }
}

namespace detail {

/// Run indexed jobs on up to `threads` workers; results land in
/// preassigned slots so the output order never depends on scheduling.
template <class Fn>
void parallel_for(int jobs, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, jobs));
    if (threads == 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= jobs) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

} // namespace detail

/// Runs every (policy, replication) pair at seed = seed_base + replication,
/// writes per-policy regret CSVs, per-policy mean curves with t-distribution
/// confidence bands, an optional SVG, and a manifest that embeds the config
/// so the whole run can be replayed byte-for-byte.
inline std::vector<RegretRecord> run_experiment(const ExperimentConfig& cfg,
                                                RunManifest* manifest_out = nullptr) {
    namespace fs = std::filesystem;
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);

    const int reps = cfg.replications;
    const int jobs = static_cast<int>(cfg.policies.size()) * reps;
    std::vector<PolicyTrace> traces(jobs);

    detail::parallel_for(jobs, cfg.threads, [&](int job) {
        const int pi = job / reps;
        const int r = job % reps;
        auto env = make_environment(cfg.env_spec);
        auto policy = make_policy(cfg.policies[pi], *env, cfg.sparkle, cfg.T);
        const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(r);
        traces[job] = run_policy(*env, *policy, cfg.T, seed);
    });

    RunManifest manifest;
    manifest.config = cfg.canonical;
    manifest.config_hash = config_hash(cfg.canonical);

    std::vector<RegretRecord> records;
    records.reserve(jobs);
    for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
        const std::string name = traces[pi * reps].policy;
        const std::string stem = detail::sanitize_name(name);

        CsvWriter regret_csv(cfg.out_dir + "/" + stem + "_regret.csv");
        regret_csv.row({"policy", "seed", "t", "cum_regret"});
        for (int r = 0; r < reps; ++r) {
            const PolicyTrace& trace = traces[pi * reps + r];
            RegretRecord rec;
            rec.policy = name;
            rec.seed = trace.seed;
            rec.curve.reserve(trace.steps.size());
            for (const auto& s : trace.steps) {
                rec.curve.emplace_back(s.t, s.cum_regret);
                regret_csv.row({name, std::to_string(trace.seed),
                                std::to_string(s.t), format_double(s.cum_regret)});
            }
            manifest.seeds[name].push_back(trace.seed);
            records.push_back(std::move(rec));
            if (cfg.traces)
                write_trace_csv(trace, cfg.out_dir + "/" + stem + "_trace_" +
                                           std::to_string(trace.seed) + ".csv");
        }
        manifest.outputs.push_back(stem + "_regret.csv");

        // mean curve with a 95% band, reps-1 degrees of freedom
        CsvWriter summary_csv(cfg.out_dir + "/" + stem + "_summary.csv");
        summary_csv.row({"t", "mean", "lo", "hi"});
        const double tcrit = reps > 1 ? t_critical(0.95, reps - 1) : 0.0;
        for (long long t = 1; t <= cfg.T; ++t) {
            std::vector<double> vals(reps);
            for (int r = 0; r < reps; ++r)
                vals[r] = traces[pi * reps + r].steps[t - 1].cum_regret;
            const double m = mean(vals);
            const double half =
                reps > 1 ? tcrit * sample_stddev(vals) / std::sqrt(reps) : 0.0;
            summary_csv.row({std::to_string(t), format_double(m),
                             format_double(m - half), format_double(m + half)});
        }
        manifest.outputs.push_back(stem + "_summary.csv");
    }

    if (cfg.svg) {
        std::vector<SvgSeries> series;
        const double tcrit = reps > 1 ? t_critical(0.95, reps - 1) : 0.0;
        for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
            SvgSeries s;
            s.label = traces[pi * reps].policy;
            for (long long t = 1; t <= cfg.T; ++t) {
                std::vector<double> vals(reps);
                for (int r = 0; r < reps; ++r)
                    vals[r] = traces[pi * reps + r].steps[t - 1].cum_regret;
                const double m = mean(vals);
                const double half =
                    reps > 1 ? tcrit * sample_stddev(vals) / std::sqrt(reps) : 0.0;
                s.x.push_back(static_cast<double>(t));
                s.y.push_back(m);
                s.lo.push_back(m - half);
                s.hi.push_back(m + half);
            }
            series.push_back(std::move(s));
        }
        write_svg_lines(cfg.out_dir + "/regret_curves.svg", series, "t",
                        "cumulative regret");
        manifest.outputs.push_back("regret_curves.svg");
    }

    manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    {
        std::ofstream out(cfg.out_dir + "/manifest.json", std::ios::binary);
        if (!out) throw IoError("cannot write manifest");
        out << manifest.to_json().dump(2) << '\n';
    }
    if (manifest_out) *manifest_out = manifest;
    return records;
}

/// OLS of log(final cumulative regret) on log(axis value) across a sweep.
inline ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& points,
                                const std::string& axis) {
    if (points.size() < 3)
        throw InputError("fit_exponent: need at least 3 sweep points");
    std::vector<double> lx, ly;
    for (const auto& [a, r] : points) {
        if (!(a > 0.0) || !(r > 0.0))
            throw InputError("fit_exponent: axis values and regrets must be positive");
        lx.push_back(std::log(a));
        ly.push_back(std::log(r));
    }
    const OlsFit f = ols(lx, ly);
    ExponentFit fit;
    fit.axis = axis;
    fit.slope = f.slope;
    fit.intercept = f.intercept;
    fit.r_squared = f.r_squared;
    fit.std_error = f.slope_se;
    fit.p_value = f.p_value;
    fit.n_points = f.n;
    return fit;
}

struct MarginAlphaResult {
    bool degenerate = false; // empty margin event on the whole grid
    double alpha_hat = 0.0;
    ExponentFit fit;
    std::vector<double> deltas;
    std::vector<double> freqs;
    int dropped = 0; // zero-frequency grid points excluded from the fit
};

/// Monte-Carlo margin-exponent estimate: frequencies of
/// {0 < |f*_1(X) - f*_2(X)| <= delta} on one shared draw set, then OLS of
/// log frequency on log delta.
inline MarginAlphaResult estimate_margin_alpha(const SineEnv& env, int n_mc,
                                               const std::vector<double>& delta_grid,
                                               RandomStream& rng) {
    if (n_mc < 1000) throw InputError("estimate_margin_alpha: n_mc must be >= 1000");
    if (env.num_arms() < 2)
        throw InputError("estimate_margin_alpha: need at least two arms");
    for (double dl : delta_grid)
        if (!(dl > 0.0 && dl < 1.0))
            throw InputError("estimate_margin_alpha: delta grid must lie in (0,1)");

    std::vector<double> gaps(n_mc);
    for (int i = 0; i < n_mc; ++i) {
        const Eigen::VectorXd x = env.sample_context(rng);
        gaps[i] = std::abs(env.mean_reward(0, x) - env.mean_reward(1, x));
    }
    MarginAlphaResult result;
    result.deltas = delta_grid;
    result.freqs.resize(delta_grid.size());
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < delta_grid.size(); ++i) {
        int count = 0;
        for (double g : gaps)
            if (g > 0.0 && g <= delta_grid[i]) ++count;
        result.freqs[i] = static_cast<double>(count) / n_mc;
        if (result.freqs[i] > 0.0)
            pts.emplace_back(delta_grid[i], result.freqs[i]);
        else
            ++result.dropped;
    }
    if (pts.size() < 3) {
        result.degenerate = true;
        return result;
    }
    result.fit = fit_exponent(pts, "delta");
    result.alpha_hat = result.fit.slope;
    return result;
}

/// Grid of 100 deltas evenly placed strictly inside (0, 1).
inline std::vector<double> default_delta_grid(int size = 100) {
    std::vector<double> grid(size);
    for (int i = 1; i <= size; ++i)
        grid[i - 1] = static_cast<double>(i) / (size + 1);
    return grid;
}

struct DimIntervalReport {
    int interval_count = 0;
    double min_length = 0.0;
    double min_gap = std::numeric_limits<double>::infinity(); // inf when single
    bool degenerate = false; // a zero-length interval (isolated point)
    std::vector<std::pair<double, double>> intervals;
};

/// Empirical regularity diagnostic: per dimension, cluster the projected
/// points into intervals by merging neighbors closer than gap_threshold and
/// report the interval count, minimum length, and minimum gap. A
/// nonpositive threshold selects 5 * range / n per dimension.
inline std::vector<DimIntervalReport> regularity_report_points(
    const Eigen::MatrixXd& points, double gap_threshold) {
    if (points.rows() < 1) throw InputError("regularity: empty point set");
    const int n = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    std::vector<DimIntervalReport> out(d);
    for (int j = 0; j < d; ++j) {
        std::vector<double> proj(n);
        for (int i = 0; i < n; ++i) proj[i] = points(i, j);
        std::sort(proj.begin(), proj.end());
        double threshold = gap_threshold;
        if (!(threshold > 0.0)) {
            const double range = proj.back() - proj.front();
            threshold = range > 0.0 ? 5.0 * range / n : 1.0;
        }
        DimIntervalReport rep;
        double lo = proj[0], hi = proj[0];
        for (int i = 1; i < n; ++i) {
            if (proj[i] - hi > threshold) {
                rep.intervals.emplace_back(lo, hi);
                lo = proj[i];
            }
            hi = proj[i];
        }
        rep.intervals.emplace_back(lo, hi);
        rep.interval_count = static_cast<int>(rep.intervals.size());
        rep.min_length = std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : rep.intervals) {
            rep.min_length = std::min(rep.min_length, b - a);
            if (b - a <= 0.0) rep.degenerate = true;
        }
        for (std::size_t i = 1; i < rep.intervals.size(); ++i)
            rep.min_gap = std::min(rep.min_gap, rep.intervals[i].first -
                                                    rep.intervals[i - 1].second);
        out[j] = std::move(rep);
    }
    return out;
}

/// Per-arm version over labeled point sets.
inline std::vector<std::vector<DimIntervalReport>> c_regularity_report(
    const std::vector<Eigen::MatrixXd>& per_arm_points, double gap_threshold) {
    std::vector<std::vector<DimIntervalReport>> out;
    out.reserve(per_arm_points.size());
    for (const auto& pts : per_arm_points)
        out.push_back(regularity_report_points(pts, gap_threshold));
    return out;
}

/// Tidy CSV of regret records: one row per (policy, seed, t).
inline void emit_regret_csv(const std::vector<RegretRecord>& records,
                            const std::string& path) {
    CsvWriter out(path);
    out.row({"policy", "seed", "t", "cum_regret"});
    for (const auto& rec : records)
        for (const auto& [t, r] : rec.curve)
            out.row({rec.policy, std::to_string(rec.seed), std::to_string(t),
                     format_double(r)});
}

inline void emit_exponent_csv(const std::vector<ExponentFit>& fits,
                              const std::string& path) {
    CsvWriter out(path);
    out.row({"axis", "slope", "intercept", "r_squared", "std_error", "p_value",
             "n_points"});
    for (const auto& f : fits)
        out.row({f.axis, format_double(f.slope), format_double(f.intercept),
                 format_double(f.r_squared), format_double(f.std_error),
                 format_double(f.p_value), std::to_string(f.n_points)});
}

} // namespace sparkle
