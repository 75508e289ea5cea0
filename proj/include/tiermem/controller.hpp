#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tiermem/engine.hpp"
#include "tiermem/metrics.hpp"
#include "tiermem/types.hpp"

namespace tiermem {

enum class ThrottleLevel : int { unrestricted = 0, l1 = 1, l2 = 2, l3 = 3 };

inline const char* level_name(ThrottleLevel l) {
    switch (l) {
        case ThrottleLevel::unrestricted: return "unrestricted";
        case ThrottleLevel::l1: return "L1";
        case ThrottleLevel::l2: return "L2";
        case ThrottleLevel::l3: return "L3";
    }
    return "?";
}

struct ControllerConfig {
    Cycle sample_period = 50'000;
    double t_ddr_ref = 100.0;       // measured offline by a calibration run
    Cycle read_threshold = 550;     // default: 2.5x unloaded CXL round trip
    int hysteresis_windows = 2;     // consecutive calm windows per promotion
    double promote_guard = 0.6;     // promote only while t_cxl < guard * target
    uint32_t rate_cap_start = 256;  // requests per 1024 cycles, first cap at L3
    uint32_t rate_cap_floor = 1;    // 1 request per 1024 cycles
    uint64_t sampling_n = 64;       // PEBS analog: 1-in-N completions
    uint64_t high_traffic_bytes_per_window = 512;
    int level_cores[3] = {8, 4, 1};  // L1 / L2 / L3
    bool mba_only = false;           // rate caps only, no core confinement
    int socket = 0;
};

struct WindowStats {
    Cycle window_cycles = 0;
    uint64_t ddr_inserts = 0;
    uint64_t cxl_inserts = 0;
    int64_t occupancy_integral = 0;  // mem-class only
    double cxl_read_fraction = 0.0;
    uint64_t tor_inserts() const { return ddr_inserts + cxl_inserts; }
};

struct ControllerDecision {
    uint64_t window = 0;
    double alpha = -1.0;
    double t_avg = -1.0;
    double t_cxl = -1.0;
    double target = -1.0;
    ThrottleLevel level = ThrottleLevel::unrestricted;
    uint32_t rate_cap = 0;
    int restricted_cores = 0;
    bool backlog = false;
};

// --- Eq. 1 pieces, pure functions -----------------------------------------

inline std::optional<double> estimate_alpha(const WindowStats& s) {
    if (s.tor_inserts() == 0) return std::nullopt;  // no measurement
    return double(s.ddr_inserts) / double(s.tor_inserts());
}

struct TcxlResult {
    double t_cxl = 0.0;
    bool clamped = false;  // negative solution clamped, calibration suspect
};

inline std::optional<TcxlResult> solve_tcxl(double t_avg, double alpha, double t_ddr_ref) {
    if (alpha >= 1.0) return std::nullopt;  // pure DDR window, detection skipped
    double t = (t_avg - alpha * t_ddr_ref) / (1.0 - alpha);
    if (t < 0.0) return TcxlResult{0.0, true};
    return TcxlResult{t, false};
}

inline double target_cxl_latency(double cxl_read_fraction, Cycle read_threshold) {
    double write_threshold = 2.0 * double(read_threshold);
    return cxl_read_fraction * double(read_threshold) +
           (1.0 - cxl_read_fraction) * write_threshold;
}

// Backlog: above target in the current window AND still growing versus the
// previous one. Single-window spikes do not trigger.
inline bool detect_backlog(double t_cxl, double target, std::optional<double> prev_t_cxl) {
    if (!prev_t_cxl) return false;
    return t_cxl > target && t_cxl > *prev_t_cxl;
}

// --- The control loop ------------------------------------------------------

// Windowed ToR sampling, Eq. 1 service-time decomposition, core
// attribution and hierarchical throttling. Runs synchronously at window
// boundaries; restriction is actuated per workload (the PID analog), so
// the traffic of a restricted workload stays observable through its
// allowed cores.
class MikuController {
public:
    struct WorkloadCores {
        int workload = -1;
        std::vector<int> cores;  // ascending
    };

    MikuController(ControllerConfig cfg, const PlatformSpec& plat,
                   std::vector<WorkloadCores> groups)
        : cfg_(cfg), plat_(plat), groups_(std::move(groups)) {
        restricted_.assign(groups_.size(), false);
    }

    const ControllerConfig& config() const { return cfg_; }
    ThrottleLevel level() const { return level_; }
    uint32_t rate_cap() const { return rate_cap_; }
    const std::vector<ControllerDecision>& decisions() const { return decisions_; }
    const std::vector<int>& cxl_core_set() const { return cxl_core_set_; }

    WindowStats sample_window(const MetricsStore& metrics) {
        uint64_t ddr, cxl;
        int64_t occ;
        metrics.snapshot_mem_counters(cfg_.socket, plat_.chas_per_socket, ddr, cxl, occ);
        WindowStats s;
        s.window_cycles = cfg_.sample_period;
        s.ddr_inserts = ddr - prev_ddr_ins_;
        s.cxl_inserts = cxl - prev_cxl_ins_;
        s.occupancy_integral = occ - prev_occ_;
        uint64_t reads = metrics.cur_cxl_reads();
        uint64_t writes = metrics.cur_cxl_writes();
        s.cxl_read_fraction = (reads + writes) > 0 ? double(reads) / double(reads + writes) : 1.0;
        prev_ddr_ins_ = ddr;
        prev_cxl_ins_ = cxl;
        prev_occ_ = occ;
        return s;
    }

    // High-traffic filter + sampled-address tier classification. Only cores
    // with at least one CXL-classified sample are returned (sound by
    // construction; completeness is probabilistic).
    std::vector<int> attribute_cxl_cores(const MetricsStore& metrics) const {
        std::vector<int> out;
        const auto& bytes = metrics.core_window_bytes();
        const auto& cxl_samples = metrics.core_window_cxl_samples();
        for (size_t c = 0; c < bytes.size(); c++) {
            if (bytes[c] < cfg_.high_traffic_bytes_per_window) continue;
            if (cxl_samples[c] >= 1) out.push_back(int(c));
        }
        return out;
    }

    // Call once per window boundary, before MetricsStore::end_window().
    void tick(Engine& engine, const MetricsStore& metrics) {
        WindowStats s = sample_window(metrics);
        ControllerDecision d;
        d.window = window_id_++;

        auto alpha = estimate_alpha(s);
        update_membership(metrics);

        if (!alpha || s.cxl_inserts == 0) {
            // Nothing measurable on CXL: treat as a calm window.
            on_calm_window();
            prev_t_cxl_.reset();
        } else {
            d.alpha = *alpha;
            d.t_avg = double(s.occupancy_integral) / double(s.tor_inserts());
            double target = target_cxl_latency(s.cxl_read_fraction, cfg_.read_threshold);
            d.target = target;
            auto tc = solve_tcxl(d.t_avg, *alpha, cfg_.t_ddr_ref);
            if (tc) {
                double t_cxl = tc->t_cxl;
                d.t_cxl = t_cxl;
                bool backlog = detect_backlog(t_cxl, target, prev_t_cxl_);
                d.backlog = backlog;
                if (backlog) {
                    cxl_core_set_ = attribute_cxl_cores(metrics);
                    mark_restricted(cxl_core_set_);
                    if (level_ == ThrottleLevel::l3 || (cfg_.mba_only && throttling_)) {
                        halve_cap();
                    } else {
                        level_ = ThrottleLevel::l3;  // demotion jumps straight to L3
                        rate_cap_ = 0;
                    }
                    throttling_ = true;
                    calm_streak_ = 0;
                } else if (t_cxl > target && level_ == ThrottleLevel::l3) {
                    halve_cap();
                    calm_streak_ = 0;
                } else if (t_cxl > target && cfg_.mba_only && throttling_) {
                    halve_cap();
                    calm_streak_ = 0;
                } else if (t_cxl < cfg_.promote_guard * target) {
                    on_calm_window();
                } else {
                    calm_streak_ = 0;  // near target: hold the level
                }
                prev_t_cxl_ = t_cxl;
            } else {
                on_calm_window();
                prev_t_cxl_.reset();
            }
        }

        apply_restriction(engine);
        d.level = level_;
        d.rate_cap = rate_cap_;
        d.restricted_cores = count_restricted_cores();
        decisions_.push_back(d);
    }

    void export_csv(const std::string& path) const {
        std::ofstream f(path);
        f << "window,alpha,t_avg,t_cxl,target,backlog,level,rate_cap,restricted_cores\n";
        char buf[128];
        for (const auto& d : decisions_) {
            std::snprintf(buf, sizeof buf, "%llu,%.6f,%.6f,%.6f,%.6f,%d,%s,%u,%d\n",
                          (unsigned long long)d.window, d.alpha, d.t_avg, d.t_cxl, d.target,
                          d.backlog ? 1 : 0, level_name(d.level), d.rate_cap, d.restricted_cores);
            f << buf;
        }
    }

private:
    void on_calm_window() {
        calm_streak_++;
        if (calm_streak_ >= cfg_.hysteresis_windows) {
            calm_streak_ = 0;
            if (cfg_.mba_only) {
                if (rate_cap_ > 0) {
                    rate_cap_ *= 2;
                    if (rate_cap_ >= 1024) {
                        rate_cap_ = 0;
                        throttling_ = false;
                    }
                }
            } else if (level_ != ThrottleLevel::unrestricted) {
                level_ = ThrottleLevel(int(level_) - 1);
                rate_cap_ = 0;  // promotion resets the cap
                if (level_ == ThrottleLevel::unrestricted) throttling_ = false;
            }
        }
    }

    void halve_cap() {
        if (rate_cap_ == 0)
            rate_cap_ = cfg_.rate_cap_start;
        else
            rate_cap_ = std::max(cfg_.rate_cap_floor, rate_cap_ / 2);
    }

    // A restricted workload stays restricted until its live cores show DDR
    // samples and no CXL samples (phase switched away from CXL).
    void update_membership(const MetricsStore& metrics) {
        const auto& cxl = metrics.core_window_cxl_samples();
        const auto& ddr = metrics.core_window_ddr_samples();
        for (size_t g = 0; g < groups_.size(); g++) {
            if (!restricted_[g]) continue;
            uint64_t c = 0, d = 0;
            for (int core : groups_[g].cores) {
                c += cxl[core];
                d += ddr[core];
            }
            if (d > 0 && c == 0) restricted_[g] = false;
        }
    }

    void mark_restricted(const std::vector<int>& cores) {
        for (size_t g = 0; g < groups_.size(); g++) {
            for (int core : groups_[g].cores) {
                if (std::binary_search(cores.begin(), cores.end(), core)) {
                    restricted_[g] = true;
                    break;
                }
            }
        }
    }

    int count_restricted_cores() const {
        int n = 0;
        for (size_t g = 0; g < groups_.size(); g++)
            if (restricted_[g]) n += int(groups_[g].cores.size());
        return n;
    }

    void apply_restriction(Engine& engine) {
        bool any = false;
        for (size_t g = 0; g < groups_.size(); g++) any = any || restricted_[g];
        int allowed = level_ == ThrottleLevel::unrestricted
                          ? 1 << 30
                          : cfg_.level_cores[int(level_) - 1];
        int budget = allowed;  // restricted-core slots, shared across groups
        for (size_t g = 0; g < groups_.size(); g++) {
            for (int core : groups_[g].cores) {
                bool restrict_core = restricted_[g] && !cfg_.mba_only && budget <= 0;
                engine.set_core_paused(core, restrict_core);
                bool capped = restricted_[g] && rate_cap_ > 0 &&
                              (cfg_.mba_only || (level_ == ThrottleLevel::l3 && budget > 0));
                engine.set_core_rate(core, capped ? rate_cap_ : 0);
                if (restricted_[g] && !cfg_.mba_only) budget--;
            }
        }
        (void)any;
    }

    ControllerConfig cfg_;
    const PlatformSpec& plat_;
    std::vector<WorkloadCores> groups_;
    std::vector<bool> restricted_;
    std::vector<int> cxl_core_set_;
    ThrottleLevel level_ = ThrottleLevel::unrestricted;
    uint32_t rate_cap_ = 0;
    bool throttling_ = false;
    int calm_streak_ = 0;
    std::optional<double> prev_t_cxl_;
    uint64_t window_id_ = 0;
    uint64_t prev_ddr_ins_ = 0, prev_cxl_ins_ = 0;
    int64_t prev_occ_ = 0;
    std::vector<ControllerDecision> decisions_;
};

}  // namespace tiermem
