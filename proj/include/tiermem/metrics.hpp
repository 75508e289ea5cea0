#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiermem/platform.hpp"
#include "tiermem/types.hpp"

namespace tiermem {

struct MetricsError : std::runtime_error {
    explicit MetricsError(const std::string& what) : std::runtime_error(what) {}
};

// Cumulative per-CHA counters (PMU analog) plus exact per-insert-window
// accounting. Residence of an entry is attributed to the window it was
// inserted in, credited at retirement, so window mean residence is the
// exact Little's-law quantity.
struct ChaCounters {
    uint64_t inserts_by_cls[4] = {0, 0, 0, 0};
    int64_t occ_integral_total = 0;  // all classes, cycle-entries
    int64_t occ_integral_mem = 0;    // mem_ddr + mem_cxl only (Eq. 1 input)

    std::vector<uint64_t> w_inserts;        // all classes, by insert window
    std::vector<int64_t> w_res_sum;         // residence credited at retire
    std::vector<uint64_t> w_retired;        // how many of w_inserts retired
    std::vector<uint64_t> w_inserts_mem[2];  // by tier
    std::vector<int64_t> w_res_mem[2];
    std::vector<int64_t> w_occ_integral;    // all classes, per calendar window
    int64_t occ_win = 0;                    // current-window accumulator

    uint64_t total_inserts() const {
        return inserts_by_cls[0] + inserts_by_cls[1] + inserts_by_cls[2] + inserts_by_cls[3];
    }
    uint64_t mem_inserts() const { return inserts_by_cls[0] + inserts_by_cls[1]; }
};

struct WindowRow {
    uint64_t window = 0;
    Cycle cycles = 0;
    uint64_t bytes[2] = {0, 0};          // mem completions per tier
    int64_t census_sum[2] = {0, 0};      // per-cycle mem ToR entries, summed
    int64_t census_other_sum = 0;        // llc hits + coherence entries
    uint64_t cxl_txn_reads = 0;          // CXL device transaction starts
    uint64_t cxl_txn_writes = 0;
    // Cumulative snapshots at window end, for PMU-style delta readings.
    uint64_t cum_mem_inserts[2] = {0, 0};
    int64_t cum_occ_integral_mem = 0;
    std::vector<uint64_t> workload_bytes;  // hits + misses, per workload
};

class MetricsStore {
public:
    MetricsStore() = default;

    void init(const PlatformSpec& plat, int n_workloads, int n_cores) {
        clock_hz_ = plat.clock_hz;
        chas_.assign(plat.total_chas(), ChaCounters{});
        n_workloads_ = n_workloads;
        cur_workload_bytes_.assign(n_workloads, 0);
        lat_e2e_.assign(n_workloads, {});
        lat_mem_.assign(n_workloads, {});
        core_window_bytes_.assign(n_cores, 0);
        core_completions_.assign(n_cores, 0);
        core_window_cxl_samples_.assign(n_cores, 0);
        core_window_ddr_samples_.assign(n_cores, 0);
    }

    uint64_t current_window() const { return rows_.size(); }
    int num_chas() const { return int(chas_.size()); }

    void on_insert(int cha, EntryClass cls, Tier tier) {
        auto& c = chas_[cha];
        c.inserts_by_cls[int(cls)]++;
        uint64_t w = current_window();
        grow(c, w);
        c.w_inserts[w]++;
        if (cls == EntryClass::mem_ddr || cls == EntryClass::mem_cxl)
            c.w_inserts_mem[int(tier)][w]++;
    }

    void on_retire(int cha, EntryClass cls, Tier tier, int workload, int core,
                   Cycle residence, uint64_t insert_window, uint32_t bytes) {
        auto& c = chas_[cha];
        grow(c, insert_window);
        c.w_res_sum[insert_window] += residence;
        c.w_retired[insert_window]++;
        bool is_mem = cls == EntryClass::mem_ddr || cls == EntryClass::mem_cxl;
        if (is_mem) {
            c.w_res_mem[int(tier)][insert_window] += residence;
            cur_bytes_[int(tier)] += bytes;
        }
        if (workload >= 0) cur_workload_bytes_[workload] += bytes;
        if (core >= 0) {
            core_window_bytes_[core] += bytes;
            core_completions_[core]++;
            if (sampling_n_ > 0 && core_completions_[core] % sampling_n_ == 0) {
                if (is_mem && tier == Tier::cxl) core_window_cxl_samples_[core]++;
                if (is_mem && tier == Tier::ddr) core_window_ddr_samples_[core]++;
            }
        }
    }

    // Phase-5 census update; counts are per-CHA current occupancies.
    void on_cycle(const std::vector<int>& mem_ddr, const std::vector<int>& mem_cxl,
                  const std::vector<int>& other) {
        for (size_t i = 0; i < chas_.size(); i++) {
            int mem = mem_ddr[i] + mem_cxl[i];
            chas_[i].occ_integral_total += mem + other[i];
            chas_[i].occ_integral_mem += mem;
            chas_[i].occ_win += mem + other[i];
            cur_census_[0] += mem_ddr[i];
            cur_census_[1] += mem_cxl[i];
            cur_census_other_ += other[i];
        }
        cur_cycles_++;
    }

    void on_device_txn(Tier tier, bool is_write) {
        if (tier == Tier::cxl) (is_write ? cur_cxl_writes_ : cur_cxl_reads_)++;
    }

    void record_latency(int workload, Cycle e2e, Cycle mem) {
        lat_e2e_[workload].push_back(e2e);
        lat_mem_[workload].push_back(mem);
    }

    void set_sampling_n(uint64_t n) { sampling_n_ = n; }

    // Attribution inputs for the current (not yet rolled) window.
    const std::vector<uint64_t>& core_window_bytes() const { return core_window_bytes_; }
    const std::vector<uint32_t>& core_window_cxl_samples() const { return core_window_cxl_samples_; }
    const std::vector<uint32_t>& core_window_ddr_samples() const { return core_window_ddr_samples_; }

    // Window-to-date aggregates the controller reads before the roll.
    uint64_t cur_cxl_reads() const { return cur_cxl_reads_; }
    uint64_t cur_cxl_writes() const { return cur_cxl_writes_; }

    const ChaCounters& cha(int i) const { return chas_[i]; }

    // Socket-aggregated cumulative counters (PMU snapshot).
    void snapshot_mem_counters(int socket, int chas_per_socket, uint64_t& ddr_ins,
                               uint64_t& cxl_ins, int64_t& occ_mem) const {
        ddr_ins = cxl_ins = 0;
        occ_mem = 0;
        for (int i = socket * chas_per_socket; i < (socket + 1) * chas_per_socket; i++) {
            ddr_ins += chas_[i].inserts_by_cls[int(EntryClass::mem_ddr)];
            cxl_ins += chas_[i].inserts_by_cls[int(EntryClass::mem_cxl)];
            occ_mem += chas_[i].occ_integral_mem;
        }
    }

    void end_window() {
        WindowRow r;
        r.window = rows_.size();
        r.cycles = cur_cycles_;
        r.bytes[0] = cur_bytes_[0];
        r.bytes[1] = cur_bytes_[1];
        r.census_sum[0] = cur_census_[0];
        r.census_sum[1] = cur_census_[1];
        r.census_other_sum = cur_census_other_;
        r.cxl_txn_reads = cur_cxl_reads_;
        r.cxl_txn_writes = cur_cxl_writes_;
        r.workload_bytes = cur_workload_bytes_;
        for (auto& c : chas_) {
            r.cum_mem_inserts[0] += c.inserts_by_cls[0];
            r.cum_mem_inserts[1] += c.inserts_by_cls[1];
            r.cum_occ_integral_mem += c.occ_integral_mem;
            c.w_occ_integral.push_back(c.occ_win);
            c.occ_win = 0;
        }
        rows_.push_back(std::move(r));
        cur_cycles_ = 0;
        cur_bytes_[0] = cur_bytes_[1] = 0;
        cur_census_[0] = cur_census_[1] = 0;
        cur_census_other_ = 0;
        cur_cxl_reads_ = cur_cxl_writes_ = 0;
        std::fill(cur_workload_bytes_.begin(), cur_workload_bytes_.end(), 0);
        std::fill(core_window_bytes_.begin(), core_window_bytes_.end(), 0);
        std::fill(core_window_cxl_samples_.begin(), core_window_cxl_samples_.end(), 0);
        std::fill(core_window_ddr_samples_.begin(), core_window_ddr_samples_.end(), 0);
    }

    const std::vector<WindowRow>& windows() const { return rows_; }

    // Mean ToR residence of requests inserted into `cha` during `window`,
    // exact Little's-law accounting (residence credited to insert window).
    double avg_tor_latency(int cha, uint64_t window) const {
        const auto& c = chas_[cha];
        if (window >= c.w_inserts.size() || c.w_inserts[window] == 0)
            throw MetricsError("avg_tor_latency: no inserts in window");
        return double(c.w_res_sum[window]) / double(c.w_inserts[window]);
    }

    double bandwidth_bytes_per_sec(Tier tier, uint64_t window) const {
        const auto& r = rows_.at(window);
        if (r.cycles <= 0) throw MetricsError("bandwidth: empty window");
        return double(r.bytes[int(tier)]) * double(clock_hz_) / double(r.cycles);
    }

    // Mean mem-class ToR residence by tier for requests inserted in window.
    double mean_mem_residence(Tier tier, uint64_t window) const {
        int64_t res = 0;
        uint64_t ins = 0;
        for (const auto& c : chas_) {
            if (window < c.w_inserts.size()) {
                res += c.w_res_mem[int(tier)][window];
                ins += c.w_inserts_mem[int(tier)][window];
            }
        }
        if (ins == 0) throw MetricsError("mean_mem_residence: no inserts");
        return double(res) / double(ins);
    }

    const std::vector<Cycle>& latencies_e2e(int workload) const { return lat_e2e_[workload]; }
    const std::vector<Cycle>& latencies_mem(int workload) const { return lat_mem_[workload]; }

    // Nearest-rank percentile: value at index ceil(p/100 * n) (1-based).
    static Cycle percentile(std::vector<Cycle> v, double p) {
        if (v.empty()) throw MetricsError("percentile: empty input");
        std::sort(v.begin(), v.end());
        size_t rank = size_t(std::ceil(p / 100.0 * double(v.size())));
        if (rank < 1) rank = 1;
        return v[rank - 1];
    }

    // Fraction of latencies strictly below each threshold.
    static std::vector<double> tail_histogram(const std::vector<Cycle>& lats,
                                              const std::vector<Cycle>& thresholds) {
        if (lats.empty()) throw MetricsError("tail_histogram: empty input");
        std::vector<double> out;
        out.reserve(thresholds.size());
        for (Cycle t : thresholds) {
            size_t n = 0;
            for (Cycle l : lats)
                if (l < t) n++;
            out.push_back(double(n) / double(lats.size()));
        }
        return out;
    }

    void export_csv(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw MetricsError("cannot write " + path);
        f << "window,cycles,ddr_bytes,cxl_bytes,ddr_bw_bytes_per_sec,cxl_bw_bytes_per_sec,"
             "mean_census_ddr,mean_census_cxl,mean_census_other,cxl_txn_reads,cxl_txn_writes";
        for (size_t i = 0; i < chas_.size(); i++)
            f << ",cha" << i << "_inserts,cha" << i << "_res_sum,cha" << i << "_retired";
        for (int w = 0; w < n_workloads_; w++) f << ",wl" << w << "_bytes";
        f << "\n";
        char buf[64];
        for (const auto& r : rows_) {
            double inv = r.cycles > 0 ? 1.0 / double(r.cycles) : 0.0;
            f << r.window << "," << r.cycles << "," << r.bytes[0] << "," << r.bytes[1];
            double bw0 = double(r.bytes[0]) * double(clock_hz_) * inv;
            double bw1 = double(r.bytes[1]) * double(clock_hz_) * inv;
            std::snprintf(buf, sizeof buf, ",%.3f,%.3f", bw0, bw1);
            f << buf;
            std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f", double(r.census_sum[0]) * inv,
                          double(r.census_sum[1]) * inv, double(r.census_other_sum) * inv);
            f << buf << "," << r.cxl_txn_reads << "," << r.cxl_txn_writes;
            for (const auto& c : chas_) {
                uint64_t ins = r.window < c.w_inserts.size() ? c.w_inserts[r.window] : 0;
                int64_t res = r.window < c.w_res_sum.size() ? c.w_res_sum[r.window] : 0;
                uint64_t ret = r.window < c.w_retired.size() ? c.w_retired[r.window] : 0;
                f << "," << ins << "," << res << "," << ret;
            }
            for (uint64_t b : r.workload_bytes) f << "," << b;
            f << "\n";
        }
    }

private:
    static void grow(ChaCounters& c, uint64_t w) {
        if (c.w_inserts.size() <= w) {
            size_t n = w + 1;
            c.w_inserts.resize(n, 0);
            c.w_res_sum.resize(n, 0);
            c.w_retired.resize(n, 0);
            for (int t = 0; t < 2; t++) {
                c.w_inserts_mem[t].resize(n, 0);
                c.w_res_mem[t].resize(n, 0);
            }
        }
    }

    uint64_t clock_hz_ = 1'000'000'000;
    int n_workloads_ = 0;
    std::vector<ChaCounters> chas_;
    std::vector<WindowRow> rows_;

    Cycle cur_cycles_ = 0;
    uint64_t cur_bytes_[2] = {0, 0};
    int64_t cur_census_[2] = {0, 0};
    int64_t cur_census_other_ = 0;
    uint64_t cur_cxl_reads_ = 0, cur_cxl_writes_ = 0;
    std::vector<uint64_t> cur_workload_bytes_;

    uint64_t sampling_n_ = 64;
    std::vector<uint64_t> core_window_bytes_;
    std::vector<uint64_t> core_completions_;
    std::vector<uint32_t> core_window_cxl_samples_;
    std::vector<uint32_t> core_window_ddr_samples_;

    std::vector<std::vector<Cycle>> lat_e2e_;
    std::vector<std::vector<Cycle>> lat_mem_;
};

}  // namespace tiermem
