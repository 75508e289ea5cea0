#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tiermem/rng.hpp"
#include "tiermem/types.hpp"

namespace tiermem {

// Probabilistic-residency LLC: no tags, just per-workload resident bytes.
// A lookup hits with probability occupancy/wss, so the steady-state hit
// rate converges to min(1, allocated_capacity / wss). Fills happen at
// miss completion, which makes the fill rate track the miss service rate.
class LlcModel {
public:
    LlcModel() = default;

    void init(uint64_t capacity_bytes, uint32_t line_bytes, int n_workloads, uint64_t seed) {
        capacity_ = capacity_bytes;
        line_ = line_bytes;
        occupancy_.assign(n_workloads, 0);
        fraction_.assign(n_workloads, -1.0);  // -1 = free competition
        wss_.assign(n_workloads, 0);
        cacheable_.assign(n_workloads, false);
        rng_ = Rng(seed);
    }

    void set_workload(int w, uint64_t wss_bytes, bool cacheable) {
        wss_[w] = wss_bytes;
        cacheable_[w] = cacheable;
    }

    void set_partition(int w, double fraction) {
        if (fraction < 0.0 || fraction > 1.0)
            throw std::invalid_argument("llc partition fraction out of [0,1]");
        double sum = fraction;
        for (size_t i = 0; i < fraction_.size(); i++)
            if (int(i) != w && fraction_[i] >= 0.0) sum += fraction_[i];
        if (sum > 1.0 + 1e-9) throw std::invalid_argument("llc partition fractions exceed 1");
        fraction_[w] = fraction;
    }

    bool cacheable(int w) const { return w >= 0 && cacheable_[w]; }

    bool lookup(int w) {
        if (w < 0 || !cacheable_[w] || wss_[w] == 0) return false;
        double p = double(occupancy_[w]) / double(wss_[w]);
        if (p >= 1.0) return true;
        return rng_.bernoulli(p);
    }

    // Called when a miss completes from memory.
    void fill(int w) {
        if (w < 0 || !cacheable_[w]) return;
        uint64_t cap_w = std::min(wss_[w], bound(w));
        if (occupancy_[w] + line_ > cap_w) return;  // self-replacement
        if (total_occupancy() + line_ > capacity_) evict_one(w);
        occupancy_[w] += line_;
    }

    uint64_t occupancy(int w) const { return occupancy_[w]; }
    uint64_t total_occupancy() const {
        uint64_t t = 0;
        for (uint64_t o : occupancy_) t += o;
        return t;
    }

private:
    uint64_t bound(int w) const {
        if (fraction_[w] < 0.0) return capacity_;
        return uint64_t(fraction_[w] * double(capacity_));
    }

    void evict_one(int filler) {
        // Over-quota lines go first (lazy eviction after a repartition).
        int victim = -1;
        int64_t worst = 0;
        for (size_t i = 0; i < occupancy_.size(); i++) {
            int64_t over = int64_t(occupancy_[i]) - int64_t(bound(int(i)));
            if (over > worst) {
                worst = over;
                victim = int(i);
            }
        }
        if (victim < 0) {
            // Free competition: random replacement, victim weighted by
            // resident share, so equilibrium shares track fill rates.
            uint64_t total = total_occupancy();
            if (total == 0) return;
            uint64_t pick = rng_.below(total);
            uint64_t acc = 0;
            for (size_t i = 0; i < occupancy_.size(); i++) {
                acc += occupancy_[i];
                if (pick < acc) {
                    victim = int(i);
                    break;
                }
            }
        }
        if (victim >= 0 && occupancy_[victim] >= line_) occupancy_[victim] -= line_;
        (void)filler;
    }

    uint64_t capacity_ = 0;
    uint32_t line_ = 64;
    std::vector<uint64_t> occupancy_;
    std::vector<double> fraction_;
    std::vector<uint64_t> wss_;
    std::vector<bool> cacheable_;
    Rng rng_{0};
};

}  // namespace tiermem
