#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiermem/engine.hpp"
#include "tiermem/metrics.hpp"
#include "tiermem/platform.hpp"
#include "tiermem/rng.hpp"
#include "tiermem/types.hpp"

namespace tiermem {

enum class Pattern : uint8_t { bw_stream, pointer_chase, shared_atomic };

struct Placement {
    enum Type : uint8_t { ddr_only, cxl_only, interleave } type = ddr_only;
    int ratio_ddr = 1;  // interleave only: pages on DDR per group
    int ratio_cxl = 1;
};

struct WorkloadPhase {
    Placement placement;
    Cycle duration = 0;
};

struct WorkloadSpec {
    std::string name;
    Pattern pattern = Pattern::bw_stream;
    ReqKind kind = ReqKind::load;
    uint64_t wss_bytes = 64ull << 20;
    Placement placement;
    int threads = 1;
    int mlp_per_thread = 16;
    bool cacheable = false;
    std::vector<WorkloadPhase> phases;  // optional; cycle round-robin
    uint64_t seed = 1;
    int socket = 0;

    void validate(const PlatformSpec& plat) const {
        if (threads < 1) throw ConfigError("workload " + name + ": threads must be >= 1");
        if (mlp_per_thread < 1) throw ConfigError("workload " + name + ": mlp must be >= 1");
        if (wss_bytes < plat.cacheline_bytes)
            throw ConfigError("workload " + name + ": wss smaller than a cacheline");
        for (const auto& ph : phases)
            if (ph.duration <= 0) throw ConfigError("workload " + name + ": phase duration must be > 0");
        if (pattern == Pattern::shared_atomic && threads != 2)
            throw ConfigError("workload " + name + ": shared_atomic needs exactly 2 threads");
        if (socket < 0 || socket >= plat.sockets)
            throw ConfigError("workload " + name + ": socket out of range");
    }
};

// Bump allocator over one socket's slice of each tier range. Keeps thread
// regions pairwise disjoint by construction.
class AddressAllocator {
public:
    AddressAllocator(const PlatformSpec& plat, int socket) : plat_(plat) {
        uint64_t dslice = plat.ddr_phys_range.size() / uint64_t(plat.sockets);
        uint64_t cslice = plat.cxl_phys_range.size() / uint64_t(plat.sockets);
        ddr_next_ = plat.ddr_phys_range.lo + dslice * uint64_t(socket);
        ddr_end_ = ddr_next_ + dslice;
        cxl_next_ = plat.cxl_phys_range.lo + cslice * uint64_t(socket);
        cxl_end_ = cxl_next_ + cslice;
    }

    Addr alloc(Tier t, uint64_t bytes) {
        uint64_t align = plat_.page_bytes;
        Addr& next = t == Tier::ddr ? ddr_next_ : cxl_next_;
        Addr end = t == Tier::ddr ? ddr_end_ : cxl_end_;
        Addr base = (next + align - 1) / align * align;
        if (base + bytes > end)
            throw ConfigError("placement does not fit the platform's address ranges");
        next = base + bytes;
        return base;
    }

private:
    const PlatformSpec& plat_;
    Addr ddr_next_, ddr_end_, cxl_next_, cxl_end_;
};

// Maps a thread's virtual region offset to a physical address under the
// phase-active placement. Interleave distributes 4 KiB pages DDR:CXL in
// the configured ratio, exact over every group of (ratio_ddr+ratio_cxl)
// consecutive pages.
class RegionMapper {
public:
    RegionMapper(const PlatformSpec& plat, uint64_t region_bytes, Addr ddr_base, Addr cxl_base,
                 Placement placement, std::vector<WorkloadPhase> phases)
        : page_(plat.page_bytes),
          region_bytes_(region_bytes),
          ddr_base_(ddr_base),
          cxl_base_(cxl_base),
          placement_(placement),
          phases_(std::move(phases)) {
        total_phase_cycles_ = 0;
        for (const auto& ph : phases_) total_phase_cycles_ += ph.duration;
    }

    uint64_t region_bytes() const { return region_bytes_; }

    const Placement& active_placement(Cycle now) const {
        if (phases_.empty()) return placement_;
        Cycle t = now % total_phase_cycles_;
        for (const auto& ph : phases_) {
            if (t < ph.duration) return ph.placement;
            t -= ph.duration;
        }
        return phases_.back().placement;
    }

    Addr map(uint64_t offset, Cycle now) const {
        const Placement& p = active_placement(now);
        switch (p.type) {
            case Placement::ddr_only: return ddr_base_ + offset;
            case Placement::cxl_only: return cxl_base_ + offset;
            case Placement::interleave: {
                uint64_t v = offset / page_;
                uint64_t group = uint64_t(p.ratio_ddr + p.ratio_cxl);
                uint64_t pos = v % group;
                if (pos < uint64_t(p.ratio_ddr)) {
                    uint64_t dp = (v / group) * uint64_t(p.ratio_ddr) + pos;
                    return ddr_base_ + dp * page_ + offset % page_;
                }
                uint64_t cp = (v / group) * uint64_t(p.ratio_cxl) + (pos - p.ratio_ddr);
                return cxl_base_ + cp * page_ + offset % page_;
            }
        }
        return ddr_base_ + offset;
    }

private:
    uint64_t page_;
    uint64_t region_bytes_;
    Addr ddr_base_, cxl_base_;
    Placement placement_;
    std::vector<WorkloadPhase> phases_;
    Cycle total_phase_cycles_ = 0;
};

// Independent cacheline accesses uniform over the thread region, at the
// highest rate the core's MLP allows. Random order keeps concurrent
// threads decorrelated over the CHA hash; sequential strides would march
// around the CHA ring in convoy behind whichever ingress queue fills
// first, which is an artifact of the modulo hash, not of the workload.
class BwStreamGen : public Generator {
public:
    BwStreamGen(RegionMapper mapper, ReqKind kind, uint32_t line, uint64_t seed)
        : mapper_(std::move(mapper)), kind_(kind), line_(line), rng_(seed) {
        n_lines_ = mapper_.region_bytes() / line_;
    }

    bool next(Cycle now, MemoryRequest& out) override {
        out.kind = kind_;
        out.phys_addr = mapper_.map(rng_.below(n_lines_) * line_, now);
        return true;
    }

private:
    RegionMapper mapper_;
    ReqKind kind_;
    uint32_t line_;
    Rng rng_;
    uint64_t n_lines_ = 0;
};

// Single-cycle permutation of cacheline indices (Sattolo construction).
struct ChaseChain {
    std::vector<uint32_t> next;
    uint32_t pos = 0;
};

inline ChaseChain build_chase(uint64_t region_bytes, uint32_t line, uint64_t seed) {
    uint64_t n64 = region_bytes / line;
    if (n64 < 2) throw ConfigError("pointer chase region smaller than 2 cachelines");
    uint32_t n = uint32_t(n64);
    std::vector<uint32_t> a(n);
    for (uint32_t i = 0; i < n; i++) a[i] = i;
    Rng rng(seed);
    for (uint32_t i = n - 1; i >= 1; i--) {
        uint32_t j = uint32_t(rng.below(i));  // j < i: keeps a single cycle
        std::swap(a[i], a[j]);
    }
    ChaseChain c;
    c.next = std::move(a);
    c.pos = 0;
    return c;
}

// Dependent-load latency probe: exactly one request outstanding; each
// completion names the next cacheline. Per-hop latency is recorded.
class PointerChaseGen : public Generator {
public:
    PointerChaseGen(RegionMapper mapper, uint32_t line, uint64_t seed, MetricsStore& metrics,
                    int workload)
        : mapper_(std::move(mapper)),
          line_(line),
          chain_(build_chase(mapper_.region_bytes(), line, seed)),
          metrics_(metrics),
          workload_(workload) {}

    bool next(Cycle now, MemoryRequest& out) override {
        if (in_flight_) return false;
        out.kind = ReqKind::load;
        out.phys_addr = mapper_.map(uint64_t(chain_.pos) * line_, now);
        in_flight_ = true;
        return true;
    }

    void on_complete(const MemoryRequest& req, Cycle now) override {
        (void)now;
        metrics_.record_latency(workload_, req.t_complete - req.t_issued,
                                req.t_complete - req.t_tor);
        chain_.pos = chain_.next[chain_.pos];
        in_flight_ = false;
    }

private:
    RegionMapper mapper_;
    uint32_t line_;
    ChaseChain chain_;
    MetricsStore& metrics_;
    int workload_;
    bool in_flight_ = false;
};

// Two cores ping-pong atomic updates on one shared cacheline; requests
// are coherence-class and serialize through the owning CHA.
struct SharedAtomicPair {
    Addr line_addr = 0;
    int turn = 0;
    bool in_flight = false;
};

class SharedAtomicGen : public Generator {
public:
    SharedAtomicGen(std::shared_ptr<SharedAtomicPair> pair, int my_index, MetricsStore& metrics,
                    int workload)
        : pair_(std::move(pair)), my_index_(my_index), metrics_(metrics), workload_(workload) {}

    bool next(Cycle now, MemoryRequest& out) override {
        (void)now;
        if (pair_->turn != my_index_ || pair_->in_flight) return false;
        out.kind = ReqKind::coherence;
        out.phys_addr = pair_->line_addr;
        pair_->in_flight = true;
        return true;
    }

    void on_complete(const MemoryRequest& req, Cycle now) override {
        (void)now;
        metrics_.record_latency(workload_, req.t_complete - req.t_issued,
                                req.t_complete - req.t_tor);
        pair_->in_flight = false;
        pair_->turn ^= 1;
    }

private:
    std::shared_ptr<SharedAtomicPair> pair_;
    int my_index_;
    MetricsStore& metrics_;
    int workload_;
};

// Builds all generators for a workload and binds them to cores. Returns
// owning pointers; the engine keeps raw references.
struct BoundWorkload {
    std::vector<std::unique_ptr<Generator>> gens;
    std::vector<int> cores;
};

inline BoundWorkload bind_workload(Engine& engine, const PlatformSpec& plat,
                                   const WorkloadSpec& spec, int workload_id,
                                   AddressAllocator& alloc, MetricsStore& metrics,
                                   int first_core) {
    spec.validate(plat);
    BoundWorkload out;
    uint64_t per_thread = spec.wss_bytes / uint64_t(spec.threads);
    per_thread = per_thread / plat.cacheline_bytes * plat.cacheline_bytes;
    if (per_thread < plat.cacheline_bytes)
        throw ConfigError("workload " + spec.name + ": per-thread region too small");

    bool needs_ddr = spec.placement.type != Placement::cxl_only;
    bool needs_cxl = spec.placement.type != Placement::ddr_only;
    for (const auto& ph : spec.phases) {
        needs_ddr = needs_ddr || ph.placement.type != Placement::cxl_only;
        needs_cxl = needs_cxl || ph.placement.type != Placement::ddr_only;
    }

    std::shared_ptr<SharedAtomicPair> pair;
    if (spec.pattern == Pattern::shared_atomic) {
        pair = std::make_shared<SharedAtomicPair>();
        pair->line_addr = alloc.alloc(Tier::ddr, plat.page_bytes);
    }

    for (int t = 0; t < spec.threads; t++) {
        int core = first_core + t;
        if (core >= plat.total_cores())
            throw ConfigError("workload " + spec.name + ": not enough cores for all workloads");
        Addr ddr_base = 0, cxl_base = 0;
        try {
            if (needs_ddr) ddr_base = alloc.alloc(Tier::ddr, per_thread);
            if (needs_cxl) cxl_base = alloc.alloc(Tier::cxl, per_thread);
        } catch (const ConfigError& e) {
            throw ConfigError("workload " + spec.name + ": " + e.what());
        }
        RegionMapper mapper(plat, per_thread, ddr_base, cxl_base, spec.placement, spec.phases);
        std::unique_ptr<Generator> gen;
        int mlp = spec.mlp_per_thread;
        switch (spec.pattern) {
            case Pattern::bw_stream:
                gen = std::make_unique<BwStreamGen>(std::move(mapper), spec.kind,
                                                    plat.cacheline_bytes,
                                                    spec.seed + uint64_t(t) * 0x9e37);
                break;
            case Pattern::pointer_chase:
                gen = std::make_unique<PointerChaseGen>(std::move(mapper), plat.cacheline_bytes,
                                                        spec.seed + uint64_t(t), metrics,
                                                        workload_id);
                mlp = 1;  // dependent loads: never 2 outstanding
                break;
            case Pattern::shared_atomic:
                gen = std::make_unique<SharedAtomicGen>(pair, t, metrics, workload_id);
                mlp = 1;
                break;
        }
        engine.bind_core(core, gen.get(), workload_id, mlp);
        out.cores.push_back(core);
        out.gens.push_back(std::move(gen));
    }
    return out;
}

}  // namespace tiermem
