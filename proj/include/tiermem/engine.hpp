#pragma once

#include <cassert>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "tiermem/llc.hpp"
#include "tiermem/metrics.hpp"
#include "tiermem/platform.hpp"
#include "tiermem/rng.hpp"
#include "tiermem/types.hpp"

namespace tiermem {

// Request source bound to a core. The engine only calls next() when the
// core has MLP headroom and is allowed to issue.
class Generator {
public:
    virtual ~Generator() = default;
    virtual bool next(Cycle now, MemoryRequest& out) = 0;
    virtual void on_complete(const MemoryRequest& req, Cycle now) { (void)req, (void)now; }
};

struct CoreState {
    int core_id = -1;
    int mlp_limit = 16;
    int outstanding = 0;
    bool paused = false;          // controller core-set restriction
    uint32_t rate_per_1k = 0;     // issue cap per 1024 cycles; 0 = uncapped
    uint32_t issued_in_period = 0;
    Cycle period_start = 0;
    bool stalled = false;
    Cycle stall_cycles = 0;
    uint64_t issued = 0;
    Generator* gen = nullptr;
    int workload = -1;
    bool has_pending = false;
    MemoryRequest pending;
};

struct EngineOptions {
    bool collect_events = false;
    bool check_invariants = false;
    bool service_jitter = false;  // seeded exponential service times
    uint64_t seed = 1;
};

// Cycle-stepped simulation of core -> IRQ -> ToR -> device. Each cycle
// runs five phases in fixed order: device completions, ToR retirements,
// IRQ->ToR admissions, core issues, counter updates. All tie-breaks are
// lowest-id-first.
class Engine {
    struct TorEntry {
        MemoryRequest req;
        EntryClass cls = EntryClass::mem_ddr;
        uint64_t insert_window = 0;
        Cycle extra_latency = 0;  // cross-socket adder
        int device = -1;
        bool write_phase_done = false;  // store bookkeeping
        bool complete = false;
        bool active = false;
    };

    struct DeviceState {
        DeviceSpec spec;
        Tier tier = Tier::ddr;
        // busy slots, keyed by the cycle the slot frees
        std::priority_queue<Cycle, std::vector<Cycle>, std::greater<>> slot_end;
        std::deque<std::pair<int, bool>> queue;    // (entry, is_write)
        std::deque<std::pair<int, bool>> blocked;  // device queue was full
        std::priority_queue<std::tuple<Cycle, int, bool>, std::vector<std::tuple<Cycle, int, bool>>,
                            std::greater<>>
            completions;
        int free_slots() const { return spec.parallelism - int(slot_end.size()); }
    };

public:
    Engine(const PlatformSpec& plat, MetricsStore& metrics, LlcModel* llc, EngineOptions opts)
        : plat_(plat), metrics_(metrics), llc_(llc), opts_(opts), rng_(opts.seed ^ 0xe47c1) {
        plat_.validate();
        cores_.resize(plat_.total_cores());
        for (int i = 0; i < int(cores_.size()); i++) cores_[i].core_id = i;
        irq_.resize(plat_.total_chas());
        tor_cnt_mem_ddr_.assign(plat_.total_chas(), 0);
        tor_cnt_mem_cxl_.assign(plat_.total_chas(), 0);
        tor_cnt_other_.assign(plat_.total_chas(), 0);
        devices_.resize(plat_.total_devices());
        for (int d = 0; d < int(devices_.size()); d++) {
            devices_[d].spec = plat_.device_spec(d);
            devices_[d].tier = plat_.device_tier(d);
        }
    }

    const PlatformSpec& platform() const { return plat_; }
    Cycle now() const { return now_; }

    void bind_core(int core, Generator* gen, int workload, int mlp_limit) {
        cores_.at(core).gen = gen;
        cores_.at(core).workload = workload;
        cores_.at(core).mlp_limit = mlp_limit;
    }

    void set_core_paused(int core, bool paused) { cores_.at(core).paused = paused; }
    void set_core_rate(int core, uint32_t per_1k) { cores_.at(core).rate_per_1k = per_1k; }
    const CoreState& core(int i) const { return cores_.at(i); }

    int tor_occupancy(int cha) const {
        return tor_cnt_mem_ddr_[cha] + tor_cnt_mem_cxl_[cha] + tor_cnt_other_[cha];
    }
    int irq_size(int cha) const { return int(irq_[cha].size()); }
    uint64_t issued_total() const { return issued_total_; }
    uint64_t retired_total() const { return retired_total_; }
    const std::vector<EventRecord>& events() const { return events_; }
    void clear_events() { events_.clear(); }

    void step(Cycle n_cycles) {
        for (Cycle i = 0; i < n_cycles; i++) {
            phase1_devices();
            phase2_retire();
            phase3_admit();
            phase4_issue();
            phase5_counters();
            if (opts_.check_invariants) check_invariants();
            now_++;
        }
    }

    // Conservation and work-conservation, checked at cycle boundaries.
    void check_invariants() const {
        uint64_t in_irq = 0;
        for (const auto& q : irq_) in_irq += q.size();
        uint64_t in_tor = 0;
        for (int c = 0; c < plat_.total_chas(); c++) {
            int occ = tor_occupancy(c);
            if (occ > plat_.tor_capacity_per_cha) throw std::logic_error("ToR over capacity");
            if (int(irq_[c].size()) > plat_.irq_capacity_per_cha)
                throw std::logic_error("IRQ over capacity");
            in_tor += occ;
        }
        if (issued_total_ != retired_total_ + in_irq + in_tor)
            throw std::logic_error("request conservation violated");
        for (const auto& d : devices_) {
            if (d.free_slots() > 0 && !d.queue.empty())
                throw std::logic_error("work conservation violated: idle slot with queued work");
            if (!d.blocked.empty() && int(d.queue.size()) < d.spec.device_queue_capacity)
                throw std::logic_error("blocked entry with device queue space");
        }
        for (const auto& c : cores_) {
            if (c.outstanding > c.mlp_limit) throw std::logic_error("MLP bound violated");
        }
    }

private:
    int core_socket(int core) const { return core / plat_.cores_per_socket; }

    void phase1_devices() {
        for (int di = 0; di < int(devices_.size()); di++) {
            auto& d = devices_[di];
            while (!d.completions.empty() && std::get<0>(d.completions.top()) <= now_) {
                auto [t, ei, is_write] = d.completions.top();
                d.completions.pop();
                TorEntry& e = pool_[ei];
                if (e.req.kind == ReqKind::store && !is_write) {
                    // read phase of a store done; enqueue the paired write
                    enqueue_txn(di, ei, true);
                } else {
                    e.complete = true;
                    completed_now_.push_back(ei);
                }
            }
            while (!d.slot_end.empty() && d.slot_end.top() <= now_) d.slot_end.pop();
            pump(di);
        }
    }

    void phase2_retire() {
        while (!ready_heap_.empty() && ready_heap_.top().first <= now_) {
            completed_now_.push_back(ready_heap_.top().second);
            ready_heap_.pop();
        }
        for (int ei : completed_now_) retire(ei);
        completed_now_.clear();
    }

    void phase3_admit() {
        for (int cha = 0; cha < plat_.total_chas(); cha++) {
            int admitted = 0;
            while (admitted < plat_.admit_width && tor_occupancy(cha) < plat_.tor_capacity_per_cha &&
                   !irq_[cha].empty()) {
                MemoryRequest req = irq_[cha].front();
                irq_[cha].pop_front();
                admit(cha, req);
                admitted++;
            }
        }
    }

    void phase4_issue() {
        // Rotating start keeps IRQ admission fair across cores when slots
        // are scarce; within one cycle the order is still id-ascending
        // from the rotation point.
        int n = int(cores_.size());
        int start = int(now_ % n);
        for (int k = 0; k < n; k++) {
            CoreState& c = cores_[(start + k) % n];
            if (!c.gen) continue;
            c.stalled = false;
            if (c.paused) continue;
            if (c.outstanding >= c.mlp_limit) {
                c.stalled = true;
                c.stall_cycles++;
                continue;
            }
            if (c.rate_per_1k > 0) {
                if (now_ - c.period_start >= 1024) {
                    c.period_start = now_ - (now_ - c.period_start) % 1024;
                    c.issued_in_period = 0;
                }
                if (c.issued_in_period >= c.rate_per_1k) {
                    c.stalled = true;
                    c.stall_cycles++;
                    continue;
                }
            }
            if (!c.has_pending) {
                MemoryRequest r;
                if (!c.gen->next(now_, r)) continue;
                r.id = next_id_++;
                r.core_id = c.core_id;
                r.workload = c.workload;
                r.tier = plat_.address_to_tier(r.phys_addr);
                r.socket = plat_.address_to_socket(r.phys_addr);
                r.cha_id = plat_.hash_to_cha(r.phys_addr);
                r.t_issued = now_;
                c.pending = r;
                c.has_pending = true;
            }
            int cha = c.pending.cha_id;
            if (int(irq_[cha].size()) >= plat_.irq_capacity_per_cha) {
                c.stalled = true;  // retained, retried next cycle
                c.stall_cycles++;
                continue;
            }
            c.pending.t_irq = now_;
            irq_[cha].push_back(c.pending);
            c.has_pending = false;
            c.outstanding++;
            c.issued++;
            c.issued_in_period++;
            issued_total_++;
        }
    }

    void phase5_counters() {
        metrics_.on_cycle(tor_cnt_mem_ddr_, tor_cnt_mem_cxl_, tor_cnt_other_);
    }

    void admit(int cha, MemoryRequest req) {
        int ei = alloc_entry();
        TorEntry& e = pool_[ei];
        e.req = req;
        e.req.t_tor = now_;
        e.insert_window = metrics_.current_window();
        e.extra_latency =
            core_socket(req.core_id) != req.socket ? plat_.cross_socket_latency : 0;
        e.write_phase_done = false;
        e.complete = false;
        if (req.kind == ReqKind::coherence) {
            e.cls = EntryClass::coherence;
            tor_cnt_other_[cha]++;
            Addr line = req.phys_addr / plat_.cacheline_bytes;
            auto& lw = line_waiters_[line];
            if (!lw.busy) {
                lw.busy = true;
                e.req.t_dispatch = now_;
                ready_heap_.emplace(now_ + plat_.coherence_service + e.extra_latency, ei);
            } else {
                lw.waiters.push_back(ei);
            }
        } else if (llc_ && llc_->cacheable(req.workload) && req.kind != ReqKind::nt_store &&
                   llc_->lookup(req.workload)) {
            e.cls = EntryClass::llc_hit;
            tor_cnt_other_[cha]++;
            e.req.t_dispatch = now_;
            ready_heap_.emplace(now_ + plat_.llc_hit_service + e.extra_latency, ei);
        } else {
            e.cls = req.tier == Tier::ddr ? EntryClass::mem_ddr : EntryClass::mem_cxl;
            (req.tier == Tier::ddr ? tor_cnt_mem_ddr_ : tor_cnt_mem_cxl_)[cha]++;
            e.device = plat_.route_to_device(req.phys_addr);
            // loads and stores start with a read; nt-stores are write-only
            enqueue_txn(e.device, ei, req.kind == ReqKind::nt_store);
        }
        metrics_.on_insert(cha, e.cls, req.tier);
    }

    void enqueue_txn(int di, int ei, bool is_write) {
        auto& d = devices_[di];
        if (int(d.queue.size()) < d.spec.device_queue_capacity) {
            d.queue.emplace_back(ei, is_write);
            pump(di);
        } else {
            d.blocked.emplace_back(ei, is_write);  // waits in ToR, never dropped
        }
    }

    // Move blocked entries into the device queue and fill free slots until
    // nothing can move; keeps the device work-conserving within a cycle.
    void pump(int di) {
        auto& d = devices_[di];
        bool moved = true;
        while (moved) {
            moved = false;
            while (!d.blocked.empty() && int(d.queue.size()) < d.spec.device_queue_capacity) {
                d.queue.push_back(d.blocked.front());
                d.blocked.pop_front();
                moved = true;
            }
            if (d.free_slots() > 0 && !d.queue.empty()) {
                start_service(di);
                moved = true;
            }
        }
    }

    void start_service(int di) {
        auto& d = devices_[di];
        while (d.free_slots() > 0 && !d.queue.empty()) {
            auto [ei, is_write] = d.queue.front();
            d.queue.pop_front();
            TorEntry& e = pool_[ei];
            Cycle svc = is_write ? d.spec.write_service : d.spec.read_service;
            if (opts_.service_jitter) svc = rng_.exp_cycles(double(svc));
            d.slot_end.push(now_ + svc);
            d.completions.emplace(now_ + svc + d.spec.protocol_overhead + e.extra_latency, ei,
                                  is_write);
            if (e.req.t_dispatch == kUnset) e.req.t_dispatch = now_;
            metrics_.on_device_txn(d.tier, is_write);
        }
    }

    void retire(int ei) {
        TorEntry& e = pool_[ei];
        e.req.t_complete = now_;
        int cha = e.req.cha_id;
        switch (e.cls) {
            case EntryClass::mem_ddr: tor_cnt_mem_ddr_[cha]--; break;
            case EntryClass::mem_cxl: tor_cnt_mem_cxl_[cha]--; break;
            default: tor_cnt_other_[cha]--; break;
        }
        if (e.cls == EntryClass::coherence) {
            Addr line = e.req.phys_addr / plat_.cacheline_bytes;
            auto& lw = line_waiters_[line];
            if (!lw.waiters.empty()) {
                int next = lw.waiters.front();
                lw.waiters.pop_front();
                pool_[next].req.t_dispatch = now_;
                ready_heap_.emplace(now_ + plat_.coherence_service + pool_[next].extra_latency,
                                    next);
            } else {
                lw.busy = false;
            }
        }
        if (llc_ && (e.cls == EntryClass::mem_ddr || e.cls == EntryClass::mem_cxl))
            llc_->fill(e.req.workload);
        CoreState& c = cores_[e.req.core_id];
        c.outstanding--;
        retired_total_++;
        metrics_.on_retire(cha, e.cls, e.req.tier, e.req.workload, e.req.core_id,
                           e.req.t_complete - e.req.t_tor, e.insert_window, plat_.cacheline_bytes);
        if (c.gen) c.gen->on_complete(e.req, now_);
        if (opts_.collect_events) {
            events_.push_back({e.req.id, e.req.core_id, e.req.cha_id, e.req.workload, e.req.kind,
                               e.req.tier, e.cls, e.req.t_issued, e.req.t_irq, e.req.t_tor,
                               e.req.t_dispatch, e.req.t_complete});
        }
        free_entry(ei);
    }

    int alloc_entry() {
        if (!free_list_.empty()) {
            int ei = free_list_.back();
            free_list_.pop_back();
            pool_[ei].active = true;
            return ei;
        }
        pool_.emplace_back();
        pool_.back().active = true;
        return int(pool_.size()) - 1;
    }

    void free_entry(int ei) {
        pool_[ei].active = false;
        free_list_.push_back(ei);
    }

    struct LineState {
        bool busy = false;
        std::deque<int> waiters;
    };

    PlatformSpec plat_;
    MetricsStore& metrics_;
    LlcModel* llc_;
    EngineOptions opts_;
    Rng rng_;
    Cycle now_ = 0;
    uint64_t next_id_ = 0;
    uint64_t issued_total_ = 0;
    uint64_t retired_total_ = 0;

    std::vector<CoreState> cores_;
    std::vector<std::deque<MemoryRequest>> irq_;
    std::vector<TorEntry> pool_;
    std::vector<int> free_list_;
    std::vector<int> tor_cnt_mem_ddr_, tor_cnt_mem_cxl_, tor_cnt_other_;
    std::vector<DeviceState> devices_;
    std::priority_queue<std::pair<Cycle, int>, std::vector<std::pair<Cycle, int>>, std::greater<>>
        ready_heap_;
    std::vector<int> completed_now_;
    std::unordered_map<Addr, LineState> line_waiters_;
    std::vector<EventRecord> events_;
};

}  // namespace tiermem
