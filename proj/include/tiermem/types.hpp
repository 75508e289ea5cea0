#pragma once

#include <cstdint>
#include <string>

namespace tiermem {

using Cycle = int64_t;
using Addr = uint64_t;

constexpr Cycle kUnset = -1;

enum class Tier : uint8_t { ddr = 0, cxl = 1 };

inline const char* tier_name(Tier t) { return t == Tier::ddr ? "ddr" : "cxl"; }

// Application-level instruction kinds. Ordinary stores decompose into a
// read + write device transaction pair at dispatch time.
enum class ReqKind : uint8_t { load = 0, store = 1, nt_store = 2, coherence = 3 };

inline const char* kind_name(ReqKind k) {
    switch (k) {
        case ReqKind::load: return "load";
        case ReqKind::store: return "store";
        case ReqKind::nt_store: return "nt_store";
        case ReqKind::coherence: return "coherence";
    }
    return "?";
}

// How an admitted ToR entry was resolved. Decided once at admission.
enum class EntryClass : uint8_t {
    mem_ddr = 0,   // LLC miss (or uncacheable) serviced by a DDR device
    mem_cxl = 1,   // same, CXL device
    llc_hit = 2,
    coherence = 3,
};

struct MemoryRequest {
    uint64_t id = 0;
    int core_id = -1;
    ReqKind kind = ReqKind::load;
    Addr phys_addr = 0;
    Tier tier = Tier::ddr;
    int socket = 0;       // owner socket of phys_addr
    int cha_id = -1;      // global CHA index
    int workload = -1;
    Cycle t_issued = kUnset;
    Cycle t_irq = kUnset;
    Cycle t_tor = kUnset;
    Cycle t_dispatch = kUnset;
    Cycle t_complete = kUnset;
};

// Compact per-request record kept after retirement (event log / oracles).
struct EventRecord {
    uint64_t id;
    int32_t core_id;
    int32_t cha_id;
    int32_t workload;
    ReqKind kind;
    Tier tier;
    EntryClass cls;
    Cycle t_issued;
    Cycle t_irq;
    Cycle t_tor;
    Cycle t_dispatch;
    Cycle t_complete;
};

}  // namespace tiermem
