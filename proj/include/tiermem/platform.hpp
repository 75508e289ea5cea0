#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiermem/types.hpp"

namespace tiermem {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct AddrRange {
    Addr lo = 0;  // inclusive
    Addr hi = 0;  // exclusive
    bool contains(Addr a) const { return a >= lo && a < hi; }
    Addr size() const { return hi - lo; }
};

struct DeviceSpec {
    int parallelism = 16;          // concurrent in-service slots
    Cycle read_service = 100;      // cycles a slot is held per read
    Cycle write_service = 100;
    Cycle protocol_overhead = 0;   // latency adder, does not hold a slot
    int device_queue_capacity = 256;

    void validate(const std::string& ctx) const {
        if (parallelism < 1) throw ConfigError(ctx + ": parallelism must be >= 1");
        if (read_service <= 0 || write_service <= 0)
            throw ConfigError(ctx + ": service times must be > 0");
        if (protocol_overhead < 0) throw ConfigError(ctx + ": protocol_overhead must be >= 0");
        if (device_queue_capacity < 1) throw ConfigError(ctx + ": device_queue_capacity must be >= 1");
    }
};

struct PlatformSpec {
    int sockets = 2;
    int cores_per_socket = 32;
    int chas_per_socket = 4;
    int irq_capacity_per_cha = 24;
    int tor_capacity_per_cha = 72;
    int admit_width = 4;  // IRQ->ToR admissions per CHA per cycle
    uint32_t cacheline_bytes = 64;
    uint64_t page_bytes = 4096;  // CXL interleave granularity
    uint64_t clock_hz = 1'000'000'000;
    uint64_t llc_capacity_bytes = 8ull << 20;
    Cycle llc_hit_service = 40;
    Cycle coherence_service = 60;
    Cycle cross_socket_latency = 80;
    std::vector<DeviceSpec> ddr_devices;  // per socket
    std::vector<DeviceSpec> cxl_devices;  // per socket
    AddrRange ddr_phys_range{0, 8ull << 30};
    AddrRange cxl_phys_range{8ull << 30, 24ull << 30};

    int total_cores() const { return sockets * cores_per_socket; }
    int total_chas() const { return sockets * chas_per_socket; }
    int devices_per_socket() const { return int(ddr_devices.size() + cxl_devices.size()); }
    int total_devices() const { return sockets * devices_per_socket(); }

    void validate() const {
        if (sockets < 1 || cores_per_socket < 1 || chas_per_socket < 1)
            throw ConfigError("platform: sockets/cores/chas must be >= 1");
        if (irq_capacity_per_cha < 1 || tor_capacity_per_cha < 1 || admit_width < 1)
            throw ConfigError("platform: queue capacities and admit_width must be >= 1");
        if (cacheline_bytes == 0 || (cacheline_bytes & (cacheline_bytes - 1)) != 0)
            throw ConfigError("platform: cacheline_bytes must be a power of two");
        if (ddr_devices.empty() || cxl_devices.empty())
            throw ConfigError("platform: need at least one DDR and one CXL device");
        if (ddr_phys_range.lo >= ddr_phys_range.hi || cxl_phys_range.lo >= cxl_phys_range.hi)
            throw ConfigError("platform: empty physical address range");
        // Ranges must be disjoint so tier identity is decidable from the address.
        bool overlap = ddr_phys_range.lo < cxl_phys_range.hi && cxl_phys_range.lo < ddr_phys_range.hi;
        if (overlap) throw ConfigError("platform: ddr/cxl physical ranges overlap");
        for (size_t i = 0; i < ddr_devices.size(); i++) ddr_devices[i].validate("ddr_devices[" + std::to_string(i) + "]");
        for (size_t i = 0; i < cxl_devices.size(); i++) cxl_devices[i].validate("cxl_devices[" + std::to_string(i) + "]");
        if (llc_hit_service <= 0 || coherence_service <= 0)
            throw ConfigError("platform: llc_hit_service/coherence_service must be > 0");
    }

    Tier address_to_tier(Addr a) const {
        if (ddr_phys_range.contains(a)) return Tier::ddr;
        if (cxl_phys_range.contains(a)) return Tier::cxl;
        throw ConfigError("address 0x" + std::to_string(a) + " outside configured ranges");
    }

    // Each socket owns a contiguous slice of both tier ranges.
    int address_to_socket(Addr a) const {
        const AddrRange& r = address_to_tier(a) == Tier::ddr ? ddr_phys_range : cxl_phys_range;
        uint64_t slice = r.size() / uint64_t(sockets);
        int s = int((a - r.lo) / slice);
        return s >= sockets ? sockets - 1 : s;
    }

    // Global CHA index: (socket, cacheline index mod chas_per_socket).
    int hash_to_cha(Addr a) const {
        int s = address_to_socket(a);
        uint64_t line = a / cacheline_bytes;
        return s * chas_per_socket + int(line % uint64_t(chas_per_socket));
    }

    // Global device index within the owning socket's device array
    // (DDR devices first, then CXL). DDR interleaves at cacheline
    // granularity, CXL at page granularity.
    int route_to_device(Addr a) const {
        int s = address_to_socket(a);
        int base = s * devices_per_socket();
        if (address_to_tier(a) == Tier::ddr) {
            uint64_t line = a / cacheline_bytes;
            return base + int(line % ddr_devices.size());
        }
        uint64_t page = a / page_bytes;
        return base + int(ddr_devices.size()) + int(page % cxl_devices.size());
    }

    const DeviceSpec& device_spec(int global_dev) const {
        int local = global_dev % devices_per_socket();
        if (local < int(ddr_devices.size())) return ddr_devices[local];
        return cxl_devices[local - ddr_devices.size()];
    }

    Tier device_tier(int global_dev) const {
        return (global_dev % devices_per_socket()) < int(ddr_devices.size()) ? Tier::ddr : Tier::cxl;
    }

    // Peak read bandwidth of one tier on one socket, bytes/second:
    // sum over devices of parallelism * cacheline / read_service * clock.
    double analytic_peak_bytes_per_sec(Tier t) const {
        const auto& devs = (t == Tier::ddr) ? ddr_devices : cxl_devices;
        double lines_per_cycle = 0.0;
        for (const auto& d : devs)
            lines_per_cycle += double(d.parallelism) / double(d.read_service);
        return lines_per_cycle * double(cacheline_bytes) * double(clock_hz);
    }

    double analytic_peak_lines_per_cycle(Tier t) const {
        const auto& devs = (t == Tier::ddr) ? ddr_devices : cxl_devices;
        double lpc = 0.0;
        for (const auto& d : devs) lpc += double(d.parallelism) / double(d.read_service);
        return lpc;
    }

    Cycle unloaded_latency(Tier t) const {
        const auto& d = (t == Tier::ddr) ? ddr_devices.front() : cxl_devices.front();
        return d.protocol_overhead + d.read_service;
    }
};

// Table-1 platform A analog: 2 sockets x (8 DDR + 2 CXL) per socket,
// equal per-device parallelism; the tier disparity comes from device count.
inline PlatformSpec platform_a() {
    PlatformSpec p;
    p.sockets = 2;
    p.cores_per_socket = 32;
    p.chas_per_socket = 4;
    DeviceSpec ddr;
    ddr.parallelism = 16;
    ddr.read_service = 100;
    ddr.write_service = 100;
    ddr.protocol_overhead = 0;
    ddr.device_queue_capacity = 512;
    DeviceSpec cxl = ddr;
    cxl.protocol_overhead = 120;
    cxl.write_service = 200;
    cxl.device_queue_capacity = 2048;
    p.ddr_devices.assign(8, ddr);
    p.cxl_devices.assign(2, cxl);
    p.validate();
    return p;
}

// Table-1 platform B analog: 1 socket x (12 DDR + 4 CXL).
inline PlatformSpec platform_b() {
    PlatformSpec p = platform_a();
    p.sockets = 1;
    p.cores_per_socket = 84;
    DeviceSpec ddr = p.ddr_devices.front();
    DeviceSpec cxl = p.cxl_devices.front();
    p.ddr_devices.assign(12, ddr);
    p.cxl_devices.assign(4, cxl);
    p.validate();
    return p;
}

}  // namespace tiermem
