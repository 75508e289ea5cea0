#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "tiermem/workloads.hpp"

using namespace tiermem;

namespace {
constexpr uint64_t GiB = 1ull << 30;

struct Rig {
    PlatformSpec plat;
    MetricsStore metrics;
    Engine engine;
    explicit Rig(PlatformSpec p, EngineOptions opts = {})
        : plat(p), metrics(), engine((metrics.init(p, 4, p.total_cores()), p), metrics, nullptr, opts) {}
};
}  // namespace

TEST_CASE("allocator hands out page-aligned disjoint regions per socket slice") {
    PlatformSpec p = platform_a();
    AddressAllocator a0(p, 0), a1(p, 1);
    Addr x = a0.alloc(Tier::ddr, 10000);
    Addr y = a0.alloc(Tier::ddr, 10000);
    CHECK(x % p.page_bytes == 0);
    CHECK(y % p.page_bytes == 0);
    CHECK(y >= x + 10000);  // disjoint
    CHECK(p.address_to_socket(x) == 0);
    Addr z = a1.alloc(Tier::ddr, 10000);
    CHECK(p.address_to_socket(z) == 1);
    Addr c = a0.alloc(Tier::cxl, 10000);
    CHECK(p.address_to_tier(c) == Tier::cxl);
    CHECK(p.address_to_socket(c) == 0);
    // Socket slice is 4 GiB of DDR; exceeding it must throw.
    CHECK_THROWS_AS(a0.alloc(Tier::ddr, 5 * GiB), ConfigError);
}

TEST_CASE("region mapper: single-tier and exact page interleave") {
    PlatformSpec p = platform_a();
    const uint64_t page = p.page_bytes;
    Placement ddr_only;
    RegionMapper m1(p, 16 * page, 1000 * page, 5000 * page, ddr_only, {});
    CHECK(m1.map(123, 0) == 1000 * page + 123);

    Placement il;
    il.type = Placement::interleave;
    il.ratio_ddr = 3;
    il.ratio_cxl = 1;
    const Addr cxl_base = 8 * GiB;  // inside the platform's CXL range
    RegionMapper m2(p, 16 * page, 1000 * page, cxl_base, il, {});
    // Pages 0,1,2 -> DDR pages 0,1,2; page 3 -> CXL page 0; page 4 -> DDR 3.
    CHECK(m2.map(0 * page, 0) == 1000 * page);
    CHECK(m2.map(1 * page + 7, 0) == 1001 * page + 7);
    CHECK(m2.map(2 * page, 0) == 1002 * page);
    CHECK(m2.map(3 * page, 0) == cxl_base);
    CHECK(m2.map(4 * page, 0) == 1003 * page);
    CHECK(m2.map(7 * page, 0) == cxl_base + page);
    // Exact 3:1 split over every group of 4 pages.
    int ddr_pages = 0, cxl_pages = 0;
    for (uint64_t v = 0; v < 16; v++) {
        Addr a = m2.map(v * page, 0);
        (p.address_to_tier(a) == Tier::ddr ? ddr_pages : cxl_pages)++;
    }
    CHECK(ddr_pages == 12);
    CHECK(cxl_pages == 4);
}

TEST_CASE("region mapper phases switch placement on cycle boundaries") {
    PlatformSpec p = platform_a();
    WorkloadPhase a, b;
    a.placement.type = Placement::cxl_only;
    a.duration = 100;
    b.placement.type = Placement::ddr_only;
    b.duration = 50;
    RegionMapper m(p, 1 << 16, 0, 8 * GiB, Placement{}, {a, b});
    CHECK(m.active_placement(0).type == Placement::cxl_only);
    CHECK(m.active_placement(99).type == Placement::cxl_only);
    CHECK(m.active_placement(100).type == Placement::ddr_only);
    CHECK(m.active_placement(149).type == Placement::ddr_only);
    CHECK(m.active_placement(150).type == Placement::cxl_only);  // wraps
    CHECK(p.address_to_tier(m.map(0, 0)) == Tier::cxl);
    CHECK(p.address_to_tier(m.map(0, 120)) == Tier::ddr);
}

TEST_CASE("chase chain is one single cycle visiting every line") {
    const uint64_t n = 4096;
    ChaseChain c = build_chase(n * 64, 64, 11);
    REQUIRE(c.next.size() == n);
    std::set<uint32_t> seen;
    uint32_t pos = 0;
    for (uint64_t i = 0; i < n; i++) {
        CHECK(seen.insert(pos).second);  // no revisits before the cycle closes
        pos = c.next[pos];
    }
    CHECK(pos == 0);  // returns to the start after exactly n hops
    CHECK(seen.size() == n);
    CHECK_THROWS_AS(build_chase(64, 64, 1), ConfigError);  // < 2 lines
}

TEST_CASE("bw stream: deterministic, line-aligned, inside the region") {
    PlatformSpec p = platform_a();
    RegionMapper m(p, 1 << 20, 0, 8 * GiB, Placement{}, {});
    BwStreamGen g1(m, ReqKind::load, 64, 5), g2(m, ReqKind::load, 64, 5), g3(m, ReqKind::load, 64, 6);
    bool same = true, diff = false;
    for (int i = 0; i < 1000; i++) {
        MemoryRequest a, b, c;
        REQUIRE(g1.next(0, a));
        REQUIRE(g2.next(0, b));
        REQUIRE(g3.next(0, c));
        same = same && a.phys_addr == b.phys_addr;
        diff = diff || a.phys_addr != c.phys_addr;
        CHECK(a.phys_addr % 64 == 0);
        CHECK(a.phys_addr < (1 << 20));
        CHECK(a.kind == ReqKind::load);
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("pointer chase keeps one request in flight and records hop latency") {
    Rig rig(platform_a());
    AddressAllocator alloc(rig.plat, 0);
    WorkloadSpec w;
    w.name = "probe";
    w.pattern = Pattern::pointer_chase;
    w.wss_bytes = 1 << 20;
    w.placement.type = Placement::cxl_only;
    w.threads = 1;
    w.mlp_per_thread = 16;  // must be forced down to 1 for dependent loads
    BoundWorkload b = bind_workload(rig.engine, rig.plat, w, 0, alloc, rig.metrics, 0);
    CHECK(rig.engine.core(0).mlp_limit == 1);
    rig.engine.step(50'000);
    const auto& mem = rig.metrics.latencies_mem(0);
    const auto& e2e = rig.metrics.latencies_e2e(0);
    REQUIRE(mem.size() > 100);
    // Unloaded CXL: residence is exactly overhead + read service; the
    // end-to-end hop adds the one-cycle IRQ->ToR admission step.
    for (Cycle l : mem) CHECK(l == 220);
    for (Cycle l : e2e) CHECK(l == 221);
    // A new hop issues in the same cycle the previous one retires, so one
    // hop completes every 221 cycles.
    CHECK(mem.size() == 50'000 / 221);
}

TEST_CASE("shared atomic pair ping-pongs a single token") {
    Rig rig(platform_a());
    AddressAllocator alloc(rig.plat, 0);
    WorkloadSpec w;
    w.name = "lock";
    w.pattern = Pattern::shared_atomic;
    w.wss_bytes = 4096;
    w.threads = 2;
    BoundWorkload b = bind_workload(rig.engine, rig.plat, w, 0, alloc, rig.metrics, 0);
    rig.engine.step(10'000);
    const auto& e2e = rig.metrics.latencies_e2e(0);
    REQUIRE(e2e.size() > 10);
    // Unloaded coherence update: 60-cycle service + 1-cycle admission.
    for (Cycle l : e2e) CHECK(l == 61);
    // Strict alternation: cores issued within one hop of each other.
    auto d0 = rig.engine.core(0).issued, d1 = rig.engine.core(1).issued;
    CHECK(d0 >= d1);
    CHECK(d0 - d1 <= 1);
}

TEST_CASE("bind assigns consecutive cores and validates the spec") {
    Rig rig(platform_a());
    AddressAllocator alloc(rig.plat, 0);
    WorkloadSpec w = {};
    w.name = "s";
    w.pattern = Pattern::bw_stream;
    w.threads = 4;
    w.wss_bytes = 1 << 20;
    BoundWorkload b = bind_workload(rig.engine, rig.plat, w, 2, alloc, rig.metrics, 5);
    CHECK(b.cores == std::vector<int>{5, 6, 7, 8});
    CHECK(rig.engine.core(5).workload == 2);

    WorkloadSpec bad = w;
    bad.threads = 0;
    CHECK_THROWS_AS(bind_workload(rig.engine, rig.plat, bad, 0, alloc, rig.metrics, 0), ConfigError);
    bad = w;
    bad.mlp_per_thread = 0;
    CHECK_THROWS_AS(bind_workload(rig.engine, rig.plat, bad, 0, alloc, rig.metrics, 0), ConfigError);
    bad = w;
    bad.pattern = Pattern::shared_atomic;
    bad.threads = 3;
    CHECK_THROWS_AS(bind_workload(rig.engine, rig.plat, bad, 0, alloc, rig.metrics, 0), ConfigError);
    bad = w;
    bad.wss_bytes = 32;  // smaller than one cacheline
    CHECK_THROWS_AS(bind_workload(rig.engine, rig.plat, bad, 0, alloc, rig.metrics, 0), ConfigError);
    bad = w;
    bad.socket = 9;
    CHECK_THROWS_AS(bind_workload(rig.engine, rig.plat, bad, 0, alloc, rig.metrics, 0), ConfigError);
    bad = w;
    bad.threads = 128;  // more threads than cores on the platform
    CHECK_THROWS_AS(bind_workload(rig.engine, rig.plat, bad, 0, alloc, rig.metrics, 0), ConfigError);
}
