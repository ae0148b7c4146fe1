#pragma once

// Per-node energy from activity counters, and cluster-head memory footprint.

#include <cstdint>

#include "stcsta/core.hpp"

namespace stcsta {

struct ActivityCounters {
    std::int64_t samples = 0;
    std::int64_t bytes_logged = 0;
    std::int64_t cpu_cycles = 0;
    std::int64_t tx_packets = 0;
    std::int64_t rx_packets = 0;
    double tx_distance_m = 0.0;

    ActivityCounters& operator+=(const ActivityCounters& other);
    friend bool operator==(const ActivityCounters&, const ActivityCounters&) = default;
};

struct EnergyReport {
    double e_sampling = 0.0;
    double e_logging = 0.0;
    double e_processing = 0.0;
    double e_radio = 0.0;
    double e_total = 0.0;
};

// Throws std::invalid_argument when a coefficient is negative or packet_bits < 0.
void validate(const EnergyParams& params);

// First-order radio model: bits * e_elec + bits * e_amp * d^2.
double radio_tx_energy(std::int64_t bits, double distance_m, const EnergyParams& params);

EnergyReport node_energy(const ActivityCounters& counters, const EnergyParams& params);

struct ChMemory {
    std::int64_t phase1_bytes = 0;  // correlation phase: N*(SR_max + N/2 + 4) + 1 values
    std::int64_t phase2_bytes = 0;  // allocation phase: 6N + 1 values
    std::int64_t max_bytes = 0;

    friend bool operator==(const ChMemory&, const ChMemory&) = default;
};

// 8-byte values. Throws std::invalid_argument when n_streams < 1 or sr_max < 1.
ChMemory ch_memory_bytes(std::int64_t n_streams, std::int64_t sr_max);

}  // namespace stcsta
