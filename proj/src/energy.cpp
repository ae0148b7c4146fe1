#include "stcsta/energy.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace stcsta {

ActivityCounters& ActivityCounters::operator+=(const ActivityCounters& other)
{
    samples += other.samples;
    bytes_logged += other.bytes_logged;
    cpu_cycles += other.cpu_cycles;
    tx_packets += other.tx_packets;
    rx_packets += other.rx_packets;
    tx_distance_m = std::max(tx_distance_m, other.tx_distance_m);
    return *this;
}

void validate(const EnergyParams& p)
{
    const struct {
        const char* name;
        double value;
    } fields[] = {{"e_sample", p.e_sample},   {"e_log_per_byte", p.e_log_per_byte},
                  {"e_cpu_per_cycle", p.e_cpu_per_cycle}, {"e_elec", p.e_elec},
                  {"e_amp", p.e_amp},         {"distance_m", p.distance_m},
                  {"packet_bits", static_cast<double>(p.packet_bits)}};
    for (const auto& f : fields) {
        if (!(f.value >= 0.0))
            throw std::invalid_argument(fmt::format("energy parameter {} must be >= 0, got {}", f.name, f.value));
    }
}

double radio_tx_energy(std::int64_t bits, double distance_m, const EnergyParams& params)
{
    const auto b = static_cast<double>(bits);
    return b * params.e_elec + b * params.e_amp * distance_m * distance_m;
}

EnergyReport node_energy(const ActivityCounters& c, const EnergyParams& params)
{
    EnergyReport r;
    r.e_sampling = static_cast<double>(c.samples) * params.e_sample;
    r.e_logging = static_cast<double>(c.bytes_logged) * params.e_log_per_byte;
    r.e_processing = static_cast<double>(c.cpu_cycles) * params.e_cpu_per_cycle;
    r.e_radio = static_cast<double>(c.tx_packets) * radio_tx_energy(params.packet_bits, c.tx_distance_m, params);
    if (params.count_rx_energy)
        r.e_radio += static_cast<double>(c.rx_packets) * static_cast<double>(params.packet_bits) * params.e_elec;
    r.e_total = r.e_sampling + r.e_logging + r.e_processing + r.e_radio;
    return r;
}

ChMemory ch_memory_bytes(std::int64_t n_streams, std::int64_t sr_max)
{
    if (n_streams < 1 || sr_max < 1)
        throw std::invalid_argument("ch_memory_bytes needs n_streams >= 1 and sr_max >= 1");
    const std::int64_t n = n_streams;
    ChMemory m;
    // 8 * (N*(SR_max + N/2 + 4) + 1), with 8 * N * N/2 = 4 N^2 kept integral.
    m.phase1_bytes = 8 * n * (sr_max + 4) + 4 * n * n + 8;
    m.phase2_bytes = 8 * (6 * n + 1);
    m.max_bytes = std::max(m.phase1_bytes, m.phase2_bytes);
    return m;
}

}  // namespace stcsta
