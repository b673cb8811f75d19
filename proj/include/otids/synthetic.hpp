#pragma once
#include <otids/data_model.hpp>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace otids {

/// Gas-pipeline-shaped Modbus traffic on the "ds1-modbus" schema.
///
/// Normal rows alternate command and response packets of a pressure control
/// loop. Attacks arrive in episodes; within an episode each packet is
/// injected with probability `injection_rate` according to the episode's
/// category (NMRI ... Recon), the rest stay normal. All cells are observed.
struct Ds1GeneratorConfig
{
    std::size_t rows = 5000;
    double attack_fraction = 0.22; ///< target share of injected packets
    double injection_rate = 1.0;
    std::size_t min_episode = 20;
    std::size_t max_episode = 120;
    std::uint64_t seed = 0;
};

Dataset generate_ds1(const Ds1GeneratorConfig& config);

/// Batch-process-shaped OPC UA samples on the "ds2-opcua" schema: a pump
/// refills container 2 from container 1 with hysteresis. Zeroing attacks set
/// every sensor/actuator to 0; slow attacks halve the process frequency.
struct Ds2GeneratorConfig
{
    std::size_t rows = 4910;
    std::vector<std::pair<std::size_t, std::size_t>> zero_attacks{{1500, 1800}};
    std::vector<std::pair<std::size_t, std::size_t>> slow_attacks{{3000, 3500}};
    std::uint64_t seed = 0;
};

Dataset generate_ds2(const Ds2GeneratorConfig& config);

/// Deletes each model-feature cell independently with probability
/// `fraction` (timestamp and labels untouched).
Dataset delete_mcar(const Dataset& d, double fraction, std::uint64_t seed);

} // namespace otids
