#include <otids/synthetic.hpp>
#include <otids/random.hpp>
#include <algorithm>
#include <array>
#include <cmath>

namespace otids {

namespace {

// Value positions of the ds1-modbus schema.
enum Ds1 : std::size_t {
    address, function_code, length, setpoint, gain, reset_rate, deadband, cycle_time, rate,
    system_mode, control_scheme, pump, solenoid, pressure, crc_rate, command_response, time,
    ds1_width
};

struct PipelineProcess
{
    double setpoint = 20.0;
    double pressure = 20.0;
    bool pump_on = false;
    bool manual = false;
    double clock = 0.0;

    void step(Rng& rng)
    {
        const double band = manual ? 1.0 : 0.5;
        if (pressure < setpoint - band) pump_on = true;
        else if (pressure > setpoint + band) pump_on = false;
        if (std::abs(pressure - setpoint) > 1.5) {
            pressure += 0.5 * (setpoint - pressure);
        } else {
            pressure += pump_on ? rng.uniform(0.15, 0.45) : -rng.uniform(0.1, 0.35);
        }
        pressure = std::clamp(pressure, 0.0, 60.0);
    }
};

using Row = std::array<double, ds1_width>;

Row normal_packet(const PipelineProcess& proc, bool command, Rng& rng)
{
    Row r{};
    r[address] = 4;
    r[function_code] = command ? 16 : 3;
    r[length] = command ? 90 : 46;
    r[setpoint] = proc.setpoint;
    r[gain] = 115;
    r[reset_rate] = 0.2;
    r[deadband] = 0.5;
    r[cycle_time] = 1.0;
    r[rate] = 2.0;
    r[system_mode] = proc.manual ? 1 : 2;
    r[control_scheme] = 1;
    r[pump] = proc.pump_on ? 1 : 0;
    r[solenoid] = proc.pressure > proc.setpoint + 1.0 ? 1 : 0;
    r[pressure] = proc.pressure + rng.normal(0.0, 0.1);
    r[crc_rate] = rng.bernoulli(0.01) ? 1 : 0;
    r[command_response] = command ? 1 : 0;
    r[time] = proc.clock;
    return r;
}

void make_response(Row& r)
{
    r[function_code] = 3;
    r[length] = 46;
    r[command_response] = 0;
}

void make_command(Row& r)
{
    r[function_code] = 16;
    r[length] = 90;
    r[command_response] = 1;
}

void inject(Row& r, int category, const PipelineProcess& proc, Rng& rng)
{
    static constexpr std::array<std::size_t, 6> params{setpoint, gain, reset_rate, deadband, cycle_time, rate};
    switch (category) {
        case 1: // naive response injection: arbitrary readings, no controller state
            make_response(r);
            do {
                r[pressure] = rng.uniform(0.0, 60.0);
            } while (std::abs(r[pressure] - proc.setpoint) < 3.0);
            for (auto k : params) r[k] = 0;
            break;
        case 2: { // complex response injection: plausible but offset readings
            make_response(r);
            const double offset = rng.uniform(2.5, 8.0);
            r[pressure] = proc.pressure + (rng.bernoulli(0.5) ? offset : -offset);
            r[solenoid] = r[pressure] > proc.setpoint ? 1 : 0;
            r[pump] = 1 - r[solenoid];
            break;
        }
        case 3: // state command injection: controller off, actuators forced
            make_command(r);
            r[system_mode] = 0;
            r[control_scheme] = 0;
            r[pump] = 1;
            r[solenoid] = 1;
            break;
        case 4: // parameter command injection: a full rewritten parameter block
            make_command(r);
            for (auto k : params) {
                const double step = rng.uniform(0.03, 0.12);
                r[k] *= rng.bernoulli(0.5) ? 1 + step : 1 - step;
            }
            break;
        case 5: { // function code injection
            static constexpr std::array<double, 9> codes{1, 2, 4, 5, 6, 8, 15, 22, 23};
            r[function_code] = codes[rng.below(codes.size())];
            r[length] += rng.bernoulli(0.5) ? 1 : -1;
            r[command_response] = 1 - r[command_response];
            break;
        }
        case 6: // denial of service: malformed frames
            r[crc_rate] = rng.uniform(1.0, 20.0);
            r[length] += static_cast<double>(1 + rng.below(3));
            break;
        case 7: // reconnaissance: scans other slaves with short frames
            r[address] = static_cast<double>(5 + rng.below(243));
            r[function_code] = static_cast<double>(1 + rng.below(23));
            r[length] = static_cast<double>(8 + rng.below(12));
            for (auto k : params) r[k] = 0;
            break;
        default: break;
    }
}

} // namespace

Dataset generate_ds1(const Ds1GeneratorConfig& config)
{
    if (!(config.attack_fraction >= 0 && config.attack_fraction < config.injection_rate)) {
        throw Error(ErrorCode::invalid_config, "attack_fraction must lie in [0, injection_rate)");
    }
    if (config.min_episode < 1 || config.max_episode < config.min_episode) {
        throw Error(ErrorCode::invalid_config, "invalid episode length range");
    }
    Rng rng(derive_seed(config.seed, "ds1-generator"));
    Dataset d{builtin_schema("ds1-modbus"), {}};
    d.records.reserve(config.rows);

    const double mean_episode = 0.5 * static_cast<double>(config.min_episode + config.max_episode);
    const double coverage = config.attack_fraction / config.injection_rate;
    const double mean_gap = coverage > 0 ? mean_episode * (1 - coverage) / coverage : 1e18;

    PipelineProcess proc;
    std::size_t until_episode = static_cast<std::size_t>(rng.uniform(0.0, 2 * mean_gap));
    std::size_t episode_left = 0;
    int category = 0, variant = 0;
    for (std::size_t i = 0; i < config.rows; ++i) {
        if (episode_left == 0 && until_episode == 0 && coverage > 0) {
            episode_left = config.min_episode + rng.below(config.max_episode - config.min_episode + 1);
            category = static_cast<int>(1 + rng.below(7));
            variant = static_cast<int>(rng.below(5));
            until_episode = static_cast<std::size_t>(rng.uniform(0.0, 2 * mean_gap));
        }
        if (rng.bernoulli(0.001)) proc.setpoint = std::array{10.0, 15.0, 20.0, 25.0}[rng.below(4)];
        if (rng.bernoulli(0.003)) proc.manual = !proc.manual;
        proc.step(rng);

        const bool command = i % 2 == 0;
        const bool dos = episode_left > 0 && category == 6;
        proc.clock += dos ? rng.uniform(0.001, 0.01) : rng.uniform(0.4, 0.6);
        Row row = normal_packet(proc, command, rng);

        PacketRecord rec;
        rec.binary_label = 0;
        rec.category_label = 0;
        rec.specific_label = 0;
        if (episode_left > 0) {
            --episode_left;
            if (rng.bernoulli(config.injection_rate)) {
                inject(row, category, proc, rng);
                rec.binary_label = 1;
                rec.category_label = category;
                rec.specific_label = (category - 1) * 5 + variant + 1;
            }
        } else if (until_episode > 0) {
            --until_episode;
        }
        rec.values.assign(row.begin(), row.end());
        rec.timestamp = row[time];
        d.records.push_back(std::move(rec));
    }
    return d;
}

Dataset generate_ds2(const Ds2GeneratorConfig& config)
{
    Rng rng(derive_seed(config.seed, "ds2-generator"));
    Dataset d{builtin_schema("ds2-opcua"), {}};
    auto in_any = [](const auto& windows, std::size_t i) {
        return std::any_of(windows.begin(), windows.end(), [&](const auto& w) { return i >= w.first && i < w.second; });
    };

    double level1 = 8.0, level2 = 4.0, temperature = 22.0;
    bool pump_on = false;
    for (std::size_t i = 0; i < config.rows; ++i) {
        const bool zeroed = in_any(config.zero_attacks, i);
        const bool slow = in_any(config.slow_attacks, i);
        const double speed = slow ? 0.5 : 1.0;

        if (slow) pump_on = true;
        else if (level2 < 3.0) pump_on = true;
        else if (level2 > 6.0) pump_on = false;
        const double drain = 0.02 * speed;
        const double fill = pump_on ? 0.06 * speed : 0.0;
        level2 = std::clamp(level2 + fill - drain, 0.0, 10.0);
        level1 = std::clamp(level1 + drain - fill, 0.0, 10.0);
        temperature += slow ? -0.004 : pump_on ? 0.002 : -0.001;
        temperature = std::clamp(temperature, 18.0, 30.0);

        std::array<double, 12> v{
            temperature + rng.normal(0.0, 0.02),
            pump_on ? 2.0 * speed + rng.normal(0.0, 0.05) : std::abs(rng.normal(0.0, 0.01)),
            level1 + rng.normal(0.0, 0.02),
            level2 + rng.normal(0.0, 0.02),
            pump_on ? 0.3 + rng.normal(0.0, 0.01) : 0.05 + rng.normal(0.0, 0.005),
            level1 > 5.0 ? 1.0 : 0.0,
            level2 > 2.0 ? 1.0 : 0.0,
            pump_on ? 1.0 : 0.0,
            1.0,
            level2 > 6.5 ? 1.0 : 0.0,
            0.1 * level2 + rng.normal(0.0, 0.005),
            0.0,
        };
        if (zeroed) v.fill(0.0);

        PacketRecord rec;
        rec.values.assign(v.begin(), v.end());
        rec.binary_label = zeroed || slow ? 1 : 0;
        rec.timestamp = static_cast<double>(i);
        d.records.push_back(std::move(rec));
    }
    return d;
}

Dataset delete_mcar(const Dataset& d, double fraction, std::uint64_t seed)
{
    if (!(fraction >= 0 && fraction < 1)) throw Error(ErrorCode::invalid_config, "deletion fraction must lie in [0, 1)");
    Rng rng(derive_seed(seed, "mcar"));
    Dataset out = d;
    const auto positions = d.schema.model_value_positions();
    for (auto& rec : out.records) {
        for (auto p : positions) {
            if (rng.bernoulli(fraction)) rec.values[p].reset();
        }
    }
    return out;
}

} // namespace otids
