#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sensorhub/client.hpp"
#include "sensorhub/energy.hpp"
#include "sensorhub/log.hpp"
#include "sensorhub/server.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void install_signal_handlers() {
    struct sigaction action{};
    action.sa_handler = [](int) { g_interrupted = true; };
    ::sigaction(SIGINT, &action, nullptr);
    ::sigaction(SIGTERM, &action, nullptr);
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw sensorhub::ConfigError("expected host:port, got '" + text + "'");
    }
    const std::string host = text.substr(0, colon);
    try {
        const int port = std::stoi(text.substr(colon + 1));
        if (port < 1 || port > 65535) throw std::out_of_range("port");
        return {host, static_cast<std::uint16_t>(port)};
    } catch (const std::exception&) {
        throw sensorhub::ConfigError("invalid port in '" + text + "'");
    }
}

struct HzRange {
    double low = 1.0;
    double high = 1.0;
    double step = 1.0;
};

HzRange parse_hz_range(const std::string& text) {
    std::vector<double> parts;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw sensorhub::ConfigError("invalid rate range '" + text + "'");
        }
    }
    HzRange range;
    if (parts.size() == 1) {
        range.low = range.high = parts[0];
    } else if (parts.size() == 2 || parts.size() == 3) {
        range.low = parts[0];
        range.high = parts[1];
        if (parts.size() == 3) range.step = parts[2];
    } else {
        throw sensorhub::ConfigError("rate range wants LOW:HIGH[:STEP], got '" + text + "'");
    }
    if (range.low <= 0 || range.high < range.low || range.step <= 0) {
        throw sensorhub::ConfigError("rate range must satisfy 0 < low <= high, step > 0");
    }
    return range;
}

int run_server(const std::string& vsd_dir, int http_port, const std::string& data_dir,
               int idle_timeout_secs) {
    sensorhub::ServerConfig config;
    config.vsd_dir = vsd_dir;
    config.http_port = static_cast<std::uint16_t>(http_port);
    if (!data_dir.empty()) config.data_dir = data_dir;
    config.idle_timeout = std::chrono::seconds(idle_timeout_secs);

    sensorhub::Server server(config);
    server.start();
    for (const auto& name : server.sensor_names()) {
        std::printf("sensor %s: tcp port %u\n", name.c_str(), server.wrapper_port(name));
    }
    std::printf("http api: port %u\n", server.http_port());
    std::fflush(stdout);

    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    sensorhub::log::info("shutting down");
    server.stop();
    return 0;
}

void print_report(const std::string& label, const sensorhub::SessionReport& report) {
    std::printf("%sreport: packets=%llu bytes=%llu mean_hz=%.3f elapsed_s=%.3f%s%s\n",
                label.c_str(), static_cast<unsigned long long>(report.packets_sent),
                static_cast<unsigned long long>(report.bytes_sent), report.mean_hz,
                report.elapsed_secs, report.completed ? "" : " (incomplete)",
                report.error.empty() ? "" : (" error: " + report.error).c_str());
}

int run_client_command(const std::string& endpoint, const std::string& sensors, double hz,
                       std::optional<std::uint64_t> count, std::optional<double> secs,
                       const std::string& gen, std::uint32_t seed, int clients,
                       const std::string& profile_text) {
    const auto [host, port] = parse_endpoint(endpoint);
    const auto profile = sensorhub::DeviceProfile::parse(profile_text);
    const auto requested = sensorhub::parse_sensor_list(sensors);
    const auto selection = sensorhub::identify_supported_sensors(profile, requested);

    sensorhub::SimulationConfig config;
    config.host = host;
    config.port = port;
    config.selection = selection;
    config.hz = hz;
    config.count = count;
    config.secs = secs;
    config.generator = sensorhub::GeneratorSpec::parse(gen);
    config.cancel = &g_interrupted;

    std::vector<sensorhub::SessionReport> reports(static_cast<std::size_t>(clients));
    std::vector<std::thread> workers;
    workers.reserve(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        auto per_client = config;
        per_client.seed = seed + static_cast<std::uint32_t>(i);
        workers.emplace_back([per_client, &reports, i] {
            try {
                reports[i] = sensorhub::run_client(per_client);
            } catch (const sensorhub::Error& e) {
                reports[i].error = e.what();
            }
        });
    }
    for (auto& worker : workers) worker.join();

    bool all_completed = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const std::string label = reports.size() == 1 ? "" : "client " + std::to_string(i) + " ";
        print_report(label, reports[i]);
        all_completed = all_completed && reports[i].completed;
    }
    return all_completed ? 0 : 1;
}

int run_energy_command(const std::string& sensors, const std::string& hz_range_text,
                       const std::string& profile_text, const std::string& out_format,
                       bool show_ratios) {
    const auto selection = sensorhub::parse_sensor_list(sensors);
    const auto range = parse_hz_range(hz_range_text);
    const auto profile = profile_text == "default"
                             ? sensorhub::PowerProfile::defaults()
                             : sensorhub::load_power_profile(profile_text);

    std::vector<double> rates;
    for (double hz = range.low; hz <= range.high + 1e-12; hz += range.step) rates.push_back(hz);

    if (out_format == "csv") {
        std::printf("hz,sensor_mj_per_min,cpu_mj_per_min,network_mj_per_min,total_mj_per_min\n");
        for (const double hz : rates) {
            const auto e = sensorhub::energy_per_minute(profile, selection, hz);
            std::printf("%g,%.6f,%.6f,%.6f,%.6f\n", hz, e.sensor_mj_per_min, e.cpu_mj_per_min,
                        e.network_mj_per_min, e.total_mj_per_min());
        }
    } else if (out_format == "table") {
        std::printf("%8s %14s %14s %14s %14s\n", "hz", "sensor mJ/min", "cpu mJ/min",
                    "net mJ/min", "total mJ/min");
        for (const double hz : rates) {
            const auto e = sensorhub::energy_per_minute(profile, selection, hz);
            std::printf("%8g %14.3f %14.3f %14.3f %14.3f\n", hz, e.sensor_mj_per_min,
                        e.cpu_mj_per_min, e.network_mj_per_min, e.total_mj_per_min());
        }
    } else {
        throw sensorhub::ConfigError("output format must be csv or table, got '" + out_format +
                                     "'");
    }

    if (show_ratios) {
        std::printf("\ncurrent draw relative to accelerometer:\n");
        for (int i = 1; i <= sensorhub::kSensorCount; ++i) {
            if (!selection.enabled(i)) continue;
            std::printf("  %-20s %.3f\n", std::string(sensorhub::sensor_by_index(i).name).c_str(),
                        sensorhub::current_ratio(profile, i, sensorhub::kAccelerometer));
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    install_signal_handlers();

    CLI::App app{"sensor stream acquisition toolkit"};
    app.require_subcommand(1);

    auto* server_cmd = app.add_subcommand("server", "run the acquisition server");
    std::string vsd_dir;
    int http_port = 8080;
    std::string data_dir;
    int idle_timeout_secs = 60;
    server_cmd->add_option("--vsd-dir", vsd_dir, "directory of virtual sensor definitions")
        ->required();
    server_cmd->add_option("--http-port", http_port, "HTTP API port (0 for ephemeral)")
        ->check(CLI::Range(0, 65535));
    server_cmd->add_option("--data-dir", data_dir, "directory for CSV archives");
    server_cmd->add_option("--idle-timeout-secs", idle_timeout_secs,
                           "drop connections idle for this long")
        ->check(CLI::PositiveNumber);

    auto* client_cmd = app.add_subcommand("client", "run an emulated device");
    std::string endpoint;
    std::string sensors;
    double hz = 1.0;
    std::uint64_t count_value = 0;
    double secs_value = 0.0;
    std::string gen = "sine:1.0:2.0";
    std::uint32_t seed = 1;
    int clients = 1;
    std::string device_profile = "all";
    client_cmd->add_option("--server", endpoint, "server address as host:port")->required();
    client_cmd->add_option("--sensors", sensors, "comma separated sensor names")->required();
    client_cmd->add_option("--hz", hz, "frames per second")->required();
    auto* count_opt = client_cmd->add_option("--count", count_value, "number of frames to send");
    auto* secs_opt = client_cmd->add_option("--secs", secs_value, "seconds to stream for");
    count_opt->excludes(secs_opt);
    client_cmd->add_option("--gen", gen, "signal generator spec");
    client_cmd->add_option("--seed", seed, "noise generator seed");
    client_cmd->add_option("--clients", clients, "number of concurrent sessions")
        ->check(CLI::PositiveNumber);
    client_cmd->add_option("--profile", device_profile,
                           "sensors the emulated device carries ('all' or a list)");

    auto* energy_cmd = app.add_subcommand("energy", "print the energy model");
    std::string energy_sensors;
    std::string hz_range = "1:50";
    std::string power_profile = "default";
    std::string out_format = "csv";
    bool show_ratios = false;
    energy_cmd->add_option("--sensors", energy_sensors, "comma separated sensor names")
        ->required();
    energy_cmd->add_option("--hz-range", hz_range, "rates to sweep as LOW:HIGH[:STEP]");
    energy_cmd->add_option("--profile", power_profile, "'default' or a power profile file");
    energy_cmd->add_option("--out", out_format, "output format: csv or table");
    energy_cmd->add_flag("--ratios", show_ratios, "also print per-sensor draw ratios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (server_cmd->parsed()) {
            return run_server(vsd_dir, http_port, data_dir, idle_timeout_secs);
        }
        if (client_cmd->parsed()) {
            return run_client_command(endpoint, sensors, hz,
                                      count_opt->count() ? std::optional(count_value)
                                                         : std::nullopt,
                                      secs_opt->count() ? std::optional(secs_value) : std::nullopt,
                                      gen, seed, clients, device_profile);
        }
        if (energy_cmd->parsed()) {
            return run_energy_command(energy_sensors, hz_range, power_profile, out_format,
                                      show_ratios);
        }
    } catch (const sensorhub::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const sensorhub::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
