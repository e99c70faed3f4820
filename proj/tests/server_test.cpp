#include <gtest/gtest.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sensorhub/android_wrapper.hpp"
#include "sensorhub/client.hpp"
#include "sensorhub/net.hpp"
#include "sensorhub/protocol.hpp"
#include "sensorhub/server.hpp"
#include "test_util.hpp"

namespace sensorhub {
namespace {

namespace fs = std::filesystem;

fs::path make_temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() /
                     ("sensorhub_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string phone_vsd(const std::string& name, int port) {
    return "<virtual-sensor name=\"" + name + "\">\n"
           "  <address wrapper=\"android\">\n"
           "    <predicate key=\"port\">" + std::to_string(port) + "</predicate>\n"
           "  </address>\n"
           "  <storage history-size=\"500\"/>\n"
           "</virtual-sensor>\n";
}

// Polls until the predicate holds or the deadline passes.
template <typename Pred>
bool eventually(Pred pred, std::chrono::milliseconds budget = std::chrono::seconds(5)) {
    const auto deadline = std::chrono::steady_clock::now() + budget;
    while (std::chrono::steady_clock::now() < deadline) {
        if (pred()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return pred();
}

struct TempTree {
    fs::path root;
    explicit TempTree(const std::string& tag) : root(make_temp_dir(tag)) {}
    ~TempTree() { fs::remove_all(root); }
};

ServerConfig make_config(const fs::path& vsd_dir) {
    ServerConfig config;
    config.vsd_dir = vsd_dir;
    config.http_port = 0;
    config.idle_timeout = std::chrono::seconds(2);
    return config;
}

TEST(ServerStartup, LoadsDefinitionsAndBindsPorts) {
    TempTree tree("startup");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    EXPECT_EQ(server.sensor_names(), std::vector<std::string>{"phone"});
    EXPECT_TRUE(server.load_failures().empty());
    EXPECT_GT(server.http_port(), 0);
    EXPECT_GT(server.wrapper_port("phone"), 0);
    server.stop();
}

TEST(ServerStartup, SkipsBrokenDefinitionsAndLoadsTheRest) {
    TempTree tree("mixed");
    write_file(tree.root / "a_good.xml", phone_vsd("good", 0));
    write_file(tree.root / "b_broken.xml", "<virtual-sensor><address/></virtual-sensor>");
    write_file(tree.root / "c_unknown.xml",
               "<virtual-sensor name=\"ghost\">\n"
               "  <address wrapper=\"serial\"><predicate key=\"port\">1</predicate></address>\n"
               "</virtual-sensor>\n");
    write_file(tree.root / "notes.txt", "not a definition");

    Server server(make_config(tree.root));
    server.start();
    EXPECT_EQ(server.sensor_names(), std::vector<std::string>{"good"});
    EXPECT_EQ(server.load_failures().size(), 2u);
    server.stop();
}

TEST(ServerStartup, EmptyDirectoryStillServesTheApi) {
    TempTree tree("empty");
    Server server(make_config(tree.root));
    server.start();
    httplib::Client http("127.0.0.1", server.http_port());
    const auto res = http.Get("/sensors");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(nlohmann::json::parse(res->body), nlohmann::json::array());
    server.stop();
}

TEST(ServerStartup, MissingDirectoryFailsToStart) {
    Server server(make_config("/nonexistent/definitely/missing"));
    EXPECT_THROW(server.start(), ConfigError);
}

TEST(ServerIngest, StoresStreamedFrames) {
    TempTree tree("ingest");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    SimulationConfig sim;
    sim.port = server.wrapper_port("phone");
    sim.selection = parse_sensor_list("light");
    sim.hz = 100.0;
    sim.count = 3;
    sim.generator = GeneratorSpec::parse("constant:7.5");
    const auto report = run_client(sim);
    EXPECT_TRUE(report.completed) << report.error;
    EXPECT_EQ(report.packets_sent, 3u);
    EXPECT_EQ(report.bytes_sent, 2u + 3u * 4u);

    const auto sensor = server.find_sensor("phone");
    ASSERT_NE(sensor, nullptr);
    ASSERT_TRUE(eventually([&] { return sensor->buffer->size() == 3; }));
    const auto stored = sensor->buffer->latest(10);
    ASSERT_EQ(stored.size(), 3u);
    for (const auto& element : stored) {
        ASSERT_EQ(element.values.size(), 1u);
        EXPECT_EQ(element.values[0], 7.5f);
        EXPECT_EQ(element.schema->fields[0].name, "light");
    }
    // Newest-first ordering with non-decreasing timestamps underneath.
    EXPECT_GE(stored[0].timestamp_ms, stored[1].timestamp_ms);
    EXPECT_GE(stored[1].timestamp_ms, stored[2].timestamp_ms);
    server.stop();
}

TEST(ServerIngest, MalformedMetadataStoresNothing) {
    TempTree tree("badmeta");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    auto stream = net::TcpStream::connect("127.0.0.1", server.wrapper_port("phone"));
    const std::vector<std::uint8_t> bad = {0xFF, 0xFF};  // padding bits set
    stream.write_all(bad);
    // The server should close on us; detect via EOF on a read.
    std::array<std::uint8_t, 1> probe{};
    const auto status = stream.read_exact(probe, std::chrono::seconds(5));
    EXPECT_EQ(status, net::ReadStatus::clean_eof);

    const auto sensor = server.find_sensor("phone");
    EXPECT_EQ(sensor->buffer->size(), 0u);
    server.stop();
}

TEST(ServerIngest, MidFrameDisconnectKeepsWholeFramesOnly) {
    TempTree tree("midframe");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    const auto selection = testing::doc_example_selection();
    auto stream = net::TcpStream::connect("127.0.0.1", server.wrapper_port("phone"));
    const auto header = encode_metadata(selection);
    stream.write_all(header);

    ReadingGroups groups;
    for (int i = 1; i <= kSensorCount; ++i) {
        if (selection.enabled(i)) {
            groups.emplace_back(sensor_by_index(i).components, 1.0f);
        }
    }
    const auto payload = encode_readings(selection, groups);
    ASSERT_EQ(payload.size(), 84u);
    stream.write_all(payload);                // one whole frame
    stream.write_all(std::span(payload).first(10));  // then a torn one
    stream.shutdown_both();
    stream.close();

    const auto sensor = server.find_sensor("phone");
    ASSERT_TRUE(eventually([&] { return sensor->buffer->size() == 1; }));
    // Give the connection time to fold; the count must stay at one.
    std::this_thread::sleep_for(std::chrono::milliseconds(150));
    EXPECT_EQ(sensor->buffer->size(), 1u);
    EXPECT_EQ(sensor->buffer->latest(1)[0].values.size(), 21u);
    server.stop();
}

TEST(ServerIngest, SequentialConnectionsWithDifferentSelections) {
    TempTree tree("hetero");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    SimulationConfig first;
    first.port = server.wrapper_port("phone");
    first.selection = parse_sensor_list("light");
    first.hz = 200.0;
    first.count = 2;
    first.generator = GeneratorSpec::parse("constant:1.0");
    ASSERT_TRUE(run_client(first).completed);

    SimulationConfig second = first;
    second.selection = parse_sensor_list("accel,gyro");
    second.generator = GeneratorSpec::parse("constant:2.0");
    ASSERT_TRUE(run_client(second).completed);

    const auto sensor = server.find_sensor("phone");
    ASSERT_TRUE(eventually([&] { return sensor->buffer->size() == 4; }));
    const auto stored = sensor->buffer->latest(4);
    // Newest two carry the six-field schema, oldest two the single field.
    EXPECT_EQ(stored[0].schema->fields.size(), 6u);
    EXPECT_EQ(stored[1].schema->fields.size(), 6u);
    EXPECT_EQ(stored[2].schema->fields.size(), 1u);
    EXPECT_EQ(stored[3].schema->fields.size(), 1u);
    server.stop();
}

TEST(ServerIngest, WritesCsvWhenDataDirConfigured) {
    TempTree tree("csv");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    auto config = make_config(tree.root);
    config.data_dir = tree.root / "data";
    Server server(config);
    server.start();

    SimulationConfig sim;
    sim.port = server.wrapper_port("phone");
    sim.selection = parse_sensor_list("light,pressure");
    sim.hz = 200.0;
    sim.count = 2;
    sim.generator = GeneratorSpec::parse("constant:3.0");
    ASSERT_TRUE(run_client(sim).completed);

    const auto sensor = server.find_sensor("phone");
    ASSERT_TRUE(eventually([&] { return sensor->buffer->size() == 2; }));
    server.stop();

    std::ifstream in(tree.root / "data" / "phone.csv");
    ASSERT_TRUE(in.good());
    std::string header;
    ASSERT_TRUE(std::getline(in, header));
    EXPECT_EQ(header, "timestamp,light,pressure");
    std::string row;
    int rows = 0;
    while (std::getline(in, row)) {
        if (!row.empty()) ++rows;
        EXPECT_NE(row.find(",3,3"), std::string::npos) << row;
    }
    EXPECT_EQ(rows, 2);
}

TEST(ServerHttp, SensorsEndpointReflectsState) {
    TempTree tree("http");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    httplib::Client http("127.0.0.1", server.http_port());
    {
        const auto res = http.Get("/sensors");
        ASSERT_TRUE(res);
        const auto body = nlohmann::json::parse(res->body);
        ASSERT_EQ(body.size(), 1u);
        EXPECT_EQ(body[0]["name"], "phone");
        EXPECT_EQ(body[0]["count"], 0);
        EXPECT_TRUE(body[0]["fields"].empty());
    }

    SimulationConfig sim;
    sim.port = server.wrapper_port("phone");
    sim.selection = parse_sensor_list("accel,light");
    sim.hz = 200.0;
    sim.count = 5;
    sim.generator = GeneratorSpec::parse("constant:1.25");
    ASSERT_TRUE(run_client(sim).completed);
    const auto sensor = server.find_sensor("phone");
    ASSERT_TRUE(eventually([&] { return sensor->buffer->size() == 5; }));

    {
        const auto res = http.Get("/sensors");
        ASSERT_TRUE(res);
        const auto body = nlohmann::json::parse(res->body);
        EXPECT_EQ(body[0]["count"], 5);
        const std::vector<std::string> expected = {"accelerometer_x", "accelerometer_y",
                                                   "accelerometer_z", "light"};
        EXPECT_EQ(body[0]["fields"].get<std::vector<std::string>>(), expected);
    }
    server.stop();
}

TEST(ServerHttp, LatestEndpointReturnsNewestFirst) {
    TempTree tree("latest");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    std::vector<float> sent;
    SimulationConfig sim;
    sim.port = server.wrapper_port("phone");
    sim.selection = parse_sensor_list("light");
    sim.hz = 100.0;
    sim.count = 6;
    sim.seed = 9;
    sim.generator = GeneratorSpec::parse("noise:10:20");
    sim.on_frame = [&](std::uint64_t, const ReadingGroups& groups) {
        sent.push_back(groups[0][0]);
    };
    ASSERT_TRUE(run_client(sim).completed);
    const auto sensor = server.find_sensor("phone");
    ASSERT_TRUE(eventually([&] { return sensor->buffer->size() == 6; }));

    httplib::Client http("127.0.0.1", server.http_port());
    const auto res = http.Get("/sensors/phone/latest?n=4");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    const auto body = nlohmann::json::parse(res->body);
    ASSERT_EQ(body.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        const float expected = sent[sent.size() - 1 - i];
        EXPECT_EQ(body[i]["values"]["light"].get<float>(), expected);
        EXPECT_TRUE(body[i]["timestamp"].get<std::string>().ends_with("Z"));
        EXPECT_FALSE(body[i]["source"].get<std::string>().empty());
    }

    // Default n is 10: returns all six stored elements.
    const auto res_default = http.Get("/sensors/phone/latest");
    ASSERT_TRUE(res_default);
    EXPECT_EQ(nlohmann::json::parse(res_default->body).size(), 6u);
    server.stop();
}

TEST(ServerHttp, ErrorResponses) {
    TempTree tree("httperr");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    httplib::Client http("127.0.0.1", server.http_port());
    const auto missing = http.Get("/sensors/nosuch/latest");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);

    const auto bad_n = http.Get("/sensors/phone/latest?n=soon");
    ASSERT_TRUE(bad_n);
    EXPECT_EQ(bad_n->status, 400);

    const auto negative = http.Get("/sensors/phone/latest?n=-3");
    ASSERT_TRUE(negative);
    EXPECT_EQ(negative->status, 400);
    server.stop();
}

TEST(ServerShutdown, ReleasesPortsAndWrappers) {
    TempTree tree("shutdown");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    std::uint16_t wrapper_port = 0;
    {
        Server server(make_config(tree.root));
        server.start();
        wrapper_port = server.wrapper_port("phone");
        EXPECT_EQ(server.repository().instance_count(), 1u);
        server.stop();
        EXPECT_EQ(server.repository().instance_count(), 0u);
    }
    // The wrapper's listener is gone, so a fresh connect must fail.
    EXPECT_THROW(net::TcpStream::connect("127.0.0.1", wrapper_port), net::SocketError);
}

TEST(ServerShutdown, StopWithLiveClientDoesNotHang) {
    TempTree tree("livestop");
    write_file(tree.root / "phone.xml", phone_vsd("phone", 0));
    Server server(make_config(tree.root));
    server.start();

    const std::uint16_t port = server.wrapper_port("phone");
    std::atomic<bool> cancel{false};
    std::thread client([&] {
        SimulationConfig sim;
        sim.port = port;
        sim.selection = parse_sensor_list("light");
        sim.hz = 50.0;
        sim.secs = 30.0;
        sim.generator = GeneratorSpec::parse("constant:1.0");
        sim.cancel = &cancel;
        run_client(sim);
    });
    const auto sensor = server.find_sensor("phone");
    ASSERT_TRUE(eventually([&] { return sensor->buffer->size() >= 3; }));

    const auto begin = std::chrono::steady_clock::now();
    server.stop();
    const auto took = std::chrono::steady_clock::now() - begin;
    EXPECT_LT(took, std::chrono::seconds(5));
    cancel = true;
    client.join();
}

}  // namespace
}  // namespace sensorhub
