#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mmqkd.h"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct ConfigDeleter {
    void operator()(mmqkd_config* c) const { mmqkd_config_free(c); }
};
using Handle = std::unique_ptr<mmqkd_config, ConfigDeleter>;

Handle make_config() {
    Handle h(mmqkd_config_new());
    REQUIRE(h != nullptr);
    return h;
}

nlohmann::json dump(const mmqkd_config* cfg) {
    char* text = mmqkd_config_to_json(cfg);
    REQUIRE(text != nullptr);
    auto j = nlohmann::json::parse(text);
    mmqkd_string_free(text);
    return j;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mmqkd_capi_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("configs start at the defaults and dump as full documents") {
    const Handle cfg = make_config();
    const nlohmann::json j = dump(cfg.get());
    CHECK(j["mode"] == "sweep");
    CHECK(j["seed"] == 42);
    CHECK(j["trials"] == 5);
    CHECK(j["protocol"]["clock_hz"] == 1.0e9);
    CHECK(j["channel"].contains("kappa_per_km"));
    CHECK(j["detector"].contains("dead_time_s"));
    CHECK(j["drift"].contains("period_s"));
}

TEST_CASE("mutators merge, type-check and reject unknown keys") {
    const Handle cfg = make_config();

    CHECK(mmqkd_config_set(cfg.get(), "seed", "7") == MMQKD_OK);
    CHECK(mmqkd_config_set(cfg.get(), "channel.kappa_per_km", "0.004") == MMQKD_OK);
    CHECK(mmqkd_config_set(cfg.get(), "distances_km", "[1,5,10]") == MMQKD_OK);
    CHECK(mmqkd_config_set_string(cfg.get(), "launch", "adapter") == MMQKD_OK);
    CHECK(mmqkd_config_merge_json(cfg.get(), R"({"trials": 3, "protocol": {"gate_s": 2e-10}})") ==
          MMQKD_OK);

    const nlohmann::json j = dump(cfg.get());
    CHECK(j["seed"] == 7);
    CHECK(j["channel"]["kappa_per_km"] == 0.004);
    CHECK(j["distances_km"] == nlohmann::json({1, 5, 10}));
    CHECK(j["launch"] == "adapter");
    CHECK(j["trials"] == 3);
    CHECK(j["protocol"]["gate_s"] == 2e-10);
    // Untouched keys keep their values after every merge.
    CHECK(j["protocol"]["clock_hz"] == 1.0e9);

    CHECK(mmqkd_config_set(cfg.get(), "channel.no_such_knob", "1") == MMQKD_ERR_CONFIG);
    CHECK(std::string(mmqkd_last_error()).find("no_such_knob") != std::string::npos);
    CHECK(mmqkd_config_set(cfg.get(), "trials", "\"many\"") == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_config_merge_json(cfg.get(), "{ not json") == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_config_set(cfg.get(), "seed", "not json") == MMQKD_ERR_CONFIG);

    // Failed mutations leave the document unchanged.
    CHECK(dump(cfg.get()) == j);
}

TEST_CASE("null arguments are config errors, not crashes") {
    const Handle cfg = make_config();
    CHECK(mmqkd_config_load(nullptr, "x.json") == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_config_load(cfg.get(), nullptr) == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_config_set(cfg.get(), nullptr, "1") == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_config_merge_json(nullptr, "{}") == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_run(nullptr) == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_config_to_json(nullptr) == nullptr);
    CHECK(std::string(mmqkd_last_error()).find("null") != std::string::npos);
}

TEST_CASE("config files load through the same checked path") {
    const fs::path dir = fresh_dir("load");
    const fs::path good = dir / "good.json";
    std::ofstream(good) << R"({"seed": 11, "channel": {"length_km": 7.0}})";
    const Handle cfg = make_config();
    CHECK(mmqkd_config_load(cfg.get(), good.string().c_str()) == MMQKD_OK);
    const nlohmann::json j = dump(cfg.get());
    CHECK(j["seed"] == 11);
    CHECK(j["channel"]["length_km"] == 7.0);

    CHECK(mmqkd_config_load(cfg.get(), (dir / "absent.json").string().c_str()) ==
          MMQKD_ERR_RUNTIME);

    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << R"({"seed": "eleven"})";
    CHECK(mmqkd_config_load(cfg.get(), bad.string().c_str()) == MMQKD_ERR_CONFIG);
}

TEST_CASE("runs execute the configured mode and map the error taxonomy") {
    const fs::path dir = fresh_dir("run");
    const Handle cfg = make_config();
    REQUIRE(mmqkd_config_merge_json(
                cfg.get(), R"({"distances_km": [1, 5], "trials": 2})") == MMQKD_OK);
    REQUIRE(mmqkd_config_set_string(cfg.get(), "out_dir", (dir / "sweep").string().c_str()) ==
            MMQKD_OK);
    CHECK(mmqkd_run(cfg.get()) == MMQKD_OK);
    CHECK(fs::exists(dir / "sweep" / "observables.csv"));
    CHECK(fs::exists(dir / "sweep" / "skr.csv"));
    CHECK(fs::exists(dir / "sweep" / "summary.json"));

    // Semantic validation happens at run time, not at merge time.
    REQUIRE(mmqkd_config_set(cfg.get(), "trials", "0") == MMQKD_OK);
    CHECK(mmqkd_run(cfg.get()) == MMQKD_ERR_CONFIG);
    REQUIRE(mmqkd_config_set(cfg.get(), "trials", "2") == MMQKD_OK);

    // Analyze on a missing table is a runtime failure with the path in the message.
    REQUIRE(mmqkd_config_set_string(cfg.get(), "mode", "analyze") == MMQKD_OK);
    REQUIRE(mmqkd_config_set_string(cfg.get(), "analyze_input",
                                    (dir / "nowhere.csv").string().c_str()) == MMQKD_OK);
    CHECK(mmqkd_run(cfg.get()) == MMQKD_ERR_RUNTIME);
    CHECK(std::string(mmqkd_last_error()).find("nowhere.csv") != std::string::npos);

    // Re-analyzing the sweep output succeeds and reproduces the table.
    REQUIRE(mmqkd_config_set_string(cfg.get(), "analyze_input",
                                    (dir / "sweep" / "observables.csv").string().c_str()) ==
            MMQKD_OK);
    REQUIRE(mmqkd_config_set_string(cfg.get(), "out_dir", (dir / "re").string().c_str()) ==
            MMQKD_OK);
    CHECK(mmqkd_run(cfg.get()) == MMQKD_OK);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(dir / "re" / "skr.csv") == slurp(dir / "sweep" / "skr.csv"));

    // A non-converging calibration reports its own status code.
    REQUIRE(mmqkd_config_set_string(cfg.get(), "mode", "calibrate") == MMQKD_OK);
    REQUIRE(mmqkd_config_set(cfg.get(), "channel.e_opt_x", "0.08") == MMQKD_OK);
    REQUIRE(mmqkd_config_set_string(cfg.get(), "out_dir", (dir / "cal").string().c_str()) ==
            MMQKD_OK);
    CHECK(mmqkd_run(cfg.get()) == MMQKD_ERR_CALIBRATION);
    CHECK(fs::exists(dir / "cal" / "calibrated.json"));
}

TEST_CASE("key-rate kernels are exposed without handles") {
    mmqkd_keyrate_inputs in;
    mmqkd_keyrate_inputs_default(&in);
    CHECK(in.mu == 0.4);
    CHECK(in.nu == 0.1);
    CHECK(in.f_ec == 1.16);
    CHECK(in.e0 == 0.5);
    CHECK(in.clock_hz == 1.0e9);

    // Ideal lossless channel: the single-photon yield bound lands on the
    // frozen reference value.
    auto poisson_gain = [](double eta, double intensity) {
        return 1.0 - std::exp(-eta * intensity);
    };
    in.q_signal = poisson_gain(1.0, in.mu);
    in.q_decoy = poisson_gain(1.0, in.nu);
    in.e_signal = 0.0;
    in.e_decoy = 0.0;
    in.y0 = 0.0;
    double y1 = 0.0;
    REQUIRE(mmqkd_y1_lower_bound(&in, &y1) == MMQKD_OK);
    CHECK(y1 == doctest::Approx(0.9924249929742441).epsilon(1e-12));

    double e1 = 1.0;
    REQUIRE(mmqkd_e1_upper_bound(&in, y1, &e1) == MMQKD_OK);
    CHECK(e1 >= 0.0);
    CHECK(e1 <= 0.5);

    double bps = 0.0;
    REQUIRE(mmqkd_secure_key_rate(&in, &bps) == MMQKD_OK);
    CHECK(bps > 0.0);
    CHECK(bps <= in.clock_hz * in.p_z * in.p_z);

    CHECK(mmqkd_y1_lower_bound(nullptr, &y1) == MMQKD_ERR_CONFIG);
    CHECK(mmqkd_y1_lower_bound(&in, nullptr) == MMQKD_ERR_CONFIG);
    in.mu = -1.0;
    CHECK(mmqkd_y1_lower_bound(&in, &y1) == MMQKD_ERR_CONFIG);

    double db = 0.0;
    REQUIRE(mmqkd_equivalent_loss_db(10.0, 0.0, &db) == MMQKD_OK);
    CHECK(db == 3.0);
    REQUIRE(mmqkd_equivalent_loss_db(17.0, 0.0, &db) == MMQKD_OK);
    CHECK(db == doctest::Approx(5.1).epsilon(1e-15));
    REQUIRE(mmqkd_equivalent_loss_db(10.0, 0.5, &db) == MMQKD_OK);
    CHECK(db == 5.0);
    CHECK(mmqkd_equivalent_loss_db(-1.0, 0.0, &db) == MMQKD_ERR_CONFIG);
}
