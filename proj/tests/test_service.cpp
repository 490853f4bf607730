#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "ppe/gate_service.hpp"
#include "ppe/imageio.hpp"

using namespace ppe;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

constexpr int kPort = 18473;

struct ServiceFixture {
    fs::path dir;
    GateService* service = nullptr;

    ServiceFixture() {
        dir = fs::temp_directory_path() / "ppe_service_test";
        fs::remove_all(dir);
        fs::create_directories(dir);

        // session s1 sees full PPE; any other session sees nothing
        std::ofstream(dir / "ppe.txt")
            << "s1 hardhat 0.9 20 2 40 12\n"
               "s1 safety_vest 0.9 12 20 52 45\n"
               "s1 safety_gloves 0.9 5 48 15 58\n"
               "s1 safety_glasses 0.9 24 6 36 11\n"
               "s1 hearing_protection 0.9 18 4 26 12\n";

        std::ostringstream cfg;
        cfg << "pipeline.ppe_backend = fixture:" << (dir / "ppe.txt").string()
            << "\n"
            << "server.port = " << kPort << "\n"
            << "server.log_dir = " << (dir / "logs").string() << "\n"
            << "policy.frames_required = 2\n"
            << "policy.allow_anonymous = true\n";
        service = new GateService(Config::from_string(cfg.str()));
        service->set_clock([this] { return double(tick_++); });
        REQUIRE(service->start_background());
    }

    ~ServiceFixture() {
        service->stop();
        delete service;
        fs::remove_all(dir);
    }

    std::string png_frame() const {
        Image frame(64, 64);
        for (auto& px : frame.pixels) {
            px = 90;
        }
        const auto path = dir / "frame.png";
        write_png(path, frame);
        std::ifstream in(path, std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        return bytes.str();
    }

    std::atomic<int> tick_{1};
};

} // namespace

TEST_CASE("gate service session lifecycle over HTTP") {
    ServiceFixture fx;
    httplib::Client client("127.0.0.1", kPort);

    auto created = client.Post("/v1/sessions", "", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const auto sid = json::parse(created->body).at("session_id").get<std::string>();
    CHECK(sid == "s1");

    const std::string frame = fx.png_frame();

    // first compliant frame: streak 1 of 2
    auto res = client.Post("/v1/sessions/s1/frames", frame, "image/png");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto body = json::parse(res->body);
    CHECK(body.at("state") == "Checking");
    CHECK(body.at("person_found") == true);
    CHECK(body.at("per_class_present").size() == 5);
    CHECK(body.at("missing").empty());
    CHECK(body.at("identity") == "unknown");

    // second compliant frame grants access
    res = client.Post("/v1/sessions/s1/frames", frame, "image/png");
    body = json::parse(res->body);
    CHECK(body.at("state") == "Granted");

    // closing the inner door moves to cooldown
    res = client.Post("/v1/sessions/s1/events",
                      json{{"type", "InnerDoorClosed"}}.dump(),
                      "application/json");
    CHECK(json::parse(res->body).at("state") == "Cooldown");

    res = client.Post("/v1/sessions/s1/events", json{{"type", "Reset"}}.dump(),
                      "application/json");
    CHECK(json::parse(res->body).at("state") == "Idle");

    // session history covers every applied event
    res = client.Get("/v1/sessions/s1");
    body = json::parse(res->body);
    CHECK(body.at("state") == "Idle");
    CHECK(body.at("history").size() >= 5);
    for (const auto& rec : body.at("history")) {
        CHECK(rec.contains("from"));
        CHECK(rec.contains("to"));
        CHECK(rec.contains("event"));
    }
}

TEST_CASE("gate service reports missing PPE for unseen sessions") {
    ServiceFixture fx;
    httplib::Client client("127.0.0.1", kPort);

    // consume id s1, then work with s2 which has no fixture entries
    client.Post("/v1/sessions", "", "application/json");
    auto created = client.Post("/v1/sessions", "", "application/json");
    const auto sid = json::parse(created->body).at("session_id").get<std::string>();
    CHECK(sid == "s2");

    const auto res =
        client.Post("/v1/sessions/s2/frames", fx.png_frame(), "image/png");
    const auto body = json::parse(res->body);
    CHECK(body.at("state") == "Checking");
    CHECK(body.at("missing").size() == 5);
    CHECK(body.at("per_class_present").empty());
}

TEST_CASE("gate service error paths") {
    ServiceFixture fx;
    httplib::Client client("127.0.0.1", kPort);

    auto res = client.Post("/v1/sessions/nope/frames", fx.png_frame(),
                           "image/png");
    CHECK(res->status == 404);
    res = client.Get("/v1/sessions/nope");
    CHECK(res->status == 404);

    client.Post("/v1/sessions", "", "application/json");
    res = client.Post("/v1/sessions/s1/frames", "not an image", "image/png");
    CHECK(res->status == 400);
    CHECK(json::parse(res->body).contains("error"));

    res = client.Post("/v1/sessions/s1/events", json{{"type", "Jump"}}.dump(),
                      "application/json");
    CHECK(res->status == 400);
    res = client.Post("/v1/sessions/s1/events", "{broken", "application/json");
    CHECK(res->status == 400);
}

TEST_CASE("gate service writes a text-only audit trail") {
    ServiceFixture fx;
    httplib::Client client("127.0.0.1", kPort);
    client.Post("/v1/sessions", "", "application/json");
    const std::string frame = fx.png_frame();
    for (int i = 0; i < 10; ++i) {
        const auto res =
            client.Post("/v1/sessions/s1/frames", frame, "image/png");
        REQUIRE(res);
        CHECK(res->status == 200);
    }
    fx.service->stop();

    const auto audit = fx.dir / "logs" / "audit.log";
    REQUIRE(fs::exists(audit));
    std::ifstream in(audit);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        const auto rec = json::parse(line); // throws on malformed lines
        CHECK(rec.contains("session"));
        CHECK(rec.contains("event"));
    }
    CHECK(lines >= 10);

    // nothing the service wrote may contain encoded image bytes
    const std::string png_magic = "\x89PNG";
    const std::string jpeg_magic = "\xFF\xD8\xFF";
    for (const auto& entry : fs::recursive_directory_iterator(fx.dir / "logs")) {
        if (!entry.is_regular_file()) {
            continue;
        }
        std::ifstream f(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << f.rdbuf();
        const std::string contents = buf.str();
        CHECK(contents.find(png_magic) == std::string::npos);
        CHECK(contents.find(jpeg_magic) == std::string::npos);
    }
}
