#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include <flowrisk/entity_graph.hpp>
#include <flowrisk/flow_record.hpp>

using namespace flowrisk;

namespace {

flow_record make_record(std::int64_t ts, const std::string& dev, std::optional<std::string> app,
                        const std::string& host, std::int64_t sent = 10, std::int64_t received = 20,
                        bool ad = false) {
    flow_record r;
    r.timestamp = ts;
    r.src_device = dev;
    r.src_app = std::move(app);
    r.dst_host = host;
    r.dst_port = 443;
    r.proto = protocol::HTTPS;
    r.bytes_sent = sent;
    r.bytes_received = received;
    r.encrypted = true;
    r.authenticated = true;
    r.is_ad_fetch = ad;
    r.duration = 1.5;
    return r;
}

std::string dump_graph(const entity_graph& g) {
    std::ostringstream out;
    write_graph(out, g);
    return out.str();
}

}  // namespace

TEST_CASE("parse_flow_record maps fields and leaves absent optionals unset") {
    auto r = parse_flow_record(
        R"({"timestamp":100,"src_device":"d1","dst_host":"a.example","dst_port":443,"protocol":"HTTPS",)"
        R"("bytes_sent":10,"bytes_received":20,"encrypted":true,"authenticated":true,"is_ad_fetch":false,)"
        R"("duration":1.5})");
    CHECK(r.timestamp == 100);
    CHECK(r.src_device == "d1");
    CHECK_FALSE(r.src_app.has_value());
    CHECK(r.dst_host == "a.example");
    CHECK(r.dst_port == 443);
    CHECK(r.proto == protocol::HTTPS);
    CHECK(r.bytes_sent == 10);
    CHECK(r.bytes_received == 20);
    CHECK(r.encrypted);
    CHECK(r.authenticated);
    CHECK_FALSE(r.is_ad_fetch);
    CHECK_FALSE(r.os_name.has_value());
    CHECK(r.duration == 1.5);
}

TEST_CASE("parse_flow_record rejects invariant violations") {
    const std::string base =
        R"("src_device":"d1","dst_host":"a.example","dst_port":443,"bytes_sent":10,"bytes_received":20,)"
        R"("authenticated":true,"is_ad_fetch":false,"duration":1.5)";
    // HTTPS implies encrypted
    CHECK_THROWS_AS(parse_flow_record(R"({"timestamp":100,"protocol":"HTTPS","encrypted":false,)" + base + "}"),
                    validation_error);
    CHECK_THROWS_AS(parse_flow_record(R"({"timestamp":-1,"protocol":"HTTPS","encrypted":true,)" + base + "}"),
                    validation_error);
    CHECK_THROWS_AS(parse_flow_record(R"({"timestamp":100,"protocol":"SRTP","encrypted":false,)" + base + "}"),
                    validation_error);
}

TEST_CASE("parse_flow_record error classes") {
    CHECK_THROWS_AS(parse_flow_record("{not json"), parse_error);
    CHECK_THROWS_AS(parse_flow_record("[1,2]"), schema_error);
    // missing required field names the field
    try {
        parse_flow_record(R"({"timestamp":1})");
        FAIL("expected schema_error");
    } catch (const schema_error& e) {
        CHECK(std::string(e.what()).find("src_device") != std::string::npos);
    }
    // unknown keys are ignored
    auto r = parse_flow_record(
        R"({"timestamp":1,"src_device":"d","dst_host":"h","dst_port":1,"protocol":"OTHER","bytes_sent":0,)"
        R"("bytes_received":0,"encrypted":false,"authenticated":false,"is_ad_fetch":false,"duration":0,)"
        R"("mystery_key":42})");
    CHECK(r.src_device == "d");
}

TEST_CASE("read_flow_log prefixes diagnostics with file and line") {
    std::istringstream in("{\"timestamp\":1}\n");
    try {
        read_flow_log(in, "flows.ndjson");
        FAIL("expected schema_error");
    } catch (const schema_error& e) {
        CHECK(std::string(e.what()).find("flows.ndjson:1") != std::string::npos);
    }
}

TEST_CASE("resolve_entities builds one device, app and host from a single record") {
    auto g = resolve_entities({make_record(100, "d1", "a1", "s1")});
    REQUIRE(g.entities().size() == 3);
    CHECK(g.at("d1").kind == entity_kind::Device);
    CHECK(g.at("d1/app/a1").kind == entity_kind::App);
    CHECK(g.at("s1").kind == entity_kind::Server);
    REQUIRE(g.edges().size() == 2);
    CHECK(g.edges().at({"d1", "s1"}).flow_count == 1);
    CHECK(g.edges().at({"d1/app/a1", "s1"}).flow_count == 1);
    CHECK(g.parent_of("d1/app/a1") == "d1");
    CHECK(g.frozen());
}

TEST_CASE("resolve_entities aggregates repeated flows") {
    auto g = resolve_entities({make_record(100, "d1", "a1", "s1"), make_record(200, "d1", "a1", "s1")});
    CHECK(g.entities().size() == 3);
    const auto& e = g.edges().at({"d1", "s1"});
    CHECK(e.flow_count == 2);
    CHECK(e.total_bytes == 60);
    CHECK(e.last_seen == 200);
    CHECK(e.auth_fraction == 1.0);
    CHECK(g.at("d1").first_seen == 100);
    CHECK(g.at("d1").last_seen == 200);
}

TEST_CASE("duplicate records are counted, not deduplicated") {
    auto g = resolve_entities({make_record(100, "d1", "a1", "s1"), make_record(100, "d1", "a1", "s1")});
    CHECK(g.edges().at({"d1", "s1"}).flow_count == 2);
}

TEST_CASE("majority ad vote resolves host kind") {
    std::vector<flow_record> records;
    int ad_count = 0;
    for (int i = 0; i < 10; ++i) {
        bool ad = i < 6;
        if (ad) ++ad_count;
        records.push_back(make_record(100 + i, "d1", "a1", "h", 10, 20, ad));
    }
    // independent majority check over the record list
    REQUIRE(ad_count * 2 > static_cast<int>(records.size()));
    auto g = resolve_entities(records);
    CHECK(g.at("h").kind == entity_kind::AdNetwork);

    SECTION("exactly half is not a majority; ties resolve to Server") {
        std::vector<flow_record> tied;
        for (int i = 0; i < 10; ++i) tied.push_back(make_record(100 + i, "d1", "a1", "h", 10, 20, i < 5));
        CHECK(resolve_entities(tied).at("h").kind == entity_kind::Server);
    }
}

TEST_CASE("resolution rules override host kind") {
    resolution_rules rules = resolution_rules::parse(
        "# hostname classification\n"
        "ad_host_pattern = *.ads.example\n"
        "website_pattern = www.*\n");
    auto g = resolve_entities({make_record(1, "d1", "a1", "tracker.ads.example"),
                               make_record(2, "d1", "a1", "www.news.example")},
                              rules);
    CHECK(g.at("tracker.ads.example").kind == entity_kind::AdNetwork);
    CHECK(g.at("www.news.example").kind == entity_kind::Website);

    CHECK_THROWS_AS(resolution_rules::parse("bogus_key = x\n"), config_error);
    CHECK_THROWS_AS(resolution_rules::parse("no equals sign\n"), parse_error);
}

TEST_CASE("containment children") {
    std::vector<flow_record> records;
    auto r = make_record(100, "d1", "a1", "s1");
    r.os_name = "ios";
    records.push_back(r);
    auto r2 = make_record(110, "d1", "a2", "s1");
    r2.os_name = "ios";
    records.push_back(r2);
    auto g = resolve_entities(records);

    CHECK(containment_children(g, "d1") == std::set<std::string>{"d1/app/a1", "d1/app/a2", "d1/os/ios"});
    CHECK(containment_children(g, "d1/app/a1").empty());
    CHECK_THROWS_AS(containment_children(g, "ghost"), not_found_error);
}

TEST_CASE("children of the 10-record ad fixture") {
    std::vector<flow_record> records;
    for (int i = 0; i < 10; ++i) records.push_back(make_record(100 + i, "d1", "a1", "h", 10, 20, i < 6));
    auto g = resolve_entities(records);
    CHECK(containment_children(g, "d1") == std::set<std::string>{"d1/app/a1"});
}

TEST_CASE("resolve_entities is order-independent") {
    std::vector<flow_record> records;
    std::mt19937_64 rng(7);
    for (int i = 0; i < 40; ++i) {
        auto r = make_record(1000 + rng() % 500, "d" + std::to_string(rng() % 3),
                             rng() % 2 ? std::optional<std::string>("a" + std::to_string(rng() % 2)) : std::nullopt,
                             "h" + std::to_string(rng() % 4), rng() % 1000, rng() % 1000, rng() % 3 == 0);
        r.duration = static_cast<double>(rng() % 100) / 7.0;
        if (rng() % 2) r.os_name = "os" + std::to_string(rng() % 2);
        if (rng() % 2) r.app_version = std::to_string(rng() % 5);
        records.push_back(r);
    }
    const std::string reference = dump_graph(resolve_entities(records));
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(records.begin(), records.end(), rng);
        CHECK(dump_graph(resolve_entities(records)) == reference);
    }
}

TEST_CASE("device-level edge totals equal the device's record bytes") {
    std::vector<flow_record> records;
    std::mt19937_64 rng(11);
    std::int64_t expected = 0;
    for (int i = 0; i < 25; ++i) {
        auto r = make_record(100 + i, "d1", i % 2 ? std::optional<std::string>("a1") : std::nullopt,
                             "h" + std::to_string(rng() % 3), rng() % 500, rng() % 500);
        expected += r.total_bytes();
        records.push_back(r);
    }
    auto g = resolve_entities(records);
    std::int64_t device_level = 0;
    for (const auto& [key, e] : g.edges()) {
        if (key.first == "d1") device_level += e.total_bytes;
    }
    CHECK(device_level == expected);
}

TEST_CASE("containment stays a forest") {
    entity_graph g;
    for (const char* id : {"a", "b", "c"}) {
        entity e;
        e.id = id;
        e.kind = entity_kind::Device;
        g.add_entity(e);
    }
    g.set_parent("b", "a");
    CHECK_THROWS_AS(g.set_parent("b", "c"), validation_error);  // second parent
    g.set_parent("c", "b");
    CHECK_THROWS_AS(g.set_parent("a", "c"), validation_error);  // cycle
}

TEST_CASE("graph freeze blocks mutation and kind is immutable") {
    entity_graph g;
    entity e;
    e.id = "x";
    e.kind = entity_kind::Device;
    g.add_entity(e);

    entity clash = e;
    clash.kind = entity_kind::Server;
    CHECK_THROWS_AS(g.add_entity(clash), validation_error);

    g.freeze();
    CHECK_THROWS_AS(g.add_entity(e), state_error);
}

TEST_CASE("graph export round-trips and is stable") {
    std::vector<flow_record> records;
    for (int i = 0; i < 10; ++i) {
        auto r = make_record(100 + i, "d" + std::to_string(i % 2), "a1", "h" + std::to_string(i % 3));
        r.os_name = "ios";
        records.push_back(r);
    }
    auto g = resolve_entities(records);
    const std::string text = dump_graph(g);

    std::istringstream in(text);
    auto g2 = read_graph(in);
    CHECK(dump_graph(g2) == text);
    CHECK(g2.frozen());
    CHECK(g2.parent_of("d0/app/a1") == "d0");
}

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(resolve_entities({}), empty_input_error);
}
