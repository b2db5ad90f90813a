#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include <flowrisk/forensics.hpp>

using namespace flowrisk;

namespace {

entity_graph device_graph() {
    entity_graph g;
    for (const char* id : {"dev", "dev/app/a1", "dev/app/a2"}) {
        entity e;
        e.id = id;
        e.kind = id == std::string("dev") ? entity_kind::Device : entity_kind::App;
        g.add_entity(e);
    }
    g.set_parent("dev/app/a1", "dev");
    g.set_parent("dev/app/a2", "dev");
    g.freeze();
    return g;
}

assessment_map dc_only(const std::map<std::string, double>& dc) {
    assessment_map m;
    for (const auto& [id, d] : dc) {
        compromise_assessment a;
        a.id = id;
        a.degree = d;
        m[id] = a;
    }
    return m;
}

flow_record flow(std::int64_t ts, const std::string& dev, const std::string& host, std::int64_t sent,
                 std::int64_t received, double duration) {
    flow_record r;
    r.timestamp = ts;
    r.src_device = dev;
    r.dst_host = host;
    r.dst_port = 443;
    r.proto = protocol::HTTPS;
    r.bytes_sent = sent;
    r.bytes_received = received;
    r.encrypted = true;
    r.authenticated = true;
    r.duration = duration;
    return r;
}

}  // namespace

TEST_CASE("monitor requires a positive threshold") {
    CHECK_THROWS_AS(compromise_monitor(0.0), config_error);
    CHECK_THROWS_AS(compromise_monitor(-1.0), config_error);
}

TEST_CASE("monitor is edge-triggered") {
    auto g = device_graph();

    SECTION("values below the threshold never alert") {
        compromise_monitor m(0.5);
        CHECK(m.observe(g, dc_only({{"dev", 0.0}}), 1).empty());
        CHECK(m.observe(g, dc_only({{"dev", 0.1}}), 2).empty());
    }
    SECTION("one alert per upward crossing") {
        compromise_monitor m(0.5);
        const double series[] = {0.4, 0.6, 0.7, 0.3, 0.8};
        std::vector<std::int64_t> fired;
        for (int i = 0; i < 5; ++i) {
            auto alerts = m.observe(g, dc_only({{"dev", series[i]}}), i + 1);
            for (const auto& a : alerts) fired.push_back(a.at);
        }
        CHECK(fired == std::vector<std::int64_t>{2, 5});
    }
    SECTION("a value already above fires once at the first epoch") {
        compromise_monitor m(0.5);
        CHECK(m.observe(g, dc_only({{"dev", 0.9}}), 1).size() == 1);
        CHECK(m.observe(g, dc_only({{"dev", 0.9}}), 2).empty());
        CHECK(m.observe(g, dc_only({{"dev", 0.9}}), 3).empty());
    }
}

TEST_CASE("alert count equals the number of upward crossings") {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto g = device_graph();
    for (int trial = 0; trial < 20; ++trial) {
        compromise_monitor m(0.5);
        int crossings = 0;
        int alerts = 0;
        double prev = 0.0;
        for (int i = 0; i < 50; ++i) {
            double dc = unit(rng);
            if (prev <= 0.5 && dc > 0.5) ++crossings;
            prev = dc;
            alerts += static_cast<int>(m.observe(g, dc_only({{"dev", dc}}), i + 1).size());
        }
        CHECK(alerts == crossings);
    }
}

TEST_CASE("alerts carry contributing children ordered by degree") {
    auto g = device_graph();
    compromise_monitor m(0.5);
    auto alerts = m.observe(
        g, dc_only({{"dev", 0.9}, {"dev/app/a1", 0.2}, {"dev/app/a2", 0.7}}), 10);
    REQUIRE(alerts.size() == 2);  // dev and dev/app/a2 both crossed
    const auto& dev_alert = alerts[0];
    CHECK(dev_alert.device == "dev");
    CHECK(dev_alert.at == 10);
    CHECK(dev_alert.threshold == 0.5);
    CHECK(dev_alert.top_contributors == std::vector<std::string>{"dev/app/a2", "dev/app/a1"});
}

TEST_CASE("category rules: first match wins, in file order") {
    auto rules = category_rules::parse("*bank*\tMonetary\n"
                                       "# comment line\n"
                                       "*.gov\tPolitical\n"
                                       "*bank.gov\tSocial\n");
    CHECK(rules.size() == 3);
    CHECK(rules.categorize("home.bank.example") == breach_category::Monetary);
    CHECK(rules.categorize("agency.gov") == breach_category::Political);
    // *bank* precedes *bank.gov
    CHECK(rules.categorize("mybank.gov") == breach_category::Monetary);
    CHECK(rules.categorize("plain.example") == breach_category::Unknown);

    CHECK_THROWS_AS(category_rules::parse("no tab here\n"), parse_error);
    CHECK_THROWS_AS(category_rules::parse("host\tNonsense\n"), config_error);
}

TEST_CASE("breach report aggregates a device's in-window flows") {
    auto g = device_graph();
    security_timeline tl;
    state_thresholds taus{0.1, 0.01};
    tl.advance("dev", 150, {0.3, 0.0, 0.5}, {}, taus);

    std::vector<flow_record> records{
        flow(100, "dev", "bank.example", 100, 200, 1.0), flow(120, "dev", "bank.example", 50, 50, 0.5),
        flow(130, "dev", "bank.example", 10, 10, 0.1),   flow(140, "dev", "cdn.example", 1000, 4000, 2.0),
        flow(150, "other", "bank.example", 999, 999, 9.0),  // different device
        flow(500, "dev", "late.example", 1, 1, 0.1),        // outside window
    };
    auto rules = category_rules::parse("*bank*\tMonetary\n");

    auto report = make_breach_report(g, tl, records, "dev", {100, 200}, rules);
    REQUIRE(report.endpoints.size() == 2);
    // sorted by total_bytes descending
    CHECK(report.endpoints[0].host == "cdn.example");
    CHECK(report.endpoints[0].total_bytes == 5000);
    CHECK(report.endpoints[1].host == "bank.example");
    CHECK(report.endpoints[1].flow_count == 3);
    CHECK(report.endpoints[1].total_bytes == 420);
    CHECK(report.endpoints[1].category == breach_category::Monetary);
    CHECK(report.categories.at(breach_category::Monetary) == 1);
    CHECK(report.categories.at(breach_category::Unknown) == 1);
    REQUIRE(report.state_excerpt.size() == 1);
    CHECK(report.state_excerpt[0].to == security_state::Compromised);

    SECTION("report bytes equal a flat scan of the records") {
        std::int64_t scan_total = 0;
        for (const auto& r : records) {
            if (r.src_device == "dev" && r.timestamp >= 100 && r.timestamp <= 200) scan_total += r.total_bytes();
        }
        std::int64_t report_total = 0;
        for (const auto& e : report.endpoints) report_total += e.total_bytes;
        CHECK(report_total == scan_total);
    }
}

TEST_CASE("breach report edge cases") {
    auto g = device_graph();
    security_timeline tl;
    category_rules rules;

    SECTION("empty window") {
        auto report = make_breach_report(g, tl, {}, "dev", {0, 10}, rules);
        CHECK(report.endpoints.empty());
        CHECK(report.categories.empty());
        CHECK(report.state_excerpt.empty());
    }
    SECTION("unknown device") {
        CHECK_THROWS_AS(make_breach_report(g, tl, {}, "ghost", {0, 10}, rules), not_found_error);
    }
    SECTION("inverted window") {
        CHECK_THROWS_AS(make_breach_report(g, tl, {}, "dev", {10, 0}, rules), validation_error);
    }
}

TEST_CASE("random breach reports match a flat-scan oracle") {
    std::mt19937_64 rng(8080);
    auto g = device_graph();
    security_timeline tl;
    category_rules rules;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<flow_record> records;
        for (int i = 0; i < 60; ++i) {
            records.push_back(flow(static_cast<std::int64_t>(rng() % 1000), rng() % 2 ? "dev" : "other",
                                   "h" + std::to_string(rng() % 3), rng() % 500, rng() % 500,
                                   static_cast<double>(rng() % 10)));
        }
        time_window w{200, 700};
        auto report = make_breach_report(g, tl, records, "dev", w, rules);

        std::map<std::string, std::pair<std::int64_t, std::int64_t>> scan;  // host -> (flows, bytes)
        for (const auto& r : records) {
            if (r.src_device != "dev" || !w.contains(r.timestamp)) continue;
            scan[r.dst_host].first += 1;
            scan[r.dst_host].second += r.total_bytes();
        }
        REQUIRE(report.endpoints.size() == scan.size());
        for (const auto& e : report.endpoints) {
            CHECK(e.flow_count == scan.at(e.host).first);
            CHECK(e.total_bytes == scan.at(e.host).second);
        }
        for (std::size_t i = 1; i < report.endpoints.size(); ++i) {
            CHECK(report.endpoints[i - 1].total_bytes >= report.endpoints[i].total_bytes);
        }
    }
}

TEST_CASE("alert and report serialization") {
    alert a;
    a.device = "dev";
    a.at = 42;
    a.degree = 0.125;
    a.threshold = 0.1;
    a.top_contributors = {"dev/app/a1"};
    std::ostringstream out;
    write_alerts(out, {a});
    CHECK(out.str() ==
          "{\"device\":\"dev\",\"at\":42,\"dc\":0.125,\"threshold\":0.1,\"top_contributors\":[\"dev/app/a1\"]}\n");

    breach_report report;
    report.device = "dev";
    report.window = {0, 10};
    std::ostringstream rout;
    write_breach_report(rout, report);
    auto j = ndjson::json::parse(rout.str());
    CHECK(j.contains("breach_report"));
    CHECK(j["breach_report"]["device"] == "dev");
}
