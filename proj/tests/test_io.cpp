#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "trajcast/io/dataset_io.hpp"
#include "trajcast/io/keyvalues.hpp"
#include "trajcast/io/svg.hpp"
#include "trajcast/synth/synthgen.hpp"

using namespace trajcast;
using namespace trajcast::io;

TEST_CASE("dataset round-trips losslessly through text") {
    Dataset ds;
    ds.dt = 0.1;
    synth::WeaveParams wp;
    ds.scenes.push_back(synth::gen_traffic_weave(wp, 7, 0));
    ds.scenes.push_back(synth::gen_traffic_weave(wp, 8, 1));

    const std::string text = dataset_to_string(ds, "cafe0123");
    const Dataset back = dataset_from_string(text);
    REQUIRE(back.scenes.size() == ds.scenes.size());
    CHECK(back.dt == ds.dt);
    for (size_t i = 0; i < ds.scenes.size(); ++i) {
        const Scene& a = ds.scenes[i];
        const Scene& b = back.scenes[i];
        CHECK(a.label == b.label);
        REQUIRE(a.tracks.size() == b.tracks.size());
        for (size_t j = 0; j < a.tracks.size(); ++j) {
            REQUIRE(a.tracks[j].states.size() == b.tracks[j].states.size());
            CHECK(a.tracks[j].type == b.tracks[j].type);
            for (size_t k = 0; k < a.tracks[j].states.size(); ++k) {
                CHECK(a.tracks[j].states[k].pos == b.tracks[j].states[k].pos);  // bitwise
                CHECK(a.tracks[j].states[k].vel == b.tracks[j].states[k].vel);
                CHECK(a.tracks[j].states[k].heading == b.tracks[j].states[k].heading);
            }
        }
    }
    // serialize(parse(text)) is byte-identical
    CHECK(dataset_to_string(back, "cafe0123") == text);
}

TEST_CASE("dataset loader rejects malformed input with line numbers") {
    const std::string header = "#trajcast-dataset v1 dt=0.1 runconfig=00\n";
    auto expect_line = [&](const std::string& body, const char* needle, int line) {
        try {
            dataset_from_string(header + body);
            FAIL_CHECK("expected InputError for: " << needle);
        } catch (const InputError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("line " + std::to_string(line)) != std::string::npos);
            CHECK(msg.find(needle) != std::string::npos);
        }
    };
    expect_line("0 1 0 vehicle 0 0 0 0 - -\n0 0 0 vehicle 1 0 0 0 - -\n", "not sorted", 3);
    expect_line("0 0 0 bogus 0 0 0 0 - -\n", "unknown agent type", 2);
    expect_line("0 0 0 vehicle zero 0 0 0 - -\n", "bad x", 2);
    expect_line("0 0 0 vehicle 0 0 0 0 -\n", "expected 10 fields", 2);
    expect_line("0 0 0 vehicle 0 0 0 0 - - extra\n", "trailing", 2);
    expect_line("0 0 0 vehicle 0 0 0 0 - -\n0 2 0 vehicle 0 0 0 0 - -\n", "contiguous", 3);
    expect_line("0 0 0 vehicle 0 0 0 0 - -\n0 1 0 robot 0 0 0 0 - -\n", "type changed", 3);
    expect_line("0 0 0 vehicle 0 0 0 0 - lbl\n0 1 0 vehicle 0 0 0 0 - other\n",
                "conflicting scene labels", 3);
    CHECK_THROWS_AS(dataset_from_string("#wrong header\n"), InputError);
    CHECK_THROWS_AS(dataset_from_string(""), InputError);
}

TEST_CASE("key-value config: parse, typed access, duplicate detection") {
    const auto kv = KeyValues::parse("a = 1\n# comment\nname = weave # inline\nflag = true\n");
    CHECK(kv.get_int("a", 0) == 1);
    CHECK(kv.get_str("name", "") == "weave");
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_num("absent", 2.5) == 2.5);
    CHECK_THROWS_AS(KeyValues::parse("a = 1\na = 2\n"), InputError);
    CHECK_THROWS_AS(KeyValues::parse("nonsense\n"), InputError);
    try {
        KeyValues::parse("x = 1\nbroken line\n");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(kv.get_int("name", 0), InputError);

    KeyValues out;
    out.set_int("k", 25);
    out.set_num("dt", 0.5);
    const auto text = out.serialize();
    const auto back = KeyValues::parse(text);
    CHECK(back.get_int("k", 0) == 25);
    CHECK(back.serialize() == text);
}

TEST_CASE("svg output is deterministic and structured") {
    auto draw = [] {
        SvgPlot plot;
        std::vector<Vec2> line{{0, 0}, {1, 0.5}, {2, 0.2}};
        plot.polyline(line, "#1f77b4", 1.5);
        plot.polyline(line, SvgPlot::mode_color(3), 1.0, true);
        plot.circle({1.0, 0.5}, 0.1, "black");
        plot.ellipse({2.0, 0.2}, {0.09, 0.02, 0.04}, "#d62728");
        return plot.render(400, "trajcast test plot");
    };
    const std::string a = draw();
    CHECK(a == draw());  // byte-identical
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("polyline") != std::string::npos);
    CHECK(a.find("stroke-dasharray") != std::string::npos);
    CHECK(a.find("ellipse") != std::string::npos);
    CHECK(a.find("trajcast test plot") != std::string::npos);
}
