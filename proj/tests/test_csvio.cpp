#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/csvio.hpp"
#include "core/domain.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace mmqkd;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("doubles render shortest and round-trip exactly") {
    for (double v : {0.3, 1.0 / 3.0, 4e-4, 1.5883011002291392, 0.0, -2.5e-17, 1e300}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.3) == "0.3");
    CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("write/read round-trips values, headers, and NaN") {
    const fs::path p = temp_file("csvio_roundtrip.csv");
    write_csv(p, {"a", "b"},
              {{format_double(0.1), format_double(std::nan(""))},
               {format_double(-3.25), "text"}});
    const CsvTable t = read_csv(p);
    REQUIRE(t.header.size() == 2);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(0, t.require_column("a")) == 0.1);
    CHECK(std::isnan(t.number(0, t.require_column("b"))));
    CHECK(t.number(1, 0) == -3.25);
    CHECK(t.field(1, 1) == "text");
    fs::remove(p);
}

TEST_CASE("windows line endings and blank lines are tolerated") {
    const fs::path p = temp_file("csvio_crlf.csv");
    write_text(p, "x,y\r\n1,2\r\n\r\n3,4\r\n");
    const CsvTable t = read_csv(p);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(1, 1) == 4.0);
    fs::remove(p);
}

TEST_CASE("malformed input reports the file and line") {
    const fs::path p = temp_file("csvio_bad.csv");

    SUBCASE("ragged row") {
        write_text(p, "a,b\n1\n");
        CHECK_THROWS_AS(read_csv(p), ParseError);
    }
    SUBCASE("missing column names the file") {
        write_text(p, "a,b\n1,2\n");
        const CsvTable t = read_csv(p);
        CHECK(t.column("zz") == -1);
        try {
            t.require_column("zz");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(p.string()) != std::string::npos);
        }
    }
    SUBCASE("bad number carries a 1-based line number") {
        write_text(p, "a,b\n1,2\n3,oops\n");
        const CsvTable t = read_csv(p);
        try {
            t.number(1, 1);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(":3") != std::string::npos);
        }
    }
    SUBCASE("empty file rejected") {
        write_text(p, "");
        CHECK_THROWS_AS(read_csv(p), ParseError);
    }
    SUBCASE("absent file rejected") {
        fs::remove(p);
        CHECK_THROWS_AS(read_csv(p), ParseError);
    }
    fs::remove(p);
}

TEST_CASE("row width must match the header on write") {
    const fs::path p = temp_file("csvio_width.csv");
    CHECK_THROWS_AS(write_csv(p, {"a", "b"}, {{"1"}}), ConfigError);
    fs::remove(p);
}
