#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "fpcav/config.hpp"
#include "fpcav/csv.hpp"
#include "gen.hpp"

using namespace fpcav;

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)parse_config(text, "t.ini");
    } catch (const InvalidConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("bare default requires a length") {
    CHECK(error_of("[cavity]\nfiber_roc = 61 um\n").find("length") != std::string::npos);
    const auto rc = parse_config("[cavity]\nlength = 13.3 um\n");
    CHECK(rc.cavity.membrane_thickness == 0.0);
    CHECK(rc.cavity.length == doctest::Approx(13.3e-6));
    CHECK(rc.loss == "lossless");
}

TEST_CASE("preset values and overrides") {
    const auto rc = parse_config("[cavity]\npreset = membrane\nmembrane_thickness = 5 um\n");
    CHECK(rc.cavity.membrane_thickness == doctest::Approx(5e-6));
    CHECK(rc.cavity.length == doctest::Approx(22e-6));
    CHECK(rc.cavity.fiber_roc == doctest::Approx(61e-6));
    const auto lossy = preset_config("lossy-membrane");
    CHECK(lossy.loss == "lossy-membrane");
    CHECK(lossy.cavity.sigma_diamond_mirror == doctest::Approx(0.19e-9));
    CHECK(lossy.geometry.sigma_diamond_mirror == 0.0);
    const auto memb = preset_config("membrane");
    CHECK(memb.cavity.membrane_thickness == doctest::Approx(10.5e-6));
    CHECK(memb.wavelength == doctest::Approx(637e-9));
}

TEST_CASE("units are required and converted") {
    CHECK(parse_config("[cavity]\nlength = 0.0133 mm\n").cavity.length == doctest::Approx(13.3e-6));
    CHECK(parse_config("[cavity]\nlength = 13300 nm\n").cavity.length == doctest::Approx(13.3e-6));
    CHECK_FALSE(error_of("[cavity]\nlength = 13.3\n").empty());
    CHECK_FALSE(error_of("[cavity]\nlength = 13.3 furlongs\n").empty());
    const auto rc = parse_config("[cavity]\nlength = 20 um\n[scan]\nfrequency_lo = 450 THz\nfrequency_hi = 490000 GHz\n");
    CHECK(rc.window.frequency_lo == doctest::Approx(450e12));
    CHECK(rc.window.frequency_hi == doctest::Approx(490e12));
}

TEST_CASE("errors carry the source and line") {
    CHECK(error_of("[cavity]\nlength = 20 um\nbogus = 1\n").rfind("t.ini:3:", 0) == 0);
    CHECK(error_of("\n\n[nowhere]\n").rfind("t.ini:3:", 0) == 0);
    CHECK(error_of("length = 20 um\n").rfind("t.ini:1:", 0) == 0);
    CHECK(error_of("[cavity]\nlength 20 um\n").rfind("t.ini:2:", 0) == 0);
    CHECK(error_of("[cavity]\nlength = 20 um\nlength = 21 um\n").rfind("t.ini:3:", 0) == 0);
    CHECK(error_of("[cavity\n").rfind("t.ini:1:", 0) == 0);
    // Invariant t_d < L, reported at the offending key.
    const auto e = error_of("# comment\n[cavity]\nlength = 10 um\nmembrane_thickness = 12 um\n");
    CHECK(e.rfind("t.ini:", 0) == 0);
    CHECK(e.find("membrane_thickness") != std::string::npos);
    CHECK_FALSE(error_of("[cavity]\nlength = 20 um\n[run]\njobs = 0\n").empty());
    CHECK_FALSE(error_of("[cavity]\nlength = 20 um\n[scan]\npoints = 1\n").empty());
    CHECK_FALSE(error_of("[cavity]\nlength = 20 um\n[scan]\nlength_lo = 30 um\nlength_hi = 20 um\n").empty());
    CHECK_FALSE(error_of("[cavity]\npreset = imaginary\n").empty());
    CHECK_FALSE(error_of("[cavity]\npreset = membrane\nloss = sandpaper\n").empty());
}

TEST_CASE("comments and whitespace are ignored") {
    const auto a = parse_config("[cavity]\nlength = 20 um\n");
    const auto b = parse_config("  # header\n[cavity]   \n  length=20um   # trailing\n\n");
    CHECK(a.canonical() == b.canonical());
}

TEST_CASE("hash is stable and sensitive") {
    const auto a = preset_config("membrane");
    const auto b = preset_config("membrane");
    CHECK(a.hash() == b.hash());
    auto c = a;
    c.jobs = 7;
    CHECK(c.hash() == a.hash());
    auto d = a;
    d.set_loss("lossy-membrane");
    CHECK(d.hash() != a.hash());
    CHECK(hash_hex(0x0123456789abcdefULL) == "0123456789abcdef");
    // FNV-1a reference vectors.
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("set_loss re-resolves from the lossless geometry") {
    auto rc = preset_config("lossy-membrane");
    rc.set_loss("lossless");
    CHECK(rc.cavity.sigma_diamond_mirror == 0.0);
    CHECK(rc.cavity.membrane.imag() == 0.0);
    rc.set_loss("air-diamond-roughness");
    CHECK(rc.cavity.sigma_air_diamond > 0.0);
    CHECK(rc.cavity.sigma_diamond_mirror == 0.0);
    CHECK_THROWS_AS(rc.set_loss("nope"), InvalidConfigError);
}

TEST_CASE("the reference lists every section") {
    const auto ref = config_reference();
    for (const char* s : {"[cavity]", "[scan]", "[run]", "[coating]", "[flat_mirror]", "[fiber_mirror]"})
        CHECK(ref.find(s) != std::string::npos);
}

TEST_CASE("numbers survive formatting") {
    testgen::for_all(2000, 31, [](testgen::Rng& r) {
        const double v = (r.coin() ? 1.0 : -1.0) * r.log_uniform(1e-300, 1e300);
        const std::string s = format_number(v);
        CHECK(std::stod(s) == v);
    });
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-9) == "1e-09");
    CHECK(std::isnan(std::stod(format_number(std::numeric_limits<double>::quiet_NaN()))));
}

TEST_CASE("csv round trip") {
    testgen::for_all(50, 32, [](testgen::Rng& r) {
        CsvTable t;
        t.add_meta("tool", "fpcav");
        t.add_meta("note", "a = b, c");
        const int cols = r.integer(1, 6);
        for (int c = 0; c < cols; ++c) {
            t.columns.push_back("c" + std::to_string(c));
            t.units.push_back(r.coin() ? "m" : "");
        }
        const int rows = r.integer(0, 40);
        for (int i = 0; i < rows; ++i) {
            std::vector<std::string> row;
            for (int c = 0; c < cols; ++c) row.push_back(format_number(r.uniform(-1e6, 1e6)));
            t.rows.push_back(row);
        }
        const auto back = read_csv(write_csv(t));
        CHECK(back.columns == t.columns);
        CHECK(back.rows == t.rows);
        REQUIRE(back.find_meta("note") != nullptr);
        CHECK(*back.find_meta("note") == "a = b, c");
        CHECK(write_csv(back) == write_csv(t));
    });
}

TEST_CASE("csv column access") {
    const auto t = read_csv("x,y\n1,2\n3,4\n");
    CHECK(t.numeric_column("y") == std::vector<double>{2.0, 4.0});
    CHECK_THROWS_AS(t.column("z"), InvalidConfigError);
    CHECK_THROWS_AS(read_csv("x,y\n1,2,3\n"), InvalidConfigError);
    CHECK_THROWS_AS(read_csv("x\nabc\n").numeric_column("x"), InvalidConfigError);
}
