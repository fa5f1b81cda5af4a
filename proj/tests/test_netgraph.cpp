#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "temnet/config.hpp"
#include "temnet/netgraph.hpp"

using namespace temnet;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "temnet_ng_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TEMatrixSeries series_from_values(const std::vector<Matrix>& mats) {
    TEMatrixSeries s;
    int idx = 1;
    for (const auto& m : mats) {
        TEMatrix tm;
        tm.segment_index = idx;
        tm.end_date = add_months(Date{2000, 12, 28}, idx - 1);
        tm.values = m;
        s.matrices.push_back(std::move(tm));
        ++idx;
    }
    return s;
}

Matrix off_diag(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t sz = rows.size();
    Matrix m(sz, sz, kNaN);
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) {
            if (r != c) m(r, c) = v;
            ++c;
        }
        ++r;
    }
    return m;
}

} // namespace

TEST_CASE("pair ids reproduce the published numbering") {
    const int m_count = 10;
    // canonical order: DJI NASD NIKK HSI SHI SZI TWII DAX FTSE CAC
    CHECK(pair_id(1, 2, m_count).id == 1);   // DJI -> NASD
    CHECK(pair_id(2, 1, m_count).id == 10);  // NASD -> DJI
    CHECK(pair_id(5, 6, m_count).id == 41);  // SHI -> SZI
    CHECK(pair_id(6, 5, m_count).id == 50);  // SZI -> SHI
    CHECK(pair_id(6, 2, m_count).id == 47);  // SZI -> NASD
    CHECK(pair_id(8, 10, m_count).id == 72); // DAX -> CAC
    CHECK(pair_id(10, 8, m_count).id == 89); // CAC -> DAX
}

TEST_CASE("pair numbering is a bijection over all 90 ordered pairs") {
    const int m_count = 10;
    std::set<int> seen;
    for (int m = 1; m <= m_count; ++m)
        for (int n = 1; n <= m_count; ++n) {
            if (m == n) continue;
            const auto p = pair_id(m, n, m_count);
            CHECK(p.id >= 1);
            CHECK(p.id <= 90);
            CHECK(seen.insert(p.id).second);
            const auto back = pair_from_id(p.id, m_count);
            CHECK(back.source == m);
            CHECK(back.target == n);
        }
    CHECK(seen.size() == 90);
    CHECK_THROWS_AS(pair_id(3, 3, m_count), std::domain_error);
    CHECK_THROWS_AS(pair_from_id(91, m_count), std::domain_error);
}

namespace {

ActivityStats stats_from(const Matrix& a_str) {
    ActivityStats act;
    act.a_str = a_str;
    act.a_flu = Matrix(a_str.rows(), a_str.cols(), 0.0);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < a_str.rows(); ++r)
        for (std::size_t c = 0; c < a_str.cols(); ++c)
            if (r != c && !std::isnan(a_str(r, c))) {
                sum += a_str(r, c);
                ++n;
            }
    act.grand_mean = sum / n;
    return act;
}

std::vector<MarketMeta> three_markets() {
    return {{"AAA", "A", Zone::Asia, 1},
            {"BBB", "B", Zone::Europe, 2},
            {"CCC", "C", Zone::America, 3}};
}

} // namespace

TEST_CASE("equal activity produces an empty influential network") {
    const auto act = stats_from(off_diag({{0, 0.25, 0.25}, {0.25, 0, 0.25}, {0.25, 0.25, 0}}));
    const auto g = influential_network(act, three_markets());
    CHECK(g.edges.empty());          // strict inequality against the mean
    CHECK(g.nodes.size() == 3);      // isolated nodes retained
    CHECK(g.threshold == doctest::Approx(0.25));
}

TEST_CASE("a single supra-threshold entry forms a single edge") {
    const auto act = stats_from(off_diag({{0, 0.9, 0.1}, {0.1, 0, 0.1}, {0.1, 0.1, 0}}));
    const auto g = influential_network(act, three_markets());
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].source == "AAA");
    CHECK(g.edges[0].target == "BBB");
    CHECK(g.edges[0].weight == doctest::Approx(0.9));
}

TEST_CASE("raising the threshold never adds edges") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix a(4, 4, kNaN);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (r != c) a(r, c) = u(rng);
    const auto act = stats_from(a);
    std::vector<MarketMeta> markets = {{"A", "A", Zone::Asia, 1},
                                       {"B", "B", Zone::Asia, 2},
                                       {"C", "C", Zone::Europe, 3},
                                       {"D", "D", Zone::America, 4}};
    std::size_t prev = influential_network(act, markets, 0.0).edges.size();
    for (double th : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        const std::size_t now = influential_network(act, markets, th).edges.size();
        CHECK(now <= prev);
        prev = now;
    }
}

TEST_CASE("pair correlations: self is one, opposite series is minus one") {
    // Two segments series for M=2 -> pairs 1 (A->B) and 2 (B->A).
    const auto series = series_from_values({
        off_diag({{0, 1.0}, {3.0, 0}}),
        off_diag({{0, 2.0}, {2.0, 0}}),
        off_diag({{0, 3.0}, {1.0, 0}}),
    });
    const auto corr = pair_correlations(series);
    REQUIRE(corr.pairs.size() == 2);
    CHECK(corr.values(0, 0) == 1.0);
    CHECK(corr.values(1, 1) == 1.0);
    CHECK(corr.values(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(corr.values(1, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(corr.mu == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pair correlation matrix is symmetric with unit diagonal") {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> u(0.1, 0.4);
    std::vector<Matrix> mats;
    for (int s = 0; s < 8; ++s) {
        Matrix m(3, 3, kNaN);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (r != c) m(r, c) = u(rng);
        mats.push_back(m);
    }
    const auto corr = pair_correlations(series_from_values(mats));
    const std::size_t p = corr.pairs.size();
    REQUIRE(p == 6);
    for (std::size_t i = 0; i < p; ++i) {
        CHECK(corr.values(i, i) == 1.0);
        for (std::size_t j = 0; j < p; ++j) {
            CHECK(corr.values(i, j) == corr.values(j, i));
            if (!std::isnan(corr.values(i, j))) {
                CHECK(corr.values(i, j) >= -1.0 - 1e-12);
                CHECK(corr.values(i, j) <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("zero-variance pairs are flagged and excluded from the stats") {
    const auto series = series_from_values({
        off_diag({{0, 1.0}, {0.5, 0}}),
        off_diag({{0, 2.0}, {0.5, 0}}),
        off_diag({{0, 3.0}, {0.5, 0}}),
    });
    const auto corr = pair_correlations(series);
    CHECK(corr.valid[0] == 1);
    CHECK(corr.valid[1] == 0); // constant series
    CHECK(std::isnan(corr.values(0, 1)));
    CHECK(corr.values(1, 1) == 1.0);
    CHECK(std::isnan(corr.mu)); // no valid combination left
}

TEST_CASE("pair correlations require at least three segments") {
    const auto series = series_from_values({off_diag({{0, 1.0}, {0.5, 0}})});
    CHECK_THROWS_AS(pair_correlations(series), InsufficientDataError);
}

namespace {

// Hand-built correlation structure over M=3 (6 pairs):
// pair ids: 1 A->B, 2 A->C, 3 B->A, 4 B->C, 5 C->A, 6 C->B
PairCorrMatrix synthetic_corr() {
    PairCorrMatrix corr;
    const int m_count = 3;
    for (int id = 1; id <= 6; ++id) corr.pairs.push_back(pair_from_id(id, m_count));
    corr.values = Matrix(6, 6, 0.05);
    for (int i = 0; i < 6; ++i) corr.values(i, i) = 1.0;
    corr.valid.assign(6, 1);
    corr.mu = 0.05;
    corr.sigma = 0.30;
    return corr;
}

} // namespace

TEST_CASE("links inside the band are discarded, outside survive with tags") {
    auto corr = synthetic_corr();
    // mutual pair: 1 (A->B) with 3 (B->A)
    corr.values(0, 2) = corr.values(2, 0) = 0.9;
    // shared market: 1 (A->B) with 2 (A->C), negative and below the band
    corr.values(0, 1) = corr.values(1, 0) = -0.8;
    const auto markets = three_markets();

    auto g = influential_pair_network(corr, markets); // band [-0.25, 0.35]
    REQUIRE(g.edges.size() == 2);
    // edges sorted by loop order: (1,2) then (1,3) in id terms
    CHECK(g.edges[0].source == "1");
    CHECK(g.edges[0].target == "2");
    CHECK(g.edges[0].weight == doctest::Approx(0.8));
    CHECK(g.edges[0].tags[0] == "shared-market");
    CHECK(g.edges[1].source == "1");
    CHECK(g.edges[1].target == "3");
    CHECK(g.edges[1].tags[0] == "mutual");
}

TEST_CASE("all correlations inside the band give an empty pair graph") {
    const auto g = influential_pair_network(synthetic_corr(), three_markets());
    CHECK(g.edges.empty());
    CHECK(g.nodes.size() == 6);
}

TEST_CASE("an explicit band keeps a single strong link") {
    auto corr = synthetic_corr();
    corr.values(1, 4) = corr.values(4, 1) = 0.9;
    const auto g =
        influential_pair_network(corr, three_markets(), CorrBand{-0.25, 0.40});
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].weight == doctest::Approx(0.9));
}

TEST_CASE("correlations below the band carry the low-band tag") {
    auto corr = synthetic_corr();
    corr.values(3, 5) = corr.values(5, 3) = 0.01; // |C| below lo = -0.25? no: band on |C|
    // band is [mu - sigma, mu + sigma] = [-0.25, 0.35]; |C| = 0.01 is inside.
    // Use a band with a positive low edge instead.
    const auto g =
        influential_pair_network(corr, three_markets(), CorrBand{0.02, 0.40});
    bool found_low = false;
    for (const auto& e : g.edges)
        for (const auto& t : e.tags)
            if (t == "low-band") found_low = true;
    CHECK(found_low); // the 0.01 link falls below the band and is tagged
}

TEST_CASE("widening the discard band never adds edges") {
    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto corr = synthetic_corr();
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) {
            const double v = u(rng);
            corr.values(i, j) = v;
            corr.values(j, i) = v;
        }
    const auto markets = three_markets();
    std::size_t prev = influential_pair_network(corr, markets, CorrBand{0.5, 0.5}).edges.size();
    for (double width : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        const auto g =
            influential_pair_network(corr, markets, CorrBand{0.5 - width, 0.5 + width});
        CHECK(g.edges.size() <= prev);
        prev = g.edges.size();
    }
}

TEST_CASE("keep-above mode retains only the top correlations") {
    auto corr = synthetic_corr();
    corr.values(0, 2) = corr.values(2, 0) = 0.9;
    corr.values(1, 3) = corr.values(3, 1) = 0.4;
    const auto g = influential_pair_network_above(corr, three_markets(), 1.0);
    // level = 0.05 + 0.30 = 0.35: keeps 0.9 and 0.4
    CHECK(g.edges.size() == 2);
    const auto g2 = influential_pair_network_above(corr, three_markets(), 2.0);
    // level = 0.65: keeps only 0.9
    CHECK(g2.edges.size() == 1);
}

TEST_CASE("europe-to-america pair links are classified as such") {
    // M=4: DAX(E), FTSE(E), DJI(A), NASD(A) -> pairs from Europe to America.
    std::vector<MarketMeta> markets = {{"DAX", "DAX", Zone::Europe, 1},
                                       {"FTSE", "FTSE", Zone::Europe, 2},
                                       {"DJI", "DJI", Zone::America, 3},
                                       {"NASD", "NASD", Zone::America, 4}};
    PairCorrMatrix corr;
    for (int id = 1; id <= 12; ++id) corr.pairs.push_back(pair_from_id(id, 4));
    corr.values = Matrix(12, 12, 0.0);
    for (int i = 0; i < 12; ++i) corr.values(i, i) = 1.0;
    corr.valid.assign(12, 1);
    corr.mu = 0.0;
    corr.sigma = 0.1;
    // DAX->DJI is (1,3) id 2; FTSE->NASD is (2,4) id 6. They share no market.
    const int a = pair_id(1, 3, 4).id, b = pair_id(2, 4, 4).id;
    corr.values(a - 1, b - 1) = corr.values(b - 1, a - 1) = 0.8;
    const auto g = influential_pair_network(corr, markets);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].tags[0] == "europe-america");
}

TEST_CASE("graph exports are deterministic and well formed") {
    const auto act = stats_from(off_diag({{0, 0.9, 0.1}, {0.1, 0, 0.1}, {0.1, 0.1, 0}}));
    const auto g = influential_network(act, three_markets());
    const auto dir = temp_dir();

    export_graph(g, GraphFormat::json, dir / "a.json");
    export_graph(g, GraphFormat::json, dir / "b.json");
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

    export_graph(g, GraphFormat::dot, dir / "a.dot");
    const auto dot = slurp(dir / "a.dot");
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("\"AAA\" -> \"BBB\"") != std::string::npos);

    export_graph(g, GraphFormat::graphml, dir / "a.graphml");
    const auto gml = slurp(dir / "a.graphml");
    CHECK(gml.find("<graphml") != std::string::npos);
    CHECK(gml.find("edge source=\"AAA\" target=\"BBB\"") != std::string::npos);
}

TEST_CASE("an empty influence graph still exports all nodes") {
    const auto act = stats_from(off_diag({{0, 0.25, 0.25}, {0.25, 0, 0.25}, {0.25, 0.25, 0}}));
    const auto g = influential_network(act, three_markets());
    const auto dir = temp_dir();
    export_graph(g, GraphFormat::json, dir / "empty.json");
    const auto imported = import_influence_graph_json(dir / "empty.json");
    CHECK(imported.nodes.size() == 3);
    CHECK(imported.edges.empty());
}

TEST_CASE("influence graph json round-trips structurally") {
    const auto act = stats_from(off_diag({{0, 0.9, 0.4}, {0.1, 0, 0.35}, {0.5, 0.1, 0}}));
    const auto g = influential_network(act, three_markets());
    const auto dir = temp_dir();
    export_graph(g, GraphFormat::json, dir / "rt.json");
    const auto imported = import_influence_graph_json(dir / "rt.json");

    CHECK(imported.threshold == g.threshold);
    REQUIRE(imported.edges.size() == g.edges.size());
    // exports sort edges; compare as sets of (source, target, weight)
    std::set<std::pair<std::string, std::string>> original, roundtrip;
    for (const auto& e : g.edges) original.insert({e.source, e.target});
    for (const auto& e : imported.edges) roundtrip.insert({e.source, e.target});
    CHECK(original == roundtrip);

    // re-export must be byte-identical
    export_graph(imported, GraphFormat::json, dir / "rt2.json");
    CHECK(slurp(dir / "rt.json") == slurp(dir / "rt2.json"));
}

TEST_CASE("pair graph json round-trips structurally") {
    auto corr = synthetic_corr();
    corr.values(0, 2) = corr.values(2, 0) = 0.9;
    corr.values(0, 1) = corr.values(1, 0) = -0.8;
    const auto g = influential_pair_network(corr, three_markets());
    REQUIRE_FALSE(g.edges.empty());
    const auto dir = temp_dir();
    export_graph(g, GraphFormat::json, dir / "pair.json");
    const auto imported = import_pair_graph_json(dir / "pair.json");
    CHECK(imported.band.lo == g.band.lo);
    CHECK(imported.band.hi == g.band.hi);
    CHECK(imported.nodes.size() == g.nodes.size());
    REQUIRE(imported.edges.size() == g.edges.size());
    export_graph(imported, GraphFormat::json, dir / "pair2.json");
    CHECK(slurp(dir / "pair.json") == slurp(dir / "pair2.json"));
}

TEST_CASE("one-edge pair graph exports exactly one edge record") {
    auto corr = synthetic_corr();
    corr.values(1, 4) = corr.values(4, 1) = 0.9;
    const auto g = influential_pair_network(corr, three_markets(), CorrBand{-0.25, 0.40});
    const auto dir = temp_dir();
    export_graph(g, GraphFormat::dot, dir / "one.dot");
    const auto dot = slurp(dir / "one.dot");
    std::size_t count = 0, pos = 0;
    while ((pos = dot.find(" -- ", pos)) != std::string::npos) {
        ++count;
        pos += 4;
    }
    CHECK(count == 1);
    CHECK(dot.find("penwidth=") != std::string::npos);
}
