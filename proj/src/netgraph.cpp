#include "temnet/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "temnet/error.hpp"
#include "temnet/parallel.hpp"

namespace temnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string pair_label(const PairId& p, const std::vector<MarketMeta>& markets) {
    return markets[p.source - 1].id + "->" + markets[p.target - 1].id;
}

std::string pair_zone(const PairId& p, const std::vector<MarketMeta>& markets) {
    return to_string(markets[p.source - 1].zone) + "->" + to_string(markets[p.target - 1].zone);
}

nlohmann::json tags_json(const std::vector<std::string>& tags) {
    return nlohmann::json(tags);
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
    if (!out) throw IoError("failed while writing " + path.string());
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string join_tags(const std::vector<std::string>& tags) {
    std::string out;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (i) out += ';';
        out += tags[i];
    }
    return out;
}

} // namespace

PairId pair_id(int m, int n, int M) {
    if (m == n) throw std::domain_error("pair_id: source and target must differ");
    if (m < 1 || m > M || n < 1 || n > M)
        throw std::domain_error("pair_id: market index out of range 1..M");
    PairId p;
    p.source = m;
    p.target = n;
    p.id = (m - 1) * (M - 1) + (n < m ? n : n - 1);
    return p;
}

PairId pair_from_id(int id, int M) {
    if (id < 1 || id > M * (M - 1)) throw std::domain_error("pair id out of range 1..M(M-1)");
    const int q = (id - 1) / (M - 1);
    const int r = (id - 1) % (M - 1);
    PairId p;
    p.id = id;
    p.source = q + 1;
    p.target = (r + 1 < p.source) ? r + 1 : r + 2;
    return p;
}

InfluenceGraph influential_network(const ActivityStats& act,
                                   const std::vector<MarketMeta>& markets,
                                   std::optional<double> threshold) {
    const std::size_t m = markets.size();
    if (act.a_str.rows() != m) throw DataError("influential_network: size mismatch");
    InfluenceGraph g;
    g.nodes = markets;
    g.threshold = threshold.value_or(act.grand_mean);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            if (r == c || std::isnan(act.a_str(r, c))) continue;
            if (act.a_str(r, c) > g.threshold)
                g.edges.push_back({markets[r].id, markets[c].id, act.a_str(r, c), {}});
        }
    return g;
}

PairCorrMatrix pair_correlations(const TEMatrixSeries& series, int threads) {
    const std::size_t w = series.count();
    if (w < 3)
        throw InsufficientDataError("pair_correlations: need at least 3 segments, got " +
                                    std::to_string(w));
    const int m = static_cast<int>(series.matrices.front().size());
    const int p_count = m * (m - 1);

    PairCorrMatrix out;
    out.pairs.reserve(p_count);
    for (int id = 1; id <= p_count; ++id) out.pairs.push_back(pair_from_id(id, m));

    // Pair TE series; a pair with a flagged cell anywhere or zero variance is
    // excluded from correlations and the band statistics.
    std::vector<std::vector<double>> ts(p_count, std::vector<double>(w));
    std::vector<double> means(p_count, 0.0);
    out.valid.assign(p_count, 1);
    for (int p = 0; p < p_count; ++p) {
        const auto& pid = out.pairs[p];
        double sum = 0.0;
        for (std::size_t s = 0; s < w; ++s) {
            const double v = series.matrices[s].values(pid.source - 1, pid.target - 1);
            if (std::isnan(v)) {
                out.valid[p] = 0;
                break;
            }
            ts[p][s] = v;
            sum += v;
        }
        if (!out.valid[p]) continue;
        means[p] = sum / static_cast<double>(w);
        double var = 0.0;
        for (std::size_t s = 0; s < w; ++s) {
            const double d = ts[p][s] - means[p];
            var += d * d;
        }
        if (var == 0.0) out.valid[p] = 0;
    }

    out.values = Matrix(p_count, p_count, kNaN);
    parallel_for(p_count, threads, [&](std::size_t i) {
        out.values(i, i) = 1.0;
        if (!out.valid[i]) return;
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(p_count); ++j) {
            if (!out.valid[j]) continue;
            double cov = 0.0, vi = 0.0, vj = 0.0;
            for (std::size_t s = 0; s < w; ++s) {
                const double di = ts[i][s] - means[i];
                const double dj = ts[j][s] - means[j];
                cov += di * dj;
                vi += di * di;
                vj += dj * dj;
            }
            const double c = cov / std::sqrt(vi * vj);
            out.values(i, j) = c;
            out.values(j, i) = c;
        }
    });

    double sum = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < p_count; ++i)
        for (int j = i + 1; j < p_count; ++j)
            if (out.valid[i] && out.valid[j]) {
                sum += out.values(i, j);
                ++count;
            }
    if (count == 0) {
        out.mu = kNaN;
        out.sigma = kNaN;
        return out;
    }
    out.mu = sum / static_cast<double>(count);
    double ss = 0.0;
    for (int i = 0; i < p_count; ++i)
        for (int j = i + 1; j < p_count; ++j)
            if (out.valid[i] && out.valid[j]) {
                const double d = out.values(i, j) - out.mu;
                ss += d * d;
            }
    out.sigma = std::sqrt(ss / static_cast<double>(count));
    return out;
}

std::string to_string(PairLinkKind k) {
    switch (k) {
        case PairLinkKind::mutual: return "mutual";
        case PairLinkKind::europe_america: return "europe-america";
        case PairLinkKind::shared_market: return "shared-market";
        case PairLinkKind::other: return "other";
    }
    return "?";
}

namespace {

PairLinkKind classify_link(const PairId& a, const PairId& b,
                           const std::vector<MarketMeta>& markets) {
    if (a.source == b.target && a.target == b.source) return PairLinkKind::mutual;
    const auto zone_of = [&](int idx) { return markets[idx - 1].zone; };
    if (zone_of(a.source) == Zone::Europe && zone_of(a.target) == Zone::America &&
        zone_of(b.source) == Zone::Europe && zone_of(b.target) == Zone::America)
        return PairLinkKind::europe_america;
    if (a.source == b.source || a.source == b.target || a.target == b.source ||
        a.target == b.target)
        return PairLinkKind::shared_market;
    return PairLinkKind::other;
}

PairGraph build_pair_graph(const PairCorrMatrix& corr, const std::vector<MarketMeta>& markets,
                           CorrBand band, bool keep_above_only, double keep_above_level) {
    PairGraph g;
    g.nodes = corr.pairs;
    g.markets = markets;
    g.band = band;
    const std::size_t p = corr.pairs.size();
    for (std::size_t i = 0; i < p; ++i) {
        if (!corr.valid[i]) continue;
        for (std::size_t j = i + 1; j < p; ++j) {
            if (!corr.valid[j]) continue;
            const double c = corr.values(i, j);
            const double mag = std::abs(c);
            bool keep = false;
            bool low = false;
            if (keep_above_only) {
                keep = mag >= keep_above_level;
            } else {
                keep = mag < band.lo || mag > band.hi;
                low = mag < band.lo;
            }
            if (!keep) continue;
            GraphEdge e;
            e.source = std::to_string(corr.pairs[i].id);
            e.target = std::to_string(corr.pairs[j].id);
            e.weight = mag;
            e.tags.push_back(to_string(classify_link(corr.pairs[i], corr.pairs[j], markets)));
            if (low) e.tags.push_back("low-band");
            g.edges.push_back(std::move(e));
        }
    }
    return g;
}

} // namespace

PairGraph influential_pair_network(const PairCorrMatrix& corr,
                                   const std::vector<MarketMeta>& markets,
                                   std::optional<CorrBand> band) {
    CorrBand b = band.value_or(CorrBand{corr.mu - corr.sigma, corr.mu + corr.sigma});
    return build_pair_graph(corr, markets, b, false, 0.0);
}

PairGraph influential_pair_network_above(const PairCorrMatrix& corr,
                                         const std::vector<MarketMeta>& markets, double k) {
    const double level = corr.mu + k * corr.sigma;
    return build_pair_graph(corr, markets, CorrBand{level, level}, true, level);
}

GraphFormat graph_format_from_string(const std::string& s) {
    if (s == "dot") return GraphFormat::dot;
    if (s == "graphml") return GraphFormat::graphml;
    if (s == "json") return GraphFormat::json;
    throw ConfigError("unknown graph format '" + s + "'");
}

void export_graph(const InfluenceGraph& g, GraphFormat format,
                  const std::filesystem::path& path) {
    auto nodes = g.nodes;
    std::sort(nodes.begin(), nodes.end(),
              [](const MarketMeta& a, const MarketMeta& b) { return a.id < b.id; });
    auto edges = g.edges;
    std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });

    if (format == GraphFormat::json) {
        nlohmann::json j;
        j["type"] = "influence";
        j["threshold"] = g.threshold;
        auto& jn = j["nodes"] = nlohmann::json::array();
        for (const auto& n : nodes)
            jn.push_back({{"id", n.id}, {"label", n.name}, {"zone", to_string(n.zone)}});
        auto& je = j["edges"] = nlohmann::json::array();
        for (const auto& e : edges)
            je.push_back({{"source", e.source},
                          {"target", e.target},
                          {"weight", e.weight},
                          {"tags", tags_json(e.tags)}});
        write_text_file(path, j.dump(2) + "\n");
        return;
    }
    if (format == GraphFormat::dot) {
        std::string body = "digraph influence {\n";
        for (const auto& n : nodes)
            body += "  \"" + n.id + "\" [label=\"" + n.id + "\", zone=\"" + to_string(n.zone) +
                    "\"];\n";
        for (const auto& e : edges)
            body += "  \"" + e.source + "\" -> \"" + e.target + "\" [weight=" +
                    format_value(e.weight) + "];\n";
        body += "}\n";
        write_text_file(path, body);
        return;
    }
    // graphml
    std::string body =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        "  <key id=\"d0\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
        "  <key id=\"d1\" for=\"node\" attr.name=\"zone\" attr.type=\"string\"/>\n"
        "  <key id=\"d2\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
        "  <key id=\"d3\" for=\"edge\" attr.name=\"tags\" attr.type=\"string\"/>\n"
        "  <graph id=\"influence\" edgedefault=\"directed\">\n";
    for (const auto& n : nodes)
        body += "    <node id=\"" + xml_escape(n.id) + "\"><data key=\"d0\">" +
                xml_escape(n.name) + "</data><data key=\"d1\">" + to_string(n.zone) +
                "</data></node>\n";
    for (const auto& e : edges)
        body += "    <edge source=\"" + xml_escape(e.source) + "\" target=\"" +
                xml_escape(e.target) + "\"><data key=\"d2\">" + format_value(e.weight) +
                "</data><data key=\"d3\">" + xml_escape(join_tags(e.tags)) + "</data></edge>\n";
    body += "  </graph>\n</graphml>\n";
    write_text_file(path, body);
}

void export_graph(const PairGraph& g, GraphFormat format, const std::filesystem::path& path) {
    auto nodes = g.nodes; // already in id order
    auto edges = g.edges;
    std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });

    if (format == GraphFormat::json) {
        nlohmann::json j;
        j["type"] = "pair";
        j["band"] = {{"lo", g.band.lo}, {"hi", g.band.hi}};
        auto& jn = j["nodes"] = nlohmann::json::array();
        for (const auto& n : nodes)
            jn.push_back({{"id", n.id},
                          {"label", pair_label(n, g.markets)},
                          {"zone", pair_zone(n, g.markets)}});
        auto& je = j["edges"] = nlohmann::json::array();
        for (const auto& e : edges)
            je.push_back({{"source", std::stoi(e.source)},
                          {"target", std::stoi(e.target)},
                          {"weight", e.weight},
                          {"tags", tags_json(e.tags)}});
        nlohmann::json jm = nlohmann::json::array();
        for (const auto& mk : g.markets)
            jm.push_back({{"id", mk.id}, {"zone", to_string(mk.zone)}, {"order", mk.order_index},
                          {"name", mk.name}});
        j["markets"] = jm;
        write_text_file(path, j.dump(2) + "\n");
        return;
    }
    if (format == GraphFormat::dot) {
        std::string body = "graph pairs {\n";
        for (const auto& n : nodes)
            body += "  " + std::to_string(n.id) + " [label=\"" + pair_label(n, g.markets) +
                    "\"];\n";
        for (const auto& e : edges)
            body += "  " + e.source + " -- " + e.target + " [weight=" + format_value(e.weight) +
                    ", penwidth=" + format_value(6.0 * e.weight) + ", tags=\"" +
                    join_tags(e.tags) + "\"];\n";
        body += "}\n";
        write_text_file(path, body);
        return;
    }
    std::string body =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        "  <key id=\"d0\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
        "  <key id=\"d1\" for=\"node\" attr.name=\"zone\" attr.type=\"string\"/>\n"
        "  <key id=\"d2\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
        "  <key id=\"d3\" for=\"edge\" attr.name=\"width\" attr.type=\"double\"/>\n"
        "  <key id=\"d4\" for=\"edge\" attr.name=\"tags\" attr.type=\"string\"/>\n"
        "  <graph id=\"pairs\" edgedefault=\"undirected\">\n";
    for (const auto& n : nodes)
        body += "    <node id=\"" + std::to_string(n.id) + "\"><data key=\"d0\">" +
                xml_escape(pair_label(n, g.markets)) + "</data><data key=\"d1\">" +
                xml_escape(pair_zone(n, g.markets)) + "</data></node>\n";
    for (const auto& e : edges)
        body += "    <edge source=\"" + e.source + "\" target=\"" + e.target +
                "\"><data key=\"d2\">" + format_value(e.weight) + "</data><data key=\"d3\">" +
                format_value(6.0 * e.weight) + "</data><data key=\"d4\">" +
                xml_escape(join_tags(e.tags)) + "</data></edge>\n";
    body += "  </graph>\n</graphml>\n";
    write_text_file(path, body);
}

InfluenceGraph import_influence_graph_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.at("type") != "influence") throw DataError(path.string() + ": not an influence graph");
    InfluenceGraph g;
    g.threshold = j.at("threshold").get<double>();
    for (const auto& n : j.at("nodes")) {
        MarketMeta mk;
        mk.id = n.at("id").get<std::string>();
        mk.name = n.at("label").get<std::string>();
        mk.zone = zone_from_string(n.at("zone").get<std::string>());
        mk.order_index = static_cast<int>(g.nodes.size()) + 1;
        g.nodes.push_back(std::move(mk));
    }
    for (const auto& e : j.at("edges")) {
        GraphEdge ge;
        ge.source = e.at("source").get<std::string>();
        ge.target = e.at("target").get<std::string>();
        ge.weight = e.at("weight").get<double>();
        ge.tags = e.at("tags").get<std::vector<std::string>>();
        g.edges.push_back(std::move(ge));
    }
    return g;
}

PairGraph import_pair_graph_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.at("type") != "pair") throw DataError(path.string() + ": not a pair graph");
    PairGraph g;
    g.band.lo = j.at("band").at("lo").get<double>();
    g.band.hi = j.at("band").at("hi").get<double>();
    for (const auto& mk : j.at("markets")) {
        MarketMeta m;
        m.id = mk.at("id").get<std::string>();
        m.zone = zone_from_string(mk.at("zone").get<std::string>());
        m.order_index = mk.at("order").get<int>();
        m.name = mk.value("name", m.id);
        g.markets.push_back(std::move(m));
    }
    const int m_count = static_cast<int>(g.markets.size());
    for (const auto& n : j.at("nodes")) g.nodes.push_back(pair_from_id(n.at("id").get<int>(), m_count));
    for (const auto& e : j.at("edges")) {
        GraphEdge ge;
        ge.source = std::to_string(e.at("source").get<int>());
        ge.target = std::to_string(e.at("target").get<int>());
        ge.weight = e.at("weight").get<double>();
        ge.tags = e.at("tags").get<std::vector<std::string>>();
        g.edges.push_back(std::move(ge));
    }
    return g;
}

} // namespace temnet
