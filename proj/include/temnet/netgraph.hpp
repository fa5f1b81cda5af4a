#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "temnet/metrics.hpp"
#include "temnet/te.hpp"

namespace temnet {

// Ordered market pair with its published identification number:
//   id = (m-1)(M-1) + (n if n < m else n-1),  1-based m, n, m != n.
struct PairId {
    int id = 0;
    int source = 0; // 1-based market index
    int target = 0;

    bool operator==(const PairId&) const = default;
};

PairId pair_id(int m, int n, int M);      // throws std::domain_error when m == n
PairId pair_from_id(int id, int M);

struct GraphEdge {
    std::string source;
    std::string target;
    double weight = 0.0;
    std::vector<std::string> tags;

    bool operator==(const GraphEdge&) const = default;
};

// Directed graph of time-averaged influences above a threshold. Isolated
// nodes are retained.
struct InfluenceGraph {
    std::vector<MarketMeta> nodes;
    std::vector<GraphEdge> edges; // source/target are market ids
    double threshold = 0.0;
};

// Keeps the directed edge (m, n) iff a_str(m, n) > threshold (strict).
// The threshold defaults to the grand mean of all pair averages.
InfluenceGraph influential_network(const ActivityStats& act,
                                   const std::vector<MarketMeta>& markets,
                                   std::optional<double> threshold = std::nullopt);

// Pearson correlations between the TE time-series of every ordered pair.
// Pairs whose series has zero variance (or gaps) are flagged invalid and
// excluded from the mu/sigma statistics.
struct PairCorrMatrix {
    std::vector<PairId> pairs;       // all M(M-1) pairs in id order
    Matrix values;                   // P x P, symmetric, unit diagonal
    std::vector<std::uint8_t> valid; // per pair
    double mu = 0.0;                 // mean of off-diagonal upper triangle
    double sigma = 0.0;              // population std of the same
};

PairCorrMatrix pair_correlations(const TEMatrixSeries& series, int threads = 1);

enum class PairLinkKind { mutual, europe_america, shared_market, other };

std::string to_string(PairLinkKind k);

struct CorrBand {
    double lo = 0.0;
    double hi = 0.0;
};

// Undirected graph over pair ids: an edge survives iff |C| falls outside the
// discard band (default mu +/- sigma). Edges below the band carry a
// "low-band" tag; every edge is classified as mutual, europe-america or
// shared-market when one of those structures applies.
struct PairGraph {
    std::vector<PairId> nodes; // all pairs, id order
    std::vector<MarketMeta> markets;
    std::vector<GraphEdge> edges; // source/target are decimal pair ids
    CorrBand band;
};

PairGraph influential_pair_network(const PairCorrMatrix& corr,
                                   const std::vector<MarketMeta>& markets,
                                   std::optional<CorrBand> band = std::nullopt);

// Alternate retention rule: keep only |C| >= mu + k*sigma.
PairGraph influential_pair_network_above(const PairCorrMatrix& corr,
                                         const std::vector<MarketMeta>& markets,
                                         double k);

enum class GraphFormat { dot, graphml, json };

GraphFormat graph_format_from_string(const std::string& s);

// Deterministic export: nodes and edges sorted by id, byte-identical across
// runs. The pair-graph dot/graphml width attribute is proportional to |C|.
void export_graph(const InfluenceGraph& g, GraphFormat format,
                  const std::filesystem::path& path);
void export_graph(const PairGraph& g, GraphFormat format,
                  const std::filesystem::path& path);

InfluenceGraph import_influence_graph_json(const std::filesystem::path& path);
PairGraph import_pair_graph_json(const std::filesystem::path& path);

} // namespace temnet
