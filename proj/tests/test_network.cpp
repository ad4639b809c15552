#include "corrnet/network.hpp"

#include "corrnet/geometry.hpp"
#include "corrnet/synth.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace corrnet;

namespace {

// Reduced space straight from a hand-written distance matrix.
ReducedSpace make_rs(std::vector<std::string> ids, const oracle::Matrix& d) {
    ReducedSpace rs;
    rs.entity_ids = std::move(ids);
    rs.dim = 1;
    const auto n = static_cast<Eigen::Index>(d.size());
    rs.coordinates = Eigen::MatrixXd::Zero(n, 1);
    rs.reduced_d.resize(n, n);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            rs.reduced_d(i, j) = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (i != j) sum += rs.reduced_d(i, j);
        }
    rs.mean_reduced_distance = n > 1 ? sum / (static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;
    return rs;
}

ReducedSpace random_rs(std::uint64_t seed, std::size_t n, std::size_t dim) {
    rng::Engine eng(seed);
    rng::Gaussian gauss;
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < coords.rows(); ++i)
        for (Eigen::Index j = 0; j < coords.cols(); ++j) coords(i, j) = gauss(eng);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("N" + std::to_string(i));
    return reduced_from_coordinates(ids, coords);
}

oracle::Matrix to_oracle(const Eigen::MatrixXd& m) {
    oracle::Matrix out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return out;
}

}  // namespace

TEST_CASE("exposures are floored reciprocals of reduced distances") {
    auto rs = make_rs({"A", "B", "C"}, {{0, 0.5, 1}, {0.5, 0, 2}, {1, 2, 0}});
    ExposureNetwork net = exposure_network(rs);
    CHECK(net.weights(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(net.weights(0, 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(net.weights(1, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(net.floor_applied.empty());
    CHECK(net.weights.diagonal().isZero(0.0));

    auto coincident = make_rs({"A", "B", "C"}, {{0, 0, 1}, {0, 0, 1}, {1, 1, 0}});
    ExposureNetwork floored = exposure_network(coincident);
    CHECK(floored.weights(0, 1) == doctest::Approx(1e8).epsilon(1e-15));
    REQUIRE(floored.floor_applied.size() == 1);
    CHECK(floored.floor_applied[0] == std::pair<std::size_t, std::size_t>{0, 1});
}

TEST_CASE("strength sums the node's link weights") {
    auto uniform = make_rs({"A", "B", "C"}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
    ExposureNetwork net = exposure_network(uniform);
    for (std::size_t k = 0; k < 3; ++k) CHECK(strength(net, k) == doctest::Approx(2.0).epsilon(1e-15));

    auto mixed = make_rs({"A", "B", "C"}, {{0, 0.5, 1}, {0.5, 0, 2}, {1, 2, 0}});
    ExposureNetwork mnet = exposure_network(mixed);
    CHECK(strength(mnet, std::size_t{0}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(strength(mnet, "A") == doctest::Approx(3.0).epsilon(1e-15));
    CHECK_THROWS_WITH_AS(strength(mnet, "ZZ"), doctest::Contains("unknown entity"), ValidationError);

    auto floor_dominated = make_rs({"A", "B", "C"}, {{0, 1e-12, 1}, {1e-12, 0, 1}, {1, 1, 0}});
    ExposureNetwork fnet = exposure_network(floor_dominated);
    CHECK(strength(fnet, std::size_t{0}) == doctest::Approx(1e8 + 1.0).epsilon(1e-12));
}

TEST_CASE("top links sort by weight with lexicographic tie-break") {
    auto rs = make_rs({"A", "B", "C"}, {{0, 1.0 / 3.0, 1}, {1.0 / 3.0, 0, 0.5}, {1, 0.5, 0}});
    ExposureNetwork net = exposure_network(rs);  // weights: AB=3, BC=2, AC=1

    auto two = top_links(net, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0].i == 0);
    CHECK(two[0].j == 1);
    CHECK(two[0].weight == doctest::Approx(3.0));
    CHECK(two[1].i == 1);
    CHECK(two[1].j == 2);

    auto all = top_links(net, 3);
    CHECK(all.size() == 3);
    CHECK(all[2].weight == doctest::Approx(1.0));

    auto uniform = make_rs({"A", "B", "C"}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
    auto ordered = top_links(exposure_network(uniform), 2);
    CHECK(ordered[0].i == 0);  // (A,B) before (A,C) lexicographically
    CHECK(ordered[0].j == 1);
    CHECK(ordered[1].i == 0);
    CHECK(ordered[1].j == 2);

    CHECK_THROWS_AS(top_links(net, 4), ValidationError);
    CHECK(top_links(net, 0).empty());
}

TEST_CASE("neighbor degree is the exponential of the distance ratio") {
    auto rs = make_rs({"A", "B", "C"}, {{0, 1, 1}, {1, 0, 2}, {1, 2, 0}});  // mean 4/3
    CHECK(neighbor_degree(rs, 0, 1) == doctest::Approx(std::exp(-0.75)).epsilon(1e-15));
    CHECK(neighbor_degree(rs, 1, 2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-15));
}

TEST_CASE("continuous clustering closed forms") {
    const double expected = std::exp(-3.0);

    auto uniform = make_rs({"A", "B", "C", "D"}, {{0, 1, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}});
    CHECK(std::abs(continuous_clustering(uniform) - expected) < 1e-15);

    // d = (1, 1, 2): mean 4/3, every triple product is exp(-3)
    auto triple = make_rs({"A", "B", "C"}, {{0, 1, 1}, {1, 0, 2}, {1, 2, 0}});
    CHECK(std::abs(continuous_clustering(triple) - expected) < 1e-15);

    // scaling all distances leaves the ratio form unchanged
    auto scaled = make_rs({"A", "B", "C"}, {{0, 7, 7}, {7, 0, 14}, {7, 14, 0}});
    CHECK(std::abs(continuous_clustering(scaled) - continuous_clustering(triple)) < 1e-12);

    auto degenerate = make_rs({"A", "B", "C"}, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    CHECK_THROWS_WITH_AS(continuous_clustering(degenerate), doctest::Contains("degenerate"), ValidationError);
}

TEST_CASE("clustering equals the naive ordered-triple oracle") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        ReducedSpace rs = random_rs(2000 + seed, 3 + seed % 10, 1 + seed % 4);
        double fast = continuous_clustering(rs);
        double naive = oracle::naive_clustering(to_oracle(rs.reduced_d), rs.mean_reduced_distance);
        CHECK(std::abs(fast - naive) < 1e-12);
        CHECK(fast > 0.0);
        CHECK(fast < 1.0);
    }
}

TEST_CASE("closeness centrality sums reduced distances") {
    auto rs = make_rs({"A", "B", "C"}, {{0, 1, 1}, {1, 0, 2}, {1, 2, 0}});
    CHECK(closeness_centrality(rs, std::size_t{0}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(closeness_centrality(rs, std::size_t{1}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(closeness_centrality(rs, std::size_t{2}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(closeness_centrality(rs, "B") == doctest::Approx(3.0).epsilon(1e-15));

    auto uniform = make_rs({"A", "B", "C", "D"}, {{0, 0.5, 0.5, 0.5},
                                                  {0.5, 0, 0.5, 0.5},
                                                  {0.5, 0.5, 0, 0.5},
                                                  {0.5, 0.5, 0.5, 0}});
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(closeness_centrality(uniform, k) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("scaling distances scales closeness and preserves rankings") {
    ReducedSpace rs = random_rs(31, 8, 3);
    ReducedSpace scaled = rs;
    const double c = 3.7;
    scaled.reduced_d *= c;
    scaled.mean_reduced_distance *= c;

    CHECK(std::abs(continuous_clustering(scaled) - continuous_clustering(rs)) < 1e-12);
    std::size_t argmax_before = 0, argmax_after = 0;
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(closeness_centrality(scaled, k) ==
              doctest::Approx(c * closeness_centrality(rs, k)).epsilon(1e-12));
        if (closeness_centrality(rs, k) > closeness_centrality(rs, argmax_before)) argmax_before = k;
        if (closeness_centrality(scaled, k) > closeness_centrality(scaled, argmax_after)) argmax_after = k;
    }
    CHECK(argmax_before == argmax_after);
}

TEST_CASE("relabeling entities permutes outputs consistently") {
    ReducedSpace rs = random_rs(77, 6, 2);
    // reverse the entity order
    std::vector<std::string> rev_ids(rs.entity_ids.rbegin(), rs.entity_ids.rend());
    Eigen::MatrixXd rev_coords = rs.coordinates.colwise().reverse();
    ReducedSpace rev = reduced_from_coordinates(rev_ids, rev_coords);

    CHECK(std::abs(continuous_clustering(rev) - continuous_clustering(rs)) < 1e-12);
    for (std::size_t k = 0; k < 6; ++k)
        CHECK(closeness_centrality(rev, 5 - k) == doctest::Approx(closeness_centrality(rs, k)).epsilon(1e-12));

    ExposureNetwork net = exposure_network(rs);
    ExposureNetwork rnet = exposure_network(rev);
    for (std::size_t k = 0; k < 6; ++k)
        CHECK(strength(rnet, 5 - k) == doctest::Approx(strength(net, k)).epsilon(1e-12));
}

TEST_CASE("top links concentrate inside planted correlation blocks") {
    // two disjoint strongly-correlated groups: entities 0-3 load on factor
    // 1, entities 4-7 on factor 2, opposite signs across the blocks
    Eigen::MatrixXd loadings = Eigen::MatrixXd::Zero(8, 2);
    for (int i = 0; i < 4; ++i) loadings(i, 0) = 1.0;
    for (int i = 4; i < 8; ++i) loadings(i, 1) = 1.0;
    FactorSpec spec{.n_entities = 8, .n_periods = 120, .n_factors = 2, .loadings = loadings,
                    .noise_sigma = 0.2, .seed = 55};
    Panel p = gen_factor_panel(spec);
    ReducedSpace rs = reduce(embed(p), 3);
    auto links = top_links(exposure_network(rs), 8);
    for (const auto& l : links) {
        bool same_block = (l.i < 4) == (l.j < 4);
        CHECK(same_block);
    }
}

TEST_CASE("minimal spanning tree base cases") {
    SpanningTree tree = mst({"A", "B", "C"}, (Eigen::MatrixXd(3, 3) << 0, 1, 2, 1, 0, 1, 2, 1, 0).finished());
    REQUIRE(tree.edges.size() == 2);
    CHECK(tree.total_weight == doctest::Approx(2.0));
    std::set<std::pair<std::size_t, std::size_t>> got;
    for (const auto& e : tree.edges) got.insert({e.i, e.j});
    CHECK(got == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}});

    SpanningTree pair = mst({"A", "B"}, (Eigen::MatrixXd(2, 2) << 0, 0.7, 0.7, 0).finished());
    REQUIRE(pair.edges.size() == 1);
    CHECK(pair.edges[0].distance == doctest::Approx(0.7));
}

TEST_CASE("mst matches exhaustive enumeration for small N") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        std::size_t n = 3 + seed % 5;  // up to 7
        rng::Engine eng(3000 + seed);
        oracle::Matrix d = oracle::make_matrix(n);
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("T" + std::to_string(i));
        Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double w = 0.1 + 1.9 * rng::uniform01(eng);
                d[i][j] = d[j][i] = w;
                dm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
                dm(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
            }
        auto best = oracle::prufer_min_tree(d);
        SpanningTree tree = mst(ids, dm);
        CHECK(std::abs(tree.total_weight - best.weight) < 1e-12);

        std::set<oracle::Edge> got;
        for (const auto& e : tree.edges) got.insert({e.i, e.j});
        CHECK(got == best.edges);  // continuous weights: tie-free, unique tree
    }
}

TEST_CASE("mst beats random spanning trees on larger graphs") {
    const std::size_t n = 20;
    rng::Engine eng(4242);
    Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(n, n);
    oracle::Matrix d = oracle::make_matrix(n);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("G" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double w = 0.1 + 1.9 * rng::uniform01(eng);
            d[i][j] = d[j][i] = w;
            dm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
            dm(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
        }
    SpanningTree tree = mst(ids, dm);
    for (int trial = 0; trial < 1000; ++trial) {
        auto random = oracle::random_tree(n, eng);
        CHECK(tree.total_weight <= oracle::tree_weight(random, d) + 1e-12);
    }
}

TEST_CASE("equal-weight mst edges follow the id tie-break") {
    // all distances equal: the deterministic tree is the star rooted at the
    // lexicographically smallest id pairs
    Eigen::MatrixXd dm = Eigen::MatrixXd::Constant(4, 4, 1.0);
    dm.diagonal().setZero();
    SpanningTree tree = mst({"A", "B", "C", "D"}, dm);
    REQUIRE(tree.edges.size() == 3);
    CHECK(tree.edges[0].i == 0);
    CHECK(tree.edges[0].j == 1);
    CHECK(tree.edges[1].i == 0);
    CHECK(tree.edges[1].j == 2);
    CHECK(tree.edges[2].i == 0);
    CHECK(tree.edges[2].j == 3);
}
