#include <gtest/gtest.h>

#include <random>
#include <set>

#include "gxstpir/model.hpp"
#include "support.hpp"

using namespace gxstpir;
using namespace gxstpir::model;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

StoragePattern running() { return make_pattern(4, {{1, 2, 4}, {1, 2, 3}, {1, 4}, {3, 4}}); }
StoragePattern ex6() {
  return make_pattern(8, {{1, 2, 3}, {1, 3, 4}, {4, 5, 7}, {4, 6, 7}, {7, 8}});
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(Validate, RunningExample) {
  auto p = running();
  EXPECT_EQ(p.n_servers(), 4);
  EXPECT_EQ(p.num_sets(), 4);
  EXPECT_EQ(p.rho(1), 3);
  EXPECT_EQ(p.rho(2), 3);
  EXPECT_EQ(p.rho(3), 2);
  EXPECT_EQ(p.rho(4), 2);
  EXPECT_EQ(p.rho_min(), 2);
}

TEST(Validate, SortsAndRejects) {
  auto p = make_pattern(4, {{4, 1, 2}});
  EXPECT_EQ(p.servers(1), (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(code_of([] { make_pattern(4, {{2, 2, 3}}); }), ErrorCode::DuplicateServer);
  EXPECT_EQ(code_of([] { make_pattern(4, {{5}}); }), ErrorCode::ServerOutOfRange);
  EXPECT_EQ(code_of([] { make_pattern(4, {{0, 1}}); }), ErrorCode::ServerOutOfRange);
  EXPECT_EQ(code_of([] { make_pattern(4, {{}}); }), ErrorCode::EmptyReplication);
  EXPECT_EQ(code_of([] { make_pattern(4, {}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_pattern(0, {{1}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_pattern(3, {{1}}, 0); }), ErrorCode::InvalidArgument);
}

TEST(ServerIndex, RunningExample) {
  auto p = running();
  EXPECT_EQ(server_index(p, 1), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(server_index(p, 3), (std::vector<int>{2, 4}));
  EXPECT_TRUE(server_index(make_pattern(3, {{1, 2}}), 3).empty());
}

TEST(Graph, Example6Edges) {
  auto g = build_graph(ex6());
  std::set<std::pair<int, int>> expected{{1, 2}, {1, 3}, {2, 3}, {1, 4}, {3, 4}, {4, 5},
                                         {4, 7}, {5, 7}, {4, 6}, {6, 7}, {7, 8}};
  EXPECT_EQ(g.edges(), expected);
  EXPECT_TRUE(build_graph(make_pattern(3, {{2}})).edges().empty());
  EXPECT_EQ(build_graph(make_pattern(2, {{1, 2}})).edges(),
            (std::set<std::pair<int, int>>{{1, 2}}));
}

TEST(Graph, NeighborhoodAndStability) {
  auto g = build_graph(ex6());
  EXPECT_TRUE(g.is_stable({5, 6}));
  EXPECT_FALSE(g.is_stable({4, 5}));
  EXPECT_EQ(g.neighborhood({5, 6}), (std::vector<int>{4, 7}));
  EXPECT_EQ(g.neighbors(7), (std::vector<int>{4, 5, 6, 8}));
  auto h = g.induced({1, 2, 3, 4, 5, 6});
  EXPECT_FALSE(h.has_edge(4, 7));
  EXPECT_TRUE(h.has_edge(4, 5));
}

TEST(NrSet, Example6) {
  auto p = ex6();
  EXPECT_EQ(n_r_set(p, 3), (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(servers_below(p, 3), (std::vector<int>{7, 8}));
}

TEST(NrSet, LowReplicationExcludedAndEmptyServersIncluded) {
  auto p = make_pattern(4, {{1, 2}, {2, 3}});
  EXPECT_EQ(n_r_set(p, 3), (std::vector<int>{4}));
  EXPECT_EQ(n_r_set(p, 2), (std::vector<int>{1, 2, 3, 4}));
}

TEST(Hypergraph, Example1) {
  auto h = build_converse_hypergraph(make_pattern(4, {{1, 2, 4}, {1, 2, 3}, {1, 3, 4}}), 0, 1);
  std::set<std::vector<int>> edges(h.edges.begin(), h.edges.end());
  std::set<std::vector<int>> expected{{1, 2}, {1, 4}, {2, 4}, {1, 3}, {2, 3}, {3, 4}};
  EXPECT_EQ(edges, expected);
  EXPECT_EQ(h.edges.size(), expected.size());
}

TEST(Hypergraph, Example3HasTripleEdges) {
  auto h = build_converse_hypergraph(make_pattern(5, {{1, 3, 4}, {1, 3, 4, 5}, {2, 3, 5}}), 0, 1);
  std::set<std::vector<int>> edges(h.edges.begin(), h.edges.end());
  for (std::vector<int> e : {std::vector<int>{1, 3, 4}, {1, 3, 5}, {1, 4, 5}, {3, 4, 5}})
    EXPECT_TRUE(edges.count(e));
  EXPECT_EQ(code_of([] { build_converse_hypergraph(make_pattern(3, {{1, 2}}), 1, 1); }),
            ErrorCode::DegenerateCapacity);
}

TEST(Restrict, Example4) {
  auto p = make_pattern(5, {{1, 2, 3, 4}, {2, 3, 4, 5}});
  auto r = restrict(p, {2, 3, 4});
  EXPECT_EQ(r.n_servers(), 3);
  EXPECT_EQ(r.servers(1), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(r.servers(2), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(r.rho_min(), 3);
  EXPECT_EQ(restrict(p, {1, 2, 3, 4, 5}), p);
  EXPECT_EQ(code_of([&] { restrict(make_pattern(4, {{1, 2}, {3, 4}}), {3, 4}); }),
            ErrorCode::MessageLost);
}

TEST(BCover, Examples) {
  auto tri = find_exact_b_cover(make_pattern(3, {{1, 2}, {2, 3}, {3, 1}}));
  ASSERT_TRUE(tri);
  EXPECT_EQ(tri->b, 2);
  EXPECT_EQ(tri->message_sets, (std::vector<int>{1, 2, 3}));

  auto one = find_exact_b_cover(make_pattern(6, {{1, 2, 3}, {4, 5, 6}, {1, 4, 5}}));
  ASSERT_TRUE(one);
  EXPECT_EQ(one->b, 1);
  EXPECT_EQ(one->message_sets, (std::vector<int>{1, 2}));

  EXPECT_FALSE(find_exact_b_cover(make_pattern(4, {{1, 2, 4}, {1, 2, 3}, {1, 3, 4}})));
}

TEST(BCover, WitnessIsExactCoverByMinimalReplication) {
  std::mt19937_64 rng(11);
  int found = 0;
  for (int i = 0; i < 200; ++i) {
    auto p = testsupport::random_pattern(rng, 2 + rng() % 5, 1 + rng() % 6, 1, 3);
    auto c = find_exact_b_cover(p);
    if (!c) continue;
    ++found;
    std::vector<int> load(p.n_servers() + 1, 0);
    for (int m : c->message_sets) {
      EXPECT_EQ(p.rho(m), p.rho_min());
      for (int n : p.servers(m)) ++load[n];
    }
    for (int n = 1; n <= p.n_servers(); ++n) EXPECT_EQ(load[n], c->b);
  }
  EXPECT_GT(found, 0);
}

TEST(Properties, RandomPatterns) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 300; ++i) {
    const int n = 1 + static_cast<int>(rng() % 8);
    auto p = testsupport::random_pattern(rng, n, 1 + rng() % 6, 1, n);

    int by_server = 0, by_set = 0;
    for (int s = 1; s <= n; ++s) by_server += static_cast<int>(server_index(p, s).size());
    for (int m = 1; m <= p.num_sets(); ++m) by_set += p.rho(m);
    EXPECT_EQ(by_server, by_set);

    std::vector<int> all(n);
    for (int s = 1; s <= n; ++s) all[s - 1] = s;
    EXPECT_EQ(restrict(p, all), p);

    auto g = build_graph(p);
    for (auto [a, b] : g.edges()) {
      EXPECT_LT(a, b);
      EXPECT_TRUE(g.has_edge(b, a));
    }
    for (int m = 1; m <= p.num_sets(); ++m)
      for (int a : p.servers(m))
        for (int b : p.servers(m))
          if (a != b) {
            EXPECT_TRUE(g.has_edge(a, b));
          }

    for (int xt = 0; xt < p.rho_min(); ++xt) {
      auto h = build_converse_hypergraph(p, 0, xt);
      std::set<std::vector<int>> seen;
      for (const auto& e : h.edges) {
        EXPECT_TRUE(seen.insert(e).second);
        bool generated = false;
        for (int m = 1; m <= p.num_sets() && !generated; ++m)
          generated = static_cast<int>(e.size()) == p.rho(m) - xt &&
                      std::includes(p.servers(m).begin(), p.servers(m).end(), e.begin(), e.end());
        EXPECT_TRUE(generated);
      }
    }
  }
}

TEST(Combinations, CountAndOrder) {
  std::vector<int> items{2, 4, 6, 8, 10};
  for (std::size_t k = 0; k <= 6; ++k) {
    std::vector<std::vector<int>> seen;
    for_each_combination(items, k, [&](const std::vector<int>& c) { seen.push_back(c); });
    EXPECT_EQ(seen.size(), binomial(items.size(), k));
    EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
  }
}
