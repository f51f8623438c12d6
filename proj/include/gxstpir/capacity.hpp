#pragma once

// Exact bounds on the asymptotic capacity.
//
// Lower bounds are only ever ones a scheme in this library realizes: the
// base scheme on the best server subset, or the composite scheme when every
// rho_m is T+1 or T+2 (X = 0). The upper bound is 1 / D* where D* is the
// optimum of the converse LP
//   min sum_n D_n  s.t.  sum_{n in e} D_n >= 1 for every converse hyperedge e,
// equal by LP duality to the fractional matching number of the hypergraph.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gxstpir/error.hpp"
#include "gxstpir/lp.hpp"
#include "gxstpir/model.hpp"
#include "gxstpir/rational.hpp"

namespace gxstpir::capacity {

using model::ConverseHypergraph;
using model::Graph;
using model::StoragePattern;

inline constexpr int kDefaultEliminationCap = 20;
inline constexpr int kMaxStableSetVertices = 24;
inline constexpr int kMaxBruteForceEdges = 12;

/// (rho_min - X - T) / N, floored at zero.
inline Rational lower_bound_direct(const StoragePattern& p, int x, int t) {
  int l = std::max(0, p.rho_min() - x - t);
  return Rational(l, p.n_servers());
}

struct EliminationBound {
  Rational rate;
  std::vector<int> servers;  // S
};

/// Best rate of the base scheme over all server subsets S that still hold
/// every message set. Ties prefer larger S, then the lexicographically
/// smaller one.
inline EliminationBound best_elimination_lower_bound(
    const StoragePattern& p, int x, int t, int cap = kDefaultEliminationCap) {
  const int n = p.n_servers();
  enforce(n <= cap && n <= 30, ErrorCode::SearchTooLarge,
          "N = " + std::to_string(n) + " exceeds the elimination cap " +
              std::to_string(cap));
  std::vector<std::uint32_t> masks;
  for (const auto& ms : p.sets()) {
    std::uint32_t mask = 0;
    for (int s : ms.servers) mask |= 1u << (s - 1);
    masks.push_back(mask);
  }
  auto to_vec = [n](std::uint32_t mask) {
    std::vector<int> v;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) v.push_back(i + 1);
    return v;
  };
  long best_num = -1, best_den = 1;
  std::uint32_t best_mask = 0;
  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
  for (std::uint32_t s = 1; s != 0 && s <= full; ++s) {
    int min_cover = n + 1;
    for (auto mask : masks) min_cover = std::min(min_cover, std::popcount(s & mask));
    if (min_cover == 0) continue;
    const long num = std::max(0, min_cover - x - t);
    const long den = std::popcount(s);
    const long lhs = num * best_den, rhs = best_num * den;
    bool better = best_num < 0 || lhs > rhs;
    if (!better && lhs == rhs) {
      if (den != std::popcount(best_mask)) better = den > std::popcount(best_mask);
      else better = to_vec(s) < to_vec(best_mask);
    }
    if (better) {
      best_num = num;
      best_den = den;
      best_mask = s;
    }
    if (s == full) break;
  }
  return {Rational(best_num, best_den), to_vec(best_mask)};
}

struct ConverseSolution {
  Rational d_star;
  std::vector<Rational> d;  // D_1..D_N
};

/// min sum D s.t. every hyperedge has load >= 1, as maximize -sum D with
/// -(incidence) D <= -1.
inline ConverseSolution solve_converse(const ConverseHypergraph& h) {
  std::vector<std::vector<Rational>> a;
  for (const auto& e : h.edges) {
    std::vector<Rational> row(h.n_vertices, Rational(0));
    for (int v : e) row[v - 1] = -1;
    a.push_back(std::move(row));
  }
  std::vector<Rational> b(h.edges.size(), Rational(-1));
  std::vector<Rational> c(h.n_vertices, Rational(-1));
  auto res = lp::maximize(a, b, c);
  enforce(res.status == lp::Status::Optimal, ErrorCode::Infeasible,
          "converse LP not solved (D = 1 is always feasible)");
  return {-res.value, std::move(res.x)};
}

inline ConverseSolution converse_lp(const StoragePattern& p, int x, int t) {
  return solve_converse(model::build_converse_hypergraph(p, x, t));
}

struct FractionalMatching {
  Rational value;
  std::vector<Rational> weights;  // per hyperedge
};

/// max sum x_e s.t. every vertex has load <= 1.
inline FractionalMatching fractional_matching_number(const ConverseHypergraph& h) {
  std::vector<std::vector<Rational>> a(h.n_vertices,
                                       std::vector<Rational>(h.edges.size(), Rational(0)));
  for (std::size_t e = 0; e < h.edges.size(); ++e)
    for (int v : h.edges[e]) a[v - 1][e] = 1;
  std::vector<Rational> b(h.n_vertices, Rational(1));
  std::vector<Rational> c(h.edges.size(), Rational(1));
  auto res = lp::maximize(a, b, c);
  enforce(res.status == lp::Status::Optimal, ErrorCode::Infeasible,
          "fractional matching LP not solved");
  return {res.value, std::move(res.x)};
}

struct Nu2Result {
  int value = 0;
  std::vector<int> stable_set;  // minimizing U, lexicographically smallest
};

/// nu_2(G) = min over stable U of |V \ U| + |N(U)|, by branch and bound over
/// stable sets in lexicographic order.
inline Nu2Result nu2(const Graph& g) {
  const auto& verts = g.vertices();
  const int nv = static_cast<int>(verts.size());
  enforce(nv <= kMaxStableSetVertices, ErrorCode::GraphTooLarge,
          std::to_string(nv) + " vertices exceed the stable-set cap");
  std::vector<std::uint32_t> adj(nv, 0);
  auto index = [&](int label) {
    return static_cast<int>(std::lower_bound(verts.begin(), verts.end(), label) -
                            verts.begin());
  };
  for (auto [u, v] : g.edges()) {
    adj[index(u)] |= 1u << index(v);
    adj[index(v)] |= 1u << index(u);
  }
  int best = nv + 1;
  std::uint32_t best_u = 0;
  std::function<void(int, std::uint32_t, std::uint32_t)> dfs =
      [&](int start, std::uint32_t u, std::uint32_t nbr) {
        const int value = nv - std::popcount(u) + std::popcount(nbr);
        if (value < best) {
          best = value;
          best_u = u;
        }
        std::uint32_t cand = 0;
        for (int i = start; i < nv; ++i)
          if (!((u | nbr) >> i & 1u)) cand |= 1u << i;
        if (value - std::popcount(cand) >= best) return;
        for (int i = start; i < nv; ++i)
          if (cand >> i & 1u) dfs(i + 1, u | 1u << i, nbr | adj[i]);
      };
  dfs(0, 0, 0);
  Nu2Result r{best, {}};
  for (int i = 0; i < nv; ++i)
    if (best_u >> i & 1u) r.stable_set.push_back(verts[i]);
  return r;
}

/// Maximum 2-matching by direct search over x in {0,1,2}^E.
inline int nu2_bruteforce(const Graph& g) {
  std::vector<std::pair<int, int>> edges(g.edges().begin(), g.edges().end());
  enforce(static_cast<int>(edges.size()) <= kMaxBruteForceEdges,
          ErrorCode::GraphTooLarge,
          std::to_string(edges.size()) + " edges exceed the brute-force cap");
  std::map<int, int> load;
  int best = 0;
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int size) {
    if (i == edges.size()) {
      best = std::max(best, size);
      return;
    }
    auto [u, v] = edges[i];
    for (int w = 0; w <= 2; ++w) {
      if (load[u] + w > 2 || load[v] + w > 2) break;
      load[u] += w;
      load[v] += w;
      rec(i + 1, size + w);
      load[u] -= w;
      load[v] -= w;
    }
  };
  rec(0, 0);
  return best;
}

struct Theorem3Certificate {
  Rational capacity;
  int nu2 = 0;
  std::vector<int> stable_set;  // optimal U
  std::vector<int> t2_servers;  // N_{T+2}
  std::vector<int> t1_servers;  // servers holding a (T+1)-replicated set
};

inline bool theorem3_applicable(const StoragePattern& p, int x, int t) {
  if (x != 0) return false;
  for (int m = 1; m <= p.num_sets(); ++m)
    if (p.rho(m) > t + 2) return false;
  return true;
}

/// Full composite-scheme certificate; requires X = 0 and every rho_m <= T+2.
inline Theorem3Certificate theorem3_certificate(const StoragePattern& p, int t) {
  enforce(theorem3_applicable(p, 0, t), ErrorCode::PreconditionViolated,
          "some message set is replicated more than T + 2 times");
  Theorem3Certificate c;
  c.t2_servers = model::n_r_set(p, t + 2);
  c.t1_servers = model::servers_below(p, t + 2);
  if (p.rho_min() <= t) {
    c.capacity = 0;
    return c;
  }
  auto g = model::build_graph(p).induced(c.t2_servers);
  auto r = nu2(g);
  c.nu2 = r.value;
  c.stable_set = r.stable_set;
  c.capacity = Rational(2, r.value + 2 * static_cast<int>(c.t1_servers.size()));
  return c;
}

inline Rational theorem3_capacity(const StoragePattern& p, int t) {
  return theorem3_certificate(p, t).capacity;
}

/// |[N]\U| + |N(U) u N_{T+1}| == |N_{T+2}\U| + |N(U) n N_{T+2}| + 2|N_{T+1}|.
inline bool verify_identity_t3(const StoragePattern& p, int t,
                               const std::vector<int>& u) {
  const auto t2 = model::n_r_set(p, t + 2);
  const auto t1 = model::servers_below(p, t + 2);
  const auto g = model::build_graph(p);
  for (int v : u)
    enforce(std::binary_search(t2.begin(), t2.end(), v),
            ErrorCode::PreconditionViolated, "U not inside N_{T+2}");
  enforce(g.is_stable(u), ErrorCode::PreconditionViolated, "U not stable");
  const auto nbr = g.neighborhood(u);
  std::set<int> lhs_union(nbr.begin(), nbr.end());
  lhs_union.insert(t1.begin(), t1.end());
  const int lhs = p.n_servers() - static_cast<int>(u.size()) +
                  static_cast<int>(lhs_union.size());
  int nbr_in_t2 = 0;
  for (int v : nbr) nbr_in_t2 += std::binary_search(t2.begin(), t2.end(), v);
  const int rhs = static_cast<int>(t2.size() - u.size()) + nbr_in_t2 +
                  2 * static_cast<int>(t1.size());
  return lhs == rhs;
}

enum class LowerMethod { Degenerate, Direct, Elimination, Theorem3 };

inline std::string to_string(LowerMethod m) {
  switch (m) {
    case LowerMethod::Degenerate: return "degenerate";
    case LowerMethod::Direct: return "direct";
    case LowerMethod::Elimination: return "elimination";
    case LowerMethod::Theorem3: return "theorem3";
  }
  return "unknown";
}

struct CapacityReport {
  Rational lower;
  Rational upper;
  bool matched = false;
  std::vector<int> lower_witness;     // servers the realizing scheme downloads from
  std::vector<Rational> upper_witness;  // optimal D
  LowerMethod lower_method = LowerMethod::Direct;
  Rational direct_lower;
  std::optional<Rational> d_star;
  std::optional<Rational> fractional_matching;
  std::optional<model::BCover> b_cover;
  bool b_cover_certifies = false;
  std::optional<Theorem3Certificate> theorem3;
  std::vector<int> over_replicated_sets;  // rho_m > rho_min
  bool elimination_exhaustive = true;
  std::vector<std::string> notes;
};

inline CapacityReport capacity_report(const StoragePattern& p, int x, int t,
                                      int cap = kDefaultEliminationCap) {
  CapacityReport r;
  r.direct_lower = lower_bound_direct(p, x, t);
  for (int m = 1; m <= p.num_sets(); ++m)
    if (p.rho(m) > p.rho_min()) r.over_replicated_sets.push_back(m);
  r.b_cover = model::find_exact_b_cover(p);

  if (p.rho_min() <= x + t) {
    r.lower = r.upper = 0;
    r.matched = true;
    r.lower_method = LowerMethod::Degenerate;
    r.notes.push_back("rho_min <= X + T: capacity is zero");
    return r;
  }

  const auto h = model::build_converse_hypergraph(p, x, t);
  auto conv = solve_converse(h);
  auto frac = fractional_matching_number(h);
  enforce(conv.d_star == frac.value, ErrorCode::Infeasible,
          "strong duality violated: " + gxstpir::to_string(conv.d_star) + " vs " +
              gxstpir::to_string(frac.value));
  r.d_star = conv.d_star;
  r.fractional_matching = frac.value;
  r.upper = 1 / conv.d_star;
  r.upper_witness = std::move(conv.d);

  if (p.n_servers() <= cap) {
    auto elim = best_elimination_lower_bound(p, x, t, cap);
    r.lower = elim.rate;
    r.lower_witness = elim.servers;
    r.lower_method = static_cast<int>(elim.servers.size()) == p.n_servers()
                         ? LowerMethod::Direct
                         : LowerMethod::Elimination;
  } else {
    r.lower = r.direct_lower;
    for (int n = 1; n <= p.n_servers(); ++n) r.lower_witness.push_back(n);
    r.lower_method = LowerMethod::Direct;
    r.elimination_exhaustive = false;
    r.notes.push_back("N exceeds elimination cap " + std::to_string(cap) +
                      "; lower bound uses all servers");
  }

  if (theorem3_applicable(p, x, t)) {
    auto cert = theorem3_certificate(p, t);
    if (cert.capacity > r.lower) {
      r.lower = cert.capacity;
      r.lower_witness.clear();
      for (int n = 1; n <= p.n_servers(); ++n)
        if (!std::binary_search(cert.stable_set.begin(), cert.stable_set.end(), n))
          r.lower_witness.push_back(n);
      r.lower_method = LowerMethod::Theorem3;
    }
    r.theorem3 = std::move(cert);
  }

  if (r.b_cover) {
    r.b_cover_certifies = r.direct_lower == r.upper;
  }
  if (!r.over_replicated_sets.empty())
    r.notes.push_back("message sets replicated beyond rho_min are truncated by the scheme");
  r.matched = r.lower == r.upper;
  enforce(r.lower <= r.upper, ErrorCode::Infeasible,
          "lower bound " + gxstpir::to_string(r.lower) + " exceeds upper bound " +
              gxstpir::to_string(r.upper));
  return r;
}

}  // namespace gxstpir::capacity
