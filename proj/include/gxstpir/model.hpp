#pragma once

// Storage patterns and the combinatorial structure derived from them.
//
// Server ids and message-set ids are 1-based everywhere in the public API,
// matching [N] and [M]. Containers are indexed with id - 1 internally.

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gxstpir/error.hpp"

namespace gxstpir::model {

struct MessageSet {
  int count = 1;             // K_m
  std::vector<int> servers;  // R_m, ascending
};

/// Unvalidated input, e.g. straight from a JSON document.
struct RawPattern {
  int n_servers = 0;
  std::vector<MessageSet> message_sets;
};

class StoragePattern {
 public:
  int n_servers() const noexcept { return n_servers_; }
  int num_sets() const noexcept { return static_cast<int>(sets_.size()); }
  const std::vector<MessageSet>& sets() const noexcept { return sets_; }
  const MessageSet& set(int m) const { return sets_.at(m - 1); }
  const std::vector<int>& servers(int m) const { return set(m).servers; }
  int count(int m) const { return set(m).count; }
  int rho(int m) const { return static_cast<int>(set(m).servers.size()); }
  int rho_min() const {
    int r = rho(1);
    for (int m = 2; m <= num_sets(); ++m) r = std::min(r, rho(m));
    return r;
  }
  bool stores(int m, int n) const {
    const auto& s = servers(m);
    return std::binary_search(s.begin(), s.end(), n);
  }

  friend bool operator==(const StoragePattern& a, const StoragePattern& b) {
    if (a.n_servers_ != b.n_servers_ || a.sets_.size() != b.sets_.size())
      return false;
    for (std::size_t i = 0; i < a.sets_.size(); ++i)
      if (a.sets_[i].count != b.sets_[i].count ||
          a.sets_[i].servers != b.sets_[i].servers)
        return false;
    return true;
  }

  friend StoragePattern validate(RawPattern raw);

 private:
  int n_servers_ = 0;
  std::vector<MessageSet> sets_;
};

/// Normalizes (sorts each R_m) and checks a raw pattern.
inline StoragePattern validate(RawPattern raw) {
  enforce(raw.n_servers >= 1, ErrorCode::InvalidArgument,
          "n_servers must be positive");
  enforce(!raw.message_sets.empty(), ErrorCode::InvalidArgument,
          "at least one message set is required");
  for (std::size_t i = 0; i < raw.message_sets.size(); ++i) {
    auto& ms = raw.message_sets[i];
    const std::string where = "message set " + std::to_string(i + 1);
    enforce(ms.count >= 1, ErrorCode::InvalidArgument,
            where + ": count must be positive");
    enforce(!ms.servers.empty(), ErrorCode::EmptyReplication,
            where + " is stored nowhere");
    std::sort(ms.servers.begin(), ms.servers.end());
    for (std::size_t j = 0; j < ms.servers.size(); ++j) {
      int n = ms.servers[j];
      enforce(n >= 1 && n <= raw.n_servers, ErrorCode::ServerOutOfRange,
              where + ": server " + std::to_string(n) + " not in [1, " +
                  std::to_string(raw.n_servers) + "]");
      enforce(j == 0 || ms.servers[j - 1] != n, ErrorCode::DuplicateServer,
              where + ": server " + std::to_string(n) + " listed twice");
    }
  }
  StoragePattern p;
  p.n_servers_ = raw.n_servers;
  p.sets_ = std::move(raw.message_sets);
  return p;
}

/// Convenience for tests and fixtures: every message set gets `count`
/// messages.
inline StoragePattern make_pattern(int n_servers,
                                   std::vector<std::vector<int>> replication,
                                   int count = 1) {
  RawPattern raw{n_servers, {}};
  for (auto& r : replication) raw.message_sets.push_back({count, std::move(r)});
  return validate(std::move(raw));
}

/// M_n: the message sets stored at server n.
inline std::vector<int> server_index(const StoragePattern& p, int n) {
  std::vector<int> out;
  for (int m = 1; m <= p.num_sets(); ++m)
    if (p.stores(m, n)) out.push_back(m);
  return out;
}

/// Simple undirected graph on labelled vertices.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::vector<int> vertices) : vertices_(std::move(vertices)) {
    std::sort(vertices_.begin(), vertices_.end());
  }

  void add_edge(int u, int v) {
    if (u == v) return;
    edges_.insert({std::min(u, v), std::max(u, v)});
  }

  const std::vector<int>& vertices() const noexcept { return vertices_; }
  const std::set<std::pair<int, int>>& edges() const noexcept { return edges_; }

  bool has_edge(int u, int v) const {
    return edges_.count({std::min(u, v), std::max(u, v)}) > 0;
  }

  std::vector<int> neighbors(int u) const {
    std::vector<int> out;
    for (auto [a, b] : edges_) {
      if (a == u) out.push_back(b);
      if (b == u) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// N(U): vertices outside U adjacent to some member of U.
  std::vector<int> neighborhood(const std::vector<int>& u_set) const {
    std::set<int> u(u_set.begin(), u_set.end()), out;
    for (auto [a, b] : edges_) {
      if (u.count(a) && !u.count(b)) out.insert(b);
      if (u.count(b) && !u.count(a)) out.insert(a);
    }
    return {out.begin(), out.end()};
  }

  bool is_stable(const std::vector<int>& u_set) const {
    for (std::size_t i = 0; i < u_set.size(); ++i)
      for (std::size_t j = i + 1; j < u_set.size(); ++j)
        if (has_edge(u_set[i], u_set[j])) return false;
    return true;
  }

  Graph induced(const std::vector<int>& keep) const {
    Graph g(keep);
    std::set<int> k(keep.begin(), keep.end());
    for (auto [a, b] : edges_)
      if (k.count(a) && k.count(b)) g.add_edge(a, b);
    return g;
  }

 private:
  std::vector<int> vertices_;
  std::set<std::pair<int, int>> edges_;
};

/// The storage graph: uv is an edge iff u and v share some message set.
inline Graph build_graph(const StoragePattern& p) {
  std::vector<int> v(p.n_servers());
  for (int n = 1; n <= p.n_servers(); ++n) v[n - 1] = n;
  Graph g(std::move(v));
  for (const auto& ms : p.sets())
    for (std::size_t i = 0; i < ms.servers.size(); ++i)
      for (std::size_t j = i + 1; j < ms.servers.size(); ++j)
        g.add_edge(ms.servers[i], ms.servers[j]);
  return g;
}

/// Servers that store no message set replicated fewer than r times, i.e.
/// every m in M_n has rho_m >= r. Servers storing nothing always qualify.
inline std::vector<int> n_r_set(const StoragePattern& p, int r) {
  std::vector<int> out;
  for (int n = 1; n <= p.n_servers(); ++n) {
    bool ok = true;
    for (int m : server_index(p, n)) ok = ok && p.rho(m) >= r;
    if (ok) out.push_back(n);
  }
  return out;
}

/// Complement of n_r_set(p, r): servers holding some message set with
/// rho_m < r.
inline std::vector<int> servers_below(const StoragePattern& p, int r) {
  std::vector<int> keep = n_r_set(p, r), out;
  for (int n = 1; n <= p.n_servers(); ++n)
    if (!std::binary_search(keep.begin(), keep.end(), n)) out.push_back(n);
  return out;
}

/// Calls fn for every k-subset of `items` in lexicographic order.
template <typename Fn>
void for_each_combination(const std::vector<int>& items, std::size_t k, Fn&& fn) {
  if (k > items.size()) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::vector<int> pick(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) pick[i] = items[idx[i]];
    fn(static_cast<const std::vector<int>&>(pick));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == items.size() - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

struct ConverseHypergraph {
  int n_vertices = 0;
  std::vector<std::vector<int>> edges;  // deduplicated, each sorted
};

/// Hyperedges are the (rho_m - X - T)-subsets of every R_m.
inline ConverseHypergraph build_converse_hypergraph(const StoragePattern& p,
                                                    int x, int t) {
  enforce(x >= 0 && t >= 0, ErrorCode::InvalidArgument, "X and T must be >= 0");
  enforce(p.rho_min() > x + t, ErrorCode::DegenerateCapacity,
          "rho_min = " + std::to_string(p.rho_min()) + " <= X + T = " +
              std::to_string(x + t));
  ConverseHypergraph h{p.n_servers(), {}};
  std::set<std::vector<int>> seen;
  for (int m = 1; m <= p.num_sets(); ++m) {
    for_each_combination(p.servers(m), p.rho(m) - x - t,
                         [&](const std::vector<int>& e) {
                           if (seen.insert(e).second) h.edges.push_back(e);
                         });
  }
  return h;
}

/// Keeps only the servers in `keep`, relabelled 1..|keep| in ascending order.
inline StoragePattern restrict(const StoragePattern& p, std::vector<int> keep) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  enforce(!keep.empty(), ErrorCode::InvalidArgument, "empty server subset");
  for (int n : keep)
    enforce(n >= 1 && n <= p.n_servers(), ErrorCode::ServerOutOfRange,
            "server " + std::to_string(n));
  auto relabel = [&](int n) {
    return static_cast<int>(std::lower_bound(keep.begin(), keep.end(), n) -
                            keep.begin()) + 1;
  };
  RawPattern raw{static_cast<int>(keep.size()), {}};
  for (int m = 1; m <= p.num_sets(); ++m) {
    MessageSet ms{p.count(m), {}};
    for (int n : p.servers(m))
      if (std::binary_search(keep.begin(), keep.end(), n))
        ms.servers.push_back(relabel(n));
    enforce(!ms.servers.empty(), ErrorCode::MessageLost,
            "message set " + std::to_string(m) + " has no server left");
    raw.message_sets.push_back(std::move(ms));
  }
  return validate(std::move(raw));
}

struct BCover {
  int b = 0;
  std::vector<int> message_sets;  // 1-based ids
};

/// Smallest b >= 1 for which some family of rho_min-replicated message sets
/// covers every server exactly b times; the lexicographically smallest such
/// family is returned.
inline std::optional<BCover> find_exact_b_cover(const StoragePattern& p) {
  const int rho = p.rho_min();
  const int n_servers = p.n_servers();
  std::vector<int> cand;
  for (int m = 1; m <= p.num_sets(); ++m)
    if (p.rho(m) == rho) cand.push_back(m);

  for (int b = 1; b <= p.num_sets(); ++b) {
    if ((b * n_servers) % rho != 0) continue;
    const std::size_t need = static_cast<std::size_t>(b * n_servers / rho);
    if (need > cand.size()) continue;
    std::vector<int> load(n_servers + 1, 0), chosen;
    std::optional<BCover> found;
    // Preorder over ascending index sequences visits subsets in
    // lexicographic order, so the first hit is the smallest witness.
    std::function<void(std::size_t)> dfs = [&](std::size_t start) {
      if (found) return;
      if (chosen.size() == need) {
        bool exact = true;
        for (int n = 1; n <= n_servers && exact; ++n) exact = load[n] == b;
        if (exact) found = BCover{b, chosen};
        return;
      }
      if (cand.size() - start < need - chosen.size()) return;
      for (std::size_t i = start; i < cand.size() && !found; ++i) {
        const auto& servers = p.servers(cand[i]);
        bool fits = true;
        for (int n : servers) fits = fits && load[n] < b;
        if (!fits) continue;
        for (int n : servers) ++load[n];
        chosen.push_back(cand[i]);
        dfs(i + 1);
        chosen.pop_back();
        for (int n : servers) --load[n];
      }
    };
    dfs(0);
    if (found) return found;
  }
  return std::nullopt;
}

}  // namespace gxstpir::model
