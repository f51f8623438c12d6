#pragma once

// X-secure T-private retrieval over replicated storage.
//
// Storage at server n for message set m and block index l:
//   W^(n)_{m,(l)} = W_{m,(l)} + sum_{x=1..X} (l + beta_n)^x Z_{m,x,(l)}
// Query to server n:
//   Q_{m,n,(l)} = v_{m,n} / (l + beta_n) * (F_m + sum_{t=1..T} (l + beta_n)^t Z'_{m,t,(l)})
// Answer: A_n = sum_l sum_{m in M_n} <W^(n)_{m,(l)}, Q_{m,n,(l)}>.
// Projecting the N answers on the Vandermonde rows beta^0..beta^{L-1} kills
// every noise-carrying term and leaves an invertible L x L system in the L
// desired symbols.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "gxstpir/capacity.hpp"
#include "gxstpir/error.hpp"
#include "gxstpir/ff.hpp"
#include "gxstpir/grscoef.hpp"
#include "gxstpir/model.hpp"
#include "gxstpir/noise.hpp"

namespace gxstpir::scheme {

using ff::FieldElement;
using ff::FieldMatrix;
using ff::PrimeField;
using model::StoragePattern;
using Vec = std::vector<FieldElement>;

struct SchemeInstance {
  PrimeField field;
  StoragePattern original;  // as given
  StoragePattern pattern;   // every R_m truncated to rho_min servers
  int x = 0;
  int t = 0;
  int block_length = 1;     // L = rho_min - X - T
  grscoef::EvaluationPoints points;
  grscoef::GrsCoefficients coeffs;

  int n_servers() const { return pattern.n_servers(); }
  int num_sets() const { return pattern.num_sets(); }
  const FieldElement& beta(int n) const { return points.at(n); }
  const FieldElement& v(int m, int n) const { return coeffs.at(pattern, m, n); }
  /// l + beta_n as a field element.
  FieldElement shifted(int l, int n) const { return field.elem(l) + beta(n); }
};

/// Keeps the ascending-first rho_min servers of each message set.
inline StoragePattern truncate_to_rho_min(const StoragePattern& p) {
  const int rho = p.rho_min();
  model::RawPattern raw{p.n_servers(), {}};
  for (const auto& ms : p.sets())
    raw.message_sets.push_back(
        {ms.count, {ms.servers.begin(), ms.servers.begin() + rho}});
  return model::validate(std::move(raw));
}

/// sum_{n in R_m} v_{m,n} / (1 + beta_n); nonzero whenever beta_n != -1.
inline FieldElement compute_normalizer(const SchemeInstance& inst, int m) {
  FieldElement s = inst.field.zero();
  for (int n : inst.pattern.servers(m)) s += inst.v(m, n) / inst.shifted(1, n);
  return s;
}

inline SchemeInstance build_instance(const StoragePattern& pattern, int x, int t,
                                     std::optional<std::uint64_t> q = {}) {
  enforce(x >= 0 && t >= 0, ErrorCode::InvalidArgument, "X and T must be >= 0");
  enforce(pattern.rho_min() > x + t, ErrorCode::DegenerateCapacity,
          "rho_min = " + std::to_string(pattern.rho_min()) +
              " <= X + T = " + std::to_string(x + t));
  StoragePattern truncated = truncate_to_rho_min(pattern);
  const int L = pattern.rho_min() - x - t;
  PrimeField field = grscoef::choose_field(pattern.n_servers(), L, q);
  auto points = grscoef::choose_points(field, pattern.n_servers(), L);
  auto coeffs = grscoef::dual_grs_coeffs(points, truncated);
  SchemeInstance inst{field, pattern, std::move(truncated), x, t, L,
                      std::move(points), std::move(coeffs)};
  for (int m = 1; m <= inst.num_sets(); ++m) {
    enforce(grscoef::annihilator_check(inst.points, inst.pattern, inst.coeffs, m),
            ErrorCode::SingularDecode,
            "dual-GRS identity fails for message set " + std::to_string(m));
    if (x == 0 && L == 1)
      enforce(!compute_normalizer(inst, m).is_zero(), ErrorCode::ZeroNormalizer,
              "message set " + std::to_string(m));
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Messages and randomness

/// W_{m,(l)} row vectors: rows[m-1][l-1] has K_m entries.
struct MessageStore {
  std::vector<std::vector<Vec>> rows;

  const FieldElement& symbol(int m, int k, int l) const {
    return rows.at(m - 1).at(l - 1).at(k - 1);
  }
};

/// Noise vectors indexed [m-1][j-1][l-1], K_m entries each, where j is x
/// (storage) or t (query).
struct NoiseBlock {
  std::vector<std::vector<std::vector<Vec>>> z;
};

inline MessageStore zero_messages(const PrimeField& field,
                                  const StoragePattern& p, int block_length) {
  MessageStore s;
  for (const auto& ms : p.sets())
    s.rows.emplace_back(block_length, Vec(ms.count, field.zero()));
  return s;
}

inline MessageStore random_messages(const PrimeField& field,
                                    const StoragePattern& p, int block_length,
                                    const noise::NoiseTape& tape) {
  MessageStore s = zero_messages(field, p, block_length);
  for (int m = 1; m <= p.num_sets(); ++m)
    for (int l = 1; l <= block_length; ++l)
      for (int k = 1; k <= p.count(m); ++k)
        s.rows[m - 1][l - 1][k - 1] =
            tape.element(field, noise::Role::Message, m, 0, l, k);
  return s;
}

inline NoiseBlock zero_noise(const SchemeInstance& inst, int depth) {
  NoiseBlock nb;
  for (const auto& ms : inst.pattern.sets())
    nb.z.emplace_back(depth, std::vector<Vec>(inst.block_length,
                                              Vec(ms.count, inst.field.zero())));
  return nb;
}

inline NoiseBlock random_noise(const SchemeInstance& inst, int depth,
                               noise::Role role, const noise::NoiseTape& tape) {
  NoiseBlock nb = zero_noise(inst, depth);
  for (int m = 1; m <= inst.num_sets(); ++m)
    for (int j = 1; j <= depth; ++j)
      for (int l = 1; l <= inst.block_length; ++l)
        for (int k = 1; k <= inst.pattern.count(m); ++k)
          nb.z[m - 1][j - 1][l - 1][k - 1] =
              tape.element(inst.field, role, m, j, l, k);
  return nb;
}

inline NoiseBlock storage_noise(const SchemeInstance& inst,
                                const noise::NoiseTape& tape) {
  return random_noise(inst, inst.x, noise::Role::StorageNoise, tape);
}

inline NoiseBlock query_noise(const SchemeInstance& inst,
                              const noise::NoiseTape& tape) {
  return random_noise(inst, inst.t, noise::Role::QueryNoise, tape);
}

// ---------------------------------------------------------------------------
// Storage

/// S_n: shares[m][l-1] for every m in M_n.
struct ServerStorage {
  int server = 0;
  std::map<int, std::vector<Vec>> shares;
};

inline std::vector<ServerStorage> encode_storage(const SchemeInstance& inst,
                                                 const MessageStore& messages,
                                                 const NoiseBlock& noise) {
  const auto& p = inst.pattern;
  enforce(static_cast<int>(messages.rows.size()) == p.num_sets(),
          ErrorCode::DimensionMismatch, "message store has wrong set count");
  for (int m = 1; m <= p.num_sets(); ++m) {
    enforce(static_cast<int>(messages.rows[m - 1].size()) == inst.block_length,
            ErrorCode::DimensionMismatch, "message block length");
    for (const auto& row : messages.rows[m - 1])
      enforce(static_cast<int>(row.size()) == p.count(m),
              ErrorCode::DimensionMismatch, "message row length != K_m");
  }
  std::vector<ServerStorage> out;
  for (int n = 1; n <= p.n_servers(); ++n) {
    ServerStorage s{n, {}};
    for (int m : model::server_index(p, n)) {
      std::vector<Vec> blocks;
      for (int l = 1; l <= inst.block_length; ++l) {
        Vec share = messages.rows[m - 1][l - 1];
        const FieldElement base = inst.shifted(l, n);
        FieldElement coef = base;
        for (int x = 1; x <= inst.x; ++x, coef *= base) {
          const Vec& z = noise.z.at(m - 1).at(x - 1).at(l - 1);
          for (std::size_t k = 0; k < share.size(); ++k) share[k] += coef * z[k];
        }
        blocks.push_back(std::move(share));
      }
      s.shares.emplace(m, std::move(blocks));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Demands and queries

struct Retrieve {
  int mu = 1;     // message set
  int kappa = 1;  // message within the set
};

/// Private linear computation: lambda[m-1] has K_m coefficients.
struct Compute {
  std::vector<Vec> lambda;
};

using Demand = std::variant<Retrieve, Compute>;

inline bool compute_mode_available(const SchemeInstance& inst) {
  return inst.x == 0 && inst.pattern.rho_min() == inst.t + 1;
}

/// F_m for every message set.
inline std::vector<Vec> demand_vectors(const SchemeInstance& inst,
                                       const Demand& demand) {
  const auto& p = inst.pattern;
  std::vector<Vec> f;
  for (const auto& ms : p.sets()) f.emplace_back(ms.count, inst.field.zero());
  if (const auto* r = std::get_if<Retrieve>(&demand)) {
    enforce(r->mu >= 1 && r->mu <= p.num_sets(), ErrorCode::InvalidArgument,
            "mu = " + std::to_string(r->mu) + " out of range");
    enforce(r->kappa >= 1 && r->kappa <= p.count(r->mu),
            ErrorCode::InvalidArgument,
            "kappa = " + std::to_string(r->kappa) + " out of range");
    f[r->mu - 1][r->kappa - 1] = inst.field.one();
    return f;
  }
  const auto& c = std::get<Compute>(demand);
  enforce(compute_mode_available(inst), ErrorCode::ComputeModeUnavailable,
          "needs X = 0 and rho_min = T + 1");
  enforce(static_cast<int>(c.lambda.size()) == p.num_sets(),
          ErrorCode::DimensionMismatch, "lambda has wrong set count");
  for (int m = 1; m <= p.num_sets(); ++m) {
    enforce(static_cast<int>(c.lambda[m - 1].size()) == p.count(m),
            ErrorCode::DimensionMismatch, "lambda_m length != K_m");
    FieldElement norm = compute_normalizer(inst, m);
    enforce(!norm.is_zero(), ErrorCode::ZeroNormalizer,
            "message set " + std::to_string(m));
    FieldElement scale = norm.inv();
    for (int k = 0; k < p.count(m); ++k) f[m - 1][k] = scale * c.lambda[m - 1][k];
  }
  return f;
}

/// Q_n: entries[m][l-1] for every m in M_n.
struct Query {
  int server = 0;
  std::map<int, std::vector<Vec>> entries;
};

inline std::vector<Query> gen_queries(const SchemeInstance& inst,
                                      const Demand& demand,
                                      const NoiseBlock& noise) {
  const auto f = demand_vectors(inst, demand);
  const auto& p = inst.pattern;
  std::vector<Query> out;
  for (int n = 1; n <= p.n_servers(); ++n) {
    Query q{n, {}};
    for (int m : model::server_index(p, n)) {
      std::vector<Vec> blocks;
      for (int l = 1; l <= inst.block_length; ++l) {
        const FieldElement base = inst.shifted(l, n);
        Vec entry = f[m - 1];
        FieldElement coef = base;
        for (int t = 1; t <= inst.t; ++t, coef *= base) {
          const Vec& z = noise.z.at(m - 1).at(t - 1).at(l - 1);
          for (std::size_t k = 0; k < entry.size(); ++k) entry[k] += coef * z[k];
        }
        const FieldElement scale = inst.v(m, n) / base;
        for (auto& e : entry) e *= scale;
        blocks.push_back(std::move(entry));
      }
      q.entries.emplace(m, std::move(blocks));
    }
    out.push_back(std::move(q));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Answers and decoding

/// A server's answer depends on nothing but its own storage and query.
inline FieldElement answer(const PrimeField& field, const ServerStorage& storage,
                           const Query& query) {
  enforce(storage.server == query.server, ErrorCode::InvalidArgument,
          "storage of server " + std::to_string(storage.server) +
              " paired with query for " + std::to_string(query.server));
  enforce(storage.shares.size() == query.entries.size(),
          ErrorCode::DimensionMismatch, "query covers different message sets");
  FieldElement acc = field.zero();
  for (const auto& [m, blocks] : storage.shares) {
    auto it = query.entries.find(m);
    enforce(it != query.entries.end(), ErrorCode::DimensionMismatch,
            "query lacks message set " + std::to_string(m));
    enforce(it->second.size() == blocks.size(), ErrorCode::DimensionMismatch,
            "block length");
    for (std::size_t l = 0; l < blocks.size(); ++l)
      acc += ff::dot(blocks[l], it->second[l], field);
  }
  return acc;
}

inline FieldElement answer(const SchemeInstance& inst,
                           const ServerStorage& storage, const Query& query) {
  return answer(inst.field, storage, query);
}

/// Y_i = sum_n beta_n^{i-1} A_n, i = 1..L.
inline Vec project_answers(const SchemeInstance& inst,
                           std::span<const FieldElement> answers) {
  enforce(static_cast<int>(answers.size()) == inst.n_servers(),
          ErrorCode::DimensionMismatch,
          "expected " + std::to_string(inst.n_servers()) + " answers");
  Vec y(inst.block_length, inst.field.zero());
  for (int n = 1; n <= inst.n_servers(); ++n) {
    FieldElement p = inst.field.one();
    for (int i = 0; i < inst.block_length; ++i, p *= inst.beta(n))
      y[i] += p * answers[n - 1];
  }
  return y;
}

/// The L x L matrix AB mapping W_{mu,kappa}(1..L) to (Y_1..Y_L).
inline FieldMatrix decoding_matrix(const SchemeInstance& inst, int mu) {
  const int L = inst.block_length;
  const auto& servers = inst.pattern.servers(mu);
  const std::size_t rho = servers.size();
  std::vector<FieldElement> pts;
  for (int n : servers) pts.push_back(inst.beta(n));
  FieldMatrix a = FieldMatrix::vandermonde(inst.field, pts, L);
  FieldMatrix b(inst.field, rho, L);
  for (std::size_t r = 0; r < rho; ++r)
    for (int l = 1; l <= L; ++l)
      b(r, l - 1) = inst.v(mu, servers[r]) / inst.shifted(l, servers[r]);
  return a * b;
}

inline Vec decode(const SchemeInstance& inst,
                  std::span<const FieldElement> answers, const Retrieve& demand) {
  enforce(demand.mu >= 1 && demand.mu <= inst.num_sets(),
          ErrorCode::InvalidArgument, "mu out of range");
  Vec y = project_answers(inst, answers);
  FieldMatrix ab = decoding_matrix(inst, demand.mu);
  try {
    return ff::solve(ab, y);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Singular)
      throw Error(ErrorCode::SingularDecode,
                  "AB singular for message set " + std::to_string(demand.mu));
    throw;
  }
}

inline FieldElement decode_compute(const SchemeInstance& inst,
                                   std::span<const FieldElement> answers) {
  enforce(compute_mode_available(inst), ErrorCode::ComputeModeUnavailable,
          "needs X = 0 and rho_min = T + 1");
  return project_answers(inst, answers).front();
}

inline Vec plaintext_retrieve(const MessageStore& messages, const Retrieve& r) {
  Vec out;
  for (const auto& block : messages.rows.at(r.mu - 1)) out.push_back(block.at(r.kappa - 1));
  return out;
}

inline FieldElement plaintext_compute(const PrimeField& field,
                                      const MessageStore& messages,
                                      const Compute& c) {
  FieldElement acc = field.zero();
  for (std::size_t m = 0; m < messages.rows.size(); ++m)
    acc += ff::dot(messages.rows[m].front(), c.lambda.at(m), field);
  return acc;
}

/// Any X+1 shares of one symbol determine it; X shares do not. Returns
/// whether the shares held by `servers` pin down W_{m,k}(l): the unit vector
/// on the message coordinate must lie in the row space of the share map
/// (1, s, ..., s^X) with s = l + beta_n.
inline bool shares_determine_symbol(const SchemeInstance& inst, int m, int l,
                                    const std::vector<int>& servers) {
  FieldMatrix rows(inst.field, servers.size(), inst.x + 1);
  for (std::size_t i = 0; i < servers.size(); ++i) {
    enforce(inst.pattern.stores(m, servers[i]), ErrorCode::InvalidArgument,
            "server " + std::to_string(servers[i]) + " holds no share");
    FieldElement s = inst.shifted(l, servers[i]), p = inst.field.one();
    for (int j = 0; j <= inst.x; ++j, p *= s) rows(i, j) = p;
  }
  Vec unit(inst.x + 1, inst.field.zero());
  unit[0] = inst.field.one();
  return servers.empty() ? inst.x + 1 == 0 : ff::in_row_space(rows, unit);
}

/// Recovers W_{m,k}(l) from exactly X+1 shares by solving the share map.
inline FieldElement reconstruct_symbol(const SchemeInstance& inst, int m, int l,
                                       const std::vector<int>& servers,
                                       std::span<const FieldElement> shares) {
  enforce(static_cast<int>(servers.size()) == inst.x + 1 &&
              shares.size() == servers.size(),
          ErrorCode::DimensionMismatch, "need exactly X + 1 shares");
  FieldMatrix a(inst.field, servers.size(), inst.x + 1);
  for (std::size_t i = 0; i < servers.size(); ++i) {
    enforce(inst.pattern.stores(m, servers[i]), ErrorCode::InvalidArgument,
            "server holds no share");
    FieldElement s = inst.shifted(l, servers[i]), p = inst.field.one();
    for (int j = 0; j <= inst.x; ++j, p *= s) a(i, j) = p;
  }
  return ff::solve(a, shares).front();
}

// ---------------------------------------------------------------------------
// Composite scheme for X = 0 and rho_m in {T+1, T+2}
//
// Servers in a stable set U of G[N_{T+2}] are dropped. The message sets that
// become (T+1)-replicated (those touching U plus the originally
// (T+1)-replicated ones) are handed to a virtual genie server, so the outer
// scheme sees uniform (T+2)-replication and retrieves L = 2 symbols. The
// genie's answer is a linear combination of those message symbols; it is
// fetched privately by the linear-computation scheme over N(U) u N_{T+1},
// where each (m, k, l) symbol is its own unit-length inner message.

struct Theorem3Plan {
  StoragePattern pattern;
  int t = 1;
  std::vector<int> stable_set;    // U
  std::vector<int> outer_real;    // [N] \ U, original ids
  std::vector<int> genie_sets;    // message sets in W*
  bool has_genie = false;
  SchemeInstance outer;           // servers 1..|outer_real| (+ genie last)
  std::vector<int> inner_servers; // N(U) u N_{T+1}, original ids
  std::optional<SchemeInstance> inner;

  int genie_id() const { return static_cast<int>(outer_real.size()) + 1; }
  int total_download() const {
    return static_cast<int>(outer_real.size() + inner_servers.size());
  }
};

inline void check_theorem3_preconditions(const StoragePattern& p, int t) {
  enforce(t >= 0, ErrorCode::InvalidArgument, "T must be >= 0");
  for (int m = 1; m <= p.num_sets(); ++m)
    enforce(p.rho(m) == t + 1 || p.rho(m) == t + 2,
            ErrorCode::PreconditionViolated,
            "message set " + std::to_string(m) + " has rho = " +
                std::to_string(p.rho(m)) + ", need T+1 or T+2");
}

inline Theorem3Plan plan_theorem3(const StoragePattern& p, int t,
                                  std::vector<int> stable_set,
                                  std::optional<std::uint64_t> q = {}) {
  check_theorem3_preconditions(p, t);
  std::sort(stable_set.begin(), stable_set.end());
  const auto t2 = model::n_r_set(p, t + 2);
  const auto t1 = model::servers_below(p, t + 2);
  const auto graph = model::build_graph(p);
  for (int u : stable_set)
    enforce(std::binary_search(t2.begin(), t2.end(), u),
            ErrorCode::PreconditionViolated,
            "server " + std::to_string(u) + " is not in N_{T+2}");
  enforce(graph.is_stable(stable_set), ErrorCode::PreconditionViolated,
          "U is not a stable set");

  std::set<int> u_set(stable_set.begin(), stable_set.end());
  std::vector<int> outer_real;
  for (int n = 1; n <= p.n_servers(); ++n)
    if (!u_set.count(n)) outer_real.push_back(n);
  enforce(!outer_real.empty(), ErrorCode::PreconditionViolated,
          "U covers every server");

  std::vector<int> genie_sets;
  for (int m = 1; m <= p.num_sets(); ++m) {
    bool touches_u = false;
    for (int n : p.servers(m)) touches_u = touches_u || u_set.count(n);
    if (touches_u || p.rho(m) == t + 1) genie_sets.push_back(m);
  }
  const bool has_genie = !genie_sets.empty();

  auto relabel = [&](int n) {
    return static_cast<int>(std::lower_bound(outer_real.begin(), outer_real.end(), n) -
                            outer_real.begin()) + 1;
  };
  model::RawPattern outer_raw{static_cast<int>(outer_real.size()) + (has_genie ? 1 : 0), {}};
  for (int m = 1; m <= p.num_sets(); ++m) {
    model::MessageSet ms{p.count(m), {}};
    for (int n : p.servers(m))
      if (!u_set.count(n)) ms.servers.push_back(relabel(n));
    if (std::binary_search(genie_sets.begin(), genie_sets.end(), m))
      ms.servers.push_back(static_cast<int>(outer_real.size()) + 1);
    enforce(static_cast<int>(ms.servers.size()) == t + 2, ErrorCode::PreconditionViolated,
            "message set " + std::to_string(m) + " is not (T+2)-replicated "
            "after adding the genie");
    outer_raw.message_sets.push_back(std::move(ms));
  }
  const auto outer_pattern = model::validate(std::move(outer_raw));

  std::vector<int> inner_servers;
  if (has_genie) {
    std::set<int> s(t1.begin(), t1.end());
    for (int n : graph.neighborhood(stable_set)) s.insert(n);
    inner_servers.assign(s.begin(), s.end());
  }

  std::optional<StoragePattern> inner_pattern;
  if (has_genie) {
    auto inner_relabel = [&](int n) {
      return static_cast<int>(std::lower_bound(inner_servers.begin(), inner_servers.end(), n) -
                              inner_servers.begin()) + 1;
    };
    model::RawPattern inner_raw{static_cast<int>(inner_servers.size()), {}};
    for (int m : genie_sets) {
      model::MessageSet ms{2 * p.count(m), {}};
      for (int n : p.servers(m)) {
        if (u_set.count(n)) continue;
        enforce(std::binary_search(inner_servers.begin(), inner_servers.end(), n),
                ErrorCode::PreconditionViolated, "genie message outside N(U) u N_{T+1}");
        ms.servers.push_back(inner_relabel(n));
      }
      inner_raw.message_sets.push_back(std::move(ms));
    }
    inner_pattern = model::validate(std::move(inner_raw));
  }

  // Both schemes share one field, large enough for either.
  if (!q) {
    int floor = outer_pattern.n_servers() + 2;
    if (inner_pattern) floor = std::max(floor, inner_pattern->n_servers() + 1);
    q = ff::next_prime_above(static_cast<std::uint64_t>(floor));
  }
  auto outer = build_instance(outer_pattern, 0, t, q);
  std::optional<SchemeInstance> inner;
  if (inner_pattern) inner = build_instance(*inner_pattern, 0, t, q);
  return Theorem3Plan{p, t, std::move(stable_set), std::move(outer_real),
                      std::move(genie_sets), has_genie, std::move(outer),
                      std::move(inner_servers), std::move(inner)};
}

/// Outer-scheme storage for the real servers (genie excluded), indexed like
/// outer_real. X = 0, so shares are the plaintext rows.
inline std::vector<ServerStorage> theorem3_outer_storage(const Theorem3Plan& plan,
                                                         const MessageStore& messages) {
  auto all = encode_storage(plan.outer, messages, zero_noise(plan.outer, 0));
  if (plan.has_genie) all.pop_back();
  return all;
}

/// The inner pseudo-message store: set i (i-th genie set m) holds 2 K_m
/// unit-length messages, W_{m,k}(l) at index (l-1) K_m + k.
inline MessageStore theorem3_inner_messages(const Theorem3Plan& plan,
                                            const MessageStore& messages) {
  MessageStore s;
  for (int m : plan.genie_sets) {
    const int k_m = plan.pattern.count(m);
    Vec flat(2 * k_m);
    for (int l = 1; l <= 2; ++l)
      for (int k = 1; k <= k_m; ++k) flat[(l - 1) * k_m + k - 1] = messages.symbol(m, k, l);
    s.rows.push_back({std::move(flat)});
  }
  return s;
}

inline std::vector<ServerStorage> theorem3_inner_storage(const Theorem3Plan& plan,
                                                         const MessageStore& messages) {
  return encode_storage(*plan.inner, theorem3_inner_messages(plan, messages),
                        zero_noise(*plan.inner, 0));
}

/// Combining coefficients of the genie's answer, laid out as inner lambda.
inline Compute genie_lambda(const Theorem3Plan& plan, const Query& genie_query) {
  Compute c;
  for (int m : plan.genie_sets) {
    const int k_m = plan.pattern.count(m);
    const auto& blocks = genie_query.entries.at(m);
    Vec flat(2 * k_m);
    for (int l = 1; l <= 2; ++l)
      for (int k = 1; k <= k_m; ++k) flat[(l - 1) * k_m + k - 1] = blocks[l - 1][k - 1];
    c.lambda.push_back(std::move(flat));
  }
  return c;
}

struct Theorem3Queries {
  std::vector<Query> outer;  // real servers only, aligned with outer_real
  std::optional<Query> genie;
  std::vector<Query> inner;  // aligned with inner_servers
};

inline Theorem3Queries theorem3_queries(const Theorem3Plan& plan, const Retrieve& demand,
                                        const noise::NoiseTape& tape) {
  Theorem3Queries out;
  out.outer = gen_queries(plan.outer, demand, query_noise(plan.outer, tape));
  if (plan.has_genie) {
    out.genie = std::move(out.outer.back());
    out.outer.pop_back();
    // Inner noise is drawn from a sub-stream distinct from the outer one.
    noise::NoiseTape inner_tape(noise::splitmix64(tape.seed() ^ 0x6a09e667f3bcc909ULL));
    out.inner = gen_queries(*plan.inner, genie_lambda(plan, *out.genie),
                            query_noise(*plan.inner, inner_tape));
  }
  return out;
}

/// Reassembles the outer answers (adding the genie's symbol recovered by the
/// inner computation) and decodes the 2 desired symbols.
inline Vec theorem3_decode(const Theorem3Plan& plan,
                           std::span<const FieldElement> outer_answers,
                           std::span<const FieldElement> inner_answers,
                           const Retrieve& demand) {
  Vec all(outer_answers.begin(), outer_answers.end());
  if (plan.has_genie) all.push_back(decode_compute(*plan.inner, inner_answers));
  return decode(plan.outer, all, demand);
}

struct Theorem3Transcript {
  std::vector<int> stable_set;
  std::vector<int> outer_servers;  // original ids
  std::vector<int> inner_servers;  // original ids
  int downloads = 0;
  Vec decoded;
  Vec expected;
};

inline Theorem3Transcript theorem3_retrieve(const StoragePattern& p, int t,
                                            const Retrieve& demand,
                                            std::uint64_t seed,
                                            std::optional<std::vector<int>> stable_set = {},
                                            std::optional<std::uint64_t> q = {}) {
  check_theorem3_preconditions(p, t);
  if (!stable_set) stable_set = capacity::theorem3_certificate(p, t).stable_set;
  const auto plan = plan_theorem3(p, t, std::move(*stable_set), q);
  const noise::NoiseTape tape(seed);
  const auto messages = random_messages(plan.outer.field, p, 2, tape);
  const auto outer_store = theorem3_outer_storage(plan, messages);
  const auto queries = theorem3_queries(plan, demand, tape);
  Vec outer_answers, inner_answers;
  for (std::size_t i = 0; i < outer_store.size(); ++i)
    outer_answers.push_back(answer(plan.outer, outer_store[i], queries.outer[i]));
  if (plan.has_genie) {
    const auto inner_store = theorem3_inner_storage(plan, messages);
    for (std::size_t i = 0; i < inner_store.size(); ++i)
      inner_answers.push_back(answer(*plan.inner, inner_store[i], queries.inner[i]));
  }
  return Theorem3Transcript{plan.stable_set, plan.outer_real, plan.inner_servers,
                            plan.total_download(),
                            theorem3_decode(plan, outer_answers, inner_answers, demand),
                            plaintext_retrieve(messages, demand)};
}

}  // namespace gxstpir::scheme
