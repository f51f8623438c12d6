#pragma once

// Checkers for the three guarantees of a scheme instance: the user decodes
// what it asked for, any T servers see a demand-independent query view, and
// any X servers see a message-independent share view.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gxstpir/error.hpp"
#include "gxstpir/ff.hpp"
#include "gxstpir/model.hpp"
#include "gxstpir/noise.hpp"
#include "gxstpir/scheme.hpp"

namespace gxstpir::verify {

using ff::FieldElement;
using scheme::Demand;
using scheme::NoiseBlock;
using scheme::Query;
using scheme::SchemeInstance;
using scheme::Vec;

struct EnumerationBudget {
  std::uint64_t max_states = 10'000'000;
};

/// Observed tuple -> number of randomness states producing it.
using DistributionTable = std::map<std::vector<std::uint32_t>, std::uint64_t>;

/// q^dims, or nullopt if it exceeds `cap`.
inline std::optional<std::uint64_t> bounded_power(std::uint64_t q, std::uint64_t dims,
                                                  std::uint64_t cap) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < dims; ++i) {
    if (r > cap / q) return std::nullopt;
    r *= q;
  }
  return r <= cap ? std::optional(r) : std::nullopt;
}

namespace detail {

inline std::string power_string(std::uint64_t q, std::uint64_t dims) {
  return std::to_string(q) + "^" + std::to_string(dims);
}

/// Message sets with a server in `servers`.
inline std::vector<int> touched_sets(const model::StoragePattern& p,
                                     const std::vector<int>& servers) {
  std::vector<int> out;
  for (int m = 1; m <= p.num_sets(); ++m)
    for (int n : servers)
      if (p.stores(m, n)) {
        out.push_back(m);
        break;
      }
  return out;
}

inline std::vector<int> checked_colluders(const SchemeInstance& inst,
                                          std::vector<int> colluders) {
  std::sort(colluders.begin(), colluders.end());
  for (std::size_t i = 0; i < colluders.size(); ++i) {
    enforce(colluders[i] >= 1 && colluders[i] <= inst.n_servers(),
            ErrorCode::ServerOutOfRange,
            "colluder " + std::to_string(colluders[i]) + " out of range");
    enforce(i == 0 || colluders[i] != colluders[i - 1], ErrorCode::DuplicateServer,
            "colluder " + std::to_string(colluders[i]) + " listed twice");
  }
  return colluders;
}

/// Pointers to every noise coordinate belonging to the given message sets,
/// in (m, j, l, k) order.
inline std::vector<FieldElement*> noise_slots(NoiseBlock& nb, const std::vector<int>& sets) {
  std::vector<FieldElement*> out;
  for (int m : sets)
    for (auto& per_j : nb.z[m - 1])
      for (auto& per_l : per_j)
        for (auto& e : per_l) out.push_back(&e);
  return out;
}

/// Visits every assignment of F_q values to `slots` (odometer order).
template <typename Fn>
void enumerate(const ff::PrimeField& field, const std::vector<FieldElement*>& slots,
               Fn&& fn) {
  std::vector<std::uint32_t> digits(slots.size(), 0);
  for (auto* s : slots) *s = field.zero();
  while (true) {
    fn();
    std::size_t i = 0;
    for (; i < slots.size(); ++i) {
      if (++digits[i] < field.modulus()) {
        *slots[i] = FieldElement(field, digits[i]);
        break;
      }
      digits[i] = 0;
      *slots[i] = field.zero();
    }
    if (i == slots.size()) return;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Correctness

using AnswerTamper = std::function<void(std::vector<FieldElement>& answers)>;

struct CorrectnessOptions {
  int trials = 100;
  std::uint64_t seed = 1;
  bool compute = false;  // use Compute demands (instance must allow it)
  AnswerTamper tamper;   // fault injection between answering and decoding
};

struct CorrectnessFailure {
  int trial = 0;
  std::uint64_t tape_seed = 0;
  std::string demand;
  Vec decoded;
  Vec expected;
};

struct CorrectnessReport {
  int trials = 0;
  int passed = 0;
  std::vector<CorrectnessFailure> failures;

  bool ok() const { return passed == trials; }
};

inline CorrectnessReport verify_correctness(const SchemeInstance& inst,
                                            const CorrectnessOptions& opt = {}) {
  const auto& p = inst.pattern;
  CorrectnessReport report;
  report.trials = opt.trials;
  for (int trial = 0; trial < opt.trials; ++trial) {
    const std::uint64_t tape_seed = noise::splitmix64(opt.seed + trial);
    const noise::NoiseTape tape(tape_seed);
    const auto messages = scheme::random_messages(inst.field, p, inst.block_length, tape);
    const auto storage =
        scheme::encode_storage(inst, messages, scheme::storage_noise(inst, tape));
    Demand demand;
    std::string label;
    if (opt.compute) {
      scheme::Compute c;
      for (int m = 1; m <= p.num_sets(); ++m) {
        Vec lam;
        for (int k = 1; k <= p.count(m); ++k)
          lam.push_back(tape.element(inst.field, noise::Role::Lambda, m, k));
        c.lambda.push_back(std::move(lam));
      }
      demand = c;
      label = "compute";
    } else {
      scheme::Retrieve r;
      r.mu = 1 + static_cast<int>(tape.uniform(p.num_sets(), noise::Role::Demand, 1));
      r.kappa = 1 + static_cast<int>(tape.uniform(p.count(r.mu), noise::Role::Demand, 2));
      demand = r;
      label = "retrieve(" + std::to_string(r.mu) + "," + std::to_string(r.kappa) + ")";
    }
    const auto queries =
        scheme::gen_queries(inst, demand, scheme::query_noise(inst, tape));
    std::vector<FieldElement> answers;
    for (int n = 1; n <= inst.n_servers(); ++n)
      answers.push_back(scheme::answer(inst, storage[n - 1], queries[n - 1]));
    if (opt.tamper) opt.tamper(answers);

    Vec decoded, expected;
    if (const auto* r = std::get_if<scheme::Retrieve>(&demand)) {
      decoded = scheme::decode(inst, answers, *r);
      expected = scheme::plaintext_retrieve(messages, *r);
    } else {
      decoded = {scheme::decode_compute(inst, answers)};
      expected = {scheme::plaintext_compute(inst.field, messages,
                                            std::get<scheme::Compute>(demand))};
    }
    if (decoded == expected)
      ++report.passed;
    else
      report.failures.push_back({trial, tape_seed, label, decoded, expected});
  }
  return report;
}

// ---------------------------------------------------------------------------
// T-privacy

using QueryGenerator = std::function<std::vector<Query>(
    const SchemeInstance&, const Demand&, const NoiseBlock&)>;

inline std::vector<Query> honest_queries(const SchemeInstance& inst, const Demand& d,
                                         const NoiseBlock& z) {
  return scheme::gen_queries(inst, d, z);
}

/// Colluders' joint view in (server, m, l, k) order.
inline std::vector<std::uint32_t> query_view(const std::vector<Query>& queries,
                                             const std::vector<int>& colluders) {
  std::vector<std::uint32_t> key;
  for (int n : colluders)
    for (const auto& [m, blocks] : queries.at(n - 1).entries)
      for (const auto& block : blocks)
        for (const auto& e : block) key.push_back(e.value());
  return key;
}

struct PrivacyReport {
  bool is_private = true;
  std::vector<int> colluders;
  std::uint64_t states_per_demand = 0;
  std::vector<scheme::Retrieve> demands;
  std::vector<DistributionTable> tables;  // aligned with demands
  std::optional<std::pair<scheme::Retrieve, scheme::Retrieve>> witness;
};

/// Required number of query-noise states per demand.
inline std::uint64_t privacy_dims(const SchemeInstance& inst,
                                  const std::vector<int>& colluders) {
  std::uint64_t dims = 0;
  for (int m : detail::touched_sets(inst.pattern, colluders))
    dims += static_cast<std::uint64_t>(inst.pattern.count(m)) * inst.t * inst.block_length;
  return dims;
}

inline PrivacyReport verify_privacy_exhaustive(const SchemeInstance& inst,
                                               std::vector<int> colluders,
                                               EnumerationBudget budget = {},
                                               QueryGenerator gen = honest_queries) {
  PrivacyReport report;
  report.colluders = detail::checked_colluders(inst, std::move(colluders));
  const auto& p = inst.pattern;
  for (int m = 1; m <= p.num_sets(); ++m)
    for (int k = 1; k <= p.count(m); ++k) report.demands.push_back({m, k});
  if (report.colluders.empty()) {
    report.states_per_demand = 1;
    return report;
  }
  const auto sets = detail::touched_sets(p, report.colluders);
  const std::uint64_t dims = privacy_dims(inst, report.colluders);
  const auto states = bounded_power(inst.field.modulus(), dims, budget.max_states);
  enforce(states.has_value(), ErrorCode::BudgetExceeded,
          "privacy enumeration needs " + detail::power_string(inst.field.modulus(), dims) +
              " states per demand, budget " + std::to_string(budget.max_states));
  report.states_per_demand = *states;

  for (const auto& d : report.demands) {
    NoiseBlock z = scheme::zero_noise(inst, inst.t);
    const auto slots = detail::noise_slots(z, sets);
    DistributionTable table;
    detail::enumerate(inst.field, slots, [&] {
      ++table[query_view(gen(inst, d, z), report.colluders)];
    });
    report.tables.push_back(std::move(table));
  }
  for (std::size_t i = 1; i < report.tables.size(); ++i)
    if (report.tables[i] != report.tables[0]) {
      report.is_private = false;
      report.witness = std::pair(report.demands[0], report.demands[i]);
      break;
    }
  return report;
}

struct StructuralFailure {
  int m = 0;
  int l = 0;
  std::vector<int> servers;
};

/// For every m, l and T-subset S of R_m, the T x T matrix
/// [v_{m,n} (l + beta_n)^{t-1}]_{n in S, t in [T]} must be invertible.
inline std::vector<StructuralFailure> privacy_structural_failures(const SchemeInstance& inst) {
  enforce(inst.t >= 1, ErrorCode::PreconditionViolated, "structural check needs T >= 1");
  std::vector<StructuralFailure> out;
  for (int m = 1; m <= inst.num_sets(); ++m)
    for (int l = 1; l <= inst.block_length; ++l)
      model::for_each_combination(
          inst.pattern.servers(m), inst.t, [&](const std::vector<int>& s) {
            ff::FieldMatrix a(inst.field, s.size(), inst.t);
            for (std::size_t i = 0; i < s.size(); ++i) {
              FieldElement e = inst.v(m, s[i]);
              const FieldElement base = inst.shifted(l, s[i]);
              for (int t = 0; t < inst.t; ++t, e *= base) a(i, t) = e;
            }
            if (ff::mat_rank(a) < static_cast<std::size_t>(inst.t))
              out.push_back({m, l, s});
          });
  return out;
}

inline bool verify_privacy_structural(const SchemeInstance& inst) {
  return privacy_structural_failures(inst).empty();
}

// ---------------------------------------------------------------------------
// X-security

inline std::vector<std::uint32_t> share_view(const std::vector<scheme::ServerStorage>& storage,
                                             const std::vector<int>& colluders) {
  std::vector<std::uint32_t> key;
  for (int n : colluders)
    for (const auto& [m, blocks] : storage.at(n - 1).shares)
      for (const auto& block : blocks)
        for (const auto& e : block) key.push_back(e.value());
  return key;
}

struct SecurityReport {
  bool secure = true;         // tables identical across message realizations
  bool uniform = true;        // every table is uniform over its full range
  bool partial_grid = false;  // message grid was not exhaustive
  std::vector<int> colluders;
  std::uint64_t states_per_message = 0;
  std::uint64_t message_realizations = 0;
  std::uint64_t view_dims = 0;
  std::vector<DistributionTable> tables;
};

inline SecurityReport verify_security_exhaustive(const SchemeInstance& inst,
                                                 std::vector<int> colluders,
                                                 EnumerationBudget budget = {},
                                                 std::uint64_t grid_seed = 1) {
  enforce(inst.x >= 1, ErrorCode::PreconditionViolated,
          "X = 0: no security is claimed, nothing to verify");
  SecurityReport report;
  report.colluders = detail::checked_colluders(inst, std::move(colluders));
  const auto& p = inst.pattern;
  const auto sets = detail::touched_sets(p, report.colluders);
  const std::uint64_t q = inst.field.modulus();

  std::uint64_t msg_dims = 0;
  for (int m : sets) msg_dims += static_cast<std::uint64_t>(p.count(m)) * inst.block_length;
  const std::uint64_t noise_dims = msg_dims * inst.x;
  for (int n : report.colluders)
    for (int m : model::server_index(p, n))
      report.view_dims += static_cast<std::uint64_t>(p.count(m)) * inst.block_length;

  const auto states = bounded_power(q, noise_dims, budget.max_states);
  enforce(states.has_value(), ErrorCode::BudgetExceeded,
          "security enumeration needs " + detail::power_string(q, noise_dims) +
              " noise states, budget " + std::to_string(budget.max_states));
  report.states_per_message = *states;

  auto messages = scheme::zero_messages(inst.field, p, inst.block_length);
  std::vector<FieldElement*> msg_slots;
  for (int m : sets)
    for (auto& row : messages.rows[m - 1])
      for (auto& e : row) msg_slots.push_back(&e);

  auto run_one = [&] {
    NoiseBlock z = scheme::zero_noise(inst, inst.x);
    const auto slots = detail::noise_slots(z, sets);
    DistributionTable table;
    detail::enumerate(inst.field, slots, [&] {
      ++table[share_view(scheme::encode_storage(inst, messages, z), report.colluders)];
    });
    report.tables.push_back(std::move(table));
  };

  const auto full = bounded_power(q, msg_dims + noise_dims, budget.max_states);
  if (full) {
    detail::enumerate(inst.field, msg_slots, run_one);
  } else {
    report.partial_grid = true;
    for (auto* s : msg_slots) *s = inst.field.zero();
    run_one();
    for (auto* s : msg_slots) *s = inst.field.one();
    run_one();
    const noise::NoiseTape tape(grid_seed);
    for (std::uint64_t r = 0; r < 8; ++r) {
      for (std::size_t i = 0; i < msg_slots.size(); ++i)
        *msg_slots[i] = tape.element(inst.field, noise::Role::Message, r, i);
      run_one();
    }
  }
  report.message_realizations = report.tables.size();

  const auto range = bounded_power(q, report.view_dims, ~std::uint64_t{0});
  for (const auto& t : report.tables) {
    if (t != report.tables.front()) report.secure = false;
    bool flat = range && t.size() == *range;
    for (const auto& [key, count] : t) flat = flat && count == t.begin()->second;
    report.uniform = report.uniform && flat;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Interference rank

/// N x M matrix with v_{m,n} at (n, m) for n in R_m, 0 elsewhere.
inline ff::FieldMatrix interference_matrix(const SchemeInstance& inst) {
  ff::FieldMatrix v(inst.field, inst.n_servers(), inst.num_sets());
  for (int m = 1; m <= inst.num_sets(); ++m)
    for (int n : inst.pattern.servers(m)) v(n - 1, m - 1) = inst.v(m, n);
  return v;
}

struct RankReport {
  std::size_t rank = 0;
  std::size_t bound = 0;     // N - (rho_min - 1)
  bool annihilated = true;   // beta^0..beta^{rho_min - 2} rows kill V
};

/// Builds the X = 0, T = 1 instance of a constant-replication pattern and
/// checks that its interference occupies at most N - (rho - 1) dimensions.
inline RankReport rank_intuition(const model::StoragePattern& pattern,
                                 std::optional<std::uint64_t> q = {}) {
  const int rho = pattern.rho_min();
  for (int m = 1; m <= pattern.num_sets(); ++m)
    enforce(pattern.rho(m) == rho, ErrorCode::PreconditionViolated,
            "replication is not constant");
  RankReport r;
  const int n = pattern.n_servers();
  if (rho < 2) {
    // No annihilating rows are claimed; the rank bound is trivial.
    r.bound = static_cast<std::size_t>(n);
    ff::PrimeField field = grscoef::choose_field(n, 1, q);
    ff::FieldMatrix v(field, n, pattern.num_sets());
    for (int m = 1; m <= pattern.num_sets(); ++m)
      for (int s : pattern.servers(m)) v(s - 1, m - 1) = field.one();
    r.rank = ff::mat_rank(v);
    return r;
  }
  const auto inst = scheme::build_instance(pattern, 0, 1, q);
  const auto v = interference_matrix(inst);
  r.rank = ff::mat_rank(v);
  r.bound = static_cast<std::size_t>(n - (rho - 1));
  std::vector<FieldElement> pts;
  for (int s = 1; s <= n; ++s) pts.push_back(inst.beta(s));
  const auto vander = ff::FieldMatrix::vandermonde(inst.field, pts, rho - 1);
  r.annihilated = (vander * v).is_zero();
  return r;
}

inline bool verify_rank_intuition(const model::StoragePattern& pattern,
                                  std::optional<std::uint64_t> q = {}) {
  const auto r = rank_intuition(pattern, q);
  return r.annihilated && r.rank <= r.bound;
}

}  // namespace gxstpir::verify
