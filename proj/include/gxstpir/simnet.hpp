#pragma once

// In-process session harness. Each server is an actor that owns only its
// storage S_n and an inbox; the user actor sends every server its own query
// and collects the answers from a shared outbox. Everything a server ever
// sees is recorded so tests can check the isolation contract.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gxstpir/capacity.hpp"
#include "gxstpir/error.hpp"
#include "gxstpir/json_io.hpp"
#include "gxstpir/model.hpp"
#include "gxstpir/noise.hpp"
#include "gxstpir/rational.hpp"
#include "gxstpir/scheme.hpp"

namespace gxstpir::simnet {

using nlohmann::json;
using ff::FieldElement;

enum class Mode { Retrieve, Compute, Theorem3 };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Retrieve: return "retrieve";
    case Mode::Compute: return "compute";
    case Mode::Theorem3: return "theorem3";
  }
  return "unknown";
}

inline Mode parse_mode(const std::string& s, const std::string& path) {
  if (s == "retrieve") return Mode::Retrieve;
  if (s == "compute") return Mode::Compute;
  if (s == "theorem3") return Mode::Theorem3;
  throw Error(ErrorCode::Parse, path + ": unknown mode '" + s + "'");
}

struct SessionConfig {
  model::StoragePattern pattern;
  int x = 0;
  int t = 1;
  std::optional<std::uint64_t> q;
  std::uint64_t seed = 1;
  Mode mode = Mode::Retrieve;
  scheme::Retrieve retrieve;  // used by retrieve and theorem3 modes
  std::optional<std::vector<std::vector<std::int64_t>>> lambda;  // compute mode
  std::optional<std::vector<int>> stable_set;                    // theorem3 mode
  bool threaded = true;
};

/// Config document:
///   { "pattern": {...} | "pattern_path": "rel/or/abs.json",
///     "x", "t", "q" (override the pattern document), "seed",
///     "mode": "retrieve" | "compute" | "theorem3",
///     "demand": { "mu", "kappa" }, "lambda": [[...], ...],
///     "stable_set": [...], "threaded": true }
inline SessionConfig parse_session_config(const json& j,
                                          const std::filesystem::path& base_dir = ".") {
  using namespace json_io;
  enforce(j.is_object(), ErrorCode::Parse, "$: expected an object");
  PatternDoc doc;
  if (auto it = j.find("pattern"); it != j.end()) {
    doc = parse_pattern_doc(*it, "$.pattern");
  } else {
    const auto& rel = member(j, "pattern_path", "$");
    enforce(rel.is_string(), ErrorCode::Parse, "$.pattern_path: expected a string");
    std::filesystem::path p(rel.get<std::string>());
    doc = load_pattern(p.is_absolute() ? p : base_dir / p);
  }
  SessionConfig c;
  c.pattern = doc.pattern;
  c.x = optional_int(j, "x", doc.x, "$");
  c.t = optional_int(j, "t", doc.t, "$");
  c.q = doc.q;
  if (auto it = j.find("q"); it != j.end() && !it->is_null()) c.q = as_uint64(*it, "$.q");
  if (auto it = j.find("seed"); it != j.end()) c.seed = as_uint64(*it, "$.seed");
  if (auto it = j.find("mode"); it != j.end()) {
    enforce(it->is_string(), ErrorCode::Parse, "$.mode: expected a string");
    c.mode = parse_mode(it->get<std::string>(), "$.mode");
  }
  if (auto it = j.find("demand"); it != j.end()) {
    c.retrieve.mu = optional_int(*it, "mu", 1, "$.demand");
    c.retrieve.kappa = optional_int(*it, "kappa", 1, "$.demand");
  }
  if (auto it = j.find("lambda"); it != j.end()) {
    enforce(it->is_array(), ErrorCode::Parse, "$.lambda: expected an array");
    std::vector<std::vector<std::int64_t>> lam;
    for (std::size_t m = 0; m < it->size(); ++m) {
      const std::string p = "$.lambda[" + std::to_string(m) + "]";
      enforce((*it)[m].is_array(), ErrorCode::Parse, p + ": expected an array");
      std::vector<std::int64_t> row;
      for (std::size_t k = 0; k < (*it)[m].size(); ++k)
        row.push_back(as_int((*it)[m][k], p + "[" + std::to_string(k) + "]"));
      lam.push_back(std::move(row));
    }
    c.lambda = std::move(lam);
  }
  if (auto it = j.find("stable_set"); it != j.end())
    c.stable_set = as_int_list(*it, "$.stable_set");
  if (auto it = j.find("threaded"); it != j.end()) {
    enforce(it->is_boolean(), ErrorCode::Parse, "$.threaded: expected a boolean");
    c.threaded = it->get<bool>();
  }
  return c;
}

inline SessionConfig load_session_config(const std::filesystem::path& file) {
  return parse_session_config(json_io::read_json_file(file), file.parent_path());
}

// ---------------------------------------------------------------------------
// Actors

template <typename T>
class Channel {
 public:
  void send(T msg) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(msg));
    }
    cv_.notify_one();
  }

  T receive() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty(); });
    T msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> queue_;
};

/// A query addressed to one server. `facet` names which sub-protocol it
/// belongs to ("main", or "outer"/"inner" for the composite scheme).
struct QueryMsg {
  std::string facet;
  scheme::Query query;
};

struct AnswerMsg {
  int server = 0;  // physical server id
  std::string facet;
  FieldElement value;
  std::exception_ptr error;  // set when the server could not answer
};

inline json vec_to_json(const scheme::Vec& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(e.value());
  return out;
}

inline json storage_to_json(const scheme::ServerStorage& s) {
  json sets = json::array();
  for (const auto& [m, blocks] : s.shares) {
    json b = json::array();
    for (const auto& blk : blocks) b.push_back(vec_to_json(blk));
    sets.push_back({{"m", m}, {"blocks", b}});
  }
  return {{"server", s.server}, {"shares", sets}};
}

inline json query_to_json(const scheme::Query& q) {
  json sets = json::array();
  for (const auto& [m, blocks] : q.entries) {
    json b = json::array();
    for (const auto& blk : blocks) b.push_back(vec_to_json(blk));
    sets.push_back({{"m", m}, {"blocks", b}});
  }
  return {{"server", q.server}, {"entries", sets}};
}

class ServerActor {
 public:
  /// `facets` are views of this server's own storage S_n, one per
  /// sub-protocol, each labelled with the server id that sub-protocol uses.
  ServerActor(int id, ff::PrimeField field,
              std::map<std::string, scheme::ServerStorage> facets,
              Channel<AnswerMsg>& outbox)
      : id_(id), field_(field), facets_(std::move(facets)), outbox_(&outbox) {}

  int id() const { return id_; }
  Channel<QueryMsg>& inbox() { return inbox_; }
  const std::vector<json>& observed() const { return observed_; }

  /// Answers `count` queries, then returns.
  void serve(std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      QueryMsg msg = inbox_.receive();
      AnswerMsg reply{id_, msg.facet, field_.zero(), nullptr};
      try {
        const auto& storage = facets_.at(msg.facet);
        observed_.push_back({{"facet", msg.facet},
                             {"storage", storage_to_json(storage)},
                             {"query", query_to_json(msg.query)}});
        reply.value = scheme::answer(field_, storage, msg.query);
      } catch (...) {
        reply.error = std::current_exception();
      }
      outbox_->send(std::move(reply));
    }
  }

 private:
  int id_;
  ff::PrimeField field_;
  std::map<std::string, scheme::ServerStorage> facets_;
  Channel<QueryMsg> inbox_;
  Channel<AnswerMsg>* outbox_;
  std::vector<json> observed_;
};

struct Dispatch {
  int server = 0;  // physical id
  QueryMsg msg;
};

/// Runs the actors over the given dispatch list and returns the answers
/// keyed by (facet, physical server). Threaded and sequential scheduling give
/// identical results because answers are collected into an ordered map.
inline std::map<std::pair<std::string, int>, FieldElement> exchange(
    std::vector<std::unique_ptr<ServerActor>>& actors, Channel<AnswerMsg>& outbox,
    const std::vector<Dispatch>& dispatches, bool threaded) {
  std::map<int, ServerActor*> by_id;
  std::map<int, std::size_t> load;
  for (auto& a : actors) by_id[a->id()] = a.get();
  for (const auto& d : dispatches) ++load[d.server];

  std::vector<std::thread> threads;
  if (threaded)
    for (auto& [id, n] : load) threads.emplace_back([a = by_id.at(id), n = n] { a->serve(n); });
  for (const auto& d : dispatches) by_id.at(d.server)->inbox().send(d.msg);
  if (!threaded)
    for (auto& [id, n] : load) by_id.at(id)->serve(n);

  std::map<std::pair<std::string, int>, FieldElement> answers;
  std::exception_ptr first_error;
  for (std::size_t i = 0; i < dispatches.size(); ++i) {
    AnswerMsg a = outbox.receive();
    if (a.error && !first_error) first_error = a.error;
    answers.emplace(std::pair(a.facet, a.server), a.value);
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return answers;
}

// ---------------------------------------------------------------------------
// Sessions

struct SessionReport {
  Mode mode = Mode::Retrieve;
  std::vector<std::uint32_t> decoded;
  std::vector<std::uint32_t> expected;
  bool correct = false;
  std::vector<int> downloads;  // per physical server, index n - 1
  int total_download = 0;
  Rational rate;
  std::string transcript_hash;
  json transcript;
  double elapsed_ms = 0;
  std::vector<std::vector<json>> observed;  // per physical server
};

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

inline std::vector<std::uint32_t> values(const scheme::Vec& v) {
  std::vector<std::uint32_t> out;
  for (const auto& e : v) out.push_back(e.value());
  return out;
}

inline json instance_params(const scheme::SchemeInstance& inst) {
  json beta = json::array();
  for (int n = 1; n <= inst.n_servers(); ++n) beta.push_back(inst.beta(n).value());
  return {{"n_servers", inst.n_servers()}, {"x", inst.x}, {"t", inst.t},
          {"q", inst.field.modulus()}, {"L", inst.block_length}, {"beta", beta}};
}

namespace detail {

inline scheme::Compute lambda_from(const SessionConfig& c, const scheme::SchemeInstance& inst,
                                   const noise::NoiseTape& tape) {
  scheme::Compute comp;
  const auto& p = inst.pattern;
  if (c.lambda) {
    enforce(static_cast<int>(c.lambda->size()) == p.num_sets(), ErrorCode::DimensionMismatch,
            "lambda needs one row per message set");
    for (int m = 1; m <= p.num_sets(); ++m) {
      const auto& row = (*c.lambda)[m - 1];
      enforce(static_cast<int>(row.size()) == p.count(m), ErrorCode::DimensionMismatch,
              "lambda row " + std::to_string(m) + " needs K_m entries");
      scheme::Vec v;
      for (auto e : row) v.push_back(inst.field.elem(e));
      comp.lambda.push_back(std::move(v));
    }
  } else {
    for (int m = 1; m <= p.num_sets(); ++m) {
      scheme::Vec v;
      for (int k = 1; k <= p.count(m); ++k)
        v.push_back(tape.element(inst.field, noise::Role::Lambda, m, k));
      comp.lambda.push_back(std::move(v));
    }
  }
  return comp;
}

}  // namespace detail

inline SessionReport run_session(const SessionConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto& p = c.pattern;
  const noise::NoiseTape tape(c.seed);
  SessionReport r;
  r.mode = c.mode;
  r.downloads.assign(p.n_servers(), 0);
  Channel<AnswerMsg> outbox;
  std::vector<std::unique_ptr<ServerActor>> actors;
  std::vector<Dispatch> dispatches;
  json transcript{{"seed", c.seed}, {"mode", to_string(c.mode)}};
  std::map<std::pair<std::string, int>, FieldElement> answers;
  int decoded_symbols = 0;

  if (c.mode == Mode::Theorem3) {
    enforce(c.x == 0, ErrorCode::PreconditionViolated, "theorem3 mode requires X = 0");
    scheme::check_theorem3_preconditions(p, c.t);
    const auto u = c.stable_set ? *c.stable_set
                                : capacity::theorem3_certificate(p, c.t).stable_set;
    const auto plan = scheme::plan_theorem3(p, c.t, u, c.q);
    const auto& field = plan.outer.field;
    const auto messages = scheme::random_messages(field, p, 2, tape);
    const auto queries = scheme::theorem3_queries(plan, c.retrieve, tape);

    std::map<int, int> outer_id, inner_id;
    for (std::size_t i = 0; i < plan.outer_real.size(); ++i)
      outer_id[plan.outer_real[i]] = static_cast<int>(i) + 1;
    for (std::size_t i = 0; i < plan.inner_servers.size(); ++i)
      inner_id[plan.inner_servers[i]] = static_cast<int>(i) + 1;

    for (int n = 1; n <= p.n_servers(); ++n) {
      // S_n: the plaintext rows of every message set the server stores.
      std::map<int, std::vector<scheme::Vec>> own;
      for (int m : model::server_index(p, n)) own[m] = messages.rows[m - 1];
      std::map<std::string, scheme::ServerStorage> facets;
      if (outer_id.count(n)) facets["outer"] = {outer_id[n], own};
      if (inner_id.count(n)) {
        scheme::ServerStorage s{inner_id[n], {}};
        for (std::size_t i = 0; i < plan.genie_sets.size(); ++i) {
          const int m = plan.genie_sets[i];
          auto it = own.find(m);
          if (it == own.end()) continue;
          const int k_m = p.count(m);
          scheme::Vec flat(2 * k_m);
          for (int l = 1; l <= 2; ++l)
            for (int k = 1; k <= k_m; ++k) flat[(l - 1) * k_m + k - 1] = it->second[l - 1][k - 1];
          s.shares[static_cast<int>(i) + 1] = {std::move(flat)};
        }
        facets["inner"] = std::move(s);
      }
      actors.push_back(std::make_unique<ServerActor>(n, field, std::move(facets), outbox));
    }
    for (std::size_t i = 0; i < plan.outer_real.size(); ++i)
      dispatches.push_back({plan.outer_real[i], {"outer", queries.outer[i]}});
    for (std::size_t i = 0; i < plan.inner_servers.size(); ++i)
      dispatches.push_back({plan.inner_servers[i], {"inner", queries.inner[i]}});

    answers = exchange(actors, outbox, dispatches, c.threaded);
    scheme::Vec outer_answers, inner_answers;
    for (int n : plan.outer_real) outer_answers.push_back(answers.at({"outer", n}));
    for (int n : plan.inner_servers) inner_answers.push_back(answers.at({"inner", n}));
    const auto decoded = scheme::theorem3_decode(plan, outer_answers, inner_answers, c.retrieve);
    r.decoded = values(decoded);
    r.expected = values(scheme::plaintext_retrieve(messages, c.retrieve));
    decoded_symbols = 2;
    transcript["params"] = instance_params(plan.outer);
    transcript["params"]["inner"] = plan.inner ? instance_params(*plan.inner) : json(nullptr);
    transcript["stable_set"] = plan.stable_set;
    transcript["demand"] = {{"mu", c.retrieve.mu}, {"kappa", c.retrieve.kappa}};
  } else {
    const auto inst = scheme::build_instance(p, c.x, c.t, c.q);
    const auto messages = scheme::random_messages(inst.field, inst.pattern, inst.block_length, tape);
    const auto storage = scheme::encode_storage(inst, messages, scheme::storage_noise(inst, tape));
    scheme::Demand demand = c.retrieve;
    if (c.mode == Mode::Compute) {
      enforce(scheme::compute_mode_available(inst), ErrorCode::ComputeModeUnavailable,
              "compute mode needs X = 0 and rho_min = T + 1");
      demand = detail::lambda_from(c, inst, tape);
    }
    const auto queries = scheme::gen_queries(inst, demand, scheme::query_noise(inst, tape));
    for (int n = 1; n <= p.n_servers(); ++n) {
      std::map<std::string, scheme::ServerStorage> facets{{"main", storage[n - 1]}};
      actors.push_back(std::make_unique<ServerActor>(n, inst.field, std::move(facets), outbox));
      dispatches.push_back({n, {"main", queries[n - 1]}});
    }
    answers = exchange(actors, outbox, dispatches, c.threaded);
    scheme::Vec ans;
    for (int n = 1; n <= p.n_servers(); ++n) ans.push_back(answers.at({"main", n}));
    if (c.mode == Mode::Compute) {
      const auto& comp = std::get<scheme::Compute>(demand);
      r.decoded = {scheme::decode_compute(inst, ans).value()};
      r.expected = {scheme::plaintext_compute(inst.field, messages, comp).value()};
      decoded_symbols = 1;
      json lam = json::array();
      for (const auto& row : comp.lambda) lam.push_back(vec_to_json(row));
      transcript["demand"] = {{"lambda", lam}};
    } else {
      r.decoded = values(scheme::decode(inst, ans, c.retrieve));
      r.expected = values(scheme::plaintext_retrieve(messages, c.retrieve));
      decoded_symbols = inst.block_length;
      transcript["demand"] = {{"mu", c.retrieve.mu}, {"kappa", c.retrieve.kappa}};
    }
    transcript["params"] = instance_params(inst);
  }

  json servers = json::array();
  for (const auto& a : actors) {
    json qs = json::array(), as = json::array();
    for (const auto& d : dispatches)
      if (d.server == a->id()) {
        for (const auto& [m, blocks] : d.msg.query.entries)
          for (std::size_t l = 0; l < blocks.size(); ++l)
            qs.push_back({{"facet", d.msg.facet}, {"m", m}, {"l", l + 1},
                          {"values", vec_to_json(blocks[l])}});
        as.push_back({{"facet", d.msg.facet},
                      {"value", answers.at({d.msg.facet, a->id()}).value()}});
      }
    r.downloads[a->id() - 1] = static_cast<int>(as.size());
    servers.push_back({{"server", a->id()}, {"queries", qs}, {"answers", as}});
    r.observed.push_back(a->observed());
  }
  for (int d : r.downloads) r.total_download += d;
  transcript["servers"] = servers;
  transcript["decoded"] = r.decoded;
  r.correct = r.decoded == r.expected;
  r.rate = Rational(decoded_symbols, r.total_download);
  r.transcript_hash = fnv1a64(transcript.dump());
  r.transcript = std::move(transcript);
  r.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline json report_to_json(const SessionReport& r, bool with_transcript = false) {
  json j{{"mode", to_string(r.mode)},
         {"decoded", r.decoded},
         {"expected", r.expected},
         {"correct", r.correct},
         {"downloads", r.downloads},
         {"total_download", r.total_download},
         {"rate", gxstpir::to_string(r.rate)},
         {"transcript_hash", r.transcript_hash},
         {"elapsed_ms", r.elapsed_ms}};
  if (with_transcript) j["transcript"] = r.transcript;
  return j;
}

// ---------------------------------------------------------------------------
// Fixtures

struct Fixture {
  std::string name;
  model::StoragePattern pattern;
  int x = 0;
  int t = 1;
};

/// The running four-server example and Examples 1-6, two messages per set.
inline std::vector<Fixture> fixture_patterns() {
  using model::make_pattern;
  return {
      {"running_example", make_pattern(4, {{1, 2, 4}, {1, 2, 3}, {1, 4}, {3, 4}}, 2)},
      {"example_1", make_pattern(4, {{1, 2, 4}, {1, 2, 3}, {1, 3, 4}}, 2)},
      {"example_2", make_pattern(5, {{1, 3, 4}, {3, 4, 5}, {2, 3, 5}}, 2)},
      {"example_3", make_pattern(5, {{1, 3, 4}, {1, 3, 4, 5}, {2, 3, 5}}, 2)},
      {"example_4", make_pattern(5, {{1, 2, 3, 4}, {2, 3, 4, 5}}, 2)},
      {"example_5", make_pattern(5, {{1, 2, 3}, {2, 3, 4}, {1, 3, 5}, {2, 4}}, 2)},
      {"example_6", make_pattern(8, {{1, 2, 3}, {1, 3, 4}, {4, 5, 7}, {4, 6, 7}, {7, 8}}, 2)},
  };
}

inline json fixture_document(const Fixture& f) {
  json j = json_io::pattern_doc_to_json({f.pattern, f.x, f.t, std::nullopt});
  j["name"] = f.name;
  j["expected"] = json_io::capacity_to_json(capacity::capacity_report(f.pattern, f.x, f.t));
  return j;
}

/// Writes <out_dir>/<name>.json for every fixture and returns the paths.
inline std::vector<std::filesystem::path> regenerate_fixtures(
    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  enforce(!ec, ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& f : fixture_patterns()) {
    auto path = out_dir / (f.name + ".json");
    json_io::write_json_file(path, fixture_document(f));
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace gxstpir::simnet
